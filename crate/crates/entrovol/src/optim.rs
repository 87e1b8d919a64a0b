//! Derivative-free simplex minimization (Nelder-Mead).

/// Standard coefficients: reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5.
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    /// Initial simplex offset added per coordinate.
    pub init_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 20_000, f_tol: 1e-12, x_tol: 1e-9, init_step: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0`. `f` must return finite values (map
/// infeasible points to a large finite penalty).
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    if dim == 0 {
        let fx = eval(x0, &mut evals);
        return NelderMeadResult { x: vec![], fx, iterations: 0, evals, converged: true };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        let step = if v[i].abs() > 1e-8 { opts.init_step * v[i].abs() } else { opts.init_step };
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;

        // order simplex best .. worst (stable on ties)
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let f_best = values[0];
        let f_worst = values[dim];
        let f_spread = f_worst - f_best;
        let mut x_spread = 0.0f64;
        for v in &simplex[1..] {
            for (a, b) in v.iter().zip(&simplex[0]) {
                x_spread = x_spread.max((a - b).abs());
            }
        }
        if f_spread <= opts.f_tol * (f_best.abs() + opts.f_tol) && x_spread <= opts.x_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0f64; dim];
        for v in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in &mut centroid {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[dim])
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if f_reflect < values[0] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + GAMMA * ALPHA * (c - w))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            if f_expand < f_reflect {
                simplex[dim] = expand;
                values[dim] = f_expand;
            } else {
                simplex[dim] = reflect;
                values[dim] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[dim - 1] {
            simplex[dim] = reflect;
            values[dim] = f_reflect;
            continue;
        }

        // contraction, outside or inside of the worst vertex
        let (contract, f_contract) = if f_reflect < values[dim] {
            let c: Vec<f64> = centroid
                .iter()
                .zip(&reflect)
                .map(|(c, r)| c + RHO * (r - c))
                .collect();
            let fc = eval(&c, &mut evals);
            (c, fc)
        } else {
            let c: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + RHO * (w - c))
                .collect();
            let fc = eval(&c, &mut evals);
            (c, fc)
        };
        if f_contract < values[dim].min(f_reflect) {
            simplex[dim] = contract;
            values[dim] = f_contract;
            continue;
        }

        // shrink toward the best vertex
        let best = simplex[0].clone();
        for i in 1..=dim {
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + SIGMA * (*x - b);
            }
            values[i] = eval(&simplex[i].clone(), &mut evals);
        }
    }

    let mut best_idx = 0;
    for i in 1..=dim {
        if values[i] < values[best_idx] {
            best_idx = i;
        }
    }
    NelderMeadResult {
        x: simplex[best_idx].clone(),
        fx: values[best_idx],
        iterations,
        evals,
        converged,
    }
}
