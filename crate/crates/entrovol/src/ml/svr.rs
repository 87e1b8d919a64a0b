//! Epsilon-SVR with an RBF kernel, trained by sequential minimal
//! optimization in the 2n-variable box-constrained dual:
//!
//! ```text
//! min 0.5 a'Qa + p'a,  0 <= a_t <= C,  sum_t s_t a_t = 0
//! ```
//!
//! where t < n carries sign +1 and p_t = eps - y_t, and t >= n carries
//! sign -1 and p_t = eps + y_{t-n}. Q(s, t) = sign_s sign_t K(x_s, x_t).
//! Pair selection is the second-order maximal-violating-pair rule; the
//! stopping criterion is m - M < tol over the feasible-direction sets.
//! Features and targets are standardized internally, so `epsilon` is in
//! standardized target units.

use std::collections::{HashMap, VecDeque};

use super::{MlError, Scaler};

const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Stopping tolerance on the duality-gap surrogate m - M.
    pub tol: f64,
    /// Pair-update budget; 0 means max(100 * n, 50_000).
    pub max_iter: usize,
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64, gamma: f64) -> Result<Self, MlError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(MlError::InvalidParameter(format!("C = {c}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(MlError::InvalidParameter(format!("epsilon = {epsilon}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(MlError::InvalidParameter(format!("gamma = {gamma}")));
        }
        Ok(Self { c, epsilon, gamma, tol: 1e-3, max_iter: 0 })
    }
}

impl Default for SvrParams {
    fn default() -> Self {
        Self { c: 1.0, epsilon: 0.1, gamma: 1.0, tol: 1e-3, max_iter: 0 }
    }
}

// Kernel rows are materialized on demand and recycled FIFO, so memory
// stays bounded and the access pattern (hence the fit) is deterministic.
struct RowCache {
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    cap: usize,
}

impl RowCache {
    fn new(n: usize) -> Self {
        let cap = (CACHE_BYTES / (8 * n.max(1))).clamp(2, n.max(2));
        Self { rows: HashMap::new(), order: VecDeque::new(), cap }
    }

    fn get(&mut self, u: usize, sx: &[f64], gamma: f64) -> &[f64] {
        if !self.rows.contains_key(&u) {
            let base = sx[u];
            let row: Vec<f64> =
                sx.iter().map(|&v| (-gamma * (v - base) * (v - base)).exp()).collect();
            if self.order.len() == self.cap {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            self.order.push_back(u);
            self.rows.insert(u, row);
        }
        self.rows.get(&u).expect("row just ensured")
    }
}

#[derive(Debug, Clone)]
pub struct SvrModel {
    params: SvrParams,
    x_scaler: Scaler,
    y_scaler: Scaler,
    /// Standardized training features.
    sx: Vec<f64>,
    /// Standardized training targets (kept for the KKT audit).
    sy: Vec<f64>,
    /// alpha - alpha* per training point, standardized target units.
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_star: Vec<f64>,
    b: f64,
    iterations: usize,
    converged: bool,
}

pub fn fit_svr(x: &[f64], y: &[f64], params: SvrParams) -> Result<SvrModel, MlError> {
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(MlError::TooFewPoints { need: 2, got: x.len() });
    }
    let x_scaler = Scaler::fit(x)?;
    let y_scaler = Scaler::fit_or_unit(y);
    let sx = x_scaler.transform_all(x);
    let sy = y_scaler.transform_all(y);

    let n = sx.len();
    let l = 2 * n;
    let c = params.c;
    let eps = params.epsilon;
    let gamma = params.gamma;
    let tol = params.tol;
    let max_iter =
        if params.max_iter > 0 { params.max_iter } else { (100 * n).max(50_000) };
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };

    let mut alpha = vec![0.0f64; l];
    // gradient of the dual objective; alpha = 0 makes it the linear term
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { eps - sy[t] } else { eps + sy[t - n] })
        .collect();
    let mut cache = RowCache::new(n);

    let mut iterations = 0usize;
    let mut converged = false;
    let mut last_gmax = f64::NEG_INFINITY;
    let mut last_gmax2 = f64::NEG_INFINITY;

    loop {
        // first-order pass: i maximizes -sign_t grad_t over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel: Option<usize> = None;
        for t in 0..l {
            let in_up = if t < n { alpha[t] < c } else { alpha[t] > 0.0 };
            if in_up {
                let v = -sign(t) * grad[t];
                if v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        let ui = i % n;

        // second-order pass: j gives the largest objective decrease
        let mut gmax2 = f64::NEG_INFINITY;
        let mut obj_min = f64::INFINITY;
        let mut j_sel: Option<usize> = None;
        {
            let row_i = cache.get(ui, &sx, gamma);
            for t in 0..l {
                let in_low = if t < n { alpha[t] > 0.0 } else { alpha[t] < c };
                if !in_low {
                    continue;
                }
                let neg_sg = sign(t) * grad[t]; // = -(-sign grad)
                if neg_sg >= gmax2 {
                    gmax2 = neg_sg;
                }
                let grad_diff = gmax + neg_sg;
                if grad_diff > 0.0 {
                    let quad = (2.0 - 2.0 * row_i[t % n]).max(TAU);
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        last_gmax = gmax;
        last_gmax2 = gmax2;
        if gmax + gmax2 < tol || j_sel.is_none() {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        let j = j_sel.expect("checked above");
        let uj = j % n;

        let kij = cache.get(ui, &sx, gamma)[uj];
        let quad = (2.0 - 2.0 * kij).max(TAU);
        let old_i = alpha[i];
        let old_j = alpha[j];
        if sign(i) != sign(j) {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let delta_i = alpha[i] - old_i;
        let delta_j = alpha[j] - old_j;

        {
            let row_i = cache.get(ui, &sx, gamma);
            let si = sign(i);
            for t in 0..l {
                grad[t] += sign(t) * si * row_i[t % n] * delta_i;
            }
        }
        {
            let row_j = cache.get(uj, &sx, gamma);
            let sj = sign(j);
            for t in 0..l {
                grad[t] += sign(t) * sj * row_j[t % n] * delta_j;
            }
        }
        iterations += 1;
    }

    // bias: midpoint of the final feasible-direction bounds; at a clean
    // optimum every free variable has -sign grad equal to it
    let m_val = last_gmax;
    let big_m_val = -last_gmax2;
    let b = if m_val.is_finite() && big_m_val.is_finite() {
        (m_val + big_m_val) / 2.0
    } else {
        // every variable at a bound on one side: average the free set, else 0
        let mut sum = 0.0;
        let mut cnt = 0usize;
        for t in 0..l {
            if alpha[t] > 0.0 && alpha[t] < c {
                sum += -sign(t) * grad[t];
                cnt += 1;
            }
        }
        if cnt > 0 {
            sum / cnt as f64
        } else {
            0.0
        }
    };

    // exact complementarity: only the net weight matters for predictions
    let mut a_plus = alpha[..n].to_vec();
    let mut a_minus = alpha[n..].to_vec();
    for v in 0..n {
        let common = a_plus[v].min(a_minus[v]);
        a_plus[v] -= common;
        a_minus[v] -= common;
    }
    let beta: Vec<f64> = (0..n).map(|v| a_plus[v] - a_minus[v]).collect();

    Ok(SvrModel {
        params,
        x_scaler,
        y_scaler,
        sx,
        sy,
        beta,
        alpha: a_plus,
        alpha_star: a_minus,
        b,
        iterations,
        converged,
    })
}

impl SvrModel {
    fn decision_std(&self, xs: f64) -> f64 {
        let gamma = self.params.gamma;
        let mut acc = self.b;
        for (&sv, &w) in self.sx.iter().zip(&self.beta) {
            if w != 0.0 {
                acc += w * (-gamma * (xs - sv) * (xs - sv)).exp();
            }
        }
        acc
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.y_scaler.inverse(self.decision_std(self.x_scaler.transform(x)))
    }

    pub fn params(&self) -> &SvrParams {
        &self.params
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    /// (alpha, alpha*) after the complementarity shrink.
    pub fn alphas(&self) -> (&[f64], &[f64]) {
        (&self.alpha, &self.alpha_star)
    }

    pub fn support_vector_count(&self) -> usize {
        self.beta.iter().filter(|&&w| w != 0.0).count()
    }

    /// Largest KKT violation of the trained model against its own
    /// training data, in standardized target units. Interior alphas must
    /// sit exactly on the epsilon tube; bounded ones on the correct side.
    pub fn kkt_max_violation(&self) -> f64 {
        let c = self.params.c;
        let eps = self.params.epsilon;
        let mut worst = 0.0f64;
        for v in 0..self.sx.len() {
            let f = self.decision_std(self.sx[v]);
            let under = self.sy[v] - f; // positive when the fit is low
            let a = self.alpha[v];
            let a_star = self.alpha_star[v];
            // plus side: constraint y - f <= eps, multiplier a
            if a <= 0.0 {
                worst = worst.max(under - eps);
            } else if a < c {
                worst = worst.max((under - eps).abs());
            } else {
                worst = worst.max(eps - under);
            }
            // star side: constraint f - y <= eps, multiplier a*
            if a_star <= 0.0 {
                worst = worst.max(-under - eps);
            } else if a_star < c {
                worst = worst.max((-under - eps).abs());
            } else {
                worst = worst.max(eps + under);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_target_predicts_the_constant() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [7.5; 5];
        let m = fit_svr(&x, &y, SvrParams::default()).unwrap();
        assert_eq!(m.iterations(), 0);
        assert!(m.converged());
        for q in [0.0, 2.5, 9.0] {
            assert_relative_eq!(m.predict(q), 7.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn wide_tube_swallows_everything() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 1.2, 0.8, 1.1];
        let params = SvrParams { epsilon: 5.0, ..SvrParams::default() };
        let m = fit_svr(&x, &y, params).unwrap();
        assert_eq!(m.support_vector_count(), 0);
        // with no support vectors the prediction is flat at the midpoint
        // of the optimal bias interval, i.e. the target midrange
        assert_relative_eq!(m.predict(1.5), 1.0, max_relative = 1e-12);
        assert_relative_eq!(m.predict(-4.0), m.predict(9.0), max_relative = 1e-12);
    }

    #[test]
    fn fits_a_line_tightly_inside_the_sample() {
        let x: Vec<f64> = (0..=40).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let params = SvrParams::new(100.0, 0.01, 0.5).unwrap();
        let m = fit_svr(&x, &y, params).unwrap();
        assert!(m.converged());
        for q in [0.5, 1.0, 2.0, 3.0, 3.5] {
            assert!(
                (m.predict(q) - (2.0 * q + 1.0)).abs() < 0.05,
                "q={q}: {} vs {}",
                m.predict(q),
                2.0 * q + 1.0
            );
        }
    }

    #[test]
    fn kkt_conditions_hold_at_the_stopping_tolerance() {
        let x: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin() + 0.05 * (7.0 * v).cos()).collect();
        let m = fit_svr(&x, &y, SvrParams::default()).unwrap();
        assert!(m.converged());
        assert!(m.kkt_max_violation() <= 1e-3, "violation {}", m.kkt_max_violation());

        let (a, a_star) = m.alphas();
        let c = m.params().c;
        let mut net = 0.0;
        for v in 0..a.len() {
            assert!((0.0..=c).contains(&a[v]));
            assert!((0.0..=c).contains(&a_star[v]));
            // exact complementarity after the shrink pass
            assert_eq!(a[v] * a_star[v], 0.0);
            net += a[v] - a_star[v];
        }
        // the equality constraint survives every clipped pair update
        assert!(net.abs() <= 1e-9, "net {net}");
    }

    #[test]
    fn refitting_is_bitwise_deterministic() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.73).sin() * 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v - v).collect();
        let a = fit_svr(&x, &y, SvrParams::default()).unwrap();
        let b = fit_svr(&x, &y, SvrParams::default()).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.bias(), b.bias());
        assert_eq!(a.iterations(), b.iterations());
    }

    #[test]
    fn iteration_budget_is_respected() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 0.9).sin()).collect();
        let params = SvrParams { max_iter: 1, c: 1e3, ..SvrParams::default() };
        let m = fit_svr(&x, &y, params).unwrap();
        assert!(!m.converged());
        assert_eq!(m.iterations(), 1);
        assert!(m.predict(3.0).is_finite());
    }

    #[test]
    fn parameter_validation() {
        assert!(SvrParams::new(0.0, 0.1, 1.0).is_err());
        assert!(SvrParams::new(1.0, -0.1, 1.0).is_err());
        assert!(SvrParams::new(1.0, 0.1, 0.0).is_err());
        assert!(matches!(
            fit_svr(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], SvrParams::default()),
            Err(MlError::ConstantFeature)
        ));
    }
}
