//! Conditional sum of squares for regression with ARIMA errors.
//!
//! Model: Y_t = beta * X_t + eta_t, with w = diff^d(eta) following
//! ARMA(p, q). Innovations come from the recursion
//!
//! ```text
//! eps_t = w_t - sum_i phi_i w_{t-i} + sum_j theta_j eps_{t-j}
//! ```
//!
//! with pre-sample w and eps taken as zero. Differencing is linear, so
//! w_t = diff^d(y)_t - beta * diff^d(x)_t and the data can be differenced
//! once up front.

use super::ArimaxError;

/// Differenced series ready for the objective.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub(crate) dy: Vec<f64>,
    pub(crate) dx: Option<Vec<f64>>,
}

impl PreparedData {
    pub fn len(&self) -> usize {
        self.dy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dy.is_empty()
    }
}

pub(crate) fn difference(xs: &[f64], d: usize) -> Vec<f64> {
    let mut out = xs.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}

/// Difference y (and x, when present) d times.
pub fn prepare_css_data(
    y: &[f64],
    x: Option<&[f64]>,
    d: usize,
) -> Result<PreparedData, ArimaxError> {
    if let Some(xs) = x {
        if xs.len() != y.len() {
            return Err(ArimaxError::LengthMismatch { y: y.len(), x: xs.len() });
        }
    }
    if y.len() <= d {
        return Err(ArimaxError::TooShort { need: d + 1, got: y.len() });
    }
    Ok(PreparedData { dy: difference(y, d), dx: x.map(|xs| difference(xs, d)) })
}

/// Innovation recursion over w = dy - beta*dx. Returns the filled `eps`
/// buffer length; non-finite propagation is the caller's concern.
pub(crate) fn innovations_into(
    data: &PreparedData,
    beta: f64,
    phi: &[f64],
    theta: &[f64],
    w: &mut Vec<f64>,
    eps: &mut Vec<f64>,
) {
    let n = data.dy.len();
    w.clear();
    w.reserve(n);
    match &data.dx {
        Some(dx) => {
            for (dy, dxv) in data.dy.iter().zip(dx) {
                w.push(dy - beta * dxv);
            }
        }
        None => w.extend_from_slice(&data.dy),
    }
    eps.clear();
    eps.reserve(n);
    for t in 0..n {
        let mut acc = w[t];
        for (i, ph) in phi.iter().enumerate() {
            if t > i {
                acc -= ph * w[t - 1 - i];
            }
        }
        for (j, th) in theta.iter().enumerate() {
            if t > j {
                acc += th * eps[t - 1 - j];
            }
        }
        eps.push(acc);
    }
}

const OBJECTIVE_CEILING: f64 = 1e300;
const PENALTY_THRESHOLD: f64 = 1.001;
const PENALTY_SCALE: f64 = 1e4;

/// Penalized conditional sum of squares. With all-zero parameters this is
/// exactly sum(w_t^2); parameter vectors whose AR or MA polynomial has a
/// root on or inside the unit circle pick up a smooth multiplicative
/// penalty, and non-finite values are capped to a large finite ceiling so
/// the optimizer always sees a total function.
pub fn css_objective(
    data: &PreparedData,
    beta: Option<f64>,
    phi: &[f64],
    theta: &[f64],
) -> f64 {
    let mut w = Vec::new();
    let mut eps = Vec::new();
    css_objective_buffered(data, beta, phi, theta, &mut w, &mut eps)
}

pub(crate) fn css_objective_buffered(
    data: &PreparedData,
    beta: Option<f64>,
    phi: &[f64],
    theta: &[f64],
    w: &mut Vec<f64>,
    eps: &mut Vec<f64>,
) -> f64 {
    let css = raw_css_buffered(data, beta, phi, theta, w, eps);
    if !css.is_finite() {
        return OBJECTIVE_CEILING;
    }
    let pen = unit_root_penalty(phi, theta);
    (css * (1.0 + PENALTY_SCALE * pen)).min(OBJECTIVE_CEILING)
}

pub(crate) fn raw_css_buffered(
    data: &PreparedData,
    beta: Option<f64>,
    phi: &[f64],
    theta: &[f64],
    w: &mut Vec<f64>,
    eps: &mut Vec<f64>,
) -> f64 {
    innovations_into(data, beta.unwrap_or(0.0), phi, theta, w, eps);
    let mut css = 0.0;
    for e in eps.iter() {
        css += e * e;
    }
    css
}

// ==================== polynomial roots ====================

#[derive(Debug, Clone, Copy)]
struct Cpx {
    re: f64,
    im: f64,
}

impl Cpx {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    fn add(self, o: Cpx) -> Cpx {
        Cpx::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: Cpx) -> Cpx {
        Cpx::new(self.re - o.re, self.im - o.im)
    }

    fn mul(self, o: Cpx) -> Cpx {
        Cpx::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    fn div(self, o: Cpx) -> Cpx {
        let d = o.re * o.re + o.im * o.im;
        Cpx::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }

    fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Moduli of the roots of 1 - c_1 z - ... - c_k z^k (Durand-Kerner).
/// Trailing near-zero coefficients are trimmed; an all-zero coefficient
/// vector has no roots.
pub(crate) fn root_moduli(coeffs: &[f64]) -> Vec<f64> {
    let mut k = coeffs.len();
    while k > 0 && coeffs[k - 1].abs() < 1e-12 {
        k -= 1;
    }
    if k == 0 {
        return vec![];
    }
    // monic form z^k + m_{k-1} z^{k-1} + ... + m_0
    let lead = -coeffs[k - 1];
    let mut monic = Vec::with_capacity(k);
    monic.push(1.0 / lead);
    for c in coeffs.iter().take(k - 1) {
        monic.push(-c / lead);
    }

    let eval = |z: Cpx| -> Cpx {
        let mut acc = Cpx::new(1.0, 0.0);
        for j in (0..k).rev() {
            acc = acc.mul(z).add(Cpx::new(monic[j], 0.0));
        }
        acc
    };

    let seed = Cpx::new(0.4, 0.9);
    let mut roots: Vec<Cpx> = Vec::with_capacity(k);
    let mut acc = Cpx::new(1.0, 0.0);
    for _ in 0..k {
        acc = acc.mul(seed);
        roots.push(acc);
    }

    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..k {
            let mut denom = Cpx::new(1.0, 0.0);
            for j in 0..k {
                if j != i {
                    denom = denom.mul(roots[i].sub(roots[j]));
                }
            }
            if denom.modulus() < 1e-300 {
                // nudge coincident estimates apart
                roots[i] = roots[i].add(Cpx::new(1e-6, 1e-6));
                continue;
            }
            let delta = eval(roots[i]).div(denom);
            roots[i] = roots[i].sub(delta);
            max_step = max_step.max(delta.modulus());
        }
        if max_step < 1e-12 {
            break;
        }
    }
    roots.iter().map(|r| r.modulus()).collect()
}

/// Smooth penalty pushing AR and MA roots outside the unit circle.
pub(crate) fn unit_root_penalty(phi: &[f64], theta: &[f64]) -> f64 {
    let mut pen = 0.0;
    for modulus in root_moduli(phi).into_iter().chain(root_moduli(theta)) {
        let gap = PENALTY_THRESHOLD - modulus;
        if gap > 0.0 {
            pen += gap * gap;
        }
    }
    pen
}

#[cfg(test)]
pub(crate) fn min_root_modulus(coeffs: &[f64]) -> f64 {
    root_moduli(coeffs).into_iter().fold(f64::INFINITY, f64::min)
}
