//! Augmented Dickey-Fuller unit-root test with constant and linear trend.
//!
//! Regression: dx_t = alpha + beta*t + gamma*x_{t-1} + sum_i delta_i dx_{t-i} + e_t
//! with k = floor((n-1)^(1/3)) lagged differences by default. The statistic
//! is gamma_hat / se(gamma_hat); its p-value comes from bilinear
//! interpolation in the tabulated finite-sample quantiles of the trend-case
//! Dickey-Fuller distribution, clamped to [0.01, 0.99].

use std::collections::BTreeMap;

use super::{linalg, StatsError, TestResult};

// Finite-sample quantiles of the trend-case distribution; rows are sample
// sizes 25, 50, 100, 250, 500 and large-sample, columns are the cumulative
// probabilities in DF_P.
const DF_T: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 500.0, 100_000.0];
const DF_P: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];
const DF_CRIT: [[f64; 8]; 6] = [
    [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
    [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
    [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
    [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
    [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
    [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
];

/// Linear interpolation with clamped ends (xs strictly increasing).
fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let mut i = 0;
    while xs[i + 1] < x {
        i += 1;
    }
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// Tabulated critical value for a given sample size and cumulative
/// probability (one of the tabulated columns), interpolated over sample size.
pub fn dickey_fuller_critical_value(n: usize, p: f64) -> Option<f64> {
    let col = DF_P.iter().position(|&q| (q - p).abs() < 1e-12)?;
    let column: Vec<f64> = DF_CRIT.iter().map(|row| row[col]).collect();
    Some(interp_clamped(&DF_T, &column, n as f64))
}

fn p_value_from_table(statistic: f64, n: usize) -> (f64, bool) {
    let nf = n as f64;
    let mut crit = [0.0f64; 8];
    for (j, c) in crit.iter_mut().enumerate() {
        let column: Vec<f64> = DF_CRIT.iter().map(|row| row[j]).collect();
        *c = interp_clamped(&DF_T, &column, nf);
    }
    if statistic <= crit[0] {
        return (DF_P[0], true);
    }
    if statistic >= crit[7] {
        return (DF_P[7], true);
    }
    (interp_clamped(&crit, &DF_P, statistic), false)
}

/// ADF test with the default lag order k = floor((n-1)^(1/3)).
pub fn adf_test(x: &[f64]) -> Result<TestResult, StatsError> {
    let n = x.len();
    if n < 8 {
        return Err(StatsError::TooShort { need: 8, got: n });
    }
    let k = ((n as f64 - 1.0).powf(1.0 / 3.0)).floor() as usize;
    adf_test_with_lags(x, k)
}

/// ADF test with an explicit number of lagged differences.
pub fn adf_test_with_lags(x: &[f64], k: usize) -> Result<TestResult, StatsError> {
    let n = x.len();
    let regressors = k + 3; // constant, trend, lagged level, k lagged diffs
    if n < regressors + k + 3 {
        return Err(StatsError::TooShort { need: regressors + k + 3, got: n });
    }

    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();

    // rows t = k+1 ..= n-1 in the index of x
    let mut design = Vec::with_capacity(n - 1 - k);
    let mut response = Vec::with_capacity(n - 1 - k);
    for t in (k + 1)..n {
        let mut row = Vec::with_capacity(regressors);
        row.push(1.0);
        row.push(t as f64);
        row.push(x[t - 1]);
        for i in 1..=k {
            row.push(dx[t - 1 - i]);
        }
        design.push(row);
        response.push(dx[t - 1]);
    }

    let fit = linalg::lstsq(&design, &response).ok_or(StatsError::ConstantInput)?;
    let gamma = fit.coefficients[2];
    let se = fit.standard_errors[2];
    if !(se.is_finite() && se > 0.0) {
        return Err(StatsError::ConstantInput);
    }
    let statistic = gamma / se;
    let (p_value, clamped) = p_value_from_table(statistic, n - 1);

    let mut detail = BTreeMap::new();
    detail.insert("gamma_hat".to_string(), gamma);
    detail.insert("se_gamma".to_string(), se);
    detail.insert("n_effective".to_string(), response.len() as f64);
    Ok(TestResult {
        name: "adf".to_string(),
        statistic,
        p_value,
        df_or_lags: k,
        clamped,
        detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_walk(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        let mut x = vec![0.0f64];
        for _ in 1..n {
            let prev = *x.last().unwrap();
            x.push(prev + rng.gen_range(-1.0f64..1.0));
        }
        x
    }

    fn white_noise(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0f64..1.0)).collect()
    }

    #[test]
    fn table_lookup_is_exact_at_knots() {
        assert_relative_eq!(dickey_fuller_critical_value(500, 0.05).unwrap(), -3.42);
        assert_relative_eq!(dickey_fuller_critical_value(25, 0.01).unwrap(), -4.38);
        // beyond the last row the table saturates
        assert_relative_eq!(dickey_fuller_critical_value(10_000_000, 0.05).unwrap(), -3.41);
    }

    #[test]
    fn p_value_hits_tabulated_probabilities_at_critical_values() {
        let (p, clamped) = p_value_from_table(-3.42, 500);
        assert_relative_eq!(p, 0.05, epsilon = 1e-12);
        assert!(!clamped);
        let (p, clamped) = p_value_from_table(-10.0, 500);
        assert_relative_eq!(p, 0.01);
        assert!(clamped);
        let (p, clamped) = p_value_from_table(3.0, 500);
        assert_relative_eq!(p, 0.99);
        assert!(clamped);
    }

    #[test]
    fn default_lag_order_follows_cube_root_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_walk(&mut rng, 1000);
        let res = adf_test(&x).unwrap();
        assert_eq!(res.df_or_lags, 9); // floor(999^(1/3))
        let x = random_walk(&mut rng, 9389);
        let res = adf_test(&x).unwrap();
        assert_eq!(res.df_or_lags, 21); // floor(9388^(1/3))
    }

    #[test]
    fn keeps_size_on_random_walks_and_power_on_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let reps = 200;
        let mut rejected_walk = 0;
        let mut rejected_noise = 0;
        for _ in 0..reps {
            let walk = random_walk(&mut rng, 2000);
            if adf_test(&walk).unwrap().p_value <= 0.05 {
                rejected_walk += 1;
            }
            let noise = white_noise(&mut rng, 2000);
            if adf_test(&noise).unwrap().p_value <= 0.05 {
                rejected_noise += 1;
            }
        }
        // unit root: should fail to reject in at least 90% of runs
        assert!(rejected_walk <= reps / 10, "rejected {rejected_walk}/{reps} random walks");
        // stationary noise: should reject in at least 90% of runs
        assert!(rejected_noise >= reps * 9 / 10, "rejected {rejected_noise}/{reps} noise series");
    }

    #[test]
    fn trend_stationary_series_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..1500).map(|t| 0.01 * t as f64 + rng.gen_range(-1.0f64..1.0)).collect();
        let res = adf_test(&x).unwrap();
        assert!(res.p_value <= 0.01 + 1e-12, "p = {}", res.p_value);
        assert!(res.clamped || res.p_value <= 0.05);
    }

    #[test]
    fn constant_series_is_rejected_as_input() {
        assert!(matches!(adf_test(&[1.0; 100]), Err(StatsError::ConstantInput)));
    }

    #[test]
    fn too_short_errors() {
        assert!(matches!(adf_test(&[1.0, 2.0, 3.0]), Err(StatsError::TooShort { .. })));
    }
}
