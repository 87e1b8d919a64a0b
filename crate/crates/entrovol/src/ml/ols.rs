//! Simple least squares on one feature.

use super::MlError;

#[derive(Debug, Clone, Copy)]
pub struct OlsModel {
    pub slope: f64,
    pub intercept: f64,
}

impl OlsModel {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Closed-form fit of y = a + b x. Errors when the feature is constant.
pub fn fit_ols(x: &[f64], y: &[f64]) -> Result<OlsModel, MlError> {
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(MlError::TooFewPoints { need: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xv, &yv) in x.iter().zip(y) {
        sxx += (xv - mx) * (xv - mx);
        sxy += (xv - mx) * (yv - my);
    }
    if sxx <= 0.0 {
        return Err(MlError::ConstantFeature);
    }
    let slope = sxy / sxx;
    Ok(OlsModel { slope, intercept: my - slope * mx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_line_is_recovered() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let m = fit_ols(&x, &y).unwrap();
        assert_relative_eq!(m.slope, 3.0, max_relative = 1e-14);
        assert_relative_eq!(m.intercept, -1.0, max_relative = 1e-12);
        assert_relative_eq!(m.predict(10.0), 29.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_feature_is_rejected() {
        assert!(matches!(
            fit_ols(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(MlError::ConstantFeature)
        ));
    }

    proptest! {
        // normal equations: residuals are orthogonal to the feature and sum to zero
        #[test]
        fn residual_orthogonality(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..30)
        ) {
            let x: Vec<f64> = pts.iter().map(|(a, _)| *a).collect();
            let y: Vec<f64> = pts.iter().map(|(_, b)| *b).collect();
            prop_assume!(x.iter().any(|&v| (v - x[0]).abs() > 1e-6));
            let m = fit_ols(&x, &y).unwrap();
            let resid: Vec<f64> = x.iter().zip(&y).map(|(&xv, &yv)| yv - m.predict(xv)).collect();
            let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max) * x.len() as f64;
            let sum: f64 = resid.iter().sum();
            let dot: f64 = resid.iter().zip(&x).map(|(r, xv)| r * xv).sum();
            prop_assert!(sum.abs() <= 1e-8 * scale);
            prop_assert!(dot.abs() <= 1e-6 * scale * x.iter().map(|v| v.abs()).fold(1.0, f64::max));
        }
    }
}
