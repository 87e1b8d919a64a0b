//! k-nearest-neighbor regression on one feature.

use super::MlError;

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

pub fn fit_knn(x: &[f64], y: &[f64], k: usize) -> Result<KnnModel, MlError> {
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.is_empty() {
        return Err(MlError::Empty);
    }
    if k == 0 || k > x.len() {
        return Err(MlError::InvalidParameter(format!(
            "k = {k} with {} training points",
            x.len()
        )));
    }
    Ok(KnnModel { k, x: x.to_vec(), y: y.to_vec() })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Mean target over the k nearest training points. Ties in distance
    /// break toward the earlier training index, so predictions are
    /// deterministic.
    pub fn predict(&self, q: f64) -> f64 {
        let mut by_dist: Vec<(f64, usize)> =
            self.x.iter().enumerate().map(|(i, &v)| ((v - q).abs(), i)).collect();
        let kth = self.k - 1;
        by_dist.select_nth_unstable_by(kth, |a, b| {
            a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1))
        });
        let sum: f64 = by_dist[..self.k].iter().map(|&(_, i)| self.y[i]).sum();
        sum / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn averages_the_nearest_targets() {
        let x = [0.0, 1.0, 2.0, 3.0, 10.0];
        let y = [4.0, 5.0, 6.0, 7.0, 100.0];
        let m = fit_knn(&x, &y, 2).unwrap();
        // query 0.9: nearest are x=1 (0.1) and x=0 (0.9)
        assert_relative_eq!(m.predict(0.9), 4.5, max_relative = 1e-15);
        // far query: the outlier plus its closest companion
        assert_relative_eq!(m.predict(9.0), (100.0 + 7.0) / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn k_equal_n_is_the_global_mean() {
        let x = [1.0, 2.0, 3.0];
        let y = [10.0, 20.0, 60.0];
        let m = fit_knn(&x, &y, 3).unwrap();
        assert_relative_eq!(m.predict(-5.0), 30.0, max_relative = 1e-15);
        assert_relative_eq!(m.predict(50.0), 30.0, max_relative = 1e-15);
    }

    #[test]
    fn distance_ties_break_toward_earlier_index() {
        // query 1.5 is equidistant from both points
        let m = fit_knn(&[1.0, 2.0], &[-3.0, 9.0], 1).unwrap();
        assert_relative_eq!(m.predict(1.5), -3.0, max_relative = 1e-15);
        // duplicated feature values: earliest duplicates win
        let m = fit_knn(&[5.0, 5.0, 5.0, 5.0], &[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_relative_eq!(m.predict(5.0), 1.5, max_relative = 1e-15);
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(fit_knn(&[1.0], &[1.0], 0), Err(MlError::InvalidParameter(_))));
        assert!(matches!(fit_knn(&[1.0], &[1.0], 2), Err(MlError::InvalidParameter(_))));
        assert!(matches!(fit_knn(&[], &[], 1), Err(MlError::Empty)));
    }
}
