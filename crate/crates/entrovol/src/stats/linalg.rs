//! Small dense least-squares solver used by the regression-style tests.
//! Normal equations with Gaussian elimination; the designs here are tiny
//! (tens of columns at most), so this is plenty.

#[derive(Debug, Clone)]
pub(crate) struct LstsqFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
}

/// Invert a small symmetric positive-definite-ish matrix by Gauss-Jordan.
pub(crate) fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut aug = row.clone();
            aug.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            aug
        })
        .collect();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        for k in 0..2 * n {
            a[col][k] /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col];
            if f != 0.0 {
                for k in 0..2 * n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Ordinary least squares of y on the columns of `design` (row-major).
/// Standard errors come from s^2 (X'X)^-1 with s^2 = RSS/(n - k).
pub(crate) fn lstsq(design: &[Vec<f64>], y: &[f64]) -> Option<LstsqFit> {
    let n = design.len();
    if n == 0 || n != y.len() {
        return None;
    }
    let k = design[0].len();
    if k == 0 || n <= k {
        return None;
    }
    let mut xtx = vec![vec![0.0f64; k]; k];
    let mut xty = vec![0.0f64; k];
    for (row, &yi) in design.iter().zip(y) {
        debug_assert_eq!(row.len(), k);
        for i in 0..k {
            xty[i] += row[i] * yi;
            for j in i..k {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[i][j] = xtx[j][i];
        }
    }
    let inv = invert(&xtx)?;
    let mut coefficients = vec![0.0f64; k];
    for i in 0..k {
        for j in 0..k {
            coefficients[i] += inv[i][j] * xty[j];
        }
    }
    let mut rss = 0.0;
    for (row, &yi) in design.iter().zip(y) {
        let fitted: f64 = row.iter().zip(&coefficients).map(|(x, c)| x * c).sum();
        let e = yi - fitted;
        rss += e * e;
    }
    let sigma2 = rss / (n - k) as f64;
    let standard_errors = (0..k).map(|i| (sigma2 * inv[i][i]).max(0.0).sqrt()).collect();
    Some(LstsqFit { coefficients, standard_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_exact_line() {
        // y = 3x - 1
        let design: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 3.0 * i as f64 - 1.0).collect();
        let fit = lstsq(&design, &y).unwrap();
        assert_relative_eq!(fit.coefficients[0], -1.0, epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[1], 3.0, epsilon = 1e-10);
        assert!(fit.standard_errors.iter().all(|se| *se < 1e-9));
    }

    #[test]
    fn rejects_singular_design() {
        let design: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(lstsq(&design, &y).is_none());
    }

    #[test]
    fn inverse_round_trips() {
        let m = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]];
        let inv = invert(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += m[i][k] * inv[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(acc, expect, epsilon = 1e-10);
            }
        }
    }

}
