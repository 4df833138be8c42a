//! Small dense helpers shared by the kernel, sampler and baseline code.

use faer::Mat;

/// Log-determinant of a symmetric positive semidefinite matrix.
///
/// `singular` is set when the Cholesky factorization meets a pivot at or below
/// the rounding floor; `value` is then `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub value: f64,
    pub singular: bool,
}

impl LogDet {
    pub fn singular() -> Self {
        LogDet {
            value: f64::NEG_INFINITY,
            singular: true,
        }
    }

    /// `exp(value)`, zero for singular minors.
    pub fn det(&self) -> f64 {
        if self.singular {
            0.0
        } else {
            self.value.exp()
        }
    }
}

/// Lower Cholesky factor of `a + jitter * I`, or `None` when some pivot falls
/// below `n * eps * max(diag)`.
pub fn cholesky(a: &Mat<f64>, jitter: f64) -> Option<Mat<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0_f64, f64::max);
    let floor = (n.max(1) as f64) * f64::EPSILON * max_diag.max(f64::MIN_POSITIVE);
    let mut l = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

pub fn log_det_psd(a: &Mat<f64>) -> LogDet {
    if a.nrows() == 0 {
        return LogDet {
            value: 0.0,
            singular: false,
        };
    }
    match cholesky(a, 0.0) {
        Some(l) => LogDet {
            value: (0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum(),
            singular: false,
        },
        None => LogDet::singular(),
    }
}

/// Solves `L X = B` in place for lower-triangular `L`.
pub fn forward_substitute(l: &Mat<f64>, b: &mut Mat<f64>) {
    let n = l.nrows();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = b[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
    }
}

pub fn submatrix(a: &Mat<f64>, rows: &[usize], cols: &[usize]) -> Mat<f64> {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

pub fn max_asymmetry(a: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn frobenius(a: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.5 });
        let l = cholesky(&a, 0.0).unwrap();
        let r = &l * l.transpose();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[(i, j)] - a[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_detected() {
        let a = Mat::from_fn(2, 2, |_, _| 1.0);
        assert!(log_det_psd(&a).singular);
        assert!(cholesky(&a, 1e-10).is_some());
    }

    #[test]
    fn log_det_of_two_by_two() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.5 });
        let ld = log_det_psd(&a);
        assert!((ld.value - 0.75_f64.ln()).abs() < 1e-14);
    }
}
