use num_complex::Complex64;

use super::{CMatrix, LinalgError};

/// Pivots below this fraction of the largest entry of `A` are treated as
/// exact singularity.
pub const PIVOT_TOL: f64 = 1e-13;

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if b.rows() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "solve",
            left: (a.rows(), a.cols()),
            right: (b.rows(), b.cols()),
        });
    }
    let n = a.rows();
    let m = b.cols();
    let scale = a.max_abs();
    let threshold = PIVOT_TOL * if scale > 0.0 { scale } else { 1.0 };

    let mut lu: Vec<Complex64> = a.as_slice().to_vec();
    let mut x: Vec<Complex64> = b.as_slice().to_vec();

    for k in 0..n {
        let (p, pivot_abs) =
            (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pivot_abs <= threshold {
            return Err(LinalgError::Singular {
                step: k,
                pivot: pivot_abs,
                threshold,
            });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            for j in 0..m {
                x.swap(k * m + j, p * m + j);
            }
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let factor = lu[i * n + k] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            lu[i * n + k] = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                let t = lu[k * n + j];
                lu[i * n + j] -= factor * t;
            }
            for j in 0..m {
                let t = x[k * m + j];
                x[i * m + j] -= factor * t;
            }
        }
    }

    for k in (0..n).rev() {
        let pivot = lu[k * n + k];
        for j in 0..m {
            let mut acc = x[k * m + j];
            for l in k + 1..n {
                acc -= lu[k * n + l] * x[l * m + j];
            }
            x[k * m + j] = acc / pivot;
        }
    }

    CMatrix::new(n, m, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::mat_mul;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_system() {
        let b =
            CMatrix::from_rows(&[[c(1.0), Complex64::new(0.0, 2.0)], [c(-3.0), c(4.0)]]).unwrap();
        assert_eq!(solve(&CMatrix::identity(2), &b).unwrap(), b);
    }

    #[test]
    fn scalar_system() {
        let two = CMatrix::identity(3).scale(c(2.0));
        let x = solve(&two, &CMatrix::identity(3)).unwrap();
        assert!(x.max_abs_diff(&CMatrix::identity(3).scale(c(0.5))).unwrap() < 1e-16);
    }

    #[test]
    fn needs_pivoting() {
        let a = CMatrix::from_rows(&[[c(0.0), c(1.0)], [c(1.0), c(0.0)]]).unwrap();
        let b = CMatrix::from_rows(&[[c(3.0)], [c(5.0)]]).unwrap();
        let x = solve(&a, &b).unwrap();
        assert_eq!(x[(0, 0)], c(5.0));
        assert_eq!(x[(1, 0)], c(3.0));
    }

    #[test]
    fn singular_reports_pivot() {
        let a = CMatrix::from_rows(&[[c(1.0), c(2.0)], [c(2.0), c(4.0)]]).unwrap();
        match solve(&a, &CMatrix::identity(2)) {
            Err(LinalgError::Singular { step, pivot, .. }) => {
                assert_eq!(step, 1);
                assert!(pivot < 1e-13);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn residual_is_small() {
        let a = CMatrix::from_rows(&[
            [Complex64::new(2.0, 1.0), c(-1.0), Complex64::new(0.0, 0.5)],
            [c(0.3), Complex64::new(1.0, -2.0), c(0.7)],
            [Complex64::new(-0.2, 0.1), c(0.4), c(3.0)],
        ])
        .unwrap();
        let b = CMatrix::identity(3);
        let x = solve(&a, &b).unwrap();
        let r = mat_mul(&a, &x).unwrap().max_abs_diff(&b).unwrap();
        assert!(r <= 1e-10 * b.max_abs());
    }
}
