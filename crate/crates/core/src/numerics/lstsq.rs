use num_complex::Complex64;

use super::{CMatrix, LinalgError, PIVOT_TOL};

/// Minimises `‖A x − b‖₂` by Householder QR.
///
/// Requires `rows ≥ cols`; fails with [`LinalgError::Singular`] when a
/// diagonal entry of `R` falls below `PIVOT_TOL · max|A|`.
pub fn least_squares(a: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m || m < n {
        return Err(LinalgError::DimensionMismatch {
            op: "least_squares",
            left: (m, n),
            right: (b.len(), 1),
        });
    }
    let scale = a.max_abs();
    let threshold = PIVOT_TOL * if scale > 0.0 { scale } else { 1.0 };
    let mut r: Vec<Complex64> = a.as_slice().to_vec();
    let mut y = b.to_vec();

    for k in 0..n {
        let norm = (k..m).map(|i| r[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if norm <= threshold {
            return Err(LinalgError::Singular {
                step: k,
                pivot: norm,
                threshold,
            });
        }
        let x0 = r[k * n + k];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        let mut v: Vec<Complex64> = (k..m).map(|i| r[i * n + k]).collect();
        v[0] -= alpha;
        let beta = 2.0 / v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        for j in k..n {
            let dot: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vi)| vi.conj() * r[(k + t) * n + j])
                .sum();
            let f = dot * beta;
            for (t, vi) in v.iter().enumerate() {
                r[(k + t) * n + j] -= vi * f;
            }
        }
        let dot: Complex64 = v
            .iter()
            .enumerate()
            .map(|(t, vi)| vi.conj() * y[k + t])
            .sum();
        let f = dot * beta;
        for (t, vi) in v.iter().enumerate() {
            y[k + t] -= vi * f;
        }
    }

    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        let mut acc = y[k];
        for j in k + 1..n {
            acc -= r[k * n + j] * x[j];
        }
        x[k] = acc / r[k * n + k];
    }
    Ok(x)
}
