use num_complex::Complex64;

use super::{CMatrix, LinalgError};

const MAX_SWEEPS: usize = 80;

/// Singular values in descending order, by one-sided (Hestenes) Jacobi.
///
/// Column-orthogonalising rotations keep small singular values accurate to
/// roughly machine precision relative to the largest one, which is what a
/// numerical kernel-dimension count needs.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    // Work with the taller orientation so there are at most min(m, n) columns.
    let work = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.adjoint()
    };
    let n = work.cols();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| work.column(j)).collect();
    // Columns below ε‖A‖_F are rounding noise; rotating them never settles.
    let negligible = (f64::EPSILON * work.frobenius_norm()).powi(2);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let g = gamma.norm();
                if alpha <= negligible
                    || beta <= negligible
                    || g <= f64::EPSILON * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (head, tail) = cols.split_at_mut(q);
                for (u, v) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let x = *u;
                    let y = *v * phase.conj();
                    *u = x * cs - y * sn;
                    *v = x * sn + y * cs;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            iterations: MAX_SWEEPS,
        });
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Number of singular values at or below `threshold`, padded by the
/// column deficit for wide matrices.
pub fn null_space_dimension(a: &CMatrix, threshold: f64) -> Result<usize, LinalgError> {
    let sv = singular_values(a)?;
    let small = sv.iter().filter(|&&s| s <= threshold).count();
    Ok(small + a.cols().saturating_sub(a.rows()))
}
