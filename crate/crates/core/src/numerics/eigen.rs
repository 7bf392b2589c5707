//! Eigenvalues of small dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the explicit
//! single-shift QR iteration with Wilkinson shifts, working only on the
//! active unreduced block. Only eigenvalues are produced; no Schur vectors
//! are accumulated.

use num_complex::Complex64;

use super::{CMatrix, LinalgError};

/// Matrices larger than this are out of scope for the dense kernel.
pub const MAX_EIGEN_DIM: usize = 64;

const ITERATIONS_PER_EIGENVALUE: usize = 60;

/// All eigenvalues of `a`, with multiplicity, in the order they deflate.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > MAX_EIGEN_DIM {
        return Err(LinalgError::TooLarge {
            dim: n,
            max: MAX_EIGEN_DIM,
        });
    }
    let mut h = Hess {
        n,
        data: a.as_slice().to_vec(),
    };
    h.reduce();
    h.qr_eigenvalues()
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &CMatrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(a)?.iter().fold(0.0, |m, z| m.max(z.norm())))
}

struct Hess {
    n: usize,
    data: Vec<Complex64>,
}

impl Hess {
    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.n + j] = z;
    }

    fn reduce(&mut self) {
        let n = self.n;
        if n < 3 {
            return;
        }
        let zero = Complex64::new(0.0, 0.0);
        for k in 0..n - 2 {
            let norm = (k + 1..n)
                .map(|i| self.at(i, k).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                continue;
            }
            let x0 = self.at(k + 1, k);
            let phase = if x0.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * norm;
            let mut v: Vec<Complex64> = (k + 1..n).map(|i| self.at(i, k)).collect();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            let beta = 2.0 / vnorm2;

            // H A, columns k..n.
            for j in k..n {
                let mut dot = zero;
                for (idx, vi) in v.iter().enumerate() {
                    dot += vi.conj() * self.at(k + 1 + idx, j);
                }
                let f = dot * beta;
                for (idx, vi) in v.iter().enumerate() {
                    let cur = self.at(k + 1 + idx, j);
                    self.set(k + 1 + idx, j, cur - vi * f);
                }
            }
            // (H A) H, all rows.
            for i in 0..n {
                let mut dot = zero;
                for (idx, vi) in v.iter().enumerate() {
                    dot += self.at(i, k + 1 + idx) * vi;
                }
                let f = dot * beta;
                for (idx, vi) in v.iter().enumerate() {
                    let cur = self.at(i, k + 1 + idx);
                    self.set(i, k + 1 + idx, cur - f * vi.conj());
                }
            }
            self.set(k + 1, k, alpha);
            for i in k + 2..n {
                self.set(i, k, zero);
            }
        }
    }

    fn qr_eigenvalues(&mut self) -> Result<Vec<Complex64>, LinalgError> {
        let n = self.n;
        let mut eig = Vec::with_capacity(n);
        let scale = self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if scale == 0.0 {
            return Ok(vec![Complex64::new(0.0, 0.0); n]);
        }
        let cap = ITERATIONS_PER_EIGENVALUE * n.max(1);
        let mut total = 0usize;
        let mut since_deflation = 0usize;
        let mut hi = n as isize - 1;

        while hi >= 0 {
            let h_idx = hi as usize;
            if h_idx == 0 {
                eig.push(self.at(0, 0));
                break;
            }
            let lo = self.find_block_start(h_idx, scale);
            if lo == h_idx {
                eig.push(self.at(h_idx, h_idx));
                hi -= 1;
                since_deflation = 0;
                continue;
            }
            if lo + 1 == h_idx {
                let (l1, l2) = eig2(
                    self.at(lo, lo),
                    self.at(lo, h_idx),
                    self.at(h_idx, lo),
                    self.at(h_idx, h_idx),
                );
                eig.push(l2);
                eig.push(l1);
                hi -= 2;
                since_deflation = 0;
                continue;
            }

            total += 1;
            since_deflation += 1;
            if total > cap {
                return Err(LinalgError::NoConvergence { iterations: total });
            }

            let shift = if since_deflation.is_multiple_of(11) {
                // Exceptional shift to break symmetric stalls.
                self.at(h_idx, h_idx)
                    + Complex64::new(0.75, 0.25) * self.at(h_idx, h_idx - 1).norm()
            } else {
                wilkinson_shift(
                    self.at(h_idx - 1, h_idx - 1),
                    self.at(h_idx - 1, h_idx),
                    self.at(h_idx, h_idx - 1),
                    self.at(h_idx, h_idx),
                )
            };
            self.qr_step(lo, h_idx, shift);
        }
        Ok(eig)
    }

    fn find_block_start(&mut self, hi: usize, scale: f64) -> usize {
        let mut l = hi;
        while l > 0 {
            let mut s = self.at(l - 1, l - 1).norm() + self.at(l, l).norm();
            if s == 0.0 {
                s = scale;
            }
            if self.at(l, l - 1).norm() <= f64::EPSILON * s {
                self.set(l, l - 1, Complex64::new(0.0, 0.0));
                return l;
            }
            l -= 1;
        }
        0
    }

    /// Explicit shifted QR step `H - mu = QR`, `H <- RQ + mu` on rows/cols `lo..=hi`.
    fn qr_step(&mut self, lo: usize, hi: usize, mu: Complex64) {
        for i in lo..=hi {
            let d = self.at(i, i);
            self.set(i, i, d - mu);
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(self.at(k, k), self.at(k + 1, k));
            for j in k..=hi {
                let t1 = self.at(k, j);
                let t2 = self.at(k + 1, j);
                self.set(k, j, c.conj() * t1 + s.conj() * t2);
                self.set(k + 1, j, -s * t1 + c * t2);
            }
            rotations.push((c, s));
        }
        for (off, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + off;
            let row_end = (k + 2).min(hi);
            for i in lo..=row_end {
                let t1 = self.at(i, k);
                let t2 = self.at(i, k + 1);
                self.set(i, k, t1 * c + t2 * s);
                self.set(i, k + 1, -t1 * s.conj() + t2 * c.conj());
            }
        }
        for i in lo..=hi {
            let d = self.at(i, i);
            self.set(i, i, d + mu);
        }
    }
}

/// Rotation `(c, s)` with `[[c̄, s̄], [-s, c]] · [x, y]ᵀ = [r, 0]ᵀ`.
fn givens(x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    let r = x.norm().hypot(y.norm());
    if r == 0.0 {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (x / r, y / r)
    }
}

/// Eigenvalues of `[[a, b], [c, d]]`; the second is the one closer to `d`.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let p = (a - d) * 0.5;
    let disc = (p * p + b * c).sqrt();
    let denom = if (p + disc).norm() >= (p - disc).norm() {
        p + disc
    } else {
        p - disc
    };
    let near_d = if denom.norm() == 0.0 {
        d
    } else {
        d - b * c / denom
    };
    let other = a + d - near_d;
    (other, near_d)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    eig2(a, b, c, d).1
}
