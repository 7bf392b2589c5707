//! The impurity matrix `E_M`, the principal submatrix of `U` on the block.
//!
//! Rows and columns are labelled by arcs `(x;J)` with `x ∈ Γ_M` and
//! `J ∈ {L, R}`, stored at index `2x + (0 for L, 1 for R)`. The only nonzero
//! blocks are `P = [[a, b], [0, 0]]` at block position `(x, x+1)` and
//! `Q = [[0, 0], [c, d]]` at `(x+1, x)`.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, mat_mul, mat_power, solve, CMatrix};
use crate::walk::{Chirality, ImpurityModel};

/// Spectral radii at or above `1 - ZIGZAG_MARGIN` are refused.
pub const ZIGZAG_MARGIN: f64 = 1e-10;

/// Singular values at or below this count toward the numerical kernel.
pub const KERNEL_SV_THRESHOLD: f64 = 1e-10;

/// An arc `(x;J)` of the impurity block.
pub type Arc = (usize, Chirality);

/// `E_M` together with the powers the scattering formulas need.
#[derive(Debug, Clone)]
pub struct ImpurityMatrix {
    model: ImpurityModel,
    mat: CMatrix,
    squared: CMatrix,
    transit: CMatrix,
    radius: OnceLock<std::result::Result<f64, numerics::LinalgError>>,
}

/// Two vectors spanning `ker E_M` for `M ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPair {
    /// `ā` at `(0;L)`, `b̄` at `(0;R)`.
    pub plus: Vec<Complex64>,
    /// `c̄` at `(M−1;L)`, `d̄` at `(M−1;R)`.
    pub minus: Vec<Complex64>,
}

/// Builds `E_M`; a one-site block gives the 2×2 zero matrix.
pub fn build_e(model: &ImpurityModel) -> ImpurityMatrix {
    ImpurityMatrix::new(model)
}

/// Row/column index of an arc.
#[inline]
pub fn arc_index(x: usize, j: Chirality) -> usize {
    2 * x + j.index()
}

impl ImpurityMatrix {
    pub fn new(model: &ImpurityModel) -> Self {
        let m = model.m();
        let coin = model.coin();
        let mut mat = CMatrix::zeros(2 * m, 2 * m);
        for x in 0..m.saturating_sub(1) {
            let l = arc_index(x, Chirality::L);
            let r1 = arc_index(x + 1, Chirality::R);
            mat[(l, arc_index(x + 1, Chirality::L))] = coin.a();
            mat[(l, r1)] = coin.b();
            mat[(r1, arc_index(x, Chirality::L))] = coin.c();
            mat[(r1, arc_index(x, Chirality::R))] = coin.d();
        }
        let squared = mat_mul(&mat, &mat).expect("square");
        let transit = mat_power(&mat, (m - 1) as u32).expect("square");
        ImpurityMatrix {
            model: *model,
            mat,
            squared,
            transit,
            radius: OnceLock::new(),
        }
    }

    #[inline]
    pub fn model(&self) -> &ImpurityModel {
        &self.model
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.model.m()
    }

    /// `2M`.
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.model.m()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// `E_M²`.
    #[inline]
    pub fn squared(&self) -> &CMatrix {
        &self.squared
    }

    /// `E_M^{M−1}`.
    #[inline]
    pub fn transit(&self) -> &CMatrix {
        &self.transit
    }

    /// Index of `(x;J)`, checked against the block.
    pub fn index(&self, x: usize, j: Chirality) -> Result<usize> {
        if x >= self.m() {
            return Err(Error::IndexOutOfRange {
                x,
                chirality: j,
                m: self.m(),
            });
        }
        Ok(arc_index(x, j))
    }

    /// `(E_M^k)_{to, from}`.
    pub fn entry_power(&self, k: u32, from: Arc, to: Arc) -> Result<Complex64> {
        let col = self.index(from.0, from.1)?;
        let row = self.index(to.0, to.1)?;
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
        v[col] = Complex64::new(1.0, 0.0);
        for _ in 0..k {
            v = self.mat.mul_vec(&v)?;
        }
        Ok(v[row])
    }

    /// True when `E_M` is nilpotent by structure: one site, or no reflection.
    pub fn is_structurally_nilpotent(&self) -> bool {
        let c = self.model.coin();
        let zero = Complex64::new(0.0, 0.0);
        self.m() == 1 || (c.b() == zero && c.c() == zero)
    }

    /// All `2M` eigenvalues; exact zeros in the nilpotent case.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        if self.is_structurally_nilpotent() {
            return Ok(vec![Complex64::new(0.0, 0.0); self.dim()]);
        }
        Ok(numerics::eigenvalues(&self.mat)?)
    }

    /// `r_max = max |λ|` over the spectrum of `E_M`, computed once.
    pub fn spectral_radius(&self) -> Result<f64> {
        let r = self.radius.get_or_init(|| {
            if self.is_structurally_nilpotent() {
                Ok(0.0)
            } else {
                numerics::spectral_radius(&self.mat)
            }
        });
        r.clone().map_err(Error::from)
    }

    /// Fails with [`Error::Zigzag`] unless `a ≠ 0` and `r_max < 1 − 1e−10`.
    ///
    /// Returns the spectral radius on success.
    pub fn require_convergent(&self) -> Result<f64> {
        let a_abs = self.model.coin().a().norm();
        if a_abs == 0.0 {
            return Err(Error::Zigzag {
                a_abs,
                spectral_radius: 1.0,
            });
        }
        let r = self.spectral_radius()?;
        if r >= 1.0 - ZIGZAG_MARGIN {
            return Err(Error::Zigzag {
                a_abs,
                spectral_radius: r,
            });
        }
        Ok(r)
    }

    /// `G_M(ξ) = (I − e^{−2iξ} E_M²)⁻¹`.
    pub fn resolvent_g(&self, xi: f64) -> Result<CMatrix> {
        self.resolvent_apply(xi, &CMatrix::identity(self.dim()))
    }

    /// `G_M(ξ) · B` without forming the inverse.
    pub fn resolvent_apply(&self, xi: f64, rhs: &CMatrix) -> Result<CMatrix> {
        self.require_convergent()?;
        let z = Complex64::from_polar(1.0, -2.0 * xi);
        let system = CMatrix::identity(self.dim()).sub(&self.squared.scale(z))?;
        Ok(solve(&system, rhs)?)
    }

    /// `κ±`, each with `E_M κ = 0`.
    pub fn kernel_vectors(&self) -> KernelPair {
        let coin = self.model.coin();
        let n = self.dim();
        let last = self.m() - 1;
        let mut plus = vec![Complex64::new(0.0, 0.0); n];
        let mut minus = plus.clone();
        plus[arc_index(0, Chirality::L)] = coin.a().conj();
        plus[arc_index(0, Chirality::R)] = coin.b().conj();
        minus[arc_index(last, Chirality::L)] = coin.c().conj();
        minus[arc_index(last, Chirality::R)] = coin.d().conj();
        KernelPair { plus, minus }
    }

    /// Number of singular values of `E_M` at or below `threshold`.
    pub fn kernel_dimension(&self, threshold: f64) -> Result<usize> {
        Ok(numerics::null_space_dimension(&self.mat, threshold)?)
    }
}

impl KernelPair {
    /// `max(‖E κ₊‖, ‖E κ₋‖)`.
    pub fn residual(&self, e: &ImpurityMatrix) -> Result<f64> {
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let p = e.matrix().mul_vec(&self.plus)?;
        let q = e.matrix().mul_vec(&self.minus)?;
        Ok(norm(&p).max(norm(&q)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::Coin;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn model(coin: Coin, m: usize) -> ImpurityModel {
        ImpurityModel::new(coin, m).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_site_is_zero() {
        let e = build_e(&model(Coin::hadamard(), 1));
        assert_eq!(e.matrix(), &CMatrix::zeros(2, 2));
        assert_eq!(e.spectral_radius().unwrap(), 0.0);
        assert_eq!(e.eigenvalues().unwrap(), vec![c(0.0); 2]);
    }

    #[test]
    fn two_site_hadamard_blocks() {
        let e = build_e(&model(Coin::hadamard(), 2));
        let h = FRAC_1_SQRT_2;
        let want = CMatrix::from_rows(&[
            [c(0.0), c(0.0), c(h), c(h)],
            [c(0.0), c(0.0), c(0.0), c(0.0)],
            [c(0.0), c(0.0), c(0.0), c(0.0)],
            [c(h), c(-h), c(0.0), c(0.0)],
        ])
        .unwrap();
        assert_eq!(e.matrix(), &want);
    }

    #[test]
    fn free_coin_is_nilpotent_chain() {
        let e = build_e(&model(Coin::identity(), 3));
        assert!(e.is_structurally_nilpotent());
        assert_eq!(mat_power(e.matrix(), 3).unwrap(), CMatrix::zeros(6, 6));
        assert_eq!(
            e.entry_power(2, (0, Chirality::R), (2, Chirality::R))
                .unwrap(),
            c(1.0)
        );
        assert_eq!(
            e.entry_power(2, (2, Chirality::L), (0, Chirality::L))
                .unwrap(),
            c(1.0)
        );
    }

    #[test]
    fn entry_power_path_weights() {
        let e = build_e(&model(Coin::hadamard(), 2));
        assert_eq!(
            e.entry_power(0, (1, Chirality::L), (1, Chirality::L))
                .unwrap(),
            c(1.0)
        );
        // The only confined two-step path is (0;R) -d-> (1;R) -b-> (0;L).
        let coin = Coin::hadamard();
        let w = e
            .entry_power(2, (0, Chirality::R), (0, Chirality::L))
            .unwrap();
        assert!((w - coin.b() * coin.d()).norm() < 1e-15);
        assert!(e
            .entry_power(1, (2, Chirality::L), (0, Chirality::L))
            .is_err());
    }

    #[test]
    fn spectral_radii_small_blocks() {
        let coin = Coin::from_angles(0.2, 0.7, -1.3, 0.9);
        let r2 = build_e(&model(coin, 2)).spectral_radius().unwrap();
        let r3 = build_e(&model(coin, 3)).spectral_radius().unwrap();
        assert!((r2 * r2 - coin.c().norm_sqr()).abs() < 1e-12);
        assert!((r3 * r3 - coin.c().norm()).abs() < 1e-12);
    }

    #[test]
    fn resolvent_matches_neumann_series() {
        let e = build_e(&model(Coin::hadamard(), 2));
        let g = e.resolvent_g(0.0).unwrap();
        let mut sum = CMatrix::identity(4);
        let mut term = CMatrix::identity(4);
        for _ in 0..60 {
            term = mat_mul(&term, e.squared()).unwrap();
            sum = sum.add(&term).unwrap();
        }
        assert!(g.max_abs_diff(&sum).unwrap() < 1e-14);
        // ⟨(0;L), G (0;L)⟩ sums the loop weight bc = 1/2 geometrically.
        assert!((g[(0, 0)] - c(2.0)).norm() < 1e-14);
        assert_eq!(g, e.resolvent_g(0.0).unwrap());
        let shifted = e.resolvent_g(2.0 * std::f64::consts::PI).unwrap();
        assert!(g.max_abs_diff(&shifted).unwrap() < 1e-14);
        let zero = build_e(&model(Coin::hadamard(), 1));
        assert_eq!(zero.resolvent_g(0.3).unwrap(), CMatrix::identity(2));
    }

    #[test]
    fn zigzag_refused() {
        let coin = Coin::new(c(0.0), c(1.0), c(1.0), c(0.0)).unwrap();
        let e = build_e(&model(coin, 3));
        assert!(matches!(e.resolvent_g(0.1), Err(Error::Zigzag { .. })));
    }

    #[test]
    fn kernel_vectors_annihilated() {
        let coin = Coin::from_angles(0.4, -0.3, 2.1, 0.6);
        for m in 2..=6 {
            let e = build_e(&model(coin, m));
            let k = e.kernel_vectors();
            assert!(k.residual(&e).unwrap() < 1e-14);
            assert_eq!(e.kernel_dimension(KERNEL_SV_THRESHOLD).unwrap(), 2);
        }
        let e = build_e(&model(Coin::identity(), 4));
        let k = e.kernel_vectors();
        assert_eq!(k.plus[0], c(1.0));
        assert_eq!(k.plus[1], c(0.0));
    }
}
