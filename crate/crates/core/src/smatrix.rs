//! Frequency-domain S-matrix, fiber action, the plane-wave matrix `S̃_M(ξ)`
//! and resonance scans.
//!
//! With `G_M(ξ) = (I − e^{−2iξ} E_M²)⁻¹`:
//!
//! ```text
//! â(ξ) = a (E^{M−1} G(ξ))_{(0;L),(M−1;L)}
//! b̂(ξ) = b + a (e^{−2iξ} E² G(ξ))_{(0;L),(0;R)}
//! ĉ(ξ) = (c + d (e^{2iξ} E² G(−ξ))_{(M−1;R),(M−1;L)}) e^{−2iξ(M−1)}
//! d̂(ξ) = d (E^{M−1} G(−ξ))_{(M−1;R),(0;R)}
//! ```
//!
//! These are the transforms `Σ_x f(x) e^{−ixξ}` of the kernels `a_M..d_M`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impurity::{arc_index, ImpurityMatrix};
use crate::numerics::CMatrix;
use crate::walk::{Chirality, ImpurityModel};

/// Smallest grid accepted by [`resonance_scan`].
pub const MIN_GRID: usize = 16;

/// `1 − |â|²` below this marks perfect transmission.
pub const PERFECT_TOL: f64 = 1e-9;

/// Golden-section refinement stops once the bracket is this narrow.
pub const REFINE_TOL: f64 = 1e-12;

/// Refined maxima closer than this are merged.
const DEDUP_TOL: f64 = 1e-8;

/// Profiles whose range is below this have no resonances.
const FLAT_TOL: f64 = 1e-12;

/// Maps `ξ` into `[−π, π)` with a single rounding, so `ξ + 2π` reduces back
/// to `ξ` exactly whenever that sum is representable.
pub fn canonical_xi(xi: f64) -> f64 {
    if (-PI..PI).contains(&xi) {
        return xi;
    }
    let k = ((xi + PI) / TAU).floor();
    let mut t = (-k).mul_add(TAU, xi);
    if t >= PI {
        t -= TAU;
    } else if t < -PI {
        t += TAU;
    }
    if t >= PI {
        -PI
    } else {
        t
    }
}

/// The four S-matrix entries at one quasi-momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrixPoint {
    pub xi: f64,
    pub a_hat: Complex64,
    pub b_hat: Complex64,
    pub c_hat: Complex64,
    pub d_hat: Complex64,
}

impl SMatrixPoint {
    /// Transmission `|â(ξ)|²`.
    pub fn transmission(&self) -> f64 {
        self.a_hat.norm_sqr()
    }

    /// Reflection `|b̂(ξ)|²`.
    pub fn reflection(&self) -> f64 {
        self.b_hat.norm_sqr()
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a_hat, self.b_hat, self.c_hat, self.d_hat]
    }
}

/// Largest deviation in the three unitarity relations, given the points at
/// `ξ` and `−ξ`:
///
/// ```text
/// |â(ξ)|² + |ĉ(−ξ)|² = 1
/// |b̂(ξ)|² + |d̂(−ξ)|² = 1
/// â(ξ) conj(b̂(ξ)) + ĉ(−ξ) conj(d̂(−ξ)) = 0
/// ```
pub fn unitarity_defect(at: &SMatrixPoint, neg: &SMatrixPoint) -> f64 {
    let r1 = (at.a_hat.norm_sqr() + neg.c_hat.norm_sqr() - 1.0).abs();
    let r2 = (at.b_hat.norm_sqr() + neg.d_hat.norm_sqr() - 1.0).abs();
    let r3 = (at.a_hat * at.b_hat.conj() + neg.c_hat * neg.d_hat.conj()).norm();
    r1.max(r2).max(r3)
}

/// Evaluates the S-matrix of one model at many quasi-momenta.
#[derive(Debug, Clone)]
pub struct SMatrix {
    e: ImpurityMatrix,
    radius: f64,
}

/// Resolvent columns `G(ξ) e_{(M−1;L)}` and `G(ξ) e_{(0;R)}`.
struct Columns {
    end_l: Vec<Complex64>,
    top_r: Vec<Complex64>,
}

impl SMatrix {
    /// Fails with [`Error::Zigzag`] when the series defining the entries diverge.
    pub fn new(model: &ImpurityModel) -> Result<Self> {
        Self::from_matrix(ImpurityMatrix::new(model))
    }

    pub fn from_matrix(e: ImpurityMatrix) -> Result<Self> {
        let radius = e.require_convergent()?;
        Ok(SMatrix { e, radius })
    }

    pub fn model(&self) -> &ImpurityModel {
        self.e.model()
    }

    pub fn impurity(&self) -> &ImpurityMatrix {
        &self.e
    }

    pub fn spectral_radius(&self) -> f64 {
        self.radius
    }

    fn columns(&self, xi: f64) -> Result<Columns> {
        let n = self.e.dim();
        let m = self.e.m();
        let mut rhs = CMatrix::zeros(n, 2);
        rhs[(arc_index(m - 1, Chirality::L), 0)] = Complex64::new(1.0, 0.0);
        rhs[(arc_index(0, Chirality::R), 1)] = Complex64::new(1.0, 0.0);
        let g = self.e.resolvent_apply(xi, &rhs)?;
        Ok(Columns {
            end_l: g.column(0),
            top_r: g.column(1),
        })
    }

    fn row_dot(mat: &CMatrix, row: usize, v: &[Complex64]) -> Complex64 {
        mat.row(row).iter().zip(v).map(|(x, y)| x * y).sum()
    }

    fn assemble(&self, xi: f64, plus: &Columns, minus: &Columns) -> SMatrixPoint {
        let coin = self.e.model().coin();
        let m = self.e.m();
        let top_l = arc_index(0, Chirality::L);
        let end_r = arc_index(m - 1, Chirality::R);
        let transit = self.e.transit();
        let sq = self.e.squared();
        let e2 = Complex64::from_polar(1.0, -2.0 * xi);
        let a_hat = coin.a() * Self::row_dot(transit, top_l, &plus.end_l);
        let b_hat = coin.b() + coin.a() * e2 * Self::row_dot(sq, top_l, &plus.top_r);
        let c_hat = (coin.c() + coin.d() * e2.conj() * Self::row_dot(sq, end_r, &minus.end_l))
            * Complex64::from_polar(1.0, -2.0 * xi * (m as f64 - 1.0));
        let d_hat = coin.d() * Self::row_dot(transit, end_r, &minus.top_r);
        SMatrixPoint {
            xi: canonical_xi(xi),
            a_hat,
            b_hat,
            c_hat,
            d_hat,
        }
    }

    /// Entries at `ξ`, canonicalised to `[−π, π)`.
    pub fn point(&self, xi: f64) -> Result<SMatrixPoint> {
        Ok(self.pair(xi)?.0)
    }

    /// Entries at `ξ` and at `−ξ`, sharing both linear solves.
    pub fn pair(&self, xi: f64) -> Result<(SMatrixPoint, SMatrixPoint)> {
        let xi = canonical_xi(xi);
        let plus = self.columns(xi)?;
        let minus = self.columns(-xi)?;
        Ok((
            self.assemble(xi, &plus, &minus),
            self.assemble(-xi, &minus, &plus),
        ))
    }

    /// [`unitarity_defect`] at `ξ`.
    pub fn unitarity_residual(&self, xi: f64) -> Result<f64> {
        let (at, neg) = self.pair(xi)?;
        Ok(unitarity_defect(&at, &neg))
    }

    /// `S̃_M(ξ) = e^{−iξ(M−1)} D [[â(ξ), b̂(ξ)], [ĉ(−ξ), d̂(−ξ)]] D⁻¹`
    /// with `D = diag(e^{iξ(M−1)/2}, e^{−iξ(M−1)/2})`.
    pub fn stilde(&self, xi: f64) -> Result<CMatrix> {
        let (at, neg) = self.pair(xi)?;
        let xi = at.xi;
        let m1 = self.e.m() as f64 - 1.0;
        let ph = Complex64::from_polar(1.0, -xi * m1);
        Ok(CMatrix::from_rows(&[
            [ph * at.a_hat, at.b_hat],
            [ph * ph * neg.c_hat, ph * neg.d_hat],
        ])?)
    }

    /// `Σ̂_M(θ)` on the fiber `h(θ)`.
    pub fn sigma_hat_theta(&self, fiber: &FiberState) -> Result<FiberState> {
        let (p, q) = self.pair(fiber.xi_plus())?;
        let (ps, qs) = (fiber.plus, fiber.minus);
        let plus = [
            p.a_hat * ps[0] + p.b_hat * qs[1],
            p.d_hat * ps[1] + p.c_hat * qs[0],
        ];
        let minus = [
            q.a_hat * qs[0] + q.b_hat * ps[1],
            q.d_hat * qs[1] + q.c_hat * ps[0],
        ];
        Ok(FiberState {
            theta: fiber.theta,
            plus,
            minus,
        })
    }

    /// Maximum of `1 − |â|²` and related quasi-momenta.
    pub fn resonance_scan(&self, grid_size: usize) -> Result<Vec<Resonance>> {
        if grid_size < MIN_GRID {
            return Err(Error::GridTooSmall {
                size: grid_size,
                min: MIN_GRID,
            });
        }
        let h = 2.0 * PI / grid_size as f64;
        let grid: Vec<f64> = (0..grid_size).map(|i| -PI + h * i as f64).collect();
        let t: Vec<f64> = grid
            .iter()
            .map(|&xi| self.point(xi).map(|p| p.transmission()))
            .collect::<Result<_>>()?;
        let (lo, hi) = t
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, u), &v| (l.min(v), u.max(v)));
        if hi - lo < FLAT_TOL {
            return Ok(Vec::new());
        }
        let n = grid_size;
        let mut found: Vec<Resonance> = Vec::new();
        for i in 0..n {
            let prev = t[(i + n - 1) % n];
            let next = t[(i + 1) % n];
            if !(t[i] > prev && t[i] >= next) {
                continue;
            }
            let xi = canonical_xi(self.refine(grid[i] - h, grid[i] + h)?);
            let tr = self.point(xi)?.transmission();
            if found
                .iter()
                .any(|r| circular_distance(r.xi, xi) < DEDUP_TOL)
            {
                continue;
            }
            found.push(Resonance {
                xi,
                transmission: tr,
                perfect: 1.0 - tr < PERFECT_TOL,
            });
        }
        found.sort_by(|a, b| a.xi.total_cmp(&b.xi));
        Ok(found)
    }

    /// Golden-section minimisation of `|ĉ(−ξ)| = (1 − |â(ξ)|²)^{1/2}`.
    ///
    /// The modulus is V-shaped at a perfect transmission, so the minimiser
    /// is located to far better than the square root of machine precision.
    fn refine(&self, mut lo: f64, mut hi: f64) -> Result<f64> {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let f = |xi: f64| -> Result<f64> { Ok(self.pair(xi)?.1.c_hat.norm()) };
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = f(x1)?;
        let mut f2 = f(x2)?;
        for _ in 0..200 {
            if hi - lo < REFINE_TOL {
                break;
            }
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2)?;
            }
        }
        Ok(if f1 <= f2 { x1 } else { x2 })
    }
}

pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// A local maximum of the transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    /// Location in `[−π, π)`.
    pub xi: f64,
    /// `|â(ξ)|²` there.
    pub transmission: f64,
    /// `1 − |â(ξ)|² < 1e−9`.
    pub perfect: bool,
}

/// `ψ(ξ₊), ψ(ξ₋)` on the fiber over `θ`, with `ξ₊ = arccos(cos θ) ∈ [0, π]`
/// and `ξ₋ = 2π − ξ₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberState {
    theta: f64,
    /// `[ψ_L, ψ_R]` at `ξ₊`.
    pub plus: [Complex64; 2],
    /// `[ψ_L, ψ_R]` at `ξ₋`.
    pub minus: [Complex64; 2],
}

impl FiberState {
    /// Fails at the thresholds `θ ∈ {0, π}` (mod 2π).
    pub fn new(theta: f64, plus: [Complex64; 2], minus: [Complex64; 2]) -> Result<Self> {
        if !theta.is_finite() || theta.sin().abs() < 1e-12 {
            return Err(Error::ThresholdTheta { theta });
        }
        Ok(FiberState { theta, plus, minus })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn xi_plus(&self) -> f64 {
        self.theta.cos().acos()
    }

    pub fn xi_minus(&self) -> f64 {
        2.0 * PI - self.xi_plus()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.minus)
            .map(|z| z.norm_sqr())
            .sum()
    }
}

/// Entries at `ξ` for the model.
pub fn smatrix_point(model: &ImpurityModel, xi: f64) -> Result<SMatrixPoint> {
    SMatrix::new(model)?.point(xi)
}

/// `S̃_M(ξ)` for the model.
pub fn stilde(model: &ImpurityModel, xi: f64) -> Result<CMatrix> {
    SMatrix::new(model)?.stilde(xi)
}

/// `Σ̂_M(θ)` applied to one fiber.
pub fn sigma_hat_theta(model: &ImpurityModel, fiber: &FiberState) -> Result<FiberState> {
    SMatrix::new(model)?.sigma_hat_theta(fiber)
}

/// Local maxima of `|â_M(ξ)|²` on a uniform grid, refined.
pub fn resonance_scan(model: &ImpurityModel, grid_size: usize) -> Result<Vec<Resonance>> {
    SMatrix::new(model)?.resonance_scan(grid_size)
}

/// Rational closed forms of the entries for `M ≤ 3`.
///
/// ```text
/// â₂ = a²/(1 − bc z)            b̂₂ = (1 + Δz) b/(1 − bc z)                   z = e^{−2iξ}
/// â₃ = a³/(1 − 2bc z − Δbc z²)  b̂₃ = (1 + (Δ − bc) z + Δ² z²) b/(1 − 2bc z − Δbc z²)
/// ```
///
/// and `d̂`, `ĉ` from the same expressions at `z̄` with `d`, `c` in place of
/// `a`, `b`, the latter times `e^{−2iξ(M−1)}`.
pub fn smatrix_closed_small(model: &ImpurityModel, xi: f64) -> Result<SMatrixPoint> {
    let m = model.m();
    let coin = model.coin();
    let (a, b, c, d) = (coin.a(), coin.b(), coin.c(), coin.d());
    let xi = canonical_xi(xi);
    let delta = coin.delta();
    let bc = b * c;
    let one = Complex64::new(1.0, 0.0);
    let z = Complex64::from_polar(1.0, -2.0 * xi);
    let zc = z.conj();
    let (a_hat, b_hat, c_hat, d_hat) = match m {
        1 => (a, b, c, d),
        2 => {
            let den = |w: Complex64| one - bc * w;
            (
                a * a / den(z),
                (one + delta * z) / den(z) * b,
                (one + delta * zc) / den(zc) * c * z,
                d * d / den(zc),
            )
        }
        3 => {
            let den = |w: Complex64| one - 2.0 * bc * w - delta * bc * w * w;
            let num = |w: Complex64| one + (delta - bc) * w + delta * delta * w * w;
            (
                a * a * a / den(z),
                num(z) / den(z) * b,
                num(zc) / den(zc) * c * z * z,
                d * d * d / den(zc),
            )
        }
        _ => return Err(Error::UnsupportedBlockLength { m, max: 3 }),
    };
    Ok(SMatrixPoint {
        xi,
        a_hat,
        b_hat,
        c_hat,
        d_hat,
    })
}
