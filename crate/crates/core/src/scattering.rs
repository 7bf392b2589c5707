//! Position-space kernels of the scattering operator `Σ_M`.
//!
//! `Σ_M` acts through four one-sided sequences on even offsets:
//!
//! ```text
//! [Σψ]_L = a_M ∗ ψ_L + b_M ∗ (Jψ_R)
//! [Σψ]_R = c_M ∗ (Jψ_L) + d_M ∗ ψ_R          (Jψ)(x) = ψ(−x)
//! ```
//!
//! with `a_M(2j) = a (E^{M−1+2j})_{(0;L),(M−1;L)}`, `b_M(0) = b`,
//! `b_M(2j) = a (E^{2j})_{(0;L),(0;R)}`, `c_M(2(M−1)) = c`,
//! `c_M(2(M−1)−2ℓ) = d (E^{2ℓ})_{(M−1;R),(M−1;L)}` and
//! `d_M(−2ℓ) = d (E^{M−1+2ℓ})_{(M−1;R),(0;R)}`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impurity::{arc_index, ImpurityMatrix};
use crate::numerics::{self, least_squares, mat_power, CMatrix};
use crate::walk::{Chirality, Coin, ImpurityModel, WaveState};

/// Default truncation tolerance for kernel series.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Series longer than this are refused.
pub const MAX_KERNEL_TERMS: usize = 1_000_000;

/// Minimum nonzero terms per channel for [`decay_rate`].
pub const MIN_DECAY_TERMS: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One of the four kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    A,
    B,
    C,
    D,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::A, Channel::B, Channel::C, Channel::D];

    /// `"aM"`, `"bM"`, `"cM"` or `"dM"`.
    pub fn name(self) -> &'static str {
        match self {
            Channel::A => "aM",
            Channel::B => "bM",
            Channel::C => "cM",
            Channel::D => "dM",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A sequence on the offsets `first, first + step, first + 2·step, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    first: i64,
    step: i64,
    values: Vec<Complex64>,
    exact: bool,
    tail: f64,
}

impl Kernel {
    /// Offset of the first stored value.
    pub fn first_offset(&self) -> i64 {
        self.first
    }

    /// `+2` or `−2`.
    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when the series terminated, so nothing was truncated.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Bound on the magnitude of every dropped term.
    pub fn tail_bound(&self) -> f64 {
        self.tail
    }

    /// Value at `offset`; zero off the support or beyond the stored range.
    pub fn get(&self, offset: i64) -> Complex64 {
        let d = offset - self.first;
        if d % self.step != 0 {
            return ZERO;
        }
        let k = d / self.step;
        if k < 0 {
            return ZERO;
        }
        self.values.get(k as usize).copied().unwrap_or(ZERO)
    }

    /// `(offset, value)` over the stored range.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, v)| (self.first + self.step * k as i64, *v))
    }

    /// Smallest and largest stored offset.
    pub fn offset_range(&self) -> (i64, i64) {
        let last = self.first + self.step * (self.values.len().max(1) as i64 - 1);
        (self.first.min(last), self.first.max(last))
    }

    /// `Σ_x f(x) e^{−ixξ}` over the stored range.
    pub fn dtft(&self, xi: f64) -> Complex64 {
        self.iter()
            .map(|(o, v)| v * Complex64::from_polar(1.0, -(o as f64) * xi))
            .sum()
    }

    fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != ZERO).count()
    }
}

/// The four kernels of `Σ_M` with their truncation data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringKernels {
    m: usize,
    channels: [Kernel; 4],
    spectral_radius: f64,
    eps: f64,
    tol: f64,
}

impl ScatteringKernels {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn channel(&self, ch: Channel) -> &Kernel {
        &self.channels[ch.slot()]
    }

    /// `a_M`.
    pub fn a(&self) -> &Kernel {
        self.channel(Channel::A)
    }
    /// `b_M`.
    pub fn b(&self) -> &Kernel {
        self.channel(Channel::B)
    }
    /// `c_M`.
    pub fn c(&self) -> &Kernel {
        self.channel(Channel::C)
    }
    /// `d_M`.
    pub fn d(&self) -> &Kernel {
        self.channel(Channel::D)
    }

    /// Longest stored channel.
    pub fn truncation_length(&self) -> usize {
        self.channels.iter().map(Kernel::len).max().unwrap_or(0)
    }

    /// `ε_K`: the largest dropped-term bound divided by `1 − r_max²`.
    pub fn error_bound(&self) -> f64 {
        self.eps
    }

    /// True when every channel terminated exactly.
    pub fn is_exact(&self) -> bool {
        self.channels.iter().all(Kernel::is_exact)
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Spectral radius of `E_M` used for the bound.
    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// `Σ_M δ_x |J⟩`.
    pub fn apply_delta(&self, x: i64, j: Chirality) -> WaveState {
        self.apply(&WaveState::delta(x, j))
    }

    /// `Σ_M ψ` by convolution and reflection.
    pub fn apply(&self, psi: &WaveState) -> WaveState {
        let (lo, hi) = psi.window();
        let mut bounds = (i64::MAX, i64::MIN);
        let mut widen = |a: i64, b: i64| {
            bounds.0 = bounds.0.min(a);
            bounds.1 = bounds.1.max(b);
        };
        let (a_lo, a_hi) = self.a().offset_range();
        let (b_lo, b_hi) = self.b().offset_range();
        let (c_lo, c_hi) = self.c().offset_range();
        let (d_lo, d_hi) = self.d().offset_range();
        widen(lo + a_lo, hi + a_hi);
        widen(b_lo - hi, b_hi - lo);
        widen(c_lo - hi, c_hi - lo);
        widen(lo + d_lo, hi + d_hi);
        let mut out = WaveState::zeros(bounds.0, bounds.1);
        for (x, v) in psi.iter() {
            for j in Chirality::BOTH {
                let w = v[j.index()];
                if w != ZERO {
                    self.accumulate(&mut out, x, j, w);
                }
            }
        }
        out
    }

    fn accumulate(&self, out: &mut WaveState, x: i64, j: Chirality, w: Complex64) {
        match j {
            Chirality::L => {
                for (o, v) in self.a().iter() {
                    out.add_at(x + o, Chirality::L, w * v);
                }
                for (o, v) in self.c().iter() {
                    out.add_at(o - x, Chirality::R, w * v);
                }
            }
            Chirality::R => {
                for (o, v) in self.b().iter() {
                    out.add_at(o - x, Chirality::L, w * v);
                }
                for (o, v) in self.d().iter() {
                    out.add_at(x + o, Chirality::R, w * v);
                }
            }
        }
    }
}

struct Stream<'a> {
    e: &'a ImpurityMatrix,
    min_terms: usize,
    tol: f64,
}

impl Stream<'_> {
    /// Values `coef · (E^{2k} v)_row` for `k = 0, 1, …`, appended after `prefix`.
    fn run(
        &self,
        prefix: Option<Complex64>,
        coef: Complex64,
        mut v: Vec<Complex64>,
        row: usize,
        first: i64,
        step: i64,
    ) -> Result<Kernel> {
        let mut values: Vec<Complex64> = prefix.into_iter().collect();
        let scale = coef.norm();
        let (exact, tail) = loop {
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm == 0.0 || scale == 0.0 {
                break (true, 0.0);
            }
            let bound = scale * vnorm;
            if values.len() >= self.min_terms && bound < self.tol {
                break (false, bound);
            }
            if values.len() >= MAX_KERNEL_TERMS {
                return Err(Error::StepCapExceeded {
                    needed: values.len() as u64 + 1,
                    cap: MAX_KERNEL_TERMS as u64,
                });
            }
            values.push(coef * v[row]);
            v = self.e.squared().mul_vec(&v)?;
        };
        Ok(Kernel {
            first,
            step,
            values,
            exact,
            tail,
        })
    }
}

/// Kernels of `Σ_M` truncated once every remaining term is below `tol`.
///
/// Each series is generated as `coef · (E^{2k} v)_row`; since `‖E_M‖ ≤ 1`,
/// `|coef|·‖E^{2k} v‖` bounds every later term, and the series stops when
/// that bound drops below `tol` with at least `M` terms stored.
pub fn kernels(model: &ImpurityModel, tol: f64) -> Result<ScatteringKernels> {
    kernels_for(&ImpurityMatrix::new(model), tol)
}

/// As [`kernels`], reusing an existing `E_M`.
pub fn kernels_for(e: &ImpurityMatrix, tol: f64) -> Result<ScatteringKernels> {
    if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
        return Err(Error::BadTolerance(tol));
    }
    let r = e.require_convergent()?;
    let m = e.m();
    let coin = e.model().coin();
    let last = m - 1;
    let top_l = arc_index(0, Chirality::L);
    let top_r = arc_index(0, Chirality::R);
    let end_l = arc_index(last, Chirality::L);
    let end_r = arc_index(last, Chirality::R);
    let stream = Stream {
        e,
        min_terms: m,
        tol,
    };
    let transit = e.transit();
    let squared = e.squared();
    let two_m1 = 2 * last as i64;

    let a = stream.run(None, coin.a(), transit.column(end_l), top_l, 0, 2)?;
    let b = stream.run(Some(coin.b()), coin.a(), squared.column(top_r), top_l, 0, 2)?;
    let c = stream.run(
        Some(coin.c()),
        coin.d(),
        squared.column(end_l),
        end_r,
        two_m1,
        -2,
    )?;
    let d = stream.run(None, coin.d(), transit.column(top_r), end_r, 0, -2)?;

    let channels = [a, b, c, d];
    let worst = channels.iter().map(Kernel::tail_bound).fold(0.0, f64::max);
    let eps = if worst == 0.0 {
        0.0
    } else {
        worst / (1.0 - r * r)
    };
    Ok(ScatteringKernels {
        m,
        channels,
        spectral_radius: r,
        eps,
        tol,
    })
}

/// `Σ_M δ_x |J⟩` from the kernels at truncation `tol`.
pub fn sigma_apply_delta(
    model: &ImpurityModel,
    x: i64,
    j: Chirality,
    tol: f64,
) -> Result<WaveState> {
    Ok(kernels(model, tol)?.apply_delta(x, j))
}

/// `Σ_M ψ` from the kernels at truncation `tol`.
pub fn sigma_apply(model: &ImpurityModel, psi: &WaveState, tol: f64) -> Result<WaveState> {
    Ok(kernels(model, tol)?.apply(psi))
}

/// Parameters of `Θ = PQ + QP` for a two-site loop: `g = −|c|Δ`,
/// `e^{iγ} = iΔ|ac|/(ac)` and `e^{iθ} = |c| + i|a|`.
#[derive(Debug, Clone, Copy)]
struct ThetaParams {
    g: Complex64,
    gamma: Complex64,
    theta: f64,
}

impl ThetaParams {
    fn new(coin: &Coin) -> Result<Self> {
        let (a, c) = (coin.a(), coin.c());
        if a.norm() == 0.0 {
            return Err(Error::ClosedFormUndefined(
                "a = 0, the phase gamma is undefined",
            ));
        }
        if c.norm() == 0.0 {
            return Err(Error::ClosedFormUndefined(
                "c = 0, the phase gamma is undefined",
            ));
        }
        let delta = coin.delta();
        Ok(ThetaParams {
            g: -delta * c.norm(),
            gamma: Complex64::i() * delta * (a.norm() * c.norm()) / (a * c),
            theta: a.norm().atan2(c.norm()),
        })
    }
}

/// `Θ^k` in closed form, `Θ = PQ + QP = [[bc, bd], [ca, bc]]`:
///
/// ```text
/// Θ^k = g^k/2 · ( e^{ikθ} [[1, −e^{iγ}], [−e^{−iγ}, 1]] + e^{−ikθ} [[1, e^{iγ}], [e^{−iγ}, 1]] )
/// ```
pub fn closed_form_m3_theta_power(coin: &Coin, k: u32) -> Result<CMatrix> {
    let p = ThetaParams::new(coin)?;
    let gk = p.g.powu(k);
    let kt = k as f64 * p.theta;
    let (cos, sin) = (Complex64::new(kt.cos(), 0.0), Complex64::new(kt.sin(), 0.0));
    let i = Complex64::i();
    let eg = p.gamma;
    let eg_inv = eg.conj();
    Ok(CMatrix::from_rows(&[
        [gk * cos, -gk * i * sin * eg],
        [-gk * i * sin * eg_inv, gk * cos],
    ])?)
}

/// `Θ = PQ + QP` by direct multiplication.
pub fn theta_matrix(coin: &Coin) -> CMatrix {
    let (a, b, c, d) = (coin.a(), coin.b(), coin.c(), coin.d());
    CMatrix::from_rows(&[[b * c, b * d], [c * a, c * b]]).expect("finite")
}

/// `Θ^k` by repeated squaring, for cross-checks.
pub fn theta_power(coin: &Coin, k: u32) -> CMatrix {
    mat_power(&theta_matrix(coin), k).expect("square")
}

/// Kernel value at `offset` from the explicit one-, two- and three-site formulas.
///
/// For `M = 3`, with `g = −|c|Δ`:
///
/// ```text
/// a₃(2k)   = g^k a² {−i e^{−iγ} b sin kθ + a cos kθ}               k ≥ 0
/// b₃(2k)   = g^{k−1} ad {−i e^{iγ} a sin (k−1)θ + b cos (k−1)θ}    k ≥ 1
/// c₃(4−2k) = g^{k−1} ad {−i e^{−iγ} d sin (k−1)θ + c cos (k−1)θ}   k ≥ 1
/// d₃(−2k)  = g^k d² {−i e^{iγ} c sin kθ + d cos kθ}                k ≥ 0
/// ```
///
/// with `b₃(0) = b`, `c₃(4) = c`. A coin with `c = 0` uses `γ = 0`, which
/// only multiplies vanishing terms.
pub fn closed_form_value(model: &ImpurityModel, ch: Channel, offset: i64) -> Result<Complex64> {
    let coin = model.coin();
    let (a, b, c, d) = (coin.a(), coin.b(), coin.c(), coin.d());
    let m = model.m();
    if m > 3 {
        return Err(Error::UnsupportedBlockLength { m, max: 3 });
    }
    if offset.rem_euclid(2) != 0 {
        return Ok(ZERO);
    }
    // Index k along the support, or None off it.
    let top = 2 * (m as i64 - 1);
    let k = match ch {
        Channel::A | Channel::B => (offset >= 0).then_some(offset / 2),
        Channel::C => (offset <= top).then_some((top - offset) / 2),
        Channel::D => (offset <= 0).then_some(-offset / 2),
    };
    let Some(k) = k else {
        return Ok(ZERO);
    };
    let k = k as u32;
    let value = match m {
        1 => {
            if k > 0 {
                ZERO
            } else {
                match ch {
                    Channel::A => a,
                    Channel::B => b,
                    Channel::C => c,
                    Channel::D => d,
                }
            }
        }
        2 => {
            let bc = b * c;
            match (ch, k) {
                (Channel::A, k) => a * a * bc.powu(k),
                (Channel::B, 0) => b,
                (Channel::B, k) => a * d * b * bc.powu(k - 1),
                (Channel::C, 0) => c,
                (Channel::C, k) => a * c * d * bc.powu(k - 1),
                (Channel::D, k) => d * d * bc.powu(k),
            }
        }
        _ => {
            if a.norm() == 0.0 {
                return Err(Error::ClosedFormUndefined(
                    "a = 0, the phase gamma is undefined",
                ));
            }
            let p = if c.norm() == 0.0 {
                ThetaParams {
                    g: ZERO,
                    gamma: Complex64::new(1.0, 0.0),
                    theta: std::f64::consts::FRAC_PI_2,
                }
            } else {
                ThetaParams::new(coin)?
            };
            let i = Complex64::i();
            let eg = p.gamma;
            let egc = eg.conj();
            let term = |n: u32, s_coef: Complex64, c_coef: Complex64| {
                let t = n as f64 * p.theta;
                -i * s_coef * t.sin() + c_coef * t.cos()
            };
            match (ch, k) {
                (Channel::A, k) => p.g.powu(k) * a * a * term(k, egc * b, a),
                (Channel::B, 0) => b,
                (Channel::B, k) => p.g.powu(k - 1) * a * d * term(k - 1, eg * a, b),
                (Channel::C, 0) => c,
                (Channel::C, k) => p.g.powu(k - 1) * a * d * term(k - 1, egc * d, c),
                (Channel::D, k) => p.g.powu(k) * d * d * term(k, eg * c, d),
            }
        }
    };
    Ok(value)
}

/// `Σ_M δ_x |J⟩` for `M ≤ 3` from the explicit formulas, keeping `terms`
/// values per channel.
pub fn closed_form_sigma(
    model: &ImpurityModel,
    x: i64,
    j: Chirality,
    terms: usize,
) -> Result<WaveState> {
    let m = model.m();
    if m > 3 {
        return Err(Error::UnsupportedBlockLength { m, max: 3 });
    }
    let top = 2 * (m as i64 - 1);
    let mut out = WaveState::delta(x, j).scale(ZERO);
    for k in 0..terms as i64 {
        match j {
            Chirality::L => {
                out.add_at(
                    x + 2 * k,
                    Chirality::L,
                    closed_form_value(model, Channel::A, 2 * k)?,
                );
                let o = top - 2 * k;
                out.add_at(
                    o - x,
                    Chirality::R,
                    closed_form_value(model, Channel::C, o)?,
                );
            }
            Chirality::R => {
                out.add_at(
                    2 * k - x,
                    Chirality::L,
                    closed_form_value(model, Channel::B, 2 * k)?,
                );
                out.add_at(
                    x - 2 * k,
                    Chirality::R,
                    closed_form_value(model, Channel::D, -2 * k)?,
                );
            }
        }
    }
    Ok(out)
}

/// Geometric decay of the kernel tails per two-site step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    /// Estimated `r_max²`.
    pub ratio_sq: f64,
    /// Estimated `r_max`.
    pub rate: f64,
    /// Relative residual of the worst channel fit.
    pub residual: f64,
}

/// Estimates `r_max²` from the stored tails.
///
/// Each stride-2 tail obeys a linear recurrence whose characteristic roots
/// are the nonzero eigenvalues of `E_M²`. The recurrence is fitted by least
/// squares at the lowest order that reproduces the data, and the largest
/// root modulus is reported. Terminated (exact) kernels decay at rate 0.
pub fn decay_rate(k: &ScatteringKernels) -> Result<DecayEstimate> {
    if k.is_exact() {
        return Ok(DecayEstimate {
            ratio_sq: 0.0,
            rate: 0.0,
            residual: 0.0,
        });
    }
    for ch in Channel::ALL {
        let kern = k.channel(ch);
        if !kern.is_exact() && kern.nonzero_count() < MIN_DECAY_TERMS {
            return Err(Error::TooFewTerms {
                channel: ch.name(),
                found: kern.nonzero_count(),
                needed: MIN_DECAY_TERMS,
            });
        }
    }
    let max_order = k.m().saturating_sub(1).max(1);
    let mut best_ratio: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for ch in Channel::ALL {
        let kern = k.channel(ch);
        if kern.is_exact() {
            continue;
        }
        // The leading term of b and c and the kernel part of E contribute
        // only to the first entries.
        let tail = &kern.values()[2.min(kern.len())..];
        let (ratio, residual) = prony_max_root(tail, max_order)?;
        best_ratio = best_ratio.max(ratio);
        worst_residual = worst_residual.max(residual);
    }
    Ok(DecayEstimate {
        ratio_sq: best_ratio,
        rate: best_ratio.sqrt(),
        residual: worst_residual,
    })
}

/// Relative residual below which a recurrence order is accepted.
const PRONY_ACCEPT: f64 = 1e-9;

fn prony_max_root(s: &[Complex64], max_order: usize) -> Result<(f64, f64)> {
    let mut fallback: Option<(f64, f64)> = None;
    for p in 1..=max_order {
        if s.len() < 2 * p + 1 {
            break;
        }
        let rows = s.len() - p;
        let mut a = CMatrix::zeros(rows, p);
        let mut y = vec![ZERO; rows];
        for r in 0..rows {
            for j in 0..p {
                a[(r, j)] = s[r + p - 1 - j];
            }
            y[r] = s[r + p];
        }
        let alpha = match least_squares(&a, &y) {
            Ok(v) => v,
            Err(numerics::LinalgError::Singular { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        let fit = a.mul_vec(&alpha)?;
        let num: f64 = fit.iter().zip(&y).map(|(f, t)| (f - t).norm_sqr()).sum();
        let den: f64 = y.iter().map(|t| t.norm_sqr()).sum();
        let residual = if den == 0.0 { 0.0 } else { (num / den).sqrt() };
        // Roots of z^p − α₁ z^{p−1} − … − α_p.
        let mut comp = CMatrix::zeros(p, p);
        for j in 0..p {
            comp[(0, j)] = alpha[j];
        }
        for i in 1..p {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        let radius = numerics::spectral_radius(&comp)?;
        if residual < PRONY_ACCEPT {
            return Ok((radius, residual));
        }
        if fallback.is_none_or(|(_, r)| residual < r) {
            fallback = Some((radius, residual));
        }
    }
    match fallback {
        Some(v) => Ok(v),
        None => Err(Error::TooFewTerms {
            channel: "tail",
            found: s.len(),
            needed: 3,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn model(coin: Coin, m: usize) -> ImpurityModel {
        ImpurityModel::new(coin, m).unwrap()
    }

    fn sample_coin() -> Coin {
        Coin::from_angles(0.37, 1.1, -0.4, 0.83)
    }

    #[test]
    fn single_site_kernels_are_the_coin() {
        let coin = sample_coin();
        let k = kernels(&model(coin, 1), DEFAULT_TOL).unwrap();
        assert!(k.is_exact());
        assert_eq!(k.error_bound(), 0.0);
        assert_eq!(k.a().values(), &[coin.a()]);
        assert_eq!(k.b().values(), &[coin.b()]);
        assert_eq!(k.c().values(), &[coin.c()]);
        assert_eq!(k.d().values(), &[coin.d()]);
        assert_eq!(k.c().first_offset(), 0);
    }

    #[test]
    fn two_site_kernels_follow_geometric_law() {
        let coin = sample_coin();
        let k = kernels(&model(coin, 2), DEFAULT_TOL).unwrap();
        let (a, b, c, d) = (coin.a(), coin.b(), coin.c(), coin.d());
        let bc = b * c;
        assert_eq!(k.b().get(0), b);
        for j in 1..10u32 {
            let o = 2 * j as i64;
            assert!((k.b().get(o) - a * d * b * bc.powu(j - 1)).norm() < 1e-15);
            assert!((k.d().get(-o) - d * d * bc.powu(j)).norm() < 1e-15);
            assert!((k.a().get(o) - a * a * bc.powu(j)).norm() < 1e-15);
        }
        assert_eq!(k.a().get(1), ZERO);
        assert_eq!(k.a().get(-2), ZERO);
    }

    #[test]
    fn free_coin_is_exact_identity() {
        for m in 1..=5 {
            let k = kernels(&model(Coin::identity(), m), DEFAULT_TOL).unwrap();
            assert!(k.is_exact());
            assert_eq!(k.a().values(), &[Complex64::new(1.0, 0.0)]);
            assert_eq!(k.d().values(), &[Complex64::new(1.0, 0.0)]);
            assert!(k.b().values().iter().all(|v| *v == ZERO));
            assert!(k.c().values().iter().all(|v| *v == ZERO));
            let psi = WaveState::delta(3, Chirality::R);
            assert_eq!(k.apply(&psi).max_abs_diff(&psi), 0.0);
        }
    }

    #[test]
    fn single_site_delta_response() {
        let coin = sample_coin();
        for x in -4..=4 {
            let out = sigma_apply_delta(&model(coin, 1), x, Chirality::R, DEFAULT_TOL).unwrap();
            assert_eq!(out.get(-x, Chirality::L), coin.b());
            assert_eq!(out.get(x, Chirality::R), coin.d());
        }
    }

    #[test]
    fn three_site_hadamard_leading_transmission() {
        let out =
            sigma_apply_delta(&model(Coin::hadamard(), 3), 0, Chirality::R, DEFAULT_TOL).unwrap();
        let want = -FRAC_1_SQRT_2.powi(3);
        assert!((out.get(0, Chirality::R) - Complex64::new(want, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn apply_matches_delta_and_is_linear() {
        let k = kernels(&model(sample_coin(), 3), DEFAULT_TOL).unwrap();
        let d = k.apply_delta(2, Chirality::L);
        assert!(k.apply(&WaveState::delta(2, Chirality::L)).max_abs_diff(&d) < 1e-15);
        let psi = WaveState::from_fn(-2, 3, |x| {
            [
                Complex64::new(x as f64, 0.5),
                Complex64::new(0.2, -(x as f64)),
            ]
        });
        let phi = WaveState::from_fn(0, 4, |x| [Complex64::new(1.0, x as f64), ZERO]);
        let (al, be) = (Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5));
        let lhs = k.apply(&psi.combine(al, &phi, be));
        let rhs = k.apply(&psi).combine(al, &k.apply(&phi), be);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let ratio = k.apply(&psi).norm() / psi.norm();
        assert!((ratio - 1.0).abs() <= 10.0 * k.error_bound() + 1e-13);
    }

    #[test]
    fn theta_closed_form_matches_power() {
        for coin in [Coin::hadamard(), sample_coin()] {
            assert!(
                closed_form_m3_theta_power(&coin, 0)
                    .unwrap()
                    .max_abs_diff(&CMatrix::identity(2))
                    .unwrap()
                    < 1e-15
            );
            for k in 1..12 {
                let got = closed_form_m3_theta_power(&coin, k).unwrap();
                let want = theta_power(&coin, k);
                assert!(got.max_abs_diff(&want).unwrap() < 1e-12, "k = {k}");
            }
        }
        assert!(closed_form_m3_theta_power(&Coin::identity(), 2).is_err());
    }

    #[test]
    fn closed_forms_match_general_kernels() {
        for coin in [Coin::hadamard(), sample_coin(), Coin::identity()] {
            for m in 1..=3 {
                let md = model(coin, m);
                let k = kernels(&md, 1e-14).unwrap();
                for ch in Channel::ALL {
                    for (o, v) in k.channel(ch).iter() {
                        let cf = closed_form_value(&md, ch, o).unwrap();
                        assert!((cf - v).norm() < 1e-12, "M={m} {ch} offset {o}");
                    }
                }
            }
        }
        assert!(closed_form_value(&model(sample_coin(), 4), Channel::A, 0).is_err());
    }

    #[test]
    fn decay_rates_small_blocks() {
        let h = |m| kernels(&model(Coin::hadamard(), m), DEFAULT_TOL).unwrap();
        assert!((decay_rate(&h(2)).unwrap().ratio_sq - 0.5).abs() < 1e-8);
        assert!((decay_rate(&h(3)).unwrap().ratio_sq - FRAC_1_SQRT_2).abs() < 1e-6);
        assert_eq!(decay_rate(&h(1)).unwrap().ratio_sq, 0.0);
    }

    #[test]
    fn decay_rate_needs_terms() {
        let k = kernels(&model(Coin::hadamard(), 2), 1e-2).unwrap();
        assert!(matches!(decay_rate(&k), Err(Error::TooFewTerms { .. })));
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(
            kernels(&model(Coin::hadamard(), 2), 0.0),
            Err(Error::BadTolerance(_))
        ));
    }
}
