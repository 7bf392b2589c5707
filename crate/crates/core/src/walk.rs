//! Coins, finitely supported states and exact time evolution.
//!
//! One step of the walk is
//! `(Uψ)(x) = P_{x+1} ψ(x+1) + Q_{x-1} ψ(x-1)` with `P_x = |L⟩⟨L| C_x` and
//! `Q_x = |R⟩⟨R| C_x`. The coin `C_x` is the impurity coin on `Γ_M = {0..M-1}`
//! and the identity elsewhere, so `L` moves left and `R` moves right.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, GramViolation, Result};

/// Unitarity tolerance on each entry of `C†C − I`.
pub const UNITARITY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Internal state: `L` moves toward `-∞`, `R` toward `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chirality {
    L,
    R,
}

impl Chirality {
    pub const BOTH: [Chirality; 2] = [Chirality::L, Chirality::R];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Chirality::L => 0,
            Chirality::R => 1,
        }
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chirality::L => "L",
            Chirality::R => "R",
        })
    }
}

/// A validated 2×2 unitary `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coin {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

/// Checks unitarity and returns the coin.
pub fn validate_coin(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Coin> {
    Coin::new(a, b, c, d)
}

impl Coin {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if ![a, b, c, d]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFiniteCoin);
        }
        // C†C, column by column.
        let gram = [
            [
                Complex64::new(a.norm_sqr() + c.norm_sqr(), 0.0),
                a.conj() * b + c.conj() * d,
            ],
            [
                b.conj() * a + d.conj() * c,
                Complex64::new(b.norm_sqr() + d.norm_sqr(), 0.0),
            ],
        ];
        let mut violations = Vec::new();
        for (i, row) in gram.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                let dev = (g - target).norm();
                if dev > UNITARITY_TOL {
                    violations.push(GramViolation {
                        row: i,
                        col: j,
                        deviation: dev,
                    });
                }
            }
        }
        if violations.is_empty() {
            Ok(Coin { a, b, c, d })
        } else {
            Err(Error::NonUnitaryCoin { violations })
        }
    }

    /// `2^{-1/2} [[1, 1], [1, -1]]`.
    pub fn hadamard() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Coin {
            a: h,
            b: h,
            c: h,
            d: -h,
        }
    }

    /// The identity coin; the walk is then free.
    pub fn identity() -> Self {
        Coin {
            a: ONE,
            b: ZERO,
            c: ZERO,
            d: ONE,
        }
    }

    /// `e^{i·phase} [[e^{iα} cos φ, e^{iβ} sin φ], [-e^{-iβ} sin φ, e^{-iα} cos φ]]`.
    ///
    /// Every element of U(2) has this form, so uniform angles give a
    /// convenient source of test coins.
    pub fn from_angles(phase: f64, alpha: f64, beta: f64, phi: f64) -> Self {
        let g = Complex64::from_polar(1.0, phase);
        let (s, c) = phi.sin_cos();
        Coin {
            a: g * Complex64::from_polar(c, alpha),
            b: g * Complex64::from_polar(s, beta),
            c: -g * Complex64::from_polar(s, -beta),
            d: g * Complex64::from_polar(c, -alpha),
        }
    }

    #[inline]
    pub fn a(&self) -> Complex64 {
        self.a
    }
    #[inline]
    pub fn b(&self) -> Complex64 {
        self.b
    }
    #[inline]
    pub fn c(&self) -> Complex64 {
        self.c
    }
    #[inline]
    pub fn d(&self) -> Complex64 {
        self.d
    }

    /// Determinant `Δ = ad − bc`.
    pub fn delta(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    #[inline]
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    #[inline]
    pub fn apply_adjoint(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.a.conj() * v[0] + self.c.conj() * v[1],
            self.b.conj() * v[0] + self.d.conj() * v[1],
        ]
    }
}

/// A coin placed on the block `Γ_M = {0, …, M−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpurityModel {
    coin: Coin,
    m: usize,
}

impl ImpurityModel {
    pub fn new(coin: Coin, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyBlock);
        }
        Ok(ImpurityModel { coin, m })
    }

    #[inline]
    pub fn coin(&self) -> &Coin {
        &self.coin
    }

    /// Block length `M`.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// The coin at `x`, or `None` where the walk is free.
    #[inline]
    pub fn coin_at(&self, x: i64) -> Option<&Coin> {
        (x >= 0 && (x as u64) < self.m as u64).then_some(&self.coin)
    }
}

/// A state on the integer window `[x_min, x_max]`, zero outside it.
#[derive(Clone, PartialEq)]
pub struct WaveState {
    x_min: i64,
    amps: Vec<[Complex64; 2]>,
}

impl fmt::Debug for WaveState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveState")
            .field("window", &(self.x_min(), self.x_max()))
            .field("norm", &self.norm())
            .finish()
    }
}

impl WaveState {
    /// Zero state on `[x_min, x_max]`; an inverted window is widened to one site.
    pub fn zeros(x_min: i64, x_max: i64) -> Self {
        let len = (x_max - x_min + 1).max(1) as usize;
        WaveState {
            x_min,
            amps: vec![[ZERO; 2]; len],
        }
    }

    /// `δ_x |J⟩`.
    pub fn delta(x: i64, j: Chirality) -> Self {
        let mut s = WaveState::zeros(x, x);
        s.amps[0][j.index()] = ONE;
        s
    }

    /// State with amplitudes `f(x)` on `[x_min, x_max]`.
    pub fn from_fn(x_min: i64, x_max: i64, mut f: impl FnMut(i64) -> [Complex64; 2]) -> Self {
        let mut s = WaveState::zeros(x_min, x_max);
        for (k, slot) in s.amps.iter_mut().enumerate() {
            *slot = f(x_min + k as i64);
        }
        s
    }

    #[inline]
    pub fn x_min(&self) -> i64 {
        self.x_min
    }

    #[inline]
    pub fn x_max(&self) -> i64 {
        self.x_min + self.amps.len() as i64 - 1
    }

    pub fn window(&self) -> (i64, i64) {
        (self.x_min(), self.x_max())
    }

    /// Both components at `x`; zero outside the window.
    #[inline]
    pub fn at(&self, x: i64) -> [Complex64; 2] {
        let k = x - self.x_min;
        if k < 0 || k as usize >= self.amps.len() {
            [ZERO; 2]
        } else {
            self.amps[k as usize]
        }
    }

    #[inline]
    pub fn get(&self, x: i64, j: Chirality) -> Complex64 {
        self.at(x)[j.index()]
    }

    /// Grows the window as needed and overwrites one amplitude.
    pub fn set(&mut self, x: i64, j: Chirality, value: Complex64) {
        self.ensure(x);
        let k = (x - self.x_min) as usize;
        self.amps[k][j.index()] = value;
    }

    /// Grows the window as needed and adds to one amplitude.
    pub fn add_at(&mut self, x: i64, j: Chirality, value: Complex64) {
        self.ensure(x);
        let k = (x - self.x_min) as usize;
        self.amps[k][j.index()] += value;
    }

    fn ensure(&mut self, x: i64) {
        if x < self.x_min {
            let extra = (self.x_min - x) as usize;
            let mut grown = vec![[ZERO; 2]; extra];
            grown.extend_from_slice(&self.amps);
            self.amps = grown;
            self.x_min = x;
        } else if x > self.x_max() {
            let extra = (x - self.x_max()) as usize;
            self.amps.extend(std::iter::repeat_n([ZERO; 2], extra));
        }
    }

    /// `(x, [ψ_L(x), ψ_R(x)])` over the window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, [Complex64; 2])> + '_ {
        self.amps
            .iter()
            .enumerate()
            .map(move |(k, v)| (self.x_min + k as i64, *v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps
            .iter()
            .map(|v| v[0].norm_sqr() + v[1].norm_sqr())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &WaveState) -> Complex64 {
        let lo = self.x_min().max(other.x_min());
        let hi = self.x_max().min(other.x_max());
        (lo..=hi)
            .map(|x| {
                let u = self.at(x);
                let v = other.at(x);
                u[0].conj() * v[0] + u[1].conj() * v[1]
            })
            .sum()
    }

    /// `α·self + β·other` on the union of both windows.
    pub fn combine(&self, alpha: Complex64, other: &WaveState, beta: Complex64) -> WaveState {
        let lo = self.x_min().min(other.x_min());
        let hi = self.x_max().max(other.x_max());
        WaveState::from_fn(lo, hi, |x| {
            let u = self.at(x);
            let v = other.at(x);
            [alpha * u[0] + beta * v[0], alpha * u[1] + beta * v[1]]
        })
    }

    pub fn scale(&self, s: Complex64) -> WaveState {
        WaveState {
            x_min: self.x_min,
            amps: self.amps.iter().map(|v| [s * v[0], s * v[1]]).collect(),
        }
    }

    /// Largest componentwise difference, treating sites outside a window as zero.
    pub fn max_abs_diff(&self, other: &WaveState) -> f64 {
        let lo = self.x_min().min(other.x_min());
        let hi = self.x_max().max(other.x_max());
        (lo..=hi)
            .map(|x| {
                let u = self.at(x);
                let v = other.at(x);
                (u[0] - v[0]).norm().max((u[1] - v[1]).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Sites `(x, J)` whose amplitude is not exactly zero.
    pub fn support(&self) -> Vec<(i64, Chirality)> {
        let mut out = Vec::new();
        for (x, v) in self.iter() {
            for j in Chirality::BOTH {
                if v[j.index()] != ZERO {
                    out.push((x, j));
                }
            }
        }
        out
    }

    /// Drops edge sites with `|ψ_L|² + |ψ_R|² < threshold`, keeping at least one site.
    pub fn trimmed(&self, threshold: f64) -> WaveState {
        let small = |v: &[Complex64; 2]| v[0].norm_sqr() + v[1].norm_sqr() < threshold;
        let first = self.amps.iter().position(|v| !small(v));
        match first {
            None => WaveState::zeros(self.x_min, self.x_min),
            Some(lo) => {
                let hi = self.amps.iter().rposition(|v| !small(v)).unwrap_or(lo);
                WaveState {
                    x_min: self.x_min + lo as i64,
                    amps: self.amps[lo..=hi].to_vec(),
                }
            }
        }
    }
}

/// One step of `U`.
pub fn step_u(state: &WaveState, model: &ImpurityModel) -> WaveState {
    let mut out = WaveState::zeros(state.x_min() - 1, state.x_max() + 1);
    // Output index of site x is x - x_min + 1.
    for (k, v) in state.amps.iter().enumerate() {
        let x = state.x_min + k as i64;
        let w = match model.coin_at(x) {
            Some(c) => c.apply(*v),
            None => *v,
        };
        out.amps[k][0] += w[0];
        out.amps[k + 2][1] += w[1];
    }
    out
}

/// One step of `U† = U⁻¹`: `(U†φ)(x) = C_x† [φ_L(x−1), φ_R(x+1)]ᵀ`.
pub fn step_u_adj(state: &WaveState, model: &ImpurityModel) -> WaveState {
    WaveState::from_fn(state.x_min() - 1, state.x_max() + 1, |x| {
        let v = [
            state.get(x - 1, Chirality::L),
            state.get(x + 1, Chirality::R),
        ];
        match model.coin_at(x) {
            Some(c) => c.apply_adjoint(v),
            None => v,
        }
    })
}

/// One step of the free walk: `ψ'_L(x) = ψ_L(x+1)`, `ψ'_R(x) = ψ_R(x−1)`.
pub fn step_u0(state: &WaveState) -> WaveState {
    WaveState::from_fn(state.x_min() - 1, state.x_max() + 1, |x| {
        [
            state.get(x + 1, Chirality::L),
            state.get(x - 1, Chirality::R),
        ]
    })
}

/// Inverse free step: `ψ'_L(x) = ψ_L(x−1)`, `ψ'_R(x) = ψ_R(x+1)`.
pub fn step_u0_inv(state: &WaveState) -> WaveState {
    WaveState::from_fn(state.x_min() - 1, state.x_max() + 1, |x| {
        [
            state.get(x - 1, Chirality::L),
            state.get(x + 1, Chirality::R),
        ]
    })
}

/// Which evolution [`evolve`] iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    U,
    U0,
}

/// Applies the generator `n` times, or its inverse `|n|` times when `n < 0`.
pub fn evolve(state: &WaveState, model: &ImpurityModel, n: i64, generator: Generator) -> WaveState {
    let mut cur = state.clone();
    for _ in 0..n.unsigned_abs() {
        cur = match (generator, n >= 0) {
            (Generator::U, true) => step_u(&cur, model),
            (Generator::U, false) => step_u_adj(&cur, model),
            (Generator::U0, true) => step_u0(&cur),
            (Generator::U0, false) => step_u0_inv(&cur),
        };
    }
    cur
}

/// Free translation by `n` steps without growing the window per step.
pub fn free_shift(state: &WaveState, n: i64) -> WaveState {
    let lo = state.x_min() - n.abs();
    let hi = state.x_max() + n.abs();
    WaveState::from_fn(lo, hi, |x| {
        [
            state.get(x + n, Chirality::L),
            state.get(x - n, Chirality::R),
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_state() -> WaveState {
        WaveState::from_fn(-3, 4, |x| {
            let t = x as f64;
            [
                c((0.3 * t).sin(), 0.2 * t),
                c(0.5 - 0.1 * t, (1.1 * t).cos()),
            ]
        })
    }

    #[test]
    fn coin_validation() {
        assert!(validate_coin(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).is_ok());
        let h = c(FRAC_1_SQRT_2, 0.0);
        let had = validate_coin(h, h, h, -h).unwrap();
        assert!((had.delta() - c(-1.0, 0.0)).norm() < 1e-15);
        match validate_coin(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)) {
            Err(Error::NonUnitaryCoin { violations }) => {
                assert!(violations.iter().any(|v| v.row == 0 && v.col == 1));
                assert!(violations.iter().any(|v| v.row == 1 && v.col == 0));
                assert!(violations.iter().all(|v| v.row != v.col));
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn angle_coins_are_unitary() {
        for k in 0..20 {
            let t = k as f64;
            let coin = Coin::from_angles(0.3 * t, 1.7 * t, -0.9 * t, 0.41 * t);
            assert!(Coin::new(coin.a(), coin.b(), coin.c(), coin.d()).is_ok());
            assert!((coin.delta().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn free_walk_moves_right_chirality_right() {
        let model = ImpurityModel::new(Coin::identity(), 3).unwrap();
        let out = step_u(&WaveState::delta(0, Chirality::R), &model);
        assert_eq!(out.support(), vec![(1, Chirality::R)]);
        assert_eq!(out.get(1, Chirality::R), c(1.0, 0.0));
    }

    #[test]
    fn single_site_hadamard_two_steps() {
        let model = ImpurityModel::new(Coin::hadamard(), 1).unwrap();
        let out = evolve(&WaveState::delta(-1, Chirality::R), &model, 2, Generator::U);
        assert!((out.get(-1, Chirality::L) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((out.get(1, Chirality::R) - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(out.support().len(), 2);
    }

    #[test]
    fn zero_state_stays_zero() {
        let model = ImpurityModel::new(Coin::hadamard(), 2).unwrap();
        let out = step_u(&WaveState::zeros(-2, 2), &model);
        assert_eq!(out.norm(), 0.0);
        assert_eq!(out.window(), (-3, 3));
    }

    #[test]
    fn free_translations() {
        let s = evolve(
            &WaveState::delta(-2, Chirality::R),
            &ImpurityModel::new(Coin::identity(), 1).unwrap(),
            -5,
            Generator::U0,
        );
        assert_eq!(s.support(), vec![(-7, Chirality::R)]);
        let s = free_shift(&WaveState::delta(3, Chirality::L), -4);
        assert_eq!(s.support(), vec![(7, Chirality::L)]);
    }

    #[test]
    fn free_round_trip_is_exact() {
        let s = sample_state();
        let back = step_u0_inv(&step_u0(&s));
        assert_eq!(back.max_abs_diff(&s), 0.0);
    }

    #[test]
    fn adjoint_with_identity_coin_is_free_inverse() {
        let model = ImpurityModel::new(Coin::identity(), 2).unwrap();
        let s = sample_state();
        assert_eq!(step_u_adj(&s, &model), step_u0_inv(&s));
        assert_eq!(step_u(&s, &model), step_u0(&s));
    }

    #[test]
    fn unitary_round_trip_and_adjointness() {
        let model = ImpurityModel::new(Coin::hadamard(), 3).unwrap();
        let psi = sample_state();
        let phi = WaveState::from_fn(-1, 5, |x| {
            [c(0.1 * x as f64, 1.0), c(-0.7, 0.05 * x as f64)]
        });
        assert!(step_u_adj(&step_u(&psi, &model), &model).max_abs_diff(&psi) < 1e-12);
        let lhs = step_u(&phi, &model).inner(&psi);
        let rhs = phi.inner(&step_u_adj(&psi, &model));
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((step_u(&psi, &model).norm() - psi.norm()).abs() < 1e-12 * psi.norm());
    }

    #[test]
    fn evolve_conventions() {
        let model = ImpurityModel::new(Coin::hadamard(), 2).unwrap();
        let s = sample_state();
        assert_eq!(evolve(&s, &model, 0, Generator::U), s);
        assert_eq!(evolve(&s, &model, 1, Generator::U), step_u(&s, &model));
        let back = evolve(
            &evolve(&s, &model, 7, Generator::U),
            &model,
            -7,
            Generator::U,
        );
        assert!(back.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn trimming_keeps_interior() {
        let mut s = WaveState::zeros(-5, 5);
        s.set(-1, Chirality::L, c(1.0, 0.0));
        s.set(2, Chirality::R, c(0.0, 1.0));
        let t = s.trimmed(1e-30);
        assert_eq!(t.window(), (-1, 2));
        assert_eq!(t.max_abs_diff(&s), 0.0);
    }
}
