//! Brute-force ground truth by direct time evolution.
//!
//! [`brute_sigma_delta`] realises `U_0^{−t} U^{t+s} U_0^{−s}` literally, and
//! [`stationary_state_run`] launches truncated plane waves at the impurity and
//! reads off the outgoing amplitudes. Both rely only on the walk module.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impurity::ImpurityMatrix;
use crate::scattering::{kernels_for, ScatteringKernels};
use crate::smatrix::SMatrix;
use crate::walk::{evolve, free_shift, step_u, Chirality, Generator, ImpurityModel, WaveState};

/// Upper limit on `t = s` in [`brute_sigma_converged`].
pub const MAX_BRUTE_STEPS: u64 = 10_000;

/// Upper limit on the default stationary run length.
pub const MAX_STATIONARY_STEPS: usize = 5000;

/// Target accuracy behind [`default_stationary_steps`].
pub const STATIONARY_TARGET: f64 = 1e-8;

/// Kernel truncation never looser than this in [`compare_sigma`].
pub const COMPARE_KERNEL_TOL: f64 = 1e-12;

/// `U_0^{−s} U^{t+s} U_0^{−t} δ_x |J⟩`, applied right to left.
///
/// The free inverse `U_0^{−t}` runs first, as in the step-by-step argument
/// for `Σ_M = lim U_0^{−t} U^{t+s} U_0^{−s}`; the two free factors commute
/// with the limit, so the order only fixes which side is truncated.
pub fn brute_sigma_delta(model: &ImpurityModel, x: i64, j: Chirality, t: u64, s: u64) -> WaveState {
    let start = free_shift(&WaveState::delta(x, j), -(t as i64));
    let mut cur = start;
    for _ in 0..t + s {
        // Dropping negligible edge sites keeps the free flight at one site.
        cur = step_u(&cur, model).trimmed(f64::MIN_POSITIVE);
    }
    free_shift(&cur, -(s as i64))
}

/// A brute-force run with its step count and a-priori error scale.
#[derive(Debug, Clone)]
pub struct BruteRun {
    pub state: WaveState,
    /// `t = s`.
    pub steps: u64,
    /// `r_max^{t − |x| − M}`, or zero when the run is exact.
    pub error_scale: f64,
}

/// `t = s = |x| + M + ⌈ln tol / ln r_max⌉`, or `|x| + 2M` when `E_M` is nilpotent.
pub fn converged_steps(e: &ImpurityMatrix, x: i64, tol: f64) -> Result<u64> {
    if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
        return Err(Error::BadTolerance(tol));
    }
    let r = e.require_convergent()?;
    let m = e.m() as f64;
    let ax = x.unsigned_abs() as f64;
    let needed = if r == 0.0 {
        ax + 2.0 * m
    } else {
        ax + m + (tol.ln() / r.ln()).ceil()
    };
    if needed > MAX_BRUTE_STEPS as f64 {
        return Err(Error::StepCapExceeded {
            needed: needed.min(u64::MAX as f64) as u64,
            cap: MAX_BRUTE_STEPS,
        });
    }
    Ok(needed as u64)
}

/// [`brute_sigma_delta`] with `t = s` from [`converged_steps`].
pub fn brute_sigma_converged(
    model: &ImpurityModel,
    x: i64,
    j: Chirality,
    tol: f64,
) -> Result<BruteRun> {
    brute_converged_for(&ImpurityMatrix::new(model), x, j, tol)
}

fn brute_converged_for(e: &ImpurityMatrix, x: i64, j: Chirality, tol: f64) -> Result<BruteRun> {
    let steps = converged_steps(e, x, tol)?;
    let r = e.spectral_radius()?;
    let exponent = steps as f64 - x.unsigned_abs() as f64 - e.m() as f64;
    let error_scale = if r == 0.0 { 0.0 } else { r.powf(exponent) };
    Ok(BruteRun {
        state: brute_sigma_delta(e.model(), x, j, steps, steps),
        steps,
        error_scale,
    })
}

/// The truncated plane wave
/// `Ψ_0(x) = α_L e^{iξ(x−(M−1))} |L⟩` for `x ≥ M−1` and `α_R e^{iξ|x|} |R⟩` for `x ≤ 0`,
/// on `[lo, hi]`.
pub fn plane_wave(
    model: &ImpurityModel,
    xi: f64,
    alpha: [Complex64; 2],
    lo: i64,
    hi: i64,
) -> WaveState {
    let last = model.m() as i64 - 1;
    WaveState::from_fn(lo, hi, |x| {
        let l = if x >= last {
            alpha[0] * Complex64::from_polar(1.0, xi * (x - last) as f64)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let r = if x <= 0 {
            alpha[1] * Complex64::from_polar(1.0, xi * x.unsigned_abs() as f64)
        } else {
            Complex64::new(0.0, 0.0)
        };
        [l, r]
    })
}

/// Half-width of the window for an `n`-step plane-wave run.
fn stationary_window(model: &ImpurityModel, n: usize) -> (i64, i64) {
    let n = n as i64;
    (-(n + 2), model.m() as i64 - 1 + n + 2)
}

/// Outgoing amplitudes `β_L = e^{−iξn} Ψ_n(−1; L)` and `β_R = e^{−iξn} Ψ_n(M; R)`.
///
/// The window `[−(n+2), M−1+n+2]` keeps both observation sites inside the
/// causal cone of the initial data, so the truncation never reaches them.
pub fn stationary_state_run(
    model: &ImpurityModel,
    xi: f64,
    alpha: [Complex64; 2],
    n: usize,
) -> (Complex64, Complex64) {
    *stationary_trace(model, xi, alpha, n)
        .last()
        .expect("trace includes n = 0")
}

/// `(β_L, β_R)` after each of `0, 1, …, n` steps, from a single run.
pub fn stationary_trace(
    model: &ImpurityModel,
    xi: f64,
    alpha: [Complex64; 2],
    n: usize,
) -> Vec<(Complex64, Complex64)> {
    let (lo, hi) = stationary_window(model, n);
    stationary_trace_on(model, xi, alpha, n, lo, hi)
}

fn stationary_trace_on(
    model: &ImpurityModel,
    xi: f64,
    alpha: [Complex64; 2],
    n: usize,
    lo: i64,
    hi: i64,
) -> Vec<(Complex64, Complex64)> {
    let m = model.m() as i64;
    let mut psi = plane_wave(model, xi, alpha, lo, hi);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let phase = Complex64::from_polar(1.0, -xi * k as f64);
        out.push((
            phase * psi.get(-1, Chirality::L),
            phase * psi.get(m, Chirality::R),
        ));
        if k < n {
            psi = step_u(&psi, model);
        }
    }
    out
}

/// As [`stationary_state_run`] on a caller-chosen window `[lo, hi]`.
///
/// Any window containing the default one gives bit-identical results.
pub fn stationary_state_run_on(
    model: &ImpurityModel,
    xi: f64,
    alpha: [Complex64; 2],
    n: usize,
    lo: i64,
    hi: i64,
) -> (Complex64, Complex64) {
    *stationary_trace_on(model, xi, alpha, n, lo, hi)
        .last()
        .expect("trace includes n = 0")
}

/// `n = 2M + ⌈ln 10⁻⁸ / ln r_max⌉`, capped at 5000; `2M` when `E_M` is nilpotent.
pub fn default_stationary_steps(model: &ImpurityModel) -> Result<usize> {
    let e = ImpurityMatrix::new(model);
    let r = e.require_convergent()?;
    let base = 2 * model.m();
    if r == 0.0 {
        return Ok(base);
    }
    let extra = (STATIONARY_TARGET.ln() / r.ln()).ceil();
    Ok(((base as f64 + extra) as usize).min(MAX_STATIONARY_STEPS))
}

/// `‖e^{iξ}[β_L, β_R]ᵀ − S̃_M(ξ)[α_L, α_R]ᵀ‖` after every step up to `n`.
pub fn stationary_residuals(
    model: &ImpurityModel,
    xi: f64,
    alpha: [Complex64; 2],
    n: usize,
) -> Result<Vec<f64>> {
    let st = SMatrix::new(model)?.stilde(xi)?;
    let target = st.mul_vec(&alpha)?;
    let e = Complex64::from_polar(1.0, xi);
    Ok(stationary_trace(model, xi, alpha, n)
        .into_iter()
        .map(|(bl, br)| ((e * bl - target[0]).norm_sqr() + (e * br - target[1]).norm_sqr()).sqrt())
        .collect())
}

/// Geometric ratio per two steps fitted to `ln residual` over even `n`.
///
/// Only samples with `n ≥ start` and residual above `floor` enter the fit.
pub fn fitted_decay_ratio(residuals: &[f64], start: usize, floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = residuals
        .iter()
        .enumerate()
        .filter(|&(n, &r)| n >= start && n % 2 == 0 && r > floor)
        .map(|(n, &r)| (n as f64 / 2.0, r.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

/// `‖U Φ_n − e^{iξ} Φ_n‖` on `[−w, M−1+w]` with `Φ_n = e^{−iξn} Ψ_n`.
pub fn eigenfunction_residual(
    model: &ImpurityModel,
    xi: f64,
    alpha: [Complex64; 2],
    n: usize,
    w: usize,
) -> f64 {
    let (lo, hi) = stationary_window(model, n + 1);
    let mut psi = plane_wave(model, xi, alpha, lo - w as i64, hi + w as i64);
    psi = evolve(&psi, model, n as i64, Generator::U);
    let next = step_u(&psi, model);
    let e = Complex64::from_polar(1.0, xi);
    let w = w as i64;
    let mut acc = 0.0;
    for x in -w..=model.m() as i64 - 1 + w {
        let a = next.at(x);
        let b = psi.at(x);
        acc += (a[0] - e * b[0]).norm_sqr() + (a[1] - e * b[1]).norm_sqr();
    }
    acc.sqrt()
}

/// Largest discrepancy for one input `δ_x |J⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareEntry {
    pub x: i64,
    pub chirality: Chirality,
    pub max_diff: f64,
    /// Output site where the difference is largest.
    pub worst_site: (i64, Chirality),
    /// `t = s` used by the brute-force run.
    pub steps: u64,
}

/// Brute force against the kernels over a list of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub entries: Vec<CompareEntry>,
    pub max_diff: f64,
    /// `ε_K` of the kernels used.
    pub kernel_error_bound: f64,
}

impl CompareReport {
    pub fn worst(&self) -> Option<&CompareEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.max_diff.total_cmp(&b.max_diff))
    }
}

fn worst_difference(a: &WaveState, b: &WaveState) -> (f64, (i64, Chirality)) {
    let lo = a.x_min().min(b.x_min());
    let hi = a.x_max().max(b.x_max());
    let mut best = (0.0, (lo, Chirality::L));
    for x in lo..=hi {
        let (u, v) = (a.at(x), b.at(x));
        for j in Chirality::BOTH {
            let d = (u[j.index()] - v[j.index()]).norm();
            if d > best.0 {
                best = (d, (x, j));
            }
        }
    }
    best
}

/// Compares [`brute_sigma_converged`] at `tol` with the kernels at
/// `min(tol, 1e−12)` for every `x` in `xs` and both chiralities.
///
/// Inputs run on separate threads; the report keeps input order.
pub fn compare_sigma(model: &ImpurityModel, xs: &[i64], tol: f64) -> Result<CompareReport> {
    let e = ImpurityMatrix::new(model);
    let k = kernels_for(&e, tol.min(COMPARE_KERNEL_TOL))?;
    let _ = e.spectral_radius()?;
    let jobs: Vec<(i64, Chirality)> = xs
        .iter()
        .flat_map(|&x| Chirality::BOTH.map(|j| (x, j)))
        .collect();
    let results: Vec<Result<CompareEntry>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(x, j)| {
                let e = &e;
                let k = &k;
                scope.spawn(move || compare_one(e, k, x, j, tol))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("comparison thread panicked"))
            .collect()
    });
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_diff = entries.iter().map(|c| c.max_diff).fold(0.0, f64::max);
    Ok(CompareReport {
        entries,
        max_diff,
        kernel_error_bound: k.error_bound(),
    })
}

fn compare_one(
    e: &ImpurityMatrix,
    k: &ScatteringKernels,
    x: i64,
    j: Chirality,
    tol: f64,
) -> Result<CompareEntry> {
    let brute = brute_converged_for(e, x, j, tol)?;
    let closed = k.apply_delta(x, j);
    let (max_diff, worst_site) = worst_difference(&brute.state, &closed);
    Ok(CompareEntry {
        x,
        chirality: j,
        max_diff,
        worst_site,
        steps: brute.steps,
    })
}

/// Quasi-momenta used by the verification routines.
pub const SAMPLE_XI: [f64; 3] = [PI / 5.0, PI / 3.0, 1.0];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::{closed_form_value, Channel};
    use crate::walk::Coin;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn model(coin: Coin, m: usize) -> ImpurityModel {
        ImpurityModel::new(coin, m).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_site_finite_time_is_exact() {
        let coin = Coin::hadamard();
        let out = brute_sigma_delta(&model(coin, 1), -3, Chirality::R, 20, 20);
        assert_eq!(out.support().len(), 2);
        assert!((out.get(3, Chirality::L) - coin.b()).norm() < 1e-15);
        assert!((out.get(-3, Chirality::R) - coin.d()).norm() < 1e-15);
    }

    #[test]
    fn free_coin_is_identity() {
        let md = model(Coin::identity(), 3);
        for (x, j) in [(0, Chirality::L), (-4, Chirality::R), (7, Chirality::L)] {
            let out = brute_sigma_delta(&md, x, j, 9, 5);
            assert_eq!(out.max_abs_diff(&WaveState::delta(x, j)), 0.0);
        }
    }

    #[test]
    fn two_site_hadamard_matches_closed_form() {
        let md = model(Coin::hadamard(), 2);
        let out = brute_sigma_delta(&md, 0, Chirality::R, 60, 60);
        for k in 0..20i64 {
            let want_l = closed_form_value(&md, Channel::B, 2 * k).unwrap();
            let want_r = closed_form_value(&md, Channel::D, -2 * k).unwrap();
            assert!((out.get(2 * k, Chirality::L) - want_l).norm() < 1e-9);
            assert!((out.get(-2 * k, Chirality::R) - want_r).norm() < 1e-9);
        }
    }

    #[test]
    fn step_count_rule() {
        let e = ImpurityMatrix::new(&model(Coin::hadamard(), 2));
        assert_eq!(converged_steps(&e, 0, 1e-10).unwrap(), 2 + 67);
        assert_eq!(converged_steps(&e, -3, 1e-10).unwrap(), 3 + 2 + 67);
        let free = ImpurityMatrix::new(&model(Coin::identity(), 4));
        assert_eq!(converged_steps(&free, 5, 1e-10).unwrap(), 5 + 8);
        let slow = Coin::from_angles(0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2 - 1e-4);
        let e = ImpurityMatrix::new(&model(slow, 4));
        assert!(matches!(
            converged_steps(&e, 0, 1e-10),
            Err(Error::StepCapExceeded { .. })
        ));
    }

    #[test]
    fn converged_output_has_unit_norm() {
        let run =
            brute_sigma_converged(&model(Coin::hadamard(), 3), 1, Chirality::L, 1e-10).unwrap();
        assert!((run.state.norm() - 1.0).abs() < 1e-10);
        assert!(run.error_scale <= 1e-10);
    }

    #[test]
    fn stationary_free_walk() {
        let xi = 0.7;
        let md = model(Coin::identity(), 3);
        let (bl, br) = stationary_state_run(&md, xi, [c(0.0, 0.0), c(1.0, 0.0)], 12);
        assert!(bl.norm() < 1e-15);
        let st = SMatrix::new(&md).unwrap().stilde(xi).unwrap();
        let e = Complex64::from_polar(1.0, xi);
        assert!((e * br - st[(1, 1)]).norm() < 1e-14);
    }

    #[test]
    fn stationary_two_site_hadamard() {
        let md = model(Coin::hadamard(), 2);
        let n = default_stationary_steps(&md).unwrap();
        let res = stationary_residuals(&md, PI / 5.0, [c(0.0, 0.0), c(1.0, 0.0)], n).unwrap();
        assert!(*res.last().unwrap() < 1e-7);
        let ratio = fitted_decay_ratio(&res, 4, 1e-13).unwrap();
        assert!(ratio <= 0.5 + 0.05, "ratio {ratio}");
    }

    #[test]
    fn stationary_window_is_causal() {
        let md = model(Coin::hadamard(), 3);
        let alpha = [c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)];
        let n = 40;
        let base = stationary_state_run(&md, 1.0, alpha, n);
        let (lo, hi) = stationary_window(&md, n);
        let wide = stationary_state_run_on(&md, 1.0, alpha, n, 2 * lo, 2 * hi);
        assert_eq!(base, wide);
    }

    #[test]
    fn eigenfunction_residual_decays() {
        let md = model(Coin::hadamard(), 2);
        let alpha = [c(1.0, 0.0), c(0.0, 0.0)];
        let early = eigenfunction_residual(&md, 1.0, alpha, 6, 3);
        let late = eigenfunction_residual(&md, 1.0, alpha, 60, 3);
        assert!(late < 1e-8 && late < early);
    }

    #[test]
    fn compare_small_blocks() {
        for m in 1..=3 {
            let rep = compare_sigma(&model(Coin::hadamard(), m), &[-2, 0, 3], 1e-10).unwrap();
            assert_eq!(rep.entries.len(), 6);
            assert!(rep.max_diff < 1e-8, "M={m}: {}", rep.max_diff);
        }
        let free = compare_sigma(&model(Coin::identity(), 3), &[-1, 2], 1e-10).unwrap();
        assert_eq!(free.max_diff, 0.0);
    }
}
