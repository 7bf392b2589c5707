use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use qwscatter::impurity::{ImpurityMatrix, KERNEL_SV_THRESHOLD};
use qwscatter::oracle::{compare_sigma, stationary_residuals, MAX_STATIONARY_STEPS, SAMPLE_XI};
use qwscatter::scattering::{kernels_for, Channel};
use qwscatter::smatrix::{unitarity_defect, SMatrix};
use qwscatter::walk::{Coin, ImpurityModel};
use qwscatter::{Error, Result};
use serde_json::{json, Map, Value};

use crate::render::{complex, csv_row, float, json as to_json, num};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rendered output and whether every check passed.
pub struct Report {
    pub text: String,
    pub passed: bool,
}

impl Report {
    fn ok(text: String) -> Self {
        Report { text, passed: true }
    }
}

fn header(coin: &Coin, m: usize) -> Map<String, Value> {
    let mut h = Map::new();
    h.insert("M".into(), json!(m));
    h.insert(
        "coin".into(),
        Value::Array(coin.entries().into_iter().map(complex).collect()),
    );
    h
}

fn xi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -PI + TAU * i as f64 / n as f64).collect()
}

pub fn spectrum(model: &ImpurityModel, format: Format) -> Result<Report> {
    let e = ImpurityMatrix::new(model);
    let ev = e.eigenvalues()?;
    let r = e.spectral_radius()?;
    let dim = e.kernel_dimension(KERNEL_SV_THRESHOLD)?;
    let kappa = e.kernel_vectors().residual(&e)?;
    let text = match format {
        Format::Csv => {
            let mut s = csv_row(["index", "re", "im", "modulus"]);
            for (i, z) in ev.iter().enumerate() {
                s += &csv_row([i.to_string(), float(z.re), float(z.im), float(z.norm())]);
            }
            s
        }
        Format::Json => {
            let mut h = header(model.coin(), model.m());
            h.insert(
                "eigenvalues".into(),
                Value::Array(ev.into_iter().map(complex).collect()),
            );
            h.insert("spectral_radius".into(), num(r));
            h.insert("spectral_radius_squared".into(), num(r * r));
            h.insert(
                "kernel".into(),
                json!({
                    "dimension": dim,
                    "expected": 2,
                    "kappa_residual": num(kappa),
                    "ok": dim == 2,
                }),
            );
            to_json(&Value::Object(h))
        }
    };
    Ok(Report::ok(text))
}

pub fn kernels(model: &ImpurityModel, tol: f64, format: Format) -> Result<Report> {
    let e = ImpurityMatrix::new(model);
    let k = kernels_for(&e, tol)?;
    let rows: Vec<(i64, Channel, Complex64)> = Channel::ALL
        .into_iter()
        .flat_map(|ch| {
            k.channel(ch)
                .iter()
                .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
                .map(move |(o, v)| (o, ch, v))
                .collect::<Vec<_>>()
        })
        .collect();
    let text = match format {
        Format::Csv => {
            let mut s = csv_row(["offset", "channel", "re", "im"]);
            for (o, ch, v) in rows {
                s += &csv_row([
                    o.to_string(),
                    ch.name().to_owned(),
                    float(v.re),
                    float(v.im),
                ]);
            }
            s
        }
        Format::Json => {
            let mut h = header(model.coin(), model.m());
            h.insert("tol".into(), num(tol));
            h.insert("spectral_radius".into(), num(k.spectral_radius()));
            h.insert("error_bound".into(), num(k.error_bound()));
            h.insert("truncation_length".into(), json!(k.truncation_length()));
            h.insert("exact".into(), json!(k.is_exact()));
            let entries = rows
                .into_iter()
                .map(|(o, ch, v)| json!({"offset": o, "channel": ch.name(), "value": complex(v)}))
                .collect();
            h.insert("entries".into(), Value::Array(entries));
            to_json(&Value::Object(h))
        }
    };
    Ok(Report::ok(text))
}

pub fn smatrix(model: &ImpurityModel, grid: usize, format: Format) -> Result<Report> {
    if grid == 0 {
        return Err(Error::GridTooSmall { size: 0, min: 1 });
    }
    let s = SMatrix::new(model)?;
    let mut rows = Vec::with_capacity(grid);
    for xi in xi_grid(grid) {
        let (at, neg) = s.pair(xi)?;
        rows.push((xi, unitarity_defect(&at, &neg), at));
    }
    let text = match format {
        Format::Csv => {
            let mut out = csv_row([
                "xi",
                "a_re",
                "a_im",
                "b_re",
                "b_im",
                "c_re",
                "c_im",
                "d_re",
                "d_im",
                "T",
                "R",
                "unitarity_residual",
            ]);
            for (xi, defect, p) in &rows {
                let mut f = vec![float(*xi)];
                for z in p.entries() {
                    f.push(float(z.re));
                    f.push(float(z.im));
                }
                f.push(float(p.transmission()));
                f.push(float(p.reflection()));
                f.push(float(*defect));
                out += &csv_row(f);
            }
            out
        }
        Format::Json => {
            let mut h = header(model.coin(), model.m());
            h.insert("grid".into(), json!(grid));
            let points = rows
                .iter()
                .map(|(xi, defect, p)| {
                    json!({
                        "xi": num(*xi),
                        "a": complex(p.a_hat),
                        "b": complex(p.b_hat),
                        "c": complex(p.c_hat),
                        "d": complex(p.d_hat),
                        "T": num(p.transmission()),
                        "R": num(p.reflection()),
                        "unitarity_residual": num(*defect),
                    })
                })
                .collect();
            h.insert("points".into(), Value::Array(points));
            to_json(&Value::Object(h))
        }
    };
    Ok(Report::ok(text))
}

pub fn resonances(model: &ImpurityModel, grid: usize, format: Format) -> Result<Report> {
    let found = SMatrix::new(model)?.resonance_scan(grid)?;
    let text = match format {
        Format::Csv => {
            let mut s = csv_row(["xi", "T", "perfect"]);
            for r in &found {
                s += &csv_row([float(r.xi), float(r.transmission), r.perfect.to_string()]);
            }
            s
        }
        Format::Json => to_json(&Value::Array(
            found
                .iter()
                .map(|r| json!({"xi": num(r.xi), "T": num(r.transmission), "perfect": r.perfect}))
                .collect(),
        )),
    };
    Ok(Report::ok(text))
}

/// Inputs `x ∈ [−4, 4]` for the brute-force comparison.
const VERIFY_SITES: std::ops::RangeInclusive<i64> = -4..=4;

/// Oracle runs use a tolerance this much tighter than the pass threshold.
const ORACLE_MARGIN: f64 = 1e-2;

pub fn verify(model: &ImpurityModel, tol: f64) -> Result<Report> {
    if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
        return Err(Error::BadTolerance(tol));
    }
    let e = ImpurityMatrix::new(model);
    let r = e.require_convergent()?;
    let xs: Vec<i64> = VERIFY_SITES.collect();
    let report = compare_sigma(model, &xs, tol * ORACLE_MARGIN)?;
    let sigma_ok = report.max_diff <= tol;

    let steps = if r == 0.0 {
        2 * model.m()
    } else {
        let extra = ((tol * ORACLE_MARGIN).ln() / r.ln()).ceil() as usize;
        (2 * model.m() + extra).min(MAX_STATIONARY_STEPS)
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let half = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let alphas = [[one, zero], [zero, one], [half, half]];
    let mut stationary = Vec::new();
    let mut worst_stationary = 0.0f64;
    for xi in SAMPLE_XI {
        for alpha in alphas {
            let res = stationary_residuals(model, xi, alpha, steps)?;
            let last = res[steps];
            worst_stationary = worst_stationary.max(last);
            stationary.push(json!({"xi": num(xi), "alpha": [complex(alpha[0]), complex(alpha[1])], "residual": num(last)}));
        }
    }
    let stationary_ok = worst_stationary <= tol;

    let worst = report.worst().map(|w| {
        json!({
            "x": w.x,
            "chirality": w.chirality.to_string(),
            "site": w.worst_site.0,
            "site_chirality": w.worst_site.1.to_string(),
            "diff": num(w.max_diff),
        })
    });
    let entries: Vec<Value> = report
        .entries
        .iter()
        .map(|c| {
            json!({
                "x": c.x,
                "chirality": c.chirality.to_string(),
                "max_diff": num(c.max_diff),
                "worst_site": [c.worst_site.0, c.worst_site.1.to_string()],
                "steps": c.steps,
            })
        })
        .collect();

    let passed = sigma_ok && stationary_ok;
    let mut h = header(model.coin(), model.m());
    h.insert("tol".into(), num(tol));
    h.insert("passed".into(), json!(passed));
    h.insert(
        "sigma".into(),
        json!({
            "passed": sigma_ok,
            "max_diff": num(report.max_diff),
            "kernel_error_bound": num(report.kernel_error_bound),
            "worst": worst,
            "entries": entries,
        }),
    );
    h.insert(
        "stationary".into(),
        json!({
            "passed": stationary_ok,
            "steps": steps,
            "max_residual": num(worst_stationary),
            "runs": stationary,
        }),
    );
    Ok(Report {
        text: to_json(&Value::Object(h)),
        passed,
    })
}
