//! `qwscatter`: scattering data for a quantum walk with a block impurity.

mod coin_spec;
mod commands;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qwscatter::scattering::DEFAULT_TOL;
use qwscatter::walk::ImpurityModel;
use qwscatter::Error;
use serde_json::json;

use coin_spec::CoinSpec;
use commands::{Format, Report};

#[derive(Parser, Debug)]
#[command(
    name = "qwscatter",
    version,
    about = "Scattering data for a 1D two-state quantum walk with an impurity block"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// `hadamard`, `free`, or `a_re,a_im,b_re,b_im,c_re,c_im,d_re,d_im`.
    #[arg(long, allow_hyphen_values = true)]
    coin: String,
    /// Length of the impurity block.
    #[arg(short = 'M', value_name = "M")]
    m: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file, or `stdout`.
    #[arg(long, default_value = "stdout")]
    out: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues and spectral radius of E_M, with the kernel check.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Truncated scattering kernels.
    Kernels {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// S-matrix entries on a uniform ξ grid over [−π, π).
    Smatrix {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
    },
    /// Local maxima of the transmission probability.
    Resonances {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
    },
    /// Brute-force and stationary-state checks against the closed forms.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

enum Failure {
    Validation(String),
    Numeric(Error),
    Io(String),
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

fn classify(e: Error) -> Failure {
    match e {
        Error::NonUnitaryCoin { .. }
        | Error::NonFiniteCoin
        | Error::EmptyBlock
        | Error::IndexOutOfRange { .. }
        | Error::UnsupportedBlockLength { .. }
        | Error::GridTooSmall { .. }
        | Error::BadTolerance(_) => Failure::Validation(e.to_string()),
        other => Failure::Numeric(other),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Zigzag { .. } => "zigzag",
        Error::Linalg(_) => "linear_algebra",
        Error::TooFewTerms { .. } => "too_few_terms",
        Error::StepCapExceeded { .. } => "step_cap_exceeded",
        Error::ThresholdTheta { .. } => "threshold_theta",
        Error::ClosedFormUndefined(_) => "closed_form_undefined",
        _ => "numeric",
    }
}

fn model_of(common: &Common) -> Result<ImpurityModel, Failure> {
    let spec = CoinSpec::parse(&common.coin).map_err(|e| Failure::Validation(e.to_string()))?;
    let coin = spec.resolve().map_err(classify)?;
    ImpurityModel::new(coin, common.m).map_err(classify)
}

fn run(cli: Cli) -> Result<(Report, String), Failure> {
    let (common, report) = match &cli.command {
        Command::Spectrum { common } => {
            let f = common.format.unwrap_or(Format::Json);
            (common, commands::spectrum(&model_of(common)?, f))
        }
        Command::Kernels { common, tol } => {
            let f = common.format.unwrap_or(Format::Csv);
            (common, commands::kernels(&model_of(common)?, *tol, f))
        }
        Command::Smatrix { common, grid } => {
            let f = common.format.unwrap_or(Format::Csv);
            (common, commands::smatrix(&model_of(common)?, *grid, f))
        }
        Command::Resonances { common, grid } => {
            let f = common.format.unwrap_or(Format::Json);
            (common, commands::resonances(&model_of(common)?, *grid, f))
        }
        Command::Verify { common, tol } => {
            if common.format == Some(Format::Csv) {
                return Err(Failure::Validation("verify writes JSON only".into()));
            }
            (common, commands::verify(&model_of(common)?, *tol))
        }
    };
    Ok((report.map_err(classify)?, common.out.clone()))
}

fn emit(text: &str, out: &str) -> Result<(), Failure> {
    if out == "stdout" || out == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| Failure::Io(e.to_string()))
    } else {
        std::fs::write(PathBuf::from(out), text).map_err(|e| Failure::Io(format!("{out}: {e}")))
    }
}

fn report_failure(f: Failure) -> ExitCode {
    let (value, code) = match f {
        Failure::Validation(msg) => (
            json!({"error": "validation", "message": msg}),
            EXIT_VALIDATION,
        ),
        Failure::Io(msg) => (json!({"error": "io", "message": msg}), EXIT_VALIDATION),
        Failure::Numeric(e) => (
            json!({"error": error_kind(&e), "message": e.to_string()}),
            EXIT_NUMERIC,
        ),
    };
    eprintln!("{value}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).and_then(|(report, out)| emit(&report.text, &out).map(|_| report.passed)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_MISMATCH),
        Err(f) => report_failure(f),
    }
}
