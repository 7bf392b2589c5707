use std::fmt;

use crate::numerics::LinalgError;
use crate::walk::Chirality;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coin is not unitary: {}", GramList(.violations))]
    NonUnitaryCoin { violations: Vec<GramViolation> },
    #[error("coin entries must be finite")]
    NonFiniteCoin,
    #[error("impurity block length must be at least 1")]
    EmptyBlock,
    #[error("site ({x};{chirality}) is outside the impurity block of length {m}")]
    IndexOutOfRange {
        x: usize,
        chirality: Chirality,
        m: usize,
    },
    #[error(
        "zigzag regime: |a| = {a_abs:.3e}, spectral radius of E_M = {spectral_radius:.12}; \
         the scattering series do not converge"
    )]
    Zigzag { a_abs: f64, spectral_radius: f64 },
    #[error("closed form needs M <= {max}, got M = {m}")]
    UnsupportedBlockLength { m: usize, max: usize },
    #[error("closed form undefined: {0}")]
    ClosedFormUndefined(&'static str),
    #[error("theta = {theta} is a threshold point (0 or pi)")]
    ThresholdTheta { theta: f64 },
    #[error("kernel channel {channel} has {found} nonzero terms, at least {needed} required")]
    TooFewTerms {
        channel: &'static str,
        found: usize,
        needed: usize,
    },
    #[error("required {needed} steps exceeds cap {cap}; use a larger tolerance")]
    StepCapExceeded { needed: u64, cap: u64 },
    #[error("grid size {size} is below the minimum {min}")]
    GridTooSmall { size: usize, min: usize },
    #[error("tolerance must lie in (0, 1), got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One entry of `C†C − I` that exceeds the unitarity tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramViolation {
    pub row: usize,
    pub col: usize,
    pub deviation: f64,
}

struct GramList<'a>(&'a [GramViolation]);

impl fmt::Display for GramList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "(C*C - I)[{},{}] = {:e}", v.row, v.col, v.deviation)?;
        }
        Ok(())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
