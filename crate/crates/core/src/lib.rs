//! Exact scattering theory for a one-dimensional two-state quantum walk
//! with a block impurity of length `M`.
//!
//! The modules build on each other in order: [`numerics`] for small dense
//! complex linear algebra, [`walk`] for coins and time evolution,
//! [`impurity`] for the matrix `E_M`, [`scattering`] for the position-space
//! kernels, [`smatrix`] for the fiber data and resonances, and [`oracle`]
//! for brute-force ground truth.
//!
//! ```
//! use qwscatter::scattering::kernels;
//! use qwscatter::walk::{Chirality, Coin, ImpurityModel};
//!
//! let model = ImpurityModel::new(Coin::hadamard(), 1)?;
//! let out = kernels(&model, 1e-12)?.apply_delta(-3, Chirality::R);
//! assert_eq!(out.get(3, Chirality::L), Coin::hadamard().b());
//! assert_eq!(out.get(-3, Chirality::R), Coin::hadamard().d());
//! # Ok::<(), qwscatter::Error>(())
//! ```

pub mod error;
pub mod impurity;
pub mod numerics;
pub mod oracle;
pub mod scattering;
pub mod smatrix;
pub mod walk;

pub use error::{Error, Result};

// Book chapters compile as doctests so their snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/walk.md")]
    mod walk {}
    #[doc = include_str!("../../../book/src/impurity.md")]
    mod impurity {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/smatrix.md")]
    mod smatrix {}
    #[doc = include_str!("../../../book/src/resonances.md")]
    mod resonances {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
