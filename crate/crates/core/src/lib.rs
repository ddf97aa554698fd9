//! Pseudospectral laboratory for the one-dimensional cubic Schrödinger
//! equation with non-gauge-invariant nonlinearities
//!
//! ```text
//! i∂ₜu + ½∂ₓₓu = λ₁ū³ + λ₂u³ + λ₃|u|²ū + λ₄|u|²u,   t ≥ 1.
//! ```
//!
//! The crate is organized bottom-up: [`spectral`] holds grids, transforms and
//! the operators built on them.

pub mod bump;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod ode_compare;
pub mod resonance;
pub mod solver;
pub mod spectral;

pub use error::{NlsError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/resonance.md")]
    mod resonance {}
    #[doc = include_str!("../../../book/src/growth.md")]
    mod growth {}
}
