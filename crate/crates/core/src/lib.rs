//! Spectral simulator for the free Klein-Gordon equation written as a pair of
//! first-order equations.
//!
//! Given Klein-Gordon data (ψ, ∂ₜψ) the auxiliary field χ = iH⁻¹(ħ∂ₜψ) turns
//! ħ²∂ₜₜψ = −H²ψ into iħ∂ₜψ = Hχ, iħ∂ₜχ = Hψ, where H has symbol
//! E(k) = √(m²c⁴ + c²ħ²|k|²). The combinations η± = ψ ± χ then obey
//! iħ∂ₜη± = ±Hη±, so ∫|η₊|² and ∫|η₋|² are separately conserved, while the
//! indefinite ∫2·Im(ψ*∂ₜψ) equals −(⟨η₊,Hη₊⟩ − ⟨η₋,Hη₋⟩)/(2ħ).
//!
//! Everything runs on a uniform periodic grid with operators applied by
//! multiplication in the discrete Fourier basis.

pub mod check;
pub mod config;
pub mod diagnostics;
pub mod embedding;
pub mod error;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod init;
pub mod io;
pub mod ops;
pub mod par;
pub mod sim;

pub use diagnostics::DiagnosticsRecord;
pub use embedding::{CoupledState, DiagonalState};
pub use error::{KgError, Result};
pub use evolution::{IntegratorConfig, Observer, Scheme};
pub use field::ComplexField;
pub use grid::{make_grid, GridSpec, PhysicalParams, Representation};
pub use ops::{build_symbol, OperatorSymbol, Sign};

pub use rustfft::num_complex::Complex64;
