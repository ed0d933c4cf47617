//! Construction of the auxiliary field χ from Klein-Gordon data, and the
//! change of variables (ψ, χ) ↔ (η₊, η₋).

use rustfft::num_complex::Complex64;

use crate::error::{KgError, Result};
use crate::field::ComplexField;
use crate::grid::{GridSpec, Representation};
use crate::ops::OperatorSymbol;

/// The coupled pair (ψ, χ) at time `t`.
#[derive(Debug, Clone)]
pub struct CoupledState {
    pub psi: ComplexField,
    pub chi: ComplexField,
    pub t: f64,
}

/// The diagonal components η± = ψ ± χ at time `t`.
#[derive(Debug, Clone)]
pub struct DiagonalState {
    pub eta_plus: ComplexField,
    pub eta_minus: ComplexField,
    pub t: f64,
}

impl CoupledState {
    pub fn new(psi: ComplexField, chi: ComplexField, t: f64) -> Result<Self> {
        psi.check_grid(&chi)?;
        Ok(Self { psi, chi, t })
    }

    pub fn grid(&self) -> &GridSpec {
        self.psi.grid()
    }

    pub fn into_repr(self, repr: Representation) -> Self {
        Self {
            psi: self.psi.into_repr(repr),
            chi: self.chi.into_repr(repr),
            t: self.t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.chi.is_finite()
    }
}

impl DiagonalState {
    pub fn new(eta_plus: ComplexField, eta_minus: ComplexField, t: f64) -> Result<Self> {
        eta_plus.check_grid(&eta_minus)?;
        Ok(Self { eta_plus, eta_minus, t })
    }

    pub fn grid(&self) -> &GridSpec {
        self.eta_plus.grid()
    }

    pub fn into_repr(self, repr: Representation) -> Self {
        Self {
            eta_plus: self.eta_plus.into_repr(repr),
            eta_minus: self.eta_minus.into_repr(repr),
            t: self.t,
        }
    }
}

impl From<DiagonalState> for CoupledState {
    fn from(d: DiagonalState) -> Self {
        recompose(&d)
    }
}

impl From<CoupledState> for DiagonalState {
    fn from(s: CoupledState) -> Self {
        diagonalize(&s)
    }
}

/// χ = −D⁻¹(ħ∂ₜψ) = iH⁻¹(ħ∂ₜψ); the result satisfies ħ∂ₜψ = −Dχ.
pub fn embed(psi0: &ComplexField, dpsi_dt0: &ComplexField, sym: &OperatorSymbol) -> Result<CoupledState> {
    if !psi0.grid().same_as(sym.grid()) {
        return Err(KgError::GridMismatch);
    }
    let hbar = sym.params().hbar;
    let scaled = dpsi_dt0.scale_real(hbar);
    let chi = sym.apply_d_inv(&scaled)?.scale_real(-1.0);
    CoupledState::new(psi0.clone(), chi.into_repr(psi0.representation()), 0.0)
}

/// Builds a state directly from chosen η± (e.g. a pure forward component).
pub fn embed_diagonal(eta_plus: ComplexField, eta_minus: ComplexField) -> Result<CoupledState> {
    Ok(recompose(&DiagonalState::new(eta_plus, eta_minus, 0.0)?))
}

/// ∂ₜψ = −(i/ħ)Hχ.
pub fn dpsi_dt_of(state: &CoupledState, sym: &OperatorSymbol) -> Result<ComplexField> {
    let hbar = sym.params().hbar;
    sym.apply_multiplier(&state.chi, move |e| Complex64::new(0.0, -e / hbar))
}

/// ∂ₜχ = −(i/ħ)Hψ.
pub fn dchi_dt_of(state: &CoupledState, sym: &OperatorSymbol) -> Result<ComplexField> {
    let hbar = sym.params().hbar;
    sym.apply_multiplier(&state.psi, move |e| Complex64::new(0.0, -e / hbar))
}

pub fn diagonalize(state: &CoupledState) -> DiagonalState {
    // Grids were checked when the state was built.
    DiagonalState {
        eta_plus: state.psi.add(&state.chi).expect("state fields share a grid"),
        eta_minus: state.psi.sub(&state.chi).expect("state fields share a grid"),
        t: state.t,
    }
}

pub fn recompose(d: &DiagonalState) -> CoupledState {
    let half = Complex64::new(0.5, 0.0);
    CoupledState {
        psi: d
            .eta_plus
            .combine(half, &d.eta_minus, half)
            .expect("eta fields share a grid"),
        chi: d
            .eta_plus
            .combine(half, &d.eta_minus, -half)
            .expect("eta fields share a grid"),
        t: d.t,
    }
}

/// Floor used when normalizing defects of (near) zero states.
pub const DEFECT_FLOOR: f64 = 1e-300;

/// Relative defect of the first coupled equation:
/// ‖ħ∂ₜψ + Dχ‖ / max(‖ħ∂ₜψ‖, floor).
pub fn consistency_check(state: &CoupledState, dpsi_dt: &ComplexField, sym: &OperatorSymbol) -> Result<f64> {
    let lhs = dpsi_dt.scale_real(sym.params().hbar);
    let d_chi = sym.apply_d(&state.chi)?;
    let defect = lhs.add(&d_chi)?.norm();
    Ok(defect / lhs.norm().max(DEFECT_FLOOR))
}
