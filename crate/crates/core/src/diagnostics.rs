//! Conserved norms, the historical density ρ = 2·Im(ψ*∂ₜψ), and the energy
//! identity connecting them.
//!
//! With ψ = (η₊+η₋)/2 and ħ∂ₜψ = −i(Hη₊ − Hη₋)/2, the cross terms
//! ⟨η₋,Hη₊⟩ − ⟨η₊,Hη₋⟩ are purely imaginary and drop out of the imaginary
//! part, leaving ∫ρ = −(E₊ − E₋)/(2ħ) where E± = ⟨η±,Hη±⟩.

use crate::embedding::{dpsi_dt_of, recompose, CoupledState, DiagonalState};
use crate::error::Result;
use crate::field::ComplexField;
use crate::ops::OperatorSymbol;

/// Lower bound on the normalization scale of the identity defect.
pub const SCALE_FLOOR: f64 = 1e-30;

/// One sample of the integrated diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// ∫|η₊|²
    pub norm_plus: f64,
    /// ∫|η₋|²
    pub norm_minus: f64,
    /// ⟨η₊,Hη₊⟩
    pub energy_plus: f64,
    /// ⟨η₋,Hη₋⟩
    pub energy_minus: f64,
    /// ∫ρ
    pub rho_integral: f64,
    pub identity_defect: f64,
    pub constraint_defect: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,norm_plus,norm_minus,energy_plus,energy_minus,rho_integral,identity_defect,constraint_defect";

    pub fn columns(&self) -> [f64; 8] {
        [
            self.t,
            self.norm_plus,
            self.norm_minus,
            self.energy_plus,
            self.energy_minus,
            self.rho_integral,
            self.identity_defect,
            self.constraint_defect,
        ]
    }
}

/// (∫|η₊|², ∫|η₋|²).
pub fn conserved_norms(d: &DiagonalState) -> (f64, f64) {
    (d.eta_plus.norm_sq(), d.eta_minus.norm_sq())
}

/// η±/‖η±‖, or `None` for a zero component.
pub fn normalized_components(d: &DiagonalState) -> (Option<ComplexField>, Option<ComplexField>) {
    let unit = |f: &ComplexField| {
        let n = f.norm();
        (n > 0.0).then(|| f.scale_real(1.0 / n))
    };
    (unit(&d.eta_plus), unit(&d.eta_minus))
}

/// Pointwise ρ(x) = 2·Im(conj(ψ)·∂ₜψ).
pub fn historical_rho(psi: &ComplexField, dpsi_dt: &ComplexField) -> Result<Vec<f64>> {
    let psi = psi.to_position();
    let dpsi = dpsi_dt.to_position();
    psi.sub(&dpsi)?; // grid check
    Ok(psi
        .values()
        .iter()
        .zip(dpsi.values())
        .map(|(p, d)| 2.0 * (p.conj() * d).im)
        .collect())
}

/// ∫ρ.
pub fn rho_integral(psi: &ComplexField, dpsi_dt: &ComplexField) -> Result<f64> {
    let rho = historical_rho(psi, dpsi_dt)?;
    psi.grid().integrate_density(&rho)
}

/// Re⟨f, Hf⟩. The imaginary part vanishes by self-adjointness.
pub fn energy_expectation(f: &ComplexField, sym: &OperatorSymbol) -> Result<f64> {
    let fs = f.to_spectral();
    let hf = sym.apply_h(&fs)?;
    let e = fs.inner(&hf)?;
    if !(e.re.is_finite() && e.im.is_finite()) {
        return Err(crate::error::KgError::NonFinite("energy expectation"));
    }
    debug_assert!(
        e.im.abs() <= 1e-12 * e.re.abs().max(SCALE_FLOOR),
        "energy expectation has imaginary part {}",
        e.im
    );
    Ok(e.re)
}

fn identity_scale(rho: f64, e_plus: f64, e_minus: f64, hbar: f64) -> f64 {
    rho.abs().max((e_plus + e_minus) / (2.0 * hbar)).max(SCALE_FLOOR)
}

/// |∫ρ + (E₊ − E₋)/(2ħ)| / scale, with ∫ρ computed from (ψ, ∂ₜψ)
/// reconstructed out of `d`.
pub fn verify_rho_identity(d: &DiagonalState, sym: &OperatorSymbol) -> Result<f64> {
    let state = recompose(d);
    let dpsi = dpsi_dt_of(&state, sym)?;
    let rho = rho_integral(&state.psi, &dpsi)?;
    let e_plus = energy_expectation(&d.eta_plus, sym)?;
    let e_minus = energy_expectation(&d.eta_minus, sym)?;
    let hbar = sym.params().hbar;
    Ok((rho + (e_plus - e_minus) / (2.0 * hbar)).abs() / identity_scale(rho, e_plus, e_minus, hbar))
}

/// |Re I| / (‖η₊‖‖η₋‖·E_max) with I = ⟨η₋,Hη₊⟩ − ⟨η₊,Hη₋⟩, which is
/// purely imaginary for self-adjoint H.
pub fn cross_term_reality_check(d: &DiagonalState, sym: &OperatorSymbol) -> Result<f64> {
    let plus = d.eta_plus.to_spectral();
    let minus = d.eta_minus.to_spectral();
    let i = minus.inner(&sym.apply_h(&plus)?)? - plus.inner(&sym.apply_h(&minus)?)?;
    let scale = (plus.norm() * minus.norm() * sym.max_energy()).max(SCALE_FLOOR);
    Ok(i.re.abs() / scale)
}

/// Full record for a state whose ∂ₜψ is supplied by the caller.
pub fn record_with_derivative(
    state: &CoupledState,
    dpsi_dt: &ComplexField,
    sym: &OperatorSymbol,
) -> Result<DiagnosticsRecord> {
    let d = crate::embedding::diagonalize(state);
    assemble(&d, state, dpsi_dt, sym)
}

/// Record computed from η± directly, which avoids the cancellation in
/// ψ − χ when one component is tiny.
pub fn record_diagonal(d: &DiagonalState, sym: &OperatorSymbol) -> Result<DiagnosticsRecord> {
    let state = recompose(d);
    let dpsi = dpsi_dt_of(&state, sym)?;
    assemble(d, &state, &dpsi, sym)
}

fn assemble(
    d: &DiagonalState,
    state: &CoupledState,
    dpsi_dt: &ComplexField,
    sym: &OperatorSymbol,
) -> Result<DiagnosticsRecord> {
    let (norm_plus, norm_minus) = conserved_norms(d);
    let energy_plus = energy_expectation(&d.eta_plus, sym)?;
    let energy_minus = energy_expectation(&d.eta_minus, sym)?;
    let rho = rho_integral(&state.psi, dpsi_dt)?;
    let hbar = sym.params().hbar;
    let identity_defect = (rho + (energy_plus - energy_minus) / (2.0 * hbar)).abs()
        / identity_scale(rho, energy_plus, energy_minus, hbar);
    let constraint_defect = crate::embedding::consistency_check(state, dpsi_dt, sym)?;
    Ok(DiagnosticsRecord {
        t: state.t,
        norm_plus,
        norm_minus,
        energy_plus,
        energy_minus,
        rho_integral: rho,
        identity_defect,
        constraint_defect,
    })
}

/// Drift of a conserved norm relative to its initial value. Components
/// smaller than [`NEGLIGIBLE_FRACTION`] of `total` are measured against
/// that floor instead, since their value is pure rounding noise.
pub fn relative_drift(initial: f64, current: f64, total: f64) -> f64 {
    (current - initial).abs() / initial.max(NEGLIGIBLE_FRACTION * total).max(SCALE_FLOOR)
}

/// See [`relative_drift`].
pub const NEGLIGIBLE_FRACTION: f64 = 1e-12;

/// Record with ∂ₜψ taken from the coupled system, ∂ₜψ = −(i/ħ)Hχ.
pub fn record(state: &CoupledState, sym: &OperatorSymbol) -> Result<DiagnosticsRecord> {
    let dpsi = dpsi_dt_of(state, sym)?;
    record_with_derivative(state, &dpsi, sym)
}
