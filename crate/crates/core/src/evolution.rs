//! Time stepping: exact propagation of η±, RK4 on the coupled (ψ, χ) system
//! and leapfrog on the second-order equation ħ²∂ₜₜψ = −H²ψ.
//!
//! Leapfrog never touches χ or η±, so it serves as an oracle for the other
//! two schemes.

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex64;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::embedding::{diagonalize, dpsi_dt_of, embed, recompose, CoupledState, DiagonalState};
use crate::error::{KgError, Result};
use crate::field::ComplexField;
use crate::grid::Representation;
use crate::ops::OperatorSymbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Exact,
    Rk4Coupled,
    LeapfrogKg,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Exact => "exact",
            Scheme::Rk4Coupled => "rk4_coupled",
            Scheme::LeapfrogKg => "leapfrog_kg",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Scheme::Exact),
            "rk4_coupled" => Ok(Scheme::Rk4Coupled),
            "leapfrog_kg" => Ok(Scheme::LeapfrogKg),
            other => Err(format!(
                "unknown scheme `{other}` (expected exact, rk4_coupled or leapfrog_kg)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub sample_stride: usize,
}

impl IntegratorConfig {
    /// Number of steps to reach `t_final`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Checks step sizes, and the leapfrog stability bound against `sym`.
    pub fn validate(&self, sym: &OperatorSymbol) -> Result<()> {
        self.validate_with(sym.max_energy(), sym.params().hbar)
    }

    /// As [`validate`](Self::validate) with the largest symbol value given
    /// directly.
    pub fn validate_with(&self, max_energy: f64, hbar: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(KgError::config("integrator.dt", "must be finite and > 0"));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(KgError::config("integrator.t_final", "must be finite and >= 0"));
        }
        if self.t_final > 0.0 && self.t_final < self.dt {
            return Err(KgError::config("integrator.t_final", "must be 0 or >= integrator.dt"));
        }
        if self.sample_stride == 0 {
            return Err(KgError::config("integrator.sample_stride", "must be >= 1"));
        }
        if self.scheme == Scheme::LeapfrogKg {
            let bound = 2.0 * hbar / max_energy;
            if self.dt >= bound {
                return Err(KgError::Unstable { dt: self.dt, bound });
            }
        }
        Ok(())
    }
}

/// dt < 2ħ/E_max.
pub fn leapfrog_stability_bound(sym: &OperatorSymbol) -> f64 {
    2.0 * sym.params().hbar / sym.max_energy()
}

fn check_leapfrog_stability(dt: f64, sym: &OperatorSymbol) -> Result<()> {
    let bound = leapfrog_stability_bound(sym);
    if dt.abs() >= bound {
        return Err(KgError::Unstable { dt, bound });
    }
    Ok(())
}

/// Precomputed phases e^{−iE(k)dt/ħ} for repeated exact steps.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    phases: Vec<Complex64>,
    dt: f64,
}

impl ExactPropagator {
    pub fn new(sym: &OperatorSymbol, dt: f64) -> Self {
        let hbar = sym.params().hbar;
        let phases = sym
            .values()
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * dt / hbar))
            .collect();
        Self { phases, dt }
    }

    /// η₊ ← e^{−iEdt/ħ}η₊, η₋ ← e^{+iEdt/ħ}η₋, t ← t + dt. The output keeps
    /// the input representation.
    pub fn apply(&self, d: &DiagonalState) -> DiagonalState {
        let rotate = |f: &ComplexField, conj: bool| {
            let repr = f.representation();
            let mut s = f.to_spectral();
            let phases = &self.phases;
            crate::par::for_each_mut(s.values_mut(), |i, v| {
                *v *= if conj { phases[i].conj() } else { phases[i] };
            });
            s.into_repr(repr)
        };
        DiagonalState {
            eta_plus: rotate(&d.eta_plus, false),
            eta_minus: rotate(&d.eta_minus, true),
            t: d.t + self.dt,
        }
    }
}

/// Exact step of the decoupled forward/backward Schrödinger flows.
pub fn step_exact(d: &DiagonalState, dt: f64, sym: &OperatorSymbol) -> Result<DiagonalState> {
    if !d.grid().same_as(sym.grid()) {
        return Err(KgError::GridMismatch);
    }
    Ok(ExactPropagator::new(sym, dt).apply(d))
}

/// Right-hand side of iħ∂ₜψ = Hχ, iħ∂ₜχ = Hψ.
fn coupled_rhs(psi: &ComplexField, chi: &ComplexField, sym: &OperatorSymbol) -> Result<(ComplexField, ComplexField)> {
    let hbar = sym.params().hbar;
    let m = move |e: f64| Complex64::new(0.0, -e / hbar);
    Ok((sym.apply_multiplier(chi, m)?, sym.apply_multiplier(psi, m)?))
}

/// Classical fourth-order Runge-Kutta step of the coupled system.
pub fn step_rk4(state: &CoupledState, dt: f64, sym: &OperatorSymbol) -> Result<CoupledState> {
    let one = Complex64::new(1.0, 0.0);
    let h = |c: f64| Complex64::new(c * dt, 0.0);
    let (p, c) = (&state.psi, &state.chi);

    let (k1p, k1c) = coupled_rhs(p, c, sym)?;
    let (k2p, k2c) = coupled_rhs(&p.combine(one, &k1p, h(0.5))?, &c.combine(one, &k1c, h(0.5))?, sym)?;
    let (k3p, k3c) = coupled_rhs(&p.combine(one, &k2p, h(0.5))?, &c.combine(one, &k2c, h(0.5))?, sym)?;
    let (k4p, k4c) = coupled_rhs(&p.combine(one, &k3p, h(1.0))?, &c.combine(one, &k3c, h(1.0))?, sym)?;

    let two = Complex64::new(2.0, 0.0);
    let advance = |y: &ComplexField, k1: &ComplexField, k2: &ComplexField, k3: &ComplexField, k4: &ComplexField| {
        let sum = k1.combine(one, k2, two)?.combine(one, k3, two)?.combine(one, k4, one)?;
        y.combine(one, &sum, h(1.0 / 6.0))
    };
    Ok(CoupledState {
        psi: advance(p, &k1p, &k2p, &k3p, &k4p)?,
        chi: advance(c, &k1c, &k2c, &k3c, &k4c)?,
        t: state.t + dt,
    })
}

/// ψ_next = 2ψ_curr − ψ_prev − (dt²/ħ²)·H²ψ_curr.
pub fn step_leapfrog(
    psi_prev: &ComplexField,
    psi_curr: &ComplexField,
    dt: f64,
    sym: &OperatorSymbol,
) -> Result<ComplexField> {
    check_leapfrog_stability(dt, sym)?;
    let hbar = sym.params().hbar;
    let c = dt * dt / (hbar * hbar);
    // 2ψ − (dt²/ħ²)E²ψ in one spectral pass.
    let lifted = sym.apply_multiplier(psi_curr, move |e| Complex64::new(2.0 - c * e * e, 0.0))?;
    lifted.sub(psi_prev)
}

/// Second-order Taylor start ψ₁ = ψ₀ + dt·∂ₜψ₀ − (dt²/2ħ²)H²ψ₀.
pub fn leapfrog_start(
    psi0: &ComplexField,
    dpsi_dt0: &ComplexField,
    dt: f64,
    sym: &OperatorSymbol,
) -> Result<ComplexField> {
    let hbar = sym.params().hbar;
    let c = dt * dt / (2.0 * hbar * hbar);
    let curved = sym.apply_multiplier(psi0, move |e| Complex64::new(1.0 - c * e * e, 0.0))?;
    curved.combine(Complex64::new(1.0, 0.0), dpsi_dt0, Complex64::new(dt, 0.0))
}

/// Consumer of diagnostics records (and optionally state snapshots) emitted
/// by [`run`]. One producer per observer.
pub trait Observer {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()>;

    /// Step interval for [`Observer::snapshot`]; `None` disables snapshots.
    fn snapshot_stride(&self) -> Option<usize> {
        None
    }

    fn snapshot(&mut self, _step: usize, _state: &CoupledState) -> Result<()> {
        Ok(())
    }
}

impl Observer for Vec<DiagnosticsRecord> {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        self.push(*rec);
        Ok(())
    }
}

impl Observer for () {
    fn record(&mut self, _rec: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }
}

struct Sampler {
    n: usize,
    stride: usize,
    snap: Option<usize>,
}

impl Sampler {
    fn sample(&self, i: usize) -> bool {
        i.is_multiple_of(self.stride) || i == self.n
    }

    fn snap(&self, i: usize) -> bool {
        self.snap.is_some_and(|s| s > 0 && i.is_multiple_of(s))
    }
}

fn ensure_finite(state: &CoupledState) -> Result<()> {
    if state.is_finite() {
        Ok(())
    } else {
        Err(KgError::Blowup { t: state.t })
    }
}

/// Fields large enough that their quadratic diagnostics overflow are
/// treated as a blowup.
fn overflow_as_blowup(e: KgError, t: f64) -> KgError {
    match e {
        KgError::NonFinite(_) => KgError::Blowup { t },
        e => e,
    }
}

/// Advances `initial` to `cfg.t_final`, sending a record to `observer` every
/// `sample_stride` steps (and at the last step). Returns the final state in
/// position representation.
pub fn run(
    initial: impl Into<CoupledState>,
    cfg: &IntegratorConfig,
    sym: &OperatorSymbol,
    observer: &mut dyn Observer,
) -> Result<CoupledState> {
    cfg.validate(sym)?;
    let initial: CoupledState = initial.into();
    if !initial.grid().same_as(sym.grid()) {
        return Err(KgError::GridMismatch);
    }
    let initial = initial.into_repr(Representation::Position);
    ensure_finite(&initial)?;
    let sampler = Sampler {
        n: cfg.steps(),
        stride: cfg.sample_stride,
        snap: observer.snapshot_stride(),
    };
    let t0 = initial.t;
    let time = |i: usize| t0 + i as f64 * cfg.dt;

    let emit = |i: usize, state: &CoupledState, dpsi: Option<&ComplexField>, obs: &mut dyn Observer| -> Result<()> {
        if sampler.sample(i) {
            let rec = match dpsi {
                Some(d) => diagnostics::record_with_derivative(state, d, sym),
                None => diagnostics::record(state, sym),
            }
            .map_err(|e| overflow_as_blowup(e, state.t))?;
            obs.record(&rec)?;
        }
        if sampler.snap(i) {
            obs.snapshot(i, &state.clone().into_repr(Representation::Position))?;
        }
        Ok(())
    };

    match cfg.scheme {
        Scheme::Exact => {
            // Each sample is propagated directly from t0; by the group
            // property this equals repeated steps without accumulating
            // rounding in the phase factors.
            let d0 = diagonalize(&initial).into_repr(Representation::Spectral);
            emit(0, &initial, None, observer)?;
            let at = |i: usize| {
                let mut d = ExactPropagator::new(sym, i as f64 * cfg.dt).apply(&d0);
                d.t = time(i);
                d
            };
            for i in 1..=sampler.n {
                if !(sampler.sample(i) || sampler.snap(i)) {
                    continue;
                }
                let d = at(i);
                if !(d.eta_plus.is_finite() && d.eta_minus.is_finite()) {
                    return Err(KgError::Blowup { t: d.t });
                }
                if sampler.sample(i) {
                    let rec = diagnostics::record_diagonal(&d, sym).map_err(|e| overflow_as_blowup(e, d.t))?;
                    observer.record(&rec)?;
                }
                if sampler.snap(i) {
                    observer.snapshot(i, &recompose(&d).into_repr(Representation::Position))?;
                }
            }
            let mut out = recompose(&at(sampler.n)).into_repr(Representation::Position);
            out.t = time(sampler.n);
            ensure_finite(&out)?;
            Ok(out)
        }
        Scheme::Rk4Coupled => {
            let mut state = initial.clone().into_repr(Representation::Spectral);
            emit(0, &initial, None, observer)?;
            for i in 1..=sampler.n {
                state = step_rk4(&state, cfg.dt, sym)?;
                state.t = time(i);
                ensure_finite(&state)?;
                emit(i, &state, None, observer)?;
            }
            Ok(state.into_repr(Representation::Position))
        }
        Scheme::LeapfrogKg => {
            let psi0 = initial.psi.clone();
            let dpsi0 = dpsi_dt_of(&initial, sym)?;
            emit(0, &initial, Some(&dpsi0), observer)?;
            if sampler.n == 0 {
                return Ok(initial);
            }
            let mut prev = psi0.clone();
            let mut curr = leapfrog_start(&psi0, &dpsi0, cfg.dt, sym)?;
            let mut last = None;
            for i in 1..=sampler.n {
                let next = step_leapfrog(&prev, &curr, cfg.dt, sym)?;
                if !next.is_finite() {
                    return Err(KgError::Blowup { t: time(i + 1) });
                }
                if sampler.sample(i) || sampler.snap(i) || i == sampler.n {
                    // Central difference is the only ∂ₜψ available here.
                    let dpsi = next.combine(
                        Complex64::new(0.5 / cfg.dt, 0.0),
                        &prev,
                        Complex64::new(-0.5 / cfg.dt, 0.0),
                    )?;
                    let mut state = embed(&curr, &dpsi, sym)?;
                    state.t = time(i);
                    emit(i, &state, Some(&dpsi), observer)?;
                    if i == sampler.n {
                        last = Some(state);
                    }
                }
                prev = std::mem::replace(&mut curr, next);
            }
            Ok(last.expect("final step always materializes a state"))
        }
    }
}

/// Leapfrog ψ(t_final) from (ψ₀, ∂ₜψ₀) without diagnostics or χ.
pub fn leapfrog_psi(
    psi0: &ComplexField,
    dpsi_dt0: &ComplexField,
    dt: f64,
    steps: usize,
    sym: &OperatorSymbol,
) -> Result<ComplexField> {
    if steps == 0 {
        return Ok(psi0.clone());
    }
    let mut prev = psi0.clone();
    let mut curr = leapfrog_start(psi0, dpsi_dt0, dt, sym)?;
    for _ in 1..steps {
        let next = step_leapfrog(&prev, &curr, dt, sym)?;
        prev = std::mem::replace(&mut curr, next);
    }
    Ok(curr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridSpec, PhysicalParams};
    use crate::ops::build_symbol;
    use std::f64::consts::{PI, SQRT_2};

    fn setup() -> (GridSpec, OperatorSymbol) {
        let g = make_grid(1, &[32], &[2.0 * PI]).unwrap();
        let s = build_symbol(&g, &PhysicalParams::natural()).unwrap();
        (g, s)
    }

    fn forward_plane_wave(g: &GridSpec) -> DiagonalState {
        DiagonalState::new(ComplexField::plane_wave(g, &[1]).unwrap(), ComplexField::zeros(g), 0.0).unwrap()
    }

    #[test]
    fn exact_zero_step_is_identity() {
        let (g, s) = setup();
        let d = forward_plane_wave(&g);
        let out = step_exact(&d, 0.0, &s).unwrap();
        assert!(out.eta_plus.max_abs_diff(&d.eta_plus).unwrap() < 1e-15);
    }

    #[test]
    fn exact_half_period_flips_sign() {
        // E = √2, dt = π/√2 → phase −π.
        let (g, s) = setup();
        let d = forward_plane_wave(&g);
        let out = step_exact(&d, PI / SQRT_2, &s).unwrap();
        assert!(out.eta_plus.max_abs_diff(&d.eta_plus.scale_real(-1.0)).unwrap() < 1e-13);
        assert!((out.t - PI / SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rk4_zero_cases() {
        let (g, s) = setup();
        let d = forward_plane_wave(&g);
        let st = recompose(&d);
        let same = step_rk4(&st, 0.0, &s).unwrap();
        assert!(same.psi.max_abs_diff(&st.psi).unwrap() < 1e-15);
        let z = CoupledState::new(ComplexField::zeros(&g), ComplexField::zeros(&g), 0.0).unwrap();
        let z1 = step_rk4(&z, 0.1, &s).unwrap();
        assert_eq!(z1.psi.max_abs() + z1.chi.max_abs(), 0.0);
    }

    #[test]
    fn leapfrog_zero_and_unstable() {
        let (g, s) = setup();
        let z = ComplexField::zeros(&g);
        assert_eq!(step_leapfrog(&z, &z, 0.01, &s).unwrap().max_abs(), 0.0);
        let dt = 2.1 / s.max_energy();
        assert!(matches!(step_leapfrog(&z, &z, dt, &s), Err(KgError::Unstable { .. })));
        let cfg = IntegratorConfig {
            scheme: Scheme::LeapfrogKg,
            dt,
            t_final: 1.0,
            sample_stride: 1,
        };
        assert!(cfg.validate(&s).is_err());
    }

    #[test]
    fn run_with_zero_final_time_returns_initial() {
        let (g, s) = setup();
        let d = forward_plane_wave(&g);
        for scheme in [Scheme::Exact, Scheme::Rk4Coupled, Scheme::LeapfrogKg] {
            let cfg = IntegratorConfig {
                scheme,
                dt: 0.01,
                t_final: 0.0,
                sample_stride: 10,
            };
            let mut recs = Vec::new();
            let out = run(d.clone(), &cfg, &s, &mut recs).unwrap();
            assert_eq!(recs.len(), 1, "{scheme}");
            assert!(out.psi.max_abs_diff(&recompose(&d).psi).unwrap() < 1e-15);
        }
    }

    #[test]
    fn sample_count_includes_start_and_end() {
        let (g, s) = setup();
        let cfg = IntegratorConfig {
            scheme: Scheme::Exact,
            dt: 0.01,
            t_final: 10.0,
            sample_stride: 100,
        };
        let mut recs = Vec::new();
        let out = run(forward_plane_wave(&g), &cfg, &s, &mut recs).unwrap();
        assert_eq!(recs.len(), 11);
        assert!((out.t - 10.0).abs() < 0.005);
        assert_eq!(recs[0].t, 0.0);
    }

    #[test]
    fn blowup_is_detected() {
        // RK4 is unstable for E·dt/ħ > 2√2; mode 15 has E ≈ 15.
        let (g, s) = setup();
        let d = DiagonalState::new(
            ComplexField::plane_wave(&g, &[15]).unwrap(),
            ComplexField::zeros(&g),
            0.0,
        )
        .unwrap();
        let cfg = IntegratorConfig {
            scheme: Scheme::Rk4Coupled,
            dt: 1.0,
            t_final: 1000.0,
            sample_stride: 1000,
        };
        assert!(matches!(run(d, &cfg, &s, &mut ()), Err(KgError::Blowup { .. })));
    }

    #[test]
    fn integrator_config_validation() {
        let (_, s) = setup();
        let ok = IntegratorConfig {
            scheme: Scheme::Exact,
            dt: 0.1,
            t_final: 1.0,
            sample_stride: 1,
        };
        assert!(ok.validate(&s).is_ok());
        assert!(IntegratorConfig { dt: 0.0, ..ok }.validate(&s).is_err());
        assert!(IntegratorConfig { t_final: 0.05, ..ok }.validate(&s).is_err());
        assert!(IntegratorConfig { sample_stride: 0, ..ok }.validate(&s).is_err());
        assert_eq!("rk4_coupled".parse::<Scheme>().unwrap(), Scheme::Rk4Coupled);
        assert!("rk5".parse::<Scheme>().is_err());
    }
}
