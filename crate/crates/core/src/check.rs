//! Built-in invariant suite behind `kgsim check`.

use std::fmt::Write as _;

use crate::config::RunConfig;
use crate::diagnostics::{cross_term_reality_check, relative_drift, DiagnosticsRecord};
use crate::embedding::{diagonalize, dpsi_dt_of, embed, recompose, CoupledState};
use crate::error::Result;
use crate::evolution::{leapfrog_psi, run, step_exact, IntegratorConfig, Scheme};
use crate::field::ComplexField;
use crate::ops::{OperatorSymbol, Sign};
use crate::sim::prepare;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
}

impl CheckOutcome {
    fn at_most(name: &'static str, value: f64, tol: f64) -> Self {
        Self {
            name,
            value,
            limit: format!("<= {tol:e}"),
            passed: value <= tol,
        }
    }
}

/// Largest relative drift of either conserved norm over a record series.
pub fn max_norm_drift(records: &[DiagnosticsRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let total = first.norm_plus + first.norm_minus;
    records
        .iter()
        .map(|r| {
            relative_drift(first.norm_plus, r.norm_plus, total).max(relative_drift(
                first.norm_minus,
                r.norm_minus,
                total,
            ))
        })
        .fold(0.0, f64::max)
}

/// (ψ₀, ∂ₜψ₀) of a state, with ∂ₜψ taken from the coupled system.
pub fn kg_data(state: &CoupledState, sym: &OperatorSymbol) -> Result<(ComplexField, ComplexField)> {
    Ok((state.psi.clone(), dpsi_dt_of(state, sym)?))
}

/// L² distance at t = steps·dt between leapfrog ψ and ψ recomposed from
/// exact η± evolution of the same data.
pub fn oracle_error(
    psi0: &ComplexField,
    dpsi_dt0: &ComplexField,
    sym: &OperatorSymbol,
    dt: f64,
    t_final: f64,
) -> Result<f64> {
    let steps = (t_final / dt).round() as usize;
    let leap = leapfrog_psi(psi0, dpsi_dt0, dt, steps, sym)?;
    let d = diagonalize(&embed(psi0, dpsi_dt0, sym)?);
    let exact = recompose(&step_exact(&d, steps as f64 * dt, sym)?).psi;
    leap.distance(&exact)
}

/// Largest elementwise disagreement between η± from diagonalize(embed(·))
/// and from the projectors Π±.
pub fn projector_disagreement(psi0: &ComplexField, dpsi_dt0: &ComplexField, sym: &OperatorSymbol) -> Result<f64> {
    let d = diagonalize(&embed(psi0, dpsi_dt0, sym)?);
    let plus = sym.apply_pi(psi0, dpsi_dt0, Sign::Plus)?;
    let minus = sym.apply_pi(psi0, dpsi_dt0, Sign::Minus)?;
    Ok(d.eta_plus.max_abs_diff(&plus)?.max(d.eta_minus.max_abs_diff(&minus)?))
}

/// Runs every check against the thresholds in `cfg.check`.
pub fn run_checks(cfg: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let th = &cfg.check;
    let (sym, initial) = prepare(cfg)?;
    let mut out = Vec::new();

    let exact_cfg = IntegratorConfig {
        scheme: Scheme::Exact,
        ..cfg.integrator
    };
    let mut records = Vec::new();
    run(initial.clone(), &exact_cfg, &sym, &mut records)?;
    let positive = records.iter().all(|r| r.norm_plus >= 0.0 && r.norm_minus >= 0.0);
    out.push(CheckOutcome {
        name: "norms positive (exact)",
        value: records
            .iter()
            .map(|r| r.norm_plus.min(r.norm_minus))
            .fold(f64::INFINITY, f64::min),
        limit: ">= 0".into(),
        passed: positive,
    });
    out.push(CheckOutcome::at_most(
        "norm conservation (exact)",
        max_norm_drift(&records),
        th.conservation_tol,
    ));
    out.push(CheckOutcome::at_most(
        "rho identity defect",
        records.iter().map(|r| r.identity_defect).fold(0.0, f64::max),
        th.identity_tol,
    ));
    out.push(CheckOutcome::at_most(
        "constraint defect",
        records.iter().map(|r| r.constraint_defect).fold(0.0, f64::max),
        th.constraint_tol,
    ));
    out.push(CheckOutcome::at_most(
        "cross-term reality",
        cross_term_reality_check(&diagonalize(&initial), &sym)?,
        th.cross_term_tol,
    ));

    let (psi0, dpsi0) = kg_data(&initial, &sym)?;
    out.push(CheckOutcome::at_most(
        "projector consistency",
        projector_disagreement(&psi0, &dpsi0, &sym)?,
        th.projector_tol,
    ));

    let rk4_cfg = IntegratorConfig {
        scheme: Scheme::Rk4Coupled,
        dt: th.rk4_dt,
        t_final: th.rk4_t_final,
        sample_stride: ((th.rk4_t_final / th.rk4_dt).round() as usize / 100).max(1),
    };
    let mut rk4_records = Vec::new();
    run(initial.clone(), &rk4_cfg, &sym, &mut rk4_records)?;
    out.push(CheckOutcome::at_most(
        "norm drift (rk4)",
        max_norm_drift(&rk4_records),
        th.rk4_drift_tol,
    ));

    let coarse = oracle_error(&psi0, &dpsi0, &sym, th.oracle_dt, th.oracle_t_final)?;
    let fine = oracle_error(&psi0, &dpsi0, &sym, th.oracle_dt / 2.0, th.oracle_t_final)?;
    let ratio = coarse / fine;
    out.push(CheckOutcome {
        name: "leapfrog oracle order",
        value: ratio,
        limit: format!("in [{}, {}]", th.oracle_ratio_min, th.oracle_ratio_max),
        passed: (th.oracle_ratio_min..=th.oracle_ratio_max).contains(&ratio),
    });
    Ok(out)
}

pub fn format_table(outcomes: &[CheckOutcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:>12} {:>22}  result", "check", "value", "limit");
    for o in outcomes {
        let _ = writeln!(
            s,
            "{:<28} {:>12.4e} {:>22}  {}",
            o.name,
            o.value,
            o.limit,
            if o.passed { "PASS" } else { "FAIL" }
        );
    }
    s
}
