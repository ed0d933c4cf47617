//! Config-driven entry points used by the command-line tool.

use std::path::{Path, PathBuf};

use crate::config::{RawConfig, RunConfig};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::embedding::CoupledState;
use crate::error::{KgError, Result};
use crate::evolution;
use crate::init::build_initial;
use crate::io::FileObserver;
use crate::ops::{build_symbol, OperatorSymbol};
use crate::par;

/// Symbol and initial state for a configuration.
pub fn prepare(cfg: &RunConfig) -> Result<(OperatorSymbol, CoupledState)> {
    let sym = build_symbol(&cfg.grid, &cfg.params)?;
    let initial = build_initial(&cfg.initial, &cfg.grid, &sym)?;
    Ok((sym, initial))
}

#[derive(Debug)]
pub struct SimulationOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: CoupledState,
    pub diagnostics_path: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

/// Full run: diagnostics CSV plus optional snapshots, as configured.
pub fn simulate(cfg: &RunConfig) -> Result<SimulationOutput> {
    let (sym, initial) = prepare(cfg)?;
    let mut obs = FileObserver::create(
        &cfg.output.diagnostics_path,
        cfg.output.snapshot_path.as_deref(),
        cfg.output.snapshot_stride,
    )?;
    let result = evolution::run(initial, &cfg.integrator, &sym, &mut obs);
    // Keep whatever was recorded before a failure.
    let (records, snapshots) = obs.finish()?;
    Ok(SimulationOutput {
        records,
        final_state: result?,
        diagnostics_path: cfg.output.diagnostics_path.clone(),
        snapshots,
    })
}

/// Diagnostics of the initial data only.
pub fn decompose(cfg: &RunConfig) -> Result<DiagnosticsRecord> {
    let (sym, initial) = prepare(cfg)?;
    diagnostics::record(&initial, &sym)
}

fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// `diag.csv` + `0.01` → `diag.0.01.csv`.
pub fn suffixed(path: &Path, value: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let v = sanitize(value);
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{v}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{v}"),
    };
    path.with_file_name(name)
}

/// One validated config per sweep value, with output paths suffixed by the
/// value so every run owns its files.
pub fn sweep_configs(raw: &RawConfig, key: &str, values: &[String]) -> Result<Vec<RunConfig>> {
    if values.is_empty() {
        return Err(KgError::config(key, "sweep needs at least one value"));
    }
    if raw.get(key).is_none() && !key.starts_with("check.") && !is_optional_key(key) {
        return Err(KgError::config(key, "sweep key is not set in the config"));
    }
    values
        .iter()
        .map(|v| {
            let mut r = raw.clone();
            r.set(key, v);
            let mut cfg = r.build()?;
            cfg.output.diagnostics_path = suffixed(&cfg.output.diagnostics_path, v);
            cfg.output.snapshot_path = cfg.output.snapshot_path.map(|p| suffixed(&p, v));
            Ok(cfg)
        })
        .collect()
}

fn is_optional_key(key: &str) -> bool {
    matches!(
        key,
        "params.hbar"
            | "params.c"
            | "params.mass"
            | "integrator.sample_stride"
            | "initial.amplitude"
            | "initial.branch"
            | "initial.wavenumber"
    )
}

/// Runs independent trajectories concurrently (order of results matches
/// `configs`).
pub fn sweep(configs: &[RunConfig]) -> Vec<Result<SimulationOutput>> {
    par::map_collect(configs, simulate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_names() {
        assert_eq!(
            suffixed(Path::new("out/diag.csv"), "0.01"),
            PathBuf::from("out/diag.0.01.csv")
        );
        assert_eq!(suffixed(Path::new("diag"), "a/b"), PathBuf::from("diag.a_b"));
    }
}
