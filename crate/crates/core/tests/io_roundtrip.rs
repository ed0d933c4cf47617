use std::fs;
use std::path::Path;

use kgembed::config::{parse_config, RawConfig, DEFAULT_CONFIG};
use kgembed::io::read_snapshot;
use kgembed::sim::{simulate, sweep, sweep_configs};
use proptest::prelude::*;

fn config_in(dir: &Path, overrides: &[(&str, &str)]) -> kgembed::config::RunConfig {
    let mut raw = RawConfig::parse(DEFAULT_CONFIG).unwrap();
    let diag = dir.join("diag.csv");
    raw.set("output.diagnostics_path", diag.to_str().unwrap());
    for (k, v) in overrides {
        raw.set(k, v);
    }
    raw.build().unwrap()
}

#[test]
fn diagnostics_are_byte_identical_across_runs_and_thread_counts() {
    // 2-D 128x128 so the kernels take the parallel path.
    let overrides = [
        ("grid.dim", "2"),
        ("grid.points", "128,128"),
        ("grid.lengths", "62.83185307179586,31.41592653589793"),
        ("initial.center", "31.4,15.7"),
        ("initial.wavenumber", "0.5,-0.3"),
        ("integrator.scheme", "rk4_coupled"),
        ("integrator.dt", "0.005"),
        ("integrator.t_final", "0.1"),
        ("integrator.sample_stride", "2"),
    ];
    let mut outputs = Vec::new();
    for threads in [1, 4] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_in(dir.path(), &overrides);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate(&cfg)).unwrap();
        outputs.push(fs::read(&cfg.output.diagnostics_path).unwrap());
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path(), &overrides);
    simulate(&cfg).unwrap();
    outputs.push(fs::read(&cfg.output.diagnostics_path).unwrap());
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn simulate_writes_snapshots_that_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.kgs");
    let cfg = config_in(
        dir.path(),
        &[
            ("integrator.t_final", "1"),
            ("integrator.sample_stride", "50"),
            ("output.snapshot_path", snap.to_str().unwrap()),
            ("output.snapshot_stride", "25"),
        ],
    );
    let out = simulate(&cfg).unwrap();
    assert_eq!(out.records.len(), 3);
    assert_eq!(out.snapshots.len(), 5);
    let last = read_snapshot(out.snapshots.last().unwrap()).unwrap();
    assert!((last.t - 1.0).abs() < 1e-12);
    let state = last.into_state().unwrap();
    assert!(state.psi.max_abs_diff(&out.final_state.psi).unwrap() == 0.0);
    assert!(state.chi.max_abs_diff(&out.final_state.chi).unwrap() == 0.0);
}

#[test]
fn sweep_writes_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut raw = RawConfig::parse(DEFAULT_CONFIG).unwrap();
    raw.set("output.diagnostics_path", dir.path().join("d.csv").to_str().unwrap());
    raw.set("integrator.t_final", "0.1");
    let values: Vec<String> = ["0.02", "0.01", "0.005"].iter().map(|s| s.to_string()).collect();
    let configs = sweep_configs(&raw, "integrator.dt", &values).unwrap();
    let results = sweep(&configs);
    for (v, r) in values.iter().zip(results) {
        let out = r.unwrap();
        assert_eq!(out.diagnostics_path, dir.path().join(format!("d.{v}.csv")));
        assert!(out.diagnostics_path.exists());
    }
    assert!(sweep_configs(&raw, "integrator.bogus", &values).is_err());
}

fn config_text(
    (hbar, c, mass): (f64, f64, f64),
    (n, l): (usize, f64),
    kind: u8,
    (dt, steps, stride): (f64, usize, usize),
) -> String {
    let initial = match kind {
        0 => "initial.kind = plane_wave\ninitial.branch = minus\ninitial.mode = 3\ninitial.amplitude = 0.5,-0.25\n".to_string(),
        1 => format!(
            "initial.kind = gaussian\ninitial.branch = standing\ninitial.center = {}\ninitial.width = {}\ninitial.wavenumber = 0.75\n",
            l / 3.0,
            l / 10.0
        ),
        2 => format!("initial.kind = pure_plus\ninitial.center = {}\ninitial.width = {}\n", l / 2.0, l / 9.0),
        _ => "initial.kind = superposition\ninitial.modes = 1;-2;0\ninitial.branches = plus;minus;standing\ninitial.amplitudes = 1;0,1;0.3,0.1\n".to_string(),
    };
    format!(
        "params.hbar = {hbar}\nparams.c = {c}\nparams.mass = {mass}\ngrid.dim = 1\ngrid.points = {n}\ngrid.lengths = {l}\n{initial}\
         integrator.scheme = rk4_coupled\nintegrator.dt = {dt}\nintegrator.t_final = {}\nintegrator.sample_stride = {stride}\n",
        dt * steps as f64
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        params in (0.1f64..5.0, 0.1f64..5.0, 0.01f64..5.0),
        grid in (16usize..64, 4.0f64..200.0),
        kind in 0u8..4,
        integ in (1e-4f64..0.1, 1usize..100, 1usize..10),
    ) {
        let text = config_text(params, (2 * grid.0, grid.1), kind, integ);
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&cfg.to_text()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.to_text(), again.to_text());
    }
}
