//! Run configuration in a flat `key = value` text format.
//!
//! ```text
//! # comment
//! params.mass = 1.0
//! grid.dim = 1
//! grid.points = 256
//! grid.lengths = 62.83185307179586
//! initial.kind = gaussian
//! ...
//! ```
//!
//! Keys are dotted paths, order does not matter, list values are comma
//! separated and superposition components are separated by `;`. Unknown keys
//! and keys that the selected `initial.kind` does not use are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rustfft::num_complex::Complex64;

use crate::error::{KgError, Result};
use crate::evolution::{IntegratorConfig, Scheme};
use crate::grid::{make_grid, GridSpec, PhysicalParams};
use crate::init::{Branch, InitialConditionSpec, InitialKind, Packet, PlaneComponent};

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub diagnostics_path: PathBuf,
    pub snapshot_path: Option<PathBuf>,
    pub snapshot_stride: usize,
}

/// Thresholds used by the `check` suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckThresholds {
    pub conservation_tol: f64,
    pub identity_tol: f64,
    pub constraint_tol: f64,
    pub cross_term_tol: f64,
    pub projector_tol: f64,
    pub rk4_dt: f64,
    pub rk4_t_final: f64,
    pub rk4_drift_tol: f64,
    pub oracle_dt: f64,
    pub oracle_t_final: f64,
    pub oracle_ratio_min: f64,
    pub oracle_ratio_max: f64,
}

impl Default for CheckThresholds {
    fn default() -> Self {
        Self {
            conservation_tol: 1e-12,
            identity_tol: 1e-10,
            constraint_tol: 1e-11,
            cross_term_tol: 1e-11,
            projector_tol: 1e-12,
            rk4_dt: 1e-3,
            rk4_t_final: 10.0,
            rk4_drift_tol: 1e-8,
            oracle_dt: 2e-3,
            oracle_t_final: 5.0,
            oracle_ratio_min: 3.5,
            oracle_ratio_max: 4.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub grid: GridSpec,
    pub initial: InitialConditionSpec,
    pub integrator: IntegratorConfig,
    pub output: OutputSpec,
    pub check: CheckThresholds,
}

/// Raw `key -> (line, value)` entries of a config file.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| KgError::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(KgError::Parse {
                    line,
                    message: format!("invalid key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(KgError::Parse {
                    line,
                    message: format!("empty value for `{key}`"),
                });
            }
            if let Some((prev, _)) = entries.insert(key.to_string(), (line, value.to_string())) {
                return Err(KgError::Parse {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {prev})"),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Sets (or replaces) a key; used by parameter sweeps.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), (0, value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    used: std::cell::RefCell<Vec<&'a str>>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Self {
            raw,
            used: Default::default(),
        }
    }

    fn opt(&self, key: &str) -> Option<&'a str> {
        let (k, (_, v)) = self.raw.entries.get_key_value(key)?;
        self.used.borrow_mut().push(k.as_str());
        Some(v.as_str())
    }

    fn req(&self, key: &str) -> Result<&'a str> {
        self.opt(key)
            .ok_or_else(|| KgError::config(key, "required key is missing"))
    }

    fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        v.parse::<T>()
            .map_err(|e| KgError::config(key, format!("cannot parse `{v}`: {e}")))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.opt(key).map_or(Ok(default), |v| Self::parse(key, v))
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        Self::parse(key, self.req(key)?)
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.opt(key).map_or(Ok(default), |v| Self::parse(key, v))
    }

    fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        v.split(',').map(|s| Self::parse(key, s.trim())).collect()
    }

    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        for (key, (line, _)) in &self.raw.entries {
            if !used.contains(&key.as_str()) {
                let reason = if key.starts_with("initial.") {
                    "unknown key, or not used by the selected initial.kind"
                } else {
                    "unknown key"
                };
                let reason = if *line > 0 {
                    format!("{reason} (line {line})")
                } else {
                    reason.to_string()
                };
                return Err(KgError::config(key.clone(), reason));
            }
        }
        Ok(())
    }
}

fn parse_complex(key: &str, v: &str) -> Result<Complex64> {
    let parts: Vec<f64> = Reader::list(key, v)?;
    match parts.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(KgError::config(key, "expected `re` or `re,im`")),
    }
}

fn parse_branch(key: &str, v: &str) -> Result<Branch> {
    v.parse().map_err(|e: String| KgError::config(key, e))
}

fn read_packet(r: &Reader, grid: &GridSpec) -> Result<Packet> {
    let packet = Packet {
        center: Reader::list("initial.center", r.req("initial.center")?)?,
        width: r.f64_req("initial.width")?,
        wavenumber: match r.opt("initial.wavenumber") {
            Some(v) => Reader::list("initial.wavenumber", v)?,
            None => vec![0.0; grid.dim()],
        },
    };
    crate::init::check_packet(grid, &packet)?;
    Ok(packet)
}

fn read_initial(r: &Reader, grid: &GridSpec) -> Result<InitialConditionSpec> {
    let amplitude = r
        .opt("initial.amplitude")
        .map_or(Ok(Complex64::new(1.0, 0.0)), |v| parse_complex("initial.amplitude", v))?;
    if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
        return Err(KgError::config("initial.amplitude", "must be finite"));
    }
    let kind_name = r.req("initial.kind")?;
    let uses_branch = matches!(kind_name, "plane_wave" | "gaussian");
    let branch = match (uses_branch, r.opt("initial.branch")) {
        (true, Some(v)) => parse_branch("initial.branch", v)?,
        (true, None) => Branch::Plus,
        (false, Some(_)) => {
            return Err(KgError::config(
                "initial.branch",
                format!("not used by initial.kind = {kind_name}"),
            ))
        }
        (false, None) => Branch::Plus,
    };
    let kind = match kind_name {
        "plane_wave" => {
            let mode: Vec<i64> = Reader::list("initial.mode", r.req("initial.mode")?)?;
            grid.mode_flat_index(&mode)?;
            InitialKind::PlaneWave { mode }
        }
        "gaussian" => InitialKind::Gaussian(read_packet(r, grid)?),
        "pure_plus" => InitialKind::PurePlus(read_packet(r, grid)?),
        "pure_minus" => InitialKind::PureMinus(read_packet(r, grid)?),
        "superposition" => {
            let modes: Vec<Vec<i64>> = r
                .req("initial.modes")?
                .split(';')
                .map(|m| Reader::list("initial.modes", m.trim()))
                .collect::<Result<_>>()?;
            let branches: Vec<Branch> = r
                .req("initial.branches")?
                .split(';')
                .map(|b| parse_branch("initial.branches", b.trim()))
                .collect::<Result<_>>()?;
            let amplitudes: Vec<Complex64> = match r.opt("initial.amplitudes") {
                Some(v) => v
                    .split(';')
                    .map(|a| parse_complex("initial.amplitudes", a.trim()))
                    .collect::<Result<_>>()?,
                None => vec![Complex64::new(1.0, 0.0); modes.len()],
            };
            if branches.len() != modes.len() || amplitudes.len() != modes.len() {
                return Err(KgError::config(
                    "initial.modes",
                    "initial.modes, initial.branches and initial.amplitudes must have the same number of entries",
                ));
            }
            for m in &modes {
                grid.mode_flat_index(m)
                    .map_err(|_| KgError::config("initial.modes", format!("mode {m:?} is not a valid grid mode")))?;
            }
            InitialKind::Superposition(
                modes
                    .into_iter()
                    .zip(branches)
                    .zip(amplitudes)
                    .map(|((mode, branch), amplitude)| PlaneComponent {
                        mode,
                        branch,
                        amplitude,
                    })
                    .collect(),
            )
        }
        other => {
            return Err(KgError::config(
                "initial.kind",
                format!(
                    "unknown kind `{other}` (expected plane_wave, gaussian, pure_plus, pure_minus or superposition)"
                ),
            ))
        }
    };
    Ok(InitialConditionSpec {
        kind,
        amplitude,
        branch,
    })
}

fn read_params(r: &Reader) -> Result<PhysicalParams> {
    let hbar = r.f64_or("params.hbar", 1.0)?;
    let c = r.f64_or("params.c", 1.0)?;
    let mass = r.f64_or("params.mass", 1.0)?;
    PhysicalParams::new(hbar, c, mass).map_err(|e| match e {
        KgError::NotInvertible { mass } => KgError::config(
            "params.mass",
            format!(
                "must be > 0 (got {mass}): D = i*sqrt(m^2 c^4 - hbar^2 c^2 Laplacian) is invertible only for m > 0"
            ),
        ),
        other => other,
    })
}

impl RawConfig {
    /// Validates every key and builds the typed configuration.
    pub fn build(&self) -> Result<RunConfig> {
        let r = Reader::new(self);
        let params = read_params(&r)?;

        let dim: usize = Reader::parse("grid.dim", r.req("grid.dim")?)?;
        let points: Vec<usize> = Reader::list("grid.points", r.req("grid.points")?)?;
        let lengths: Vec<f64> = Reader::list("grid.lengths", r.req("grid.lengths")?)?;
        let grid = make_grid(dim, &points, &lengths)?;

        let initial = read_initial(&r, &grid)?;

        let scheme: Scheme = r
            .req("integrator.scheme")?
            .parse()
            .map_err(|e: String| KgError::config("integrator.scheme", e))?;
        let integrator = IntegratorConfig {
            scheme,
            dt: r.f64_req("integrator.dt")?,
            t_final: r.f64_req("integrator.t_final")?,
            sample_stride: r.usize_or("integrator.sample_stride", 1)?,
        };
        integrator.validate_with(params.energy(grid.max_k_squared()), params.hbar)?;

        let snapshot_path = match r.opt("output.snapshot_path") {
            None | Some("none") => None,
            Some(p) => Some(PathBuf::from(p)),
        };
        let output = OutputSpec {
            diagnostics_path: PathBuf::from(r.opt("output.diagnostics_path").unwrap_or("diagnostics.csv")),
            snapshot_path,
            snapshot_stride: r.usize_or("output.snapshot_stride", 1)?,
        };
        if output.snapshot_stride == 0 {
            return Err(KgError::config("output.snapshot_stride", "must be >= 1"));
        }

        let d = CheckThresholds::default();
        let check = CheckThresholds {
            conservation_tol: r.f64_or("check.conservation_tol", d.conservation_tol)?,
            identity_tol: r.f64_or("check.identity_tol", d.identity_tol)?,
            constraint_tol: r.f64_or("check.constraint_tol", d.constraint_tol)?,
            cross_term_tol: r.f64_or("check.cross_term_tol", d.cross_term_tol)?,
            projector_tol: r.f64_or("check.projector_tol", d.projector_tol)?,
            rk4_dt: r.f64_or("check.rk4_dt", d.rk4_dt)?,
            rk4_t_final: r.f64_or("check.rk4_t_final", d.rk4_t_final)?,
            rk4_drift_tol: r.f64_or("check.rk4_drift_tol", d.rk4_drift_tol)?,
            oracle_dt: r.f64_or("check.oracle_dt", d.oracle_dt)?,
            oracle_t_final: r.f64_or("check.oracle_t_final", d.oracle_t_final)?,
            oracle_ratio_min: r.f64_or("check.oracle_ratio_min", d.oracle_ratio_min)?,
            oracle_ratio_max: r.f64_or("check.oracle_ratio_max", d.oracle_ratio_max)?,
        };
        for (key, v) in [
            ("check.rk4_dt", check.rk4_dt),
            ("check.rk4_t_final", check.rk4_t_final),
            ("check.oracle_dt", check.oracle_dt),
            ("check.oracle_t_final", check.oracle_t_final),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(KgError::config(key, "must be finite and > 0"));
            }
        }

        r.finish()?;
        Ok(RunConfig {
            params,
            grid,
            initial,
            integrator,
            output,
            check,
        })
    }
}

/// Parses and validates a config file's text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    RawConfig::parse(text)?.build()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn complex(c: Complex64) -> String {
    format!("{},{}", c.re, c.im)
}

impl RunConfig {
    /// Serializes back to the key-value format. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(s, "params.hbar = {}", p.hbar);
        let _ = writeln!(s, "params.c = {}", p.c);
        let _ = writeln!(s, "params.mass = {}", p.mass);
        let _ = writeln!(s, "grid.dim = {}", self.grid.dim());
        let _ = writeln!(s, "grid.points = {}", join(self.grid.points()));
        let _ = writeln!(s, "grid.lengths = {}", join(self.grid.lengths()));

        let init = &self.initial;
        let _ = writeln!(s, "initial.kind = {}", init.kind.name());
        let _ = writeln!(s, "initial.amplitude = {}", complex(init.amplitude));
        match &init.kind {
            InitialKind::PlaneWave { mode } => {
                let _ = writeln!(s, "initial.branch = {}", init.branch);
                let _ = writeln!(s, "initial.mode = {}", join(mode));
            }
            InitialKind::Gaussian(pk) | InitialKind::PurePlus(pk) | InitialKind::PureMinus(pk) => {
                if matches!(init.kind, InitialKind::Gaussian(_)) {
                    let _ = writeln!(s, "initial.branch = {}", init.branch);
                }
                let _ = writeln!(s, "initial.center = {}", join(&pk.center));
                let _ = writeln!(s, "initial.width = {}", pk.width);
                let _ = writeln!(s, "initial.wavenumber = {}", join(&pk.wavenumber));
            }
            InitialKind::Superposition(parts) => {
                let modes: Vec<String> = parts.iter().map(|c| join(&c.mode)).collect();
                let branches: Vec<String> = parts.iter().map(|c| c.branch.to_string()).collect();
                let amps: Vec<String> = parts.iter().map(|c| complex(c.amplitude)).collect();
                let _ = writeln!(s, "initial.modes = {}", modes.join(";"));
                let _ = writeln!(s, "initial.branches = {}", branches.join(";"));
                let _ = writeln!(s, "initial.amplitudes = {}", amps.join(";"));
            }
        }

        let it = &self.integrator;
        let _ = writeln!(s, "integrator.scheme = {}", it.scheme);
        let _ = writeln!(s, "integrator.dt = {}", it.dt);
        let _ = writeln!(s, "integrator.t_final = {}", it.t_final);
        let _ = writeln!(s, "integrator.sample_stride = {}", it.sample_stride);

        let o = &self.output;
        let _ = writeln!(s, "output.diagnostics_path = {}", o.diagnostics_path.display());
        match &o.snapshot_path {
            Some(p) => {
                let _ = writeln!(s, "output.snapshot_path = {}", p.display());
            }
            None => {
                let _ = writeln!(s, "output.snapshot_path = none");
            }
        }
        let _ = writeln!(s, "output.snapshot_stride = {}", o.snapshot_stride);

        let c = &self.check;
        for (k, v) in [
            ("conservation_tol", c.conservation_tol),
            ("identity_tol", c.identity_tol),
            ("constraint_tol", c.constraint_tol),
            ("cross_term_tol", c.cross_term_tol),
            ("projector_tol", c.projector_tol),
            ("rk4_dt", c.rk4_dt),
            ("rk4_t_final", c.rk4_t_final),
            ("rk4_drift_tol", c.rk4_drift_tol),
            ("oracle_dt", c.oracle_dt),
            ("oracle_t_final", c.oracle_t_final),
            ("oracle_ratio_min", c.oracle_ratio_min),
            ("oracle_ratio_max", c.oracle_ratio_max),
        ] {
            let _ = writeln!(s, "check.{k} = {v}");
        }
        s
    }
}

/// The shipped default configuration: N = 256 on L = 20π, ħ = c = m = 1,
/// branch-plus Gaussian (width 2, k₀ = 0.5), exact propagation to t = 100.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.conf");
