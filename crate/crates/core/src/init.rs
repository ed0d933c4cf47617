//! Initial data: plane waves, periodized Gaussian packets, pure η± states
//! and finite superpositions of plane waves.

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex64;

use crate::embedding::{embed, embed_diagonal, CoupledState};
use crate::error::{KgError, Result};
use crate::field::ComplexField;
use crate::grid::GridSpec;
use crate::ops::{OperatorSymbol, Sign};

/// Image copies summed on each side when periodizing a Gaussian.
pub const GAUSSIAN_IMAGES: i32 = 3;

/// Frequency sign of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// e^{−iωt}, pure η₊.
    Plus,
    /// e^{+iωt}, pure η₋.
    Minus,
    /// ∂ₜψ₀ = 0, equal parts η₊ and η₋.
    Standing,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::Standing => "standing",
        })
    }
}

impl FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "plus" => Ok(Branch::Plus),
            "minus" => Ok(Branch::Minus),
            "standing" => Ok(Branch::Standing),
            other => Err(format!("unknown branch `{other}` (expected plus, minus or standing)")),
        }
    }
}

/// Packet geometry shared by the Gaussian-based initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub center: Vec<f64>,
    pub width: f64,
    pub wavenumber: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneComponent {
    pub mode: Vec<i64>,
    pub branch: Branch,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    PlaneWave {
        mode: Vec<i64>,
    },
    Gaussian(Packet),
    /// η₊ = packet, η₋ = 0.
    PurePlus(Packet),
    /// η₋ = packet, η₊ = 0.
    PureMinus(Packet),
    Superposition(Vec<PlaneComponent>),
}

impl InitialKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitialKind::PlaneWave { .. } => "plane_wave",
            InitialKind::Gaussian(_) => "gaussian",
            InitialKind::PurePlus(_) => "pure_plus",
            InitialKind::PureMinus(_) => "pure_minus",
            InitialKind::Superposition(_) => "superposition",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditionSpec {
    pub kind: InitialKind,
    pub amplitude: Complex64,
    /// Ignored by the pure and superposition kinds.
    pub branch: Branch,
}

/// ∂ₜψ₀ = ∓(i/ħ)Hψ₀ for the plus/minus branch, zero for standing.
fn branch_derivative(psi0: &ComplexField, branch: Branch, sym: &OperatorSymbol) -> Result<ComplexField> {
    let hbar = sym.params().hbar;
    let s = match branch {
        Branch::Plus => -1.0,
        Branch::Minus => 1.0,
        Branch::Standing => return Ok(ComplexField::zeros(psi0.grid())),
    };
    sym.apply_multiplier(psi0, move |e| Complex64::new(0.0, s * e / hbar))
}

/// ψ₀ = e^{ik·x} with ∂ₜψ₀ = ∓i(E(k)/ħ)ψ₀.
pub fn make_plane_wave(
    grid: &GridSpec,
    mode: &[i64],
    branch: Branch,
    sym: &OperatorSymbol,
) -> Result<(ComplexField, ComplexField)> {
    let psi = ComplexField::plane_wave(grid, mode)?;
    let k2: f64 = grid.mode_wavevector(mode).iter().map(|k| k * k).sum();
    let omega = sym.params().energy(k2) / sym.params().hbar;
    let dpsi = match branch {
        Branch::Plus => psi.scale(Complex64::new(0.0, -omega)),
        Branch::Minus => psi.scale(Complex64::new(0.0, omega)),
        Branch::Standing => ComplexField::zeros(grid),
    };
    Ok((psi, dpsi))
}

pub(crate) fn check_packet(grid: &GridSpec, p: &Packet) -> Result<()> {
    let dim = grid.dim();
    if p.center.len() != dim {
        return Err(KgError::config("initial.center", format!("expected {dim} values")));
    }
    if p.wavenumber.len() != dim {
        return Err(KgError::config("initial.wavenumber", format!("expected {dim} values")));
    }
    if !(p.width.is_finite() && p.width > 0.0) {
        return Err(KgError::config("initial.width", "must be finite and > 0"));
    }
    for a in 0..dim {
        let h = grid.spacing(a);
        let l = grid.lengths()[a];
        if p.width < 2.0 * h {
            return Err(KgError::config(
                "initial.width",
                format!("width {} is below two grid spacings ({}) on axis {a}", p.width, 2.0 * h),
            ));
        }
        if p.width > l / 8.0 {
            return Err(KgError::config(
                "initial.width",
                format!("width {} exceeds L/8 = {} on axis {a}", p.width, l / 8.0),
            ));
        }
    }
    Ok(())
}

/// Unnormalized periodized packet Σₙ exp(−|y|²/(4w²))·e^{ik₀·y}, y = x − x₀ − nL,
/// evaluated as a product of one-dimensional image sums.
fn periodized_packet(grid: &GridSpec, p: &Packet, images: i32) -> ComplexField {
    let dim = grid.dim();
    let axes: Vec<Vec<Complex64>> = (0..dim)
        .map(|a| {
            let l = grid.lengths()[a];
            let h = grid.spacing(a);
            (0..grid.points()[a])
                .map(|j| {
                    let x = j as f64 * h;
                    (-images..=images)
                        .map(|n| {
                            let y = x - p.center[a] - n as f64 * l;
                            Complex64::from_polar((-y * y / (4.0 * p.width * p.width)).exp(), p.wavenumber[a] * y)
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut values = vec![Complex64::new(1.0, 0.0); grid.len()];
    crate::par::for_each_mut(&mut values, |i, v| {
        let mut idx = [0usize; 3];
        grid.unflatten(i, &mut idx);
        for a in 0..dim {
            *v *= axes[a][idx[a]];
        }
    });
    ComplexField::from_values(grid, crate::grid::Representation::Position, values).expect("packet samples are finite")
}

/// Gaussian profile normalized to ∫|ψ|² = 1.
pub fn gaussian_profile(grid: &GridSpec, packet: &Packet) -> Result<ComplexField> {
    check_packet(grid, packet)?;
    let f = periodized_packet(grid, packet, GAUSSIAN_IMAGES);
    let n = f.norm();
    Ok(f.scale_real(1.0 / n))
}

/// ψ₀ = A·exp(−|x−x₀|²/(4w²))·e^{ik₀·x} (periodized, ∫|ψ₀|² = 1) with
/// ∂ₜψ₀ built spectrally so the packet is purely forward/backward.
pub fn make_gaussian(
    grid: &GridSpec,
    packet: &Packet,
    branch: Branch,
    sym: &OperatorSymbol,
) -> Result<(ComplexField, ComplexField)> {
    let psi = gaussian_profile(grid, packet)?;
    let dpsi = branch_derivative(&psi, branch, sym)?;
    Ok((psi, dpsi))
}

/// Keeps only the η± component of (ψ₀, ∂ₜψ₀) selected by `sign`, using the
/// projector Π± directly.
pub fn project(psi0: &ComplexField, dpsi_dt0: &ComplexField, sign: Sign, sym: &OperatorSymbol) -> Result<CoupledState> {
    let eta = sym.apply_pi(psi0, dpsi_dt0, sign)?;
    let zero = ComplexField::zeros(psi0.grid());
    match sign {
        Sign::Plus => embed_diagonal(eta, zero),
        Sign::Minus => embed_diagonal(zero, eta),
    }
}

/// Builds (ψ₀, ∂ₜψ₀) for the kinds that are specified that way. Returns
/// `None` for the pure kinds, which are specified through η±.
pub fn initial_data(
    spec: &InitialConditionSpec,
    grid: &GridSpec,
    sym: &OperatorSymbol,
) -> Result<Option<(ComplexField, ComplexField)>> {
    let (psi, dpsi) = match &spec.kind {
        InitialKind::PlaneWave { mode } => make_plane_wave(grid, mode, spec.branch, sym)?,
        InitialKind::Gaussian(p) => make_gaussian(grid, p, spec.branch, sym)?,
        InitialKind::Superposition(parts) => {
            if parts.is_empty() {
                return Err(KgError::config(
                    "initial.modes",
                    "superposition needs at least one component",
                ));
            }
            let mut psi = ComplexField::zeros(grid);
            let mut dpsi = ComplexField::zeros(grid);
            let one = Complex64::new(1.0, 0.0);
            for c in parts {
                let (p, d) = make_plane_wave(grid, &c.mode, c.branch, sym)?;
                psi = psi.combine(one, &p, c.amplitude)?;
                dpsi = dpsi.combine(one, &d, c.amplitude)?;
            }
            (psi, dpsi)
        }
        InitialKind::PurePlus(_) | InitialKind::PureMinus(_) => return Ok(None),
    };
    Ok(Some((psi.scale(spec.amplitude), dpsi.scale(spec.amplitude))))
}

/// The coupled state at t = 0 described by `spec`.
pub fn build_initial(spec: &InitialConditionSpec, grid: &GridSpec, sym: &OperatorSymbol) -> Result<CoupledState> {
    if let Some((psi, dpsi)) = initial_data(spec, grid, sym)? {
        return embed(&psi, &dpsi, sym);
    }
    let zero = ComplexField::zeros(grid);
    match &spec.kind {
        InitialKind::PurePlus(p) => embed_diagonal(gaussian_profile(grid, p)?.scale(spec.amplitude), zero),
        InitialKind::PureMinus(p) => embed_diagonal(zero, gaussian_profile(grid, p)?.scale(spec.amplitude)),
        _ => unreachable!("handled by initial_data"),
    }
}
