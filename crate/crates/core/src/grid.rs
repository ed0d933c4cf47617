//! Physical constants, the periodic grid and its discrete Fourier transform.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{KgError, Result};
use crate::par;

/// The constants ħ, c and m entering the operator symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub c: f64,
    pub mass: f64,
}

impl PhysicalParams {
    /// Validates all three constants. A non-positive mass is reported as
    /// [`KgError::NotInvertible`].
    pub fn new(hbar: f64, c: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(KgError::config("params.hbar", "must be a finite value > 0"));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(KgError::config("params.c", "must be a finite value > 0"));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(KgError::NotInvertible { mass });
        }
        Ok(Self { hbar, c, mass })
    }

    /// ħ = c = m = 1.
    pub fn natural() -> Self {
        Self {
            hbar: 1.0,
            c: 1.0,
            mass: 1.0,
        }
    }

    /// m·c², the smallest value of the energy symbol.
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.c * self.c
    }

    /// E(k) = √(m²c⁴ + c²ħ²|k|²).
    pub fn energy(&self, k_squared: f64) -> f64 {
        let mc2 = self.rest_energy();
        (mc2 * mc2 + self.c * self.c * self.hbar * self.hbar * k_squared).sqrt()
    }

    /// dE/dp at p = ħk along one axis, i.e. c²ħk/E(k).
    pub fn group_velocity(&self, k: f64) -> f64 {
        self.c * self.c * self.hbar * k / self.energy(k * k)
    }
}

/// Which basis the values of a [`ComplexField`](crate::ComplexField) are in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Spectral,
}

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct GridInner {
    points: Vec<usize>,
    lengths: Vec<f64>,
    wavenumbers: Vec<Vec<f64>>,
    plans: Vec<AxisPlan>,
}

/// Uniform periodic grid in one to three dimensions, stored row-major with
/// the last axis contiguous.
///
/// Cloning is cheap; the wavenumber tables and FFT plans are shared.
#[derive(Clone)]
pub struct GridSpec {
    inner: Arc<GridInner>,
}

/// Symmetric index wrap: `j` in `[0, n)` to `[-n/2, n/2)`.
pub fn wrap_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Builds a grid after checking `dim` against both lists.
pub fn make_grid(dim: usize, points: &[usize], lengths: &[f64]) -> Result<GridSpec> {
    if !(1..=3).contains(&dim) {
        return Err(KgError::config("grid.dim", format!("must be 1, 2 or 3 (got {dim})")));
    }
    if points.len() != dim {
        return Err(KgError::config(
            "grid.points",
            format!("expected {dim} entries, got {}", points.len()),
        ));
    }
    if lengths.len() != dim {
        return Err(KgError::config(
            "grid.lengths",
            format!("expected {dim} entries, got {}", lengths.len()),
        ));
    }
    for &n in points {
        if n < 2 || n % 2 != 0 {
            return Err(KgError::config(
                "grid.points",
                format!("point counts must be even and >= 2 (got {n})"),
            ));
        }
    }
    for &l in lengths {
        if !(l.is_finite() && l > 0.0) {
            return Err(KgError::config(
                "grid.lengths",
                format!("box lengths must be finite and > 0 (got {l})"),
            ));
        }
    }

    let mut planner = FftPlanner::new();
    let plans = points
        .iter()
        .map(|&n| AxisPlan {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
        .collect();
    let wavenumbers = points
        .iter()
        .zip(lengths)
        .map(|(&n, &l)| (0..n).map(|j| 2.0 * PI * wrap_index(j, n) as f64 / l).collect())
        .collect();

    Ok(GridSpec {
        inner: Arc::new(GridInner {
            points: points.to_vec(),
            lengths: lengths.to_vec(),
            wavenumbers,
            plans,
        }),
    })
}

impl GridSpec {
    pub fn new(points: &[usize], lengths: &[f64]) -> Result<Self> {
        make_grid(points.len(), points, lengths)
    }

    pub fn dim(&self) -> usize {
        self.inner.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.inner.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.inner.lengths
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.inner.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// ∏ Lᵢ/Nᵢ.
    pub fn cell_volume(&self) -> f64 {
        self.inner
            .points
            .iter()
            .zip(&self.inner.lengths)
            .map(|(&n, &l)| l / n as f64)
            .product()
    }

    /// ∏ Lᵢ.
    pub fn volume(&self) -> f64 {
        self.inner.lengths.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.inner.lengths[axis] / self.inner.points[axis] as f64
    }

    /// Wavenumbers of one axis in index order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.inner.wavenumbers[axis]
    }

    /// Splits a flat row-major index into per-axis indices.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize; 3]) {
        for axis in (0..self.dim()).rev() {
            let n = self.inner.points[axis];
            out[axis] = flat % n;
            flat /= n;
        }
    }

    /// Flat row-major index of per-axis indices.
    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.inner.points).fold(0, |acc, (&j, &n)| acc * n + j)
    }

    /// |k|² at a flat index.
    pub fn k_squared(&self, flat: usize) -> f64 {
        let mut idx = [0usize; 3];
        self.unflatten(flat, &mut idx);
        (0..self.dim())
            .map(|a| {
                let k = self.inner.wavenumbers[a][idx[a]];
                k * k
            })
            .sum()
    }

    /// Largest |k|² on the grid (all axes at the Nyquist index).
    pub fn max_k_squared(&self) -> f64 {
        self.inner
            .points
            .iter()
            .zip(&self.inner.lengths)
            .map(|(&n, &l)| {
                let k = PI * n as f64 / l;
                k * k
            })
            .sum()
    }

    /// Coordinates xᵢ = jᵢ·Lᵢ/Nᵢ of a flat index (origin at the box corner).
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let mut idx = [0usize; 3];
        self.unflatten(flat, &mut idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = idx[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Flat index of the grid mode with signed per-axis indices `mode`
    /// (each in `[-N/2, N/2)`).
    pub fn mode_flat_index(&self, mode: &[i64]) -> Result<usize> {
        if mode.len() != self.dim() {
            return Err(KgError::config(
                "initial.mode",
                format!("expected {} indices, got {}", self.dim(), mode.len()),
            ));
        }
        let mut idx = [0usize; 3];
        for (a, (&m, &n)) in mode.iter().zip(&self.inner.points).enumerate() {
            let half = (n / 2) as i64;
            if m < -half || m >= half {
                return Err(KgError::config(
                    "initial.mode",
                    format!("index {m} outside [-{half}, {half}) on axis {a}"),
                ));
            }
            idx[a] = m.rem_euclid(n as i64) as usize;
        }
        Ok(self.flatten(&idx[..self.dim()]))
    }

    /// Wavevector of a signed mode index.
    pub fn mode_wavevector(&self, mode: &[i64]) -> Vec<f64> {
        mode.iter()
            .zip(&self.inner.lengths)
            .map(|(&m, &l)| 2.0 * PI * m as f64 / l)
            .collect()
    }

    /// True when both grids have the same shape and box.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.points == other.inner.points
                && self
                    .inner
                    .lengths
                    .iter()
                    .zip(&other.inner.lengths)
                    .all(|(a, b)| a.to_bits() == b.to_bits()))
    }

    /// Rectangle-rule integral dV·Σ values.
    pub fn integrate_density(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(KgError::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KgError::NonFinite("density"));
        }
        Ok(self.cell_volume() * par::sum_by(values.len(), |i| values[i]))
    }

    /// Unnormalized forward DFT over all axes, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        for axis in 0..self.dim() {
            self.transform_axis(data, axis, true);
        }
    }

    /// Inverse DFT over all axes including the 1/∏Nᵢ factor, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.dim() {
            self.transform_axis(data, axis, false);
        }
        let scale = 1.0 / self.len() as f64;
        par::for_each_mut(data, |_, v| *v *= scale);
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, forward: bool) {
        let plan = &self.inner.plans[axis];
        let fft = if forward { &plan.forward } else { &plan.inverse };
        let n = self.inner.points[axis];
        let stride: usize = self.inner.points[axis + 1..].iter().product();
        // Batch several lines per task so small axes still amortize overhead.
        let batch = n * (par::REDUCE_CHUNK / n).max(1);

        if stride == 1 {
            par::for_each_chunk_mut(data, batch, |c| fft.process(c));
            return;
        }

        // Gather strided lines into contiguous storage, transform, scatter.
        let block = n * stride;
        let mut lines = vec![Complex64::new(0.0, 0.0); data.len()];
        {
            let src: &[Complex64] = data;
            par::for_each_mut(&mut lines, |t, v| {
                let line = t / n;
                let j = t % n;
                let (outer, inner) = (line / stride, line % stride);
                *v = src[outer * block + j * stride + inner];
            });
        }
        par::for_each_chunk_mut(&mut lines, batch, |c| fft.process(c));
        let lines = &lines;
        par::for_each_mut(data, |idx, v| {
            let outer = idx / block;
            let rem = idx % block;
            let (j, inner) = (rem / stride, rem % stride);
            *v = lines[(outer * stride + inner) * n + j];
        });
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.inner.points == other.inner.points && self.inner.lengths == other.inner.lengths
    }
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("points", &self.inner.points)
            .field("lengths", &self.inner.lengths)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_wavenumbers_unit_box() {
        let g = make_grid(1, &[8], &[2.0 * PI]).unwrap();
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.wavenumbers(0).iter().zip(expected) {
            assert!((k - e).abs() < 1e-14, "{k} vs {e}");
        }
    }

    #[test]
    fn wavenumbers_two_dim() {
        let g = make_grid(2, &[4, 4], &[1.0, 1.0]).unwrap();
        let expected = [0.0, 2.0 * PI, -4.0 * PI, -2.0 * PI];
        for axis in 0..2 {
            for (k, e) in g.wavenumbers(axis).iter().zip(expected) {
                assert!((k - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(make_grid(1, &[7], &[1.0]), Err(KgError::Config { .. })));
        assert!(make_grid(1, &[0], &[1.0]).is_err());
        assert!(make_grid(2, &[8], &[1.0]).is_err());
        assert!(make_grid(1, &[8], &[1.0, 2.0]).is_err());
        assert!(make_grid(1, &[8], &[-1.0]).is_err());
        assert!(make_grid(4, &[2, 2, 2, 2], &[1.0; 4]).is_err());
        assert!(make_grid(0, &[], &[]).is_err());
    }

    #[test]
    fn mass_must_be_positive() {
        assert!(matches!(
            PhysicalParams::new(1.0, 1.0, 0.0),
            Err(KgError::NotInvertible { .. })
        ));
        assert!(matches!(
            PhysicalParams::new(1.0, 1.0, -2.0),
            Err(KgError::NotInvertible { .. })
        ));
        assert!(PhysicalParams::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn integrate_constant_zero_and_unit_modulus() {
        let g = make_grid(1, &[8], &[2.0 * PI]).unwrap();
        let v = g.integrate_density(&[1.0; 8]).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-14);
        assert_eq!(g.integrate_density(&[0.0; 8]).unwrap(), 0.0);

        let g3 = make_grid(3, &[4, 6, 8], &[1.0, 2.0, 3.5]).unwrap();
        let v = g3.integrate_density(&vec![1.0; g3.len()]).unwrap();
        assert!((v - 7.0).abs() < 1e-13);
    }

    #[test]
    fn integrate_rejects_nan() {
        let g = make_grid(1, &[4], &[1.0]).unwrap();
        assert!(g.integrate_density(&[1.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn single_mode_real_part_integrates_to_zero() {
        let g = make_grid(2, &[8, 6], &[3.0, 5.0]).unwrap();
        for m0 in -4i64..4 {
            for m1 in -3i64..3 {
                if m0 == 0 && m1 == 0 {
                    continue;
                }
                let k = g.mode_wavevector(&[m0, m1]);
                let vals: Vec<f64> = (0..g.len())
                    .map(|i| {
                        let x = g.position(i);
                        (k[0] * x[0] + k[1] * x[1]).cos()
                    })
                    .collect();
                let v = g.integrate_density(&vals).unwrap();
                assert!(v.abs() < 1e-12 * g.volume(), "mode ({m0},{m1}) -> {v}");
            }
        }
    }

    #[test]
    fn forward_matches_naive_dft_2d() {
        let g = make_grid(2, &[4, 6], &[1.0, 1.0]).unwrap();
        let data: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        g.forward(&mut fast);
        for p in 0..4 {
            for q in 0..6 {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..4 {
                    for b in 0..6 {
                        let phase = -2.0 * PI * ((p * a) as f64 / 4.0 + (q * b) as f64 / 6.0);
                        acc += data[a * 6 + b] * Complex64::from_polar(1.0, phase);
                    }
                }
                assert!((acc - fast[p * 6 + q]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mode_index_bounds() {
        let g = make_grid(1, &[8], &[1.0]).unwrap();
        assert_eq!(g.mode_flat_index(&[-4]).unwrap(), 4);
        assert_eq!(g.mode_flat_index(&[3]).unwrap(), 3);
        assert!(g.mode_flat_index(&[4]).is_err());
        assert!(g.mode_flat_index(&[1, 1]).is_err());
    }
}
