use rustfft::num_complex::Complex64;

use crate::error::{KgError, Result};
use crate::grid::{GridSpec, Representation};
use crate::par;

/// Complex samples on a [`GridSpec`], tagged with their representation.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: GridSpec,
    repr: Representation,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            grid: grid.clone(),
            repr: Representation::Position,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Wraps existing values, checking length and finiteness.
    pub fn from_values(grid: &GridSpec, repr: Representation, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(KgError::GridMismatch);
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(KgError::NonFinite("field"));
        }
        Ok(Self {
            grid: grid.clone(),
            repr,
            values,
        })
    }

    /// Samples `f(x)` at every grid point (position representation).
    pub fn from_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        let dim = grid.dim();
        par::for_each_mut(&mut values, |i, v| {
            let x = grid.position(i);
            *v = f(&x[..dim]);
        });
        Self {
            grid: grid.clone(),
            repr: Representation::Position,
            values,
        }
    }

    /// e^{ik·x} for the grid mode with signed indices `mode`.
    pub fn plane_wave(grid: &GridSpec, mode: &[i64]) -> Result<Self> {
        grid.mode_flat_index(mode)?;
        let k = grid.mode_wavevector(mode);
        Ok(Self::from_fn(grid, move |x| {
            let phase: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum();
            Complex64::from_polar(1.0, phase)
        }))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn into_spectral(mut self) -> Self {
        if self.repr == Representation::Position {
            self.grid.forward(&mut self.values);
            self.repr = Representation::Spectral;
        }
        self
    }

    pub fn into_position(mut self) -> Self {
        if self.repr == Representation::Spectral {
            self.grid.inverse(&mut self.values);
            self.repr = Representation::Position;
        }
        self
    }

    pub fn into_repr(self, repr: Representation) -> Self {
        match repr {
            Representation::Position => self.into_position(),
            Representation::Spectral => self.into_spectral(),
        }
    }

    pub fn to_position(&self) -> Self {
        self.clone().into_position()
    }

    pub fn to_spectral(&self) -> Self {
        self.clone().into_spectral()
    }

    pub(crate) fn check_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(KgError::GridMismatch)
        }
    }

    /// `other`'s values in this field's representation, borrowing when no
    /// conversion is needed.
    fn aligned<'a>(&self, other: &'a ComplexField) -> Result<std::borrow::Cow<'a, [Complex64]>> {
        self.check_grid(other)?;
        Ok(if other.repr == self.repr {
            std::borrow::Cow::Borrowed(&other.values)
        } else {
            std::borrow::Cow::Owned(other.clone().into_repr(self.repr).values)
        })
    }

    /// Returns `a·self + b·other`, in this field's representation.
    pub fn combine(&self, a: Complex64, other: &ComplexField, b: Complex64) -> Result<Self> {
        let rhs = self.aligned(other)?;
        let mut out = self.clone();
        par::for_each_mut(&mut out.values, |i, v| *v = a * *v + b * rhs[i]);
        Ok(out)
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        par::for_each_mut(&mut out.values, |_, v| *v *= a);
        out
    }

    pub fn scale_real(&self, a: f64) -> Self {
        self.scale(Complex64::new(a, 0.0))
    }

    /// Discrete L² product dV·Σ conj(f)·g. Spectral fields use Parseval
    /// under the unnormalized forward transform: dV/∏N · Σ conj(f̂)·ĝ.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        let rhs = self.aligned(other)?;
        let lhs = &self.values;
        let re = par::sum_by(lhs.len(), |i| (lhs[i].conj() * rhs[i]).re);
        let im = par::sum_by(lhs.len(), |i| (lhs[i].conj() * rhs[i]).im);
        Ok(Complex64::new(re, im) * self.measure())
    }

    /// ∫|f|².
    pub fn norm_sq(&self) -> f64 {
        let v = &self.values;
        par::sum_by(v.len(), |i| v[i].norm_sqr()) * self.measure()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// L² norm of `self − other`.
    pub fn distance(&self, other: &ComplexField) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Largest elementwise |self − other| after aligning representations.
    pub fn max_abs_diff(&self, other: &ComplexField) -> Result<f64> {
        let rhs = self.aligned(other)?;
        Ok(self
            .values
            .iter()
            .zip(rhs.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn measure(&self) -> f64 {
        match self.repr {
            Representation::Position => self.grid.cell_volume(),
            Representation::Spectral => self.grid.cell_volume() / self.grid.len() as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn sample(grid: &GridSpec) -> ComplexField {
        ComplexField::from_fn(grid, |x| {
            let s: f64 = x.iter().enumerate().map(|(a, x)| (a as f64 + 1.3) * x).sum();
            Complex64::new(s.sin() + 0.2 * s.cos().powi(3), (2.0 * s).cos() - 0.1)
        })
    }

    #[test]
    fn round_trip_transform() {
        for g in [
            make_grid(1, &[256], &[20.0]).unwrap(),
            make_grid(2, &[16, 12], &[3.0, 4.0]).unwrap(),
            make_grid(3, &[8, 4, 6], &[1.0, 2.0, 3.0]).unwrap(),
        ] {
            let f = sample(&g);
            let back = f.to_spectral().into_position();
            let scale = f.max_abs();
            assert!(f.max_abs_diff(&back).unwrap() <= 1e-13 * scale);
        }
    }

    #[test]
    fn parseval_under_unnormalized_forward() {
        let g = make_grid(2, &[16, 8], &[2.0, 5.0]).unwrap();
        let f = sample(&g);
        let spec = f.to_spectral();
        let direct: f64 = g.cell_volume() * f.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
        let spectral: f64 =
            g.volume() / (g.len() as f64).powi(2) * spec.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
        assert!((direct - spectral).abs() <= 1e-12 * direct);
        assert!((spec.norm_sq() - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn plane_wave_has_unit_modulus() {
        let g = make_grid(1, &[32], &[7.0]).unwrap();
        let f = ComplexField::plane_wave(&g, &[3]).unwrap();
        assert!((f.norm_sq() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_representation_arithmetic() {
        let g = make_grid(1, &[16], &[1.0]).unwrap();
        let f = sample(&g);
        let d = f.sub(&f.to_spectral()).unwrap();
        assert!(d.max_abs() < 1e-14);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = ComplexField::zeros(&make_grid(1, &[8], &[1.0]).unwrap());
        let b = ComplexField::zeros(&make_grid(1, &[8], &[2.0]).unwrap());
        assert!(matches!(a.add(&b), Err(KgError::GridMismatch)));
    }

    #[test]
    fn from_values_rejects_nan() {
        let g = make_grid(1, &[2], &[1.0]).unwrap();
        let v = vec![Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0)];
        assert!(ComplexField::from_values(&g, Representation::Position, v).is_err());
    }
}
