//! Pseudo-differential operators diagonal in the Fourier basis.
//!
//! H has symbol E(k) = √(m²c⁴ + c²ħ²|k|²) (principal root). D = iH, and since
//! H is self-adjoint and real-symbol, D* = −D. Every operator here is applied
//! by transforming to spectral space, multiplying by the symbol and
//! transforming back; fields already tagged spectral skip both transforms.

use rustfft::num_complex::Complex64;

use crate::error::{KgError, Result};
use crate::field::ComplexField;
use crate::grid::{GridSpec, PhysicalParams};
use crate::par;

/// Which of the two components a projector or branch refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// E(k) tabulated on every grid wavenumber.
#[derive(Debug, Clone)]
pub struct OperatorSymbol {
    grid: GridSpec,
    params: PhysicalParams,
    values: Vec<f64>,
    max: f64,
}

/// Tabulates the energy symbol. Fails with [`KgError::NotInvertible`] if the
/// mass is not strictly positive.
pub fn build_symbol(grid: &GridSpec, params: &PhysicalParams) -> Result<OperatorSymbol> {
    let params = PhysicalParams::new(params.hbar, params.c, params.mass)?;
    let mut values = vec![0.0; grid.len()];
    par::for_each_mut(&mut values, |i, v| *v = params.energy(grid.k_squared(i)));
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(OperatorSymbol {
        grid: grid.clone(),
        params,
        values,
        max,
    })
}

impl OperatorSymbol {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest symbol value (attained at the corner of the wavenumber box).
    pub fn max_energy(&self) -> f64 {
        self.max
    }

    pub fn min_energy(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Multiplies the spectral coefficients of `f` by `m(E(k))`.
    pub fn apply_multiplier<M>(&self, f: &ComplexField, m: M) -> Result<ComplexField>
    where
        M: Fn(f64) -> Complex64 + Sync + Send,
    {
        if !self.grid.same_as(f.grid()) {
            return Err(KgError::GridMismatch);
        }
        let repr = f.representation();
        let mut out = f.to_spectral();
        let symbol = &self.values;
        par::for_each_mut(out.values_mut(), |i, v| *v *= m(symbol[i]));
        Ok(out.into_repr(repr))
    }

    pub fn apply_h(&self, f: &ComplexField) -> Result<ComplexField> {
        self.apply_multiplier(f, |e| Complex64::new(e, 0.0))
    }

    pub fn apply_h_inv(&self, f: &ComplexField) -> Result<ComplexField> {
        self.apply_multiplier(f, |e| Complex64::new(1.0 / e, 0.0))
    }

    /// D = iH.
    pub fn apply_d(&self, f: &ComplexField) -> Result<ComplexField> {
        self.apply_multiplier(f, |e| Complex64::new(0.0, e))
    }

    /// D⁻¹ = −iH⁻¹.
    pub fn apply_d_inv(&self, f: &ComplexField) -> Result<ComplexField> {
        self.apply_multiplier(f, |e| Complex64::new(0.0, -1.0 / e))
    }

    /// D* = −D = −iH.
    pub fn apply_d_star(&self, f: &ComplexField) -> Result<ComplexField> {
        self.apply_multiplier(f, |e| Complex64::new(0.0, -e))
    }

    /// Π± f = f ± i·H⁻¹(ħ·∂ₜf).
    pub fn apply_pi(&self, f: &ComplexField, dfdt: &ComplexField, sign: Sign) -> Result<ComplexField> {
        let hbar = self.params.hbar;
        let s = sign.as_f64();
        let term = self.apply_multiplier(dfdt, move |e| Complex64::new(0.0, s * hbar / e))?;
        f.add(&term)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Representation};
    use std::f64::consts::{PI, SQRT_2};

    fn unit_grid() -> GridSpec {
        // L = 2π so mode index 1 has |k| = 1.
        make_grid(1, &[32], &[2.0 * PI]).unwrap()
    }

    fn sym(grid: &GridSpec) -> OperatorSymbol {
        build_symbol(grid, &PhysicalParams::natural()).unwrap()
    }

    #[test]
    fn symbol_values() {
        let g = unit_grid();
        let s = sym(&g);
        assert_eq!(s.values()[0], 1.0);
        assert!((s.values()[1] - SQRT_2).abs() < 1e-15);
        let heavy = build_symbol(
            &g,
            &PhysicalParams {
                hbar: 1.0,
                c: 1.0,
                mass: 2.0,
            },
        )
        .unwrap();
        // E(0) = mc² = 2.
        assert_eq!(heavy.values()[0], 2.0);
        assert!(s.values().iter().all(|&e| e >= 1.0));
        assert_eq!(s.min_energy(), 1.0);
    }

    #[test]
    fn symbol_rejects_nonpositive_mass() {
        let g = unit_grid();
        let bad = PhysicalParams {
            hbar: 1.0,
            c: 1.0,
            mass: 0.0,
        };
        assert!(matches!(build_symbol(&g, &bad), Err(KgError::NotInvertible { .. })));
    }

    #[test]
    fn symbol_is_isotropic() {
        let g = make_grid(2, &[8, 8], &[3.0, 3.0]).unwrap();
        let s = sym(&g);
        for a in 0..8 {
            for b in 0..8 {
                assert_eq!(s.values()[a * 8 + b], s.values()[b * 8 + a]);
            }
        }
    }

    #[test]
    fn plane_wave_eigenvalues() {
        let g = unit_grid();
        let s = sym(&g);
        let f = ComplexField::plane_wave(&g, &[1]).unwrap();
        let h = s.apply_h(&f).unwrap();
        assert!(h.max_abs_diff(&f.scale_real(SQRT_2)).unwrap() < 1e-13);
        let hi = s.apply_h_inv(&f).unwrap();
        assert!(hi.max_abs_diff(&f.scale_real(1.0 / SQRT_2)).unwrap() < 1e-13);
        let d = s.apply_d(&f).unwrap();
        assert!(d.max_abs_diff(&f.scale(Complex64::new(0.0, SQRT_2))).unwrap() < 1e-13);
        assert_eq!(h.representation(), Representation::Position);
    }

    #[test]
    fn constant_and_zero_fields() {
        let g = unit_grid();
        let p = PhysicalParams {
            hbar: 1.0,
            c: 2.0,
            mass: 0.5,
        };
        let s = build_symbol(&g, &p).unwrap();
        let a = Complex64::new(0.3, -1.2);
        let f = ComplexField::from_fn(&g, |_| a);
        let h = s.apply_h(&f).unwrap();
        assert!(h.max_abs_diff(&f.scale_real(2.0)).unwrap() < 1e-14);
        let hi = s.apply_h_inv(&f).unwrap();
        assert!(hi.max_abs_diff(&f.scale_real(0.5)).unwrap() < 1e-14);
        let z = ComplexField::zeros(&g);
        assert_eq!(s.apply_h(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn spectral_input_skips_transforms() {
        let g = unit_grid();
        let s = sym(&g);
        let f = ComplexField::plane_wave(&g, &[2]).unwrap().into_spectral();
        let h = s.apply_h(&f).unwrap();
        assert_eq!(h.representation(), Representation::Spectral);
        let idx = g.mode_flat_index(&[2]).unwrap();
        assert!((h.values()[idx] - f.values()[idx] * 5f64.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn projector_trivial_cases() {
        let g = unit_grid();
        let s = sym(&g);
        let f = ComplexField::plane_wave(&g, &[3]).unwrap();
        let zero = ComplexField::zeros(&g);
        assert!(s.apply_pi(&f, &zero, Sign::Plus).unwrap().max_abs_diff(&f).unwrap() < 1e-15);
        assert!(s.apply_pi(&f, &zero, Sign::Minus).unwrap().max_abs_diff(&f).unwrap() < 1e-15);
    }

    #[test]
    fn grid_mismatch() {
        let s = sym(&unit_grid());
        let other = ComplexField::zeros(&make_grid(1, &[16], &[1.0]).unwrap());
        assert!(matches!(s.apply_h(&other), Err(KgError::GridMismatch)));
    }
}
