#![allow(dead_code)]

use kgembed::{make_grid, Complex64, ComplexField, GridSpec, Representation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(grid: &GridSpec, rng: &mut ChaCha8Rng) -> ComplexField {
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexField::from_values(grid, Representation::Position, values).unwrap()
}

/// Random field with spectral content confined to |k| below `kmax`, so time
/// integrators can resolve it.
pub fn smooth_field(grid: &GridSpec, kmax: f64, rng: &mut ChaCha8Rng) -> ComplexField {
    let values = (0..grid.len())
        .map(|i| {
            if grid.k_squared(i) <= kmax * kmax {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    ComplexField::from_values(grid, Representation::Spectral, values)
        .unwrap()
        .into_position()
}

/// 1-D or 2-D grid chosen from a seed, with even point counts.
pub fn random_grid(rng: &mut ChaCha8Rng) -> GridSpec {
    let dim = rng.gen_range(1..=2);
    let points: Vec<usize> = (0..dim).map(|_| 2 * rng.gen_range(1..=16)).collect();
    let lengths: Vec<f64> = (0..dim).map(|_| rng.gen_range(1.0..40.0)).collect();
    make_grid(dim, &points, &lengths).unwrap()
}

/// Real-valued relative closeness with an absolute floor.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
