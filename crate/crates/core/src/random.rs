//! Seeded random smooth fields for property checks and experiments.
//!
//! Fields are trigonometric polynomials with at most `modes` harmonics whose
//! coefficients decay like 1/k, rescaled to respect a sup-norm amplitude and,
//! for diffeomorphisms, a slope cap `max |u'|` that keeps `f' >= 1 - cap`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circle::CircleDiffeo;
use crate::grid::{GridConfig, PeriodicFunction};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for item `index` of a batch, so batch items
/// can be generated in any order (or in parallel) reproducibly.
pub fn substream(seed: u64, index: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index + 1);
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub modes: usize,
    /// Sup-norm bound of the oscillating part.
    pub amplitude: f64,
    pub zero_mean: bool,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            modes: 8,
            amplitude: 0.3,
            zero_mean: true,
        }
    }
}

fn trig_coefficients(rng: &mut impl Rng, modes: usize) -> Vec<(usize, f64, f64)> {
    let modes = modes.max(1);
    let count = rng.random_range(1..=modes);
    let mut ks: Vec<usize> = (1..=modes).collect();
    // partial Fisher-Yates to choose `count` distinct harmonics
    for i in 0..count {
        let j = rng.random_range(i..ks.len());
        ks.swap(i, j);
    }
    ks.truncate(count);
    ks.sort_unstable();
    ks.into_iter()
        .map(|k| {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            (k, a / k as f64, b / k as f64)
        })
        .collect()
}

fn eval_trig(coeffs: &[(usize, f64, f64)], x: f64) -> f64 {
    coeffs
        .iter()
        .map(|&(k, a, b)| a * (k as f64 * x).cos() + b * (k as f64 * x).sin())
        .sum()
}

pub fn trig_field(rng: &mut impl Rng, grid: GridConfig, spec: FieldSpec) -> PeriodicFunction {
    let coeffs = trig_coefficients(rng, spec.modes);
    let raw = PeriodicFunction::from_fn(grid, |x| eval_trig(&coeffs, x));
    let sup = raw.sup_norm().max(1e-300);
    let target = spec.amplitude * rng.random_range(0.5..=1.0);
    let mut field = raw.scale(target / sup);
    if !spec.zero_mean {
        let offset = spec.amplitude * rng.random_range(-1.0..1.0);
        field = field.map(|v| v + offset);
    }
    field
}

/// Random diffeomorphism `x + u(x) + shift` with `max |u| <= amplitude`,
/// `max |u'| <= max_slope` and a random rigid shift in `[-pi, pi)` when
/// `with_rotation` is set.
pub fn trig_diffeo(
    rng: &mut impl Rng,
    grid: GridConfig,
    modes: usize,
    amplitude: f64,
    max_slope: f64,
    with_rotation: bool,
) -> CircleDiffeo {
    let coeffs = trig_coefficients(rng, modes);
    let raw = PeriodicFunction::from_fn(grid, |x| eval_trig(&coeffs, x));
    let sup = raw.sup_norm().max(1e-300);
    let slope = raw.derivative().sup_norm().max(1e-300);
    let scale = (amplitude / sup).min(max_slope / slope) * rng.random_range(0.5..=1.0);
    let shift = if with_rotation {
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
    } else {
        0.0
    };
    let u = raw.map(|v| v * scale + shift);
    CircleDiffeo::from_displacement(u).expect("slope cap below 1 keeps the lift monotone")
}
