//! Uniform periodic grids and smooth 2pi-periodic functions sampled on them.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, Interpolant};

/// Uniform grid on [0, 2pi) with an even number of nodes, at least 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridConfig {
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    n: usize,
}

impl TryFrom<RawGrid> for GridConfig {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        GridConfig::new(raw.n)
    }
}

impl From<GridConfig> for RawGrid {
    fn from(g: GridConfig) -> Self {
        RawGrid { n: g.n }
    }
}

impl GridConfig {
    pub const MIN_NODES: usize = 16;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "n = {n} is below the minimum of {}",
                Self::MIN_NODES
            )));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        spectral::node(j, self.n)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }
}

/// A smooth 2pi-periodic function, stored as samples on a uniform grid and
/// standing for its trigonometric interpolant.
///
/// Serializes as `{"n": int, "samples": [floats]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSamples", into = "RawSamples")]
pub struct PeriodicFunction {
    grid: GridConfig,
    samples: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RawSamples {
    pub n: usize,
    pub samples: Vec<f64>,
}

impl TryFrom<RawSamples> for PeriodicFunction {
    type Error = Error;
    fn try_from(raw: RawSamples) -> Result<Self> {
        if raw.samples.len() != raw.n {
            return Err(Error::GridMismatch {
                left: raw.n,
                right: raw.samples.len(),
            });
        }
        PeriodicFunction::new(raw.samples)
    }
}

impl From<PeriodicFunction> for RawSamples {
    fn from(p: PeriodicFunction) -> Self {
        RawSamples {
            n: p.grid.n,
            samples: p.samples,
        }
    }
}

/// Output of [`PeriodicFunction::resample`].
#[derive(Debug, Clone)]
pub struct Resampled {
    pub function: PeriodicFunction,
    /// Set when the source carried content the target grid cannot represent.
    pub aliasing: Option<AliasingWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliasingWarning {
    /// Largest |c_k| among the discarded or folded modes.
    pub max_discarded_coefficient: f64,
}

impl PeriodicFunction {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let grid = GridConfig::new(samples.len())?;
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: GridConfig, f: impl Fn(f64) -> f64) -> Self {
        let samples = grid.nodes().map(f).collect();
        Self { grid, samples }
    }

    pub fn constant(grid: GridConfig, c: f64) -> Self {
        Self {
            grid,
            samples: vec![c; grid.n],
        }
    }

    pub fn zeros(grid: GridConfig) -> Self {
        Self::constant(grid, 0.0)
    }

    pub(crate) fn from_samples_unchecked(grid: GridConfig, samples: Vec<f64>) -> Self {
        debug_assert_eq!(grid.n, samples.len());
        Self { grid, samples }
    }

    pub fn grid(&self) -> GridConfig {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        Ok(())
    }

    /// Spectral derivative (Fourier multiplier ik).
    pub fn derivative(&self) -> Self {
        self.derivative_n(1)
    }

    pub fn derivative_n(&self, order: u32) -> Self {
        Self::from_samples_unchecked(self.grid, spectral::derivative(&self.samples, order))
    }

    /// Trapezoid rule on [0, 2pi): (2pi/n) sum of samples.
    pub fn integrate(&self) -> f64 {
        self.grid.spacing() * self.samples.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.n() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_samples_unchecked(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination; panics on grid mismatch (internal use only).
    pub(crate) fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self::from_samples_unchecked(
            self.grid,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn try_zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(self.zip_with(other, f))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn interpolant(&self) -> Interpolant {
        Interpolant::new(&self.samples)
    }

    /// Samples of `p(x - s)`.
    pub fn shifted(&self, s: f64) -> Self {
        Self::from_samples_unchecked(self.grid, spectral::shift(&self.samples, s))
    }

    /// 2/3-rule dealiased copy.
    pub fn dealiased(&self) -> Self {
        Self::from_samples_unchecked(self.grid, spectral::dealias(&self.samples))
    }

    /// Trigonometric interpolation onto another grid. Exact when the target
    /// is at least as fine; on coarsening, modes at or above the new Nyquist
    /// are dropped (the cosine part of the new Nyquist mode is kept) and an
    /// [`AliasingWarning`] is attached if any of them was non-negligible.
    pub fn resample(&self, target: GridConfig) -> Resampled {
        let n1 = self.n();
        let n2 = target.n;
        let c = spectral::forward(&self.samples);
        let scale_ref = c.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
        let mut out = vec![Complex64::new(0.0, 0.0); n2];
        let mut discarded = 0.0f64;
        let m1 = n1 / 2;
        let m2 = n2 / 2;
        for (j, &cj) in c.iter().enumerate() {
            let k = spectral::wavenumber(j, n1);
            let ka = k.unsigned_abs() as usize;
            if ka == m1 {
                // source Nyquist: cos(m1 x) = (e^{i m1 x} + e^{-i m1 x}) / 2
                if m1 < m2 {
                    out[m1] += cj * 0.5;
                    out[n2 - m1] += cj * 0.5;
                } else if m1 == m2 {
                    out[m2] += cj;
                } else {
                    discarded = discarded.max(cj.norm());
                }
            } else if ka < m2 {
                let idx = if k >= 0 { ka } else { n2 - ka };
                out[idx] += cj;
            } else if ka == m2 {
                // fold the +/- pair onto the real cosine Nyquist mode
                out[m2] += Complex64::new(cj.re, 0.0);
                discarded = discarded.max(cj.im.abs() * 2.0);
            } else {
                discarded = discarded.max(cj.norm());
            }
        }
        let aliasing = (n2 < n1 && discarded > 1e-13 * scale_ref).then_some(AliasingWarning {
            max_discarded_coefficient: discarded,
        });
        let samples = spectral::inverse_real(out);
        Resampled {
            function: Self::from_samples_unchecked(target, samples),
            aliasing,
        }
    }
}
