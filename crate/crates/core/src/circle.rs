//! Orientation-preserving diffeomorphisms of the circle.
//!
//! A diffeomorphism is the lift `f(x) = x + u(x)` with `u` 2pi-periodic, so
//! `f(x + 2pi) = f(x) + 2pi` holds by construction. Lifts differing by
//! `2pi k` describe the same map; the stored representative has
//! `u(0)` in `[-pi, pi)`.
//!
//! Monotonicity (`f' > 0`) is enforced at grid nodes only. Between nodes the
//! interpolant may dip for badly under-resolved input; that is outside the
//! contract of every operation here.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridConfig, PeriodicFunction, RawSamples};
use crate::par;
use crate::spectral::Interpolant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSamples", into = "RawSamples")]
pub struct CircleDiffeo {
    u: PeriodicFunction,
}

impl TryFrom<RawSamples> for CircleDiffeo {
    type Error = Error;
    fn try_from(raw: RawSamples) -> Result<Self> {
        CircleDiffeo::from_displacement(PeriodicFunction::try_from(raw)?)
    }
}

impl From<CircleDiffeo> for RawSamples {
    fn from(f: CircleDiffeo) -> Self {
        f.u.into()
    }
}

/// Lift `u` by a multiple of 2pi so that `u(0)` lies in `[-pi, pi)`.
fn normalize_representative(mut samples: Vec<f64>) -> Vec<f64> {
    let k = ((samples[0] + PI) / TAU).floor();
    if k != 0.0 {
        let shift = k * TAU;
        for v in &mut samples {
            *v -= shift;
        }
    }
    samples
}

fn check_monotone(derivative: &PeriodicFunction) -> Result<()> {
    // derivative holds f' = 1 + u'
    for (node, &d) in derivative.samples().iter().enumerate() {
        if d.is_nan() || d <= 0.0 {
            return Err(Error::MonotonicityLost {
                node,
                derivative: d,
            });
        }
    }
    Ok(())
}

impl CircleDiffeo {
    pub fn identity(grid: GridConfig) -> Self {
        Self {
            u: PeriodicFunction::zeros(grid),
        }
    }

    /// Rigid rotation `x -> x + a`.
    pub fn rotation(grid: GridConfig, a: f64) -> Self {
        Self {
            u: PeriodicFunction::from_samples_unchecked(
                grid,
                normalize_representative(vec![a; grid.n()]),
            ),
        }
    }

    /// Build from the periodic displacement `u = f - id`; fails if `1 + u'`
    /// is not positive at every node.
    pub fn from_displacement(u: PeriodicFunction) -> Result<Self> {
        let d = u.derivative().map(|v| 1.0 + v);
        check_monotone(&d)?;
        let grid = u.grid();
        Ok(Self {
            u: PeriodicFunction::from_samples_unchecked(
                grid,
                normalize_representative(u.into_samples()),
            ),
        })
    }

    pub fn from_fn(grid: GridConfig, displacement: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_displacement(PeriodicFunction::from_fn(grid, displacement))
    }

    pub fn grid(&self) -> GridConfig {
        self.u.grid()
    }

    pub fn n(&self) -> usize {
        self.u.n()
    }

    pub fn displacement(&self) -> &PeriodicFunction {
        &self.u
    }

    /// Samples of `f(x_j)`.
    pub fn values(&self) -> Vec<f64> {
        let g = self.grid();
        self.u
            .samples()
            .iter()
            .enumerate()
            .map(|(j, u)| g.node(j) + u)
            .collect()
    }

    /// `f' = 1 + u'` at the nodes.
    pub fn derivative(&self) -> PeriodicFunction {
        self.u.derivative().map(|v| 1.0 + v)
    }

    pub fn evaluator(&self) -> DiffeoEvaluator {
        DiffeoEvaluator {
            u: self.u.interpolant(),
        }
    }

    /// `f o g`.
    pub fn compose(&self, g: &CircleDiffeo) -> Result<CircleDiffeo> {
        self.u.check_same_grid(&g.u)?;
        let grid = self.grid();
        let fu = self.u.interpolant();
        let gu = g.u.samples();
        let samples = par::map_range(grid.n(), |j| {
            let gx = grid.node(j) + gu[j];
            gu[j] + fu.eval(gx)
        });
        CircleDiffeo::from_displacement(PeriodicFunction::from_samples_unchecked(grid, samples))
    }

    /// `f^{-1}`, solving `f(y) = x_j` node by node with safeguarded Newton.
    pub fn invert(&self) -> Result<CircleDiffeo> {
        let grid = self.grid();
        let eval = self.evaluator();
        let (umin, umax) = (self.u.min(), self.u.max());
        let ys = par::try_map_range(grid.n(), |j| {
            let x = grid.node(j);
            eval.solve_preimage(x, x - umax - 0.25, x - umin + 0.25)
        })?;
        let samples = ys.iter().enumerate().map(|(j, y)| y - grid.node(j)).collect();
        Ok(CircleDiffeo {
            u: PeriodicFunction::from_samples_unchecked(grid, normalize_representative(samples)),
        })
    }

    /// Sup-norm distance between two lifts, modulo the 2pi ambiguity.
    pub fn distance(&self, other: &CircleDiffeo) -> f64 {
        let a = self.u.samples();
        let b = other.u.samples();
        let k = ((a[0] - b[0]) / TAU).round() * TAU;
        a.iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y - k).abs()))
    }

    pub fn resample(&self, target: GridConfig) -> Result<CircleDiffeo> {
        CircleDiffeo::from_displacement(self.u.resample(target).function)
    }
}

/// Off-grid evaluation of `f(x) = x + u(x)` through the trigonometric
/// interpolant of `u`.
#[derive(Debug, Clone)]
pub struct DiffeoEvaluator {
    u: Interpolant,
}

impl DiffeoEvaluator {
    pub fn eval(&self, x: f64) -> f64 {
        x + self.u.eval(x)
    }

    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let (v, d) = self.u.eval_with_derivative(x);
        (x + v, 1.0 + d)
    }

    /// Solve `f(y) = target` for `y`, starting from the bracket `[lo, hi]`
    /// (widened if it does not straddle the root).
    pub fn solve_preimage(&self, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
        let residual = |y: f64| self.eval_with_derivative(y);
        let mut widen = 0;
        while residual(lo).0 > target {
            lo -= 1.0;
            widen += 1;
            if widen > 16 {
                return Err(Error::NonConvergence(format!(
                    "cannot bracket preimage of {target}"
                )));
            }
        }
        while residual(hi).0 < target {
            hi += 1.0;
            widen += 1;
            if widen > 32 {
                return Err(Error::NonConvergence(format!(
                    "cannot bracket preimage of {target}"
                )));
            }
        }
        let mut y = 0.5 * (lo + hi);
        let mut converged = 0;
        for _ in 0..200 {
            let (fy, dfy) = residual(y);
            let r = fy - target;
            if r == 0.0 {
                return Ok(y);
            }
            if r > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let newton = y - r / dfy;
            let next = if dfy > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - y).abs();
            y = next;
            // tolerance 1e-13 in y, then one extra step to reach round-off
            if step < 1e-13 || hi - lo < 1e-13 {
                converged += 1;
                if converged >= 2 {
                    return Ok(y);
                }
            }
        }
        Err(Error::NonConvergence(format!(
            "Newton/bisection for preimage of {target} stalled"
        )))
    }
}
