//! Numerical laboratory for discrete Lagrangian systems on Lie groups.
//!
//! * [`grid`], [`circle`]: smooth periodic functions and orientation-preserving
//!   circle diffeomorphisms on a uniform grid, with spectral calculus,
//!   composition and inversion.
//! * [`virasoro`]: the Virasoro group (Bott cocycle) and algebra
//!   (Gelfand-Fuchs cocycle), the H^1 metric and its inertia operator.
//! * [`ch`]: the Camassa-Holm family of Euler equations: orbit
//!   classification, symmetries, pseudo-spectral evolution and monitors.
//! * [`mv`]: the Moser-Veselov discrete rigid body on SO(N) and its
//!   continuous Euler-Arnold limit.
//! * [`discrete`]: right-invariant discrete Lagrangians on Vir, the discrete
//!   action with its stationarity oracle, and the Hunter-Saxton steppers.
//!
//! Inner loops are data-parallel under the default `parallel` feature and
//! produce bit-identical results without it.

// `!(x < tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ch;
pub mod circle;
pub mod discrete;
pub mod error;
pub mod grid;
pub mod mv;
pub mod par;
pub mod random;
pub mod spectral;
pub mod virasoro;

pub use circle::CircleDiffeo;
pub use error::{Error, Result};
pub use grid::{GridConfig, PeriodicFunction};
pub use virasoro::{MetricParams, VirasoroAlgebraElement, VirasoroElement};
