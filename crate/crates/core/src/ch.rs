//! The Camassa-Holm family
//!
//! ```text
//! alpha (v_t + 3 v v_x) - beta (v_xxt + 2 v_x v_xx + v v_xxx) - b v_xxx = 0
//! ```
//!
//! is evolved in momentum form: with `m = alpha v - beta v_xx`,
//!
//! ```text
//! m_t = -(v m_x + 2 v_x m) + b v_xxx,    v_t = (alpha - beta d_xx)^{-1} m_t.
//! ```
//!
//! Expanding `v m_x + 2 v_x m` gives `3 alpha v v_x - beta (v v_xxx + 2 v_x v_xx)`,
//! so the two forms agree identically; [`ch1_residual`] checks it by direct
//! substitution.
//!
//! Time stepping is fourth-order Runge-Kutta in integrating-factor (Lawson)
//! form: the dispersive part `b v_xxx / (alpha + beta k^2)` is diagonal in
//! Fourier space and is propagated exactly, the quadratic terms go through
//! RK4 with 2/3-rule dealiasing. With `b = 0` this is classical RK4. The
//! nonlinear terms still need `dt * n * max|v| = O(1)`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PeriodicFunction;
use crate::par;
use crate::spectral;
use crate::virasoro::{apply_multiplier, divide_multiplier, MetricParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct CHParams {
    alpha: f64,
    beta: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    beta: f64,
    b: f64,
}

impl TryFrom<RawParams> for CHParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        CHParams::new(r.alpha, r.beta, r.b)
    }
}

impl From<CHParams> for RawParams {
    fn from(p: CHParams) -> Self {
        RawParams {
            alpha: p.alpha,
            beta: p.beta,
            b: p.b,
        }
    }
}

impl CHParams {
    /// `alpha, beta >= 0`. `alpha = beta = 0` is accepted only with `b != 0`
    /// (the degenerate orbit `v_xxx = 0`).
    pub fn new(alpha: f64, beta: f64, b: f64) -> Result<Self> {
        if ![alpha, beta, b].iter().all(|v| v.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "(alpha, beta, b) = ({alpha}, {beta}, {b})"
            )));
        }
        if alpha == 0.0 && beta == 0.0 && b == 0.0 {
            return Err(Error::InvalidParams("alpha = beta = b = 0".into()));
        }
        Ok(Self { alpha, beta, b })
    }

    pub fn camassa_holm() -> Self {
        Self::new(1.0, 1.0, 0.0).unwrap()
    }

    /// `v_t + 3 v v_x + v_xxx = 0`.
    pub fn kdv() -> Self {
        Self::new(1.0, 0.0, -1.0).unwrap()
    }

    pub fn hopf() -> Self {
        Self::new(1.0, 0.0, 0.0).unwrap()
    }

    pub fn hunter_saxton() -> Self {
        Self::new(0.0, 1.0, 0.0).unwrap()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn b(&self) -> f64 {
        self.b
    }

    fn metric(&self) -> Result<MetricParams> {
        MetricParams::new(self.alpha, self.beta)
            .map_err(|_| Error::NotEvolvable(OrbitClass::LinearDegenerate.name().into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitClass {
    CamassaHolm,
    KdV,
    HopfDispersionless,
    HunterSaxton,
    LinearDegenerate,
}

impl OrbitClass {
    pub fn name(&self) -> &'static str {
        match self {
            OrbitClass::CamassaHolm => "CamassaHolm",
            OrbitClass::KdV => "KdV",
            OrbitClass::HopfDispersionless => "HopfDispersionless",
            OrbitClass::HunterSaxton => "HunterSaxton",
            OrbitClass::LinearDegenerate => "LinearDegenerate",
        }
    }
}

pub fn classify(p: CHParams) -> OrbitClass {
    match (p.alpha != 0.0, p.beta != 0.0, p.b != 0.0) {
        (true, true, _) => OrbitClass::CamassaHolm,
        (true, false, true) => OrbitClass::KdV,
        (true, false, false) => OrbitClass::HopfDispersionless,
        (false, true, _) => OrbitClass::HunterSaxton,
        (false, false, _) => OrbitClass::LinearDegenerate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityState {
    pub v: PeriodicFunction,
    pub t: f64,
}

impl VelocityState {
    pub fn new(v: PeriodicFunction, t: f64) -> Self {
        Self { v, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved {
    pub momentum: f64,
    pub energy: f64,
}

fn require_zero_mean(v: &PeriodicFunction, p: CHParams) -> Result<()> {
    if p.alpha == 0.0 {
        let mean = v.mean();
        if mean.abs() > 1e-12 * v.sup_norm().max(1.0) {
            return Err(Error::SingularInertia(format!(
                "alpha = 0 requires zero-mean v, got mean {mean:.3e}"
            )));
        }
    }
    Ok(())
}

fn check_finite(v: &PeriodicFunction, step: usize, last: &VelocityState) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonSmoothState {
            step,
            last_valid: Box::new(last.clone()),
        })
    }
}

/// Dealiased `v m_x + 2 v_x m` for `m = A v`.
fn transport_term(v: &PeriodicFunction, metric: MetricParams) -> PeriodicFunction {
    let m = apply_multiplier(v, metric);
    let vx = v.derivative();
    let mx = m.derivative();
    v.mul(&mx).add(&vx.mul(&m).scale(2.0)).dealiased()
}

/// `v_t` solved from the equation for the given state.
pub fn rhs(s: &VelocityState, p: CHParams) -> Result<PeriodicFunction> {
    let metric = p.metric()?;
    if !s.v.is_finite() {
        return Err(Error::NonSmoothState {
            step: 0,
            last_valid: Box::new(s.clone()),
        });
    }
    require_zero_mean(&s.v, p)?;
    let mut mt = transport_term(&s.v, metric).scale(-1.0);
    if p.b != 0.0 {
        mt = mt.add(&s.v.derivative_n(3).scale(p.b));
    }
    if p.alpha == 0.0 {
        // the mean of m_t vanishes analytically; drop round-off
        let mean = mt.mean();
        mt = mt.map(|x| x - mean);
    }
    divide_multiplier(&mt, metric)
}

/// Pointwise residual of the equation for a field `v` and a proposed `v_t`,
/// with every product formed without dealiasing.
pub fn ch1_residual(v: &PeriodicFunction, vt: &PeriodicFunction, p: CHParams) -> PeriodicFunction {
    let vx = v.derivative();
    let vxx = v.derivative_n(2);
    let vxxx = v.derivative_n(3);
    let vxxt = vt.derivative_n(2);
    let grid = v.grid();
    let samples = (0..v.n())
        .map(|j| {
            let (v, vx, vxx, vxxx) = (v.samples()[j], vx.samples()[j], vxx.samples()[j], vxxx.samples()[j]);
            let (vt, vxxt) = (vt.samples()[j], vxxt.samples()[j]);
            p.alpha * (vt + 3.0 * v * vx) - p.beta * (vxxt + 2.0 * vx * vxx + v * vxxx) - p.b * vxxx
        })
        .collect();
    PeriodicFunction::from_samples_unchecked(grid, samples)
}

struct Stepper {
    metric: MetricParams,
    alpha_zero: bool,
    n: usize,
    /// exp(L dt / 2) per spectrum index
    half: Vec<Complex64>,
    dt: f64,
}

impl Stepper {
    fn new(p: CHParams, n: usize, dt: f64) -> Result<Self> {
        let metric = p.metric()?;
        let half = (0..n)
            .map(|j| {
                let d3 = spectral::derivative_multiplier(j, n, 3);
                let sym = metric.multiplier(j, n);
                let l = if sym == 0.0 { Complex64::new(0.0, 0.0) } else { d3 * (p.b / sym) };
                (l * (0.5 * dt)).exp()
            })
            .collect();
        Ok(Self {
            metric,
            alpha_zero: p.alpha == 0.0,
            n,
            half,
            dt,
        })
    }

    /// Fourier coefficients of `-A^{-1}(v m_x + 2 v_x m)`.
    fn nonlinear(&self, vhat: &[Complex64]) -> Vec<Complex64> {
        let v = PeriodicFunction::from_samples_unchecked(
            crate::GridConfig::new(self.n).expect("valid grid"),
            spectral::inverse_real(vhat.to_vec()),
        );
        let t = transport_term(&v, self.metric);
        let mut c = spectral::forward(t.samples());
        for (j, cj) in c.iter_mut().enumerate() {
            if j == 0 && self.alpha_zero {
                *cj = Complex64::new(0.0, 0.0);
            } else {
                *cj = -*cj / self.metric.multiplier(j, self.n);
            }
        }
        c
    }

    fn step(&self, v: &[Complex64]) -> Vec<Complex64> {
        let h = self.dt;
        let e = &self.half;
        let n1 = self.nonlinear(v);
        let va: Vec<Complex64> = (0..self.n).map(|j| e[j] * (v[j] + n1[j] * (0.5 * h))).collect();
        let n2 = self.nonlinear(&va);
        let vb: Vec<Complex64> = (0..self.n).map(|j| e[j] * v[j] + n2[j] * (0.5 * h)).collect();
        let n3 = self.nonlinear(&vb);
        let vc: Vec<Complex64> = (0..self.n).map(|j| e[j] * e[j] * v[j] + e[j] * n3[j] * h).collect();
        let n4 = self.nonlinear(&vc);
        (0..self.n)
            .map(|j| {
                let e2 = e[j] * e[j];
                e2 * v[j] + (e2 * n1[j] + e[j] * (n2[j] + n3[j]) * 2.0 + n4[j]) * (h / 6.0)
            })
            .collect()
    }
}

/// Advance `steps` steps of size `dt`.
pub fn evolve(s: &VelocityState, p: CHParams, dt: f64, steps: usize) -> Result<VelocityState> {
    evolve_observed(s, p, dt, steps, |_, _| {})
}

/// [`evolve`] calling `observe(step, state)` after every completed step.
pub fn evolve_observed(
    s: &VelocityState,
    p: CHParams,
    dt: f64,
    steps: usize,
    mut observe: impl FnMut(usize, &VelocityState),
) -> Result<VelocityState> {
    if classify(p) == OrbitClass::LinearDegenerate {
        return Err(Error::NotEvolvable(OrbitClass::LinearDegenerate.name().into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt = {dt} must be positive")));
    }
    check_finite(&s.v, 0, s)?;
    require_zero_mean(&s.v, p)?;
    let grid = s.v.grid();
    let stepper = Stepper::new(p, grid.n(), dt)?;
    let mut vhat = spectral::forward(s.v.samples());
    let mut current = s.clone();
    for step in 1..=steps {
        let next = stepper.step(&vhat);
        let samples = spectral::inverse_real(next.clone());
        let v = PeriodicFunction::from_samples_unchecked(grid, samples);
        check_finite(&v, step, &current)?;
        vhat = next;
        current = VelocityState::new(v, s.t + step as f64 * dt);
        observe(step, &current);
    }
    Ok(current)
}

pub fn conserved_quantities(s: &VelocityState, p: CHParams) -> Conserved {
    let v = &s.v;
    let vx = v.derivative();
    Conserved {
        momentum: p.alpha * v.integrate(),
        energy: p.alpha * v.mul(v).integrate() + p.beta * vx.mul(&vx).integrate(),
    }
}

/// First time a characteristic of `v_t + 3 v v_x = 0` crosses another:
/// `1 / (3 max(-v0'))`, infinite when `v0` is non-decreasing nowhere.
pub fn hopf_shock_time(v0: &PeriodicFunction) -> f64 {
    // sample the interpolant derivative 8x finer than the grid
    let ip = v0.interpolant();
    let fine = 8 * v0.n();
    let max_neg = (0..fine)
        .map(|j| -ip.eval_with_derivative(spectral::node(j, fine)).1)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_neg > 0.0 {
        1.0 / (3.0 * max_neg)
    } else {
        f64::INFINITY
    }
}

/// Exact solution of `v_t + 3 v v_x = 0` at `(t, x)` by characteristics:
/// solves `v = v0(x - 3 v t)` with safeguarded Newton.
pub fn hopf_characteristics(v0: &PeriodicFunction, t: f64, x: f64) -> Result<f64> {
    let t_shock = hopf_shock_time(v0);
    if t >= t_shock {
        return Err(Error::ShockReached { t, t_shock });
    }
    solve_characteristic(&v0.interpolant(), v0.min(), v0.max(), t, x)
}

/// [`hopf_characteristics`] at every grid node.
pub fn hopf_characteristics_grid(v0: &PeriodicFunction, t: f64) -> Result<PeriodicFunction> {
    let t_shock = hopf_shock_time(v0);
    if t >= t_shock {
        return Err(Error::ShockReached { t, t_shock });
    }
    let ip = v0.interpolant();
    let (lo, hi) = (v0.min(), v0.max());
    let grid = v0.grid();
    let samples = par::try_map_range(grid.n(), |j| solve_characteristic(&ip, lo, hi, t, grid.node(j)))?;
    Ok(PeriodicFunction::from_samples_unchecked(grid, samples))
}

fn solve_characteristic(
    v0: &spectral::Interpolant,
    vmin: f64,
    vmax: f64,
    t: f64,
    x: f64,
) -> Result<f64> {
    // G(v) = v - v0(x - 3 v t) is increasing before the shock
    let g = |v: f64| {
        let (val, d) = v0.eval_with_derivative(x - 3.0 * v * t);
        (v - val, 1.0 + 3.0 * t * d)
    };
    let margin = 1e-3 * (vmax - vmin).abs().max(1.0);
    let (mut lo, mut hi) = (vmin - margin, vmax + margin);
    if g(lo).0 > 0.0 || g(hi).0 < 0.0 {
        return Err(Error::NonConvergence(format!("characteristic at x = {x} not bracketed")));
    }
    let mut v = v0.eval(x);
    v = v.clamp(lo, hi);
    for _ in 0..200 {
        let (r, dr) = g(v);
        if r == 0.0 {
            return Ok(v);
        }
        if r > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let newton = v - r / dr;
        let next = if dr > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let step = (next - v).abs();
        v = next;
        if step < 1e-15 * v.abs().max(1.0) || hi - lo < 1e-15 {
            return Ok(v);
        }
    }
    Ok(v)
}

/// `v -> lambda v, t -> mu t, x -> lambda mu x`. Only `lambda mu = 1` keeps
/// the 2pi period; the transformed parameters are returned alongside.
pub fn apply_scaling(
    s: &VelocityState,
    p: CHParams,
    lambda: f64,
    mu: f64,
) -> Result<(VelocityState, CHParams)> {
    if lambda == 0.0 || mu == 0.0 || !lambda.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidParams(format!("lambda = {lambda}, mu = {mu}")));
    }
    if (lambda * mu - 1.0).abs() > 1e-12 {
        return Err(Error::PeriodMismatch(lambda * mu));
    }
    let params = scaled_params(p, lambda, mu)?;
    Ok((VelocityState::new(s.v.scale(lambda), s.t * mu), params))
}

/// Parameters of the equation satisfied by `lambda v(x / (lambda mu), t / mu)`
/// when `v` solves the equation with `p` (general `lambda`, `mu`).
pub fn scaled_params(p: CHParams, lambda: f64, mu: f64) -> Result<CHParams> {
    CHParams::new(
        p.alpha * mu / lambda,
        p.beta * lambda * mu.powi(3),
        p.b * lambda * lambda * mu.powi(3),
    )
}

/// `v -> v + c, x -> x + d t`. This maps solutions to solutions only when
/// `alpha (d - 3c) = 0`; the dispersion constant becomes `b + beta (d - c)`.
pub fn apply_galilean(
    s: &VelocityState,
    p: CHParams,
    c: f64,
    d: f64,
) -> Result<(VelocityState, CHParams)> {
    if (p.alpha * (d - 3.0 * c)).abs() > 1e-12 * (1.0 + d.abs() + c.abs()) {
        return Err(Error::NotASymmetry(format!(
            "alpha (d - 3c) = {} must vanish",
            p.alpha * (d - 3.0 * c)
        )));
    }
    let params = CHParams::new(p.alpha, p.beta, p.b + p.beta * (d - c))?;
    let v = s.v.shifted(d * s.t).map(|x| x + c);
    Ok((VelocityState::new(v, s.t), params))
}
