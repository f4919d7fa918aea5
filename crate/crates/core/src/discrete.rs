//! Right-invariant discrete Lagrangians on the Virasoro group.
//!
//! A Lagrangian `L(x, y) = H(x y^{-1})` is fixed by a function on the group,
//! here
//!
//! ```text
//! H((f, F)) = F^2 + int V(f(x) - x, f'(x)) dx
//! ```
//!
//! with `V` either general (2pi-periodic in its first slot, `V_1(0, 1) = 0`)
//! or depending on `f'` only. The discrete velocities of a sequence are
//! `(omega_l, Omega_l) = x_{l-1} x_l^{-1}`.
//!
//! For `V = sqrt` the Euler-Lagrange equations at `x_k` reduce to
//! `Omega_{k+1} = Omega_k` and, with `rho = omega_{k+1}^{-1}`,
//!
//! ```text
//! [ -2 Omega (log omega_k')' - sqrt(omega_k')/2 + 2 Omega (log rho')' - sqrt(rho')/2 ]' = 0.
//! ```
//!
//! Integrating once with constant `C/4` and substituting `rho' = Psi^{-2}`
//! gives the linear periodic equation `Psi' + p Psi = q` with
//! `p = (C + sqrt(omega_k'))/(8 Omega) + (log omega_k')'/2`, `q = -1/(8 Omega)`,
//! solved exactly in Fourier space after the integrating-factor substitution.
//! `C` is free unless `rho` is required to be periodic, `int Psi^{-2} = 2pi`.
//!
//! [`stationarity_residual`] differentiates the action numerically and is
//! the check for every stepper here, including general `V` whose
//! Euler-Lagrange equations are not written out.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::CircleDiffeo;
use crate::error::{Error, Result};
use crate::grid::{GridConfig, PeriodicFunction};
use crate::par;
use crate::random::{substream, trig_diffeo, trig_field, FieldSpec};
use crate::spectral;
use crate::virasoro::{bott_from_composition, group_inverse, group_product, VirasoroElement};

type General = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Slope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Density {
    General(General),
    Slope(Slope),
}

/// The density `V` of `H`.
#[derive(Clone)]
pub struct LagrangianDensityV {
    name: String,
    density: Density,
}

impl fmt::Debug for LagrangianDensityV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.density {
            Density::General(_) => "general",
            Density::Slope(_) => "hs",
        };
        write!(f, "LagrangianDensityV({}, {kind})", self.name)
    }
}

impl LagrangianDensityV {
    /// `V(x1, x2)`, checked for `V_1(0, 1) = 0` by central differences.
    pub fn general(
        name: impl Into<String>,
        v: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let h = 1e-5;
        let v1 = (v(h, 1.0) - v(-h, 1.0)) / (2.0 * h);
        let scale = v(0.0, 1.0).abs().max(1.0);
        if !(v1.abs() < 1e-6 * scale) {
            return Err(Error::DensityCondition(format!("V_1(0, 1) = {v1:.3e}")));
        }
        Ok(Self {
            name: name.into(),
            density: Density::General(Arc::new(v)),
        })
    }

    /// `V(x2)`, a function of `f'` only.
    pub fn hs(name: impl Into<String>, v: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            density: Density::Slope(Arc::new(v)),
        }
    }

    pub fn sqrt() -> Self {
        Self::hs("sqrt", f64::sqrt)
    }
    pub fn square() -> Self {
        Self::hs("square", |x| x * x)
    }
    pub fn identity() -> Self {
        Self::hs("identity", |x| x)
    }
    /// `x2^2 + 1 - cos x1`.
    pub fn pendulum() -> Self {
        Self::general("pendulum", |x1, x2| x2 * x2 + 1.0 - x1.cos()).expect("V_1(0, 1) = 0")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sqrt" => Ok(Self::sqrt()),
            "square" => Ok(Self::square()),
            "identity" => Ok(Self::identity()),
            "pendulum" => Ok(Self::pendulum()),
            other => Err(Error::InvalidParams(format!("unknown density {other:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_hs(&self) -> bool {
        matches!(self.density, Density::Slope(_))
    }

    /// `x V(1/x) - V(x)` for densities of `f'` only.
    fn cond_u(&self, x: f64) -> Option<f64> {
        match &self.density {
            Density::Slope(v) => Some(x * v(1.0 / x) - v(x)),
            Density::General(_) => None,
        }
    }
}

pub fn eval_h(vd: &LagrangianDensityV, x: &VirasoroElement) -> f64 {
    let u = x.f.displacement().samples();
    let d = x.f.derivative();
    let integrand: Vec<f64> = match &vd.density {
        Density::General(v) => u.iter().zip(d.samples()).map(|(&u, &d)| v(u, d)).collect(),
        Density::Slope(v) => d.samples().iter().map(|&d| v(d)).collect(),
    };
    let h = 2.0 * PI / integrand.len() as f64;
    x.central * x.central + h * integrand.iter().sum::<f64>()
}

/// `L(x, y) = H(x y^{-1})`.
pub fn lagrangian_from_h(vd: &LagrangianDensityV, x: &VirasoroElement, y: &VirasoroElement) -> Result<f64> {
    Ok(eval_h(vd, &group_product(x, &group_inverse(y)?)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseInvarianceReport {
    /// `max |H(x^{-1}) - H(x)|` over the random elements.
    pub h_defect: f64,
    /// `|H(x^{-1}) - H(x)|` per trial.
    pub trial_defects: Vec<f64>,
    /// `max |x V(1/x) - V(x)|` on `x` in `[0.2, 5]`; absent for general `V`.
    pub cond_u_defect: Option<f64>,
    pub invariant: bool,
}

pub fn check_inverse_invariance(
    vd: &LagrangianDensityV,
    grid: GridConfig,
    trials: usize,
    seed: u64,
) -> Result<InverseInvarianceReport> {
    let defects = par::try_map_tasks(trials, |i| {
        let mut r = substream(seed, i as u64);
        let f = trig_diffeo(&mut r, grid, 8, 0.3, 0.5, true);
        let x = VirasoroElement::new(f, r.random_range(-1.0..1.0));
        Ok((eval_h(vd, &group_inverse(&x)?) - eval_h(vd, &x)).abs())
    })?;
    let h_defect = defects.iter().copied().fold(0.0, f64::max);
    let cond_u_defect = vd.cond_u(1.0).map(|_| {
        (0..=480)
            .map(|i| {
                let x = 0.2 + 4.8 * i as f64 / 480.0;
                vd.cond_u(x).expect("slope density").abs()
            })
            .fold(0.0, f64::max)
    });
    let invariant = h_defect < 1e-7 && cond_u_defect.is_none_or(|d| d < 1e-12);
    Ok(InverseInvarianceReport {
        h_defect,
        trial_defects: defects,
        cond_u_defect,
        invariant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVelocityPair {
    pub omega: CircleDiffeo,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VirasoroElement>", into = "Vec<VirasoroElement>")]
pub struct DiffeoSequence(Vec<VirasoroElement>);

impl DiffeoSequence {
    pub fn new(elements: Vec<VirasoroElement>) -> Result<Self> {
        if elements.len() < 2 {
            return Err(Error::InvalidSequence(format!("{} elements, need at least 2", elements.len())));
        }
        let grid = elements[0].f.grid();
        if let Some(e) = elements.iter().find(|e| e.f.grid() != grid) {
            return Err(Error::GridMismatch {
                left: grid.n(),
                right: e.f.n(),
            });
        }
        Ok(Self(elements))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn elements(&self) -> &[VirasoroElement] {
        &self.0
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().cloned().collect())
    }

    /// `x_k g` for every element.
    pub fn right_translate(&self, g: &VirasoroElement) -> Result<Self> {
        Self::new(self.0.iter().map(|x| group_product(x, g)).collect::<Result<_>>()?)
    }
}

impl TryFrom<Vec<VirasoroElement>> for DiffeoSequence {
    type Error = Error;
    fn try_from(v: Vec<VirasoroElement>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiffeoSequence> for Vec<VirasoroElement> {
    fn from(s: DiffeoSequence) -> Self {
        s.0
    }
}

/// `(omega_l, Omega_l) = x_{l-1} x_l^{-1}` for `1 <= l < K`.
pub fn discrete_velocity(seq: &DiffeoSequence, l: usize) -> Result<DiscreteVelocityPair> {
    if l == 0 || l >= seq.len() {
        return Err(Error::InvalidSequence(format!("velocity index {l} outside 1..{}", seq.len())));
    }
    let w = group_product(&seq.0[l - 1], &group_inverse(&seq.0[l])?)?;
    Ok(DiscreteVelocityPair {
        omega: w.f,
        big_omega: w.central,
    })
}

/// `sum_k L(x_k, x_{k+1})` over the window.
pub fn action(vd: &LagrangianDensityV, seq: &DiffeoSequence) -> Result<f64> {
    let terms = par::try_map_tasks(seq.len() - 1, |k| lagrangian_from_h(vd, &seq.0[k], &seq.0[k + 1]))?;
    Ok(terms.iter().sum())
}

/// Largest normalized directional derivative of the action at the interior
/// element `x_k`: `directions` random smooth perturbations of `f_k` plus the
/// pure `F_k` direction, centered differences with step `1e-5`, divided by
/// `|delta| * max(1, mean |L|)`.
pub fn stationarity_residual(
    vd: &LagrangianDensityV,
    seq: &DiffeoSequence,
    k: usize,
    directions: usize,
    seed: u64,
) -> Result<f64> {
    if k == 0 || k + 1 >= seq.len() {
        return Err(Error::InvalidSequence(format!("index {k} is not interior")));
    }
    let eps = 1e-5;
    let xs = &seq.0;
    let terms = par::try_map_tasks(xs.len() - 1, |i| lagrangian_from_h(vd, &xs[i], &xs[i + 1]))?;
    let scale = (terms.iter().map(|t| t.abs()).sum::<f64>() / terms.len() as f64).max(1.0);
    let grid = xs[k].f.grid();
    let local = |xk: &VirasoroElement| -> Result<f64> {
        Ok(lagrangian_from_h(vd, &xs[k - 1], xk)? + lagrangian_from_h(vd, xk, &xs[k + 1])?)
    };
    let derivs = par::try_map_tasks(directions + 1, |d| {
        let (du, df) = if d == directions {
            (PeriodicFunction::zeros(grid), 1.0_f64)
        } else {
            let spec = FieldSpec {
                modes: 8,
                amplitude: 1.0,
                zero_mean: false,
            };
            (trig_field(&mut substream(seed, d as u64), grid, spec), 0.0)
        };
        let norm = du.sup_norm() + df.abs();
        let at = |s: f64| -> Result<f64> {
            let u = xs[k].f.displacement().add(&du.scale(s));
            let f = CircleDiffeo::from_displacement(u)?;
            local(&VirasoroElement::new(f, xs[k].central + s * df))
        };
        let deriv = (at(eps)? - at(-eps)?) / (2.0 * eps);
        Ok(deriv.abs() / (norm * scale))
    })?;
    Ok(derivs.into_iter().fold(0.0, f64::max))
}

/// Sequence `x_0, x_1, ...` realizing the velocities `omega_l` with central
/// part `Omega` at every step:
/// `f_l = omega_l^{-1} o f_{l-1}`, `F_l = F_{l-1} + B(f_{l-1}, f_l^{-1}) - Omega`.
pub fn build_sequence(x0: &VirasoroElement, omegas: &[CircleDiffeo], big_omega: f64) -> Result<DiffeoSequence> {
    let mut out = vec![x0.clone()];
    // track f_l^{-1} = f_{l-1}^{-1} o omega_l to avoid re-inverting
    let mut f_inv = x0.f.invert()?;
    for w in omegas {
        let prev = out.last().expect("non-empty");
        let f = w.invert()?.compose(&prev.f)?;
        f_inv = f_inv.compose(w)?;
        let b = bott_from_composition(w, &f_inv);
        let central = prev.central + b - big_omega;
        out.push(VirasoroElement::new(f, central));
    }
    DiffeoSequence::new(out)
}

/// Serialized as `{"fix_C": c}` or `"periodic_C"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CMode {
    /// Use this integration constant; `rho` must come out periodic.
    #[serde(rename = "fix_C")]
    FixC(f64),
    /// Choose the constant so that `int Psi^{-2} = 2pi`.
    #[serde(rename = "periodic_C")]
    PeriodicC,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiSolution {
    pub psi: PeriodicFunction,
    /// `int Psi^{-2} dx - 2pi`.
    pub defect: f64,
    /// `exp(int_0^{2pi} p)`.
    pub monodromy: f64,
}

/// The periodic solution of `Psi' + p Psi = q` for the given constant.
pub fn solve_psi(omega_k: &CircleDiffeo, big_omega: f64, c: f64) -> Result<PsiSolution> {
    if big_omega == 0.0 || !big_omega.is_finite() || !c.is_finite() {
        return Err(Error::InvalidParams(format!("Omega = {big_omega}, C = {c}")));
    }
    let d = omega_k.derivative();
    let sqrt_d = d.map(f64::sqrt);
    let dlog = d.map(f64::ln).derivative();
    let p = sqrt_d
        .map(|s| (c + s) / (8.0 * big_omega))
        .add(&dlog.scale(0.5));
    let q = -1.0 / (8.0 * big_omega);
    let (pbar, ptilde) = spectral::periodic_antiderivative(p.samples());
    let monodromy = (2.0 * PI * pbar).exp();
    if (monodromy - 1.0).abs() < 1e-12 {
        return Err(Error::ResonantOde { monodromy });
    }
    // Psi = Z e^{-P}: Z' + pbar Z = q e^{P}
    let n = d.n();
    let e: Vec<f64> = ptilde.iter().map(|v| v.exp()).collect();
    let mut z = spectral::forward(&e.iter().map(|v| q * v).collect::<Vec<_>>());
    for (j, zj) in z.iter_mut().enumerate() {
        let k = if spectral::is_nyquist(j, n) { 0.0 } else { spectral::wavenumber(j, n) as f64 };
        *zj /= Complex64::new(pbar, k);
    }
    let z = spectral::inverse_real(z);
    let psi: Vec<f64> = z.iter().zip(&e).map(|(z, e)| z / e).collect();
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence("Psi is not finite".into()));
    }
    let psi = PeriodicFunction::from_samples_unchecked(d.grid(), psi);
    if let Some((j, &v)) = psi.samples().iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::SignViolation(format!("Psi({:.6}) = {v:.3e}", psi.grid().node(j))));
    }
    let defect = psi.map(|v| v.powi(-2)).integrate() - 2.0 * PI;
    Ok(PsiSolution { psi, defect, monodromy })
}

/// Root of the periodicity defect in `C`. Below the resonance at
/// `C = -mean sqrt(omega_k')` the defect tends to `-2pi`; the scan moves away
/// from it until the defect turns positive (or `Psi` loses positivity, which
/// drives the defect to `+inf`) and bisects the bracket.
fn periodic_constant(omega_k: &CircleDiffeo, big_omega: f64) -> Result<(f64, PsiSolution)> {
    let sbar = omega_k.derivative().map(f64::sqrt).mean();
    let g = |c: f64| -> Result<Option<PsiSolution>> {
        match solve_psi(omega_k, big_omega, c) {
            Ok(s) => Ok(Some(s)),
            Err(Error::SignViolation(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let positive = |s: &Option<PsiSolution>| s.as_ref().is_none_or(|s| s.defect > 0.0);

    let mut hi: Option<(f64, PsiSolution)> = None;
    let mut lo: Option<f64> = None;
    for j in -20..=12 {
        let c = -sbar - 2f64.powi(j);
        let s = match g(c) {
            Ok(s) => s,
            Err(Error::ResonantOde { .. }) => continue,
            Err(e) => return Err(e),
        };
        if let Some(sol) = &s {
            if sol.defect == 0.0 {
                return Ok((c, s.expect("checked")));
            }
        }
        if positive(&s) {
            if hi.is_some() {
                lo = Some(c);
                break;
            }
        } else {
            hi = Some((c, s.expect("negative defect has a solution")));
        }
    }
    let (Some(mut lo), Some((mut hi, mut hi_sol))) = (lo, hi) else {
        return Err(Error::NoBracket(format!(
            "no sign change of the periodicity defect below C = {:.6}",
            -sbar
        )));
    };
    let mut lo_sol: Option<PsiSolution> = None;
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = g(mid)?;
        if positive(&s) {
            lo = mid;
            lo_sol = s;
        } else {
            hi = mid;
            hi_sol = s.expect("negative defect has a solution");
        }
    }
    // secant polish between the bracket ends when both are admissible
    if let Some(ls) = &lo_sol {
        let (dl, dh) = (ls.defect, hi_sol.defect);
        let c = hi - dh * (hi - lo) / (dh - dl);
        if c > lo.min(hi) && c < lo.max(hi) {
            if let Some(s) = g(c)? {
                if s.defect.abs() < dh.abs().min(dl.abs()) {
                    return Ok((c, s));
                }
            }
        }
        if dl.abs() < dh.abs() {
            return Ok((lo, ls.clone()));
        }
    }
    Ok((hi, hi_sol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HsDiagnostics {
    #[serde(rename = "C")]
    pub c: f64,
    pub defect: f64,
    pub min_psi: f64,
    pub monodromy: f64,
}

/// One step of the Hunter-Saxton discretization with `V = sqrt`:
/// `omega_{k+1}` from `omega_k` and the conserved `Omega`. The inverse
/// `rho = omega_{k+1}^{-1}` is `rho(x) = rotation + int_0^x Psi^{-2}`.
pub fn hs_step(
    omega_k: &CircleDiffeo,
    big_omega: f64,
    mode: CMode,
    rotation: f64,
) -> Result<(CircleDiffeo, HsDiagnostics)> {
    let (c, sol) = match mode {
        CMode::FixC(c) => {
            let sol = solve_psi(omega_k, big_omega, c)?;
            if sol.defect.abs() > 1e-8 {
                return Err(Error::PeriodicityDefect { c, defect: sol.defect });
            }
            (c, sol)
        }
        CMode::PeriodicC => periodic_constant(omega_k, big_omega)?,
    };
    let rho_d = sol.psi.map(|v| v.powi(-2));
    let (_, anti) = spectral::periodic_antiderivative(&rho_d.map(|v| v - 1.0).into_samples());
    let u = PeriodicFunction::from_samples_unchecked(sol.psi.grid(), anti).map(|v| v + rotation);
    let rho = CircleDiffeo::from_displacement(u)?;
    let diag = HsDiagnostics {
        c,
        defect: sol.defect,
        min_psi: sol.psi.min(),
        monodromy: sol.monodromy,
    };
    Ok((rho.invert()?, diag))
}

/// Sup-norm of the derivative of the bracketed Euler-Lagrange expression
/// for `V = sqrt`, evaluated on `(omega_k, Omega_k)` and
/// `(omega_{k+1}, Omega_{k+1})`.
pub fn el2_residual(
    omega_k: &CircleDiffeo,
    omega_k1: &CircleDiffeo,
    big_omega_k: f64,
    big_omega_k1: f64,
) -> Result<f64> {
    let d = omega_k.derivative();
    let rd = omega_k1.invert()?.derivative();
    let bracket = d
        .map(f64::ln)
        .derivative()
        .scale(-2.0 * big_omega_k)
        .sub(&d.map(f64::sqrt).scale(0.5))
        .add(&rd.map(f64::ln).derivative().scale(2.0 * big_omega_k1))
        .sub(&rd.map(f64::sqrt).scale(0.5));
    Ok(bracket.derivative().sup_norm())
}

/// Iterate [`hs_step`] from `omega_1`; returns `omega_1, ..., omega_{steps+1}`
/// and the diagnostics of each step.
pub fn hs_trajectory(
    omega1: &CircleDiffeo,
    big_omega: f64,
    mode: CMode,
    rotation: f64,
    steps: usize,
) -> Result<(Vec<CircleDiffeo>, Vec<HsDiagnostics>)> {
    let mut omegas = vec![omega1.clone()];
    let mut diags = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, d) = hs_step(omegas.last().expect("non-empty"), big_omega, mode, rotation)?;
        omegas.push(next);
        diags.push(d);
    }
    Ok((omegas, diags))
}

/// `c = (1/pi) int sqrt(omega_k')`, the nonzero root of the periodicity
/// condition `int (c - sqrt(omega_k'))^2 = 2pi`.
pub fn hs_simple_constant(omega_k: &CircleDiffeo) -> f64 {
    omega_k.derivative().map(f64::sqrt).integrate() / PI
}

/// The same constant found by bisection of `int (c - sqrt(omega_k'))^2 - 2pi`
/// on `c > max sqrt(omega_k')`, without using the closed form.
pub fn hs_simple_constant_by_bisection(omega_k: &CircleDiffeo) -> Result<f64> {
    let s = omega_k.derivative().map(f64::sqrt);
    let g = |c: f64| s.map(|v| (c - v).powi(2)).integrate() - 2.0 * PI;
    let lo0 = s.max();
    if g(lo0) >= 0.0 {
        return Err(Error::SignViolation(format!("no root above max sqrt(omega') = {lo0:.6}")));
    }
    let mut hi = lo0 + 1.0;
    while g(hi) < 0.0 {
        hi = lo0 + 2.0 * (hi - lo0);
    }
    let mut lo = lo0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `sqrt(rho') = c - sqrt(omega_k')` with `rho = omega_{k+1}^{-1}`,
/// `rho(0) = rotation`.
pub fn hs_simple_step(omega_k: &CircleDiffeo, rotation: f64) -> Result<CircleDiffeo> {
    let s = omega_k.derivative().map(f64::sqrt);
    let c = hs_simple_constant(omega_k);
    if c <= s.max() {
        return Err(Error::SignViolation(format!("c = {c:.6} <= max sqrt(omega') = {:.6}", s.max())));
    }
    let rho_d = s.map(|v| (c - v).powi(2));
    let (_, anti) = spectral::periodic_antiderivative(&rho_d.map(|v| v - 1.0).into_samples());
    let u = PeriodicFunction::from_samples_unchecked(s.grid(), anti).map(|v| v + rotation);
    CircleDiffeo::from_displacement(u)?.invert()
}

/// `sup |sqrt(omega_k') + sqrt(rho') - c|` with `rho = omega_{k+1}^{-1}`.
pub fn hs_simple_residual(omega_k: &CircleDiffeo, omega_k1: &CircleDiffeo, c: f64) -> Result<f64> {
    let a = omega_k.derivative().map(f64::sqrt);
    let b = omega_k1.invert()?.derivative().map(f64::sqrt);
    Ok(a.add(&b).map(|v| v - c).sup_norm())
}

pub fn hs_simple_trajectory(omega1: &CircleDiffeo, rotation: f64, steps: usize) -> Result<Vec<CircleDiffeo>> {
    let mut omegas = vec![omega1.clone()];
    for _ in 0..steps {
        let next = hs_simple_step(omegas.last().expect("non-empty"), rotation)?;
        omegas.push(next);
    }
    Ok(omegas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;
    use crate::virasoro::bott_cocycle;

    fn grid(n: usize) -> GridConfig {
        GridConfig::new(n).unwrap()
    }

    fn elem(f: CircleDiffeo, c: f64) -> VirasoroElement {
        VirasoroElement::new(f, c)
    }

    #[test]
    fn h_examples() {
        let g = grid(64);
        let v = LagrangianDensityV::sqrt();
        assert!((eval_h(&v, &VirasoroElement::identity(g)) - 2.0 * PI).abs() < 1e-14);
        assert!((eval_h(&v, &elem(CircleDiffeo::identity(g), 0.7)) - (0.49 + 2.0 * PI)).abs() < 1e-14);
        let r = elem(CircleDiffeo::rotation(g, 1.1), 0.0);
        assert!((eval_h(&LagrangianDensityV::square(), &r) - 2.0 * PI).abs() < 1e-14);
        assert!((eval_h(&LagrangianDensityV::pendulum(), &VirasoroElement::identity(g)) - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn general_density_condition() {
        assert!(matches!(
            LagrangianDensityV::general("bad", |x1, x2| x1 + x2),
            Err(Error::DensityCondition(_))
        ));
        assert!(LagrangianDensityV::by_name("nope").is_err());
    }

    #[test]
    fn lagrangian_invariances() {
        let g = grid(256);
        let v = LagrangianDensityV::sqrt();
        let mut r = rng(21);
        let x = elem(trig_diffeo(&mut r, g, 8, 0.3, 0.5, true), 0.4);
        let y = elem(trig_diffeo(&mut r, g, 8, 0.3, 0.5, true), -0.2);
        let h = elem(trig_diffeo(&mut r, g, 8, 0.3, 0.5, true), 0.1);
        assert!((lagrangian_from_h(&v, &x, &x).unwrap() - 2.0 * PI).abs() < 1e-10);
        let l = lagrangian_from_h(&v, &x, &y).unwrap();
        let xg = group_product(&x, &h).unwrap();
        let yg = group_product(&y, &h).unwrap();
        assert!((lagrangian_from_h(&v, &xg, &yg).unwrap() - l).abs() < 1e-7);
        assert!((lagrangian_from_h(&v, &y, &x).unwrap() - l).abs() < 1e-7);
    }

    #[test]
    fn inverse_invariance_reports() {
        let g = grid(128);
        let r = check_inverse_invariance(&LagrangianDensityV::sqrt(), g, 8, 1).unwrap();
        assert!(r.invariant && r.h_defect < 1e-7 && r.cond_u_defect.unwrap() < 1e-14);
        let r = check_inverse_invariance(&LagrangianDensityV::square(), g, 8, 1).unwrap();
        assert!(!r.invariant && r.h_defect > 1e-3);
        let r = check_inverse_invariance(&LagrangianDensityV::identity(), g, 8, 1).unwrap();
        assert!(!r.invariant && r.cond_u_defect.unwrap() > 1.0);
    }

    #[test]
    fn velocity_examples() {
        let g = grid(64);
        let x = elem(CircleDiffeo::from_fn(g, |x| 0.2 * x.sin()).unwrap(), 0.3);
        let seq = DiffeoSequence::new(vec![x.clone(), x.clone(), x]).unwrap();
        let w = discrete_velocity(&seq, 1).unwrap();
        assert!(w.omega.distance(&CircleDiffeo::identity(g)) < 1e-12 && w.big_omega.abs() < 1e-12);

        let seq = DiffeoSequence::new(vec![
            elem(CircleDiffeo::rotation(g, 0.8), 0.0),
            VirasoroElement::identity(g),
        ])
        .unwrap();
        let w = discrete_velocity(&seq, 1).unwrap();
        assert!(w.omega.distance(&CircleDiffeo::rotation(g, 0.8)) < 1e-14);
        assert!(w.big_omega.abs() < 1e-14);
        assert!(discrete_velocity(&seq, 2).is_err());
    }

    #[test]
    fn velocity_matches_direct_formula() {
        let g = grid(256);
        let mut r = rng(22);
        let f0 = trig_diffeo(&mut r, g, 8, 0.3, 0.5, true);
        let f1 = trig_diffeo(&mut r, g, 8, 0.3, 0.5, true);
        let seq = DiffeoSequence::new(vec![elem(f0.clone(), 0.2), elem(f1.clone(), -0.1)]).unwrap();
        let w = discrete_velocity(&seq, 1).unwrap();
        let f1_inv = f1.invert().unwrap();
        let direct = f0.compose(&f1_inv).unwrap();
        assert!(w.omega.distance(&direct) < 1e-8);
        let expect = 0.2 + 0.1 + bott_cocycle(&f0, &f1_inv).unwrap();
        assert!((w.big_omega - expect).abs() < 1e-8);
    }

    #[test]
    fn action_examples() {
        let g = grid(64);
        let v = LagrangianDensityV::sqrt();
        let x = VirasoroElement::identity(g);
        let seq = DiffeoSequence::new(vec![x.clone(); 4]).unwrap();
        assert!((action(&v, &seq).unwrap() - 6.0 * PI).abs() < 1e-12);

        let g = grid(256);
        let mut r = rng(23);
        let xs: Vec<_> = (0..4)
            .map(|i| elem(trig_diffeo(&mut r, g, 6, 0.3, 0.5, true), 0.1 * i as f64))
            .collect();
        let seq = DiffeoSequence::new(xs.clone()).unwrap();
        let head = DiffeoSequence::new(xs[..3].to_vec()).unwrap();
        let tail = lagrangian_from_h(&v, &xs[2], &xs[3]).unwrap();
        assert!((action(&v, &seq).unwrap() - action(&v, &head).unwrap() - tail).abs() < 1e-12);
        let h = elem(trig_diffeo(&mut r, g, 6, 0.3, 0.5, true), 0.5);
        let moved = seq.right_translate(&h).unwrap();
        assert!((action(&v, &moved).unwrap() - action(&v, &seq).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn stationarity_sanity() {
        let g = grid(64);
        let v = LagrangianDensityV::sqrt();
        let seq = DiffeoSequence::new(vec![VirasoroElement::identity(g); 3]).unwrap();
        assert!(stationarity_residual(&v, &seq, 1, 3, 0).unwrap() < 1e-8);
        let mut r = rng(24);
        let xs: Vec<_> = (0..3)
            .map(|_| elem(trig_diffeo(&mut r, g, 6, 0.4, 0.6, true), r.random_range(-1.0..1.0)))
            .collect();
        let seq = DiffeoSequence::new(xs).unwrap();
        assert!(stationarity_residual(&v, &seq, 1, 3, 0).unwrap() > 1e-3);
        assert!(stationarity_residual(&v, &seq, 0, 3, 0).is_err());
    }

    #[test]
    fn mode_json_names() {
        assert_eq!(serde_json::to_string(&CMode::PeriodicC).unwrap(), "\"periodic_C\"");
        let m: CMode = serde_json::from_str("{\"fix_C\": -2.0}").unwrap();
        assert_eq!(m, CMode::FixC(-2.0));
    }

    #[test]
    fn psi_identity_case() {
        // omega = id: Psi = -1/(C + 1), periodic exactly at C = -2
        let g = grid(64);
        let id = CircleDiffeo::identity(g);
        let s = solve_psi(&id, 0.3, -3.0).unwrap();
        assert!((s.psi.max() - 0.5).abs() < 1e-14 && (s.psi.min() - 0.5).abs() < 1e-14);
        assert!(matches!(solve_psi(&id, 0.3, 0.0), Err(Error::SignViolation(_))));
        assert!(matches!(solve_psi(&id, 0.3, -1.0), Err(Error::ResonantOde { .. })));
        let (w, d) = hs_step(&id, 0.3, CMode::PeriodicC, 0.0).unwrap();
        assert!((d.c + 2.0).abs() < 1e-10);
        assert!(w.distance(&id) < 1e-12);
        let (w, _) = hs_step(&id, 0.3, CMode::FixC(-2.0), 0.4).unwrap();
        assert!(w.distance(&CircleDiffeo::rotation(g, -0.4)) < 1e-12);
        assert!(matches!(
            hs_step(&id, 0.3, CMode::FixC(-3.0), 0.0),
            Err(Error::PeriodicityDefect { .. })
        ));
    }

    #[test]
    fn hs_step_solves_el2_and_is_stationary() {
        let g = grid(256);
        let v = LagrangianDensityV::sqrt();
        let omega = 0.5;
        let w1 = CircleDiffeo::from_fn(g, |x| 0.1 * x.sin() + 0.05 * (2.0 * x).cos()).unwrap();
        let (w2, d) = hs_step(&w1, omega, CMode::PeriodicC, 0.0).unwrap();
        assert!(d.defect.abs() < 1e-10);
        assert!(el2_residual(&w1, &w2, omega, omega).unwrap() < 1e-7);
        let seq = build_sequence(&VirasoroElement::identity(g), &[w1, w2], omega).unwrap();
        for l in 1..seq.len() {
            assert!((discrete_velocity(&seq, l).unwrap().big_omega - omega).abs() < 1e-9);
        }
        assert!(stationarity_residual(&v, &seq, 1, 4, 7).unwrap() < 1e-5);
    }

    #[test]
    fn hs_simple_examples() {
        let g = grid(256);
        let id = CircleDiffeo::identity(g);
        assert!((hs_simple_constant(&id) - 2.0).abs() < 1e-14);
        let w = hs_simple_step(&id, 0.3).unwrap();
        assert!(w.distance(&CircleDiffeo::rotation(g, -0.3)) < 1e-12);

        let w1 = CircleDiffeo::from_fn(g, |x| 0.2 * x.sin() + 0.1 * (3.0 * x).cos()).unwrap();
        let c = hs_simple_constant(&w1);
        assert!((c - hs_simple_constant_by_bisection(&w1).unwrap()).abs() < 1e-12);
        let w2 = hs_simple_step(&w1, 0.0).unwrap();
        assert!(hs_simple_residual(&w1, &w2, c).unwrap() < 1e-9);
        // omega' = 2pi e^{5 cos x} / int e^{5 cos}: sqrt peaks above twice its mean
        let w = PeriodicFunction::from_fn(g, |x| (5.0 * x.cos()).exp());
        let w = w.scale(2.0 * PI / w.integrate()).map(|v| v - 1.0);
        let (_, u) = spectral::periodic_antiderivative(w.samples());
        let steep = CircleDiffeo::from_displacement(PeriodicFunction::new(u).unwrap()).unwrap();
        assert!(matches!(hs_simple_step(&steep, 0.0), Err(Error::SignViolation(_))));
    }

    #[test]
    fn hs_simple_is_stationary_both_ways() {
        let g = grid(128);
        let v = LagrangianDensityV::sqrt();
        let w1 = CircleDiffeo::from_fn(g, |x| 0.15 * x.sin() + 0.05 * (2.0 * x).cos()).unwrap();
        let ws = hs_simple_trajectory(&w1, 0.1, 3).unwrap();
        let seq = build_sequence(&VirasoroElement::identity(g), &ws, 0.0).unwrap();
        let rev = seq.reversed();
        for k in 1..seq.len() - 1 {
            assert!(stationarity_residual(&v, &seq, k, 3, 3).unwrap() < 1e-5);
            assert!(stationarity_residual(&v, &rev, k, 3, 3).unwrap() < 1e-5);
        }
    }
}
