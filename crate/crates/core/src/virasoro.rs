//! The Virasoro group and algebra.
//!
//! Group elements are pairs `(f, F)` with product
//! `(f, F) o (g, G) = (f o g, F + G + B(f, g))`, where
//! `B(f, g) = int_0^{2pi} log (f o g)' d log g'` is the Bott cocycle.
//! Algebra elements are pairs `(v d/dx, a)` with bracket
//! `[(v, a), (w, b)] = (-v w' + v' w, int_0^{2pi} v''' w dx)`.
//!
//! The dual of the algebra is identified with the algebra itself through
//! `<(m, c), (w, b)> = int m w dx + c b`, which turns the inertia operator of
//! the H^1_{alpha,beta} metric into the Fourier multiplier `alpha + beta k^2`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::CircleDiffeo;
use crate::error::{Error, Result};
use crate::grid::PeriodicFunction;
use crate::spectral;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirasoroElement {
    pub f: CircleDiffeo,
    #[serde(rename = "F")]
    pub central: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirasoroAlgebraElement {
    pub v: PeriodicFunction,
    pub a: f64,
}

/// Weights of the H^1 metric; both non-negative and not both zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMetric", into = "RawMetric")]
pub struct MetricParams {
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMetric {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawMetric> for MetricParams {
    type Error = Error;
    fn try_from(r: RawMetric) -> Result<Self> {
        MetricParams::new(r.alpha, r.beta)
    }
}

impl From<MetricParams> for RawMetric {
    fn from(m: MetricParams) -> Self {
        RawMetric {
            alpha: m.alpha,
            beta: m.beta,
        }
    }
}

impl MetricParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha}, beta = {beta} must be finite and non-negative"
            )));
        }
        if alpha == 0.0 && beta == 0.0 {
            return Err(Error::InvalidParams("alpha and beta both zero".into()));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Symbol of the inertia operator on mode `j` of an `n`-point spectrum.
    pub(crate) fn multiplier(&self, j: usize, n: usize) -> f64 {
        let k = spectral::wavenumber(j, n) as f64;
        self.alpha + self.beta * k * k
    }
}

impl VirasoroElement {
    pub fn new(f: CircleDiffeo, central: f64) -> Self {
        Self { f, central }
    }

    pub fn identity(grid: crate::GridConfig) -> Self {
        Self::new(CircleDiffeo::identity(grid), 0.0)
    }

    /// Sup distance of the diffeo parts (mod 2pi) plus the central gap.
    pub fn distance(&self, other: &Self) -> f64 {
        self.f.distance(&other.f) + (self.central - other.central).abs()
    }
}

impl VirasoroAlgebraElement {
    pub fn new(v: PeriodicFunction, a: f64) -> Self {
        Self { v, a }
    }
}

/// `B(f, g)` given the already composed `f o g`.
pub(crate) fn bott_from_composition(fg: &CircleDiffeo, g: &CircleDiffeo) -> f64 {
    let log_fg = fg.derivative().map(f64::ln);
    let dlog_g = g.derivative().map(f64::ln).derivative();
    log_fg.mul(&dlog_g).integrate()
}

/// Bott cocycle `B(f, g) = int log (f o g)' (log g')' dx`.
pub fn bott_cocycle(f: &CircleDiffeo, g: &CircleDiffeo) -> Result<f64> {
    let fg = f.compose(g)?;
    Ok(bott_from_composition(&fg, g))
}

pub fn group_product(x: &VirasoroElement, y: &VirasoroElement) -> Result<VirasoroElement> {
    let fg = x.f.compose(&y.f)?;
    let b = bott_from_composition(&fg, &y.f);
    Ok(VirasoroElement::new(fg, x.central + y.central + b))
}

pub fn group_inverse(x: &VirasoroElement) -> Result<VirasoroElement> {
    Ok(VirasoroElement::new(x.f.invert()?, -x.central))
}

/// Gelfand-Fuchs bracket. The central coordinates of the inputs do not
/// enter the result.
pub fn gelfand_fuchs_bracket(
    xi: &VirasoroAlgebraElement,
    eta: &VirasoroAlgebraElement,
) -> Result<VirasoroAlgebraElement> {
    xi.v.check_same_grid(&eta.v)?;
    let (v, w) = (&xi.v, &eta.v);
    let vx = v.derivative();
    let wx = w.derivative();
    let vector = v.mul(&wx).scale(-1.0).add(&vx.mul(w));
    let central = v.derivative_n(3).mul(w).integrate();
    Ok(VirasoroAlgebraElement::new(vector, central))
}

/// `int (alpha v w + beta v' w') dx + a b`.
pub fn h1_inner(
    xi: &VirasoroAlgebraElement,
    eta: &VirasoroAlgebraElement,
    m: MetricParams,
) -> Result<f64> {
    xi.v.check_same_grid(&eta.v)?;
    let l2 = xi.v.mul(&eta.v).integrate();
    let h1 = xi.v.derivative().mul(&eta.v.derivative()).integrate();
    Ok(m.alpha * l2 + m.beta * h1 + xi.a * eta.a)
}

/// L^2 plus central pairing between the (identified) dual and the algebra.
pub fn pairing(mu: &VirasoroAlgebraElement, eta: &VirasoroAlgebraElement) -> Result<f64> {
    mu.v.check_same_grid(&eta.v)?;
    Ok(mu.v.mul(&eta.v).integrate() + mu.a * eta.a)
}

pub(crate) fn apply_multiplier(p: &PeriodicFunction, m: MetricParams) -> PeriodicFunction {
    let n = p.n();
    let mut c = spectral::forward(p.samples());
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= m.multiplier(j, n);
    }
    PeriodicFunction::from_samples_unchecked(p.grid(), spectral::inverse_real(c))
}

/// Divide by the inertia symbol. With `alpha = 0` the mean mode is
/// unconstrained; it must vanish in the input and is set to 0 in the output.
pub(crate) fn divide_multiplier(p: &PeriodicFunction, m: MetricParams) -> Result<PeriodicFunction> {
    let n = p.n();
    let mut c = spectral::forward(p.samples());
    if m.alpha == 0.0 {
        let scale = p.sup_norm().max(1.0);
        if c[0].norm() > 1e-12 * scale {
            return Err(Error::SingularInertia(format!(
                "alpha = 0 and input mean is {:.3e}",
                c[0].re
            )));
        }
        c[0] = Complex64::new(0.0, 0.0);
    }
    for (j, cj) in c.iter_mut().enumerate() {
        if j == 0 && m.alpha == 0.0 {
            continue;
        }
        *cj /= m.multiplier(j, n);
    }
    Ok(PeriodicFunction::from_samples_unchecked(
        p.grid(),
        spectral::inverse_real(c),
    ))
}

/// Inertia operator: `(v, a) -> ((alpha - beta d^2/dx^2) v, a)`.
pub fn inertia_apply(xi: &VirasoroAlgebraElement, m: MetricParams) -> VirasoroAlgebraElement {
    VirasoroAlgebraElement::new(apply_multiplier(&xi.v, m), xi.a)
}

pub fn inertia_invert(
    mu: &VirasoroAlgebraElement,
    m: MetricParams,
) -> Result<VirasoroAlgebraElement> {
    Ok(VirasoroAlgebraElement::new(divide_multiplier(&mu.v, m)?, mu.a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridConfig {
        GridConfig::new(n).unwrap()
    }

    fn alg(g: GridConfig, f: impl Fn(f64) -> f64, a: f64) -> VirasoroAlgebraElement {
        VirasoroAlgebraElement::new(PeriodicFunction::from_fn(g, f), a)
    }

    #[test]
    fn cocycle_vanishes_on_identity_and_rotations() {
        let g = grid(128);
        let f = CircleDiffeo::from_fn(g, |x| 0.3 * x.sin()).unwrap();
        let id = CircleDiffeo::identity(g);
        assert!(bott_cocycle(&f, &id).unwrap().abs() < 1e-14);
        let r1 = CircleDiffeo::rotation(g, 0.3);
        let r2 = CircleDiffeo::rotation(g, -1.2);
        assert!(bott_cocycle(&r1, &r2).unwrap().abs() < 1e-14);
    }

    #[test]
    fn cocycle_regression_values() {
        // f = x + 0.2 sin x is odd, so B(f, f) vanishes by symmetry
        for n in [256, 512] {
            let f = CircleDiffeo::from_fn(grid(n), |x| 0.2 * x.sin()).unwrap();
            assert!(bott_cocycle(&f, &f).unwrap().abs() < 1e-14);
        }
        // g = x + 0.1 cos 2x breaks the symmetry; reference from adaptive
        // quadrature of the closed-form integrand log f'(g) g''/g'
        for n in [256, 512] {
            let f = CircleDiffeo::from_fn(grid(n), |x| 0.2 * x.sin()).unwrap();
            let g = CircleDiffeo::from_fn(grid(n), |x| 0.1 * (2.0 * x).cos()).unwrap();
            let b = bott_cocycle(&f, &g).unwrap();
            assert!((b - BOTT_SIN_COS2).abs() < 1e-12, "n = {n}: {b:.17e}");
        }
    }

    #[allow(clippy::excessive_precision)]
    const BOTT_SIN_COS2: f64 = 0.012_631_431_431_198_581;

    #[test]
    fn unit_and_inverse_axioms() {
        let g = grid(256);
        let e = VirasoroElement::identity(g);
        let ee = group_product(&e, &e).unwrap();
        assert!(ee.distance(&e) < 1e-15);

        let x = VirasoroElement::new(CircleDiffeo::from_fn(g, |x| 0.25 * (2.0 * x).sin()).unwrap(), 1.7);
        let xi = group_inverse(&x).unwrap();
        assert!(group_product(&x, &xi).unwrap().distance(&e) < 1e-7);
        assert!(group_product(&xi, &x).unwrap().distance(&e) < 1e-7);
        assert!(group_inverse(&xi).unwrap().distance(&x) < 1e-8);

        let c = VirasoroElement::new(CircleDiffeo::identity(g), 5.0);
        assert_eq!(group_inverse(&c).unwrap().central, -5.0);
    }

    #[test]
    fn rotations_add_central_parts() {
        let g = grid(64);
        let x = VirasoroElement::new(CircleDiffeo::rotation(g, 0.5), 1.0);
        let y = VirasoroElement::new(CircleDiffeo::rotation(g, 0.25), -3.0);
        let p = group_product(&x, &y).unwrap();
        assert!(p.f.distance(&CircleDiffeo::rotation(g, 0.75)) < 1e-14);
        assert!((p.central + 2.0).abs() < 1e-14);
    }

    #[test]
    fn bracket_sin_cos() {
        let g = grid(64);
        let r = gelfand_fuchs_bracket(&alg(g, f64::sin, 0.0), &alg(g, f64::cos, 0.0)).unwrap();
        assert!(r.v.samples().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((r.a + PI).abs() < 1e-10);
    }

    #[test]
    fn bracket_self_and_center() {
        let g = grid(64);
        let xi = alg(g, |x| x.sin() + 0.3 * (4.0 * x).cos(), 2.0);
        let r = gelfand_fuchs_bracket(&xi, &xi).unwrap();
        assert!(r.v.sup_norm() == 0.0);
        assert!(r.a.abs() < 1e-10);
        let center = alg(g, |_| 0.0, 3.0);
        let r = gelfand_fuchs_bracket(&xi, &center).unwrap();
        assert!(r.v.sup_norm() == 0.0 && r.a == 0.0);
    }

    #[test]
    fn h1_examples() {
        let g = grid(64);
        let m = MetricParams::new(1.0, 1.0).unwrap();
        let s = alg(g, f64::sin, 0.0);
        assert!((h1_inner(&s, &s, m).unwrap() - 2.0 * PI).abs() < 1e-12);
        let c = alg(g, |_| 0.0, 1.0);
        assert!((h1_inner(&c, &c, m).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inertia_multipliers() {
        let g = grid(64);
        let id = MetricParams::new(1.0, 0.0).unwrap();
        let xi = alg(g, |x| x.sin() + 0.5, 0.3);
        assert_eq!(inertia_apply(&xi, id).v.samples().len(), 64);
        assert!(inertia_apply(&xi, id).v.sub(&xi.v).sup_norm() < 1e-14);

        let m = MetricParams::new(1.0, 1.0).unwrap();
        let s3 = alg(g, |x| (3.0 * x).sin(), 0.0);
        let a = inertia_apply(&s3, m);
        assert!(a.v.sub(&s3.v.scale(10.0)).sup_norm() < 1e-12);
        let back = inertia_invert(&a, m).unwrap();
        assert!(back.v.sub(&s3.v).sup_norm() < 1e-12);
    }

    #[test]
    fn inertia_invert_singular_without_alpha() {
        let g = grid(32);
        let m = MetricParams::new(0.0, 1.0).unwrap();
        let mu = alg(g, |x| 1.0 + x.cos(), 0.0);
        assert!(matches!(inertia_invert(&mu, m), Err(Error::SingularInertia(_))));
        let mu0 = alg(g, |x| 4.0 * (2.0 * x).cos(), 0.0);
        let v = inertia_invert(&mu0, m).unwrap();
        assert!(v.v.sub(&PeriodicFunction::from_fn(g, |x| (2.0 * x).cos())).sup_norm() < 1e-13);
    }

    #[test]
    fn metric_params_validation() {
        assert!(MetricParams::new(0.0, 0.0).is_err());
        assert!(MetricParams::new(-1.0, 1.0).is_err());
        assert!(MetricParams::new(0.0, 2.0).is_ok());
    }

    #[test]
    fn element_json_shape() {
        let g = grid(16);
        let x = VirasoroElement::new(CircleDiffeo::rotation(g, 0.1), 2.0);
        let v = serde_json::to_value(&x).unwrap();
        assert_eq!(v["F"], 2.0);
        assert_eq!(v["f"]["n"], 16);
        let a = serde_json::to_value(VirasoroAlgebraElement::new(PeriodicFunction::zeros(g), 1.0)).unwrap();
        assert_eq!(a["a"], 1.0);
        assert_eq!(a["v"]["samples"].as_array().unwrap().len(), 16);
    }
}
