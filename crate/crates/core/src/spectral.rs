//! FFT plumbing for 2pi-periodic grid functions.
//!
//! Coefficients are normalized so that `p(x) = sum_k c_k e^{ikx}`, i.e. the
//! forward transform is divided by `n`. Index `j` of a length-`n` spectrum
//! holds wavenumber `j` for `j <= n/2` and `j - n` above. The Nyquist mode
//! `n/2` is real for real data and is interpreted as `c cos(n x / 2)`; odd
//! derivatives annihilate it at the nodes, so every derivative operator here
//! zeroes it.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse of [`forward`]; the imaginary residue is discarded.
pub(crate) fn inverse_real(mut coeffs: Vec<Complex64>) -> Vec<f64> {
    let n = coeffs.len();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(&mut coeffs);
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Signed wavenumber of spectrum index `j`; Nyquist reported as `+n/2`.
pub(crate) fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

pub(crate) fn is_nyquist(j: usize, n: usize) -> bool {
    j == n / 2
}

/// `(ik)^order`, zero on the Nyquist mode for every `order >= 1`.
pub(crate) fn derivative_multiplier(j: usize, n: usize, order: u32) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if is_nyquist(j, n) {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, wavenumber(j, n) as f64).powu(order)
}

pub(crate) fn derivative(samples: &[f64], order: u32) -> Vec<f64> {
    if order == 0 {
        return samples.to_vec();
    }
    let n = samples.len();
    let mut c = forward(samples);
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= derivative_multiplier(j, n, order);
    }
    inverse_real(c)
}

/// Periodic antiderivative of the zero-mean part, pinned to 0 at x = 0.
/// Returns `(mean, P)` with `P' = p - mean` and `P(0) = 0`.
pub(crate) fn periodic_antiderivative(samples: &[f64]) -> (f64, Vec<f64>) {
    let n = samples.len();
    let mut c = forward(samples);
    let mean = c[0].re;
    c[0] = Complex64::new(0.0, 0.0);
    for (j, cj) in c.iter_mut().enumerate().skip(1) {
        if is_nyquist(j, n) {
            // sin(n x / 2)/(n/2) vanishes on the grid
            *cj = Complex64::new(0.0, 0.0);
        } else {
            *cj /= Complex64::new(0.0, wavenumber(j, n) as f64);
        }
    }
    let mut p = inverse_real(c);
    let p0 = p[0];
    for v in &mut p {
        *v -= p0;
    }
    (mean, p)
}

/// 2/3-rule filter: zero every mode with |k| > n/3.
pub(crate) fn dealias_in_place(coeffs: &mut [Complex64]) {
    let n = coeffs.len();
    let cutoff = n / 3;
    for (j, c) in coeffs.iter_mut().enumerate() {
        if wavenumber(j, n).unsigned_abs() as usize > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

pub(crate) fn dealias(samples: &[f64]) -> Vec<f64> {
    let mut c = forward(samples);
    dealias_in_place(&mut c);
    inverse_real(c)
}

/// Fourier-shift: returns samples of `p(x_j - s)` for the trigonometric
/// interpolant `p`.
pub(crate) fn shift(samples: &[f64], s: f64) -> Vec<f64> {
    let n = samples.len();
    let mut c = forward(samples);
    for (j, cj) in c.iter_mut().enumerate() {
        if is_nyquist(j, n) {
            // cos(n(x_j - s)/2) = cos(n x_j / 2) cos(n s / 2) on the grid
            *cj *= (n as f64 * s / 2.0).cos();
        } else {
            let k = wavenumber(j, n) as f64;
            *cj *= Complex64::from_polar(1.0, -k * s);
        }
    }
    inverse_real(c)
}

/// Off-grid evaluator for the trigonometric interpolant of a sample vector.
///
/// Evaluation is O(n) per point using a rotating phasor.
#[derive(Debug, Clone)]
pub struct Interpolant {
    n: usize,
    /// c_0 .. c_{n/2}
    half: Vec<Complex64>,
}

impl Interpolant {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let full = forward(samples);
        Self {
            n,
            half: full[..=n / 2].to_vec(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }

    /// Value and first derivative of the interpolant at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let m = self.n / 2;
        let step = Complex64::from_polar(1.0, x);
        let mut phase = step;
        let mut value = self.half[0].re;
        let mut deriv = 0.0;
        for k in 1..m {
            // re-anchor periodically to bound phasor drift
            if k % 32 == 0 {
                phase = Complex64::from_polar(1.0, k as f64 * x);
            }
            let term = self.half[k] * phase;
            value += 2.0 * term.re;
            deriv -= 2.0 * k as f64 * term.im;
            phase *= step;
        }
        let ny = self.half[m].re;
        let arg = m as f64 * x;
        value += ny * arg.cos();
        deriv -= ny * m as f64 * arg.sin();
        (value, deriv)
    }
}

/// Uniform node `x_j = 2 pi j / n`.
pub fn node(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|j| f(node(j, n))).collect()
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let s = sample(32, |x| (x.sin() + 0.3 * (3.0 * x).cos()).exp());
        let back = inverse_real(forward(&s));
        for (a, b) in s.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolant_matches_analytic_off_grid() {
        let s = sample(64, |x| (2.0 * x).sin() + 0.5 * (7.0 * x).cos());
        let ip = Interpolant::new(&s);
        for &x in &[0.1, 1.234, 4.0, 6.2, -3.0, 10.0] {
            let (v, d) = ip.eval_with_derivative(x);
            let exact = (2.0 * x).sin() + 0.5 * (7.0 * x).cos();
            let dexact = 2.0 * (2.0 * x).cos() - 3.5 * (7.0 * x).sin();
            assert!((v - exact).abs() < 1e-13, "{x}: {v} vs {exact}");
            assert!((d - dexact).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolant_reproduces_nodes_with_nyquist_content() {
        let n = 16;
        let s: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let ip = Interpolant::new(&s);
        for (j, &v) in s.iter().enumerate() {
            assert!((ip.eval(node(j, n)) - v).abs() < 1e-13);
        }
    }

    #[test]
    fn antiderivative_of_cos_is_sin() {
        let s = sample(32, |x| 2.0 + (3.0 * x).cos());
        let (mean, p) = periodic_antiderivative(&s);
        assert!((mean - 2.0).abs() < 1e-14);
        for (j, v) in p.iter().enumerate() {
            let x = node(j, 32);
            assert!((v - (3.0 * x).sin() / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn shift_is_translation() {
        let s = sample(32, |x| x.sin() + (4.0 * x).cos());
        let out = shift(&s, 0.7);
        for (j, v) in out.iter().enumerate() {
            let x = node(j, 32) - 0.7;
            assert!((v - (x.sin() + (4.0 * x).cos())).abs() < 1e-13);
        }
    }

    #[test]
    fn dealias_removes_high_modes_only() {
        let n = 48;
        let s = sample(n, |x| (5.0 * x).sin() + (20.0 * x).cos());
        let d = dealias(&s);
        for (j, v) in d.iter().enumerate() {
            assert!((v - (5.0 * node(j, n)).sin()).abs() < 1e-13);
        }
    }
}
