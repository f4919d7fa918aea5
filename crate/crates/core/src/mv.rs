//! Moser-Veselov discrete rigid body on SO(N).
//!
//! The discrete Lagrangian `L(X, Y) = tr(X J Y^T)` generates, with
//! `omega_k = X_k^T X_{k-1}` and `M_k = omega_k^T J - J omega_k`,
//!
//! ```text
//! M_{k+1} = omega_k M_k omega_k^T,    M_{k+1} = omega_{k+1}^T J - J omega_{k+1}.
//! ```
//!
//! The second relation is implicit in `omega_{k+1}`. Writing
//! `U = omega^T J = S + M/2` with `S` symmetric, orthogonality of `omega` is
//! `U^T U = J^2`, a quadratic equation for `S`
//!
//! ```text
//! F(S) = (S - M/2)(S + M/2) - J^2 = 0
//! ```
//!
//! solved by Newton: each step solves the Lyapunov equation
//! `U^T E + E U = -F` for symmetric `E`. We keep the branch where `S` stays
//! positive definite, which deforms continuously from `omega = I` at `M = 0`.
//! The map from `M` to `omega` is multivalued and the other branches are
//! not computed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Rows = Vec<Vec<f64>>;

fn from_rows(rows: &Rows) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("expected a non-empty square matrix".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("matrix entries must be finite".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("{a} vs {b}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Rows", into = "Rows")]
pub struct BodyTensor {
    j: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl BodyTensor {
    pub fn new(j: DMatrix<f64>) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::DimensionMismatch("J must be square".into()));
        }
        let asym = (&j - j.transpose()).norm();
        if asym >= 1e-12 {
            return Err(Error::InvalidParams(format!("J not symmetric: {asym:.3e}")));
        }
        let sym = (&j + j.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NotPositiveDefinite(format!(
                "eigenvalues of J: {:?}",
                eig.eigenvalues.as_slice()
            )));
        }
        Ok(Self {
            j: sym,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Skew `Omega` with `J Omega + Omega J = M`.
    pub fn angular_velocity_of(&self, m: &SkewMatrix) -> SkewMatrix {
        let q = &self.eigenvectors;
        let mt = q.transpose() * &m.0 * q;
        let l = &self.eigenvalues;
        let om = DMatrix::from_fn(mt.nrows(), mt.ncols(), |i, j| mt[(i, j)] / (l[i] + l[j]));
        SkewMatrix::project(q * om * q.transpose())
    }
}

impl TryFrom<Rows> for BodyTensor {
    type Error = Error;
    fn try_from(r: Rows) -> Result<Self> {
        Self::new(from_rows(&r)?)
    }
}

impl From<BodyTensor> for Rows {
    fn from(b: BodyTensor) -> Self {
        to_rows(&b.j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Rows", into = "Rows")]
pub struct RotationMatrix(DMatrix<f64>);

pub fn orthogonality_residual(x: &DMatrix<f64>) -> f64 {
    (x.transpose() * x - DMatrix::identity(x.nrows(), x.ncols())).norm()
}

impl RotationMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if !x.is_square() {
            return Err(Error::DimensionMismatch("rotation must be square".into()));
        }
        let r = orthogonality_residual(&x);
        if !(r < 1e-10) {
            return Err(Error::OrthogonalityLost(r));
        }
        if x.determinant() <= 0.0 {
            return Err(Error::OrthogonalityLost(f64::INFINITY));
        }
        Ok(Self(x))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// `[[cos, -sin], [sin, cos]]`.
    pub fn planar(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// Cayley transform `(I - A)^{-1} (I + A)` of a skew matrix.
    pub fn cayley(a: &SkewMatrix) -> Self {
        let n = a.dim();
        let i = DMatrix::<f64>::identity(n, n);
        let q = (&i - &a.0).lu().solve(&(&i + &a.0)).expect("I - A is invertible for skew A");
        Self(q)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
    pub fn orthogonality_residual(&self) -> f64 {
        orthogonality_residual(&self.0)
    }

    pub fn mul(&self, other: &RotationMatrix) -> Result<RotationMatrix> {
        same_dim(self.dim(), other.dim())?;
        RotationMatrix::new(&self.0 * &other.0)
    }

    pub fn transpose(&self) -> RotationMatrix {
        RotationMatrix(self.0.transpose())
    }
}

impl TryFrom<Rows> for RotationMatrix {
    type Error = Error;
    fn try_from(r: Rows) -> Result<Self> {
        Self::new(from_rows(&r)?)
    }
}

impl From<RotationMatrix> for Rows {
    fn from(r: RotationMatrix) -> Self {
        to_rows(&r.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Rows", into = "Rows")]
pub struct SkewMatrix(DMatrix<f64>);

impl SkewMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("skew matrix must be square".into()));
        }
        let r = (&m + m.transpose()).norm();
        if !(r < 1e-12 * m.norm().max(1.0)) {
            return Err(Error::NotSkew(r));
        }
        Ok(Self(m))
    }

    /// Skew part `(A - A^T) / 2`.
    pub fn project(a: DMatrix<f64>) -> Self {
        Self((&a - a.transpose()) * 0.5)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn random(rng: &mut impl Rng, n: usize, scale: f64) -> Self {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s = Self::project(a);
        let norm = s.0.norm().max(1e-300);
        Self(s.0 * (scale / norm))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
    pub fn scale(&self, s: f64) -> SkewMatrix {
        SkewMatrix(&self.0 * s)
    }

    /// Magnitudes of the eigenvalues `+-i sigma`: the singular values, sorted
    /// descending. Conjugation by rotations preserves them.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.0.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

impl TryFrom<Rows> for SkewMatrix {
    type Error = Error;
    fn try_from(r: Rows) -> Result<Self> {
        Self::new(from_rows(&r)?)
    }
}

impl From<SkewMatrix> for Rows {
    fn from(m: SkewMatrix) -> Self {
        to_rows(&m.0)
    }
}

pub fn discrete_lagrangian(x: &RotationMatrix, y: &RotationMatrix, j: &BodyTensor) -> Result<f64> {
    same_dim(x.dim(), y.dim())?;
    same_dim(x.dim(), j.dim())?;
    Ok((&x.0 * &j.j * y.0.transpose()).trace())
}

/// `omega_k = X_k^T X_{k-1}`.
pub fn angular_velocity(x_k: &RotationMatrix, x_km1: &RotationMatrix) -> Result<RotationMatrix> {
    same_dim(x_k.dim(), x_km1.dim())?;
    RotationMatrix::new(x_k.0.transpose() * &x_km1.0)
}

/// `M = omega^T J - J omega`.
pub fn momentum(omega: &RotationMatrix, j: &BodyTensor) -> Result<SkewMatrix> {
    same_dim(omega.dim(), j.dim())?;
    Ok(SkewMatrix::project(omega.0.transpose() * &j.j - &j.j * &omega.0))
}

fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    q * d * q.transpose()
}

/// Solve `U^T E + E U = R` for symmetric `E` (`R` symmetric), as a dense
/// system in the `n(n+1)/2` upper-triangular unknowns.
fn lyapunov_symmetric(u: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = u.nrows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let p = pairs.len();
    let mut a = DMatrix::<f64>::zeros(p, p);
    for (col, &(a_i, a_j)) in pairs.iter().enumerate() {
        // image of the symmetric unit E with ones at (a_i, a_j), (a_j, a_i):
        // (U^T E)_{ij} = U_{a_i i} E_{a_i j} + ..., computed entrywise
        for (row, &(i, j)) in pairs.iter().enumerate() {
            let e = |x: usize, y: usize| -> f64 {
                if (x == a_i && y == a_j) || (x == a_j && y == a_i) {
                    1.0
                } else {
                    0.0
                }
            };
            let mut v = 0.0;
            for k in [a_i, a_j] {
                v += u[(k, i)] * e(k, j);
                v += e(i, k) * u[(k, j)];
                if a_i == a_j {
                    break;
                }
            }
            a[(row, col)] = v;
        }
    }
    let b = DVector::from_iterator(p, pairs.iter().map(|&(i, j)| r[(i, j)]));
    let x = a.lu().solve(&b)?;
    let mut e = DMatrix::zeros(n, n);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        e[(i, j)] = x[k];
        e[(j, i)] = x[k];
    }
    Some(e)
}

/// The rotation on the near-identity branch with `omega^T J - J omega = M`.
pub fn solve_omega(m: &SkewMatrix, j: &BodyTensor) -> Result<RotationMatrix> {
    same_dim(m.dim(), j.dim())?;
    let n = j.dim();
    let jm = &j.j;
    let mm = &m.0;
    let half_m = mm * 0.5;
    let j2 = jm * jm;
    let target = &j2 + half_m.transpose() * &half_m;
    let scale = j2.norm() + half_m.norm().powi(2);
    let residual = |s: &DMatrix<f64>| (s - &half_m) * (s + &half_m) - &j2;

    let mut s = sym_sqrt(&target);
    let mut f = residual(&s);
    let mut converged = false;
    let mut best = f.norm();
    let mut stalls = 0;
    for _ in 0..50 {
        let fnorm = f.norm();
        if fnorm <= 4.0 * f64::EPSILON * scale * n as f64 {
            converged = true;
            break;
        }
        let u = &s + &half_m;
        let Some(e) = lyapunov_symmetric(&u, &(-&f)) else {
            return Err(Error::NoNearIdentityBranch("singular Newton system".into()));
        };
        s += &e;
        s = (&s + s.transpose()) * 0.5;
        f = residual(&s);
        let next = f.norm();
        if !next.is_finite() {
            return Err(Error::NoNearIdentityBranch("Newton diverged".into()));
        }
        if next < best * 0.5 {
            best = next;
            stalls = 0;
        } else {
            stalls += 1;
            // round-off floor: further steps cannot improve
            if stalls >= 2 && next <= 1e-12 * scale {
                converged = true;
                break;
            }
            best = best.min(next);
        }
    }
    if !converged {
        return Err(Error::NoNearIdentityBranch(format!(
            "Newton did not converge in 50 iterations (residual {:.3e})",
            f.norm()
        )));
    }
    if s.clone().symmetric_eigen().eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NoNearIdentityBranch("symmetric part not positive definite".into()));
    }
    let j_inv = &j.eigenvectors
        * DMatrix::from_diagonal(&j.eigenvalues.map(|l| 1.0 / l))
        * j.eigenvectors.transpose();
    let omega = j_inv * (&s - &half_m);
    let tolerance = 1e-10 * jm.norm().max(1.0);
    let res = (omega.transpose() * jm - jm * &omega - mm).norm();
    if !(res < tolerance) {
        return Err(Error::ResidualTooLarge { residual: res, tolerance });
    }
    let orth = orthogonality_residual(&omega);
    if !(orth < 1e-10) {
        return Err(Error::ResidualTooLarge {
            residual: orth,
            tolerance: 1e-10,
        });
    }
    if omega.determinant() <= 0.0 {
        return Err(Error::NoNearIdentityBranch("det omega < 0".into()));
    }
    Ok(RotationMatrix(omega))
}

/// `M_{k+1} = omega_k M_k omega_k^T`, then `omega_{k+1}` re-solved from it.
pub fn mv_step(
    m_k: &SkewMatrix,
    omega_k: &RotationMatrix,
    j: &BodyTensor,
) -> Result<(SkewMatrix, RotationMatrix)> {
    same_dim(m_k.dim(), omega_k.dim())?;
    let next = SkewMatrix::project(&omega_k.0 * &m_k.0 * omega_k.0.transpose());
    let omega = solve_omega(&next, j)?;
    Ok((next, omega))
}

/// States `(M_k, omega_k)` for `k = 0..=steps`, starting from `omega_0`.
pub fn mv_trajectory(
    omega0: &RotationMatrix,
    j: &BodyTensor,
    steps: usize,
) -> Result<Vec<(SkewMatrix, RotationMatrix)>> {
    let m0 = momentum(omega0, j)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((m0, omega0.clone()));
    for _ in 0..steps {
        let (m, w) = out.last().expect("non-empty");
        let next = mv_step(m, w, j)?;
        out.push(next);
    }
    Ok(out)
}

/// Configurations from `X_0` and `omega_1, omega_2, ...` via
/// `X_k = X_{k-1} omega_k^T`.
pub fn reconstruct_configurations(x0: &RotationMatrix, omegas: &[RotationMatrix]) -> Vec<RotationMatrix> {
    let mut xs = vec![x0.clone()];
    for w in omegas {
        let prev = xs.last().expect("non-empty");
        xs.push(RotationMatrix(&prev.0 * w.0.transpose()));
    }
    xs
}

pub fn discrete_action(xs: &[RotationMatrix], j: &BodyTensor) -> Result<f64> {
    xs.windows(2).map(|w| discrete_lagrangian(&w[0], &w[1], j)).sum()
}

/// Centered finite difference of the action along `X_k -> X_k exp(eps A)`
/// (Cayley retraction), divided by `|A| * sum |L|`.
pub fn action_variation(
    xs: &[RotationMatrix],
    j: &BodyTensor,
    k: usize,
    a: &SkewMatrix,
    eps: f64,
) -> Result<f64> {
    if k == 0 || k + 1 >= xs.len() {
        return Err(Error::InvalidSequence(format!("index {k} is not interior")));
    }
    let local = |xk: &RotationMatrix| -> Result<f64> {
        Ok(discrete_lagrangian(&xs[k - 1], xk, j)? + discrete_lagrangian(xk, &xs[k + 1], j)?)
    };
    let plus = RotationMatrix(&xs[k].0 * RotationMatrix::cayley(&a.scale(0.5 * eps)).0);
    let minus = RotationMatrix(&xs[k].0 * RotationMatrix::cayley(&a.scale(-0.5 * eps)).0);
    let deriv = (local(&plus)? - local(&minus)?) / (2.0 * eps);
    let scale: f64 = xs
        .windows(2)
        .map(|w| discrete_lagrangian(&w[0], &w[1], j).map(f64::abs))
        .sum::<Result<f64>>()?
        / (xs.len() - 1) as f64;
    Ok(deriv.abs() / (a.0.norm() * scale.max(1.0)))
}

/// `M Omega - Omega M` with `J Omega + Omega J = M`.
pub fn continuous_rhs(m: &SkewMatrix, j: &BodyTensor) -> SkewMatrix {
    let omega = j.angular_velocity_of(m);
    SkewMatrix::project(&m.0 * &omega.0 - &omega.0 * &m.0)
}

/// `<M, Omega> / 2` with `<A, B> = tr(A^T B) / 2`.
pub fn energy(m: &SkewMatrix, j: &BodyTensor) -> f64 {
    let omega = j.angular_velocity_of(m);
    0.25 * m.0.dot(&omega.0)
}

/// `tr(M^2)`.
pub fn casimir(m: &SkewMatrix) -> f64 {
    (&m.0 * &m.0).trace()
}

/// Classical RK4; returns `steps + 1` states including `M0`.
pub fn rk4_euler_arnold(m0: &SkewMatrix, j: &BodyTensor, dt: f64, steps: usize) -> Vec<SkewMatrix> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(m0.clone());
    let mut m = m0.0.clone();
    let f = |x: &DMatrix<f64>| continuous_rhs(&SkewMatrix(x.clone()), j).0;
    for _ in 0..steps {
        let k1 = f(&m);
        let k2 = f(&(&m + &k1 * (0.5 * dt)));
        let k3 = f(&(&m + &k2 * (0.5 * dt)));
        let k4 = f(&(&m + &k3 * dt));
        m += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(SkewMatrix::project(m.clone()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPoint {
    pub eps: f64,
    pub steps: usize,
    pub error: f64,
}

/// Discrete trajectories started at `M_0 = eps * M0` compared with the
/// continuous flow of `M0` at time `t_final`: the error is
/// `|M_K / eps - M(K eps)|` with `K = round(t_final / eps)`.
pub fn continuous_limit(
    m0: &SkewMatrix,
    j: &BodyTensor,
    t_final: f64,
    eps_values: &[f64],
    reference_dt: f64,
) -> Result<Vec<LimitPoint>> {
    crate::par::try_map_tasks(eps_values.len(), |i| {
        let eps = eps_values[i];
        let steps = (t_final / eps).round().max(1.0) as usize;
        let mut m = m0.scale(eps);
        let mut w = solve_omega(&m, j)?;
        for _ in 0..steps {
            (m, w) = mv_step(&m, &w, j)?;
        }
        let t = steps as f64 * eps;
        let ref_steps = (t / reference_dt).ceil().max(1.0) as usize;
        let reference = rk4_euler_arnold(m0, j, t / ref_steps as f64, ref_steps);
        let last = reference.last().expect("non-empty");
        let error = (&m.0 / eps - &last.0).norm();
        Ok(LimitPoint { eps, steps, error })
    })
}

/// Least-squares slope of `log error` against `log eps`.
pub fn log_log_slope(points: &[LimitPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.eps.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.error.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;

    fn j3() -> BodyTensor {
        BodyTensor::diagonal(&[1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn types_validate() {
        assert!(BodyTensor::diagonal(&[1.0, 0.0]).is_err());
        assert!(BodyTensor::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        assert!(matches!(
            RotationMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])),
            Err(Error::OrthogonalityLost(_))
        ));
        assert!(matches!(
            SkewMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
            Err(Error::NotSkew(_))
        ));
    }

    #[test]
    fn lagrangian_examples() {
        let j = j3();
        let i = RotationMatrix::identity(3);
        assert!((discrete_lagrangian(&i, &i, &j).unwrap() - 6.0).abs() < 1e-15);
        let x = RotationMatrix::cayley(&SkewMatrix::random(&mut rng(1), 3, 0.8));
        assert!((discrete_lagrangian(&x, &x, &j).unwrap() - 6.0).abs() < 1e-13);
        let y = RotationMatrix::cayley(&SkewMatrix::random(&mut rng(2), 3, 0.8));
        let id = BodyTensor::diagonal(&[1.0; 3]).unwrap();
        let expect = (x.matrix() * y.matrix().transpose()).trace();
        assert!((discrete_lagrangian(&x, &y, &id).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn angular_velocity_examples() {
        let x = RotationMatrix::cayley(&SkewMatrix::random(&mut rng(3), 4, 1.0));
        let y = RotationMatrix::cayley(&SkewMatrix::random(&mut rng(4), 4, 1.0));
        assert!((angular_velocity(&x, &x).unwrap().matrix() - DMatrix::identity(4, 4)).norm() < 1e-14);
        assert_eq!(angular_velocity(&RotationMatrix::identity(4), &y).unwrap(), y);
        assert!(angular_velocity(&x, &y).unwrap().orthogonality_residual() < 1e-12);
    }

    #[test]
    fn momentum_planar_closed_form() {
        let (j1, j2) = (1.0, 2.0);
        let j = BodyTensor::diagonal(&[j1, j2]).unwrap();
        for theta in [0.1, -0.4, 1.2] {
            let m = momentum(&RotationMatrix::planar(theta), &j).unwrap();
            assert!((m.matrix()[(0, 1)] - (j1 + j2) * f64::sin(theta)).abs() < 1e-15);
        }
        assert_eq!(momentum(&RotationMatrix::identity(3), &j3()).unwrap().matrix().norm(), 0.0);
    }

    #[test]
    fn solve_omega_examples() {
        let j = j3();
        let w = solve_omega(&SkewMatrix::zeros(3), &j).unwrap();
        assert!((w.matrix() - DMatrix::identity(3, 3)).norm() < 1e-15);

        let j = BodyTensor::diagonal(&[1.0, 2.0]).unwrap();
        let m = SkewMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 3.0 * 0.1f64.sin(), -3.0 * 0.1f64.sin(), 0.0])).unwrap();
        let w = solve_omega(&m, &j).unwrap();
        assert!((w.matrix() - RotationMatrix::planar(0.1).matrix()).norm() < 1e-12);
    }

    #[test]
    fn solve_omega_round_trip() {
        let mut r = rng(5);
        for n in 2..=6 {
            for _ in 0..10 {
                let diag: Vec<f64> = (0..n).map(|_| r.random_range(0.5..3.0)).collect();
                let q = RotationMatrix::cayley(&SkewMatrix::random(&mut r, n, 1.0));
                let jm = q.matrix() * DMatrix::from_diagonal(&DVector::from_vec(diag)) * q.matrix().transpose();
                let j = BodyTensor::new((&jm + jm.transpose()) * 0.5).unwrap();
                let w = RotationMatrix::cayley(&SkewMatrix::random(&mut r, n, 0.2));
                let m = momentum(&w, &j).unwrap();
                let back = solve_omega(&m, &j).unwrap();
                assert!((back.matrix() - w.matrix()).norm() < 1e-9, "n = {n}");
            }
        }
    }

    #[test]
    fn mv_step_equilibrium_and_isospectral() {
        let j = j3();
        let (m, w) = mv_step(&SkewMatrix::zeros(3), &RotationMatrix::identity(3), &j).unwrap();
        assert_eq!(m.matrix().norm(), 0.0);
        assert!((w.matrix() - DMatrix::identity(3, 3)).norm() < 1e-15);

        let w0 = RotationMatrix::cayley(&SkewMatrix::random(&mut rng(6), 3, 0.1));
        let m0 = momentum(&w0, &j).unwrap();
        let (m1, _) = mv_step(&m0, &w0, &j).unwrap();
        for (a, b) in m0.spectrum().iter().zip(m1.spectrum()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn long_run_invariants() {
        let j = j3();
        let w0 = RotationMatrix::cayley(&SkewMatrix::random(&mut rng(7), 3, 0.1));
        let traj = mv_trajectory(&w0, &j, 1000).unwrap();
        let s0 = traj[0].0.spectrum();
        for (m, w) in &traj {
            assert!(w.orthogonality_residual() < 1e-9);
            for (a, b) in s0.iter().zip(m.spectrum()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn trajectory_is_stationary() {
        let j = BodyTensor::diagonal(&[1.0, 1.5, 2.5, 4.0]).unwrap();
        let mut r = rng(8);
        let w0 = RotationMatrix::cayley(&SkewMatrix::random(&mut r, 4, 0.2));
        let traj = mv_trajectory(&w0, &j, 8).unwrap();
        let omegas: Vec<RotationMatrix> = traj.iter().map(|(_, w)| w.clone()).collect();
        let x0 = RotationMatrix::cayley(&SkewMatrix::random(&mut r, 4, 1.0));
        let xs = reconstruct_configurations(&x0, &omegas);
        for k in 1..xs.len() - 1 {
            let a = SkewMatrix::random(&mut r, 4, 1.0);
            assert!(action_variation(&xs, &j, k, &a, 1e-5).unwrap() < 1e-6);
        }
        // a perturbed path is not stationary
        let mut bent = xs.clone();
        bent[3] = RotationMatrix(bent[3].matrix() * RotationMatrix::cayley(&SkewMatrix::random(&mut r, 4, 0.1)).matrix());
        let a = SkewMatrix::random(&mut r, 4, 1.0);
        let v = (1..bent.len() - 1)
            .map(|k| action_variation(&bent, &j, k, &a, 1e-5).unwrap())
            .fold(0.0, f64::max);
        assert!(v > 1e-4);
    }

    #[test]
    fn continuous_rhs_examples() {
        let j = j3();
        assert_eq!(continuous_rhs(&SkewMatrix::zeros(3), &j).matrix().norm(), 0.0);
        let m = SkewMatrix::random(&mut rng(9), 3, 1.0);
        let free = BodyTensor::diagonal(&[1.0; 3]).unwrap();
        assert!(continuous_rhs(&m, &free).matrix().norm() < 1e-15);
        let om = j.angular_velocity_of(&m);
        let back = j.matrix() * om.matrix() + om.matrix() * j.matrix();
        assert!((back - m.matrix()).norm() < 1e-12);
    }

    #[test]
    fn rk4_conserves() {
        let j = j3();
        let m0 = SkewMatrix::random(&mut rng(10), 3, 1.0);
        let traj = rk4_euler_arnold(&m0, &j, 1e-3, 1000);
        let (c0, e0) = (casimir(&m0), energy(&m0, &j));
        let last = traj.last().unwrap();
        assert!((casimir(last) - c0).abs() < 1e-10);
        assert!((energy(last, &j) - e0).abs() < 1e-8);
        let zero = rk4_euler_arnold(&SkewMatrix::zeros(3), &j, 1e-3, 10);
        assert!(zero.iter().all(|m| m.matrix().norm() == 0.0));
    }

    #[test]
    fn continuous_limit_first_order() {
        let j = j3();
        let m0 = SkewMatrix::random(&mut rng(11), 3, 1.0);
        let pts = continuous_limit(&m0, &j, 1.0, &[0.04, 0.02, 0.01, 0.005], 1e-3).unwrap();
        assert!(log_log_slope(&pts) >= 1.0 - 0.05, "{pts:?}");
    }

    #[test]
    fn serde_rows() {
        let j: BodyTensor = serde_json::from_str("[[1,0],[0,2]]").unwrap();
        assert_eq!(j.dim(), 2);
        let s = serde_json::to_string(&RotationMatrix::identity(2)).unwrap();
        assert_eq!(s, "[[1.0,0.0],[0.0,1.0]]");
        assert!(serde_json::from_str::<SkewMatrix>("[[0,1],[1,0]]").is_err());
    }
}
