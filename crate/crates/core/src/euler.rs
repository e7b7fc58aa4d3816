//! Two-dimensional isentropic Euler equations in closed form.
//!
//! Conserved variables are `U = (rho, m, n)` with momenta `m = rho u`,
//! `n = rho v`. Units are chosen so that the sound speed is 1 at `rho = 1`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::PressureConfig;
use crate::error::{Error, Result};
use crate::numerics::{quad_adaptive_scalar, Matrix, Vector};
use crate::system::RawSystem;

/// A barotropic pressure law `p(rho)` with `c^2 = p'(rho) > 0`.
pub trait PressureLaw: Send + Sync {
    fn pressure(&self, rho: f64) -> f64;
    /// `c^2 = p'(rho)`.
    fn sound_speed_sq(&self, rho: f64) -> f64;
    /// `dc/drho`.
    fn sound_speed_derivative(&self, rho: f64) -> f64;
    /// Specific internal energy, any antiderivative of `p / rho^2`.
    fn internal_energy(&self, rho: f64) -> f64;
    fn describe(&self) -> String;

    fn sound_speed(&self, rho: f64) -> f64 {
        self.sound_speed_sq(rho).sqrt()
    }
}

/// `p = rho^gamma / gamma`, so `c^2 = rho^(gamma - 1)` and `c(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLaw {
    pub gamma: f64,
}

impl GammaLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        // c_rho / c = (gamma - 1) / (2 rho) > -1/c requires gamma > -1 at rho = 1;
        // any positive gamma qualifies near rho = 1.
        Ok(GammaLaw { gamma })
    }
}

impl PressureLaw for GammaLaw {
    fn pressure(&self, rho: f64) -> f64 {
        rho.powf(self.gamma) / self.gamma
    }
    fn sound_speed_sq(&self, rho: f64) -> f64 {
        rho.powf(self.gamma - 1.0)
    }
    fn sound_speed_derivative(&self, rho: f64) -> f64 {
        0.5 * (self.gamma - 1.0) * rho.powf(0.5 * (self.gamma - 3.0))
    }
    fn internal_energy(&self, rho: f64) -> f64 {
        let g = self.gamma;
        if (g - 1.0).abs() < 1e-12 {
            rho.ln()
        } else {
            rho.powf(g - 1.0) / (g * (g - 1.0))
        }
    }
    fn describe(&self) -> String {
        format!("gamma law, gamma = {}", self.gamma)
    }
}

/// A user supplied pressure law. Derivatives are taken by central
/// differences and the internal energy by quadrature from `rho = 1`.
#[derive(Clone)]
pub struct CustomLaw {
    p: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl CustomLaw {
    /// Wraps `p`, rejecting it unless `c^2 > 0` and `c_rho > -1` on
    /// `[rho_min, rho_max]`.
    pub fn new<F>(label: &str, p: F, rho_min: f64, rho_max: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let law = CustomLaw {
            p: Arc::new(p),
            label: label.to_string(),
        };
        for k in 0..=64 {
            let rho = rho_min + (rho_max - rho_min) * k as f64 / 64.0;
            let c2 = law.sound_speed_sq(rho);
            if !(c2 > 0.0) {
                return Err(Error::InvalidConfig(format!("p'({rho}) = {c2} is not positive")));
            }
            if !(law.sound_speed_derivative(rho) > -1.0) {
                return Err(Error::InvalidConfig(format!("c_rho({rho}) <= -1")));
            }
        }
        Ok(law)
    }
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw").field("label", &self.label).finish()
    }
}

impl PressureLaw for CustomLaw {
    fn pressure(&self, rho: f64) -> f64 {
        (self.p)(rho)
    }
    fn sound_speed_sq(&self, rho: f64) -> f64 {
        let h = 1e-5 * rho.max(1e-3);
        let d = |h: f64| ((self.p)(rho + h) - (self.p)(rho - h)) / (2.0 * h);
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    }
    fn sound_speed_derivative(&self, rho: f64) -> f64 {
        let h = 1e-4 * rho.max(1e-3);
        let c = |r: f64| self.sound_speed_sq(r).sqrt();
        (c(rho + h) - c(rho - h)) / (2.0 * h)
    }
    fn internal_energy(&self, rho: f64) -> f64 {
        quad_adaptive_scalar(|s| Ok((self.p)(s) / (s * s)), 1.0, rho, 1e-12, &[]).unwrap_or(f64::NAN)
    }
    fn describe(&self) -> String {
        format!("custom law {}", self.label)
    }
}

pub fn pressure_from_config(cfg: &PressureConfig) -> Result<Arc<dyn PressureLaw>> {
    match cfg {
        PressureConfig::Gamma { gamma } => Ok(Arc::new(GammaLaw::new(*gamma)?)),
    }
}

/// Conserved Euler state with derived primitive quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerState {
    pub rho: f64,
    pub m: f64,
    pub n: f64,
}

/// Primitive view of an [`EulerState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimalState {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub c: f64,
    /// Axial Mach number `u / c`.
    pub mach: f64,
}

impl EulerState {
    pub fn new(rho: f64, m: f64, n: f64) -> Result<Self> {
        let s = EulerState { rho, m, n };
        s.check()?;
        Ok(s)
    }

    pub fn from_vector(u: &Vector) -> Result<Self> {
        if u.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: u.len(),
            });
        }
        EulerState::new(u[0], u[1], u[2])
    }

    pub fn to_vector(self) -> Vector {
        Vector::from_vec(vec![self.rho, self.m, self.n])
    }

    fn check(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.m.is_finite() || !self.n.is_finite() || !self.rho.is_finite() {
            return Err(Error::NonPhysical(format!(
                "state ({}, {}, {}) needs finite values and positive density",
                self.rho, self.m, self.n
            )));
        }
        Ok(())
    }

    pub fn u(&self) -> f64 {
        self.m / self.rho
    }
    pub fn v(&self) -> f64 {
        self.n / self.rho
    }

    pub fn primal(&self, law: &dyn PressureLaw) -> PrimalState {
        let c = law.sound_speed(self.rho);
        PrimalState {
            rho: self.rho,
            u: self.u(),
            v: self.v(),
            c,
            mach: self.u() / c,
        }
    }

    /// Rotates the velocity by `theta` (counterclockwise).
    pub fn rotated(&self, theta: f64) -> EulerState {
        let (s, c) = theta.sin_cos();
        EulerState {
            rho: self.rho,
            m: c * self.m - s * self.n,
            n: s * self.m + c * self.n,
        }
    }

    /// The same state in a frame whose x axis is aligned with the velocity,
    /// together with the rotation angle that was applied.
    pub fn aligned_with_x(&self) -> (EulerState, f64) {
        let theta = -self.n.atan2(self.m);
        (self.rotated(theta), theta)
    }
}

/// Returns `(f^x, f^y)`.
pub fn euler_fluxes(law: &dyn PressureLaw, s: &EulerState) -> Result<(Vector, Vector)> {
    s.check()?;
    let p = law.pressure(s.rho);
    let (u, v) = (s.u(), s.v());
    let fx = Vector::from_vec(vec![s.m, s.m * u + p, s.m * v]);
    let fy = Vector::from_vec(vec![s.n, s.n * u, s.n * v + p]);
    Ok((fx, fy))
}

/// Returns `(f^x_U, f^y_U)`.
pub fn euler_jacobians(law: &dyn PressureLaw, s: &EulerState) -> Result<(Matrix, Matrix)> {
    s.check()?;
    let c2 = law.sound_speed_sq(s.rho);
    let (u, v) = (s.u(), s.v());
    let jx = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, c2 - u * u, 2.0 * u, 0.0, -u * v, v, u]);
    let jy = Matrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, -u * v, v, u, c2 - v * v, 0.0, 2.0 * v]);
    Ok((jx, jy))
}

/// Closed-form generalized eigenstructure `(f^y_U - lambda f^x_U) r = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerEigenFields {
    /// `[lambda_-, lambda_0, lambda_+]`.
    pub lambda: [f64; 3],
    /// `[r_-, r_0, r_+]` in conserved variables; `r_+-` scaled so that
    /// `r_+- = (+-M, +-(M^2 - 1), sqrt(M^2 - 1))` at `(1, M, 0)`.
    pub right: [Vector; 3],
}

fn supersonic_check(law: &dyn PressureLaw, s: &EulerState) -> Result<(f64, f64)> {
    s.check()?;
    let k = s.rho * law.sound_speed(s.rho);
    let d = s.m * s.m + s.n * s.n - k * k;
    if !(s.m > k) || !(d > 0.0) {
        return Err(Error::Subsonic(format!(
            "m = {}, n = {}, rho c = {k}: need m > rho c",
            s.m, s.n
        )));
    }
    Ok((k, d))
}

pub fn euler_eigen_fields(law: &dyn PressureLaw, s: &EulerState) -> Result<EulerEigenFields> {
    let (k, d) = supersonic_check(law, s)?;
    let sd = d.sqrt();
    let (m, n) = (s.m, s.n);
    let q = m * m - k * k;
    let lam_m = (m * n - k * sd) / q;
    let lam_p = (m * n + k * sd) / q;
    let lam_0 = n / m;
    let (u, v) = (s.u(), s.v());
    let c2 = law.sound_speed_sq(s.rho);
    let scale = sd / k;
    let vec_for = |lam: f64| {
        let b = lam * (u * u - c2) - u * v;
        Vector::from_vec(vec![lam * u - v, b, lam * b]) * scale
    };
    Ok(EulerEigenFields {
        lambda: [lam_m, lam_0, lam_p],
        right: [vec_for(lam_m), Vector::from_vec(vec![0.0, m, n]), vec_for(lam_p)],
    })
}

/// `grad_U lambda` for family 0 (`-`), 1 (`0`) or 2 (`+`).
pub fn euler_lambda_gradient(law: &dyn PressureLaw, s: &EulerState, family: usize) -> Result<Vector> {
    let (k, d) = supersonic_check(law, s)?;
    let (m, n) = (s.m, s.n);
    if family == 1 {
        return Ok(Vector::from_vec(vec![0.0, -n / (m * m), 1.0 / m]));
    }
    let pm = if family == 0 { -1.0 } else { 1.0 };
    let sd = d.sqrt();
    let k_rho = law.sound_speed(s.rho) + s.rho * law.sound_speed_derivative(s.rho);
    let num = m * n + pm * k * sd;
    let q = m * m - k * k;
    let lam = num / q;
    let dn = [pm * k_rho * (sd - k * k / sd), n + pm * k * m / sd, m + pm * k * n / sd];
    let dq = [-2.0 * k * k_rho, 2.0 * m, 0.0];
    Ok(Vector::from_fn(3, |i, _| (dn[i] - lam * dq[i]) / q))
}

/// `grad_U lambda . r` with the closed-form (unnormalized) right vector.
pub fn euler_gnl_indicator(law: &dyn PressureLaw, s: &EulerState, family: usize) -> Result<f64> {
    let fields = euler_eigen_fields(law, s)?;
    Ok(euler_lambda_gradient(law, s, family)?.dot(&fields.right[family]))
}

/// `(eta, psi^x, psi^y)` with `eta = rho e(rho) + |m|^2 / (2 rho)` and
/// `psi = (eta + p) (u, v)`.
pub fn euler_entropy_pair(law: &dyn PressureLaw, s: &EulerState) -> Result<(f64, f64, f64)> {
    s.check()?;
    let eta = s.rho * law.internal_energy(s.rho) + (s.m * s.m + s.n * s.n) / (2.0 * s.rho);
    let h = eta + law.pressure(s.rho);
    Ok((eta, h * s.u(), h * s.v()))
}

/// `eta_U`.
pub fn euler_entropy_gradient(law: &dyn PressureLaw, s: &EulerState) -> Result<Vector> {
    s.check()?;
    let (u, v) = (s.u(), s.v());
    let first = law.internal_energy(s.rho) + law.pressure(s.rho) / s.rho - 0.5 * (u * u + v * v);
    Ok(Vector::from_vec(vec![first, u, v]))
}

/// `eta_UU`.
pub fn euler_entropy_hessian(law: &dyn PressureLaw, s: &EulerState) -> Result<Matrix> {
    s.check()?;
    let (u, v, r) = (s.u(), s.v(), s.rho);
    let c2 = law.sound_speed_sq(r);
    Ok(Matrix::from_row_slice(
        3,
        3,
        &[
            (c2 + u * u + v * v) / r,
            -u / r,
            -v / r,
            -u / r,
            1.0 / r,
            0.0,
            -v / r,
            0.0,
            1.0 / r,
        ],
    ))
}

/// Mach angle and the six sector centre rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachGeometry {
    pub mach: f64,
    /// `arcsin(1 / M)`, radians.
    pub mu: f64,
    /// Unit rays `(1, 0)`, `(cos mu, sin mu)`, `(cos mu, -sin mu)`.
    pub forward_rays: [(f64, f64); 3],
    /// The forward rays reflected through the origin.
    pub backward_rays: [(f64, f64); 3],
}

impl MachGeometry {
    /// Angles of the forward rays from the +x axis.
    pub fn forward_angles(&self) -> [f64; 3] {
        self.forward_rays.map(|(x, y)| y.atan2(x))
    }
    pub fn backward_angles(&self) -> [f64; 3] {
        self.backward_rays.map(|(x, y)| {
            let a = y.atan2(x);
            if a < 0.0 {
                a + 2.0 * PI
            } else {
                a
            }
        })
    }
}

pub fn mach_geometry(mach: f64) -> Result<MachGeometry> {
    if !(mach > 1.0) {
        return Err(Error::Subsonic(format!("Mach number {mach} <= 1")));
    }
    let mu = (1.0 / mach).asin();
    let (s, c) = mu.sin_cos();
    let forward = [(1.0, 0.0), (c, s), (c, -s)];
    Ok(MachGeometry {
        mach,
        mu,
        forward_rays: forward,
        backward_rays: forward.map(|(x, y)| (-x, -y)),
    })
}

/// Isentropic Euler as a [`RawSystem`].
#[derive(Clone)]
pub struct EulerSystem {
    pub law: Arc<dyn PressureLaw>,
}

impl EulerSystem {
    pub fn new(law: Arc<dyn PressureLaw>) -> Self {
        EulerSystem { law }
    }

    pub fn gamma(gamma: f64) -> Result<Self> {
        Ok(EulerSystem::new(Arc::new(GammaLaw::new(gamma)?)))
    }

    fn state(u: &Vector) -> Result<EulerState> {
        EulerState::from_vector(u)
    }
}

impl RawSystem for EulerSystem {
    fn dim(&self) -> usize {
        3
    }
    fn name(&self) -> String {
        format!("isentropic Euler ({})", self.law.describe())
    }
    fn flux_x(&self, u: &Vector) -> Result<Vector> {
        Ok(euler_fluxes(self.law.as_ref(), &Self::state(u)?)?.0)
    }
    fn flux_y(&self, u: &Vector) -> Result<Vector> {
        Ok(euler_fluxes(self.law.as_ref(), &Self::state(u)?)?.1)
    }
    fn entropy(&self, u: &Vector) -> Result<f64> {
        Ok(euler_entropy_pair(self.law.as_ref(), &Self::state(u)?)?.0)
    }
    fn entropy_flux_x(&self, u: &Vector) -> Result<f64> {
        Ok(euler_entropy_pair(self.law.as_ref(), &Self::state(u)?)?.1)
    }
    fn entropy_flux_y(&self, u: &Vector) -> Result<f64> {
        Ok(euler_entropy_pair(self.law.as_ref(), &Self::state(u)?)?.2)
    }
    fn jac_x(&self, u: &Vector) -> Result<Matrix> {
        Ok(euler_jacobians(self.law.as_ref(), &Self::state(u)?)?.0)
    }
    fn jac_y(&self, u: &Vector) -> Result<Matrix> {
        Ok(euler_jacobians(self.law.as_ref(), &Self::state(u)?)?.1)
    }
    fn entropy_grad(&self, u: &Vector) -> Result<Vector> {
        euler_entropy_gradient(self.law.as_ref(), &Self::state(u)?)
    }
    fn entropy_hessian(&self, u: &Vector) -> Option<Result<Matrix>> {
        Some(Self::state(u).and_then(|s| euler_entropy_hessian(self.law.as_ref(), &s)))
    }
    fn eigen_u(&self, u: &Vector) -> Option<Result<(Vec<f64>, Vec<Vector>)>> {
        Some(Self::state(u).and_then(|s| {
            let f = euler_eigen_fields(self.law.as_ref(), &s)?;
            Ok((f.lambda.to_vec(), f.right.to_vec()))
        }))
    }
    fn lambda_gradient(&self, u: &Vector, alpha: usize) -> Option<Result<Vector>> {
        Some(Self::state(u).and_then(|s| euler_lambda_gradient(self.law.as_ref(), &s, alpha)))
    }

    /// Solves `m^2 / rho + p(rho) = V_2` for `rho` on the supersonic branch.
    fn u_from_v(&self, v: &Vector, guess: &Vector) -> Result<Vector> {
        if v.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: v.len(),
            });
        }
        let (m, target) = (v[0], v[1]);
        if !(m > 0.0) || !target.is_finite() {
            return Err(Error::Subsonic(format!("x-momentum {m} is not positive")));
        }
        let law = self.law.as_ref();
        let g = |rho: f64| m * m / rho + law.pressure(rho) - target;
        // g' = c^2 - u^2 < 0 on the supersonic branch
        let dg = |rho: f64| law.sound_speed_sq(rho) - m * m / (rho * rho);
        let mut rho = if guess.len() == 3 && guess[0] > 0.0 { guess[0] } else { 1.0 };
        if !(dg(rho) < 0.0) {
            rho *= 0.5;
        }
        let mut converged = false;
        for _ in 0..100 {
            let d = dg(rho);
            if !(d < 0.0) {
                return Err(Error::Subsonic(format!("density {rho} left the supersonic branch")));
            }
            let step = g(rho) / d;
            let mut next = rho - step;
            let mut t = 1.0;
            while !(next > 0.0 && dg(next) < 0.0) && t > 1e-6 {
                t *= 0.5;
                next = rho - t * step;
            }
            let done = (next - rho).abs() <= 1e-14 * rho;
            rho = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged || !(rho > 0.0) || !(dg(rho) < 0.0) {
            return Err(Error::Subsonic(format!("no supersonic density for V = {v}")));
        }
        Ok(Vector::from_vec(vec![rho, m, v[2] * rho / m]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eig_real, fd_gradient, fd_hessian, fd_jacobian, linalg};
    use proptest::prelude::*;

    fn law() -> GammaLaw {
        GammaLaw::new(1.4).unwrap()
    }

    fn st(rho: f64, m: f64, n: f64) -> EulerState {
        EulerState::new(rho, m, n).unwrap()
    }

    #[test]
    fn fx_eigenvalues_at_mach_two() {
        let (jx, _) = euler_jacobians(&law(), &st(1.0, 2.0, 0.0)).unwrap();
        let e = eig_real(&jx, 1e-8).unwrap();
        for (got, want) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_momentum_flux() {
        let (fx, fy) = euler_fluxes(&law(), &st(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(fx.as_slice(), &[0.0, 1.0 / 1.4, 0.0]);
        assert_eq!(fy.as_slice(), &[0.0, 0.0, 1.0 / 1.4]);
    }

    #[test]
    fn nonpositive_density_is_nonphysical() {
        assert_eq!(EulerState::new(0.0, 1.0, 0.0).unwrap_err().name(), "NonPhysical");
    }

    #[test]
    fn background_eigenvalues() {
        let f = euler_eigen_fields(&law(), &st(1.0, 2.0, 0.0)).unwrap();
        let want = 1.0 / 3f64.sqrt();
        assert!((f.lambda[0] + want).abs() < 1e-15);
        assert!(f.lambda[1].abs() < 1e-15);
        assert!((f.lambda[2] - want).abs() < 1e-15);
        let f = euler_eigen_fields(&law(), &st(1.0, 2.0, 1.0)).unwrap();
        assert!((f.lambda[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_form_vectors_at_background() {
        let mach: f64 = 2.0;
        let f = euler_eigen_fields(&law(), &st(1.0, mach, 0.0)).unwrap();
        let root = (mach * mach - 1.0).sqrt();
        let want_p = [mach, mach * mach - 1.0, root];
        let want_m = [-mach, -(mach * mach - 1.0), root];
        for i in 0..3 {
            assert!((f.right[2][i] - want_p[i]).abs() < 1e-13);
            assert!((f.right[0][i] - want_m[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn subsonic_rejected() {
        assert_eq!(euler_eigen_fields(&law(), &st(1.0, 0.5, 0.0)).unwrap_err().name(), "Subsonic");
        // |v| / c > 1 but the axial Mach number is below one
        assert_eq!(euler_eigen_fields(&law(), &st(1.0, 0.5, 2.0)).unwrap_err().name(), "Subsonic");
    }

    #[test]
    fn gnl_indicator_at_background() {
        let mach: f64 = 2.0;
        let c_rho = 0.2;
        let want = mach.powi(3) * (1.0 + c_rho) / (mach * mach - 1.0).powf(1.5);
        assert!((want - 1.847_520_861_406_8).abs() < 1e-9);
        let got = euler_gnl_indicator(&law(), &st(1.0, mach, 0.0), 2).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        // finite-difference cross-check of the gradient
        let l = law();
        let u = st(1.0, mach, 0.0).to_vector();
        let grad = fd_gradient(
            |w| Ok(euler_eigen_fields(&l, &EulerState::from_vector(w)?)?.lambda[2]),
            &u,
            1e-5,
        )
        .unwrap();
        let r = &euler_eigen_fields(&l, &st(1.0, mach, 0.0)).unwrap().right[2];
        assert!((grad.dot(r) - want).abs() < 1e-5);
    }

    #[test]
    fn contact_family_is_linearly_degenerate() {
        for s in [st(1.0, 2.0, 0.0), st(0.9, 2.3, 0.4), st(1.1, 1.7, -0.3)] {
            assert!(euler_gnl_indicator(&law(), &s, 1).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn mach_angles() {
        let g = mach_geometry(2.0).unwrap();
        assert!((g.mu - PI / 6.0).abs() < 1e-15);
        let a = g.forward_angles();
        assert!(a[0].abs() < 1e-15 && (a[1] - PI / 6.0).abs() < 1e-15 && (a[2] + PI / 6.0).abs() < 1e-15);
        let b = g.backward_angles();
        assert!((b[0] - PI).abs() < 1e-15);
        assert!((b[1] - 7.0 * PI / 6.0).abs() < 1e-12 && (b[2] - 5.0 * PI / 6.0).abs() < 1e-12);
        // ray slope equals lambda_+ at the background
        let (x, y) = g.forward_rays[1];
        assert!((y / x - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((mach_geometry(1.0 + 1e-12).unwrap().mu - PI / 2.0).abs() < 1e-5);
        assert!(mach_geometry(0.9).is_err());
    }

    #[test]
    fn zero_velocity_entropy_flux() {
        let (_, px, py) = euler_entropy_pair(&law(), &st(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((px, py), (0.0, 0.0));
    }

    #[test]
    fn isothermal_internal_energy() {
        let l = GammaLaw::new(1.0).unwrap();
        assert!((l.internal_energy(2.0) - 2f64.ln()).abs() < 1e-15);
        let custom = CustomLaw::new("gamma 1.4", |r: f64| r.powf(1.4) / 1.4, 0.5, 2.0).unwrap();
        let de = custom.internal_energy(1.3) - custom.internal_energy(1.0);
        let want = law().internal_energy(1.3) - law().internal_energy(1.0);
        assert!((de - want).abs() < 1e-10);
        assert!((custom.sound_speed_derivative(1.0) - 0.2).abs() < 1e-7);
        assert!(CustomLaw::new("bad", |r: f64| -r, 0.5, 2.0).is_err());
    }

    #[test]
    fn change_of_variables_inverse() {
        let sys = EulerSystem::gamma(1.4).unwrap();
        let u = Vector::from_vec(vec![1.05, 2.1, -0.2]);
        let v = sys.flux_x(&u).unwrap();
        let back = sys.u_from_v(&v, &Vector::from_vec(vec![1.0, 2.0, 0.0])).unwrap();
        assert!((back - u).norm() < 1e-13);
    }

    fn supersonic_state() -> impl Strategy<Value = EulerState> {
        (0.6f64..1.6, 1.3f64..4.0, -0.4f64..0.4).prop_filter_map("supersonic", |(rho, mach, slope)| {
            let c = law().sound_speed(rho);
            let m = rho * mach * c;
            let s = EulerState::new(rho, m, slope * m).ok()?;
            supersonic_check(&law(), &s).ok().map(|_| s)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn jacobians_match_finite_differences(s in supersonic_state()) {
            let l = law();
            let u = s.to_vector();
            let (jx, jy) = euler_jacobians(&l, &s).unwrap();
            let fx = fd_jacobian(|w| Ok(euler_fluxes(&l, &EulerState::from_vector(w)?)?.0), &u, 1e-6).unwrap();
            let fy = fd_jacobian(|w| Ok(euler_fluxes(&l, &EulerState::from_vector(w)?)?.1), &u, 1e-6).unwrap();
            prop_assert!((jx - fx).amax() < 1e-6);
            prop_assert!((jy - fy).amax() < 1e-6);
        }

        #[test]
        fn closed_form_matches_pencil_eigensolve(s in supersonic_state()) {
            let l = law();
            let f = euler_eigen_fields(&l, &s).unwrap();
            let (jx, jy) = euler_jacobians(&l, &s).unwrap();
            let pencil = linalg::inverse(&jx).unwrap() * &jy;
            let e = eig_real(&pencil, 1e-8).unwrap();
            for a in 0..3 {
                prop_assert!((e.values[a] - f.lambda[a]).abs() < 1e-9);
                let res = (&jy - &jx * f.lambda[a]) * &f.right[a];
                prop_assert!(res.amax() < 1e-9);
                prop_assert!((&jy - &jx * f.lambda[a]).determinant().abs() < 1e-9);
            }
        }

        #[test]
        fn contact_indicator_vanishes(s in supersonic_state()) {
            prop_assert!(euler_gnl_indicator(&law(), &s, 1).unwrap().abs() <= 1e-10);
            prop_assert!(euler_gnl_indicator(&law(), &s, 0).unwrap() > 0.0);
            prop_assert!(euler_gnl_indicator(&law(), &s, 2).unwrap() > 0.0);
        }

        #[test]
        fn entropy_pair_compatible(s in supersonic_state()) {
            let l = law();
            let u = s.to_vector();
            let (jx, jy) = euler_jacobians(&l, &s).unwrap();
            let eta_u = euler_entropy_gradient(&l, &s).unwrap();
            let px = fd_gradient(|w| Ok(euler_entropy_pair(&l, &EulerState::from_vector(w)?)?.1), &u, 1e-5).unwrap();
            let py = fd_gradient(|w| Ok(euler_entropy_pair(&l, &EulerState::from_vector(w)?)?.2), &u, 1e-5).unwrap();
            prop_assert!((px - jx.transpose() * &eta_u).amax() < 1e-7);
            prop_assert!((py - jy.transpose() * &eta_u).amax() < 1e-7);
            let eta_fd = fd_gradient(|w| Ok(euler_entropy_pair(&l, &EulerState::from_vector(w)?)?.0), &u, 1e-5).unwrap();
            prop_assert!((eta_fd - eta_u).amax() < 1e-8);
        }

        #[test]
        fn entropy_is_convex(s in supersonic_state()) {
            let l = law();
            let h = euler_entropy_hessian(&l, &s).unwrap();
            let fd = fd_hessian(|w| Ok(euler_entropy_pair(&l, &EulerState::from_vector(w)?)?.0), &s.to_vector(), 1e-3).unwrap();
            prop_assert!((&h - fd).amax() < 1e-6);
            prop_assert!(linalg::symmetric_eigenvalues(&h)[0] > 0.0);
        }

        #[test]
        fn rotation_rotates_characteristic_rays(s in supersonic_state(), theta in -0.1f64..0.1) {
            let l = law();
            let rot = s.rotated(theta);
            prop_assume!(supersonic_check(&l, &rot).is_ok());
            let before = euler_eigen_fields(&l, &s).unwrap().lambda;
            let after = euler_eigen_fields(&l, &rot).unwrap().lambda;
            for a in 0..3 {
                let diff = after[a].atan() - before[a].atan() - theta;
                prop_assert!(diff.abs() < 1e-10, "family {} off by {}", a, diff);
            }
        }
    }
}
