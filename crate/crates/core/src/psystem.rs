//! The p-system `v_x - u_y = 0`, `u_x + p(v)_y = 0` with `p(v) = v^-gamma`,
//! a two-family test instance that only supplies fluxes, Jacobians and the
//! entropy pair; everything else goes through the generic code paths.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};
use crate::system::RawSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PSystem {
    pub gamma: f64,
}

impl PSystem {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        Ok(PSystem { gamma })
    }

    fn specific_volume(&self, u: &Vector) -> Result<f64> {
        if u.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: u.len(),
            });
        }
        if !(u[0] > 0.0) || !u[1].is_finite() {
            return Err(Error::NonPhysical(format!("specific volume {} must be positive", u[0])));
        }
        Ok(u[0])
    }

    pub fn pressure(&self, v: f64) -> f64 {
        v.powf(-self.gamma)
    }

    // Pi with Pi' = -p
    fn potential(&self, v: f64) -> f64 {
        let g = self.gamma;
        if (g - 1.0).abs() < 1e-12 {
            -v.ln()
        } else {
            v.powf(1.0 - g) / (g - 1.0)
        }
    }
}

impl RawSystem for PSystem {
    fn dim(&self) -> usize {
        2
    }
    fn name(&self) -> String {
        format!("p-system, gamma = {}", self.gamma)
    }
    fn flux_x(&self, u: &Vector) -> Result<Vector> {
        self.specific_volume(u)?;
        Ok(u.clone())
    }
    fn flux_y(&self, u: &Vector) -> Result<Vector> {
        let v = self.specific_volume(u)?;
        Ok(Vector::from_vec(vec![-u[1], self.pressure(v)]))
    }
    fn entropy(&self, u: &Vector) -> Result<f64> {
        let v = self.specific_volume(u)?;
        Ok(0.5 * u[1] * u[1] + self.potential(v))
    }
    fn entropy_flux_x(&self, u: &Vector) -> Result<f64> {
        self.entropy(u)
    }
    fn entropy_flux_y(&self, u: &Vector) -> Result<f64> {
        let v = self.specific_volume(u)?;
        Ok(self.pressure(v) * u[1])
    }
    fn jac_x(&self, u: &Vector) -> Result<Matrix> {
        self.specific_volume(u)?;
        Ok(Matrix::identity(2, 2))
    }
    fn jac_y(&self, u: &Vector) -> Result<Matrix> {
        let v = self.specific_volume(u)?;
        let dp = -self.gamma * v.powf(-self.gamma - 1.0);
        Ok(Matrix::from_row_slice(2, 2, &[0.0, -1.0, dp, 0.0]))
    }
    fn entropy_grad(&self, u: &Vector) -> Result<Vector> {
        let v = self.specific_volume(u)?;
        Ok(Vector::from_vec(vec![-self.pressure(v), u[1]]))
    }
    fn u_from_v(&self, v: &Vector, _guess: &Vector) -> Result<Vector> {
        self.specific_volume(v)?;
        Ok(v.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eig_real, fd_gradient};

    #[test]
    fn characteristic_speeds() {
        let p = PSystem::new(1.4).unwrap();
        let u = Vector::from_vec(vec![1.0, 0.0]);
        let e = eig_real(&p.jac_y(&u).unwrap(), 1e-8).unwrap();
        assert!((e.values[0] + 1.4f64.sqrt()).abs() < 1e-12);
        assert!((e.values[1] - 1.4f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn entropy_flux_compatibility() {
        let p = PSystem::new(1.4).unwrap();
        let u = Vector::from_vec(vec![1.1, 0.3]);
        let q = fd_gradient(|w| p.entropy_flux_y(w), &u, 1e-5).unwrap();
        let want = p.jac_y(&u).unwrap().transpose() * p.entropy_grad(&u).unwrap();
        assert!((q - want).amax() < 1e-9);
        let e = fd_gradient(|w| p.entropy(w), &u, 1e-5).unwrap();
        assert!((e - p.entropy_grad(&u).unwrap()).amax() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_volume() {
        let p = PSystem::new(1.4).unwrap();
        assert!(p.flux_y(&Vector::from_vec(vec![-1.0, 0.0])).is_err());
    }
}
