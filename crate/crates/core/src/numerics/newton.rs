use crate::error::{Error, Result};

use super::linalg::{is_finite, max_abs, solve, Matrix, Vector};

/// Outcome of a converged Newton iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vector,
    pub iterations: usize,
    pub residual: f64,
}

/// Forward-difference Jacobian with step `max(1e-7, 1e-7 |x_j|)` per column.
pub fn forward_jacobian<F>(f: &mut F, x: &Vector, fx: &Vector) -> Result<Matrix>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    let n = x.len();
    let mut jac = Matrix::zeros(fx.len(), n);
    for j in 0..n {
        let h = (1e-7 * x[j].abs()).max(1e-7);
        let mut xp = x.clone();
        xp[j] += h;
        let h = xp[j] - x[j];
        let fp = f(&xp)?;
        for i in 0..fx.len() {
            jac[(i, j)] = (fp[i] - fx[i]) / h;
        }
    }
    Ok(jac)
}

/// Newton iteration with a forward-difference Jacobian.
pub fn newton_solve<F>(mut f: F, x0: &Vector, tol: f64, max_iter: usize) -> Result<NewtonSolution>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    newton_core(&mut f, None::<&mut fn(&Vector) -> Result<Matrix>>, x0, tol, max_iter)
}

/// Newton iteration with an analytic Jacobian.
pub fn newton_solve_with<F, J>(
    mut f: F,
    mut jac: J,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonSolution>
where
    F: FnMut(&Vector) -> Result<Vector>,
    J: FnMut(&Vector) -> Result<Matrix>,
{
    newton_core(&mut f, Some(&mut jac), x0, tol, max_iter)
}

// Damped Newton: a step is accepted when the residual decreases (or already
// meets the tolerance); otherwise it is halved, at most 12 times. Evaluation
// errors of a trial point count as a failed trial.
fn newton_core<F, J>(
    f: &mut F,
    mut jac: Option<&mut J>,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonSolution>
where
    F: FnMut(&Vector) -> Result<Vector>,
    J: FnMut(&Vector) -> Result<Matrix>,
{
    let mut x = x0.clone();
    let mut fx = f(&x)?;
    let mut res = max_abs(&fx);
    if !res.is_finite() {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: res,
        });
    }
    for it in 0..max_iter {
        if res <= tol {
            return Ok(NewtonSolution {
                x,
                iterations: it,
                residual: res,
            });
        }
        let j = match jac.as_mut() {
            Some(jf) => jf(&x)?,
            None => forward_jacobian(f, &x, &fx)?,
        };
        let dx = solve(&j, &(-&fx))?;
        let mut t = 1.0;
        let mut accepted = false;
        let mut last_err = None;
        for _ in 0..=12 {
            let cand = &x + &dx * t;
            match f(&cand) {
                Ok(fc) if is_finite(&fc) => {
                    let rc = max_abs(&fc);
                    if rc < res || rc <= tol {
                        x = cand;
                        fx = fc;
                        res = rc;
                        accepted = true;
                        break;
                    }
                }
                Ok(_) => {}
                Err(e) => last_err = Some(e),
            }
            t *= 0.5;
        }
        if !accepted {
            if let Some(e) = last_err {
                if matches!(e, Error::OutOfBall(_) | Error::NonPhysical(_) | Error::Subsonic(_)) {
                    return Err(e);
                }
            }
            return Err(Error::NoConvergence {
                iterations: it + 1,
                residual: res,
            });
        }
    }
    if res <= tol {
        Ok(NewtonSolution {
            x,
            iterations: max_iter,
            residual: res,
        })
    } else {
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: res,
        })
    }
}
