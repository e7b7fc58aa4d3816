use crate::error::{Error, Result};

use super::linalg::{is_finite, Vector};

/// One classical Runge-Kutta step of length `h` from `(s, y)`.
pub fn rk4_step<F>(rhs: &mut F, s: f64, y: &Vector, h: f64) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let k1 = rhs(s, y)?;
    let k2 = rhs(s + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
    let k3 = rhs(s + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
    let k4 = rhs(s + h, &(y + &k3 * h))?;
    let next = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if is_finite(&next) {
        Ok(next)
    } else {
        Err(Error::StepFailure(s))
    }
}

/// Integrates `y' = rhs(s, y)` over `span` with `n_steps` equal RK4 steps.
///
/// Returns the sampled path, `n_steps + 1` nodes including both ends.
pub fn ode_rk4<F>(mut rhs: F, y0: &Vector, span: (f64, f64), n_steps: usize) -> Result<Vec<(f64, Vector)>>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let n = n_steps.max(1);
    let (a, b) = span;
    let h = (b - a) / n as f64;
    let mut path = Vec::with_capacity(n + 1);
    let mut y = y0.clone();
    path.push((a, y.clone()));
    for k in 0..n {
        let s = a + k as f64 * h;
        y = rk4_step(&mut rhs, s, &y, h)?;
        let s_next = if k + 1 == n { b } else { a + (k + 1) as f64 * h };
        path.push((s_next, y.clone()));
    }
    Ok(path)
}
