use crate::error::{Error, Result};

/// Root of a scalar function on a sign-changing bracket `[a, b]`.
///
/// Illinois-modified regula falsi with a bisection safeguard; stops when the
/// bracket is narrower than `xtol` or `g` vanishes exactly.
pub fn bracketed_root<G>(mut g: G, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = g(a)?;
    let mut fb = g(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: fa.abs().min(fb.abs()),
        });
    }
    let mut side = 0i8;
    for it in 0..max_iter {
        if (b - a).abs() <= xtol {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        let lo = a.min(b);
        let hi = a.max(b);
        let width = hi - lo;
        // bisection every few steps keeps the bracket shrinking geometrically
        if !(c > lo && c < hi) || it % 8 == 7 {
            c = 0.5 * (a + b);
        }
        // keep away from the bracket ends so the width strictly shrinks
        let guard = 0.25 * xtol.min(width * 0.5);
        c = c.clamp(lo + guard, hi - guard);
        let fc = g(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    if (b - a).abs() <= xtol * 16.0 {
        Ok(0.5 * (a + b))
    } else {
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: fa.abs().min(fb.abs()),
        })
    }
}
