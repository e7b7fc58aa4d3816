use crate::error::Result;

use super::linalg::{Matrix, Vector};

fn step(h_rel: f64, xj: f64) -> f64 {
    h_rel * xj.abs().max(1.0)
}

/// Central-difference gradient with step `h_rel * max(1, |x_j|)`.
pub fn fd_gradient<G>(mut g: G, x: &Vector, h_rel: f64) -> Result<Vector>
where
    G: FnMut(&Vector) -> Result<f64>,
{
    let mut grad = Vector::zeros(x.len());
    for j in 0..x.len() {
        let h = step(h_rel, x[j]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        grad[j] = (g(&xp)? - g(&xm)?) / (2.0 * h);
    }
    Ok(grad)
}

/// Central-difference Jacobian of a vector map.
pub fn fd_jacobian<F>(mut f: F, x: &Vector, h_rel: f64) -> Result<Matrix>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    let mut cols = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let h = step(h_rel, x[j]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        cols.push((f(&xp)? - f(&xm)?) / (2.0 * h));
    }
    Ok(Matrix::from_columns(&cols))
}

fn hessian_at_step<G>(g: &mut G, x: &Vector, h_rel: f64) -> Result<Matrix>
where
    G: FnMut(&Vector) -> Result<f64>,
{
    let m = x.len();
    let g0 = g(x)?;
    let hs: Vec<f64> = (0..m).map(|j| step(h_rel, x[j])).collect();
    let mut hess = Matrix::zeros(m, m);
    let shifted = |i: usize, si: f64, j: usize, sj: f64| {
        let mut y = x.clone();
        y[i] += si * hs[i];
        y[j] += sj * hs[j];
        y
    };
    for i in 0..m {
        let gp = g(&shifted(i, 1.0, i, 0.0))?;
        let gm = g(&shifted(i, -1.0, i, 0.0))?;
        hess[(i, i)] = (gp - 2.0 * g0 + gm) / (hs[i] * hs[i]);
        for j in (i + 1)..m {
            let gpp = g(&shifted(i, 1.0, j, 1.0))?;
            let gpm = g(&shifted(i, 1.0, j, -1.0))?;
            let gmp = g(&shifted(i, -1.0, j, 1.0))?;
            let gmm = g(&shifted(i, -1.0, j, -1.0))?;
            let v = (gpp - gpm - gmp + gmm) / (4.0 * hs[i] * hs[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Central-difference Hessian, Richardson extrapolated from steps `h` and `h/2`.
pub fn fd_hessian<G>(mut g: G, x: &Vector, h_rel: f64) -> Result<Matrix>
where
    G: FnMut(&Vector) -> Result<f64>,
{
    let coarse = hessian_at_step(&mut g, x, h_rel)?;
    let fine = hessian_at_step(&mut g, x, 0.5 * h_rel)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Derivative of `g` at `x` along `dir`, central difference with Richardson
/// extrapolation (error O(h^4)).
pub fn directional_derivative<G>(mut g: G, x: &Vector, dir: &Vector, h: f64) -> Result<f64>
where
    G: FnMut(&Vector) -> Result<f64>,
{
    let mut central = |h: f64| -> Result<f64> {
        Ok((g(&(x + dir * h))? - g(&(x - dir * h))?) / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function() {
        let a = Vector::from_vec(vec![1.5, -2.0, 0.25]);
        let x = Vector::from_vec(vec![0.3, 10.0, -4.0]);
        let g = |v: &Vector| Ok(a.dot(v) + 7.0);
        let grad = fd_gradient(g, &x, 1e-5).unwrap();
        assert!((grad - &a).norm() < 1e-8);
        let hess = fd_hessian(g, &x, 1e-3).unwrap();
        assert!(hess.norm() < 1e-8);
    }

    #[test]
    fn ratio_of_momenta_gradient() {
        let x = Vector::from_vec(vec![1.0, 2.0, 1.0]);
        let grad = fd_gradient(|v: &Vector| Ok(v[2] / v[1]), &x, 1e-5).unwrap();
        let want = [0.0, -0.25, 0.5];
        for k in 0..3 {
            assert!((grad[k] - want[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn quadratic_hessian() {
        let x = Vector::from_vec(vec![0.5, -1.0]);
        let g = |v: &Vector| Ok(3.0 * v[0] * v[0] + v[0] * v[1] - 2.0 * v[1] * v[1]);
        let h = fd_hessian(g, &x, 1e-3).unwrap();
        let want = Matrix::from_row_slice(2, 2, &[6.0, 1.0, 1.0, -4.0]);
        assert!((h - want).norm() < 1e-8);
    }

    #[test]
    fn directional_derivative_of_exponential() {
        let x = Vector::from_vec(vec![0.2, 0.1]);
        let d = Vector::from_vec(vec![0.6, 0.8]);
        let v = directional_derivative(|y: &Vector| Ok((y[0] + 2.0 * y[1]).exp()), &x, &d, 1e-3).unwrap();
        let exact = (0.6 + 1.6) * (0.4f64).exp();
        assert!((v - exact).abs() < 1e-11);
    }
}
