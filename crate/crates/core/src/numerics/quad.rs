use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

use super::linalg::{max_abs, Vector};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: Vector,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<G>(g: &mut G, a: f64, b: f64) -> Result<Panel>
where
    G: FnMut(f64) -> Result<Vector>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c)?;
    let mut kron = &fc * WGK[7];
    let mut gauss = &fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = g(c - dx)?;
        let f2 = g(c + dx)?;
        let sum = f1 + f2;
        kron += &sum * WGK[j];
        if j % 2 == 1 {
            gauss += &sum * WG[j / 2];
        }
    }
    kron *= h;
    gauss *= h;
    let error = max_abs(&(&kron - &gauss));
    Ok(Panel {
        a,
        b,
        value: kron,
        error,
    })
}

/// Adaptive vector Gauss-Kronrod (7/15) quadrature of `g` over `[a, b]`
/// with absolute tolerance `tol` and at most 4096 panels.
pub fn quad_adaptive<G>(g: G, a: f64, b: f64, tol: f64) -> Result<Vector>
where
    G: FnMut(f64) -> Result<Vector>,
{
    quad_adaptive_with(g, a, b, tol, &[], 4096)
}

/// Like [`quad_adaptive`], with breakpoint hints (places where `g` may jump
/// or kink) used as initial panel boundaries.
pub fn quad_adaptive_with<G>(
    mut g: G,
    a: f64,
    b: f64,
    tol: f64,
    breaks: &[f64],
    max_panels: usize,
) -> Result<Vector>
where
    G: FnMut(f64) -> Result<Vector>,
{
    if a == b {
        return Ok(g(a)? * 0.0);
    }
    if b < a {
        return Ok(-quad_adaptive_with(g, b, a, tol, breaks, max_panels)?);
    }
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);
    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        heap.push(gauss_kronrod(&mut g, w[0], w[1])?);
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        if total_err <= tol {
            break;
        }
        if heap.len() >= max_panels {
            return Err(Error::ToleranceNotMet {
                estimate: total_err,
                requested: tol,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            return Err(Error::ToleranceNotMet {
                estimate: total_err,
                requested: tol,
            });
        }
        heap.push(gauss_kronrod(&mut g, worst.a, mid)?);
        heap.push(gauss_kronrod(&mut g, mid, worst.b)?);
    }
    // sum in position order for run-to-run bit stability
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut total = panels[0].value.clone() * 0.0;
    for p in &panels {
        total += &p.value;
    }
    Ok(total)
}

/// Scalar convenience wrapper around [`quad_adaptive_with`].
pub fn quad_adaptive_scalar<G>(mut g: G, a: f64, b: f64, tol: f64, breaks: &[f64]) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    let v = quad_adaptive_with(|x| Ok(Vector::from_element(1, g(x)?)), a, b, tol, breaks, 4096)?;
    Ok(v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_integrand() {
        let c = Vector::from_vec(vec![2.5, -1.0, 0.0]);
        let v = quad_adaptive(|_| Ok(c.clone()), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - c).norm() < 1e-14);
    }

    #[test]
    fn linear_integrand() {
        let v = quad_adaptive_scalar(|s| Ok(s), 0.0, 1.0, 1e-10, &[]).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn step_with_hint_is_exact() {
        let g = |x: f64| Ok(if x < 0.3 { 1.0 } else { 3.0 });
        let v = quad_adaptive_scalar(g, 0.0, 1.0, 1e-12, &[0.3]).unwrap();
        assert!((v - (0.3 + 2.1)).abs() < 1e-13);
    }

    #[test]
    fn step_without_hint_converges() {
        let g = |x: f64| Ok(if x < 0.3 { 1.0 } else { 3.0 });
        let v = quad_adaptive_scalar(g, 0.0, 1.0, 1e-10, &[]).unwrap();
        assert!((v - 2.4).abs() < 1e-9);
    }

    #[test]
    fn reversed_interval() {
        let v = quad_adaptive_scalar(|s| Ok(s * s), 1.0, 0.0, 1e-10, &[]).unwrap();
        assert!((v + 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn refinement_limit() {
        let err = quad_adaptive_with(
            |x| Ok(Vector::from_element(1, if x < 0.3 { 0.0 } else { 1.0 })),
            0.0,
            1.0,
            1e-300,
            &[],
            16,
        )
        .unwrap_err();
        assert_eq!(err.name(), "ToleranceNotMet");
    }

    proptest! {
        #[test]
        fn quintic_is_exact(c in proptest::array::uniform6(-5.0f64..5.0), a in -2.0f64..0.0, b in 0.1f64..2.0) {
            let poly = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
            let exact = |x: f64| c.iter().enumerate().map(|(k, ck)| ck * x.powi(k as i32 + 1) / (k as f64 + 1.0)).sum::<f64>();
            let v = quad_adaptive_scalar(|x| Ok(poly(x)), a, b, 1e-12, &[]).unwrap();
            prop_assert!((v - (exact(b) - exact(a))).abs() < 1e-12 * (1.0 + exact(b).abs() + exact(a).abs()));
        }
    }
}
