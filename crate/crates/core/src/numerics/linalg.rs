use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Real vector of runtime dimension `m <= MAX_DIM`.
pub type Vector = DVector<f64>;
/// Real `m x m` matrix.
pub type Matrix = DMatrix<f64>;

/// Largest system dimension supported by the kernels.
pub const MAX_DIM: usize = 8;

/// Real eigendecomposition of a strictly hyperbolic matrix.
///
/// Eigenvalues are sorted ascending. Right vectors are unit length and left
/// vectors are the rows of the inverse of the right-vector matrix, so that
/// `l^b . r^a = delta_ab` holds to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    pub right: Vec<Vector>,
    pub left: Vec<Vector>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Builds the decomposition from eigenvalues and (not necessarily
    /// normalized) right vectors. Vectors are normalized and left vectors are
    /// recomputed from the inverse.
    pub fn from_right_vectors(values: Vec<f64>, right: Vec<Vector>) -> Result<Self> {
        let m = values.len();
        let right: Vec<Vector> = right
            .into_iter()
            .map(|r| {
                let n = r.norm();
                r / n
            })
            .collect();
        let rmat = Matrix::from_columns(&right);
        let inv = rmat.try_inverse().ok_or(Error::SingularJacobian)?;
        let left = (0..m).map(|b| inv.row(b).transpose()).collect();
        Ok(EigenDecomp {
            values,
            right,
            left,
        })
    }

    /// Flips family `alpha` (right and left vector together).
    pub fn flip(&mut self, alpha: usize) {
        self.right[alpha].neg_mut();
        self.left[alpha].neg_mut();
    }

    /// Orients every right vector to have positive inner product with the
    /// corresponding reference vector.
    pub fn align_with(&mut self, reference: &[Vector]) {
        for (alpha, r_ref) in reference.iter().enumerate() {
            if self.right[alpha].dot(r_ref) < 0.0 {
                self.flip(alpha);
            }
        }
    }

    /// Largest deviation of `L R` from the identity.
    pub fn biorthonormality_defect(&self) -> f64 {
        let m = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((self.left[b].dot(&self.right[a]) - target).abs());
            }
        }
        worst
    }
}

fn largest_component_positive(v: &mut Vector) {
    let mut idx = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.neg_mut();
    }
}

/// Real eigendecomposition of `a`, failing unless the spectrum consists of
/// `m` real eigenvalues separated by more than `gap`.
///
/// Right vectors are oriented so that their largest-magnitude component is
/// positive; owners with a different orientation rule re-orient afterwards.
pub fn eig_real(a: &Matrix, gap: f64) -> Result<EigenDecomp> {
    let m = a.nrows();
    if m != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: a.ncols(),
        });
    }
    if m > MAX_DIM {
        return Err(Error::InvalidConfig(format!("dimension {m} exceeds {MAX_DIM}")));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotStrictlyHyperbolic("non-finite matrix entries".into()));
    }
    let eig = a.complex_eigenvalues();
    let mut values = Vec::with_capacity(m);
    for z in eig.iter() {
        if z.im.abs() > gap {
            return Err(Error::NotStrictlyHyperbolic(format!(
                "complex eigenvalue {} + {}i",
                z.re, z.im
            )));
        }
        values.push(z.re);
    }
    values.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    for w in values.windows(2) {
        if w[1] - w[0] <= gap {
            return Err(Error::NotStrictlyHyperbolic(format!(
                "eigenvalues {} and {} closer than {gap:e}",
                w[0], w[1]
            )));
        }
    }
    let mut right = Vec::with_capacity(m);
    for &lambda in &values {
        let mut r = null_vector(a, lambda)?;
        largest_component_positive(&mut r);
        right.push(r);
    }
    EigenDecomp::from_right_vectors(values, right)
}

/// Unit vector spanning the (numerical) kernel of `a - lambda I`, refined by
/// one step of inverse iteration.
fn null_vector(a: &Matrix, lambda: f64) -> Result<Vector> {
    let m = a.nrows();
    let shifted = a - Matrix::identity(m, m) * lambda;
    let svd = shifted.clone().svd(false, true);
    let v_t = svd.v_t.ok_or(Error::SingularJacobian)?;
    let mut k = 0;
    for i in 1..svd.singular_values.len() {
        if svd.singular_values[i] < svd.singular_values[k] {
            k = i;
        }
    }
    let mut r: Vector = v_t.row(k).transpose();
    // One inverse-iteration sweep with a tiny shift sharpens the vector.
    let scale = a.norm().max(1.0);
    let perturbed = &shifted - Matrix::identity(m, m) * (1e-10 * scale);
    if let Some(lu) = Some(perturbed.lu()) {
        if let Some(x) = lu.solve(&r) {
            let n = x.norm();
            if n.is_finite() && n > 0.0 {
                r = x / n;
            }
        }
    }
    Ok(r)
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    let x = a.clone().lu().solve(b).ok_or(Error::SingularJacobian)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularJacobian)
    }
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    let inv = a.clone().try_inverse().ok_or(Error::SingularJacobian)?;
    if inv.iter().all(|v| v.is_finite()) {
        Ok(inv)
    } else {
        Err(Error::SingularJacobian)
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    v
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

pub fn is_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Serializes a [`Vector`] as a plain JSON array of numbers.
pub mod serde_vector {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Vector;

    pub fn serialize<S: Serializer>(v: &Vector, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(de)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_not_strictly_hyperbolic() {
        let err = eig_real(&Matrix::identity(3, 3), 1e-8).unwrap_err();
        assert_eq!(err.name(), "NotStrictlyHyperbolic");
    }

    #[test]
    fn diagonal_matrix() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = eig_real(&a, 1e-8).unwrap();
        assert_eq!(e.values.len(), 3);
        for (i, want) in [1.0, 2.0, 3.0].iter().enumerate() {
            assert!((e.values[i] - want).abs() < 1e-12);
        }
        // ascending order picks basis vectors e1, e2, e0
        let expected = [1usize, 2, 0];
        for (alpha, &k) in expected.iter().enumerate() {
            assert!((e.right[alpha][k] - 1.0).abs() < 1e-12);
        }
        assert!(e.biorthonormality_defect() < 1e-12);
    }

    #[test]
    fn rotation_has_complex_spectrum() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(eig_real(&a, 1e-8).is_err());
    }

    #[test]
    fn right_vectors_are_eigenvectors() {
        let a = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.5, -1.0, 0.3, 0.0, 0.2, 4.0]);
        let e = eig_real(&a, 1e-8).unwrap();
        for alpha in 0..3 {
            let res = &a * &e.right[alpha] - &e.right[alpha] * e.values[alpha];
            assert!(res.norm() < 1e-12);
            assert!((e.right[alpha].norm() - 1.0).abs() < 1e-12);
        }
    }

    fn random_orthonormalish(seed: [f64; 9]) -> Matrix {
        // a well-conditioned basis: identity plus a bounded perturbation
        let mut p = Matrix::identity(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                p[(i, j)] += 0.4 * seed[3 * i + j];
            }
        }
        p
    }

    proptest! {
        #[test]
        fn recovers_known_spectrum(
            d0 in -3.0f64..-1.0, gap1 in 0.5f64..2.0, gap2 in 0.5f64..2.0,
            seed in proptest::array::uniform9(-1.0f64..1.0)
        ) {
            let p = random_orthonormalish(seed);
            prop_assume!(p.determinant().abs() > 0.2);
            let diag = Matrix::from_diagonal(&Vector::from_vec(vec![d0, d0 + gap1, d0 + gap1 + gap2]));
            let a = &p * diag * p.clone().try_inverse().unwrap();
            let e = eig_real(&a, 1e-8).unwrap();
            prop_assert!((e.values[0] - d0).abs() < 1e-10);
            prop_assert!((e.values[1] - d0 - gap1).abs() < 1e-10);
            prop_assert!((e.values[2] - d0 - gap1 - gap2).abs() < 1e-10);
            prop_assert!(e.biorthonormality_defect() < 1e-10);
            for r in &e.right {
                prop_assert!((r.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
