//! Generic strictly hyperbolic systems in the transformed coordinates
//! `V = f^x(U)`, where the steady self-similar problem reads
//! `(f(V) - xi V)_xi + V = 0` with `f(V) = f^y(U(V))`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::config::{SystemConfig, SystemKind, Tolerances};
use crate::error::{Error, Result};
use crate::numerics::{
    directional_derivative, eig_real, fd_gradient, fd_hessian, fd_jacobian, linalg, newton_solve_with,
    quad_adaptive, EigenDecomp, Matrix, Vector,
};

/// A conservation law `f^x(U)_x + f^y(U)_y = 0` with an entropy pair, in
/// conserved variables. Implementors supply fluxes and the entropy pair;
/// derivatives default to finite differences.
pub trait RawSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    fn flux_x(&self, u: &Vector) -> Result<Vector>;
    fn flux_y(&self, u: &Vector) -> Result<Vector>;
    fn entropy(&self, u: &Vector) -> Result<f64>;
    fn entropy_flux_x(&self, u: &Vector) -> Result<f64>;
    fn entropy_flux_y(&self, u: &Vector) -> Result<f64>;

    fn jac_x(&self, u: &Vector) -> Result<Matrix> {
        fd_jacobian(|w| self.flux_x(w), u, 1e-6)
    }
    fn jac_y(&self, u: &Vector) -> Result<Matrix> {
        fd_jacobian(|w| self.flux_y(w), u, 1e-6)
    }
    fn entropy_grad(&self, u: &Vector) -> Result<Vector> {
        fd_gradient(|w| self.entropy(w), u, 1e-6)
    }
    /// Closed-form `eta_UU`, if available.
    fn entropy_hessian(&self, _u: &Vector) -> Option<Result<Matrix>> {
        None
    }
    /// Closed-form generalized eigenpairs `(f^y_U - lambda f^x_U) r = 0`,
    /// eigenvalues ascending, vectors in conserved variables.
    fn eigen_u(&self, _u: &Vector) -> Option<Result<(Vec<f64>, Vec<Vector>)>> {
        None
    }
    /// Closed-form `grad_U lambda^alpha`, if available.
    fn lambda_gradient(&self, _u: &Vector, _alpha: usize) -> Option<Result<Vector>> {
        None
    }
    /// Inverse of `U -> f^x(U)`, starting from `guess`.
    fn u_from_v(&self, v: &Vector, guess: &Vector) -> Result<Vector> {
        let sol = newton_solve_with(
            |u| Ok(self.flux_x(u)? - v),
            |u| self.jac_x(u),
            guess,
            1e-13 * (1.0 + linalg::max_abs(v)),
            50,
        )?;
        Ok(sol.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    GenuinelyNonlinear,
    LinearlyDegenerate,
}

/// The halfplane a steady self-similar profile lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Halfplane {
    #[serde(rename = "x>0")]
    Right,
    #[serde(rename = "x<0")]
    Left,
}

impl Halfplane {
    /// `+1` for `x > 0`, `-1` for `x < 0`.
    pub fn sign(self) -> f64 {
        match self {
            Halfplane::Right => 1.0,
            Halfplane::Left => -1.0,
        }
    }

    pub fn opposite(self) -> Halfplane {
        match self {
            Halfplane::Right => Halfplane::Left,
            Halfplane::Left => Halfplane::Right,
        }
    }

    pub fn parse(text: &str) -> Result<Halfplane> {
        match text.trim() {
            "x>0" | "+x" | "right" => Ok(Halfplane::Right),
            "x<0" | "-x" | "left" => Ok(Halfplane::Left),
            other => Err(Error::InvalidConfig(format!("unknown halfplane {other:?}"))),
        }
    }
}

impl fmt::Display for Halfplane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Halfplane::Right => "x>0",
            Halfplane::Left => "x<0",
        })
    }
}

/// Whether a sector behaves like a forward or backward 1-d problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// Classification of one characteristic family (0-based index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldInfo {
    pub family: usize,
    pub kind: FieldKind,
    /// Sign of `e_VV r r` over the ball.
    pub admissible_sign: f64,
    pub forward_halfplane: Halfplane,
    /// Sampled range of `lambda_V . r` after orientation.
    pub indicator_min: f64,
    pub indicator_max: f64,
}

impl FieldInfo {
    pub fn is_gnl(&self) -> bool {
        self.kind == FieldKind::GenuinelyNonlinear
    }

    /// Forward or backward behaviour of this family's sector in `halfplane`.
    pub fn direction(&self, halfplane: Halfplane) -> Direction {
        if halfplane == self.forward_halfplane {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }
}

/// A validated system in V-coordinates around the background state.
#[derive(Clone)]
pub struct SystemDef {
    raw: Arc<dyn RawSystem>,
    pub dim: usize,
    pub u_bar: Vector,
    pub v_bar: Vector,
    /// Radius of the ball `P_eps` around `v_bar` (after any halvings).
    pub epsilon: f64,
    pub epsilon_halvings: usize,
    pub tol: Tolerances,
    /// Affine entropy correction: `e_V(v_bar) = 0`.
    entropy_shift: Vector,
    /// Oriented right eigenvectors at the background, used to orient all others.
    reference: Vec<Vector>,
    pub lambda_bar: Vec<f64>,
    pub fields: Vec<FieldInfo>,
    /// Sampled `sup |lambda(V) - lambda_hat(V+, V-)|`.
    pub delta_s: f64,
    /// Calibrated uniform Lax margin.
    pub delta_l: f64,
    pub delta_l_halvings: usize,
    /// Ball samples used for classification and sector widths.
    pub samples: Vec<Vector>,
}

impl fmt::Debug for SystemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDef")
            .field("name", &self.raw.name())
            .field("dim", &self.dim)
            .field("v_bar", &self.v_bar.as_slice())
            .field("epsilon", &self.epsilon)
            .field("lambda_bar", &self.lambda_bar)
            .field("fields", &self.fields)
            .field("delta_s", &self.delta_s)
            .field("delta_l", &self.delta_l)
            .finish()
    }
}

/// `U <-> V` change of variables of a system.
pub struct ChangeOfVariables<'a> {
    sys: &'a SystemDef,
}

impl ChangeOfVariables<'_> {
    pub fn to_v(&self, u: &Vector) -> Result<Vector> {
        self.sys.v_of(u)
    }
    pub fn to_u(&self, v: &Vector) -> Result<Vector> {
        self.sys.u_of(v)
    }
    pub fn flux(&self, v: &Vector) -> Result<Vector> {
        self.sys.flux(v)
    }
}

/// Uniform points in the closed ball of radius `radius` about `center`.
pub fn ball_points(center: &Vector, radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    let m = center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    (0..count)
        .map(|_| {
            let mut dir = Vector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            let n = dir.norm().max(1e-300);
            dir /= n;
            let r = radius * unit.sample(&mut rng).powf(1.0 / m as f64);
            center + dir * r
        })
        .collect()
}

/// The `3^m` lattice `center + (radius / sqrt m) {-1, 0, 1}^m`, inside the ball.
pub fn lattice_points(center: &Vector, radius: f64) -> Vec<Vector> {
    let m = center.len();
    let h = radius / (m as f64).sqrt();
    let total = 3usize.pow(m as u32);
    (0..total)
        .map(|mut k| {
            let mut p = center.clone();
            for i in 0..m {
                p[i] += h * ((k % 3) as f64 - 1.0);
                k /= 3;
            }
            p
        })
        .collect()
}

/// Builds and validates a system around `u_bar`.
///
/// The ball radius is halved (at most `tol.max_epsilon_halvings` times) until
/// every sampled invariant holds.
pub fn make_system(raw: Arc<dyn RawSystem>, u_bar: Vector, epsilon: f64, tol: Tolerances) -> Result<SystemDef> {
    let m = raw.dim();
    if u_bar.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: u_bar.len(),
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let jx = raw.jac_x(&u_bar)?;
    let svd = jx.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(Error::NotInvertible);
    }
    let v_bar = raw.flux_x(&u_bar)?;
    let entropy_shift = -raw.entropy_grad(&u_bar)?;

    let mut sys = SystemDef {
        raw,
        dim: m,
        u_bar: u_bar.clone(),
        v_bar: v_bar.clone(),
        epsilon,
        epsilon_halvings: 0,
        tol: tol.clone(),
        entropy_shift,
        reference: Vec::new(),
        lambda_bar: Vec::new(),
        fields: Vec::new(),
        delta_s: 0.0,
        delta_l: 0.0,
        delta_l_halvings: 0,
        samples: Vec::new(),
    };

    // strict hyperbolicity at the background, by direct eigensolve
    let a_bar = sys.jacobian_at_u(&u_bar)?;
    eig_real(&a_bar, tol.eig_gap)?;
    let mut eig_bar = sys.raw_eigen(&u_bar)?;
    sys.lambda_bar = eig_bar.values.clone();

    // provisional orientation, fixed by the classification below
    sys.reference = eig_bar.right.clone();
    let mut last_err = None;
    for halving in 0..=tol.max_epsilon_halvings {
        sys.epsilon = epsilon / 2f64.powi(halving as i32);
        sys.epsilon_halvings = halving;
        match sys.validate() {
            Ok((fields, flips)) => {
                for (alpha, flip) in flips.iter().enumerate() {
                    if *flip {
                        eig_bar.flip(alpha);
                    }
                }
                sys.reference = eig_bar.right.clone();
                sys.fields = fields;
                last_err = None;
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    if let Some(e) = last_err {
        return Err(e);
    }
    sys.samples = sys.sample_points();
    sys.delta_s = sys.estimate_delta_s()?;
    let (delta_l, halvings) = crate::waves::calibrate_delta_l(&sys)?;
    sys.delta_l = delta_l;
    sys.delta_l_halvings = halvings;
    Ok(sys)
}

/// Builds a system from its JSON configuration record.
pub fn build_system(cfg: &SystemConfig) -> Result<SystemDef> {
    let u_bar = Vector::from_vec(cfg.background.clone());
    match &cfg.system {
        SystemKind::IsentropicEuler { pressure } => {
            let law = crate::euler::pressure_from_config(pressure)?;
            if u_bar.len() != 3 {
                return Err(Error::DimensionMismatch {
                    expected: 3,
                    found: u_bar.len(),
                });
            }
            make_system(
                Arc::new(crate::euler::EulerSystem::new(law)),
                u_bar,
                cfg.epsilon,
                cfg.tolerances.clone(),
            )
        }
        SystemKind::PSystem { gamma } => {
            if u_bar.len() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: u_bar.len(),
                });
            }
            make_system(
                Arc::new(crate::psystem::PSystem::new(*gamma)?),
                u_bar,
                cfg.epsilon,
                cfg.tolerances.clone(),
            )
        }
    }
}

impl SystemDef {
    pub fn raw(&self) -> &dyn RawSystem {
        self.raw.as_ref()
    }

    pub fn name(&self) -> String {
        self.raw.name()
    }

    pub fn change_of_variables(&self) -> ChangeOfVariables<'_> {
        ChangeOfVariables { sys: self }
    }

    pub fn v_of(&self, u: &Vector) -> Result<Vector> {
        self.raw.flux_x(u)
    }

    pub fn u_of(&self, v: &Vector) -> Result<Vector> {
        self.check_dim(v)?;
        self.raw.u_from_v(v, &self.u_bar)
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        if !linalg::is_finite(v) {
            return Err(Error::NonPhysical("non-finite state".into()));
        }
        Ok(())
    }

    /// `|V - v_bar|`.
    pub fn distance(&self, v: &Vector) -> f64 {
        (v - &self.v_bar).norm()
    }

    /// Smallest wave strength that is kept; below it a wave is numerical noise.
    pub fn strength_floor(&self) -> f64 {
        self.tol.min_shock_strength.max(100.0 * self.tol.newton_tol)
    }

    pub fn in_ball(&self, v: &Vector) -> bool {
        self.distance(v) <= self.epsilon * (1.0 + 1e-12)
    }

    /// `f(V) = f^y(U(V))`.
    pub fn flux(&self, v: &Vector) -> Result<Vector> {
        let u = self.u_of(v)?;
        self.raw.flux_y(&u)
    }

    /// `A(V) = f_V = f^y_U (f^x_U)^-1`.
    pub fn jacobian(&self, v: &Vector) -> Result<Matrix> {
        let u = self.u_of(v)?;
        self.jacobian_at_u(&u)
    }

    fn jacobian_at_u(&self, u: &Vector) -> Result<Matrix> {
        let jx = self.raw.jac_x(u)?;
        let jy = self.raw.jac_y(u)?;
        let inv = linalg::inverse(&jx).map_err(|_| Error::NotInvertible)?;
        Ok(jy * inv)
    }

    /// Normalized entropy `e(V) = psi^x(U) + w . V`.
    pub fn entropy(&self, v: &Vector) -> Result<f64> {
        let u = self.u_of(v)?;
        Ok(self.raw.entropy_flux_x(&u)? + self.entropy_shift.dot(v))
    }

    /// Normalized entropy flux `q(V) = psi^y(U) + w . f(V)`.
    pub fn entropy_flux(&self, v: &Vector) -> Result<f64> {
        let u = self.u_of(v)?;
        let fy = self.raw.flux_y(&u)?;
        Ok(self.raw.entropy_flux_y(&u)? + self.entropy_shift.dot(&fy))
    }

    /// `e_V(V) = eta_U(U) + w`.
    pub fn entropy_gradient(&self, v: &Vector) -> Result<Vector> {
        let u = self.u_of(v)?;
        Ok(self.raw.entropy_grad(&u)? + &self.entropy_shift)
    }

    /// `e_VV(V)`: closed form `eta_UU (f^x_U)^-1` when the system supplies
    /// `eta_UU`, otherwise a finite-difference Hessian of `e`.
    pub fn entropy_hessian(&self, v: &Vector) -> Result<Matrix> {
        let u = self.u_of(v)?;
        if let Some(h) = self.raw.entropy_hessian(&u) {
            let jx = self.raw.jac_x(&u)?;
            let inv = linalg::inverse(&jx).map_err(|_| Error::NotInvertible)?;
            let e = h? * inv;
            return Ok((&e + e.transpose()) * 0.5);
        }
        let e = fd_hessian(|w| self.entropy(w), v, self.tol.fd_hessian_step)?;
        Ok((&e + e.transpose()) * 0.5)
    }

    // Eigenpairs in V-coordinates with the default sign convention.
    fn raw_eigen(&self, u: &Vector) -> Result<EigenDecomp> {
        if let Some(res) = self.raw.eigen_u(u) {
            let (values, right_u) = res?;
            let jx = self.raw.jac_x(u)?;
            let right_v: Vec<Vector> = right_u.iter().map(|r| &jx * r).collect();
            for w in values.windows(2) {
                if w[1] - w[0] <= self.tol.eig_gap {
                    return Err(Error::NotStrictlyHyperbolic(format!(
                        "eigenvalues {} and {} too close",
                        w[0], w[1]
                    )));
                }
            }
            return EigenDecomp::from_right_vectors(values, right_v);
        }
        eig_real(&self.jacobian_at_u(u)?, self.tol.eig_gap)
    }

    fn orient(&self, mut e: EigenDecomp) -> EigenDecomp {
        if !self.reference.is_empty() {
            e.align_with(&self.reference);
        }
        e
    }

    /// Oriented eigendecomposition of `A(V)`.
    pub fn eigen(&self, v: &Vector) -> Result<EigenDecomp> {
        let u = self.u_of(v)?;
        Ok(self.orient(self.raw_eigen(&u)?))
    }

    pub fn lambda(&self, v: &Vector, alpha: usize) -> Result<f64> {
        let u = self.u_of(v)?;
        if let Some(res) = self.raw.eigen_u(&u) {
            return Ok(res?.0[alpha]);
        }
        Ok(self.raw_eigen(&u)?.values[alpha])
    }

    /// Oriented unit right eigenvector `r^alpha(V)`.
    pub fn right(&self, v: &Vector, alpha: usize) -> Result<Vector> {
        Ok(self.eigen(v)?.right[alpha].clone())
    }

    /// `lambda^alpha_V . r^alpha` with the oriented unit `r^alpha`.
    pub fn gnl_indicator(&self, v: &Vector, alpha: usize) -> Result<f64> {
        let u = self.u_of(v)?;
        let eig = self.orient(self.raw_eigen(&u)?);
        let r = &eig.right[alpha];
        if let Some(grad) = self.raw.lambda_gradient(&u, alpha) {
            let jx = self.raw.jac_x(&u)?;
            let r_u = linalg::solve(&jx, r)?;
            return Ok(grad?.dot(&r_u));
        }
        directional_derivative(|w| self.lambda(w, alpha), v, r, 1e-3 * self.epsilon.min(1.0))
    }

    /// `e_VV r^alpha r^beta` at `V`.
    pub fn entropy_form(&self, v: &Vector, alpha: usize, beta: usize) -> Result<f64> {
        let eig = self.eigen(v)?;
        let h = self.entropy_hessian(v)?;
        Ok(eig.right[alpha].dot(&(h * &eig.right[beta])))
    }

    /// `e_VV r^alpha r^alpha`, failing when it is too close to zero.
    pub fn entropy_hessian_form(&self, v: &Vector, alpha: usize) -> Result<f64> {
        let value = self.entropy_form(v, alpha, alpha)?;
        if value.abs() < self.tol.degenerate_form_tol {
            return Err(Error::DegenerateForm { family: alpha, value });
        }
        Ok(value)
    }

    /// Averaged Jacobian `int_0^1 A(V- + t (V+ - V-)) dt`.
    pub fn averaged_jacobian(&self, v_plus: &Vector, v_minus: &Vector) -> Result<Matrix> {
        let m = self.dim;
        let dv = v_plus - v_minus;
        let flat = quad_adaptive(
            |t| {
                let a = self.jacobian(&(v_minus + &dv * t))?;
                Ok(Vector::from_column_slice(a.as_slice()))
            },
            0.0,
            1.0,
            self.tol.quad_tol,
        )?;
        let mut a = Matrix::from_column_slice(m, m, flat.as_slice());
        // the exact average is symmetric in its arguments; remove the odd part
        // of the quadrature rounding by averaging with the reversed integral
        if dv.norm() > 0.0 {
            let rev = quad_adaptive(
                |t| {
                    let a = self.jacobian(&(v_plus - &dv * t))?;
                    Ok(Vector::from_column_slice(a.as_slice()))
                },
                0.0,
                1.0,
                self.tol.quad_tol,
            )?;
            a = (a + Matrix::from_column_slice(m, m, rev.as_slice())) * 0.5;
        }
        Ok(a)
    }

    /// `A_hat w` for the segment `V- -> V- + s w`, by 8-point Gauss-Legendre.
    ///
    /// Used inside shock-curve iterations where the segment is short and the
    /// integrand analytic.
    pub fn averaged_jacobian_apply(&self, v_minus: &Vector, dv: &Vector, w: &Vector) -> Result<Vector> {
        let mut acc = Vector::zeros(self.dim);
        for (x, wt) in GAUSS_LEGENDRE_16.iter() {
            for t in [0.5 * (1.0 - x), 0.5 * (1.0 + x)] {
                let a = self.jacobian(&(v_minus + dv * t))?;
                acc += (a * w) * (0.5 * wt);
            }
        }
        Ok(acc)
    }

    /// Oriented eigendecomposition of the averaged Jacobian.
    pub fn hat_eigen(&self, v_plus: &Vector, v_minus: &Vector) -> Result<EigenDecomp> {
        let a = self.averaged_jacobian(v_plus, v_minus)?;
        Ok(self.orient(eig_real(&a, self.tol.eig_gap)?))
    }

    pub fn field(&self, alpha: usize) -> &FieldInfo {
        &self.fields[alpha]
    }

    /// Per-family classification (computed at construction).
    pub fn classify_fields(&self) -> Vec<FieldInfo> {
        self.fields.clone()
    }

    /// Rankine-Hugoniot residual `|f(V+) - f(V-) - xi (V+ - V-)|_inf`.
    pub fn rh_residual(&self, v_minus: &Vector, v_plus: &Vector, xi: f64) -> Result<f64> {
        let r = self.flux(v_plus)? - self.flux(v_minus)? - (v_plus - v_minus) * xi;
        Ok(linalg::max_abs(&r))
    }

    // Checks the sampled invariants on the current ball and classifies the
    // fields. Returns the field records and which families need a flip.
    fn validate(&self) -> Result<(Vec<FieldInfo>, Vec<bool>)> {
        let m = self.dim;
        let mut pts = lattice_points(&self.v_bar, self.epsilon);
        pts.extend(ball_points(&self.v_bar, self.epsilon, self.tol.ball_samples, self.tol.seed));
        let mut ind_min = vec![f64::INFINITY; m];
        let mut ind_max = vec![f64::NEG_INFINITY; m];
        let mut form_sign = vec![0.0f64; m];
        for (k, v) in pts.iter().enumerate() {
            let u = self.u_of(v)?;
            let back = self.v_of(&u)?;
            if (&back - v).norm() > 1e-10 * (1.0 + v.norm()) {
                return Err(Error::NonPhysical("change of variables failed to round-trip".into()));
            }
            let eig = self.eigen(v)?;
            // entropy compatibility q_V = e_V A
            let q_v = fd_gradient(|w| self.entropy_flux(w), v, self.tol.fd_step)?;
            let e_v = self.entropy_gradient(v)?;
            let a = self.jacobian(v)?;
            let mismatch = linalg::max_abs(&(q_v - a.transpose() * e_v));
            if mismatch > self.tol.entropy_pair_tol {
                return Err(Error::EntropyPairMismatch(mismatch));
            }
            let h = self.entropy_hessian(v)?;
            for alpha in 0..m {
                let g = self.gnl_indicator(v, alpha)?;
                ind_min[alpha] = ind_min[alpha].min(g);
                ind_max[alpha] = ind_max[alpha].max(g);
                let form = eig.right[alpha].dot(&(&h * &eig.right[alpha]));
                if form.abs() < self.tol.degenerate_form_tol {
                    return Err(Error::DegenerateForm { family: alpha, value: form });
                }
                if k == 0 {
                    form_sign[alpha] = form.signum();
                } else if form.signum() != form_sign[alpha] {
                    return Err(Error::DegenerateForm { family: alpha, value: form });
                }
            }
        }
        let mut fields = Vec::with_capacity(m);
        let mut flips = vec![false; m];
        let h_bar = self.entropy_hessian(&self.v_bar)?;
        let eig_bar = self.eigen(&self.v_bar)?;
        for alpha in 0..m {
            let ld = self.tol.ld_tol;
            let (kind, lo, hi) = if ind_min[alpha] > ld {
                (FieldKind::GenuinelyNonlinear, ind_min[alpha], ind_max[alpha])
            } else if ind_max[alpha] < -ld {
                flips[alpha] = true;
                (FieldKind::GenuinelyNonlinear, -ind_max[alpha], -ind_min[alpha])
            } else if ind_min[alpha] >= -ld && ind_max[alpha] <= ld {
                (FieldKind::LinearlyDegenerate, ind_min[alpha], ind_max[alpha])
            } else {
                return Err(Error::MixedNonlinearity {
                    family: alpha,
                    min: ind_min[alpha],
                    max: ind_max[alpha],
                });
            };
            let r = &eig_bar.right[alpha];
            let sign = r.dot(&(&h_bar * r)).signum();
            fields.push(FieldInfo {
                family: alpha,
                kind,
                admissible_sign: sign,
                forward_halfplane: if sign > 0.0 { Halfplane::Right } else { Halfplane::Left },
                indicator_min: lo,
                indicator_max: hi,
            });
        }
        Ok((fields, flips))
    }

    /// Sampled `sup |lambda^alpha(V) - lambda_hat^alpha(V+, V-)|` over triples.
    fn estimate_delta_s(&self) -> Result<f64> {
        let n = self.tol.spectral_triples;
        let seed = self.tol.seed ^ 0xd5;
        let a = ball_points(&self.v_bar, self.epsilon, n, seed);
        let b = ball_points(&self.v_bar, self.epsilon, n, seed.wrapping_add(1));
        let c = ball_points(&self.v_bar, self.epsilon, n, seed.wrapping_add(2));
        let mut sup: f64 = 0.0;
        for k in 0..n {
            let lam = self.eigen(&a[k])?.values;
            let hat = self.hat_eigen(&b[k], &c[k])?.values;
            for alpha in 0..self.dim {
                sup = sup.max((lam[alpha] - hat[alpha]).abs());
            }
        }
        Ok(sup)
    }

    /// Ball samples used for classification (lattice plus random points).
    pub fn sample_points(&self) -> Vec<Vector> {
        let mut pts = lattice_points(&self.v_bar, self.epsilon);
        pts.extend(ball_points(&self.v_bar, self.epsilon, self.tol.ball_samples, self.tol.seed));
        pts
    }
}

// Gauss-Legendre nodes (positive half) and weights, 16 points total.
pub(crate) const GAUSS_LEGENDRE_16: [(f64, f64); 8] = [
    (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
    (0.281_603_550_779_258_9, 0.182_603_415_044_923_6),
    (0.458_016_777_657_227_4, 0.169_156_519_395_002_5),
    (0.617_876_244_402_643_8, 0.149_595_988_816_576_7),
    (0.755_404_408_355_003, 0.124_628_971_255_533_9),
    (0.865_631_202_387_831_8, 0.095_158_511_682_492_78),
    (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
    (0.989_400_934_991_649_9, 0.027_152_459_411_754_09),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;

    fn euler() -> SystemDef {
        build_system(&SystemConfig::euler(1.4, [1.0, 2.0, 0.0], 0.05)).unwrap()
    }

    fn psys() -> SystemDef {
        build_system(&SystemConfig::p_system(1.4, [1.0, 0.0], 0.05)).unwrap()
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        let s: f64 = GAUSS_LEGENDRE_16.iter().map(|(_, w)| 2.0 * w).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn euler_background_system() {
        let sys = euler();
        assert_eq!(sys.dim, 3);
        assert_eq!(sys.epsilon_halvings, 0);
        let kinds: Vec<FieldKind> = sys.fields.iter().map(|f| f.kind).collect();
        assert_eq!(
            kinds,
            vec![
                FieldKind::GenuinelyNonlinear,
                FieldKind::LinearlyDegenerate,
                FieldKind::GenuinelyNonlinear
            ]
        );
        assert!(sys.fields.iter().all(|f| f.forward_halfplane == Halfplane::Right));
        assert!(sys.delta_l > 0.0 && sys.delta_s > 0.0);
    }

    #[test]
    fn subsonic_background_is_rejected() {
        let err = build_system(&SystemConfig::euler(1.4, [1.0, 0.5, 0.0], 0.05)).unwrap_err();
        assert_eq!(err.name(), "NotStrictlyHyperbolic");
    }

    #[test]
    fn p_system_fixture() {
        let sys = psys();
        assert_eq!(sys.dim, 2);
        assert!(sys.fields.iter().all(|f| f.is_gnl()));
        let e = sys.hat_eigen(&(&sys.v_bar + Vector::from_vec(vec![0.01, 0.02])), &sys.v_bar).unwrap();
        assert!(e.values[1] - e.values[0] > 0.1);
    }

    #[test]
    fn entropy_normalized_at_background() {
        for sys in [euler(), psys()] {
            let g = sys.entropy_gradient(&sys.v_bar).unwrap();
            assert!(g.norm() < 1e-12, "{g}");
        }
    }

    #[test]
    fn round_trip_change_of_variables() {
        let sys = euler();
        let cov = sys.change_of_variables();
        for v in ball_points(&sys.v_bar, sys.epsilon, 256, 7) {
            let u = cov.to_u(&v).unwrap();
            let back = cov.to_v(&u).unwrap();
            assert!((back - &v).norm() <= 1e-10);
            let u2 = cov.to_u(&cov.to_v(&u).unwrap()).unwrap();
            assert!((u2 - u).norm() <= 1e-10);
        }
    }

    #[test]
    fn entropy_pair_compatibility() {
        for sys in [euler(), psys()] {
            for v in sys.sample_points() {
                let q_v = fd_gradient(|w| sys.entropy_flux(w), &v, 1e-5).unwrap();
                let rhs = sys.jacobian(&v).unwrap().transpose() * sys.entropy_gradient(&v).unwrap();
                assert!(linalg::max_abs(&(q_v - rhs)) <= 1e-8);
            }
        }
    }

    #[test]
    fn averaged_jacobian_properties() {
        let sys = euler();
        let v = &sys.v_bar + Vector::from_vec(vec![0.01, -0.02, 0.015]);
        let a = sys.averaged_jacobian(&v, &v).unwrap();
        assert!((a - sys.jacobian(&v).unwrap()).amax() <= 1e-10);
        let w = &sys.v_bar - Vector::from_vec(vec![0.02, 0.01, -0.01]);
        let ab = sys.averaged_jacobian(&v, &w).unwrap();
        let ba = sys.averaged_jacobian(&w, &v).unwrap();
        assert!((&ab - &ba).amax() <= 1e-10);
        // hat eigenvalue between the endpoint eigenvalues
        let h = sys.hat_eigen(&v, &w).unwrap();
        let lv = sys.eigen(&v).unwrap().values;
        let lw = sys.eigen(&w).unwrap().values;
        for alpha in 0..3 {
            let lo = lv[alpha].min(lw[alpha]) - 1e-8;
            let hi = lv[alpha].max(lw[alpha]) + 1e-8;
            assert!(h.values[alpha] >= lo && h.values[alpha] <= hi);
        }
        // the Gauss-Legendre application agrees with the adaptive average
        let dir = Vector::from_vec(vec![0.3, -0.2, 0.9]);
        let applied = sys.averaged_jacobian_apply(&w, &(&v - &w), &dir).unwrap();
        assert!((applied - ab * dir).amax() <= 1e-12);
    }

    #[test]
    fn hat_eigen_collapses_at_background() {
        let sys = euler();
        let h = sys.hat_eigen(&sys.v_bar, &sys.v_bar).unwrap();
        for alpha in 0..3 {
            assert!((h.values[alpha] - sys.lambda_bar[alpha]).abs() < 1e-10);
        }
        assert!(h.biorthonormality_defect() < 1e-10);
    }

    #[test]
    fn entropy_hessian_positive_definite_for_supersonic_background() {
        let sys = euler();
        let h = sys.entropy_hessian(&sys.v_bar).unwrap();
        let ev = linalg::symmetric_eigenvalues(&h);
        assert!(ev[0] > 0.0, "{ev:?}");
        for alpha in 0..3 {
            assert!(sys.entropy_hessian_form(&sys.v_bar, alpha).unwrap() > 0.0);
            for beta in 0..3 {
                if alpha != beta {
                    assert!(sys.entropy_form(&sys.v_bar, alpha, beta).unwrap().abs() <= 1e-8);
                }
            }
        }
        for v in ball_points(&sys.v_bar, sys.epsilon, 64, 11) {
            for alpha in 0..3 {
                assert!(sys.entropy_hessian_form(&v, alpha).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn finite_difference_hessian_matches_closed_form() {
        let sys = euler();
        let v = &sys.v_bar + Vector::from_vec(vec![0.01, 0.005, -0.02]);
        let closed = sys.entropy_hessian(&v).unwrap();
        let fd = fd_hessian(|w| sys.entropy(w), &v, 1e-3).unwrap();
        assert!((closed - fd).amax() < 1e-6);
    }

    #[test]
    fn p_system_hessian_by_finite_differences() {
        let sys = psys();
        for alpha in 0..2 {
            assert!(sys.entropy_hessian_form(&sys.v_bar, alpha).unwrap().abs() > 1e-6);
        }
        let cross = sys.entropy_form(&sys.v_bar, 0, 1).unwrap();
        assert!(cross.abs() < 1e-6, "{cross}");
    }

    #[test]
    fn lattice_is_inside_ball() {
        let c = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let pts = lattice_points(&c, 0.1);
        assert_eq!(pts.len(), 27);
        assert!(pts.iter().all(|p| (p - &c).norm() <= 0.1 + 1e-15));
        let rnd = ball_points(&c, 0.1, 100, 3);
        assert!(rnd.iter().all(|p| (p - &c).norm() <= 0.1 + 1e-15));
        assert_eq!(rnd, ball_points(&c, 0.1, 100, 3));
    }
}
