//! Elementary waves: simple-wave curves, wave fans, shock curves, contacts,
//! entropy dissipation and the uniform Lax conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{self, serde_vector};
use crate::numerics::{bracketed_root, newton_solve, rk4_step, Matrix, Vector};
use crate::system::{Direction, SystemDef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveKind {
    Shock,
    SimpleWave,
    Contact,
}

impl std::fmt::Display for WaveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WaveKind::Shock => "shock",
            WaveKind::SimpleWave => "simple_wave",
            WaveKind::Contact => "contact",
        })
    }
}

/// One elementary wave of family `family` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub family: usize,
    pub kind: WaveKind,
    #[serde(with = "serde_vector")]
    pub v_minus: Vector,
    #[serde(with = "serde_vector")]
    pub v_plus: Vector,
    pub strength: f64,
    /// `[xi, xi]` for jumps, `[lambda(V-), lambda(V+)]` for simple waves.
    pub speed: [f64; 2],
}

impl Wave {
    pub fn jump_size(&self) -> f64 {
        (&self.v_plus - &self.v_minus).norm()
    }

    pub fn is_jump(&self) -> bool {
        self.kind != WaveKind::SimpleWave
    }

    /// Rankine-Hugoniot residual of a jump.
    pub fn rh_residual(&self, sys: &SystemDef) -> Result<f64> {
        sys.rh_residual(&self.v_minus, &self.v_plus, self.speed[0])
    }
}

/// One point of a shock curve: `V+ = V- + s w` with `|w| = 1` and speed `xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockPoint {
    pub s: f64,
    pub v_plus: Vector,
    pub xi: f64,
    /// Unit direction `w = r_hat(V+, V-)`.
    pub direction: Vector,
}

/// Outcome of a uniform Lax check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaxReport {
    pub satisfied: bool,
    /// Smallest slack of the two inequalities (negative when violated).
    pub margin: f64,
    pub direction: Direction,
    pub jump_size: f64,
}

fn require_ball(sys: &SystemDef, v: &Vector, what: &str) -> Result<()> {
    if sys.in_ball(v) {
        Ok(())
    } else {
        Err(Error::OutOfBall(format!(
            "{what} at distance {:e} from the background (epsilon {:e})",
            sys.distance(v),
            sys.epsilon
        )))
    }
}

fn rk4_steps(sys: &SystemDef, s: f64) -> usize {
    ((sys.tol.rk4_steps_per_epsilon * s.abs() / sys.epsilon).ceil() as usize).max(1)
}

/// Nodes `(tau, V)` of the integral curve `dV/dtau = r^alpha(V)` from `V-`
/// to parameter `s`.
pub fn simple_wave_path(sys: &SystemDef, v_minus: &Vector, alpha: usize, s: f64) -> Result<Vec<(f64, Vector)>> {
    require_ball(sys, v_minus, "simple-wave start")?;
    let n = rk4_steps(sys, s);
    let h = s / n as f64;
    let mut rhs = |_: f64, v: &Vector| sys.right(v, alpha);
    let mut path = Vec::with_capacity(n + 1);
    let mut v = v_minus.clone();
    path.push((0.0, v.clone()));
    for k in 0..n {
        let tau = k as f64 * h;
        v = match rk4_step(&mut rhs, tau, &v, h) {
            Ok(next) => next,
            Err(Error::OutOfBall(_)) | Err(Error::Subsonic(_)) | Err(Error::NonPhysical(_)) => {
                return Err(Error::LeftBall(tau))
            }
            Err(e) => return Err(e),
        };
        let tau_next = if k + 1 == n { s } else { (k + 1) as f64 * h };
        if !sys.in_ball(&v) {
            return Err(Error::LeftBall(tau_next));
        }
        path.push((tau_next, v.clone()));
    }
    Ok(path)
}

/// `R^alpha(V-, s)`.
pub fn simple_wave_curve(sys: &SystemDef, v_minus: &Vector, alpha: usize, s: f64) -> Result<Vector> {
    if s == 0.0 {
        require_ball(sys, v_minus, "simple-wave start")?;
        return Ok(v_minus.clone());
    }
    Ok(simple_wave_path(sys, v_minus, alpha, s)?.pop().expect("non-empty path").1)
}

#[derive(Debug, Clone, PartialEq)]
struct FanNode {
    s: f64,
    v: Vector,
    lambda: f64,
}

/// A centred wave fan `W(xi) = R^alpha(V-, s(xi))` with `lambda^alpha(W(xi)) = xi`.
///
/// The RK4 nodes are kept; evaluation inverts `s -> lambda` on one RK4 step.
#[derive(Debug, Clone, PartialEq)]
pub struct FanCurve {
    pub family: usize,
    pub v_start: Vector,
    pub strength: f64,
    nodes: Vec<FanNode>,
}

/// Builds the fan of family `alpha` and strength `s >= 0` starting at `V-`.
pub fn wave_fan(sys: &SystemDef, v_minus: &Vector, alpha: usize, s: f64) -> Result<FanCurve> {
    if !sys.field(alpha).is_gnl() {
        return Err(Error::NotGnl(alpha));
    }
    if s < 0.0 {
        return Err(Error::InadmissibleStrength(format!(
            "fan strength {s} must be non-negative"
        )));
    }
    let path = if s == 0.0 {
        require_ball(sys, v_minus, "fan start")?;
        vec![(0.0, v_minus.clone())]
    } else {
        simple_wave_path(sys, v_minus, alpha, s)?
    };
    let mut nodes = Vec::with_capacity(path.len());
    for (tau, v) in path {
        let lambda = sys.lambda(&v, alpha)?;
        if let Some(prev) = nodes.last() {
            let prev: &FanNode = prev;
            if !(lambda > prev.lambda) {
                return Err(Error::NotGnl(alpha));
            }
        }
        nodes.push(FanNode { s: tau, v, lambda });
    }
    Ok(FanCurve {
        family: alpha,
        v_start: v_minus.clone(),
        strength: s,
        nodes,
    })
}

impl FanCurve {
    pub fn xi_start(&self) -> f64 {
        self.nodes[0].lambda
    }

    pub fn xi_end(&self) -> f64 {
        self.nodes.last().expect("non-empty fan").lambda
    }

    pub fn v_end(&self) -> &Vector {
        &self.nodes.last().expect("non-empty fan").v
    }

    /// Sampled `(s, V, lambda)` nodes.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, &Vector, f64)> {
        self.nodes.iter().map(|n| (n.s, &n.v, n.lambda))
    }

    /// Curve parameter `s` at which `lambda = xi` (clamped to the fan).
    pub fn s_at(&self, sys: &SystemDef, xi: f64) -> Result<f64> {
        Ok(self.locate(sys, xi)?.0)
    }

    /// `W(xi)`, clamped to the end states outside the fan.
    pub fn eval(&self, sys: &SystemDef, xi: f64) -> Result<Vector> {
        Ok(self.locate(sys, xi)?.1)
    }

    /// `R^alpha(V-, s)` for `s` inside the fan, by one RK4 step from the
    /// nearest node below `s`.
    pub fn eval_s(&self, sys: &SystemDef, s: f64) -> Result<Vector> {
        let first = &self.nodes[0];
        let last = self.nodes.last().expect("non-empty fan");
        if s <= first.s {
            return Ok(first.v.clone());
        }
        if s >= last.s {
            return Ok(last.v.clone());
        }
        let k = self.nodes.partition_point(|n| n.s <= s) - 1;
        let node = &self.nodes[k];
        if node.s == s {
            return Ok(node.v.clone());
        }
        let alpha = self.family;
        let mut rhs = |_: f64, v: &Vector| sys.right(v, alpha);
        rk4_step(&mut rhs, node.s, &node.v, s - node.s)
    }

    fn locate(&self, sys: &SystemDef, xi: f64) -> Result<(f64, Vector)> {
        let first = &self.nodes[0];
        let last = self.nodes.last().expect("non-empty fan");
        if xi <= first.lambda {
            return Ok((first.s, first.v.clone()));
        }
        if xi >= last.lambda {
            return Ok((last.s, last.v.clone()));
        }
        let k = self.nodes.partition_point(|n| n.lambda <= xi) - 1;
        let node = &self.nodes[k];
        if node.lambda == xi {
            return Ok((node.s, node.v.clone()));
        }
        let h = self.nodes[k + 1].s - node.s;
        let alpha = self.family;
        let mut rhs = |_: f64, v: &Vector| sys.right(v, alpha);
        let mut step = |d: f64| rk4_step(&mut rhs, node.s, &node.v, d);
        let delta = {
            let mut g = |d: f64| -> Result<f64> {
                if d == 0.0 {
                    return Ok(node.lambda - xi);
                }
                Ok(sys.lambda(&step(d)?, alpha)? - xi)
            };
            bracketed_root(&mut g, 0.0, h, 0.1 * sys.tol.fan_inversion_tol, 200)?
        };
        Ok((node.s + delta, step(delta)?))
    }

    pub fn to_wave(&self) -> Wave {
        Wave {
            family: self.family,
            kind: WaveKind::SimpleWave,
            v_minus: self.v_start.clone(),
            v_plus: self.v_end().clone(),
            strength: self.strength,
            speed: [self.xi_start(), self.xi_end()],
        }
    }
}

// A_hat(V- + dv, V-) by 16-point Gauss-Legendre on the segment.
fn averaged_jacobian_gl(sys: &SystemDef, v_minus: &Vector, dv: &Vector) -> Result<Matrix> {
    let m = sys.dim;
    let mut acc = Matrix::zeros(m, m);
    for (x, wt) in crate::system::GAUSS_LEGENDRE_16.iter() {
        for t in [0.5 * (1.0 - x), 0.5 * (1.0 + x)] {
            acc += sys.jacobian(&(v_minus + dv * t))? * (0.5 * wt);
        }
    }
    Ok(acc)
}

fn shock_residual(sys: &SystemDef, v_minus: &Vector, s: f64, x: &Vector) -> Result<(Vector, Matrix)> {
    let m = sys.dim;
    let w = x.rows(0, m).into_owned();
    let xi = x[m];
    let a_hat = averaged_jacobian_gl(sys, v_minus, &(&w * s))?;
    let top = &a_hat * &w - &w * xi;
    let mut res = Vector::zeros(m + 1);
    res.rows_mut(0, m).copy_from(&top);
    res[m] = 0.5 * (w.dot(&w) - 1.0);
    Ok((res, a_hat))
}

fn quasi_newton_step(x: &Vector, res: &Vector, a_hat: Matrix) -> Option<Vector> {
    let m = x.len() - 1;
    let mut jac = Matrix::zeros(m + 1, m + 1);
    jac.view_mut((0, 0), (m, m)).copy_from(&(a_hat - Matrix::identity(m, m) * x[m]));
    for i in 0..m {
        jac[(i, m)] = -x[i];
        jac[(m, i)] = x[i];
    }
    linalg::solve(&jac, &(-res)).ok()
}

// One more sweep past the tolerance, kept only if it does not increase the
// residual. For weak shocks the sweep contracts by O(s), so this takes the
// speed to round-off and keeps nearby weak shocks ordered.
fn shock_polish(sys: &SystemDef, v_minus: &Vector, s: f64, x: Vector) -> Vector {
    let Ok((res, a_hat)) = shock_residual(sys, v_minus, s, &x) else {
        return x;
    };
    let Some(dx) = quasi_newton_step(&x, &res, a_hat) else {
        return x;
    };
    let y = &x + dx;
    match shock_residual(sys, v_minus, s, &y) {
        Ok((r2, _)) if linalg::max_abs(&r2) <= linalg::max_abs(&res) => y,
        _ => x,
    }
}

// Solves the shock system at fixed s from the guess x = (w, xi). The
// iteration matrix drops the O(s) derivative of A_hat with respect to w,
// which keeps each sweep to a single averaged-Jacobian evaluation; a full
// finite-difference Newton solve is the fallback.
fn shock_correct(sys: &SystemDef, v_minus: &Vector, s: f64, guess: &Vector) -> Result<Vector> {
    let tol = sys.tol.newton_tol;
    let mut x = guess.clone();
    let mut ok = false;
    for _ in 0..sys.tol.newton_max_iter {
        let (res, a_hat) = match shock_residual(sys, v_minus, s, &x) {
            Ok(r) => r,
            Err(_) => break,
        };
        if linalg::max_abs(&res) <= tol {
            ok = true;
            break;
        }
        match quasi_newton_step(&x, &res, a_hat) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    if ok {
        return Ok(x);
    }
    let sol = newton_solve(
        |y: &Vector| Ok(shock_residual(sys, v_minus, s, y)?.0),
        guess,
        tol,
        sys.tol.newton_max_iter,
    )?;
    Ok(sol.x)
}

/// Continuation nodes of the shock curve `S^alpha(V-, .)` from 0 to `s`
/// with steps of `shock_step_fraction * epsilon`.
pub fn shock_curve_path(sys: &SystemDef, v_minus: &Vector, alpha: usize, s: f64) -> Result<Vec<ShockPoint>> {
    require_ball(sys, v_minus, "shock-curve start")?;
    let m = sys.dim;
    let eig = sys.eigen(v_minus)?;
    let r0 = eig.right[alpha].clone();
    let lam0 = eig.values[alpha];
    let mut pts = vec![ShockPoint {
        s: 0.0,
        v_plus: v_minus.clone(),
        xi: lam0,
        direction: r0.clone(),
    }];
    if s == 0.0 {
        return Ok(pts);
    }
    let ds = sys.epsilon * sys.tol.shock_step_fraction;
    let n = ((s.abs() / ds).ceil() as usize).max(1);
    let pack = |w: &Vector, xi: f64| {
        let mut x = Vector::zeros(m + 1);
        x.rows_mut(0, m).copy_from(w);
        x[m] = xi;
        x
    };
    let mut prev = pack(&r0, lam0);
    let mut prev2: Option<Vector> = None;
    for k in 1..=n {
        let sk = if k == n { s } else { s * k as f64 / n as f64 };
        let guess = match &prev2 {
            Some(p2) => &prev * 2.0 - p2,
            None => prev.clone(),
        };
        let x = match shock_correct(sys, v_minus, sk, &guess) {
            Ok(x) => x,
            Err(Error::OutOfBall(_)) | Err(Error::Subsonic(_)) | Err(Error::NonPhysical(_)) => {
                return Err(Error::LeftBall(sk))
            }
            Err(e) => return Err(e),
        };
        let x = if k == n { shock_polish(sys, v_minus, sk, x) } else { x };
        let w = x.rows(0, m).into_owned();
        let v_plus = v_minus + &w * sk;
        if !sys.in_ball(&v_plus) {
            return Err(Error::LeftBall(sk));
        }
        pts.push(ShockPoint {
            s: sk,
            v_plus,
            xi: x[m],
            direction: w,
        });
        prev2 = Some(prev);
        prev = x;
    }
    let last = pts.last().expect("non-empty");
    let rh = sys.rh_residual(v_minus, &last.v_plus, last.xi)?;
    if rh > sys.tol.rh_tol {
        return Err(Error::NoConvergence {
            iterations: n,
            residual: rh,
        });
    }
    Ok(pts)
}

/// `S^alpha(V-, s)`: the state `V+` and speed `xi` of the shock of strength `s`.
pub fn shock_curve(sys: &SystemDef, v_minus: &Vector, alpha: usize, s: f64) -> Result<(Vector, f64)> {
    let p = shock_curve_path(sys, v_minus, alpha, s)?.pop().expect("non-empty");
    Ok((p.v_plus, p.xi))
}

/// Shock wave record of strength `s` (no admissibility check).
pub fn shock_wave(sys: &SystemDef, v_minus: &Vector, alpha: usize, s: f64) -> Result<Wave> {
    let (v_plus, xi) = shock_curve(sys, v_minus, alpha, s)?;
    Ok(Wave {
        family: alpha,
        kind: WaveKind::Shock,
        v_minus: v_minus.clone(),
        v_plus,
        strength: s,
        speed: [xi, xi],
    })
}

/// Contact discontinuity of a linearly degenerate family.
pub fn contact_wave(sys: &SystemDef, v_minus: &Vector, alpha: usize, s: f64) -> Result<Wave> {
    if sys.field(alpha).is_gnl() {
        return Err(Error::NotLd(alpha));
    }
    let v_plus = simple_wave_curve(sys, v_minus, alpha, s)?;
    let xi = sys.lambda(v_minus, alpha)?;
    let rh = sys.rh_residual(v_minus, &v_plus, xi)?;
    if rh > sys.tol.rh_tol {
        return Err(Error::NotAJump(rh));
    }
    Ok(Wave {
        family: alpha,
        kind: WaveKind::Contact,
        v_minus: v_minus.clone(),
        v_plus,
        strength: s,
        speed: [xi, xi],
    })
}

/// The admissible wave of family `alpha` and strength `s` in a forward
/// sector: shocks for `s < 0`, fans for `s > 0`, contacts for LD families.
pub fn forward_wave(sys: &SystemDef, v_minus: &Vector, alpha: usize, s: f64) -> Result<Wave> {
    if !sys.field(alpha).is_gnl() {
        return contact_wave(sys, v_minus, alpha, s);
    }
    if s < 0.0 {
        shock_wave(sys, v_minus, alpha, s)
    } else {
        Ok(wave_fan(sys, v_minus, alpha, s)?.to_wave())
    }
}

/// Entropy dissipation `E = [q] - xi [e]` of a jump.
pub fn entropy_dissipation(sys: &SystemDef, v_minus: &Vector, v_plus: &Vector, xi: f64) -> Result<f64> {
    let rh = sys.rh_residual(v_minus, v_plus, xi)?;
    if rh > sys.tol.not_a_jump_tol {
        return Err(Error::NotAJump(rh));
    }
    Ok(sys.entropy_flux(v_plus)? - sys.entropy_flux(v_minus)? - xi * (sys.entropy(v_plus)? - sys.entropy(v_minus)?))
}

/// Uniform Lax condition with margin `delta_l |[V]|`.
///
/// Forward: `lambda(V-) - delta |[V]| >= xi >= lambda(V+) + delta |[V]|`;
/// backward has both inequalities reversed.
pub fn lax_check(sys: &SystemDef, wave: &Wave, direction: Direction, delta_l: f64) -> Result<LaxReport> {
    let alpha = wave.family;
    let xi = wave.speed[0];
    let jump = wave.jump_size();
    let lm = sys.lambda(&wave.v_minus, alpha)?;
    let lp = sys.lambda(&wave.v_plus, alpha)?;
    let d = delta_l * jump;
    let margin = match direction {
        Direction::Forward => (lm - d - xi).min(xi - lp - d),
        Direction::Backward => (xi - lm - d).min(lp - d - xi),
    };
    Ok(LaxReport {
        satisfied: margin >= -1e-12,
        margin,
        direction,
        jump_size: jump,
    })
}

/// Conservative uniform Lax margin: a quarter of half the smallest sampled
/// GNL indicator, halved until every probe shock passes.
pub fn calibrate_delta_l(sys: &SystemDef) -> Result<(f64, usize)> {
    let gnl: Vec<usize> = sys.fields.iter().filter(|f| f.is_gnl()).map(|f| f.family).collect();
    if gnl.is_empty() {
        return Ok((0.0, 0));
    }
    let min_ind = gnl
        .iter()
        .map(|&a| sys.fields[a].indicator_min)
        .fold(f64::INFINITY, f64::min);
    let mut delta = 0.25 * 0.5 * min_ind;
    let eps = sys.epsilon;
    let mut bases = vec![sys.v_bar.clone()];
    for i in 0..sys.dim {
        for sign in [-1.0, 1.0] {
            let mut v = sys.v_bar.clone();
            v[i] += sign * 0.5 * eps;
            bases.push(v);
        }
    }
    let mut probes = Vec::new();
    for &alpha in &gnl {
        for base in &bases {
            for frac in [0.25, 0.125, 1.0 / 32.0] {
                for sign in [-1.0, 1.0] {
                    let s = sign * frac * eps;
                    match shock_wave(sys, base, alpha, s) {
                        Ok(w) => probes.push(w),
                        Err(Error::LeftBall(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    for halving in 0..=sys.tol.max_delta_l_halvings {
        let mut ok = true;
        for w in &probes {
            let dir = if w.strength < 0.0 { Direction::Forward } else { Direction::Backward };
            if !lax_check(sys, w, dir, delta)?.satisfied {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok((delta, halving));
        }
        if halving < sys.tol.max_delta_l_halvings {
            delta *= 0.5;
        }
    }
    Ok((delta, sys.tol.max_delta_l_halvings))
}
