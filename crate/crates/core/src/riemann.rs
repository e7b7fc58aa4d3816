//! Forward Riemann problems in V-coordinates by the Lax construction, and the
//! steady two-dimensional wrapper over `xi = y/x`.

use crate::error::{Error, Result};
use crate::euler::EulerState;
use crate::numerics::{newton_solve, Vector};
use crate::profile::{Profile, ProfileBuilder};
use crate::system::{Direction, Halfplane, SystemDef};
use crate::waves::{forward_wave, shock_curve, simple_wave_curve, wave_fan, Wave, WaveKind};

/// A solved forward Riemann problem.
#[derive(Debug, Clone)]
pub struct RiemannSolution {
    pub profile: Profile,
    /// Wave strength per family (0 for absent waves).
    pub strengths: Vec<f64>,
    pub waves: Vec<Wave>,
    pub iterations: usize,
    pub residual: f64,
}

fn ball_error(e: Error) -> Error {
    match e {
        Error::LeftBall(s) => Error::OutOfBall(format!("wave curve left the ball at s = {s}")),
        other => other,
    }
}

/// End state of the admissible forward wave of family `alpha` with strength `s`.
pub fn wave_end(sys: &SystemDef, v: &Vector, alpha: usize, s: f64) -> Result<Vector> {
    if s == 0.0 {
        return Ok(v.clone());
    }
    let out = if sys.field(alpha).is_gnl() && s < 0.0 {
        shock_curve(sys, v, alpha, s).map(|(vp, _)| vp)
    } else {
        simple_wave_curve(sys, v, alpha, s)
    };
    let out = out.map_err(ball_error)?;
    if !sys.in_ball(&out) {
        return Err(Error::OutOfBall(format!("intermediate state of family {alpha}")));
    }
    Ok(out)
}

/// Composes the family waves `1..m` with the given strengths starting at `V_L`
/// and returns the final state.
pub fn compose(sys: &SystemDef, v_left: &Vector, strengths: &[f64]) -> Result<Vector> {
    let mut v = v_left.clone();
    for (alpha, &s) in strengths.iter().enumerate() {
        v = wave_end(sys, &v, alpha, s)?;
    }
    Ok(v)
}

fn forward_halfplane(sys: &SystemDef) -> Result<Halfplane> {
    let hp = sys.fields[0].forward_halfplane;
    if sys.fields.iter().any(|f| f.forward_halfplane != hp) {
        return Err(Error::InvalidConfig(
            "families have different forward halfplanes; no single forward Riemann problem".into(),
        ));
    }
    Ok(hp)
}

/// Solves the forward Riemann problem and returns the solution profile.
pub fn solve_riemann(sys: &SystemDef, v_left: &Vector, v_right: &Vector, direction: Direction) -> Result<Profile> {
    if direction == Direction::Backward {
        return Err(Error::BackwardRiemann);
    }
    Ok(solve_riemann_detailed(sys, v_left, v_right)?.profile)
}

/// Forward Riemann solve with strengths, waves and the Newton iteration count.
///
/// Newton on the strengths from `s = 0`; steps that leave the ball are damped.
/// Strengths at the level of the Newton residual are treated as absent.
pub fn solve_riemann_detailed(sys: &SystemDef, v_left: &Vector, v_right: &Vector) -> Result<RiemannSolution> {
    let m = sys.dim;
    for (v, what) in [(v_left, "left"), (v_right, "right")] {
        if v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: v.len() });
        }
        if !sys.in_ball(v) {
            return Err(Error::OutOfBall(format!("{what} state")));
        }
    }
    let halfplane = forward_halfplane(sys)?;
    let residual = |s: &Vector| -> Result<Vector> { Ok(compose(sys, v_left, s.as_slice())? - v_right) };
    let sol = newton_solve(residual, &Vector::zeros(m), sys.tol.newton_tol, sys.tol.newton_max_iter)?;
    let floor = sys.strength_floor();
    let strengths: Vec<f64> = sol
        .x
        .iter()
        .map(|&s| if s.abs() <= floor { 0.0 } else { s })
        .collect();

    let mut builder = ProfileBuilder::new(halfplane, v_left.clone());
    let mut waves = Vec::new();
    for (alpha, &s) in strengths.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let v = builder.current().clone();
        if sys.field(alpha).is_gnl() && s > 0.0 {
            let fan = wave_fan(sys, &v, alpha, s).map_err(ball_error)?;
            waves.push(fan.to_wave());
            builder.push_fan(fan)?;
        } else {
            let w = forward_wave(sys, &v, alpha, s).map_err(ball_error)?;
            builder.push_jump(&w)?;
            waves.push(w);
        }
    }
    let profile = builder.finish()?;
    profile.check_invariants(sys)?;
    Ok(RiemannSolution {
        profile,
        strengths,
        waves,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// Steady supersonic Riemann problem between an upper and a lower state
/// (conserved variables) in the given halfplane.
///
/// Along a ray `xi = y/x` with `x > 0`, increasing `xi` moves from the lower
/// to the upper state; for `x < 0` the order is reversed. Only the forward
/// halfplane is solved directly.
pub fn steady_riemann_2d(sys: &SystemDef, u_upper: &EulerState, u_lower: &EulerState, halfplane: Halfplane) -> Result<Profile> {
    Ok(steady_riemann_2d_detailed(sys, u_upper, u_lower, halfplane)?.profile)
}

pub fn steady_riemann_2d_detailed(
    sys: &SystemDef,
    u_upper: &EulerState,
    u_lower: &EulerState,
    halfplane: Halfplane,
) -> Result<RiemannSolution> {
    if forward_halfplane(sys)? != halfplane {
        return Err(Error::BackwardRiemann);
    }
    let v_upper = sys.v_of(&u_upper.to_vector())?;
    let v_lower = sys.v_of(&u_lower.to_vector())?;
    let (v_left, v_right) = match halfplane {
        Halfplane::Right => (v_lower, v_upper),
        Halfplane::Left => (v_upper, v_lower),
    };
    solve_riemann_detailed(sys, &v_left, &v_right)
}

/// Number of non-trivial waves of each kind in a solution.
pub fn wave_counts(sol: &RiemannSolution) -> (usize, usize, usize) {
    let mut c = (0, 0, 0);
    for w in &sol.waves {
        match w.kind {
            WaveKind::Shock => c.0 += 1,
            WaveKind::SimpleWave => c.1 += 1,
            WaveKind::Contact => c.2 += 1,
        }
    }
    c
}
