//! Fixture profiles: forward single waves, backward shock trains (optionally
//! with compression fans between the shocks), named presets and the
//! corruptions used to test the verifier.
//!
//! Backward trains follow the neighbourhood geometry of admissible backward
//! shocks: after a shock the constant state `V+` holds until `xi` reaches
//! `lambda(V+)`, where a compression fan may start; before the next shock the
//! state is constant from `lambda(V-)`. Shock positions are their speeds, so
//! the whole layout is fixed by the first state and the strengths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::profile::{FanPiece, Feature, Jump, Piece, Profile, ProfileBuilder, SectorLayout};
use crate::riemann::{compose, solve_riemann_detailed};
use crate::system::{Direction, SystemDef};
use crate::waves::{contact_wave, shock_wave, wave_fan, WaveKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardKind {
    Shock,
    Fan,
    Contact,
}

/// What lies between consecutive backward shocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separator {
    Constant,
    /// A fan of the given (positive) strength.
    Compression(f64),
}

fn start_state(sys: &SystemDef, alpha: usize, total: f64) -> Result<Vector> {
    Ok(&sys.v_bar - sys.right(&sys.v_bar, alpha)? * (0.5 * total))
}

fn require_fit(layout: &SectorLayout, profile: &Profile, alpha: usize) -> Result<()> {
    let sector = &layout.sectors[alpha];
    for f in profile.features() {
        if !(sector.contains(f.lo()) && sector.contains(f.hi())) {
            return Err(Error::DoesNotFit(format!(
                "wave on [{}, {}] leaves I^{} = ({}, {})",
                f.lo(),
                f.hi(),
                alpha + 1,
                sector.lo(),
                sector.hi()
            )));
        }
    }
    Ok(())
}

/// A profile made of one forward wave of family `alpha`, centred on the
/// background state.
pub fn generate_forward(sys: &SystemDef, layout: &SectorLayout, alpha: usize, kind: ForwardKind, s: f64) -> Result<Profile> {
    if alpha >= sys.dim {
        return Err(Error::InvalidConfig(format!("family {} out of range", alpha + 1)));
    }
    let field = sys.field(alpha);
    let hp = field.forward_halfplane;
    match (kind, field.is_gnl()) {
        (ForwardKind::Contact, true) => return Err(Error::IncompatibleKind("contact in a genuinely nonlinear family".into())),
        (ForwardKind::Shock | ForwardKind::Fan, false) => {
            return Err(Error::IncompatibleKind(format!("{kind:?} in a linearly degenerate family")))
        }
        _ => {}
    }
    match kind {
        ForwardKind::Shock if s > 0.0 => {
            return Err(Error::InadmissibleStrength(format!("forward shock needs s <= 0, got {s}")))
        }
        ForwardKind::Fan if s < 0.0 => return Err(Error::InadmissibleStrength(format!("fan needs s >= 0, got {s}"))),
        _ => {}
    }
    let v0 = start_state(sys, alpha, s)?;
    if s == 0.0 {
        return Ok(Profile::constant(hp, v0));
    }
    let mut b = ProfileBuilder::new(hp, v0.clone());
    match kind {
        ForwardKind::Shock => b.push_jump(&shock_wave(sys, &v0, alpha, s)?)?,
        ForwardKind::Contact => b.push_jump(&contact_wave(sys, &v0, alpha, s)?)?,
        ForwardKind::Fan => b.push_fan(wave_fan(sys, &v0, alpha, s)?)?,
    }
    let p = b.finish()?;
    p.check_invariants(sys)?;
    require_fit(layout, &p, alpha)?;
    Ok(p)
}

/// A backward profile of family `alpha`: shocks of strengths `strengths[i]`
/// with `separators[i]` before shock `i` and `separators[N]` after the last.
///
/// Strengths below the shock-strength floor are dropped (the neighbouring
/// separators then become adjacent).
pub fn generate_backward(
    sys: &SystemDef,
    layout: &SectorLayout,
    alpha: usize,
    strengths: &[f64],
    separators: &[Separator],
) -> Result<Profile> {
    if alpha >= sys.dim {
        return Err(Error::InvalidConfig(format!("family {} out of range", alpha + 1)));
    }
    if !sys.field(alpha).is_gnl() {
        return Err(Error::IncompatibleKind("backward shock trains need a genuinely nonlinear family".into()));
    }
    if separators.len() != strengths.len() + 1 {
        return Err(Error::InvalidConfig(format!(
            "{} shocks need {} separators, got {}",
            strengths.len(),
            strengths.len() + 1,
            separators.len()
        )));
    }
    if let Some(s) = strengths.iter().find(|&&s| s < 0.0) {
        return Err(Error::InadmissibleStrength(format!("backward shock needs s > 0, got {s}")));
    }
    let mut total: f64 = strengths.iter().sum();
    for sep in separators {
        if let Separator::Compression(c) = sep {
            if !(*c > 0.0) {
                return Err(Error::InadmissibleStrength(format!("compression strength {c} must be positive")));
            }
            total += c;
        }
    }
    let hp = sys.field(alpha).forward_halfplane.opposite();
    let v0 = start_state(sys, alpha, total)?;
    build_train(sys, alpha, hp, v0, strengths, separators).map_err(|e| match e {
        Error::LeftBall(_) | Error::OutOfBall(_) => Error::DoesNotFit(format!("train leaves the ball: {e}")),
        other => other,
    })
    .and_then(|p| {
        require_fit(layout, &p, alpha)?;
        Ok(p)
    })
}

fn build_train(
    sys: &SystemDef,
    alpha: usize,
    hp: crate::system::Halfplane,
    v0: Vector,
    strengths: &[f64],
    separators: &[Separator],
) -> Result<Profile> {
    let mut b = ProfileBuilder::new(hp, v0);
    let mut last_was_fan = false;
    for (i, sep) in separators.iter().enumerate() {
        if let Separator::Compression(c) = sep {
            if last_was_fan {
                return Err(Error::ConsecutiveSimpleWaves);
            }
            let fan = wave_fan(sys, b.current(), alpha, *c)?;
            b.push_fan(fan)?;
            last_was_fan = true;
        }
        if let Some(&s) = strengths.get(i) {
            if s < sys.tol.min_shock_strength {
                continue;
            }
            let w = shock_wave(sys, b.current(), alpha, s)?;
            b.push_jump(&w)?;
            last_was_fan = false;
        }
    }
    let p = b.finish()?;
    p.check_invariants(sys)?;
    Ok(p)
}

/// `(sigma-, sigma+) = (lambda(V-), lambda(V+))` for every jump of family
/// `alpha`: the constant neighbourhoods of backward shocks.
pub fn shock_neighbourhoods(sys: &SystemDef, profile: &Profile, alpha: usize) -> Result<Vec<(f64, f64)>> {
    profile
        .jumps()
        .iter()
        .filter(|j| j.family == alpha)
        .map(|j| Ok((sys.lambda(&j.v_minus, alpha)?, sys.lambda(&j.v_plus, alpha)?)))
        .collect()
}

// ---------------------------------------------------------------- presets

pub const PRESETS: &[&str] = &[
    "forward-shock",
    "forward-shock-upper",
    "forward-fan",
    "forward-contact",
    "riemann",
    "backward-shock",
    "backward-train",
    "backward-compression",
    "backward-geometric",
    "compression-limit",
];

/// Family index of the upper (largest-speed) genuinely nonlinear field.
fn upper_gnl(sys: &SystemDef) -> Result<usize> {
    (0..sys.dim)
        .rev()
        .find(|&a| sys.field(a).is_gnl())
        .ok_or_else(|| Error::IncompatibleKind("system has no genuinely nonlinear family".into()))
}

fn lower_gnl(sys: &SystemDef) -> Result<usize> {
    (0..sys.dim)
        .find(|&a| sys.field(a).is_gnl())
        .ok_or_else(|| Error::IncompatibleKind("system has no genuinely nonlinear family".into()))
}

fn first_ld(sys: &SystemDef) -> Result<usize> {
    (0..sys.dim)
        .find(|&a| !sys.field(a).is_gnl())
        .ok_or_else(|| Error::IncompatibleKind("system has no linearly degenerate family".into()))
}

/// Builds a named fixture. `n` is the number of shocks for backward presets
/// (default 20, or 50 for the geometric ones); `seed` drives `riemann`.
pub fn preset(sys: &SystemDef, layout: &SectorLayout, name: &str, n: Option<usize>, seed: u64) -> Result<Profile> {
    let eps = sys.epsilon;
    match name {
        "forward-shock" => generate_forward(sys, layout, lower_gnl(sys)?, ForwardKind::Shock, -eps / 8.0),
        "forward-shock-upper" => generate_forward(sys, layout, upper_gnl(sys)?, ForwardKind::Shock, -eps / 8.0),
        "forward-fan" => generate_forward(sys, layout, upper_gnl(sys)?, ForwardKind::Fan, eps / 8.0),
        "forward-contact" => generate_forward(sys, layout, first_ld(sys)?, ForwardKind::Contact, eps / 8.0),
        "riemann" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<f64> = (0..sys.dim).map(|_| rng.random_range(-1.0..1.0) * eps / 8.0).collect();
            let vr = compose(sys, &sys.v_bar, &s)?;
            Ok(solve_riemann_detailed(sys, &sys.v_bar, &vr)?.profile)
        }
        "backward-shock" => generate_backward(
            sys,
            layout,
            upper_gnl(sys)?,
            &[eps / 8.0],
            &[Separator::Constant, Separator::Constant],
        ),
        "backward-train" => {
            let n = n.unwrap_or(20).max(1);
            let s = vec![0.5 * eps / n as f64; n];
            generate_backward(sys, layout, upper_gnl(sys)?, &s, &vec![Separator::Constant; n + 1])
        }
        "backward-compression" => {
            let n = n.unwrap_or(20).max(1);
            let (s, seps) = compression_train(eps, n);
            generate_backward(sys, layout, upper_gnl(sys)?, &s, &seps)
        }
        "backward-geometric" => {
            let n = n.unwrap_or(50).max(1);
            let s: Vec<f64> = (0..n).map(|i| 0.25 * eps * 0.5f64.powi(i as i32)).collect();
            generate_backward(sys, layout, upper_gnl(sys)?, &s, &vec![Separator::Constant; n + 1])
        }
        "compression-limit" => {
            // a compression fan followed by shocks that shrink towards its end,
            // so the fan end is a limit point of the shock set
            let n = n.unwrap_or(50).max(1);
            let s: Vec<f64> = (0..n).map(|i| 0.2 * eps * 0.5f64.powi((n - 1 - i) as i32)).collect();
            let mut seps = vec![Separator::Constant; n + 1];
            seps[0] = Separator::Compression(0.15 * eps);
            generate_backward(sys, layout, upper_gnl(sys)?, &s, &seps)
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown preset {other:?}; known: {}",
            PRESETS.join(", ")
        ))),
    }
}

/// `n` equal shocks with equal compressions between them; total strengths
/// independent of `n`.
pub fn compression_train(eps: f64, n: usize) -> (Vec<f64>, Vec<Separator>) {
    let s = vec![0.3 * eps / n as f64; n];
    let mut seps = vec![Separator::Constant; n + 1];
    if n > 1 {
        let c = 0.3 * eps / (n - 1) as f64;
        for sep in seps.iter_mut().take(n).skip(1) {
            *sep = Separator::Compression(c);
        }
    }
    (s, seps)
}

// ---------------------------------------------------------------- mutations

/// Deterministic corruptions of a valid profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mutation {
    /// Moves the first jump by `delta` in `xi`.
    SpeedShift { delta: f64 },
    /// Replaces the first shock by the shock of opposite strength.
    SideFlip,
    /// Inserts a translated copy of the first jump `offset` to its right.
    DuplicateWave { offset: f64 },
    /// Perturbs component `component` of the first jump's right state.
    RhViolation { component: usize, delta: f64 },
    /// Splits the first fan into two halves separated by a constant of width `gap`.
    AdjacentFans { gap: f64 },
}

fn inapplicable(msg: impl Into<String>) -> Error {
    Error::InapplicableMutation(msg.into())
}

fn neighbours(bps: &[f64], k: usize) -> (f64, f64) {
    let lo = if k > 0 { bps[k - 1] } else { f64::NEG_INFINITY };
    let hi = if k + 1 < bps.len() { bps[k + 1] } else { f64::INFINITY };
    (lo, hi)
}

pub fn mutate(sys: &SystemDef, profile: &Profile, mutation: Mutation) -> Result<Profile> {
    let mut bps = profile.breakpoints().to_vec();
    let mut pieces = profile.pieces().to_vec();
    let mut jumps: Vec<Jump> = profile.jumps().to_vec();
    let hp = profile.halfplane;
    match mutation {
        Mutation::SpeedShift { delta } => {
            let j = jumps.first().ok_or_else(|| inapplicable("profile has no jump"))?;
            let k = j.breakpoint;
            let (lo, hi) = neighbours(&bps, k);
            let x = bps[k] + delta;
            if !(x > lo && x < hi) {
                return Err(inapplicable(format!("shift {delta} crosses a neighbouring breakpoint")));
            }
            bps[k] = x;
        }
        Mutation::SideFlip => {
            let n = jumps
                .iter()
                .position(|j| j.kind == WaveKind::Shock)
                .ok_or_else(|| inapplicable("profile has no shock"))?;
            let j = jumps[n].clone();
            let k = j.breakpoint;
            let w = shock_wave(sys, &j.v_minus, j.family, -j.strength)?;
            let (lo, hi) = neighbours(&bps, k);
            let x = w.speed[0];
            if !(x > lo && x < hi) || !matches!(pieces[k + 1], Piece::Constant(_)) {
                return Err(inapplicable("flipped shock does not fit between its neighbours"));
            }
            bps[k] = x;
            pieces[k + 1] = Piece::Constant(w.v_plus.clone());
            jumps[n].strength = -j.strength;
            jumps[n].v_plus = w.v_plus;
        }
        Mutation::DuplicateWave { offset } => {
            let j = jumps.first().ok_or_else(|| inapplicable("profile has no jump"))?.clone();
            let k = j.breakpoint;
            let (_, hi) = neighbours(&bps, k);
            let x = bps[k] + offset;
            if !(offset > 0.0 && x < hi) {
                return Err(inapplicable(format!("offset {offset} does not fit before the next breakpoint")));
            }
            let v2 = &j.v_plus + (&j.v_plus - &j.v_minus);
            bps.insert(k + 1, x);
            pieces.insert(k + 2, Piece::Constant(v2.clone()));
            for later in jumps.iter_mut().skip(1) {
                later.breakpoint += 1;
            }
            jumps.insert(
                1,
                Jump {
                    breakpoint: k + 1,
                    v_minus: j.v_plus.clone(),
                    v_plus: v2,
                    ..j
                },
            );
        }
        Mutation::RhViolation { component, delta } => {
            let j = jumps.first_mut().ok_or_else(|| inapplicable("profile has no jump"))?;
            if component >= j.v_plus.len() {
                return Err(inapplicable(format!("component {component} out of range")));
            }
            let k = j.breakpoint;
            let Piece::Constant(v) = &mut pieces[k + 1] else {
                return Err(inapplicable("jump is not followed by a constant state"));
            };
            v[component] += delta;
            j.v_plus[component] += delta;
        }
        Mutation::AdjacentFans { gap } => {
            let i = pieces
                .iter()
                .position(|p| matches!(p, Piece::SimpleWave(_)))
                .ok_or_else(|| inapplicable("profile has no fan"))?;
            let Piece::SimpleWave(f) = pieces[i].clone() else { unreachable!() };
            let first = wave_fan(sys, &f.v_start, f.family, 0.5 * f.strength)?;
            let second = wave_fan(sys, first.v_end(), f.family, 0.5 * f.strength)?;
            let shift = f.xi_shift + gap;
            let end = second.xi_end() + shift;
            let (_, hi) = neighbours(&bps, i);
            if !(gap > 0.0 && end < hi) {
                return Err(inapplicable(format!("gap {gap} does not fit before the next breakpoint")));
            }
            let p1 = FanPiece {
                family: f.family,
                v_start: f.v_start.clone(),
                strength: first.strength,
                xi_start: first.xi_start(),
                xi_end: first.xi_end(),
                xi_shift: f.xi_shift,
            };
            let p2 = FanPiece {
                family: f.family,
                v_start: first.v_end().clone(),
                strength: second.strength,
                xi_start: second.xi_start(),
                xi_end: second.xi_end(),
                xi_shift: shift,
            };
            // fan i spans (bps[i-1], bps[i])
            bps.splice(i - 1..=i, [p1.lo(), p1.hi(), p2.lo(), p2.hi()]);
            pieces.splice(i..=i, [Piece::SimpleWave(p1), Piece::Constant(first.v_end().clone()), Piece::SimpleWave(p2)]);
            pieces[i + 3] = Piece::Constant(second.v_end().clone());
            for j in jumps.iter_mut().filter(|j| j.breakpoint >= i) {
                j.breakpoint += 2;
            }
        }
    }
    Profile::from_parts(hp, bps, pieces, jumps)
}

/// The mutation classes the verifier must detect, with default parameters.
pub fn standard_mutations() -> Vec<Mutation> {
    vec![
        Mutation::SpeedShift { delta: 1e-3 },
        Mutation::SideFlip,
        Mutation::DuplicateWave { offset: 1e-3 },
        Mutation::RhViolation { component: 0, delta: 1e-4 },
        Mutation::AdjacentFans { gap: 1e-5 },
    ]
}

/// Number of sectors of the given direction holding at least one wave.
pub fn occupied_sectors(layout: &SectorLayout, profile: &Profile, direction: Direction) -> usize {
    let features = profile.features();
    layout
        .sectors
        .iter()
        .filter(|s| s.direction(profile.halfplane) == direction)
        .filter(|s| features.iter().any(|f: &Feature| s.contains(f.lo())))
        .count()
}
