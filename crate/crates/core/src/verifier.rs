//! Weak-form and entropy checks of self-similar profiles, and the structural
//! classification of each sector.
//!
//! The weak form is checked through its primitive identity: for all
//! `xi1 < xi2`,
//!
//! `int_{xi1}^{xi2} V + [f(V) - xi V]_{xi1}^{xi2} = 0`,
//!
//! which is exact across Rankine-Hugoniot jumps because `f(V) - xi V` is
//! continuous there. The entropy inequality uses the same form with `(e, q)`
//! and a sign set by the halfplane.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::max_abs;
use crate::numerics::{quad_adaptive, Vector};
use crate::profile::{sampling_range, Feature, Piece, Profile, SectorLayout};
use crate::system::{Direction, FieldKind, Halfplane, SystemDef};
use crate::waves::{lax_check, WaveKind};

pub const DEFAULT_PAIRS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakReport {
    pub max_residual: f64,
    pub worst_pair: [f64; 2],
    pub pairs: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Largest signed violation (negative or zero when satisfied).
    pub worst_violation: f64,
    pub worst_pair: [f64; 2],
    pub pairs: usize,
    pub pass: bool,
}

/// Reasons a sector (or the region outside all sectors) fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    MultipleForwardWaves,
    InadmissibleShock,
    NeighbourhoodTooSmall,
    ConsecutiveSimpleWaves,
    NotConstantOutside,
    MultipleContacts,
    ContactSpeedMismatch,
    RhViolation,
    IncompatibleWave,
    WrongFamily,
    FanMismatch,
    UnrecordedJump,
}

impl std::fmt::Display for Reason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorVerdict {
    pub family: usize,
    pub kind: FieldKind,
    pub direction: Direction,
    pub interval: [f64; 2],
    pub shocks: usize,
    pub contacts: usize,
    pub fans: usize,
    pub pass: bool,
    pub reasons: Vec<Reason>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureVerdict {
    pub halfplane: Halfplane,
    pub sectors: Vec<SectorVerdict>,
    /// Failures not attributable to a single sector.
    pub outside: Vec<Reason>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl StructureVerdict {
    pub fn reasons(&self) -> Vec<Reason> {
        let mut all: Vec<Reason> = self.outside.clone();
        for s in &self.sectors {
            all.extend(s.reasons.iter().copied());
        }
        all
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub weak: WeakReport,
    pub entropy: EntropyReport,
    pub structure: StructureVerdict,
    pub pass: bool,
}

// ---------------------------------------------------------------- pairs

/// Deterministic sample of `n` pairs `xi1 < xi2`: pairs straddling
/// breakpoints, pairs inside fan pieces, then uniform random pairs.
pub fn sample_pairs(sys: &SystemDef, profile: &Profile, n: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = sampling_range(profile);
    let bps = profile.breakpoints();
    let mut structured = Vec::new();
    for (k, &b) in bps.iter().enumerate() {
        let left = if k > 0 { b - bps[k - 1] } else { hi - lo };
        let right = if k + 1 < bps.len() { bps[k + 1] - b } else { hi - lo };
        let d = 0.5 * left.min(right);
        structured.push((b - d, b + d));
        structured.push((b, b + 0.5 * d));
    }
    for p in profile.pieces() {
        if let Piece::SimpleWave(f) = p {
            let w = f.hi() - f.lo();
            structured.push((f.lo() + 0.25 * w, f.lo() + 0.75 * w));
            structured.push((f.lo() - 0.1 * w, f.hi() + 0.1 * w));
        }
    }
    let budget = n / 2;
    let mut pairs = vec![(lo, hi)];
    if structured.len() <= budget {
        pairs.extend(structured);
    } else {
        let stride = structured.len() as f64 / budget as f64;
        for i in 0..budget {
            pairs.push(structured[(i as f64 * stride) as usize]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sys.tol.seed ^ 0x7a11);
    while pairs.len() < n {
        let a = rng.random_range(lo..hi);
        let b = rng.random_range(lo..hi);
        if a != b {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs.truncate(n.max(1));
    pairs
}

// `(int V, int e)` over [a, b], split at breakpoints; exact on constants.
fn integrals(sys: &SystemDef, profile: &Profile, a: f64, b: f64) -> Result<(Vector, f64)> {
    let m = profile.dim();
    let mut cuts = vec![a];
    cuts.extend(profile.breakpoints().iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    let mut int_v = Vector::zeros(m);
    let mut int_e = 0.0;
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if !(x1 > x0) {
            continue;
        }
        let mid = 0.5 * (x0 + x1);
        let i = profile.breakpoints().partition_point(|&bp| bp <= mid);
        match &profile.pieces()[i] {
            Piece::Constant(v) => {
                int_v += v * (x1 - x0);
                int_e += sys.entropy(v)? * (x1 - x0);
            }
            Piece::SimpleWave(_) => {
                let acc = quad_adaptive(
                    |x| {
                        let v = profile.evaluate(sys, x)?;
                        let e = sys.entropy(&v)?;
                        let mut out = Vector::zeros(m + 1);
                        out.rows_mut(0, m).copy_from(&v);
                        out[m] = e;
                        Ok(out)
                    },
                    x0,
                    x1,
                    1e-13,
                )?;
                int_v += acc.rows(0, m);
                int_e += acc[m];
            }
        }
    }
    Ok((int_v, int_e))
}

// Weak residual and signed entropy violation of one pair.
fn pair_residual(sys: &SystemDef, profile: &Profile, (a, b): (f64, f64)) -> Result<(f64, f64)> {
    let (int_v, int_e) = integrals(sys, profile, a, b)?;
    let va = profile.evaluate(sys, a)?;
    let vb = profile.evaluate(sys, b)?;
    let ga = sys.flux(&va)? - &va * a;
    let gb = sys.flux(&vb)? - &vb * b;
    let weak = max_abs(&(int_v + gb - ga));
    let ha = sys.entropy_flux(&va)? - a * sys.entropy(&va)?;
    let hb = sys.entropy_flux(&vb)? - b * sys.entropy(&vb)?;
    let ent = profile.halfplane.sign() * (hb - ha + int_e);
    Ok((weak, ent))
}

fn all_pair_residuals(sys: &SystemDef, profile: &Profile, pairs: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    // build the fan cache once before fanning out
    if let Some((a, _)) = profile.extent() {
        profile.evaluate(sys, a)?;
    }
    pairs.par_iter().map(|&p| pair_residual(sys, profile, p)).collect()
}

fn weak_from(sys: &SystemDef, pairs: &[(f64, f64)], res: &[(f64, f64)]) -> WeakReport {
    let mut worst = 0usize;
    for (i, r) in res.iter().enumerate() {
        if r.0 > res[worst].0 {
            worst = i;
        }
    }
    let max_residual = res.get(worst).map_or(0.0, |r| r.0);
    WeakReport {
        max_residual,
        worst_pair: pairs.get(worst).map_or([0.0, 0.0], |p| [p.0, p.1]),
        pairs: pairs.len(),
        pass: max_residual <= sys.tol.weak_residual_tol,
    }
}

fn entropy_from(sys: &SystemDef, pairs: &[(f64, f64)], res: &[(f64, f64)]) -> EntropyReport {
    let mut worst = 0usize;
    for (i, r) in res.iter().enumerate() {
        if r.1 > res[worst].1 {
            worst = i;
        }
    }
    let worst_violation = res.get(worst).map_or(0.0, |r| r.1);
    EntropyReport {
        worst_violation,
        worst_pair: pairs.get(worst).map_or([0.0, 0.0], |p| [p.0, p.1]),
        pairs: pairs.len(),
        pass: worst_violation <= sys.tol.entropy_residual_tol,
    }
}

/// Maximum weak-form residual over `n_pairs` sampled pairs.
pub fn weak_residual(sys: &SystemDef, profile: &Profile, n_pairs: usize) -> Result<WeakReport> {
    let pairs = sample_pairs(sys, profile, n_pairs);
    let res = all_pair_residuals(sys, profile, &pairs)?;
    Ok(weak_from(sys, &pairs, &res))
}

/// Worst signed violation of the entropy inequality over `n_pairs` pairs.
pub fn entropy_residual(sys: &SystemDef, profile: &Profile, n_pairs: usize) -> Result<EntropyReport> {
    let pairs = sample_pairs(sys, profile, n_pairs);
    let res = all_pair_residuals(sys, profile, &pairs)?;
    Ok(entropy_from(sys, &pairs, &res))
}

// ---------------------------------------------------------------- structure

fn push(reasons: &mut Vec<Reason>, r: Reason) {
    if !reasons.contains(&r) {
        reasons.push(r);
    }
}

/// Per-sector structural verdict.
pub fn classify_structure(sys: &SystemDef, layout: &SectorLayout, profile: &Profile) -> Result<StructureVerdict> {
    let features = profile.features();
    let mut outside = Vec::new();
    let mut notes = Vec::new();
    let bps = profile.breakpoints();

    for (k, &b) in bps.iter().enumerate() {
        if profile.jump_at(k).is_none() && profile.discontinuity(sys, k)? > 1e-10 {
            push(&mut outside, Reason::UnrecordedJump);
            notes.push(format!("unrecorded discontinuity at xi = {b}"));
        }
    }

    let mut per_sector: Vec<Vec<&Feature>> = vec![Vec::new(); layout.sectors.len()];
    for f in &features {
        let home = layout
            .sectors
            .iter()
            .position(|s| s.contains(f.lo()) && s.contains(f.hi()));
        match home {
            Some(a) => per_sector[a].push(f),
            None => {
                push(&mut outside, Reason::NotConstantOutside);
                notes.push(format!("wave on [{}, {}] outside every sector", f.lo(), f.hi()));
            }
        }
    }

    let slack = sys.tol.neighbourhood_slack;
    let mut sectors = Vec::with_capacity(layout.sectors.len());
    for (alpha, sector) in layout.sectors.iter().enumerate() {
        let direction = sector.direction(profile.halfplane);
        let mut reasons = Vec::new();
        let mut snotes = Vec::new();
        let (mut shocks, mut contacts, mut fans) = (0, 0, 0);
        let mut prev_was_fan = false;
        for f in &per_sector[alpha] {
            match f {
                Feature::Jump { index, xi } => {
                    prev_was_fan = false;
                    let j = &profile.jumps()[*index];
                    if j.family != alpha {
                        push(&mut reasons, Reason::WrongFamily);
                    }
                    let rh = sys.rh_residual(&j.v_minus, &j.v_plus, *xi)?;
                    if rh > sys.tol.rh_tol {
                        push(&mut reasons, Reason::RhViolation);
                        snotes.push(format!("jump at xi = {xi}: RH residual {rh:e}"));
                    }
                    match j.kind {
                        WaveKind::Contact => {
                            contacts += 1;
                            if sector.kind == FieldKind::GenuinelyNonlinear {
                                push(&mut reasons, Reason::IncompatibleWave);
                            } else {
                                let lm = sys.lambda(&j.v_minus, alpha)?;
                                let lp = sys.lambda(&j.v_plus, alpha)?;
                                let off = (lm - xi).abs().max((lp - xi).abs());
                                if off > sys.tol.resonance_tol {
                                    push(&mut reasons, Reason::ContactSpeedMismatch);
                                    snotes.push(format!("contact at xi = {xi}: speed mismatch {off:e}"));
                                }
                            }
                        }
                        WaveKind::Shock | WaveKind::SimpleWave => {
                            shocks += 1;
                            if sector.kind == FieldKind::LinearlyDegenerate {
                                push(&mut reasons, Reason::IncompatibleWave);
                                continue;
                            }
                            let lax = lax_check(sys, &profile.jump_wave(j), direction, sys.delta_l)?;
                            if !lax.satisfied {
                                push(&mut reasons, Reason::InadmissibleShock);
                                snotes.push(format!("shock at xi = {xi}: {direction} Lax margin {:e}", lax.margin));
                            }
                            if direction == Direction::Backward {
                                let k = j.breakpoint;
                                let need = slack * sys.delta_l * j.size();
                                let left = match &profile.pieces()[k] {
                                    Piece::Constant(_) if k == 0 => f64::INFINITY,
                                    Piece::Constant(_) => xi - bps[k - 1],
                                    Piece::SimpleWave(_) => 0.0,
                                };
                                let right = match &profile.pieces()[k + 1] {
                                    Piece::Constant(_) if k + 1 == bps.len() => f64::INFINITY,
                                    Piece::Constant(_) => bps[k + 1] - xi,
                                    Piece::SimpleWave(_) => 0.0,
                                };
                                if left < need || right < need {
                                    push(&mut reasons, Reason::NeighbourhoodTooSmall);
                                    snotes.push(format!(
                                        "shock at xi = {xi}: neighbourhoods {left:e}/{right:e} < {need:e}"
                                    ));
                                }
                            }
                        }
                    }
                }
                Feature::Fan { piece, lo, hi } => {
                    fans += 1;
                    if prev_was_fan && direction == Direction::Backward {
                        push(&mut reasons, Reason::ConsecutiveSimpleWaves);
                    }
                    prev_was_fan = true;
                    let Piece::SimpleWave(fp) = &profile.pieces()[*piece] else { unreachable!() };
                    if fp.family != alpha {
                        push(&mut reasons, Reason::WrongFamily);
                    }
                    if sector.kind == FieldKind::LinearlyDegenerate {
                        push(&mut reasons, Reason::IncompatibleWave);
                        continue;
                    }
                    let mut off: f64 = 0.0;
                    for x in [*lo, 0.5 * (lo + hi), *hi] {
                        let v = profile.evaluate(sys, x)?;
                        off = off.max((sys.lambda(&v, fp.family)? - x).abs());
                    }
                    if off > 1e3 * sys.tol.resonance_tol {
                        push(&mut reasons, Reason::FanMismatch);
                        snotes.push(format!("fan on [{lo}, {hi}]: |lambda - xi| up to {off:e}"));
                    }
                }
            }
        }
        let total = shocks + contacts + fans;
        match (sector.kind, direction) {
            (FieldKind::LinearlyDegenerate, _) => {
                if contacts > 1 {
                    push(&mut reasons, Reason::MultipleContacts);
                }
            }
            (FieldKind::GenuinelyNonlinear, Direction::Forward) => {
                if total > 1 {
                    push(&mut reasons, Reason::MultipleForwardWaves);
                }
            }
            (FieldKind::GenuinelyNonlinear, Direction::Backward) => {}
        }
        sectors.push(SectorVerdict {
            family: alpha,
            kind: sector.kind,
            direction,
            interval: [sector.lo(), sector.hi()],
            shocks,
            contacts,
            fans,
            pass: reasons.is_empty(),
            reasons,
            notes: snotes,
        });
    }
    let pass = outside.is_empty() && sectors.iter().all(|s| s.pass);
    Ok(StructureVerdict {
        halfplane: profile.halfplane,
        sectors,
        outside,
        notes,
        pass,
    })
}

/// Weak residual, entropy residual and structure in one report.
pub fn verify(sys: &SystemDef, layout: &SectorLayout, profile: &Profile, n_pairs: usize) -> Result<VerifyReport> {
    let pairs = sample_pairs(sys, profile, n_pairs);
    let res = all_pair_residuals(sys, profile, &pairs)?;
    let weak = weak_from(sys, &pairs, &res);
    let entropy = entropy_from(sys, &pairs, &res);
    let structure = classify_structure(sys, layout, profile)?;
    let pass = weak.pass && entropy.pass && structure.pass;
    Ok(VerifyReport {
        weak,
        entropy,
        structure,
        pass,
    })
}

// ---------------------------------------------------------------- resonance

const RESONANCE_REACH: f64 = 0.05;

/// Empirical Lipschitz quotient `sup |V(xi) - V(xi0)| / |xi - xi0|` at a
/// resonance point, over sampled `xi` off the jump set.
pub fn lipschitz_at_resonance(sys: &SystemDef, profile: &Profile, xi0: f64) -> Result<f64> {
    let v0 = profile.evaluate(sys, xi0)?;
    let vl = profile.left_limit(sys, xi0)?;
    let mut resonant = false;
    for v in [&v0, &vl] {
        let lam = sys.eigen(v)?.values;
        if lam.iter().any(|l| (l - xi0).abs() <= sys.tol.resonance_tol) {
            resonant = true;
        }
    }
    if !resonant {
        return Err(Error::NotResonant(xi0));
    }
    let jumps: Vec<f64> = profile.jumps().iter().map(|j| profile.jump_xi(j)).collect();
    let mut samples = Vec::new();
    for k in 0..=40 {
        let d = RESONANCE_REACH * 0.5f64.powi(k);
        samples.push(xi0 - d);
        samples.push(xi0 + d);
    }
    for i in 0..=512 {
        samples.push(xi0 - RESONANCE_REACH + 2.0 * RESONANCE_REACH * i as f64 / 512.0);
    }
    let mut q: f64 = 0.0;
    for xi in samples {
        if xi == xi0 || jumps.contains(&xi) {
            continue;
        }
        let v = profile.evaluate(sys, xi)?;
        q = q.max((&v - &v0).norm() / (xi - xi0).abs());
    }
    Ok(q)
}
