//! Piecewise self-similar profiles `xi -> V(xi)`, the sector layout, total
//! variation and the saltus decomposition `V = V_S + V_L`.
//!
//! A profile is a finite list of breakpoints `b_0 < ... < b_{K-1}` and `K + 1`
//! pieces; piece `i` covers `(b_{i-1}, b_i)`. Evaluation is right-continuous,
//! so at a jump breakpoint `evaluate` returns `V+` and `left_limit` returns `V-`.
//!
//! For piecewise profiles the sup-over-sequences jump functional reduces to the
//! recorded jump magnitude `|V+ - V-|`, which is what every bound below uses.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::config::SCHEMA;
use crate::error::{Error, Result};
use crate::numerics::linalg::serde_vector;
use crate::numerics::Vector;
use crate::system::{Direction, FieldKind, Halfplane, SystemDef};
use crate::waves::{wave_fan, FanCurve, Wave, WaveKind};

/// Simple-wave piece: the fan of `family` starting at `v_start`, possibly
/// translated in `xi` by `xi_shift` (only corrupted fixtures use a shift).
#[derive(Debug, Clone, PartialEq)]
pub struct FanPiece {
    pub family: usize,
    pub v_start: Vector,
    pub strength: f64,
    /// Natural speed range `[lambda(V_start), lambda(V_end)]`.
    pub xi_start: f64,
    pub xi_end: f64,
    pub xi_shift: f64,
}

impl FanPiece {
    pub fn lo(&self) -> f64 {
        self.xi_start + self.xi_shift
    }

    pub fn hi(&self) -> f64 {
        self.xi_end + self.xi_shift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Constant(Vector),
    SimpleWave(FanPiece),
}

/// A recorded discontinuity at breakpoint `breakpoint`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub breakpoint: usize,
    pub family: usize,
    pub kind: WaveKind,
    pub strength: f64,
    pub v_minus: Vector,
    pub v_plus: Vector,
}

impl Jump {
    pub fn size(&self) -> f64 {
        (&self.v_plus - &self.v_minus).norm()
    }
}

/// A wave as seen by the classifier: a jump or a fan piece with its extent.
#[derive(Debug, Clone, PartialEq)]
pub enum Feature {
    Jump { index: usize, xi: f64 },
    Fan { piece: usize, lo: f64, hi: f64 },
}

impl Feature {
    pub fn lo(&self) -> f64 {
        match self {
            Feature::Jump { xi, .. } => *xi,
            Feature::Fan { lo, .. } => *lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match self {
            Feature::Jump { xi, .. } => *xi,
            Feature::Fan { hi, .. } => *hi,
        }
    }
}

/// Piecewise representation of a self-similar profile.
///
/// Immutable after construction. Fan curves are rebuilt lazily from the
/// stored parameters on first evaluation and cached; a profile must always be
/// evaluated with the system it was built for.
#[derive(Debug, Clone)]
pub struct Profile {
    pub halfplane: Halfplane,
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
    jumps: Vec<Jump>,
    fans: OnceLock<Vec<Option<FanCurve>>>,
}

impl PartialEq for Profile {
    fn eq(&self, other: &Self) -> bool {
        self.halfplane == other.halfplane
            && self.breakpoints == other.breakpoints
            && self.pieces == other.pieces
            && self.jumps == other.jumps
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidProfile(msg.into())
}

impl Profile {
    pub fn constant(halfplane: Halfplane, v: Vector) -> Profile {
        Profile {
            halfplane,
            breakpoints: Vec::new(),
            pieces: vec![Piece::Constant(v)],
            jumps: Vec::new(),
            fans: OnceLock::new(),
        }
    }

    /// Assembles a profile from parts after structural checks (ordering,
    /// counts, dimensions, fan extents matching their breakpoints).
    pub fn from_parts(halfplane: Halfplane, breakpoints: Vec<f64>, pieces: Vec<Piece>, jumps: Vec<Jump>) -> Result<Profile> {
        let k = breakpoints.len();
        if pieces.len() != k + 1 {
            return Err(invalid(format!("{} breakpoints need {} pieces, found {}", k, k + 1, pieces.len())));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(invalid("non-finite breakpoint"));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("breakpoints must be strictly increasing"));
        }
        let dim = match &pieces[0] {
            Piece::Constant(v) => v.len(),
            Piece::SimpleWave(_) => return Err(invalid("outermost pieces must be constant")),
        };
        if matches!(pieces[k], Piece::SimpleWave(_)) {
            return Err(invalid("outermost pieces must be constant"));
        }
        for (i, p) in pieces.iter().enumerate() {
            match p {
                Piece::Constant(v) => {
                    if v.len() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(invalid("non-finite state"));
                    }
                }
                Piece::SimpleWave(f) => {
                    if f.v_start.len() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, found: f.v_start.len() });
                    }
                    let (a, b) = (breakpoints[i - 1], breakpoints[i]);
                    let tol = 1e-9 * (1.0 + a.abs().max(b.abs()));
                    if (f.lo() - a).abs() > tol || (f.hi() - b).abs() > tol {
                        return Err(invalid(format!(
                            "fan piece {i} spans [{}, {}] but its breakpoints are [{a}, {b}]",
                            f.lo(),
                            f.hi()
                        )));
                    }
                }
            }
        }
        for (n, j) in jumps.iter().enumerate() {
            if j.breakpoint >= k {
                return Err(invalid(format!("jump refers to breakpoint {} of {k}", j.breakpoint)));
            }
            if n > 0 && jumps[n - 1].breakpoint >= j.breakpoint {
                return Err(invalid("jumps must be sorted by breakpoint and unique"));
            }
            if j.v_minus.len() != dim || j.v_plus.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: j.v_minus.len() });
            }
        }
        Ok(Profile {
            halfplane,
            breakpoints,
            pieces,
            jumps,
            fans: OnceLock::new(),
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn dim(&self) -> usize {
        match &self.pieces[0] {
            Piece::Constant(v) => v.len(),
            Piece::SimpleWave(f) => f.v_start.len(),
        }
    }

    pub fn jump_xi(&self, j: &Jump) -> f64 {
        self.breakpoints[j.breakpoint]
    }

    pub fn jump_at(&self, breakpoint: usize) -> Option<&Jump> {
        self.jumps.iter().find(|j| j.breakpoint == breakpoint)
    }

    /// The jump as a [`Wave`] record with its breakpoint as speed.
    pub fn jump_wave(&self, j: &Jump) -> Wave {
        let xi = self.jump_xi(j);
        Wave {
            family: j.family,
            kind: j.kind,
            v_minus: j.v_minus.clone(),
            v_plus: j.v_plus.clone(),
            strength: j.strength,
            speed: [xi, xi],
        }
    }

    /// `[first breakpoint, last breakpoint]`, or `None` for a constant profile.
    pub fn extent(&self) -> Option<(f64, f64)> {
        Some((*self.breakpoints.first()?, *self.breakpoints.last()?))
    }

    /// Jumps and fan pieces in increasing order of `xi`.
    pub fn features(&self) -> Vec<Feature> {
        let mut out = Vec::new();
        let mut jumps = self.jumps.iter().enumerate().peekable();
        for (i, p) in self.pieces.iter().enumerate() {
            if let Piece::SimpleWave(f) = p {
                out.push(Feature::Fan {
                    piece: i,
                    lo: f.lo(),
                    hi: f.hi(),
                });
            }
            // the breakpoint after piece i
            if i < self.breakpoints.len() {
                while let Some((n, j)) = jumps.peek() {
                    if j.breakpoint == i {
                        out.push(Feature::Jump {
                            index: *n,
                            xi: self.breakpoints[i],
                        });
                        jumps.next();
                    } else {
                        break;
                    }
                }
            }
        }
        out
    }

    fn fans(&self, sys: &SystemDef) -> Result<&[Option<FanCurve>]> {
        if let Some(f) = self.fans.get() {
            return Ok(f);
        }
        let mut built = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            built.push(match p {
                Piece::Constant(_) => None,
                Piece::SimpleWave(f) => Some(wave_fan(sys, &f.v_start, f.family, f.strength)?),
            });
        }
        let _ = self.fans.set(built);
        Ok(self.fans.get().expect("cache initialised"))
    }

    /// The fan curve behind piece `i`, if it is a simple-wave piece.
    pub fn fan_curve(&self, sys: &SystemDef, i: usize) -> Result<Option<&FanCurve>> {
        Ok(self.fans(sys)?[i].as_ref())
    }

    fn piece_value(&self, sys: &SystemDef, i: usize, xi: f64) -> Result<Vector> {
        match &self.pieces[i] {
            Piece::Constant(v) => Ok(v.clone()),
            Piece::SimpleWave(f) => {
                let fan = self.fans(sys)?[i].as_ref().expect("fan cached");
                fan.eval(sys, xi - f.xi_shift)
            }
        }
    }

    /// Right-continuous value `V(xi)`.
    pub fn evaluate(&self, sys: &SystemDef, xi: f64) -> Result<Vector> {
        let i = self.breakpoints.partition_point(|&b| b <= xi);
        self.piece_value(sys, i, xi)
    }

    /// `V(xi-)`.
    pub fn left_limit(&self, sys: &SystemDef, xi: f64) -> Result<Vector> {
        let i = self.breakpoints.partition_point(|&b| b < xi);
        self.piece_value(sys, i, xi)
    }

    /// `|V(b) - V(b-)|` at breakpoint `k`.
    pub fn discontinuity(&self, sys: &SystemDef, k: usize) -> Result<f64> {
        let b = self.breakpoints[k];
        Ok((self.evaluate(sys, b)? - self.left_limit(sys, b)?).norm())
    }

    /// Checks the semantic invariants: recorded jumps match the pieces and
    /// satisfy Rankine-Hugoniot at their breakpoint, there are no unrecorded
    /// discontinuities, and every state lies in the ball.
    pub fn check_invariants(&self, sys: &SystemDef) -> Result<()> {
        if self.dim() != sys.dim {
            return Err(Error::DimensionMismatch { expected: sys.dim, found: self.dim() });
        }
        for (k, &b) in self.breakpoints.iter().enumerate() {
            let left = self.left_limit(sys, b)?;
            let right = self.evaluate(sys, b)?;
            match self.jump_at(k) {
                Some(j) => {
                    let scale = 1e-12 * (1.0 + right.norm());
                    if (&left - &j.v_minus).norm() > scale || (&right - &j.v_plus).norm() > scale {
                        return Err(invalid(format!("jump at xi = {b} does not match the adjacent pieces")));
                    }
                    let rh = sys.rh_residual(&j.v_minus, &j.v_plus, b)?;
                    if rh > sys.tol.rh_tol {
                        return Err(invalid(format!("jump at xi = {b} violates Rankine-Hugoniot by {rh:e}")));
                    }
                }
                None => {
                    let gap = (&right - &left).norm();
                    if gap > 1e-10 {
                        return Err(invalid(format!("unrecorded discontinuity of size {gap:e} at xi = {b}")));
                    }
                }
            }
        }
        for (i, p) in self.pieces.iter().enumerate() {
            let states: Vec<Vector> = match p {
                Piece::Constant(v) => vec![v.clone()],
                Piece::SimpleWave(_) => {
                    let fan = self.fan_curve(sys, i)?.expect("fan piece");
                    fan.nodes().map(|(_, v, _)| v.clone()).collect()
                }
            };
            for v in states {
                if !sys.in_ball(&v) {
                    return Err(Error::OutOfBall(format!(
                        "profile state at distance {:e} (epsilon {:e})",
                        sys.distance(&v),
                        sys.epsilon
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = ProfileDoc::from(self);
        serde_json::to_string_pretty(&doc).expect("profile serializes")
    }

    pub fn from_json(text: &str) -> Result<Profile> {
        let doc: ProfileDoc = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        doc.into_profile()
    }

    /// `n` evenly spaced samples on `[a, b]` as CSV with `xi` first.
    pub fn to_csv(&self, sys: &SystemDef, a: f64, b: f64, n: usize) -> Result<String> {
        let m = self.dim();
        let mut out = String::from("# xi = y/x (ray slope); V_k = components of V = f^x(U)\nxi");
        for k in 1..=m {
            out.push_str(&format!(",V{k}"));
        }
        out.push('\n');
        let n = n.max(2);
        for i in 0..n {
            let xi = a + (b - a) * i as f64 / (n - 1) as f64;
            let v = self.evaluate(sys, xi)?;
            out.push_str(&format!("{xi}"));
            for x in v.iter() {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Incremental construction of a profile from left to right.
pub struct ProfileBuilder {
    halfplane: Halfplane,
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
    jumps: Vec<Jump>,
    fans: Vec<Option<FanCurve>>,
    current: Vector,
}

impl ProfileBuilder {
    pub fn new(halfplane: Halfplane, v0: Vector) -> Self {
        ProfileBuilder {
            halfplane,
            breakpoints: Vec::new(),
            pieces: vec![Piece::Constant(v0.clone())],
            jumps: Vec::new(),
            fans: vec![None],
            current: v0,
        }
    }

    pub fn current(&self) -> &Vector {
        &self.current
    }

    pub fn last_breakpoint(&self) -> Option<f64> {
        self.breakpoints.last().copied()
    }

    fn check_order(&self, xi: f64) -> Result<()> {
        match self.last_breakpoint() {
            Some(b) if !(xi > b) => Err(Error::DoesNotFit(format!(
                "wave at xi = {xi} does not follow the previous breakpoint {b}"
            ))),
            _ => Ok(()),
        }
    }

    /// Appends a jump from the current state.
    pub fn push_jump(&mut self, wave: &Wave) -> Result<()> {
        let xi = wave.speed[0];
        self.check_order(xi)?;
        self.breakpoints.push(xi);
        self.jumps.push(Jump {
            breakpoint: self.breakpoints.len() - 1,
            family: wave.family,
            kind: wave.kind,
            strength: wave.strength,
            v_minus: self.current.clone(),
            v_plus: wave.v_plus.clone(),
        });
        self.pieces.push(Piece::Constant(wave.v_plus.clone()));
        self.fans.push(None);
        self.current = wave.v_plus.clone();
        Ok(())
    }

    /// Appends a fan (which must start at the current state) and the constant
    /// state after it.
    pub fn push_fan(&mut self, fan: FanCurve) -> Result<()> {
        let (a, b) = (fan.xi_start(), fan.xi_end());
        self.check_order(a)?;
        if !(b > a) {
            return Err(Error::DoesNotFit(format!("degenerate fan [{a}, {b}]")));
        }
        self.breakpoints.push(a);
        self.breakpoints.push(b);
        self.pieces.push(Piece::SimpleWave(FanPiece {
            family: fan.family,
            v_start: fan.v_start.clone(),
            strength: fan.strength,
            xi_start: a,
            xi_end: b,
            xi_shift: 0.0,
        }));
        self.pieces.push(Piece::Constant(fan.v_end().clone()));
        self.current = fan.v_end().clone();
        self.fans.push(Some(fan));
        self.fans.push(None);
        Ok(())
    }

    pub fn finish(self) -> Result<Profile> {
        let p = Profile::from_parts(self.halfplane, self.breakpoints, self.pieces, self.jumps)?;
        let _ = p.fans.set(self.fans);
        Ok(p)
    }
}

// ---------------------------------------------------------------- JSON

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    schema: String,
    halfplane: Halfplane,
    breakpoints: Vec<f64>,
    pieces: Vec<PieceDoc>,
    jumps: Vec<JumpDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum PieceDoc {
    Constant {
        #[serde(with = "serde_vector")]
        state: Vector,
    },
    SimpleWave {
        family: usize,
        #[serde(with = "serde_vector")]
        v_start: Vector,
        strength: f64,
        xi_start: f64,
        xi_end: f64,
        #[serde(default)]
        xi_shift: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpDoc {
    breakpoint: usize,
    xi: f64,
    family: usize,
    kind: WaveKind,
    strength: f64,
    #[serde(with = "serde_vector")]
    v_minus: Vector,
    #[serde(with = "serde_vector")]
    v_plus: Vector,
}

// families are 1-based on disk
impl From<&Profile> for ProfileDoc {
    fn from(p: &Profile) -> Self {
        ProfileDoc {
            schema: SCHEMA.to_string(),
            halfplane: p.halfplane,
            breakpoints: p.breakpoints.clone(),
            pieces: p
                .pieces
                .iter()
                .map(|piece| match piece {
                    Piece::Constant(v) => PieceDoc::Constant { state: v.clone() },
                    Piece::SimpleWave(f) => PieceDoc::SimpleWave {
                        family: f.family + 1,
                        v_start: f.v_start.clone(),
                        strength: f.strength,
                        xi_start: f.xi_start,
                        xi_end: f.xi_end,
                        xi_shift: f.xi_shift,
                    },
                })
                .collect(),
            jumps: p
                .jumps
                .iter()
                .map(|j| JumpDoc {
                    breakpoint: j.breakpoint,
                    xi: p.breakpoints[j.breakpoint],
                    family: j.family + 1,
                    kind: j.kind,
                    strength: j.strength,
                    v_minus: j.v_minus.clone(),
                    v_plus: j.v_plus.clone(),
                })
                .collect(),
        }
    }
}

fn zero_based(family: usize) -> Result<usize> {
    family
        .checked_sub(1)
        .ok_or_else(|| invalid("families are numbered from 1"))
}

impl ProfileDoc {
    fn into_profile(self) -> Result<Profile> {
        if self.schema != SCHEMA {
            return Err(invalid(format!("unsupported schema {:?}", self.schema)));
        }
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in self.pieces {
            pieces.push(match p {
                PieceDoc::Constant { state } => Piece::Constant(state),
                PieceDoc::SimpleWave {
                    family,
                    v_start,
                    strength,
                    xi_start,
                    xi_end,
                    xi_shift,
                } => Piece::SimpleWave(FanPiece {
                    family: zero_based(family)?,
                    v_start,
                    strength,
                    xi_start,
                    xi_end,
                    xi_shift,
                }),
            });
        }
        let mut jumps = Vec::with_capacity(self.jumps.len());
        for j in self.jumps {
            match self.breakpoints.get(j.breakpoint) {
                Some(&b) if b == j.xi => {}
                _ => return Err(invalid(format!("jump xi {} does not match breakpoint {}", j.xi, j.breakpoint))),
            }
            jumps.push(Jump {
                breakpoint: j.breakpoint,
                family: zero_based(j.family)?,
                kind: j.kind,
                strength: j.strength,
                v_minus: j.v_minus,
                v_plus: j.v_plus,
            });
        }
        Profile::from_parts(self.halfplane, self.breakpoints, pieces, jumps)
    }
}

// ---------------------------------------------------------------- sectors

/// The interval `I^alpha = (lambda_bar - delta, lambda_bar + delta)` of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub family: usize,
    pub kind: FieldKind,
    pub forward_halfplane: Halfplane,
    pub center: f64,
    pub half_width: f64,
}

impl Sector {
    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, xi: f64) -> bool {
        xi > self.lo() && xi < self.hi()
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn direction(&self, halfplane: Halfplane) -> Direction {
        if halfplane == self.forward_halfplane {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorLayout {
    pub sectors: Vec<Sector>,
    pub delta_s: f64,
    pub delta_l: f64,
    pub epsilon: f64,
}

impl SectorLayout {
    pub fn sector_of(&self, xi: f64) -> Option<usize> {
        self.sectors.iter().position(|s| s.contains(xi))
    }

    /// Smallest gap between consecutive intervals.
    pub fn disjointness_margin(&self) -> f64 {
        self.sectors
            .windows(2)
            .map(|w| w[1].lo() - w[0].hi())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sector half widths `delta^alpha = safety * (delta_s + sup |lambda^alpha(V) -
/// lambda^alpha(V_bar)|)` over the ball samples.
pub fn sector_layout(sys: &SystemDef) -> Result<SectorLayout> {
    let m = sys.dim;
    let mut sup = vec![0.0f64; m];
    for v in &sys.samples {
        let lam = sys.eigen(v)?.values;
        for a in 0..m {
            sup[a] = sup[a].max((lam[a] - sys.lambda_bar[a]).abs());
        }
    }
    let sectors: Vec<Sector> = (0..m)
        .map(|a| Sector {
            family: a,
            kind: sys.fields[a].kind,
            forward_halfplane: sys.fields[a].forward_halfplane,
            center: sys.lambda_bar[a],
            half_width: sys.tol.sector_safety * (sys.delta_s + sup[a]),
        })
        .collect();
    for a in 1..m {
        if !(sectors[a].lo() > sectors[a - 1].hi()) {
            return Err(Error::SectorsOverlap(a - 1, a));
        }
    }
    Ok(SectorLayout {
        sectors,
        delta_s: sys.delta_s,
        delta_l: sys.delta_l,
        epsilon: sys.epsilon,
    })
}

// ---------------------------------------------------------------- saltus

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaltusJump {
    pub xi: f64,
    /// Family of the recorded jump; `None` for an unrecorded discontinuity.
    pub family: Option<usize>,
    #[serde(with = "serde_vector")]
    pub jump: Vector,
}

/// `V = V_S + V_L` with `V_S` the right-continuous jump part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaltusDecomposition {
    pub dim: usize,
    pub jumps: Vec<SaltusJump>,
    /// `sum |[V]|` over all jumps.
    pub total_jump: f64,
    /// Largest difference quotient of `V_L` over the sample grid.
    pub lipschitz_estimate: f64,
    pub grid_points: usize,
}

impl SaltusDecomposition {
    /// `V_S(xi) = sum_{eta <= xi} [V](eta)`.
    pub fn saltus(&self, xi: f64) -> Vector {
        let mut acc = Vector::zeros(self.dim);
        for j in &self.jumps {
            if j.xi <= xi {
                acc += &j.jump;
            } else {
                break;
            }
        }
        acc
    }

    /// `V_L(xi) = V(xi) - V_S(xi)`.
    pub fn regular(&self, sys: &SystemDef, profile: &Profile, xi: f64) -> Result<Vector> {
        Ok(profile.evaluate(sys, xi)? - self.saltus(xi))
    }

    /// Sum of `|[V]|` over jumps of one family.
    pub fn family_total(&self, family: usize) -> f64 {
        self.jumps
            .iter()
            .filter(|j| j.family == Some(family))
            .map(|j| j.jump.norm())
            .sum()
    }
}

/// Padded `xi` range covering every breakpoint.
pub fn sampling_range(profile: &Profile) -> (f64, f64) {
    match profile.extent() {
        Some((a, b)) => {
            let pad = (0.05 * (b - a)).max(1e-3);
            (a - pad, b + pad)
        }
        None => (-1.0, 1.0),
    }
}

const SALTUS_GRID: usize = 2048;
const FAN_GRID: usize = 64;

pub fn saltus_decompose(sys: &SystemDef, profile: &Profile) -> Result<SaltusDecomposition> {
    let mut jumps = Vec::new();
    for (k, &b) in profile.breakpoints().iter().enumerate() {
        let jump = profile.evaluate(sys, b)? - profile.left_limit(sys, b)?;
        let recorded = profile.jump_at(k);
        if recorded.is_some() || jump.norm() > 0.0 {
            jumps.push(SaltusJump {
                xi: b,
                family: recorded.map(|j| j.family),
                jump,
            });
        }
    }
    let total_jump = jumps.iter().map(|j| j.jump.norm()).sum();
    let mut dec = SaltusDecomposition {
        dim: profile.dim(),
        jumps,
        total_jump,
        lipschitz_estimate: 0.0,
        grid_points: 0,
    };

    let (lo, hi) = sampling_range(profile);
    let mut grid: Vec<f64> = (0..=SALTUS_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / SALTUS_GRID as f64)
        .collect();
    grid.extend_from_slice(profile.breakpoints());
    for p in profile.pieces() {
        if let Piece::SimpleWave(f) = p {
            for i in 1..FAN_GRID {
                grid.push(f.lo() + (f.hi() - f.lo()) * i as f64 / FAN_GRID as f64);
            }
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();
    let values: Vec<Vector> = grid
        .iter()
        .map(|&xi| dec.regular(sys, profile, xi))
        .collect::<Result<_>>()?;
    let mut lip: f64 = 0.0;
    for i in 1..grid.len() {
        let d = grid[i] - grid[i - 1];
        if d > 1e-13 {
            lip = lip.max((&values[i] - &values[i - 1]).norm() / d);
        }
    }
    dec.lipschitz_estimate = lip;
    dec.grid_points = grid.len();
    Ok(dec)
}

// ---------------------------------------------------------------- variation

const TV_POINTS: usize = 1024;

fn polyline_length(sys: &SystemDef, fan: &FanCurve, s0: f64, s1: f64, n: usize) -> Result<f64> {
    let mut prev = fan.eval_s(sys, s0)?;
    let mut len = 0.0;
    for i in 1..=n {
        let v = fan.eval_s(sys, s0 + (s1 - s0) * i as f64 / n as f64)?;
        len += (&v - &prev).norm();
        prev = v;
    }
    Ok(len)
}

/// Total variation of `V` over `(a, b]`: discontinuities at breakpoints in
/// `(a, b]` plus the arc length of fan pieces, sampled with 1024 points and
/// refined by doubling until the change is below `1e-8`.
pub fn total_variation(sys: &SystemDef, profile: &Profile, a: f64, b: f64) -> Result<f64> {
    let mut tv = 0.0;
    for (k, &x) in profile.breakpoints().iter().enumerate() {
        if x > a && x <= b {
            tv += profile.discontinuity(sys, k)?;
        }
    }
    for (i, p) in profile.pieces().iter().enumerate() {
        let Piece::SimpleWave(f) = p else { continue };
        let lo = f.lo().max(a);
        let hi = f.hi().min(b);
        if !(hi > lo) {
            continue;
        }
        let fan = profile.fan_curve(sys, i)?.expect("fan piece");
        let s0 = fan.s_at(sys, lo - f.xi_shift)?;
        let s1 = fan.s_at(sys, hi - f.xi_shift)?;
        let mut n = TV_POINTS;
        let mut len = polyline_length(sys, fan, s0, s1, n)?;
        for _ in 0..6 {
            n *= 2;
            let finer = polyline_length(sys, fan, s0, s1, n)?;
            let done = (finer - len).abs() < 1e-8;
            len = finer;
            if done {
                break;
            }
        }
        tv += len;
    }
    Ok(tv)
}

/// Total variation over the whole line.
pub fn total_variation_all(sys: &SystemDef, profile: &Profile) -> Result<f64> {
    total_variation(sys, profile, f64::NEG_INFINITY, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::system::build_system;
    use crate::waves::{shock_wave, wave_fan};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euler() -> SystemDef {
        build_system(&SystemConfig::euler(1.4, [1.0, 2.0, 0.0], 0.05)).unwrap()
    }

    fn shock_profile(sys: &SystemDef) -> Profile {
        let w = shock_wave(sys, &sys.v_bar, 0, -sys.epsilon / 8.0).unwrap();
        let mut b = ProfileBuilder::new(Halfplane::Right, sys.v_bar.clone());
        b.push_jump(&w).unwrap();
        b.finish().unwrap()
    }

    fn fan_profile(sys: &SystemDef, s: f64) -> Profile {
        let fan = wave_fan(sys, &sys.v_bar, 2, s).unwrap();
        let mut b = ProfileBuilder::new(Halfplane::Right, sys.v_bar.clone());
        b.push_fan(fan).unwrap();
        b.finish().unwrap()
    }

    #[test]
    fn constant_profile_evaluates_everywhere() {
        let sys = euler();
        let p = Profile::constant(Halfplane::Right, sys.v_bar.clone());
        for xi in [-3.0, 0.0, 0.4, 7.0] {
            assert_eq!(p.evaluate(&sys, xi).unwrap(), sys.v_bar);
            assert_eq!(p.left_limit(&sys, xi).unwrap(), sys.v_bar);
        }
        p.check_invariants(&sys).unwrap();
        assert_eq!(total_variation_all(&sys, &p).unwrap(), 0.0);
    }

    #[test]
    fn right_continuous_at_jumps() {
        let sys = euler();
        let p = shock_profile(&sys);
        p.check_invariants(&sys).unwrap();
        let j = &p.jumps()[0];
        let xi = p.jump_xi(j);
        assert_eq!(p.evaluate(&sys, xi).unwrap(), j.v_plus);
        assert_eq!(p.left_limit(&sys, xi).unwrap(), j.v_minus);
        let tv = total_variation_all(&sys, &p).unwrap();
        assert!((tv - j.size()).abs() < 1e-15);
    }

    #[test]
    fn fan_piece_matches_fan_evaluation() {
        let sys = euler();
        let s = sys.epsilon / 4.0;
        let p = fan_profile(&sys, s);
        p.check_invariants(&sys).unwrap();
        let fan = wave_fan(&sys, &sys.v_bar, 2, s).unwrap();
        for k in 1..10 {
            let xi = fan.xi_start() + (fan.xi_end() - fan.xi_start()) * k as f64 / 10.0;
            let d = (p.evaluate(&sys, xi).unwrap() - fan.eval(&sys, xi).unwrap()).norm();
            assert!(d <= 1e-10);
        }
        let tv = total_variation_all(&sys, &p).unwrap();
        assert!((tv - s).abs() < 1e-6, "tv {tv} vs {s}");
    }

    #[test]
    fn total_variation_is_additive() {
        let sys = euler();
        let p = fan_profile(&sys, sys.epsilon / 4.0);
        let (a, b) = p.extent().unwrap();
        let m = 0.3 * a + 0.7 * b;
        let whole = total_variation(&sys, &p, a - 1.0, b + 1.0).unwrap();
        let left = total_variation(&sys, &p, a - 1.0, m).unwrap();
        let right = total_variation(&sys, &p, m, b + 1.0).unwrap();
        assert!((whole - left - right).abs() < 1e-9);
    }

    #[test]
    fn saltus_of_single_jump_is_a_step() {
        let sys = euler();
        let p = shock_profile(&sys);
        let dec = saltus_decompose(&sys, &p).unwrap();
        let j = &p.jumps()[0];
        let xi = p.jump_xi(j);
        assert_eq!(dec.jumps.len(), 1);
        assert_eq!(dec.saltus(xi - 1e-9).norm(), 0.0);
        assert_eq!(dec.saltus(xi), &j.v_plus - &j.v_minus);
        // V_L is constant
        assert!(dec.lipschitz_estimate < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x = xi + rng.random_range(-0.05..0.05);
            let v = p.evaluate(&sys, x).unwrap();
            let back = dec.saltus(x) + dec.regular(&sys, &p, x).unwrap();
            assert!((back - v).norm() <= 1e-15);
        }
    }

    #[test]
    fn pure_fan_has_no_saltus() {
        let sys = euler();
        let p = fan_profile(&sys, sys.epsilon / 4.0);
        let dec = saltus_decompose(&sys, &p).unwrap();
        assert!(dec.jumps.is_empty());
        assert!(dec.lipschitz_estimate.is_finite() && dec.lipschitz_estimate > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let sys = euler();
        for p in [shock_profile(&sys), fan_profile(&sys, 0.01)] {
            let text = p.to_json();
            assert!(text.contains("selfsim/1"));
            let back = Profile::from_json(&text).unwrap();
            assert_eq!(back, p);
            assert_eq!(back.to_json(), text);
            back.check_invariants(&sys).unwrap();
        }
        // families are 1-based on disk
        let text = shock_profile(&sys).to_json();
        assert!(text.contains("\"family\": 1"));
    }

    #[test]
    fn malformed_profiles_are_rejected() {
        let v = Vector::from_vec(vec![1.0, 2.0]);
        let r = Profile::from_parts(
            Halfplane::Right,
            vec![0.5, 0.2],
            vec![Piece::Constant(v.clone()), Piece::Constant(v.clone()), Piece::Constant(v.clone())],
            vec![],
        );
        assert_eq!(r.unwrap_err().name(), "InvalidProfile");
        let r = Profile::from_parts(Halfplane::Right, vec![0.5], vec![Piece::Constant(v)], vec![]);
        assert!(r.is_err());
    }

    #[test]
    fn csv_has_xi_first() {
        let sys = euler();
        let p = shock_profile(&sys);
        let csv = p.to_csv(&sys, -1.0, 0.0, 5).unwrap();
        let header = csv.lines().nth(1).unwrap();
        assert_eq!(header, "xi,V1,V2,V3");
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn euler_sector_layout() {
        let sys = euler();
        let layout = sector_layout(&sys).unwrap();
        let c = 1.0 / 3f64.sqrt();
        let want = [-c, 0.0, c];
        for (s, w) in layout.sectors.iter().zip(want) {
            assert!((s.center - w).abs() < 1e-10);
        }
        assert!(layout.disjointness_margin() > 0.0);
        let small = build_system(&SystemConfig::euler(1.4, [1.0, 2.0, 0.0], 0.01)).unwrap();
        assert!(sector_layout(&small).unwrap().disjointness_margin() > 0.0);
    }

    #[test]
    fn sector_widths_shrink_with_epsilon() {
        let mut prev = f64::INFINITY;
        for eps in [0.08, 0.04, 0.02, 0.01] {
            let sys = build_system(&SystemConfig::euler(1.4, [1.0, 2.0, 0.0], eps)).unwrap();
            let layout = sector_layout(&sys).unwrap();
            let w = layout.sectors.iter().map(|s| s.half_width).fold(0.0, f64::max);
            assert!(w < prev, "half width {w} did not shrink at eps {eps}");
            prev = w;
        }
    }
}
