use std::fmt::Write as _;
use std::path::Path;

use selfsim::config::SystemKind;
use selfsim::euler::{mach_geometry, pressure_from_config, EulerState};
use selfsim::generator::{mutate, preset, standard_mutations, Mutation};
use selfsim::profile::{sampling_range, saltus_decompose, sector_layout, total_variation_all, Piece, Profile};
use selfsim::riemann::solve_riemann_detailed;
use selfsim::system::{FieldKind, Halfplane, SystemDef};
use selfsim::verifier::{classify_structure, verify, StructureVerdict, DEFAULT_PAIRS};
use selfsim::waves::{entropy_dissipation, shock_curve, simple_wave_curve};
use selfsim::SystemConfig;
use serde::Serialize;

use crate::io::{load_profile, load_state, load_system, num, parse_range, to_json, write_out, CliError, CliResult};

/// Process exit status for a completed command.
pub type Status = i32;

fn kind_label(k: FieldKind) -> &'static str {
    match k {
        FieldKind::GenuinelyNonlinear => "GNL",
        FieldKind::LinearlyDegenerate => "LD",
    }
}

fn family_index(sys: &SystemDef, family: usize) -> CliResult<usize> {
    if family == 0 || family > sys.dim {
        return Err(CliError::Usage(format!("family must be in 1..={}, got {family}", sys.dim)));
    }
    Ok(family - 1)
}

pub fn curves(system: Option<&Path>, family: usize, s_range: &str, n: usize, out: Option<&Path>) -> CliResult<Status> {
    let (_, sys) = load_system(system)?;
    let alpha = family_index(&sys, family)?;
    let (a, b) = parse_range(s_range)?;
    let n = n.max(2);
    let m = sys.dim;
    let v0 = &sys.v_bar;
    let mut csv = format!(
        "# family {family} wave curves from the background state; xi: shock speed (ray slope), s: curve parameter, E: entropy dissipation [q] - xi [e]; shock_Vk / wave_Vk: end state on the shock / simple-wave curve\nxi,s,E"
    );
    for prefix in ["shock", "wave"] {
        for k in 1..=m {
            write!(csv, ",{prefix}_V{k}").unwrap();
        }
    }
    csv.push('\n');
    for i in 0..n {
        let s = a + (b - a) * i as f64 / (n - 1) as f64;
        let (sv, xi) = shock_curve(&sys, v0, alpha, s)?;
        let e = if s == 0.0 { 0.0 } else { entropy_dissipation(&sys, v0, &sv, xi)? };
        let rv = simple_wave_curve(&sys, v0, alpha, s)?;
        write!(csv, "{},{},{}", num(xi), num(s), num(e)).unwrap();
        for &x in sv.iter().chain(rv.iter()) {
            write!(csv, ",{}", num(x)).unwrap();
        }
        csv.push('\n');
    }
    write_out(out, &csv)?;
    Ok(0)
}

pub fn solve(system: Option<&Path>, left: &Path, right: &Path, halfplane: Option<&str>, out: Option<&Path>) -> CliResult<Status> {
    let (_, sys) = load_system(system)?;
    let vl = load_state(&sys, left)?;
    let vr = load_state(&sys, right)?;
    if let Some(h) = halfplane {
        let hp = Halfplane::parse(h).map_err(|e| CliError::Usage(e.to_string()))?;
        if sys.fields.iter().any(|f| f.forward_halfplane != hp) {
            return Err(selfsim::Error::BackwardRiemann.into());
        }
    }
    let sol = solve_riemann_detailed(&sys, &vl, &vr)?;
    let mut text = sol.profile.to_json();
    text.push('\n');
    write_out(out, &text)?;
    if out.is_some() {
        let s: Vec<String> = sol.strengths.iter().map(|s| format!("{s:.6e}")).collect();
        println!("strengths: [{}], Newton iterations: {}", s.join(", "), sol.iterations);
    }
    Ok(0)
}

fn structure_table(v: &StructureVerdict) -> String {
    let mut t = String::new();
    writeln!(
        t,
        "{:<7} {:<4} {:<9} {:>25} {:>6} {:>8} {:>5}  {:<7} reasons",
        "family", "kind", "direction", "interval", "shocks", "contacts", "fans", "verdict"
    )
    .unwrap();
    for s in &v.sectors {
        let reasons: Vec<String> = s.reasons.iter().map(|r| r.to_string()).collect();
        writeln!(
            t,
            "{:<7} {:<4} {:<9} {:>25} {:>6} {:>8} {:>5}  {:<7} {}",
            s.family + 1,
            kind_label(s.kind),
            s.direction.to_string(),
            format!("({:.6}, {:.6})", s.interval[0], s.interval[1]),
            s.shocks,
            s.contacts,
            s.fans,
            if s.pass { "PASS" } else { "FAIL" },
            reasons.join(", ")
        )
        .unwrap();
    }
    let outside: Vec<String> = v.outside.iter().map(|r| r.to_string()).collect();
    writeln!(
        t,
        "outside sectors: {}",
        if outside.is_empty() { "constant".to_string() } else { outside.join(", ") }
    )
    .unwrap();
    t
}

fn load_for_check(system: Option<&Path>, profile: &Path, halfplane: Option<&str>) -> CliResult<(SystemDef, Profile)> {
    let (_, sys) = load_system(system)?;
    let mut p = load_profile(profile)?;
    if let Some(h) = halfplane {
        p.halfplane = Halfplane::parse(h).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if p.dim() != sys.dim {
        return Err(CliError::Usage(format!("profile has dimension {}, system has {}", p.dim(), sys.dim)));
    }
    Ok((sys, p))
}

pub fn verify_cmd(
    system: Option<&Path>,
    profile: &Path,
    halfplane: Option<&str>,
    pairs: Option<usize>,
    report: Option<&Path>,
) -> CliResult<Status> {
    let (sys, p) = load_for_check(system, profile, halfplane)?;
    let layout = sector_layout(&sys)?;
    let rep = verify(&sys, &layout, &p, pairs.unwrap_or(DEFAULT_PAIRS))?;
    let mut t = String::new();
    writeln!(t, "halfplane {}", p.halfplane).unwrap();
    writeln!(
        t,
        "weak residual      {:.3e} (tolerance {:.0e}, {} pairs)  {}",
        rep.weak.max_residual,
        sys.tol.weak_residual_tol,
        rep.weak.pairs,
        if rep.weak.pass { "PASS" } else { "FAIL" }
    )
    .unwrap();
    writeln!(
        t,
        "entropy violation  {:.3e} (tolerance {:.0e})  {}",
        rep.entropy.worst_violation.max(0.0),
        sys.tol.entropy_residual_tol,
        if rep.entropy.pass { "PASS" } else { "FAIL" }
    )
    .unwrap();
    t.push_str(&structure_table(&rep.structure));
    let mut reasons: Vec<String> = rep.structure.reasons().iter().map(|r| r.to_string()).collect();
    if !rep.weak.pass {
        reasons.insert(0, "WeakResidual".into());
    }
    if !rep.entropy.pass {
        reasons.insert(0, "EntropyViolation".into());
    }
    if rep.pass {
        writeln!(t, "verdict: PASS").unwrap();
    } else {
        writeln!(t, "verdict: FAIL ({})", reasons.join(", ")).unwrap();
    }
    print!("{t}");
    if let Some(path) = report {
        write_out(Some(path), &to_json(&rep))?;
    }
    Ok(if rep.pass { 0 } else { 2 })
}

pub fn classify(system: Option<&Path>, profile: &Path, halfplane: Option<&str>) -> CliResult<Status> {
    let (sys, p) = load_for_check(system, profile, halfplane)?;
    let layout = sector_layout(&sys)?;
    let v = classify_structure(&sys, &layout, &p)?;
    print!("halfplane {}\n{}", p.halfplane, structure_table(&v));
    println!("verdict: {}", if v.pass { "PASS" } else { "FAIL" });
    Ok(if v.pass { 0 } else { 2 })
}

pub fn generate(system: Option<&Path>, name: &str, n: Option<usize>, seed: u64, out: Option<&Path>) -> CliResult<Status> {
    let (_, sys) = load_system(system)?;
    let layout = sector_layout(&sys)?;
    let p = preset(&sys, &layout, name, n, seed).map_err(|e| match e {
        selfsim::Error::InvalidConfig(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let mut text = p.to_json();
    text.push('\n');
    write_out(out, &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct JumpDoc {
    xi: f64,
    family: Option<usize>,
    jump: Vec<f64>,
    size: f64,
}

#[derive(Serialize)]
struct FanDoc {
    family: usize,
    strength: f64,
    xi_start: f64,
    xi_end: f64,
}

#[derive(Serialize)]
struct DecompositionDoc {
    schema: &'static str,
    halfplane: Halfplane,
    total_variation: f64,
    total_jump: f64,
    lipschitz_estimate: f64,
    grid_points: usize,
    jumps: Vec<JumpDoc>,
    fans: Vec<FanDoc>,
}

pub fn decompose(system: Option<&Path>, profile: &Path, out: Option<&Path>) -> CliResult<Status> {
    let (sys, p) = load_for_check(system, profile, None)?;
    let d = saltus_decompose(&sys, &p)?;
    let doc = DecompositionDoc {
        schema: selfsim::SCHEMA,
        halfplane: p.halfplane,
        total_variation: total_variation_all(&sys, &p)?,
        total_jump: d.total_jump,
        lipschitz_estimate: d.lipschitz_estimate,
        grid_points: d.grid_points,
        jumps: d
            .jumps
            .iter()
            .map(|j| JumpDoc {
                xi: j.xi,
                family: j.family.map(|f| f + 1),
                jump: j.jump.iter().copied().collect(),
                size: j.jump.norm(),
            })
            .collect(),
        fans: p
            .pieces()
            .iter()
            .filter_map(|pc| match pc {
                Piece::SimpleWave(f) => Some(FanDoc {
                    family: f.family + 1,
                    strength: f.strength,
                    xi_start: f.lo(),
                    xi_end: f.hi(),
                }),
                Piece::Constant(_) => None,
            })
            .collect(),
    };
    write_out(out, &to_json(&doc))?;
    Ok(0)
}

/// Mach angle of the background for Euler configurations.
fn mach_angle(cfg: &SystemConfig) -> CliResult<Option<f64>> {
    let SystemKind::IsentropicEuler { pressure } = &cfg.system else {
        return Ok(None);
    };
    let law = pressure_from_config(pressure)?;
    let u = EulerState::new(cfg.background[0], cfg.background[1], cfg.background[2])?;
    let pr = u.primal(law.as_ref());
    let speed = pr.u.hypot(pr.v);
    Ok(Some(mach_geometry(speed / pr.c)?.mu))
}

#[derive(Serialize)]
struct SectorDoc {
    family: usize,
    kind: &'static str,
    center: f64,
    half_width: f64,
    lo: f64,
    hi: f64,
}

#[derive(Serialize)]
struct SectorsDoc {
    schema: &'static str,
    epsilon: f64,
    delta_s: f64,
    delta_l: f64,
    mach_angle: Option<f64>,
    sectors: Vec<SectorDoc>,
}

pub fn sectors(system: Option<&Path>, json: bool) -> CliResult<Status> {
    let (cfg, sys) = load_system(system)?;
    let layout = sector_layout(&sys)?;
    let mu = mach_angle(&cfg)?;
    if json {
        let doc = SectorsDoc {
            schema: selfsim::SCHEMA,
            epsilon: sys.epsilon,
            delta_s: layout.delta_s,
            delta_l: layout.delta_l,
            mach_angle: mu,
            sectors: layout
                .sectors
                .iter()
                .map(|s| SectorDoc {
                    family: s.family + 1,
                    kind: kind_label(s.kind),
                    center: s.center,
                    half_width: s.half_width,
                    lo: s.lo(),
                    hi: s.hi(),
                })
                .collect(),
        };
        print!("{}", to_json(&doc));
        return Ok(0);
    }
    println!("epsilon  {}", sys.epsilon);
    println!("delta_s  {:.7}", layout.delta_s);
    println!("delta_L  {:.7}", layout.delta_l);
    if let Some(mu) = mu {
        println!("Mach angle mu = {mu:.7} rad");
    }
    println!("{:<7} {:<4} {:>11} {:>11} {:>11} {:>11}", "family", "kind", "center", "delta", "lo", "hi");
    for s in &layout.sectors {
        println!(
            "{:<7} {:<4} {:>11.7} {:>11.7} {:>11.7} {:>11.7}",
            s.family + 1,
            kind_label(s.kind),
            s.center,
            s.half_width,
            s.lo(),
            s.hi()
        );
    }
    Ok(0)
}

pub fn parse_mutation(
    kind: &str,
    delta: Option<f64>,
    component: Option<usize>,
    offset: Option<f64>,
    gap: Option<f64>,
) -> CliResult<Mutation> {
    let defaults = standard_mutations();
    let pick = |f: fn(&Mutation) -> bool| *defaults.iter().find(|m| f(m)).expect("standard mutation");
    let m = match kind.replace('_', "-").as_str() {
        "speed-shift" => match pick(|m| matches!(m, Mutation::SpeedShift { .. })) {
            Mutation::SpeedShift { delta: d } => Mutation::SpeedShift { delta: delta.unwrap_or(d) },
            _ => unreachable!(),
        },
        "side-flip" => Mutation::SideFlip,
        "duplicate-wave" => match pick(|m| matches!(m, Mutation::DuplicateWave { .. })) {
            Mutation::DuplicateWave { offset: o } => Mutation::DuplicateWave { offset: offset.unwrap_or(o) },
            _ => unreachable!(),
        },
        "rh-violation" => match pick(|m| matches!(m, Mutation::RhViolation { .. })) {
            Mutation::RhViolation { component: c, delta: d } => {
                let c = match component {
                    Some(0) => return Err(CliError::Usage("components are numbered from 1".into())),
                    Some(k) => k - 1,
                    None => c,
                };
                Mutation::RhViolation {
                    component: c,
                    delta: delta.unwrap_or(d),
                }
            }
            _ => unreachable!(),
        },
        "adjacent-fans" => match pick(|m| matches!(m, Mutation::AdjacentFans { .. })) {
            Mutation::AdjacentFans { gap: g } => Mutation::AdjacentFans { gap: gap.unwrap_or(g) },
            _ => unreachable!(),
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown mutation {other:?}; known: speed-shift, side-flip, duplicate-wave, rh-violation, adjacent-fans"
            )))
        }
    };
    Ok(m)
}

pub fn mutate_cmd(system: Option<&Path>, profile: &Path, m: Mutation, out: Option<&Path>) -> CliResult<Status> {
    let (sys, p) = load_for_check(system, profile, None)?;
    let q = mutate(&sys, &p, m)?;
    let mut text = q.to_json();
    text.push('\n');
    write_out(out, &text)?;
    Ok(0)
}

pub fn sample(system: Option<&Path>, profile: &Path, range: Option<&str>, n: usize, out: Option<&Path>) -> CliResult<Status> {
    let (sys, p) = load_for_check(system, profile, None)?;
    let (a, b) = match range {
        Some(r) => parse_range(r)?,
        None => sampling_range(&p),
    };
    write_out(out, &p.to_csv(&sys, a, b, n)?)?;
    Ok(0)
}

/// Default system file contents, for `init`.
pub fn default_system() -> String {
    let mut s = SystemConfig::euler(1.4, [1.0, 2.0, 0.0], 0.05).to_json();
    s.push('\n');
    s
}
