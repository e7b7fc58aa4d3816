use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_selfsim"));
    c.env_remove("SELFSIM_TOL_FILE");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["init", "--out", "sys.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let p = dir.path().to_path_buf();
    (dir, p)
}

#[test]
fn sectors_for_mach_two() {
    let (_d, dir) = setup();
    let o = run(&dir, &["sectors", "--system", "sys.json"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("Mach angle mu = 0.5235988 rad"), "{out}");
    assert!(out.contains("-0.5773503") && out.contains(" 0.5773503") && out.contains(" 0.0000000"));

    let o = run(&dir, &["sectors", "--system", "sys.json", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let centers: Vec<f64> = v["sectors"].as_array().unwrap().iter().map(|s| s["center"].as_f64().unwrap()).collect();
    let want = 1.0 / 3f64.sqrt();
    assert!((centers[0] + want).abs() < 1e-12 && centers[1].abs() < 1e-12 && (centers[2] - want).abs() < 1e-12);
    assert!((v["mach_angle"].as_f64().unwrap() - std::f64::consts::FRAC_PI_6).abs() < 1e-12);
}

#[test]
fn generated_forward_shock_verifies() {
    let (_d, dir) = setup();
    let o = run(&dir, &["generate", "--system", "sys.json", "--preset", "forward-shock", "--out", "p.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&dir, &["verify", "--system", "sys.json", "--profile", "p.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: PASS"));
}

#[test]
fn mutated_fixture_fails_with_reason() {
    let (_d, dir) = setup();
    run(&dir, &["generate", "--preset", "forward-shock", "--out", "p.json"]);
    let o = run(&dir, &["mutate", "--profile", "p.json", "--mutation", "side-flip", "--out", "bad.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&dir, &["verify", "--profile", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("InadmissibleShock"), "{}", stdout(&o));

    let o = run(&dir, &["mutate", "--profile", "p.json", "--mutation", "duplicate-wave", "--out", "dup.json"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&dir, &["classify", "--profile", "dup.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("MultipleForwardWaves"), "{}", stdout(&o));
}

#[test]
fn halfplane_flip_fails_entropy() {
    let (_d, dir) = setup();
    run(&dir, &["generate", "--preset", "forward-shock", "--out", "p.json"]);
    let o = run(&dir, &["verify", "--profile", "p.json", "--halfplane", "x<0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("EntropyViolation"));
}

#[test]
fn every_preset_round_trips() {
    let (_d, dir) = setup();
    for name in [
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
    ] {
        let o = run(&dir, &["generate", "--preset", name, "--out", "p.json"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let o = run(&dir, &["verify", "--profile", "p.json", "--pairs", "64"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        let o = run(&dir, &["decompose", "--profile", "p.json", "--out", "d.json"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let d: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("d.json")).unwrap()).unwrap();
        assert_eq!(d["schema"], "selfsim/1");
        assert!(d["total_variation"].as_f64().unwrap().is_finite());
    }
}

#[test]
fn outputs_are_deterministic() {
    let (_d, dir) = setup();
    for (seed, out) in [("7", "a.json"), ("7", "b.json")] {
        run(&dir, &["generate", "--preset", "riemann", "--seed", seed, "--out", out]);
    }
    let a = std::fs::read(dir.join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.join("b.json")).unwrap());
    let c1 = run(&dir, &["curves", "--family", "1", "--s-range", "-0.01:0.01", "--n", "5"]);
    let c2 = run(&dir, &["curves", "--family", "1", "--s-range", "-0.01:0.01", "--n", "5", "--jobs", "1"]);
    assert_eq!(c1.stdout, c2.stdout);
    let text = stdout(&c1);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next().unwrap(), "xi,s,E,shock_V1,shock_V2,shock_V3,wave_V1,wave_V2,wave_V3");
    assert_eq!(lines.count(), 5);
}

#[test]
fn solve_between_states() {
    let (_d, dir) = setup();
    std::fs::write(dir.join("l.json"), "[1.0, 2.0, 0.0]").unwrap();
    std::fs::write(dir.join("r.json"), r#"{"variables": "U", "state": [1.001, 2.0, 0.001]}"#).unwrap();
    let o = run(&dir, &["solve", "--left", "l.json", "--right", "r.json", "--out", "s.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("strengths"));
    let o = run(&dir, &["verify", "--profile", "s.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let o = run(&dir, &["solve", "--left", "l.json", "--right", "r.json", "--halfplane", "x<0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("BackwardRiemann"));
}

#[test]
fn usage_and_numeric_exit_codes() {
    let (_d, dir) = setup();
    assert_eq!(run(&dir, &["verify", "--profile", "missing.json"]).status.code(), Some(1));
    assert_eq!(run(&dir, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&dir, &["generate", "--preset", "no-such-preset"]).status.code(), Some(1));
    assert_eq!(run(&dir, &["curves", "--family", "9", "--s-range", "0:1"]).status.code(), Some(1));
    // far outside the ball
    let o = run(&dir, &["curves", "--family", "1", "--s-range", "-1:1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: "));
    run(&dir, &["generate", "--preset", "backward-shock", "--out", "b.json"]);
    let o = run(&dir, &["mutate", "--profile", "b.json", "--mutation", "adjacent-fans"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("InapplicableMutation"));
}

#[test]
fn tolerance_file_overrides() {
    let (_d, dir) = setup();
    run(&dir, &["generate", "--preset", "forward-shock", "--out", "p.json"]);
    std::fs::write(dir.join("tol.json"), r#"{"weak_residual_tol": -1.0}"#).unwrap();
    let o = bin()
        .current_dir(&dir)
        .env("SELFSIM_TOL_FILE", dir.join("tol.json"))
        .args(["verify", "--profile", "p.json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    std::fs::write(dir.join("tol.json"), r#"{"no_such_key": 1}"#).unwrap();
    let o = bin()
        .current_dir(&dir)
        .env("SELFSIM_TOL_FILE", dir.join("tol.json"))
        .args(["sectors"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sample_and_decompose_fan() {
    let (_d, dir) = setup();
    run(&dir, &["generate", "--preset", "forward-fan", "--out", "f.json"]);
    let o = run(&dir, &["sample", "--profile", "f.json", "--n", "9"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 11);
    let o = run(&dir, &["decompose", "--profile", "f.json"]);
    let d: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(d["jumps"].as_array().unwrap().len(), 0);
    let fan = &d["fans"][0];
    assert_eq!(fan["family"], 3);
    assert!((d["total_variation"].as_f64().unwrap() - fan["strength"].as_f64().unwrap()).abs() < 1e-6);
}

#[test]
fn fixture_catalog_is_current_and_passes() {
    let catalog = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/selfsim-1");
    let system = catalog.join("system.json");
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    let mut entries: Vec<_> = std::fs::read_dir(&catalog).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        if name == "system" {
            continue;
        }
        seen += 1;
        let out = dir.path().join("p.json");
        let o = bin()
            .args(["generate", "--system"])
            .arg(&system)
            .args(["--preset", &name, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{name}");
        assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&path).unwrap(), "{name} differs from the catalog");
        let o = bin().args(["verify", "--system"]).arg(&system).arg("--profile").arg(&path).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
    }
    assert_eq!(seen, 10);
}
