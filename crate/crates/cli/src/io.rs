//! File input/output and error plumbing shared by the subcommands.

use std::fmt;
use std::fs;
use std::path::Path;

use selfsim::numerics::Vector;
use selfsim::profile::Profile;
use selfsim::system::{build_system, SystemDef};
use selfsim::{SystemConfig, Tolerances};
use serde::Deserialize;

pub const TOL_ENV: &str = "SELFSIM_TOL_FILE";

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed files: exit 1.
    Usage(String),
    /// A numerical failure inside the library: exit 3.
    Numeric(selfsim::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numeric(e) => write!(f, "error: {}: {e}", e.name()),
        }
    }
}

impl From<selfsim::Error> for CliError {
    fn from(e: selfsim::Error) -> Self {
        CliError::Numeric(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when no path is given.
pub fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Overlays the keys of the tolerance file named by `SELFSIM_TOL_FILE`.
fn apply_tolerance_file(tol: &Tolerances) -> CliResult<Tolerances> {
    let Ok(path) = std::env::var(TOL_ENV) else {
        return Ok(tol.clone());
    };
    let text = read_text(Path::new(&path))?;
    let patch: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let serde_json::Value::Object(patch) = patch else {
        return Err(CliError::Usage(format!("{path}: expected a JSON object")));
    };
    let mut base = serde_json::to_value(tol).expect("tolerances serialize");
    let obj = base.as_object_mut().expect("tolerances are an object");
    for (k, v) in patch {
        obj.insert(k, v);
    }
    serde_json::from_value(base).map_err(|e| CliError::Usage(format!("{path}: {e}")))
}

/// The system configuration from `path`, or Euler at Mach 2 with `eps = 0.05`.
pub fn load_config(path: Option<&Path>) -> CliResult<SystemConfig> {
    let mut cfg = match path {
        Some(p) => SystemConfig::from_json(&read_text(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        None => SystemConfig::euler(1.4, [1.0, 2.0, 0.0], 0.05),
    };
    cfg.tolerances = apply_tolerance_file(&cfg.tolerances)?;
    Ok(cfg)
}

pub fn load_system(path: Option<&Path>) -> CliResult<(SystemConfig, SystemDef)> {
    let cfg = load_config(path)?;
    let sys = build_system(&cfg)?;
    Ok((cfg, sys))
}

pub fn load_profile(path: &Path) -> CliResult<Profile> {
    Profile::from_json(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
enum Variables {
    #[serde(alias = "u")]
    U,
    #[serde(alias = "v")]
    V,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateDoc {
    Plain(Vec<f64>),
    Tagged {
        #[serde(default = "default_variables")]
        variables: Variables,
        state: Vec<f64>,
    },
}

fn default_variables() -> Variables {
    Variables::U
}

/// Reads a state file and returns it in V-coordinates.
///
/// Accepted forms: a bare array of conserved variables, or
/// `{"variables": "U" | "V", "state": [...]}`.
pub fn load_state(sys: &SystemDef, path: &Path) -> CliResult<Vector> {
    let text = read_text(path)?;
    let doc: StateDoc = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let (vars, state) = match doc {
        StateDoc::Plain(s) => (Variables::U, s),
        StateDoc::Tagged { variables, state } => (variables, state),
    };
    if state.len() != sys.dim {
        return Err(CliError::Usage(format!(
            "{}: expected {} components, found {}",
            path.display(),
            sys.dim,
            state.len()
        )));
    }
    let x = Vector::from_vec(state);
    Ok(match vars {
        Variables::U => sys.v_of(&x)?,
        Variables::V => x,
    })
}

pub fn parse_range(text: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("expected a range a:b, got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(bad());
    }
    Ok((a, b))
}

/// Shortest round-trip text of `x`, in exponent form when it is tiny.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
