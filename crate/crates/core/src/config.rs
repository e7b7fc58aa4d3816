//! Tolerances and the serializable system configuration record.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema tag written into every JSON document produced by the crate.
pub const SCHEMA: &str = "selfsim/1";

/// Every numerical threshold used by the library, in one place.
///
/// All fields have defaults, so a partial JSON document (for example the file
/// named by `SELFSIM_TOL_FILE`) only needs to list the values it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Minimum separation between eigenvalues (and maximum imaginary part).
    pub eig_gap: f64,
    /// Absolute residual accepted by Newton iterations.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Absolute tolerance of adaptive quadrature.
    pub quad_tol: f64,
    /// Maximum number of panels before quadrature gives up.
    pub quad_max_panels: usize,
    /// Relative step of central-difference gradients.
    pub fd_step: f64,
    /// Relative step of central-difference Hessians (Richardson extrapolated).
    pub fd_hessian_step: f64,
    /// Failure threshold for the entropy-pair compatibility check.
    pub entropy_pair_tol: f64,
    /// Threshold separating linearly degenerate from genuinely nonlinear fields.
    pub ld_tol: f64,
    /// Smallest admissible |e_VV r r|.
    pub degenerate_form_tol: f64,
    /// Rankine-Hugoniot residual accepted for a jump.
    pub rh_tol: f64,
    /// Rankine-Hugoniot residual above which a pair of states is not a jump at all.
    pub not_a_jump_tol: f64,
    /// Resonance detection threshold |lambda(V(xi)) - xi|.
    pub resonance_tol: f64,
    /// Slack factor applied to delta_L in the neighbourhood-length check.
    pub neighbourhood_slack: f64,
    /// Tolerance on the inversion xi -> s inside a wave fan.
    pub fan_inversion_tol: f64,
    /// RK4 steps per unit of epsilon along simple-wave curves.
    pub rk4_steps_per_epsilon: f64,
    /// Shock-curve continuation step as a fraction of epsilon.
    pub shock_step_fraction: f64,
    /// Number of random points sampled in the epsilon ball (besides the 3^m lattice).
    pub ball_samples: usize,
    /// Number of random (V, V+, V-) triples used to estimate delta_s.
    pub spectral_triples: usize,
    /// Maximum number of epsilon halvings performed while building a system.
    pub max_epsilon_halvings: usize,
    /// Maximum number of delta_L halvings during calibration.
    pub max_delta_l_halvings: usize,
    /// Safety factor on the sector half widths.
    pub sector_safety: f64,
    /// Weak-form residual accepted by the verifier.
    pub weak_residual_tol: f64,
    /// Entropy-inequality violation accepted by the verifier.
    pub entropy_residual_tol: f64,
    /// Shocks weaker than this are dropped by the generator (f64 resolution floor).
    pub min_shock_strength: f64,
    /// Seed for every randomized sample.
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_gap: 1e-8,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            quad_tol: 1e-10,
            quad_max_panels: 4096,
            fd_step: 1e-5,
            fd_hessian_step: 1e-3,
            entropy_pair_tol: 1e-6,
            ld_tol: 1e-8,
            degenerate_form_tol: 1e-10,
            rh_tol: 1e-9,
            not_a_jump_tol: 1e-6,
            resonance_tol: 1e-8,
            neighbourhood_slack: 0.9,
            fan_inversion_tol: 1e-11,
            rk4_steps_per_epsilon: 64.0,
            shock_step_fraction: 1.0 / 128.0,
            ball_samples: 64,
            spectral_triples: 64,
            max_epsilon_halvings: 6,
            max_delta_l_halvings: 8,
            sector_safety: 1.1,
            weak_residual_tol: 1e-7,
            entropy_residual_tol: 1e-9,
            min_shock_strength: 1e-12,
            seed: 0x5e1f_5111,
        }
    }
}

impl Tolerances {
    /// Reads a (possibly partial) tolerance document.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Pressure law of the isentropic Euler instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum PressureConfig {
    /// `p = rho^gamma / gamma`, so that `c(1) = 1`.
    Gamma { gamma: f64 },
}

/// Which conservation law a configuration describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemKind {
    /// Isentropic Euler with conserved variables `(rho, m, n)`.
    IsentropicEuler { pressure: PressureConfig },
    /// The p-system `v_t - u_y = 0, u_t + p(v)_y = 0` with `p(v) = v^-gamma`.
    PSystem { gamma: f64 },
}

/// JSON configuration of a system: the law, the background state in conserved
/// variables, the ball radius and optional tolerance overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub schema: String,
    pub system: SystemKind,
    /// Background state in conserved variables.
    pub background: Vec<f64>,
    pub epsilon: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl SystemConfig {
    /// Isentropic Euler with a gamma law, background `(rho, m, n)`.
    pub fn euler(gamma: f64, background: [f64; 3], epsilon: f64) -> Self {
        SystemConfig {
            schema: SCHEMA.to_string(),
            system: SystemKind::IsentropicEuler {
                pressure: PressureConfig::Gamma { gamma },
            },
            background: background.to_vec(),
            epsilon,
            tolerances: Tolerances::default(),
        }
    }

    pub fn p_system(gamma: f64, background: [f64; 2], epsilon: f64) -> Self {
        SystemConfig {
            schema: SCHEMA.to_string(),
            system: SystemKind::PSystem { gamma },
            background: background.to_vec(),
            epsilon,
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if cfg.schema != SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}
