//! Steady self-similar solutions of hyperbolic conservation laws near a
//! supersonic constant state.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod generator;
pub mod euler;
pub mod numerics;
pub mod profile;
pub mod psystem;
pub mod riemann;
pub mod verifier;
pub mod system;
pub mod waves;

pub use config::{SystemConfig, Tolerances, SCHEMA};
pub use error::{Error, Result};
