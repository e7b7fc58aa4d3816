//! Small-dimension numerical kernels shared by the rest of the crate.

pub mod fd;
pub mod linalg;
pub mod newton;
pub mod ode;
pub mod quad;
pub mod root;

pub use fd::{directional_derivative, fd_gradient, fd_hessian, fd_jacobian};
pub use linalg::{eig_real, EigenDecomp, Matrix, Vector, MAX_DIM};
pub use newton::{newton_solve, newton_solve_with, NewtonSolution};
pub use ode::{ode_rk4, rk4_step};
pub use quad::{quad_adaptive, quad_adaptive_scalar, quad_adaptive_with};
pub use root::bracketed_root;
