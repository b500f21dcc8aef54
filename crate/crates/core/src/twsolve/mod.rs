//! Travelling-wave solutions: reference profiles, the discrete residual,
//! Newton's method, continuation in the parameters and the linearisation at
//! the static walls.

pub mod continuation;
pub mod linearized;
pub mod newton;
pub mod problem;
pub mod reference;

pub use continuation::{continue_branch, Branch, ContinuationReport, STEP_FLOOR};
pub use linearized::{linearized_operator, LinearizedOperator};
pub use newton::{
    solve_tw, velocity_identity, velocity_identity_parts, JacobianMode, NewtonOptions,
};
pub use problem::{residual, Correction, Residual};
pub use reference::{reference_profile, ReferenceProfile, SwitchingFunction};
