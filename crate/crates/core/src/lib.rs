//! Effectively Hamiltonian descriptions of autonomous ODE systems.
//!
//! The crate puts a vector field `x' = f(x)` into a generator form: either a
//! skew-gradient `f = B(x) grad H` when a first integral is known, or a
//! canonical field generated by an *effectively conserved* quantity
//! `K = H + sum(w_i)`, where each reservoir `w_i` is a Stieltjes integral
//! accumulated along the trajectory. `K` is constant in time yet is not a
//! function of state; its differential is a non-exact Pfaffian form.
//!
//! Modules:
//!
//! - [`phase`]: states, scalar fields, system definitions, canonical bracket.
//! - [`skew`]: Quispel–Capel construction, skew/Jacobi/Casimir checks and
//!   affine Casimir reduction.
//! - [`reservoir`]: Pfaffian forms, reservoir accumulation, `K` monitoring.
//! - [`integrators`]: RK4, implicit midpoint, discrete gradient, drift orders.
//! - [`network`]: reaction-network DSL and mass-action compilation.
//! - [`zoo`]: the built-in example systems with their decompositions.
//! - [`diagnostics`]: phase-fluid density, Bernoulli pressure, commutator anomaly.

pub mod diagnostics;
pub mod error;
pub mod integrators;
pub mod network;
pub mod phase;
pub mod reservoir;
pub mod skew;
pub mod trajectory;
pub mod zoo;

pub use error::{Error, Result};
pub use integrators::{IntegratorConfig, Method};
pub use phase::{Domain, PhaseState, ScalarField, SystemDef};
pub use reservoir::{EffectiveInvariant, PfaffianForm, ReservoirSpec};
pub use skew::{CasimirSpec, SkewField};
pub use trajectory::Trajectory;
