#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > t)` rejects NaN; `x <= t` would not

//! Tracking control for fully-actuated Euler-Poincare systems on matrix
//! Lie groups.
//!
//! The crate is layered:
//!
//! * [`lie`] — matrix Lie-algebra primitives over a pluggable
//!   [`lie::GroupDescription`] (orthonormal algebra basis, adjoint and
//!   coadjoint operators, exponential, retraction).
//! * [`semidirect`] — the group structure on configuration–momentum
//!   pairs, together with the right actions on states and inputs.
//! * [`dynamics`] — the extended Euler-Poincare vector field, a
//!   group-preserving RK4 integrator, and a numerical equivariance
//!   certificate.
//! * [`tracking`] — the equivariant tracking error, its dynamics, the
//!   conjugated inertia operator, the feedback law and the Lyapunov
//!   function.
//! * [`so3`] — the attitude-control instantiation in reduced ℝ³ form,
//!   plus the conversions between the reduced and generic layers.

pub mod dynamics;
pub mod lie;
pub mod semidirect;
pub mod so3;
pub mod tracking;

pub use dynamics::{vector_field, InputProvider, PhaseVelocity};
pub use lie::{AlgebraVec, CoalgebraVec, GroupDescription, GroupElement, LieError};
pub use semidirect::{InputPair, PhaseState};
pub use tracking::{ControlErrors, ErrorState, Gains, InertiaOp};
