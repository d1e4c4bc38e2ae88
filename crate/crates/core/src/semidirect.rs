//! The group structure on configuration–momentum pairs and its right
//! actions on phase states and on inputs.
//!
//! Pairs `(Q, P)` multiply by `(Q1, P1)(Q2, P2) = (Q1 Q2, Ad*_{Q2} P1 + P2)`,
//! which makes the phase space a group in its own right and is what lets a
//! single right translation express the tracking error.

use crate::lie::{
    adjoint, co_ad, co_adjoint, AlgebraVec, CoalgebraVec, GroupDescription, GroupElement, LieError,
};
use nalgebra::DVector;

/// A configuration–momentum pair `(Q, P)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    q: GroupElement,
    p: CoalgebraVec,
}

impl PhaseState {
    /// Pairs a group element with a momentum, rejecting non-finite momenta.
    pub fn new(q: GroupElement, p: CoalgebraVec) -> Result<Self, LieError> {
        if !p.is_finite() {
            return Err(LieError::NonFinite);
        }
        Ok(Self { q, p })
    }

    pub(crate) fn from_parts_unchecked(q: GroupElement, p: CoalgebraVec) -> Self {
        Self { q, p }
    }

    pub fn configuration(&self) -> &GroupElement {
        &self.q
    }

    pub fn momentum(&self) -> &CoalgebraVec {
        &self.p
    }

    pub fn into_parts(self) -> (GroupElement, CoalgebraVec) {
        (self.q, self.p)
    }
}

/// A velocity input in the algebra paired with a force input in the
/// coalgebra.
#[derive(Clone, Debug, PartialEq)]
pub struct InputPair {
    velocity: AlgebraVec,
    force: CoalgebraVec,
}

impl InputPair {
    pub fn new(velocity: AlgebraVec, force: CoalgebraVec) -> Self {
        Self { velocity, force }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            velocity: AlgebraVec::zeros(dim),
            force: CoalgebraVec::zeros(dim),
        }
    }

    pub fn velocity(&self) -> &AlgebraVec {
        &self.velocity
    }

    pub fn force(&self) -> &CoalgebraVec {
        &self.force
    }
}

/// The identity element `(I, 0)`.
pub fn identity(desc: &GroupDescription) -> PhaseState {
    PhaseState {
        q: GroupElement::identity(desc),
        p: CoalgebraVec::zeros(desc.dim_algebra()),
    }
}

/// Semidirect product `(Q1 Q2, Ad*_{Q2} P1 + P2)`.
pub fn sd_mul(desc: &GroupDescription, a: &PhaseState, b: &PhaseState) -> PhaseState {
    PhaseState {
        q: a.q.compose(&b.q),
        p: &co_adjoint(desc, &b.q, &a.p) + &b.p,
    }
}

/// Semidirect inverse `(Q^{-1}, -Ad*_{Q^{-1}} P)`.
pub fn sd_inv(desc: &GroupDescription, a: &PhaseState) -> PhaseState {
    let q_inv = a.q.inverse(desc);
    let p = -co_adjoint(desc, &q_inv, &a.p);
    PhaseState { q: q_inv, p }
}

/// Right action of `g` on a phase state: `x * g` in the semidirect product.
pub fn state_action(desc: &GroupDescription, g: &PhaseState, x: &PhaseState) -> PhaseState {
    sd_mul(desc, x, g)
}

/// Right action of `g = (X, P)` on an input pair:
/// `(Ad_{X^{-1}} U, Ad*_X tau - ad*_{Ad_{X^{-1}} U} P)`.
pub fn input_action(desc: &GroupDescription, g: &PhaseState, input: &InputPair) -> InputPair {
    let x_inv = g.q.inverse(desc);
    let velocity = adjoint(desc, &x_inv, &input.velocity);
    let force = &co_adjoint(desc, &g.q, &input.force) - &co_ad(desc, &velocity, &g.p);
    InputPair { velocity, force }
}

/// Recovers the untransformed force from the transformed input pair: the
/// unique `tau` with `input_action(g, (U, tau)).force == transformed_force`,
/// where `U = Ad_X transformed_velocity`.
pub fn invert_force(
    desc: &GroupDescription,
    g: &PhaseState,
    transformed_velocity: &AlgebraVec,
    transformed_force: &CoalgebraVec,
) -> CoalgebraVec {
    let x_inv = g.q.inverse(desc);
    let shifted = transformed_force + &co_ad(desc, transformed_velocity, &g.p);
    co_adjoint(desc, &x_inv, &shifted)
}

/// Scales both components of an input pair: used by linearity checks.
pub fn input_combination(a: f64, lhs: &InputPair, b: f64, rhs: &InputPair) -> InputPair {
    InputPair {
        velocity: AlgebraVec::new(
            DVector::from(lhs.velocity.coords() * a) + rhs.velocity.coords() * b,
        ),
        force: CoalgebraVec::new(DVector::from(lhs.force.coords() * a) + rhs.force.coords() * b),
    }
}
