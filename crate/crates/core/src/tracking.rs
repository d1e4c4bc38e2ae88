//! The equivariant tracking error, its dynamics, the conjugated inertia
//! operator, the feedback law and the Lyapunov function.
//!
//! The tracking error is the right translate of the state by the inverse
//! of the reference, `e = (Q Q_d^{-1}, Ad*_{Q_d^{-1}} (P - P_d))`; its
//! dynamics are again of extended Euler-Poincare form in the transformed
//! control errors, which is what makes a single energy argument work for
//! every reference trajectory.

use crate::dynamics::{vector_field, PhaseVelocity};
use crate::lie::{
    ad_matrix, adjoint, adjoint_matrix, co_ad, AlgebraVec, CoalgebraVec, GroupDescription,
    GroupElement,
};
use crate::semidirect::{input_action, sd_inv, InputPair, PhaseState};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrackingError {
    #[error("inertia operator is not symmetric (residual {0:.3e})")]
    NotSymmetric(f64),
    #[error("inertia operator is not positive definite")]
    NotPositiveDefinite,
    #[error("gains must be strictly positive (k_p = {k_p}, k_v = {k_v})")]
    NonPositiveGains { k_p: f64, k_v: f64 },
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Tracking error `(Q_E, P_E)`: the state expressed in the frame of the
/// reference trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorState {
    q_e: GroupElement,
    p_e: CoalgebraVec,
}

impl ErrorState {
    pub fn new(q_e: GroupElement, p_e: CoalgebraVec) -> Self {
        Self { q_e, p_e }
    }

    pub fn configuration(&self) -> &GroupElement {
        &self.q_e
    }

    pub fn momentum(&self) -> &CoalgebraVec {
        &self.p_e
    }

    /// The same pair viewed as a phase state.
    pub fn as_phase(&self) -> PhaseState {
        PhaseState::from_parts_unchecked(self.q_e.clone(), self.p_e.clone())
    }
}

/// Transformed velocity and force errors, the inputs of the error system.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlErrors {
    velocity: AlgebraVec,
    force: CoalgebraVec,
}

impl ControlErrors {
    pub fn new(velocity: AlgebraVec, force: CoalgebraVec) -> Self {
        Self { velocity, force }
    }

    pub fn velocity(&self) -> &AlgebraVec {
        &self.velocity
    }

    pub fn force(&self) -> &CoalgebraVec {
        &self.force
    }
}

/// A symmetric positive-definite inertia operator from the algebra to the
/// coalgebra, stored with its exact-inverse companion.
#[derive(Clone, Debug)]
pub struct InertiaOp {
    mat: DMatrix<f64>,
    inv: DMatrix<f64>,
}

impl InertiaOp {
    /// Validates symmetry (to 1e-12) and positive definiteness.
    pub fn new(mat: DMatrix<f64>) -> Result<Self, TrackingError> {
        let sym_residual = (&mat - mat.transpose()).norm();
        if sym_residual >= SYMMETRY_TOL {
            return Err(TrackingError::NotSymmetric(sym_residual));
        }
        let chol = Cholesky::new(mat.clone()).ok_or(TrackingError::NotPositiveDefinite)?;
        let inv = chol.inverse();
        Ok(Self { mat, inv })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// Momentum from velocity: `P = I U`.
    pub fn apply(&self, u: &AlgebraVec) -> CoalgebraVec {
        CoalgebraVec::new(&self.mat * u.coords())
    }

    /// Velocity from momentum: `U = I^{-1} P`.
    pub fn apply_inverse(&self, p: &CoalgebraVec) -> AlgebraVec {
        AlgebraVec::new(&self.inv * p.coords())
    }
}

/// Strictly positive proportional and velocity gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gains {
    k_p: f64,
    k_v: f64,
}

impl Gains {
    pub fn new(k_p: f64, k_v: f64) -> Result<Self, TrackingError> {
        if !(k_p > 0.0) || !(k_v > 0.0) {
            return Err(TrackingError::NonPositiveGains { k_p, k_v });
        }
        Ok(Self { k_p, k_v })
    }

    pub fn k_p(&self) -> f64 {
        self.k_p
    }

    pub fn k_v(&self) -> f64 {
        self.k_v
    }
}

/// The tracking error `(Q Q_d^{-1}, Ad*_{Q_d^{-1}} (P - P_d))`.
pub fn tracking_error(desc: &GroupDescription, x: &PhaseState, xd: &PhaseState) -> ErrorState {
    let qd_inv = xd.configuration().inverse(desc);
    let q_e = x.configuration().compose(&qd_inv);
    let p_e = crate::lie::co_adjoint(desc, &qd_inv, &(x.momentum() - xd.momentum()));
    ErrorState { q_e, p_e }
}

/// The control errors: the input difference transformed by the inverse of
/// the reference state.
pub fn control_errors(
    desc: &GroupDescription,
    input: &InputPair,
    input_d: &InputPair,
    xd: &PhaseState,
) -> ControlErrors {
    let g = sd_inv(desc, xd);
    let diff = InputPair::new(
        input.velocity() - input_d.velocity(),
        input.force() - input_d.force(),
    );
    let transformed = input_action(desc, &g, &diff);
    let (velocity, force) = (transformed.velocity().clone(), transformed.force().clone());
    ControlErrors { velocity, force }
}

/// The error dynamics: the extended Euler-Poincare field driven by the
/// control errors, `(Q_E Ut, ad*_{Ut} P_E + taut)`.
pub fn error_vector_field(
    desc: &GroupDescription,
    e: &ErrorState,
    ce: &ControlErrors,
) -> PhaseVelocity {
    vector_field(
        desc,
        &e.as_phase(),
        &InputPair::new(ce.velocity.clone(), ce.force.clone()),
    )
}

/// The inertia operator expressed in the frame of the reference:
/// `Ibar = Ad*_{Q_d^{-1}} I Ad_{Q_d^{-1}}`, as an n×n coordinate matrix.
pub fn inertia_error(
    desc: &GroupDescription,
    inertia: &InertiaOp,
    qd: &GroupElement,
) -> DMatrix<f64> {
    let a = adjoint_matrix(desc, &qd.inverse(desc));
    a.transpose() * inertia.matrix() * a
}

/// Exact inverse of [`inertia_error`], computed by conjugating the stored
/// inverse: `Ad_{Q_d} I^{-1} Ad*_{Q_d}`.
pub fn inertia_error_inverse(
    desc: &GroupDescription,
    inertia: &InertiaOp,
    qd: &GroupElement,
) -> DMatrix<f64> {
    let a = adjoint_matrix(desc, qd);
    &a * inertia.inverse_matrix() * a.transpose()
}

/// Closed-form time derivative of the inverse inertia error along
/// `dQ_d = Q_d U_d`:
/// `ad_{Ad_{Q_d} U_d} Ibar^{-1} + Ibar^{-1} ad*_{Ad_{Q_d} U_d}`.
pub fn inertia_error_inv_derivative(
    desc: &GroupDescription,
    inertia: &InertiaOp,
    qd: &GroupElement,
    ud: &AlgebraVec,
) -> DMatrix<f64> {
    let spatial = adjoint(desc, qd, ud);
    let c = ad_matrix(desc, &spatial);
    let ibar_inv = inertia_error_inverse(desc, inertia, qd);
    &c * &ibar_inv + ibar_inv * c.transpose()
}

fn spd_solve(ibar: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, TrackingError> {
    let sym_residual = (ibar - ibar.transpose()).norm();
    if sym_residual >= 1e-10 * (1.0 + ibar.norm()) {
        return Err(TrackingError::NotSymmetric(sym_residual));
    }
    let chol: Cholesky<f64, Dyn> =
        Cholesky::new(ibar.clone()).ok_or(TrackingError::NotPositiveDefinite)?;
    Ok(chol.solve(rhs))
}

/// The error energy `1/2 P_E (Ibar^{-1} P_E)`.
pub fn error_energy(e: &ErrorState, ibar: &DMatrix<f64>) -> Result<f64, TrackingError> {
    let v = spd_solve(ibar, e.p_e.coords())?;
    Ok(0.5 * e.p_e.coords().dot(&v))
}

/// Closed-form derivative of [`error_energy`] along the error dynamics
/// with the velocity constraint active:
/// `taut (Ibar^{-1} P_E) + ad*_{Ad_{Q_d} U_d} P_E (Ibar^{-1} P_E)`.
pub fn error_energy_derivative(
    desc: &GroupDescription,
    e: &ErrorState,
    ibar: &DMatrix<f64>,
    force_error: &CoalgebraVec,
    xd: &PhaseState,
    ud: &AlgebraVec,
) -> Result<f64, TrackingError> {
    let u_tilde = AlgebraVec::new(spd_solve(ibar, e.p_e.coords())?);
    let spatial = adjoint(desc, xd.configuration(), ud);
    let coriolis = co_ad(desc, &spatial, &e.p_e);
    Ok(force_error.pair(&u_tilde) + coriolis.pair(&u_tilde))
}

/// The tracking feedback in transformed coordinates:
/// `taut = -k_v K(Ut) - ad*_{Ad_{Q_d} U_d} P_E - k_p K(P_alg(Q_E^T (Q_E - I)))`,
/// with `Ut = Ibar^{-1} P_E` and `K` the Frobenius pairing (the identity on
/// orthonormal coordinates).
pub fn control_law(
    desc: &GroupDescription,
    e: &ErrorState,
    ibar: &DMatrix<f64>,
    xd: &PhaseState,
    ud: &AlgebraVec,
    gains: &Gains,
) -> Result<CoalgebraVec, TrackingError> {
    let u_tilde = AlgebraVec::new(spd_solve(ibar, e.p_e.coords())?);
    let spatial = adjoint(desc, xd.configuration(), ud);
    let coriolis = co_ad(desc, &spatial, &e.p_e);

    let q_e = e.q_e.matrix();
    let configuration_defect = q_e.transpose() * (q_e - desc.identity_matrix());
    let spring = desc.project_algebra(&configuration_defect);

    Ok(&(&u_tilde.flat().scale(-gains.k_v) - &coriolis) - &spring.flat().scale(gains.k_p))
}

/// The Lyapunov function
/// `1/2 P_E (Ibar^{-1} P_E) + k_p/2 <Q_E - I, Q_E - I>`.
pub fn lyapunov(e: &ErrorState, ibar: &DMatrix<f64>, gains: &Gains) -> Result<f64, TrackingError> {
    let energy = error_energy(e, ibar)?;
    let defect = e.q_e.matrix() - DMatrix::identity(e.q_e.matrix().nrows(), e.q_e.matrix().ncols());
    Ok(energy + 0.5 * gains.k_p * defect.norm_squared())
}
