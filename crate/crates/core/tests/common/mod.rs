#![allow(dead_code)] // each suite uses its own subset of the helpers

//! Seeded sampling helpers shared by the property suites.
//!
//! Group elements are drawn as exponentials of Gaussian algebra vectors
//! (std 1.0) so the samples cover well-separated, non-commuting
//! configurations; momenta and velocities are Gaussian coordinate vectors.

use ep_control::lie::{group_exp, AlgebraVec, CoalgebraVec, GroupDescription, GroupElement};
use ep_control::semidirect::{InputPair, PhaseState};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 42;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Box-Muller keeps the dependency surface small.
    (0..n)
        .map(|_| {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

pub fn random_algebra(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> AlgebraVec {
    AlgebraVec::from_slice(&gaussian(rng, desc.dim_algebra()))
}

pub fn random_coalgebra(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> CoalgebraVec {
    CoalgebraVec::from_slice(&gaussian(rng, desc.dim_algebra()))
}

pub fn random_group(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> GroupElement {
    group_exp(desc, &random_algebra(rng, desc))
}

pub fn random_phase(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> PhaseState {
    PhaseState::new(random_group(rng, desc), random_coalgebra(rng, desc)).unwrap()
}

pub fn random_input(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> InputPair {
    InputPair::new(random_algebra(rng, desc), random_coalgebra(rng, desc))
}

pub fn phase_distance(a: &PhaseState, b: &PhaseState) -> f64 {
    let dq = (a.configuration().matrix() - b.configuration().matrix()).norm();
    let dp = (a.momentum() - b.momentum()).norm();
    (dq * dq + dp * dp).sqrt()
}
