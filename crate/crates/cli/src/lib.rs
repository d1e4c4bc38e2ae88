#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > t)` rejects NaN; `x <= t` would not

//! Closed-loop attitude-tracking simulator and verification suites.
//!
//! The library half of the `ep-sim` binary: scenario parsing, the
//! simulation loop with CSV/gnuplot output, and the numerical
//! verification suites exposed by the `verify` subcommand.

pub mod scenario;
pub mod sim;
pub mod verify;

/// The bundled tracking scenario: near-antipodal initial attitude, fast
/// initial spin, sinusoid-mix reference torque, gains (1.0, 0.5), 10 ms
/// steps for 30 s.
pub const PAPER_SIM_JSON: &str = include_str!("../scenarios/paper_sim.json");
