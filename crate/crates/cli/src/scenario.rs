//! Scenario files: JSON description of a closed-loop tracking run.
//!
//! Rotations are given either as `{"axis": [x, y, z], "angle": radians}`
//! (the axis is normalised) or as `{"matrix": [[..], [..], [..]]}`.
//! Reference torques are `{"kind": "constant", "value": [x, y, z]}` or the
//! parametric waveform `{"kind": "sinusoid_mix", "amplitude": a,
//! "frequency": w}`, which evaluates to
//! `a * (cos wt, sin wt, sin wt cos wt)`.

use ep_control::tracking::Gains;
use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RotationSpec {
    #[serde(default)]
    axis: Option<[f64; 3]>,
    #[serde(default)]
    angle: Option<f64>,
    #[serde(default)]
    matrix: Option<[[f64; 3]; 3]>,
}

impl RotationSpec {
    fn build(&self, field: &'static str) -> Result<Matrix3<f64>, ScenarioError> {
        let r = match (&self.matrix, &self.axis, &self.angle) {
            (Some(rows), None, None) => Matrix3::from_fn(|i, j| rows[i][j]),
            (None, Some(axis), Some(angle)) => {
                let axis = Vector3::new(axis[0], axis[1], axis[2]);
                let norm = axis.norm();
                if !norm.is_finite() || (norm < 1e-12 && *angle != 0.0) {
                    return Err(invalid(field, "axis must be a non-zero vector"));
                }
                if norm < 1e-12 {
                    Matrix3::identity()
                } else {
                    ep_control::lie::rotation_exp(&(axis / norm * *angle))
                }
            }
            _ => {
                return Err(invalid(
                    field,
                    "give either {axis, angle} or {matrix}, not both or neither",
                ))
            }
        };
        if r.iter().any(|x| !x.is_finite()) {
            return Err(invalid(field, "non-finite entries"));
        }
        let defect = (r.transpose() * r - Matrix3::identity()).norm();
        if !(defect < ep_control::so3::ROTATION_TOL) || !(r.determinant() > 0.0) {
            return Err(invalid(
                field,
                format!("not a rotation matrix (orthogonality defect {defect:.3e})"),
            ));
        }
        Ok(r)
    }
}

/// Reference torque waveform.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TorqueSpec {
    Constant { value: [f64; 3] },
    SinusoidMix { amplitude: f64, frequency: f64 },
}

impl TorqueSpec {
    pub fn eval(&self, t: f64) -> Vector3<f64> {
        match self {
            TorqueSpec::Constant { value } => Vector3::new(value[0], value[1], value[2]),
            TorqueSpec::SinusoidMix {
                amplitude,
                frequency,
            } => {
                let phase = frequency * t;
                Vector3::new(phase.cos(), phase.sin(), phase.sin() * phase.cos()) * *amplitude
            }
        }
    }

    fn validate(&self, field: &'static str) -> Result<(), ScenarioError> {
        let finite = match self {
            TorqueSpec::Constant { value } => value.iter().all(|x| x.is_finite()),
            TorqueSpec::SinusoidMix {
                amplitude,
                frequency,
            } => amplitude.is_finite() && frequency.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(invalid(field, "non-finite entries"))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    inertia: [[f64; 3]; 3],
    r0: RotationSpec,
    omega0: [f64; 3],
    rd0: RotationSpec,
    omegad0: [f64; 3],
    tau_d: TorqueSpec,
    k_p: f64,
    k_v: f64,
    dt: f64,
    duration: f64,
    #[serde(default = "default_decimation")]
    output_decimation: u32,
}

fn default_decimation() -> u32 {
    1
}

/// A validated closed-loop tracking scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub inertia: Matrix3<f64>,
    pub r0: Matrix3<f64>,
    pub omega0: Vector3<f64>,
    pub rd0: Matrix3<f64>,
    pub omegad0: Vector3<f64>,
    pub tau_d: TorqueSpec,
    pub gains: Gains,
    pub dt: f64,
    pub duration: f64,
    pub output_decimation: u32,
}

fn vec3(v: [f64; 3], field: &'static str) -> Result<Vector3<f64>, ScenarioError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(Vector3::new(v[0], v[1], v[2]))
    } else {
        Err(invalid(field, "non-finite entries"))
    }
}

impl RawScenario {
    fn validate(self) -> Result<Scenario, ScenarioError> {
        let inertia = Matrix3::from_fn(|i, j| self.inertia[i][j]);
        if inertia.iter().any(|x| !x.is_finite()) {
            return Err(invalid("inertia", "non-finite entries"));
        }
        if (inertia - inertia.transpose()).norm() > 1e-9 {
            return Err(invalid("inertia", "matrix must be symmetric"));
        }
        let eigenvalues = inertia.symmetric_eigen().eigenvalues;
        if eigenvalues.min() <= 0.0 {
            return Err(invalid("inertia", "matrix must be positive definite"));
        }

        let gains =
            Gains::new(self.k_p, self.k_v).map_err(|e| invalid("k_p/k_v", e.to_string()))?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be a positive number"));
        }
        if !(self.duration >= self.dt) || !self.duration.is_finite() {
            return Err(invalid("duration", "must be at least one step"));
        }
        if self.output_decimation == 0 {
            return Err(invalid("output_decimation", "must be a positive integer"));
        }
        self.tau_d.validate("tau_d")?;

        Ok(Scenario {
            inertia,
            r0: self.r0.build("r0")?,
            omega0: vec3(self.omega0, "omega0")?,
            rd0: self.rd0.build("rd0")?,
            omegad0: vec3(self.omegad0, "omegad0")?,
            tau_d: self.tau_d,
            gains,
            dt: self.dt,
            duration: self.duration,
            output_decimation: self.output_decimation,
        })
    }
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

/// Parses and validates scenario JSON.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text)?;
    raw.validate()
}
