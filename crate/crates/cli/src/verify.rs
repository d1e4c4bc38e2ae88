//! Numerical verification suites.
//!
//! Each suite draws seeded random data, evaluates a family of identities
//! two independent ways, and reports the worst residual against a fixed
//! threshold. Exit-code handling lives in the binary; everything here is
//! pure computation over the core layers.

use ep_control::dynamics::{equivariance_residual, step, InputProvider};
use ep_control::lie::{
    adjoint, co_ad, group_exp, rotation_exp, AlgebraVec, CoalgebraVec, GroupDescription,
    GroupElement,
};
use ep_control::semidirect::{
    identity, input_action, input_combination, invert_force, sd_inv, sd_mul, state_action,
    InputPair, PhaseState,
};
use ep_control::so3::{
    algebra_from_vector, attitude_error, coalgebra_from_momentum, control, error_dynamics,
    inertia_to_generic, input_to_generic, momentum_from_coalgebra, recover_torque,
    state_to_generic, vector_from_algebra, AttitudeState, EQUILIBRIUM_TOL,
};
use ep_control::tracking::{
    control_errors, control_law, error_energy, error_energy_derivative, error_vector_field,
    inertia_error, inertia_error_inv_derivative, inertia_error_inverse, tracking_error,
    ControlErrors, Gains, InertiaOp,
};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;

pub const DEFAULT_SEED: u64 = 42;

/// All runnable suite names, in report order.
pub const SUITE_NAMES: [&str; 7] = [
    "group-axioms",
    "equivariance",
    "error-dynamics",
    "energy",
    "inertia",
    "lyapunov",
    "reduced-vs-generic",
];

/// One residual measured against its threshold.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
}

impl Check {
    fn new(name: &'static str, residual: f64, threshold: f64) -> Self {
        Self {
            name,
            residual,
            threshold,
        }
    }

    pub fn passed(&self) -> bool {
        self.residual < self.threshold
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn print(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "suite {} (seed {})", self.suite, self.seed)?;
        for c in &self.checks {
            writeln!(
                out,
                "  [{}] {:<58} residual {:>10.3e}  threshold {:.1e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold
            )?;
        }
        Ok(())
    }
}

/// Runs one suite by name; `None` for unknown names.
pub fn run_suite(name: &str, seed: u64) -> Option<SuiteReport> {
    match name {
        "group-axioms" => Some(group_axioms(seed)),
        "equivariance" => Some(equivariance(seed)),
        "error-dynamics" => Some(error_dynamics_suite(seed)),
        "energy" => Some(energy(seed)),
        "inertia" => Some(inertia_suite(seed)),
        "lyapunov" => Some(lyapunov_suite(seed)),
        "reduced-vs-generic" => Some(reduced_vs_generic(seed)),
        _ => None,
    }
}

/// Runs every suite; independent suites run on their own threads.
pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    let handles: Vec<_> = SUITE_NAMES
        .iter()
        .map(|name| {
            let name = *name;
            std::thread::spawn(move || run_suite(name, seed).expect("known suite name"))
        })
        .collect();
    handles
        .into_iter()
        .map(|h| h.join().expect("suite thread panicked"))
        .collect()
}

// --- sampling -------------------------------------------------------------

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand::Rng;
    (0..n)
        .map(|_| {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

fn rand_algebra(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> AlgebraVec {
    AlgebraVec::from_slice(&gaussian(rng, desc.dim_algebra()))
}

fn rand_coalgebra(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> CoalgebraVec {
    CoalgebraVec::from_slice(&gaussian(rng, desc.dim_algebra()))
}

fn rand_group(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> GroupElement {
    group_exp(desc, &rand_algebra(rng, desc))
}

fn rand_phase(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> PhaseState {
    PhaseState::new(rand_group(rng, desc), rand_coalgebra(rng, desc)).unwrap()
}

fn rand_input(rng: &mut ChaCha8Rng, desc: &GroupDescription) -> InputPair {
    InputPair::new(rand_algebra(rng, desc), rand_coalgebra(rng, desc))
}

fn rand_vec3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let g = gaussian(rng, 3);
    Vector3::new(g[0], g[1], g[2])
}

fn phase_distance(a: &PhaseState, b: &PhaseState) -> f64 {
    let dq = (a.configuration().matrix() - b.configuration().matrix()).norm();
    let dp = (a.momentum() - b.momentum()).norm();
    (dq * dq + dp * dp).sqrt()
}

fn reduced_inertia() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(2.0, 3.0, 4.0))
}

fn generic_inertia() -> InertiaOp {
    inertia_to_generic(&reduced_inertia()).expect("diag(2,3,4) is SPD")
}

// --- suites ----------------------------------------------------------------

fn group_axioms(seed: u64) -> SuiteReport {
    let desc = GroupDescription::so3();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = identity(&desc);
    let (mut assoc, mut ident, mut inverse) = (0.0f64, 0.0f64, 0.0f64);
    let (mut act_ident, mut act_compat) = (0.0f64, 0.0f64);
    let (mut in_ident, mut in_compat, mut linearity) = (0.0f64, 0.0f64, 0.0f64);

    for _ in 0..1000 {
        let a = rand_phase(&mut rng, &desc);
        let b = rand_phase(&mut rng, &desc);
        let c = rand_phase(&mut rng, &desc);
        let input = rand_input(&mut rng, &desc);

        assoc = assoc.max(phase_distance(
            &sd_mul(&desc, &sd_mul(&desc, &a, &b), &c),
            &sd_mul(&desc, &a, &sd_mul(&desc, &b, &c)),
        ));
        ident = ident
            .max(phase_distance(&sd_mul(&desc, &e, &a), &a))
            .max(phase_distance(&sd_mul(&desc, &a, &e), &a));
        inverse = inverse
            .max(phase_distance(&sd_mul(&desc, &a, &sd_inv(&desc, &a)), &e))
            .max(phase_distance(&sd_mul(&desc, &sd_inv(&desc, &a), &a), &e));

        act_ident = act_ident.max(phase_distance(&state_action(&desc, &e, &c), &c));
        act_compat = act_compat.max(phase_distance(
            &state_action(&desc, &b, &state_action(&desc, &a, &c)),
            &state_action(&desc, &sd_mul(&desc, &a, &b), &c),
        ));

        let id_in = input_action(&desc, &e, &input);
        in_ident = in_ident
            .max((id_in.velocity() - input.velocity()).norm())
            .max((id_in.force() - input.force()).norm());
        let lhs = input_action(&desc, &b, &input_action(&desc, &a, &input));
        let rhs = input_action(&desc, &sd_mul(&desc, &a, &b), &input);
        in_compat = in_compat
            .max((lhs.velocity() - rhs.velocity()).norm())
            .max((lhs.force() - rhs.force()).norm());

        let other = rand_input(&mut rng, &desc);
        let lin_lhs = input_action(&desc, &a, &input_combination(1.4, &input, -0.6, &other));
        let lin_rhs = input_combination(
            1.4,
            &input_action(&desc, &a, &input),
            -0.6,
            &input_action(&desc, &a, &other),
        );
        linearity = linearity
            .max((lin_lhs.velocity() - lin_rhs.velocity()).norm())
            .max((lin_lhs.force() - lin_rhs.force()).norm());
    }

    SuiteReport {
        suite: "group-axioms",
        seed,
        checks: vec![
            Check::new("associativity over 1000 triples", assoc, 1e-11),
            Check::new("two-sided identity", ident, 1e-11),
            Check::new("two-sided inverse", inverse, 1e-11),
            Check::new("state action: identity law", act_ident, 1e-11),
            Check::new("state action: compatibility law", act_compat, 1e-11),
            Check::new("input action: identity law", in_ident, 1e-11),
            Check::new("input action: compatibility law", in_compat, 1e-11),
            Check::new("input action: linearity", linearity, 1e-11),
        ],
    }
}

fn equivariance(seed: u64) -> SuiteReport {
    let desc = GroupDescription::so3();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut algebraic, mut fd) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let g = rand_phase(&mut rng, &desc);
        let x = rand_phase(&mut rng, &desc);
        let input = rand_input(&mut rng, &desc);
        let res = equivariance_residual(&desc, &g, &x, &input);
        algebraic = algebraic.max(res.algebraic);
        fd = fd.max(res.finite_difference);
    }
    // The trivial transformation must be exact on the algebraic route.
    let x = rand_phase(&mut rng, &desc);
    let input = rand_input(&mut rng, &desc);
    let trivial = equivariance_residual(&desc, &identity(&desc), &x, &input).algebraic;

    SuiteReport {
        suite: "equivariance",
        seed,
        checks: vec![
            Check::new("algebraic residual over 200 samples", algebraic, 1e-10),
            Check::new("finite-difference residual (h = 1e-4)", fd, 1e-5),
            Check::new("identity transformation is exact", trivial, 1e-14),
        ],
    }
}

struct Schedule<F: Fn(f64) -> InputPair>(F);

impl<F: Fn(f64) -> InputPair> InputProvider for Schedule<F> {
    fn input(&self, t: f64, _: &PhaseState) -> InputPair {
        (self.0)(t)
    }
}

fn error_dynamics_suite(seed: u64) -> SuiteReport {
    let desc = GroupDescription::so3();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let plant_input = |t: f64| {
        InputPair::new(
            AlgebraVec::from_slice(&[(0.8 * t).sin(), (1.1 * t).cos(), 0.5 * (0.6 * t).sin()]),
            CoalgebraVec::from_slice(&[0.4 * (0.9 * t).cos(), (0.5 * t).sin(), -0.3]),
        )
    };
    let reference_input = |t: f64| {
        InputPair::new(
            AlgebraVec::from_slice(&[0.3 * (0.7 * t).cos(), -0.4, 0.6 * (1.2 * t).sin()]),
            CoalgebraVec::from_slice(&[(0.8 * t).sin(), -0.2 * (0.4 * t).cos(), 0.5]),
        )
    };

    let mut run = |mismatched: bool| -> f64 {
        let mut x = rand_phase(&mut rng, &desc);
        let mut xd = rand_phase(&mut rng, &desc);
        let h = 1e-4;
        let mut t = 0.0;
        let mut history = vec![(t, x.clone(), xd.clone())];
        for _ in 0..300 {
            x = step(&desc, &x, &Schedule(plant_input), t, h).unwrap();
            let refin: &dyn Fn(f64) -> InputPair = if mismatched {
                &reference_input
            } else {
                &plant_input
            };
            xd = step(&desc, &xd, &Schedule(refin), t, h).unwrap();
            t += h;
            history.push((t, x.clone(), xd.clone()));
        }
        let mut worst = 0.0f64;
        for w in history.windows(3) {
            let (_, xb, xdb) = &w[0];
            let (tc, xc, xdc) = &w[1];
            let (_, xf, xdf) = &w[2];
            let e_b = tracking_error(&desc, xb, xdb);
            let e_c = tracking_error(&desc, xc, xdc);
            let e_f = tracking_error(&desc, xf, xdf);
            let fd_q = (e_f.configuration().matrix() - e_b.configuration().matrix()) / (2.0 * h);
            let fd_p = (e_f.momentum().coords() - e_b.momentum().coords()) / (2.0 * h);
            let ind = if mismatched {
                reference_input(*tc)
            } else {
                plant_input(*tc)
            };
            let ce = control_errors(&desc, &plant_input(*tc), &ind, xdc);
            let field = error_vector_field(&desc, &e_c, &ce);
            worst = worst
                .max((fd_q - &field.dq).norm())
                .max((fd_p - field.dp.coords()).norm());
        }
        worst
    };

    let mismatched = run(true);
    let matched = run(false);

    SuiteReport {
        suite: "error-dynamics",
        seed,
        checks: vec![
            Check::new(
                "twin trajectories, mismatched inputs (h = 1e-4)",
                mismatched,
                1e-5,
            ),
            Check::new(
                "twin trajectories, matched inputs (h = 1e-4)",
                matched,
                1e-5,
            ),
        ],
    }
}

struct Constrained<F: Fn(f64) -> CoalgebraVec> {
    op: InertiaOp,
    torque: F,
}

impl<F: Fn(f64) -> CoalgebraVec> InputProvider for Constrained<F> {
    fn input(&self, t: f64, state: &PhaseState) -> InputPair {
        InputPair::new(self.op.apply_inverse(state.momentum()), (self.torque)(t))
    }
}

fn energy(seed: u64) -> SuiteReport {
    let desc = GroupDescription::so3();
    let op = generic_inertia();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let plant_torque =
        |t: f64| CoalgebraVec::from_slice(&[(0.9 * t).sin(), 0.7 * (0.5 * t).cos(), -0.4]);
    let reference_torque =
        |t: f64| CoalgebraVec::from_slice(&[0.5 * (1.1 * t).cos(), -0.3, (0.6 * t).sin()]);

    let mut x = rand_phase(&mut rng, &desc);
    let mut xd = rand_phase(&mut rng, &desc);
    let plant = Constrained {
        op: generic_inertia(),
        torque: plant_torque,
    };
    let reference = Constrained {
        op: generic_inertia(),
        torque: reference_torque,
    };

    let h = 1e-4;
    let mut t = 0.0;
    let mut history = vec![(t, x.clone(), xd.clone())];
    for _ in 0..300 {
        x = step(&desc, &x, &plant, t, h).unwrap();
        xd = step(&desc, &xd, &reference, t, h).unwrap();
        t += h;
        history.push((t, x.clone(), xd.clone()));
    }

    let energy_at = |x: &PhaseState, xd: &PhaseState| {
        let e = tracking_error(&desc, x, xd);
        let ibar = inertia_error(&desc, &op, xd.configuration());
        error_energy(&e, &ibar).unwrap()
    };

    let mut worst = 0.0f64;
    for w in history.windows(3) {
        let (_, xb, xdb) = &w[0];
        let (tc, xc, xdc) = &w[1];
        let (_, xf, xdf) = &w[2];
        let fd = (energy_at(xf, xdf) - energy_at(xb, xdb)) / (2.0 * h);
        let e = tracking_error(&desc, xc, xdc);
        let ibar = inertia_error(&desc, &op, xdc.configuration());
        let ud = op.apply_inverse(xdc.momentum());
        let u = op.apply_inverse(xc.momentum());
        let ce = control_errors(
            &desc,
            &InputPair::new(u, plant_torque(*tc)),
            &InputPair::new(ud.clone(), reference_torque(*tc)),
            xdc,
        );
        let closed = error_energy_derivative(&desc, &e, &ibar, ce.force(), xdc, &ud).unwrap();
        worst = worst.max((fd - closed).abs());
    }

    SuiteReport {
        suite: "energy",
        seed,
        checks: vec![Check::new(
            "finite-difference energy rate vs closed form (h = 1e-4)",
            worst,
            1e-5,
        )],
    }
}

fn inertia_suite(seed: u64) -> SuiteReport {
    let desc = GroupDescription::so3();
    let op = generic_inertia();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-4;

    let (mut spectrum, mut factoring, mut derivative, mut trace) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut want: Vec<f64> = op
        .matrix()
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .as_slice()
        .to_vec();
    want.sort_by(f64::total_cmp);

    for _ in 0..100 {
        let qd = rand_group(&mut rng, &desc);
        let ibar = inertia_error(&desc, &op, &qd);
        let mut got: Vec<f64> = ibar
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .as_slice()
            .to_vec();
        got.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            spectrum = spectrum.max((g - w).abs());
        }

        // P_E = Ibar Ut on constrained data.
        let u = rand_algebra(&mut rng, &desc);
        let ud = rand_algebra(&mut rng, &desc);
        let q = rand_group(&mut rng, &desc);
        let x = PhaseState::new(q, op.apply(&u)).unwrap();
        let xd = PhaseState::new(qd.clone(), op.apply(&ud)).unwrap();
        let e = tracking_error(&desc, &x, &xd);
        let ce = control_errors(
            &desc,
            &InputPair::new(u, CoalgebraVec::zeros(3)),
            &InputPair::new(ud.clone(), CoalgebraVec::zeros(3)),
            &xd,
        );
        factoring = factoring.max((e.momentum().coords() - &ibar * ce.velocity().coords()).norm());

        let fwd = qd.compose(&group_exp(&desc, &ud.scale(h)));
        let bwd = qd.compose(&group_exp(&desc, &ud.scale(-h)));
        let fd = (inertia_error_inverse(&desc, &op, &fwd)
            - inertia_error_inverse(&desc, &op, &bwd))
            / (2.0 * h);
        let closed = inertia_error_inv_derivative(&desc, &op, &qd, &ud);
        derivative = derivative.max((fd - &closed).norm());
        trace = trace.max(closed.trace().abs());
    }

    let zero = inertia_error_inv_derivative(
        &desc,
        &op,
        &rand_group(&mut rng, &desc),
        &AlgebraVec::zeros(3),
    )
    .norm();

    SuiteReport {
        suite: "inertia",
        seed,
        checks: vec![
            Check::new("conjugation preserves the spectrum", spectrum, 1e-12),
            Check::new(
                "momentum error factors as Ibar * velocity error",
                factoring,
                1e-11,
            ),
            Check::new(
                "d/dt Ibar^-1: closed form vs finite difference",
                derivative,
                1e-5,
            ),
            Check::new("d/dt Ibar^-1 is traceless on so(3)", trace, 1e-12),
            Check::new(
                "zero reference velocity gives a zero derivative",
                zero,
                1e-15,
            ),
        ],
    }
}

// --- closed-loop machinery for the lyapunov suite ---------------------------

/// The tracking scenario in generic coordinates: inertia diag(2,3,4),
/// reference at rest at the identity driven by
/// `tau_d(t) = (cos t, sin t, sin t cos t)`, plant released from the
/// near-antipodal attitude with angular velocity (4, -3, 2).
struct TrackingScenario {
    desc: GroupDescription,
    op: InertiaOp,
    gains: Gains,
}

impl TrackingScenario {
    fn new() -> Self {
        Self {
            desc: GroupDescription::so3(),
            op: generic_inertia(),
            gains: Gains::new(1.0, 0.5).unwrap(),
        }
    }

    fn tau_d(&self, t: f64) -> CoalgebraVec {
        coalgebra_from_momentum(&Vector3::new(t.cos(), t.sin(), t.sin() * t.cos()))
    }

    fn initial(&self) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
        let angle = std::f64::consts::PI - 0.1;
        let r0 = rotation_exp(&(Vector3::new(0.8, 0.6, 0.0) * angle));
        let p0 = coalgebra_from_momentum(&(reduced_inertia() * Vector3::new(4.0, -3.0, 2.0)));
        let q = DMatrix::from_fn(3, 3, |i, j| r0[(i, j)]);
        (
            q,
            p0.coords().clone(),
            DMatrix::identity(3, 3),
            DVector::zeros(3),
        )
    }

    /// Continuous-feedback combined field: the reference runs open loop,
    /// the plant applies the feedback law at its own current state.
    #[allow(clippy::type_complexity)]
    fn field(
        &self,
        t: f64,
        q: &DMatrix<f64>,
        p: &DVector<f64>,
        qd: &DMatrix<f64>,
        pd: &DVector<f64>,
    ) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
        let x = phase_from_raw(q.clone(), p.clone());
        let xd = phase_from_raw(qd.clone(), pd.clone());

        let u = self.op.apply_inverse(x.momentum());
        let ud = self.op.apply_inverse(xd.momentum());
        let tau_d = self.tau_d(t);

        let e = tracking_error(&self.desc, &x, &xd);
        let ibar = inertia_error(&self.desc, &self.op, xd.configuration());
        let tau_tilde = control_law(&self.desc, &e, &ibar, &xd, &ud, &self.gains).unwrap();
        let u_tilde = adjoint(&self.desc, xd.configuration(), &(&u - &ud));
        let delta_tau = invert_force(&self.desc, &sd_inv(&self.desc, &xd), &u_tilde, &tau_tilde);
        let tau = &tau_d + &delta_tau;

        let dq = q * u.matrix(&self.desc);
        let dp = co_ad(&self.desc, &u, x.momentum()).coords() + tau.coords();
        let dqd = qd * ud.matrix(&self.desc);
        let dpd = co_ad(&self.desc, &ud, xd.momentum()).coords() + tau_d.coords();
        (dq, dp, dqd, dpd)
    }

    #[allow(clippy::type_complexity)]
    fn rk4(
        &self,
        t: f64,
        h: f64,
        y: &(DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>),
    ) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
        let add = |y: &(DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>),
                   k: &(DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>),
                   s: f64| {
            (
                &y.0 + &k.0 * s,
                &y.1 + &k.1 * s,
                &y.2 + &k.2 * s,
                &y.3 + &k.3 * s,
            )
        };
        let k1 = self.field(t, &y.0, &y.1, &y.2, &y.3);
        let s1 = add(y, &k1, h / 2.0);
        let k2 = self.field(t + h / 2.0, &s1.0, &s1.1, &s1.2, &s1.3);
        let s2 = add(y, &k2, h / 2.0);
        let k3 = self.field(t + h / 2.0, &s2.0, &s2.1, &s2.2, &s2.3);
        let s3 = add(y, &k3, h);
        let k4 = self.field(t + h, &s3.0, &s3.1, &s3.2, &s3.3);
        (
            &y.0 + (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) * (h / 6.0),
            &y.1 + (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) * (h / 6.0),
            &y.2 + (&k1.2 + &k2.2 * 2.0 + &k3.2 * 2.0 + &k4.2) * (h / 6.0),
            &y.3 + (&k1.3 + &k2.3 * 2.0 + &k3.3 * 2.0 + &k4.3) * (h / 6.0),
        )
    }

    fn lyapunov_of(&self, y: &(DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>)) -> f64 {
        let x = phase_from_raw(y.0.clone(), y.1.clone());
        let xd = phase_from_raw(y.2.clone(), y.3.clone());
        let e = tracking_error(&self.desc, &x, &xd);
        let ibar = inertia_error(&self.desc, &self.op, xd.configuration());
        ep_control::tracking::lyapunov(&e, &ibar, &self.gains).unwrap()
    }

    fn velocity_error_of(
        &self,
        y: &(DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>),
    ) -> AlgebraVec {
        let x = phase_from_raw(y.0.clone(), y.1.clone());
        let xd = phase_from_raw(y.2.clone(), y.3.clone());
        let u = self.op.apply_inverse(x.momentum());
        let ud = self.op.apply_inverse(xd.momentum());
        adjoint(&self.desc, xd.configuration(), &(&u - &ud))
    }
}

fn phase_from_raw(q: DMatrix<f64>, p: DVector<f64>) -> PhaseState {
    PhaseState::new(GroupElement::from_matrix_unchecked(q), CoalgebraVec::new(p))
        .expect("finite momentum")
}

fn lyapunov_suite(seed: u64) -> SuiteReport {
    let scenario = TrackingScenario::new();

    // Continuous-feedback dissipation: dL/dt must equal -k_v <Ut, Ut> at
    // sampled states along the closed-loop flow. The march step only has
    // to deliver valid on-group states at the sample times; the identity
    // being checked is pointwise.
    let mut y = scenario.initial();
    let march_h = 2e-3;
    let fd_h = 1e-4;
    let mut t = 0.0;
    let mut dissipation = 0.0f64;
    for sample in 1..=10 {
        let target = sample as f64 * 1.0;
        while t < target - march_h / 2.0 {
            y = scenario.rk4(t, march_h, &y);
            t += march_h;
            // Stay numerically on the group during the march.
            y.0 = ep_control::lie::polar_retract(&y.0).expect("retraction along the march");
            y.2 = ep_control::lie::polar_retract(&y.2).expect("retraction along the march");
        }
        let fwd = scenario.rk4(t, fd_h, &y);
        let bwd = scenario.rk4(t, -fd_h, &y);
        let fd = (scenario.lyapunov_of(&fwd) - scenario.lyapunov_of(&bwd)) / (2.0 * fd_h);
        let u_tilde = scenario.velocity_error_of(&y);
        let closed = -scenario.gains.k_v() * u_tilde.coords().norm_squared();
        dissipation = dissipation.max((fd - closed).abs() / closed.abs().max(1e-12));
    }

    // Discrete closed loop: monotone decrease, convergence of the value by
    // t = 30, and eventual arrival in the identity classification basin
    // (measured entry at t ~ 60; run to 90 for margin).
    let mut paper = crate::scenario::parse_scenario(crate::PAPER_SIM_JSON).unwrap();
    paper.duration = 90.0;
    let records = crate::sim::run_simulation(&paper).unwrap();
    let mut worst_increase = 0.0f64;
    for w in records.windows(2) {
        worst_increase = worst_increase.max(w[1].lyapunov - w[0].lyapunov);
    }
    let at_thirty = records
        .iter()
        .find(|r| (r.t - 30.0).abs() < 1e-9)
        .expect("t = 30 is on the step grid");
    let ratio = at_thirty.lyapunov / records[0].lyapunov;
    let last = records.last().unwrap();
    let identity_distance = last.config_err.max(last.momentum_err);

    // Antipodal geometry: exact value 8, second-order expansion, escape
    // and invariance of the unperturbed set.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rotation_exp(&rand_vec3(&mut rng));
    let lambda = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
    let base = r * lambda * r.transpose();
    let axis = r * Vector3::new(1.0, 0.0, 0.0);
    let cost = |s: f64| {
        let q = base * rotation_exp(&(axis * s));
        (q - Matrix3::identity()).norm_squared()
    };
    let exact_eight = (cost(0.0) - 8.0).abs();
    let mut expansion = 0.0f64;
    for s in [0.01, 0.02, 0.05] {
        expansion = expansion.max((cost(s) - (8.0 - 2.0 * s * s)).abs() / (s * s * s));
    }

    let (escape, invariance) = antipodal_runs(&base, &axis);

    SuiteReport {
        suite: "lyapunov",
        seed,
        checks: vec![
            Check::new(
                "closed-loop dL/dt vs -k_v ||Ut||^2, relative (10 samples)",
                dissipation,
                1e-6,
            ),
            Check::new(
                "discrete run: worst per-step increase",
                worst_increase,
                1e-8,
            ),
            Check::new(
                "discrete run: final/initial Lyapunov by t = 30",
                ratio,
                1e-3,
            ),
            Check::new(
                "discrete run: final error is at identity",
                identity_distance,
                EQUILIBRIUM_TOL,
            ),
            Check::new("antipodal configuration cost equals 8", exact_eight, 1e-12),
            Check::new(
                "antipodal expansion 8 - 2s^2 (units of s^3)",
                expansion,
                1.0,
            ),
            Check::new(
                "perturbed antipodal run converges to identity",
                escape,
                EQUILIBRIUM_TOL,
            ),
            Check::new(
                "exact antipodal start stays antipodal for 1 s",
                invariance,
                EQUILIBRIUM_TOL,
            ),
        ],
    }
}

/// Runs the closed loop from the antipodal set: perturbed by s = 0.05
/// along the instability curve (should escape to the identity), and
/// unperturbed (should stay). Returns the two distances.
fn antipodal_runs(base: &Matrix3<f64>, axis: &Vector3<f64>) -> (f64, f64) {
    let perturbed = base * rotation_exp(&(axis * 0.05));
    let escape_json = antipodal_scenario_json(&perturbed, 240.0);
    let s = crate::scenario::parse_scenario(&escape_json).unwrap();
    let records = crate::sim::run_simulation(&s).unwrap();
    let last = records.last().unwrap();
    let escape = last.config_err.max(last.momentum_err);

    let hold_json = antipodal_scenario_json(base, 1.0);
    let s = crate::scenario::parse_scenario(&hold_json).unwrap();
    let records = crate::sim::run_simulation(&s).unwrap();
    let invariance = records
        .iter()
        .map(|r| (r.r_e.trace() + 1.0).abs().max(r.momentum_err))
        .fold(0.0f64, f64::max);
    (escape, invariance)
}

fn antipodal_scenario_json(r0: &Matrix3<f64>, duration: f64) -> String {
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| r0[(i, j)]).collect())
        .collect();
    serde_json::json!({
        "inertia": [[2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 4.0]],
        "r0": {"matrix": rows},
        "omega0": [0.0, 0.0, 0.0],
        "rd0": {"matrix": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]},
        "omegad0": [0.0, 0.0, 0.0],
        "tau_d": {"kind": "constant", "value": [0.0, 0.0, 0.0]},
        "k_p": 1.0,
        "k_v": 0.5,
        "dt": 0.01,
        "duration": duration,
        "output_decimation": 1
    })
    .to_string()
}

fn reduced_vs_generic(seed: u64) -> SuiteReport {
    let desc = GroupDescription::so3();
    let inertia = reduced_inertia();
    let op = generic_inertia();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut formulas = 0.0f64;
    let mut gain_map = 0.0f64;
    let generic_gains = Gains::new(0.9, 0.4).unwrap();
    let doubled = Gains::new(1.8, 0.8).unwrap();

    for _ in 0..1000 {
        let x =
            AttitudeState::new(rotation_exp(&rand_vec3(&mut rng)), rand_vec3(&mut rng)).unwrap();
        let xd =
            AttitudeState::new(rotation_exp(&rand_vec3(&mut rng)), rand_vec3(&mut rng)).unwrap();
        let gx = state_to_generic(&x, &desc).unwrap();
        let gxd = state_to_generic(&xd, &desc).unwrap();

        let red = attitude_error(&x, &xd);
        let gen = tracking_error(&desc, &gx, &gxd);
        formulas = formulas
            .max((Matrix3::from_fn(|i, j| gen.configuration().matrix()[(i, j)]) - red.r_e).norm())
            .max((momentum_from_coalgebra(gen.momentum()) - red.p_e).norm());

        let omega = rand_vec3(&mut rng);
        let omega_d = rand_vec3(&mut rng);
        let tau = rand_vec3(&mut rng);
        let tau_d = rand_vec3(&mut rng);
        let ce = control_errors(
            &desc,
            &input_to_generic(&omega, &tau),
            &input_to_generic(&omega_d, &tau_d),
            &gxd,
        );
        let omega_tilde = xd.rotation() * (omega - omega_d);
        let tau_tilde =
            xd.rotation() * (tau - tau_d) - omega_tilde.cross(&(xd.rotation() * xd.momentum()));
        formulas = formulas
            .max((vector_from_algebra(ce.velocity()) - omega_tilde).norm())
            .max((momentum_from_coalgebra(ce.force()) - tau_tilde).norm());

        let (dr, dp) = error_dynamics(&red, &omega_tilde, &tau_tilde);
        let field = error_vector_field(
            &desc,
            &gen,
            &ControlErrors::new(
                algebra_from_vector(&omega_tilde),
                coalgebra_from_momentum(&tau_tilde),
            ),
        );
        formulas = formulas
            .max((Matrix3::from_fn(|i, j| field.dq[(i, j)]) - dr).norm())
            .max((momentum_from_coalgebra(&field.dp) - dp).norm());

        let tau_t = rand_vec3(&mut rng);
        let red_torque = recover_torque(&tau_t, &xd, &omega, &omega_d, &tau_d);
        let delta = invert_force(
            &desc,
            &sd_inv(&desc, &gxd),
            &algebra_from_vector(&omega_tilde),
            &coalgebra_from_momentum(&tau_t),
        );
        formulas = formulas.max((red_torque - (tau_d + momentum_from_coalgebra(&delta))).norm());

        let red_control = control(&red, xd.rotation(), &omega_d, &inertia, &doubled);
        let ibar = inertia_error(&desc, &op, gxd.configuration());
        let gen_control = control_law(
            &desc,
            &gen,
            &ibar,
            &gxd,
            &algebra_from_vector(&omega_d),
            &generic_gains,
        )
        .unwrap();
        gain_map = gain_map.max((momentum_from_coalgebra(&gen_control) - red_control).norm());
    }

    SuiteReport {
        suite: "reduced-vs-generic",
        seed,
        checks: vec![
            Check::new(
                "errors, dynamics, torque recovery over 1000 samples",
                formulas,
                1e-10,
            ),
            Check::new(
                "generic gains (k) equal reduced gains (2k)",
                gain_map,
                1e-10,
            ),
        ],
    }
}
