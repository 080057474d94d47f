//! `dickenet verify`: oracle equivalences, exact identities and invariants,
//! printed as a fixed-format table. Random draws use fixed seeds so two runs
//! print identical reports.

use std::f64::consts::PI;
use std::fmt::Write as _;

use dickenet_core::dicke::{
    apply, collective_spin, dicke_basis_state, energy_moments, mass_distribution, oat, rotation,
    CollectiveAxis, DickeState, EnsembleDims, SymmetricUnitary,
};
use dickenet_core::exact::{self, tuned_excited_reference, tuned_variance};
use dickenet_core::gravity::{decoherence_time, redshift_phase, GravityContext, Node, ReferenceNode};
use dickenet_core::linalg::{self, CMatrix};
use dickenet_core::measurement::{
    position_observable_expectation, quadrature_matrix_element, signal_local_mutated,
    signal_nonlocal_mutated, BeamSplitter, MeasurementScheme, RamseyScenario, SignMutation, SignalPath,
};
use dickenet_core::network::{
    apply_local, evolve_gravity, extract_excitation_profile, node_mass_distribution, seed_state,
    unitary_from_profile, SeedSpec, TwoNodeState,
};
use dickenet_core::qubit::{profile_probabilities, sequential_circuit, SequentialKind};
use dickenet_core::varprep::{self, build_circuit, CostSpec, OptimizerConfig, VariationalAnsatz};
use dickenet_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{LoadedConfig, ScenarioConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    fn name(self) -> &'static str {
        match self {
            Level::Fast => "fast",
            Level::Full => "full",
        }
    }
    /// Largest N for Fock-space oracles.
    fn oracle_n(self) -> usize {
        match self {
            Level::Fast => 8,
            Level::Full => 12,
        }
    }
    /// Largest N for closed-form identities.
    fn closed_n(self) -> usize {
        match self {
            Level::Fast => 8,
            Level::Full => 40,
        }
    }
    fn draws(self, fast: usize, full: usize) -> usize {
        match self {
            Level::Fast => fast,
            Level::Full => full,
        }
    }
}

pub fn parse_mutation(name: &str) -> Option<SignMutation> {
    std::iter::once(SignMutation::None)
        .chain(SignMutation::ALL)
        .find(|m| m.name() == name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Largest deviation observed.
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.worst < self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.pass()).map(|c| c.name).collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("dickenet verify ({})\n", self.level.name());
        let _ = writeln!(out, "{:<40} {:>10} {:>10}  result", "check", "worst", "tolerance");
        for c in &self.checks {
            let result = if c.pass() { "pass" } else { "FAIL" };
            let _ = writeln!(out, "{:<40} {:>10.2e} {:>10.1e}  {result}", c.name, c.worst, c.tolerance);
        }
        let passed = self.checks.iter().filter(|c| c.pass()).count();
        let _ = writeln!(out, "{passed}/{} checks passed", self.checks.len());
        out
    }
}

fn dims(n: usize) -> EnsembleDims {
    EnsembleDims::new(n).expect("n ≥ 1")
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(0x5eed);
    r.set_stream(stream);
    r
}

fn random_axis(r: &mut ChaCha8Rng) -> CollectiveAxis {
    CollectiveAxis::from_angles((1.0 - 2.0 * r.random::<f64>()).acos(), 2.0 * PI * r.random::<f64>())
}

fn random_state(r: &mut ChaCha8Rng, d: EnsembleDims, vacuum: bool) -> DickeState {
    let amps = (0..d.dim())
        .map(|l| {
            if l == 0 && !vacuum {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(r.random::<f64>() + 0.05, 2.0 * PI * r.random::<f64>())
            }
        })
        .collect();
    DickeState::normalize(d, amps).expect("nonzero")
}

fn random_gate(r: &mut ChaCha8Rng, d: EnsembleDims) -> SymmetricUnitary {
    &rotation(d, random_axis(r), r.random_range(-PI..PI)) * &oat(d, random_axis(r), r.random_range(-2.0..2.0))
}

/// `c = ħ = ω = 1` so phases of order one accumulate in times of order one.
fn random_ctx(r: &mut ChaCha8Rng) -> GravityContext {
    let reference = [ReferenceNode::A, ReferenceNode::B, ReferenceNode::Midpoint][r.random_range(0..3)];
    GravityContext::new(1.0, 1.0, 1.0)
        .and_then(|c| c.with_constants(1.0, 1.0))
        .and_then(|c| c.with_potentials(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)))
        .expect("valid")
        .with_reference(reference)
}

fn weights(psi: &DickeState) -> Vec<f64> {
    mass_distribution(psi)
}

/// Rodrigues rotation of `v` about unit `n` by `theta`.
fn rotate_vec(n: [f64; 3], theta: f64, v: [f64; 3]) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let dot = n[0] * v[0] + n[1] * v[1] + n[2] * v[2];
    let cross = [n[1] * v[2] - n[2] * v[1], n[2] * v[0] - n[0] * v[2], n[0] * v[1] - n[1] * v[0]];
    std::array::from_fn(|i| v[i] * c + cross[i] * s + n[i] * dot * (1.0 - c))
}

fn spin_along(d: EnsembleDims, v: [f64; 3]) -> CMatrix {
    collective_spin(d, CollectiveAxis::X) * Complex64::new(v[0], 0.0)
        + collective_spin(d, CollectiveAxis::Y) * Complex64::new(v[1], 0.0)
        + collective_spin(d, CollectiveAxis::Z) * Complex64::new(v[2], 0.0)
}

struct Suite {
    level: Level,
    mutation: SignMutation,
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, name: &'static str, tolerance: f64, worst: f64) {
        // NaN must fail
        let worst = if worst.is_nan() { f64::INFINITY } else { worst };
        self.checks.push(Check { name, worst, tolerance });
    }

    fn dicke(&mut self) {
        let nmax = self.level.closed_n();
        let mut r = rng(1);
        let (mut unit, mut alg, mut cas, mut cov, mut norm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for n in 1..=nmax {
            let d = dims(n);
            let (sx, sy, sz) = (
                collective_spin(d, CollectiveAxis::X),
                collective_spin(d, CollectiveAxis::Y),
                collective_spin(d, CollectiveAxis::Z),
            );
            let comm = &sx * &sy - &sy * &sx - &sz * Complex64::new(0.0, 1.0);
            alg = alg.max(comm.iter().map(|z| z.norm()).fold(0.0, f64::max));
            let s = d.spin();
            let casimir = &sx * &sx + &sy * &sy + &sz * &sz - CMatrix::identity(d.dim(), d.dim()) * Complex64::new(s * (s + 1.0), 0.0);
            cas = cas.max(casimir.iter().map(|z| z.norm()).fold(0.0, f64::max));
            for _ in 0..3 {
                let u = random_gate(&mut r, d);
                unit = unit.max(linalg::unitarity_defect(u.matrix()));
                let psi = random_state(&mut r, d, true);
                norm = norm.max((apply(&u, &psi).expect("dims").norm_sqr() - 1.0).abs());

                let axis = random_axis(&mut r);
                let theta = r.random_range(-PI..PI);
                let m = random_axis(&mut r).direction();
                let rot = rotation(d, axis, theta);
                let lhs = rot.adjoint().matrix() * spin_along(d, m) * rot.matrix();
                let rhs = spin_along(d, rotate_vec(axis.direction(), -theta, m));
                cov = cov.max(linalg::max_abs_diff(&lhs, &rhs));
            }
        }
        self.record("dicke.unitarity", 1e-10, unit);
        self.record("dicke.spin_algebra", 1e-12, alg);
        self.record("dicke.casimir", 1e-10, cas);
        self.record("dicke.rotation_covariance", 1e-9, cov);
        self.record("dicke.norm_preservation", 1e-12, norm);

        let mut var = 0.0f64;
        for n in 2..=nmax {
            let d = dims(n);
            let excited = dicke_basis_state(d, n - 1).expect("ℓ ≤ N");
            for k in 0..10 {
                let beta = -PI + 2.0 * PI * (k as f64 + 0.5) / 10.0;
                let e = energy_moments(&rotation(d, CollectiveAxis::Y, beta).apply(&excited).expect("dims"));
                let expected = beta.sin().powi(2) * (3.0 * d.spin() - 1.0) / 2.0;
                var = var.max((e.variance - expected).abs());
            }
        }
        self.record("dicke.rotated_variance", 1e-10, var);
    }

    fn gravity(&mut self) {
        let mut r = rng(2);
        let (mut shift, mut lin) = (0.0f64, 0.0f64);
        for _ in 0..self.level.draws(20, 60) {
            let n = r.random_range(1..=self.level.oracle_n());
            let d = dims(n);
            let psi = random_state(&mut r, d, false);
            let ctx = random_ctx(&mut r);
            let k = r.random_range(-3.0..3.0);
            let shifted = ctx
                .with_potentials(ctx.relative_potential(Node::A) + k, ctx.relative_potential(Node::B) + k)
                .expect("finite");
            let phi0 = r.random_range(-PI..PI);
            let t = r.random_range(0.0..3.0);
            let w = weights(&psi);
            for mutation in [SignMutation::None] {
                let a = signal_nonlocal_mutated(&w, &ctx, phi0, t, mutation);
                let b = signal_nonlocal_mutated(&w, &shifted, phi0, t, mutation);
                let c = signal_local_mutated(&w, &ctx, phi0, t, mutation);
                let e = signal_local_mutated(&w, &shifted, phi0, t, mutation);
                shift = shift.max((a - b).abs()).max((c - e).abs());
            }
            let u = unitary_from_profile(&psi).expect("no vacuum");
            let prepared = apply_local(&u, &u, &seed_state(d, SeedSpec::new(phi0, 0.0).expect("ok")).expect("ok")).expect("dims");
            let oa = position_observable_expectation(&evolve_gravity(&prepared, &ctx, t).expect("t ≥ 0"));
            let ob = position_observable_expectation(&evolve_gravity(&prepared, &shifted, t).expect("t ≥ 0"));
            shift = shift.max((oa - ob).abs());

            let l = r.random_range(1..=n);
            let node = if r.random::<bool>() { Node::A } else { Node::B };
            let base = redshift_phase(&ctx, l, node, t);
            let scale = base.abs().max(1e-300);
            lin = lin
                .max((redshift_phase(&ctx, 2 * l, node, t) - 2.0 * base).abs() / scale)
                .max((redshift_phase(&ctx, l, node, 3.0 * t) - 3.0 * base).abs() / scale);
            let doubled = ctx
                .with_potentials(2.0 * ctx.relative_potential(Node::A), 2.0 * ctx.relative_potential(Node::B))
                .expect("finite");
            lin = lin.max((redshift_phase(&doubled, l, node, t) - 2.0 * base).abs() / scale);
        }
        self.record("gravity.reference_frame_shift", 1e-10, shift);
        self.record("gravity.phase_linearity", 1e-12, lin);

        let ctx = GravityContext::earth(2.0 * PI * 0.5e15, 1.0).expect("valid");
        let de = 1e-19;
        let tau = decoherence_time(&ctx, de).expect("ok");
        let tau_dz = decoherence_time(&GravityContext::earth(2.0 * PI * 0.5e15, 2.0).expect("valid"), de).expect("ok");
        let tau_de = decoherence_time(&ctx, 2.0 * de).expect("ok");
        let scaling = ((tau_dz - tau / 2.0).abs() / tau).max((tau_de - tau / 2.0).abs() / tau);
        self.record("gravity.tau_scaling", 1e-12, scaling);
        self.record("gravity.tau_paper_value", 0.05, (paper_tau() - 0.5).abs() / 0.5);
    }

    fn network(&mut self) {
        let mut r = rng(3);
        let (mut evo, mut inv, mut span) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..self.level.draws(10, 30) {
            let n = r.random_range(1..=self.level.oracle_n());
            let d = dims(n);
            let ctx = random_ctx(&mut r);
            let state = TwoNodeState::product(&random_state(&mut r, d, true), &random_state(&mut r, d, true)).expect("dims");
            let u = random_gate(&mut r, d);
            let mixed = apply_local(&u, &random_gate(&mut r, d), &state).expect("dims");
            let (t1, t2) = (r.random_range(0.0..2.0), r.random_range(0.0..2.0));
            let a = evolve_gravity(&evolve_gravity(&mixed, &ctx, t1).expect("ok"), &ctx, t2).expect("ok");
            let b = evolve_gravity(&evolve_gravity(&mixed, &ctx, t2).expect("ok"), &ctx, t1).expect("ok");
            let c = evolve_gravity(&mixed, &ctx, t1 + t2).expect("ok");
            evo = evo
                .max(linalg::max_abs_diff_vec(a.amplitudes(), b.amplitudes()))
                .max(linalg::max_abs_diff_vec(a.amplitudes(), c.amplitudes()));
            for node in [Node::A, Node::B] {
                let before = node_mass_distribution(&mixed, node);
                let after = node_mass_distribution(&c, node);
                evo = evo.max(before.iter().zip(&after).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
            }
            // diagonal: moduli of every amplitude are untouched
            evo = evo.max(
                mixed.amplitudes().iter().zip(c.amplitudes().iter()).map(|(x, y)| (x.norm() - y.norm()).abs()).fold(0.0, f64::max),
            );

            let back = apply_local(&u.adjoint(), &u.adjoint(), &apply_local(&u, &u, &mixed).expect("dims")).expect("dims");
            inv = inv.max(linalg::max_abs_diff_vec(back.amplitudes(), mixed.amplitudes()));

            let psi = random_state(&mut r, d, false);
            let up = unitary_from_profile(&psi).expect("no vacuum");
            let seed = seed_state(d, SeedSpec::new(r.random_range(-PI..PI), 0.0).expect("ok")).expect("ok");
            let evolved = evolve_gravity(&apply_local(&up, &up, &seed).expect("dims"), &ctx, t1).expect("ok");
            let decoded = apply_local(&up.adjoint(), &up.adjoint(), &evolved).expect("dims");
            span = span.max(extract_excitation_profile(&decoded).leakage);
        }
        self.record("network.evolution_diagonal_commuting", 1e-12, evo);
        self.record("network.local_inverse", 1e-10, inv);
        self.record("network.decoded_single_branch", 1e-10, span);
    }

    fn varprep(&mut self) {
        let mut r = rng(4);
        let (mut zrot, mut phase) = (0.0f64, 0.0f64);
        for _ in 0..self.level.draws(10, 30) {
            let n = r.random_range(2..=self.level.closed_n().min(20));
            let d = dims(n);
            let p = r.random_range(1..=4);
            let raw: Vec<f64> = (0..3 * p + 3).map(|_| r.random_range(-PI..PI)).collect();
            let u = build_circuit(d, &VariationalAnsatz::from_raw(&raw).expect("3p+3"));
            let rz = rotation(d, CollectiveAxis::Z, r.random_range(-PI..PI));
            let target = random_state(&mut r, d, false);
            let moduli = DickeState::normalize(d, target.amplitudes().iter().map(|a| Complex64::new(a.norm(), 0.0)).collect()).expect("nonzero");
            let lambda = r.random_range(0.1..2.0);
            let specs = [
                CostSpec::target(target.clone(), lambda).expect("λ > 0"),
                CostSpec::energy(r.random_range(0.0..2.0), r.random_range(0.0..2.0)).expect("λ ≥ 0"),
            ];
            for spec in &specs {
                let base = spec.evaluate(&u).expect("dims");
                zrot = zrot.max((spec.evaluate(&(&rz * &u)).expect("dims") - base).abs());
            }
            let a = CostSpec::target(target, lambda).expect("λ").evaluate(&u).expect("dims");
            let b = CostSpec::target(moduli, lambda).expect("λ").evaluate(&u).expect("dims");
            phase = phase.max((a - b).abs());
        }
        self.record("varprep.cost_z_rotation_invariance", 1e-10, zrot);
        self.record("varprep.cost_phase_invariance", 1e-12, phase);

        let d = dims(6);
        let spec = CostSpec::target(varprep::clock(d, 1, 3).expect("levels"), 0.5).expect("λ");
        let cfg = OptimizerConfig { restarts: 3, max_evals: 400, simplex_tolerance: 1e-8, seed: 11 };
        let a = varprep::optimize(d, &spec, 2, &cfg).expect("runs");
        let b = varprep::optimize(d, &spec, 2, &cfg).expect("runs");
        let same = a.reduced_parameters == b.reduced_parameters && a.cost == b.cost;
        self.record("varprep.reproducible", 0.5, if same { 0.0 } else { 1.0 });
    }

    fn exact(&mut self) {
        let (mut closed, mut qfi, mut noon) = (0.0f64, 0.0f64, 0.0f64);
        for n in (2..=self.level.closed_n()).step_by(2) {
            let d = dims(n);
            let a = exact::u_dt(d).expect("even");
            let b = exact::u_dt_closed_form(d).expect("even");
            closed = closed.max(linalg::max_abs_diff(a.matrix(), b.matrix()));
        }
        self.record("exact.u_dt_closed_form", 1e-10, closed);

        let qfi_max = match self.level {
            Level::Fast => 8,
            Level::Full => 100,
        };
        for n in (2..=qfi_max).step_by(2) {
            let d = dims(n);
            let state = exact::noon_minus_one(d, SeedSpec::default()).expect("even");
            qfi = qfi.max((exact::qfi_differential_phase(&state) - ((n - 1) * (n - 1)) as f64).abs());
            let mut amps = vec![Complex64::new(0.0, 0.0); d.dim() * d.dim()];
            amps[n] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            amps[n * d.dim()] = amps[n];
            let full = TwoNodeState::from_amplitudes(d, amps).expect("normalized");
            noon = noon.max((exact::qfi_differential_phase(&full) - (n * n) as f64).abs());
        }
        self.record("exact.qfi_noon_minus_one", 1e-8, qfi);
        self.record("exact.qfi_noon", 1e-8, noon);

        let sizes: &[usize] = match self.level {
            Level::Fast => &[4, 8],
            Level::Full => &[4, 20, 100],
        };
        let mut var = 0.0f64;
        for &n in sizes {
            let d = dims(n);
            for k in 0..20 {
                let alpha = PI * (k as f64 + 0.5) / 20.0 - PI / 2.0;
                let state = tuned_excited_reference(d, alpha).expect("N ≥ 1");
                var = var.max((energy_moments(&state).variance - tuned_variance(d, alpha)).abs());
            }
        }
        self.record("exact.tuned_variance_identity", 1e-10, var);

        let mut r = rng(5);
        let (mut formula, mut vacuum) = (0.0f64, 0.0f64);
        let qmax = match self.level {
            Level::Fast => 8,
            Level::Full => 12,
        };
        for _ in 0..self.level.draws(30, 100) {
            let n = r.random_range(2..=qmax);
            let first = r.random_range(1..n);
            let len = r.random_range(0..=(n - first));
            let thetas: Vec<f64> = (0..len).map(|_| r.random_range(0.0..2.0 * PI)).collect();
            let circuit = sequential_circuit(&SequentialKind::Profile { first, thetas: thetas.clone() }, n).expect("fits");
            let brute = circuit.excitation_populations().expect("≤ 20 qubits");
            let product = profile_probabilities(first, &thetas);
            for l in 0..brute.len() {
                formula = formula.max((brute[l] - product.get(l).copied().unwrap_or(0.0)).abs());
            }
            let out = circuit.simulate(0).expect("ok");
            vacuum = vacuum.max((out[0] - Complex64::new(1.0, 0.0)).norm());
        }
        let n = qmax;
        for kind in [SequentialKind::Eigenstate(n / 2), SequentialKind::Clock(2, n - 1)] {
            let c = sequential_circuit(&kind, n).expect("fits");
            vacuum = vacuum.max((c.simulate(0).expect("ok")[0] - Complex64::new(1.0, 0.0)).norm());
            let p = c.excitation_populations().expect("ok");
            let expected: Vec<f64> = match kind {
                SequentialKind::Eigenstate(l) => (0..p.len()).map(|k| if k == l { 1.0 } else { 0.0 }).collect(),
                SequentialKind::Clock(a, b) => (0..p.len()).map(|k| if k == a || k == b { 0.5 } else { 0.0 }).collect(),
                SequentialKind::Profile { .. } => unreachable!(),
            };
            formula = formula.max(p.iter().zip(&expected).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
        self.record("exact.sequential_product_formula", 1e-12, formula);
        self.record("exact.sequential_vacuum_invariant", 1e-12, vacuum);
    }

    fn measurement(&mut self) {
        let nmax = self.level.oracle_n();
        let splitters: Vec<BeamSplitter> = (0..=2 * nmax + 1).map(BeamSplitter::new).collect();
        let mut r = rng(6);
        let (mut eq9, mut eq10, mut pos, mut bound, mut trunc) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..self.level.draws(50, 200) {
            let n = r.random_range(1..=nmax);
            let d = dims(n);
            let psi = random_state(&mut r, d, false);
            let ctx = random_ctx(&mut r);
            let phi0 = r.random_range(-PI..PI);
            let t = r.random_range(0.0..3.0);
            let u = unitary_from_profile(&psi).expect("no vacuum");
            let prepared = apply_local(&u, &u, &seed_state(d, SeedSpec::new(phi0, 0.0).expect("ok")).expect("ok")).expect("dims");
            let evolved = evolve_gravity(&prepared, &ctx, t).expect("t ≥ 0");
            let w = weights(&psi);

            let analytic9 = signal_nonlocal_mutated(&w, &ctx, phi0, t, self.mutation);
            let parity = splitters[2 * n + 1].parity(&evolved).expect("fits");
            eq9 = eq9.max((analytic9 - parity).abs());
            pos = pos.max((position_observable_expectation(&evolved) - parity).abs());

            let analytic10 = signal_local_mutated(&w, &ctx, phi0, t, self.mutation);
            let q = |n_max| dickenet_core::measurement::oracle_quadrature_product(&evolved, &u.adjoint(), n_max).expect("fits");
            let q0 = q(n + 2);
            eq10 = eq10.max((analytic10 - q0).abs());
            trunc = trunc.max((q0 - q(n + 1)).abs()).max((q0 - q(n + 4)).abs());
            let wide = splitters[2 * n + 1 + 2.min(2 * nmax + 1 - (2 * n + 1))].parity(&evolved).expect("fits");
            trunc = trunc.max((parity - wide).abs());

            let ideal_n = signal_nonlocal_mutated(&w, &ctx, phi0, t, SignMutation::None);
            let ideal_l = signal_local_mutated(&w, &ctx, phi0, t, SignMutation::None);
            bound = bound.max(ideal_n.abs() - 1.0).max(ideal_l.abs() - 0.5);
        }
        self.record("measurement.eq9_parity_oracle", 1e-10, eq9);
        self.record("measurement.eq10_quadrature_oracle", 1e-10, eq10);
        self.record("measurement.position_observable", 1e-12, pos);
        self.record("measurement.fock_truncation", 1e-12, trunc);
        self.record("measurement.signals_bounded", 1e-12, bound.max(0.0));

        let mut ident = 0.0f64;
        let d = dims(6);
        for l in 1..=6 {
            for l2 in 1..=6 {
                for s in [-1i8, 1] {
                    for s2 in [-1i8, 1] {
                        let v = quadrature_matrix_element(d, (l, s), (l2, s2), 8).expect("fits");
                        let e = if l == 1 && l2 == 1 && s == s2 { f64::from(s) / 2.0 } else { 0.0 };
                        ident = ident.max((v - e).abs());
                    }
                }
            }
        }
        self.record("measurement.quadrature_matrix_elements", 1e-12, ident);

        let mut single = 0.0f64;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (sign, expected) in [(1.0, 1.0), (-1.0, -1.0)] {
            let amps = [0.0, h, sign * h, 0.0].iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let s = TwoNodeState::from_amplitudes(dims(1), amps).expect("normalized");
            single = single.max((BeamSplitter::new(2).parity(&s).expect("fits") - expected).abs());
        }
        self.record("measurement.beam_splitter_single_photon", 1e-12, single);

        // φ₀ enters as e^{−iφ₀}: I(δ) = cos δ I(0) + sin δ I(π/2), all by oracle
        let mut offset = 0.0f64;
        for _ in 0..self.level.draws(4, 10) {
            let n = r.random_range(1..=nmax.min(8));
            let d = dims(n);
            let psi = random_state(&mut r, d, false);
            let ctx = random_ctx(&mut r);
            let u = unitary_from_profile(&psi).expect("no vacuum");
            let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.15).collect();
            let delta = r.random_range(-PI..PI);
            for scheme in [MeasurementScheme::nonlocal_parity(), MeasurementScheme::local_quadrature(&u)] {
                let trace = |phi0: f64| {
                    let prepared = apply_local(&u, &u, &seed_state(d, SeedSpec::new(phi0, 0.0).expect("ok")).expect("ok")).expect("dims");
                    let s = RamseyScenario { prepared, ctx, scheme: scheme.clone(), phi0 };
                    dickenet_core::measurement::run_ramsey(&s, &times, SignalPath::Oracle).expect("runs")
                };
                let (re, im, shifted) = (trace(0.0), trace(PI / 2.0), trace(delta));
                for k in 0..times.len() {
                    let predicted = delta.cos() * re.signal()[k] + delta.sin() * im.signal()[k];
                    offset = offset.max((predicted - shifted.signal()[k]).abs());
                }
            }
        }
        self.record("measurement.phi0_phase_offset", 1e-10, offset);
    }

    fn runner(&mut self) {
        let (roundtrip, determinism, partial) = runner_selftest().unwrap_or((f64::INFINITY, f64::INFINITY, f64::INFINITY));
        self.record("runner.config_round_trip", 0.5, roundtrip);
        self.record("runner.deterministic_csv", 0.5, determinism);
        self.record("runner.no_partial_writes", 0.5, partial);
    }
}

/// `τ_dec` for `N = 100`, `ω_eg/2π = 0.5 PHz`, `Δz = 1 m` and the largest
/// energy spread of the tuned family (`α = π/4`).
pub fn paper_tau() -> f64 {
    let d = dims(100);
    let ctx = GravityContext::earth(2.0 * PI * 0.5e15, 1.0).expect("valid");
    let spread = ctx.hbar() * ctx.omega_eg() * tuned_variance(d, PI / 4.0).sqrt();
    decoherence_time(&ctx, spread).expect("positive")
}

const SELFTEST_CONFIG: &str = r#"
name = "selftest"
N = 4
scheme = "local_quadrature"
path = "both"

[state]
kind = "profile"
amplitudes = [0.0, 0.3, 0.5, 0.2, 0.4]

[seed]
phi0 = "pi/7"

[gravity]
omega_eg = 1.0
delta_z = 1.0
g = 1.0
c = 1.0
hbar = 1.0
reference = "midpoint"

[time]
stop = 6.0
steps = 121
"#;

/// Returns `(round-trip, determinism, partial-write)` failure indicators.
fn runner_selftest() -> std::io::Result<(f64, f64, f64)> {
    let loaded = LoadedConfig::from_text(SELFTEST_CONFIG).map_err(std::io::Error::other)?;
    let echo = loaded.config.to_toml();
    let reparsed: Option<ScenarioConfig> = LoadedConfig::from_text(&echo).ok().map(|l| l.config);
    let roundtrip = if reparsed.as_ref() == Some(&loaded.config) { 0.0 } else { 1.0 };

    let root = tempfile::tempdir()?;
    let mut traces = Vec::new();
    let mut manifest_echo_ok = true;
    for sub in ["a", "b"] {
        let out = crate::run::cmd_simulate(&loaded, &root.path().join(sub)).map_err(|e| std::io::Error::other(e.to_string()))?;
        traces.push(std::fs::read(out.dir.join("trace.csv"))?);
        traces.push(std::fs::read(out.dir.join("comparison.csv"))?);
        let manifest: crate::output::RunManifest =
            toml::from_str(&std::fs::read_to_string(out.dir.join(crate::output::MANIFEST))?).map_err(std::io::Error::other)?;
        manifest_echo_ok &= manifest.config == loaded.config;
    }
    let roundtrip = if manifest_echo_ok { roundtrip } else { 1.0 };
    let determinism = if traces[0] == traces[2] && traces[1] == traces[3] { 0.0 } else { 1.0 };

    // a run that fails before writing leaves nothing behind, and a
    // successful one leaves no temp directories
    let bad = LoadedConfig::from_text(&SELFTEST_CONFIG.replace("[0.0, 0.3, 0.5, 0.2, 0.4]", "[0.0, 0.3, 0.5, 0.2, 1e400]"));
    let mut partial = if bad.is_ok() { 1.0 } else { 0.0 };
    for sub in ["a", "b"] {
        let base = root.path().join(sub).join("selftest");
        for entry in std::fs::read_dir(&base)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if name != "simulate" {
                partial = 1.0;
            }
        }
    }
    Ok((roundtrip, determinism, partial))
}

pub fn run_verify(level: Level, mutation: SignMutation) -> VerifyReport {
    let mut suite = Suite { level, mutation, checks: Vec::new() };
    suite.dicke();
    suite.gravity();
    suite.network();
    suite.varprep();
    suite.exact();
    suite.measurement();
    suite.runner();
    VerifyReport { level, checks: suite.checks }
}
