//! The `simulate`, `prepare`, `aci` and `scan` commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dickenet_core::dicke::{DickeState, EnergyMoments, EnsembleDims, SymmetricUnitary};
use dickenet_core::exact::{self, AlphaSpec};
use dickenet_core::gravity::{aci_interference, aci_visibility, decoherence_time, AciParams, GravityContext, InterferenceTrace};
use dickenet_core::measurement::{
    compare_paths, detect_revival, dominant_frequency, envelope_fit, run_ramsey, MeasurementScheme,
    RamseyScenario, SchemeKind, SignalPath,
};
use dickenet_core::network::{apply_local, extract_excitation_profile, seed_state, unitary_from_profile, TwoNodeState};
use dickenet_core::qubit::{sequential_circuit, SequentialKind};
use dickenet_core::textio::CircuitRecord;
use dickenet_core::varprep::{self, build_circuit, CostSpec, OptimizationResult, OptimizerConfig};
use dickenet_core::{Complex64, Error};

use crate::config::{
    LoadedConfig, PathChoice, ScenarioConfig, SequenceKind, StateSpec, TargetKind, VariationalSpec,
};
use crate::output::{num, parameter_hash, run_dir, CheckRecord, RunManifest, RunWriter, ScanEcho, ARTIFACT_VERSION};
use crate::CliError;

/// Maps a library error raised while building from config section `table`.
fn config_err<'a>(cfg: &'a LoadedConfig, table: &'a str) -> impl Fn(Error) -> CliError + 'a {
    move |e| match e {
        Error::Numeric(m) => CliError::Numeric(m),
        other => CliError::Config(cfg.error(table, "", other.to_string())),
    }
}

/// Amplification unitary, the state it prepares, and files describing how.
pub struct PreparedState {
    pub unitary: SymmetricUnitary,
    pub state: TwoNodeState,
    pub artifacts: Vec<(String, String)>,
    pub summary: BTreeMap<String, f64>,
    pub optimization: Option<OptimizationResult>,
}

fn variational_cost(dims: EnsembleDims, v: &VariationalSpec) -> dickenet_core::Result<CostSpec> {
    let lambda = v.lambda_or_default();
    match v.target {
        TargetKind::Eigenstate => CostSpec::target(varprep::mass_eigenstate(dims, v.m.unwrap_or(0))?, lambda),
        TargetKind::Clock => CostSpec::target(varprep::clock(dims, v.m1.unwrap_or(0), v.m2.unwrap_or(0))?, lambda),
        TargetKind::Coherent => CostSpec::target(varprep::coherent(dims), lambda),
        TargetKind::Energy => CostSpec::energy(v.lambda1.unwrap_or(1.0), v.lambda2.unwrap_or(0.0)),
    }
}

pub fn prepare_state(loaded: &LoadedConfig) -> Result<PreparedState, CliError> {
    let cfg = &loaded.config;
    let dims = cfg.dims();
    let err = config_err(loaded, "state");
    let spec = cfg
        .state
        .as_ref()
        .ok_or_else(|| CliError::Config(loaded.error("", "", "a [state] section is required")))?;
    let seed = seed_state(dims, cfg.seed.spec()).map_err(config_err(loaded, "seed"))?;
    let mut artifacts = Vec::new();
    let mut summary = BTreeMap::new();
    let mut optimization = None;
    let unitary = match spec {
        StateSpec::Variational(v) => {
            let cost = variational_cost(dims, v).map_err(&err)?;
            let opt = OptimizerConfig {
                restarts: v.optimizer.restarts,
                max_evals: v.optimizer.max_evals,
                simplex_tolerance: v.optimizer.simplex_tolerance,
                seed: cfg.rng_seed,
            };
            let result = varprep::optimize(dims, &cost, v.p, &opt).map_err(&err)?;
            let record = CircuitRecord {
                dims,
                ansatz: result.ansatz.clone(),
                cost: result.cost,
                seed: cfg.rng_seed,
                cost_spec: cost.describe(),
            };
            artifacts.push(("circuit.txt".to_string(), record.to_text()));
            summary.insert("cost".into(), result.cost);
            summary.insert("best_restart".into(), result.best_restart as f64);
            let u = build_circuit(dims, &result.ansatz);
            optimization = Some(result);
            u
        }
        StateSpec::NoonMinusOne => exact::u_dt(dims).map_err(&err)?,
        StateSpec::PsiAlpha(a) => {
            let gate = exact::v_alpha(dims, AlphaSpec::new(a.alpha, a.k).map_err(&err)?).map_err(&err)?;
            summary.insert("v_alpha_vacuum_fidelity".into(), gate.vacuum_fidelity);
            summary.insert("v_alpha_twist".into(), gate.twist);
            &gate.unitary * &exact::u_dt(dims).map_err(&err)?
        }
        StateSpec::Sequential(s) => {
            let kind = match s.sequence {
                SequenceKind::Eigenstate => SequentialKind::Eigenstate(s.l.unwrap_or(0)),
                SequenceKind::Clock => SequentialKind::Clock(s.l1.unwrap_or(0), s.l2.unwrap_or(0)),
                SequenceKind::Profile => SequentialKind::Profile { first: s.first.unwrap_or(0), thetas: s.thetas.clone() },
            };
            let circuit = sequential_circuit(&kind, dims.atoms()).map_err(&err)?;
            let populations = circuit.excitation_populations().map_err(&err)?;
            artifacts.push(("qubit_circuit.txt".to_string(), circuit.to_text()));
            let amps = (0..dims.dim())
                .map(|l| Complex64::new(populations.get(l).copied().unwrap_or(0.0).sqrt(), 0.0))
                .collect();
            unitary_from_profile(&DickeState::normalize(dims, amps).map_err(&err)?).map_err(&err)?
        }
        StateSpec::Profile(p) => {
            let amps = p.amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect();
            unitary_from_profile(&DickeState::normalize(dims, amps).map_err(&err)?).map_err(&err)?
        }
    };
    let state = apply_local(&unitary, &unitary, &seed).map_err(&err)?;
    summary.insert("vacuum_fidelity".into(), unitary.element(0, 0).norm_sqr());
    Ok(PreparedState { unitary, state, artifacts, summary, optimization })
}

fn scheme_for(kind: SchemeKind, unitary: &SymmetricUnitary) -> MeasurementScheme {
    match kind {
        SchemeKind::NonlocalParity => MeasurementScheme::nonlocal_parity(),
        SchemeKind::PositionObservable => MeasurementScheme::position_observable(),
        SchemeKind::LocalQuadrature => MeasurementScheme::local_quadrature(unitary),
    }
}

/// Envelope and spectral diagnostics of a Ramsey trace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceAnalysis {
    pub leakage: f64,
    pub energy: Option<EnergyMoments>,
    pub predicted_tau: Option<f64>,
    pub fitted_tau: Option<f64>,
    pub revival: Option<f64>,
    pub dominant_omega: Option<f64>,
}

impl TraceAnalysis {
    fn insert_into(&self, summary: &mut BTreeMap<String, f64>) {
        summary.insert("leakage".into(), self.leakage);
        let mut opt = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                summary.insert(k.into(), v);
            }
        };
        opt("excitation_mean", self.energy.map(|e| e.mean));
        opt("excitation_variance", self.energy.map(|e| e.variance));
        opt("predicted_tau_seconds", self.predicted_tau);
        opt("fitted_tau_seconds", self.fitted_tau);
        opt("revival_seconds", self.revival);
        opt("dominant_omega", self.dominant_omega);
    }
}

pub fn analyze(state: &TwoNodeState, ctx: &GravityContext, trace: &InterferenceTrace) -> TraceAnalysis {
    let profile = extract_excitation_profile(state);
    let weights = profile.weights();
    let energy = (weights.iter().sum::<f64>() > 0.0).then(|| EnergyMoments::from_distribution(&weights));
    let predicted_tau = energy.and_then(|e| decoherence_time(ctx, e.energy_spread(ctx.hbar(), ctx.omega_eg())).ok());
    TraceAnalysis {
        leakage: profile.leakage,
        energy,
        predicted_tau,
        fitted_tau: envelope_fit(trace).ok().map(|f| f.tau),
        revival: detect_revival(trace),
        dominant_omega: dominant_frequency(trace).ok(),
    }
}

/// A simulated trace and everything derived from it, before anything is written.
pub struct Simulation {
    pub prepared: PreparedState,
    pub trace: InterferenceTrace,
    pub comparison: Option<Vec<dickenet_core::measurement::ComparisonRow>>,
    pub analysis: TraceAnalysis,
}

pub fn simulate_in_memory(loaded: &LoadedConfig) -> Result<Simulation, CliError> {
    let cfg = &loaded.config;
    let prepared = prepare_state(loaded)?;
    let ctx = cfg.gravity.context().map_err(config_err(loaded, "gravity"))?;
    let scenario = RamseyScenario {
        prepared: prepared.state.clone(),
        ctx,
        scheme: scheme_for(cfg.scheme, &prepared.unitary),
        phi0: cfg.seed.phi0,
    };
    let times = cfg.time.times();
    let numeric = |e: Error| match e {
        Error::Numeric(m) => CliError::Numeric(m),
        other => CliError::Config(loaded.error("time", "", other.to_string())),
    };
    let (trace, comparison) = match cfg.path {
        PathChoice::Analytic => (run_ramsey(&scenario, &times, SignalPath::Analytic).map_err(numeric)?, None),
        PathChoice::Oracle => (run_ramsey(&scenario, &times, SignalPath::Oracle).map_err(numeric)?, None),
        PathChoice::Both => {
            let rows = compare_paths(&scenario, &times).map_err(numeric)?;
            let trace = InterferenceTrace::new(times.clone(), rows.iter().map(|r| r.analytic).collect())
                .map_err(numeric)?;
            (trace, Some(rows))
        }
    };
    let analysis = analyze(&prepared.state, &ctx, &trace);
    Ok(Simulation { prepared, trace, comparison, analysis })
}

fn header(command: &str, hash: &str, cfg: &ScenarioConfig) -> String {
    format!("dickenet {ARTIFACT_VERSION} command={command} param_hash={hash} name={}", cfg.name)
}

fn trace_rows(trace: &InterferenceTrace) -> Vec<Vec<String>> {
    trace.times().iter().zip(trace.signal()).map(|(t, i)| vec![num(*t), num(*i)]).collect()
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn manifest(
    command: &str,
    hash: String,
    started: Instant,
    checks: Vec<CheckRecord>,
    summary: BTreeMap<String, f64>,
    cfg: &ScenarioConfig,
) -> RunManifest {
    RunManifest {
        artifact_version: ARTIFACT_VERSION.into(),
        command: command.into(),
        param_hash: hash,
        duration_seconds: started.elapsed().as_secs_f64(),
        files: Vec::new(),
        checks,
        summary,
        warnings: cfg.gravity.context().map(|c| c.warnings()).unwrap_or_default(),
        scan: None,
        config: cfg.clone(),
    }
}

/// Completed run: where it went and whether its checks passed.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

fn simulation_checks(sim: &Simulation) -> Vec<CheckRecord> {
    let mut checks = vec![CheckRecord::new(
        "signal_bounded",
        sim.trace.signal().iter().all(|v| v.abs() <= 1.0 + 1e-12),
        "|I| ≤ 1",
    )];
    if let Some(rows) = &sim.comparison {
        let worst = rows.iter().map(|r| r.abs_diff()).fold(0.0, f64::max);
        let leaky = sim.analysis.leakage > 1e-9;
        // for leaky states the closed form only sees the ideal sector
        checks.push(CheckRecord::new(
            "analytic_vs_oracle",
            worst < 1e-9 || leaky,
            format!("max |diff| = {} with leakage {}", num(worst), num(sim.analysis.leakage)),
        ));
    }
    checks
}

pub fn cmd_simulate(loaded: &LoadedConfig, root: &Path) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let cfg = &loaded.config;
    let hash = parameter_hash("simulate", cfg, "");
    let sim = simulate_in_memory(loaded)?;
    let mut w = RunWriter::create(run_dir(root, cfg, "simulate"), header("simulate", &hash, cfg)).map_err(io_err)?;
    w.write_csv("trace.csv", &["T_seconds", "I"], trace_rows(&sim.trace)).map_err(io_err)?;
    if let Some(rows) = &sim.comparison {
        let rows = rows
            .iter()
            .map(|r| vec![num(r.time), num(r.analytic), num(r.oracle), num(r.abs_diff())]);
        w.write_csv("comparison.csv", &["T_seconds", "I_analytic", "I_oracle", "abs_diff"], rows)
            .map_err(io_err)?;
    }
    let weights = extract_excitation_profile(&sim.prepared.state).weights();
    w.write_csv(
        "profile.csv",
        &["l", "weight"],
        weights.iter().enumerate().skip(1).map(|(l, p)| vec![l.to_string(), num(*p)]),
    )
    .map_err(io_err)?;
    for (name, text) in &sim.prepared.artifacts {
        w.write_text(name, text).map_err(io_err)?;
    }
    let mut summary = sim.prepared.summary.clone();
    sim.analysis.insert_into(&mut summary);
    let checks = simulation_checks(&sim);
    let mut m = manifest("simulate", hash, started, checks, summary, cfg);
    let dir = w.commit(&mut m).map_err(io_err)?;
    Ok(RunOutcome { dir, manifest: m })
}

pub fn cmd_prepare(loaded: &LoadedConfig, root: &Path) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let cfg = &loaded.config;
    if !matches!(cfg.state, Some(StateSpec::Variational(_))) {
        return Err(CliError::Config(loaded.error("state", "kind", "prepare needs kind = \"variational\"")));
    }
    let hash = parameter_hash("prepare", cfg, "");
    let prepared = prepare_state(loaded)?;
    let result = prepared.optimization.as_ref().expect("variational");
    let mut w = RunWriter::create(run_dir(root, cfg, "prepare"), header("prepare", &hash, cfg)).map_err(io_err)?;
    for (name, text) in &prepared.artifacts {
        w.write_text(name, text).map_err(io_err)?;
    }
    let column1 = prepared.unitary.column(1);
    w.write_csv(
        "mass_distribution.csv",
        &["l", "population"],
        column1.iter().enumerate().map(|(l, a)| vec![l.to_string(), num(a.norm_sqr())]),
    )
    .map_err(io_err)?;
    let trace_rows = result.trace.iter().map(|r| {
        vec![
            r.index.to_string(),
            r.cost.map(num).unwrap_or_default(),
            r.evals.to_string(),
            r.aborted.clone().unwrap_or_else(|| "ok".into()).replace(',', ";"),
        ]
    });
    w.write_csv("cost_trace.csv", &["restart", "cost", "evals", "status"], trace_rows).map_err(io_err)?;
    let mut summary = prepared.summary.clone();
    let leakage = extract_excitation_profile(&prepared.state).leakage;
    summary.insert("leakage".into(), leakage);
    let fidelity = summary["vacuum_fidelity"];
    let checks = vec![
        CheckRecord::new("vacuum_fidelity", fidelity >= 0.95, format!("|⟨0|U|0⟩|² = {}", num(fidelity))),
        CheckRecord::new("leakage", leakage < 0.05, format!("ideal-sector leakage {}", num(leakage))),
    ];
    let mut m = manifest("prepare", hash, started, checks, summary, cfg);
    let dir = w.commit(&mut m).map_err(io_err)?;
    Ok(RunOutcome { dir, manifest: m })
}

pub fn aci_params(loaded: &LoadedConfig, ctx: &GravityContext) -> Result<AciParams, CliError> {
    let aci = loaded
        .config
        .aci
        .ok_or_else(|| CliError::Config(loaded.error("", "", "an [aci] section is required")))?;
    let err = config_err(loaded, "aci");
    match (aci.effective_mass, aci.effective_splitting, aci.upper, aci.lower) {
        (Some(m), Some(w), _, _) => AciParams::new(m, w).map_err(err),
        (_, _, Some(u), Some(l)) => AciParams::from_levels(ctx, u, l).map_err(err),
        _ => Err(CliError::Config(loaded.error("aci", "", "incomplete [aci] section"))),
    }
}

pub fn cmd_aci(loaded: &LoadedConfig, root: &Path) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let cfg = &loaded.config;
    let ctx = cfg.gravity.context().map_err(config_err(loaded, "gravity"))?;
    let params = aci_params(loaded, &ctx)?;
    let window = cfg.aci.expect("checked").window;
    let hash = parameter_hash("aci", cfg, "");
    let times = cfg.time.times();
    let trace = aci_interference(&params, &ctx, &times);
    let visibility = aci_visibility(&trace, window).map_err(config_err(loaded, "aci"))?;
    let mut w = RunWriter::create(run_dir(root, cfg, "aci"), header("aci", &hash, cfg)).map_err(io_err)?;
    w.write_csv("aci_trace.csv", &["T_seconds", "I"], trace_rows(&trace)).map_err(io_err)?;
    w.write_csv(
        "visibility.csv",
        &["T_seconds", "V"],
        times.iter().zip(&visibility).map(|(t, v)| vec![num(*t), num(*v)]),
    )
    .map_err(io_err)?;
    let (slow, beat) = params.frequencies(&ctx);
    let mut summary = BTreeMap::new();
    summary.insert("delta_Omega".into(), slow);
    summary.insert("delta_omega".into(), beat);
    summary.insert("visibility_min".into(), visibility.iter().copied().fold(f64::INFINITY, f64::min));
    summary.insert("visibility_max".into(), visibility.iter().copied().fold(0.0, f64::max));
    let checks = vec![CheckRecord::new(
        "visibility_range",
        visibility.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)),
        "0 ≤ V ≤ 1",
    )];
    let mut m = manifest("aci", hash, started, checks, summary, cfg);
    let dir = w.commit(&mut m).map_err(io_err)?;
    Ok(RunOutcome { dir, manifest: m })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanParam {
    Alpha,
    Atoms,
    DeltaZ,
    TMax,
}

impl std::str::FromStr for ScanParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" | "α" => Ok(Self::Alpha),
            "n" => Ok(Self::Atoms),
            "delta_z" | "dz" | "δz" => Ok(Self::DeltaZ),
            "t_max" | "tmax" => Ok(Self::TMax),
            _ => Err(format!("unknown scan parameter `{s}` (alpha, N, delta_z, t_max)")),
        }
    }
}

impl ScanParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::Atoms => "N",
            Self::DeltaZ => "delta_z",
            Self::TMax => "t_max",
        }
    }

    /// Returns the modified config, or a message about the value.
    fn apply(self, base: &ScenarioConfig, raw: &str) -> Result<(ScenarioConfig, f64), String> {
        let mut cfg = base.clone();
        let value = match self {
            Self::Alpha => {
                let a = crate::config::parse_angle(raw)?;
                match &mut cfg.state {
                    Some(StateSpec::PsiAlpha(spec)) => spec.alpha = a,
                    _ => return Err("scanning alpha needs kind = \"psi_alpha\"".into()),
                }
                a
            }
            Self::Atoms => {
                let n: usize = raw.trim().parse().map_err(|_| format!("`{raw}` is not an atom number"))?;
                cfg.atoms = n;
                n as f64
            }
            Self::DeltaZ => {
                let dz: f64 = raw.trim().parse().map_err(|_| format!("`{raw}` is not a height"))?;
                if cfg.gravity.phi_a.is_some() {
                    return Err("scanning delta_z needs potentials derived from delta_z".into());
                }
                cfg.gravity.delta_z = Some(dz);
                dz
            }
            Self::TMax => {
                let t: f64 = raw.trim().parse().map_err(|_| format!("`{raw}` is not a time"))?;
                cfg.time.stop = t;
                t
            }
        };
        cfg.validate().map_err(|(_, _, m)| m)?;
        Ok((cfg, value))
    }
}

pub fn cmd_scan(loaded: &LoadedConfig, root: &Path, param: &str, values: &[String]) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let arg_err = |m: String| CliError::Config(crate::config::ConfigError { path: None, line: None, message: m });
    let param: ScanParam = param.parse().map_err(arg_err)?;
    let values: Vec<String> = values.iter().map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(arg_err("--values needs at least one value".into()));
    }
    let cfg = &loaded.config;
    let extra = format!("param={} values={}", param.name(), values.join(","));
    let hash = parameter_hash("scan", cfg, &extra);
    let leaf = format!("scan-{}", param.name());
    let points = values
        .iter()
        .map(|raw| param.apply(cfg, raw).map_err(|m| arg_err(format!("scan value `{raw}`: {m}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = RunWriter::create(run_dir(root, cfg, &leaf), header("scan", &hash, cfg)).map_err(io_err)?;
    let mut summary_rows = Vec::new();
    let mut checks = Vec::new();
    for (i, (raw, (point_cfg, value))) in values.iter().zip(points).enumerate() {
        let point = LoadedConfig { config: point_cfg, path: loaded.path.clone(), text: loaded.text.clone() };
        let sim = simulate_in_memory(&point)?;
        w.write_csv(&format!("trace_{i:03}.csv"), &["T_seconds", "I"], trace_rows(&sim.trace)).map_err(io_err)?;
        let a = &sim.analysis;
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        let ratio = a.fitted_tau.zip(a.predicted_tau).map(|(f, p)| f / p);
        summary_rows.push(vec![
            i.to_string(),
            num(value),
            opt(a.fitted_tau),
            opt(a.predicted_tau),
            opt(ratio),
            opt(a.revival),
            num(a.leakage),
        ]);
        if let Some(r) = ratio {
            checks.push(CheckRecord::new(
                &format!("tau_within_10pct[{i}]"),
                (r - 1.0).abs() < 0.1,
                format!("{}={raw}: fitted/predicted = {}", param.name(), num(r)),
            ));
        }
    }
    w.write_csv(
        "summary.csv",
        &["index", "value", "fitted_tau", "predicted_tau", "ratio", "revival_T", "leakage"],
        summary_rows,
    )
    .map_err(io_err)?;
    let mut m = manifest("scan", hash, started, checks, BTreeMap::new(), cfg);
    m.scan = Some(ScanEcho { param: param.name().into(), values });
    let dir = w.commit(&mut m).map_err(io_err)?;
    Ok(RunOutcome { dir, manifest: m })
}
