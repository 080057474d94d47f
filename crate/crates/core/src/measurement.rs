//! Readout of the two-node interferometer.
//!
//! Three observables are modeled: photon parity behind a beam splitter
//! (non-local scheme), the product of local field quadratures after local
//! decoding (local scheme), and the which-node observable
//! `O_IF = Σ_ℓ |Ψ_{ℓ,+}⟩⟨Ψ_{ℓ,+}| − |Ψ_{ℓ,−}⟩⟨Ψ_{ℓ,−}|` with
//! `|Ψ_{ℓ,±}⟩ = (|0,ℓ⟩ ± |ℓ,0⟩)/√2`.
//!
//! Each has a closed-form signal in terms of the excitation weights
//! `|ψ_ℓ|²` and an independent brute-force evaluation in two-mode Fock space
//! (excitations read out one-to-one as photons).

use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dicke::SymmetricUnitary;
use crate::error::{check_dims, Error, Result};
use crate::gravity::{redshift_phase, GravityContext, InterferenceTrace, Node};
use crate::linalg::{self, CMatrix};
use crate::network::{apply_local, evolve_gravity, extract_excitation_profile, TwoNodeState};

/// A deliberate sign error in the closed-form signals, used to check that
/// the oracle comparison notices. [`SignMutation::None`] is the physics.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SignMutation {
    #[default]
    None,
    Phi0,
    NodeA,
    NodeB,
    Overall,
}

impl SignMutation {
    pub const ALL: [SignMutation; 4] =
        [SignMutation::Phi0, SignMutation::NodeA, SignMutation::NodeB, SignMutation::Overall];

    fn signs(self) -> [f64; 4] {
        let mut s = [1.0; 4];
        match self {
            SignMutation::None => {}
            SignMutation::Phi0 => s[0] = -1.0,
            SignMutation::NodeA => s[1] = -1.0,
            SignMutation::NodeB => s[2] = -1.0,
            SignMutation::Overall => s[3] = -1.0,
        }
        s
    }

    pub fn name(self) -> &'static str {
        match self {
            SignMutation::None => "none",
            SignMutation::Phi0 => "phi0",
            SignMutation::NodeA => "node_a",
            SignMutation::NodeB => "node_b",
            SignMutation::Overall => "overall",
        }
    }
}

fn phases(weights: &[f64], ctx: &GravityContext, node: Node, time: f64) -> Vec<f64> {
    (0..weights.len()).map(|l| redshift_phase(ctx, l, node, time)).collect()
}

/// `I = Σ_{ℓ≥1} |ψ_ℓ|² cos(φ_{ℓ,B} − φ_{ℓ,A} − φ₀)`; `weights[ℓ] = |ψ_ℓ|²`.
pub fn signal_nonlocal_analytic(weights: &[f64], ctx: &GravityContext, phi0: f64, time: f64) -> f64 {
    signal_nonlocal_mutated(weights, ctx, phi0, time, SignMutation::None)
}

#[doc(hidden)]
pub fn signal_nonlocal_mutated(
    weights: &[f64],
    ctx: &GravityContext,
    phi0: f64,
    time: f64,
    mutation: SignMutation,
) -> f64 {
    let [s0, sa, sb, so] = mutation.signs();
    let pa = phases(weights, ctx, Node::A, time);
    let pb = phases(weights, ctx, Node::B, time);
    so * (1..weights.len())
        .map(|l| weights[l] * (sb * pb[l] - sa * pa[l] - s0 * phi0).cos())
        .sum::<f64>()
}

/// `I = ½ Σ_{ℓ,ℓ'≥1} |ψ_ℓ|²|ψ_ℓ'|² cos(φ_{ℓ,B} − φ_{ℓ',A} − φ₀)`.
pub fn signal_local_analytic(weights: &[f64], ctx: &GravityContext, phi0: f64, time: f64) -> f64 {
    signal_local_mutated(weights, ctx, phi0, time, SignMutation::None)
}

#[doc(hidden)]
pub fn signal_local_mutated(
    weights: &[f64],
    ctx: &GravityContext,
    phi0: f64,
    time: f64,
    mutation: SignMutation,
) -> f64 {
    let [s0, sa, sb, so] = mutation.signs();
    let pa = phases(weights, ctx, Node::A, time);
    let pb = phases(weights, ctx, Node::B, time);
    // Re[(Σ w e^{iφ_B})(Σ w' e^{−iφ_A}) e^{−iφ₀}] factorizes the double sum
    let b: Complex64 = (1..weights.len())
        .map(|l| Complex64::from_polar(weights[l], sb * pb[l]))
        .sum();
    let a: Complex64 = (1..weights.len())
        .map(|l| Complex64::from_polar(weights[l], -sa * pa[l]))
        .sum();
    so * 0.5 * (b * a * Complex64::from_polar(1.0, -s0 * phi0)).re
}

/// `⟨O_IF⟩`; components outside the single-branch sector contribute nothing.
pub fn position_observable_expectation(state: &TwoNodeState) -> f64 {
    // |a+b|²/2 − |a−b|²/2 = 2 Re(a* b)
    (1..state.dims().dim())
        .map(|l| 2.0 * (state.amplitude(0, l).conj() * state.amplitude(l, 0)).re)
        .sum()
}

/// Two bosonic modes truncated at `n_max` photons each.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeFockState {
    n_max: usize,
    /// `amplitudes[(n_A, n_B)]`.
    amplitudes: CMatrix,
}

impl TwoModeFockState {
    /// Excitation numbers become photon numbers.
    pub fn embed(state: &TwoNodeState, n_max: usize) -> Result<Self> {
        let n = state.dims().atoms();
        if n_max < n + 1 {
            return Err(Error::domain(format!("n_max = {n_max} must be at least N + 1 = {}", n + 1)));
        }
        let mut m = CMatrix::zeros(n_max + 1, n_max + 1);
        for la in 0..=n {
            for lb in 0..=n {
                m[(la, lb)] = state.amplitude(la, lb);
            }
        }
        Ok(Self { n_max, amplitudes: m })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> Complex64 {
        self.amplitudes[(n_a, n_b)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨(−1)^{N_B}⟩`.
    pub fn parity_b(&self) -> f64 {
        let mut total = 0.0;
        for n_a in 0..=self.n_max {
            for n_b in 0..=self.n_max {
                let sign = if n_b % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * self.amplitudes[(n_a, n_b)].norm_sqr();
            }
        }
        total
    }

    /// `⟨q_A q_B⟩` with `q = (a + a†)/√2` truncated at `n_max`.
    pub fn quadrature_product(&self) -> f64 {
        let q = quadrature_matrix(self.n_max);
        let out = &q * &self.amplitudes * q.transpose();
        self.amplitudes
            .iter()
            .zip(out.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

fn quadrature_matrix(n_max: usize) -> CMatrix {
    let mut q = CMatrix::zeros(n_max + 1, n_max + 1);
    for n in 0..n_max {
        let v = Complex64::new(((n + 1) as f64 / 2.0).sqrt(), 0.0);
        q[(n, n + 1)] = v;
        q[(n + 1, n)] = v;
    }
    q
}

/// Beam splitter on the `n`-photon sector, basis `|k, n−k⟩` for `k = 0..=n`.
///
/// The transfer matrix `(1/√2)[[1, 1], [1, −1]]` sends `|1,0⟩` to
/// `(|1,0⟩ + |0,1⟩)/√2` and `|0,1⟩` to `(|1,0⟩ − |0,1⟩)/√2`. It equals
/// `exp(−(π/4)(a†b − ab†))` preceded by the phase `(−1)^{N_B}`.
pub fn beam_splitter_sector(n: usize) -> CMatrix {
    // H = −i(a†b − ab†) is Hermitian
    let mut h = CMatrix::zeros(n + 1, n + 1);
    for k in 0..n {
        // a†b |k, n−k⟩ = √((k+1)(n−k)) |k+1, n−k−1⟩
        let v = (((k + 1) * (n - k)) as f64).sqrt();
        h[(k + 1, k)] += Complex64::new(0.0, -v);
        h[(k, k + 1)] += Complex64::new(0.0, v);
    }
    let mut u = linalg::exp_minus_i(&h, std::f64::consts::FRAC_PI_4);
    for k in 0..=n {
        if (n - k) % 2 == 1 {
            for r in 0..=n {
                u[(r, k)] = -u[(r, k)];
            }
        }
    }
    u
}

/// The beam splitter on a fixed truncation, with sector unitaries built on
/// first use and shared across calls (and threads).
#[derive(Debug)]
pub struct BeamSplitter {
    n_max: usize,
    sectors: Vec<OnceLock<CMatrix>>,
}

impl BeamSplitter {
    pub fn new(n_max: usize) -> Self {
        Self { n_max, sectors: (0..=n_max).map(|_| OnceLock::new()).collect() }
    }

    fn sector(&self, n: usize) -> &CMatrix {
        self.sectors[n].get_or_init(|| beam_splitter_sector(n))
    }

    /// Every photon sector present must fit the truncation; otherwise the
    /// output would be cut and this fails.
    pub fn apply(&self, state: &TwoModeFockState) -> Result<TwoModeFockState> {
        let n_max = state.n_max;
        check_dims(self.n_max, n_max)?;
        let mut out = CMatrix::zeros(n_max + 1, n_max + 1);
        for n in 0..=2 * n_max {
            let ks = n.saturating_sub(n_max)..=n.min(n_max);
            let weight: f64 = ks.map(|k| state.amplitudes[(k, n - k)].norm_sqr()).sum();
            if weight == 0.0 {
                continue;
            }
            if n > n_max {
                if weight > 1e-24 {
                    return Err(Error::domain(format!(
                        "{n} photons in total exceed the truncation n_max = {n_max}"
                    )));
                }
                continue;
            }
            let input = linalg::CVector::from_fn(n + 1, |k, _| state.amplitudes[(k, n - k)]);
            let output = self.sector(n) * input;
            for k in 0..=n {
                out[(k, n - k)] = output[k];
            }
        }
        Ok(TwoModeFockState { n_max, amplitudes: out })
    }

    /// Non-local readout: embed, beam splitter, photon parity.
    pub fn parity(&self, state: &TwoNodeState) -> Result<f64> {
        let fock = TwoModeFockState::embed(state, self.n_max)?;
        Ok(self.apply(&fock)?.parity_b())
    }
}

pub fn beam_splitter(state: &TwoModeFockState) -> Result<TwoModeFockState> {
    BeamSplitter::new(state.n_max).apply(state)
}

/// Non-local readout by brute force: embed, beam splitter, photon parity.
pub fn oracle_beam_splitter_parity(state: &TwoNodeState, n_max: usize) -> Result<f64> {
    BeamSplitter::new(n_max).parity(state)
}

/// Local readout by brute force: decode with `U_m ⊗ U_m`, embed, `⟨q_A q_B⟩`.
pub fn oracle_quadrature_product(
    state: &TwoNodeState,
    decoder: &SymmetricUnitary,
    n_max: usize,
) -> Result<f64> {
    let decoded = apply_local(decoder, decoder, state)?;
    Ok(TwoModeFockState::embed(&decoded, n_max)?.quadrature_product())
}

/// `|Ψ_{ℓ,σ}⟩` for `σ = ±1`.
pub fn branch_state(dims: crate::dicke::EnsembleDims, l: usize, sigma: i8) -> Result<TwoNodeState> {
    if l == 0 || l > dims.atoms() {
        return Err(Error::domain(format!("branch excitation {l} outside 1..=N")));
    }
    let d = dims.dim();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![Complex64::new(0.0, 0.0); d * d];
    v[l] = Complex64::new(h, 0.0);
    v[l * d] = Complex64::new(f64::from(sigma.signum()) * h, 0.0);
    TwoNodeState::from_amplitudes(dims, v)
}

/// `⟨Ψ_{ℓ,σ}|q_A q_B|Ψ_{ℓ',σ'}⟩` in two-mode Fock space.
pub fn quadrature_matrix_element(
    dims: crate::dicke::EnsembleDims,
    bra: (usize, i8),
    ket: (usize, i8),
    n_max: usize,
) -> Result<f64> {
    let b = TwoModeFockState::embed(&branch_state(dims, bra.0, bra.1)?, n_max)?;
    let k = TwoModeFockState::embed(&branch_state(dims, ket.0, ket.1)?, n_max)?;
    let q = quadrature_matrix(n_max);
    let out = &q * &k.amplitudes * q.transpose();
    let amp: Complex64 = b.amplitudes.iter().zip(out.iter()).map(|(x, y)| x.conj() * y).sum();
    Ok(amp.re)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    NonlocalParity,
    LocalQuadrature,
    PositionObservable,
}

/// Which evaluation route `run_ramsey` takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalPath {
    /// Closed form on the ideal-sector weights.
    Analytic,
    /// Full state through the Fock-space or projector evaluation.
    Oracle,
}

#[derive(Clone, Debug)]
pub struct MeasurementScheme {
    kind: SchemeKind,
    decoder: Option<SymmetricUnitary>,
}

impl MeasurementScheme {
    pub fn nonlocal_parity() -> Self {
        Self { kind: SchemeKind::NonlocalParity, decoder: None }
    }

    pub fn position_observable() -> Self {
        Self { kind: SchemeKind::PositionObservable, decoder: None }
    }

    /// Local homodyne readout after decoding with `U_p†`.
    pub fn local_quadrature(preparation: &SymmetricUnitary) -> Self {
        Self { kind: SchemeKind::LocalQuadrature, decoder: Some(preparation.adjoint()) }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn decoder(&self) -> Option<&SymmetricUnitary> {
        self.decoder.as_ref()
    }
}

/// Everything needed to produce `I(T)`.
#[derive(Clone, Debug)]
pub struct RamseyScenario {
    /// `(U_p ⊗ U_p)|Ψ_0⟩`.
    pub prepared: TwoNodeState,
    pub ctx: GravityContext,
    pub scheme: MeasurementScheme,
    pub phi0: f64,
}

impl RamseyScenario {
    fn weights(&self) -> Vec<f64> {
        extract_excitation_profile(&self.prepared).weights()
    }

    fn analytic_at(&self, weights: &[f64], time: f64, mutation: SignMutation) -> f64 {
        match self.scheme.kind {
            SchemeKind::NonlocalParity | SchemeKind::PositionObservable => {
                signal_nonlocal_mutated(weights, &self.ctx, self.phi0, time, mutation)
            }
            SchemeKind::LocalQuadrature => {
                signal_local_mutated(weights, &self.ctx, self.phi0, time, mutation)
            }
        }
    }

    fn oracle_at(&self, time: f64, n_max: usize, splitter: &BeamSplitter) -> Result<f64> {
        let evolved = evolve_gravity(&self.prepared, &self.ctx, time)?;
        match self.scheme.kind {
            SchemeKind::NonlocalParity => splitter.parity(&evolved),
            SchemeKind::PositionObservable => Ok(position_observable_expectation(&evolved)),
            SchemeKind::LocalQuadrature => {
                let decoder = self
                    .scheme
                    .decoder
                    .as_ref()
                    .ok_or_else(|| Error::domain("local scheme needs a decoder"))?;
                oracle_quadrature_product(&evolved, decoder, n_max)
            }
        }
    }

    /// Default truncation: enough for every photon sector of the state.
    pub fn default_n_max(&self) -> usize {
        let n = self.prepared.dims().atoms();
        match self.scheme.kind {
            SchemeKind::NonlocalParity => 2 * n + 1,
            _ => n + 2,
        }
    }
}

fn map_times<F>(times: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        times.par_iter().map(|&t| f(t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        times.iter().map(|&t| f(t)).collect()
    }
}

/// Evaluates the scenario on a time grid along one path.
pub fn run_ramsey(scenario: &RamseyScenario, times: &[f64], path: SignalPath) -> Result<InterferenceTrace> {
    run_ramsey_mutated(scenario, times, path, SignMutation::None)
}

#[doc(hidden)]
pub fn run_ramsey_mutated(
    scenario: &RamseyScenario,
    times: &[f64],
    path: SignalPath,
    mutation: SignMutation,
) -> Result<InterferenceTrace> {
    if let Some(bad) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::domain(format!("time {bad} must be ≥ 0")));
    }
    let signal = match path {
        SignalPath::Analytic => {
            let w = scenario.weights();
            map_times(times, |t| Ok(scenario.analytic_at(&w, t, mutation)))?
        }
        SignalPath::Oracle => {
            let n_max = scenario.default_n_max();
            let splitter = BeamSplitter::new(n_max);
            map_times(times, |t| scenario.oracle_at(t, n_max, &splitter))?
        }
    };
    InterferenceTrace::new(times.to_vec(), signal)
}

/// A parabola through three equally spaced samples; returns the offset of
/// the vertex (in steps) and its height.
fn parabolic_peak(y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let denom = y0 - 2.0 * y1 + y2;
    if denom.abs() < 1e-300 {
        return (0.0, y1);
    }
    let offset = (0.5 * (y0 - y2) / denom).clamp(-1.0, 1.0);
    (offset, y1 - 0.25 * (y0 - y2) * offset)
}

/// Local maxima of `|I|` as `(T, height)`, refined by parabolic
/// interpolation. The first sample counts if it is not below the second.
pub fn envelope_maxima(trace: &InterferenceTrace) -> Vec<(f64, f64)> {
    let t = trace.times();
    let y: Vec<f64> = trace.signal().iter().map(|v| v.abs()).collect();
    let mut out = Vec::new();
    if y.len() >= 2 && y[0] >= y[1] {
        out.push((t[0], y[0]));
    }
    for i in 1..y.len().saturating_sub(1) {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            let (offset, height) = parabolic_peak(y[i - 1], y[i], y[i + 1]);
            let step = if offset >= 0.0 { t[i + 1] - t[i] } else { t[i] - t[i - 1] };
            out.push((t[i] + offset * step, height.min(1.0)));
        }
    }
    out
}

/// Rise of the maxima sequence that counts as the end of the initial decay.
const REVIVAL_ONSET_RISE: f64 = 0.01;
/// Envelope recovery that counts as a revival.
const REVIVAL_RISE: f64 = 0.1;

/// Index of the first maximum that exceeds its predecessor by more than
/// the onset threshold.
fn revival_onset(maxima: &[(f64, f64)]) -> Option<usize> {
    (1..maxima.len()).find(|&k| maxima[k].1 > maxima[k - 1].1 + REVIVAL_ONSET_RISE)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFit {
    pub tau: f64,
    /// Maxima used in the fit.
    pub points: Vec<(f64, f64)>,
    pub rms_residual: f64,
}

/// Fits `exp(−(T/τ)²)` to the maxima of `|I|` before the first revival
/// and above `e⁻¹` of full contrast.
pub fn envelope_fit(trace: &InterferenceTrace) -> Result<EnvelopeFit> {
    let maxima = envelope_maxima(trace);
    let end = revival_onset(&maxima).unwrap_or(maxima.len());
    let floor = (-1.0f64).exp();
    let points: Vec<(f64, f64)> = maxima[..end].iter().copied().filter(|p| p.1 >= floor).collect();
    if points.len() < 3 || points.iter().all(|p| p.1 > 1.0 - 1e-9) {
        return Err(Error::domain(format!(
            "only {} decaying envelope maxima; cannot fit a Gaussian",
            points.len()
        )));
    }
    let sse = |log_tau: f64| -> f64 {
        let tau = log_tau.exp();
        points.iter().map(|(t, m)| (m - (-(t / tau).powi(2)).exp()).powi(2)).sum()
    };
    let t_last = points.last().map(|p| p.0).unwrap_or(1.0).max(1e-300);
    let (lo, hi) = ((t_last * 1e-3).ln(), (t_last * 1e3).ln());
    // coarse scan then golden section on the best bracket
    let grid = 400;
    let step = (hi - lo) / grid as f64;
    let best = (0..=grid)
        .map(|k| lo + k as f64 * step)
        .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
        .expect("non-empty grid");
    let log_tau = golden_section(sse, best - step, best + step, 1e-12);
    let tau = log_tau.exp();
    Ok(EnvelopeFit {
        tau,
        rms_residual: (sse(log_tau) / points.len() as f64).sqrt(),
        points,
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Time of the first revival: after the envelope has decayed to at most 80%
/// of its initial height, a later maximum rises at least 0.1 above the
/// lowest maximum seen so far.
pub fn detect_revival(trace: &InterferenceTrace) -> Option<f64> {
    let maxima = envelope_maxima(trace);
    let first = maxima.first()?.1;
    let mut lowest = first;
    for &(t, m) in &maxima[1..] {
        if lowest <= 0.8 * first && m >= lowest + REVIVAL_RISE {
            return Some(t);
        }
        lowest = lowest.min(m);
    }
    None
}

/// Dominant angular frequency (rad/s) of a uniformly sampled trace: FFT
/// peak of the Hann-windowed spectrum, refined by a least-squares sinusoid
/// fit around it.
pub fn dominant_frequency(trace: &InterferenceTrace) -> Result<f64> {
    let t = trace.times();
    let n = t.len();
    if n < 8 {
        return Err(Error::domain("need at least 8 samples"));
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-300)) || dt <= 0.0 {
        return Err(Error::domain("dominant_frequency needs a uniform time grid"));
    }
    let mean = trace.signal().iter().sum::<f64>() / n as f64;
    let hann: Vec<f64> = (0..n)
        .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
        .collect();
    let samples: Vec<f64> = trace.signal().iter().zip(&hann).map(|(y, w)| (y - mean) * w).collect();

    let padded = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let (peak, _) = buf[1..padded / 2]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .ok_or_else(|| Error::domain("empty spectrum"))?;
    let bin = (peak + 1) as f64;
    // least-squares fit of c + a cos ωt + b sin ωt; unlike the windowed
    // transform it has no bias from the negative-frequency image
    let y = trace.signal();
    let residual = |omega: f64| -> f64 {
        let mut gram = nalgebra::Matrix3::<f64>::zeros();
        let mut rhs = nalgebra::Vector3::<f64>::zeros();
        for (k, &v) in y.iter().enumerate() {
            let (s, c) = (omega * k as f64 * dt).sin_cos();
            let basis = nalgebra::Vector3::new(1.0, c, s);
            gram += basis * basis.transpose();
            rhs += basis * v;
        }
        match gram.cholesky() {
            Some(ch) => -rhs.dot(&ch.solve(&rhs)),
            None => 0.0,
        }
    };
    let omega_bin = 2.0 * std::f64::consts::PI / (padded as f64 * dt);
    let omega = golden_section(residual, (bin - 1.0) * omega_bin, (bin + 1.0) * omega_bin, 1e-14 * bin * omega_bin);
    if omega <= 0.0 {
        return Err(Error::Numeric("no positive frequency found".into()));
    }
    Ok(omega)
}

/// One row of an analytic-versus-oracle comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRow {
    pub time: f64,
    pub analytic: f64,
    pub oracle: f64,
}

impl ComparisonRow {
    pub fn abs_diff(&self) -> f64 {
        (self.analytic - self.oracle).abs()
    }
}

pub fn compare_paths(scenario: &RamseyScenario, times: &[f64]) -> Result<Vec<ComparisonRow>> {
    let a = run_ramsey(scenario, times, SignalPath::Analytic)?;
    let o = run_ramsey(scenario, times, SignalPath::Oracle)?;
    Ok(times
        .iter()
        .zip(a.signal().iter().zip(o.signal()))
        .map(|(&time, (&analytic, &oracle))| ComparisonRow { time, analytic, oracle })
        .collect())
}

/// Beam splitter by substituting the mode transformation into
/// `(a†)^n (b†)^m / √(n! m!)`. Slow; used to validate [`beam_splitter`].
pub fn beam_splitter_by_expansion(state: &TwoModeFockState) -> TwoModeFockState {
    let n_max = state.n_max;
    let mut out: HashMap<(usize, usize), Complex64> = HashMap::new();
    let ln_fact = |m: usize| (1..=m).map(|j| (j as f64).ln()).sum::<f64>();
    let binom = |n: usize, k: usize| (ln_fact(n) - ln_fact(k) - ln_fact(n - k)).exp();
    for na in 0..=n_max {
        for nb in 0..=n_max {
            let amp = state.amplitudes[(na, nb)];
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            // a† → (a† + b†)/√2, b† → (a† − b†)/√2
            let total = na + nb;
            let norm = 2f64.powf(-(total as f64) / 2.0) / (ln_fact(na) + ln_fact(nb)).exp().sqrt();
            for i in 0..=na {
                for j in 0..=nb {
                    let (pa, pb) = (i + j, total - i - j);
                    let sign = if (nb - j) % 2 == 0 { 1.0 } else { -1.0 };
                    let c = sign * binom(na, i) * binom(nb, j) * norm
                        * (ln_fact(pa) + ln_fact(pb)).exp().sqrt();
                    *out.entry((pa, pb)).or_insert(Complex64::new(0.0, 0.0)) += amp * c;
                }
            }
        }
    }
    let size = 2 * n_max + 1;
    let mut m = CMatrix::zeros(size, size);
    for ((pa, pb), v) in out {
        m[(pa, pb)] = v;
    }
    TwoModeFockState { n_max: 2 * n_max, amplitudes: m }
}
