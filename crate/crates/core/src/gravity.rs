//! Gravitational redshift phases, the decoherence time scale, and the
//! clock-interferometer beat note.
//!
//! Only the leading mass-defect coupling `ℓ m_eg φ(r)` is modeled: a node in
//! Dicke state `|ℓ⟩` at potential `φ` accumulates `ℓ ω_eg φ T / c²` relative
//! to the clock that defines coordinate time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Above this `|φ|/c²` the weak-field expansion is questionable.
const WEAK_FIELD_LIMIT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    A,
    B,
}

/// Where the lab-frame clock sits; its potential is taken as zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceNode {
    #[default]
    A,
    B,
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GravityContext {
    omega_eg: f64,
    c: f64,
    hbar: f64,
    g: f64,
    delta_z: f64,
    phi_a: f64,
    phi_b: f64,
    reference: ReferenceNode,
}

impl GravityContext {
    /// Uniform field `g` with node B a height `delta_z` above node A and
    /// `φ_A = 0`.
    pub fn new(omega_eg: f64, g: f64, delta_z: f64) -> Result<Self> {
        let ctx = Self {
            omega_eg,
            c: SPEED_OF_LIGHT,
            hbar: HBAR,
            g,
            delta_z,
            phi_a: 0.0,
            phi_b: g * delta_z,
            reference: ReferenceNode::A,
        };
        ctx.validate()
    }

    /// Standard gravity near the Earth's surface.
    pub fn earth(omega_eg: f64, delta_z: f64) -> Result<Self> {
        Self::new(omega_eg, STANDARD_GRAVITY, delta_z)
    }

    /// Overrides the node potentials (m²/s²); `g Δz` is no longer assumed.
    pub fn with_potentials(mut self, phi_a: f64, phi_b: f64) -> Result<Self> {
        self.phi_a = phi_a;
        self.phi_b = phi_b;
        self.validate()
    }

    pub fn with_reference(mut self, reference: ReferenceNode) -> Self {
        self.reference = reference;
        self
    }

    /// Overrides `c` and `ħ`, e.g. to exaggerate relativistic effects in tests.
    pub fn with_constants(mut self, c: f64, hbar: f64) -> Result<Self> {
        self.c = c;
        self.hbar = hbar;
        self.validate()
    }

    fn validate(self) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("omega_eg", self.omega_eg)?;
        positive("c", self.c)?;
        positive("hbar", self.hbar)?;
        if !(self.g.is_finite() && self.delta_z.is_finite()) {
            return Err(Error::domain("g and delta_z must be finite"));
        }
        if !(self.phi_a.is_finite() && self.phi_b.is_finite()) {
            return Err(Error::domain("potentials must be finite"));
        }
        Ok(self)
    }

    pub fn omega_eg(&self) -> f64 {
        self.omega_eg
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn delta_z(&self) -> f64 {
        self.delta_z
    }
    pub fn reference(&self) -> ReferenceNode {
        self.reference
    }

    /// Mass defect `m_eg = ħ ω_eg / c²` of one excitation.
    pub fn excitation_mass(&self) -> f64 {
        self.hbar * self.omega_eg / (self.c * self.c)
    }

    fn reference_potential(&self) -> f64 {
        match self.reference {
            ReferenceNode::A => self.phi_a,
            ReferenceNode::B => self.phi_b,
            ReferenceNode::Midpoint => 0.5 * (self.phi_a + self.phi_b),
        }
    }

    /// Potential at `node` relative to the reference clock.
    pub fn relative_potential(&self, node: Node) -> f64 {
        let phi = match node {
            Node::A => self.phi_a,
            Node::B => self.phi_b,
        };
        phi - self.reference_potential()
    }

    /// `Δφ = φ_B − φ_A`.
    pub fn potential_difference(&self) -> f64 {
        self.phi_b - self.phi_a
    }

    /// Human-readable warnings for questionable parameter regimes.
    pub fn warnings(&self) -> Vec<String> {
        let c2 = self.c * self.c;
        [("A", self.phi_a), ("B", self.phi_b)]
            .into_iter()
            .filter(|(_, phi)| phi.abs() / c2 > WEAK_FIELD_LIMIT)
            .map(|(name, phi)| {
                format!("|φ_{name}|/c² = {:.3e} exceeds the weak-field limit", phi.abs() / c2)
            })
            .collect()
    }
}

/// `φ_{ℓ,n} = ℓ ω_eg φ_n T / c²` with `φ_n` relative to the reference clock.
pub fn redshift_phase(ctx: &GravityContext, excitations: usize, node: Node, time: f64) -> f64 {
    excitations as f64 * ctx.omega_eg * ctx.relative_potential(node) * time / (ctx.c * ctx.c)
}

/// `τ_dec = √2 ħ c² / (ΔE g Δz)` for an energy spread `ΔE` in joules.
pub fn decoherence_time(ctx: &GravityContext, energy_spread: f64) -> Result<f64> {
    if !(energy_spread > 0.0 && energy_spread.is_finite()) {
        return Err(Error::domain(format!("energy spread must be positive, got {energy_spread}")));
    }
    let gdz = ctx.g * ctx.delta_z;
    if gdz == 0.0 {
        return Err(Error::domain("g Δz = 0 gives no decoherence"));
    }
    Ok(std::f64::consts::SQRT_2 * ctx.hbar * ctx.c * ctx.c / (energy_spread * gdz.abs()))
}

pub fn gaussian_envelope(time: f64, tau: f64) -> f64 {
    (-(time / tau).powi(2)).exp()
}

/// Effective particle of a clock interferometer: rest-mass shift of the
/// lower internal state and internal splitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AciParams {
    effective_mass: f64,
    effective_splitting: f64,
}

impl AciParams {
    pub fn new(effective_mass: f64, effective_splitting: f64) -> Result<Self> {
        if !(effective_mass > 0.0 && effective_mass.is_finite()) {
            return Err(Error::domain("effective mass must be positive"));
        }
        if !effective_splitting.is_finite() {
            return Err(Error::domain("effective splitting must be finite"));
        }
        Ok(Self { effective_mass, effective_splitting })
    }

    /// `m̃ = ℓ↓ ħω_eg/c²`, `ω̃ = (ℓ↑ − ℓ↓) ω_eg`.
    pub fn from_levels(ctx: &GravityContext, upper: usize, lower: usize) -> Result<Self> {
        if upper < lower {
            return Err(Error::domain(format!("upper level {upper} below lower level {lower}")));
        }
        Self::new(
            lower as f64 * ctx.excitation_mass(),
            (upper - lower) as f64 * ctx.omega_eg,
        )
    }

    pub fn effective_mass(&self) -> f64 {
        self.effective_mass
    }

    pub fn effective_splitting(&self) -> f64 {
        self.effective_splitting
    }

    /// `(δΩ, δω)`: the COW frequency and the internal beat frequency.
    pub fn frequencies(&self, ctx: &GravityContext) -> (f64, f64) {
        let dphi = ctx.potential_difference();
        (
            self.effective_mass * dphi / ctx.hbar,
            self.effective_splitting * dphi / (ctx.c * ctx.c),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterferenceTrace {
    times: Vec<f64>,
    signal: Vec<f64>,
}

impl InterferenceTrace {
    pub fn new(times: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        if times.len() != signal.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), actual: signal.len() });
        }
        if let Some(bad) = signal.iter().find(|v| !(v.abs() <= 1.0 + 1e-9)) {
            return Err(Error::Numeric(format!("interference signal {bad} outside [−1, 1]")));
        }
        Ok(Self { times, signal })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `I(T) = ½[cos(δΩT) + cos((δΩ + δω)T)]`.
pub fn aci_interference(aci: &AciParams, ctx: &GravityContext, times: &[f64]) -> InterferenceTrace {
    let (slow, beat) = aci.frequencies(ctx);
    let signal = times
        .iter()
        .map(|&t| 0.5 * ((slow * t).cos() + ((slow + beat) * t).cos()))
        .collect();
    InterferenceTrace { times: times.to_vec(), signal }
}

/// Sliding-window visibility `(I_max − I_min)/2` over samples within
/// `window/2` of each time. Windows are truncated at the trace ends.
pub fn aci_visibility(trace: &InterferenceTrace, window: f64) -> Result<Vec<f64>> {
    let times = trace.times();
    let min_step = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("trace times must be strictly increasing"));
    }
    if !(window.is_finite() && window >= 2.0 * min_step) {
        return Err(Error::domain(format!(
            "window {window} must span at least two sampling steps ({min_step})"
        )));
    }
    Ok(sliding_half_range(times, trace.signal(), window / 2.0))
}

fn sliding_half_range(times: &[f64], values: &[f64], half: f64) -> Vec<f64> {
    use std::collections::VecDeque;
    let n = times.len();
    let mut out = Vec::with_capacity(n);
    let (mut maxq, mut minq) = (VecDeque::<usize>::new(), VecDeque::<usize>::new());
    let (mut lo, mut hi) = (0usize, 0usize);
    for i in 0..n {
        while hi < n && times[hi] <= times[i] + half {
            while maxq.back().is_some_and(|&k| values[k] <= values[hi]) {
                maxq.pop_back();
            }
            maxq.push_back(hi);
            while minq.back().is_some_and(|&k| values[k] >= values[hi]) {
                minq.pop_back();
            }
            minq.push_back(hi);
            hi += 1;
        }
        while times[lo] < times[i] - half {
            lo += 1;
        }
        while maxq.front().is_some_and(|&k| k < lo) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&k| k < lo) {
            minq.pop_front();
        }
        out.push(0.5 * (values[maxq[0]] - values[minq[0]]));
    }
    out
}
