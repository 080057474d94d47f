//! Variational compilation of the local amplification unitary `U_p`.
//!
//! Ansatz: `U_p = R_{n_r}(θ_r) T_{n_p}(χ_p) ⋯ T_{n_1}(χ_1)`. Costs depend on
//! `U_p` only through `|⟨ℓ|U_p|0⟩|` and `|⟨ℓ|U_p|1⟩|`, which are unchanged
//! by a z-rotation before or after `U_p`. The optimizer therefore works on
//! `3p + 1` reduced parameters:
//!
//! ```text
//! [θ_1, χ_1, (θ_i, φ_i, χ_i) for i = 2..p, β, γ]
//! ```
//!
//! where `(θ_i, φ_i)` are polar/azimuthal axis angles (the first azimuth is
//! fixed to zero) and the final rotation is `R_y(β) R_z(γ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dicke::{
    coherent_state, collective_spin, dicke_basis_state, oat, rotation, CollectiveAxis,
    DickeFrame, DickeState, EnsembleDims, SymmetricUnitary,
};
use crate::error::{check_dims, Error, Result};
use crate::linalg::CVector;
use crate::nelder_mead::{self, NelderMeadOptions};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OatLayer {
    pub axis: CollectiveAxis,
    pub twist: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalRotation {
    pub axis: CollectiveAxis,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalAnsatz {
    layers: Vec<OatLayer>,
    final_rotation: FinalRotation,
}

impl VariationalAnsatz {
    pub fn new(layers: Vec<OatLayer>, final_rotation: FinalRotation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::domain("the ansatz needs at least one twisting layer"));
        }
        let finite = layers.iter().all(|l| l.twist.is_finite()) && final_rotation.angle.is_finite();
        if !finite {
            return Err(Error::domain("ansatz angles must be finite"));
        }
        Ok(Self { layers, final_rotation })
    }

    pub fn layers(&self) -> &[OatLayer] {
        &self.layers
    }

    pub fn final_rotation(&self) -> FinalRotation {
        self.final_rotation
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Raw layout `[(θ_i, φ_i, χ_i) for i = 1..p, θ_r, φ_r, angle]`.
    pub fn from_raw(params: &[f64]) -> Result<Self> {
        if params.len() < 6 || params.len() % 3 != 0 {
            return Err(Error::domain(format!("{} is not a raw parameter count 3p+3", params.len())));
        }
        let p = params.len() / 3 - 1;
        let layers = (0..p)
            .map(|i| OatLayer {
                axis: CollectiveAxis::from_angles(params[3 * i], params[3 * i + 1]),
                twist: params[3 * i + 2],
            })
            .collect();
        let f = &params[3 * p..];
        Self::new(
            layers,
            FinalRotation { axis: CollectiveAxis::from_angles(f[0], f[1]), angle: f[2] },
        )
    }

    pub fn to_raw(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 3);
        for layer in &self.layers {
            let (polar, azimuth) = layer.axis.angles();
            out.extend([polar, azimuth, layer.twist]);
        }
        let (polar, azimuth) = self.final_rotation.axis.angles();
        out.extend([polar, azimuth, self.final_rotation.angle]);
        out
    }

    /// Reduced layout, see the module docs.
    pub fn from_reduced(params: &[f64]) -> Result<Self> {
        let p = reduced_depth(params.len())?;
        let mut layers = Vec::with_capacity(p);
        layers.push(OatLayer { axis: CollectiveAxis::from_angles(params[0], 0.0), twist: params[1] });
        for i in 1..p {
            let k = 2 + 3 * (i - 1);
            layers.push(OatLayer {
                axis: CollectiveAxis::from_angles(params[k], params[k + 1]),
                twist: params[k + 2],
            });
        }
        let (beta, gamma) = (params[3 * p - 1], params[3 * p]);
        Self::new(layers, y_then_z_as_axis_angle(beta, gamma))
    }
}

/// `p` for a reduced parameter vector of length `3p + 1`.
pub fn reduced_depth(len: usize) -> Result<usize> {
    if len < 4 || (len - 1) % 3 != 0 {
        return Err(Error::domain(format!("{len} is not a reduced parameter count 3p+1")));
    }
    Ok((len - 1) / 3)
}

/// Axis-angle form of `R_y(β) R_z(γ)`, by quaternion multiplication.
fn y_then_z_as_axis_angle(beta: f64, gamma: f64) -> FinalRotation {
    let (cb, sb) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let (cg, sg) = ((gamma / 2.0).cos(), (gamma / 2.0).sin());
    // (cb, 0, sb, 0) ⊗ (cg, 0, 0, sg)
    let w = cb * cg;
    let v = [sb * sg, sb * cg, cb * sg];
    let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if vn < 1e-300 {
        return FinalRotation { axis: CollectiveAxis::Z, angle: 0.0 };
    }
    FinalRotation {
        axis: CollectiveAxis::new(v[0], v[1], v[2]).expect("nonzero"),
        angle: 2.0 * vn.atan2(w),
    }
}

/// Dense `U_p`, rightmost layer first.
pub fn build_circuit(dims: EnsembleDims, ansatz: &VariationalAnsatz) -> SymmetricUnitary {
    let mut u = SymmetricUnitary::identity(dims);
    for layer in &ansatz.layers {
        u = &oat(dims, layer.axis, layer.twist) * &u;
    }
    let r = ansatz.final_rotation;
    &rotation(dims, r.axis, r.angle) * &u
}

#[derive(Clone, Debug, PartialEq)]
pub enum CostSpec {
    TargetDistribution { target: DickeState, lambda: f64 },
    EnergyMoments { lambda1: f64, lambda2: f64 },
}

impl CostSpec {
    pub fn target(target: DickeState, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("λ must be positive, got {lambda}")));
        }
        Ok(Self::TargetDistribution { target, lambda })
    }

    pub fn energy(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
            return Err(Error::domain("λ₁ and λ₂ must be non-negative"));
        }
        Ok(Self::EnergyMoments { lambda1, lambda2 })
    }

    fn dims(&self) -> Option<EnsembleDims> {
        match self {
            Self::TargetDistribution { target, .. } => Some(target.dims()),
            Self::EnergyMoments { .. } => None,
        }
    }

    /// Cost from the two relevant columns `U|0⟩`, `U|1⟩`.
    pub fn evaluate_columns(&self, col0: &CVector, col1: &CVector) -> f64 {
        let vacuum = col0[0].norm_sqr();
        match self {
            Self::TargetDistribution { target, lambda } => {
                let overlap: f64 = (1..col1.len())
                    .map(|l| target.amplitude(l).norm() * col1[l].norm())
                    .sum();
                -vacuum - lambda * overlap
            }
            Self::EnergyMoments { lambda1, lambda2 } => {
                let n = (col1.len() - 1) as f64;
                let s = n / 2.0;
                let (mut m1, mut m2) = (0.0, 0.0);
                for (l, a) in col1.iter().enumerate() {
                    let m = l as f64 - s;
                    let p = a.norm_sqr();
                    m1 += p * m;
                    m2 += p * m * m;
                }
                -vacuum - lambda1 * m1 / n - lambda2 * (m2 - m1 * m1).max(0.0).sqrt() / n
            }
        }
    }

    pub fn evaluate(&self, unitary: &SymmetricUnitary) -> Result<f64> {
        if let Some(d) = self.dims() {
            check_dims(d.dim(), unitary.dims().dim())?;
        }
        Ok(self.evaluate_columns(&unitary.column(0), &unitary.column(1)))
    }

    pub fn describe(&self) -> String {
        match self {
            Self::TargetDistribution { lambda, .. } => format!("target_distribution lambda={lambda}"),
            Self::EnergyMoments { lambda1, lambda2 } => {
                format!("energy_moments lambda1={lambda1} lambda2={lambda2}")
            }
        }
    }
}

/// `−|⟨0|U|0⟩|² − λ Σ_{ℓ≥1} |⟨ℓ|ψ⟩| |⟨ℓ|U|1⟩|`.
pub fn cost_target(unitary: &SymmetricUnitary, target: &DickeState, lambda: f64) -> Result<f64> {
    CostSpec::TargetDistribution { target: target.clone(), lambda }.evaluate(unitary)
}

/// `−|⟨0|U|0⟩|² − λ₁⟨S_z⟩/N − λ₂ ΔS_z/N` on `U|1⟩`.
pub fn cost_energy(unitary: &SymmetricUnitary, lambda1: f64, lambda2: f64) -> Result<f64> {
    CostSpec::energy(lambda1, lambda2)?.evaluate(unitary)
}

/// Evaluates the reduced-parameter cost without forming `U_p`.
pub struct ReducedCost<'a> {
    frame: DickeFrame,
    spec: &'a CostSpec,
}

impl<'a> ReducedCost<'a> {
    pub fn new(dims: EnsembleDims, spec: &'a CostSpec) -> Result<Self> {
        if let Some(d) = spec.dims() {
            check_dims(dims.dim(), d.dim())?;
        }
        Ok(Self { frame: DickeFrame::new(dims), spec })
    }

    /// `(U|0⟩, U|1⟩)` for reduced parameters.
    pub fn columns(&self, params: &[f64]) -> (CVector, CVector) {
        let p = (params.len() - 1) / 3;
        let d = self.frame.dims();
        let mut cols = [0usize, 1].map(|l| dicke_basis_state(d, l).unwrap().amplitudes().clone());
        for v in cols.iter_mut() {
            self.frame.twist_about(params[0], 0.0, params[1], v);
            for i in 1..p {
                let k = 2 + 3 * (i - 1);
                self.frame.twist_about(params[k], params[k + 1], params[k + 2], v);
            }
            self.frame.rotate_z(params[3 * p], v);
            self.frame.rotate_y(params[3 * p - 1], v);
        }
        let [c0, c1] = cols;
        (c0, c1)
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        let (c0, c1) = self.columns(params);
        self.spec.evaluate_columns(&c0, &c1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_evals: usize,
    pub simplex_tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 50, max_evals: 20_000, simplex_tolerance: 1e-8, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::domain("restarts must be ≥ 1"));
        }
        if self.max_evals == 0 {
            return Err(Error::domain("max_evals must be ≥ 1"));
        }
        if !(self.simplex_tolerance > 0.0) {
            return Err(Error::domain("simplex tolerance must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one restart.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartRecord {
    pub index: usize,
    pub cost: Option<f64>,
    pub evals: usize,
    /// Why the restart was abandoned, if it was.
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult {
    pub ansatz: VariationalAnsatz,
    pub reduced_parameters: Vec<f64>,
    pub cost: f64,
    pub best_restart: usize,
    pub trace: Vec<RestartRecord>,
}

/// Random reduced starting point for restart `index`, independent of the
/// order restarts are run in.
pub fn initial_point(seed: u64, index: usize, depth: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let polar = |rng: &mut ChaCha8Rng| (1.0 - 2.0 * rng.random::<f64>()).acos();
    let mut x = Vec::with_capacity(3 * depth + 1);
    x.push(polar(&mut rng));
    x.push(rng.random::<f64>() * PI);
    for _ in 1..depth {
        x.push(polar(&mut rng));
        x.push(rng.random::<f64>() * 2.0 * PI);
        x.push(rng.random::<f64>() * PI);
    }
    x.push(polar(&mut rng));
    x.push(rng.random::<f64>() * 2.0 * PI);
    x
}

fn run_restart(
    objective: &ReducedCost<'_>,
    config: &OptimizerConfig,
    depth: usize,
    index: usize,
) -> (RestartRecord, Option<Vec<f64>>) {
    let x0 = initial_point(config.seed, index, depth);
    let opts = NelderMeadOptions {
        max_evals: config.max_evals,
        xtol: config.simplex_tolerance,
        ftol: config.simplex_tolerance * 1e-4,
        ..NelderMeadOptions::default()
    };
    match nelder_mead::minimize(|x| objective.eval(x), &x0, &opts) {
        Ok(m) => (
            RestartRecord { index, cost: Some(m.value), evals: m.evals, aborted: None },
            Some(m.x),
        ),
        Err(e) => (
            RestartRecord { index, cost: None, evals: 0, aborted: Some(e.to_string()) },
            None,
        ),
    }
}

/// Nelder–Mead from `config.restarts` random starts; the lowest cost wins
/// and ties go to the earliest restart.
pub fn optimize(
    dims: EnsembleDims,
    spec: &CostSpec,
    depth: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    if depth == 0 {
        return Err(Error::domain("p must be ≥ 1"));
    }
    config.validate()?;
    let objective = ReducedCost::new(dims, spec)?;

    #[cfg(feature = "parallel")]
    let runs: Vec<_> = {
        use rayon::prelude::*;
        (0..config.restarts)
            .into_par_iter()
            .map(|i| run_restart(&objective, config, depth, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<_> = (0..config.restarts)
        .map(|i| run_restart(&objective, config, depth, i))
        .collect();

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut trace = Vec::with_capacity(runs.len());
    for (record, x) in runs {
        if let (Some(cost), Some(x)) = (record.cost, x) {
            if best.as_ref().is_none_or(|(b, _, _)| cost < *b) {
                best = Some((cost, record.index, x));
            }
        }
        trace.push(record);
    }
    let (cost, best_restart, x) =
        best.ok_or_else(|| Error::Numeric("every restart produced a non-finite cost".into()))?;
    Ok(OptimizationResult {
        ansatz: VariationalAnsatz::from_reduced(&x)?,
        reduced_parameters: x,
        cost,
        best_restart,
        trace,
    })
}

/// `|M⟩`.
pub fn mass_eigenstate(dims: EnsembleDims, m: usize) -> Result<DickeState> {
    if m == 0 {
        return Err(Error::domain("target eigenstate must carry at least one excitation"));
    }
    dicke_basis_state(dims, m)
}

/// `(|M₁⟩ + |M₂⟩)/√2`.
pub fn clock(dims: EnsembleDims, m1: usize, m2: usize) -> Result<DickeState> {
    if !(1 <= m1 && m1 < m2 && m2 <= dims.atoms()) {
        return Err(Error::domain(format!(
            "clock levels need 1 ≤ M₁ < M₂ ≤ N, got ({m1}, {m2}) with N = {}",
            dims.atoms()
        )));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); dims.dim()];
    amps[m1].re = h;
    amps[m2].re = h;
    DickeState::from_amplitudes(dims, amps)
}

/// `R_y(π/2)|0⟩`.
pub fn coherent(dims: EnsembleDims) -> DickeState {
    coherent_state(dims, PI / 2.0, 0.0)
}

/// `⟨S_z⟩` of a state, used by diagnostics.
pub fn mean_magnetization(state: &DickeState) -> f64 {
    let sz = collective_spin(state.dims(), CollectiveAxis::Z);
    crate::linalg::inner(state.amplitudes(), &(sz * state.amplitudes())).re
}
