//! Closed-form preparation circuits for highly excited states: double
//! twisting, the energy-tuning gate `V_α`, and NOON−1 states together with
//! their quantum Fisher information.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dicke::{
    coherent_state, dicke_basis_state, oat, rotation, CollectiveAxis, DickeState, EnsembleDims,
    SymmetricUnitary,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I};
use crate::nelder_mead::{self, NelderMeadOptions};
use crate::network::{apply_local, seed_state, SeedSpec, TwoNodeState};

fn require_even(dims: EnsembleDims) -> Result<()> {
    if dims.atoms() % 2 == 0 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "double twisting is only defined for even N, got {}",
            dims.atoms()
        )))
    }
}

/// `(−1)^S` for integer `S = N/2`.
fn parity_of_spin(dims: EnsembleDims) -> f64 {
    if (dims.atoms() / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `U_DT = T_y(±π/2) T_x(π/2)`, `+` for odd `S` and `−` for even `S`.
pub fn u_dt(dims: EnsembleDims) -> Result<SymmetricUnitary> {
    require_even(dims)?;
    let sign = -parity_of_spin(dims);
    Ok(&oat(dims, CollectiveAxis::Y, sign * PI / 2.0) * &oat(dims, CollectiveAxis::X, PI / 2.0))
}

/// `R_y(π) T_y(π/2) T_x(π/2)`: only positive twisting angles.
pub fn u_dt_positive(dims: EnsembleDims) -> Result<SymmetricUnitary> {
    require_even(dims)?;
    Ok(&(&rotation(dims, CollectiveAxis::Y, PI) * &oat(dims, CollectiveAxis::Y, PI / 2.0))
        * &oat(dims, CollectiveAxis::X, PI / 2.0))
}

/// Phase on even `ℓ` and the reflection `|ℓ⟩ → |N−ℓ⟩` with a phase on odd `ℓ`.
pub fn u_dt_closed_form(dims: EnsembleDims) -> Result<SymmetricUnitary> {
    require_even(dims)?;
    let ps = parity_of_spin(dims);
    let even = (I * (PI / 4.0 * (ps - 1.0))).exp();
    let odd = (I * (PI / 4.0 * (3.0 - ps))).exp();
    let n = dims.atoms();
    let mut m = CMatrix::zeros(dims.dim(), dims.dim());
    for l in 0..=n {
        if l % 2 == 0 {
            m[(l, l)] = even;
        } else {
            m[(n - l, l)] = odd;
        }
    }
    SymmetricUnitary::from_matrix(dims, m)
}

/// `(U_DT ⊗ U_DT)|Ψ_0⟩ ∝ (|0,N−1⟩ + e^{−iφ₀}|N−1,0⟩)/√2`.
pub fn noon_minus_one(dims: EnsembleDims, seed: SeedSpec) -> Result<TwoNodeState> {
    let u = u_dt(dims)?;
    apply_local(&u, &u, &seed_state(dims, seed)?)
}

/// `F_Q = 4 Var(G)` with `G = (S_z^A − S_z^B)/2`.
pub fn qfi_differential_phase(state: &TwoNodeState) -> f64 {
    let d = state.dims().dim();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, a) in state.amplitudes().iter().enumerate() {
        let g = ((k / d) as f64 - (k % d) as f64) / 2.0;
        let p = a.norm_sqr();
        m1 += p * g;
        m2 += p * g * g;
    }
    4.0 * (m2 - m1 * m1)
}

/// Energy-tuning parameters: rotation angle `α` and twist branch `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSpec {
    pub alpha: f64,
    #[serde(default)]
    pub k: i64,
}

impl AlphaSpec {
    pub fn new(alpha: f64, k: i64) -> Result<Self> {
        if !alpha.is_finite() || alpha.cos().abs() < 1e-12 {
            return Err(Error::domain(format!("cos α must be nonzero, got α = {alpha}")));
        }
        Ok(Self { alpha, k })
    }

    /// `χ = (1 + 2k)π / (2(2S − 1) cos α)`.
    pub fn twist(&self, dims: EnsembleDims) -> f64 {
        (1 + 2 * self.k) as f64 * PI / (2.0 * (2.0 * dims.spin() - 1.0) * self.alpha.cos())
    }
}

/// `V_α` with the vacuum-restoring rotation it was built from.
#[derive(Clone, Debug)]
pub struct EnergyTuningGate {
    pub unitary: SymmetricUnitary,
    pub twist: f64,
    /// `R_f = R_y(−α′) R_z(ζ)`.
    pub restoring_polar: f64,
    pub restoring_azimuth: f64,
    pub vacuum_fidelity: f64,
}

/// `V_α = R_f T_z(χ) R_y(α)` with `R_f` maximizing `|⟨0|V_α|0⟩|`.
pub fn v_alpha(dims: EnsembleDims, spec: AlphaSpec) -> Result<EnergyTuningGate> {
    require_even(dims)?;
    let spec = AlphaSpec::new(spec.alpha, spec.k)?;
    let chi = spec.twist(dims);
    let core = &oat(dims, CollectiveAxis::Z, chi) * &rotation(dims, CollectiveAxis::Y, spec.alpha);
    let w = core.column(0);
    let mags: Vec<f64> = (0..dims.dim()).map(|l| dims.magnetization(l)).collect();

    // ⟨0|R_y(−α′)R_z(ζ)|w⟩ = ⟨R_y(α′)0|R_z(ζ)w⟩
    let overlap = |x: &[f64]| -> f64 {
        let probe = coherent_state(dims, x[0], 0.0);
        let amp: Complex64 = probe
            .amplitudes()
            .iter()
            .zip(w.iter())
            .zip(&mags)
            .map(|((c, wl), m)| c.conj() * (-I * (x[1] * m)).exp() * wl)
            .sum();
        amp.norm_sqr()
    };
    let guess = [spec.alpha, 2.0 * chi * dims.spin() * spec.alpha.cos()];
    let opts = NelderMeadOptions {
        max_evals: 10_000,
        xtol: 1e-12,
        ftol: 1e-10,
        initial_step: 0.05,
        rebuilds: 4,
    };
    let best = nelder_mead::minimize(|x| -overlap(x), &guess, &opts)?;
    let (polar, azimuth) = (best.x[0], best.x[1]);
    let restore = &rotation(dims, CollectiveAxis::Y, -polar) * &rotation(dims, CollectiveAxis::Z, azimuth);
    let unitary = &restore * &core;
    let vacuum_fidelity = unitary.element(0, 0).norm_sqr();
    Ok(EnergyTuningGate {
        unitary,
        twist: chi,
        restoring_polar: polar,
        restoring_azimuth: azimuth,
        vacuum_fidelity,
    })
}

/// `(V_α ⊗ V_α)|Ψ_{NOON−1}⟩`.
pub fn psi_alpha(dims: EnsembleDims, spec: AlphaSpec, seed: SeedSpec) -> Result<TwoNodeState> {
    let v = v_alpha(dims, spec)?.unitary;
    apply_local(&v, &v, &noon_minus_one(dims, seed)?)
}

/// The state `V_α` approximately produces from `|N−1⟩`.
///
/// This is `R_y(−2α)|N−1⟩`: the twist carries the excited state around the
/// opposite side of the sphere from the vacuum. Its excitation distribution
/// equals that of `R_y(2α)|N−1⟩`.
pub fn tuned_excited_reference(dims: EnsembleDims, alpha: f64) -> Result<DickeState> {
    let excited = dicke_basis_state(dims, dims.atoms() - 1)?;
    rotation(dims, CollectiveAxis::Y, -2.0 * alpha).apply(&excited)
}

/// `Var_{S_z}(R_y(2α)|N−1⟩) = (3N − 2)/4 · sin²(2α)`.
pub fn tuned_variance(dims: EnsembleDims, alpha: f64) -> f64 {
    (3.0 * dims.atoms() as f64 - 2.0) / 4.0 * (2.0 * alpha).sin().powi(2)
}

/// Largest entrywise difference after removing a global phase.
pub fn max_diff_up_to_phase(a: &CMatrix, b: &CMatrix) -> f64 {
    let (idx, _) = a
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("non-empty");
    let ratio = b.as_slice()[idx] / a.as_slice()[idx];
    let phase = ratio / ratio.norm();
    linalg::max_abs_diff(&(a * phase), b)
}
