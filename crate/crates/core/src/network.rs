//! Two-node states in the full `(N+1)²` product space.
//!
//! Amplitudes are stored row-major with node A as the slow index, so
//! `(ℓ_A, ℓ_B)` sits at `ℓ_A (N+1) + ℓ_B`. Viewed as an `(N+1)×(N+1)`
//! matrix `M[ℓ_A, ℓ_B]`, local gates act as `U_A M U_Bᵀ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dicke::{DickeState, EnsembleDims, SymmetricUnitary};
use crate::error::{check_dims, Error, Result};
use crate::gravity::{redshift_phase, GravityContext, Node};
use crate::linalg::{self, CMatrix, CVector, I};

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoNodeState {
    dims: EnsembleDims,
    amplitudes: CVector,
}

impl TwoNodeState {
    pub fn from_amplitudes(dims: EnsembleDims, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dims(dims.dim() * dims.dim(), amplitudes.len())?;
        let v = CVector::from_vec(amplitudes);
        let n2 = linalg::norm_sqr(&v);
        if !n2.is_finite() || (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::domain(format!("two-node state norm² {n2} is not 1")));
        }
        Ok(Self { dims, amplitudes: v / Complex64::new(n2.sqrt(), 0.0) })
    }

    /// `(|0⟩|ψ⟩ + e^{−iφ₀}|ψ⟩|0⟩)/√2`, renormalized if `ψ` has vacuum weight.
    pub fn ideal(psi: &DickeState, phi0: f64) -> Result<Self> {
        let dims = psi.dims();
        let d = dims.dim();
        let mut v = CVector::zeros(d * d);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phase = (-I * phi0).exp();
        for l in 0..d {
            let a = psi.amplitude(l);
            v[l] += a * h;
            v[l * d] += a * phase * h;
        }
        let n2 = linalg::norm_sqr(&v);
        if n2 < 1e-300 {
            return Err(Error::domain("ψ = |0⟩ has no delocalized excitation"));
        }
        Ok(Self { dims, amplitudes: v / Complex64::new(n2.sqrt(), 0.0) })
    }

    /// `|ψ_A⟩ ⊗ |ψ_B⟩`.
    pub fn product(a: &DickeState, b: &DickeState) -> Result<Self> {
        check_dims(a.dims().dim(), b.dims().dim())?;
        let d = a.dims().dim();
        let v = CVector::from_fn(d * d, |k, _| a.amplitude(k / d) * b.amplitude(k % d));
        Ok(Self { dims: a.dims(), amplitudes: v })
    }

    pub(crate) fn from_vector_unchecked(dims: EnsembleDims, amplitudes: CVector) -> Self {
        Self { dims, amplitudes }
    }

    pub fn dims(&self) -> EnsembleDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn index(&self, l_a: usize, l_b: usize) -> usize {
        l_a * self.dims.dim() + l_b
    }

    pub fn amplitude(&self, l_a: usize, l_b: usize) -> Complex64 {
        self.amplitudes[self.index(l_a, l_b)]
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amplitudes)
    }

    /// Amplitudes as the matrix `M[ℓ_A, ℓ_B]`.
    pub fn as_matrix(&self) -> CMatrix {
        let d = self.dims.dim();
        CMatrix::from_row_slice(d, d, self.amplitudes.as_slice())
    }

    fn from_matrix(dims: EnsembleDims, m: &CMatrix) -> Self {
        let d = dims.dim();
        Self {
            dims,
            amplitudes: CVector::from_fn(d * d, |k, _| m[(k / d, k % d)]),
        }
    }

    pub fn overlap(&self, other: &TwoNodeState) -> Result<Complex64> {
        check_dims(self.amplitudes.len(), other.amplitudes.len())?;
        Ok(linalg::inner(&self.amplitudes, &other.amplitudes))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    #[serde(default)]
    pub phi0: f64,
    #[serde(default)]
    pub infidelity: f64,
}

impl SeedSpec {
    pub fn new(phi0: f64, infidelity: f64) -> Result<Self> {
        Self { phi0, infidelity }.validate()
    }

    pub fn validate(self) -> Result<Self> {
        if !self.phi0.is_finite() {
            return Err(Error::domain("φ₀ must be finite"));
        }
        if !(0.0..1.0).contains(&self.infidelity) {
            return Err(Error::domain(format!(
                "seed infidelity {} must lie in [0, 1)",
                self.infidelity
            )));
        }
        Ok(self)
    }
}

/// `√(1−ε)(|0,1⟩ + e^{−iφ₀}|1,0⟩)/√2 + √ε |0,0⟩`.
pub fn seed_state(dims: EnsembleDims, spec: SeedSpec) -> Result<TwoNodeState> {
    let spec = spec.validate()?;
    let d = dims.dim();
    let mut v = CVector::zeros(d * d);
    let bell = ((1.0 - spec.infidelity) / 2.0).sqrt();
    v[1] = Complex64::new(bell, 0.0);
    v[d] = (-I * spec.phi0).exp() * bell;
    v[0] = Complex64::new(spec.infidelity.sqrt(), 0.0);
    Ok(TwoNodeState { dims, amplitudes: v })
}

/// `(U_A ⊗ U_B) Ψ` by two per-node contractions.
pub fn apply_local(
    u_a: &SymmetricUnitary,
    u_b: &SymmetricUnitary,
    state: &TwoNodeState,
) -> Result<TwoNodeState> {
    check_dims(state.dims.dim(), u_a.dims().dim())?;
    check_dims(state.dims.dim(), u_b.dims().dim())?;
    let m = u_a.matrix() * state.as_matrix() * u_b.matrix().transpose();
    Ok(TwoNodeState::from_matrix(state.dims, &m))
}

/// Diagonal redshift evolution: `(ℓ_A, ℓ_B)` picks up `e^{−i(φ_{ℓ_A,A} + φ_{ℓ_B,B})}`.
pub fn evolve_gravity(state: &TwoNodeState, ctx: &GravityContext, time: f64) -> Result<TwoNodeState> {
    if !(time >= 0.0 && time.is_finite()) {
        return Err(Error::domain(format!("evolution time {time} must be ≥ 0")));
    }
    let d = state.dims.dim();
    let phase_a: Vec<Complex64> = (0..d)
        .map(|l| (-I * redshift_phase(ctx, l, Node::A, time)).exp())
        .collect();
    let phase_b: Vec<Complex64> = (0..d)
        .map(|l| (-I * redshift_phase(ctx, l, Node::B, time)).exp())
        .collect();
    let v = CVector::from_fn(d * d, |k, _| {
        state.amplitudes[k] * phase_a[k / d] * phase_b[k % d]
    });
    Ok(TwoNodeState { dims: state.dims, amplitudes: v })
}

/// Reduced excitation populations of one node.
pub fn node_mass_distribution(state: &TwoNodeState, node: Node) -> Vec<f64> {
    let d = state.dims.dim();
    let mut p = vec![0.0; d];
    for (k, a) in state.amplitudes.iter().enumerate() {
        let l = match node {
            Node::A => k / d,
            Node::B => k % d,
        };
        p[l] += a.norm_sqr();
    }
    p
}

/// Projection of a two-node state onto the single-branch sector
/// `span{|0,ℓ⟩, |ℓ,0⟩ : ℓ ≥ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationProfile {
    /// `√2 ⟨0,ℓ|Ψ⟩`: the excitation sits in node B. Index 0 is unused.
    pub b_branch: Vec<Complex64>,
    /// `√2 ⟨ℓ,0|Ψ⟩`: the excitation sits in node A. Index 0 is unused.
    pub a_branch: Vec<Complex64>,
    /// `1 −` weight inside the sector.
    pub leakage: f64,
}

impl ExcitationProfile {
    /// Estimated `|ψ_ℓ|²`, averaging the two branches.
    pub fn weights(&self) -> Vec<f64> {
        self.a_branch
            .iter()
            .zip(&self.b_branch)
            .map(|(a, b)| 0.5 * (a.norm_sqr() + b.norm_sqr()))
            .collect()
    }
}

pub fn extract_excitation_profile(state: &TwoNodeState) -> ExcitationProfile {
    let d = state.dims.dim();
    let s = std::f64::consts::SQRT_2;
    let mut b_branch = vec![Complex64::new(0.0, 0.0); d];
    let mut a_branch = vec![Complex64::new(0.0, 0.0); d];
    let mut inside = 0.0;
    for l in 1..d {
        let b = state.amplitude(0, l);
        let a = state.amplitude(l, 0);
        inside += b.norm_sqr() + a.norm_sqr();
        b_branch[l] = b * s;
        a_branch[l] = a * s;
    }
    ExcitationProfile {
        b_branch,
        a_branch,
        leakage: (state.norm_sqr() - inside).max(0.0),
    }
}

/// A unitary with `U|0⟩ = |0⟩` and `U|1⟩ = |ψ⟩`, built from one Householder
/// reflection on the excited subspace. Requires `⟨0|ψ⟩ = 0`.
pub fn unitary_from_profile(psi: &DickeState) -> Result<SymmetricUnitary> {
    let dims = psi.dims();
    let d = dims.dim();
    if psi.amplitude(0).norm() > 1e-12 {
        return Err(Error::domain("target state overlaps the vacuum"));
    }
    let first = psi.amplitude(1);
    let alpha = if first.norm() > 0.0 { first / first.norm() } else { Complex64::new(1.0, 0.0) };
    // y = ψ e^{−iα} has a real non-negative first entry
    let y = psi.amplitudes() * alpha.conj();
    let mut w = -y.clone();
    w[1] += Complex64::new(1.0, 0.0);
    let wn = linalg::norm_sqr(&w);
    let mut h = CMatrix::identity(d, d);
    if wn > 1e-30 {
        h -= &w * w.adjoint() * Complex64::new(2.0 / wn, 0.0);
    }
    let mut phase = CMatrix::identity(d, d);
    phase[(1, 1)] = alpha;
    SymmetricUnitary::from_matrix(dims, h * phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{coherent_state, dicke_basis_state, oat, rotation, CollectiveAxis};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn dims(n: usize) -> EnsembleDims {
        EnsembleDims::new(n).unwrap()
    }

    fn clock(n: usize, m1: usize, m2: usize) -> DickeState {
        let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
        amps[m1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amps[m2] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        DickeState::from_amplitudes(dims(n), amps).unwrap()
    }

    fn random_unitary(n: usize, seed: f64) -> SymmetricUnitary {
        let d = dims(n);
        &(&oat(d, CollectiveAxis::from_angles(seed, 2.0 * seed), 0.7 + seed)
            * &rotation(d, CollectiveAxis::from_angles(1.0 - seed, seed), 1.3))
            * &oat(d, CollectiveAxis::X, seed)
    }

    #[test]
    fn seed_examples() {
        let d = dims(4);
        let s = seed_state(d, SeedSpec::default()).unwrap();
        assert!((s.amplitude(0, 1).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitude(1, 0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        let s = seed_state(d, SeedSpec::new(PI, 0.0).unwrap()).unwrap();
        assert!((s.amplitude(1, 0) / s.amplitude(0, 1) + 1.0).norm() < 1e-15);
        let s = seed_state(d, SeedSpec::new(0.3, 0.1).unwrap()).unwrap();
        assert!((s.amplitude(0, 0).norm_sqr() - 0.1).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(SeedSpec::new(0.0, 1.0).is_err());
        assert!(SeedSpec::new(0.0, -0.1).is_err());
    }

    #[test]
    fn identities_leave_state_unchanged() {
        let d = dims(5);
        let s = seed_state(d, SeedSpec::new(0.4, 0.05).unwrap()).unwrap();
        let id = SymmetricUnitary::identity(d);
        assert_eq!(apply_local(&id, &id, &s).unwrap(), s);
        let wrong = SymmetricUnitary::identity(dims(4));
        assert!(apply_local(&wrong, &id, &s).is_err());
    }

    #[test]
    fn local_gates_match_kronecker_product() {
        let n = 3;
        let (ua, ub) = (random_unitary(n, 0.2), random_unitary(n, 0.9));
        let s = TwoNodeState::product(&coherent_state(dims(n), 0.6, 0.1), &coherent_state(dims(n), 2.0, -1.0)).unwrap();
        let kron = ua.matrix().kronecker(ub.matrix());
        let expected = kron * s.amplitudes();
        let got = apply_local(&ua, &ub, &s).unwrap();
        assert!(linalg::max_abs_diff_vec(got.amplitudes(), &expected) < 1e-12);
    }

    #[test]
    fn vacuum_preserving_unitary_builds_ideal_state() {
        let d = dims(8);
        let psi = clock(8, 3, 7);
        let u = unitary_from_profile(&psi).unwrap();
        let vac = dicke_basis_state(d, 0).unwrap();
        assert!((u.apply(&vac).unwrap().amplitude(0) - 1.0).norm() < 1e-12);
        let phi0 = 0.8;
        let out = apply_local(&u, &u, &seed_state(d, SeedSpec::new(phi0, 0.0).unwrap()).unwrap()).unwrap();
        let ideal = TwoNodeState::ideal(&psi, phi0).unwrap();
        assert!((out.overlap(&ideal).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        assert!(linalg::max_abs_diff_vec(out.amplitudes(), ideal.amplitudes()) < 1e-12);
    }

    #[test]
    fn householder_handles_complex_and_trivial_targets() {
        let d = dims(4);
        let one = dicke_basis_state(d, 1).unwrap();
        let u = unitary_from_profile(&one).unwrap();
        assert!(linalg::max_abs_diff(u.matrix(), SymmetricUnitary::identity(d).matrix()) < 1e-15);

        let amps = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.5, 0.5),
            Complex64::new(0.0, 0.0),
        ];
        let psi = DickeState::from_amplitudes(d, amps).unwrap();
        let u = unitary_from_profile(&psi).unwrap();
        assert!(linalg::max_abs_diff_vec(&u.column(1), psi.amplitudes()) < 1e-14);
        assert!(unitary_from_profile(&coherent_state(d, 1.0, 0.0)).is_err());
    }

    #[test]
    fn gravity_relative_phase_on_ideal_state() {
        let d = dims(6);
        let ctx = GravityContext::new(1.0, 9.81, 1.0).unwrap().with_constants(1.0, 1.0).unwrap();
        let l = 4;
        let s = TwoNodeState::ideal(&dicke_basis_state(d, l).unwrap(), 0.0).unwrap();
        let t = 0.37;
        let out = evolve_gravity(&s, &ctx, t).unwrap();
        let rel = (out.amplitude(0, l) / out.amplitude(l, 0)).arg();
        let expected = redshift_phase(&ctx, l, Node::A, t) - redshift_phase(&ctx, l, Node::B, t);
        let wrapped = (rel - expected + PI).rem_euclid(2.0 * PI) - PI;
        assert!(wrapped.abs() < 1e-12);
        assert_eq!(evolve_gravity(&s, &ctx, 0.0).unwrap(), s);
        assert!(evolve_gravity(&s, &ctx, -1.0).is_err());
    }

    #[test]
    fn profile_examples() {
        let psi = clock(10, 4, 8);
        let s = TwoNodeState::ideal(&psi, 0.3).unwrap();
        let p = extract_excitation_profile(&s);
        assert!(p.leakage < 1e-14);
        assert!((p.b_branch[4].norm_sqr() - 0.5).abs() < 1e-14);
        assert!((p.a_branch[8].norm_sqr() - 0.5).abs() < 1e-14);
        let w = p.weights();
        assert!((w[4] - 0.5).abs() < 1e-14 && (w[8] - 0.5).abs() < 1e-14);

        let vac = dicke_basis_state(dims(10), 0).unwrap();
        let s = TwoNodeState::product(&vac, &vac).unwrap();
        let p = extract_excitation_profile(&s);
        assert!((p.leakage - 1.0).abs() < 1e-15);
        assert!(p.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn decoded_state_lies_in_single_excitation_sector() {
        let n = 10;
        let d = dims(n);
        let u = unitary_from_profile(&clock(n, 3, 9)).unwrap();
        let ctx = GravityContext::new(1.0, 9.81, 1.0).unwrap().with_constants(1.0, 1.0).unwrap();
        let seed = seed_state(d, SeedSpec::new(0.2, 0.0).unwrap()).unwrap();
        let prepared = apply_local(&u, &u, &seed).unwrap();
        let evolved = evolve_gravity(&prepared, &ctx, 0.9).unwrap();
        let decoded = apply_local(&u.adjoint(), &u.adjoint(), &evolved).unwrap();
        // |Ψ_{1,±}⟩ span {|0,1⟩, |1,0⟩}
        let inside = decoded.amplitude(0, 1).norm_sqr() + decoded.amplitude(1, 0).norm_sqr();
        assert!(inside < 1.0 - 1e-3, "gravity should move weight out for a clock state");
        let ideal_sector: f64 = (1..=n)
            .map(|l| decoded.amplitude(0, l).norm_sqr() + decoded.amplitude(l, 0).norm_sqr())
            .sum();
        assert!((ideal_sector - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn local_gates_preserve_norm_and_invert(n in 1usize..12, a in 0.0f64..1.0, b in 0.0f64..1.0, phi0 in -3.0f64..3.0) {
            let d = dims(n);
            let (ua, ub) = (random_unitary(n, a), random_unitary(n, b));
            let s = seed_state(d, SeedSpec::new(phi0, 0.2).unwrap()).unwrap();
            let out = apply_local(&ua, &ub, &s).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
            let back = apply_local(&ua.adjoint(), &ub.adjoint(), &out).unwrap();
            prop_assert!(linalg::max_abs_diff_vec(back.amplitudes(), s.amplitudes()) < 1e-10);
        }

        #[test]
        fn gravity_is_a_semigroup_and_keeps_populations(n in 1usize..10, t1 in 0.0f64..5.0, t2 in 0.0f64..5.0, a in 0.0f64..1.0) {
            let d = dims(n);
            let ctx = GravityContext::new(1.0, 9.81, 1.0).unwrap().with_constants(1.0, 1.0).unwrap();
            let u = random_unitary(n, a);
            let s = apply_local(&u, &u, &seed_state(d, SeedSpec::new(0.1, 0.0).unwrap()).unwrap()).unwrap();
            let two = evolve_gravity(&evolve_gravity(&s, &ctx, t1).unwrap(), &ctx, t2).unwrap();
            let one = evolve_gravity(&s, &ctx, t1 + t2).unwrap();
            prop_assert!(linalg::max_abs_diff_vec(two.amplitudes(), one.amplitudes()) < 1e-12);
            for node in [Node::A, Node::B] {
                let before = node_mass_distribution(&s, node);
                let after = node_mass_distribution(&one, node);
                for (x, y) in before.iter().zip(&after) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
