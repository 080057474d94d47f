//! One node's symmetric subspace: Dicke basis, collective spin operators,
//! rotation and one-axis-twisting gates, and state functionals.
//!
//! Index `ℓ` is the excitation number; `|ℓ⟩ = |S, −S + ℓ⟩` with `S = N/2`.
//! Global phases are kept as produced by the gates; compare states with
//! [`fidelity`], never by amplitude equality.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::linalg::{self, CMatrix, CVector, I};

const NORM_TOLERANCE: f64 = 1e-10;
const UNITARY_TOLERANCE: f64 = 1e-10;

/// Atom number of one node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct EnsembleDims {
    atoms: usize,
}

impl EnsembleDims {
    pub fn new(atoms: usize) -> Result<Self> {
        if atoms == 0 {
            return Err(Error::domain("a node needs at least one atom"));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(self) -> usize {
        self.atoms
    }

    /// Total spin `S = N/2`.
    pub fn spin(self) -> f64 {
        self.atoms as f64 / 2.0
    }

    /// Dicke dimension `N + 1`.
    pub fn dim(self) -> usize {
        self.atoms + 1
    }

    /// `S_z` eigenvalue of `|ℓ⟩`.
    pub fn magnetization(self, excitations: usize) -> f64 {
        excitations as f64 - self.spin()
    }
}

impl TryFrom<usize> for EnsembleDims {
    type Error = Error;
    fn try_from(atoms: usize) -> Result<Self> {
        Self::new(atoms)
    }
}

impl From<EnsembleDims> for usize {
    fn from(d: EnsembleDims) -> usize {
        d.atoms
    }
}

/// Normalized pure state of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct DickeState {
    dims: EnsembleDims,
    amplitudes: CVector,
}

impl DickeState {
    /// Wraps amplitudes that are already normalized (within 1e-10); the
    /// residual is divided out.
    pub fn from_amplitudes(dims: EnsembleDims, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dims(dims.dim(), amplitudes.len())?;
        let v = CVector::from_vec(amplitudes);
        let n2 = linalg::norm_sqr(&v);
        if !n2.is_finite() || (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::domain(format!("state norm² {n2} is not 1")));
        }
        Ok(Self::from_vector_unchecked(dims, v / Complex64::new(n2.sqrt(), 0.0)))
    }

    /// Normalizes an arbitrary nonzero amplitude vector.
    pub fn normalize(dims: EnsembleDims, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dims(dims.dim(), amplitudes.len())?;
        let v = CVector::from_vec(amplitudes);
        let n2 = linalg::norm_sqr(&v);
        if !n2.is_finite() || n2 == 0.0 {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self::from_vector_unchecked(dims, v / Complex64::new(n2.sqrt(), 0.0)))
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

    pub fn amplitude(&self, excitations: usize) -> Complex64 {
        self.amplitudes[excitations]
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amplitudes)
    }
}

/// Unit vector selecting a collective spin component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectiveAxis {
    direction: [f64; 3],
}

impl CollectiveAxis {
    pub const X: Self = Self { direction: [1.0, 0.0, 0.0] };
    pub const Y: Self = Self { direction: [0.0, 1.0, 0.0] };
    pub const Z: Self = Self { direction: [0.0, 0.0, 1.0] };

    /// Normalizes `(x, y, z)`; rejects zero and non-finite vectors.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::domain("axis must be a finite nonzero vector"));
        }
        Ok(Self { direction: [x / norm, y / norm, z / norm] })
    }

    /// Axis from polar angle (from +z) and azimuth (from +x).
    pub fn from_angles(polar: f64, azimuth: f64) -> Self {
        Self {
            direction: [
                polar.sin() * azimuth.cos(),
                polar.sin() * azimuth.sin(),
                polar.cos(),
            ],
        }
    }

    /// `(polar, azimuth)` with polar in `[0, π]` and azimuth in `(−π, π]`.
    pub fn angles(&self) -> (f64, f64) {
        let [x, y, z] = self.direction;
        (z.clamp(-1.0, 1.0).acos(), y.atan2(x))
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }
}

/// Unitary acting on one node's symmetric subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricUnitary {
    dims: EnsembleDims,
    matrix: CMatrix,
}

impl SymmetricUnitary {
    /// Checks shape and `‖U†U − 1‖_max < 1e-10`.
    pub fn from_matrix(dims: EnsembleDims, matrix: CMatrix) -> Result<Self> {
        check_dims(dims.dim(), matrix.nrows())?;
        check_dims(dims.dim(), matrix.ncols())?;
        let defect = linalg::unitarity_defect(&matrix);
        if !(defect < UNITARY_TOLERANCE) {
            return Err(Error::domain(format!("matrix is not unitary (defect {defect:e})")));
        }
        Ok(Self { dims, matrix })
    }

    pub(crate) fn from_matrix_unchecked(dims: EnsembleDims, matrix: CMatrix) -> Self {
        Self { dims, matrix }
    }

    pub fn identity(dims: EnsembleDims) -> Self {
        Self { dims, matrix: CMatrix::identity(dims.dim(), dims.dim()) }
    }

    pub fn dims(&self) -> EnsembleDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `⟨row|U|col⟩`.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { dims: self.dims, matrix: self.matrix.adjoint() }
    }

    /// `U |ψ⟩`.
    pub fn apply(&self, state: &DickeState) -> Result<DickeState> {
        check_dims(self.dims.dim(), state.dims.dim())?;
        Ok(DickeState::from_vector_unchecked(
            self.dims,
            &self.matrix * &state.amplitudes,
        ))
    }

    /// `U |ℓ⟩` as a raw column.
    pub fn column(&self, col: usize) -> CVector {
        self.matrix.column(col).into_owned()
    }
}

impl Mul for &SymmetricUnitary {
    type Output = SymmetricUnitary;

    /// Operator product; the right operand acts first.
    fn mul(self, rhs: &SymmetricUnitary) -> SymmetricUnitary {
        assert_eq!(self.dims, rhs.dims, "gate dimensions differ");
        SymmetricUnitary {
            dims: self.dims,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

pub fn dicke_basis_state(dims: EnsembleDims, excitations: usize) -> Result<DickeState> {
    if excitations > dims.atoms() {
        return Err(Error::domain(format!(
            "excitation number {excitations} exceeds N = {}",
            dims.atoms()
        )));
    }
    let mut v = CVector::zeros(dims.dim());
    v[excitations] = Complex64::new(1.0, 0.0);
    Ok(DickeState::from_vector_unchecked(dims, v))
}

/// Raising operator `S_+` in the Dicke basis.
fn raising(dims: EnsembleDims) -> CMatrix {
    let s = dims.spin();
    let mut sp = CMatrix::zeros(dims.dim(), dims.dim());
    for l in 0..dims.atoms() {
        let m = dims.magnetization(l);
        sp[(l + 1, l)] = Complex64::new(((s - m) * (s + m + 1.0)).sqrt(), 0.0);
    }
    sp
}

/// `S_n = n_x S_x + n_y S_y + n_z S_z` in the spin-`N/2` representation.
pub fn collective_spin(dims: EnsembleDims, axis: CollectiveAxis) -> CMatrix {
    let sp = raising(dims);
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * Complex64::new(0.5, 0.0);
    let sy = (&sp - &sm) * Complex64::new(0.0, -0.5);
    let sz = CMatrix::from_fn(dims.dim(), dims.dim(), |r, c| {
        if r == c {
            Complex64::new(dims.magnetization(r), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let [x, y, z] = axis.direction();
    sx * Complex64::new(x, 0.0) + sy * Complex64::new(y, 0.0) + sz * Complex64::new(z, 0.0)
}

/// `R_n(θ) = exp(−iθ S_n)`.
pub fn rotation(dims: EnsembleDims, axis: CollectiveAxis, angle: f64) -> SymmetricUnitary {
    let generator = collective_spin(dims, axis);
    SymmetricUnitary::from_matrix_unchecked(dims, linalg::exp_minus_i(&generator, angle))
}

/// One-axis twisting `T_n(χ) = exp(−iχ S_n²)`, from the spectrum of `S_n`.
pub fn oat(dims: EnsembleDims, axis: CollectiveAxis, twist: f64) -> SymmetricUnitary {
    let generator = collective_spin(dims, axis);
    let matrix = linalg::hermitian_function(&generator, |m| (-I * (twist * m * m)).exp());
    SymmetricUnitary::from_matrix_unchecked(dims, matrix)
}

pub fn apply(gate: &SymmetricUnitary, state: &DickeState) -> Result<DickeState> {
    gate.apply(state)
}

/// Populations `p_ℓ = |ψ_ℓ|²`.
pub fn mass_distribution(state: &DickeState) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// Mean and variance of the excitation number, i.e. of the node energy in
/// units of `ħω_eg` and `(ħω_eg)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyMoments {
    pub mean: f64,
    pub variance: f64,
}

impl EnergyMoments {
    pub fn from_distribution(populations: &[f64]) -> Self {
        let total: f64 = populations.iter().sum();
        let mean = populations
            .iter()
            .enumerate()
            .map(|(l, p)| l as f64 * p)
            .sum::<f64>()
            / total;
        let variance = populations
            .iter()
            .enumerate()
            .map(|(l, p)| (l as f64 - mean).powi(2) * p)
            .sum::<f64>()
            / total;
        Self { mean, variance }
    }

    /// Energy spread `ΔE` in joules.
    pub fn energy_spread(&self, hbar: f64, omega_eg: f64) -> f64 {
        hbar * omega_eg * self.variance.sqrt()
    }

    pub fn mean_energy(&self, hbar: f64, omega_eg: f64) -> f64 {
        hbar * omega_eg * self.mean
    }
}

pub fn energy_moments(state: &DickeState) -> EnergyMoments {
    EnergyMoments::from_distribution(&mass_distribution(state))
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &DickeState, b: &DickeState) -> Result<f64> {
    check_dims(a.dims.dim(), b.dims.dim())?;
    Ok(linalg::inner(&a.amplitudes, &b.amplitudes).norm_sqr())
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let ln_fact = |m: usize| (1..=m).map(|j| (j as f64).ln()).sum::<f64>();
    ln_fact(n) - ln_fact(k) - ln_fact(n - k)
}

/// Spin coherent state `exp(−iφ S_z) exp(−iθ S_y) |0⟩` in closed form.
pub fn coherent_state(dims: EnsembleDims, polar: f64, azimuth: f64) -> DickeState {
    let n = dims.atoms();
    let (c, s) = ((polar / 2.0).cos(), (polar / 2.0).sin());
    let amps = (0..=n)
        .map(|l| {
            let magnitude = if (c == 0.0 && l < n) || (s == 0.0 && l > 0) {
                0.0
            } else {
                let pow_ln = |k: usize, x: f64| if k == 0 { 0.0 } else { k as f64 * x.abs().ln() };
                (0.5 * ln_binomial(n, l) + pow_ln(n - l, c) + pow_ln(l, s)).exp()
            };
            // exp(−iθS_y)|−S⟩ picks up (−sin)^ℓ cos^{N−ℓ}
            let sign_count = (if c < 0.0 { n - l } else { 0 }) + (if s > 0.0 { l } else { 0 });
            let sign = if sign_count % 2 == 0 { 1.0 } else { -1.0 };
            let phase = (-I * (azimuth * dims.magnetization(l))).exp();
            phase * (sign * magnitude)
        })
        .collect::<Vec<_>>();
    DickeState::from_vector_unchecked(dims, CVector::from_vec(amps))
}

/// Husimi Q function `|⟨θ,φ|ψ⟩|²` on the given `(θ, φ)` sphere points.
pub fn husimi_q(state: &DickeState, grid: &[(f64, f64)]) -> Vec<f64> {
    grid.iter()
        .map(|&(polar, azimuth)| {
            let coherent = coherent_state(state.dims, polar, azimuth);
            linalg::inner(&coherent.amplitudes, &state.amplitudes).norm_sqr()
        })
        .collect()
}

/// Cached eigenbasis of `S_y` for applying rotations and twists about
/// arbitrary axes to state vectors without rebuilding matrices.
///
/// An axis with polar angle `β` and azimuth `φ` is `W ẑ` with
/// `W = R_z(φ) R_y(β)`, so `f(S_n) = W f(S_z) W†`.
#[derive(Clone, Debug)]
pub struct DickeFrame {
    dims: EnsembleDims,
    magnetizations: Vec<f64>,
    y_values: Vec<f64>,
    y_vectors: CMatrix,
    y_vectors_adj: CMatrix,
}

impl DickeFrame {
    pub fn new(dims: EnsembleDims) -> Self {
        let (y_values, y_vectors) = linalg::hermitian_eigen(&collective_spin(dims, CollectiveAxis::Y));
        let y_vectors_adj = y_vectors.adjoint();
        Self {
            dims,
            magnetizations: (0..dims.dim()).map(|l| dims.magnetization(l)).collect(),
            y_values,
            y_vectors,
            y_vectors_adj,
        }
    }

    pub fn dims(&self) -> EnsembleDims {
        self.dims
    }

    pub fn rotate_z(&self, angle: f64, v: &mut CVector) {
        for (a, m) in v.iter_mut().zip(&self.magnetizations) {
            *a *= (-I * (angle * m)).exp();
        }
    }

    pub fn twist_z(&self, twist: f64, v: &mut CVector) {
        for (a, m) in v.iter_mut().zip(&self.magnetizations) {
            *a *= (-I * (twist * m * m)).exp();
        }
    }

    pub fn rotate_y(&self, angle: f64, v: &mut CVector) {
        let mut w = &self.y_vectors_adj * &*v;
        for (a, lambda) in w.iter_mut().zip(&self.y_values) {
            *a *= (-I * (angle * lambda)).exp();
        }
        *v = &self.y_vectors * w;
    }

    /// Dense `R_y(angle)`.
    pub fn rotation_y_matrix(&self, angle: f64) -> CMatrix {
        linalg::spectral_product(&self.y_values, &self.y_vectors, |lambda| {
            (-I * (angle * lambda)).exp()
        })
    }

    /// `T_n(χ) v` for the axis at `(polar, azimuth)`.
    pub fn twist_about(&self, polar: f64, azimuth: f64, twist: f64, v: &mut CVector) {
        self.rotate_z(-azimuth, v);
        self.rotate_y(-polar, v);
        self.twist_z(twist, v);
        self.rotate_y(polar, v);
        self.rotate_z(azimuth, v);
    }

    /// `R_n(θ) v` for the axis at `(polar, azimuth)`.
    pub fn rotate_about(&self, polar: f64, azimuth: f64, angle: f64, v: &mut CVector) {
        self.rotate_z(-azimuth, v);
        self.rotate_y(-polar, v);
        self.rotate_z(angle, v);
        self.rotate_y(polar, v);
        self.rotate_z(azimuth, v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn dims(n: usize) -> EnsembleDims {
        EnsembleDims::new(n).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_states() {
        let s = dicke_basis_state(dims(4), 0).unwrap();
        assert_eq!(mass_distribution(&s), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let s = dicke_basis_state(dims(4), 4).unwrap();
        assert_eq!(mass_distribution(&s), vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(dicke_basis_state(dims(2), 3), Err(Error::Domain(_))));
        assert!(EnsembleDims::new(0).is_err());
    }

    #[test]
    fn spin_matrices_small_cases() {
        let sz = collective_spin(dims(2), CollectiveAxis::Z);
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![c(-1.0), c(0.0), c(1.0)]));
        assert!(linalg::max_abs_diff(&sz, &expected) < 1e-15);

        let sx = collective_spin(dims(1), CollectiveAxis::X);
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.5), c(0.5), c(0.0)]);
        assert!(linalg::max_abs_diff(&sx, &expected) < 1e-15);
    }

    #[test]
    fn spin_spectrum_is_axis_independent() {
        let axis = CollectiveAxis::new(0.3, -0.7, 0.2).unwrap();
        let (values, _) = linalg::hermitian_eigen(&collective_spin(dims(4), axis));
        for (v, e) in values.iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
            assert!((v - e).abs() < 1e-12, "{values:?}");
        }
    }

    #[test]
    fn spin_algebra_and_casimir() {
        for n in [1, 2, 7, 20, 40] {
            let d = dims(n);
            let sx = collective_spin(d, CollectiveAxis::X);
            let sy = collective_spin(d, CollectiveAxis::Y);
            let sz = collective_spin(d, CollectiveAxis::Z);
            let commutator = &sx * &sy - &sy * &sx;
            assert!(linalg::max_abs_diff(&commutator, &(&sz * I)) < 1e-12);
            let casimir = &sx * &sx + &sy * &sy + &sz * &sz;
            let s = d.spin();
            let expected = CMatrix::identity(d.dim(), d.dim()) * c(s * (s + 1.0));
            assert!(linalg::max_abs_diff(&casimir, &expected) < 1e-10);
        }
    }

    #[test]
    fn z_gates_are_diagonal_phases() {
        let d = dims(5);
        let theta = 0.77;
        let rz = rotation(d, CollectiveAxis::Z, theta);
        let tz = oat(d, CollectiveAxis::Z, theta);
        for l in 0..d.dim() {
            let m = d.magnetization(l);
            assert!((rz.element(l, l) - (-I * theta * m).exp()).norm() < 1e-12);
            assert!((tz.element(l, l) - (-I * theta * m * m).exp()).norm() < 1e-12);
        }
        assert!(linalg::max_abs_diff(
            oat(d, CollectiveAxis::X, 0.0).matrix(),
            SymmetricUnitary::identity(d).matrix()
        ) < 1e-12);
    }

    #[test]
    fn pi_rotation_flips_the_ladder() {
        for n in [1, 2, 5, 20, 61] {
            let d = dims(n);
            let out = rotation(d, CollectiveAxis::Y, PI)
                .apply(&dicke_basis_state(d, 0).unwrap())
                .unwrap();
            assert!((out.amplitude(n).norm() - 1.0).abs() < 1e-10, "N={n}");
        }
    }

    #[test]
    fn twist_matches_taylor_exponential() {
        let d = dims(4);
        let sx = collective_spin(d, CollectiveAxis::X);
        let generator = &sx * &sx * (-I * (PI / 2.0));
        let reference = linalg::expm_scaling_squaring(&generator);
        let gate = oat(d, CollectiveAxis::X, PI / 2.0);
        assert!(linalg::max_abs_diff(gate.matrix(), &reference) < 1e-10);
    }

    #[test]
    fn apply_behaviour() {
        let d = dims(6);
        let psi = coherent_state(d, 1.1, 0.4);
        let same = SymmetricUnitary::identity(d).apply(&psi).unwrap();
        assert!((fidelity(&same, &psi).unwrap() - 1.0).abs() < 1e-14);

        let vac = dicke_basis_state(d, 0).unwrap();
        let g = &oat(d, CollectiveAxis::Z, 0.9) * &rotation(d, CollectiveAxis::Z, -0.9 * 3.7);
        let out = g.apply(&vac).unwrap();
        assert!((fidelity(&out, &vac).unwrap() - 1.0).abs() < 1e-12);

        let wrong = SymmetricUnitary::identity(dims(3));
        assert!(matches!(wrong.apply(&vac), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn simple_distributions() {
        let d = dims(6);
        let s = dicke_basis_state(d, 3).unwrap();
        assert_eq!(mass_distribution(&s)[3], 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![c(0.0); 7];
        amps[2] = c(h);
        amps[5] = c(h);
        let s = DickeState::from_amplitudes(d, amps).unwrap();
        let p = mass_distribution(&s);
        assert!((p[2] - 0.5).abs() < 1e-15 && (p[5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coherent_state_is_binomial() {
        let d = dims(20);
        let rotated = rotation(d, CollectiveAxis::Y, PI / 2.0)
            .apply(&dicke_basis_state(d, 0).unwrap())
            .unwrap();
        // binomial(20, 1/2) by Pascal's triangle
        let mut row = vec![1.0f64];
        for _ in 0..20 {
            let mut next = vec![1.0; row.len() + 1];
            for k in 1..row.len() {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
        }
        let p = mass_distribution(&rotated);
        for (k, b) in row.iter().enumerate() {
            assert!((p[k] - b / 2f64.powi(20)).abs() < 1e-12);
        }
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_coherent_state_matches_gates() {
        for n in [1, 4, 9, 30] {
            let d = dims(n);
            for &(theta, phi) in &[(0.0, 0.0), (0.4, 1.3), (2.2, -0.6), (PI, 0.3)] {
                let via_gates = (&rotation(d, CollectiveAxis::Z, phi)
                    * &rotation(d, CollectiveAxis::Y, theta))
                    .apply(&dicke_basis_state(d, 0).unwrap())
                    .unwrap();
                let closed = coherent_state(d, theta, phi);
                let diff = linalg::max_abs_diff_vec(via_gates.amplitudes(), closed.amplitudes());
                assert!(diff < 1e-10, "N={n} θ={theta} φ={phi}: {diff}");
            }
        }
    }

    #[test]
    fn husimi_extremes_and_peak() {
        let d = dims(10);
        let vac = dicke_basis_state(d, 0).unwrap();
        let q = husimi_q(&vac, &[(0.0, 0.0), (PI, 0.0)]);
        assert!((q[0] - 1.0).abs() < 1e-12);
        assert!(q[1].abs() < 1e-14);

        let (t0, p0) = (1.2, 2.0);
        let psi = coherent_state(d, t0, p0);
        let grid: Vec<(f64, f64)> = (0..=60)
            .flat_map(|i| (0..120).map(move |j| (PI * i as f64 / 60.0, -PI + 2.0 * PI * j as f64 / 120.0)))
            .collect();
        let q = husimi_q(&psi, &grid);
        let best = (0..grid.len()).max_by(|&a, &b| q[a].total_cmp(&q[b])).unwrap();
        let (bt, bp) = grid[best];
        assert!((bt - t0).abs() <= PI / 60.0 && (bp - p0).abs() <= PI / 60.0, "{bt} {bp}");
        assert!(q.iter().all(|&v| (-1e-15..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn vacuum_overlap_with_rotated_vacuum() {
        let d = dims(8);
        let vac = dicke_basis_state(d, 0).unwrap();
        for theta in [0.1, 0.9, 2.0, 3.0] {
            let r = rotation(d, CollectiveAxis::Y, theta).apply(&vac).unwrap();
            let expected = (theta / 2.0).cos().powi(16);
            assert!((fidelity(&vac, &r).unwrap() - expected).abs() < 1e-12);
        }
        let one = dicke_basis_state(d, 1).unwrap();
        assert_eq!(fidelity(&vac, &one).unwrap(), 0.0);
    }

    #[test]
    fn eigenstate_energy_moments() {
        let d = dims(12);
        let m = energy_moments(&dicke_basis_state(d, 11).unwrap());
        assert_eq!(m.mean, 11.0);
        assert_eq!(m.variance, 0.0);
    }

    #[test]
    fn rotated_excited_state_variance() {
        // Var_{S_z}(R_y(β)|S, S−1⟩) = sin²β (3S − 1)/2, computed here by an
        // independent route: explicit second moments of S_z.
        for n in [4, 20, 100] {
            let d = dims(n);
            let s = d.spin();
            let excited = dicke_basis_state(d, n - 1).unwrap();
            for beta in [0.05, 0.4, 1.3, 2.9] {
                let out = rotation(d, CollectiveAxis::Y, beta).apply(&excited).unwrap();
                let var = energy_moments(&out).variance;
                let expected = beta.sin().powi(2) * (3.0 * s - 1.0) / 2.0;
                assert!((var - expected).abs() < 1e-10, "N={n} β={beta}: {var} vs {expected}");
            }
        }
    }

    #[test]
    fn frame_matches_dense_gates() {
        let d = dims(9);
        let frame = DickeFrame::new(d);
        let psi = coherent_state(d, 0.8, 0.3);
        for &(polar, azimuth, angle) in &[(0.3, 1.2, 0.7), (2.1, -2.0, 1.9), (PI / 2.0, 0.0, 0.5)] {
            let axis = CollectiveAxis::from_angles(polar, azimuth);
            let mut v = psi.amplitudes().clone();
            frame.twist_about(polar, azimuth, angle, &mut v);
            let dense = oat(d, axis, angle).apply(&psi).unwrap();
            assert!(linalg::max_abs_diff_vec(&v, dense.amplitudes()) < 1e-10);

            let mut v = psi.amplitudes().clone();
            frame.rotate_about(polar, azimuth, angle, &mut v);
            let dense = rotation(d, axis, angle).apply(&psi).unwrap();
            assert!(linalg::max_abs_diff_vec(&v, dense.amplitudes()) < 1e-10);
        }
    }

    fn rodrigues(axis: [f64; 3], angle: f64, v: [f64; 3]) -> [f64; 3] {
        let (s, c) = angle.sin_cos();
        let dot = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
        let cross = [
            axis[1] * v[2] - axis[2] * v[1],
            axis[2] * v[0] - axis[0] * v[2],
            axis[0] * v[1] - axis[1] * v[0],
        ];
        [0, 1, 2].map(|i| v[i] * c + cross[i] * s + axis[i] * dot * (1.0 - c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn gates_are_unitary(n in 1usize..30, x in -1.0f64..1.0, y in -1.0f64..1.0, z in 0.1f64..1.0, angle in -7.0f64..7.0) {
            let d = dims(n);
            let axis = CollectiveAxis::new(x, y, z).unwrap();
            prop_assert!(linalg::unitarity_defect(rotation(d, axis, angle).matrix()) < 1e-10);
            prop_assert!(linalg::unitarity_defect(oat(d, axis, angle).matrix()) < 1e-10);
        }

        #[test]
        fn same_axis_rotations_compose(n in 1usize..20, polar in 0.0f64..3.14, azimuth in -3.1f64..3.1, a in -4.0f64..4.0, b in -4.0f64..4.0) {
            let d = dims(n);
            let axis = CollectiveAxis::from_angles(polar, azimuth);
            let lhs = &rotation(d, axis, a) * &rotation(d, axis, b);
            let rhs = rotation(d, axis, a + b);
            prop_assert!(linalg::max_abs_diff(lhs.matrix(), rhs.matrix()) < 1e-10);
        }

        #[test]
        fn rotation_covariance(n in 1usize..16, p1 in 0.0f64..3.14, a1 in -3.1f64..3.1, p2 in 0.0f64..3.14, a2 in -3.1f64..3.1, angle in -3.0f64..3.0) {
            let d = dims(n);
            let rot_axis = CollectiveAxis::from_angles(p1, a1);
            let probe = CollectiveAxis::from_angles(p2, a2);
            let r = rotation(d, rot_axis, angle);
            let lhs = r.matrix() * collective_spin(d, probe) * r.matrix().adjoint();
            let rotated = rodrigues(rot_axis.direction(), angle, probe.direction());
            let rhs = collective_spin(d, CollectiveAxis::new(rotated[0], rotated[1], rotated[2]).unwrap());
            prop_assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-9);
        }

        #[test]
        fn apply_preserves_norm(n in 1usize..25, polar in 0.0f64..3.14, twist in -3.0f64..3.0, t in 0.0f64..3.0, p in -3.0f64..3.0) {
            let d = dims(n);
            let psi = coherent_state(d, t, p);
            let g = oat(d, CollectiveAxis::from_angles(polar, 0.4), twist);
            let out = g.apply(&psi).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
