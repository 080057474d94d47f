//! Sequential-excitation circuits on individually addressed qubits.
//!
//! In the sequential subspace `|ℓ⟩` is `|e^ℓ g^{n−ℓ}⟩`: the first `ℓ`
//! qubits excited. Every gate is controlled on an excited qubit, so
//! `|g…g⟩` is left alone and a single excitation on qubit 0 is amplified.
//! Qubits are numbered from 0; bit `q` of a basis index is qubit `q`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register simulated by brute force.
pub const MAX_SIMULATED_QUBITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Cnot { control: usize, target: usize },
    Ch { control: usize, target: usize },
    /// Controlled `exp(−iθσ_y/2)`.
    Cry { control: usize, target: usize, theta: f64 },
}

impl Gate {
    fn qubits(&self) -> (usize, usize) {
        match *self {
            Gate::Cnot { control, target } | Gate::Ch { control, target } => (control, target),
            Gate::Cry { control, target, .. } => (control, target),
        }
    }

    /// `[[a, b], [c, d]]` acting on the target, `|g⟩ = 0`, `|e⟩ = 1`.
    fn target_matrix(&self) -> [[f64; 2]; 2] {
        match *self {
            Gate::Cnot { .. } => [[0.0, 1.0], [1.0, 0.0]],
            Gate::Ch { .. } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                [[h, h], [h, -h]]
            }
            Gate::Cry { theta, .. } => {
                let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                [[c, -s], [s, c]]
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            Gate::Ch { control, target } => write!(f, "CH {control} {target}"),
            Gate::Cry { control, target, theta } => write!(f, "CRY {control} {target} {theta:.16e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QubitCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl QubitCircuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::domain("a circuit needs at least one qubit"));
        }
        for g in &gates {
            let (c, t) = g.qubits();
            if c >= n_qubits || t >= n_qubits {
                return Err(Error::domain(format!("gate `{g}` addresses a qubit ≥ {n_qubits}")));
            }
            if c == t {
                return Err(Error::domain(format!("gate `{g}` uses one qubit as control and target")));
            }
            if let Gate::Cry { theta, .. } = g {
                if !theta.is_finite() {
                    return Err(Error::domain("rotation angle must be finite"));
                }
            }
        }
        Ok(Self { n_qubits, gates })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Text form: a `QUBITS n` line then one gate per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("QUBITS {}\n", self.n_qubits);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    /// Runs the circuit on a basis state given as a bitmask.
    pub fn simulate(&self, input: usize) -> Result<Vec<Complex64>> {
        if self.n_qubits > MAX_SIMULATED_QUBITS {
            return Err(Error::Unsupported(format!(
                "{} qubits exceed the brute-force limit of {MAX_SIMULATED_QUBITS}",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        if input >= dim {
            return Err(Error::domain("input basis state out of range"));
        }
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        psi[input] = Complex64::new(1.0, 0.0);
        for g in &self.gates {
            let (c, t) = g.qubits();
            let m = g.target_matrix();
            let (cm, tm) = (1usize << c, 1usize << t);
            for i in 0..dim {
                if i & cm != 0 && i & tm == 0 {
                    let j = i | tm;
                    let (a0, a1) = (psi[i], psi[j]);
                    psi[i] = a0 * m[0][0] + a1 * m[0][1];
                    psi[j] = a0 * m[1][0] + a1 * m[1][1];
                }
            }
        }
        Ok(psi)
    }

    /// Excitation-number populations of the circuit applied to
    /// `|e g…g⟩`, summed over all basis states with the same Hamming weight.
    pub fn excitation_populations(&self) -> Result<Vec<f64>> {
        let psi = self.simulate(1)?;
        let mut p = vec![0.0; self.n_qubits + 1];
        for (i, a) in psi.iter().enumerate() {
            p[i.count_ones() as usize] += a.norm_sqr();
        }
        Ok(p)
    }

    /// Weight of the output on sequential basis states `|e^ℓ g^{n−ℓ}⟩`.
    pub fn sequential_weight(&self) -> Result<f64> {
        let psi = self.simulate(1)?;
        Ok((0..=self.n_qubits).map(|l| psi[(1usize << l) - 1].norm_sqr()).sum())
    }
}

impl FromStr for QubitCircuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut gates = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let words: Vec<&str> = line.split_whitespace().collect();
            let index = |w: &str| {
                w.parse::<usize>()
                    .map_err(|_| parse_err(format!("`{w}` is not a qubit index")))
            };
            match (words[0], words.len()) {
                ("QUBITS", 2) => n_qubits = Some(index(words[1])?),
                ("CNOT", 3) => gates.push(Gate::Cnot { control: index(words[1])?, target: index(words[2])? }),
                ("CH", 3) => gates.push(Gate::Ch { control: index(words[1])?, target: index(words[2])? }),
                ("CRY", 4) => {
                    let theta = words[3]
                        .parse::<f64>()
                        .map_err(|_| parse_err(format!("`{}` is not an angle", words[3])))?;
                    gates.push(Gate::Cry { control: index(words[1])?, target: index(words[2])?, theta });
                }
                _ => return Err(parse_err(format!("unrecognized line `{line}`"))),
            }
        }
        let n = match n_qubits {
            Some(n) => n,
            None => gates
                .iter()
                .map(|g| {
                    let (c, t) = g.qubits();
                    c.max(t) + 1
                })
                .max()
                .ok_or(Error::Parse { line: 0, message: "empty circuit".into() })?,
        };
        QubitCircuit::new(n, gates)
    }
}

/// The three preparation families.
#[derive(Clone, Debug, PartialEq)]
pub enum SequentialKind {
    /// `|ℓ⟩` by a CNOT ladder from qubit 0.
    Eigenstate(usize),
    /// `(|ℓ₁⟩ + |ℓ₂⟩)/√2`: ladder to `ℓ₁`, a controlled Hadamard, ladder to `ℓ₂`.
    Clock(usize, usize),
    /// A chain of controlled rotations after a ladder to `first`.
    Profile { first: usize, thetas: Vec<f64> },
}

impl SequentialKind {
    /// Number of qubits the circuit needs.
    pub fn required_qubits(&self) -> usize {
        match self {
            Self::Eigenstate(l) => *l,
            Self::Clock(_, l2) => *l2,
            Self::Profile { first, thetas } => first + thetas.len(),
        }
    }
}

/// Builds the circuit on `n_qubits` qubits.
pub fn sequential_circuit(kind: &SequentialKind, n_qubits: usize) -> Result<QubitCircuit> {
    let need = kind.required_qubits();
    if need > n_qubits {
        return Err(Error::domain(format!("{need} qubits needed, only {n_qubits} available")));
    }
    let ladder = |control: usize, from: usize, to: usize| {
        (from..to).map(move |target| Gate::Cnot { control, target })
    };
    let gates: Vec<Gate> = match kind {
        SequentialKind::Eigenstate(l) => {
            if *l == 0 {
                return Err(Error::domain("an eigenstate target needs ℓ ≥ 1"));
            }
            ladder(0, 1, *l).collect()
        }
        SequentialKind::Clock(l1, l2) => {
            if !(1 <= *l1 && l1 < l2) {
                return Err(Error::domain(format!("clock levels need 1 ≤ ℓ₁ < ℓ₂, got ({l1}, {l2})")));
            }
            ladder(0, 1, *l1)
                .chain(std::iter::once(Gate::Ch { control: 0, target: *l1 }))
                .chain(ladder(*l1, l1 + 1, *l2))
                .collect()
        }
        SequentialKind::Profile { first, thetas } => {
            if *first == 0 {
                return Err(Error::domain("profile must start at ℓ ≥ 1"));
            }
            ladder(0, 1, *first)
                .chain(thetas.iter().enumerate().map(|(i, &theta)| Gate::Cry {
                    control: first + i - 1,
                    target: first + i,
                    theta,
                }))
                .collect()
        }
    };
    QubitCircuit::new(n_qubits, gates)
}

/// `p_ℓ = cos²(θ_{ℓ−f+1}/2) Π_{ℓ'=f}^{ℓ} sin²(θ_{ℓ'−f}/2)` for a profile
/// starting at `f`, with `θ_0 ≡ π` and `θ_{len+1} ≡ 0`. Index `ℓ` runs
/// `0..=f + len`.
pub fn profile_probabilities(first: usize, thetas: &[f64]) -> Vec<f64> {
    let len = thetas.len();
    let theta = |i: usize| -> f64 {
        match i {
            0 => std::f64::consts::PI,
            i if i <= len => thetas[i - 1],
            _ => 0.0,
        }
    };
    let mut p = vec![0.0; first + len + 1];
    let mut carried = 1.0;
    for l in first..=first + len {
        carried *= (theta(l - first) / 2.0).sin().powi(2);
        p[l] = carried * (theta(l - first + 1) / 2.0).cos().powi(2);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn eigenstate_six() {
        let c = sequential_circuit(&SequentialKind::Eigenstate(6), 10).unwrap();
        assert_eq!(c.gates().len(), 5);
        assert!(c.gates().iter().all(|g| matches!(g, Gate::Cnot { control: 0, .. })));
        let out = c.simulate(1).unwrap();
        assert!((out[0b11_1111].norm() - 1.0).abs() < 1e-15);
        let vac = c.simulate(0).unwrap();
        assert_eq!(vac[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn clock_four_eight() {
        let c = sequential_circuit(&SequentialKind::Clock(4, 8), 10).unwrap();
        let chs = c.gates().iter().filter(|g| matches!(g, Gate::Ch { .. })).count();
        assert_eq!(chs, 1);
        let p = c.excitation_populations().unwrap();
        for (l, &v) in p.iter().enumerate() {
            let expected = if l == 4 || l == 8 { 0.5 } else { 0.0 };
            assert!((v - expected).abs() < 1e-15, "ℓ={l}");
        }
        assert!((c.sequential_weight().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_like_profile() {
        let thetas: Vec<f64> = [0.79, 0.71, 0.63, 0.54, 0.42].iter().map(|t| t * PI).collect();
        let kind = SequentialKind::Profile { first: 3, thetas: thetas.clone() };
        let c = sequential_circuit(&kind, 10).unwrap();
        let sim = c.excitation_populations().unwrap();
        let formula = profile_probabilities(3, &thetas);
        for l in 0..=10 {
            let f = formula.get(l).copied().unwrap_or(0.0);
            assert!((sim[l] - f).abs() < 1e-12);
        }
        assert!(formula[..3].iter().all(|&p| p == 0.0));
        assert!(formula[3..=8].iter().all(|&p| p > 0.0));
        assert!((formula.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_indices_and_limits() {
        assert!(sequential_circuit(&SequentialKind::Eigenstate(6), 5).is_err());
        assert!(sequential_circuit(&SequentialKind::Clock(5, 5), 10).is_err());
        assert!(QubitCircuit::new(3, vec![Gate::Cnot { control: 0, target: 3 }]).is_err());
        assert!(QubitCircuit::new(3, vec![Gate::Ch { control: 1, target: 1 }]).is_err());
        let big = QubitCircuit::new(21, vec![]).unwrap();
        assert!(matches!(big.simulate(1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn text_round_trip() {
        let kind = SequentialKind::Profile { first: 2, thetas: vec![0.3, 1.234_567_890_123, -2.0] };
        let c = sequential_circuit(&kind, 6).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("QUBITS 6\nCNOT 0 1\nCRY 1 2 "));
        let back: QubitCircuit = text.parse().unwrap();
        assert_eq!(back, c);
        let err = "QUBITS 3\nCNOT 0 1\nSWAP 1 2\n".parse::<QubitCircuit>().unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, message: "unrecognized line `SWAP 1 2`".into() });
        let inferred: QubitCircuit = "CNOT 0 1\nCH 0 4\n".parse().unwrap();
        assert_eq!(inferred.n_qubits(), 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn product_formula_matches_statevector(n in 2usize..=12, raw in proptest::collection::vec(0.0f64..2.0 * PI, 11), first_seed in 0usize..100) {
            let first = 1 + first_seed % (n - 1);
            let len = n - first;
            let thetas = raw[..len].to_vec();
            let c = sequential_circuit(&SequentialKind::Profile { first, thetas: thetas.clone() }, n).unwrap();
            let sim = c.excitation_populations().unwrap();
            let formula = profile_probabilities(first, &thetas);
            for l in 0..=n {
                prop_assert!((sim[l] - formula[l]).abs() < 1e-12);
            }
            prop_assert!((c.sequential_weight().unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn ground_state_is_invariant(n in 2usize..=10, theta in 0.0f64..6.0, l1 in 1usize..5) {
            let kinds = [
                SequentialKind::Eigenstate(n),
                SequentialKind::Clock(l1.min(n - 1), n),
                SequentialKind::Profile { first: 1, thetas: vec![theta; n - 1] },
            ];
            for kind in kinds {
                let out = sequential_circuit(&kind, n).unwrap().simulate(0).unwrap();
                prop_assert_eq!(out[0], Complex64::new(1.0, 0.0));
            }
        }
    }
}
