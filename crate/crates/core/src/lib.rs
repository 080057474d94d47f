//! Symmetric-subspace simulator for entangled two-node atomic-ensemble networks.
//!
//! Each node holds `N` two-level atoms restricted to the `N + 1` Dicke states
//! `|ℓ⟩` (ℓ = excitation number, `S_z` eigenvalue `ℓ − N/2`). Two nodes share a
//! single delocalized excitation, amplify it with local collective gates, let it
//! pick up gravitational redshift phases, and are read out either non-locally
//! (beam splitter + photon parity) or locally (homodyne quadrature product).
//!
//! Module map:
//! - [`dicke`]: basis, collective spin operators, rotation / twisting gates.
//! - [`gravity`]: redshift phases, decoherence time, clock-interferometer beat.
//! - [`network`]: two-node states, seed state, local gates, free evolution.
//! - [`varprep`]: variational compilation of the amplification unitary.
//! - [`exact`]: double twisting, energy tuning, NOON−1 states, Fisher information.
//! - [`qubit`]: sequential-excitation qubit circuits and a statevector backend.
//! - [`measurement`]: analytic signals, Fock-space oracles, Ramsey runs, fits.
//! - [`textio`]: text persistence for states, unitaries and circuits.

pub mod dicke;
pub mod error;
pub mod exact;
pub mod gravity;
pub mod linalg;
pub mod measurement;
pub mod nelder_mead;
pub mod network;
pub mod qubit;
pub mod textio;
pub mod varprep;

pub use error::{Error, Result};

pub use num_complex::Complex64;
