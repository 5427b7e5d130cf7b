//! Sparse state-vector simulation of quantum query machines driven by a
//! length-preserving black-box oracle, together with the metrics and
//! adversary constructions used to certify query lower bounds at desk scale.
//!
//! The machine model is a finite qubit register split into three sections:
//! working qubits, an `n`-qubit query word, and an `n`-qubit answer word.
//! A program is an oracle-independent list of steps (dense unitaries, basis
//! permutations) interleaved with queries; a query maps each basis ket
//! `|w, a, b⟩` to `|w, a, f(a) ⊕ b⟩` for the oracle table `f`.
//!
//! On top of the simulator sit three layers:
//!
//! * [`metrics`] — query masses `δ_a(ξ)`, the oracle distance `d_S(f, g)`,
//!   and numeric checks of the two perturbation bounds (L1, L2) they obey.
//! * [`adversary`] — constructions that locate an under-queried word on the
//!   iteration orbit of a full-cycle oracle, flip the oracle there, and
//!   measure how little the final state moves.
//! * [`algorithms`] — reference programs: honest iteration, truncated
//!   iteration, and Grover search realized on the XOR oracle.
//!
//! The crate is `no_std`-compatible (`alloc` required; enable the `libm`
//! feature when building without `std`).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("qqm-core needs either the `std` or the `libm` feature");

pub mod adversary;
pub mod algorithms;
pub mod error;
pub mod machine;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod state;

pub use error::{Error, Result};
pub use machine::{run, success_probability, BasisPermutation, ProgramStep, QueryProgram, Trace};
pub use oracle::{apply_query, LengthPreservingFn, OrbitCertificate};
pub use state::{BitWord, DenseUnitary, QuantumState, RegisterLayout};

/// Complex amplitude type used throughout.
pub type Complex = num_complex::Complex<f64>;

/// Maximum allowed drift of a state norm away from 1.
pub const NORM_TOL: f64 = 1e-9;
/// Amplitudes with modulus below this are dropped from the sparse map.
pub const PRUNE_EPS: f64 = 1e-12;
/// Slack added to the right-hand side of every verified inequality.
pub const INEQ_SLACK: f64 = 1e-8;
/// Per-entry tolerance for the `U · U† = I` unitarity check.
pub const UNITARY_TOL: f64 = 1e-9;
/// Default cap on dense-unitary arity (matrices are `2^arity` square).
pub const DENSE_ARITY_CAP: usize = 10;

pub(crate) mod math {
    #[cfg(feature = "std")]
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }

    #[cfg(not(feature = "std"))]
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
}
