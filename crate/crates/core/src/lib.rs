//! State-vector simulation of nondistortion quantum interrogation (NQI).
//!
//! A single probe photon, resolved into spatial paths and circular
//! polarization, interrogates a multilevel atom prepared in a superposition of
//! two degenerate metastable levels. Absorption is an isometry that moves the
//! photon into a terminal scattered-photon mode and the atom into its ground
//! level. On top of the amplitude engine this crate provides:
//!
//! * the interrogation protocols (direct interaction, two-pass opacity,
//!   chained Mach-Zehnder, Fabry-Perot) with their closed forms,
//! * a witness-projector search that certifies whether any probe measurement
//!   can reveal the atom while leaving its superposition intact,
//! * a small line-oriented circuit language (`.nqi` files) compiling to the
//!   same element sequences.

pub mod circuit;
pub mod dsl;
pub mod elements;
pub mod error;
pub mod nogo;
pub mod protocols;
pub mod state;

pub use circuit::{AtomSpec, Circuit, Classifier, ProtocolOutcome};
pub use elements::Element;
pub use error::{NqiError, Result};
pub use num_complex::Complex64;
pub use state::{BasisLayout, Branch, BranchLabel, JointState, ModeRef, PhotonMode, Polarization};

/// Numerical tolerances shared by every module.
pub mod tol {
    /// Squared-norm checks.
    pub const NORM: f64 = 1e-12;
    /// Equality of probabilities.
    pub const PROB: f64 = 1e-10;
    /// Singular-value cutoff and residual threshold of the witness search.
    pub const RANK: f64 = 1e-9;
    /// Branch probabilities below this are treated as empty when conditioning.
    pub const EMPTY_BRANCH: f64 = 1e-14;
}
