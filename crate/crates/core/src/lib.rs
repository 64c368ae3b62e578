//! Thermal quantum channels from linear constraint data.
//!
//! The crate computes the maximum-entropy channel compatible with a set of
//! linear Choi-matrix constraints, together with the supporting entropy and
//! distance measures, an online channel learner, and n-copy typicality
//! experiments for i.i.d. channels.
//!
//! Conventions used throughout: natural logarithms; Choi matrices
//! `J = N(Φ)` with the unnormalized `|Φ⟩ = Σ_j |j⟩|j⟩`, stored on
//! `B ⊗ R` (output first); transposes in the computational basis.

pub mod channel;
pub mod constraints;
pub mod error;
pub mod io;
pub mod learner;
pub mod linalg;
pub mod metrics;
pub mod micro;
pub mod optim;
pub mod presets;
pub mod solver;

pub use error::{Error, Result};
