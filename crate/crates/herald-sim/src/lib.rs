//! Simulation library for heralded cavity-mediated CPHASE/CNOT gates.
//!
//! The library models two qubit atoms coupled through optical cavities to a
//! driven auxiliary atom. A detuned Raman drive imprints a qubit-dependent
//! phase on the ground manifold while every error channel pumps the auxiliary
//! atom out of its initial state, so a final measurement heralds success.
//!
//! Three levels of description are provided:
//! - full Lindblad master-equation dynamics ([`dynamics`]),
//! - effective ground-manifold operators obtained by adiabatic elimination of
//!   the decaying excited manifold ([`effective`]),
//! - closed-form shift/decay expressions and tuning rules ([`effective`]).
//!
//! [`protocol`] assembles these into heralded gate runs and logical-qubit
//! circuit compositions; the `herald-sim` binary exposes parameter sweeps.

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod protocol;

pub use error::SimError;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
