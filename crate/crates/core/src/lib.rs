//! Multi-time wave functions in 1+1 dimensions.
//!
//! The crate contains the numerical core: Minkowski geometry and the
//! surface Born density, an exact characteristic solver for two Dirac
//! particles with a zero-range interaction, a commutator-based consistency
//! checker for multi-time systems, a truncated lattice Fock space for an
//! emission-absorption model, its multi-time Green-function formulation,
//! a Tomonaga–Schwinger evolution on discrete surfaces and an iterated
//! collapse simulator for the curved Born rule.

pub mod born;
pub mod consistency;
pub mod error;
pub mod exec;
pub mod fock;
pub mod linalg;
pub mod qft;
pub mod quadrature;
pub mod report;
pub mod spacetime;
pub mod tomonaga;
pub mod zerorange;

pub use error::{Error, Result};
pub use exec::Exec;
