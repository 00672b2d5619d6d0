//! Canonical typicality for subsystems defined by quantum channels.
//!
//! A subsystem is whatever a CPTP map `Λ : L(H_R) → L(H_S)` lets an observer
//! see. The crate builds such maps, their canonical states `Λ(1/d_R)`, the
//! entropy bound on the average distance of `Λ(ψψ†)` from it, and the
//! blurred-and-saturated detector model with exact combinatorics.

pub mod bns;
pub mod channels;
pub mod error;
pub mod qcore;
pub mod restriction;
pub mod typicality;

pub use channels::{ChoiState, QuantumChannel, StinespringIsometry};
pub use error::{Error, Result};
pub use qcore::linalg::{c64, CMatrix};
pub use qcore::{DensityOperator, HermitianOperator, StateVector};
pub use restriction::{ExcitationSubspace, PartialTraceScenario};
pub use bns::{BnsCanonicalSpectrum, ExactDistribution};
pub use typicality::{EtaMode, ExperimentConfig, TypicalityReport};
