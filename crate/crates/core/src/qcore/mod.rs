//! Dense complex linear algebra, states, distances and Haar sampling.

pub mod linalg;
mod sampling;
mod state;

pub use sampling::{
    derive_seed, haar_sample, haar_sample_with, haar_unitary, random_hermitian, rng_from_seed,
    SampleRng,
};
pub use state::{
    hs_norm, partial_trace, partial_trace_matrix, trace_distance, DensityOperator,
    HermitianOperator, Keep, StateVector, HERMITIAN_TOL, NORM_TOL, PSD_TOL, TRACE_TOL,
};
