//! Seeded random states and unitaries.
//!
//! Streams are keyed by `(master_seed, index)` through [`derive_seed`], so a
//! sample's value depends only on its index and never on which thread drew it.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::linalg::{c64, CMatrix};
use super::state::{HermitianOperator, StateVector};
use crate::error::{Error, Result};

pub type SampleRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-sample seed derived from a master seed and a sample index.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(mix64(master_seed.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn rng_from_seed(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state from `2·dim` standard Gaussians.
pub fn haar_sample_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension("haar_sample: dim must be >= 1".into()));
    }
    loop {
        let amps: Vec<c64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        // a zero draw has probability zero; redraw rather than fail
        if let Ok(psi) = StateVector::normalized(amps) {
            return Ok(psi);
        }
    }
}

pub fn haar_sample(dim: usize, seed: u64) -> Result<StateVector> {
    haar_sample_with(dim, &mut rng_from_seed(seed))
}

/// Haar-random unitary: Gram-Schmidt on a complex Ginibre matrix (equivalent
/// to QR with a positive diagonal in R).
pub fn haar_unitary(dim: usize, seed: u64) -> Result<CMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension("haar_unitary: dim must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut cols: Vec<Vec<c64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<c64> = (0..dim).map(|_| gaussian_c64(&mut rng)).collect();
        // two passes of modified Gram-Schmidt keep orthogonality at machine precision
        for _ in 0..2 {
            for q in &cols {
                let proj: c64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
    }
    Ok(Mat::from_fn(dim, dim, |i, j| cols[j][i]))
}

/// Random Hermitian matrix with Gaussian entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let g = Mat::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let h = Mat::from_fn(dim, dim, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5);
    HermitianOperator::new(h).expect("symmetrized matrix is Hermitian")
}
