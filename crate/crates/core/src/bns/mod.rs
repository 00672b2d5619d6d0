//! Blurred-and-saturated detector channels.
//!
//! `Λ^{n→1}` maps a block of `n` two-level atoms to a single effective atom
//! that is excited whenever any atom of the block is. On matrix units:
//!
//! ```text
//! |s'⟩⟨s''| ↦ |0⟩⟨0|        s' = s'' = 0
//!             |1⟩⟨1|        s' = s'', |s'| ≥ 1
//!             c |0⟩⟨1|      |s'| = 0, |s''| ≥ 1
//!             c |1⟩⟨0|      |s'| ≥ 1, |s''| = 0
//!             0             otherwise
//! ```
//!
//! with `c = 1/√(2ⁿ − 1)`. `Λ^{N→k}` applies `Λ^{N/k→1}` to each of `k`
//! consecutive blocks, qubit 0 most significant.

mod exact;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::Mat;

pub use exact::{
    binomial, bns_mean_closed_form, canonical_spectrum, ceil_div, energy_distribution_bns,
    energy_distribution_trace, sector_numerator_unrestricted, trace_mean_closed_form, BnsCanonicalSpectrum,
    ExactDistribution,
};

use crate::channels::{choi_to_kraus, tensor, ChoiState, QuantumChannel};
use crate::error::{Error, Result};
use crate::qcore::linalg::{self, c64};
use crate::restriction::{ExcitationSubspace, MAX_DENSE_SITES};

/// Largest block handled by the Choi construction (Choi dimension `2^{n+1}`).
pub const MAX_BLOCK_SITES: usize = 10;

/// Coherence factor `1/√(2ⁿ − 1)`.
pub fn coherence_factor(n: usize) -> f64 {
    1.0 / (((1u64 << n) - 1) as f64).sqrt()
}

fn check_block(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension("block of zero sites".into()));
    }
    if n > MAX_BLOCK_SITES {
        return Err(Error::TooLarge(format!("block of {n} sites (limit {MAX_BLOCK_SITES})")));
    }
    Ok(())
}

/// `Λ^{n→1}(|s'⟩⟨s''|)[a, b]` for coherence factor `coherence`.
fn block_action(a: usize, b: usize, s1: usize, s2: usize, coherence: f64) -> f64 {
    match (a, b) {
        (0, 0) if s1 == 0 && s2 == 0 => 1.0,
        (1, 1) if s1 == s2 && s1 != 0 => 1.0,
        (0, 1) if s1 == 0 && s2 != 0 => coherence,
        (1, 0) if s1 != 0 && s2 == 0 => coherence,
        _ => 0.0,
    }
}

/// Choi state of `Λ^{n→1}` with the coherence factor multiplied by
/// `coherence_scale`. Fails with `NotCompletelyPositive` once the scaled
/// factor exceeds `1/√(2ⁿ − 1)`.
pub fn bns_block_choi(n: usize, coherence_scale: f64) -> Result<ChoiState> {
    check_block(n)?;
    let din = 1usize << n;
    let c = coherence_factor(n) * coherence_scale;
    let norm = 1.0 / din as f64;
    let matrix = Mat::from_fn(2 * din, 2 * din, |r, col| {
        let v = block_action(r / din, col / din, r % din, col % din, c);
        c64::new(v * norm, 0.0)
    });
    ChoiState::new(din, 2, matrix)
}

fn block_cache() -> &'static Mutex<HashMap<usize, Arc<QuantumChannel>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuantumChannel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `Λ^{n→1}`, built from its Choi matrix. Results are cached per `n`.
pub fn bns_block_channel(n: usize) -> Result<Arc<QuantumChannel>> {
    check_block(n)?;
    if let Some(ch) = block_cache().lock().expect("block cache poisoned").get(&n) {
        return Ok(Arc::clone(ch));
    }
    let ch = match choi_to_kraus(&bns_block_choi(n, 1.0)?) {
        Ok(ch) => Arc::new(ch),
        Err(Error::NotCompletelyPositive { min_eigenvalue }) => {
            return Err(Error::Inconsistent(format!(
                "BnS block Choi matrix for n = {n} has eigenvalue {min_eigenvalue:e}"
            )))
        }
        Err(e) => return Err(e),
    };
    let mut cache = block_cache().lock().expect("block cache poisoned");
    Ok(Arc::clone(cache.entry(n).or_insert(ch)))
}

fn check_blocks(n_sites: usize, k: usize) -> Result<usize> {
    if k == 0 || n_sites == 0 || n_sites % k != 0 {
        return Err(Error::InvalidParameter(format!("k = {k} does not divide N = {n_sites}")));
    }
    Ok(n_sites / k)
}

/// `Λ^{N→k} = Λ^{N/k→1} ⊗ … ⊗ Λ^{N/k→1}` on the full `2^N`-dimensional space.
pub fn bns_channel(n_sites: usize, k: usize) -> Result<QuantumChannel> {
    let n = check_blocks(n_sites, k)?;
    if n_sites > MAX_DENSE_SITES {
        return Err(Error::TooLarge(format!("dense BnS channel on {n_sites} sites (limit {MAX_DENSE_SITES})")));
    }
    let block = bns_block_channel(n)?;
    let mut acc = (*block).clone();
    for _ in 1..k {
        acc = tensor(&acc, &block)?;
    }
    Ok(acc)
}

/// `Λ^{N→k}` restricted to an excitation subspace, assembled block by block
/// without forming the `2^N`-dimensional channel: column `j` of the Kraus
/// operator indexed by `(m_1, …, m_k)` is `⊗_b K_{m_b}[:, block_b(s_j)]`.
pub fn restricted_bns_channel(k: usize, sub: &ExcitationSubspace) -> Result<QuantumChannel> {
    let n_sites = sub.n_sites();
    let n = check_blocks(n_sites, k)?;
    if k >= usize::BITS as usize {
        return Err(Error::TooLarge(format!("2^{k} output dimension")));
    }
    let block = bns_block_channel(n)?;
    let tau_b = block.kraus_rank();
    let tau = (tau_b as u128).pow(k as u32);
    let dout = 1usize << k;
    let d_r = sub.dim();
    if tau * dout as u128 * d_r as u128 > crate::channels::MAX_KRAUS_ENTRIES as u128 {
        return Err(Error::TooLarge(format!(
            "{tau} Kraus operators of shape {dout}x{d_r} exceed the dense budget"
        )));
    }
    let tau = tau as usize;
    let mask = (1u64 << n) - 1;
    // blocks[j][b]: input string of block b for basis vector j
    let blocks: Vec<Vec<usize>> = sub
        .basis()
        .iter()
        .map(|&s| (0..k).map(|b| ((s >> (n_sites - n * (b + 1))) & mask) as usize).collect())
        .collect();
    let mut stacked = linalg::zeros(tau * dout, d_r);
    let mut digits = vec![0usize; k];
    for m in 0..tau {
        let mut rest = m;
        for b in (0..k).rev() {
            digits[b] = rest % tau_b;
            rest /= tau_b;
        }
        for (j, bl) in blocks.iter().enumerate() {
            // product over blocks of the two-component column K_{m_b}[:, s_b]
            let mut col = vec![linalg::ONE];
            for b in 0..k {
                let kb = block.kraus(digits[b]);
                let (x0, x1) = (kb[(0, bl[b])], kb[(1, bl[b])]);
                col = col.iter().flat_map(|&v| [v * x0, v * x1]).collect();
            }
            for (s, v) in col.into_iter().enumerate() {
                stacked[(m * dout + s, j)] = v;
            }
        }
    }
    let kraus = (0..tau).map(|m| stacked.as_ref().subrows(m * dout, dout).to_owned()).collect();
    QuantumChannel::new(d_r, dout, kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::identity;
    use crate::qcore::DensityOperator;
    use crate::restriction::{enumerate_basis, microcanonical, restrict_channel};

    fn basis_projector(dim: usize, i: usize) -> DensityOperator {
        let mut p = vec![0.0; dim];
        p[i] = 1.0;
        DensityOperator::diagonal(&p).unwrap()
    }

    #[test]
    fn single_site_block_is_identity() {
        let ch = bns_block_channel(1).unwrap();
        assert!(ch.action_distance(&identity(2).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn two_site_block_on_matrix_units() {
        let ch = bns_block_channel(2).unwrap();
        let c = 1.0 / 3f64.sqrt();
        let out = ch.apply_matrix_unit(0b00, 0b11);
        assert!((out[(0, 1)] - c64::new(c, 0.0)).norm() < 1e-12);
        assert!(out[(0, 0)].norm() + out[(1, 0)].norm() + out[(1, 1)].norm() < 1e-12);
        let off = ch.apply_matrix_unit(0b01, 0b10);
        assert!(linalg::frobenius_sq(off.as_ref()) < 1e-24);
        for s in [0b01, 0b10, 0b11] {
            let out = ch.apply(&basis_projector(4, s)).unwrap();
            assert!((out.matrix()[(1, 1)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_matches_definition_on_all_units() {
        for n in 1..=4 {
            let ch = bns_block_channel(n).unwrap();
            let d = 1usize << n;
            let c = coherence_factor(n);
            for i in 0..d {
                for j in 0..d {
                    let out = ch.apply_matrix_unit(i, j);
                    for a in 0..2 {
                        for b in 0..2 {
                            let expected = block_action(a, b, i, j, c);
                            assert!((out[(a, b)] - c64::new(expected, 0.0)).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn kraus_rank_is_choi_rank() {
        for n in 1..=5 {
            assert_eq!(bns_block_channel(n).unwrap().kraus_rank(), (1 << n) - 1);
        }
    }

    #[test]
    fn coherence_factor_is_sharp() {
        for n in 2..=4 {
            assert!(bns_block_choi(n, 1.0).is_ok());
            assert!(matches!(bns_block_choi(n, 1.0 + 1e-3), Err(Error::NotCompletelyPositive { .. })));
        }
    }

    #[test]
    fn block_size_limits() {
        assert!(bns_block_channel(0).is_err());
        assert!(matches!(bns_block_channel(11), Err(Error::TooLarge(_))));
        assert!(bns_channel(10, 3).is_err());
    }

    #[test]
    fn full_channel_examples() {
        let ch = bns_channel(2, 2).unwrap();
        assert!(ch.action_distance(&identity(4).unwrap()).unwrap() < 1e-12);
        let ch = bns_channel(4, 2).unwrap();
        let out = ch.apply(&basis_projector(16, 0b1100)).unwrap();
        assert!((out.matrix()[(0b10, 0b10)].re - 1.0).abs() < 1e-12);
        let sub = enumerate_basis(4, 2).unwrap();
        let omega = restrict_channel(&ch, &sub).unwrap().apply(&microcanonical(&sub)).unwrap();
        let expected = [0.0, 1.0 / 6.0, 1.0 / 6.0, 4.0 / 6.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((omega.matrix()[(i, i)].re - e).abs() < 1e-12);
        }
    }

    #[test]
    fn two_block_tensor_acts_blockwise() {
        let ch = bns_channel(4, 2).unwrap();
        let out = ch.apply(&basis_projector(16, 0b0101)).unwrap();
        assert!((out.matrix()[(0b11, 0b11)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restricted_assembly_matches_dense_restriction() {
        for (n_sites, k, np) in [(4usize, 2usize, 2usize), (6, 3, 2), (6, 2, 3), (8, 4, 5), (4, 1, 1)] {
            let sub = enumerate_basis(n_sites, np).unwrap();
            let direct = restricted_bns_channel(k, &sub).unwrap();
            let dense = restrict_channel(&bns_channel(n_sites, k).unwrap(), &sub).unwrap();
            assert!(direct.action_distance(&dense).unwrap() < 1e-12, "N={n_sites} k={k} Np={np}");
        }
    }

    #[test]
    fn restricted_single_block_to_constant() {
        let sub = enumerate_basis(2, 1).unwrap();
        let ch = restricted_bns_channel(1, &sub).unwrap();
        for i in 0..2 {
            let out = ch.apply(&basis_projector(2, i)).unwrap();
            assert!((out.matrix()[(1, 1)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_matches_channel_output() {
        for (n_sites, k, np) in [(6usize, 3usize, 2usize), (8, 4, 3), (8, 2, 5)] {
            let sub = enumerate_basis(n_sites, np).unwrap();
            let omega = restricted_bns_channel(k, &sub).unwrap().apply(&microcanonical(&sub)).unwrap();
            let diag = canonical_spectrum(n_sites, np, k).unwrap().diagonal_f64().unwrap();
            for (i, w) in diag.iter().enumerate() {
                assert!((omega.matrix()[(i, i)].re - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_gram_matrix_is_diagonalized() {
        // Gram matrix of the restricted N=9, k=3, Np=1 family; the solver
        // needs the rotated retry here
        let full = bns_channel(9, 3).unwrap();
        let sub = enumerate_basis(9, 1).unwrap();
        let (dout, tau) = (full.dim_out(), full.kraus_rank());
        let stacked = full.stacked();
        let cols = Mat::from_fn(dout * sub.dim(), tau, |r, m| {
            stacked[(m * dout + r / sub.dim(), sub.basis()[r % sub.dim()] as usize)]
        });
        let gram = linalg::adj_mul(cols.as_ref(), cols.as_ref());
        let (vals, vecs) = linalg::eigh(gram.as_ref()).unwrap();
        let rebuilt = linalg::mul_adj(
            linalg::mul(vecs.as_ref(), linalg::diagonal(&vals).as_ref()).as_ref(),
            vecs.as_ref(),
        );
        assert!(linalg::max_abs_diff(rebuilt.as_ref(), gram.as_ref()) < 1e-10);
    }
}
