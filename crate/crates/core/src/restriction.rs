//! Fixed-excitation subspaces `H_R ⊆ (C²)^⊗N` and channels restricted to them.
//!
//! Basis strings are `N`-bit integers with qubit 0 as the most significant
//! bit, so numeric order is lexicographic order of the bitstrings.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::channels::{partial_trace_channel, QuantumChannel};
use crate::error::{Error, Result};
use crate::qcore::linalg::{self, c64, CMatrix};
use crate::qcore::{partial_trace, DensityOperator, Keep};

/// Largest `N` for which `2^N`-dimensional dense objects are built.
pub const MAX_DENSE_SITES: usize = 14;
/// Largest `N` for which the basis is enumerated.
pub const MAX_ENUMERATED_SITES: usize = 30;

/// Hamming weight of a basis string.
pub fn excitation_count(bits: u64) -> usize {
    bits.count_ones() as usize
}

/// Parses a string of `0`/`1` characters, first character = qubit 0.
pub fn parse_bitstring(s: &str) -> Result<u64> {
    if s.is_empty() || s.len() > 64 {
        return Err(Error::InvalidParameter(format!("bitstring of length {}", s.len())));
    }
    s.chars().try_fold(0u64, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => Err(Error::InvalidParameter(format!("invalid bit {other:?}"))),
    })
}

/// Subspace spanned by `N`-qubit strings with exactly `Np` ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExcitationSubspace {
    n_sites: usize,
    n_excited: usize,
    basis: Vec<u64>,
}

/// JSON descriptor `{"N": .., "Np": ..}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceDescriptor {
    #[serde(rename = "N")]
    pub n_sites: usize,
    #[serde(rename = "Np")]
    pub n_excited: usize,
}

impl ExcitationSubspace {
    pub fn new(n_sites: usize, n_excited: usize) -> Result<Self> {
        enumerate_basis(n_sites, n_excited)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excited(&self) -> usize {
        self.n_excited
    }

    /// `d_R = C(N, Np)`
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.basis.binary_search(&bits).ok()
    }

    pub fn descriptor(&self) -> SubspaceDescriptor {
        SubspaceDescriptor { n_sites: self.n_sites, n_excited: self.n_excited }
    }

    /// Renders basis string `bits` with qubit 0 first.
    pub fn format_bits(&self, bits: u64) -> String {
        (0..self.n_sites).map(|q| if bits >> (self.n_sites - 1 - q) & 1 == 1 { '1' } else { '0' }).collect()
    }

    fn check_dense(&self) -> Result<()> {
        if self.n_sites > MAX_DENSE_SITES {
            return Err(Error::TooLarge(format!(
                "dense embedding of {} sites (limit {MAX_DENSE_SITES})",
                self.n_sites
            )));
        }
        Ok(())
    }

    pub fn embedding(&self) -> Result<EmbeddingIsometry> {
        self.check_dense()?;
        let full = 1usize << self.n_sites;
        let mut w = linalg::zeros(full, self.dim());
        for (j, &s) in self.basis.iter().enumerate() {
            w[(s as usize, j)] = linalg::ONE;
        }
        Ok(EmbeddingIsometry { matrix: w })
    }

    /// `W ρ W†` on the full `2^N` space.
    pub fn embed(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.dim() {
            return Err(Error::mismatch(self.dim(), rho.dim()));
        }
        self.check_dense()?;
        let full = 1usize << self.n_sites;
        let mut m = linalg::zeros(full, full);
        for (i, &si) in self.basis.iter().enumerate() {
            for (j, &sj) in self.basis.iter().enumerate() {
                m[(si as usize, sj as usize)] = rho.matrix()[(i, j)];
            }
        }
        DensityOperator::new(m)
    }
}

/// Gosper's hack over `N`-bit words of weight `Np`, increasing.
pub fn enumerate_basis(n_sites: usize, n_excited: usize) -> Result<ExcitationSubspace> {
    if n_excited > n_sites {
        return Err(Error::InvalidParameter(format!("Np = {n_excited} exceeds N = {n_sites}")));
    }
    if n_sites > MAX_ENUMERATED_SITES {
        return Err(Error::TooLarge(format!("enumeration of {n_sites} sites (limit {MAX_ENUMERATED_SITES})")));
    }
    let limit = 1u64 << n_sites;
    let mut basis = Vec::new();
    if n_excited == 0 {
        basis.push(0);
    } else {
        let mut v = (1u64 << n_excited) - 1;
        while v < limit {
            basis.push(v);
            let t = v | (v - 1);
            v = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
        }
    }
    Ok(ExcitationSubspace { n_sites, n_excited, basis })
}

/// `W : H_R → (C²)^⊗N`, one computational basis vector per column.
#[derive(Clone, Debug)]
pub struct EmbeddingIsometry {
    matrix: CMatrix,
}

impl EmbeddingIsometry {
    pub fn matrix(&self) -> faer::MatRef<'_, c64> {
        self.matrix.as_ref()
    }
}

/// `E_R = 1_R / d_R` in restricted coordinates.
pub fn microcanonical(sub: &ExcitationSubspace) -> DensityOperator {
    DensityOperator::maximally_mixed(sub.dim()).expect("subspace is never empty")
}

/// `{K_m W}`: a full-space channel seen from `H_R`. Since `W` picks basis
/// vectors, this selects the columns of each Kraus operator.
pub fn restrict_channel(ch: &QuantumChannel, sub: &ExcitationSubspace) -> Result<QuantumChannel> {
    let full = 1usize
        .checked_shl(sub.n_sites as u32)
        .ok_or_else(|| Error::TooLarge(format!("2^{} sites", sub.n_sites)))?;
    if ch.dim_in() != full {
        return Err(Error::mismatch(full, ch.dim_in()));
    }
    let stacked = ch.stacked();
    let restricted = Mat::from_fn(stacked.nrows(), sub.dim(), |r, j| stacked[(r, sub.basis[j] as usize)]);
    let kraus = (0..ch.kraus_rank())
        .map(|m| restricted.as_ref().subrows(m * ch.dim_out(), ch.dim_out()).to_owned())
        .collect();
    QuantumChannel::new(sub.dim(), ch.dim_out(), kraus)
}

/// A system-environment split in which the subsystem is obtained by a
/// partial trace, either on a full bipartite space or on an excitation
/// subspace with the first `s_qubits` sites as the system.
#[derive(Clone, Debug)]
pub enum PartialTraceScenario {
    Full { d_s: usize, d_e: usize },
    Restricted { subspace: ExcitationSubspace, s_qubits: usize },
}

impl PartialTraceScenario {
    pub fn full(d_s: usize, d_e: usize) -> Result<Self> {
        if d_s == 0 || d_e == 0 {
            return Err(Error::InvalidDimension(format!("bipartite dims {d_s}x{d_e}")));
        }
        Ok(Self::Full { d_s, d_e })
    }

    /// `split = (system qubits, environment qubits)`; must add up to `N`.
    pub fn restricted(subspace: ExcitationSubspace, split: (usize, usize)) -> Result<Self> {
        if split.0 + split.1 != subspace.n_sites {
            return Err(Error::InvalidParameter(format!(
                "split {}|{} does not cover {} sites",
                split.0, split.1, subspace.n_sites
            )));
        }
        Ok(Self::Restricted { subspace, s_qubits: split.0 })
    }

    pub fn d_s(&self) -> usize {
        match self {
            Self::Full { d_s, .. } => *d_s,
            Self::Restricted { s_qubits, .. } => 1 << s_qubits,
        }
    }

    pub fn d_r(&self) -> usize {
        match self {
            Self::Full { d_s, d_e } => d_s * d_e,
            Self::Restricted { subspace, .. } => subspace.dim(),
        }
    }

    /// `Ω_{tr_S} = tr_S(E_R)`, the environment marginal of the
    /// microcanonical state.
    pub fn environment_state(&self) -> Result<DensityOperator> {
        match self {
            Self::Full { d_s, d_e } => {
                let e_r = DensityOperator::maximally_mixed(d_s * d_e)?;
                partial_trace(&e_r, Keep::B, (*d_s, *d_e))
            }
            Self::Restricted { subspace, s_qubits } => {
                let e_bits = subspace.n_sites - s_qubits;
                let mask = (1u64 << e_bits) - 1;
                let mut counts = vec![0.0; 1 << e_bits];
                for &s in subspace.basis() {
                    counts[(s & mask) as usize] += 1.0;
                }
                let d_r = subspace.dim() as f64;
                counts.iter_mut().for_each(|c| *c /= d_r);
                DensityOperator::diagonal(&counts)
            }
        }
    }

    /// `d_E^eff = 1 / tr(Ω_{tr_S}²)`
    pub fn effective_environment_dimension(&self) -> Result<f64> {
        Ok(1.0 / self.environment_state()?.purity())
    }

    /// The subsystem-defining channel `tr_E` with input `H_R`.
    pub fn channel(&self) -> Result<QuantumChannel> {
        match self {
            Self::Full { d_s, d_e } => partial_trace_channel(*d_s, *d_e),
            Self::Restricted { subspace, s_qubits } => {
                let e_bits = subspace.n_sites - s_qubits;
                let d_s = 1usize << s_qubits;
                let kraus = (0..1u64 << e_bits)
                    .map(|e| {
                        Mat::from_fn(d_s, subspace.dim(), |a, j| {
                            let s = subspace.basis[j];
                            if s >> e_bits == a as u64 && s & ((1 << e_bits) - 1) == e {
                                linalg::ONE
                            } else {
                                linalg::ZERO
                            }
                        })
                    })
                    .collect();
                QuantumChannel::new(subspace.dim(), d_s, kraus)
            }
        }
    }
}

/// `d_E^eff` for the restricted split `(system qubits, environment qubits)`.
pub fn effective_environment_dimension(sub: &ExcitationSubspace, split: (usize, usize)) -> Result<f64> {
    PartialTraceScenario::restricted(sub.clone(), split)?.effective_environment_dimension()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{choi, identity, linear_entropy};
    use crate::qcore::{derive_seed, haar_sample};

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn basis_examples() {
        let s = enumerate_basis(2, 1).unwrap();
        assert_eq!(s.basis(), &[0b01, 0b10]);
        assert_eq!(s.format_bits(s.basis()[0]), "01");
        assert_eq!(enumerate_basis(4, 2).unwrap().dim(), 6);
        assert_eq!(enumerate_basis(8, 4).unwrap().dim(), 70);
        assert_eq!(enumerate_basis(3, 0).unwrap().basis(), &[0]);
        assert_eq!(enumerate_basis(3, 3).unwrap().basis(), &[0b111]);
        assert!(enumerate_basis(3, 4).is_err());
        assert!(enumerate_basis(31, 1).is_err());
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for n in 0..=10 {
            for np in 0..=n {
                let s = enumerate_basis(n, np).unwrap();
                let brute: Vec<u64> = (0..1u64 << n).filter(|b| b.count_ones() as usize == np).collect();
                assert_eq!(s.basis(), brute.as_slice());
                assert_eq!(s.dim(), binomial(n, np));
            }
        }
    }

    #[test]
    fn hamming_weights() {
        assert_eq!(excitation_count(parse_bitstring("0000").unwrap()), 0);
        assert_eq!(excitation_count(parse_bitstring("1111").unwrap()), 4);
        assert_eq!(excitation_count(parse_bitstring("0110").unwrap()), 2);
        assert!(parse_bitstring("01a").is_err());
    }

    #[test]
    fn microcanonical_examples() {
        let s = enumerate_basis(2, 1).unwrap();
        let e = microcanonical(&s);
        assert_eq!(e.diagonal_entries(), vec![0.5, 0.5]);
        let s = enumerate_basis(6, 3).unwrap();
        assert!((microcanonical(&s).purity() - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn embedded_microcanonical_reduces_to_half_identity() {
        let s = enumerate_basis(2, 1).unwrap();
        let full = s.embed(&microcanonical(&s)).unwrap();
        let r = partial_trace(&full, Keep::A, (2, 2)).unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), linalg::diagonal(&[0.5, 0.5]).as_ref()) < 1e-15);
    }

    #[test]
    fn embedding_is_isometric() {
        let s = enumerate_basis(5, 2).unwrap();
        let w = s.embedding().unwrap();
        let g = linalg::adj_mul(w.matrix(), w.matrix());
        assert!(linalg::max_abs_diff(g.as_ref(), linalg::identity(10).as_ref()) < 1e-15);
        assert!(enumerate_basis(15, 1).unwrap().embedding().is_err());
    }

    #[test]
    fn restricted_identity_has_pure_choi() {
        let s = enumerate_basis(3, 1).unwrap();
        let ch = restrict_channel(&identity(8).unwrap(), &s).unwrap();
        assert_eq!(ch.dim_in(), 3);
        assert!((choi(&ch).purity() - 1.0).abs() < 1e-14);
        assert!(restrict_channel(&identity(4).unwrap(), &s).is_err());
    }

    #[test]
    fn restricted_channels_preserve_trace() {
        let s = enumerate_basis(4, 2).unwrap();
        let ch = restrict_channel(&partial_trace_channel(4, 4).unwrap(), &s).unwrap();
        for i in 0..100 {
            let rho = ch.apply_pure(&haar_sample(6, derive_seed(3, i)).unwrap()).unwrap();
            assert!((linalg::trace(rho.matrix()).re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn environment_dimension_examples() {
        // a single basis string: the environment marginal is pure
        let s = enumerate_basis(2, 0).unwrap();
        assert!((effective_environment_dimension(&s, (1, 1)).unwrap() - 1.0).abs() < 1e-15);
        let full = PartialTraceScenario::full(2, 4).unwrap();
        assert!((full.effective_environment_dimension().unwrap() - 4.0).abs() < 1e-12);
        let s = enumerate_basis(4, 2).unwrap();
        // environment patterns 00, 01, 10, 11 occur 1, 2, 2, 1 times among 6 strings
        assert!((effective_environment_dimension(&s, (2, 2)).unwrap() - 3.6).abs() < 1e-12);
        assert!(effective_environment_dimension(&s, (1, 2)).is_err());
    }

    #[test]
    fn counting_marginal_matches_dense_embedding() {
        let s = enumerate_basis(5, 2).unwrap();
        let sc = PartialTraceScenario::restricted(s.clone(), (2, 3)).unwrap();
        let full = s.embed(&microcanonical(&s)).unwrap();
        let dense = partial_trace(&full, Keep::B, (4, 8)).unwrap();
        let counted = sc.environment_state().unwrap();
        assert!(linalg::max_abs_diff(dense.matrix(), counted.matrix()) < 1e-15);
    }

    #[test]
    fn restricted_partial_trace_channel_matches_generic_restriction() {
        let s = enumerate_basis(4, 2).unwrap();
        let sc = PartialTraceScenario::restricted(s.clone(), (2, 2)).unwrap();
        let direct = sc.channel().unwrap();
        let generic = restrict_channel(&partial_trace_channel(4, 4).unwrap(), &s).unwrap();
        assert!(direct.action_distance(&generic).unwrap() < 1e-15);
        // Choi purity equals the environment purity
        let purity = 1.0 - linear_entropy(&direct).unwrap();
        assert!((purity - 1.0 / 3.6).abs() < 1e-12);
    }

    #[test]
    fn descriptor_json() {
        let d = enumerate_basis(8, 3).unwrap().descriptor();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(text, r#"{"N":8,"Np":3}"#);
    }
}
