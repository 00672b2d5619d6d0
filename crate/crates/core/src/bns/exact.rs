//! Exact energy distributions of the blurred-and-saturated canonical state.
//!
//! The weight of a `k`-bit output string with `m` ones is
//!
//! ```text
//! w_m = (1/C(N,Np)) · Σ_{q=0..m} C(m,q) · C(n·q, Np) · (−1)^(m−q),   n = N/k
//! ```
//!
//! i.e. inclusion-exclusion over which of the `m` chosen blocks are empty.
//! The alternating sum cancels catastrophically in floating point at
//! `N ~ 10⁴`, so everything here is big-integer / big-rational and floats
//! appear only when a caller asks for them.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    num_integer::binomial(BigUint::from(n), BigUint::from(k))
}

/// `⌈a / b⌉` for `b > 0`.
pub fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

fn check_blocks(n_sites: usize, n_excited: usize, blocks: usize) -> Result<()> {
    if blocks == 0 || n_sites == 0 || n_sites % blocks != 0 {
        return Err(Error::InvalidParameter(format!("k = {blocks} does not divide N = {n_sites}")));
    }
    if n_excited > n_sites {
        return Err(Error::InvalidParameter(format!("Np = {n_excited} exceeds N = {n_sites}")));
    }
    Ok(())
}

/// A probability distribution over `m = |s|` with exact rational entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    entries: BTreeMap<usize, BigRational>,
}

impl ExactDistribution {
    pub fn entries(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.entries.iter().map(|(&m, p)| (m, p))
    }

    /// Probability of `m`; zero outside the support.
    pub fn probability(&self, m: usize) -> BigRational {
        self.entries.get(&m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn probability_f64(&self, m: usize) -> f64 {
        self.probability(m).to_f64().unwrap_or(f64::NAN)
    }

    pub fn total(&self) -> BigRational {
        self.entries.values().fold(BigRational::zero(), |acc, p| acc + p)
    }

    pub fn mean(&self) -> BigRational {
        self.entries
            .iter()
            .fold(BigRational::zero(), |acc, (&m, p)| acc + p * BigRational::from_integer(BigInt::from(m)))
    }

    /// Smallest and largest `m` with nonzero probability.
    pub fn support(&self) -> Option<(usize, usize)> {
        let mut nz = self.entries.iter().filter(|(_, p)| !p.is_zero()).map(|(&m, _)| m);
        let lo = nz.next()?;
        Some((lo, nz.next_back().unwrap_or(lo)))
    }

    /// `(m, probability)` pairs over `0..=max_m`, zeros included.
    pub fn to_f64_vec(&self, max_m: usize) -> Vec<(usize, f64)> {
        (0..=max_m).map(|m| (m, self.probability_f64(m))).collect()
    }
}

/// The diagonal of `Ω_BnS` grouped by excitation sector of the `k` effective
/// sites. Numerators are the inclusion-exclusion sums `S_m`; every weight
/// shares the denominator `d_R = C(N, Np)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BnsCanonicalSpectrum {
    n_sites: usize,
    n_excited: usize,
    blocks: usize,
    d_r: BigUint,
    sums: BTreeMap<usize, BigInt>,
}

impl BnsCanonicalSpectrum {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excited(&self) -> usize {
        self.n_excited
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn d_r(&self) -> &BigUint {
        &self.d_r
    }

    /// `m` from `⌈k·Np/N⌉` to `min(Np, k)`.
    pub fn sector_range(&self) -> std::ops::RangeInclusive<usize> {
        sector_range(self.n_sites, self.n_excited, self.blocks)
    }

    /// Inclusion-exclusion numerator `S_m`; zero outside the sector range.
    pub fn numerator(&self, m: usize) -> BigInt {
        self.sums.get(&m).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Weight `w_m` of each output string with `m` ones.
    pub fn weight(&self, m: usize) -> BigRational {
        BigRational::new(self.numerator(m), BigInt::from(self.d_r.clone()))
    }

    /// `C(k, m) · w_m`
    pub fn sector_probability(&self, m: usize) -> BigRational {
        let count = BigInt::from(binomial(self.blocks as u64, m as u64));
        BigRational::new(count * self.numerator(m), BigInt::from(self.d_r.clone()))
    }

    pub fn distribution(&self) -> ExactDistribution {
        ExactDistribution { entries: self.sector_range().map(|m| (m, self.sector_probability(m))).collect() }
    }

    /// Diagonal of `Ω_BnS` on the `2^k` output strings (qubit 0 most
    /// significant), as floats.
    pub fn diagonal_f64(&self) -> Result<Vec<f64>> {
        if self.blocks > 20 {
            return Err(Error::TooLarge(format!("2^{} output diagonal", self.blocks)));
        }
        let w: Vec<f64> = (0..=self.blocks).map(|m| self.weight(m).to_f64().unwrap_or(f64::NAN)).collect();
        Ok((0..1usize << self.blocks).map(|s| w[s.count_ones() as usize]).collect())
    }
}

fn sector_range(n_sites: usize, n_excited: usize, blocks: usize) -> std::ops::RangeInclusive<usize> {
    let lo = ceil_div((blocks * n_excited) as u64, n_sites as u64) as usize;
    lo..=n_excited.min(blocks)
}

/// `S_m = Σ_{q=0..m} C(m,q)·C(n·q, Np)·(−1)^(m−q)`, given `C(n·q, Np)` for all q.
fn inclusion_exclusion(m: usize, block_binomials: &[BigInt]) -> BigInt {
    let mut row = BigInt::one();
    let mut acc = BigInt::zero();
    for (q, c_nq) in block_binomials.iter().enumerate().take(m + 1) {
        let term = &row * c_nq;
        if (m - q).is_odd() {
            acc -= term;
        } else {
            acc += term;
        }
        row = row * BigInt::from(m - q) / BigInt::from(q + 1);
    }
    acc
}

pub fn canonical_spectrum(n_sites: usize, n_excited: usize, blocks: usize) -> Result<BnsCanonicalSpectrum> {
    check_blocks(n_sites, n_excited, blocks)?;
    let block = n_sites / blocks;
    let range = sector_range(n_sites, n_excited, blocks);
    let top = *range.end();
    let block_binomials: Vec<BigInt> = (0..=top as u64)
        .into_par_iter()
        .map(|q| BigInt::from(binomial(block as u64 * q, n_excited as u64)))
        .collect();
    let sums: BTreeMap<usize, BigInt> = range
        .clone()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|m| (m, inclusion_exclusion(m, &block_binomials)))
        .collect();
    if let Some((m, s)) = sums.iter().find(|(_, s)| s.is_negative()) {
        return Err(Error::Inconsistent(format!("negative sector weight S_{m} = {s}")));
    }
    Ok(BnsCanonicalSpectrum {
        n_sites,
        n_excited,
        blocks,
        d_r: binomial(n_sites as u64, n_excited as u64),
        sums,
    })
}

/// Inclusion-exclusion numerator for an arbitrary `m`, bypassing the sector
/// range. Used to check that sectors outside the range really vanish.
pub fn sector_numerator_unrestricted(n_sites: usize, n_excited: usize, blocks: usize, m: usize) -> Result<BigInt> {
    check_blocks(n_sites, n_excited, blocks)?;
    let block = (n_sites / blocks) as u64;
    let bins: Vec<BigInt> = (0..=m as u64).map(|q| BigInt::from(binomial(block * q, n_excited as u64))).collect();
    Ok(inclusion_exclusion(m, &bins))
}

/// Distribution of the number of excitations among the first `k` sites
/// under `E_R` (partial-trace subsystem): hypergeometric
/// `C(k,m)·C(N−k, Np−m)/C(N,Np)`.
pub fn energy_distribution_trace(n_sites: usize, n_excited: usize, k: usize) -> Result<ExactDistribution> {
    if k > n_sites {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds N = {n_sites}")));
    }
    if n_excited > n_sites {
        return Err(Error::InvalidParameter(format!("Np = {n_excited} exceeds N = {n_sites}")));
    }
    let denom = BigInt::from(binomial(n_sites as u64, n_excited as u64));
    let lo = n_excited.saturating_sub(n_sites - k);
    let hi = n_excited.min(k);
    let entries = (lo..=hi)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|m| {
            let num = binomial(k as u64, m as u64) * binomial((n_sites - k) as u64, (n_excited - m) as u64);
            (m, BigRational::new(BigInt::from(num), denom.clone()))
        })
        .collect();
    Ok(ExactDistribution { entries })
}

/// Distribution of `|s|` over the `k` effective sites of `Ω_BnS`.
pub fn energy_distribution_bns(n_sites: usize, n_excited: usize, k: usize) -> Result<ExactDistribution> {
    Ok(canonical_spectrum(n_sites, n_excited, k)?.distribution())
}

/// `k·Np/N`
pub fn trace_mean_closed_form(n_sites: usize, n_excited: usize, k: usize) -> BigRational {
    BigRational::new(BigInt::from(k * n_excited), BigInt::from(n_sites))
}

/// `k·(1 − C(N − N/k, Np)/C(N, Np))`: each block is lit unless all its
/// sites are empty.
pub fn bns_mean_closed_form(n_sites: usize, n_excited: usize, k: usize) -> Result<BigRational> {
    check_blocks(n_sites, n_excited, k)?;
    let empty = BigRational::new(
        BigInt::from(binomial((n_sites - n_sites / k) as u64, n_excited as u64)),
        BigInt::from(binomial(n_sites as u64, n_excited as u64)),
    );
    Ok(BigRational::from_integer(BigInt::from(k)) * (BigRational::one() - empty))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Brute force: enumerate all N-bit strings of weight Np and count lit blocks.
    fn brute_bns(n_sites: usize, n_excited: usize, k: usize) -> BTreeMap<usize, BigRational> {
        let n = n_sites / k;
        let mask = (1u64 << n) - 1;
        let mut counts = BTreeMap::new();
        let mut total = 0i64;
        for s in 0u64..1 << n_sites {
            if s.count_ones() as usize != n_excited {
                continue;
            }
            total += 1;
            let lit = (0..k).filter(|b| (s >> (b * n)) & mask != 0).count();
            *counts.entry(lit).or_insert(0i64) += 1;
        }
        counts.into_iter().map(|(m, c)| (m, ratio(c, total))).collect()
    }

    #[test]
    fn binomial_convention() {
        assert_eq!(binomial(5, 7), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
        assert_eq!(ceil_div(7, 2), 4);
        assert_eq!(ceil_div(8, 2), 4);
    }

    #[test]
    fn small_examples() {
        let s = canonical_spectrum(2, 1, 1).unwrap();
        assert_eq!(s.weight(1), BigRational::one());
        assert_eq!(s.weight(0), BigRational::zero());
        let d = energy_distribution_bns(4, 2, 2).unwrap();
        assert_eq!(d.probability(1), ratio(1, 3));
        assert_eq!(d.probability(2), ratio(2, 3));
        assert_eq!(d.probability(0), BigRational::zero());
        let t = energy_distribution_trace(4, 2, 2).unwrap();
        assert_eq!(t.probability(0), ratio(1, 6));
        assert_eq!(t.probability(1), ratio(4, 6));
        assert_eq!(t.probability(2), ratio(1, 6));
    }

    #[test]
    fn matches_brute_force_enumeration() {
        for n_sites in 1..=12usize {
            for k in (1..=n_sites).filter(|k| n_sites % k == 0) {
                for np in 0..=n_sites {
                    let exact = energy_distribution_bns(n_sites, np, k).unwrap();
                    let brute = brute_bns(n_sites, np, k);
                    for m in 0..=k {
                        let b = brute.get(&m).cloned().unwrap_or_else(BigRational::zero);
                        assert_eq!(exact.probability(m), b, "N={n_sites} k={k} Np={np} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn sectors_outside_range_vanish() {
        for (n_sites, k) in [(8usize, 4usize), (12, 3), (12, 6), (10, 5)] {
            for np in 0..=n_sites {
                let range = sector_range(n_sites, np, k);
                for m in 0..=k {
                    let s = sector_numerator_unrestricted(n_sites, np, k, m).unwrap();
                    if !range.contains(&m) {
                        assert!(s.is_zero(), "N={n_sites} Np={np} k={k} m={m}: {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn saturated_blocks_give_point_mass() {
        let d = energy_distribution_bns(8, 7, 4).unwrap();
        assert_eq!(d.probability(4), BigRational::one());
        assert_eq!(d.support(), Some((4, 4)));
    }

    #[test]
    fn full_resolution_trace_is_point_mass() {
        let d = energy_distribution_trace(9, 4, 9).unwrap();
        assert_eq!(d.probability(4), BigRational::one());
    }

    #[test]
    fn means_match_closed_forms() {
        for (n_sites, np, k) in [(12usize, 5usize, 4usize), (30, 7, 6), (100, 10, 20)] {
            assert_eq!(energy_distribution_trace(n_sites, np, k).unwrap().mean(), trace_mean_closed_form(n_sites, np, k));
            assert_eq!(energy_distribution_bns(n_sites, np, k).unwrap().mean(), bns_mean_closed_form(n_sites, np, k).unwrap());
        }
    }

    #[test]
    fn rejects_non_divisor() {
        assert!(canonical_spectrum(10, 3, 3).is_err());
        assert!(canonical_spectrum(10, 11, 5).is_err());
        assert!(energy_distribution_trace(4, 2, 5).is_err());
    }

    #[test]
    fn diagonal_layout() {
        let s = canonical_spectrum(4, 2, 2).unwrap();
        let d = s.diagonal_f64().unwrap();
        let expected = [0.0, 1.0 / 6.0, 1.0 / 6.0, 4.0 / 6.0];
        for (a, b) in d.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
