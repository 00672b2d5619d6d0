use std::f64::consts::TAU;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::choi::{choi_to_kraus, ChoiState};
use super::QuantumChannel;
use crate::error::{Error, Result};
use crate::qcore::linalg::{self, c64, CMatrix};
use crate::qcore::{haar_unitary, DensityOperator};

pub fn identity(d: usize) -> Result<QuantumChannel> {
    QuantumChannel::new(d, d, vec![linalg::identity(d)])
}

/// Conjugation by a unitary (or isometry) `u`.
pub fn unitary_channel(u: CMatrix) -> Result<QuantumChannel> {
    QuantumChannel::new(u.ncols(), u.nrows(), vec![u])
}

/// Which depolarizing parameter ranges a given `λ` falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepolarizingRange {
    /// `0 ≤ λ ≤ 1 + 1/(d²−1)`, where the Choi matrix is positive.
    pub within_cp_range: bool,
    /// The narrower `0 ≤ λ ≤ 1 + 1/(d²−1)²`.
    pub within_squared_range: bool,
}

pub fn depolarizing_range(d: usize, lambda: f64) -> DepolarizingRange {
    if d <= 1 {
        return DepolarizingRange { within_cp_range: lambda >= 0.0, within_squared_range: lambda >= 0.0 };
    }
    let g = (d * d - 1) as f64;
    DepolarizingRange {
        within_cp_range: (0.0..=1.0 + 1.0 / g).contains(&lambda),
        within_squared_range: (0.0..=1.0 + 1.0 / (g * g)).contains(&lambda),
    }
}

/// Weyl operator `X^a Z^b` on `C^d`.
fn weyl(d: usize, a: usize, b: usize) -> CMatrix {
    let mut w = linalg::zeros(d, d);
    for j in 0..d {
        let phase = TAU * (b * j) as f64 / d as f64;
        w[((j + a) % d, j)] = c64::from_polar(1.0, phase);
    }
    w
}

/// `O ↦ λ·tr(O)·1/d + (1−λ)·O`.
///
/// For `0 ≤ λ ≤ 1` the Kraus family is `√(1−λ+λ/d²)·1` plus `(√λ/d)·X^aZ^b`
/// over the nontrivial Weyl operators. Any other `λ` goes through the Choi
/// matrix, which rejects values outside the completely positive range.
pub fn depolarizing(d: usize, lambda: f64) -> Result<QuantumChannel> {
    if d == 0 {
        return Err(Error::InvalidDimension("depolarizing: d must be >= 1".into()));
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("depolarizing: lambda = {lambda}")));
    }
    if (0.0..=1.0).contains(&lambda) {
        let dd = (d * d) as f64;
        let mut kraus = vec![linalg::scale(linalg::identity(d).as_ref(), (1.0 - lambda + lambda / dd).sqrt())];
        if lambda > 0.0 {
            let w = lambda.sqrt() / d as f64;
            for a in 0..d {
                for b in 0..d {
                    if a != 0 || b != 0 {
                        kraus.push(linalg::scale(weyl(d, a, b).as_ref(), w));
                    }
                }
            }
        }
        return QuantumChannel::new(d, d, kraus);
    }
    let dd = (d * d) as f64;
    let j = Mat::from_fn(d * d, d * d, |r, c| {
        let phi = if r / d == r % d && c / d == c % d { (1.0 - lambda) / d as f64 } else { 0.0 };
        let mixed = if r == c { lambda / dd } else { 0.0 };
        c64::new(phi + mixed, 0.0)
    });
    choi_to_kraus(&ChoiState::new(d, d, j)?)
}

/// `tr_E` on `H_S ⊗ H_E`, Kraus operators `1_S ⊗ ⟨e|`.
pub fn partial_trace_channel(d_s: usize, d_e: usize) -> Result<QuantumChannel> {
    if d_s == 0 || d_e == 0 {
        return Err(Error::InvalidDimension(format!("partial trace over {d_s}x{d_e}")));
    }
    let kraus = (0..d_e)
        .map(|e| {
            let mut k = linalg::zeros(d_s, d_s * d_e);
            for s in 0..d_s {
                k[(s, s * d_e + e)] = linalg::ONE;
            }
            k
        })
        .collect();
    QuantumChannel::new(d_s * d_e, d_s, kraus)
}

/// `ρ ↦ tr_E(U ρ U†)` for a Haar-random `U` on `H_S ⊗ H_E` drawn from `seed`.
pub fn reshuffle_then_trace(d_s: usize, d_e: usize, seed: u64) -> Result<QuantumChannel> {
    let u = haar_unitary(d_s * d_e, seed)?;
    let tr = partial_trace_channel(d_s, d_e)?;
    let kraus = tr.kraus_ops().map(|k| linalg::mul(k, u.as_ref())).collect();
    QuantumChannel::new(d_s * d_e, d_s, kraus)
}

/// `ρ ↦ tr(ρ)·σ` from a `dim_in`-dimensional input.
pub fn replacement(sigma: &DensityOperator, dim_in: usize) -> Result<QuantumChannel> {
    if dim_in == 0 {
        return Err(Error::InvalidDimension("replacement: dim_in must be >= 1".into()));
    }
    let dout = sigma.dim();
    let (vals, vecs) = linalg::eigh(sigma.matrix())?;
    let mut kraus = Vec::new();
    for (k, &p) in vals.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let w = p.sqrt();
        for i in 0..dim_in {
            kraus.push(Mat::from_fn(dout, dim_in, |s, c| if c == i { vecs[(s, k)] * w } else { linalg::ZERO }));
        }
    }
    QuantumChannel::new(dim_in, dout, kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{linear_entropy, stinespring};
    use crate::error::Error;
    use crate::qcore::{haar_sample, trace_distance};

    #[test]
    fn lambda_zero_is_identity() {
        let ch = depolarizing(3, 0.0).unwrap();
        assert_eq!(ch.kraus_rank(), 1);
        assert!(ch.action_distance(&identity(3).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn lambda_one_maps_to_maximally_mixed() {
        let ch = depolarizing(3, 1.0).unwrap();
        let out = ch.apply(&haar_sample(3, 1).unwrap().projector()).unwrap();
        let zero = crate::qcore::StateVector::basis(3, 0).unwrap().projector();
        let out0 = ch.apply(&zero).unwrap();
        let mixed = DensityOperator::maximally_mixed(3).unwrap();
        assert!(trace_distance(&out, &mixed).unwrap() < 1e-14);
        assert!(trace_distance(&out0, &mixed).unwrap() < 1e-14);
    }

    #[test]
    fn affine_action_on_matrix_units() {
        for &(d, lam) in &[(2usize, 0.25f64), (3, 0.7), (2, 1.2), (3, 1.1)] {
            let ch = depolarizing(d, lam).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let got = ch.apply_matrix_unit(i, j);
                    let expected = Mat::from_fn(d, d, |s, t| {
                        let unit = if s == i && t == j { 1.0 - lam } else { 0.0 };
                        let mixed = if i == j && s == t { lam / d as f64 } else { 0.0 };
                        c64::new(unit + mixed, 0.0)
                    });
                    assert!(linalg::max_abs_diff(got.as_ref(), expected.as_ref()) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn beyond_cp_range_rejected() {
        // edge of the CP range for d = 2 is 1 + 1/3
        assert!(depolarizing(2, 4.0 / 3.0 - 1e-9).is_ok());
        assert!(matches!(depolarizing(2, 4.0 / 3.0 + 1e-3), Err(Error::NotCompletelyPositive { .. })));
        assert!(matches!(depolarizing(2, -0.1), Err(Error::NotCompletelyPositive { .. })));
        assert!(depolarizing(0, 0.5).is_err());
    }

    #[test]
    fn range_classification() {
        let r = depolarizing_range(2, 1.2);
        assert!(r.within_cp_range && !r.within_squared_range);
        let r = depolarizing_range(2, 1.1);
        assert!(r.within_cp_range && r.within_squared_range);
        assert!(!depolarizing_range(3, 1.2).within_cp_range);
    }

    #[test]
    fn partial_trace_channel_acts_as_partial_trace() {
        let ch = partial_trace_channel(2, 3).unwrap();
        let rho = haar_sample(6, 4).unwrap().projector();
        let out = ch.apply(&rho).unwrap();
        let direct = crate::qcore::partial_trace(&rho, crate::qcore::Keep::A, (2, 3)).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), direct.matrix()) < 1e-14);
        let v = stinespring(&ch);
        assert!(linalg::max_abs_diff(v.matrix(), linalg::identity(6).as_ref()) < 1e-15);
    }

    #[test]
    fn reshuffle_has_partial_trace_entropy() {
        // unitary pre-processing leaves the channel entropy unchanged
        let a = linear_entropy(&reshuffle_then_trace(2, 4, 7).unwrap()).unwrap();
        let b = linear_entropy(&partial_trace_channel(2, 4).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
