use rand::Rng;
use rand_distr::StandardNormal;

use super::QuantumChannel;
use crate::error::Result;
use crate::qcore::linalg::{self, c64};
use crate::qcore::{derive_seed, haar_sample_with, rng_from_seed, StateVector};

const REFINE_STEPS: usize = 60;
const INITIAL_STEP: f64 = 0.5;
const SHRINK: f64 = 0.7;

/// `‖Λ(ψψ†) − Λ(φφ†)‖₁ / 2` for orthogonal `ψ, φ`; the denominator
/// `‖ψψ† − φφ†‖₁ / 2` is exactly 1.
fn contraction(ch: &QuantumChannel, psi: &StateVector, phi: &StateVector) -> Result<f64> {
    let a = ch.apply_pure(psi)?;
    let b = ch.apply_pure(phi)?;
    let diff = linalg::sub(a.matrix(), b.matrix());
    Ok(0.5 * linalg::trace_norm(diff.as_ref())?)
}

/// Removes the `psi` component of `v` and normalizes.
fn orthogonalize(v: Vec<c64>, psi: &StateVector) -> Option<StateVector> {
    let proj: c64 = psi.amplitudes().iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
    let w: Vec<c64> = v.iter().zip(psi.amplitudes()).map(|(x, p)| x - proj * p).collect();
    StateVector::normalized(w).ok()
}

fn perturb<R: Rng>(state: &StateVector, step: f64, rng: &mut R) -> Vec<c64> {
    state
        .amplitudes()
        .iter()
        .map(|&z| z + c64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * step)
        .collect()
}

fn single_trial(ch: &QuantumChannel, seed: u64) -> Result<f64> {
    let d = ch.dim_in();
    let mut rng = rng_from_seed(seed);
    let mut psi = haar_sample_with(d, &mut rng)?;
    let mut phi = loop {
        let raw = haar_sample_with(d, &mut rng)?;
        if let Some(p) = orthogonalize(raw.amplitudes().to_vec(), &psi) {
            break p;
        }
    };
    let mut best = contraction(ch, &psi, &phi)?;
    let mut step = INITIAL_STEP;
    for _ in 0..REFINE_STEPS {
        let Ok(cand_psi) = StateVector::normalized(perturb(&psi, step, &mut rng)) else {
            continue;
        };
        let Some(cand_phi) = orthogonalize(perturb(&phi, step, &mut rng), &cand_psi) else {
            continue;
        };
        let value = contraction(ch, &cand_psi, &cand_phi)?;
        if value > best {
            best = value;
            psi = cand_psi;
            phi = cand_phi;
        } else {
            step *= SHRINK;
        }
    }
    Ok(best)
}

/// Lower bound on the trace-norm Lipschitz constant
/// `η = max ‖Λ(ρ) − Λ(σ)‖₁ / ‖ρ − σ‖₁`.
///
/// Trial `t` starts from a random orthogonal pure pair drawn from
/// `derive_seed(seed, t)` and hill-climbs; the result is the running maximum,
/// so it never decreases as `trials` grows.
pub fn lipschitz_estimate(ch: &QuantumChannel, trials: usize, seed: u64) -> Result<f64> {
    if ch.dim_in() < 2 {
        // a single pure state: no distinct pair exists
        return Ok(0.0);
    }
    let mut best = 0.0f64;
    for t in 0..trials.max(1) {
        best = best.max(single_trial(ch, derive_seed(seed, t as u64))?);
    }
    Ok(best.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, identity, partial_trace_channel};

    #[test]
    fn identity_saturates() {
        let eta = lipschitz_estimate(&identity(4).unwrap(), 3, 1).unwrap();
        assert!((eta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_channel_is_zero() {
        let eta = lipschitz_estimate(&depolarizing(3, 1.0).unwrap(), 5, 2).unwrap();
        assert!(eta < 1e-12);
    }

    #[test]
    fn monotone_in_trials() {
        let ch = depolarizing(3, 0.4).unwrap();
        let mut prev = 0.0;
        for trials in 1..6 {
            let eta = lipschitz_estimate(&ch, trials, 9).unwrap();
            assert!(eta >= prev);
            prev = eta;
        }
        // depolarizing contracts every difference by exactly 1 - lambda
        assert!((prev - 0.6).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_is_nonexpansive() {
        let eta = lipschitz_estimate(&partial_trace_channel(2, 2).unwrap(), 4, 3).unwrap();
        assert!(eta <= 1.0);
        // product inputs |0>|x>, |1>|x> reach 1; hill climbing gets close
        assert!(eta > 0.9);
    }
}
