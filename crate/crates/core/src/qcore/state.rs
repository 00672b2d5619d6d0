use faer::{Mat, MatRef};

use super::linalg::{self, c64, CMatrix};
use crate::error::{Error, Result};

/// Unit-norm tolerance for [`StateVector`].
pub const NORM_TOL: f64 = 1e-12;
/// Elementwise Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;

/// A normalized pure state in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<c64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<c64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension("state vector of dimension 0".into()));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn normalized(mut amplitudes: Vec<c64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidDimension(format!("basis index {index} >= {dim}")));
        }
        let mut amplitudes = vec![linalg::ZERO; dim];
        amplitudes[index] = linalg::ONE;
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> c64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `dim × 1` column.
    pub fn to_column(&self) -> CMatrix {
        Mat::from_fn(self.dim(), 1, |i, _| self.amplitudes[i])
    }

    /// `|ψ⟩⟨ψ|`
    pub fn projector(&self) -> DensityOperator {
        let a = &self.amplitudes;
        DensityOperator {
            matrix: Mat::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj()),
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(matrix.as_ref())?;
        let dev = linalg::hermitian_deviation(matrix.as_ref());
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = linalg::trace(matrix.as_ref());
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = linalg::eigvalsh(matrix.as_ref())?.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Wraps an operator that is a state by construction (e.g. the output of
    /// a CPTP map). The matrix is symmetrized to remove rounding asymmetry.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self { matrix: linalg::hermitize(matrix.as_ref()) }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dimension 0".into()));
        }
        Ok(Self { matrix: linalg::scale(linalg::identity(dim).as_ref(), 1.0 / dim as f64) })
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::new(linalg::diagonal(probabilities))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        linalg::frobenius_sq(self.matrix.as_ref())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(self.matrix.as_ref())
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn difference(&self, other: &DensityOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::mismatch(self.dim(), other.dim()));
        }
        Ok(HermitianOperator { matrix: linalg::sub(self.matrix(), other.matrix()) })
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator { matrix: linalg::kron(self.matrix(), other.matrix()) }
    }

    /// Conjugation `U ρ U†` by a unitary (or isometry) `u`.
    pub fn conjugate(&self, u: MatRef<'_, c64>) -> Result<DensityOperator> {
        if u.ncols() != self.dim() {
            return Err(Error::mismatch(self.dim(), u.ncols()));
        }
        let t = linalg::mul(u, self.matrix());
        Ok(Self::from_trusted(linalg::mul_adj(t.as_ref(), u)))
    }
}

#[derive(Clone, Debug)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(matrix.as_ref())?;
        let dev = linalg::hermitian_deviation(matrix.as_ref());
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(self.matrix.as_ref())
    }

    /// Schatten 1-norm.
    pub fn trace_norm(&self) -> Result<f64> {
        linalg::trace_norm(self.matrix.as_ref())
    }
}

fn check_square(m: MatRef<'_, c64>) -> Result<()> {
    if m.nrows() == 0 {
        return Err(Error::InvalidDimension("empty matrix".into()));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::mismatch(m.nrows(), m.ncols()));
    }
    Ok(())
}

/// `D(a, b) = ‖a − b‖₁ / 2`, from the spectrum of the difference.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    let diff = a.difference(b)?;
    Ok((0.5 * diff.trace_norm()?).clamp(0.0, 1.0))
}

/// Hilbert-Schmidt norm `√tr(a†a)`.
pub fn hs_norm(a: &HermitianOperator) -> f64 {
    linalg::frobenius_sq(a.matrix()).sqrt()
}

/// Which tensor factor survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of a matrix on `H_A ⊗ H_B` (A is the leading factor).
pub fn partial_trace_matrix(m: MatRef<'_, c64>, keep: Keep, dims: (usize, usize)) -> Result<CMatrix> {
    let (da, db) = dims;
    if da == 0 || db == 0 {
        return Err(Error::InvalidDimension(format!("factor dimensions {da}x{db}")));
    }
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::mismatch(da * db, m.nrows()));
    }
    Ok(match keep {
        Keep::A => Mat::from_fn(da, da, |i, j| (0..db).map(|b| m[(i * db + b, j * db + b)]).sum()),
        Keep::B => Mat::from_fn(db, db, |i, j| (0..da).map(|a| m[(a * db + i, a * db + j)]).sum()),
    })
}

pub fn partial_trace(rho: &DensityOperator, keep: Keep, dims: (usize, usize)) -> Result<DensityOperator> {
    Ok(DensityOperator::from_trusted(partial_trace_matrix(rho.matrix(), keep, dims)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ket(v: &[(f64, f64)]) -> StateVector {
        StateVector::normalized(v.iter().map(|&(r, i)| c64::new(r, i)).collect()).unwrap()
    }

    #[test]
    fn orthogonal_pure_states_are_at_distance_one() {
        let zero = StateVector::basis(2, 0).unwrap().projector();
        let one = StateVector::basis(2, 1).unwrap().projector();
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-14);
    }

    #[test]
    fn plus_versus_zero() {
        let plus = ket(&[(1.0, 0.0), (1.0, 0.0)]);
        let zero = StateVector::basis(2, 0).unwrap();
        let d = trace_distance(&plus.projector(), &zero.projector()).unwrap();
        // pure states: D = sqrt(1 - |<psi|phi>|^2)
        let overlap = plus.inner(&zero).norm_sqr();
        assert!((d - (1.0 - overlap).sqrt()).abs() < 1e-12);
        assert!((d - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_dimension_mismatch() {
        let a = DensityOperator::maximally_mixed(2).unwrap();
        let b = DensityOperator::maximally_mixed(3).unwrap();
        assert!(matches!(trace_distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hs_norm_examples() {
        let id = HermitianOperator::new(linalg::identity(4)).unwrap();
        assert!((hs_norm(&id) - 2.0).abs() < 1e-15);
        let zero = HermitianOperator::new(linalg::zeros(3, 3)).unwrap();
        assert_eq!(hs_norm(&zero), 0.0);
        let z = HermitianOperator::new(linalg::diagonal(&[1.0, -1.0])).unwrap();
        let from_eigs: f64 = z.eigenvalues().unwrap().iter().map(|l| l * l).sum::<f64>().sqrt();
        assert!((hs_norm(&z) - from_eigs).abs() < 1e-15);
        assert!((hs_norm(&z) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let b = ket(&[(1.0, 0.0), (0.0, 1.0), (0.5, 0.0)]).projector();
        let ab = a.tensor(&b);
        let ra = partial_trace(&ab, Keep::A, (2, 3)).unwrap();
        let rb = partial_trace(&ab, Keep::B, (2, 3)).unwrap();
        assert!(linalg::max_abs_diff(ra.matrix(), a.matrix()) < 1e-14);
        assert!(linalg::max_abs_diff(rb.matrix(), b.matrix()) < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let phi = ket(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]).projector();
        let r = partial_trace(&phi, Keep::A, (2, 2)).unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), linalg::diagonal(&[0.5, 0.5]).as_ref()) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = DensityOperator::maximally_mixed(4).unwrap();
        assert!(partial_trace(&rho, Keep::A, (2, 3)).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(linalg::diagonal(&[0.5, 0.6])).is_err());
        assert!(DensityOperator::new(linalg::diagonal(&[1.2, -0.2])).is_err());
        let mut m = linalg::diagonal(&[0.5, 0.5]);
        m[(0, 1)] = c64::new(0.1, 0.0);
        assert!(DensityOperator::new(m).is_err());
        assert!(DensityOperator::new(linalg::diagonal(&[0.3, 0.7])).is_ok());
    }

    #[test]
    fn state_vector_norm_checked() {
        assert!(StateVector::new(vec![c64::new(1.0, 0.0), c64::new(1.0, 0.0)]).is_err());
        assert!(StateVector::new(vec![]).is_err());
        assert!(StateVector::normalized(vec![linalg::ZERO; 3]).is_err());
    }
}
