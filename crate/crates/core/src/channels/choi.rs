use std::sync::OnceLock;

use faer::{Mat, MatRef};

use super::{QuantumChannel, KRAUS_CUTOFF};
use crate::error::{Error, Result};
use crate::qcore::linalg::{self, c64, CMatrix};
use crate::qcore::{partial_trace_matrix, DensityOperator, Keep, PSD_TOL, TRACE_TOL};

/// Agreement required between the two purity routes before reporting.
pub const ROUTE_TOL: f64 = 1e-8;
/// Largest Choi dimension materialized densely for the purity cross-check.
pub const DENSE_CHOI_LIMIT: usize = 4096;

/// `J = (Λ ⊗ id)(|φ+⟩⟨φ+|)` with `|φ+⟩ = Σ_i |i⟩|i⟩ / √dim_in`.
///
/// The output factor leads: entry `((s, i), (t, j))` sits at
/// `(s·dim_in + i, t·dim_in + j)` and equals `Λ(|i⟩⟨j|)[s, t] / dim_in`.
#[derive(Clone, Debug)]
pub struct ChoiState {
    dim_in: usize,
    dim_out: usize,
    matrix: CMatrix,
    spectrum: OnceLock<(Vec<f64>, CMatrix)>,
}

impl ChoiState {
    /// Validates a candidate Choi matrix: Hermitian, positive semidefinite,
    /// and with `tr_out J = 1/dim_in`.
    pub fn new(dim_in: usize, dim_out: usize, matrix: CMatrix) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidDimension(format!("channel dims {dim_in}->{dim_out}")));
        }
        let n = dim_in * dim_out;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::mismatch(n, matrix.nrows()));
        }
        let dev = linalg::hermitian_deviation(matrix.as_ref());
        if dev > 1e-10 {
            return Err(Error::NotCptp(format!("Choi matrix not Hermitian (deviation {dev:e})")));
        }
        let marginal = partial_trace_matrix(matrix.as_ref(), Keep::B, (dim_out, dim_in))?;
        let target = linalg::scale(linalg::identity(dim_in).as_ref(), 1.0 / dim_in as f64);
        let tp = linalg::max_abs_diff(marginal.as_ref(), target.as_ref());
        if tp > TRACE_TOL {
            return Err(Error::NotCptp(format!("input marginal deviates from 1/d by {tp:e}")));
        }
        let state = Self { dim_in, dim_out, matrix: linalg::hermitize(matrix.as_ref()), spectrum: OnceLock::new() };
        let min = state.spectrum()?.0.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: min });
        }
        Ok(state)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_trusted(self.matrix.clone())
    }

    /// `tr(J²)`
    pub fn purity(&self) -> f64 {
        linalg::frobenius_sq(self.matrix.as_ref())
    }

    /// Eigenvalues (nondecreasing) and eigenvectors, computed once.
    pub fn spectrum(&self) -> Result<&(Vec<f64>, CMatrix)> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let computed = linalg::eigh(self.matrix.as_ref())?;
        Ok(self.spectrum.get_or_init(|| computed))
    }
}

/// Choi state of `ch`, computed as `A A† / dim_in` with `A = [vec K_1, …]`
/// and cached on the channel.
pub fn choi(ch: &QuantumChannel) -> &ChoiState {
    ch.choi_cell().get_or_init(|| {
        let a = ch.kraus_columns();
        let m = linalg::scale(linalg::mul_adj(a.as_ref(), a.as_ref()).as_ref(), 1.0 / ch.dim_in() as f64);
        ChoiState {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            matrix: linalg::hermitize(m.as_ref()),
            spectrum: OnceLock::new(),
        }
    })
}

/// Kraus operators `√(dim_in·λ) · unvec(v)` for each eigenpair `(λ, v)` of
/// `J` with `λ > 1e-12`.
pub fn choi_to_kraus(j: &ChoiState) -> Result<QuantumChannel> {
    let (vals, vecs) = j.spectrum()?;
    if let Some(&min) = vals.first() {
        if min < -PSD_TOL {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: min });
        }
    }
    let (din, dout) = (j.dim_in, j.dim_out);
    let keep: Vec<(usize, f64)> = vals
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &l)| l > KRAUS_CUTOFF)
        .map(|(idx, &l)| (idx, (din as f64 * l).sqrt()))
        .collect();
    if keep.is_empty() {
        return Err(Error::NotCptp("Choi matrix has no positive eigenvalue".into()));
    }
    let stacked = Mat::from_fn(keep.len() * dout, din, |r, i| {
        let (col, w) = keep[r / dout];
        vecs[((r % dout) * din + i, col)] * w
    });
    QuantumChannel::from_stacked_with_choi(stacked, j.clone())
}

/// Purity of the Choi state by two independent routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyRoutes {
    /// `1 − tr(J²)`
    pub linear_entropy: f64,
    /// `tr(J²)` from the Choi matrix; `None` when the Choi matrix is too large
    /// to materialize and was not already cached.
    pub choi_purity: Option<f64>,
    /// `Σ_{m,n} |tr(K_m K_n†)|² / dim_in²`
    pub kraus_purity: f64,
}

impl EntropyRoutes {
    pub fn route_gap(&self) -> Option<f64> {
        self.choi_purity.map(|p| (p - self.kraus_purity).abs())
    }
}

/// Kraus double sum via the Gram matrix `G_nm = tr(K_n† K_m) = tr(K_m K_n†)^*`.
fn kraus_purity(ch: &QuantumChannel) -> f64 {
    let a = ch.kraus_columns();
    let gram = linalg::adj_mul(a.as_ref(), a.as_ref());
    linalg::frobenius_sq(gram.as_ref()) / (ch.dim_in() as f64).powi(2)
}

pub fn linear_entropy_routes(ch: &QuantumChannel) -> Result<EntropyRoutes> {
    let kp = kraus_purity(ch);
    let cp = match ch.cached_choi() {
        Some(j) => Some(j.purity()),
        None if ch.dim_in() * ch.dim_out() <= DENSE_CHOI_LIMIT => Some(choi(ch).purity()),
        None => None,
    };
    let routes = EntropyRoutes { linear_entropy: 1.0 - cp.unwrap_or(kp), choi_purity: cp, kraus_purity: kp };
    if let Some(gap) = routes.route_gap() {
        if gap > ROUTE_TOL {
            return Err(Error::Inconsistent(format!(
                "Choi purity {} and Kraus double sum {} differ by {gap:e}",
                cp.unwrap_or(f64::NAN),
                kp
            )));
        }
    }
    Ok(routes)
}

/// Channel linear entropy `S_L = 1 − tr(J²)`.
pub fn linear_entropy(ch: &QuantumChannel) -> Result<f64> {
    linear_entropy_routes(ch).map(|r| r.linear_entropy)
}
