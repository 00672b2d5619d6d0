//! CPTP maps held in Kraus form.
//!
//! The Kraus family `{K_m}` is stored as one stacked `(τ·dim_out) × dim_in`
//! matrix whose `m`-th row block is `K_m`. Choi and Stinespring forms are
//! derived from it; the Choi state is cached on first use.

mod builtin;
mod choi;
mod lipschitz;
mod serial;
mod stinespring;

use std::fmt;
use std::sync::OnceLock;

use faer::{Mat, MatRef};

pub use builtin::{
    depolarizing, depolarizing_range, identity, partial_trace_channel, replacement,
    reshuffle_then_trace, unitary_channel, DepolarizingRange,
};
pub use choi::{choi, choi_to_kraus, linear_entropy, linear_entropy_routes, ChoiState, EntropyRoutes};
pub use lipschitz::lipschitz_estimate;
pub use serial::ChannelFile;
pub use stinespring::{stinespring, StinespringIsometry};

use crate::error::{Error, Result};
use crate::qcore::linalg::{self, c64, CMatrix};
use crate::qcore::{DensityOperator, StateVector};

/// Tolerance on `Σ K†K = 1`.
pub const TP_TOL: f64 = 1e-10;
/// Eigenvalue cutoff when extracting Kraus operators from a Choi matrix.
pub const KRAUS_CUTOFF: f64 = 1e-12;
/// Upper bound on stored complex entries (2 GiB of `c64`).
pub const MAX_KRAUS_ENTRIES: usize = 1 << 27;

#[derive(Clone)]
pub struct QuantumChannel {
    dim_in: usize,
    dim_out: usize,
    rank: usize,
    stacked: CMatrix,
    choi: OnceLock<ChoiState>,
}

impl fmt::Debug for QuantumChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumChannel")
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("kraus_rank", &self.rank)
            .finish()
    }
}

impl QuantumChannel {
    /// Builds a channel from Kraus operators, checking shapes and trace
    /// preservation. Families longer than `dim_in·dim_out` are compressed.
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidDimension(format!("channel dims {dim_in}->{dim_out}")));
        }
        if kraus.is_empty() {
            return Err(Error::NotCptp("empty Kraus family".into()));
        }
        for k in &kraus {
            if k.nrows() != dim_out {
                return Err(Error::mismatch(dim_out, k.nrows()));
            }
            if k.ncols() != dim_in {
                return Err(Error::mismatch(dim_in, k.ncols()));
            }
        }
        check_budget(kraus.len(), dim_out, dim_in)?;
        let rank = kraus.len();
        let stacked = Mat::from_fn(rank * dim_out, dim_in, |r, c| kraus[r / dim_out][(r % dim_out, c)]);
        Self::from_stacked(dim_in, dim_out, stacked)
    }

    fn from_stacked(dim_in: usize, dim_out: usize, stacked: CMatrix) -> Result<Self> {
        let rank = stacked.nrows() / dim_out;
        let ch = Self { dim_in, dim_out, rank, stacked, choi: OnceLock::new() };
        let dev = ch.trace_preservation_error();
        if dev > TP_TOL {
            return Err(Error::NotCptp(format!("sum of K†K deviates from identity by {dev:e}")));
        }
        if ch.rank > dim_in * dim_out {
            return ch.compressed();
        }
        Ok(ch)
    }

    /// Like [`from_stacked`](Self::from_stacked) with the Choi state already known.
    pub(crate) fn from_stacked_with_choi(stacked: CMatrix, choi: ChoiState) -> Result<Self> {
        let ch = Self::from_stacked(choi.dim_in(), choi.dim_out(), stacked)?;
        let _ = ch.choi.set(choi);
        Ok(ch)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Number of Kraus operators τ.
    pub fn kraus_rank(&self) -> usize {
        self.rank
    }

    pub fn kraus(&self, m: usize) -> MatRef<'_, c64> {
        self.stacked.as_ref().subrows(m * self.dim_out, self.dim_out)
    }

    pub fn kraus_ops(&self) -> impl Iterator<Item = MatRef<'_, c64>> + '_ {
        (0..self.rank).map(move |m| self.kraus(m))
    }

    /// Kraus operators stacked vertically, `K_m` in rows `m·dim_out ..`.
    pub fn stacked(&self) -> MatRef<'_, c64> {
        self.stacked.as_ref()
    }

    /// `max |Σ K_m†K_m − 1|`
    pub fn trace_preservation_error(&self) -> f64 {
        let s = linalg::adj_mul(self.stacked(), self.stacked());
        linalg::max_abs_diff(s.as_ref(), linalg::identity(self.dim_in).as_ref())
    }

    /// Applies the map to an arbitrary `dim_in × dim_in` operator.
    pub fn apply_operator(&self, op: MatRef<'_, c64>) -> Result<CMatrix> {
        if op.nrows() != self.dim_in || op.ncols() != self.dim_in {
            return Err(Error::mismatch(self.dim_in, op.nrows()));
        }
        let mut out = linalg::zeros(self.dim_out, self.dim_out);
        for k in self.kraus_ops() {
            let t = linalg::mul(k, op);
            linalg::mul_adj_add(&mut out, t.as_ref(), k);
        }
        Ok(out)
    }

    /// `Σ_m K_m ρ K_m†`
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        self.apply_operator(rho.matrix()).map(DensityOperator::from_trusted)
    }

    /// `Λ(|ψ⟩⟨ψ|)` without forming the projector: stack `K_m ψ` as the columns
    /// of `X` and return `X X†`.
    pub fn apply_pure(&self, psi: &StateVector) -> Result<DensityOperator> {
        if psi.dim() != self.dim_in {
            return Err(Error::mismatch(self.dim_in, psi.dim()));
        }
        let y = linalg::mul(self.stacked(), psi.to_column().as_ref());
        let dout = self.dim_out;
        let x = Mat::from_fn(dout, self.rank, |s, m| y[(m * dout + s, 0)]);
        Ok(DensityOperator::from_trusted(linalg::mul_adj(x.as_ref(), x.as_ref())))
    }

    /// `Λ(|i⟩⟨j|)`
    pub fn apply_matrix_unit(&self, i: usize, j: usize) -> CMatrix {
        let dout = self.dim_out;
        let mut out = linalg::zeros(dout, dout);
        for k in self.kraus_ops() {
            for t in 0..dout {
                let b = k[(t, j)].conj();
                if b == linalg::ZERO {
                    continue;
                }
                for s in 0..dout {
                    out[(s, t)] += k[(s, i)] * b;
                }
            }
        }
        out
    }

    /// Largest entrywise difference between the two maps over all matrix
    /// units `|i⟩⟨j|`. Kraus families are not unique, so this is the equality
    /// test for channels.
    pub fn action_distance(&self, other: &QuantumChannel) -> Result<f64> {
        if self.dim_in != other.dim_in {
            return Err(Error::mismatch(self.dim_in, other.dim_in));
        }
        if self.dim_out != other.dim_out {
            return Err(Error::mismatch(self.dim_out, other.dim_out));
        }
        let mut worst = 0.0f64;
        for i in 0..self.dim_in {
            for j in 0..self.dim_in {
                let a = self.apply_matrix_unit(i, j);
                let b = other.apply_matrix_unit(i, j);
                worst = worst.max(linalg::max_abs_diff(a.as_ref(), b.as_ref()));
            }
        }
        Ok(worst)
    }

    /// Equivalent Kraus family of minimal length, read off the spectrum of
    /// the Choi matrix (size `dim_in·dim_out`, smaller than the `τ × τ` Gram
    /// matrix whenever compression is worthwhile).
    pub fn compressed(&self) -> Result<QuantumChannel> {
        choi_to_kraus(choi(self))
    }

    /// `(dim_out·dim_in) × τ` matrix whose `m`-th column is `vec(K_m)` with
    /// entry `(s, i)` at row `s·dim_in + i`.
    pub(crate) fn kraus_columns(&self) -> CMatrix {
        let (dout, din) = (self.dim_out, self.dim_in);
        Mat::from_fn(dout * din, self.rank, |r, m| self.stacked[(m * dout + r / din, r % din)])
    }

    pub(crate) fn cached_choi(&self) -> Option<&ChoiState> {
        self.choi.get()
    }

    pub(crate) fn choi_cell(&self) -> &OnceLock<ChoiState> {
        &self.choi
    }
}

fn check_budget(rank: usize, dout: usize, din: usize) -> Result<()> {
    let entries = rank.checked_mul(dout).and_then(|x| x.checked_mul(din));
    match entries {
        Some(n) if n <= MAX_KRAUS_ENTRIES => Ok(()),
        _ => Err(Error::TooLarge(format!(
            "{rank} Kraus operators of shape {dout}x{din} exceed the dense budget"
        ))),
    }
}

/// `outer ∘ inner`, with Kraus family `{K_o K_i}`.
pub fn compose(outer: &QuantumChannel, inner: &QuantumChannel) -> Result<QuantumChannel> {
    if inner.dim_out != outer.dim_in {
        return Err(Error::mismatch(outer.dim_in, inner.dim_out));
    }
    check_budget(outer.rank * inner.rank, outer.dim_out, inner.dim_in)?;
    let dout = outer.dim_out;
    let mut stacked = linalg::zeros(outer.rank * inner.rank * dout, inner.dim_in);
    for (a, ko) in outer.kraus_ops().enumerate() {
        for (b, ki) in inner.kraus_ops().enumerate() {
            let row0 = (a * inner.rank + b) * dout;
            stacked.as_mut().subrows_mut(row0, dout).copy_from(linalg::mul(ko, ki));
        }
    }
    QuantumChannel::from_stacked(inner.dim_in, dout, stacked)
}

/// `a ⊗ b`, with Kraus family `{K_a ⊗ K_b}` (index of `a` major).
pub fn tensor(a: &QuantumChannel, b: &QuantumChannel) -> Result<QuantumChannel> {
    let din = a.dim_in * b.dim_in;
    let dout = a.dim_out * b.dim_out;
    check_budget(a.rank * b.rank, dout, din)?;
    let mut stacked = linalg::zeros(a.rank * b.rank * dout, din);
    for (i, ka) in a.kraus_ops().enumerate() {
        for (j, kb) in b.kraus_ops().enumerate() {
            let row0 = (i * b.rank + j) * dout;
            faer::linalg::kron::kron(stacked.as_mut().subrows_mut(row0, dout), ka, kb);
        }
    }
    QuantumChannel::from_stacked(din, dout, stacked)
}
