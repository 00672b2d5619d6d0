//! Thin wrappers over `faer` dense kernels.
//!
//! Every kernel here runs with `Par::Seq`. Parallelism lives one level up
//! (over Monte Carlo samples), so results never depend on the thread count.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::diag::Diag;
use faer::{Accum, Mat, MatRef, Par};

pub use faer::c64;

use crate::error::{Error, Result};

pub type CMatrix = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    Mat::zeros(rows, cols)
}

pub fn identity(dim: usize) -> CMatrix {
    Mat::identity(dim, dim)
}

pub fn diagonal(values: &[f64]) -> CMatrix {
    let mut m = zeros(values.len(), values.len());
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = c64::new(v, 0.0);
    }
    m
}

/// `a · b`
pub fn mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    let mut out = zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, ONE, Par::Seq);
    out
}

/// `acc += alpha · a · b`
pub fn mul_add(acc: &mut CMatrix, a: MatRef<'_, c64>, b: MatRef<'_, c64>, alpha: c64) {
    matmul(acc.as_mut(), Accum::Add, a, b, alpha, Par::Seq);
}

/// `acc += a · b†`
pub fn mul_adj_add(acc: &mut CMatrix, a: MatRef<'_, c64>, b: MatRef<'_, c64>) {
    matmul(acc.as_mut(), Accum::Add, a, b.adjoint(), ONE, Par::Seq);
}

/// `a · b†`
pub fn mul_adj(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    let mut out = zeros(a.nrows(), b.nrows());
    matmul(out.as_mut(), Accum::Replace, a, b.adjoint(), ONE, Par::Seq);
    out
}

/// `a† · b`
pub fn adj_mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    let mut out = zeros(a.ncols(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a.adjoint(), b, ONE, Par::Seq);
    out
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMatrix {
    a.adjoint().to_owned()
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    let mut out = zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    faer::linalg::kron::kron(out.as_mut(), a, b);
    out
}

pub fn scale(a: MatRef<'_, c64>, s: f64) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn sub(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Squared Frobenius norm, `tr(a†a)`.
pub fn frobenius_sq(a: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc
}

/// Largest elementwise deviation `|a_ij - conj(a_ji)|`.
pub fn hermitian_deviation(a: MatRef<'_, c64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(a + a†) / 2`
pub fn hermitize(a: MatRef<'_, c64>) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

fn self_adjoint_evd(a: MatRef<'_, c64>, vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::mismatch(n, a.ncols()));
    }
    let mut s = Diag::<c64>::zeros(n);
    let mut u = vectors.then(|| zeros(n, n));
    let par = Par::Seq;
    let flag = if vectors { ComputeEigenvectors::Yes } else { ComputeEigenvectors::No };
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<c64>(n, flag, par, Default::default()));
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok((s.column_vector().iter().map(|z| z.re).collect(), u))
}

/// Seed of the fixed unitary used when the solver fails on the input as given.
const ROTATION_SEED: u64 = 0x005e_ed0f_ca11;

/// Runs the solver, retrying once on `W a W†` for a fixed Haar unitary `W`
/// if it does not converge on `a` itself. Some highly degenerate sparse
/// inputs trip the tridiagonal stage; a generic rotation does not change
/// the spectrum and maps eigenvectors back through `W†`.
fn robust_evd(a: MatRef<'_, c64>, vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    match self_adjoint_evd(a, vectors) {
        Err(Error::Eigen(_)) if a.nrows() > 1 => {
            let w = crate::qcore::haar_unitary(a.nrows(), ROTATION_SEED)?;
            let rotated = hermitize(mul_adj(mul(w.as_ref(), a).as_ref(), w.as_ref()).as_ref());
            let (vals, vecs) = self_adjoint_evd(rotated.as_ref(), vectors)?;
            Ok((vals, vecs.map(|v| adj_mul(w.as_ref(), v.as_ref()))))
        }
        other => other,
    }
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order. Only the lower
/// triangle is read.
pub fn eigvalsh(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    Ok(robust_evd(a, false)?.0)
}

/// Eigenvalues (nondecreasing) and the matching orthonormal eigenvectors as
/// columns.
pub fn eigh(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMatrix)> {
    let (vals, vecs) = robust_evd(a, true)?;
    Ok((vals, vecs.expect("eigenvectors requested")))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(a: MatRef<'_, c64>) -> Result<f64> {
    Ok(eigvalsh(a)?.iter().map(|l| l.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigvalsh_of_pauli_y() {
        let mut y = zeros(2, 2);
        y[(0, 1)] = c64::new(0.0, -1.0);
        y[(1, 0)] = c64::new(0.0, 1.0);
        let ev = eigvalsh(y.as_ref()).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14);
        assert!((ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_reconstructs() {
        let a = Mat::from_fn(3, 3, |i, j| {
            let re = (i + j) as f64;
            let im = i as f64 - j as f64;
            c64::new(re, im)
        });
        let (vals, vecs) = eigh(a.as_ref()).unwrap();
        let d = diagonal(&vals);
        let back = mul_adj(mul(vecs.as_ref(), d.as_ref()).as_ref(), vecs.as_ref());
        assert!(max_abs_diff(back.as_ref(), a.as_ref()) < 1e-12);
    }

    #[test]
    fn kron_shapes() {
        let a = identity(2);
        let b = identity(3);
        let k = kron(a.as_ref(), b.as_ref());
        assert_eq!(k.shape(), (6, 6));
        assert!(max_abs_diff(k.as_ref(), identity(6).as_ref()) == 0.0);
    }
}
