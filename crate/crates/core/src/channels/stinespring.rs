use faer::{Mat, MatRef};

use super::QuantumChannel;
use crate::error::{Error, Result};
use crate::qcore::linalg::{self, c64, CMatrix};
use crate::qcore::{partial_trace_matrix, DensityOperator, Keep};

/// Dilation `V : H_in → H_out ⊗ H_env` with `Λ(ρ) = tr_env(V ρ V†)`.
///
/// Row `s·dim_env + m` of `V` is row `s` of `K_m`.
#[derive(Clone, Debug)]
pub struct StinespringIsometry {
    dim_out: usize,
    dim_env: usize,
    matrix: CMatrix,
}

impl StinespringIsometry {
    pub fn dim_in(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    /// `max |V†V − 1|`
    pub fn isometry_error(&self) -> f64 {
        let g = linalg::adj_mul(self.matrix(), self.matrix());
        linalg::max_abs_diff(g.as_ref(), linalg::identity(self.dim_in()).as_ref())
    }

    /// `tr_env(V X V†)` for an arbitrary operator `X`.
    pub fn apply_operator(&self, x: MatRef<'_, c64>) -> Result<CMatrix> {
        if x.nrows() != self.dim_in() || x.ncols() != self.dim_in() {
            return Err(Error::mismatch(self.dim_in(), x.nrows()));
        }
        let dilated = linalg::mul_adj(linalg::mul(self.matrix(), x).as_ref(), self.matrix());
        partial_trace_matrix(dilated.as_ref(), Keep::A, (self.dim_out, self.dim_env))
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_operator(rho.matrix())?;
        DensityOperator::new(linalg::hermitize(out.as_ref()))
    }
}

pub fn stinespring(ch: &QuantumChannel) -> StinespringIsometry {
    let (dout, tau) = (ch.dim_out(), ch.kraus_rank());
    let stacked = ch.stacked();
    let matrix = Mat::from_fn(dout * tau, ch.dim_in(), |r, c| stacked[((r % tau) * dout + r / tau, c)]);
    StinespringIsometry { dim_out: dout, dim_env: tau, matrix }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, identity};

    fn max_unit_error(ch: &QuantumChannel) -> f64 {
        let v = stinespring(ch);
        let d = ch.dim_in();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut unit = linalg::zeros(d, d);
                unit[(i, j)] = linalg::ONE;
                let a = v.apply_operator(unit.as_ref()).unwrap();
                let b = ch.apply_matrix_unit(i, j);
                worst = worst.max(linalg::max_abs_diff(a.as_ref(), b.as_ref()));
            }
        }
        worst
    }

    #[test]
    fn identity_dilation_is_trivial() {
        let v = stinespring(&identity(3).unwrap());
        assert_eq!(v.dim_env(), 1);
        assert!(linalg::max_abs_diff(v.matrix(), linalg::identity(3).as_ref()) < 1e-15);
    }

    #[test]
    fn depolarizing_dilation_reconstructs() {
        let ch = depolarizing(3, 0.6).unwrap();
        let v = stinespring(&ch);
        assert_eq!(v.dim_env(), ch.kraus_rank());
        assert!(v.isometry_error() < 1e-12);
        assert!(max_unit_error(&ch) < 1e-12);
    }
}
