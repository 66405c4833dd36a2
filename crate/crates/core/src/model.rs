//! Effective Hamiltonian and Lindblad superoperator of a driven qubit array.
//!
//! The master equation is `d rho / dt = L rho` with
//!
//! ```text
//! L rho = 2 gamma sum_{m,n} cos(phi (m - n)) sigma_m rho sigma_n^dag - i (H rho - rho H^dag)
//! H0    = -i gamma sum_{m,n} exp(i phi |m - n|) sigma_m^dag sigma_n
//! V     = Omega sum_n (exp(-i phi n) sigma_n^dag + h.c.)
//! ```
//!
//! in the frame rotating at the qubit frequency. Superoperators act on
//! column-stacked density matrices: `vec(A X B) = (B^T ⊗ A) vec(X)`.

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::{lowering_ops, ArrayParams};
use crate::sparse::SparseComplexMatrix;

/// Largest Liouville-space dimension assembled by default (`N <= 7`).
pub const DEFAULT_MAX_LIOUVILLE_DIM: usize = 1 << 14;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Vectorization convention of an assembled superoperator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vectorization {
    ColumnStacking,
}

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    /// Non-Hermitian waveguide-mediated coupling.
    pub h0: SparseComplexMatrix,
    /// Hermitian coherent drive.
    pub v: SparseComplexMatrix,
    pub total: SparseComplexMatrix,
}

pub fn build_hamiltonian(params: &ArrayParams) -> Result<Hamiltonian> {
    params.validate()?;
    let n = params.n_qubits;
    let dim = params.hilbert_dim();
    let sigma = lowering_ops(n);
    let raising: Vec<_> = sigma.iter().map(SparseComplexMatrix::adjoint).collect();

    let mut h0_terms = Vec::new();
    for m in 0..n {
        for k in 0..n {
            let coupling =
                -I * params.gamma_1d * C64::from_polar(1.0, params.phi * m.abs_diff(k) as f64);
            let hop = raising[m].matmul(&sigma[k])?;
            h0_terms.extend(hop.iter().map(|(r, c, v)| (r, c, coupling * v)));
        }
    }
    let h0 = SparseComplexMatrix::from_triplets(dim, dim, h0_terms)?;

    let mut v_terms = Vec::new();
    for site in 1..=n {
        let phase = params.drive_phase(site) * params.omega_r;
        v_terms.extend(raising[site - 1].iter().map(|(r, c, v)| (r, c, phase * v)));
        v_terms.extend(
            sigma[site - 1]
                .iter()
                .map(|(r, c, v)| (r, c, phase.conj() * v)),
        );
    }
    let v = SparseComplexMatrix::from_triplets(dim, dim, v_terms)?;
    let total = h0.add(&v)?;
    Ok(Hamiltonian { h0, v, total })
}

/// Assembled Lindblad superoperator on the `4^N` Liouville space.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub params: ArrayParams,
    pub matrix: SparseComplexMatrix,
    pub convention: Vectorization,
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hilbert_dim(&self) -> usize {
        self.params.hilbert_dim()
    }

    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.mul_vec(x)
    }

    /// Applies the assembled matrix to an operator, reshaping in and out.
    pub fn apply(&self, rho: MatRef<'_, C64>) -> Mat<C64> {
        unvectorize(&self.matrix.mul_vec(&vectorize(rho)), self.hilbert_dim())
    }

    pub fn write_binary<W: std::io::Write>(&self, w: W) -> Result<()> {
        self.matrix.write_binary(w)
    }
}

pub fn build_liouvillian(params: &ArrayParams) -> Result<Liouvillian> {
    build_liouvillian_with_budget(params, DEFAULT_MAX_LIOUVILLE_DIM)
}

pub fn build_liouvillian_with_budget(params: &ArrayParams, max_dim: usize) -> Result<Liouvillian> {
    params.validate()?;
    let dim = params.liouville_dim();
    if dim > max_dim {
        return Err(Error::Resource(format!(
            "Liouvillian of {} qubits has dimension {dim}, above the assembly budget {max_dim}; \
             use the matrix-free action instead",
            params.n_qubits
        )));
    }
    let n = params.n_qubits;
    let hdim = params.hilbert_dim();
    let ham = build_hamiltonian(params)?;
    let sigma = lowering_ops(n);

    let mut terms = Vec::new();
    // jump part: sigma_m rho sigma_n^dag -> conj(sigma_n) ⊗ sigma_m
    for m in 0..n {
        for k in 0..n {
            let weight = 2.0 * params.gamma_1d * (params.phi * (m as f64 - k as f64)).cos();
            let block = sigma[k].conj().kron(&sigma[m]);
            terms.extend(block.iter().map(|(r, c, v)| (r, c, v * weight)));
        }
    }
    let id = SparseComplexMatrix::identity(hdim);
    // -i H rho -> -i (1 ⊗ H)
    let left = id.kron(&ham.total);
    terms.extend(left.iter().map(|(r, c, v)| (r, c, -I * v)));
    // +i rho H^dag -> +i ((H^dag)^T ⊗ 1)
    let h_dag = ham.total.adjoint();
    let right = h_dag.transpose().kron(&id);
    terms.extend(right.iter().map(|(r, c, v)| (r, c, I * v)));

    let matrix = SparseComplexMatrix::from_triplets(dim, dim, terms)?;
    Ok(Liouvillian {
        params: *params,
        matrix,
        convention: Vectorization::ColumnStacking,
    })
}

/// Matrix-free action of the same superoperator, using the rank-two split
/// `cos(phi(m-n)) = cos(phi m) cos(phi n) + sin(phi m) sin(phi n)` of the
/// jump term.
#[derive(Clone, Debug)]
pub struct LiouvillianAction {
    gamma: f64,
    h: SparseComplexMatrix,
    h_dag: SparseComplexMatrix,
    jump_cos: SparseComplexMatrix,
    jump_sin: SparseComplexMatrix,
}

impl LiouvillianAction {
    pub fn new(params: &ArrayParams) -> Result<Self> {
        let ham = build_hamiltonian(params)?;
        let n = params.n_qubits;
        let dim = params.hilbert_dim();
        let sigma = lowering_ops(n);
        let combine = |f: &dyn Fn(f64) -> f64| {
            let terms = sigma.iter().enumerate().flat_map(|(m, s)| {
                let w = f(params.phi * m as f64);
                s.iter().map(move |(r, c, v)| (r, c, v * w))
            });
            SparseComplexMatrix::from_triplets(dim, dim, terms.collect::<Vec<_>>())
        };
        let jump_cos = combine(&f64::cos)?;
        let jump_sin = combine(&f64::sin)?;
        Ok(Self {
            gamma: params.gamma_1d,
            h_dag: ham.total.adjoint(),
            h: ham.total,
            jump_cos,
            jump_sin,
        })
    }

    pub fn apply(&self, rho: MatRef<'_, C64>) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(rho.nrows(), rho.ncols());
        for jump in [&self.jump_cos, &self.jump_sin] {
            let j_rho = jump.mul_dense(rho);
            let j_rho_jd = jump.adjoint().dense_mul(j_rho.as_ref());
            out += j_rho_jd * faer::Scale(C64::new(2.0 * self.gamma, 0.0));
        }
        let h_rho = self.h.mul_dense(rho);
        let rho_hd = self.h_dag.dense_mul(rho);
        out += (h_rho - rho_hd) * faer::Scale(-I);
        out
    }
}

/// Evaluates `L rho` without assembling the `4^N` matrix.
pub fn apply_liouvillian(params: &ArrayParams, rho: MatRef<'_, C64>) -> Result<Mat<C64>> {
    let dim = params.hilbert_dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::Argument(format!(
            "density matrix is {}x{}, expected {dim}x{dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    Ok(LiouvillianAction::new(params)?.apply(rho))
}

/// Column-stacking `vec`.
pub fn vectorize(m: MatRef<'_, C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vectorize`] for a square `dim x dim` operator.
pub fn unvectorize(v: &[C64], dim: usize) -> Mat<C64> {
    assert_eq!(v.len(), dim * dim);
    Mat::from_fn(dim, dim, |i, j| v[i + j * dim])
}
