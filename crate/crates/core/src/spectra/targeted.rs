//! Shift-invert block subspace iteration with Rayleigh-Ritz extraction.
//!
//! Returns the `k` eigenvalues closest to a complex shift. The Liouvillian is
//! exactly singular at zero, so the factorized shift is displaced by a tiny
//! offset; Ritz values are taken from `L` itself and are unaffected by it.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SpectrumResult, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::model::Liouvillian;

#[derive(Clone, Debug, PartialEq)]
pub struct TargetedOptions {
    pub max_iterations: usize,
    pub seed: u64,
    /// Relative residual bound, scaled by `||L||_F`.
    pub tol: f64,
    /// Block size; `None` picks `max(2k, k + 10)` capped at the dimension.
    pub block_size: Option<usize>,
}

impl Default for TargetedOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            seed: 0x5eed,
            tol: RESIDUAL_TOL,
            block_size: None,
        }
    }
}

/// The `k` eigenpairs of `l` nearest `shift`, with eigenvectors.
pub fn targeted_spectrum(l: &Liouvillian, shift: C64, k: usize) -> Result<SpectrumResult> {
    targeted_spectrum_with(l, shift, k, &TargetedOptions::default())
}

pub fn targeted_spectrum_with(
    l: &Liouvillian,
    shift: C64,
    k: usize,
    opts: &TargetedOptions,
) -> Result<SpectrumResult> {
    let n = l.dim();
    if k == 0 || k >= n {
        return Err(Error::Argument(format!(
            "targeted solver needs 0 < k < {n}, got k = {k}"
        )));
    }
    if !shift.re.is_finite() || !shift.im.is_finite() {
        return Err(Error::Argument(format!(
            "shift must be finite, got {shift}"
        )));
    }
    let p = opts
        .block_size
        .unwrap_or_else(|| (2 * k).max(k + 10))
        .clamp(k, n);
    let norm = l.matrix.norm_fro();
    let scale = (norm / (n as f64).sqrt()).max(1.0);
    let offset = C64::new(1e-7 * scale, 1e-7 * scale);
    let sigma = shift + offset;

    let mut triplets: Vec<Triplet<usize, usize, C64>> = l
        .matrix
        .iter()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    triplets.extend((0..n).map(|i| Triplet::new(i, i, -sigma)));
    let shifted = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Numeric(format!("sparse assembly failed: {e:?}")))?;
    let lu = shifted
        .sp_lu()
        .map_err(|e| Error::Numeric(format!("sparse LU failed: {e:?}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q = Mat::<C64>::from_fn(n, p, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
    .qr()
    .compute_thin_Q();

    let bound = opts.tol * norm;
    let mut worst = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        lu.solve_in_place(q.as_mut());
        q = q.qr().compute_thin_Q();

        let lq = l.matrix.mul_dense(q.as_ref());
        let h = q.adjoint() * &lq;
        let evd = h
            .eigen()
            .map_err(|e| Error::Numeric(format!("Ritz eigensolver failed: {e:?}")))?;
        let theta: Vec<C64> = (0..p).map(|j| evd.S()[j]).collect();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| {
            (theta[a] - shift)
                .norm()
                .total_cmp(&(theta[b] - shift).norm())
        });
        order.truncate(k);

        let u = evd.U();
        let mut pairs = Vec::with_capacity(k);
        worst = 0.0;
        for &j in &order {
            let uj = u.col(j);
            let v = &q * uj;
            let lv = &lq * uj;
            let vn = v.norm_l2();
            let res = (0..n)
                .map(|i| (lv[i] - theta[j] * v[i]).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / vn;
            worst = worst.max(res);
            pairs.push((
                theta[j],
                Some((0..n).map(|i| v[i] / vn).collect::<Vec<_>>()),
            ));
        }
        if worst <= bound {
            let mut result = SpectrumResult::from_pairs(pairs, norm, 1e-9 * norm.max(1.0));
            result.max_residual = Some(worst);
            return Ok(result);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        worst_residual: worst,
        bound,
    })
}
