//! Liouvillian eigenvalues and eigenstates.
//!
//! Eigenvalues are reported as complex rates in units of `gamma_1d`, sorted
//! by `|Re λ|` and then by `Im λ`. The first entry with `|λ| < zero_tol` is the
//! stationary mode; everything with a small `|Re λ|` but a finite distance
//! from zero is a (driven) subradiant mode.

mod dense;
mod sweep;
mod targeted;

pub use dense::{full_spectrum, full_spectrum_with, HermitianBasis};
pub use sweep::{sweep, write_eigenvalues_csv, write_sweep_csv, Observable, RowStatus, SweepRow};
pub use targeted::{targeted_spectrum, targeted_spectrum_with, TargetedOptions};

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{build_liouvillian, unvectorize, Liouvillian};
use crate::operators::{correlation_matrix, ArrayParams};

/// Separates exact stationary/dark modes from slowly decaying ones.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
/// Decay-rate cut for driven subradiant modes (units of `gamma_1d`).
pub const DEFAULT_SUBRADIANT_THRESHOLD: f64 = 0.5;
/// Largest Liouville dimension handled by the dense solver (`N <= 6`).
pub const DEFAULT_DENSE_BUDGET: usize = 4096;
/// Relative residual bound `||L v - λ v|| <= tol ||L||_F` for returned pairs.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub dense_budget: usize,
    /// Absolute tolerance, multiplied by `gamma_1d` at use.
    pub zero_tol: f64,
    pub subradiant_threshold: f64,
    /// Eigenvalue count requested from the targeted solver above the dense budget.
    pub targeted_count: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            dense_budget: DEFAULT_DENSE_BUDGET,
            zero_tol: DEFAULT_ZERO_TOL,
            subradiant_threshold: DEFAULT_SUBRADIANT_THRESHOLD,
            targeted_count: 80,
        }
    }
}

/// Sorted Liouvillian eigenvalues with optional HS-normalized eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: Option<Vec<Vec<C64>>>,
    /// Index of the eigenvalue closest to zero.
    pub zero_index: usize,
    /// Frobenius norm of the Liouvillian, the scale for residual bounds.
    pub norm: f64,
    pub max_residual: Option<f64>,
}

impl SpectrumResult {
    pub(crate) fn from_pairs(
        mut pairs: Vec<(C64, Option<Vec<C64>>)>,
        norm: f64,
        cluster_tol: f64,
    ) -> Self {
        pairs.sort_by(|a, b| eigen_order(a.0, b.0));
        let eigenvalues: Vec<C64> = pairs.iter().map(|p| p.0).collect();
        let eigenvectors = if pairs.iter().all(|p| p.1.is_some()) && !pairs.is_empty() {
            let mut vecs: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.1.unwrap()).collect();
            orthonormalize_clusters(&eigenvalues, &mut vecs, cluster_tol);
            vecs.iter_mut().for_each(|v| fix_phase(v));
            Some(vecs)
        } else {
            None
        };
        let zero_index = eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map_or(0, |(i, _)| i);
        Self {
            eigenvalues,
            eigenvectors,
            zero_index,
            norm,
            max_residual: None,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of eigenvalues with `|λ| < tol`.
    pub fn zero_multiplicity(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|e| e.norm() < tol).count()
    }

    /// Number of eigenvalues with `|Re λ| < threshold`.
    pub fn count_below_rate(&self, threshold: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|e| e.re.abs() < threshold)
            .count()
    }

    /// Largest distance between an eigenvalue and its nearest conjugate partner.
    pub fn conjugation_error(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| {
                self.eigenvalues
                    .iter()
                    .map(|f| (f - e.conj()).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    pub fn density_matrix(&self, index: usize) -> Option<EigenDensityMatrix> {
        let vecs = self.eigenvectors.as_ref()?;
        let v = vecs.get(index)?;
        let dim = (v.len() as f64).sqrt().round() as usize;
        Some(EigenDensityMatrix {
            eigenvalue: self.eigenvalues[index],
            rho: unvectorize(v, dim),
        })
    }
}

/// Sorting key: `|Re λ|` ascending, then `Im λ`.
pub fn eigen_order(a: C64, b: C64) -> std::cmp::Ordering {
    a.re.abs()
        .total_cmp(&b.re.abs())
        .then(a.im.total_cmp(&b.im))
}

/// An eigenvector reshaped to a `2^N x 2^N` operator, HS norm 1, phase fixed
/// so that its largest-magnitude entry is real and positive.
#[derive(Clone, Debug)]
pub struct EigenDensityMatrix {
    pub eigenvalue: C64,
    pub rho: Mat<C64>,
}

impl EigenDensityMatrix {
    pub fn n_qubits(&self) -> usize {
        self.rho.nrows().trailing_zeros() as usize
    }

    /// `max |rho - c rho^dag|` with `c = Tr[rho^2] / ||rho||^2`, zero when
    /// `rho` is Hermitian up to a global phase.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.rho.nrows();
        let mut tr_sq = C64::new(0.0, 0.0);
        let mut hs = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                tr_sq += self.rho[(i, j)] * self.rho[(j, i)];
                hs += self.rho[(i, j)].norm_sqr();
            }
        }
        let c = tr_sq / hs;
        let mut err = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                err = err.max((self.rho[(i, j)] - c * self.rho[(j, i)].conj()).norm());
            }
        }
        err
    }
}

/// `N x N` matrix of `Tr[rho sigma_n^dag sigma_m]`.
pub fn eigenstate_correlations(rho: &EigenDensityMatrix) -> Mat<C64> {
    correlation_matrix(rho.rho.as_ref(), rho.n_qubits())
}

/// Solves the spectrum with the dense path inside the budget and the
/// targeted solver around zero above it.
pub fn spectrum_auto(
    l: &Liouvillian,
    want_vectors: bool,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    if l.dim() <= opts.dense_budget {
        full_spectrum_with(l, want_vectors, opts)
    } else {
        let k = opts.targeted_count.min(l.dim() - 1);
        targeted_spectrum(l, C64::new(0.0, 0.0), k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlowestRate {
    /// `-Re λ` of the second longest-living mode.
    pub rate: f64,
    pub zero_multiplicity: usize,
    pub eigenvalue: C64,
}

/// Decay rate of the longest-living mode after removing one stationary mode.
pub fn second_slowest_rate(l: &Liouvillian) -> Result<SlowestRate> {
    second_slowest_rate_with(l, &SpectrumOptions::default())
}

pub fn second_slowest_rate_with(l: &Liouvillian, opts: &SpectrumOptions) -> Result<SlowestRate> {
    let spec = spectrum_auto(l, false, opts)?;
    Ok(second_slowest_from(
        &spec,
        opts.zero_tol * l.params.gamma_1d,
    ))
}

pub fn second_slowest_from(spec: &SpectrumResult, zero_tol: f64) -> SlowestRate {
    let zeros = spec.zero_multiplicity(zero_tol);
    if zeros >= 2 {
        return SlowestRate {
            rate: 0.0,
            zero_multiplicity: zeros,
            eigenvalue: C64::new(0.0, 0.0),
        };
    }
    let (_, &eigenvalue) = spec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != spec.zero_index)
        .min_by(|a, b| eigen_order(*a.1, *b.1))
        .expect("spectrum has at least two eigenvalues");
    SlowestRate {
        rate: -eigenvalue.re,
        zero_multiplicity: zeros,
        eigenvalue,
    }
}

/// Number of eigenvalues with `|λ| < tol` (the dark-state count).
pub fn kernel_dimension(l: &Liouvillian, tol: f64) -> Result<usize> {
    let spec = spectrum_auto(l, false, &SpectrumOptions::default())?;
    Ok(spec.zero_multiplicity(tol))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubradiantCount {
    pub omega_r: f64,
    pub count: usize,
    /// Count at `2 * omega_r`.
    pub doubled_count: usize,
    pub zero_multiplicity: usize,
}

impl SubradiantCount {
    pub fn is_stable(&self) -> bool {
        self.count == self.doubled_count
    }

    /// The count, or [`Error::UnstableCount`] when the doubling check fails.
    pub fn checked(&self) -> Result<usize> {
        if self.is_stable() {
            Ok(self.count)
        } else {
            Err(Error::UnstableCount {
                omega_r: self.omega_r,
                count: self.count,
                doubled_count: self.doubled_count,
            })
        }
    }
}

/// Counts eigenvalues with `|Re λ| < rate_threshold * gamma_1d` (including the
/// stationary mode) at `omega_r` and again at `2 * omega_r`.
pub fn subradiant_count(params: &ArrayParams, rate_threshold: f64) -> Result<SubradiantCount> {
    let opts = SpectrumOptions {
        subradiant_threshold: rate_threshold,
        ..SpectrumOptions::default()
    };
    subradiant_count_with(params, &opts)
}

pub fn subradiant_count_with(
    params: &ArrayParams,
    opts: &SpectrumOptions,
) -> Result<SubradiantCount> {
    let first = spectrum_auto(&build_liouvillian(params)?, false, opts)?;
    let doubled_params = params.with_omega_r(2.0 * params.omega_r)?;
    let second = spectrum_auto(&build_liouvillian(&doubled_params)?, false, opts)?;
    Ok(subradiant_count_from(params, &first, &second, opts))
}

/// Builds the count from two precomputed spectra at `omega_r` and `2 * omega_r`.
pub fn subradiant_count_from(
    params: &ArrayParams,
    at_omega: &SpectrumResult,
    at_double: &SpectrumResult,
    opts: &SpectrumOptions,
) -> SubradiantCount {
    let threshold = opts.subradiant_threshold * params.gamma_1d;
    SubradiantCount {
        omega_r: params.omega_r,
        count: at_omega.count_below_rate(threshold),
        doubled_count: at_double.count_below_rate(threshold),
        zero_multiplicity: at_omega.zero_multiplicity(opts.zero_tol * params.gamma_1d),
    }
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Scales to unit norm and rotates so the largest-magnitude entry is real positive.
pub(crate) fn fix_phase(v: &mut [C64]) {
    let n = norm(v);
    if n == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap();
    let factor = pivot.conj() / (pivot.norm() * n);
    v.iter_mut().for_each(|x| *x *= factor);
}

/// Gram-Schmidt inside groups of numerically equal eigenvalues, in sorted order.
fn orthonormalize_clusters(eigenvalues: &[C64], vecs: &mut [Vec<C64>], tol: f64) {
    let n = eigenvalues.len();
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && (eigenvalues[j] - eigenvalues[i]).norm() < tol)
            .collect();
        for &j in &members {
            assigned[j] = true;
        }
        if members.len() < 2 {
            continue;
        }
        for (pos, &j) in members.iter().enumerate() {
            for &prev in &members[..pos] {
                let (head, tail) = vecs.split_at_mut(j);
                let p = &head[prev];
                let v = &mut tail[0];
                let c = dot(p, v);
                v.iter_mut().zip(p).for_each(|(x, y)| *x -= c * y);
            }
            let nv = norm(&vecs[j]);
            if nv > 0.0 {
                vecs[j].iter_mut().for_each(|x| *x /= nv);
            }
        }
    }
}
