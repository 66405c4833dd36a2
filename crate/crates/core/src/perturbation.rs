//! Strong-drive degenerate perturbation theory.
//!
//! For `ΩR >> γ1D` the drive superoperator `L_V ρ = -i[V, ρ]` dominates. Its
//! eigenoperators are `|a><b|` built from eigenvectors of `V`, with eigenvalues
//! `-i(v_a - v_b)`. The undriven Liouvillian `L0` is projected onto the
//! `L_V = 0` subspace order by order in `γ1D/ΩR`:
//!
//! * order 1: `P0 L0 P0`
//! * order 2: `P0 L0 G L0 P0`
//! * order 3: `P0 [L0 G L0 G L0 - (L0 G² L0 P0 L0 + L0 P0 L0 G² L0)/2] P0`
//!
//! with `G = Σ_μ |μ>><<μ| / (-λ_μ)` over the nonzero modes. Since `G ∝ 1/ΩR`,
//! the effective operator at any other drive follows from one evaluation by
//! rescaling orders 2 and 3.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, build_liouvillian};
use crate::operators::ArrayParams;
use crate::sparse::SparseComplexMatrix;
use crate::spectra::second_slowest_rate;

/// Value of ξ quoted for the three-qubit anti-Bragg array.
pub const XI_REFERENCE: f64 = 59.0 / 9.0;
/// Largest array handled; the transformed Liouvillian is dense `4^N x 4^N`.
pub const MAX_PT_QUBITS: usize = 5;
/// Drive values of the full-numerics power-law fit, in units of `gamma_1d`.
pub const FIT_OMEGAS: [f64; 7] = [10.0, 14.7, 21.5, 31.6, 46.4, 68.1, 100.0];
const ZERO_LEVEL_TOL: f64 = 1e-8;
/// `V` levels are spaced by `2 ΩR`; anything between this and the zero
/// tolerance signals an unreliable split of the zero subspace.
const LEAK_TOL: f64 = 1e-2;

/// Eigen-decomposition of the drive `V` and the superoperator `L_V`.
#[derive(Clone, Debug)]
pub struct DriveEigenbasis {
    pub params: ArrayParams,
    /// Eigenvalues of `V`, ascending.
    pub v_eigenvalues: Vec<f64>,
    /// `v / (2 ΩR)`, the collective `Jz` of the rotated frame.
    pub jz_labels: Vec<f64>,
    /// Columns are the eigenvectors of `V`.
    pub vectors: Mat<C64>,
}

impl DriveEigenbasis {
    pub fn hilbert_dim(&self) -> usize {
        self.v_eigenvalues.len()
    }

    /// Eigenvalue of `L_V` on `|a><b|`, stored at pair index `a + b * 2^N`.
    pub fn superop_eigenvalue(&self, a: usize, b: usize) -> C64 {
        C64::new(0.0, -(self.v_eigenvalues[a] - self.v_eigenvalues[b]))
    }

    /// All `4^N` superoperator eigenvalues in pair-index order.
    pub fn superop_eigenvalues(&self) -> Vec<C64> {
        let d = self.hilbert_dim();
        (0..d * d)
            .map(|k| self.superop_eigenvalue(k % d, k / d))
            .collect()
    }

    /// Column-stacked `|a><b|`.
    pub fn element(&self, a: usize, b: usize) -> Vec<C64> {
        let d = self.hilbert_dim();
        let mut out = Vec::with_capacity(d * d);
        for c in 0..d {
            let right = self.vectors[(c, b)].conj();
            out.extend((0..d).map(|r| self.vectors[(r, a)] * right));
        }
        out
    }

    /// Dense unitary whose columns are the `|a><b|` in pair-index order.
    pub fn transform(&self) -> Mat<C64> {
        let d = self.hilbert_dim();
        let u = &self.vectors;
        Mat::from_fn(d * d, d * d, |row, col| {
            u[(row % d, col % d)] * u[(row / d, col / d)].conj()
        })
    }

    /// Pair indices `a + b * 2^N` with `v_a = v_b`.
    pub fn zero_pairs(&self) -> Vec<usize> {
        let tol = ZERO_LEVEL_TOL * self.params.omega_r;
        let d = self.hilbert_dim();
        (0..d * d)
            .filter(|k| (self.v_eigenvalues[k % d] - self.v_eigenvalues[k / d]).abs() < tol)
            .collect()
    }

    /// `L_V` as a column-stacked sparse superoperator.
    pub fn superoperator(&self) -> Result<SparseComplexMatrix> {
        let driven = build_liouvillian(&self.params)?;
        let bare = build_liouvillian(&self.params.with_omega_r(0.0)?)?;
        driven.matrix.sub(&bare.matrix)
    }
}

pub fn drive_eigenbasis(params: &ArrayParams) -> Result<DriveEigenbasis> {
    params.validate()?;
    if params.omega_r <= 0.0 {
        return Err(Error::Argument(format!(
            "perturbation theory needs omega_r > 0, got {}",
            params.omega_r
        )));
    }
    if params.n_qubits > MAX_PT_QUBITS {
        return Err(Error::Resource(format!(
            "perturbation theory is limited to {MAX_PT_QUBITS} qubits, got {}",
            params.n_qubits
        )));
    }
    let v = build_hamiltonian(params)?.v.to_dense();
    let evd = v
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("drive diagonalization failed: {e:?}")))?;
    let d = v.nrows();
    let v_eigenvalues: Vec<f64> = (0..d).map(|i| evd.S()[i].re).collect();
    let jz_labels = v_eigenvalues
        .iter()
        .map(|x| x / (2.0 * params.omega_r))
        .collect();
    Ok(DriveEigenbasis {
        params: *params,
        v_eigenvalues,
        jz_labels,
        vectors: evd.U().to_owned(),
    })
}

/// Effective Liouvillian on the `L_V = 0` subspace, one matrix per order.
#[derive(Clone, Debug)]
pub struct EffectivePT {
    pub params: ArrayParams,
    /// Pair indices `a + b * 2^N` of the zero subspace.
    pub zero_pairs: Vec<usize>,
    /// Column-stacked, HS-orthonormal zero-subspace basis.
    pub p0_basis: Vec<Vec<C64>>,
    /// `-1/λ_μ` over the nonzero modes.
    pub g_diagonal: Vec<C64>,
    pub order1: Mat<C64>,
    pub order2: Mat<C64>,
    pub order3: Mat<C64>,
}

/// Zero subspace of `L_V` without the effective operators.
pub fn zero_projector(basis: &DriveEigenbasis) -> Vec<Vec<C64>> {
    let d = basis.hilbert_dim();
    basis
        .zero_pairs()
        .iter()
        .map(|&k| basis.element(k % d, k / d))
        .collect()
}

fn submatrix(m: MatRef<'_, C64>, rows: &[usize], cols: &[usize]) -> Mat<C64> {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn scale_rows(m: MatRef<'_, C64>, g: &[C64]) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| g[i] * m[(i, j)])
}

pub fn effective_liouvillian(params: &ArrayParams) -> Result<EffectivePT> {
    let basis = drive_eigenbasis(params)?;
    effective_from_basis(&basis)
}

pub fn effective_from_basis(basis: &DriveEigenbasis) -> Result<EffectivePT> {
    let params = basis.params;
    let d = basis.hilbert_dim();
    let lambdas = basis.superop_eigenvalues();
    let zero_pairs = basis.zero_pairs();
    let nonzero: Vec<usize> = (0..d * d)
        .filter(|k| zero_pairs.binary_search(k).is_err())
        .collect();
    if let Some(&k) = nonzero
        .iter()
        .find(|&&k| lambdas[k].norm() < LEAK_TOL * params.omega_r)
    {
        return Err(Error::Numeric(format!(
            "drive eigenvalue {} too close to zero for the resolvent",
            lambdas[k]
        )));
    }
    let g: Vec<C64> = nonzero.iter().map(|&k| -1.0 / lambdas[k]).collect();
    let g2: Vec<C64> = g.iter().map(|x| x * x).collect();

    let w = basis.transform();
    let l0 = build_liouvillian(&params.with_omega_r(0.0)?)?;
    let lw = l0.matrix.mul_dense(w.as_ref());
    let rotated = w.adjoint() * &lw;

    let zz = submatrix(rotated.as_ref(), &zero_pairs, &zero_pairs);
    let zm = submatrix(rotated.as_ref(), &zero_pairs, &nonzero);
    let mz = submatrix(rotated.as_ref(), &nonzero, &zero_pairs);
    let mm = submatrix(rotated.as_ref(), &nonzero, &nonzero);

    let g_mz = scale_rows(mz.as_ref(), &g);
    let order2 = &zm * &g_mz;
    let chain = &zm * scale_rows((&mm * &g_mz).as_ref(), &g);
    let squared = &zm * scale_rows(mz.as_ref(), &g2);
    let order3 = chain - (&squared * &zz + &zz * &squared) * faer::Scale(C64::new(0.5, 0.0));

    let p0_basis = zero_pairs
        .iter()
        .map(|&k| w.col(k).iter().copied().collect())
        .collect();
    Ok(EffectivePT {
        params,
        zero_pairs,
        p0_basis,
        g_diagonal: g,
        order1: zz,
        order2,
        order3,
    })
}

impl EffectivePT {
    pub fn zero_dim(&self) -> usize {
        self.zero_pairs.len()
    }

    /// `order1 + order2 + order3` evaluated at drive `omega_r`.
    pub fn total_at(&self, omega_r: f64) -> Mat<C64> {
        let s = self.params.omega_r / omega_r;
        &self.order1
            + &self.order2 * faer::Scale(C64::new(s, 0.0))
            + &self.order3 * faer::Scale(C64::new(s * s, 0.0))
    }

    /// Coordinates of a column-stacked operator on `p0_basis`.
    pub fn coordinates(&self, v: &[C64]) -> Vec<C64> {
        self.p0_basis
            .iter()
            .map(|b| b.iter().zip(v).map(|(x, y)| x.conj() * y).sum())
            .collect()
    }

    /// Null space of the first-order operator (right singular vectors).
    pub fn order1_nullspace(&self) -> Result<Mat<C64>> {
        let tol = ZERO_LEVEL_TOL * self.params.gamma_1d;
        let svd = self
            .order1
            .svd()
            .map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))?;
        let s = svd.S();
        let cols: Vec<usize> = (0..self.zero_dim()).filter(|&i| s[i].re < tol).collect();
        let v = svd.V();
        Ok(Mat::from_fn(self.zero_dim(), cols.len(), |i, j| {
            v[(i, cols[j])]
        }))
    }
}

/// Null-space dimension of the first-order operator.
pub fn pt_dark_count(params: &ArrayParams) -> Result<usize> {
    Ok(effective_liouvillian(params)?.order1_nullspace()?.ncols())
}

/// ξ read off the perturbative spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct XiPerturbative {
    /// Slowest nonzero eigenvalue of the full effective operator at `omega_r`.
    pub eigenvalue: C64,
    /// `-Re λ ΩR² / γ³` at `omega_r`.
    pub xi_pt: f64,
    /// Large-drive limit of `xi_pt` by Richardson extrapolation.
    pub xi_pt_limit: f64,
    /// Same quantity from the order-3 operator compressed onto the order-1 null space.
    pub xi_doublet_order3: f64,
    /// Lowest order whose compressed operator has a nonzero eigenvalue on the null space.
    pub first_lifting_order: Option<usize>,
}

fn slowest_nonzero(m: &Mat<C64>) -> Result<C64> {
    let mut ev = m
        .eigenvalues()
        .map_err(|e| Error::Numeric(format!("effective eigensolver failed: {e:?}")))?;
    ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    ev.get(1)
        .copied()
        .ok_or_else(|| Error::Argument("effective operator has fewer than two modes".into()))
}

pub fn xi_perturbative(pt: &EffectivePT) -> Result<XiPerturbative> {
    let gamma = pt.params.gamma_1d;
    let xi_at = |omega: f64| -> Result<(C64, f64)> {
        let e = slowest_nonzero(&pt.total_at(omega))?;
        Ok((e, -e.re * omega * omega / gamma.powi(3)))
    };
    let (eigenvalue, xi_pt) = xi_at(pt.params.omega_r)?;
    let big = 1e3 * gamma;
    let xi_pt_limit = 2.0 * xi_at(2.0 * big)?.1 - xi_at(big)?.1;

    let null = pt.order1_nullspace()?;
    let compress = |m: &Mat<C64>| null.adjoint() * m * &null;
    let mut first_lifting_order = None;
    let mut xi_doublet_order3 = f64::NAN;
    for (order, m) in [(1usize, &pt.order1), (2, &pt.order2), (3, &pt.order3)] {
        let block = compress(m);
        let ev = block
            .eigenvalues()
            .map_err(|e| Error::Numeric(format!("compressed eigensolver failed: {e:?}")))?;
        let scale = gamma * (gamma / pt.params.omega_r).powi(order as i32 - 1);
        let lifted: Vec<C64> = ev
            .into_iter()
            .filter(|e| e.re.abs() > 1e-6 * scale)
            .collect();
        if !lifted.is_empty() && first_lifting_order.is_none() {
            first_lifting_order = Some(order);
        }
        if order == 3 {
            if let Some(e) = lifted
                .iter()
                .min_by(|a, b| a.re.abs().total_cmp(&b.re.abs()))
            {
                xi_doublet_order3 = -e.re * pt.params.omega_r.powi(2) / gamma.powi(3);
            }
        }
    }
    Ok(XiPerturbative {
        eigenvalue,
        xi_pt,
        xi_pt_limit,
        xi_doublet_order3,
        first_lifting_order,
    })
}

/// Power law `rate = A ΩR^slope` fitted to the full second-slowest rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub omegas: Vec<f64>,
    pub rates: Vec<f64>,
    pub slope: f64,
    /// `rate ΩR² / γ³` at the fit's reference drive.
    pub xi_local: f64,
}

/// Fits the exact slowest nonzero rate over `omegas` and evaluates the local
/// `ξ` at `reference_omega`.
pub fn fit_full_numerics(
    params: &ArrayParams,
    omegas: &[f64],
    reference_omega: f64,
) -> Result<PowerLawFit> {
    if omegas.len() < 2 {
        return Err(Error::Argument(
            "power-law fit needs at least two drive values".into(),
        ));
    }
    let rate = |omega: f64| -> Result<f64> {
        let l = build_liouvillian(&params.with_omega_r(omega)?)?;
        Ok(second_slowest_rate(&l)?.rate)
    };
    let rates = omegas
        .iter()
        .map(|&w| rate(w))
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
    let ys: Vec<f64> = rates.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let gamma = params.gamma_1d;
    let xi_local = rate(reference_omega)? * reference_omega.powi(2) / gamma.powi(3);
    Ok(PowerLawFit {
        omegas: omegas.to_vec(),
        rates,
        slope,
        xi_local,
    })
}

/// Machine-readable summary of a perturbation-theory run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtReport {
    pub n_qubits: usize,
    pub omega_r: f64,
    pub zero_dim: usize,
    pub order1_nullspace_dim: usize,
    pub xi_pt: f64,
    pub xi_fit: Option<f64>,
    pub slope_fit: Option<f64>,
    pub xi_pt_limit: f64,
    pub xi_doublet_order3: Option<f64>,
    pub first_lifting_order: Option<usize>,
    pub xi_reference: f64,
    /// `|xi_pt - xi_reference| / xi_reference`.
    pub reference_deviation: f64,
}

/// Builds the report; `fit` adds the full-numerics cross-check, which fails
/// with [`Error::FitMismatch`] when PT and numerics differ by more than 10%.
pub fn pt_report(params: &ArrayParams, fit: bool) -> Result<PtReport> {
    let pt = effective_liouvillian(params)?;
    let nullity = pt.order1_nullspace()?.ncols();
    let xi = xi_perturbative(&pt)?;
    let mut report = PtReport {
        n_qubits: params.n_qubits,
        omega_r: params.omega_r,
        zero_dim: pt.zero_dim(),
        order1_nullspace_dim: nullity,
        xi_pt: xi.xi_pt,
        xi_fit: None,
        slope_fit: None,
        xi_pt_limit: xi.xi_pt_limit,
        xi_doublet_order3: xi
            .xi_doublet_order3
            .is_finite()
            .then_some(xi.xi_doublet_order3),
        first_lifting_order: xi.first_lifting_order,
        xi_reference: XI_REFERENCE,
        reference_deviation: (xi.xi_pt - XI_REFERENCE).abs() / XI_REFERENCE,
    };
    if fit {
        let omegas: Vec<f64> = FIT_OMEGAS.iter().map(|w| w * params.gamma_1d).collect();
        let f = fit_full_numerics(params, &omegas, params.omega_r)?;
        report.xi_fit = Some(f.xi_local);
        report.slope_fit = Some(f.slope);
        if (xi.xi_pt - f.xi_local).abs() > 0.1 * f.xi_local.abs() {
            return Err(Error::FitMismatch {
                xi_pt: xi.xi_pt,
                xi_fit: f.xi_local,
            });
        }
    }
    Ok(report)
}

/// ξ for the given array, cross-checked against the full numerics.
pub fn xi_coefficient(params: &ArrayParams) -> Result<PtReport> {
    pt_report(params, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn counts(values: &[f64], scale: f64) -> std::collections::BTreeMap<i64, usize> {
        let mut m = std::collections::BTreeMap::new();
        for v in values {
            *m.entry((v / scale).round() as i64).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn three_qubit_drive_levels() {
        let b = drive_eigenbasis(&ArrayParams::new(3, FRAC_PI_2, 2.0).unwrap()).unwrap();
        let c = counts(&b.v_eigenvalues, 2.0);
        assert_eq!(c, [(-3, 1), (-1, 3), (1, 3), (3, 1)].into_iter().collect());
        for (v, jz) in b.v_eigenvalues.iter().zip(&b.jz_labels) {
            assert!((2.0 * 2.0 * jz - v).abs() < 1e-12);
            assert!(((2.0 * jz).round() - 2.0 * jz).abs() < 1e-12);
        }
    }

    #[test]
    fn three_qubit_superoperator_multiplicities() {
        let omega = 1.7;
        let b = drive_eigenbasis(&ArrayParams::new(3, FRAC_PI_2, omega).unwrap()).unwrap();
        let ev = b.superop_eigenvalues();
        assert!(ev.iter().all(|e| e.re.abs() < 1e-12 * omega));
        let im: Vec<f64> = ev.iter().map(|e| e.im).collect();
        let c = counts(&im, omega);
        let expected = [(-6, 1), (-4, 6), (-2, 15), (0, 20), (2, 15), (4, 6), (6, 1)];
        assert_eq!(c, expected.into_iter().collect());
        assert_eq!(b.zero_pairs().len(), 20);
    }

    #[test]
    fn zero_subspace_dimensions() {
        for (n, want) in [(1, 2), (2, 6), (3, 20)] {
            let b = drive_eigenbasis(&ArrayParams::new(n, FRAC_PI_2, 1.0).unwrap()).unwrap();
            assert_eq!(zero_projector(&b).len(), want, "N={n}");
        }
    }

    #[test]
    fn drive_eigenvectors_are_rotated_product_states() {
        let p = ArrayParams::new(3, 0.9, 1.3).unwrap();
        let b = drive_eigenbasis(&p).unwrap();
        let v = build_hamiltonian(&p).unwrap().v;
        // (|0> + s e^{-iφ x_n}|1>)/√2 on every site has V eigenvalue Ω Σ s_n
        for signs in 0..8usize {
            let mut state = vec![C64::new(1.0, 0.0)];
            let mut expected = 0.0;
            for site in 1..=3 {
                let s = if signs >> (site - 1) & 1 == 1 {
                    -1.0
                } else {
                    1.0
                };
                expected += s * p.omega_r;
                let local = [
                    C64::new(SQRT_HALF, 0.0),
                    p.drive_phase(site) * s * SQRT_HALF,
                ];
                state = state
                    .iter()
                    .flat_map(|a| local.iter().map(move |b| a * b))
                    .collect();
            }
            let vs = v.mul_vec(&state);
            for (x, y) in vs.iter().zip(&state) {
                assert!((x - expected * y).norm() < 1e-12);
            }
            assert!(b.v_eigenvalues.iter().any(|e| (e - expected).abs() < 1e-12));
        }
    }
    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn basis_elements_are_superoperator_eigenvectors() {
        let p = ArrayParams::new(2, 1.1, 0.8).unwrap();
        let b = drive_eigenbasis(&p).unwrap();
        let lv = b.superoperator().unwrap();
        let w = b.transform();
        let prod = w.adjoint() * &w;
        for i in 0..16 {
            for j in 0..16 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).norm() < 1e-10);
            }
        }
        for a in 0..4 {
            for c in 0..4 {
                let e = b.element(a, c);
                let lam = b.superop_eigenvalue(a, c);
                let le = lv.mul_vec(&e);
                let err: f64 = le
                    .iter()
                    .zip(&e)
                    .map(|(x, y)| (x - lam * y).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-12);
            }
        }
    }

    #[test]
    fn drive_superoperator_is_anti_hermitian() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (n, phi, omega) in [(2, FRAC_PI_2, 3.0), (3, 0.4, 1.0)] {
            let b = drive_eigenbasis(&ArrayParams::new(n, phi, omega).unwrap()).unwrap();
            let lv = b.superoperator().unwrap();
            let dim = lv.nrows();
            for _ in 0..50 {
                let mut rand_vec = || -> Vec<C64> {
                    (0..dim)
                        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect()
                };
                let (x, y) = (rand_vec(), rand_vec());
                let ip = |u: &[C64], v: &[C64]| -> C64 {
                    u.iter().zip(v).map(|(p, q)| p.conj() * q).sum()
                };
                let norm = |u: &[C64]| ip(u, u).re.sqrt();
                let s = ip(&x, &lv.mul_vec(&y)) + ip(&lv.mul_vec(&x), &y);
                assert!(s.norm() < 1e-10 * omega * norm(&x) * norm(&y));
            }
        }
    }

    #[test]
    fn omega_must_be_positive() {
        let p = ArrayParams::new(2, FRAC_PI_2, 0.0).unwrap();
        assert!(matches!(drive_eigenbasis(&p), Err(Error::Argument(_))));
        let big = ArrayParams::new(6, FRAC_PI_2, 1.0).unwrap();
        assert!(matches!(drive_eigenbasis(&big), Err(Error::Resource(_))));
    }

    #[test]
    fn bragg_dark_projector_is_null_at_every_order() {
        let p = ArrayParams::new(2, PI, 4.0).unwrap();
        let pt = effective_liouvillian(&p).unwrap();
        // |D> = (|01> + |10>)/√2 for the λ/2 pair
        let mut proj = vec![C64::new(0.0, 0.0); 16];
        for r in [1usize, 2] {
            for c in [1usize, 2] {
                proj[r + 4 * c] = C64::new(0.5, 0.0);
            }
        }
        let coords = pt.coordinates(&proj);
        let in_span: f64 = coords.iter().map(|c| c.norm_sqr()).sum();
        assert!((in_span - 1.0).abs() < 1e-10);
        for m in [&pt.order1, &pt.order2, &pt.order3] {
            let out: f64 = (0..pt.zero_dim())
                .map(|i| {
                    (0..pt.zero_dim())
                        .map(|j| m[(i, j)] * coords[j])
                        .sum::<C64>()
                        .norm()
                })
                .fold(0.0, f64::max);
            assert!(out < 1e-10);
        }
    }

    #[test]
    fn identity_keeps_a_zero_eigenvalue_at_all_orders() {
        let pt = effective_liouvillian(&ArrayParams::new(3, FRAC_PI_2, 50.0).unwrap()).unwrap();
        let mut id = vec![C64::new(0.0, 0.0); 64];
        for i in 0..8 {
            id[i + 8 * i] = C64::new(1.0 / 8f64.sqrt(), 0.0);
        }
        let coords = pt.coordinates(&id);
        let apply = |m: &Mat<C64>, left: bool| -> f64 {
            (0..20)
                .map(|i| {
                    (0..20)
                        .map(|j| {
                            if left {
                                coords[j].conj() * m[(j, i)]
                            } else {
                                m[(i, j)] * coords[j]
                            }
                        })
                        .sum::<C64>()
                        .norm()
                })
                .fold(0.0, f64::max)
        };
        // the identity is the infinite-drive steady state and the trace functional throughout
        assert!(apply(&pt.order1, false) < 1e-12);
        for m in [&pt.order1, &pt.order2, &pt.order3] {
            assert!(apply(m, true) < 1e-12);
        }
        for omega in [10.0, 50.0, 400.0] {
            let ev = pt.total_at(omega).eigenvalues().unwrap();
            assert!(ev.iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min) < 1e-12);
        }
    }

    #[test]
    fn spectrum_is_invariant_under_degenerate_remixing() {
        let p = ArrayParams::new(3, FRAC_PI_2, 20.0).unwrap();
        let base = drive_eigenbasis(&p).unwrap();
        let mut mixed = base.clone();
        // rotate inside the first triplet of V (levels 1..=3)
        let (c, s) = (0.6f64, 0.8f64);
        let phase = C64::from_polar(1.0, 0.3);
        for r in 0..8 {
            let a = base.vectors[(r, 1)];
            let b = base.vectors[(r, 2)];
            mixed.vectors[(r, 1)] = a * c + b * s * phase;
            mixed.vectors[(r, 2)] = -a * s * phase.conj() + b * c;
        }
        let e1 = effective_from_basis(&base)
            .unwrap()
            .total_at(20.0)
            .eigenvalues()
            .unwrap();
        let e2 = effective_from_basis(&mixed)
            .unwrap()
            .total_at(20.0)
            .eigenvalues()
            .unwrap();
        for (x, y) in [(&e1, &e2), (&e2, &e1)] {
            for a in x.iter() {
                let nearest = y
                    .iter()
                    .map(|b| (a - b).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-10, "{a} unmatched");
            }
        }
    }
}
