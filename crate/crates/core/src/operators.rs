//! Array parameters and many-qubit operators on the `2^N` Hilbert space.
//!
//! Site 1 is the leftmost Kronecker factor, so it maps to the most
//! significant bit of a basis index. On each site index 0 is the ground
//! state and index 1 the excited state.

use std::f64::consts::TAU;

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseComplexMatrix;

/// Side of the array the coherent drive enters from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Incidence {
    #[default]
    Left,
    /// Mirrored drive phase `exp(-i phi (N + 1 - n))`. Not validated against
    /// reference results.
    Right,
}

/// Physical configuration of a periodic qubit array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayParams {
    pub n_qubits: usize,
    /// Phase gained by light between neighbouring qubits, `2 pi d / lambda`.
    pub phi: f64,
    pub gamma_1d: f64,
    pub omega_r: f64,
    #[serde(default)]
    pub incidence: Incidence,
}

impl ArrayParams {
    /// Parameters in units where `gamma_1d = 1`.
    pub fn new(n_qubits: usize, phi: f64, omega_r: f64) -> Result<Self> {
        let params = Self {
            n_qubits,
            phi,
            gamma_1d: 1.0,
            omega_r,
            incidence: Incidence::Left,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters from the period in wavelengths; `phi` is wrapped to `[0, 2 pi)`.
    pub fn from_period(n_qubits: usize, d_over_lambda: f64, omega_r: f64) -> Result<Self> {
        let mut phi = (TAU * d_over_lambda).rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Self::new(n_qubits, phi, omega_r)
    }

    pub fn with_gamma(mut self, gamma_1d: f64) -> Result<Self> {
        self.gamma_1d = gamma_1d;
        self.validate()?;
        Ok(self)
    }

    pub fn with_omega_r(mut self, omega_r: f64) -> Result<Self> {
        self.omega_r = omega_r;
        self.validate()?;
        Ok(self)
    }

    pub fn with_incidence(mut self, incidence: Incidence) -> Self {
        self.incidence = incidence;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Argument("n_qubits must be at least 1".into()));
        }
        if !(self.gamma_1d > 0.0 && self.gamma_1d.is_finite()) {
            return Err(Error::Argument(format!(
                "gamma_1d must be positive, got {}",
                self.gamma_1d
            )));
        }
        if !(self.omega_r >= 0.0 && self.omega_r.is_finite()) {
            return Err(Error::Argument(format!(
                "omega_r must be non-negative, got {}",
                self.omega_r
            )));
        }
        if !(0.0..TAU).contains(&self.phi) {
            return Err(Error::Argument(format!(
                "phi must lie in [0, 2pi), got {}",
                self.phi
            )));
        }
        Ok(())
    }

    pub fn d_over_lambda(&self) -> f64 {
        self.phi / TAU
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn liouville_dim(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    /// Phase factor `exp(-i phi n)` multiplying `sigma_n^dag` in the drive.
    pub fn drive_phase(&self, site: usize) -> C64 {
        let position = match self.incidence {
            Incidence::Left => site,
            Incidence::Right => self.n_qubits + 1 - site,
        };
        C64::from_polar(1.0, -self.phi * position as f64)
    }
}

fn single_site_lowering() -> SparseComplexMatrix {
    SparseComplexMatrix::from_triplets(2, 2, [(0, 1, C64::new(1.0, 0.0))])
        .expect("2x2 entry in range")
}

fn check_site(site: usize, n_qubits: usize) -> Result<()> {
    if site == 0 || site > n_qubits {
        return Err(Error::Argument(format!(
            "site {site} outside 1..={n_qubits}"
        )));
    }
    Ok(())
}

/// Embeds a single-site operator at `site` (1-based) among `n_qubits` sites.
pub fn embed(
    single: &SparseComplexMatrix,
    site: usize,
    n_qubits: usize,
) -> Result<SparseComplexMatrix> {
    check_site(site, n_qubits)?;
    let id = SparseComplexMatrix::identity(2);
    let mut out = SparseComplexMatrix::identity(1);
    for s in 1..=n_qubits {
        out = out.kron(if s == site { single } else { &id });
    }
    Ok(out)
}

/// Lowering operator `sigma_site` on `n_qubits` qubits.
pub fn lowering_op(site: usize, n_qubits: usize) -> Result<SparseComplexMatrix> {
    embed(&single_site_lowering(), site, n_qubits)
}

pub fn raising_op(site: usize, n_qubits: usize) -> Result<SparseComplexMatrix> {
    Ok(lowering_op(site, n_qubits)?.adjoint())
}

/// All lowering operators `[sigma_1, ..., sigma_N]`.
pub fn lowering_ops(n_qubits: usize) -> Vec<SparseComplexMatrix> {
    (1..=n_qubits)
        .map(|s| lowering_op(s, n_qubits).expect("site in range"))
        .collect()
}

/// Total excitation number `sum_m sigma_m^dag sigma_m`.
pub fn number_op(n_qubits: usize) -> SparseComplexMatrix {
    let dim = 1usize << n_qubits;
    SparseComplexMatrix::from_triplets(
        dim,
        dim,
        (0..dim).map(|i| (i, i, C64::new(i.count_ones() as f64, 0.0))),
    )
    .expect("diagonal in range")
}

pub fn op_product(a: &SparseComplexMatrix, b: &SparseComplexMatrix) -> Result<SparseComplexMatrix> {
    a.matmul(b)
}

pub fn kron(a: &SparseComplexMatrix, b: &SparseComplexMatrix) -> SparseComplexMatrix {
    a.kron(b)
}

/// Basis index bit mask of `site` (1-based).
pub fn site_mask(site: usize, n_qubits: usize) -> usize {
    1 << (n_qubits - site)
}

/// `Tr[rho A]` for a dense `rho` and sparse `A`.
pub fn trace_with(rho: MatRef<'_, C64>, op: &SparseComplexMatrix) -> C64 {
    op.iter().map(|(i, j, a)| a * rho[(j, i)]).sum()
}

/// Matrix of spin correlators, entry `(n, m) = Tr[rho sigma_n^dag sigma_m]`
/// with 0-based site indices.
pub fn correlation_matrix(rho: MatRef<'_, C64>, n_qubits: usize) -> Mat<C64> {
    let dim = 1usize << n_qubits;
    assert_eq!((rho.nrows(), rho.ncols()), (dim, dim));
    // sigma_n^dag sigma_m maps basis state j (site m excited, site n empty
    // unless n == m) to j with the two bits swapped.
    Mat::from_fn(n_qubits, n_qubits, |n, m| {
        let mask_n = site_mask(n + 1, n_qubits);
        let mask_m = site_mask(m + 1, n_qubits);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..dim {
            if j & mask_m == 0 {
                continue;
            }
            let lowered = j & !mask_m;
            if lowered & mask_n != 0 {
                continue;
            }
            let i = lowered | mask_n;
            acc += rho[(j, i)];
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_matmul(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(a.nrows(), b.ncols());
        for i in 0..a.nrows() {
            for j in 0..b.ncols() {
                for k in 0..a.ncols() {
                    out[(i, j)] += a[(i, k)] * b[(k, j)];
                }
            }
        }
        out
    }

    fn rand_dense(rows: usize, cols: usize, seed: u64) -> Mat<C64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn single_qubit_lowering() {
        let s = lowering_op(1, 1).unwrap();
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.get(0, 1), C64::new(1.0, 0.0));
    }

    #[test]
    fn two_qubit_embedding_has_two_entries() {
        let s = lowering_op(1, 2).unwrap();
        assert_eq!((s.nrows(), s.ncols(), s.nnz()), (4, 4, 2));
        // site 1 is the most significant bit
        assert_eq!(s.get(0b00, 0b10), C64::new(1.0, 0.0));
        assert_eq!(s.get(0b01, 0b11), C64::new(1.0, 0.0));
    }

    #[test]
    fn site_out_of_range() {
        assert!(matches!(lowering_op(0, 3), Err(Error::Argument(_))));
        assert!(matches!(lowering_op(4, 3), Err(Error::Argument(_))));
    }

    #[test]
    fn lowering_is_nilpotent_and_anticommutes_onsite() {
        for n in 1..=4 {
            for site in 1..=n {
                let s = lowering_op(site, n).unwrap();
                assert_eq!(op_product(&s, &s).unwrap().nnz(), 0);
                let sd = s.adjoint();
                let anti = op_product(&sd, &s)
                    .unwrap()
                    .add(&op_product(&s, &sd).unwrap())
                    .unwrap();
                assert!(anti.approx_eq(&SparseComplexMatrix::identity(1 << n), 0.0));
            }
        }
    }

    #[test]
    fn identity_product_and_excited_projector() {
        let s = lowering_op(1, 1).unwrap();
        let id = SparseComplexMatrix::identity(2);
        assert_eq!(op_product(&id, &s).unwrap(), s);
        let proj = op_product(&s.adjoint(), &s).unwrap();
        let expected =
            SparseComplexMatrix::from_triplets(2, 2, [(1, 1, C64::new(1.0, 0.0))]).unwrap();
        assert_eq!(proj, expected);
    }

    #[test]
    fn exchange_products_match_dense_reference() {
        let n = 2;
        let s1 = lowering_op(1, n).unwrap();
        let s2 = lowering_op(2, n).unwrap();
        let a = op_product(&s1.adjoint(), &s2).unwrap();
        let b = op_product(&s2.adjoint(), &s1).unwrap();
        let sparse = op_product(&a, &b).unwrap();
        let dense = dense_matmul(&a.to_dense(), &b.to_dense());
        assert!(sparse.approx_eq(&SparseComplexMatrix::from_dense(dense.as_ref()), 1e-15));
        // on the one-excitation sector it projects onto site 1 excited
        assert_eq!(sparse.get(0b10, 0b10), C64::new(1.0, 0.0));
        assert_eq!(sparse.get(0b01, 0b01), C64::new(0.0, 0.0));
    }

    #[test]
    fn kron_vectorization_identity() {
        // column stacking: vec(B X A^T) = (A ⊗ B) vec(X)
        for seed in 0..5 {
            let a = rand_dense(2, 3, seed);
            let b = rand_dense(3, 2, seed + 100);
            let x = rand_dense(2, 3, seed + 200);
            let k = kron(
                &SparseComplexMatrix::from_dense(a.as_ref()),
                &SparseComplexMatrix::from_dense(b.as_ref()),
            );
            let vec_x: Vec<C64> = (0..x.ncols())
                .flat_map(|j| (0..x.nrows()).map(move |i| (i, j)))
                .map(|(i, j)| x[(i, j)])
                .collect();
            let lhs = k.mul_vec(&vec_x);
            let bxat = dense_matmul(&dense_matmul(&b, &x), &a.transpose().to_owned());
            let rhs: Vec<C64> = (0..bxat.ncols())
                .flat_map(|j| (0..bxat.nrows()).map(move |i| (i, j)))
                .map(|(i, j)| bxat[(i, j)])
                .collect();
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - r).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn number_operator_spectrum_is_integer() {
        let n = 4;
        let sum = lowering_ops(n)
            .iter()
            .map(|s| op_product(&s.adjoint(), s).unwrap())
            .reduce(|a, b| a.add(&b).unwrap())
            .unwrap();
        assert!(sum.approx_eq(&number_op(n), 0.0));
        for i in 0..(1 << n) {
            let v = sum.get(i, i);
            assert_eq!(v.im, 0.0);
            assert!((0..=n).any(|k| v.re == k as f64));
        }
    }

    #[test]
    fn params_validation() {
        assert!(ArrayParams::new(0, 0.0, 1.0).is_err());
        assert!(ArrayParams::new(2, -0.1, 1.0).is_err());
        assert!(ArrayParams::new(2, TAU, 1.0).is_err());
        assert!(ArrayParams::new(2, 1.0, -1.0).is_err());
        assert!(ArrayParams::new(2, 1.0, 1.0)
            .unwrap()
            .with_gamma(0.0)
            .is_err());
        let p = ArrayParams::from_period(3, 1.0, 0.0).unwrap();
        assert_eq!(p.phi, 0.0);
        let p = ArrayParams::from_period(3, 0.25, 0.0).unwrap();
        assert!((p.d_over_lambda() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn correlation_matrix_matches_sparse_traces() {
        let n = 3;
        let rho = rand_dense(8, 8, 42);
        let corr = correlation_matrix(rho.as_ref(), n);
        for a in 1..=n {
            for b in 1..=n {
                let op =
                    op_product(&raising_op(a, n).unwrap(), &lowering_op(b, n).unwrap()).unwrap();
                assert!((corr[(a - 1, b - 1)] - trace_with(rho.as_ref(), &op)).norm() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn different_sites_commute(n in 2usize..=5, m in 1usize..=5, k in 1usize..=5) {
            prop_assume!(m <= n && k <= n && m != k);
            let a = lowering_op(m, n).unwrap();
            let b = lowering_op(k, n).unwrap();
            let ab = op_product(&a, &b).unwrap();
            let ba = op_product(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            let ad = a.adjoint();
            let mixed = op_product(&ad, &b).unwrap().sub(&op_product(&b, &ad).unwrap()).unwrap();
            prop_assert_eq!(mixed.nnz(), 0);
        }

        #[test]
        fn adjoint_is_involution(n in 1usize..=5, site in 1usize..=5) {
            prop_assume!(site <= n);
            let s = lowering_op(site, n).unwrap();
            prop_assert_eq!(s.adjoint().adjoint(), s.clone());
            let mask = site_mask(site, n);
            for (r, c, v) in s.iter() {
                prop_assert_eq!(c, r | mask);
                prop_assert_eq!(r & mask, 0);
                prop_assert_eq!(v, C64::new(1.0, 0.0));
            }
        }
    }
}
