//! Dense eigendecomposition of the Liouvillian.
//!
//! A Lindblad generator maps Hermitian operators to Hermitian operators, so
//! in an orthonormal basis of Hermitian operators its matrix is real. The
//! dense path works in the product basis built from the single-qubit set
//! `{|0><0|, |1><1|, (|0><1| + |1><0|)/√2, i(|0><1| - |1><0|)/√2}`, which
//! makes the spectrum exactly closed under conjugation and lets the
//! eigensolver run in real arithmetic.

use faer::Mat;
use num_complex::Complex64 as C64;

use super::{SpectrumOptions, SpectrumResult, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::model::Liouvillian;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Unitary change of basis from Hermitian product operators to the
/// column-stacked `|r><c|` basis. Column `K` lists the nonzero
/// `(vec index, coefficient)` pairs of the `K`-th basis operator.
#[derive(Clone, Debug)]
pub struct HermitianBasis {
    n_qubits: usize,
    columns: Vec<Vec<(usize, C64)>>,
}

fn single_site(k: usize) -> &'static [(usize, usize, C64)] {
    const H: C64 = C64 {
        re: SQRT_HALF,
        im: 0.0,
    };
    const IH: C64 = C64 {
        re: 0.0,
        im: SQRT_HALF,
    };
    const MIH: C64 = C64 {
        re: 0.0,
        im: -SQRT_HALF,
    };
    const ONE: C64 = C64 { re: 1.0, im: 0.0 };
    match k {
        0 => &[(0, 0, ONE)],
        1 => &[(1, 1, ONE)],
        2 => &[(0, 1, H), (1, 0, H)],
        _ => &[(0, 1, IH), (1, 0, MIH)],
    }
}

impl HermitianBasis {
    pub fn new(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let count = dim * dim;
        let columns = (0..count)
            .map(|label| {
                let mut entries = vec![(0usize, 0usize, C64::new(1.0, 0.0))];
                for site in 0..n_qubits {
                    let digit = (label >> (2 * (n_qubits - 1 - site))) & 3;
                    let bit = n_qubits - 1 - site;
                    entries = entries
                        .iter()
                        .flat_map(|&(r, c, v)| {
                            single_site(digit)
                                .iter()
                                .map(move |&(rs, cs, w)| (r | (rs << bit), c | (cs << bit), v * w))
                        })
                        .collect();
                }
                let mut col: Vec<(usize, C64)> = entries
                    .into_iter()
                    .map(|(r, c, v)| (r + c * dim, v))
                    .collect();
                col.sort_by_key(|e| e.0);
                col
            })
            .collect();
        Self { n_qubits, columns }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Maps Hermitian-basis coordinates to a column-stacked operator.
    pub fn lift(&self, coords: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.columns.len()];
        for (col, &w) in self.columns.iter().zip(coords) {
            for &(i, t) in col {
                out[i] += t * w;
            }
        }
        out
    }

    /// Coordinates of a column-stacked operator in the Hermitian basis.
    pub fn coordinates(&self, v: &[C64]) -> Vec<C64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(i, t)| t.conj() * v[i]).sum())
            .collect()
    }

    /// Real matrix of the Liouvillian in this basis.
    pub fn real_matrix(&self, l: &Liouvillian) -> Result<Mat<f64>> {
        let n = self.columns.len();
        if l.dim() != n {
            return Err(Error::Argument(format!(
                "basis of dimension {n} does not match a Liouvillian of dimension {}",
                l.dim()
            )));
        }
        // rows of L^T are columns of L
        let lt = l.matrix.transpose();
        let mut out = Mat::<f64>::zeros(n, n);
        let mut y = vec![C64::new(0.0, 0.0); n];
        let mut max_re = 0.0f64;
        let mut max_im = 0.0f64;
        for (k, col) in self.columns.iter().enumerate() {
            y.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            for &(i, t) in col {
                let (rows, vals) = lt.row(i);
                for (&r, &v) in rows.iter().zip(vals) {
                    y[r] += v * t;
                }
            }
            for (j, row_col) in self.columns.iter().enumerate() {
                let z: C64 = row_col.iter().map(|&(i, t)| t.conj() * y[i]).sum();
                out[(j, k)] = z.re;
                max_re = max_re.max(z.re.abs());
                max_im = max_im.max(z.im.abs());
            }
        }
        if max_im > 1e-10 * max_re.max(1.0) {
            return Err(Error::Numeric(format!(
                "superoperator does not preserve Hermiticity (imaginary part {max_im:e})"
            )));
        }
        Ok(out)
    }
}

/// All eigenvalues of `l` (and eigenvectors when requested) via the dense
/// real Schur route, subject to the default dense budget.
pub fn full_spectrum(l: &Liouvillian, want_vectors: bool) -> Result<SpectrumResult> {
    full_spectrum_with(l, want_vectors, &SpectrumOptions::default())
}

pub fn full_spectrum_with(
    l: &Liouvillian,
    want_vectors: bool,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let dim = l.dim();
    if dim > opts.dense_budget {
        return Err(Error::Resource(format!(
            "dense spectrum of dimension {dim} exceeds the budget {}; use targeted_spectrum",
            opts.dense_budget
        )));
    }
    let basis = HermitianBasis::new(l.params.n_qubits);
    let real = basis.real_matrix(l)?;
    let norm = l.matrix.norm_fro();

    let pairs: Vec<(C64, Option<Vec<C64>>)> = if want_vectors {
        let evd = real
            .eigen()
            .map_err(|e| Error::Numeric(format!("dense eigensolver failed: {e:?}")))?;
        let u = evd.U();
        let s = evd.S();
        (0..dim)
            .map(|j| {
                let coords: Vec<C64> = (0..dim).map(|i| u[(i, j)]).collect();
                (s[j], Some(basis.lift(&coords)))
            })
            .collect()
    } else {
        real.eigenvalues()
            .map_err(|e| Error::Numeric(format!("dense eigensolver failed: {e:?}")))?
            .into_iter()
            .map(|e| (e, None))
            .collect()
    };

    let mut result = SpectrumResult::from_pairs(pairs, norm, 1e-9 * norm.max(1.0));
    if let Some(vecs) = &result.eigenvectors {
        let worst = vecs
            .iter()
            .zip(&result.eigenvalues)
            .map(|(v, &lambda)| residual(l, v, lambda))
            .fold(0.0, f64::max);
        if worst > RESIDUAL_TOL * norm {
            return Err(Error::Numeric(format!(
                "eigenvector residual {worst:e} above {:e}",
                RESIDUAL_TOL * norm
            )));
        }
        result.max_residual = Some(worst);
    }
    Ok(result)
}

/// `||L v - λ v||` for a unit vector `v`.
pub(crate) fn residual(l: &Liouvillian, v: &[C64], lambda: C64) -> f64 {
    l.matrix
        .mul_vec(v)
        .iter()
        .zip(v)
        .map(|(lv, x)| (lv - lambda * x).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_liouvillian;
    use crate::operators::ArrayParams;
    use crate::spectra::{dot, norm};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn basis_is_orthonormal() {
        let b = HermitianBasis::new(2);
        for (a, col_a) in b.columns.iter().enumerate() {
            let va = b.lift(
                &(0..16)
                    .map(|i| C64::new((i == a) as u8 as f64, 0.0))
                    .collect::<Vec<_>>(),
            );
            assert!((norm(&va) - 1.0).abs() < 1e-15);
            for col_b in &b.columns[a + 1..] {
                let ip: C64 = col_a
                    .iter()
                    .flat_map(|&(i, t)| {
                        col_b
                            .iter()
                            .filter(move |e| e.0 == i)
                            .map(move |&(_, u)| t.conj() * u)
                    })
                    .sum();
                assert!(ip.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn lift_and_coordinates_are_inverse() {
        let b = HermitianBasis::new(2);
        let v: Vec<C64> = (0..16)
            .map(|i| C64::new(i as f64, (i * i) as f64 * 0.1))
            .collect();
        let back = b.lift(&b.coordinates(&v));
        let diff: Vec<C64> = back.iter().zip(&v).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) < 1e-12);
        assert!(dot(&v, &v).im.abs() < 1e-12);
    }

    #[test]
    fn single_qubit_spectrum_is_analytic() {
        let l = build_liouvillian(&ArrayParams::new(1, 0.0, 0.0).unwrap()).unwrap();
        let spec = full_spectrum(&l, true).unwrap();
        let expected = [0.0, -1.0, -1.0, -2.0];
        for (e, want) in spec.eigenvalues.iter().zip(expected) {
            assert!((e - C64::new(want, 0.0)).norm() < 1e-12, "{e}");
        }
        assert!(spec.max_residual.unwrap() < 1e-12);
        assert_eq!(spec.zero_index, 0);
    }

    #[test]
    fn real_matrix_reproduces_action() {
        let p = ArrayParams::new(2, FRAC_PI_2, 1.3).unwrap();
        let l = build_liouvillian(&p).unwrap();
        let b = HermitianBasis::new(2);
        let r = b.real_matrix(&l).unwrap();
        let v: Vec<C64> = (0..16)
            .map(|i| C64::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let coords = b.coordinates(&v);
        let rc: Vec<C64> = (0..16)
            .map(|i| (0..16).map(|j| coords[j] * r[(i, j)]).sum())
            .collect();
        let lv = l.matrix.mul_vec(&v);
        let diff: Vec<C64> = b.lift(&rc).iter().zip(&lv).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) < 1e-12);
    }

    #[test]
    fn over_budget_is_resource_error() {
        let l = build_liouvillian(&ArrayParams::new(3, 0.0, 1.0).unwrap()).unwrap();
        let opts = SpectrumOptions {
            dense_budget: 16,
            ..SpectrumOptions::default()
        };
        assert!(matches!(
            full_spectrum_with(&l, false, &opts),
            Err(Error::Resource(_))
        ));
    }
}
