//! Compressed sparse row storage for complex matrices.
//!
//! Entries are kept sorted by `(row, col)` with no duplicates, so two matrices
//! built from the same terms serialize to identical bytes regardless of the
//! order in which the terms were accumulated.

use std::io::{Read, Write};

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Entries with magnitude below this are dropped after every construction.
pub const PRUNE_TOL: f64 = 1e-15;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct SparseComplexMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Builds a matrix from `(row, col, value)` terms. Repeated positions are
    /// summed, then entries below [`PRUNE_TOL`] are removed.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let triplets: Vec<_> = triplets.into_iter().collect();
        let mut counts = vec![0usize; rows + 1];
        for &(r, c, _) in &triplets {
            if r >= rows || c >= cols {
                return Err(Error::Argument(format!(
                    "entry ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for r in 0..rows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, ZERO); triplets.len()];
        for (r, c, v) in triplets {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(bucket.len());
        let mut values = Vec::with_capacity(bucket.len());
        row_ptr.push(0);
        for r in 0..rows {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut acc = ZERO;
                while i < row.len() && row[i].0 == c {
                    acc += row[i].1;
                    i += 1;
                }
                if acc.norm() >= PRUNE_TOL {
                    col_idx.push(c);
                    values.push(acc);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(dense: MatRef<'_, C64>) -> Self {
        let mut triplets = Vec::new();
        for r in 0..dense.nrows() {
            for c in 0..dense.ncols() {
                let v = dense[(r, c)];
                if v.norm() >= PRUNE_TOL {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(dense.nrows(), dense.ncols(), triplets)
            .expect("indices are in range by construction")
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            out[(r, c)] = v;
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column indices and values stored in row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[C64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    /// Iterates stored entries in canonical `(row, col)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(self.mismatch(other));
        }
        Ok(())
    }

    fn mismatch(&self, other: &Self) -> Error {
        Error::DimensionMismatch {
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }

    /// Sparse product `self * other` (Gustavson row-by-row accumulation).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(self.mismatch(other));
        }
        let mut acc = vec![ZERO; other.cols];
        let mut marker = vec![usize::MAX; other.cols];
        let mut touched = Vec::new();
        let mut row_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..self.rows {
            touched.clear();
            let (a_cols, a_vals) = self.row(r);
            for (&k, &a) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = other.row(k);
                for (&c, &b) in b_cols.iter().zip(b_vals) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = ZERO;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c].norm() >= PRUNE_TOL {
                    col_idx.push(c);
                    values.push(acc[c]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() * other.nnz());
        let mut values = Vec::with_capacity(self.nnz() * other.nnz());
        row_ptr.push(0);
        for ra in 0..self.rows {
            let (a_cols, a_vals) = self.row(ra);
            for rb in 0..other.rows {
                let (b_cols, b_vals) = other.row(rb);
                for (&ca, &a) in a_cols.iter().zip(a_vals) {
                    for (&cb, &b) in b_cols.iter().zip(b_vals) {
                        let v = a * b;
                        if v.norm() >= PRUNE_TOL {
                            col_idx.push(ca * other.cols + cb);
                            values.push(v);
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.iter().map(|(r, c, v)| (c, r, v)))
            .expect("indices are in range by construction")
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.cols,
            self.rows,
            self.iter().map(|(r, c, v)| (c, r, v.conj())),
        )
        .expect("indices are in range by construction")
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_triplets(
            self.rows,
            self.cols,
            self.iter().map(|(r, c, v)| (r, c, v * factor)),
        )
        .expect("indices are in range by construction")
    }

    /// Linear combination `a * self + b * other`.
    pub fn axpby(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.check_same_shape(other)?;
        Self::from_triplets(
            self.rows,
            self.cols,
            self.iter()
                .map(|(r, c, v)| (r, c, a * v))
                .chain(other.iter().map(|(r, c, v)| (r, c, b * v))),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpby(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// `y = self * x`.
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = ZERO;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *out = acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Dense product `self * x`.
    pub fn mul_dense(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        assert_eq!(x.nrows(), self.cols);
        let mut out = Mat::<C64>::zeros(self.rows, x.ncols());
        for j in 0..x.ncols() {
            for r in 0..self.rows {
                let (cols, vals) = self.row(r);
                let mut acc = ZERO;
                for (&c, &v) in cols.iter().zip(vals) {
                    acc += v * x[(c, j)];
                }
                out[(r, j)] = acc;
            }
        }
        out
    }

    /// Dense product `x * self`.
    pub fn dense_mul(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        assert_eq!(x.ncols(), self.rows);
        let mut out = Mat::<C64>::zeros(x.nrows(), self.cols);
        for k in 0..self.rows {
            let (cols, vals) = self.row(k);
            for (&c, &v) in cols.iter().zip(vals) {
                for i in 0..x.nrows() {
                    out[(i, c)] += x[(i, k)] * v;
                }
            }
        }
        out
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .sub(other)?
            .values
            .iter()
            .fold(0.0, |m, v| m.max(v.norm())))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other).is_ok_and(|d| d <= tol)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Writes the canonical little-endian dump: `rows`, `cols`, `nnz` as
    /// `u64`, then one `(row: u64, col: u64, re: f64, im: f64)` record per
    /// stored entry in `(row, col)` order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        for header in [self.rows, self.cols, self.nnz()] {
            w.write_all(&(header as u64).to_le_bytes())?;
        }
        for (r, c, v) in self.iter() {
            w.write_all(&(r as u64).to_le_bytes())?;
            w.write_all(&(c as u64).to_le_bytes())?;
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        fn u64_of<R: Read>(r: &mut R) -> Result<u64> {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            Ok(u64::from_le_bytes(buf))
        }
        fn f64_of<R: Read>(r: &mut R) -> Result<f64> {
            Ok(f64::from_bits(u64_of(r)?))
        }
        let rows = u64_of(&mut r)? as usize;
        let cols = u64_of(&mut r)? as usize;
        let nnz = u64_of(&mut r)? as usize;
        let mut triplets = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let row = u64_of(&mut r)? as usize;
            let col = u64_of(&mut r)? as usize;
            let re = f64_of(&mut r)?;
            let im = f64_of(&mut r)?;
            triplets.push((row, col, C64::new(re, im)));
        }
        Self::from_triplets(rows, cols, triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn diag(vals: &[f64]) -> SparseComplexMatrix {
        SparseComplexMatrix::from_triplets(
            vals.len(),
            vals.len(),
            vals.iter().enumerate().map(|(i, &v)| (i, i, c(v))),
        )
        .unwrap()
    }

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

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let m = SparseComplexMatrix::from_triplets(
            2,
            3,
            vec![
                (1, 2, c(1.0)),
                (0, 1, c(2.0)),
                (1, 2, c(3.0)),
                (1, 0, c(5.0)),
            ],
        )
        .unwrap();
        let entries: Vec<_> = m.iter().collect();
        assert_eq!(
            entries,
            vec![(0, 1, c(2.0)), (1, 0, c(5.0)), (1, 2, c(4.0))]
        );
    }

    #[test]
    fn cancellation_is_pruned() {
        let m = SparseComplexMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(1.0)), (0, 0, c(-1.0)), (1, 1, c(1e-17))],
        )
        .unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        let err = SparseComplexMatrix::from_triplets(2, 2, vec![(2, 0, c(1.0))]);
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = SparseComplexMatrix::identity(2);
        assert_eq!(i2.kron(&i2), SparseComplexMatrix::identity(4));
    }

    #[test]
    fn kron_of_diagonals() {
        let k = diag(&[1.0, 2.0]).kron(&diag(&[3.0, 4.0]));
        assert_eq!(k, diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = SparseComplexMatrix::identity(2);
        let b = SparseComplexMatrix::identity(3);
        assert!(matches!(a.matmul(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn binary_dump_layout() {
        let m =
            SparseComplexMatrix::from_triplets(2, 2, vec![(1, 0, C64::new(0.5, -2.0))]).unwrap();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 3 * 8 + 32);
        assert_eq!(&buf[0..8], &2u64.to_le_bytes());
        assert_eq!(&buf[16..24], &1u64.to_le_bytes());
        assert_eq!(&buf[24..32], &1u64.to_le_bytes());
        assert_eq!(&buf[32..40], &0u64.to_le_bytes());
        assert_eq!(&buf[40..48], &0.5f64.to_le_bytes());
        assert_eq!(&buf[48..56], &(-2.0f64).to_le_bytes());
        assert_eq!(SparseComplexMatrix::read_binary(&buf[..]).unwrap(), m);
    }

    fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Mat<C64>> {
        proptest::collection::vec((-2i32..=2, -2i32..=2), rows * cols).prop_map(move |v| {
            Mat::from_fn(rows, cols, |i, j| {
                let (re, im) = v[i * cols + j];
                C64::new(re as f64, im as f64)
            })
        })
    }

    proptest! {
        #[test]
        fn matmul_matches_dense(a in small_matrix(3, 4), b in small_matrix(4, 2)) {
            let sa = SparseComplexMatrix::from_dense(a.as_ref());
            let sb = SparseComplexMatrix::from_dense(b.as_ref());
            let expected = SparseComplexMatrix::from_dense(dense_matmul(&a, &b).as_ref());
            prop_assert!(sa.matmul(&sb).unwrap().approx_eq(&expected, 1e-12));
        }

        #[test]
        fn binary_dump_roundtrip(a in small_matrix(3, 5)) {
            let m = SparseComplexMatrix::from_dense(a.as_ref());
            let mut buf = Vec::new();
            m.write_binary(&mut buf).unwrap();
            prop_assert_eq!(SparseComplexMatrix::read_binary(&buf[..]).unwrap(), m);
        }

        #[test]
        fn dense_products_match_sparse(a in small_matrix(3, 3), x in small_matrix(3, 3)) {
            let sa = SparseComplexMatrix::from_dense(a.as_ref());
            let left = sa.mul_dense(x.as_ref());
            let right = sa.dense_mul(x.as_ref());
            let l_ref = dense_matmul(&a, &x);
            let r_ref = dense_matmul(&x, &a);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((left[(i, j)] - l_ref[(i, j)]).norm() < 1e-12);
                    prop_assert!((right[(i, j)] - r_ref[(i, j)]).norm() < 1e-12);
                }
            }
        }
    }
}
