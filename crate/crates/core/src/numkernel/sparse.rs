//! Compressed-row sparse matrices.

use super::KernelError;
use nalgebra::DMatrix;

/// Real matrix in compressed sparse row (CSR) storage.
///
/// Column indices within a row are kept sorted and unique. Explicitly stored
/// zeros are allowed (the nonzero count feeds the engine cost model and is the
/// number of stored entries).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, KernelError> {
        if row_offsets.len() != n_rows + 1 || row_offsets[0] != 0 {
            return Err(KernelError::InvalidStructure(
                "row_offsets must have n_rows + 1 entries starting at 0".into(),
            ));
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != values.len() {
            return Err(KernelError::InvalidStructure(
                "row_offsets[n_rows] must equal the number of stored values".into(),
            ));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if hi < lo {
                return Err(KernelError::InvalidStructure(format!(
                    "row_offsets decrease at row {r}"
                )));
            }
            for k in lo..hi {
                if col_indices[k] >= n_cols {
                    return Err(KernelError::InvalidStructure(format!(
                        "column index {} out of range in row {r}",
                        col_indices[k]
                    )));
                }
                if k > lo && col_indices[k] <= col_indices[k - 1] {
                    return Err(KernelError::InvalidStructure(format!(
                        "column indices not strictly ascending in row {r}"
                    )));
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assembles a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, KernelError> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(KernelError::InvalidStructure(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            counts[r + 1] += 1;
        }
        for r in 0..n_rows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..n_rows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    col_indices.push(c);
                    values.push(sum);
                }
            }
            row_offsets.push(values.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Diagonal matrix; zero diagonal entries are not stored.
    pub fn diagonal(d: &[f64]) -> Self {
        let mut row_offsets = Vec::with_capacity(d.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                col_indices.push(i);
                values.push(v);
            }
            row_offsets.push(values.len());
        }
        Self {
            n_rows: d.len(),
            n_cols: d.len(),
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Copies the nonzero entries of a dense matrix.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                if a[(r, c)] != 0.0 {
                    triplets.push((r, c, a[(r, c)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &triplets).expect("indices in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for k in self.row_range(r) {
                a[(r, self.col_indices[k])] += self.values[k];
            }
        }
        a
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_offsets[r]..self.row_offsets[r + 1]
    }

    /// Iterates over `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_range(r)
            .map(move |k| (self.col_indices[k], self.values[k]))
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_range(r);
        match self.col_indices[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, KernelError> {
        if x.len() != self.n_cols {
            return Err(KernelError::DimensionMismatch {
                expected: self.n_cols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` into a caller-owned buffer. Panics on length mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "spmv: x has wrong length");
        assert_eq!(y.len(), self.n_rows, "spmv: y has wrong length");
        for (r, yr) in y.iter_mut().enumerate() {
            let range = self.row_range(r);
            let cols = &self.col_indices[range.clone()];
            let vals = &self.values[range];
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut s = self.clone();
        s.scale(alpha);
        s
    }

    /// `diag(d) A`.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n_rows);
        let mut s = self.clone();
        for (r, &dr) in d.iter().enumerate() {
            for k in s.row_range(r) {
                s.values[k] *= dr;
            }
        }
        s
    }

    /// `A diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n_cols);
        let mut s = self.clone();
        for (k, v) in s.values.iter_mut().enumerate() {
            *v *= d[s.col_indices[k]];
        }
        s
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        Self::from_triplets(self.n_cols, self.n_rows, &triplets).expect("indices in range")
    }

    /// Sparse product `A B`.
    pub fn matmul(&self, b: &SparseMatrix) -> Result<Self, KernelError> {
        if self.n_cols != b.n_rows {
            return Err(KernelError::DimensionMismatch {
                expected: self.n_cols,
                found: b.n_rows,
            });
        }
        let mut acc = vec![0.0; b.n_cols];
        let mut touched = vec![false; b.n_cols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.n_rows {
            pattern.clear();
            for (k, a) in self.row(r) {
                for (c, bv) in b.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        pattern.push(c);
                    }
                    acc[c] += a * bv;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                col_indices.push(c);
                values.push(acc[c]);
                acc[c] = 0.0;
                touched[c] = false;
            }
            row_offsets.push(values.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: b.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// `alpha A + beta B` on the union pattern.
    pub fn add_scaled(&self, alpha: f64, b: &SparseMatrix, beta: f64) -> Result<Self, KernelError> {
        if self.n_rows != b.n_rows || self.n_cols != b.n_cols {
            return Err(KernelError::DimensionMismatch {
                expected: self.n_rows * self.n_cols,
                found: b.n_rows * b.n_cols,
            });
        }
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::with_capacity(self.nnz() + b.nnz());
        let mut values = Vec::with_capacity(self.nnz() + b.nnz());
        for r in 0..self.n_rows {
            let (mut i, ia) = (self.row_offsets[r], self.row_offsets[r + 1]);
            let (mut j, jb) = (b.row_offsets[r], b.row_offsets[r + 1]);
            while i < ia || j < jb {
                let ci = if i < ia { self.col_indices[i] } else { usize::MAX };
                let cj = if j < jb { b.col_indices[j] } else { usize::MAX };
                if ci == cj {
                    col_indices.push(ci);
                    values.push(alpha * self.values[i] + beta * b.values[j]);
                    i += 1;
                    j += 1;
                } else if ci < cj {
                    col_indices.push(ci);
                    values.push(alpha * self.values[i]);
                    i += 1;
                } else {
                    col_indices.push(cj);
                    values.push(beta * b.values[j]);
                    j += 1;
                }
            }
            row_offsets.push(values.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Places `blocks[i][j]` (each `bs x bs`, `None` for zero) into a
    /// `(nb*bs) x (nb*bs)` matrix.
    pub fn from_blocks(bs: usize, blocks: &[Vec<Option<&SparseMatrix>>]) -> Self {
        let nb = blocks.len();
        let mut triplets = Vec::new();
        for (bi, brow) in blocks.iter().enumerate() {
            assert_eq!(brow.len(), nb, "block grid must be square");
            for (bj, blk) in brow.iter().enumerate() {
                if let Some(m) = blk {
                    assert_eq!((m.n_rows, m.n_cols), (bs, bs), "block size mismatch");
                    for r in 0..bs {
                        for (c, v) in m.row(r) {
                            triplets.push((bi * bs + r, bj * bs + c, v));
                        }
                    }
                }
            }
        }
        Self::from_triplets(nb * bs, nb * bs, &triplets).expect("indices in range")
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.n_cols];
        for (k, &c) in self.col_indices.iter().enumerate() {
            sums[c] += self.values[k].abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
