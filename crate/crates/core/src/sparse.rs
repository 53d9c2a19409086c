//! Symmetric sparse matrices stored as the upper triangle in CSR layout.

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricSparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricSparseMatrix {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Sum of triplets; `(i, j)` and `(j, i)` refer to the same entry.
    /// Duplicates are summed in input order, so the result is deterministic.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .iter()
            .map(|&(i, j, v)| {
                assert!(i < dim && j < dim, "triplet ({i}, {j}) outside dimension {dim}");
                (i.min(j), i.max(j), v)
            })
            .collect();
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymmetricSparseMatrix {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored (upper-triangle) entries.
    pub fn nnz_stored(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = (i.min(j), i.max(j));
        let row = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[row.clone()].binary_search(&c) {
            Ok(pos) => self.values[row.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Upper-triangle entries `(i, j, value)` with `i ≤ j`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.values[p]))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                let v = self.values[p];
                acc += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
            y[i] += acc;
        }
    }

    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + other`; the sparsity pattern is the union.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let triplets: Vec<_> = self.iter_upper().chain(other.iter_upper()).collect();
        Self::from_triplets(self.dim, &triplets)
    }

    /// Principal submatrix on `keep`, where `keep[i]` is the new index of row `i`.
    pub fn restrict(&self, keep: &[Option<usize>], new_dim: usize) -> Self {
        assert_eq!(keep.len(), self.dim);
        let triplets: Vec<_> = self
            .iter_upper()
            .filter_map(|(i, j, v)| Some((keep[i]?, keep[j]?, v)))
            .collect();
        Self::from_triplets(new_dim, &triplets)
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dim];
        for (i, j, v) in self.iter_upper() {
            rows[i] += v.abs();
            if i != j {
                rows[j] += v.abs();
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.add(&other.scaled(-1.0))
            .values
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (i, j, v) in self.iter_upper() {
            d[i][j] = v;
            d[j][i] = v;
        }
        d
    }

    pub fn to_faer_dense(&self) -> faer::Mat<f64> {
        let mut d = faer::Mat::zeros(self.dim, self.dim);
        for (i, j, v) in self.iter_upper() {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        d
    }

    /// Lower triangle as a faer column-major matrix.
    pub fn to_faer_lower(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self
            .iter_upper()
            .map(|(i, j, v)| Triplet::new(j, i, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.dim, self.dim, &triplets)
            .map_err(|e| Error::Internal(format!("sparse conversion failed: {e:?}")))
    }
}
