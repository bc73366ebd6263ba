//! Compressed-row storage for the many-atom operators.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;

/// Square complex matrix in compressed sparse row form.
///
/// Column indices are sorted within each row and duplicates are merged at
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; repeated positions are summed
    /// and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; dim + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                indices.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        // drop entries that cancelled to zero
        let mut k = 0;
        for i in 0..values.len() {
            if values[i] != C64::new(0.0, 0.0) {
                rows[k] = rows[i];
                indices[k] = indices[i];
                values[k] = values[i];
                k += 1;
            }
        }
        rows.truncate(k);
        indices.truncate(k);
        values.truncate(k);
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for i in 0..dim {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            dim,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &Array2<C64>) -> Self {
        let dim = m.nrows();
        let triplets = m
            .indexed_iter()
            .filter(|(_, v)| **v != C64::new(0.0, 0.0))
            .map(|((r, c), v)| (r, c, *v))
            .collect();
        Self::from_triplets(dim, triplets)
    }

    pub fn identity(dim: usize) -> Self {
        CsrMatrix {
            dim,
            indptr: (0..=dim).collect(),
            indices: (0..dim).collect(),
            values: vec![C64::new(1.0, 0.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for (r, c, v) in self.iter() {
            m[[r, c]] += v;
        }
        m
    }

    pub fn apply(&self, v: ArrayView1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(self.dim);
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * v[self.indices[k]];
            }
            out[r] = acc;
        }
        out
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, triplets)
    }

    pub fn add(&self, other: &CsrMatrix) -> Self {
        let triplets = self.iter().chain(other.iter()).collect();
        Self::from_triplets(self.dim, triplets)
    }

    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let mid = self.indices[k];
                let a = self.values[k];
                for kk in other.indptr[mid]..other.indptr[mid + 1] {
                    triplets.push((r, other.indices[kk], a * other.values[kk]));
                }
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.indptr[row]..self.indptr[row + 1];
        match self.indices[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }
}
