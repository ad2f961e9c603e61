//! Row-compressed sparse matrices on the node index set of a mesh.

use std::sync::Arc;

use crate::mesh::Mesh;

/// Sparsity pattern shared by every operator assembled on one mesh: the
/// diagonal plus all mesh edges, with sorted column indices in each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    diag: Vec<usize>,
}

impl SparsityPattern {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let n = mesh.n_vertices();
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for tri in mesh.triangles() {
            for &a in tri {
                for &b in tri {
                    if a != b {
                        rows[a].push(b);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut diag = Vec::with_capacity(n);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable();
            row.dedup();
            let start = col_idx.len();
            diag.push(start + row.binary_search(&i).expect("diagonal present"));
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            diag,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Storage slot of the diagonal entry of each row.
    pub fn diag_slots(&self) -> &[usize] {
        &self.diag
    }

    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// Storage slot of entry `(i, j)`, if it is in the pattern.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let range = self.row(i);
        self.col_idx[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| range.start + k)
    }
}

/// Sparse matrix in compressed-row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    pub fn zeros(pattern: Arc<SparsityPattern>, symmetric: bool) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self {
            pattern,
            values,
            symmetric,
        }
    }

    pub fn from_values(pattern: Arc<SparsityPattern>, values: Vec<f64>, symmetric: bool) -> Self {
        assert_eq!(values.len(), pattern.nnz());
        Self {
            pattern,
            values,
            symmetric,
        }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Whether the operator was assembled as symmetric.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub(crate) fn set_symmetric(&mut self, symmetric: bool) {
        self.symmetric = symmetric;
    }

    /// Entry `(i, j)`; zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.pattern.diag.iter().map(|&k| self.values[k]).collect()
    }

    /// Iterates over the stored entries of row `i` as `(column, value)`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.pattern.row(i);
        self.pattern.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n());
        assert_eq!(y.len(), self.n());
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[k] * x[p.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        ax.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.row_entries(i).map(|(_, v)| v).sum())
            .collect()
    }

    /// Largest `|a_ij - a_ji|` over the pattern.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            for (j, v) in self.row_entries(i) {
                if j > i {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        worst
    }

    /// Stored off-diagonal entries `(i, j, a_ij)` with `i < j`, i.e. one per
    /// mesh edge for operators on a mesh pattern.
    pub fn edge_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.row_entries(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, v)| (i, j, v))
        })
    }

    /// `alpha * self + beta * other + diag(shift)` on the same pattern.
    pub fn combine(
        &self,
        alpha: f64,
        other: &SparseOperator,
        beta: f64,
        shift: &[f64],
    ) -> SparseOperator {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern);
        let mut values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        for (i, &s) in shift.iter().enumerate() {
            values[self.pattern.diag[i]] += s;
        }
        SparseOperator {
            pattern: self.pattern.clone(),
            values,
            symmetric: self.symmetric && other.symmetric,
        }
    }

    /// Row-major dense copy, for small test problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n()]; self.n()];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row_entries(i) {
                row[j] = v;
            }
        }
        dense
    }
}
