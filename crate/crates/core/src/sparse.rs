//! Column-compressed sparse matrix used for constraint Jacobians.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

/// Compressed sparse column storage. Explicitly stored zeros are kept: the
/// pattern is structural, not numerical.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Builds a [`CscMatrix`] one column at a time.
#[derive(Debug)]
pub struct CscBuilder {
    nrows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscBuilder {
    pub fn new(nrows: usize) -> Self {
        Self {
            nrows,
            col_ptr: vec![0],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends an entry to the current column. Rows within a column must be
    /// pushed in strictly increasing order.
    pub fn push(&mut self, row: usize, value: f64) {
        assert!(row < self.nrows, "row {row} out of range {}", self.nrows);
        let start = *self.col_ptr.last().unwrap();
        if self.row_idx.len() > start {
            assert!(*self.row_idx.last().unwrap() < row, "rows must increase");
        }
        self.row_idx.push(row);
        self.values.push(value);
    }

    pub fn finish_column(&mut self) {
        self.col_ptr.push(self.row_idx.len());
    }

    pub fn build(self) -> CscMatrix {
        CscMatrix {
            nrows: self.nrows,
            ncols: self.col_ptr.len() - 1,
            col_ptr: self.col_ptr,
            row_idx: self.row_idx,
            values: self.values,
        }
    }
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(row, value)` pairs of column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// `(row, col, value)` for every stored entry, column by column.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.column(j).map(move |(i, v)| (i, j, v)))
    }

    /// `B v`
    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.ncols);
        let mut out = DVector::zeros(self.nrows);
        for (j, vj) in v.iter().enumerate() {
            if *vj == 0.0 {
                continue;
            }
            for (i, b) in self.column(j) {
                out[i] += b * vj;
            }
        }
        out
    }

    /// `B^T v`
    pub fn tr_mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.nrows);
        DVector::from_iterator(
            self.ncols,
            (0..self.ncols).map(|j| self.column(j).map(|(i, b)| b * v[i]).sum()),
        )
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// `B^T B` as a dense matrix, accumulated row by row so the cost follows
    /// the sparsity of `B`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.nrows];
        for (i, j, v) in self.triplets() {
            rows[i].push((j, v));
        }
        let mut g = DMatrix::zeros(self.ncols, self.ncols);
        for row in &rows {
            for &(a, va) in row {
                for &(b, vb) in row {
                    g[(a, b)] += va * vb;
                }
            }
        }
        g
    }

    /// Writes one `row col value` line per stored entry (0-based indices,
    /// 17 significant digits).
    pub fn write_triplets<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}
