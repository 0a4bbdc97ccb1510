//! Matrix-free measurement operators for the TV solver.
//!
//! `DenseOperator` wraps an explicit row matrix. `WalshOperator` exploits
//! the fact that origami and Hadamard-ordered patterns are outer products
//! of Sylvester rows: A x is one 2-D fast transform plus row selection,
//! and Aᵀ y is the same transform of a sparse coefficient image.

use crate::basis::{MeasurementMatrix, Pattern};
use crate::walsh::{fwht_2d, sylvester_index};

pub trait MeasurementOperator: Sync {
    fn rows(&self) -> usize;
    fn side(&self) -> usize;
    fn cols(&self) -> usize {
        self.side() * self.side()
    }
    /// out = A x (len rows).
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// out = Aᵀ y (len cols).
    fn apply_transpose(&self, y: &[f64], out: &mut [f64]);
    /// Exact or upper bound on the largest eigenvalue of AᵀA, when known.
    fn gram_bound(&self) -> Option<f64> {
        None
    }
}

/// Explicit-row operator over a flattened basis prefix.
pub struct DenseOperator<'a> {
    matrix: &'a MeasurementMatrix,
    side: usize,
    /// Set when the rows are known mutually orthogonal (A Aᵀ = n I), in
    /// which case the gram bound is exactly n.
    orthogonal_rows: bool,
}

impl<'a> DenseOperator<'a> {
    pub fn new(matrix: &'a MeasurementMatrix) -> Self {
        let side = (matrix.cols() as f64).sqrt() as usize;
        debug_assert_eq!(side * side, matrix.cols());
        DenseOperator { matrix, side, orthogonal_rows: false }
    }

    /// Marks the rows as mutually orthogonal (origami/Hadamard prefixes).
    pub fn with_orthogonal_rows(mut self) -> Self {
        self.orthogonal_rows = true;
        self
    }
}

impl MeasurementOperator for DenseOperator<'_> {
    fn rows(&self) -> usize {
        self.matrix.rows()
    }

    fn side(&self) -> usize {
        self.side
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.apply(x, out);
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        self.matrix.apply_transpose(y, out);
    }

    fn gram_bound(&self) -> Option<f64> {
        self.orthogonal_rows.then_some(self.cols() as f64)
    }
}

/// Fast-transform operator: each selected pattern is identified by its
/// (row-function, column-function) Sylvester index pair.
pub struct WalshOperator {
    side: usize,
    index_pairs: Vec<(usize, usize)>,
}

impl WalshOperator {
    /// Detects whether every pattern is a separable Sylvester outer
    /// product; returns None (caller falls back to dense) otherwise.
    pub fn from_patterns(patterns: &[Pattern]) -> Option<WalshOperator> {
        let side = patterns.first()?.side();
        let mut index_pairs = Vec::with_capacity(patterns.len());
        for pat in patterns {
            if pat.side() != side || pat.get(0, 0) != 1 {
                return None;
            }
            let col0: Vec<i8> = (0..side).map(|r| pat.get(r, 0)).collect();
            let row0: Vec<i8> = (0..side).map(|c| pat.get(0, c)).collect();
            for (r, &ur) in col0.iter().enumerate() {
                for (c, &vc) in row0.iter().enumerate() {
                    if pat.get(r, c) != ur * vc {
                        return None;
                    }
                }
            }
            index_pairs.push((sylvester_index(&col0)?, sylvester_index(&row0)?));
        }
        Some(WalshOperator { side, index_pairs })
    }

    pub fn index_pairs(&self) -> &[(usize, usize)] {
        &self.index_pairs
    }
}

impl MeasurementOperator for WalshOperator {
    fn rows(&self) -> usize {
        self.index_pairs.len()
    }

    fn side(&self) -> usize {
        self.side
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut buf = x.to_vec();
        fwht_2d(&mut buf, self.side);
        for (o, &(a, b)) in out.iter_mut().zip(&self.index_pairs) {
            *o = buf[a * self.side + b];
        }
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&yk, &(a, b)) in y.iter().zip(&self.index_pairs) {
            out[a * self.side + b] += yk;
        }
        fwht_2d(out, self.side);
    }

    fn gram_bound(&self) -> Option<f64> {
        // rows of an orthogonal design: A Aᵀ = n I exactly
        Some(self.cols() as f64)
    }
}
