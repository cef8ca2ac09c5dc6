//! Coordinate-list operators for generator sets and derivation values.
//!
//! Standard generators are matrix units and their commutators with a dense
//! operator touch one row and one column, so storing them densely would cost
//! `n^2` per generator for nothing.

use nalgebra::DMatrix;

use crate::operators::{BandOperator, C64};
use crate::space::Point;

/// Entries sorted by `(row, col)`, without duplicates or zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(Point, Point, C64)>,
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

impl SparseOp {
    pub fn from_entries(dim: usize, mut entries: Vec<(Point, Point, C64)>) -> Self {
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(Point, Point, C64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != ZERO);
        SparseOp { dim, entries: merged }
    }

    pub fn zeros(dim: usize) -> Self {
        SparseOp {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn unit(dim: usize, x: Point, y: Point) -> Self {
        SparseOp {
            dim,
            entries: vec![(x, y, C64::new(1.0, 0.0))],
        }
    }

    pub fn from_band(a: &BandOperator) -> Self {
        SparseOp {
            dim: a.dim(),
            entries: a.nonzeros().collect(),
        }
    }

    pub fn to_band(&self) -> BandOperator {
        let mut out = BandOperator::zeros(self.dim);
        for &(i, j, v) in &self.entries {
            out.set(i, j, v);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(Point, Point, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|&(i, j, _)| i == j)
    }

    pub fn frobenius(&self) -> f64 {
        // an empty float sum is -0.0
        self.entries.iter().fold(0.0, |acc, e| acc + e.2.norm_sqr()).sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        SparseOp::from_entries(self.dim, self.entries.iter().map(|&(i, j, v)| (i, j, v * s)).collect())
    }

    pub fn add(&self, other: &SparseOp) -> Self {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        SparseOp::from_entries(self.dim, entries)
    }

    pub fn sub(&self, other: &SparseOp) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    fn row(&self, i: Point) -> &[(Point, Point, C64)] {
        let start = self.entries.partition_point(|e| e.0 < i);
        let end = self.entries.partition_point(|e| e.0 <= i);
        &self.entries[start..end]
    }

    pub fn mul(&self, other: &SparseOp) -> Self {
        let mut entries = Vec::new();
        for &(i, j, v) in &self.entries {
            for &(_, l, w) in other.row(j) {
                entries.push((i, l, v * w));
            }
        }
        SparseOp::from_entries(self.dim, entries)
    }

    /// `Σ conj(self_xy) other_xy`.
    pub fn dot(&self, other: &SparseOp) -> C64 {
        let (mut p, mut q) = (0, 0);
        let mut acc = ZERO;
        while p < self.entries.len() && q < other.entries.len() {
            let (a, b) = (&self.entries[p], &other.entries[q]);
            match (a.0, a.1).cmp(&(b.0, b.1)) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.2.conj() * b.2;
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    }

    /// `self · b − b · self` for a dense `b`.
    pub fn commutator_with(&self, b: &DMatrix<C64>) -> Self {
        let n = self.dim;
        let mut entries = Vec::with_capacity(2 * n * self.entries.len());
        for &(i, j, v) in &self.entries {
            for l in 0..n {
                let w = v * b[(j, l)];
                if w != ZERO {
                    entries.push((i, l, w));
                }
            }
            for r in 0..n {
                let w = b[(r, i)] * v;
                if w != ZERO {
                    entries.push((r, j, -w));
                }
            }
        }
        SparseOp::from_entries(n, entries)
    }
}
