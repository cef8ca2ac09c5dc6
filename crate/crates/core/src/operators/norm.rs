//! Spectral norm of band operators.
//!
//! Rows and columns that share no nonzero entry never interact, so the
//! operator is split into the connected blocks of its row/column incidence
//! graph and the norm is the maximum over blocks. Blocks up to
//! [`NormConfig::dense_limit`] are handled by a dense singular-value
//! decomposition, padded by its backward error so the result is an upper
//! bound; larger blocks fall back to power iteration on `a* a`, which
//! approaches the norm from below.

use nalgebra::DMatrix;

use super::{BandOperator, OperatorError, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConfig {
    pub dense_limit: usize,
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            dense_limit: 1500,
            rel_tol: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

pub fn op_norm(a: &BandOperator) -> Result<f64, OperatorError> {
    op_norm_with(a, &NormConfig::default())
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

struct Block {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

fn blocks(a: &BandOperator) -> Vec<Block> {
    let n = a.dim();
    let mut uf = UnionFind((0..2 * n).collect());
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; n];
    for (x, y, _) in a.nonzeros() {
        uf.union(x, n + y);
        row_used[x] = true;
        col_used[y] = true;
    }
    let mut index_of_root = vec![usize::MAX; 2 * n];
    let mut out: Vec<Block> = Vec::new();
    for node in 0..2 * n {
        let used = if node < n { row_used[node] } else { col_used[node - n] };
        if !used {
            continue;
        }
        let root = uf.find(node);
        if index_of_root[root] == usize::MAX {
            index_of_root[root] = out.len();
            out.push(Block {
                rows: Vec::new(),
                cols: Vec::new(),
            });
        }
        let block = &mut out[index_of_root[root]];
        if node < n {
            block.rows.push(node);
        } else {
            block.cols.push(node - n);
        }
    }
    out
}

pub fn op_norm_with(a: &BandOperator, cfg: &NormConfig) -> Result<f64, OperatorError> {
    let mut best = 0.0f64;
    for block in blocks(a) {
        let value = if block.rows.len() == 1 && block.cols.len() == 1 {
            a.get(block.rows[0], block.cols[0]).norm()
        } else if block.rows.len().max(block.cols.len()) <= cfg.dense_limit {
            dense_block_norm(a, &block)
        } else {
            power_block_norm(a, &block, cfg)?
        };
        best = best.max(value);
    }
    Ok(best)
}

fn dense_block_norm(a: &BandOperator, block: &Block) -> f64 {
    let (r, c) = (block.rows.len(), block.cols.len());
    let real = block
        .rows
        .iter()
        .all(|&x| block.cols.iter().all(|&y| a.get(x, y).im == 0.0));
    // the computed singular values carry a relative error of order n·ε
    let pad = 1.0 + 8.0 * f64::EPSILON * r.max(c) as f64;
    let max = |sv: &nalgebra::DVector<f64>| sv.iter().copied().fold(0.0, f64::max) * pad;
    if real {
        let m = DMatrix::from_fn(r, c, |i, j| a.get(block.rows[i], block.cols[j]).re);
        max(&m.singular_values())
    } else {
        let m = DMatrix::from_fn(r, c, |i, j| a.get(block.rows[i], block.cols[j]));
        max(&m.singular_values())
    }
}

fn power_block_norm(
    a: &BandOperator,
    block: &Block,
    cfg: &NormConfig,
) -> Result<f64, OperatorError> {
    let mut triplets = Vec::new();
    for (i, &x) in block.rows.iter().enumerate() {
        for (j, &y) in block.cols.iter().enumerate() {
            let v = a.get(x, y);
            if v != C64::new(0.0, 0.0) {
                triplets.push((i, j, v));
            }
        }
    }
    let (r, c) = (block.rows.len(), block.cols.len());
    // deterministic, generic start vector
    let mut v: Vec<C64> = (0..c)
        .map(|j| C64::new(1.0 + ((j as f64) * 0.618_033_988_75).fract(), 0.0))
        .collect();
    normalize(&mut v);
    let mut w = vec![C64::new(0.0, 0.0); r];
    let mut previous = 0.0;
    for _ in 0..cfg.max_sweeps {
        w.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for &(i, j, val) in &triplets {
            w[i] += val * v[j];
        }
        let sigma = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if sigma == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for &(i, j, val) in &triplets {
            v[j] += val.conj() * w[i];
        }
        normalize(&mut v);
        if (sigma - previous).abs() <= cfg.rel_tol * sigma {
            return Ok(sigma);
        }
        previous = sigma;
    }
    Err(OperatorError::NoConvergence {
        sweeps: cfg.max_sweeps,
    })
}

fn normalize(v: &mut [C64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(op_norm(&BandOperator::identity(7)).unwrap(), 1.0);
        assert_eq!(op_norm(&BandOperator::matrix_unit(5, 1, 3)).unwrap(), 1.0);
        let a = BandOperator::from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(op_norm(&a).unwrap(), 2.0);
        assert_eq!(op_norm(&BandOperator::zeros(4)).unwrap(), 0.0);
    }

    #[test]
    fn blocks_split_disjoint_supports() {
        // two separate 2x2 blocks with norms 3 and 5
        let mut a = BandOperator::zeros(4);
        a.set(0, 1, c(3.0));
        a.set(2, 2, c(3.0));
        a.set(2, 3, c(4.0));
        let expected = 5.0;
        assert!((op_norm(&a).unwrap() - expected).abs() < 1e-12);
        assert_eq!(blocks(&a).len(), 2);
    }

    #[test]
    fn complex_entries() {
        let mut a = BandOperator::zeros(2);
        a.set(0, 0, C64::new(0.0, 1.0));
        a.set(1, 1, C64::new(3.0, 4.0));
        a.set(0, 1, C64::new(0.0, 0.0));
        assert!((op_norm(&a).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_dense() {
        let n = 40;
        let a = BandOperator::from_fn(n, |x, y| {
            if x.abs_diff(y) <= 2 {
                C64::new(1.0 + (x as f64 * 0.37).sin(), (y as f64 * 0.11).cos())
            } else {
                c(0.0)
            }
        });
        let dense = op_norm(&a).unwrap();
        let cfg = NormConfig {
            dense_limit: 4,
            ..NormConfig::default()
        };
        let power = op_norm_with(&a, &cfg).unwrap();
        assert!((dense - power).abs() <= 1e-6 * dense, "{dense} vs {power}");
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        let n = 30;
        let a = BandOperator::from_fn(n, |x, y| c(if x.abs_diff(y) == 1 { 1.0 } else { 0.0 }));
        let cfg = NormConfig {
            dense_limit: 2,
            rel_tol: 1e-16,
            max_sweeps: 3,
        };
        assert_eq!(
            op_norm_with(&a, &cfg),
            Err(OperatorError::NoConvergence { sweeps: 3 })
        );
    }
}
