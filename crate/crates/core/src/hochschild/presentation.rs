//! Derivations given by their values on a generating set.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{probes, HochschildError, SparseOp};
use crate::operators::{BandOperator, DenseOperatorDoc, Triplet, C64};

/// Generator sets above this size are too large for the dense Gram matrix
/// behind the linear extension.
pub const MAX_EXTENSION_GENERATORS: usize = 512;
/// Windows up to this size may certify a scalar commutant by a dense
/// eigen-decomposition when the structural test does not apply.
pub const DENSE_COMMUTANT_LIMIT: usize = 16;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `d(g_i) = values[i]` for a list of generators.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationPresentation {
    dim: usize,
    generators: Vec<SparseOp>,
    values: Vec<SparseOp>,
}

impl DerivationPresentation {
    pub fn new(generators: Vec<SparseOp>, values: Vec<SparseOp>) -> Result<Self, HochschildError> {
        let dim = generators
            .first()
            .map(SparseOp::dim)
            .ok_or_else(|| HochschildError::InvalidArgument("no generators".into()))?;
        if generators.len() != values.len() {
            return Err(HochschildError::InvalidArgument(format!(
                "{} generators but {} values",
                generators.len(),
                values.len()
            )));
        }
        if generators.iter().chain(&values).any(|g| g.dim() != dim) {
            return Err(HochschildError::InvalidArgument("operators of different sizes".into()));
        }
        Ok(DerivationPresentation {
            dim,
            generators,
            values,
        })
    }

    pub fn from_operators(generators: &[BandOperator], values: &[BandOperator]) -> Result<Self, HochschildError> {
        DerivationPresentation::new(
            generators.iter().map(SparseOp::from_band).collect(),
            values.iter().map(SparseOp::from_band).collect(),
        )
    }

    /// `d(a) = [a, b]`.
    pub fn inner(generators: Vec<SparseOp>, b: &BandOperator) -> Result<Self, HochschildError> {
        let values = generators
            .par_iter()
            .map(|g| g.commutator_with(b.matrix()))
            .collect();
        DerivationPresentation::new(generators, values)
    }

    pub fn zero(generators: Vec<SparseOp>) -> Result<Self, HochschildError> {
        let values = generators.iter().map(|g| SparseOp::zeros(g.dim())).collect();
        DerivationPresentation::new(generators, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[SparseOp] {
        &self.generators
    }

    pub fn values(&self) -> &[SparseOp] {
        &self.values
    }

    /// Sum of two presentations on the same generators.
    pub fn add(&self, other: &DerivationPresentation) -> Result<Self, HochschildError> {
        if self.generators != other.generators {
            return Err(HochschildError::InvalidArgument("presentations use different generators".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.add(b)).collect();
        DerivationPresentation::new(self.generators.clone(), values)
    }

    /// Replaces the value on generator `i`.
    pub fn with_value(mut self, i: usize, value: SparseOp) -> Result<Self, HochschildError> {
        if i >= self.values.len() || value.dim() != self.dim {
            return Err(HochschildError::InvalidArgument(format!("no generator {i} of size {}", value.dim())));
        }
        self.values[i] = value;
        Ok(self)
    }

    pub fn to_doc(&self) -> PresentationDoc {
        let doc = |s: &SparseOp| {
            OperatorDoc::Sparse(SparseOperatorDoc {
                dim: s.dim(),
                entries: s
                    .entries()
                    .iter()
                    .map(|&(row, col, v)| Triplet {
                        row,
                        col,
                        re: v.re,
                        im: v.im,
                    })
                    .collect(),
            })
        };
        PresentationDoc {
            generators: self.generators.iter().map(doc).collect(),
            values: self.values.iter().map(doc).collect(),
        }
    }

    pub fn from_doc(doc: &PresentationDoc) -> Result<Self, HochschildError> {
        let convert = |d: &OperatorDoc| -> Result<SparseOp, HochschildError> {
            match d {
                OperatorDoc::Dense(dense) => Ok(SparseOp::from_band(&BandOperator::from_doc(dense)?)),
                OperatorDoc::Sparse(s) => {
                    if let Some(t) = s.entries.iter().find(|t| t.row >= s.dim || t.col >= s.dim) {
                        return Err(HochschildError::InvalidArgument(format!(
                            "entry ({}, {}) outside a {}x{} operator",
                            t.row, t.col, s.dim, s.dim
                        )));
                    }
                    if s.entries.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
                        return Err(HochschildError::InvalidArgument("non-finite entry".into()));
                    }
                    Ok(SparseOp::from_entries(
                        s.dim,
                        s.entries.iter().map(|t| (t.row, t.col, C64::new(t.re, t.im))).collect(),
                    ))
                }
            }
        };
        DerivationPresentation::new(
            doc.generators.iter().map(convert).collect::<Result<_, _>>()?,
            doc.values.iter().map(convert).collect::<Result<_, _>>()?,
        )
    }
}

/// `{ "dim": n, "entries": [{ "row", "col", "re", "im" }, …] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseOperatorDoc {
    pub dim: usize,
    pub entries: Vec<Triplet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorDoc {
    Dense(DenseOperatorDoc),
    Sparse(SparseOperatorDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationDoc {
    pub generators: Vec<OperatorDoc>,
    pub values: Vec<OperatorDoc>,
}

/// Diagonal units followed by the star `E_{0y}`, `E_{y0}` around point 0.
///
/// The diagonal units separate points and the star connects them, so the
/// generated algebra is the full matrix algebra, with a short diameter that
/// keeps the inner solver well conditioned.
pub fn standard_generators(n: usize) -> Vec<SparseOp> {
    let mut out: Vec<SparseOp> = (0..n).map(|x| SparseOp::unit(n, x, x)).collect();
    for y in 1..n {
        out.push(SparseOp::unit(n, 0, y));
        out.push(SparseOp::unit(n, y, 0));
    }
    out
}

/// Every matrix unit `E_xy`, row-major.
pub fn matrix_unit_basis(n: usize) -> Vec<SparseOp> {
    (0..n)
        .flat_map(|x| (0..n).map(move |y| SparseOp::unit(n, x, y)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeibnizConfig {
    /// Pairs checked when there are more generator pairs than this.
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LeibnizConfig {
    fn default() -> Self {
        LeibnizConfig {
            samples: 4096,
            tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeibnizReport {
    /// Largest `‖d(ab) − d(a)b − a d(b)‖` (Frobenius) over checked pairs.
    pub max_residual: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub checked: usize,
    /// Pairs whose product is outside the span of the generators.
    pub skipped: usize,
    pub tol: f64,
    pub holds: bool,
}

struct LinearExtension {
    /// Pseudo-inverse of the Gram matrix.
    gram_pinv: DMatrix<C64>,
}

impl LinearExtension {
    fn new(d: &DerivationPresentation, tol: f64) -> Result<Self, HochschildError> {
        let g = d.generators();
        let n = g.len();
        if n > MAX_EXTENSION_GENERATORS {
            return Err(HochschildError::InvalidArgument(format!(
                "{n} generators exceed the extension limit {MAX_EXTENSION_GENERATORS}"
            )));
        }
        let gram = DMatrix::from_fn(n, n, |i, j| g[i].dot(&g[j]));
        let eig = gram.symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let cut = 1e-12 * top.max(f64::MIN_POSITIVE);
        let scale = d.values().iter().map(SparseOp::frobenius).fold(1.0, f64::max);
        let mut pinv = DMatrix::from_element(n, n, ZERO);
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            if lambda > cut {
                pinv += (&v * v.adjoint()) * C64::new(1.0 / lambda, 0.0);
            } else {
                // a relation Σ v_i g_i = 0 must be respected by the values
                let image = combine(d.values(), v.iter().copied(), d.dim());
                let residual = image.frobenius();
                if residual > tol * scale {
                    return Err(HochschildError::PresentationInconsistent { residual });
                }
            }
        }
        Ok(LinearExtension { gram_pinv: pinv })
    }

    /// Coefficients of the orthogonal projection of `p` onto the span.
    fn coefficients(&self, d: &DerivationPresentation, p: &SparseOp) -> Vec<C64> {
        let rhs = nalgebra::DVector::from_iterator(d.len(), d.generators().iter().map(|g| g.dot(p)));
        (&self.gram_pinv * rhs).iter().copied().collect()
    }
}

fn combine<'a>(ops: &'a [SparseOp], coeffs: impl Iterator<Item = C64>, dim: usize) -> SparseOp {
    let mut entries = Vec::new();
    for (op, c) in ops.iter().zip(coeffs) {
        if c.norm() > 1e-15 {
            entries.extend(op.entries().iter().map(|&(i, j, v)| (i, j, v * c)));
        }
    }
    SparseOp::from_entries(dim, entries)
}

/// Checks `d(ab) = d(a)b + a d(b)` on generator pairs, reading `d(ab)` off
/// the linear extension of the presentation.
pub fn leibniz_check(d: &DerivationPresentation, cfg: &LeibnizConfig) -> Result<LeibnizReport, HochschildError> {
    let ext = LinearExtension::new(d, cfg.tol)?;
    let count = d.len();
    let pairs: Vec<(usize, usize)> = if count * count <= cfg.samples {
        (0..count).flat_map(|i| (0..count).map(move |j| (i, j))).collect()
    } else {
        let mut rng = probes::rng(cfg.seed, 0);
        (0..cfg.samples)
            .map(|_| (rng.random_range(0..count), rng.random_range(0..count)))
            .collect()
    };
    let g = d.generators();
    let v = d.values();
    let outcomes: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let p = g[i].mul(&g[j]);
            let dp = if p.is_zero() {
                SparseOp::zeros(d.dim())
            } else {
                let c = ext.coefficients(d, &p);
                let projection = combine(g, c.iter().copied(), d.dim());
                if p.sub(&projection).frobenius() > 1e-9 * p.frobenius() {
                    return None;
                }
                combine(v, c.into_iter(), d.dim())
            };
            let leibniz = v[i].mul(&g[j]).add(&g[i].mul(&v[j]));
            Some(dp.sub(&leibniz).frobenius())
        })
        .collect();
    let mut report = LeibnizReport {
        max_residual: 0.0,
        worst_pair: None,
        checked: 0,
        skipped: 0,
        tol: cfg.tol,
        holds: true,
    };
    for (pair, outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            None => report.skipped += 1,
            Some(r) => {
                report.checked += 1;
                if report.worst_pair.is_none() || r > report.max_residual {
                    report.max_residual = r;
                    report.worst_pair = Some(*pair);
                }
            }
        }
    }
    report.holds = report.max_residual <= cfg.tol;
    Ok(report)
}

/// Dimension of `{m : [g, m] = 0 for every generator}`.
///
/// When the diagonal generators separate and cover the points and the
/// off-diagonal supports form a strongly connected graph, the generators
/// produce every matrix unit and the answer is 1 without any arithmetic.
/// Otherwise small windows fall back to the kernel of the dense normal
/// operator.
pub fn commutant_dimension(generators: &[SparseOp], dim: usize) -> Result<usize, HochschildError> {
    if generates_full_algebra(generators, dim) {
        return Ok(1);
    }
    if dim > DENSE_COMMUTANT_LIMIT {
        return Err(HochschildError::UnderdeterminedGenerators(format!(
            "cannot certify a scalar commutant for {dim} points: diagonal generators must separate \
             points and the support graph must be strongly connected"
        )));
    }
    let gens: Vec<Gen> = generators.iter().map(Gen::new).collect();
    let n2 = dim * dim;
    let mut t = DMatrix::from_element(n2, n2, ZERO);
    for q in 0..dim {
        for p in 0..dim {
            let mut e = DMatrix::from_element(dim, dim, ZERO);
            e[(p, q)] = C64::new(1.0, 0.0);
            let image = normal_operator(&gens, &e);
            t.set_column(p + q * dim, &nalgebra::DVector::from_column_slice(image.as_slice()));
        }
    }
    let eig = t.symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cut = 1e-10 * top.max(1.0);
    Ok(eig.eigenvalues.iter().filter(|&&l| l <= cut).count())
}

fn generates_full_algebra(generators: &[SparseOp], dim: usize) -> bool {
    if dim == 0 {
        return false;
    }
    let mut class = vec![0usize; dim];
    let mut covered = vec![false; dim];
    for g in generators.iter().filter(|g| g.is_diagonal()) {
        let mut value = vec![ZERO; dim];
        for &(x, _, v) in g.entries() {
            value[x] = v;
            covered[x] = true;
        }
        let mut ids: HashMap<(usize, u64, u64), usize> = HashMap::new();
        for x in 0..dim {
            let key = (class[x], value[x].re.to_bits(), value[x].im.to_bits());
            let next = ids.len();
            class[x] = *ids.entry(key).or_insert(next);
        }
    }
    let mut seen = vec![false; dim];
    if !class.iter().all(|&c| !std::mem::replace(&mut seen[c], true)) || !covered.iter().all(|&c| c) {
        return false;
    }
    let mut forward = vec![Vec::new(); dim];
    let mut backward = vec![Vec::new(); dim];
    for g in generators {
        for &(x, y, _) in g.entries() {
            if x != y {
                forward[x].push(y);
                backward[y].push(x);
            }
        }
    }
    reaches_all(&forward) && reaches_all(&backward)
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// A generator prepared for the normal operator `Σ ad_g* ad_g`.
struct Gen {
    entries: Vec<(usize, usize, C64)>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl Gen {
    fn new(g: &SparseOp) -> Self {
        let mut rows: Vec<usize> = g.entries().iter().map(|e| e.0).collect();
        let mut cols: Vec<usize> = g.entries().iter().map(|e| e.1).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        Gen {
            entries: g.entries().to_vec(),
            rows,
            cols,
        }
    }

    /// `out += ad_g*(ad_g(b))` with `ad_g(b) = gb − bg` and `ad_g* = ad_{g*}`.
    fn accumulate(&self, b: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = b.nrows();
        // rows of gb on self.rows, columns of bg on self.cols
        let mut gb = vec![ZERO; self.rows.len() * n];
        let mut bg = vec![ZERO; self.cols.len() * n];
        for &(i, j, v) in &self.entries {
            let ri = self.rows.binary_search(&i).unwrap();
            let cj = self.cols.binary_search(&j).unwrap();
            for l in 0..n {
                gb[ri * n + l] += v * b[(j, l)];
                bg[cj * n + l] += b[(l, i)] * v;
            }
        }
        for &(i, j, v) in &self.entries {
            let cv = v.conj();
            // (g* R)[j, :] += conj(v) R[i, :]
            if let Ok(ri) = self.rows.binary_search(&i) {
                for l in 0..n {
                    out[(j, l)] += cv * gb[ri * n + l];
                }
            }
            for (cj, &c) in self.cols.iter().enumerate() {
                out[(j, c)] -= cv * bg[cj * n + i];
            }
            // (R g*)[:, i] += R[:, j] conj(v), subtracted
            for (ri, &r) in self.rows.iter().enumerate() {
                out[(r, i)] -= gb[ri * n + j] * cv;
            }
            if let Ok(cj) = self.cols.binary_search(&j) {
                for r in 0..n {
                    out[(r, i)] += bg[cj * n + r] * cv;
                }
            }
        }
    }

    /// `out += g* D − D g*` for a sparse `D`.
    fn accumulate_adjoint(&self, d: &SparseOp, out: &mut DMatrix<C64>) {
        let mut by_row: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
        let mut by_col: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
        for &(i, j, v) in &self.entries {
            by_row.entry(i).or_default().push((j, v));
            by_col.entry(j).or_default().push((i, v));
        }
        for &(k, l, w) in d.entries() {
            // (g* D)[j, l] += conj(g_kj) D_kl
            if let Some(list) = by_row.get(&k) {
                for &(j, v) in list {
                    out[(j, l)] += v.conj() * w;
                }
            }
            // (D g*)[k, i] += D_kl conj(g_il)
            if let Some(list) = by_col.get(&l) {
                for &(i, v) in list {
                    out[(k, i)] -= w * v.conj();
                }
            }
        }
    }
}

const GEN_CHUNK: usize = 64;

/// `Σ_g ad_g*(ad_g(b))`, summed chunk by chunk in a fixed order.
fn normal_operator(gens: &[Gen], b: &DMatrix<C64>) -> DMatrix<C64> {
    let n = b.nrows();
    let parts: Vec<DMatrix<C64>> = gens
        .par_chunks(GEN_CHUNK)
        .map(|chunk| {
            let mut acc = DMatrix::from_element(n, n, ZERO);
            for g in chunk {
                g.accumulate(b, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = DMatrix::from_element(n, n, ZERO);
    for p in &parts {
        total += p;
    }
    total
}

/// Diagonal of the normal operator in the matrix-unit basis:
/// `Σ_g ‖g_{·p}‖² + ‖g_{q·}‖² − 2 Re(conj(g_pp) g_qq)`.
fn normal_diagonal(gens: &[Gen], n: usize) -> DMatrix<f64> {
    let mut col_sq = vec![0.0; n];
    let mut row_sq = vec![0.0; n];
    let mut out = DMatrix::from_element(n, n, 0.0);
    for g in gens {
        let mut diag = Vec::new();
        for &(i, j, v) in &g.entries {
            col_sq[j] += v.norm_sqr();
            row_sq[i] += v.norm_sqr();
            if i == j {
                diag.push((i, v));
            }
        }
        for &(p, vp) in &diag {
            for &(q, vq) in &diag {
                out[(p, q)] -= 2.0 * (vp.conj() * vq).re;
            }
        }
    }
    for q in 0..n {
        for p in 0..n {
            out[(p, q)] += col_sq[p] + row_sq[q];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveConfig {
    /// Stop once the normal-equation residual drops below this fraction of
    /// the right-hand side.
    pub rel_tol: f64,
    /// Accept a stalled run whose relative residual is below this.
    pub accept_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rel_tol: 1e-14,
            accept_tol: 1e-9,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerSolution {
    #[serde(skip)]
    pub b: BandOperator,
    /// Largest `‖d(g) − [g, b]‖` in Frobenius norm, an upper bound for the
    /// operator norm.
    pub residual: f64,
    /// Scalar removed to reach the trace-zero gauge.
    #[serde(serialize_with = "crate::operators::serialize_c64")]
    pub removed_scalar: C64,
    /// The commutant of the generators is the scalars, so `b` is unique up
    /// to adding a multiple of the identity; the trace-zero representative is
    /// returned.
    pub gauge: &'static str,
    pub iterations: usize,
}

pub fn solve_inner(d: &DerivationPresentation) -> Result<InnerSolution, HochschildError> {
    solve_inner_with(d, &SolveConfig::default())
}

/// Least-squares `b` with `d(g) = gb − bg` for every generator, by
/// Jacobi-preconditioned conjugate gradients on the normal equations.
pub fn solve_inner_with(d: &DerivationPresentation, cfg: &SolveConfig) -> Result<InnerSolution, HochschildError> {
    let n = d.dim();
    let dimension = commutant_dimension(d.generators(), n)?;
    if dimension != 1 {
        return Err(HochschildError::UnderdeterminedGenerators(format!(
            "the commutant of the generators has dimension {dimension}"
        )));
    }
    let gens: Vec<Gen> = d.generators().iter().map(Gen::new).collect();
    let rhs_parts: Vec<DMatrix<C64>> = gens
        .par_chunks(GEN_CHUNK)
        .zip(d.values().par_chunks(GEN_CHUNK))
        .map(|(gs, vs)| {
            let mut acc = DMatrix::from_element(n, n, ZERO);
            for (g, v) in gs.iter().zip(vs) {
                g.accumulate_adjoint(v, &mut acc);
            }
            acc
        })
        .collect();
    let mut rhs = DMatrix::from_element(n, n, ZERO);
    for p in &rhs_parts {
        rhs += p;
    }

    let rhs_norm = rhs.norm();
    let mut x = DMatrix::from_element(n, n, ZERO);
    let mut iterations = 0;
    if rhs_norm > 0.0 {
        let precond = normal_diagonal(&gens, n).map(|v| if v > 1e-300 { 1.0 / v } else { 1.0 });
        let apply_precond = |r: &DMatrix<C64>| r.zip_map(&precond, |z, m| z * m);
        let inner = |a: &DMatrix<C64>, b: &DMatrix<C64>| a.dotc(b).re;
        let mut r = rhs.clone();
        let mut z = apply_precond(&r);
        let mut p = z.clone();
        let mut rz = inner(&r, &z);
        let mut rel = 1.0;
        while iterations < cfg.max_iterations {
            iterations += 1;
            let ap = normal_operator(&gens, &p);
            let curvature = inner(&p, &ap);
            if curvature <= 0.0 {
                break;
            }
            let alpha = rz / curvature;
            x += &p * C64::new(alpha, 0.0);
            r -= &ap * C64::new(alpha, 0.0);
            rel = r.norm() / rhs_norm;
            if rel <= cfg.rel_tol {
                break;
            }
            z = apply_precond(&r);
            let rz_next = inner(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            p = &z + &p * C64::new(beta, 0.0);
        }
        if rel > cfg.accept_tol {
            return Err(HochschildError::NoConvergence {
                iterations,
                residual: rel,
            });
        }
    }

    let removed_scalar = x.trace() / n as f64;
    for i in 0..n {
        x[(i, i)] -= removed_scalar;
    }
    let residual = d
        .generators()
        .par_iter()
        .zip(d.values())
        .map(|(g, v)| v.sub(&g.commutator_with(&x)).frobenius())
        .reduce(|| 0.0, f64::max);
    Ok(InnerSolution {
        b: BandOperator::from_matrix(x)?,
        residual,
        removed_scalar,
        gauge: "trace-zero",
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hochschild::probes::random_dense;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn two_by_two_commutator_gauge() {
        let b = BandOperator::diagonal(&[c(0.0), c(1.0)]);
        let d = DerivationPresentation::inner(matrix_unit_basis(2), &b).unwrap();
        let sol = solve_inner(&d).unwrap();
        let expected = BandOperator::diagonal(&[c(-0.5), c(0.5)]);
        assert!((&sol.b - &expected).frobenius() <= 1e-12);
        assert!(sol.residual <= 1e-12);
        assert!((sol.removed_scalar - c(0.5)).norm() < 1e-12 || sol.removed_scalar.norm() < 1e-12);
    }

    #[test]
    fn zero_derivation_gives_zero() {
        let d = DerivationPresentation::zero(standard_generators(6)).unwrap();
        let sol = solve_inner(&d).unwrap();
        assert_eq!(sol.b, BandOperator::zeros(6));
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn random_operator_recovered_up_to_scalar() {
        let n = 12;
        let b = random_dense(n, &mut probes::rng(21, 0));
        let d = DerivationPresentation::inner(standard_generators(n), &b).unwrap();
        let sol = solve_inner(&d).unwrap();
        let diff = &sol.b - &b;
        let lambda = diff.matrix().trace() / n as f64;
        let centred = &diff - &BandOperator::identity(n).scale(lambda);
        assert!(centred.frobenius() <= 1e-8, "{}", centred.frobenius());
        assert!(sol.residual <= 1e-8);
    }

    #[test]
    fn normal_operator_matches_dense_formula() {
        let n = 4;
        let gens: Vec<SparseOp> = (0..3)
            .map(|i| SparseOp::from_band(&random_dense(n, &mut probes::rng(2, i))))
            .collect();
        let b = random_dense(n, &mut probes::rng(9, 0));
        let prepared: Vec<Gen> = gens.iter().map(Gen::new).collect();
        let fast = normal_operator(&prepared, b.matrix());
        let mut slow = DMatrix::from_element(n, n, ZERO);
        for g in &gens {
            let g = g.to_band();
            let r = &(&g * &b) - &(&b * &g);
            let gs = g.adjoint();
            slow += (&(&gs * &r) - &(&r * &gs)).matrix();
        }
        assert!((fast - slow).norm() < 1e-12);

        let diag = normal_diagonal(&prepared, n);
        for p in 0..n {
            for q in 0..n {
                let mut e = DMatrix::from_element(n, n, ZERO);
                e[(p, q)] = c(1.0);
                let t = normal_operator(&prepared, &e);
                assert!((t[(p, q)].re - diag[(p, q)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commutant_detection() {
        assert_eq!(commutant_dimension(&standard_generators(30), 30).unwrap(), 1);
        // diagonal units alone commute with every diagonal matrix
        let diagonal: Vec<SparseOp> = (0..4).map(|x| SparseOp::unit(4, x, x)).collect();
        assert_eq!(commutant_dimension(&diagonal, 4).unwrap(), 4);
        let big: Vec<SparseOp> = (0..20).map(|x| SparseOp::unit(20, x, x)).collect();
        assert!(matches!(
            commutant_dimension(&big, 20),
            Err(HochschildError::UnderdeterminedGenerators(_))
        ));
        let d = DerivationPresentation::zero(diagonal).unwrap();
        assert!(matches!(solve_inner(&d), Err(HochschildError::UnderdeterminedGenerators(_))));
    }

    #[test]
    fn leibniz_on_commutators_and_corruption() {
        let b = random_dense(3, &mut probes::rng(4, 0));
        let d = DerivationPresentation::inner(matrix_unit_basis(3), &b).unwrap();
        let report = leibniz_check(&d, &LeibnizConfig::default()).unwrap();
        assert!(report.holds && report.max_residual <= 1e-14, "{report:?}");
        assert_eq!(report.checked, 81);

        let ones = BandOperator::from_fn(3, |_, _| c(1e-3));
        let bumped = d.values()[0].add(&SparseOp::from_band(&ones));
        let corrupted = d.clone().with_value(0, bumped).unwrap();
        let report = leibniz_check(&corrupted, &LeibnizConfig::default()).unwrap();
        assert!(report.max_residual >= 1e-4);
        assert!(!report.holds);
    }

    #[test]
    fn inconsistent_relations_are_rejected() {
        let e = SparseOp::unit(2, 0, 1);
        let d = DerivationPresentation::new(
            vec![e.clone(), e.clone()],
            vec![SparseOp::zeros(2), SparseOp::unit(2, 0, 0)],
        )
        .unwrap();
        assert!(matches!(
            leibniz_check(&d, &LeibnizConfig::default()),
            Err(HochschildError::PresentationInconsistent { .. })
        ));
    }

    #[test]
    fn doc_round_trip() {
        let b = BandOperator::diagonal(&[c(1.0), c(2.0), c(-1.0)]);
        let d = DerivationPresentation::inner(standard_generators(3), &b).unwrap();
        let json = serde_json::to_string(&d.to_doc()).unwrap();
        let back = DerivationPresentation::from_doc(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, d);
        let dense = r#"{"generators":[{"dim":1,"re":[1.0]}],"values":[{"dim":1,"re":[0.0]}]}"#;
        let d = DerivationPresentation::from_doc(&serde_json::from_str(dense).unwrap()).unwrap();
        assert_eq!(d.len(), 1);
    }
}
