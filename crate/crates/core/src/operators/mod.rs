//! Band (finite-propagation) operators on `l²` of a window.
//!
//! A [`BandOperator`] is a dense complex matrix indexed by window points. Its
//! band structure is always measured against a [`DistanceSource`]: the window
//! metric for operators on one copy, or the cross table of a
//! [`DoubledMetric`] for operators between the two copies of `X ⊔ X`.

mod averaging;
mod io;
mod norm;

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::doubled::{DoubledMetric, ExpandingSequence};
use crate::space::{DistanceSource, GrowthProfile, Point};

pub use averaging::{diagonal_average, diagonal_average_exhaustive, MAX_EXHAUSTIVE_POINTS};
pub use io::{DenseOperatorDoc, Triplet};
pub use norm::{op_norm, op_norm_with, NormConfig};

pub use nalgebra::Complex;

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;

/// Serializes a complex number as `[re, im]`.
pub fn serialize_c64<S: serde::Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&[c.re, c.im], s)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator has a non-finite entry")]
    NonFinite,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("power iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("operator has propagation {propagation}, above the requested {r}")]
    PropagationExceeded { propagation: f64, r: f64 },
    #[error("growth profile has no entry for radius {r}")]
    MissingGrowth { r: f64 },
    #[error("index {n} is outside the sequence horizon 1..={horizon}")]
    IndexOutOfHorizon { n: usize, horizon: usize },
    #[error("exhaustive sign averaging is limited to {limit} points, window has {n}")]
    WindowTooLargeForExhaustive { n: usize, limit: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed operator document: {0}")]
    Malformed(String),
}

/// Which pair of copies of `X ⊔ X` an operator connects.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `l²(X) -> l²(X)`.
    #[default]
    SameCopy,
    /// `l²(X') -> l²(X)`, measured by `ρ(x, y')`.
    Cross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandOperator {
    entries: DMatrix<C64>,
    coupling: Coupling,
}

impl BandOperator {
    pub fn from_matrix(entries: DMatrix<C64>) -> Result<Self, OperatorError> {
        if !entries.is_square() {
            return Err(OperatorError::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        Ok(BandOperator {
            entries,
            coupling: Coupling::SameCopy,
        })
    }

    /// Builds an `n x n` operator entrywise.
    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        BandOperator {
            entries: DMatrix::from_fn(n, n, f),
            coupling: Coupling::SameCopy,
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, OperatorError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(OperatorError::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        BandOperator::from_matrix(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn zeros(n: usize) -> Self {
        BandOperator::from_fn(n, |_, _| C64::new(0.0, 0.0))
    }

    pub fn identity(n: usize) -> Self {
        BandOperator {
            entries: DMatrix::identity(n, n),
            coupling: Coupling::SameCopy,
        }
    }

    /// Multiplication operator by `values`.
    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        let mut entries = DMatrix::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            entries[(i, i)] = *v;
        }
        BandOperator {
            entries,
            coupling: Coupling::SameCopy,
        }
    }

    /// `e_x e_y^*`.
    pub fn matrix_unit(n: usize, x: Point, y: Point) -> Self {
        let mut op = BandOperator::zeros(n);
        op.entries[(x, y)] = C64::new(1.0, 0.0);
        op
    }

    /// The same matrix, read as an operator between the two copies.
    pub fn as_cross(mut self) -> Self {
        self.coupling = Coupling::Cross;
        self
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    #[inline]
    pub fn get(&self, x: Point, y: Point) -> C64 {
        self.entries[(x, y)]
    }

    pub fn set(&mut self, x: Point, y: Point, value: C64) {
        self.entries[(x, y)] = value;
    }

    pub fn adjoint(&self) -> Self {
        BandOperator {
            entries: self.entries.adjoint(),
            coupling: self.coupling,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        BandOperator {
            entries: &self.entries * s,
            coupling: self.coupling,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.nonzeros().all(|(x, y, _)| x == y)
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    pub fn diagonal_values(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.entries[(i, i)]).collect()
    }

    /// `sup_{x,y} |a_xy|`.
    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Nonzero entries in row-major order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (Point, Point, C64)> + '_ {
        let n = self.dim();
        (0..n).flat_map(move |x| {
            (0..n).filter_map(move |y| {
                let v = self.entries[(x, y)];
                (v != C64::new(0.0, 0.0)).then_some((x, y, v))
            })
        })
    }

    pub fn nnz(&self) -> usize {
        self.nonzeros().count()
    }

    /// Compresses `self` to rows and columns in `keep`, zeroing the rest.
    pub fn compress(&self, rows: &[bool], cols: &[bool]) -> Self {
        let mut out = self.clone();
        for x in 0..self.dim() {
            for y in 0..self.dim() {
                if !(rows[x] && cols[y]) {
                    out.entries[(x, y)] = C64::new(0.0, 0.0);
                }
            }
        }
        out
    }

    pub fn try_mul(&self, other: &BandOperator) -> Result<BandOperator, OperatorError> {
        same_dim(self, other)?;
        Ok(BandOperator {
            entries: &self.entries * &other.entries,
            coupling: self.coupling,
        })
    }
}

fn same_dim(a: &BandOperator, b: &BandOperator) -> Result<(), OperatorError> {
    if a.dim() != b.dim() {
        return Err(OperatorError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

impl Add for &BandOperator {
    type Output = BandOperator;

    fn add(self, rhs: &BandOperator) -> BandOperator {
        BandOperator {
            entries: &self.entries + &rhs.entries,
            coupling: self.coupling,
        }
    }
}

impl Sub for &BandOperator {
    type Output = BandOperator;

    fn sub(self, rhs: &BandOperator) -> BandOperator {
        BandOperator {
            entries: &self.entries - &rhs.entries,
            coupling: self.coupling,
        }
    }
}

impl Mul for &BandOperator {
    type Output = BandOperator;

    fn mul(self, rhs: &BandOperator) -> BandOperator {
        BandOperator {
            entries: &self.entries * &rhs.entries,
            coupling: self.coupling,
        }
    }
}

/// Largest distance over nonzero entries; `0` for the zero operator.
pub fn propagation<D: DistanceSource + ?Sized>(a: &BandOperator, metric: &D) -> f64 {
    a.nonzeros()
        .map(|(x, y, _)| metric.distance(x, y))
        .fold(0.0, f64::max)
}

/// Zeroes every entry at distance `> r`.
pub fn truncate_to_propagation<D: DistanceSource + ?Sized>(
    a: &BandOperator,
    metric: &D,
    r: f64,
) -> BandOperator {
    let mut out = a.clone();
    let n = a.dim();
    for x in 0..n {
        for y in 0..n {
            if metric.distance(x, y) > r {
                out.entries[(x, y)] = C64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// Certified sandwich for the distance from an operator to the band of
/// propagation `<= r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipProfile {
    pub radii: Vec<f64>,
    /// `min_{r' <= r} ‖a - truncate_{r'}(a)‖`: every truncation at a smaller
    /// radius is itself an admissible witness.
    pub upper: Vec<f64>,
    /// `max |a_xy|` over entries outside the band.
    pub lower: Vec<f64>,
}

impl MembershipProfile {
    pub fn is_sound(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| l <= u)
    }

    /// Largest radius whose upper value exceeds `tol`, if any.
    pub fn last_above(&self, tol: f64) -> Option<f64> {
        self.radii
            .iter()
            .zip(&self.upper)
            .filter(|(_, &u)| u > tol)
            .map(|(&r, _)| r)
            .last()
    }

    /// `(lower, upper)` at the largest sampled radius `<= r`.
    pub fn at(&self, r: f64) -> Option<(f64, f64)> {
        let i = self.radii.partition_point(|&s| s <= r).checked_sub(1)?;
        Some((self.lower[i], self.upper[i]))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "lower", "upper"])?;
        for ((r, l), u) in self.radii.iter().zip(&self.lower).zip(&self.upper) {
            w.write_record([r.to_string(), l.to_string(), u.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `0, 1, 2, 4, …` below `max`, then `max` itself.
pub fn dyadic_radii(max: f64) -> Vec<f64> {
    let mut radii = vec![0.0];
    let mut r = 1.0;
    while r < max {
        radii.push(r);
        r *= 2.0;
    }
    if max > 0.0 {
        radii.push(max);
    }
    radii
}

/// Band profile against an arbitrary distance source. Radii are sorted.
pub fn band_profile<D: DistanceSource + Sync + ?Sized>(
    a: &BandOperator,
    metric: &D,
    radii: &[f64],
) -> Result<MembershipProfile, OperatorError> {
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let pointwise: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let tail = a - &truncate_to_propagation(a, metric, r);
            let lower = tail.max_abs_entry();
            let upper = if lower == 0.0 { 0.0 } else { op_norm(&tail)? };
            Ok((lower, upper))
        })
        .collect::<Result<_, OperatorError>>()?;
    let lower = pointwise.iter().map(|p| p.0).collect();
    let mut best = f64::INFINITY;
    let upper = pointwise
        .iter()
        .map(|p| {
            best = best.min(p.1);
            best
        })
        .collect();
    Ok(MembershipProfile {
        radii,
        upper,
        lower,
    })
}

/// Profile of `a` read as a cross-operator, i.e. banded by `ρ(x, y')`.
pub fn membership_profile(
    a: &BandOperator,
    m: &DoubledMetric,
    radii: &[f64],
) -> Result<MembershipProfile, OperatorError> {
    if a.dim() != m.len() {
        return Err(OperatorError::DimensionMismatch {
            left: a.dim(),
            right: m.len(),
        });
    }
    band_profile(a, &m.cross_view(), radii)
}

/// `(diagonal part, off-diagonal part)`; they sum to `b` exactly.
pub fn diagonal_split(b: &BandOperator) -> (BandOperator, BandOperator) {
    let mut b0 = BandOperator::zeros(b.dim());
    b0.coupling = b.coupling;
    let mut b1 = b.clone();
    for i in 0..b.dim() {
        b0.entries[(i, i)] = b.entries[(i, i)];
        b1.entries[(i, i)] = C64::new(0.0, 0.0);
    }
    (b0, b1)
}

/// `ab - ba`.
pub fn commutator(a: &BandOperator, b: &BandOperator) -> Result<BandOperator, OperatorError> {
    same_dim(a, b)?;
    Ok(&(a * b) - &(b * a))
}

/// The 0/1 operator with `(a_r)_xy = 1` exactly when `ρ(x, y) <= r` in `ρ|_X`.
pub fn a_r_operator(m: &DoubledMetric, r: f64) -> BandOperator {
    BandOperator::from_fn(m.len(), |x, y| {
        C64::new(if m.within(x, y) <= r { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Orthogonal projection onto `l²(D_n)`.
pub fn corner_projection(seq: &ExpandingSequence, n: usize) -> Result<BandOperator, OperatorError> {
    let set = seq.set(n).ok_or(OperatorError::IndexOutOfHorizon {
        n,
        horizon: seq.horizon(),
    })?;
    let values: Vec<C64> = (0..set.universe())
        .map(|x| C64::new(if set.contains(x) { 1.0 } else { 0.0 }, 0.0))
        .collect();
    Ok(BandOperator::diagonal(&values))
}

/// Both sides of `‖b‖ <= N_r sup |b_xy|` for `b` of propagation `<= r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandBoundReport {
    pub r: f64,
    pub n_r: usize,
    pub norm: f64,
    pub max_entry: f64,
    pub bound: f64,
    pub holds: bool,
}

pub const BAND_BOUND_SLACK: f64 = 1e-9;

pub fn band_norm_bound_check<D: DistanceSource + ?Sized>(
    b: &BandOperator,
    r: f64,
    growth: &GrowthProfile,
    metric: &D,
) -> Result<BandBoundReport, OperatorError> {
    let p = propagation(b, metric);
    if p > r {
        return Err(OperatorError::PropagationExceeded { propagation: p, r });
    }
    let n_r = growth.at(r).ok_or(OperatorError::MissingGrowth { r })?;
    let norm = op_norm(b)?;
    let max_entry = b.max_abs_entry();
    let bound = n_r as f64 * max_entry;
    Ok(BandBoundReport {
        r,
        n_r,
        norm,
        max_entry,
        bound,
        holds: norm <= bound + BAND_BOUND_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::doubled::{extract_expanding_sequence, rho_point, rho_whole};
    use crate::space::{build_space, growth_bound, FiniteWindow, SpaceSpec};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn z_box(r: i64) -> Arc<FiniteWindow> {
        Arc::new(build_space(&SpaceSpec::z_box(r)).unwrap())
    }

    fn shift(n: usize) -> BandOperator {
        BandOperator::from_fn(n, |x, y| c(if y == x + 1 { 1.0 } else { 0.0 }))
    }

    fn position(w: &FiniteWindow) -> BandOperator {
        let v: Vec<C64> = w.points().map(|x| c(w.coords(x).unwrap()[0] as f64)).collect();
        BandOperator::diagonal(&v)
    }

    #[test]
    fn propagation_examples() {
        let w = z_box(5);
        assert_eq!(propagation(&BandOperator::identity(11), w.as_ref()), 0.0);
        assert_eq!(propagation(&shift(11), w.as_ref()), 1.0);
        assert_eq!(propagation(&BandOperator::zeros(11), w.as_ref()), 0.0);

        let x0 = w.find_label("0").unwrap();
        let m = rho_point(&w, x0).unwrap();
        let support = [w.find_label("-3").unwrap(), w.find_label("1").unwrap()];
        let mut values = vec![c(0.0); 11];
        for &s in &support {
            values[s] = c(1.0);
        }
        let f = BandOperator::diagonal(&values).as_cross();
        let brute = support
            .iter()
            .map(|&x| 2.0 * w.dist(x, x0) + 1.0)
            .fold(0.0, f64::max);
        assert_eq!(propagation(&f, &m.cross_view()), brute);
        assert_eq!(brute, 7.0);
    }

    #[test]
    fn truncation_examples() {
        let w = z_box(2);
        let s = shift(5);
        assert_eq!(truncate_to_propagation(&s, w.as_ref(), 1.0), s);
        assert_eq!(truncate_to_propagation(&s, w.as_ref(), 0.0), BandOperator::zeros(5));
        let ones = BandOperator::from_fn(5, |_, _| c(1.0));
        let t = truncate_to_propagation(&ones, w.as_ref(), 1.0);
        let tri = BandOperator::from_fn(5, |x, y| c(if x.abs_diff(y) <= 1 { 1.0 } else { 0.0 }));
        assert_eq!(t, tri);
    }

    #[test]
    fn split_and_commutators() {
        let b = BandOperator::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let (b0, b1) = diagonal_split(&b);
        assert_eq!(b0, BandOperator::from_real_rows(&[&[1.0, 0.0], &[0.0, 4.0]]).unwrap());
        assert_eq!(b1, BandOperator::from_real_rows(&[&[0.0, 2.0], &[3.0, 0.0]]).unwrap());
        assert_eq!(&b0 + &b1, b);
        let (s0, s1) = diagonal_split(&shift(4));
        assert_eq!(s0, BandOperator::zeros(4));
        assert_eq!(s1, shift(4));

        let w = z_box(5);
        let f = position(&w);
        let s = shift(11);
        let comm = commutator(&s, &f).unwrap();
        for x in 0..11 {
            for y in 0..11 {
                let expected = if y == x + 1 { 1.0 } else { 0.0 };
                assert_eq!(comm.get(x, y), c(expected));
            }
        }
        let zero = commutator(&s, &BandOperator::identity(11)).unwrap();
        assert_eq!(zero.max_abs_entry(), 0.0);
        let g = BandOperator::diagonal(&(0..11).map(|i| c((i * i) as f64)).collect::<Vec<_>>());
        assert_eq!(commutator(&f, &g).unwrap().max_abs_entry(), 0.0);
        assert!(matches!(
            commutator(&s, &BandOperator::identity(3)),
            Err(OperatorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn a_r_examples() {
        let w = z_box(5);
        let m = rho_whole(&w).unwrap();
        assert_eq!(a_r_operator(&m, 0.0), BandOperator::identity(11));
        let tri = BandOperator::from_fn(11, |x, y| c(if x.abs_diff(y) <= 1 { 1.0 } else { 0.0 }));
        assert_eq!(a_r_operator(&m, 1.0), tri);
        let full = a_r_operator(&m, 10.0);
        assert_eq!(full, BandOperator::from_fn(11, |_, _| c(1.0)));
        assert!((op_norm(&full).unwrap() - 11.0).abs() < 1e-10);
        let growth = growth_bound(&w, &[2.0]);
        let a2 = a_r_operator(&m, 2.0);
        assert!(op_norm(&a2).unwrap() <= growth.at(2.0).unwrap() as f64);
    }

    #[test]
    fn corner_projections() {
        let w = z_box(5);
        let x0 = w.find_label("0").unwrap();
        let m = rho_point(&w, x0).unwrap();
        let seq = extract_expanding_sequence(&m, m.natural_horizon()).unwrap();
        let p3 = corner_projection(&seq, 3).unwrap();
        let ball: Vec<Point> = p3.nonzeros().map(|(x, _, _)| x).collect();
        let labels: Vec<&str> = ball.iter().map(|&x| w.label(x)).collect();
        assert_eq!(labels, ["-1", "0", "1"]);
        assert_eq!(&p3 * &p3, p3);
        assert_eq!(p3.adjoint(), p3);
        let last = corner_projection(&seq, seq.horizon()).unwrap();
        assert_eq!(last, BandOperator::identity(11));
        assert!(matches!(
            corner_projection(&seq, 0),
            Err(OperatorError::IndexOutOfHorizon { .. })
        ));

        let empty = crate::doubled::ExpandingSequence::new(
            Arc::clone(&w),
            vec![crate::space::PointSet::empty(11), crate::space::PointSet::full(11)],
            0.5,
        )
        .unwrap();
        assert_eq!(corner_projection(&empty, 1).unwrap(), BandOperator::zeros(11));
    }

    #[test]
    fn membership_examples() {
        let w = z_box(6);
        let x0 = w.find_label("0").unwrap();
        let m = rho_point(&w, x0).unwrap();
        let radii: Vec<f64> = (0..=14).map(f64::from).collect();

        let seq = extract_expanding_sequence(&m, m.natural_horizon()).unwrap();
        let k = 5;
        let chi = corner_projection(&seq, k).unwrap();
        let prof = membership_profile(&chi, &m, &radii).unwrap();
        for (r, u) in prof.radii.iter().zip(&prof.upper) {
            if *r >= k as f64 {
                assert_eq!(*u, 0.0, "r = {r}");
            }
        }

        // diameter 2R with R = 6: identity entries sit at ρ(x,x') = 2|x|+1 <= 13
        let id = membership_profile(&BandOperator::identity(13), &m, &radii).unwrap();
        for (r, l) in id.radii.iter().zip(&id.lower) {
            let expected = if *r < 13.0 { 1.0 } else { 0.0 };
            assert_eq!(*l, expected);
        }
        assert!(id.is_sound());

        let zero = membership_profile(&BandOperator::zeros(13), &m, &radii).unwrap();
        assert!(zero.upper.iter().chain(&zero.lower).all(|&v| v == 0.0));
    }

    #[test]
    fn profile_upper_is_monotone_even_when_pattern_norms_are_not() {
        // norms of sub-patterns need not be monotone: [[1,1],[1,-1]] vs [[1,1],[1,0]]
        let table = vec![0.0, 1.0, 1.0, 0.0];
        let w = Arc::new(FiniteWindow::from_table(vec!["a".into(), "b".into()], table, None).unwrap());
        let a = BandOperator::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap();
        let metric = DistanceTable(vec![3.0, 1.0, 2.0, 0.5]);
        let prof = band_profile(&a, &metric, &[0.0, 0.5, 1.0, 2.0, 3.0]).unwrap();
        assert!(prof.upper.windows(2).all(|p| p[1] <= p[0]));
        assert!(prof.lower.windows(2).all(|p| p[1] <= p[0]));
        assert!(prof.is_sound());
        let _ = w;
    }

    struct DistanceTable(Vec<f64>);

    impl DistanceSource for DistanceTable {
        fn size(&self) -> usize {
            2
        }

        fn distance(&self, x: Point, y: Point) -> f64 {
            self.0[2 * x + y]
        }
    }

    #[test]
    fn band_bound_examples() {
        let w = z_box(5);
        let growth = growth_bound(&w, &[0.0, 1.0]);
        let id = band_norm_bound_check(&BandOperator::identity(11), 0.0, &growth, w.as_ref()).unwrap();
        assert!(id.holds);
        assert_eq!((id.norm, id.bound), (1.0, 1.0));

        let tri = BandOperator::from_fn(11, |x, y| c(if x.abs_diff(y) <= 1 { 1.0 } else { 0.0 }));
        let rep = band_norm_bound_check(&tri, 1.0, &growth, w.as_ref()).unwrap();
        // eigenvalues 1 + 2cos(kπ/12), k = 1..11
        let exact = 1.0 + 2.0 * (std::f64::consts::PI / 12.0).cos();
        assert!((rep.norm - exact).abs() < 1e-12);
        assert!(rep.holds && rep.bound == 3.0);

        let zero = band_norm_bound_check(&BandOperator::zeros(11), 0.0, &growth, w.as_ref()).unwrap();
        assert!(zero.holds && zero.norm == 0.0);

        assert!(matches!(
            band_norm_bound_check(&tri, 0.0, &growth, w.as_ref()),
            Err(OperatorError::PropagationExceeded { .. })
        ));
    }
}
