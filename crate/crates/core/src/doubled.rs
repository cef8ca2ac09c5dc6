//! Metrics on two tagged copies `X ⊔ X` of a window and their expanding
//! sequences.
//!
//! Points of the first copy are written `x`, points of the second `x'`. A
//! [`DoubledMetric`] stores the within-copy restriction (by default the window
//! metric itself) and the cross table `ρ(x, y')`. Everything the bimodule
//! `M_ρ` depends on is read off the cross table.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{
    self, neighborhood, DistanceSource, FiniteWindow, Point, PointSet, SpaceError, SpaceSpec,
    Violation,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoubledError {
    #[error("the domain A of the isometry is empty")]
    EmptyA,
    #[error("point map is not a bijection A -> B: {0}")]
    NotBijective(String),
    #[error("point map is not isometric on ({z1}, {z2})")]
    NotIsometric { z1: Point, z2: Point },
    #[error("every set of the expanding sequence is empty")]
    AllEmpty,
    #[error("not an expanding sequence: {0}")]
    InvalidSequence(String),
    #[error("no containment witness for index {n} inside the horizon (inconclusive)")]
    HorizonTooSmall { n: usize },
    #[error("objects live on different windows")]
    WindowMismatch,
    #[error("invalid doubled-metric table: {0}")]
    InvalidTable(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A metric on `X ⊔ X` compatible with the window metric.
#[derive(Debug, Clone)]
pub struct DoubledMetric {
    base: Arc<FiniteWindow>,
    /// `None` means `ρ|_X = d_X`.
    within: Option<Vec<f64>>,
    cross: Vec<f64>,
}

impl DoubledMetric {
    /// Wraps externally supplied tables. Only shapes and finiteness are checked
    /// here; use [`verify_doubled_metric`] for the axioms.
    pub fn from_tables(
        base: Arc<FiniteWindow>,
        within: Option<Vec<f64>>,
        cross: Vec<f64>,
    ) -> Result<Self, DoubledError> {
        let n = base.len();
        if cross.len() != n * n {
            return Err(DoubledError::InvalidTable(format!(
                "cross table has {} entries, expected {}",
                cross.len(),
                n * n
            )));
        }
        if let Some(w) = &within {
            if w.len() != n * n {
                return Err(DoubledError::InvalidTable(format!(
                    "within table has {} entries, expected {}",
                    w.len(),
                    n * n
                )));
            }
        }
        if cross.iter().chain(within.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(DoubledError::InvalidTable("non-finite entry".into()));
        }
        // A within table equal to d_X is stored implicitly.
        let within = within.filter(|w| w.as_slice() != base.table());
        Ok(DoubledMetric {
            base,
            within,
            cross,
        })
    }

    pub fn base(&self) -> &Arc<FiniteWindow> {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// `ρ(x, y')`.
    #[inline]
    pub fn cross(&self, x: Point, y: Point) -> f64 {
        self.cross[x * self.len() + y]
    }

    /// `ρ(x, y) = ρ(x', y')`.
    #[inline]
    pub fn within(&self, x: Point, y: Point) -> f64 {
        match &self.within {
            Some(w) => w[x * self.len() + y],
            None => self.base.dist(x, y),
        }
    }

    /// True when the within-copy restriction is exactly the window metric.
    pub fn restricts_to_base(&self) -> bool {
        self.within.is_none()
    }

    pub fn cross_table(&self) -> &[f64] {
        &self.cross
    }

    pub fn within_table(&self) -> &[f64] {
        self.within.as_deref().unwrap_or(self.base.table())
    }

    /// Distance on the `2n` points; indices `n..2n` are the primed copy.
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        match (i < n, j < n) {
            (true, true) => self.within(i, j),
            (false, false) => self.within(i - n, j - n),
            (true, false) => self.cross(i, j - n),
            (false, true) => self.cross(j, i - n),
        }
    }

    /// Distance source measuring cross-operators `l²(X') -> l²(X)`.
    pub fn cross_view(&self) -> CrossView<'_> {
        CrossView(self)
    }

    /// Distance source for `ρ|_X`.
    pub fn within_view(&self) -> WithinView<'_> {
        WithinView(self)
    }

    /// Smallest integer `n` with `D_n = X`, i.e. `ceil(max_x ρ(x, x'))`.
    pub fn natural_horizon(&self) -> usize {
        let max = self
            .base
            .points()
            .map(|x| self.cross(x, x))
            .fold(0.0, f64::max);
        (max.ceil() as usize).max(1)
    }

    pub fn to_doc(&self, base: SpaceSpec) -> DoubledMetricDoc {
        DoubledMetricDoc {
            base,
            within: self.within.clone(),
            cross: self.cross.clone(),
        }
    }

    pub fn from_doc(doc: &DoubledMetricDoc) -> Result<Self, DoubledError> {
        let base = Arc::new(space::build_space(&doc.base)?);
        DoubledMetric::from_tables(base, doc.within.clone(), doc.cross.clone())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CrossView<'a>(&'a DoubledMetric);

impl DistanceSource for CrossView<'_> {
    fn size(&self) -> usize {
        self.0.len()
    }

    fn distance(&self, x: Point, y: Point) -> f64 {
        self.0.cross(x, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WithinView<'a>(&'a DoubledMetric);

impl DistanceSource for WithinView<'_> {
    fn size(&self) -> usize {
        self.0.len()
    }

    fn distance(&self, x: Point, y: Point) -> f64 {
        self.0.within(x, y)
    }
}

/// JSON form: `{ "base": SpaceSpec, "within"?: [...], "cross": [...] }`, tables
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubledMetricDoc {
    pub base: SpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within: Option<Vec<f64>>,
    pub cross: Vec<f64>,
}

/// `ρ^{A,α,B}(x, y') = min_{z ∈ A} d(x, z) + 1 + d(α(z), y)`.
///
/// `alpha` lists the pairs `(z, α(z))`; it must be an isometric bijection from
/// `a` onto `b`.
pub fn rho_graph(
    space: &Arc<FiniteWindow>,
    a: &PointSet,
    alpha: &[(Point, Point)],
    b: &PointSet,
) -> Result<DoubledMetric, DoubledError> {
    let n = space.len();
    if a.universe() != n || b.universe() != n {
        return Err(DoubledError::WindowMismatch);
    }
    if a.is_empty() {
        return Err(DoubledError::EmptyA);
    }
    let mut image = vec![None; n];
    let mut hit = PointSet::empty(n);
    for &(z, w) in alpha {
        if z >= n || w >= n {
            return Err(DoubledError::NotBijective(format!("pair ({z},{w}) out of range")));
        }
        if !a.contains(z) {
            return Err(DoubledError::NotBijective(format!("{z} is not in A")));
        }
        if !b.contains(w) {
            return Err(DoubledError::NotBijective(format!("image {w} is not in B")));
        }
        if image[z].is_some() {
            return Err(DoubledError::NotBijective(format!("{z} is mapped twice")));
        }
        if hit.contains(w) {
            return Err(DoubledError::NotBijective(format!("{w} has two preimages")));
        }
        image[z] = Some(w);
        hit.insert(w);
    }
    if let Some(z) = a.iter().find(|&z| image[z].is_none()) {
        return Err(DoubledError::NotBijective(format!("{z} in A has no image")));
    }
    if hit.len() != b.len() {
        return Err(DoubledError::NotBijective("map is not onto B".into()));
    }
    let pairs: Vec<(Point, Point)> = a.iter().map(|z| (z, image[z].unwrap())).collect();
    for (i, &(z1, w1)) in pairs.iter().enumerate() {
        for &(z2, w2) in &pairs[i + 1..] {
            if space.dist(z1, z2) != space.dist(w1, w2) {
                return Err(DoubledError::NotIsometric { z1, z2 });
            }
        }
    }

    let mut cross = vec![f64::INFINITY; n * n];
    for x in 0..n {
        let row = &mut cross[x * n..(x + 1) * n];
        for &(z, w) in &pairs {
            let head = space.dist(x, z) + 1.0;
            for (y, slot) in row.iter_mut().enumerate() {
                let v = head + space.dist(w, y);
                if v < *slot {
                    *slot = v;
                }
            }
        }
    }
    DoubledMetric::from_tables(Arc::clone(space), None, cross)
}

/// `ρ^A`: the identity map on `A`.
pub fn rho_subset(space: &Arc<FiniteWindow>, a: &PointSet) -> Result<DoubledMetric, DoubledError> {
    let alpha: Vec<(Point, Point)> = a.iter().map(|z| (z, z)).collect();
    rho_graph(space, a, &alpha, a)
}

/// `ρ^{x_0}`, whose bimodule is the compact operators.
pub fn rho_point(space: &Arc<FiniteWindow>, x0: Point) -> Result<DoubledMetric, DoubledError> {
    let a = PointSet::from_points(space.len(), [x0])?;
    rho_subset(space, &a)
}

/// `ρ^X`, whose bimodule is the whole uniform Roe algebra.
pub fn rho_whole(space: &Arc<FiniteWindow>) -> Result<DoubledMetric, DoubledError> {
    rho_subset(space, &PointSet::full(space.len()))
}

/// `ρ^E(x, y') = min_n min_{z ∈ E_n} d(x, z) + n + d(z, y)`.
///
/// Only the first index at which `z` enters the sequence can attain the
/// minimum, so the double infimum collapses to one pass over the points.
pub fn rho_from_sequence(
    space: &Arc<FiniteWindow>,
    seq: &ExpandingSequence,
) -> Result<DoubledMetric, DoubledError> {
    let n = space.len();
    if seq.window().len() != n {
        return Err(DoubledError::WindowMismatch);
    }
    let entry: Vec<(Point, f64)> = space
        .points()
        .filter_map(|z| seq.entry_index(z).map(|k| (z, k as f64)))
        .collect();
    if entry.is_empty() {
        return Err(DoubledError::AllEmpty);
    }
    let mut cross = vec![f64::INFINITY; n * n];
    for x in 0..n {
        let row = &mut cross[x * n..(x + 1) * n];
        for &(z, k) in &entry {
            let head = space.dist(x, z) + k;
            for (y, slot) in row.iter_mut().enumerate() {
                let v = head + space.dist(z, y);
                if v < *slot {
                    *slot = v;
                }
            }
        }
    }
    DoubledMetric::from_tables(Arc::clone(space), None, cross)
}

/// Outcome of an exhaustive axiom scan over the `2n` points of `X ⊔ X`.
///
/// Indices in violations follow [`DoubledMetric::rho`]: `n..2n` are primed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub points: usize,
    pub tolerance: f64,
    pub checked_triples: u64,
    pub total_violations: usize,
    /// At most [`MetricReport::LISTED`] violations are kept.
    pub violations: Vec<Violation>,
}

impl MetricReport {
    pub const LISTED: usize = 10_000;

    pub fn is_metric(&self) -> bool {
        self.total_violations == 0
    }
}

pub fn verify_doubled_metric(m: &DoubledMetric) -> MetricReport {
    let n2 = 2 * m.len();
    let mut table = vec![0.0; n2 * n2];
    for i in 0..n2 {
        for j in 0..n2 {
            table[i * n2 + j] = m.rho(i, j);
        }
    }
    let tolerance = if table.iter().all(|v| v.fract() == 0.0) {
        0.0
    } else {
        1e-12
    };
    let mut violations = Vec::new();
    let mut total = 0usize;
    let mut record = |v: Violation| {
        total += 1;
        if violations.len() < MetricReport::LISTED {
            violations.push(v);
        }
    };
    for i in 0..n2 {
        if table[i * n2 + i] != 0.0 {
            record(Violation::NonzeroDiagonal { x: i });
        }
        for j in 0..n2 {
            let v = table[i * n2 + j];
            if v < 0.0 {
                record(Violation::Negative { x: i, y: j });
            }
            if i != j && v == 0.0 {
                record(Violation::NotDiscrete { x: i, y: j });
            }
        }
    }
    for i in 0..n2 {
        let row = &table[i * n2..(i + 1) * n2];
        for j in 0..n2 {
            if i == j {
                continue;
            }
            let dij = row[j];
            for k in 0..n2 {
                if dij > row[k] + table[k * n2 + j] + tolerance {
                    record(Violation::Triangle { x: i, y: j, z: k });
                }
            }
        }
    }
    MetricReport {
        points: n2,
        tolerance,
        checked_triples: (n2 as u64).pow(3),
        total_violations: total,
        violations,
    }
}

/// Nested sets `D_1 ⊆ D_2 ⊆ … ⊆ D_N` with `N_r(D_n) ⊆ D_{n+1}`.
#[derive(Debug, Clone)]
pub struct ExpandingSequence {
    window: Arc<FiniteWindow>,
    sets: Vec<PointSet>,
    r_witness: f64,
}

impl ExpandingSequence {
    /// Checks the expanding condition under the window metric.
    pub fn new(
        window: Arc<FiniteWindow>,
        sets: Vec<PointSet>,
        r_witness: f64,
    ) -> Result<Self, DoubledError> {
        if !(r_witness > 0.0) {
            return Err(DoubledError::InvalidSequence("r_witness must be positive".into()));
        }
        if sets.iter().any(|s| s.universe() != window.len()) {
            return Err(DoubledError::WindowMismatch);
        }
        if sets.iter().all(PointSet::is_empty) {
            return Err(DoubledError::InvalidSequence("every set is empty".into()));
        }
        for (i, pair) in sets.windows(2).enumerate() {
            let grown = neighborhood(&window, &pair[0], r_witness);
            if !grown.is_subset(&pair[1]) {
                return Err(DoubledError::InvalidSequence(format!(
                    "N_{r_witness}(D_{}) is not contained in D_{}",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(ExpandingSequence {
            window,
            sets,
            r_witness,
        })
    }

    /// `D_n = B_{radius(n)}(center)` for `n = 1..=horizon`.
    pub fn balls<F>(
        window: Arc<FiniteWindow>,
        center: Point,
        horizon: usize,
        r_witness: f64,
        radius: F,
    ) -> Result<Self, DoubledError>
    where
        F: Fn(usize) -> f64,
    {
        let sets = (1..=horizon)
            .map(|n| space::ball(&window, center, radius(n)))
            .collect();
        ExpandingSequence::new(window, sets, r_witness)
    }

    pub fn from_point_lists(
        window: Arc<FiniteWindow>,
        lists: &[Vec<Point>],
        r_witness: f64,
    ) -> Result<Self, DoubledError> {
        let sets = lists
            .iter()
            .map(|l| PointSet::from_points(window.len(), l.iter().copied()))
            .collect::<Result<Vec<_>, _>>()?;
        ExpandingSequence::new(window, sets, r_witness)
    }

    pub fn window(&self) -> &Arc<FiniteWindow> {
        &self.window
    }

    /// Number of sets `N`.
    pub fn horizon(&self) -> usize {
        self.sets.len()
    }

    /// `D_n`, 1-based.
    pub fn set(&self, n: usize) -> Option<&PointSet> {
        n.checked_sub(1).and_then(|i| self.sets.get(i))
    }

    pub fn sets(&self) -> &[PointSet] {
        &self.sets
    }

    pub fn r_witness(&self) -> f64 {
        self.r_witness
    }

    /// For integer metrics with `r < 1` the neighbourhood condition says
    /// nothing beyond nestedness.
    pub fn witness_is_trivial(&self) -> bool {
        let min_gap = self
            .window
            .table()
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        self.r_witness < min_gap
    }

    /// First `n` with `z ∈ D_n`.
    pub fn entry_index(&self, z: Point) -> Option<usize> {
        self.sets.iter().position(|s| s.contains(z)).map(|i| i + 1)
    }

    /// First `n` with `D_n = X`.
    pub fn stabilization_index(&self) -> Option<usize> {
        self.sets.iter().position(PointSet::is_full).map(|i| i + 1)
    }

    pub fn to_doc(&self) -> SequenceDoc {
        SequenceDoc {
            sets: self.sets.iter().map(PointSet::to_vec).collect(),
            r_witness: self.r_witness,
        }
    }
}

/// JSON form of an expanding sequence: one point-id list per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceDoc {
    pub sets: Vec<Vec<Point>>,
    pub r_witness: f64,
}

/// `D_n = {x : ρ(x, x') <= n}` for `n = 1..=horizon`.
///
/// The witness radius is `1/2` measured in `ρ|_X`. When `ρ|_X` differs from the
/// window metric it is converted to a `d_X` radius whose balls sit inside the
/// `ρ|_X` half-balls.
pub fn extract_expanding_sequence(
    m: &DoubledMetric,
    horizon: usize,
) -> Result<ExpandingSequence, DoubledError> {
    let window = Arc::clone(m.base());
    let sets = (1..=horizon)
        .map(|k| {
            let mut s = PointSet::empty(m.len());
            for x in window.points() {
                if m.cross(x, x) <= k as f64 {
                    s.insert(x);
                }
            }
            s
        })
        .collect();
    let r_witness = if m.restricts_to_base() {
        0.5
    } else {
        let mut gap = f64::INFINITY;
        for x in window.points() {
            for y in window.points() {
                if m.within(x, y) > 0.5 {
                    gap = gap.min(window.dist(x, y));
                }
            }
        }
        if gap.is_finite() {
            gap / 2.0
        } else {
            window.diameter() + 1.0
        }
    };
    ExpandingSequence::new(window, sets, r_witness)
}

/// Minimal monotone map witnessing equivalence inside the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceEquivalence {
    /// `phi[n - 1] = φ(n)`.
    pub phi: Vec<usize>,
}

fn first_containing(set: &PointSet, seq: &ExpandingSequence) -> Option<usize> {
    seq.sets()
        .iter()
        .position(|t| set.is_subset(t))
        .map(|i| i + 1)
}

/// `φ(n) = max(min{m : D_n ⊆ D'_m}, min{m : D'_n ⊆ D_m})`, made monotone.
///
/// A missing witness inside the horizon is reported as
/// [`DoubledError::HorizonTooSmall`]: a finite window cannot refute
/// equivalence, only fail to confirm it.
pub fn sequences_equivalent(
    d: &ExpandingSequence,
    d2: &ExpandingSequence,
) -> Result<SequenceEquivalence, DoubledError> {
    if d.window().len() != d2.window().len() || d.window().table() != d2.window().table() {
        return Err(DoubledError::WindowMismatch);
    }
    let len = d.horizon().min(d2.horizon());
    let mut phi = Vec::with_capacity(len);
    let mut running = 0;
    for n in 1..=len {
        let forward =
            first_containing(d.set(n).unwrap(), d2).ok_or(DoubledError::HorizonTooSmall { n })?;
        let backward =
            first_containing(d2.set(n).unwrap(), d).ok_or(DoubledError::HorizonTooSmall { n })?;
        running = running.max(forward.max(backward));
        phi.push(running);
    }
    Ok(SequenceEquivalence { phi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FamilyVerdict {
    Equivalent,
    NotEquivalent,
    Inconclusive,
}

/// Reads the window-family trend of equivalence maps on nested windows.
///
/// The maps are compared on indices up to `max_index`. Stable values mean a
/// window-independent `φ`; a value that strictly grows at every step of the
/// family means no single `φ(n)` works.
pub fn equivalence_trend(maps: &[SequenceEquivalence], max_index: usize) -> FamilyVerdict {
    if maps.len() < 2 {
        return FamilyVerdict::Inconclusive;
    }
    let common = maps
        .iter()
        .map(|m| m.phi.len())
        .min()
        .unwrap_or(0)
        .min(max_index);
    if common == 0 {
        return FamilyVerdict::Inconclusive;
    }
    let stable = (0..common).all(|i| maps.iter().all(|m| m.phi[i] == maps[0].phi[i]));
    if stable {
        return FamilyVerdict::Equivalent;
    }
    let growing = (0..common).any(|i| maps.windows(2).all(|w| w[1].phi[i] > w[0].phi[i]));
    if growing {
        FamilyVerdict::NotEquivalent
    } else {
        FamilyVerdict::Inconclusive
    }
}

/// Sampled nondecreasing envelope `t ↦ φ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlFunction {
    pub samples: Vec<(f64, f64)>,
}

impl ControlFunction {
    pub fn is_identity(&self) -> bool {
        self.samples.iter().all(|&(t, v)| t == v)
    }

    /// Value at the largest sample not exceeding `t`.
    pub fn eval(&self, t: f64) -> Option<f64> {
        self.samples
            .iter()
            .take_while(|&&(s, _)| s <= t)
            .last()
            .map(|&(_, v)| v)
    }
}

fn envelope(n: usize, from: impl Fn(usize, usize) -> f64, to: impl Fn(usize, usize) -> f64) -> ControlFunction {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            pairs.push((from(x, y), to(x, y)));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for (t, v) in pairs {
        running = running.max(v);
        match samples.last_mut() {
            Some(last) if last.0 == t => last.1 = running,
            _ => samples.push((t, running)),
        }
    }
    ControlFunction { samples }
}

/// Empirical control envelopes `(d_X -> ρ|_X, ρ|_X -> d_X)`.
pub fn compatibility_control(m: &DoubledMetric) -> (ControlFunction, ControlFunction) {
    let base = m.base();
    let n = m.len();
    let forward = envelope(n, |x, y| base.dist(x, y), |x, y| m.within(x, y));
    let backward = envelope(n, |x, y| m.within(x, y), |x, y| base.dist(x, y));
    (forward, backward)
}

/// Band containment between two bimodules at window scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BimoduleOrder {
    /// `(r, r')`: the smallest `r'` with `{ρ1 <= r} ⊆ {ρ2 <= r'}`; `None` for an
    /// empty band.
    pub forward: Vec<(f64, Option<f64>)>,
    pub reverse: Vec<(f64, Option<f64>)>,
    /// No radius inside half the horizon needs an `r'` beyond the horizon.
    pub forward_bounded: bool,
    pub reverse_bounded: bool,
}

fn containment_curve(from: &[f64], to: &[f64], radii: &[f64]) -> Vec<(f64, Option<f64>)> {
    radii
        .iter()
        .map(|&r| {
            let needed = from
                .iter()
                .zip(to)
                .filter(|(&a, _)| a <= r)
                .map(|(_, &b)| b)
                .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b))));
            (r, needed)
        })
        .collect()
}

fn curve_bounded(curve: &[(f64, Option<f64>)], horizon: f64) -> bool {
    curve
        .iter()
        .filter(|(r, _)| *r <= horizon / 2.0)
        .all(|(_, needed)| needed.is_none_or(|v| v <= horizon))
}

pub fn bimodule_order(
    m1: &DoubledMetric,
    m2: &DoubledMetric,
    radii: &[f64],
) -> Result<BimoduleOrder, DoubledError> {
    if m1.len() != m2.len() || m1.base().table() != m2.base().table() {
        return Err(DoubledError::WindowMismatch);
    }
    let horizon = m1.base().horizon();
    let forward = containment_curve(m1.cross_table(), m2.cross_table(), radii);
    let reverse = containment_curve(m2.cross_table(), m1.cross_table(), radii);
    Ok(BimoduleOrder {
        forward_bounded: curve_bounded(&forward, horizon),
        reverse_bounded: curve_bounded(&reverse, horizon),
        forward,
        reverse,
    })
}
