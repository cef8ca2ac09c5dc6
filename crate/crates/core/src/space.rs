//! Finite windows of discrete metric spaces of bounded geometry.
//!
//! A [`FiniteWindow`] is an immutable, fully materialised distance table over
//! a finite list of points, together with the radius (`horizon`) up to which it
//! is trusted to represent the ambient space. Windows are built from a
//! [`SpaceSpec`]: a lattice box in `Z^d`, a connected graph with its word
//! metric, or an explicit table.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a point inside its window.
pub type Point = usize;

/// Largest window the dense distance table is allowed to grow to.
pub const MAX_WINDOW_POINTS: usize = 4096;

const FLOAT_TRIANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("graph is disconnected: vertex {unreachable} cannot be reached from vertex 0")]
    DisconnectedGraph { unreachable: Point },
    #[error("metric axioms violated: {0}")]
    MetricViolation(Violation),
    #[error("invalid space spec: {0}")]
    InvalidSpec(String),
}

/// The first metric axiom found to fail on a candidate distance table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum Violation {
    NonFinite { x: Point, y: Point },
    Negative { x: Point, y: Point },
    NonzeroDiagonal { x: Point },
    NotDiscrete { x: Point, y: Point },
    Asymmetric { x: Point, y: Point },
    Triangle { x: Point, y: Point, z: Point },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonFinite { x, y } => write!(f, "d({x},{y}) is not finite"),
            Violation::Negative { x, y } => write!(f, "d({x},{y}) < 0"),
            Violation::NonzeroDiagonal { x } => write!(f, "d({x},{x}) != 0"),
            Violation::NotDiscrete { x, y } => write!(f, "d({x},{y}) = 0 for distinct points"),
            Violation::Asymmetric { x, y } => write!(f, "d({x},{y}) != d({y},{x})"),
            Violation::Triangle { x, y, z } => {
                write!(f, "d({x},{y}) > d({x},{z}) + d({z},{y})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeMetric {
    /// `max_i |x_i - y_i|`
    Sup,
    /// `sum_i |x_i - y_i|`
    #[default]
    L1,
}

/// Serialized description of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpaceSpec {
    /// The box `{lo..=hi}^dim` in `Z^dim`.
    Lattice {
        dim: usize,
        lo: i64,
        hi: i64,
        #[serde(default)]
        metric: LatticeMetric,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<f64>,
    },
    /// Undirected graph on `0..vertices` with the word (path-length) metric.
    Graph {
        vertices: usize,
        edges: Vec<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<f64>,
    },
    /// Explicit row-major `n x n` distance table.
    Table {
        n: usize,
        dist: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<f64>,
    },
}

impl SpaceSpec {
    /// The one-dimensional box `{-half_width..=half_width}` with `|x - y|`.
    pub fn z_box(half_width: i64) -> Self {
        SpaceSpec::Lattice {
            dim: 1,
            lo: -half_width,
            hi: half_width,
            metric: LatticeMetric::L1,
            horizon: None,
        }
    }
}

/// Anything that assigns a distance to an ordered pair of window indices.
///
/// Same-copy operators are measured with a [`FiniteWindow`]; cross-operators
/// between the two copies of a doubled space use the cross table of a
/// [`crate::doubled::DoubledMetric`].
pub trait DistanceSource {
    fn size(&self) -> usize;
    fn distance(&self, x: Point, y: Point) -> f64;
}

/// A finite slice of a discrete metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteWindow {
    labels: Vec<String>,
    coords: Option<Vec<Vec<i64>>>,
    dist: Vec<f64>,
    horizon: f64,
    integral: bool,
}

impl FiniteWindow {
    /// Validates `dist` (row-major, `labels.len()` squared) against the metric
    /// axioms. A `None` horizon defaults to the diameter.
    pub fn from_table(
        labels: Vec<String>,
        dist: Vec<f64>,
        horizon: Option<f64>,
    ) -> Result<Self, SpaceError> {
        let n = labels.len();
        if n == 0 {
            return Err(SpaceError::InvalidSpec("window must contain at least one point".into()));
        }
        if dist.len() != n * n {
            return Err(SpaceError::InvalidSpec(format!(
                "distance table has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        if let Some(v) = check_metric_table(n, &dist) {
            return Err(SpaceError::MetricViolation(v));
        }
        Ok(Self::assemble(labels, None, dist, horizon))
    }

    fn assemble(
        labels: Vec<String>,
        coords: Option<Vec<Vec<i64>>>,
        dist: Vec<f64>,
        horizon: Option<f64>,
    ) -> Self {
        let integral = dist.iter().all(|d| d.fract() == 0.0);
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        FiniteWindow {
            labels,
            coords,
            dist,
            horizon: horizon.unwrap_or(diameter),
            integral,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn points(&self) -> std::ops::Range<Point> {
        0..self.len()
    }

    #[inline]
    pub fn dist(&self, x: Point, y: Point) -> f64 {
        self.dist[x * self.len() + y]
    }

    /// Row-major distance table.
    pub fn table(&self) -> &[f64] {
        &self.dist
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: Point) -> &str {
        &self.labels[x]
    }

    pub fn find_label(&self, label: &str) -> Option<Point> {
        self.labels.iter().position(|l| l == label)
    }

    /// Lattice coordinates, for windows built from a lattice box.
    pub fn coords(&self, x: Point) -> Option<&[i64]> {
        self.coords.as_ref().map(|c| c[x].as_slice())
    }

    pub fn find_coords(&self, target: &[i64]) -> Option<Point> {
        self.coords.as_ref()?.iter().position(|c| c.as_slice() == target)
    }

    /// Radius up to which the window is trusted to be free of edge effects.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// True when every distance is an integer, so comparisons are exact.
    pub fn is_integral(&self) -> bool {
        self.integral
    }

    /// Triangle-check tolerance for this window's value type.
    pub fn triangle_tolerance(&self) -> f64 {
        if self.integral {
            0.0
        } else {
            FLOAT_TRIANGLE_TOL
        }
    }
}

impl DistanceSource for FiniteWindow {
    fn size(&self) -> usize {
        self.len()
    }

    fn distance(&self, x: Point, y: Point) -> f64 {
        self.dist(x, y)
    }
}

/// Returns the first violated axiom, scanning all `O(n^3)` triples.
pub fn check_metric_table(n: usize, dist: &[f64]) -> Option<Violation> {
    let d = |x: usize, y: usize| dist[x * n + y];
    for x in 0..n {
        for y in 0..n {
            let v = d(x, y);
            if !v.is_finite() {
                return Some(Violation::NonFinite { x, y });
            }
            if v < 0.0 {
                return Some(Violation::Negative { x, y });
            }
        }
    }
    for x in 0..n {
        if d(x, x) != 0.0 {
            return Some(Violation::NonzeroDiagonal { x });
        }
        for y in (x + 1)..n {
            if d(x, y) != d(y, x) {
                return Some(Violation::Asymmetric { x, y });
            }
            if d(x, y) == 0.0 {
                return Some(Violation::NotDiscrete { x, y });
            }
        }
    }
    let tol = if dist.iter().all(|v| v.fract() == 0.0) {
        0.0
    } else {
        FLOAT_TRIANGLE_TOL
    };
    for x in 0..n {
        let row_x = &dist[x * n..(x + 1) * n];
        for y in (x + 1)..n {
            let dxy = row_x[y];
            for z in 0..n {
                if dxy > row_x[z] + dist[z * n + y] + tol {
                    return Some(Violation::Triangle { x, y, z });
                }
            }
        }
    }
    None
}

/// Builds a window from its spec. Graph metrics are computed exactly by BFS.
pub fn build_space(spec: &SpaceSpec) -> Result<FiniteWindow, SpaceError> {
    match spec {
        SpaceSpec::Lattice {
            dim,
            lo,
            hi,
            metric,
            horizon,
        } => build_lattice(*dim, *lo, *hi, *metric, *horizon),
        SpaceSpec::Graph {
            vertices,
            edges,
            labels,
            horizon,
        } => build_graph(*vertices, edges, labels.as_deref(), *horizon),
        SpaceSpec::Table {
            n,
            dist,
            labels,
            horizon,
        } => {
            let labels = resolve_labels(*n, labels.as_deref())?;
            FiniteWindow::from_table(labels, dist.clone(), *horizon)
        }
    }
}

fn resolve_labels(n: usize, labels: Option<&[String]>) -> Result<Vec<String>, SpaceError> {
    match labels {
        Some(l) if l.len() != n => Err(SpaceError::InvalidSpec(format!(
            "{} labels supplied for {n} points",
            l.len()
        ))),
        Some(l) => Ok(l.to_vec()),
        None => Ok((0..n).map(|i| i.to_string()).collect()),
    }
}

fn build_lattice(
    dim: usize,
    lo: i64,
    hi: i64,
    metric: LatticeMetric,
    horizon: Option<f64>,
) -> Result<FiniteWindow, SpaceError> {
    if dim == 0 {
        return Err(SpaceError::InvalidSpec("lattice dimension must be positive".into()));
    }
    if lo > hi {
        return Err(SpaceError::InvalidSpec(format!("empty lattice box {lo}..{hi}")));
    }
    let side = (hi - lo + 1) as usize;
    let n = side
        .checked_pow(dim as u32)
        .filter(|&n| n <= MAX_WINDOW_POINTS)
        .ok_or_else(|| {
            SpaceError::InvalidSpec(format!(
                "lattice box has more than {MAX_WINDOW_POINTS} points"
            ))
        })?;

    let mut coords = Vec::with_capacity(n);
    let mut current = vec![lo; dim];
    for _ in 0..n {
        coords.push(current.clone());
        // odometer increment, last axis fastest
        for axis in (0..dim).rev() {
            if current[axis] < hi {
                current[axis] += 1;
                break;
            }
            current[axis] = lo;
        }
    }

    let mut dist = vec![0.0; n * n];
    for (x, cx) in coords.iter().enumerate() {
        for (y, cy) in coords.iter().enumerate() {
            let diffs = cx.iter().zip(cy).map(|(a, b)| (a - b).abs());
            let d = match metric {
                LatticeMetric::Sup => diffs.max().unwrap_or(0),
                LatticeMetric::L1 => diffs.sum(),
            };
            dist[x * n + y] = d as f64;
        }
    }

    let labels = coords
        .iter()
        .map(|c| {
            if c.len() == 1 {
                c[0].to_string()
            } else {
                let parts: Vec<String> = c.iter().map(i64::to_string).collect();
                format!("({})", parts.join(","))
            }
        })
        .collect();
    let horizon = horizon.unwrap_or((hi - lo) as f64 / 2.0);
    Ok(FiniteWindow::assemble(labels, Some(coords), dist, Some(horizon)))
}

fn build_graph(
    vertices: usize,
    edges: &[[usize; 2]],
    labels: Option<&[String]>,
    horizon: Option<f64>,
) -> Result<FiniteWindow, SpaceError> {
    if vertices == 0 {
        return Err(SpaceError::InvalidSpec("graph must have at least one vertex".into()));
    }
    if vertices > MAX_WINDOW_POINTS {
        return Err(SpaceError::InvalidSpec(format!(
            "graph has more than {MAX_WINDOW_POINTS} vertices"
        )));
    }
    let labels = resolve_labels(vertices, labels)?;
    let mut adjacency = vec![Vec::new(); vertices];
    for &[a, b] in edges {
        if a >= vertices || b >= vertices {
            return Err(SpaceError::InvalidSpec(format!(
                "edge ({a},{b}) references a missing vertex"
            )));
        }
        if a != b {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }

    let mut dist = vec![0.0; vertices * vertices];
    let mut hops = vec![usize::MAX; vertices];
    let mut queue = VecDeque::new();
    for source in 0..vertices {
        hops.fill(usize::MAX);
        hops[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if hops[w] == usize::MAX {
                    hops[w] = hops[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if let Some(unreachable) = hops.iter().position(|&h| h == usize::MAX) {
            return Err(SpaceError::DisconnectedGraph { unreachable });
        }
        for (target, &h) in hops.iter().enumerate() {
            dist[source * vertices + target] = h as f64;
        }
    }
    Ok(FiniteWindow::assemble(labels, None, dist, horizon))
}

/// A subset of a window's points, stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    mask: Vec<bool>,
    count: usize,
}

impl PointSet {
    pub fn empty(universe: usize) -> Self {
        PointSet {
            mask: vec![false; universe],
            count: 0,
        }
    }

    pub fn full(universe: usize) -> Self {
        PointSet {
            mask: vec![true; universe],
            count: universe,
        }
    }

    /// Points outside `0..universe` are rejected.
    pub fn from_points<I>(universe: usize, points: I) -> Result<Self, SpaceError>
    where
        I: IntoIterator<Item = Point>,
    {
        let mut set = PointSet::empty(universe);
        for p in points {
            if p >= universe {
                return Err(SpaceError::InvalidSpec(format!(
                    "point {p} is outside a window of {universe} points"
                )));
            }
            set.insert(p);
        }
        Ok(set)
    }

    pub fn insert(&mut self, p: Point) {
        if !self.mask[p] {
            self.mask[p] = true;
            self.count += 1;
        }
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        self.mask.get(p).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Size of the ambient window.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn is_full(&self) -> bool {
        self.count == self.mask.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn to_vec(&self) -> Vec<Point> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.count <= other.count && self.iter().all(|p| other.contains(p))
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut out = self.clone();
        for p in other.iter() {
            out.insert(p);
        }
        out
    }

    /// Complement inside the window.
    pub fn complement(&self) -> PointSet {
        let mask: Vec<bool> = self.mask.iter().map(|m| !m).collect();
        PointSet {
            count: self.mask.len() - self.count,
            mask,
        }
    }
}

/// Closed ball `{y : d(center, y) <= r}`.
pub fn ball(space: &FiniteWindow, center: Point, r: f64) -> PointSet {
    let mut set = PointSet::empty(space.len());
    for y in space.points() {
        if space.dist(center, y) <= r {
            set.insert(y);
        }
    }
    set
}

/// Union of the closed `r`-balls around the points of `set`.
pub fn neighborhood(space: &FiniteWindow, set: &PointSet, r: f64) -> PointSet {
    let mut out = PointSet::empty(space.len());
    for y in space.points() {
        if set.iter().any(|x| space.dist(x, y) <= r) {
            out.insert(y);
        }
    }
    out
}

/// Maximal ball cardinality `N_r` per sampled radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub entries: Vec<(f64, usize)>,
}

impl GrowthProfile {
    /// `N_r` for a radius that was sampled.
    pub fn at(&self, r: f64) -> Option<usize> {
        self.entries.iter().find(|(s, _)| *s == r).map(|&(_, n)| n)
    }
}

pub fn growth_bound(space: &FiniteWindow, radii: &[f64]) -> GrowthProfile {
    let entries = radii
        .iter()
        .map(|&r| {
            let max = space
                .points()
                .map(|c| space.points().filter(|&y| space.dist(c, y) <= r).count())
                .max()
                .unwrap_or(0);
            (r, max)
        })
        .collect();
    GrowthProfile { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> FiniteWindow {
        let edges = (0..n - 1).map(|i| [i, i + 1]).collect();
        build_space(&SpaceSpec::Graph {
            vertices: n,
            edges,
            labels: None,
            horizon: None,
        })
        .unwrap()
    }

    #[test]
    fn z_box_has_expected_size_and_diameter() {
        let w = build_space(&SpaceSpec::z_box(5)).unwrap();
        assert_eq!(w.len(), 11);
        assert_eq!(w.diameter(), 10.0);
        assert_eq!(w.horizon(), 5.0);
        assert!(w.is_integral());
        assert_eq!(w.find_label("-5"), Some(0));
        assert_eq!(w.find_coords(&[5]), Some(10));
    }

    #[test]
    fn path_graph_word_metric() {
        let w = path(4);
        assert_eq!(w.dist(0, 3), 3.0);
        assert_eq!(w.dist(3, 1), 2.0);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let err = build_space(&SpaceSpec::Graph {
            vertices: 3,
            edges: vec![[0, 1]],
            labels: None,
            horizon: None,
        })
        .unwrap_err();
        assert_eq!(err, SpaceError::DisconnectedGraph { unreachable: 2 });
    }

    #[test]
    fn table_violating_triangle_inequality() {
        let dist = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        let err = build_space(&SpaceSpec::Table {
            n: 3,
            dist,
            labels: None,
            horizon: None,
        })
        .unwrap_err();
        assert!(matches!(
            err,
            SpaceError::MetricViolation(Violation::Triangle { .. })
        ));
    }

    #[test]
    fn table_axioms_other_than_triangle() {
        let asym = vec![0.0, 1.0, 2.0, 0.0];
        assert!(matches!(
            FiniteWindow::from_table(vec!["a".into(), "b".into()], asym, None),
            Err(SpaceError::MetricViolation(Violation::Asymmetric { .. }))
        ));
        let degenerate = vec![0.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            FiniteWindow::from_table(vec!["a".into(), "b".into()], degenerate, None),
            Err(SpaceError::MetricViolation(Violation::NotDiscrete { .. }))
        ));
    }

    #[test]
    fn sup_and_l1_lattice_metrics() {
        let spec = |metric| SpaceSpec::Lattice {
            dim: 2,
            lo: 0,
            hi: 2,
            metric,
            horizon: None,
        };
        let sup = build_space(&spec(LatticeMetric::Sup)).unwrap();
        let l1 = build_space(&spec(LatticeMetric::L1)).unwrap();
        let a = sup.find_coords(&[0, 0]).unwrap();
        let b = sup.find_coords(&[2, 1]).unwrap();
        assert_eq!(sup.dist(a, b), 2.0);
        assert_eq!(l1.dist(a, b), 3.0);
        assert_eq!(sup.label(b), "(2,1)");
    }

    #[test]
    fn balls_and_neighborhoods() {
        let w = build_space(&SpaceSpec::z_box(5)).unwrap();
        let origin = w.find_label("0").unwrap();
        let b = ball(&w, origin, 2.0);
        let labels: Vec<&str> = b.iter().map(|p| w.label(p)).collect();
        assert_eq!(labels, ["-2", "-1", "0", "1", "2"]);
        assert_eq!(ball(&w, origin, 0.0).to_vec(), vec![origin]);

        let empty = PointSet::empty(w.len());
        assert!(neighborhood(&w, &empty, 3.0).is_empty());

        let ends = PointSet::from_points(w.len(), [0, 10]).unwrap();
        let nb = neighborhood(&w, &ends, 1.0);
        let labels: Vec<&str> = nb.iter().map(|p| w.label(p)).collect();
        assert_eq!(labels, ["-5", "-4", "4", "5"]);
    }

    #[test]
    fn ball_in_path_matches_table_scan() {
        let w = path(4);
        let scan: Vec<Point> = (0..4).filter(|&y| w.dist(1, y) <= 1.0).collect();
        assert_eq!(ball(&w, 1, 1.0).to_vec(), scan);
        assert_eq!(scan, vec![0, 1, 2]);
    }

    #[test]
    fn growth_profiles() {
        let w = build_space(&SpaceSpec::z_box(5)).unwrap();
        let g = growth_bound(&w, &[0.0, 1.0, 2.5]);
        assert_eq!(g.at(0.0), Some(1));
        assert_eq!(g.at(1.0), Some(3));
        assert_eq!(g.at(2.5), Some(5));

        let n = 7;
        let edges = (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| [a, b]))
            .collect();
        let complete = build_space(&SpaceSpec::Graph {
            vertices: n,
            edges,
            labels: None,
            horizon: None,
        })
        .unwrap();
        assert_eq!(growth_bound(&complete, &[1.0]).at(1.0), Some(7));
    }

    #[test]
    fn point_set_algebra() {
        let a = PointSet::from_points(5, [0, 2]).unwrap();
        let b = PointSet::from_points(5, [0, 1, 2]).unwrap();
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert_eq!(a.union(&b), b);
        assert_eq!(a.complement().to_vec(), vec![1, 3, 4]);
        assert!(PointSet::from_points(5, [5]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{"kind":"lattice","dim":1,"lo":-5,"hi":5}"#;
        let spec: SpaceSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, SpaceSpec::z_box(5));
        let bad = r#"{"kind":"lattice","dim":1,"lo":-5,"hi":5,"colour":1}"#;
        assert!(serde_json::from_str::<SpaceSpec>(bad).is_err());
    }
}
