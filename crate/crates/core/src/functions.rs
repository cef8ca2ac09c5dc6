//! Bounded scalar fields on a window and their decay profiles relative to an
//! expanding sequence.
//!
//! Whether a field vanishes far from the sequence, or has variation vanishing
//! far from it, is a statement about limits. A single finite window always
//! ends in zero, so every verdict here is read off a family of nested windows:
//! each profile is cut to a tail (the last third of the indices up to half the
//! horizon) and the tail values are compared across the family.

use std::io;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doubled::{DoubledMetric, ExpandingSequence};
use crate::operators::{BandOperator, C64};
use crate::space::{ball, growth_bound, FiniteWindow, Point, PointSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionError {
    #[error("field has {got} values for a window of {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field value at point {0} is not finite")]
    NonFinite(Point),
    #[error("tent balls around points {first} and {second} intersect")]
    OverlappingBalls { first: Point, second: Point },
    #[error("classification needs at least {needed} nested windows, got {got}")]
    TooFewWindows { needed: usize, got: usize },
    #[error("profiles are not monotone across the window family ({0})")]
    InconclusiveHorizon(String),
    #[error("field and sequence live on different windows")]
    WindowMismatch,
    #[error("malformed field data: {0}")]
    Malformed(String),
}

/// A bounded function on the points of a window.
#[derive(Debug, Clone)]
pub struct ScalarField {
    window: Arc<FiniteWindow>,
    values: Vec<C64>,
    sup: f64,
}

impl ScalarField {
    pub fn new(window: Arc<FiniteWindow>, values: Vec<C64>) -> Result<Self, FunctionError> {
        if values.len() != window.len() {
            return Err(FunctionError::LengthMismatch {
                expected: window.len(),
                got: values.len(),
            });
        }
        if let Some(p) = values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(FunctionError::NonFinite(p));
        }
        let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(ScalarField {
            window,
            values,
            sup,
        })
    }

    pub fn from_real(window: Arc<FiniteWindow>, values: Vec<f64>) -> Result<Self, FunctionError> {
        let values = values.into_iter().map(|v| C64::new(v, 0.0)).collect();
        ScalarField::new(window, values)
    }

    pub fn from_fn(
        window: Arc<FiniteWindow>,
        f: impl Fn(Point) -> f64,
    ) -> Result<Self, FunctionError> {
        let values = window.points().map(f).collect();
        ScalarField::from_real(window, values)
    }

    pub fn constant(window: Arc<FiniteWindow>, c: f64) -> Self {
        ScalarField::from_fn(window, |_| c).expect("finite constant")
    }

    /// `χ_D`.
    pub fn indicator(window: Arc<FiniteWindow>, set: &PointSet) -> Self {
        ScalarField::from_fn(window, |x| if set.contains(x) { 1.0 } else { 0.0 })
            .expect("0/1 values")
    }

    /// The diagonal of an operator.
    pub fn from_diagonal(window: Arc<FiniteWindow>, op: &BandOperator) -> Result<Self, FunctionError> {
        ScalarField::new(window, op.diagonal_values())
    }

    pub fn window(&self) -> &Arc<FiniteWindow> {
        &self.window
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, x: Point) -> C64 {
        self.values[x]
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// The multiplication operator.
    pub fn to_operator(&self) -> BandOperator {
        BandOperator::diagonal(&self.values)
    }

    fn zip_with(&self, other: &ScalarField, op: impl Fn(C64, C64) -> C64) -> Result<Self, FunctionError> {
        if self.values.len() != other.values.len() {
            return Err(FunctionError::WindowMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| op(*a, *b))
            .collect();
        ScalarField::new(Arc::clone(&self.window), values)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self, FunctionError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self, FunctionError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn shift(&self, c: C64) -> Self {
        let values = self.values.iter().map(|v| v - c).collect();
        ScalarField::new(Arc::clone(&self.window), values).expect("finite shift")
    }

    /// CSV with columns `point,re,im`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["point", "re", "im"])?;
        for (x, v) in self.values.iter().enumerate() {
            w.write_record([x.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `point,re[,im]` rows; unlisted points are zero.
    pub fn read_csv<R: io::Read>(window: Arc<FiniteWindow>, input: R) -> Result<Self, FunctionError> {
        let mut values = vec![C64::new(0.0, 0.0); window.len()];
        let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
        for record in r.records() {
            let record = record.map_err(|e| FunctionError::Malformed(e.to_string()))?;
            let field = |i: usize| -> Result<f64, FunctionError> {
                record
                    .get(i)
                    .map_or(Ok(0.0), |s| s.trim().parse().map_err(|e| FunctionError::Malformed(format!("{e}"))))
            };
            let point: usize = record
                .get(0)
                .ok_or_else(|| FunctionError::Malformed("missing point column".into()))?
                .trim()
                .parse()
                .map_err(|e| FunctionError::Malformed(format!("{e}")))?;
            if point >= values.len() {
                return Err(FunctionError::Malformed(format!("point {point} outside the window")));
            }
            values[point] = C64::new(field(1)?, field(2)?);
        }
        ScalarField::new(window, values)
    }
}

/// `var_{x,r} f = max_{d(x,y) <= r} |f(y) - f(x)|`.
pub fn variation(f: &ScalarField, x: Point, r: f64) -> f64 {
    let w = f.window();
    let fx = f.value(x);
    w.points()
        .filter(|&y| w.dist(x, y) <= r)
        .map(|y| (f.value(y) - fx).norm())
        .fold(0.0, f64::max)
}

/// Nonincreasing decay curve indexed by the sequence index `n = 1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub radius: Option<f64>,
    /// `values[n - 1]`.
    pub values: Vec<f64>,
}

impl DecayProfile {
    pub fn value(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    /// CSV with columns `n,r,value`; `r` is empty for vanishing profiles.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "r", "value"])?;
        let r = self.radius.map(|r| r.to_string()).unwrap_or_default();
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(i + 1).to_string(), r.clone(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sup_outside(seq: &ExpandingSequence, pointwise: &[f64]) -> Vec<f64> {
    seq.sets()
        .iter()
        .map(|d| {
            pointwise
                .iter()
                .enumerate()
                .filter(|(x, _)| !d.contains(*x))
                .map(|(_, &v)| v)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `n ↦ sup_{x ∉ D_n} |f(x)|`, zero once `D_n = X`.
pub fn vanishing_profile(f: &ScalarField, seq: &ExpandingSequence) -> DecayProfile {
    let pointwise: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    DecayProfile {
        radius: None,
        values: sup_outside(seq, &pointwise),
    }
}

/// `(n, r) ↦ sup_{x ∉ D_n} var_{x,r} f`, one curve per radius.
pub fn higson_profile(f: &ScalarField, seq: &ExpandingSequence, radii: &[f64]) -> Vec<DecayProfile> {
    radii
        .iter()
        .map(|&r| {
            let pointwise: Vec<f64> = f.window().points().map(|x| variation(f, x, r)).collect();
            DecayProfile {
                radius: Some(r),
                values: sup_outside(seq, &pointwise),
            }
        })
        .collect()
}

/// One tent: the ball `B_{2^level}(center)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TentCenter {
    pub point: Point,
    pub level: u32,
}

impl TentCenter {
    pub fn radius(&self) -> f64 {
        f64::from(1u32 << self.level)
    }
}

/// `f(x) = (2^n - d(x, x_n)) / 2^n` on `B_{2^n}(x_n)`, zero elsewhere.
pub fn tent_function(space: &Arc<FiniteWindow>, centers: &[TentCenter]) -> Result<ScalarField, FunctionError> {
    let mut owner: Vec<Option<Point>> = vec![None; space.len()];
    let mut values = vec![0.0; space.len()];
    for c in centers {
        if c.point >= space.len() {
            return Err(FunctionError::Malformed(format!("tent center {} outside the window", c.point)));
        }
        let radius = c.radius();
        for x in space.points() {
            let d = space.dist(x, c.point);
            if d <= radius {
                if let Some(first) = owner[x] {
                    return Err(FunctionError::OverlappingBalls {
                        first,
                        second: c.point,
                    });
                }
                owner[x] = Some(c.point);
                values[x] = (radius - d) / radius;
            }
        }
    }
    ScalarField::from_real(Arc::clone(space), values)
}

/// Greedy tent placement for the metric `m`.
///
/// Level `n = 1, 2, …` takes the point with the smallest `ρ(x, x')` among those
/// with `ρ(x, x') > 2^{n+2}`, at distance `> 2^{n+1}` from earlier centers, and
/// whose ball `B_{2^n}(x)` is not cut by the window edge (it has the full
/// growth-bound cardinality). Placement stops at the first level with no
/// candidate.
pub fn tent_centers(m: &DoubledMetric) -> Vec<TentCenter> {
    let w = m.base();
    let mut centers: Vec<TentCenter> = Vec::new();
    for level in 1u32.. {
        let radius = f64::from(1u32 << level);
        let full = growth_bound(w, &[radius]).entries[0].1;
        let candidate = w
            .points()
            .filter(|&x| m.cross(x, x) > 4.0 * radius)
            .filter(|&x| {
                centers
                    .iter()
                    .all(|c| w.dist(x, c.point) > 2.0 * radius)
            })
            .filter(|&x| ball(w, x, radius).len() == full)
            .min_by(|&a, &b| m.cross(a, a).total_cmp(&m.cross(b, b)).then(a.cmp(&b)));
        match candidate {
            Some(point) => centers.push(TentCenter { point, level }),
            None => break,
        }
        if level >= 30 {
            break;
        }
    }
    centers
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    InC0,
    HigsonNotC0,
    NotHigson,
}

/// How a profile's tail behaves along the window family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Vanishing,
    Persisting,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyConfig {
    pub tol_fit: f64,
    /// A nonincreasing tail counts as decaying once the largest window is at
    /// most this fraction of the smallest.
    pub decay_ratio: f64,
    pub radii: Vec<f64>,
    pub min_windows: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            tol_fit: 1e-6,
            decay_ratio: 0.5,
            radii: vec![1.0, 2.0, 4.0],
            min_windows: 3,
        }
    }
}

/// Grading indices examined for a sequence of horizon `horizon`: the last
/// third of `1..=max(1, horizon/2)`.
pub fn tail_indices(horizon: usize) -> std::ops::RangeInclusive<usize> {
    let edge = (horizon / 2).max(1);
    let start = (2 * edge / 3 + 1).min(edge);
    start..=edge
}

/// Largest profile value over the tail indices.
pub fn tail_value(profile: &[f64], horizon: usize) -> f64 {
    tail_indices(horizon)
        .filter_map(|n| profile.get(n - 1).copied())
        .fold(0.0, f64::max)
}

/// Tail values across the family and the trend they show.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEvidence {
    pub tails: Vec<f64>,
    pub trend: Trend,
}

/// Reads a trend from per-window tail values ordered by window size.
pub fn tail_trend(tails: &[f64], cfg: &ClassifyConfig) -> TailEvidence {
    let trend = match (tails.first(), tails.last()) {
        (Some(&first), Some(&last)) => {
            let slack = |v: f64| v * (1.0 + 1e-9) + 1e-15;
            let nonincreasing = tails.windows(2).all(|p| p[1] <= slack(p[0]));
            let max = tails.iter().copied().fold(0.0, f64::max);
            if last <= cfg.tol_fit {
                Trend::Vanishing
            } else if nonincreasing && last <= cfg.decay_ratio * first {
                Trend::Vanishing
            } else if last > cfg.decay_ratio * max {
                Trend::Persisting
            } else {
                Trend::Inconclusive
            }
        }
        _ => Trend::Inconclusive,
    };
    TailEvidence {
        tails: tails.to_vec(),
        trend,
    }
}

/// One member of a window family.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub field: ScalarField,
    pub seq: ExpandingSequence,
}

/// Profiles of one window, kept as evidence.
#[derive(Debug, Clone, Serialize)]
pub struct WindowEvidence {
    pub points: usize,
    pub horizon: usize,
    pub vanishing: DecayProfile,
    pub higson: Vec<DecayProfile>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub vanishing: TailEvidence,
    pub higson: Vec<(f64, TailEvidence)>,
    pub config: ClassifyConfig,
    pub windows: Vec<WindowEvidence>,
}

fn check_members(family: &[FamilyMember], cfg: &ClassifyConfig) -> Result<(), FunctionError> {
    if family.len() < cfg.min_windows {
        return Err(FunctionError::TooFewWindows {
            needed: cfg.min_windows,
            got: family.len(),
        });
    }
    if family
        .iter()
        .any(|m| m.field.window().len() != m.seq.window().len())
    {
        return Err(FunctionError::WindowMismatch);
    }
    Ok(())
}

/// `IN_C0`, `HIGSON_NOT_C0` or `NOT_HIGSON` from profiles on nested windows,
/// ordered from smallest to largest.
pub fn classify(family: &[FamilyMember], cfg: &ClassifyConfig) -> Result<Classification, FunctionError> {
    check_members(family, cfg)?;
    let windows: Vec<WindowEvidence> = family
        .par_iter()
        .map(|m| WindowEvidence {
            points: m.field.window().len(),
            horizon: m.seq.horizon(),
            vanishing: vanishing_profile(&m.field, &m.seq),
            higson: higson_profile(&m.field, &m.seq, &cfg.radii),
        })
        .collect();

    let vanishing_tails: Vec<f64> = windows
        .iter()
        .map(|w| tail_value(&w.vanishing.values, w.horizon))
        .collect();
    let vanishing = tail_trend(&vanishing_tails, cfg);
    let higson: Vec<(f64, TailEvidence)> = cfg
        .radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let tails: Vec<f64> = windows
                .iter()
                .map(|w| tail_value(&w.higson[i].values, w.horizon))
                .collect();
            (r, tail_trend(&tails, cfg))
        })
        .collect();

    let verdict = match vanishing.trend {
        Trend::Vanishing => Verdict::InC0,
        Trend::Inconclusive => {
            return Err(FunctionError::InconclusiveHorizon(format!(
                "vanishing tails {:?}",
                vanishing.tails
            )))
        }
        Trend::Persisting => {
            if higson.iter().any(|(_, e)| e.trend == Trend::Persisting) {
                Verdict::NotHigson
            } else if let Some((r, e)) = higson.iter().find(|(_, e)| e.trend == Trend::Inconclusive) {
                return Err(FunctionError::InconclusiveHorizon(format!(
                    "variation tails at r = {r}: {:?}",
                    e.tails
                )));
            } else {
                Verdict::HigsonNotC0
            }
        }
    };
    Ok(Classification {
        verdict,
        vanishing,
        higson,
        config: cfg.clone(),
        windows,
    })
}

/// Smallest disc containing `points`: the constant minimising
/// `max_i |p_i - c|`.
pub fn chebyshev_center(points: &[C64]) -> C64 {
    if points.is_empty() {
        return C64::new(0.0, 0.0);
    }
    if points.iter().all(|p| p.im == 0.0) {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.re), hi.max(p.re)));
        return C64::new((lo + hi) / 2.0, 0.0);
    }
    minimal_enclosing_disc(points).0
}

fn disc_from_two(a: C64, b: C64) -> (C64, f64) {
    let c = (a + b) * 0.5;
    (c, (a - c).norm())
}

fn disc_from_three(a: C64, b: C64, c: C64) -> Option<(C64, f64)> {
    let d = 2.0 * (a.re * (b.im - c.im) + b.re * (c.im - a.im) + c.re * (a.im - b.im));
    if d.abs() < 1e-300 {
        return None;
    }
    let (a2, b2, c2) = (a.norm_sqr(), b.norm_sqr(), c.norm_sqr());
    let ux = (a2 * (b.im - c.im) + b2 * (c.im - a.im) + c2 * (a.im - b.im)) / d;
    let uy = (a2 * (c.re - b.re) + b2 * (a.re - c.re) + c2 * (b.re - a.re)) / d;
    let center = C64::new(ux, uy);
    Some((center, (a - center).norm()))
}

fn minimal_enclosing_disc(points: &[C64]) -> (C64, f64) {
    let eps = 1e-12;
    let inside = |disc: (C64, f64), p: C64| (p - disc.0).norm() <= disc.1 * (1.0 + eps) + eps;
    let mut disc = (points[0], 0.0);
    for i in 1..points.len() {
        if inside(disc, points[i]) {
            continue;
        }
        disc = (points[i], 0.0);
        for j in 0..i {
            if inside(disc, points[j]) {
                continue;
            }
            disc = disc_from_two(points[i], points[j]);
            for k in 0..j {
                if inside(disc, points[k]) {
                    continue;
                }
                disc = disc_from_three(points[i], points[j], points[k])
                    .unwrap_or_else(|| {
                        // collinear: the widest pair spans the disc
                        [
                            disc_from_two(points[i], points[j]),
                            disc_from_two(points[i], points[k]),
                            disc_from_two(points[j], points[k]),
                        ]
                        .into_iter()
                        .max_by(|a, b| a.1.total_cmp(&b.1))
                        .unwrap()
                    });
            }
        }
    }
    disc
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassComparison {
    pub equal: bool,
    /// Best constant, fitted on the tail of the largest window.
    #[serde(serialize_with = "crate::operators::serialize_c64")]
    pub constant: C64,
    /// `D_n = X` inside the trusted range on every window.
    pub unital: bool,
    pub difference: TailEvidence,
}

/// Compares `[f]` and `[f']` in `C_h / C_0~`.
///
/// `C_0~` always contains the constants (it is `C_0` itself when unital and its
/// unitalization otherwise), so the difference is tested after removing the
/// best constant.
pub fn class_equal(
    f: &[FamilyMember],
    f2: &[ScalarField],
    cfg: &ClassifyConfig,
) -> Result<ClassComparison, FunctionError> {
    check_members(f, cfg)?;
    if f2.len() != f.len() {
        return Err(FunctionError::WindowMismatch);
    }
    let diffs: Vec<ScalarField> = f
        .iter()
        .zip(f2)
        .map(|(m, g)| m.field.sub(g))
        .collect::<Result<_, _>>()?;

    let last = f.len() - 1;
    let seq = &f[last].seq;
    let tail_start = *tail_indices(seq.horizon()).start();
    let tail_points: Vec<C64> = match seq.set(tail_start) {
        Some(d) => diffs[last]
            .values()
            .iter()
            .enumerate()
            .filter(|(x, _)| !d.contains(*x))
            .map(|(_, v)| *v)
            .collect(),
        None => Vec::new(),
    };
    let constant = chebyshev_center(&tail_points);

    let tails: Vec<f64> = f
        .iter()
        .zip(&diffs)
        .map(|(m, g)| {
            let p = vanishing_profile(&g.shift(constant), &m.seq);
            tail_value(&p.values, m.seq.horizon())
        })
        .collect();
    let difference = tail_trend(&tails, cfg);
    let unital = f.iter().all(|m| {
        m.seq
            .stabilization_index()
            .is_some_and(|n| n <= *tail_indices(m.seq.horizon()).end())
    });
    Ok(ClassComparison {
        equal: difference.trend == Trend::Vanishing,
        constant,
        unital,
        difference,
    })
}
