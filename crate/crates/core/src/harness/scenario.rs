//! Scenario files: a family of nested windows, a doubled metric recipe,
//! named functions and a list of experiments.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::doubled::{
    extract_expanding_sequence, rho_from_sequence, rho_graph, rho_point, rho_subset, rho_whole, DoubledMetric,
    ExpandingSequence,
};
use crate::functions::{tent_centers, tent_function, ScalarField};
use crate::space::{ball, build_space, FiniteWindow, LatticeMetric, Point, PointSet, SpaceSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    /// Default tolerance for experiments that do not set their own.
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub family: FamilySpec,
    pub metric: MetricSpec,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionSpec>,
    pub experiments: Vec<Experiment>,
}

fn default_tol() -> f64 {
    1e-9
}

/// Nested windows, smallest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `[-R, R]` in `Z` for each half-width `R`.
    ZBoxes { half_widths: Vec<i64> },
    /// `[-R, R]^dim` for each half-width `R`.
    Lattices {
        dim: usize,
        half_widths: Vec<i64>,
        #[serde(default)]
        metric: LatticeMetric,
    },
    Windows { spaces: Vec<SpaceSpec> },
}

impl FamilySpec {
    pub fn specs(&self) -> Vec<SpaceSpec> {
        match self {
            FamilySpec::ZBoxes { half_widths } => half_widths.iter().map(|&r| SpaceSpec::z_box(r)).collect(),
            FamilySpec::Lattices {
                dim,
                half_widths,
                metric,
            } => half_widths
                .iter()
                .map(|&r| SpaceSpec::Lattice {
                    dim: *dim,
                    lo: -r,
                    hi: r,
                    metric: *metric,
                    horizon: None,
                })
                .collect(),
            FamilySpec::Windows { spaces } => spaces.clone(),
        }
    }
}

/// A point named by lattice coordinates or by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRef {
    Coords(Vec<i64>),
    Label(String),
}

impl PointRef {
    pub fn resolve(&self, w: &FiniteWindow) -> Result<Point, HarnessError> {
        let found = match self {
            PointRef::Coords(c) => w.find_coords(c),
            PointRef::Label(l) => w.find_label(l),
        };
        found.ok_or_else(|| HarnessError::config(format!("point {self:?} is not in the window")))
    }
}

fn origin() -> PointRef {
    PointRef::Label("origin".into())
}

fn resolve_center(c: &PointRef, w: &FiniteWindow) -> Result<Point, HarnessError> {
    match c {
        PointRef::Label(l) if l == "origin" => match w.coords(0) {
            Some(first) => {
                let zero = vec![0; first.len()];
                w.find_coords(&zero)
                    .ok_or_else(|| HarnessError::config("the window does not contain the origin"))
            }
            None => Ok(0),
        },
        other => other.resolve(w),
    }
}

fn resolve_set(points: &[PointRef], w: &FiniteWindow) -> Result<PointSet, HarnessError> {
    let pts = points.iter().map(|p| p.resolve(w)).collect::<Result<Vec<_>, _>>()?;
    Ok(PointSet::from_points(w.len(), pts)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// `ρ^{x_0}`; the center defaults to the origin.
    RhoPoint {
        #[serde(default = "origin")]
        center: PointRef,
    },
    /// `ρ^X`.
    RhoWhole,
    /// `ρ^A` for the identity on `A`.
    RhoSubset { points: Vec<PointRef> },
    /// `ρ^{A,α,B}`.
    RhoGraph {
        a: Vec<PointRef>,
        alpha: Vec<(PointRef, PointRef)>,
        b: Vec<PointRef>,
    },
    /// `ρ^E` for `E_n = B_{scale·n}(center)` until the balls fill the window.
    RhoBalls {
        #[serde(default = "origin")]
        center: PointRef,
        scale: f64,
    },
}

impl MetricSpec {
    pub fn build(&self, w: &Arc<FiniteWindow>) -> Result<DoubledMetric, HarnessError> {
        Ok(match self {
            MetricSpec::RhoPoint { center } => rho_point(w, resolve_center(center, w)?)?,
            MetricSpec::RhoWhole => rho_whole(w)?,
            MetricSpec::RhoSubset { points } => rho_subset(w, &resolve_set(points, w)?)?,
            MetricSpec::RhoGraph { a, alpha, b } => {
                let pairs = alpha
                    .iter()
                    .map(|(z, t)| Ok((z.resolve(w)?, t.resolve(w)?)))
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                rho_graph(w, &resolve_set(a, w)?, &pairs, &resolve_set(b, w)?)?
            }
            MetricSpec::RhoBalls { center, scale } => {
                if !(*scale > 0.0) {
                    return Err(HarnessError::config("ball scale must be positive"));
                }
                let c = resolve_center(center, w)?;
                let mut sets = Vec::new();
                for n in 1.. {
                    let s = ball(w, c, scale * n as f64);
                    let full = s.is_full();
                    sets.push(s);
                    if full {
                        break;
                    }
                }
                let seq = ExpandingSequence::new(Arc::clone(w), sets, *scale)?;
                rho_from_sequence(w, &seq)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// Tents placed greedily outward from the sequence.
    Tent,
    /// `(-1)^{x_1 + … + x_d}` on lattices.
    Parity,
    /// `χ_{D_n}`.
    SequenceSet { n: usize },
    /// `χ_{B_r(center)}`.
    Ball {
        #[serde(default = "origin")]
        center: PointRef,
        radius: f64,
    },
    Constant { value: f64 },
}

impl FunctionSpec {
    pub fn build(&self, ctx: &WindowContext) -> Result<ScalarField, HarnessError> {
        let w = &ctx.space;
        Ok(match self {
            FunctionSpec::Tent => tent_function(w, &tent_centers(&ctx.metric))?,
            FunctionSpec::Parity => {
                if w.coords(0).is_none() {
                    return Err(HarnessError::config("parity needs lattice coordinates"));
                }
                ScalarField::from_fn(Arc::clone(w), |x| {
                    let s: i64 = w.coords(x).unwrap().iter().sum();
                    if s.rem_euclid(2) == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })?
            }
            FunctionSpec::SequenceSet { n } => {
                let set = ctx.seq.set(*n).ok_or_else(|| {
                    HarnessError::config(format!("D_{n} is beyond the horizon {}", ctx.seq.horizon()))
                })?;
                ScalarField::indicator(Arc::clone(w), set)
            }
            FunctionSpec::Ball { center, radius } => {
                ScalarField::indicator(Arc::clone(w), &ball(w, resolve_center(center, w)?, *radius))
            }
            FunctionSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(HarnessError::config("constant must be finite"));
                }
                ScalarField::constant(Arc::clone(w), *value)
            }
        })
    }
}

/// An operator built on each window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity,
    /// The 0/1 band `a_r`.
    BandUnit { r: f64 },
    /// Multiplication by a named function.
    Multiplication { function: String },
    /// `[a_r, f]`.
    Commutator { r: f64, function: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Exhaustive axiom scan of the doubled metric.
    VerifyMetric { id: String },
    /// `D_n` sizes per window.
    ExtractSequence { id: String },
    /// Equivalence maps against the sequence of another metric.
    CompareSequences { id: String, other: MetricSpec },
    Classify {
        id: String,
        function: String,
        #[serde(default)]
        radii: Option<Vec<f64>>,
        #[serde(default)]
        tol_fit: Option<f64>,
        #[serde(default)]
        decay_ratio: Option<f64>,
    },
    ClassEqual { id: String, left: String, right: String },
    Membership {
        id: String,
        operator: OperatorSpec,
        #[serde(default)]
        tol: Option<f64>,
    },
    /// `‖[a_r, f] − P_n [a_r, f] P_n‖ <= N_r ‖a_r‖ sup_{x ∉ D_n} var_{x,r} f`.
    LemmaBound {
        id: String,
        function: String,
        radii: Vec<f64>,
    },
    /// Outer class of `a ↦ [a, f]`.
    OuterClass {
        id: String,
        function: String,
        #[serde(default)]
        tol: Option<f64>,
    },
    Hh0 {
        id: String,
        #[serde(default)]
        tol: Option<f64>,
    },
    /// `[a, f][b, g]` against `δ([·, f] g)` on the smallest window.
    Cup {
        id: String,
        f: String,
        g: String,
        #[serde(default = "default_probes")]
        probes: usize,
        #[serde(default)]
        tol: Option<f64>,
    },
    /// Odd cocycle residual on the smallest window, witness leakage on the
    /// largest.
    OddCocycle {
        id: String,
        k: usize,
        function: String,
        #[serde(default = "default_probes")]
        probes: usize,
        #[serde(default)]
        tol: Option<f64>,
    },
    /// Diagonal averaging on a random operator of `points` points.
    Averaging {
        id: String,
        points: usize,
        samples: Vec<usize>,
        #[serde(default = "default_trials")]
        trials: usize,
    },
}

fn default_probes() -> usize {
    100
}

fn default_trials() -> usize {
    20
}

impl Experiment {
    pub fn id(&self) -> &str {
        match self {
            Experiment::VerifyMetric { id }
            | Experiment::ExtractSequence { id }
            | Experiment::CompareSequences { id, .. }
            | Experiment::Classify { id, .. }
            | Experiment::ClassEqual { id, .. }
            | Experiment::Membership { id, .. }
            | Experiment::LemmaBound { id, .. }
            | Experiment::OuterClass { id, .. }
            | Experiment::Hh0 { id, .. }
            | Experiment::Cup { id, .. }
            | Experiment::OddCocycle { id, .. }
            | Experiment::Averaging { id, .. } => id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::VerifyMetric { .. } => "verify_metric",
            Experiment::ExtractSequence { .. } => "extract_sequence",
            Experiment::CompareSequences { .. } => "compare_sequences",
            Experiment::Classify { .. } => "classify",
            Experiment::ClassEqual { .. } => "class_equal",
            Experiment::Membership { .. } => "membership",
            Experiment::LemmaBound { .. } => "lemma_bound",
            Experiment::OuterClass { .. } => "outer_class",
            Experiment::Hh0 { .. } => "hh0",
            Experiment::Cup { .. } => "cup",
            Experiment::OddCocycle { .. } => "odd_cocycle",
            Experiment::Averaging { .. } => "averaging",
        }
    }

    fn function_names(&self) -> Vec<&str> {
        match self {
            Experiment::Classify { function, .. }
            | Experiment::LemmaBound { function, .. }
            | Experiment::OuterClass { function, .. }
            | Experiment::OddCocycle { function, .. } => vec![function],
            Experiment::ClassEqual { left, right, .. } => vec![left, right],
            Experiment::Cup { f, g, .. } => vec![f, g],
            Experiment::Membership {
                operator: OperatorSpec::Multiplication { function } | OperatorSpec::Commutator { function, .. },
                ..
            } => vec![function],
            _ => Vec::new(),
        }
    }
}

impl Scenario {
    /// Parses and validates, reporting JSON errors with line and column.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| HarnessError::Config {
            message: e.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.tol > 0.0) {
            return Err(HarnessError::config("tol must be positive"));
        }
        let specs = self.family.specs();
        if specs.is_empty() {
            return Err(HarnessError::config("the window family is empty"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for e in &self.experiments {
            if !ids.insert(e.id()) {
                return Err(HarnessError::config(format!("duplicate experiment id {:?}", e.id())));
            }
            if e.id().is_empty() || !e.id().chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(HarnessError::config(format!(
                    "experiment id {:?} must be nonempty and use only letters, digits, '_' and '-'",
                    e.id()
                )));
            }
            for name in e.function_names() {
                if !self.functions.contains_key(name) {
                    return Err(HarnessError::config(format!(
                        "experiment {:?} refers to unknown function {name:?}",
                        e.id()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Builds every window, its metric and its sequence, in parallel.
    pub fn build_family(&self) -> Result<Vec<WindowContext>, HarnessError> {
        let specs = self.family.specs();
        let windows: Vec<WindowContext> = specs
            .par_iter()
            .map(|spec| WindowContext::new(spec, &self.metric))
            .collect::<Result<_, _>>()?;
        if windows.windows(2).any(|p| p[1].space.len() <= p[0].space.len()) {
            return Err(HarnessError::config("window sizes must be strictly increasing"));
        }
        Ok(windows)
    }
}

/// One window with its metric and extracted sequence.
#[derive(Debug, Clone)]
pub struct WindowContext {
    pub spec: SpaceSpec,
    pub space: Arc<FiniteWindow>,
    pub metric: DoubledMetric,
    pub seq: ExpandingSequence,
}

impl WindowContext {
    pub fn new(spec: &SpaceSpec, metric: &MetricSpec) -> Result<Self, HarnessError> {
        let space = Arc::new(build_space(spec)?);
        let m = metric.build(&space)?;
        let seq = extract_expanding_sequence(&m, m.natural_horizon())?;
        Ok(WindowContext {
            spec: spec.clone(),
            space,
            metric: m,
            seq,
        })
    }

    /// `w<points>`, used in evidence file names.
    pub fn tag(&self) -> String {
        format!("w{}", self.space.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "family": {"kind": "z_boxes", "half_widths": [3, 5, 8]},
        "metric": {"kind": "rho_point"},
        "functions": {"f": {"kind": "tent"}},
        "experiments": [{"kind": "classify", "id": "c", "function": "f"}]
    }"#;

    #[test]
    fn parses_and_builds() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.tol, 1e-9);
        let family = s.build_family().unwrap();
        assert_eq!(family.len(), 3);
        assert_eq!(family[0].seq.horizon(), 7);
        let f = s.functions["f"].build(&family[2]).unwrap();
        assert_eq!(f.sup_norm(), 1.0);
    }

    #[test]
    fn schema_errors_carry_positions() {
        let bad = MINIMAL.replace("\"name\": \"t\",", "\"name\": \"t\", \"bogus\": 1,");
        match Scenario::from_json(&bad) {
            Err(HarnessError::Config { line: Some(2), .. }) => {}
            other => panic!("{other:?}"),
        }
        let unknown = MINIMAL.replace("\"function\": \"f\"", "\"function\": \"g\"");
        assert!(matches!(Scenario::from_json(&unknown), Err(HarnessError::Config { line: None, .. })));
    }

    #[test]
    fn windows_must_grow() {
        let s = Scenario::from_json(&MINIMAL.replace("[3, 5, 8]", "[5, 3]")).unwrap();
        assert!(s.build_family().is_err());
    }

    #[test]
    fn metric_recipes() {
        let w = Arc::new(build_space(&SpaceSpec::z_box(4)).unwrap());
        let balls = MetricSpec::RhoBalls {
            center: origin(),
            scale: 1.0,
        }
        .build(&w)
        .unwrap();
        let zero = w.find_label("0").unwrap();
        assert_eq!(balls.cross(zero, zero), 1.0);
        let graph = MetricSpec::RhoGraph {
            a: vec![PointRef::Coords(vec![1])],
            alpha: vec![(PointRef::Coords(vec![1]), PointRef::Coords(vec![-1]))],
            b: vec![PointRef::Coords(vec![-1])],
        }
        .build(&w)
        .unwrap();
        assert_eq!(graph.cross(w.find_label("1").unwrap(), w.find_label("-1").unwrap()), 1.0);
        assert!(MetricSpec::RhoPoint {
            center: PointRef::Coords(vec![9])
        }
        .build(&w)
        .is_err());
    }
}
