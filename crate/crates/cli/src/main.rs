//! `roelab` command-line front end.
//!
//! Every argument that takes a document accepts either a file path or the
//! JSON text itself. The primary result is printed to stdout as JSON; with
//! `--out DIR` it is also written to `DIR` together with CSV curves. Errors go
//! to stderr as a JSON object carrying the exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use roelab::doubled::{
    extract_expanding_sequence, rho_from_sequence, sequences_equivalent, DoubledError, DoubledMetric,
    DoubledMetricDoc, ExpandingSequence, SequenceDoc,
};
use roelab::functions::{classify, ClassifyConfig, FamilyMember, ScalarField};
use roelab::harness::{
    self, FamilySpec, FunctionSpec, HarnessError, MetricSpec, PointRef, Scenario, WindowContext, EXIT_INVARIANT,
};
use roelab::hochschild::probes::{random_band, random_tuples};
use roelab::hochschild::{
    cup_derivations, hh0_window, odd_cocycle, outer_class, solve_inner, standard_generators, witness_leakage,
    DerivationPresentation, OperatorDoc, PresentationDoc,
};
use roelab::operators::{dyadic_radii, membership_profile, BandOperator};
use roelab::space::{build_space, growth_bound, LatticeMetric, SpaceSpec};

#[derive(Debug, Parser)]
#[command(name = "roelab", version, about = "Finite-window laboratory for Roe algebras and Roe bimodules")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Seed for random probes; overrides the scenario seed for `run`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance for verdicts; overrides the scenario tolerance for `run`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for the JSON result and CSV curves.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Common {
    fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-9)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Finite windows of discrete metric spaces.
    Space {
        #[command(subcommand)]
        command: SpaceCommand,
    },
    /// Doubled metrics on a window.
    Metric {
        #[command(subcommand)]
        command: MetricCommand,
    },
    /// Expanding sequences.
    Seq {
        #[command(subcommand)]
        command: SeqCommand,
    },
    /// Scalar fields on a window family.
    Fn {
        #[command(subcommand)]
        command: FnCommand,
    },
    /// Operators against a doubled metric.
    Op {
        #[command(subcommand)]
        command: OpCommand,
    },
    /// Derivations given on generators.
    Deriv {
        #[command(subcommand)]
        command: DerivCommand,
    },
    /// Zeroth cohomology on one window.
    Hh0 {
        /// Doubled metric document.
        #[arg(long)]
        metric: String,
    },
    /// Cup product of the inner derivations by `f` and `g`.
    Cup {
        #[arg(long)]
        metric: String,
        /// Function spec, JSON array of values, or `point,re,im` CSV file.
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 100)]
        probes: usize,
    },
    /// Odd cocycle `a_1⋯a_2k [a_2k+1, f]` and its witness leakage.
    Cocycle {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 100)]
        probes: usize,
    },
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
    },
}

#[derive(Debug, Subcommand)]
enum SpaceCommand {
    /// Writes a window description, from a spec or a lattice box.
    Gen {
        /// Full space spec; overrides the lattice flags.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        half_width: i64,
        #[arg(long, value_enum, default_value_t = LatticeKind::L1)]
        lattice_metric: LatticeKind,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LatticeKind {
    L1,
    Sup,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricKind {
    RhoPoint,
    RhoWhole,
    RhoSubset,
    RhoGraph,
    RhoBalls,
    RhoSequence,
}

#[derive(Debug, Subcommand)]
enum MetricCommand {
    Build {
        /// Space spec document.
        #[arg(long)]
        space: String,
        #[arg(long, value_enum)]
        kind: MetricKind,
        /// Label or JSON coordinates of the base point.
        #[arg(long)]
        center: Option<String>,
        /// JSON list of points for `rho-subset`.
        #[arg(long)]
        points: Option<String>,
        /// `{"a": [...], "alpha": [[z, t], ...], "b": [...]}` for `rho-graph`.
        #[arg(long)]
        graph: Option<String>,
        /// Ball radius step for `rho-balls`.
        #[arg(long)]
        scale: Option<f64>,
        /// Sequence document for `rho-sequence`.
        #[arg(long)]
        sequence: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum SeqCommand {
    /// `D_n = {x : ρ(x, x') <= n}`.
    Extract {
        #[arg(long)]
        metric: String,
        /// Number of sets; defaults to the natural horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Equivalence map between the sequences of two metrics on one window.
    Compare {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        other: String,
    },
}

#[derive(Debug, Subcommand)]
enum FnCommand {
    /// Classifies a function over a family of windows.
    Classify {
        /// Family spec; defaults to Z-boxes of half-widths 25, 50, 100, 200.
        #[arg(long)]
        family: Option<String>,
        /// Metric recipe; defaults to the point metric at the origin.
        #[arg(long)]
        metric: Option<String>,
        /// Function spec.
        #[arg(long, default_value = r#"{"kind": "tent"}"#)]
        function: String,
    },
}

#[derive(Debug, Subcommand)]
enum OpCommand {
    /// Sandwich `(lower, upper)` on the distance to finite cross-propagation.
    Profile {
        /// Dense or sparse operator document, or `row,col,re,im` CSV file.
        #[arg(long)]
        operator: String,
        #[arg(long)]
        metric: String,
    },
}

#[derive(Debug, Subcommand)]
enum DerivCommand {
    /// Implementing operator of a derivation into the full matrix algebra.
    Solve {
        #[arg(long)]
        presentation: String,
    },
    /// Diagonal class representative and the bimodule test on its remainder.
    Class {
        #[arg(long)]
        presentation: String,
        #[arg(long)]
        metric: String,
    },
}

/// Successful result: JSON for stdout, files for `--out`, exit code.
struct Output {
    name: &'static str,
    json: Value,
    files: Vec<(String, Vec<u8>)>,
    code: i32,
}

impl Output {
    fn new(name: &'static str, json: Value) -> Self {
        Output {
            name,
            json,
            files: Vec::new(),
            code: 0,
        }
    }

    fn file(mut self, name: impl Into<String>, bytes: Vec<u8>) -> Self {
        self.files.push((name.into(), bytes));
        self
    }

    fn code(mut self, code: i32) -> Self {
        self.code = code;
        self
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Reads `arg` as a file when one exists at that path, otherwise as text.
fn read_arg(arg: &str) -> Result<String, HarnessError> {
    let path = Path::new(arg);
    if path.is_file() {
        Ok(std::fs::read_to_string(path)?)
    } else {
        Ok(arg.to_string())
    }
}

fn parse<T: DeserializeOwned>(what: &str, arg: &str) -> Result<T, HarnessError> {
    let text = read_arg(arg)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config {
        message: format!("{what}: {e}"),
        line: Some(e.line()),
        column: Some(e.column()),
    })
}

fn load_metric(arg: &str) -> Result<(DoubledMetric, SpaceSpec), HarnessError> {
    let doc: DoubledMetricDoc = parse("metric", arg)?;
    Ok((DoubledMetric::from_doc(&doc)?, doc.base))
}

fn load_window(arg: &str) -> Result<WindowContext, HarnessError> {
    let (metric, spec) = load_metric(arg)?;
    let seq = extract_expanding_sequence(&metric, metric.natural_horizon())?;
    Ok(WindowContext {
        spec,
        space: Arc::clone(metric.base()),
        metric,
        seq,
    })
}

/// A function spec, a JSON array of real values, or a CSV file.
fn load_field(arg: &str, ctx: &WindowContext) -> Result<ScalarField, HarnessError> {
    let path = Path::new(arg);
    if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let file = std::fs::File::open(path)?;
        return Ok(ScalarField::read_csv(Arc::clone(&ctx.space), file)?);
    }
    let value: Value = parse("function", arg)?;
    if value.is_array() {
        let values: Vec<f64> =
            serde_json::from_value(value).map_err(|e| HarnessError::config(format!("function values: {e}")))?;
        return Ok(ScalarField::from_real(Arc::clone(&ctx.space), values)?);
    }
    let spec: FunctionSpec =
        serde_json::from_value(value).map_err(|e| HarnessError::config(format!("function spec: {e}")))?;
    spec.build(ctx)
}

fn load_operator(arg: &str, dim: usize) -> Result<BandOperator, HarnessError> {
    let path = Path::new(arg);
    if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let file = std::fs::File::open(path)?;
        return Ok(BandOperator::read_triplets(dim, file)?);
    }
    let doc: OperatorDoc = parse("operator", arg)?;
    Ok(match doc {
        OperatorDoc::Dense(d) => BandOperator::from_doc(&d)?,
        OperatorDoc::Sparse(s) => {
            let presentation = DerivationPresentation::from_doc(&PresentationDoc {
                generators: vec![OperatorDoc::Sparse(s.clone())],
                values: vec![OperatorDoc::Sparse(s)],
            })?;
            presentation.values()[0].to_band()
        }
    })
}

fn point_ref(arg: &str) -> PointRef {
    match serde_json::from_str::<Vec<i64>>(arg) {
        Ok(coords) => PointRef::Coords(coords),
        Err(_) => PointRef::Label(arg.to_string()),
    }
}

fn csv_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| HarnessError::Io(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))
}

fn space_gen(spec: Option<&str>, dim: usize, half_width: i64, kind: LatticeKind) -> Result<Output, HarnessError> {
    let spec = match spec {
        Some(arg) => parse("space", arg)?,
        None => SpaceSpec::Lattice {
            dim,
            lo: -half_width,
            hi: half_width,
            metric: match kind {
                LatticeKind::L1 => LatticeMetric::L1,
                LatticeKind::Sup => LatticeMetric::Sup,
            },
            horizon: None,
        },
    };
    let space = build_space(&spec)?;
    let growth = growth_bound(&space, &dyadic_radii(space.diameter().max(1.0)));
    let csv = csv_rows(
        &["r", "n_r"],
        growth.entries.iter().map(|(r, n)| vec![r.to_string(), n.to_string()]),
    )?;
    Ok(Output::new("space", to_json(&spec)).file("growth.csv", csv))
}

#[allow(clippy::too_many_arguments)]
fn metric_build(
    space: &str,
    kind: MetricKind,
    center: Option<&str>,
    points: Option<&str>,
    graph: Option<&str>,
    scale: Option<f64>,
    sequence: Option<&str>,
) -> Result<Output, HarnessError> {
    let spec: SpaceSpec = parse("space", space)?;
    let window = Arc::new(build_space(&spec)?);
    let center = center.map_or(PointRef::Label("origin".into()), point_ref);
    let metric = match kind {
        MetricKind::RhoPoint => MetricSpec::RhoPoint { center }.build(&window)?,
        MetricKind::RhoWhole => MetricSpec::RhoWhole.build(&window)?,
        MetricKind::RhoSubset => {
            let points = points.ok_or_else(|| HarnessError::config("rho-subset needs --points"))?;
            MetricSpec::RhoSubset {
                points: parse("points", points)?,
            }
            .build(&window)?
        }
        MetricKind::RhoGraph => {
            #[derive(serde::Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Graph {
                a: Vec<PointRef>,
                alpha: Vec<(PointRef, PointRef)>,
                b: Vec<PointRef>,
            }
            let g: Graph = parse("graph", graph.ok_or_else(|| HarnessError::config("rho-graph needs --graph"))?)?;
            MetricSpec::RhoGraph {
                a: g.a,
                alpha: g.alpha,
                b: g.b,
            }
            .build(&window)?
        }
        MetricKind::RhoBalls => MetricSpec::RhoBalls {
            center,
            scale: scale.ok_or_else(|| HarnessError::config("rho-balls needs --scale"))?,
        }
        .build(&window)?,
        MetricKind::RhoSequence => {
            let doc: SequenceDoc = parse(
                "sequence",
                sequence.ok_or_else(|| HarnessError::config("rho-sequence needs --sequence"))?,
            )?;
            let seq = ExpandingSequence::from_point_lists(Arc::clone(&window), &doc.sets, doc.r_witness)?;
            rho_from_sequence(&window, &seq)?
        }
    };
    Ok(Output::new("metric", to_json(&metric.to_doc(spec))))
}

fn seq_extract(metric: &str, horizon: Option<usize>) -> Result<Output, HarnessError> {
    let (m, _) = load_metric(metric)?;
    let seq = extract_expanding_sequence(&m, horizon.unwrap_or_else(|| m.natural_horizon()))?;
    let csv = csv_rows(
        &["n", "size"],
        seq.sets().iter().enumerate().map(|(i, s)| vec![(i + 1).to_string(), s.len().to_string()]),
    )?;
    Ok(Output::new("sequence", to_json(&seq.to_doc())).file("sizes.csv", csv))
}

fn seq_compare(metric: &str, other: &str) -> Result<Output, HarnessError> {
    let (m1, _) = load_metric(metric)?;
    let (m2, _) = load_metric(other)?;
    let s1 = extract_expanding_sequence(&m1, m1.natural_horizon())?;
    let s2 = extract_expanding_sequence(&m2, m2.natural_horizon())?;
    let json = match sequences_equivalent(&s1, &s2) {
        Ok(map) => json!({ "equivalent_within_horizon": true, "phi": map.phi, "horizon_too_small": null }),
        Err(DoubledError::HorizonTooSmall { n }) => {
            json!({ "equivalent_within_horizon": false, "phi": null, "horizon_too_small": n })
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Output::new("comparison", json))
}

fn fn_classify(family: Option<&str>, metric: Option<&str>, function: &str) -> Result<Output, HarnessError> {
    let family: FamilySpec = match family {
        Some(arg) => parse("family", arg)?,
        None => FamilySpec::ZBoxes {
            half_widths: vec![25, 50, 100, 200],
        },
    };
    let metric: MetricSpec = match metric {
        Some(arg) => parse("metric", arg)?,
        None => MetricSpec::RhoPoint {
            center: PointRef::Label("origin".into()),
        },
    };
    let function: FunctionSpec = parse("function", function)?;
    let scenario = Scenario {
        name: "classify".into(),
        description: String::new(),
        seed: 0,
        tol: 1e-9,
        family,
        metric,
        functions: Default::default(),
        experiments: Vec::new(),
    };
    let windows = scenario.build_family()?;
    let members = windows
        .iter()
        .map(|ctx| {
            Ok(FamilyMember {
                field: function.build(ctx)?,
                seq: ctx.seq.clone(),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let c = classify(&members, &ClassifyConfig::default())?;
    let mut out = Output::new("classification", to_json(&c));
    for (w, ctx) in c.windows.iter().zip(&windows) {
        let mut buf = Vec::new();
        w.vanishing
            .write_csv(&mut buf)
            .map_err(|e| HarnessError::Io(e.to_string()))?;
        for p in &w.higson {
            p.write_csv(&mut buf).map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        out = out.file(format!("{}.csv", ctx.tag()), buf);
    }
    Ok(out)
}

fn op_profile(operator: &str, metric: &str, tol: f64) -> Result<Output, HarnessError> {
    let (m, _) = load_metric(metric)?;
    let a = load_operator(operator, m.len())?;
    let profile = membership_profile(&a, &m, &dyadic_radii(m.natural_horizon() as f64))?;
    let mut csv = Vec::new();
    profile.write_csv(&mut csv).map_err(|e| HarnessError::Io(e.to_string()))?;
    let code = if profile.is_sound() { 0 } else { EXIT_INVARIANT };
    let json = json!({
        "profile": profile,
        "sound": profile.is_sound(),
        "upper_vanishes_from": profile.last_above(tol),
    });
    Ok(Output::new("profile", json).file("profile.csv", csv).code(code))
}

fn deriv_solve(presentation: &str) -> Result<Output, HarnessError> {
    let doc: PresentationDoc = parse("presentation", presentation)?;
    let d = DerivationPresentation::from_doc(&doc)?;
    let solution = solve_inner(&d)?;
    let mut json = to_json(&solution);
    json["b"] = to_json(&solution.b.to_doc());
    let mut csv = Vec::new();
    solution
        .b
        .write_triplets(&mut csv)
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(Output::new("solution", json).file("b.csv", csv))
}

fn deriv_class(presentation: &str, metric: &str, tol: f64) -> Result<Output, HarnessError> {
    let doc: PresentationDoc = parse("presentation", presentation)?;
    let d = DerivationPresentation::from_doc(&doc)?;
    let (m, _) = load_metric(metric)?;
    let class = outer_class(&d, &m, tol)?;
    let mut json = to_json(&class);
    json["representative"] = to_json(&class.representative.values().iter().map(|v| [v.re, v.im]).collect::<Vec<_>>());
    let mut field = Vec::new();
    class
        .representative
        .write_csv(&mut field)
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    let mut profile = Vec::new();
    class
        .off_diagonal_profile
        .write_csv(&mut profile)
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(Output::new("class", json)
        .file("representative.csv", field)
        .file("off_diagonal.csv", profile))
}

fn hh0(metric: &str, tol: f64) -> Result<Output, HarnessError> {
    let (m, _) = load_metric(metric)?;
    let w = hh0_window(&standard_generators(m.len()), &m, tol)?;
    let mut csv = Vec::new();
    w.identity_profile
        .write_csv(&mut csv)
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(Output::new("hh0", to_json(&w)).file("identity.csv", csv))
}

fn cup(metric: &str, f: &str, g: &str, probes: usize, seed: u64, tol: f64) -> Result<Output, HarnessError> {
    let ctx = load_window(metric)?;
    let fo = load_field(f, &ctx)?.to_operator();
    let go = load_field(g, &ctx)?.to_operator();
    let space = ctx.space.as_ref();
    let tuples = random_tuples(|rng| random_band(space, 1.0, rng), 2, probes, seed);
    let result = cup_derivations(&fo, &go, &tuples)?;
    let code = if result.residual <= tol { 0 } else { EXIT_INVARIANT };
    Ok(Output::new("cup", to_json(&result)).code(code))
}

fn cocycle(metric: &str, k: usize, f: &str, probes: usize, seed: u64, tol: f64) -> Result<Output, HarnessError> {
    let ctx = load_window(metric)?;
    let fo = load_field(f, &ctx)?.to_operator();
    let space = ctx.space.as_ref();
    let tuples = random_tuples(|rng| random_band(space, 1.0, rng), 2 * k + 2, probes, seed);
    let result = odd_cocycle(k, &fo, &tuples)?;
    let identities = vec![BandOperator::identity(ctx.space.len()); 2 * k];
    let leakage = witness_leakage(
        k,
        &fo,
        &identities,
        &ctx.metric,
        &dyadic_radii(ctx.metric.natural_horizon() as f64),
    )?;
    let mut csv = Vec::new();
    leakage.write_csv(&mut csv).map_err(|e| HarnessError::Io(e.to_string()))?;
    let ok = result.cocycle_residual <= tol && result.sign_residual <= tol;
    let json = json!({ "cocycle": result, "leakage": leakage });
    Ok(Output::new("cocycle", json)
        .file("leakage.csv", csv)
        .code(if ok { 0 } else { EXIT_INVARIANT }))
}

fn run(arg: &str, common: &Common) -> Result<Output, HarnessError> {
    let text = match harness::bundled(arg) {
        Some(text) if !Path::new(arg).exists() => text.to_string(),
        _ if Path::new(arg).is_file() || arg.trim_start().starts_with('{') => read_arg(arg)?,
        _ => {
            let names: Vec<&str> = harness::BUNDLED.iter().map(|(n, _)| *n).collect();
            return Err(HarnessError::config(format!(
                "{arg:?} is neither a scenario file, inline JSON nor a bundled scenario ({})",
                names.join(", ")
            )));
        }
    };
    let mut scenario = Scenario::from_json(&text)?;
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    if let Some(tol) = common.tol {
        scenario.tol = tol;
    }
    // the harness writes its own report and evidence
    let report = harness::run(&scenario, common.out.as_deref())?;
    let mut out = Output::new("report", serde_json::from_str(&report.to_json()).expect("report is JSON"));
    out.code = report.exit_code();
    Ok(out)
}

fn execute(cli: &Cli) -> Result<Output, HarnessError> {
    let c = &cli.common;
    match &cli.command {
        Command::Space {
            command:
                SpaceCommand::Gen {
                    spec,
                    dim,
                    half_width,
                    lattice_metric,
                },
        } => space_gen(spec.as_deref(), *dim, *half_width, *lattice_metric),
        Command::Metric {
            command:
                MetricCommand::Build {
                    space,
                    kind,
                    center,
                    points,
                    graph,
                    scale,
                    sequence,
                },
        } => metric_build(
            space,
            *kind,
            center.as_deref(),
            points.as_deref(),
            graph.as_deref(),
            *scale,
            sequence.as_deref(),
        ),
        Command::Seq {
            command: SeqCommand::Extract { metric, horizon },
        } => seq_extract(metric, *horizon),
        Command::Seq {
            command: SeqCommand::Compare { metric, other },
        } => seq_compare(metric, other),
        Command::Fn {
            command: FnCommand::Classify {
                family,
                metric,
                function,
            },
        } => fn_classify(family.as_deref(), metric.as_deref(), function),
        Command::Op {
            command: OpCommand::Profile { operator, metric },
        } => op_profile(operator, metric, c.tol()),
        Command::Deriv {
            command: DerivCommand::Solve { presentation },
        } => deriv_solve(presentation),
        Command::Deriv {
            command: DerivCommand::Class { presentation, metric },
        } => deriv_class(presentation, metric, c.tol()),
        Command::Hh0 { metric } => hh0(metric, c.tol()),
        Command::Cup { metric, f, g, probes } => cup(metric, f, g, *probes, c.seed(), c.tol()),
        Command::Cocycle { metric, k, f, probes } => cocycle(metric, *k, f, *probes, c.seed(), c.tol()),
        Command::Run { scenario } => run(scenario, c),
    }
}

fn write_out(dir: &Path, out: &Output) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    if out.name != "report" {
        let text = serde_json::to_string_pretty(&out.json).expect("serializable");
        std::fs::write(dir.join(format!("{}.json", out.name)), text)?;
        for (name, bytes) in &out.files {
            std::fs::write(dir.join(name), bytes)?;
        }
    }
    Ok(())
}

fn fail(e: &HarnessError) -> ExitCode {
    let _ = writeln!(std::io::stderr().lock(), "{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail(&HarnessError::config(e.to_string().trim_end()));
        }
    };
    let out = match execute(&cli) {
        Ok(out) => out,
        Err(e) => return fail(&e),
    };
    if let Some(dir) = &cli.common.out {
        if let Err(e) = write_out(dir, &out) {
            return fail(&e);
        }
    }
    let text = serde_json::to_string_pretty(&out.json).expect("serializable");
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    ExitCode::from(out.code as u8)
}
