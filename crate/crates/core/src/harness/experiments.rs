//! One function per experiment kind. Each returns a verdict, a pass flag for
//! the invariants it checks, JSON details and CSV evidence.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::scenario::{Experiment, OperatorSpec, Scenario, WindowContext};
use super::HarnessError;
use crate::doubled::{equivalence_trend, extract_expanding_sequence, sequences_equivalent, verify_doubled_metric, DoubledError};
use crate::functions::{
    class_equal, classify, tail_indices, tail_trend, variation, ClassifyConfig, FamilyMember, ScalarField, Trend,
};
use crate::hochschild::probes::{random_band, random_dense, random_tuples, rng};
use crate::hochschild::{
    cup_derivations, hh0_family, hh0_window, odd_cocycle, outer_class_family, standard_generators, witness_leakage,
    DerivationPresentation,
};
use crate::operators::{
    a_r_operator, commutator, diagonal_average, diagonal_average_exhaustive, diagonal_split,
    dyadic_radii, membership_profile, op_norm, BandOperator, MembershipProfile, BAND_BOUND_SLACK, C64,
};
use crate::space::growth_bound;

pub struct Outcome {
    pub verdict: Option<String>,
    pub passed: bool,
    pub tol: f64,
    pub details: Value,
    /// `(file name, contents)`.
    pub files: Vec<(String, Vec<u8>)>,
}

type Files = Vec<(String, Vec<u8>)>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn verdict_string<T: serde::Serialize>(v: &T) -> String {
    match to_value(v) {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))
}

fn profile_bytes(p: &MembershipProfile) -> Result<Vec<u8>, HarnessError> {
    let mut buf = Vec::new();
    p.write_csv(&mut buf)?;
    Ok(buf)
}

fn reading_radius(ctx: &WindowContext) -> f64 {
    ((ctx.metric.natural_horizon() / 2) as f64).max(1.0)
}

fn field(scenario: &Scenario, name: &str, ctx: &WindowContext) -> Result<ScalarField, HarnessError> {
    scenario
        .functions
        .get(name)
        .ok_or_else(|| HarnessError::config(format!("unknown function {name:?}")))?
        .build(ctx)
}

fn members(scenario: &Scenario, family: &[WindowContext], name: &str) -> Result<Vec<FamilyMember>, HarnessError> {
    family
        .iter()
        .map(|ctx| {
            Ok(FamilyMember {
                field: field(scenario, name, ctx)?,
                seq: ctx.seq.clone(),
            })
        })
        .collect()
}

pub fn run_experiment(scenario: &Scenario, family: &[WindowContext], e: &Experiment) -> Result<Outcome, HarnessError> {
    let tol = |own: &Option<f64>| own.unwrap_or(scenario.tol);
    match e {
        Experiment::VerifyMetric { .. } => verify_metric(family),
        Experiment::ExtractSequence { .. } => extract_sequence(family),
        Experiment::CompareSequences { other, .. } => compare_sequences(family, other),
        Experiment::Classify {
            function,
            radii,
            tol_fit,
            decay_ratio,
            ..
        } => {
            let mut cfg = ClassifyConfig::default();
            if let Some(r) = radii {
                cfg.radii = r.clone();
            }
            if let Some(t) = tol_fit {
                cfg.tol_fit = *t;
            }
            if let Some(d) = decay_ratio {
                cfg.decay_ratio = *d;
            }
            run_classify(scenario, family, function, &cfg)
        }
        Experiment::ClassEqual { left, right, .. } => run_class_equal(scenario, family, left, right),
        Experiment::Membership { operator, tol: t, .. } => membership(scenario, family, operator, tol(t)),
        Experiment::LemmaBound { function, radii, .. } => lemma_bound(scenario, family, function, radii),
        Experiment::OuterClass { function, tol: t, .. } => outer(scenario, family, function, tol(t)),
        Experiment::Hh0 { tol: t, .. } => hh0(family, tol(t)),
        Experiment::Cup {
            f, g, probes, tol: t, ..
        } => cup(scenario, family, f, g, *probes, tol(t)),
        Experiment::OddCocycle {
            k,
            function,
            probes,
            tol: t,
            ..
        } => odd(scenario, family, *k, function, *probes, tol(t)),
        Experiment::Averaging {
            points,
            samples,
            trials,
            ..
        } => averaging(scenario.seed, *points, samples, *trials),
    }
}

fn verify_metric(family: &[WindowContext]) -> Result<Outcome, HarnessError> {
    let reports: Vec<_> = family.par_iter().map(|ctx| verify_doubled_metric(&ctx.metric)).collect();
    let passed = reports.iter().all(|r| r.is_metric());
    let tol = reports.iter().map(|r| r.tolerance).fold(0.0, f64::max);
    let windows: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "points": r.points,
                "checked_triples": r.checked_triples,
                "total_violations": r.total_violations,
                "violations": r.violations.iter().take(10).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Outcome {
        verdict: Some(if passed { "METRIC" } else { "NOT_METRIC" }.into()),
        passed,
        tol,
        details: json!({ "windows": windows }),
        files: Vec::new(),
    })
}

fn extract_sequence(family: &[WindowContext]) -> Result<Outcome, HarnessError> {
    let mut files = Files::new();
    let mut windows = Vec::new();
    for ctx in family {
        let sizes: Vec<usize> = ctx.seq.sets().iter().map(|s| s.len()).collect();
        files.push((
            format!("{}.csv", ctx.tag()),
            csv_bytes(
                &["n", "size"],
                sizes.iter().enumerate().map(|(i, s)| vec![(i + 1).to_string(), s.to_string()]),
            )?,
        ));
        windows.push(json!({
            "points": ctx.space.len(),
            "horizon": ctx.seq.horizon(),
            "first_set": ctx.seq.set(1).map(|s| s.len()),
            "stabilization_index": ctx.seq.stabilization_index(),
            "r_witness": ctx.seq.r_witness(),
        }));
    }
    Ok(Outcome {
        verdict: None,
        passed: true,
        tol: 0.0,
        details: json!({ "windows": windows }),
        files,
    })
}

fn compare_sequences(
    family: &[WindowContext],
    other: &super::scenario::MetricSpec,
) -> Result<Outcome, HarnessError> {
    let mut files = Files::new();
    let mut windows = Vec::new();
    let mut maps = Vec::new();
    for ctx in family {
        let m2 = other.build(&ctx.space)?;
        let seq2 = extract_expanding_sequence(&m2, m2.natural_horizon())?;
        match sequences_equivalent(&ctx.seq, &seq2) {
            Ok(map) => {
                files.push((
                    format!("{}.csv", ctx.tag()),
                    csv_bytes(
                        &["n", "phi"],
                        map.phi.iter().enumerate().map(|(i, p)| vec![(i + 1).to_string(), p.to_string()]),
                    )?,
                ));
                windows.push(json!({ "points": ctx.space.len(), "phi_length": map.phi.len(), "horizon_too_small": null }));
                maps.push(map);
            }
            Err(DoubledError::HorizonTooSmall { n }) => {
                windows.push(json!({ "points": ctx.space.len(), "phi_length": null, "horizon_too_small": n }));
            }
            Err(other) => return Err(other.into()),
        }
    }
    let max_index = family.first().map_or(0, |c| c.seq.horizon() / 2);
    let verdict = equivalence_trend(&maps, max_index);
    Ok(Outcome {
        verdict: Some(verdict_string(&verdict)),
        passed: true,
        tol: 0.0,
        details: json!({ "windows": windows, "compared_up_to": max_index }),
        files,
    })
}

fn run_classify(
    scenario: &Scenario,
    family: &[WindowContext],
    name: &str,
    cfg: &ClassifyConfig,
) -> Result<Outcome, HarnessError> {
    let members = members(scenario, family, name)?;
    let c = classify(&members, cfg)?;
    let mut files = Files::new();
    for (w, ctx) in c.windows.iter().zip(family) {
        let mut header = vec!["n".to_string(), "vanishing".to_string()];
        header.extend(w.higson.iter().map(|p| format!("variation_r{}", p.radius.unwrap_or(0.0))));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = (0..w.vanishing.values.len()).map(|i| {
            let mut row = vec![(i + 1).to_string(), w.vanishing.values[i].to_string()];
            row.extend(w.higson.iter().map(|p| p.values[i].to_string()));
            row
        });
        files.push((format!("{}.csv", ctx.tag()), csv_bytes(&header, rows)?));
    }
    Ok(Outcome {
        verdict: Some(verdict_string(&c.verdict)),
        passed: true,
        tol: cfg.tol_fit,
        details: json!({
            "vanishing": c.vanishing,
            "higson": c.higson,
            "config": c.config,
        }),
        files,
    })
}

fn run_class_equal(scenario: &Scenario, family: &[WindowContext], left: &str, right: &str) -> Result<Outcome, HarnessError> {
    let lhs = members(scenario, family, left)?;
    let rhs = family
        .iter()
        .map(|ctx| field(scenario, right, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = ClassifyConfig::default();
    let cmp = class_equal(&lhs, &rhs, &cfg)?;
    Ok(Outcome {
        verdict: Some(if cmp.equal { "EQUAL" } else { "DIFFERENT" }.into()),
        passed: true,
        tol: cfg.tol_fit,
        details: to_value(&cmp),
        files: Vec::new(),
    })
}

fn build_operator(scenario: &Scenario, ctx: &WindowContext, spec: &OperatorSpec) -> Result<BandOperator, HarnessError> {
    Ok(match spec {
        OperatorSpec::Identity => BandOperator::identity(ctx.space.len()),
        OperatorSpec::BandUnit { r } => a_r_operator(&ctx.metric, *r),
        OperatorSpec::Multiplication { function } => field(scenario, function, ctx)?.to_operator(),
        OperatorSpec::Commutator { r, function } => {
            commutator(&a_r_operator(&ctx.metric, *r), &field(scenario, function, ctx)?.to_operator())?
        }
    })
}

/// Reads the sandwich at half the natural horizon of each window; the upper
/// curve tail-vanishing across the family means membership, a persisting
/// lower curve means the operator stays outside.
fn membership(scenario: &Scenario, family: &[WindowContext], spec: &OperatorSpec, tol: f64) -> Result<Outcome, HarnessError> {
    let mut files = Files::new();
    let mut windows = Vec::new();
    let (mut lowers, mut uppers) = (Vec::new(), Vec::new());
    let mut sound = true;
    for ctx in family {
        let op = build_operator(scenario, ctx, spec)?;
        let r = reading_radius(ctx);
        let profile = membership_profile(&op, &ctx.metric, &dyadic_radii(ctx.metric.natural_horizon() as f64))?;
        let (lower, upper) = profile.at(r).unwrap_or((0.0, 0.0));
        lowers.push(lower);
        uppers.push(upper);
        sound &= profile.is_sound();
        windows.push(json!({ "points": ctx.space.len(), "reading_radius": r, "lower": lower, "upper": upper }));
        files.push((format!("{}.csv", ctx.tag()), profile_bytes(&profile)?));
    }
    let cfg = ClassifyConfig {
        tol_fit: tol,
        ..ClassifyConfig::default()
    };
    let upper_trend = tail_trend(&uppers, &cfg);
    let lower_trend = tail_trend(&lowers, &cfg);
    let verdict = match (upper_trend.trend, lower_trend.trend) {
        (Trend::Vanishing, _) => "IN_BIMODULE",
        (_, Trend::Persisting) => "OUTSIDE_BIMODULE",
        _ => "INCONCLUSIVE",
    };
    Ok(Outcome {
        verdict: Some(verdict.into()),
        passed: sound,
        tol,
        details: json!({ "windows": windows, "upper": upper_trend, "lower": lower_trend, "sound": sound }),
        files,
    })
}

/// One row of the commutator bound check.
struct BoundRow {
    r: f64,
    n: usize,
    lhs: f64,
    rhs: f64,
}

fn lemma_rows(ctx: &WindowContext, f: &ScalarField, r: f64) -> Result<Vec<BoundRow>, HarnessError> {
    let a = a_r_operator(&ctx.metric, r);
    let c = commutator(&a, &f.to_operator())?;
    let norm_a = op_norm(&a)?;
    let n_r = growth_bound(&ctx.space, &[r]).entries[0].1 as f64;
    let var: Vec<f64> = ctx.space.points().map(|x| variation(f, x, r)).collect();
    (1..=ctx.seq.horizon())
        .into_par_iter()
        .map(|n| {
            let d = ctx.seq.set(n).expect("index inside horizon");
            let mut outside = c.clone();
            for x in d.iter() {
                for y in d.iter() {
                    outside.set(x, y, C64::new(0.0, 0.0));
                }
            }
            let sup_var = var
                .iter()
                .enumerate()
                .filter(|(x, _)| !d.contains(*x))
                .map(|(_, &v)| v)
                .fold(0.0, f64::max);
            Ok(BoundRow {
                r,
                n,
                lhs: op_norm(&outside)?,
                rhs: n_r * norm_a * sup_var,
            })
        })
        .collect()
}

fn lemma_bound(scenario: &Scenario, family: &[WindowContext], name: &str, radii: &[f64]) -> Result<Outcome, HarnessError> {
    let mut files = Files::new();
    let mut all_hold = true;
    let mut worst_gap = f64::NEG_INFINITY;
    // tail of the right side per radius, one entry per window
    let mut tails: Vec<Vec<f64>> = vec![Vec::new(); radii.len()];
    for ctx in family {
        let f = field(scenario, name, ctx)?;
        let mut rows = Vec::new();
        for (i, &r) in radii.iter().enumerate() {
            let block = lemma_rows(ctx, &f, r)?;
            let tail = tail_indices(ctx.seq.horizon())
                .map(|n| block[n - 1].rhs)
                .fold(0.0, f64::max);
            tails[i].push(tail);
            rows.extend(block);
        }
        for row in &rows {
            all_hold &= row.lhs <= row.rhs + BAND_BOUND_SLACK;
            worst_gap = worst_gap.max(row.lhs - row.rhs);
        }
        files.push((
            format!("{}.csv", ctx.tag()),
            csv_bytes(
                &["r", "n", "lhs", "rhs"],
                rows.iter()
                    .map(|b| vec![b.r.to_string(), b.n.to_string(), b.lhs.to_string(), b.rhs.to_string()]),
            )?,
        ));
    }
    let cfg = ClassifyConfig::default();
    let decay: Vec<Value> = radii
        .iter()
        .zip(&tails)
        .map(|(r, t)| {
            let nonincreasing = t.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12) + 1e-15);
            json!({ "r": r, "tails": t, "nonincreasing": nonincreasing, "trend": tail_trend(t, &cfg).trend })
        })
        .collect();
    let monotone = decay.iter().all(|d| d["nonincreasing"] == json!(true));
    Ok(Outcome {
        verdict: Some(if all_hold { "BOUND_HOLDS" } else { "BOUND_FAILS" }.into()),
        passed: all_hold && monotone,
        tol: BAND_BOUND_SLACK,
        details: json!({
            "all_hold": all_hold,
            "largest_excess": worst_gap,
            "right_side_decay": decay,
        }),
        files,
    })
}

fn outer(scenario: &Scenario, family: &[WindowContext], name: &str, tol: f64) -> Result<Outcome, HarnessError> {
    let inputs = family
        .iter()
        .map(|ctx| {
            let f = field(scenario, name, ctx)?;
            let d = DerivationPresentation::inner(standard_generators(ctx.space.len()), &f.to_operator())?;
            Ok((d, ctx.metric.clone(), ctx.seq.clone()))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let result = outer_class_family(&inputs, &ClassifyConfig::default(), tol)?;
    let solved = result.windows.iter().all(|w| w.solution.residual <= 1e-8);
    let split_ok = result.windows.iter().all(|w| w.off_diagonal_in_bimodule);
    let mut files = Files::new();
    for (w, ctx) in result.windows.iter().zip(family) {
        files.push((format!("{}_off_diagonal.csv", ctx.tag()), profile_bytes(&w.off_diagonal_profile)?));
    }
    let windows: Vec<Value> = result
        .windows
        .iter()
        .map(|w| {
            json!({
                "points": w.representative.window().len(),
                "residual": w.solution.residual,
                "iterations": w.solution.iterations,
                "off_diagonal_in_bimodule": w.off_diagonal_in_bimodule,
            })
        })
        .collect();
    Ok(Outcome {
        verdict: Some(verdict_string(&result.classification.verdict)),
        passed: solved && split_ok,
        tol,
        details: json!({
            "outer": result.outer,
            "versus_zero": result.versus_zero,
            "vanishing": result.classification.vanishing,
            "higson": result.classification.higson,
            "windows": windows,
        }),
        files,
    })
}

fn hh0(family: &[WindowContext], tol: f64) -> Result<Outcome, HarnessError> {
    let windows = family
        .iter()
        .map(|ctx| hh0_window(&standard_generators(ctx.space.len()), &ctx.metric, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = hh0_family(&windows);
    let mut files = Files::new();
    for (w, ctx) in windows.iter().zip(family) {
        files.push((format!("{}_identity.csv", ctx.tag()), profile_bytes(&w.identity_profile)?));
    }
    let summary: Vec<Value> = windows
        .iter()
        .map(|w| {
            json!({
                "dimension": w.dimension,
                "reading_radius": w.reading_radius,
                "scalars_in_bimodule": w.scalars_in_bimodule,
                "identity_escapes": w.identity_escapes,
            })
        })
        .collect();
    Ok(Outcome {
        verdict: Some(verdict_string(&verdict)),
        passed: windows.iter().all(|w| w.dimension == 1 && w.identity_profile.is_sound()),
        tol,
        details: json!({ "windows": summary }),
        files,
    })
}

fn smallest(family: &[WindowContext]) -> Result<&WindowContext, HarnessError> {
    family.first().ok_or_else(|| HarnessError::config("the window family is empty"))
}

fn cup(
    scenario: &Scenario,
    family: &[WindowContext],
    f: &str,
    g: &str,
    probes: usize,
    tol: f64,
) -> Result<Outcome, HarnessError> {
    let ctx = smallest(family)?;
    let (fo, go) = (field(scenario, f, ctx)?.to_operator(), field(scenario, g, ctx)?.to_operator());
    let space = ctx.space.as_ref();
    let tuples = random_tuples(|rng| random_band(space, 1.0, rng), 2, probes, scenario.seed);
    let result = cup_derivations(&fo, &go, &tuples)?;

    // ψ(a) = [a, f] g for a matrix unit next to the sequence
    let near = ctx
        .space
        .points()
        .min_by(|&a, &b| ctx.metric.cross(a, a).total_cmp(&ctx.metric.cross(b, b)))
        .expect("nonempty window");
    let neighbour = (near + 1) % ctx.space.len();
    let unit = BandOperator::matrix_unit(ctx.space.len(), near, neighbour);
    let psi = result.witness.eval(&[unit])?;
    let profile = membership_profile(&psi, &ctx.metric, &dyadic_radii(ctx.metric.natural_horizon() as f64))?;
    let witness_vanishes = profile.upper.last().is_some_and(|&u| u <= tol);

    let passed = result.residual <= tol && profile.is_sound();
    Ok(Outcome {
        verdict: Some(match result.sign {
            Some(s) => format!("{s:+}"),
            None => "UNDETERMINED".into(),
        }),
        passed,
        tol,
        details: json!({
            "points": ctx.space.len(),
            "sign": result.sign,
            "residual": result.residual,
            "largest_value": result.largest_value,
            "probes": result.probes,
            "finite_rank_witness_in_bimodule": witness_vanishes,
        }),
        files: vec![("witness.csv".into(), profile_bytes(&profile)?)],
    })
}

fn odd(
    scenario: &Scenario,
    family: &[WindowContext],
    k: usize,
    name: &str,
    probes: usize,
    tol: f64,
) -> Result<Outcome, HarnessError> {
    let ctx = smallest(family)?;
    let f = field(scenario, name, ctx)?.to_operator();
    let space = ctx.space.as_ref();
    let tuples = random_tuples(|rng| random_band(space, 1.0, rng), 2 * k + 2, probes, scenario.seed);
    let result = odd_cocycle(k, &f, &tuples)?;

    let last = family.last().expect("nonempty family");
    let field_last = field(scenario, name, last)?;
    let sup = field_last.sup_norm();
    // the peak of |f| farthest from the sequence
    let peak = last
        .space
        .points()
        .filter(|&x| sup > 0.0 && field_last.value(x).norm() >= sup * (1.0 - 1e-12))
        .max_by(|&a, &b| last.metric.cross(a, a).total_cmp(&last.metric.cross(b, b)));
    let identities = vec![BandOperator::identity(last.space.len()); 2 * k];
    let mut radii = dyadic_radii(last.metric.natural_horizon() as f64);
    let probe_radius = peak.map(|x| last.metric.cross(x, x) - 0.5);
    if let Some(r) = probe_radius {
        radii.push(r);
    }
    let profile = witness_leakage(k, &field_last.to_operator(), &identities, &last.metric, &radii)?;
    let leakage = probe_radius.and_then(|r| profile.at(r)).map_or(0.0, |(lower, _)| lower);

    Ok(Outcome {
        verdict: Some(if leakage >= 0.5 { "LEAKS" } else { "CONTAINED" }.into()),
        passed: result.cocycle_residual <= tol && result.sign_residual <= tol && profile.is_sound(),
        tol,
        details: json!({
            "k": k,
            "sign": result.sign,
            "cocycle_residual": result.cocycle_residual,
            "sign_residual": result.sign_residual,
            "probes": result.probes,
            "leakage_radius": probe_radius,
            "leakage_lower_bound": leakage,
        }),
        files: vec![("leakage.csv".into(), profile_bytes(&profile)?)],
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn averaging(seed: u64, points: usize, samples: &[usize], trials: usize) -> Result<Outcome, HarnessError> {
    if trials == 0 || samples.is_empty() {
        return Err(HarnessError::config("averaging needs trials and sample counts"));
    }
    let b = random_dense(points, &mut rng(seed, 0));
    let (b0, _) = diagonal_split(&b);
    let exact = diagonal_average_exhaustive(&b)?;
    let exact_error = (&exact - &b0).max_abs_entry();
    let medians = samples
        .iter()
        .map(|&k| {
            let norms = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let trial_seed = seed.wrapping_add(((k as u64) << 32) | t as u64);
                    let avg = diagonal_average(&b, k, trial_seed)?;
                    Ok(op_norm(&(&avg - &b0))?)
                })
                .collect::<Result<Vec<f64>, HarnessError>>()?;
            Ok(median(norms))
        })
        .collect::<Result<Vec<f64>, HarnessError>>()?;
    let nonincreasing = medians.windows(2).all(|p| p[1] <= p[0]);
    let rows = samples
        .iter()
        .zip(&medians)
        .map(|(k, m)| vec![k.to_string(), m.to_string()]);
    Ok(Outcome {
        verdict: None,
        passed: exact_error <= 1e-14 && nonincreasing,
        tol: 1e-14,
        details: json!({
            "points": points,
            "exhaustive_error": exact_error,
            "samples": samples,
            "median_off_diagonal_norm": medians,
            "nonincreasing": nonincreasing,
        }),
        files: vec![("medians.csv".into(), csv_bytes(&["k", "median"], rows)?)],
    })
}
