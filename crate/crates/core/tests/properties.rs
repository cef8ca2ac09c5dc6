use std::sync::Arc;

use proptest::prelude::*;

use roelab::doubled::{
    extract_expanding_sequence, rho_point, rho_subset, rho_whole, verify_doubled_metric, DoubledMetric,
};
use roelab::functions::{variation, vanishing_profile, ScalarField};
use roelab::harness::{self, Scenario};
use roelab::hochschild::probes::{random_dense, random_diagonal, rng};
use roelab::hochschild::{
    delta, outer_class, solve_inner, standard_generators, Cochain, DerivationPresentation, TableCochain,
};
use roelab::operators::{
    commutator, membership_profile, op_norm, propagation, truncate_to_propagation, BandOperator, C64,
};
use roelab::space::{build_space, growth_bound, neighborhood, FiniteWindow, LatticeMetric, PointSet, SpaceSpec};

fn space_spec() -> impl Strategy<Value = SpaceSpec> {
    prop_oneof![
        (1i64..8).prop_map(SpaceSpec::z_box),
        (1i64..3, any::<bool>()).prop_map(|(r, sup)| SpaceSpec::Lattice {
            dim: 2,
            lo: -r,
            hi: r,
            metric: if sup { LatticeMetric::Sup } else { LatticeMetric::L1 },
            horizon: None,
        }),
        // a random tree plus a few chords, hence connected
        (2usize..12)
            .prop_flat_map(|n| {
                let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|v| (0..v).boxed()).collect();
                (Just(n), parents, prop::collection::vec((0..n, 0..n), 0..4))
            })
            .prop_map(|(n, parents, chords)| {
                let mut edges: Vec<[usize; 2]> = parents.iter().enumerate().map(|(i, &p)| [i + 1, p]).collect();
                edges.extend(chords.into_iter().filter(|(a, b)| a != b).map(|(a, b)| [a, b]));
                SpaceSpec::Graph {
                    vertices: n,
                    edges,
                    labels: None,
                    horizon: None,
                }
            }),
    ]
}

fn window(spec: &SpaceSpec) -> Arc<FiniteWindow> {
    Arc::new(build_space(spec).unwrap())
}

/// One of the point, subset or whole-space metrics, chosen by `pick`.
fn doubled(w: &Arc<FiniteWindow>, pick: u64) -> DoubledMetric {
    let n = w.len();
    match pick % 3 {
        0 => rho_point(w, (pick as usize / 3) % n).unwrap(),
        1 => {
            let pts = (0..n).filter(|x| (pick >> (x % 60)) & 1 == 1 || *x == 0);
            rho_subset(w, &PointSet::from_points(n, pts).unwrap()).unwrap()
        }
        _ => rho_whole(w).unwrap(),
    }
}

fn operator(n: usize, seed: u64) -> BandOperator {
    random_dense(n, &mut rng(seed, 0))
}

fn close(a: &BandOperator, b: &BandOperator, tol: f64) -> bool {
    (a - b).max_abs_entry() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn doubled_metrics_satisfy_the_axioms(spec in space_spec(), pick in any::<u64>()) {
        let w = window(&spec);
        let m = doubled(&w, pick);
        let report = verify_doubled_metric(&m);
        prop_assert!(report.is_metric(), "{:?}", report.violations);
        prop_assert!(m.restricts_to_base());
    }

    #[test]
    fn neighbourhoods_and_growth_are_monotone(
        spec in space_spec(),
        mask in any::<u64>(),
        r in 0.0f64..4.0,
        dr in 0.0f64..3.0,
    ) {
        let w = window(&spec);
        let n = w.len();
        let set = PointSet::from_points(n, (0..n).filter(|x| (mask >> (x % 64)) & 1 == 1)).unwrap();
        let small = neighborhood(&w, &set, r);
        let large = neighborhood(&w, &set, r + dr);
        prop_assert!(set.is_subset(&small));
        prop_assert!(small.is_subset(&large));
        let g = growth_bound(&w, &[0.0, r, r + dr]);
        prop_assert_eq!(g.entries[0].1, 1);
        prop_assert!(g.entries[1].1 <= g.entries[2].1);
    }

    #[test]
    fn commutator_is_a_bilinear_derivation(n in 1usize..7, seed in any::<u64>(), s in -2.0f64..2.0) {
        let (a, b, c) = (operator(n, seed), operator(n, seed ^ 1), operator(n, seed ^ 2));
        let bc = b.try_mul(&c).unwrap();
        let lhs = commutator(&a, &bc).unwrap();
        let rhs = &commutator(&a, &b).unwrap().try_mul(&c).unwrap() + &b.try_mul(&commutator(&a, &c).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
        let scaled = commutator(&a, &(&b.scale(C64::new(s, 0.0)) + &c)).unwrap();
        let expected = &commutator(&a, &b).unwrap().scale(C64::new(s, 0.0)) + &commutator(&a, &c).unwrap();
        prop_assert!(close(&scaled, &expected, 1e-12));
        prop_assert!(close(&commutator(&a, &b).unwrap(), &commutator(&b, &a).unwrap().scale(C64::new(-1.0, 0.0)), 0.0));
    }

    #[test]
    fn variation_is_subadditive(
        spec in space_spec(),
        seed in any::<u64>(),
        r in 0.0f64..4.0,
    ) {
        let w = window(&spec);
        let n = w.len();
        let f = ScalarField::from_diagonal(Arc::clone(&w), &random_diagonal(n, &mut rng(seed, 0))).unwrap();
        let g = ScalarField::from_diagonal(Arc::clone(&w), &random_diagonal(n, &mut rng(seed, 1))).unwrap();
        let sum = f.add(&g).unwrap();
        for x in w.points() {
            prop_assert!(variation(&sum, x, r) <= variation(&f, x, r) + variation(&g, x, r) + 1e-12);
            prop_assert!(variation(&f, x, r) <= 2.0 * f.sup_norm() + 1e-12);
        }
    }

    /// For a diagonal operator the two sides of the vanishing criterion are
    /// the same number: `sup_{x ∉ D_n} |f(x)|`.
    #[test]
    fn vanishing_profile_matches_diagonal_membership(spec in space_spec(), pick in any::<u64>(), seed in any::<u64>()) {
        let w = window(&spec);
        let m = doubled(&w, pick);
        let seq = extract_expanding_sequence(&m, m.natural_horizon()).unwrap();
        let f = ScalarField::from_diagonal(Arc::clone(&w), &random_diagonal(w.len(), &mut rng(seed, 0))).unwrap();
        let profile = vanishing_profile(&f, &seq);
        let radii: Vec<f64> = (1..=seq.horizon()).map(|n| n as f64).collect();
        let membership = membership_profile(&f.to_operator(), &m, &radii).unwrap();
        for (i, &value) in profile.values.iter().enumerate() {
            prop_assert!((membership.upper[i] - value).abs() <= 1e-15, "n = {}", i + 1);
            prop_assert!((membership.lower[i] - value).abs() <= 1e-15, "n = {}", i + 1);
        }
    }

    #[test]
    fn truncation_is_idempotent(spec in space_spec(), seed in any::<u64>(), r in 0.0f64..5.0) {
        let w = window(&spec);
        let a = operator(w.len(), seed);
        let t = truncate_to_propagation(&a, w.as_ref(), r);
        prop_assert_eq!(&truncate_to_propagation(&t, w.as_ref(), r), &t);
        prop_assert!(propagation(&t, w.as_ref()) <= r);
        prop_assert_eq!(&truncate_to_propagation(&a, w.as_ref(), f64::INFINITY), &a);
    }

    #[test]
    fn coboundary_squares_to_zero(size in 1usize..4, degree in 0usize..3, seed in any::<u64>(), probe in any::<u64>()) {
        let c = Cochain::Table(TableCochain::random(size, degree, seed).unwrap());
        let dc = c.coboundary();
        let args: Vec<BandOperator> = (0..degree + 2).map(|i| operator(size, probe.wrapping_add(i as u64))).collect();
        let ddc = delta(&dc, &args).unwrap();
        prop_assert!(ddc.max_abs_entry() <= 1e-12, "{}", ddc.max_abs_entry());
    }

    /// The implementing operator found from the generators alone also
    /// reproduces the derivation on elements never shown to the solver.
    #[test]
    fn solved_derivation_agrees_on_held_out_elements(n in 2usize..9, seed in any::<u64>()) {
        let b = operator(n, seed);
        let d = DerivationPresentation::inner(standard_generators(n), &b).unwrap();
        let solution = solve_inner(&d).unwrap();
        prop_assert!(solution.residual <= 1e-9);
        for k in 0..5 {
            let a = operator(n, seed ^ (0x100 + k));
            let err = op_norm(&(&commutator(&a, &solution.b).unwrap() - &commutator(&a, &b).unwrap())).unwrap();
            prop_assert!(err <= 1e-9, "held-out error {}", err);
        }
    }

    #[test]
    fn outer_class_is_additive(half in 2i64..6, seed in any::<u64>()) {
        let w = window(&SpaceSpec::z_box(half));
        let m = rho_point(&w, half as usize).unwrap();
        let n = w.len();
        let (f, g) = (random_diagonal(n, &mut rng(seed, 0)), random_diagonal(n, &mut rng(seed, 1)));
        let df = DerivationPresentation::inner(standard_generators(n), &f).unwrap();
        let dg = DerivationPresentation::inner(standard_generators(n), &g).unwrap();
        let sum = outer_class(&df.add(&dg).unwrap(), &m, 1e-9).unwrap();
        let parts = outer_class(&df, &m, 1e-9).unwrap().representative
            .add(&outer_class(&dg, &m, 1e-9).unwrap().representative)
            .unwrap();
        for x in w.points() {
            prop_assert!((sum.representative.value(x) - parts.value(x)).norm() <= 1e-9);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let text = harness::bundled("hochschild_identities").unwrap();
    for seed in [0, 1, 99] {
        let mut scenario = Scenario::from_json(text).unwrap();
        scenario.seed = seed;
        let strip = |r: harness::Report| {
            let mut v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
            v.as_object_mut().unwrap().remove("generated_at");
            v.to_string()
        };
        let first = strip(harness::run(&scenario, None).unwrap());
        let second = strip(harness::run(&scenario, None).unwrap());
        assert_eq!(first, second);
    }
}

#[test]
fn evidence_files_match_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Scenario::from_json(harness::bundled("metrics").unwrap()).unwrap();
    let report = harness::run(&scenario, Some(dir.path())).unwrap();
    assert_eq!(report.exit_code(), 0);
    for e in &report.experiments {
        for path in &e.evidence {
            assert!(dir.path().join(path).is_file(), "{path}");
        }
    }
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(written["schema_version"], harness::REPORT_SCHEMA_VERSION);
    assert_eq!(written["scenario"]["name"], "metrics");
}
