use conewidth::acceptance::keep_going;
use conewidth::builder::*;
use conewidth::field::{ScalarField, VectorField};
use conewidth::geometry::{gen_cantor_product, gen_four_corner_cantor, GridDomain, GridSet, PointCloud, Vector};
use proptest::prelude::*;

fn small_domain() -> GridDomain {
    GridDomain::square(-0.125, 1.125, 1.0 / 32.0, 0).unwrap()
}

fn box_omega(d: &GridDomain) -> ScalarField {
    ScalarField::from_fn(d.clone(), |x| if x.iter().all(|v| *v > -0.1 && *v < 1.1) { 1.0 } else { 0.0 })
}

#[test]
fn level_one_sigma_is_tau_one() {
    // 3^{-n} ε_1^{n+1} / (n+1) with n = 2, ε_1 = ε/2 = 0.25
    let tau1 = 0.25f64.powi(3) / 9.0 / 3.0;
    assert!((tau1 - 0.000_578_703_7).abs() < 1e-10);
    assert_eq!(level_tau(0.5, 1, 2), tau1);
    let e = gen_cantor_product(1.0 / 3.0, 2, 5).unwrap();
    let d = GridDomain::square(-0.125, 1.125, 1.0 / 64.0, 0).unwrap();
    let stages = select_stages(&e, 0.5, 2, &d, &StagesCfg::default()).unwrap();
    let level1: Vec<_> = stages.iter().filter(|s| s.provenance.map(|p| p.0) == Some(1)).collect();
    assert!(!level1.is_empty());
    assert!(level1.iter().all(|s| s.sigma == tau1));
    assert!(stage_load(&stages, &d).max() <= 0.5);
}

#[test]
fn stages_for_empty_set_and_missing_normals() {
    let d = small_domain();
    assert!(select_stages(&PointCloud::new(vec![]), 0.3, 2, &d, &StagesCfg::default()).unwrap().is_empty());
    let bare = PointCloud::new(vec![Vector::from([0.5, 0.5])]);
    assert!(select_stages(&bare, 0.3, 2, &d, &StagesCfg::default()).is_err());
}

#[test]
fn recursion_with_zero_stages_keeps_initial_data() {
    let d = small_domain();
    let e = gen_four_corner_cantor(1).unwrap();
    let f0 = ScalarField::from_fn(d.clone(), |x| 0.1 * x[0]);
    let om = box_omega(&d);
    let h0 = GridSet::from_node_predicate(d.clone(), |l| om.samples()[l] > 0.0);
    let t = run_recursion(&e, &f0, &h0, &om, &[], 0, &keep_going()).unwrap();
    assert!(t.stages.is_empty());
    assert_eq!(t.final_field().samples(), f0.samples());
    assert!(run_recursion(&e, &f0, &h0, &om, &[], 1, &keep_going()).is_err());
}

#[test]
fn recursion_with_vanishing_phi_leaves_f_unchanged() {
    let d = small_domain();
    let e = gen_four_corner_cantor(1).unwrap();
    let f0 = ScalarField::from_fn(d.clone(), |x| 0.2 * x[1]);
    let om = box_omega(&d);
    let h0 = GridSet::from_node_predicate(d.clone(), |l| om.samples()[l] > 0.0);
    let st: Vec<StageConfig> = (0..3)
        .map(|i| StageConfig::with_field(0.5, Vector::from([1.0, i as f64 * 0.1]).scaled(0.5), ScalarField::zeros(d.clone())))
        .collect();
    let t = run_recursion(&e, &f0, &h0, &om, &st, 3, &keep_going()).unwrap();
    assert_eq!(t.stages.len(), 3);
    for s in &t.stages {
        assert_eq!(s.f.samples(), f0.samples());
    }
    // ω halves at least geometrically along the chain
    assert!(t.halving_chain_excess() <= 0.0);
}

#[test]
fn theorem4_on_empty_set_is_zero() {
    let d = small_domain();
    let cfg = Theorem4Cfg {
        recursion: keep_going(),
        ..Default::default()
    };
    let out = theorem4_build(&PointCloud::new(vec![]), 0.3, &box_omega(&d), 3, &cfg).unwrap();
    assert!(out.f.samples().iter().all(|v| *v == 0.0));
    assert!(out.u.is_empty());
    assert_eq!(out.report.pairs_used, 0);
}

#[test]
fn theorem9_with_no_steps_is_zero() {
    let d = small_domain();
    let e = gen_four_corner_cantor(2).unwrap();
    let out = theorem9_build(&e, &d, 0, &Theorem9Cfg::default()).unwrap();
    assert!(out.f.samples().iter().all(|v| *v == 0.0));
    assert!(out.directions.is_empty());
}

#[test]
fn theorem9_directions_respect_norm_cap() {
    let dirs = theorem9_directions(2, 12);
    assert_eq!(dirs.len(), 12);
    for (k, v) in dirs.iter().enumerate() {
        assert!(v.norm() <= 1.0 - 0.5f64.powi(k as i32 + 1) + 1e-12, "k = {}: {}", k + 1, v.norm());
    }
}

#[test]
fn lemma1_on_empty_set_is_zero_with_h_from_omega() {
    let d = small_domain();
    let om = box_omega(&d);
    let out = lemma1_build(&PointCloud::new(vec![]), &[1.0, 0.0], &om, 0.3, &WidthsCfg::default()).unwrap();
    assert!(out.g.samples().iter().all(|v| *v == 0.0));
    let expect = GridSet::from_node_predicate(d, |l| om.samples()[l] > 0.0);
    assert_eq!(out.h_set.occupancy(), expect.occupancy());
}

#[test]
fn lemma2_degenerate_direction_or_sigma() {
    let d = small_domain();
    let e = gen_four_corner_cantor(1).unwrap();
    let om = box_omega(&d);
    let phi = ScalarField::from_fn(d.clone(), |x| (1.0 - (x[0] - 0.5).hypot(x[1] - 0.5)).clamp(0.0, 1.0));
    for (dir, sigma) in [([0.0, 0.0], 0.5), ([1.0, 0.0], 1.0)] {
        let out = lemma2_build(&e, &om, &phi, &dir, sigma, &WidthsCfg::default()).unwrap();
        assert!(out.f.samples().iter().all(|v| *v == 0.0));
        assert_eq!(out.psi.samples(), phi.samples());
    }
}

#[test]
fn zahorski_weights() {
    let d = small_domain();
    let g = ScalarField::from_fn(d.clone(), |x| x[0] - 2.0 * x[1]);
    let one = zahorski_sum(&[(g.clone(), (1, 1))]).unwrap();
    for (a, b) in one.f.samples().iter().zip(g.samples()) {
        assert!((a - 0.25 * b).abs() <= 1e-15 * b.abs().max(1.0));
    }
    let two = zahorski_sum(&[(g.clone(), (1, 1)), (g.clone(), (1, 2))]).unwrap();
    for (a, b) in two.f.samples().iter().zip(g.samples()) {
        assert!((a - 0.375 * b).abs() <= 1e-15 * b.abs().max(1.0));
    }
    assert!(matches!(
        zahorski_sum(&[(g.clone(), (2, 1)), (g, (2, 1))]),
        Err(conewidth::Error::DuplicatePiece(2, 1))
    ));
}

#[test]
fn trace_directory_round_trip() {
    let d = small_domain();
    let e = gen_four_corner_cantor(1).unwrap();
    let f0 = ScalarField::zeros(d.clone());
    let om = box_omega(&d);
    let h0 = GridSet::from_node_predicate(d.clone(), |l| om.samples()[l] > 0.0);
    let st = vec![StageConfig::with_field(0.5, Vector::from([0.5, 0.0]), ScalarField::zeros(d.clone()))];
    let t = run_recursion(&e, &f0, &h0, &om, &st, 1, &keep_going()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut rep = toml::Table::new();
    rep.insert("note".into(), "x".into());
    let m = write_trace(dir.path(), "custom", &[&t], t.final_field(), rep).unwrap();
    let back = read_trace_manifest(dir.path()).unwrap();
    assert_eq!(back.pipeline, "custom");
    assert_eq!(back.stages.len(), 1);
    assert_eq!(back.passed, m.passed);
    assert_eq!(back.report["note"].as_str(), Some("x"));
    let f = ScalarField::read_binary(&back.final_field_path(dir.path())).unwrap();
    assert_eq!(f.samples(), t.final_field().samples());
    let s1 = ScalarField::read_binary(&dir.path().join(&back.stages[0].f_file)).unwrap();
    assert_eq!(s1.samples(), t.stages[0].f.samples());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // gluing an affine field with its own gradient stays within ω and
    // leaves nodes off H bit-identical
    #[test]
    fn glue_affine_within_omega(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, om in 0.01f64..0.2, r in 0.15f64..0.4) {
        let d = GridDomain::unit_square(32, 2);
        let g = ScalarField::from_fn(d.clone(), |x| a * x[0] + b * x[1] + c);
        let hs = GridSet::from_centers(d.clone(), |x| (x[0] - 0.5).hypot(x[1] - 0.5) < r);
        let phi = VectorField::constant(d.clone(), &[a, b]);
        let out = mollify_glue(&g, &hs, &phi, &ScalarField::constant(d.clone(), 0.05), &ScalarField::constant(d.clone(), om)).unwrap();
        let inside = hs.interior_nodes();
        for (lin, (x, y)) in out.samples().iter().zip(g.samples()).enumerate() {
            prop_assert!((x - y).abs() <= om);
            if !inside[lin] {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn glue_with_zero_accuracy_is_identity(s in 1.0f64..20.0) {
        let d = GridDomain::unit_square(16, 1);
        let g = ScalarField::from_fn(d.clone(), |x| (s * x[0]).sin() * x[1]);
        let hs = GridSet::full(d.clone());
        let phi = VectorField::constant(d.clone(), &[0.0, 0.0]);
        // the precondition ‖g' − Φ‖ ≤ ξ fails here; {ξ > 0} is empty regardless
        let opts = GlueOptions { check: false, ..Default::default() };
        let out = mollify_glue_with(&g, &hs, &phi, &ScalarField::zeros(d.clone()), &ScalarField::constant(d.clone(), 0.1), &opts).unwrap();
        prop_assert_eq!(out.field.samples(), g.samples());
        prop_assert_eq!(out.smoothed_nodes, 0);
    }

    #[test]
    fn zahorski_lipschitz_below_weighted_sum(idx in proptest::collection::btree_set((1u32..5, 1u32..5), 1..6), s in 0.5f64..4.0) {
        let d = GridDomain::unit_square(16, 0);
        let pieces: Vec<(ScalarField, (u32, u32))> = idx
            .iter()
            .map(|&(k, j)| (ScalarField::from_fn(d.clone(), move |x| (s * k as f64 * x[0]).sin() + j as f64 * x[1] * x[1]), (k, j)))
            .collect();
        let z = zahorski_sum(&pieces).unwrap();
        let bound: f64 = pieces.iter().map(|(g, (k, j))| 0.5f64.powi((k + j) as i32) * g.lipschitz()).sum();
        prop_assert!(z.f.lipschitz() <= bound * (1.0 + 1e-12));
        prop_assert!((z.lipschitz_bound() - bound).abs() <= 1e-12 * bound.max(1.0));
    }

    #[test]
    fn tau_is_increasing_and_below_slope(s1 in 1e-6f64..5.0, s2 in 1e-6f64..5.0) {
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        prop_assume!(lo < hi);
        prop_assert!(tau_of_sigma(lo) < tau_of_sigma(hi));
        prop_assert!(tau_of_sigma(lo).asin().tan() < lo / 14.0);
    }
}
