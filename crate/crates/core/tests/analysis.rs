use conewidth::analysis::*;
use conewidth::field::ScalarField;
use conewidth::geometry::{gen_cantor_product, gen_graph_family, GridDomain, NormalData, NormalKind, PointCloud, Vector};
use conewidth::Error;
use proptest::prelude::*;

fn centered() -> GridDomain {
    GridDomain::square(-1.0, 1.0, 1.0 / 64.0, 0).unwrap()
}

fn wavy(d: &GridDomain, a: f64, b: f64) -> ScalarField {
    ScalarField::from_fn(d.clone(), move |x| 0.3 * (a * x[0]).sin() + 0.2 * (b * x[1]).cos() * x[0])
}

#[test]
fn affine_dini_and_residuals() {
    let d = centered();
    let f = ScalarField::from_fn(d.clone(), |x| 0.4 * x[0] - 0.7 * x[1] + 2.0);
    let est = dini_derivatives(&f, &[0.1, 0.2], &[0.6, 0.8], 2, 8).unwrap();
    let expect = 0.4 * 0.6 - 0.7 * 0.8;
    assert!((est.upper - expect).abs() < 1e-12 && (est.lower - expect).abs() < 1e-12);
    let radii = dyadic_radii(2, 6);
    let p = residual_profile(&f, &[0.1, 0.2], &[0.4, -0.7], &radii, &BallPattern::default()).unwrap();
    assert!(p.residuals.iter().all(|r| *r < 1e-12));
    // gradient off by d = (0.3, 0): residuals sit just below ‖d‖
    let q = residual_profile(&f, &[0.1, 0.2], &[0.7, -0.7], &radii, &BallPattern::default()).unwrap();
    for r in &q.residuals {
        assert!(*r <= 0.3 + 1e-12 && *r >= 0.3 * 0.99, "{r}");
    }
}

#[test]
fn norm_at_origin_is_positively_homogeneous() {
    let d = centered();
    let f = ScalarField::from_fn(d, |x| x[0].hypot(x[1]));
    for y in [[1.0, 0.0], [0.0, -1.0], [0.5, 0.5]] {
        let est = dini_derivatives(&f, &[0.0, 0.0], &y, 3, 5).unwrap();
        let n = y[0].hypot(y[1]);
        // probes stay on grid nodes down to j = 5, where bilinear interpolation is exact
        assert!((est.upper - n).abs() < 1e-12 && (est.lower - n).abs() < 1e-12, "{est:?}");
    }
}

#[test]
fn probe_escape_names_the_scale() {
    let d = GridDomain::unit_square(32, 0);
    let f = ScalarField::zeros(d);
    match dini_derivatives(&f, &[0.9, 0.5], &[1.0, 0.0], 1, 4) {
        Err(Error::ProbeEscapes { j }) => assert_eq!(j, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn gap_report_is_falsifiable_and_trivial_when_orthogonal() {
    let d = GridDomain::square(-0.125, 1.125, 1.0 / 64.0, 0).unwrap();
    let e = gen_cantor_product(1.0 / 3.0, 2, 3).unwrap();
    let zero = ScalarField::zeros(d);
    let along = gap_report(&zero, &e, &[Vector::from([1.0, 0.0])], 3, 6, 0.2).unwrap();
    assert_eq!(along.pass_rate, 0.0);
    let ortho = gap_report(&zero, &e, &[Vector::from([0.0, 1.0])], 3, 6, 0.2).unwrap();
    assert!(ortho.rows.iter().all(|r| r.bound == 0.0));
    assert_eq!(ortho.pass_rate, 1.0);
    let bare = PointCloud::new(vec![Vector::from([0.5, 0.5])]);
    assert!(matches!(
        gap_report(&zero_field(), &bare, &[Vector::from([1.0, 0.0])], 3, 6, 0.2),
        Err(Error::MissingNormal { .. })
    ));
}

fn zero_field() -> ScalarField {
    ScalarField::zeros(GridDomain::unit_square(16, 0))
}

#[test]
fn example_e_on_zero_height_and_steep_fields() {
    let e = gen_graph_family(4, 17).unwrap();
    let d = GridDomain::square(-1.5, 1.5, 1.0 / 64.0, 0).unwrap();
    let z = example_e_check(&ScalarField::zeros(d.clone()), &e, 3, 8, 1e-9).unwrap();
    assert_eq!(z.min_upper, 0.0);
    assert!(z.passes(0.05));

    let height = example_e_check(&ScalarField::from_fn(d.clone(), |x| x[1]), &e, 3, 8, 1e-9).unwrap();
    // independent value: ⟨n, (0,1)⟩ over the sampled normals
    let oracle = e
        .normals()
        .unwrap()
        .iter()
        .filter_map(|n| match &n.kind {
            NormalKind::Line(u) => Some(u[1].abs()),
            NormalKind::Full => None,
        })
        .fold(f64::INFINITY, f64::min);
    assert!(height.min_upper < 1.0);
    assert!((height.min_upper - oracle).abs() < 1e-9, "{} vs {oracle}", height.min_upper);

    let steep = ScalarField::from_fn(d, |x| 2.0 * x[0]);
    assert!(matches!(example_e_check(&steep, &e, 3, 8, 1e-9), Err(Error::LipschitzPrecondition { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dini_bounds_widen_under_refinement(a in 1.0f64..30.0, b in 1.0f64..30.0, x in -0.4f64..0.4, y in -0.4f64..0.4, t in 0.0f64..6.28) {
        let f = wavy(&centered(), a, b);
        let dir = [t.cos(), t.sin()];
        let coarse = dini_derivatives(&f, &[x, y], &dir, 3, 6).unwrap();
        let fine = dini_derivatives(&f, &[x, y], &dir, 2, 9).unwrap();
        prop_assert!(coarse.lower <= coarse.upper);
        prop_assert!(fine.upper >= coarse.upper && fine.lower <= coarse.lower);
        let lip = lipschitz_estimate(&f);
        prop_assert!(fine.upper <= lip + 1e-9 && fine.lower >= -lip - 1e-9);
    }

    #[test]
    fn residual_moves_at_most_by_target_change(a in 1.0f64..30.0, b in 1.0f64..30.0, e1 in -1.0f64..1.0, e2 in -1.0f64..1.0, d1 in -0.5f64..0.5, d2 in -0.5f64..0.5) {
        let f = wavy(&centered(), a, b);
        let radii = dyadic_radii(3, 7);
        let ball = BallPattern { directions: 16, shells: 2 };
        let p = residual_profile(&f, &[0.1, -0.2], &[e1, e2], &radii, &ball).unwrap();
        let q = residual_profile(&f, &[0.1, -0.2], &[e1 + d1, e2 + d2], &radii, &ball).unwrap();
        let dn = d1.hypot(d2);
        for (r, s) in p.residuals.iter().zip(&q.residuals) {
            prop_assert!(*r >= 0.0);
            prop_assert!((r - s).abs() <= dn + 1e-12);
        }
    }

    #[test]
    fn gap_bound_scales_with_direction(ux in -1.0f64..1.0, uy in -1.0f64..1.0, yx in -1.0f64..1.0, yy in -1.0f64..1.0, lam in 0.01f64..10.0) {
        let u = Vector::from([ux, uy]);
        prop_assume!(u.norm() > 1e-3);
        for nd in [NormalData::line(u.normalized().unwrap(), 1.0), NormalData::full(1.0)] {
            let b1 = normal_gap_bound(&nd, &[yx, yy]);
            let b2 = normal_gap_bound(&nd, &[lam * yx, lam * yy]);
            prop_assert!((b2 - lam * b1).abs() <= 1e-12 * b2.abs().max(1.0));
        }
    }

    // doubling y shifts the dyadic ladder by one step and doubles both estimates
    #[test]
    fn dini_doubling_matches_shifted_ladder(a in 1.0f64..20.0, b in 1.0f64..20.0, t in 0.0f64..6.28) {
        let f = wavy(&centered(), a, b);
        let y = [0.5 * t.cos(), 0.5 * t.sin()];
        let y2 = [2.0 * y[0], 2.0 * y[1]];
        let base = dini_derivatives(&f, &[0.05, 0.1], &y, 3, 8).unwrap();
        let doubled = dini_derivatives(&f, &[0.05, 0.1], &y2, 4, 9).unwrap();
        prop_assert!((doubled.upper - 2.0 * base.upper).abs() <= 1e-12);
        prop_assert!((doubled.lower - 2.0 * base.lower).abs() <= 1e-12);
    }

    #[test]
    fn lipschitz_is_subadditive(a in 1.0f64..30.0, b in 1.0f64..30.0, al in -3.0f64..3.0, be in -3.0f64..3.0) {
        let d = centered();
        let f = wavy(&d, a, b);
        let g = ScalarField::from_fn(d, |x| (x[0] * x[1] * b).sin());
        let h = f.scale(al).add(&g.scale(be));
        prop_assert!(lipschitz_estimate(&h) <= al.abs() * lipschitz_estimate(&f) + be.abs() * lipschitz_estimate(&g) + 1e-9);
    }
}
