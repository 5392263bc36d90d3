use super::{Check, Outcome};
use crate::analysis::{dini_derivatives, dyadic_radii, example_e_check, gap_report, residual_sweep, BallPattern};
use crate::builder::{theorem4_build, theorem9_build, RecursionCfg, Theorem4Cfg, Theorem4Output, Theorem9Cfg, Theorem9Output, WidthCheck, WidthsCfg};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{gen_cantor_product, gen_four_corner_cantor, gen_graph_family, GridDomain, PointCloud, Vector};

pub struct Theorem4Run {
    pub outcome: Outcome,
    pub e_set: PointCloud,
    pub output: Theorem4Output,
}

pub struct Theorem9Run {
    pub outcome: Outcome,
    pub e_set: PointCloud,
    pub output: Theorem9Output,
}

/// Clamped widths, failures recorded rather than aborting.
pub fn keep_going() -> RecursionCfg {
    RecursionCfg {
        widths: WidthsCfg {
            check: WidthCheck::Clamp,
            ..Default::default()
        },
        abort_on_failure: false,
    }
}

pub fn fixture_domain(h: f64) -> Result<GridDomain> {
    GridDomain::square(-0.125, 1.125, h, 0)
}

/// ω = 1 on (−0.1, 1.1)², 0 elsewhere.
pub fn unit_box_omega(d: &GridDomain) -> ScalarField {
    ScalarField::from_fn(d.clone(), |x| if x.iter().all(|v| *v > -0.1 && *v < 1.1) { 1.0 } else { 0.0 })
}

/// Theorem 4 on the Cantor product (1/3, depth 4), ε = 0.3, three pairs, h = 1/256.
pub fn criterion4() -> Result<Theorem4Run> {
    let mut c = Check::new(4, "Theorem-4 certificate", 600);
    let e = gen_cantor_product(1.0 / 3.0, 4, 9)?;
    let d = fixture_domain(1.0 / 256.0)?;
    let cfg = Theorem4Cfg {
        recursion: keep_going(),
        ..Default::default()
    };
    let out = theorem4_build(&e, 0.3, &unit_box_omega(&d), 3, &cfg)?;
    let r = &out.report;
    c.num("lipschitz", r.lipschitz);
    c.num("tolerance", r.tolerance);
    c.num("max_u_norm", r.max_u_norm);
    c.num("cancellation_excess", r.cancellation_excess);
    c.num("u_tail_bound", r.u_tail_bound);
    c.put("stage_failures", out.trace.failures().len() as i64);
    c.part("(a) Lip", r.lipschitz <= 1.3 + r.tolerance);
    c.part("(b) max u", r.max_u_norm <= 0.3);

    let radii = dyadic_radii(3, 8);
    let ball = BallPattern::default();
    let mut both = vec![true; e.len()];
    for sign in [1.0, -1.0] {
        let s = residual_sweep(&out.f, &e, |i| out.u[i].add(&[sign, 0.0]), &radii, &ball, 0.1)?;
        for (b, row) in both.iter_mut().zip(&s.rows) {
            *b &= row.pass;
        }
        c.num(if sign > 0.0 { "residual_pass_plus" } else { "residual_pass_minus" }, s.pass_rate);
    }
    let rate_c = both.iter().filter(|b| **b).count() as f64 / e.len().max(1) as f64;
    c.num("residual_pass_rate", rate_c);
    c.part("(c) residual", rate_c >= 0.9);

    let gap = gap_report(&out.f, &e, &[Vector::from([1.0, 0.0])], 3, 10, 0.2)?;
    c.num("gap_pass_rate", gap.pass_rate);
    c.part("(d) gap", gap.pass_rate >= 0.9);
    Ok(Theorem4Run {
        outcome: c.finish(),
        e_set: e,
        output: out,
    })
}

/// Theorem 9 on the four-corner Cantor set (depth 4), K = 4, h = 1/256.
pub fn criterion5() -> Result<Theorem9Run> {
    let mut c = Check::new(5, "Theorem-9 certificate", 600);
    let e = gen_four_corner_cantor(4)?;
    let d = fixture_domain(1.0 / 256.0)?;
    let cfg = Theorem9Cfg {
        recursion: keep_going(),
        ..Default::default()
    };
    let k = 4;
    let out = theorem9_build(&e, &d, k, &cfg)?;
    let r = &out.report;
    c.num("lipschitz", r.lipschitz);
    c.num("lipschitz_bound", r.lipschitz_bound);
    c.num("tolerance", r.tolerance);
    let fails: usize = r.steps.iter().map(|s| s.stage_failures).sum();
    c.put("stage_failures", fails as i64);
    c.part("Lip", r.lipschitz <= r.lipschitz_bound + r.tolerance);

    let radii = dyadic_radii(3, 8);
    let ball = BallPattern::default();
    for (i, (dir, eta)) in out.directions.iter().zip(&out.etas).enumerate() {
        let s = residual_sweep(&out.f, &e, |_| dir.clone(), &radii, &ball, eta + 0.05)?;
        c.num(&format!("residual_pass_rate_e{}", i + 1), s.pass_rate);
        c.part(format!("residual e{}", i + 1), s.pass_rate >= 0.9);
    }
    for (name, y) in [("x", [1.0, 0.0]), ("y", [0.0, 1.0])] {
        let mut ok = 0usize;
        for p in e.points() {
            match dini_derivatives(&out.f, p, &y, 3, 10) {
                Ok(dd) if dd.upper - dd.lower >= 2.0 - 0.3 => ok += 1,
                Ok(_) | Err(Error::ProbeEscapes { .. }) => {}
                Err(err) => return Err(err),
            }
        }
        let rate = ok as f64 / e.len().max(1) as f64;
        c.num(&format!("dini_gap_rate_{name}"), rate);
        c.part(format!("dini gap {name}"), rate >= 0.8);
    }
    Ok(Theorem9Run {
        outcome: c.finish(),
        e_set: e,
        output: out,
    })
}

/// Example-e check on the graph family (k_max = 8) for the zero field, the
/// height function and a rescaled Theorem-9 output built on the family.
pub fn criterion7() -> Result<Outcome> {
    let mut c = Check::new(7, "Example-e check", 120);
    let e = gen_graph_family(8, 32)?;
    let d = GridDomain::square(-1.5, 1.5, 1.0 / 64.0, 0)?;
    // the pipeline candidate is built on a coarser grid to fit the time budget
    let d9 = GridDomain::square(-1.5, 1.5, 1.0 / 16.0, 0)?;
    let t9 = theorem9_build(
        &e,
        &d9,
        1,
        &Theorem9Cfg {
            recursion: keep_going(),
            ..Default::default()
        },
    )?;
    let lip = t9.f.lipschitz();
    let rescaled = if lip > 1.0 { t9.f.scale(1.0 / lip) } else { t9.f };
    let candidates = [
        ("constant", ScalarField::zeros(d.clone())),
        ("height", ScalarField::from_fn(d.clone(), |x| x[1])),
        ("theorem9", rescaled),
    ];
    for (name, f) in candidates {
        let r = example_e_check(&f, &e, 3, 10, 1e-9)?;
        c.num(&format!("{name}_min_upper"), r.min_upper);
        c.put(&format!("{name}_argmin"), r.index as i64);
        c.part(name, r.passes(0.05));
    }
    Ok(c.finish())
}
