use super::{Check, Outcome};
use crate::builder::{density_failures, level_eps, level_tau, mollify_glue_with, select_stages, GlueOptions, stage_load, StagesCfg};
use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::geometry::{gen_cantor_product, unravel_index, GridDomain, GridSet, Vector};
use crate::width::{estimate_normal_cone, NormalConeParams};

/// Mollified gluing of g = ‖x − c‖ on a ball H around the kink, Φ ≡ 0, ξ ≡ 1, ω ≡ 0.05.
pub fn criterion3() -> Result<Outcome> {
    let mut c = Check::new(3, "mollified gluing", 60);
    for cells in [64usize, 128] {
        let d = GridDomain::unit_square(cells, 2);
        let h = d.spacing();
        let hs = GridSet::from_centers(d.clone(), |x| (x[0] - 0.5).hypot(x[1] - 0.5) < 0.3);
        let g = ScalarField::from_fn(d.clone(), |x| (x[0] - 0.5).hypot(x[1] - 0.5));
        let phi = VectorField::constant(d.clone(), &[0.0, 0.0]);
        let (xi, om) = (1.0, 0.05);
        let glued = mollify_glue_with(
            &g,
            &hs,
            &phi,
            &ScalarField::constant(d.clone(), xi),
            &ScalarField::constant(d.clone(), om),
            &GlueOptions::default(),
        )?;
        let f = glued.field;
        let shape = d.node_shape();
        let inside = hs.interior_nodes();
        let bound = xi * (1.0 + om) + 4.0 * h * g.lipschitz();
        let (mut off_equal, mut max_diff, mut max_grad) = (true, 0.0f64, 0.0f64);
        for lin in 0..d.node_count() {
            let (a, b) = (f.samples()[lin], g.samples()[lin]);
            max_diff = max_diff.max((a - b).abs());
            // nodes outside the open set H keep g bit for bit
            if !inside[lin] && a.to_bits() != b.to_bits() {
                off_equal = false;
            }
            if inside[lin] {
                max_grad = max_grad.max(f.fd_gradient(&unravel_index(lin, &shape)).norm());
            }
        }
        let k = format!("h{cells}");
        c.put(&format!("{k}_smoothed_nodes"), glued.smoothed_nodes as i64);
        c.num(&format!("{k}_max_abs_diff"), max_diff);
        c.num(&format!("{k}_max_interior_gradient"), max_grad);
        c.num(&format!("{k}_gradient_bound"), bound);
        c.part(format!("off-H equality h=1/{cells}"), off_equal);
        c.part(format!("|f-g|<=omega h=1/{cells}"), max_diff <= om);
        c.part(format!("gradient h=1/{cells}"), max_grad <= bound);
    }
    Ok(c.finish())
}

/// Stage selection on the Cantor product at ε = 0.3, three levels.
pub fn criterion6() -> Result<Outcome> {
    let mut c = Check::new(6, "stage selection", 60);
    let (eps, i_max) = (0.3, 3usize);
    let e = gen_cantor_product(1.0 / 3.0, 4, 9)?;
    let d = GridDomain::square(-0.125, 1.125, 1.0 / 64.0, 0)?;
    let stages = select_stages(&e, eps, i_max, &d, &StagesCfg::default())?;
    let load = stage_load(&stages, &d).max();
    let exact = stages.iter().all(|s| {
        s.provenance
            .is_some_and(|(i, _, _)| s.sigma.to_bits() == level_tau(eps, i, 2).to_bits())
    });
    let eta = 2.0 * level_eps(eps, i_max);
    let bad = density_failures(&stages, &e, i_max, eta, &d)?;
    c.put("stages", stages.len() as i64);
    c.num("max_load", load);
    c.num("eps", eps);
    c.put("density_failures", bad.len() as i64);
    c.part("load<=eps", load <= eps);
    c.part("sigma=tau_i", exact && !stages.is_empty());
    c.part("density", bad.is_empty());
    Ok(c.finish())
}

/// Accepted normal-cone directions at threshold 0.1 have accepted normalized
/// sums at threshold 0.25, at 8 points of a densely sampled Cantor product.
/// Balls stay below the gap between adjacent Cantor lines and neighborhoods
/// below the sample spacing, so a single sampled line is resolved.
pub fn criterion8() -> Result<Outcome> {
    let mut c = Check::new(8, "normal-cone joining", 180);
    let e = gen_cantor_product(1.0 / 3.0, 4, 513)?;
    let angles = [0.0f64, 0.1, -0.1, 0.2, -0.2, 0.35, -0.35, 0.6, -0.6, std::f64::consts::FRAC_PI_2];
    let dirs: Vec<Vector> = angles.iter().map(|t| Vector::from([t.cos(), t.sin()])).collect();
    let base = NormalConeParams {
        eps_list: vec![0.5],
        r_list: vec![0.005, 0.0025],
        directions: dirs,
        threshold: 0.1,
        nbhd_frac: 0.02,
        cells_per_nbhd: 4,
        s_max: 3,
    };
    let (mut pairs, mut held, mut accepted_total) = (0i64, 0i64, 0i64);
    let stride = (e.len() / 8).max(1);
    for x in e.points().iter().step_by(stride).take(8) {
        let est = estimate_normal_cone(&e, x, &base)?;
        let acc = est.accepted();
        accepted_total += acc.len() as i64;
        for i in 0..acc.len() {
            for j in i + 1..acc.len() {
                let Some(s) = acc[i].add(&acc[j]).normalized() else { continue };
                let relaxed = NormalConeParams {
                    directions: vec![s.clone()],
                    threshold: 0.25,
                    ..base.clone()
                };
                pairs += 1;
                if estimate_normal_cone(&e, x, &relaxed)?.is_accepted(&s) {
                    held += 1;
                }
            }
        }
    }
    c.put("accepted_directions", accepted_total);
    c.put("pairs", pairs);
    c.put("held", held);
    c.part("nonvacuous", pairs > 0);
    c.part("joined directions accepted", held == pairs);
    Ok(c.finish())
}
