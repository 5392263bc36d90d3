use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Check, Outcome};
use crate::error::Result;
use crate::field::ScalarField;
use crate::geometry::{gen_cantor_product, index_strides, unravel_index, Cone, GridDomain, GridSet};
use crate::width::{width_brute_force, width_function, width_open};

/// 200 seeded random grids of 2..=8 cells per side against the brute-force oracle.
pub fn criterion1() -> Result<Outcome> {
    let mut c = Check::new(1, "width oracle equivalence", 60);
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut equal, mut total) = (0i64, 0i64);
    let mut first_mismatch = String::new();
    for case in 0..200u64 {
        let cells = rng.gen_range(2..=8usize);
        let p = rng.gen_range(0.2..0.8);
        let alpha = [0.5, 0.7, 0.9][(case % 3) as usize];
        let s_max = 1 + (case / 3 % 2) as usize;
        let g = GridSet::from_cells(GridDomain::unit_square(cells, 2), |_| rng.gen_bool(p));
        let cone = Cone::new([1.0, 0.0], alpha)?;
        let fast = width_open(&g, &cone, s_max)?.value;
        let slow = width_brute_force(&g, &cone, s_max)?;
        total += 1;
        if fast == slow {
            equal += 1;
        } else if first_mismatch.is_empty() {
            first_mismatch = format!("case {case}: {fast} vs {slow}");
        }
    }
    c.put("cases", total);
    c.put("equal", equal);
    if !first_mismatch.is_empty() {
        c.put("first_mismatch", first_mismatch);
    }
    c.part("exact equality", equal == total);
    Ok(c.finish())
}

/// Largest excess over the width-function inequalities, tolerance excluded.
#[derive(Clone, Copy, Debug, Default)]
pub struct WidthFnViolations {
    pub bounds: f64,
    pub axis_monotone: f64,
    pub axis_unit_rate: f64,
    pub transverse: f64,
    pub lipschitz: f64,
}

impl WidthFnViolations {
    pub fn worst(&self) -> f64 {
        [self.bounds, self.axis_monotone, self.axis_unit_rate, self.transverse, self.lipschitz]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Node-wise scan of g = width_function(G, cone) for axis (1,0): bounds
/// 0 ≤ g ≤ w(G), g(x) ≤ g(x+re) ≤ g(x)+r, unit rate on segments inside G,
/// transverse increments ≤ ‖y‖·tanβ and Lip(g) ≤ 1 + tanβ; offsets of 1..=4 cells.
pub fn width_fn_violations(g_set: &GridSet, cone: &Cone, s_max: usize) -> Result<(ScalarField, WidthFnViolations)> {
    let g = width_function(g_set, cone, s_max)?;
    let w = width_open(g_set, cone, s_max)?.value;
    let d = g.domain();
    let h = d.spacing();
    let tb = cone.tan_beta();
    let shape = d.node_shape();
    let st = index_strides(&shape);
    let s = g.samples();
    let interior = g_set.interior_nodes();
    let mut v = WidthFnViolations {
        bounds: f64::NEG_INFINITY,
        axis_monotone: f64::NEG_INFINITY,
        axis_unit_rate: f64::NEG_INFINITY,
        transverse: f64::NEG_INFINITY,
        lipschitz: g.lipschitz() - (1.0 + tb),
    };
    for lin in 0..d.node_count() {
        let idx = unravel_index(lin, &shape);
        v.bounds = v.bounds.max(-s[lin]).max(s[lin] - w);
        let mut inside_run = interior[lin];
        for k in 1..=4usize {
            let r = k as f64 * h;
            if idx[0] + k < shape[0] {
                let m = lin + k * st[0];
                v.axis_monotone = v.axis_monotone.max(s[lin] - s[m]).max(s[m] - s[lin] - r);
                inside_run &= interior[m];
                if inside_run {
                    v.axis_unit_rate = v.axis_unit_rate.max((s[m] - s[lin] - r).abs());
                }
            }
            for up in [true, false] {
                let ok = if up { idx[1] + k < shape[1] } else { idx[1] >= k };
                if ok {
                    let m = if up { lin + k * st[1] } else { lin - k * st[1] };
                    v.transverse = v.transverse.max((s[m] - s[lin]).abs() - r * tb);
                }
            }
        }
    }
    Ok((g, v))
}

fn fixtures(d: &GridDomain) -> Result<Vec<(&'static str, GridSet)>> {
    let strip = GridSet::from_centers(d.clone(), |x| x[0] > 0.1 && x[0] < 0.9 && (x[1] - 0.5).abs() < 0.05);
    let disc = GridSet::from_centers(d.clone(), |x| (x[0] - 0.5).hypot(x[1] - 0.5) < 0.3);
    let cantor = GridSet::neighborhood(d, &gen_cantor_product(1.0 / 3.0, 3, 33)?, 0.02)?.set;
    Ok(vec![("strip", strip), ("disc", disc), ("cantor_nbhd", cantor)])
}

/// Width-function inequalities on three fixtures at h = 1/128 and 1/256.
pub fn criterion2() -> Result<Outcome> {
    let mut c = Check::new(2, "width-function properties", 180);
    let alpha = 0.5;
    let cone = Cone::new([1.0, 0.0], alpha)?;
    let mut worst: Vec<Vec<f64>> = Vec::new();
    for cells in [128usize, 256] {
        let d = GridDomain::unit_square(cells, 4);
        let tol = 2.0 * d.spacing() * (1.0 + 1.0 / alpha);
        let mut row = Vec::new();
        for (name, set) in fixtures(&d)? {
            let (_, v) = width_fn_violations(&set, &cone, 3)?;
            let key = format!("{name}_{cells}");
            c.num(&format!("{key}_bounds"), v.bounds);
            c.num(&format!("{key}_axis_monotone"), v.axis_monotone);
            c.num(&format!("{key}_axis_unit_rate"), v.axis_unit_rate);
            c.num(&format!("{key}_transverse"), v.transverse);
            c.num(&format!("{key}_lipschitz"), v.lipschitz);
            c.num(&format!("{key}_tolerance"), tol);
            c.part(format!("{name} h=1/{cells}"), v.worst() <= tol);
            row.push(v.worst());
        }
        worst.push(row);
    }
    let refined = worst[1].iter().zip(&worst[0]).all(|(fine, coarse)| fine.max(0.0) <= coarse.max(0.0) + 1e-12);
    c.part("refinement", refined);
    Ok(c.finish())
}
