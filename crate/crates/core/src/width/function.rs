use rayon::prelude::*;

use super::dp::dp_table;
use super::steps::{build_step_set, StepSet};
use crate::error::Result;
use crate::field::{interpolate, ScalarField};
use crate::geometry::{Cone, GridSet};

/// The width function
/// `g(x) = max(0, sup_{s >= 0} [V(x + s e) - s])`, where `V(y)` is the best
/// inside length of a cone path ending at `y`. The ray is sampled every
/// `h/2` and `V` is interpolated multilinearly between nodes.
pub fn width_function(g: &GridSet, cone: &Cone, s_max: usize) -> Result<ScalarField> {
    let steps = build_step_set(cone, s_max)?;
    Ok(width_function_with(g, &steps))
}

pub fn width_function_with(g: &GridSet, steps: &StepSet) -> ScalarField {
    let domain = g.domain().clone();
    let table = dp_table(g, steps);
    let v = &table.values;
    let vmax = v.iter().cloned().fold(0.0, f64::max);
    if vmax == 0.0 {
        return ScalarField::zeros(domain);
    }
    let shape = domain.node_shape();
    let h = domain.spacing();
    let axis = steps.cone().axis().to_vec();
    let upper: Vec<f64> = shape.iter().map(|&s| (s - 1) as f64).collect();
    let samples: Vec<f64> = (0..domain.node_count())
        .into_par_iter()
        .map(|lin| {
            let idx = crate::geometry::unravel_index(lin, &shape);
            let mut best = v[lin];
            let mut j = 1usize;
            loop {
                let s = 0.5 * j as f64;
                if s * h >= vmax - best {
                    break;
                }
                let lc: Vec<f64> = idx.iter().zip(&axis).map(|(&i, &e)| i as f64 + s * e).collect();
                if lc.iter().zip(&upper).any(|(&c, &u)| c < 0.0 || c > u) {
                    break;
                }
                let val = interpolate(&shape, &lc, |l| v[l]) - s * h;
                if val > best {
                    best = val;
                }
                j += 1;
            }
            best.max(0.0)
        })
        .collect();
    ScalarField::new(domain, samples).expect("sized to node count")
}
