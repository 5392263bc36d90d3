use rayon::prelude::*;

use super::partition::bump_profile;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::geometry::{distance_to_false_nodes, index_strides, unravel_index, GridSet};

#[derive(Clone, Debug)]
pub struct GlueOptions {
    /// Relative slack on the gradient precondition.
    pub slack_rel: f64,
    pub slack_abs: f64,
    /// Check the precondition and fail on violation.
    pub check: bool,
    /// Largest mollifier radius tried, in cells.
    pub s_cap: usize,
}

impl Default for GlueOptions {
    fn default() -> Self {
        GlueOptions {
            slack_rel: 0.1,
            slack_abs: 0.0,
            check: true,
            s_cap: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlueResult {
    pub field: ScalarField,
    /// Nodes of H with positive accuracy.
    pub glued_nodes: usize,
    /// Nodes where a nontrivial mollifier radius was accepted.
    pub smoothed_nodes: usize,
    /// Nodes where even the unsmoothed patch misses the gradient bound.
    pub unmet_nodes: usize,
}

pub fn mollify_glue(g: &ScalarField, h_set: &GridSet, phi: &VectorField, xi: &ScalarField, omega: &ScalarField) -> Result<ScalarField> {
    Ok(mollify_glue_with(g, h_set, phi, xi, omega, &GlueOptions::default())?.field)
}

/// Replace g on H ∩ {ξ > 0} by per-node mollifications. Each node keeps the
/// largest radius (bisection over `0..=s_cap` cells) whose patch satisfies
/// |f_k - g| ≤ ω0 / (2 M m) and ‖f_k' - Φ‖ ≤ ξ + ω0, where M = 2^n is the
/// overlap of the nodal hat partition, m = 1 + √n / h bounds its gradient and
/// ω0 = min(1, ξω, ω, ρ_U²) / 2.
pub fn mollify_glue_with(
    g: &ScalarField,
    h_set: &GridSet,
    phi: &VectorField,
    xi: &ScalarField,
    omega: &ScalarField,
    opts: &GlueOptions,
) -> Result<GlueResult> {
    let d = g.domain();
    for other in [h_set.domain(), phi.domain(), xi.domain(), omega.domain()] {
        if !d.same_lattice(other) {
            return Err(Error::invalid("mollify_glue inputs live on different grids"));
        }
    }
    let n = d.dim();
    if phi.components() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi.components(),
        });
    }
    let h = d.spacing();
    let shape = d.node_shape();
    let inside = h_set.interior_nodes();

    if opts.check {
        let mut worst: Option<(usize, f64, f64)> = None;
        for lin in 0..d.node_count() {
            if !inside[lin] {
                continue;
            }
            let grad = g.fd_gradient(&unravel_index(lin, &shape));
            let dev = dev_norm(grad.as_slice(), phi.at(lin));
            let bound = xi.samples()[lin] * (1.0 + opts.slack_rel) + opts.slack_abs;
            if dev > bound && worst.is_none_or(|(_, m, b)| dev - bound > m - b) {
                worst = Some((lin, dev, bound));
            }
        }
        if let Some((lin, measured, bound)) = worst {
            return Err(Error::Precondition {
                node: d.node_position_linear(lin).into_inner(),
                what: "gradient of g too far from Phi".into(),
                measured,
                bound,
            });
        }
    }

    let u: Vec<bool> = (0..d.node_count())
        .map(|lin| inside[lin] && xi.samples()[lin] > 0.0)
        .collect();
    let rho = distance_to_false_nodes(d, &u);
    let omega0: Vec<f64> = (0..d.node_count())
        .map(|lin| {
            let (x, w) = (xi.samples()[lin], omega.samples()[lin]);
            0.5 * 1f64.min(x * w).min(w).min(rho[lin] * rho[lin])
        })
        .collect();
    let overlap = (1usize << n) as f64;
    let m = 1.0 + (n as f64).sqrt() / h;

    let kernels: Vec<Vec<(Vec<i64>, f64)>> = (0..=opts.s_cap).map(|s| kernel(n, s)).collect();
    let st = index_strides(&shape);
    let gs = g.samples();

    let smooth = |lin: usize, s: usize| -> Option<f64> {
        let idx = unravel_index(lin, &shape);
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (off, w) in &kernels[s] {
            let mut t = 0usize;
            for a in 0..n {
                let c = idx[a] as i64 + off[a];
                if c < 0 || c as usize >= shape[a] {
                    return None;
                }
                t += c as usize * st[a];
            }
            acc += w * gs[t];
            wsum += w;
        }
        Some(acc / wsum)
    };

    let accept = |lin: usize, s: usize| -> bool {
        if s == 0 {
            return true;
        }
        let idx = unravel_index(lin, &shape);
        let tol = omega0[lin] / (2.0 * overlap * m);
        let Some(c) = smooth(lin, s) else { return false };
        if (c - gs[lin]).abs() > tol {
            return false;
        }
        let mut grad = vec![0.0; n];
        for a in 0..n {
            if idx[a] == 0 || idx[a] + 1 >= shape[a] {
                return false;
            }
            let (Some(p), Some(q)) = (smooth(lin + st[a], s), smooth(lin - st[a], s)) else {
                return false;
            };
            for (t, v) in [(lin + st[a], p), (lin - st[a], q)] {
                if (v - gs[t]).abs() > tol {
                    return false;
                }
            }
            grad[a] = (p - q) / (2.0 * h);
        }
        dev_norm(&grad, phi.at(lin)) <= xi.samples()[lin] + omega0[lin]
    };

    let choices: Vec<(usize, usize, bool)> = (0..d.node_count())
        .into_par_iter()
        .filter(|&lin| u[lin])
        .map(|lin| {
            let s = if accept(lin, opts.s_cap) {
                opts.s_cap
            } else {
                let (mut lo, mut hi) = (0usize, opts.s_cap);
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if accept(lin, mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            let met = s > 0 || {
                let grad = g.fd_gradient(&unravel_index(lin, &shape));
                dev_norm(grad.as_slice(), phi.at(lin)) <= xi.samples()[lin] + omega0[lin]
            };
            (lin, s, met)
        })
        .collect();

    let mut out = gs.to_vec();
    let mut smoothed = 0;
    let mut unmet = 0;
    for &(lin, s, met) in &choices {
        if s > 0 {
            out[lin] = smooth(lin, s).expect("accepted radius stays in the grid");
            smoothed += 1;
        }
        if !met {
            unmet += 1;
        }
    }
    Ok(GlueResult {
        field: ScalarField::new(d.clone(), out)?,
        glued_nodes: choices.len(),
        smoothed_nodes: smoothed,
        unmet_nodes: unmet,
    })
}

fn dev_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// Radial bump sampled at integer offsets with |o| < s + 1.
fn kernel(n: usize, s: usize) -> Vec<(Vec<i64>, f64)> {
    let r = s as i64;
    let side = (2 * r + 1) as usize;
    let total = side.pow(n as u32);
    let mut out = Vec::new();
    for k in 0..total {
        let mut rem = k;
        let mut off = Vec::with_capacity(n);
        for _ in 0..n {
            off.push((rem % side) as i64 - r);
            rem /= side;
        }
        let len = (off.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt();
        let w = bump_profile(len / (s as f64 + 1.0));
        if w > 0.0 {
            out.push((off, w));
        }
    }
    out
}
