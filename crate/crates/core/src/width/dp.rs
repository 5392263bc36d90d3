use serde::Serialize;

use super::steps::{build_step_set, StepSet};
use crate::error::{Error, Result};
use crate::geometry::{Cone, GridDomain, GridSet};
use crate::geometry::{ravel_index, unravel_index};

/// Node budget of the exhaustive oracle.
pub const BRUTE_FORCE_NODE_BUDGET: usize = 400;

/// A lattice polyline whose consecutive differences are steps of a step set.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConePath {
    pub nodes: Vec<Vec<usize>>,
}

impl ConePath {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Checks the step-membership and strict-advance invariants.
    pub fn is_valid(&self, steps: &StepSet) -> bool {
        let axis = steps.cone().axis();
        self.nodes.windows(2).all(|w| {
            let d: Vec<i64> = w[1].iter().zip(&w[0]).map(|(&b, &a)| b as i64 - a as i64).collect();
            let adv: f64 = d.iter().zip(axis.iter()).map(|(&v, &e)| v as f64 * e).sum();
            steps.contains(&d) && adv > 0.0
        })
    }

    /// Inside length along the path with the same per-step arithmetic as the DP.
    pub fn score(&self, g: &GridSet, steps: &StepSet) -> f64 {
        let mut acc = 0.0;
        for w in self.nodes.windows(2) {
            let d: Vec<i64> = w[1].iter().zip(&w[0]).map(|(&b, &a)| b as i64 - a as i64).collect();
            let k = steps.steps().iter().position(|s| *s == d).expect("path step not in step set");
            acc += steps.segment_length(k, &w[0], g);
        }
        acc
    }

    pub fn positions(&self, domain: &GridDomain) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|n| domain.node_position(n).into_inner()).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WidthResult {
    pub value: f64,
    pub path: ConePath,
    pub axis: Vec<f64>,
    pub aperture: f64,
    pub s_max: usize,
    pub step_count: usize,
    pub spacing: f64,
    pub dims: Vec<usize>,
    pub padding: usize,
}

/// Per-node best inside length of a cone path ending at the node, with
/// backpointers (`u32::MAX` marks a path start).
pub(crate) struct DpTable {
    pub values: Vec<f64>,
    pub back: Vec<u32>,
}

/// Node linear indices sorted by advance along the cone axis.
fn processing_order(domain: &GridDomain, axis: &[f64]) -> Vec<usize> {
    let shape = domain.node_shape();
    let mut keyed: Vec<(f64, usize)> = (0..domain.node_count())
        .map(|lin| {
            let idx = unravel_index(lin, &shape);
            let p: f64 = idx.iter().zip(axis).map(|(&i, &e)| i as f64 * e).sum();
            (p, lin)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, l)| l).collect()
}

pub(crate) fn dp_table(g: &GridSet, steps: &StepSet) -> DpTable {
    let domain = g.domain();
    let shape = domain.node_shape();
    let n = domain.node_count();
    let mut values = vec![0.0f64; n];
    let mut back = vec![u32::MAX; n];
    let neg: Vec<Vec<i64>> = steps.steps().iter().map(|d| d.iter().map(|v| -v).collect()).collect();
    for y in processing_order(domain, steps.cone().axis()) {
        let yi = unravel_index(y, &shape);
        let mut best = 0.0f64;
        let mut best_x: Option<Vec<usize>> = None;
        for (k, nd) in neg.iter().enumerate() {
            let mut x = Vec::with_capacity(yi.len());
            let mut ok = true;
            for a in 0..yi.len() {
                let v = yi[a] as i64 + nd[a];
                if v < 0 || v as usize >= shape[a] {
                    ok = false;
                    break;
                }
                x.push(v as usize);
            }
            if !ok {
                continue;
            }
            let cand = values[ravel_index(&x, &shape)] + steps.segment_length(k, &x, g);
            let better = cand > best
                || (cand == best && best_x.as_ref().is_some_and(|bx| x < *bx));
            if better {
                best = cand;
                best_x = Some(x);
            }
        }
        values[y] = best;
        if let Some(x) = best_x {
            back[y] = ravel_index(&x, &shape) as u32;
        }
    }
    DpTable { values, back }
}

/// The discrete `(e, α)`-width: the longest inside length over cone paths on
/// lattice nodes, by dynamic programming in order of advance along `e`.
pub fn width_open(g: &GridSet, cone: &Cone, s_max: usize) -> Result<WidthResult> {
    let steps = build_step_set(cone, s_max)?;
    width_open_with(g, &steps)
}

pub fn width_open_with(g: &GridSet, steps: &StepSet) -> Result<WidthResult> {
    let domain = g.domain();
    if steps.cone().dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: steps.cone().dim(),
        });
    }
    let shape = domain.node_shape();
    let table = dp_table(g, steps);
    let mut end: Option<usize> = None;
    let mut value = 0.0;
    for (lin, &v) in table.values.iter().enumerate() {
        let better = v > value
            || (v == value && v > 0.0 && end.is_some_and(|e| unravel_index(lin, &shape) < unravel_index(e, &shape)));
        if better {
            value = v;
            end = Some(lin);
        }
    }
    let mut path = ConePath::default();
    if let Some(mut cur) = end {
        path.nodes.push(unravel_index(cur, &shape));
        while table.back[cur] != u32::MAX {
            cur = table.back[cur] as usize;
            path.nodes.push(unravel_index(cur, &shape));
        }
        path.nodes.reverse();
    }
    Ok(WidthResult {
        value,
        path,
        axis: steps.cone().axis().to_vec(),
        aperture: steps.cone().aperture(),
        s_max: steps.s_max(),
        step_count: steps.len(),
        spacing: domain.spacing(),
        dims: domain.dims().to_vec(),
        padding: domain.padding(),
    })
}

/// Exhaustive depth-first search over cone paths, for small grids only.
///
/// Appending or prepending a segment never lowers a path's accumulated
/// length (rounding is monotone and lengths are nonnegative), so it is
/// enough to enumerate maximal paths: those starting at nodes without a
/// predecessor and ending at nodes without a successor.
pub fn width_brute_force(g: &GridSet, cone: &Cone, s_max: usize) -> Result<f64> {
    let domain = g.domain();
    let n = domain.node_count();
    if n > BRUTE_FORCE_NODE_BUDGET {
        return Err(Error::NodeBudgetExceeded {
            nodes: n,
            budget: BRUTE_FORCE_NODE_BUDGET,
        });
    }
    let steps = build_step_set(cone, s_max)?;
    let shape = domain.node_shape();
    let ns = steps.len();
    // successor table: (node, step length) per (node, step)
    let mut succ: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut has_pred = vec![false; n];
    for (lin, s) in succ.iter_mut().enumerate() {
        let idx = unravel_index(lin, &shape);
        for k in 0..ns {
            if let Some(y) = steps.advance(k, &idx, domain) {
                let yl = ravel_index(&y, &shape);
                s.push((yl, steps.segment_length(k, &idx, g)));
                has_pred[yl] = true;
            }
        }
    }
    let mut best = 0.0f64;
    let mut stack: Vec<(usize, f64)> = Vec::new();
    for start in 0..n {
        if has_pred[start] {
            continue;
        }
        stack.push((start, 0.0));
        while let Some((node, acc)) = stack.pop() {
            if succ[node].is_empty() {
                if acc > best {
                    best = acc;
                }
                continue;
            }
            for &(y, l) in &succ[node] {
                stack.push((y, acc + l));
            }
        }
    }
    Ok(best)
}
