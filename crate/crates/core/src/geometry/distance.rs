use super::grid::{strides, unravel};
use super::{GridDomain, GridSet, Vector};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// `dist(x, R^n \ G)`, by scanning every unoccupied cell. Zero off `G`.
pub fn distance_to_complement(g: &GridSet, x: &[f64]) -> Result<f64> {
    let d = g.domain();
    if x.len() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            got: x.len(),
        });
    }
    if !d.contains_point(x) {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    if !g.contains_point(x) {
        return Ok(0.0);
    }
    let shape = d.cell_shape();
    let mut best = f64::INFINITY;
    for lin in 0..d.cell_count() {
        if !g.is_occupied_linear(lin) {
            best = best.min(d.cell_box_distance(&unravel(lin, &shape), x));
        }
    }
    Ok(best)
}

/// `dist(·, R^n \ G)` sampled at every node.
///
/// The nearest complement point of a lattice node is always a non-interior
/// node, so a node-lattice Euclidean distance transform is exact here.
pub fn distance_to_complement_field(g: &GridSet) -> ScalarField {
    let d = g.domain();
    let samples = distance_to_false_nodes(d, &g.interior_nodes());
    ScalarField::new(d.clone(), samples).expect("node count matches")
}

/// Euclidean distance from every node to the nearest node whose flag is
/// false (infinite if there is none), by a separable distance transform.
pub(crate) fn distance_to_false_nodes(d: &GridDomain, flags: &[bool]) -> Vec<f64> {
    let shape = d.node_shape();
    let mut f: Vec<f64> = flags
        .iter()
        .map(|&i| if i { f64::INFINITY } else { 0.0 })
        .collect();
    let st = strides(&shape);
    for axis in 0..shape.len() {
        let len = shape[axis];
        let step = st[axis];
        let mut line = vec![0.0; len];
        let mut out = vec![0.0; len];
        let mut other_shape = shape.clone();
        other_shape.remove(axis);
        let others: usize = other_shape.iter().product();
        for o in 0..others {
            let oi = unravel(o, &other_shape);
            let mut base = 0;
            let mut k = 0;
            for a in 0..shape.len() {
                if a == axis {
                    continue;
                }
                base += oi[k] * st[a];
                k += 1;
            }
            for (i, v) in line.iter_mut().enumerate() {
                *v = f[base + i * step];
            }
            squared_edt_1d(&line, &mut out);
            for (i, v) in out.iter().enumerate() {
                f[base + i * step] = *v;
            }
        }
    }
    let h = d.spacing();
    f.into_iter().map(|v| h * v.sqrt()).collect()
}

/// One-dimensional squared distance transform of a sampled function
/// (lower envelope of parabolas).
fn squared_edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let mut first = None;
    for (q, &fq) in f.iter().enumerate() {
        if fq.is_finite() {
            first = Some(q);
            break;
        }
    }
    let Some(q0) = first else {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    };
    v[0] = q0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in q0 + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *o = dq * dq + f[p];
    }
}

#[allow(dead_code)]
fn node_distance_brute(g: &GridSet, node: &[usize]) -> f64 {
    let d = g.domain();
    let x: Vector = d.node_position(node);
    distance_to_complement(g, &x).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridDomain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_cell_center() {
        let d = GridDomain::unit_square(8, 2);
        let g = GridSet::from_cells(d.clone(), |idx| idx == [5, 5]);
        let h = d.spacing();
        let c = d.node_position(&[5, 5]).add(&[h / 2.0, h / 2.0]);
        assert!((distance_to_complement(&g, &c).unwrap() - h / 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_set_is_zero() {
        let g = GridSet::empty(GridDomain::unit_square(8, 2));
        assert_eq!(distance_to_complement(&g, &[0.3, 0.4]).unwrap(), 0.0);
    }

    #[test]
    fn unit_square_distance() {
        let g = GridSet::full(GridDomain::unit_square(10, 2));
        let v = distance_to_complement(&g, &[0.3, 0.4]).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        assert!(distance_to_complement(&g, &[5.0, 0.0]).is_err());
    }

    #[test]
    fn edt_matches_brute_force_and_is_lipschitz() {
        let d = GridDomain::unit_square(12, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GridSet::from_cells(d.clone(), |_| rng.gen_bool(0.8));
        let field = distance_to_complement_field(&g);
        let shape = d.node_shape();
        for lin in 0..d.node_count() {
            let idx = unravel(lin, &shape);
            let b = node_distance_brute(&g, &idx);
            assert!((field.samples()[lin] - b).abs() < 1e-12, "node {idx:?}");
        }
        for a in 0..d.node_count() {
            for b in 0..d.node_count() {
                let pa = d.node_position_linear(a);
                let pb = d.node_position_linear(b);
                let diff = (field.samples()[a] - field.samples()[b]).abs();
                assert!(diff <= crate::geometry::distance(&pa, &pb) + 1e-12);
            }
        }
    }
}
