use crate::error::{Error, Result};
use crate::geometry::{distance, GridSet};

/// Length of `[a, b] ∩ G`: the segment is cut at every lattice hyperplane it
/// crosses and each piece is kept when its midpoint lies in `G`.
pub fn inside_length(a: &[f64], b: &[f64], g: &GridSet) -> Result<f64> {
    let d = g.domain();
    for p in [a, b] {
        if p.len() != d.dim() {
            return Err(Error::DimensionMismatch {
                expected: d.dim(),
                got: p.len(),
            });
        }
        if !d.contains_point(p) {
            return Err(Error::OutsideDomain { point: p.to_vec() });
        }
    }
    let la = d.lattice_coords(a);
    let lb = d.lattice_coords(b);
    let mut ts = vec![0.0, 1.0];
    for (&u, &v) in la.iter().zip(&lb) {
        if u == v {
            continue;
        }
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let mut k = lo.floor() + 1.0;
        while k < hi {
            ts.push((k - u) / (v - u));
            k += 1.0;
        }
    }
    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let total = distance(a, b);
    let mut acc = 0.0;
    for w in ts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let mid: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| x + tm * (y - x)).collect();
        if g.contains_point(&mid) {
            acc += (w[1] - w[0]) * total;
        }
    }
    Ok(acc)
}
