use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{distance, GridDomain, GridSet, Vector};

/// b(t) = exp(1 - 1/(1 - t^2)) for |t| < 1, normalized so b(0) = 1.
pub fn bump_profile(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t2)).exp()
    }
}

/// Profile value at half radius. Nodes whose raw bump sum reaches it are
/// covered: their normalized weights sum to exactly one.
pub fn half_radius_level() -> f64 {
    bump_profile(0.5)
}

#[derive(Clone, Debug)]
pub struct Bump {
    pub center: Vector,
    pub radius: f64,
}

/// A ball that must stay inside `carrier`.
pub struct Carrier<'a> {
    pub center: Vector,
    pub radius: f64,
    pub carrier: &'a GridSet,
}

#[derive(Debug)]
pub struct BumpPartition {
    domain: GridDomain,
    bumps: Vec<Bump>,
    overlap: usize,
    // per bump: sorted (node, weight) with weight > 0
    weights: Vec<Vec<(usize, f64)>>,
    sums: Vec<f64>,
    lips: Vec<OnceLock<f64>>,
}

impl Clone for BumpPartition {
    fn clone(&self) -> Self {
        BumpPartition {
            domain: self.domain.clone(),
            bumps: self.bumps.clone(),
            overlap: self.overlap,
            weights: self.weights.clone(),
            sums: self.sums.clone(),
            lips: (0..self.bumps.len()).map(|_| OnceLock::new()).collect(),
        }
    }
}

/// Normalized bump weights on `domain`. Every node within half radius of some
/// center gets weights summing to one; farther out they taper to zero.
pub fn build_partition(domain: &GridDomain, carriers: &[Carrier<'_>], required: &[Vector]) -> Result<BumpPartition> {
    let h = domain.spacing();
    let shape = domain.node_shape();
    let mut raw: Vec<Vec<(usize, f64)>> = Vec::with_capacity(carriers.len());
    for c in carriers {
        if c.radius <= 0.0 {
            return Err(Error::invalid("bump radius must be positive"));
        }
        if c.center.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: c.center.dim(),
            });
        }
        let interior = c.carrier.interior_nodes();
        let (lo, hi) = domain.node_box_around(&c.center, c.radius + h);
        let mut list = Vec::new();
        for_each_in_box(&lo, &hi, |idx| {
            let p = domain.node_position(idx);
            let b = bump_profile(distance(&p, &c.center) / c.radius);
            if b > 0.0 {
                let lin = crate::geometry::ravel_index(idx, &shape);
                list.push((lin, b));
            }
        });
        list.sort_by_key(|&(lin, _)| lin);
        for &(lin, b) in &list {
            if !interior[lin] {
                return Err(Error::Precondition {
                    node: domain.node_position_linear(lin).into_inner(),
                    what: "bump support leaves its carrier".into(),
                    measured: b,
                    bound: 0.0,
                });
            }
        }
        raw.push(list);
    }

    let mut total = vec![0.0; domain.node_count()];
    let mut count = vec![0usize; domain.node_count()];
    for list in &raw {
        for &(lin, b) in list {
            total[lin] += b;
            count[lin] += 1;
        }
    }
    let floor = half_radius_level();
    let weights: Vec<Vec<(usize, f64)>> = raw
        .into_iter()
        .map(|list| list.into_iter().map(|(lin, b)| (lin, b / total[lin].max(floor))).collect())
        .collect();
    let mut sums = vec![0.0; domain.node_count()];
    for list in &weights {
        for &(lin, w) in list {
            sums[lin] += w;
        }
    }

    let bumps: Vec<Bump> = carriers
        .iter()
        .map(|c| Bump {
            center: c.center.clone(),
            radius: c.radius,
        })
        .collect();
    let gaps: Vec<Vec<f64>> = required
        .iter()
        .filter(|p| {
            let s: f64 = bumps
                .iter()
                .map(|b| bump_profile(distance(p, &b.center) / b.radius))
                .sum();
            s < floor
        })
        .map(|p| p.as_slice().to_vec())
        .collect();
    if !gaps.is_empty() {
        return Err(Error::UncoveredPoints { gaps });
    }

    Ok(BumpPartition {
        domain: domain.clone(),
        overlap: count.into_iter().max().unwrap_or(0),
        lips: (0..bumps.len()).map(|_| OnceLock::new()).collect(),
        bumps,
        weights,
        sums,
    })
}

/// Greedy cover: walk the points in order and open a new bump at any point
/// farther than `frac * radius` from every existing center.
pub fn greedy_centers(points: &[Vector], frac: f64, radius_of: impl Fn(&Vector) -> f64) -> Vec<(Vector, f64)> {
    let mut out: Vec<(Vector, f64)> = Vec::new();
    for p in points {
        if out.iter().any(|(c, r)| distance(p, c) <= frac * r) {
            continue;
        }
        out.push((p.clone(), radius_of(p)));
    }
    out
}

impl BumpPartition {
    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }

    /// Largest number of bumps nonzero at a single node.
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// Nonzero (node, weight) pairs of bump `k`, sorted by node.
    pub fn support(&self, k: usize) -> &[(usize, f64)] {
        &self.weights[k]
    }

    pub fn weight_at(&self, k: usize, lin: usize) -> f64 {
        let list = &self.weights[k];
        match list.binary_search_by_key(&lin, |&(l, _)| l) {
            Ok(i) => list[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn weight_field(&self, k: usize) -> ScalarField {
        let mut s = vec![0.0; self.domain.node_count()];
        for &(lin, w) in &self.weights[k] {
            s[lin] = w;
        }
        ScalarField::new(self.domain.clone(), s).expect("node count matches")
    }

    pub fn sum_field(&self) -> ScalarField {
        ScalarField::new(self.domain.clone(), self.sums.clone()).expect("node count matches")
    }

    /// Nodes where the weights sum to one.
    pub fn covered_nodes(&self) -> Vec<bool> {
        self.sums.iter().map(|&s| s >= 1.0 - 1e-12).collect()
    }

    /// Lipschitz constant of the interpolated weight of bump `k`.
    pub fn weight_lipschitz(&self, k: usize) -> f64 {
        *self.lips[k].get_or_init(|| {
            let d = &self.domain;
            let n = d.dim();
            let nshape = d.node_shape();
            let cshape = d.cell_shape();
            let mut best = 0.0f64;
            for &(lin, _) in &self.weights[k] {
                let idx = crate::geometry::unravel_index(lin, &nshape);
                for mask in 0..(1usize << n) {
                    let mut c = Vec::with_capacity(n);
                    for (a, &i) in idx.iter().enumerate() {
                        let o = (mask >> a) & 1;
                        if i < o || i - o >= cshape[a] {
                            break;
                        }
                        c.push(i - o);
                    }
                    if c.len() == n {
                        let b = crate::field::cell_gradient_bound(&c, &nshape, d.spacing(), |l| self.weight_at(k, l));
                        best = best.max(b);
                    }
                }
            }
            best
        })
    }
}

pub(crate) fn for_each_in_box(lo: &[usize], hi: &[usize], mut f: impl FnMut(&[usize])) {
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut idx = lo.to_vec();
    loop {
        f(&idx);
        let mut a = 0;
        loop {
            if a == idx.len() {
                return;
            }
            if idx[a] < hi[a] {
                idx[a] += 1;
                break;
            }
            idx[a] = lo[a];
            a += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> GridDomain {
        GridDomain::unit_square(32, 2)
    }

    #[test]
    fn profile_shape() {
        assert_eq!(bump_profile(0.0), 1.0);
        assert_eq!(bump_profile(1.0), 0.0);
        assert!(bump_profile(0.5) > bump_profile(0.6));
        assert!((half_radius_level() - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn single_ball_is_one_on_inner_region() {
        let d = dom();
        let full = GridSet::full(d.clone());
        let c = Vector::from([0.5, 0.5]);
        let p = build_partition(&d, &[Carrier { center: c.clone(), radius: 0.4, carrier: &full }], &[c.clone()]).unwrap();
        for &(lin, w) in p.support(0) {
            let x = d.node_position_linear(lin);
            if distance(&x, &c) <= 0.2 {
                assert_eq!(w, 1.0);
            }
            assert!(w <= 1.0);
        }
        assert_eq!(p.overlap(), 1);
        assert!((p.weight_lipschitz(0) - p.weight_field(0).lipschitz()).abs() < 1e-12);
    }

    #[test]
    fn disjoint_balls_are_indicators() {
        let d = dom();
        let full = GridSet::full(d.clone());
        let cs = [
            Carrier { center: Vector::from([0.25, 0.5]), radius: 0.2, carrier: &full },
            Carrier { center: Vector::from([0.75, 0.5]), radius: 0.2, carrier: &full },
        ];
        let p = build_partition(&d, &cs, &[]).unwrap();
        assert_eq!(p.overlap(), 1);
        let lin = crate::geometry::ravel_index(&[10, 18], &d.node_shape());
        assert_eq!(p.weight_at(0, lin), 1.0);
        assert_eq!(p.weight_at(1, lin), 0.0);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let d = dom();
        let full = GridSet::full(d.clone());
        let cs = [
            Carrier { center: Vector::from([0.375, 0.5]), radius: 0.25, carrier: &full },
            Carrier { center: Vector::from([0.625, 0.5]), radius: 0.25, carrier: &full },
        ];
        let p = build_partition(&d, &cs, &[]).unwrap();
        let lin = crate::geometry::ravel_index(&[18, 18], &d.node_shape());
        assert!((p.weight_at(0, lin) - 0.5).abs() < 1e-12);
        assert!((p.weight_at(1, lin) - 0.5).abs() < 1e-12);
        assert_eq!(p.overlap(), 2);
    }

    #[test]
    fn carrier_and_gap_errors() {
        let d = dom();
        let small = GridSet::from_centers(d.clone(), |x| x[0] < 0.5);
        let err = build_partition(&d, &[Carrier { center: Vector::from([0.4, 0.5]), radius: 0.3, carrier: &small }], &[]);
        assert!(matches!(err, Err(Error::Precondition { .. })));
        let full = GridSet::full(d.clone());
        let err = build_partition(
            &d,
            &[Carrier { center: Vector::from([0.2, 0.2]), radius: 0.1, carrier: &full }],
            &[Vector::from([0.8, 0.8])],
        );
        assert!(matches!(err, Err(Error::UncoveredPoints { .. })));
    }

    #[test]
    fn greedy_cover_spacing() {
        let pts: Vec<Vector> = (0..10).map(|i| Vector::from([i as f64 * 0.1, 0.0])).collect();
        let cs = greedy_centers(&pts, 0.5, |_| 0.3);
        assert_eq!(cs.len(), 5);
    }
}
