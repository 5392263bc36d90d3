use crate::field::ScalarField;
use crate::geometry::{distance_to_false_nodes, index_strides, unravel_index, GridSet};

/// Radius field φ: the largest ladder radius h·2^m (m ≥ -1) over whose cube
/// the finite-difference gradient of g, restricted to H, has oscillation
/// at most η/2, capped by min(ρ_H, ω, 1)/2. Zero off H.
///
/// Oscillation over a set is the diameter of the bounding box of the
/// gradients it contains, which bounds the Euclidean diameter from above.
pub fn modulus_radius(g: &ScalarField, h_set: &GridSet, omega: &ScalarField, eta: f64) -> ScalarField {
    let d = g.domain();
    let n = d.dim();
    let h = d.spacing();
    let shape = d.node_shape();
    let count = d.node_count();
    let inside = h_set.interior_nodes();
    let rho = distance_to_false_nodes(d, &inside);
    let cap: Vec<f64> = (0..count)
        .map(|lin| 0.5 * rho[lin].min(omega.samples()[lin]).min(1.0))
        .collect();

    let grads: Vec<Vec<f64>> = (0..count)
        .map(|lin| {
            if inside[lin] {
                g.fd_gradient(&unravel_index(lin, &shape)).into_inner()
            } else {
                vec![0.0; n]
            }
        })
        .collect();
    let mut hi: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..count).map(|l| if inside[l] { grads[l][a] } else { f64::NEG_INFINITY }).collect())
        .collect();
    let mut lo: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..count).map(|l| if inside[l] { grads[l][a] } else { f64::INFINITY }).collect())
        .collect();

    let mut radius = vec![0.5 * h; count];
    let mut alive: Vec<bool> = (0..count).map(|l| inside[l] && cap[l] > 0.5 * h).collect();
    let st = index_strides(&shape);
    let mut m = 0u32;
    while alive.iter().any(|&a| a) {
        // cube radius 2^m from 2^(m-1); radius 1 from the raw values
        let (half, steps) = if m == 0 { (1, 1) } else { (1usize << (m - 1), 2) };
        for comp in 0..n {
            for axis in 0..n {
                hi[comp] = widen(&hi[comp], &shape, &st, axis, half, steps, f64::max);
                lo[comp] = widen(&lo[comp], &shape, &st, axis, half, steps, f64::min);
            }
        }
        let r = (1u64 << m) as f64 * h;
        for lin in 0..count {
            if !alive[lin] {
                continue;
            }
            let osc = (0..n)
                .map(|c| {
                    let w = hi[c][lin] - lo[c][lin];
                    w * w
                })
                .sum::<f64>()
                .sqrt();
            if osc <= 0.5 * eta {
                radius[lin] = r;
                if r >= cap[lin] {
                    alive[lin] = false;
                }
            } else {
                alive[lin] = false;
            }
        }
        m += 1;
    }

    let samples = (0..count)
        .map(|lin| if inside[lin] { radius[lin].min(cap[lin]) } else { 0.0 })
        .collect();
    ScalarField::new(d.clone(), samples).expect("node count matches")
}

/// ξ = η·φ/12 with φ from [`modulus_radius`].
pub fn modulus_field(g: &ScalarField, h_set: &GridSet, omega: &ScalarField, eta: f64) -> ScalarField {
    modulus_radius(g, h_set, omega, eta).scale(eta / 12.0)
}

// Window extension along one axis. With steps == 1 the window grows from
// radius 0 to radius `half`; with steps == 2 it doubles from `half` to 2·half.
fn widen(
    v: &[f64],
    shape: &[usize],
    st: &[usize],
    axis: usize,
    half: usize,
    steps: usize,
    op: fn(f64, f64) -> f64,
) -> Vec<f64> {
    let len = shape[axis];
    let stride = st[axis];
    let mut out = v.to_vec();
    for lin in 0..v.len() {
        let i = (lin / stride) % len;
        let base = lin - i * stride;
        let at = |j: usize| v[base + j * stride];
        let lo_j = i.saturating_sub(half);
        let hi_j = (i + half).min(len - 1);
        out[lin] = if steps == 1 {
            (lo_j..=hi_j).map(at).fold(v[lin], op)
        } else {
            op(at(lo_j), at(hi_j))
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridDomain;

    fn direct_osc(g: &ScalarField, inside: &[bool], center: &[usize], w: usize) -> f64 {
        let d = g.domain();
        let shape = d.node_shape();
        let n = d.dim();
        let mut hi = vec![f64::NEG_INFINITY; n];
        let mut lo = vec![f64::INFINITY; n];
        for lin in 0..d.node_count() {
            let idx = unravel_index(lin, &shape);
            if !inside[lin] || (0..n).any(|a| idx[a].abs_diff(center[a]) > w) {
                continue;
            }
            let gr = g.fd_gradient(&idx);
            for a in 0..n {
                hi[a] = hi[a].max(gr[a]);
                lo[a] = lo[a].min(gr[a]);
            }
        }
        (0..n).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn affine_hits_cap() {
        let d = GridDomain::unit_square(64, 4);
        let hs = GridSet::from_centers(d.clone(), |x| x[0] > 0.2 && x[0] < 0.8 && x[1] > 0.2 && x[1] < 0.8);
        let g = ScalarField::from_fn(d.clone(), |x| 0.4 * x[0] + x[1]);
        let w = ScalarField::constant(d.clone(), 0.3);
        let phi = modulus_radius(&g, &hs, &w, 0.5);
        let rho = crate::geometry::distance_to_complement_field(&hs);
        let inside = hs.interior_nodes();
        for lin in 0..d.node_count() {
            let cap = 0.5 * rho.samples()[lin].min(0.3).min(1.0);
            let want = if inside[lin] { cap } else { 0.0 };
            assert!((phi.samples()[lin] - want).abs() < 1e-12);
        }
        let xi = modulus_field(&g, &hs, &w, 0.5);
        assert!((xi.max() - 0.5 * phi.max() / 12.0).abs() < 1e-15);
    }

    #[test]
    fn halving_eta_at_most_halves() {
        let d = GridDomain::unit_square(64, 2);
        let hs = GridSet::full(d.clone());
        let g = ScalarField::from_fn(d.clone(), |x| (7.0 * x[0]).sin() * (5.0 * x[1]).cos() / 7.0);
        let w = ScalarField::constant(d.clone(), 1.0);
        let a = modulus_field(&g, &hs, &w, 0.8);
        let b = modulus_field(&g, &hs, &w, 0.4);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!(*y <= 0.5 * x + 1e-15);
        }
    }

    #[test]
    fn sine_matches_direct_scan() {
        let d = GridDomain::unit_square(128, 2);
        let hs = GridSet::full(d.clone());
        let g = ScalarField::from_fn(d.clone(), |x| (10.0 * x[0]).sin());
        let w = ScalarField::constant(d.clone(), 1.0);
        let eta = 0.5;
        let phi = modulus_radius(&g, &hs, &w, eta);
        let inside = hs.interior_nodes();
        let center = [40usize, 60usize];
        let lin = crate::geometry::ravel_index(&center, &d.node_shape());
        let h = d.spacing();
        let r = phi.samples()[lin];
        let m = (r / h).floor() as usize;
        assert!(direct_osc(&g, &inside, &center, m) <= eta / 2.0);
        let rho_cap = 0.5 * crate::geometry::distance_to_complement_field(&hs).samples()[lin].min(1.0);
        if r < rho_cap {
            assert!(direct_osc(&g, &inside, &center, if m == 0 { 1 } else { 2 * m }) > eta / 2.0);
        }
        // 10·|cos| changes by 0.25 only over a radius of order 0.0125/|sin|
        assert!(r <= 0.1);
    }
}
