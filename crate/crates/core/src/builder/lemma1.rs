use rayon::prelude::*;
use serde::Serialize;

use super::mollify::GlueOptions;
use super::partition::{build_partition, BumpPartition, Carrier};
use super::tau_of_sigma;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{distance, distance_to_complement_field, unravel_index, Cone, GridSet, PointCloud, Vector};
use crate::width::{build_step_set, width_function_with, width_open_with, StepSet};

/// What to do when no configured neighborhood radius meets a width budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthCheck {
    /// Fail with the measured widths.
    Strict,
    /// Use the largest radius and cap the width function at the budget.
    Clamp,
}

#[derive(Clone, Debug)]
pub struct WidthsCfg {
    pub s_max: usize,
    /// Candidate neighborhood radii in units of h, strictly decreasing. The
    /// first one meeting the budget is used; under `Clamp` the first one.
    pub radii_cells: Vec<f64>,
    /// Largest bump radius.
    pub bump_radius: f64,
    pub k_max: usize,
    pub check: WidthCheck,
    /// Relative threshold for "width zero" checks.
    pub threshold: f64,
    /// Padding of the local grids on which bump widths are computed.
    pub local_padding: usize,
    /// Upper bound on the staircase length k.
    pub stair_max: usize,
    pub glue: GlueOptions,
}

impl Default for WidthsCfg {
    fn default() -> Self {
        WidthsCfg {
            s_max: 3,
            radii_cells: vec![16.0, 8.0, 4.0, 2.0, 1.0, 0.5],
            bump_radius: 0.25,
            k_max: 64,
            check: WidthCheck::Strict,
            threshold: 0.1,
            local_padding: 4,
            stair_max: 12,
            glue: GlueOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceRecord {
    pub center: Vec<f64>,
    pub radius: f64,
    pub budget: f64,
    pub width: f64,
    pub nbhd_radius: f64,
    pub clamped: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Lemma1Report {
    /// max(g - ω) and min g over nodes.
    pub excess_over_omega: f64,
    pub min_value: f64,
    pub lipschitz: f64,
    pub lipschitz_bound: f64,
    /// max ‖∇g - e‖ over interior nodes of H.
    pub gradient_deviation: f64,
    pub gradient_bound: f64,
    pub tolerance: f64,
}

impl Lemma1Report {
    pub fn passes(&self) -> bool {
        self.excess_over_omega <= 0.0
            && self.min_value >= 0.0
            && self.lipschitz <= self.lipschitz_bound
            && self.gradient_deviation <= self.gradient_bound
    }
}

#[derive(Clone, Debug)]
pub struct Lemma1Output {
    pub g: ScalarField,
    pub h_set: GridSet,
    pub tau: f64,
    pub pieces: Vec<PieceRecord>,
    pub report: Lemma1Report,
    /// Points of E left outside the truncated partition.
    pub uncovered: usize,
}

/// g = Σ g_k φ_k where φ_k is a bump partition covering E inside {ω > 0}
/// and g_k is the width function of a neighborhood G_k of E ∩ spt φ_k whose
/// (e, τ)-width is below the budget ε_k.
pub fn lemma1_build(e_set: &PointCloud, e: &[f64], omega: &ScalarField, eps: f64, cfg: &WidthsCfg) -> Result<Lemma1Output> {
    let ws = omega.samples();
    let g_set = GridSet::from_node_predicate(omega.domain().clone(), |l| ws[l] > 0.0);
    lemma1_build_in(e_set, e, omega, &g_set, eps, cfg)
}

/// As [`lemma1_build`] with the open set G = {ω > 0} given explicitly.
pub fn lemma1_build_in(
    e_set: &PointCloud,
    e: &[f64],
    omega: &ScalarField,
    g_set: &GridSet,
    eps: f64,
    cfg: &WidthsCfg,
) -> Result<Lemma1Output> {
    let d = omega.domain().clone();
    let n = d.dim();
    if e.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: e.len() });
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !d.same_lattice(g_set.domain()) {
        return Err(Error::invalid("omega and G live on different grids"));
    }
    let tau = tau_of_sigma(7.0 * eps);
    let cone = Cone::new(e.to_vec(), tau)?;
    let steps = build_step_set(&cone, cfg.s_max)?;
    let h = d.spacing();

    if e_set.is_empty() {
        return Ok(Lemma1Output {
            g: ScalarField::zeros(d),
            h_set: g_set.clone(),
            tau,
            pieces: Vec::new(),
            report: Lemma1Report::default(),
            uncovered: 0,
        });
    }
    for p in e_set.points() {
        if !g_set.contains_point(p) {
            return Err(Error::Precondition {
                node: p.as_slice().to_vec(),
                what: "point of E outside {omega > 0}".into(),
                measured: omega.evaluate(p).unwrap_or(0.0),
                bound: 0.0,
            });
        }
    }

    let rho = distance_to_complement_field(g_set);
    let slack = (n as f64).sqrt() * h;
    let centers = whitney_centers(g_set, &rho, cfg.bump_radius);
    // bumps whose support meets a neighborhood of E carry a width function;
    // otherwise H would shrink to a sliver around E
    let reach = cfg.radii_cells.iter().cloned().fold(0.0, f64::max) * h;
    let mut carrying: Vec<Option<PointCloud>> = centers
        .iter()
        .map(|(c, r)| {
            let near = e_set.restrict_to_ball(c, r + reach + slack);
            (!near.is_empty()).then_some(near)
        })
        .collect();
    let mut uncovered = 0;
    let count = carrying.iter().filter(|c| c.is_some()).count();
    if count > cfg.k_max {
        let mut seen = 0;
        for c in carrying.iter_mut() {
            if c.is_some() {
                seen += 1;
                if seen > cfg.k_max {
                    *c = None;
                }
            }
        }
        let dropped: Vec<Vec<f64>> = e_set
            .points()
            .iter()
            .filter(|p| {
                !centers
                    .iter()
                    .zip(&carrying)
                    .any(|((c, r), k)| k.is_some() && distance(p, c) < *r)
            })
            .map(|p| p.as_slice().to_vec())
            .collect();
        if cfg.check == WidthCheck::Strict {
            return Err(Error::UncoveredPoints { gaps: dropped });
        }
        uncovered = dropped.len();
    }
    let carriers: Vec<Carrier<'_>> = centers
        .iter()
        .map(|(c, r)| Carrier { center: c.clone(), radius: *r, carrier: g_set })
        .collect();
    let partition = build_partition(&d, &carriers, &[])?;
    let mut out = build_from_partition(&carrying, &cone, &steps, omega, eps, g_set, &rho, &partition, cfg)?;
    out.uncovered = uncovered;
    Ok(out)
}

/// Centers at interior nodes of G, visited by decreasing distance to the
/// complement; each uncovered node opens a bump of radius
/// min(max_radius, ρ_G) and covers the nodes within half that radius.
pub(crate) fn whitney_centers(g_set: &GridSet, rho: &ScalarField, max_radius: f64) -> Vec<(Vector, f64)> {
    let d = g_set.domain();
    let shape = d.node_shape();
    let interior = g_set.interior_nodes();
    let rs = rho.samples();
    let mut order: Vec<usize> = (0..d.node_count()).filter(|&l| interior[l] && rs[l] > 0.0).collect();
    order.sort_by(|&a, &b| rs[b].total_cmp(&rs[a]).then(a.cmp(&b)));
    let mut covered = vec![false; d.node_count()];
    let mut out = Vec::new();
    for lin in order {
        if covered[lin] {
            continue;
        }
        let c = d.node_position_linear(lin);
        let r = max_radius.min(rs[lin]);
        let (lo, hi) = d.node_box_around(&c, 0.5 * r);
        super::partition::for_each_in_box(&lo, &hi, |idx| {
            if distance(&d.node_position(idx), &c) <= 0.5 * r {
                covered[crate::geometry::ravel_index(idx, &shape)] = true;
            }
        });
        out.push((c, r));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn build_from_partition(
    carrying: &[Option<PointCloud>],
    cone: &Cone,
    steps: &StepSet,
    omega: &ScalarField,
    eps: f64,
    g_set: &GridSet,
    rho: &ScalarField,
    partition: &BumpPartition,
    cfg: &WidthsCfg,
) -> Result<Lemma1Output> {
    let d = omega.domain().clone();
    let h = d.spacing();
    let shape = d.node_shape();
    let kk = partition.len();
    let active = carrying.iter().filter(|c| c.is_some()).count().max(1);
    let overlap = partition.overlap().max(1) as f64;
    let ws = omega.samples();

    let budgets: Vec<f64> = (0..kk)
        .map(|k| {
            let lip = partition.weight_lipschitz(k).max(f64::MIN_POSITIVE);
            let by_slope = eps / (2.0 * active as f64 * lip) * (1.0 - 1e-9);
            let by_size = partition
                .support(k)
                .iter()
                .map(|&(lin, w)| {
                    let r = rho.samples()[lin];
                    1f64.min(r * r).min(ws[lin]) / (overlap * w)
                })
                .fold(f64::INFINITY, f64::min);
            by_slope.min(by_size)
        })
        .collect();

    struct Piece {
        k: usize,
        record: PieceRecord,
        values: Vec<(usize, f64)>,
        set: GridSet,
    }

    let active_ids: Vec<usize> = (0..kk).filter(|&k| carrying[k].is_some()).collect();
    let pieces: Vec<Result<Piece>> = active_ids
        .par_iter()
        .map(|&k| -> Result<Piece> {
            let bump = &partition.bumps()[k];
            let near = carrying[k].as_ref().expect("active bump");
            let reach = cfg.radii_cells.iter().cloned().fold(0.0, f64::max) * h;
            let (lo, hi) = d.node_box_around(&bump.center, bump.radius + reach + 2.0 * h);
            let local = d.sub_box(&lo, &hi, cfg.local_padding)?;
            let local_g = g_set.transfer_to(&local);
            let mut tried = Vec::new();
            let mut chosen = None;
            for &rc in &cfg.radii_cells {
                let r = rc * h;
                let nb = GridSet::neighborhood(&local, near, r)?.set.intersect(&local_g);
                let w = width_open_with(&nb, steps)?.value;
                tried.push(w);
                if w < budgets[k] {
                    chosen = Some((nb, w, r, false));
                    break;
                }
            }
            let (nb, width, r, clamped) = match chosen {
                Some(c) => c,
                None => match cfg.check {
                    WidthCheck::Strict => {
                        return Err(Error::WidthBudget {
                            measured: tried,
                            budgets: vec![budgets[k]],
                        })
                    }
                    WidthCheck::Clamp => {
                        let r = cfg.radii_cells.first().copied().unwrap_or(0.5) * h;
                        let nb = GridSet::neighborhood(&local, near, r)?.set.intersect(&local_g);
                        (nb, *tried.first().unwrap_or(&f64::INFINITY), r, true)
                    }
                },
            };
            let mut gk = width_function_with(&nb, steps);
            if clamped {
                let cap = budgets[k];
                gk = gk.map(|v| v.min(cap));
            }
            let values = partition
                .support(k)
                .iter()
                .map(|&(lin, w)| {
                    let idx = unravel_index(lin, &shape);
                    let v = local
                        .map_node_from(&d, &idx)
                        .map(|li| gk.at_node(&li))
                        .unwrap_or(0.0);
                    (lin, v * w)
                })
                .collect();
            Ok(Piece {
                k,
                record: PieceRecord {
                    center: bump.center.as_slice().to_vec(),
                    radius: bump.radius,
                    budget: budgets[k],
                    width,
                    nbhd_radius: r,
                    clamped,
                },
                values,
                set: nb.transfer_to(&d),
            })
        })
        .collect();

    let mut g = vec![0.0; d.node_count()];
    let covered = partition.covered_nodes();
    let cshape = d.cell_shape();
    let n = d.dim();
    // cells touching spt φ_k but outside G_k leave H
    let mut excluded = vec![false; d.cell_count()];
    let mut mark = |k: usize, keep: Option<&GridSet>| {
        for &(lin, _) in partition.support(k) {
            let idx = unravel_index(lin, &shape);
            for mask in 0..(1usize << n) {
                let mut c = Vec::with_capacity(n);
                for (a, &i) in idx.iter().enumerate() {
                    let o = (mask >> a) & 1;
                    if i < o || i - o >= cshape[a] {
                        break;
                    }
                    c.push(i - o);
                }
                if c.len() == n && !keep.is_some_and(|s| s.is_occupied(&c)) {
                    excluded[crate::geometry::ravel_index(&c, &cshape)] = true;
                }
            }
        }
    };
    let mut records = Vec::with_capacity(active_ids.len());
    for piece in pieces {
        let piece = piece?;
        for &(lin, v) in &piece.values {
            g[lin] += v;
        }
        mark(piece.k, Some(&piece.set));
        records.push(piece.record);
    }
    for k in 0..kk {
        if carrying[k].is_none() {
            mark(k, None);
        }
    }
    let h_set = g_set
        .intersect(&GridSet::from_node_predicate(d.clone(), |l| covered[l]))
        .difference(&GridSet::from_occupancy(d.clone(), excluded)?);
    let g = ScalarField::new(d.clone(), g)?;
    let report = lemma1_report(&g, omega, &h_set, cone, eps);
    Ok(Lemma1Output {
        g,
        h_set,
        tau: cone.aperture(),
        pieces: records,
        report,
        uncovered: 0,
    })
}

pub(crate) fn lemma1_report(g: &ScalarField, omega: &ScalarField, h_set: &GridSet, cone: &Cone, eps: f64) -> Lemma1Report {
    let d = g.domain();
    let h = d.spacing();
    let tol = 2.0 * h * (1.0 + 1.0 / cone.aperture());
    let shape = d.node_shape();
    let inside = h_set.interior_nodes();
    let e = cone.axis();
    let mut dev: f64 = 0.0;
    for (lin, &ins) in inside.iter().enumerate() {
        if ins {
            let gr = g.fd_gradient(&unravel_index(lin, &shape));
            dev = dev.max(gr.sub(e).norm());
        }
    }
    Lemma1Report {
        excess_over_omega: g
            .samples()
            .iter()
            .zip(omega.samples())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max),
        min_value: g.min(),
        lipschitz: g.lipschitz(),
        lipschitz_bound: 1.0 + eps + tol,
        gradient_deviation: dev,
        gradient_bound: eps + tol,
        tolerance: tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridDomain;

    #[test]
    fn empty_set_gives_zero() {
        let d = GridDomain::unit_square(32, 2);
        let w = ScalarField::from_fn(d.clone(), |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        let out = lemma1_build(&PointCloud::new(vec![]), &[1.0, 0.0], &w, 0.3, &WidthsCfg::default()).unwrap();
        assert_eq!(out.g.max_abs(), 0.0);
        assert_eq!(out.h_set, GridSet::from_node_predicate(d, |l| w.samples()[l] > 0.0));
    }

    #[test]
    fn single_point_clamped_monotone() {
        let d = GridDomain::unit_square(256, 4);
        let w = ScalarField::constant(d.clone(), 1.0);
        let e = [0.0, 1.0];
        let p = Vector::from([0.5, 0.5]);
        let cfg = WidthsCfg {
            radii_cells: vec![0.5],
            check: WidthCheck::Clamp,
            ..Default::default()
        };
        let out = lemma1_build(&PointCloud::new(vec![p.clone()]), &e, &w, 0.3, &cfg).unwrap();
        assert!(!out.pieces.is_empty());
        // one cell already has width about h/tau, above every budget at this spacing
        assert!(out.pieces.iter().all(|pc| pc.clamped && pc.width > pc.budget));
        let h = d.spacing();
        let a = out.g.evaluate(&[0.5, 0.5 - h]).unwrap();
        let b = out.g.evaluate(&[0.5, 0.5 + h]).unwrap();
        assert!(a > 0.0 && b >= a, "{a} {b}");
        let cap: f64 = out.pieces.iter().map(|pc| pc.budget).sum();
        assert!(out.g.max() <= cap * (1.0 + 1e-9));
        assert!(out.report.excess_over_omega <= 0.0);
        assert!(out.report.min_value >= 0.0);
        assert!(out.h_set.contains_point(&p));
    }

    #[test]
    fn strict_mode_reports_widths() {
        let d = GridDomain::unit_square(64, 4);
        let w = ScalarField::constant(d.clone(), 1.0);
        let pts: Vec<Vector> = (0..20).map(|i| Vector::from([0.5, 0.3 + 0.02 * i as f64])).collect();
        let cfg = WidthsCfg {
            k_max: 10_000,
            ..Default::default()
        };
        let err = lemma1_build(&PointCloud::new(pts.clone()), &[0.0, 1.0], &w, 0.01, &cfg);
        assert!(matches!(err, Err(Error::WidthBudget { .. })));
        let err = lemma1_build(&PointCloud::new(pts), &[0.0, 1.0], &w, 0.01, &WidthsCfg::default());
        assert!(matches!(err, Err(Error::UncoveredPoints { .. })));
    }
}
