use serde::Serialize;

use super::lemma1::{lemma1_build_in, Lemma1Report, PieceRecord, WidthCheck, WidthsCfg};
use super::mollify::{mollify_glue_with, GlueOptions};
use super::tau_of_sigma;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::geometry::{distance_to_complement_field, unravel_index, Cone, GridSet, PointCloud};
use crate::width::width_of_set;

#[derive(Clone, Debug, Default, Serialize)]
pub struct Lemma2Report {
    pub k: usize,
    /// Width of E ∩ {φ > 0} in the stage cone and the bound it was held to.
    pub precheck_width: f64,
    pub precheck_bound: f64,
    /// max(|f| - ω‖e‖) over nodes.
    pub excess_over_omega: f64,
    /// max |f| where φ = 0.
    pub off_support: f64,
    /// max |ψ - φ| over interior nodes of H.
    pub psi_mismatch: f64,
    /// max ‖∇f - ψe‖ over nodes with φ > 0.
    pub gradient_deviation: f64,
    pub gradient_bound: f64,
    /// max over H of ‖∇g - Φ‖ - ξ (the gluing precondition).
    pub glue_excess: f64,
    pub samples_outside_h: usize,
    pub clamped_pieces: usize,
    pub pieces: usize,
    pub uncovered: usize,
    pub steps: Vec<Lemma1Report>,
}

impl Lemma2Report {
    pub fn passes(&self) -> bool {
        self.excess_over_omega <= 1e-12
            && self.off_support == 0.0
            && self.psi_mismatch <= 1e-12
            && self.gradient_deviation <= self.gradient_bound
            && self.samples_outside_h == 0
    }
}

#[derive(Clone, Debug)]
pub struct Lemma2Output {
    pub f: ScalarField,
    pub psi: ScalarField,
    pub h_set: GridSet,
    pub report: Lemma2Report,
    pub pieces: Vec<PieceRecord>,
}

/// Staircase length: ceil(6/σ), which lies in [6/σ, 7/σ] for σ < 1, capped
/// at `cap`.
pub fn staircase_length(sigma: f64, cap: usize) -> usize {
    let k = (6.0 / sigma).ceil().min((7.0 / sigma).floor()).max(1.0);
    (k as usize).min(cap.max(1))
}

pub fn lemma2_build(
    e_set: &PointCloud,
    omega: &ScalarField,
    phi: &ScalarField,
    e: &[f64],
    sigma: f64,
    cfg: &WidthsCfg,
) -> Result<Lemma2Output> {
    let ws = omega.samples();
    let g0 = GridSet::from_node_predicate(omega.domain().clone(), |l| ws[l] > 0.0);
    lemma2_build_in(e_set, omega, &g0, phi, e, sigma, cfg)
}

/// [`lemma2_build`] with the open set G_0 given explicitly; ω may vanish on
/// its boundary nodes.
pub fn lemma2_build_in(
    e_set: &PointCloud,
    omega: &ScalarField,
    g0: &GridSet,
    phi: &ScalarField,
    e: &[f64],
    sigma: f64,
    cfg: &WidthsCfg,
) -> Result<Lemma2Output> {
    let d = omega.domain().clone();
    if !d.same_lattice(g0.domain()) {
        return Err(Error::invalid("omega and G_0 live on different grids"));
    }
    let n = d.dim();
    if !d.same_lattice(phi.domain()) {
        return Err(Error::invalid("omega and phi live on different grids"));
    }
    if e.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: e.len() });
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let ws = omega.samples();
    let ps = phi.samples();
    let g0 = g0.clone();
    let enorm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if enorm == 0.0 || sigma >= 1.0 {
        return Ok(Lemma2Output {
            f: ScalarField::zeros(d.clone()),
            psi: phi.clone(),
            h_set: g0,
            report: Lemma2Report::default(),
            pieces: Vec::new(),
        });
    }
    let unit: Vec<f64> = e.iter().map(|v| v / enorm).collect();
    let eps = sigma / 7.0;
    let k = staircase_length(sigma, cfg.stair_max);
    let h = d.spacing();
    let mut report = Lemma2Report {
        k,
        ..Default::default()
    };

    // width of E ∩ {φ > 0} in the stage cone
    let support = GridSet::from_node_predicate(d.clone(), |l| ps[l] > 0.0);
    let on_support: Vec<usize> = (0..e_set.len())
        .filter(|&i| support.contains_point(&e_set.points()[i]))
        .collect();
    let e_phi = e_set.select(&on_support);
    if !e_phi.is_empty() {
        let cone = Cone::new(unit.clone(), tau_of_sigma(sigma))?;
        let r = cfg.radii_cells.last().copied().unwrap_or(0.5) * h;
        let w = width_of_set(&e_phi, &cone, &[r], cfg.s_max, &d)?;
        report.precheck_width = w.estimate();
        report.precheck_bound = cfg.threshold * extent(&e_phi).max(h);
        if cfg.check == WidthCheck::Strict && report.precheck_width > report.precheck_bound {
            return Err(Error::Stage {
                stage: 0,
                reason: format!(
                    "width {} of E on the support exceeds {}",
                    report.precheck_width, report.precheck_bound
                ),
            });
        }
    }

    // H_0 = G_0 keeps points where φ = 0 inside H; G_1 is unchanged
    let h0 = g0.clone();
    let mut g_sets: Vec<GridSet> = vec![g0.clone()];
    let mut h_sets: Vec<GridSet> = vec![h0];
    let mut g_sum = vec![0.0; d.node_count()];
    let mut pieces = Vec::new();
    for i in 1..=k {
        let level = i as f64 / k as f64;
        let gi = h_sets[i - 1].intersect(&GridSet::from_node_predicate(d.clone(), |l| ps[l] > level));
        let rho = distance_to_complement_field(&gi);
        let omega_i = omega.zip_with(&rho, |w, r| 0.5 * w.min(r * r));
        let inside: Vec<usize> = (0..e_set.len())
            .filter(|&j| gi.contains_point(&e_set.points()[j]))
            .collect();
        let out = lemma1_build_in(&e_set.select(&inside), &unit, &omega_i, &gi, eps, cfg).map_err(|err| Error::Stage {
            stage: i,
            reason: err.to_string(),
        })?;
        for (acc, v) in g_sum.iter_mut().zip(out.g.samples()) {
            *acc += v;
        }
        report.clamped_pieces += out.pieces.iter().filter(|p| p.clamped).count();
        report.pieces += out.pieces.len();
        report.uncovered += out.uncovered;
        report.steps.push(out.report);
        pieces.extend(out.pieces);
        g_sets.push(gi);
        h_sets.push(out.h_set.intersect(g_sets.last().expect("pushed")));
    }
    let g = ScalarField::new(d.clone(), g_sum.iter().map(|v| v / k as f64).collect())?;

    let g_int: Vec<Vec<bool>> = g_sets.iter().map(|s| s.interior_nodes()).collect();
    let psi_samples: Vec<f64> = (0..d.node_count())
        .map(|l| {
            if !g_int[0][l] {
                return 0.0;
            }
            let j = (0..=k).rev().find(|&j| g_int[j][l]).unwrap_or(0);
            ((j + 2) as f64 / k as f64).min(ps[l])
        })
        .collect();
    let psi = ScalarField::new(d.clone(), psi_samples)?;

    let mut h_set = GridSet::empty(d.clone());
    for (j, hj) in h_sets.iter().enumerate() {
        let cap = (j + 2) as f64 / k as f64;
        h_set = h_set.union(&hj.intersect(&GridSet::from_node_predicate(d.clone(), |l| ps[l] < cap)));
    }

    let mut big_phi = Vec::with_capacity(d.node_count() * n);
    for &p in psi.samples() {
        big_phi.extend(unit.iter().map(|u| p * u));
    }
    let big_phi = VectorField::new(d.clone(), n, big_phi)?;
    let kf = k as f64;
    let xi = phi.map(|p| 5.0 * p.min(1.0 / kf));
    let rho_h = distance_to_complement_field(&h_set);
    let omega_hat = ScalarField::new(
        d.clone(),
        (0..d.node_count())
            .map(|l| 0.2 * ws[l].min(ps[l]).min(rho_h.samples()[l].powi(2)))
            .collect(),
    )?;
    report.glue_excess = glue_excess(&g, &h_set, &big_phi, &xi);
    let glue = GlueOptions {
        check: cfg.glue.check && cfg.check == WidthCheck::Strict,
        ..cfg.glue.clone()
    };
    let f_unit = mollify_glue_with(&g, &h_set, &big_phi, &xi, &omega_hat, &glue)
        .map_err(|err| Error::Stage {
            stage: k + 1,
            reason: err.to_string(),
        })?
        .field;
    let f = f_unit.scale(enorm);

    // sampled conclusions
    let shape = d.node_shape();
    let h_int = h_set.interior_nodes();
    let e_vec: Vec<f64> = unit.iter().map(|u| u * enorm).collect();
    for l in 0..d.node_count() {
        let fv = f.samples()[l];
        report.excess_over_omega = report.excess_over_omega.max(fv.abs() - ws[l] * enorm);
        if ps[l] <= 0.0 {
            report.off_support = report.off_support.max(fv.abs());
        } else {
            let gr = f.fd_gradient(&unravel_index(l, &shape));
            let dev = gr
                .iter()
                .zip(&e_vec)
                .map(|(a, b)| (a - psi.samples()[l] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            report.gradient_deviation = report.gradient_deviation.max(dev);
        }
        if h_int[l] {
            report.psi_mismatch = report.psi_mismatch.max((psi.samples()[l] - ps[l]).abs());
        }
    }
    report.gradient_bound = sigma + 2.0 * h * (1.0 + 1.0 / tau_of_sigma(sigma));
    report.samples_outside_h = e_set.points().iter().filter(|p| !h_set.contains_point(p)).count();
    Ok(Lemma2Output {
        f,
        psi,
        h_set,
        report,
        pieces,
    })
}

fn extent(cloud: &PointCloud) -> f64 {
    let pts = cloud.points();
    let n = pts.first().map_or(0, |p| p.dim());
    (0..n)
        .map(|a| {
            let (lo, hi) = pts
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), p| (l.min(p[a]), u.max(p[a])));
            (hi - lo).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn glue_excess(g: &ScalarField, h_set: &GridSet, big_phi: &VectorField, xi: &ScalarField) -> f64 {
    let d = g.domain();
    let shape = d.node_shape();
    let inside = h_set.interior_nodes();
    let mut worst = f64::NEG_INFINITY;
    for (l, &ins) in inside.iter().enumerate() {
        if ins {
            let gr = g.fd_gradient(&unravel_index(l, &shape));
            let dev = gr
                .iter()
                .zip(big_phi.at(l))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(dev - xi.samples()[l]);
        }
    }
    worst
}
