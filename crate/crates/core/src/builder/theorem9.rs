use serde::Serialize;

use super::modulus::{modulus_field, modulus_radius};
use super::partition::{build_partition, greedy_centers, Carrier};
use super::recursion::{run_recursion, BuildTrace, RecursionCfg};
use super::stages::StageConfig;
use super::tau_of_sigma;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{GridSet, PointCloud, Vector};
use crate::width::{estimate_normal_cone, NormalConeParams};

#[derive(Clone, Debug)]
pub struct Theorem9Cfg {
    pub recursion: RecursionCfg,
    /// A new bump opens at a sample farther than `cover_frac·δ` from all centers.
    pub cover_frac: f64,
    /// Optional normal-cone probe on every `probe_stride`-th sample; reported only.
    pub probe: Option<NormalConeParams>,
    pub probe_stride: usize,
}

impl Default for Theorem9Cfg {
    fn default() -> Self {
        Theorem9Cfg {
            recursion: RecursionCfg::default(),
            cover_frac: 0.5,
            probe: None,
            probe_stride: 16,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StepReport {
    pub direction: Vec<f64>,
    pub eta: f64,
    pub sigma: f64,
    pub bumps: usize,
    /// Samples skipped because f was not C¹ on a ball around them at this grid.
    pub dropped_samples: usize,
    pub lipschitz: f64,
    /// max(Lip(f_{k−1}), ‖e_k‖) + η_k
    pub lipschitz_bound: f64,
    pub stage_failures: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Theorem9Report {
    pub steps: Vec<StepReport>,
    pub lipschitz: f64,
    /// 1 − 2^{−K−1}
    pub lipschitz_bound: f64,
    /// 2h(1 + 1/τ) at the smallest σ used.
    pub tolerance: f64,
    pub probe_accept_fraction: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Theorem9Output {
    pub f: ScalarField,
    pub directions: Vec<Vector>,
    pub etas: Vec<f64>,
    pub traces: Vec<BuildTrace>,
    pub report: Theorem9Report,
}

/// k-th unit direction (k ≥ 1) of a fixed low-discrepancy sequence: the
/// golden-angle sequence in the plane, in higher dimension the normalized
/// Box–Muller image of the generalized golden-ratio sequence.
pub fn golden_direction(n: usize, k: usize) -> Vector {
    match n {
        0 => Vector::new(vec![]),
        1 => Vector::new(vec![if k % 2 == 1 { 1.0 } else { -1.0 }]),
        2 => {
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let t = std::f64::consts::TAU * (k as f64 * g).fract();
            Vector::new(vec![t.cos(), t.sin()])
        }
        _ => {
            let m = 2 * n.div_ceil(2);
            // root of x^{m+1} = x + 1
            let mut phi = 2.0f64;
            for _ in 0..64 {
                phi = (1.0 + phi).powf(1.0 / (m as f64 + 1.0));
            }
            let u: Vec<f64> = (1..=m)
                .map(|i| (0.5 + k as f64 * phi.powi(-(i as i32))).fract().clamp(1e-12, 1.0 - 1e-12))
                .collect();
            let mut v = Vec::with_capacity(m);
            for p in u.chunks(2) {
                let r = (-2.0 * p[0].ln()).sqrt();
                let t = std::f64::consts::TAU * p[1];
                v.push(r * t.cos());
                v.push(r * t.sin());
            }
            v.truncate(n);
            Vector::new(v).normalized().unwrap_or_else(|| {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                Vector::new(e)
            })
        }
    }
}

/// e_k = (1 − 2^{−k})·(k-th golden direction).
pub fn theorem9_directions(n: usize, k: usize) -> Vec<Vector> {
    (1..=k).map(|i| golden_direction(n, i).scaled(1.0 - 0.5f64.powi(i as i32))).collect()
}

/// K refinement steps from f_0 = 0, H_0 = the grid, ω_0 = 1. Step k covers E
/// by balls on which ∇f_{k−1} oscillates by less than η_k/4, and runs the
/// recursion on the paired stages (−∇f_{k−1}(x_i), γ_i), (e_k, γ_i) with
/// σ = η_k/(8(n+1)). f_k is the result, H_k its final open set and
/// ω_k the modulus field of f_k at accuracy η_k/2.
pub fn theorem9_build(e_set: &PointCloud, domain: &crate::geometry::GridDomain, k_steps: usize, cfg: &Theorem9Cfg) -> Result<Theorem9Output> {
    let d = domain.clone();
    let n = d.dim();
    if let Some(m) = e_set.dim() {
        if m != n {
            return Err(Error::DimensionMismatch { expected: n, got: m });
        }
    }
    let h = d.spacing();
    let directions = theorem9_directions(n, k_steps);
    let etas: Vec<f64> = (1..=k_steps).map(|k| 0.5f64.powi(k as i32 + 1)).collect();

    let mut f = ScalarField::zeros(d.clone());
    let mut h_set = GridSet::full(d.clone());
    let mut omega = ScalarField::constant(d.clone(), 1.0);
    let mut traces = Vec::with_capacity(k_steps);
    let mut report = Theorem9Report {
        lipschitz_bound: 1.0 - 0.5f64.powi(k_steps as i32 + 1),
        ..Default::default()
    };
    let full = GridSet::full(d.clone());

    for (e, &eta) in directions.iter().zip(&etas) {
        let sigma = eta / (8.0 * (n as f64 + 1.0));
        let delta = modulus_radius(&f, &h_set, &omega, 0.5 * eta);
        let grad = f.gradient_field();
        let mut kept = Vec::new();
        let mut radii = Vec::new();
        for p in e_set.points() {
            let r = cell_min(&delta, p)?;
            if r > h {
                kept.push(p.clone());
                radii.push(r);
            }
        }
        let dropped = e_set.len() - kept.len();
        let centers = greedy_centers(&kept, cfg.cover_frac, |p| {
            radii[kept.iter().position(|q| q == p).expect("kept sample")]
        });
        let carriers: Vec<Carrier<'_>> = centers
            .iter()
            .map(|(c, r)| Carrier {
                center: c.clone(),
                radius: *r,
                carrier: &full,
            })
            .collect();
        let partition = std::sync::Arc::new(build_partition(&d, &carriers, &kept)?);
        let mut stages = Vec::with_capacity(2 * centers.len());
        for (i, (c, _)) in centers.iter().enumerate() {
            let phi = super::stages::StagePhi::Bump {
                partition: partition.clone(),
                bump: i,
                factor: 1.0,
            };
            let back = grad.evaluate(c)?.scaled(-1.0);
            stages.push(StageConfig {
                sigma,
                direction: back,
                phi: phi.clone(),
                provenance: None,
            });
            stages.push(StageConfig {
                sigma,
                direction: e.clone(),
                phi,
                provenance: None,
            });
        }
        let lip_prev = f.lipschitz();
        let trace = run_recursion(e_set, &f, &h_set, &omega.scale(0.5), &stages, stages.len(), &cfg.recursion)?;
        f = trace.final_field().clone();
        h_set = trace.final_h().clone();
        omega = modulus_field(&f, &h_set, &omega, 0.5 * eta);
        report.steps.push(StepReport {
            direction: e.as_slice().to_vec(),
            eta,
            sigma,
            bumps: centers.len(),
            dropped_samples: dropped,
            lipschitz: f.lipschitz(),
            lipschitz_bound: lip_prev.max(e.norm()) + eta,
            stage_failures: trace.failures().len(),
        });
        traces.push(trace);
    }

    report.lipschitz = f.lipschitz();
    let sigma_min = etas.last().map(|eta| eta / (8.0 * (n as f64 + 1.0)));
    report.tolerance = sigma_min.map_or(0.0, |s| 2.0 * h * (1.0 + 1.0 / tau_of_sigma(s)));
    if let Some(params) = &cfg.probe {
        let stride = cfg.probe_stride.max(1);
        let (mut tried, mut ok) = (0usize, 0usize);
        for p in e_set.points().iter().step_by(stride) {
            let est = estimate_normal_cone(e_set, p, params)?;
            tried += 1;
            if est.directions.iter().all(|r| r.accepted) {
                ok += 1;
            }
        }
        report.probe_accept_fraction = (tried > 0).then(|| ok as f64 / tried as f64);
    }
    Ok(Theorem9Output {
        f,
        directions,
        etas,
        traces,
        report,
    })
}

// smallest sample over the corners of the cell holding x
fn cell_min(field: &ScalarField, x: &[f64]) -> Result<f64> {
    let d = field.domain();
    if !d.contains_point(x) {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    let lc = d.lattice_coords(x);
    let shape = d.node_shape();
    let n = d.dim();
    let base: Vec<usize> = (0..n)
        .map(|a| (lc[a].floor().max(0.0) as usize).min(shape[a] - 2))
        .collect();
    let mut m = f64::INFINITY;
    for mask in 0..(1usize << n) {
        let idx: Vec<usize> = (0..n).map(|a| base[a] + ((mask >> a) & 1)).collect();
        m = m.min(field.at_node(&idx));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{WidthCheck, WidthsCfg};
    use crate::geometry::GridDomain;

    #[test]
    fn directions_respect_norm_cap() {
        for n in [1usize, 2, 3, 4] {
            let ds = theorem9_directions(n, 12);
            for (k, e) in ds.iter().enumerate() {
                assert!((e.norm() - (1.0 - 0.5f64.powi(k as i32 + 1))).abs() < 1e-12);
            }
        }
        // planar sequence spreads: 12 directions hit every quadrant
        let ds = theorem9_directions(2, 12);
        for q in 0..4 {
            assert!(ds.iter().any(|e| {
                let a = e[1].atan2(e[0]).rem_euclid(std::f64::consts::TAU);
                (a / std::f64::consts::FRAC_PI_2) as usize == q
            }));
        }
    }

    #[test]
    fn zero_steps_is_zero() {
        let d = GridDomain::unit_square(16, 2);
        let e = PointCloud::new(vec![Vector::from([0.5, 0.5])]);
        let out = theorem9_build(&e, &d, 0, &Theorem9Cfg::default()).unwrap();
        assert_eq!(out.f.max_abs(), 0.0);
        assert!(out.traces.is_empty());
    }

    #[test]
    fn one_step_stays_below_bound() {
        let d = GridDomain::square(-0.125, 1.125, 1.0 / 64.0, 0).unwrap();
        let e = crate::geometry::gen_four_corner_cantor(2).unwrap();
        let cfg = Theorem9Cfg {
            recursion: RecursionCfg {
                widths: WidthsCfg {
                    check: WidthCheck::Clamp,
                    stair_max: 3,
                    ..Default::default()
                },
                abort_on_failure: false,
            },
            ..Default::default()
        };
        let out = theorem9_build(&e, &d, 1, &cfg).unwrap();
        assert_eq!(out.report.steps.len(), 1);
        let s = &out.report.steps[0];
        assert!(s.bumps > 0);
        assert_eq!(out.traces[0].stages.len(), 2 * s.bumps);
        assert!(out.report.lipschitz <= s.lipschitz_bound + out.report.tolerance);
    }
}
