use serde::Serialize;

use super::recursion::{run_recursion, BuildTrace, RecursionCfg};
use super::stages::{select_stages, StageConfig, StagesCfg};
use super::tau_of_sigma;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{GridSet, PointCloud, Vector};

#[derive(Clone, Debug)]
pub struct Theorem4Cfg {
    pub i_max: usize,
    pub stages: StagesCfg,
    pub recursion: RecursionCfg,
}

impl Default for Theorem4Cfg {
    fn default() -> Self {
        Theorem4Cfg {
            i_max: 4,
            stages: StagesCfg::default(),
            recursion: RecursionCfg::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Theorem4Report {
    pub eps: f64,
    pub pairs_requested: usize,
    pub pairs_used: usize,
    pub stages_available: usize,
    pub lipschitz: f64,
    pub lipschitz_bound: f64,
    /// 2h(1 + 1/τ) at the smallest σ used.
    pub tolerance: f64,
    pub max_u_norm: f64,
    /// max over nodes and k of ‖Σ_{i≤k}(ψ_{2i−1}e_{2i−1} + ψ_{2i}e_{2i})‖ − 1
    pub cancellation_excess: f64,
    /// max over E of Σ_l σ_l·1[φ_l(x) > 0] for the stages used
    pub load_used: f64,
    /// max over E of 2·Σ σ_l·1[φ_l(x) > 0] over selected stages left unused;
    /// bounds how far u can still move.
    pub u_tail_bound: f64,
}

#[derive(Clone, Debug)]
pub struct Theorem4Output {
    pub f: ScalarField,
    /// f'_{2K} at each sample of E.
    pub u: Vec<Vector>,
    pub trace: BuildTrace,
    pub stages: Vec<StageConfig>,
    pub report: Theorem4Report,
}

/// Stages from the selection at ε/2, each followed by its negation, run
/// through the recursion from f_0 = 0, H_0 = {ω > 0} for `pairs` pairs.
pub fn theorem4_build(
    e_set: &PointCloud,
    eps: f64,
    omega: &ScalarField,
    pairs: usize,
    cfg: &Theorem4Cfg,
) -> Result<Theorem4Output> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    let d = omega.domain().clone();
    let selected = select_stages(e_set, eps / 2.0, cfg.i_max, &d, &cfg.stages)?;
    let used = pairs.min(selected.len());
    let doubled: Vec<StageConfig> = selected[..used]
        .iter()
        .flat_map(|s| [s.clone(), s.negated()])
        .collect();

    let ws = omega.samples();
    let h0 = GridSet::from_node_predicate(d.clone(), |l| ws[l] > 0.0);
    let f0 = ScalarField::zeros(d.clone());
    let trace = run_recursion(e_set, &f0, &h0, omega, &doubled, doubled.len(), &cfg.recursion)?;
    let f = trace.final_field().clone();

    let grad = f.gradient_field();
    let u: Vec<Vector> = e_set
        .points()
        .iter()
        .map(|p| grad.evaluate(p))
        .collect::<Result<_>>()?;

    let h = d.spacing();
    let sigma_min = doubled.iter().map(|s| s.sigma).fold(f64::INFINITY, f64::min);
    let mut report = Theorem4Report {
        eps,
        pairs_requested: pairs,
        pairs_used: used,
        stages_available: selected.len(),
        lipschitz: f.lipschitz(),
        lipschitz_bound: 1.0 + eps,
        tolerance: if sigma_min.is_finite() {
            2.0 * h * (1.0 + 1.0 / tau_of_sigma(sigma_min))
        } else {
            0.0
        },
        max_u_norm: u.iter().map(|v| v.norm()).fold(0.0, f64::max),
        cancellation_excess: cancellation_excess(&trace),
        ..Default::default()
    };
    for p in e_set.points() {
        let load = |st: &[StageConfig]| -> Result<f64> {
            let mut s = 0.0;
            for c in st {
                if c.phi_at(&d, p)? > 0.0 {
                    s += c.sigma;
                }
            }
            Ok(s)
        };
        report.load_used = report.load_used.max(load(&doubled)?);
        report.u_tail_bound = report.u_tail_bound.max(2.0 * load(&selected[used..])?);
    }
    Ok(Theorem4Output {
        f,
        u,
        trace,
        stages: doubled,
        report,
    })
}

fn cancellation_excess(trace: &BuildTrace) -> f64 {
    let d = trace.f0.domain();
    let n = d.dim();
    let mut acc = vec![0.0; d.node_count() * n];
    let mut worst = f64::NEG_INFINITY;
    for pair in trace.stages.chunks(2) {
        for s in pair {
            let e = &s.config.direction;
            for (l, &p) in s.psi.samples().iter().enumerate() {
                for a in 0..n {
                    acc[l * n + a] += p * e[a];
                }
            }
        }
        for v in acc.chunks(n) {
            worst = worst.max(v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0);
        }
    }
    worst
}
