use serde::Serialize;

use super::lemma1::WidthsCfg;
use super::lemma2::{lemma2_build_in, Lemma2Report};
use super::modulus::modulus_field;
use super::stages::{StageConfig, StageSummary};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{distance_to_complement_field, GridSet, PointCloud};

#[derive(Clone, Debug)]
pub struct RecursionCfg {
    pub widths: WidthsCfg,
    /// Stop after the first stage whose sampled checks fail.
    pub abort_on_failure: bool,
}

impl Default for RecursionCfg {
    fn default() -> Self {
        RecursionCfg {
            widths: WidthsCfg::default(),
            abort_on_failure: true,
        }
    }
}

/// Sampled conclusions of one recursion stage.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StageChecks {
    pub nested: bool,
    pub samples_outside_h: usize,
    /// max(ω_j − ½·min(1, ω_{j−1}, ρ²_{H_j}))
    pub halving_excess: f64,
    /// max(|f_j − f_{j−1}| − ω_{j−1})
    pub step_excess: f64,
    /// max |f_j − f_{j−1}| where φ_j = 0
    pub off_support: f64,
    /// max |ψ_j − φ_j| on interior nodes of H_j
    pub psi_mismatch: f64,
    /// max ‖∇f_j − ∇f_{j−1} − ψ_j e_j‖ over nodes with φ_j > 0
    pub gradient_deviation: f64,
    pub gradient_bound: f64,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct TraceStage {
    pub config: StageSummary,
    pub f: ScalarField,
    pub h_set: GridSet,
    pub omega: ScalarField,
    pub psi: ScalarField,
    pub lemma2: Lemma2Report,
    pub checks: StageChecks,
}

#[derive(Clone, Debug)]
pub struct BuildTrace {
    pub f0: ScalarField,
    pub h0: GridSet,
    pub omega0: ScalarField,
    pub stages: Vec<TraceStage>,
    /// Stage index (1-based) and reason when the run stopped early.
    pub aborted: Option<(usize, String)>,
}

impl BuildTrace {
    pub fn final_field(&self) -> &ScalarField {
        self.stages.last().map_or(&self.f0, |s| &s.f)
    }

    pub fn final_h(&self) -> &GridSet {
        self.stages.last().map_or(&self.h0, |s| &s.h_set)
    }

    /// (stage, message) for every recorded failure, including an abort.
    pub fn failures(&self) -> Vec<(usize, String)> {
        let mut out: Vec<(usize, String)> = self
            .stages
            .iter()
            .enumerate()
            .flat_map(|(j, s)| s.checks.failures.iter().map(move |m| (j + 1, m.clone())))
            .collect();
        if let Some((j, m)) = &self.aborted {
            if !out.iter().any(|(k, _)| k == j) {
                out.push((*j, m.clone()));
            }
        }
        out
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }

    /// max over i ≤ j and nodes of ω_j − 2^{i−j}·ω_i (index 0 is ω_0).
    pub fn halving_chain_excess(&self) -> f64 {
        let omegas: Vec<&ScalarField> = std::iter::once(&self.omega0)
            .chain(self.stages.iter().map(|s| &s.omega))
            .collect();
        let mut worst = f64::NEG_INFINITY;
        for j in 0..omegas.len() {
            for i in 0..=j {
                let c = 0.5f64.powi((j - i) as i32);
                for (a, b) in omegas[j].samples().iter().zip(omegas[i].samples()) {
                    worst = worst.max(a - c * b);
                }
            }
        }
        worst
    }
}

/// Iterate Lemma 2 and the modulus field over `stages`: f_j = f_{j−1} + g_j,
/// ξ_j from the modulus of f_j at accuracy σ_j, and
/// ω_j = ½·min(1, ω_{j−1}, ξ_j, ρ²_{H_j}). ω_0 is first replaced by
/// ½·min(1, ω_0, ρ²_{H_0}).
pub fn run_recursion(
    e_set: &PointCloud,
    f0: &ScalarField,
    h0: &GridSet,
    omega0: &ScalarField,
    stages: &[StageConfig],
    k: usize,
    cfg: &RecursionCfg,
) -> Result<BuildTrace> {
    let d = f0.domain().clone();
    if !d.same_lattice(h0.domain()) || !d.same_lattice(omega0.domain()) {
        return Err(Error::invalid("recursion inputs live on different grids"));
    }
    if k > stages.len() {
        return Err(Error::invalid(format!("K = {k} exceeds the {} available stages", stages.len())));
    }
    let rho0 = distance_to_complement_field(h0);
    let omega0 = omega0.zip_with(&rho0, |w, r| 0.5 * 1f64.min(w).min(r * r));
    let mut trace = BuildTrace {
        f0: f0.clone(),
        h0: h0.clone(),
        omega0,
        stages: Vec::with_capacity(k),
        aborted: None,
    };
    let shape = d.node_shape();

    for (j, stage) in stages.iter().take(k).enumerate() {
        let (f_prev, h_prev, w_prev) = match trace.stages.last() {
            Some(s) => (&s.f, &s.h_set, &s.omega),
            None => (&trace.f0, &trace.h0, &trace.omega0),
        };
        let phi = stage.phi_field(&d)?;
        let out = match lemma2_build_in(e_set, w_prev, h_prev, &phi, &stage.direction, stage.sigma, &cfg.widths) {
            Ok(o) => o,
            Err(err) => {
                trace.aborted = Some((j + 1, err.to_string()));
                break;
            }
        };
        let f = f_prev.add(&out.f);
        let h_set = out.h_set.intersect(h_prev);
        let xi = modulus_field(&f, &h_set, w_prev, stage.sigma.min(1.0));
        let rho = distance_to_complement_field(&h_set);
        let omega = ScalarField::new(
            d.clone(),
            (0..d.node_count())
                .map(|l| {
                    let r = rho.samples()[l];
                    0.5 * 1f64.min(w_prev.samples()[l]).min(xi.samples()[l]).min(r * r)
                })
                .collect(),
        )?;

        let mut c = StageChecks {
            nested: h_set.is_subset_of(h_prev) && out.h_set.is_subset_of(h_prev),
            samples_outside_h: e_set.points().iter().filter(|p| !h_set.contains_point(p)).count(),
            halving_excess: f64::NEG_INFINITY,
            step_excess: f64::NEG_INFINITY,
            gradient_bound: out.report.gradient_bound * stage.direction.norm().max(f64::MIN_POSITIVE),
            ..Default::default()
        };
        let ps = phi.samples();
        let h_int = h_set.interior_nodes();
        for l in 0..d.node_count() {
            let r = rho.samples()[l];
            let cap = 0.5 * 1f64.min(w_prev.samples()[l]).min(r * r);
            c.halving_excess = c.halving_excess.max(omega.samples()[l] - cap);
            let step = out.f.samples()[l].abs();
            c.step_excess = c.step_excess.max(step - w_prev.samples()[l]);
            if ps[l] <= 0.0 {
                c.off_support = c.off_support.max(step);
            } else {
                let g = out.f.fd_gradient(&crate::geometry::unravel_index(l, &shape));
                let dev = g
                    .iter()
                    .zip(stage.direction.iter())
                    .map(|(a, e)| (a - out.psi.samples()[l] * e).powi(2))
                    .sum::<f64>()
                    .sqrt();
                c.gradient_deviation = c.gradient_deviation.max(dev);
            }
            if h_int[l] {
                c.psi_mismatch = c.psi_mismatch.max((out.psi.samples()[l] - ps[l]).abs());
            }
        }
        if !c.nested {
            c.failures.push("H_j is not contained in H_{j-1}".into());
        }
        if c.samples_outside_h > 0 {
            c.failures.push(format!("{} samples of E outside H_j", c.samples_outside_h));
        }
        if c.halving_excess > 1e-15 {
            c.failures.push(format!("omega_j exceeds its halving cap by {}", c.halving_excess));
        }
        if c.step_excess > 1e-12 {
            c.failures.push(format!("|f_j - f_(j-1)| exceeds omega_(j-1) by {}", c.step_excess));
        }
        if c.off_support > 0.0 {
            c.failures.push(format!("f changes by {} where phi_j = 0", c.off_support));
        }
        if c.psi_mismatch > 1e-12 {
            c.failures.push(format!("psi_j differs from phi_j on H_j by {}", c.psi_mismatch));
        }
        if c.gradient_deviation > c.gradient_bound {
            c.failures.push(format!(
                "gradient step deviation {} exceeds {}",
                c.gradient_deviation, c.gradient_bound
            ));
        }
        let failed = !c.failures.is_empty();
        let first = c.failures.first().cloned();
        trace.stages.push(TraceStage {
            config: stage.summary(),
            f,
            h_set,
            omega,
            psi: out.psi,
            lemma2: out.report,
            checks: c,
        });
        if failed && cfg.abort_on_failure {
            trace.aborted = Some((j + 1, first.unwrap_or_default()));
            break;
        }
    }
    Ok(trace)
}
