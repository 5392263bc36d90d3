use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use super::partition::{build_partition, greedy_centers, BumpPartition, Carrier};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{distance, GridDomain, GridSet, PointCloud, Vector};

/// Source of a stage's cutoff φ.
#[derive(Clone, Debug)]
pub enum StagePhi {
    /// min(1, factor·w_k) for bump `k` of a shared partition.
    Bump {
        partition: Arc<BumpPartition>,
        bump: usize,
        factor: f64,
    },
    Field(Arc<ScalarField>),
}

#[derive(Clone, Debug)]
pub struct StageConfig {
    pub sigma: f64,
    pub direction: Vector,
    pub phi: StagePhi,
    /// (level i, net index j, bump k) when the stage comes from [`select_stages`].
    pub provenance: Option<(usize, usize, usize)>,
}

/// Serializable summary of a stage.
#[derive(Clone, Debug, Serialize)]
pub struct StageSummary {
    pub sigma: f64,
    pub direction: Vec<f64>,
    pub provenance: Option<(usize, usize, usize)>,
    pub phi_support_nodes: usize,
    pub phi_max: f64,
}

impl StageConfig {
    pub fn with_field(sigma: f64, direction: Vector, phi: ScalarField) -> Self {
        StageConfig {
            sigma,
            direction,
            phi: StagePhi::Field(Arc::new(phi)),
            provenance: None,
        }
    }

    /// Same stage with the direction negated.
    pub fn negated(&self) -> Self {
        StageConfig {
            direction: self.direction.scaled(-1.0),
            ..self.clone()
        }
    }

    /// Nonzero (node, φ) pairs, sorted by node.
    pub fn phi_support(&self) -> Vec<(usize, f64)> {
        match &self.phi {
            StagePhi::Bump { partition, bump, factor } => partition
                .support(*bump)
                .iter()
                .map(|&(lin, w)| (lin, (factor * w).min(1.0)))
                .collect(),
            StagePhi::Field(f) => f
                .samples()
                .iter()
                .enumerate()
                .filter(|(_, v)| **v > 0.0)
                .map(|(l, v)| (l, *v))
                .collect(),
        }
    }

    pub fn phi_field(&self, domain: &GridDomain) -> Result<ScalarField> {
        match &self.phi {
            StagePhi::Field(f) => {
                if !f.domain().same_lattice(domain) {
                    return Err(Error::invalid("stage phi lives on a different grid"));
                }
                Ok((**f).clone())
            }
            StagePhi::Bump { partition, .. } => {
                if !partition.domain().same_lattice(domain) {
                    return Err(Error::invalid("stage phi lives on a different grid"));
                }
                let mut s = vec![0.0; domain.node_count()];
                for (lin, v) in self.phi_support() {
                    s[lin] = v;
                }
                ScalarField::new(domain.clone(), s)
            }
        }
    }

    /// Interpolated φ at a point of the domain.
    pub fn phi_at(&self, domain: &GridDomain, x: &[f64]) -> Result<f64> {
        if !domain.contains_point(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        match &self.phi {
            StagePhi::Field(f) => f.evaluate(x),
            StagePhi::Bump { partition, bump, factor } => {
                let lc = domain.lattice_coords(x);
                Ok(crate::field::interpolate(&domain.node_shape(), &lc, |lin| {
                    (factor * partition.weight_at(*bump, lin)).min(1.0)
                }))
            }
        }
    }

    pub fn summary(&self) -> StageSummary {
        let sup = self.phi_support();
        StageSummary {
            sigma: self.sigma,
            direction: self.direction.as_slice().to_vec(),
            provenance: self.provenance,
            phi_support_nodes: sup.len(),
            phi_max: sup.iter().map(|p| p.1).fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StagesCfg {
    /// Upper bound on bump radii, on top of each point's validity radius.
    pub radius_cap: f64,
    /// A new bump opens at a point farther than `cover_frac·radius` from all centers.
    pub cover_frac: f64,
}

impl Default for StagesCfg {
    fn default() -> Self {
        StagesCfg {
            radius_cap: 0.5,
            cover_frac: 0.5,
        }
    }
}

pub fn level_eps(eps: f64, i: usize) -> f64 {
    eps * 0.5f64.powi(i as i32)
}

/// τ_i = 3^{-n} ε_i^{n+1} / (n+1).
pub fn level_tau(eps: f64, i: usize, n: usize) -> f64 {
    let ei = level_eps(eps, i);
    3f64.powi(-(n as i32)) * ei.powi(n as i32 + 1) / (n as f64 + 1.0)
}

/// Cubic lattice of spacing r/√n intersected with the closed unit ball,
/// in lexicographic order.
pub fn lattice_net(n: usize, r: f64) -> Vec<Vector> {
    let s = r / (n as f64).sqrt();
    let m = (1.0 / s).floor() as i64;
    let side = (2 * m + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(n as u32) {
        let mut rem = code;
        let mut v = vec![0.0; n];
        for a in (0..n).rev() {
            v[a] = ((rem % side) as i64 - m) as f64 * s;
            rem /= side;
        }
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12 {
            out.push(Vector::new(v));
        }
    }
    out
}

/// Stage list for levels 1..=i_max. Per level i and net point e_{i,j}, the
/// points whose normal set comes within ε_i of e_{i,j} are covered by bumps
/// centered at sample points with radius min(δ, radius_cap, room to the grid
/// edge); each bump becomes a stage with σ = τ_i, φ = min(1, max(n+1, M)·w)
/// and e the max-norm normal of its center within ε_i of e_{i,j}. Stages are
/// ordered by level, then decreasing ‖e‖, then e lexicographically.
pub fn select_stages(
    e_set: &PointCloud,
    eps: f64,
    i_max: usize,
    domain: &GridDomain,
    cfg: &StagesCfg,
) -> Result<Vec<StageConfig>> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if e_set.is_empty() {
        return Ok(Vec::new());
    }
    let n = domain.dim();
    if e_set.dim() != Some(n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: e_set.dim().unwrap_or(0),
        });
    }
    let normals = e_set
        .normals()
        .ok_or_else(|| Error::invalid("select_stages needs normal data on every point"))?;
    let pts = e_set.points();
    let h = domain.spacing();
    let (lo, hi) = domain.full_bounds();
    let room = |p: &Vector| -> f64 {
        (0..n)
            .map(|a| (p[a] - lo[a]).min(hi[a] - p[a]))
            .fold(f64::INFINITY, f64::min)
            - 2.0 * h
    };
    let full = GridSet::full(domain.clone());

    let mut cache: HashMap<Vec<usize>, (Arc<BumpPartition>, Vec<usize>)> = HashMap::new();
    let mut out: Vec<(usize, usize, usize, StageConfig)> = Vec::new();
    for i in 1..=i_max {
        let ei = level_eps(eps, i);
        let tau = level_tau(eps, i, n);
        for (j, ej) in lattice_net(n, ei).into_iter().enumerate() {
            let members: Vec<usize> = (0..pts.len())
                .filter(|&p| normals[p].best_member_near(&ej, ei).is_some())
                .collect();
            if members.is_empty() {
                continue;
            }
            if !cache.contains_key(&members) {
                let sub: Vec<Vector> = members.iter().map(|&p| pts[p].clone()).collect();
                let radius_of = |p: &Vector| -> f64 {
                    let k = sub.iter().position(|q| q == p).expect("center is a member");
                    normals[members[k]].delta.min(cfg.radius_cap).min(room(p))
                };
                let centers = greedy_centers(&sub, cfg.cover_frac, radius_of);
                if let Some((c, _)) = centers.iter().find(|(_, r)| *r <= h) {
                    return Err(Error::Precondition {
                        node: c.as_slice().to_vec(),
                        what: "sample too close to the grid edge for a bump".into(),
                        measured: room(c),
                        bound: h,
                    });
                }
                let center_idx: Vec<usize> = centers
                    .iter()
                    .map(|(c, _)| members[sub.iter().position(|q| q == c).expect("center is a member")])
                    .collect();
                let carriers: Vec<Carrier<'_>> = centers
                    .iter()
                    .map(|(c, r)| Carrier {
                        center: c.clone(),
                        radius: *r,
                        carrier: &full,
                    })
                    .collect();
                let part = build_partition(domain, &carriers, &sub)?;
                cache.insert(members.clone(), (Arc::new(part), center_idx));
            }
            let (part, center_idx) = &cache[&members];
            let factor = (n as f64 + 1.0).max(part.overlap() as f64);
            for (k, &c) in center_idx.iter().enumerate() {
                let dir = normals[c]
                    .best_member_near(&ej, ei)
                    .expect("center is a member");
                out.push((
                    i,
                    j,
                    k,
                    StageConfig {
                        sigma: tau,
                        direction: dir,
                        phi: StagePhi::Bump {
                            partition: part.clone(),
                            bump: k,
                            factor,
                        },
                        provenance: Some((i, j, k)),
                    },
                ));
            }
        }
    }
    out.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(b.3.direction.norm().total_cmp(&a.3.direction.norm()))
            .then_with(|| {
                a.3.direction
                    .iter()
                    .zip(b.3.direction.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });
    Ok(out.into_iter().map(|t| t.3).collect())
}

/// Σ_l σ_l·1[φ_l > 0] at every node.
pub fn stage_load(stages: &[StageConfig], domain: &GridDomain) -> ScalarField {
    let mut s = vec![0.0; domain.node_count()];
    for st in stages {
        for (lin, _) in st.phi_support() {
            s[lin] += st.sigma;
        }
    }
    ScalarField::new(domain.clone(), s).expect("node count matches")
}

/// Indices of points x failing the density property at level `level`: some
/// probe normal e at x has no stage of that level with ‖e − e_l‖ < eta and
/// φ_l(x) = 1. Probes are ±u and ±u/2 for line normals, the unit coordinate
/// vectors and their negatives for full normals.
pub fn density_failures(
    stages: &[StageConfig],
    e_set: &PointCloud,
    level: usize,
    eta: f64,
    domain: &GridDomain,
) -> Result<Vec<usize>> {
    let normals = e_set
        .normals()
        .ok_or_else(|| Error::invalid("density check needs normal data"))?;
    let n = domain.dim();
    let at_level: Vec<&StageConfig> = stages
        .iter()
        .filter(|s| s.provenance.is_some_and(|p| p.0 == level))
        .collect();
    let mut bad = Vec::new();
    for (p, x) in e_set.points().iter().enumerate() {
        let probes: Vec<Vector> = match &normals[p].kind {
            crate::geometry::NormalKind::Line(u) => {
                vec![u.clone(), u.scaled(-1.0), u.scaled(0.5), u.scaled(-0.5)]
            }
            crate::geometry::NormalKind::Full => (0..n)
                .flat_map(|a| {
                    let mut v = vec![0.0; n];
                    v[a] = 1.0;
                    let v = Vector::new(v);
                    [v.clone(), v.scaled(-1.0)]
                })
                .collect(),
        };
        let ok = probes.iter().all(|e| {
            at_level.iter().any(|s| {
                distance(e, &s.direction) < eta && s.phi_at(domain, x).is_ok_and(|v| v >= 1.0 - 1e-12)
            })
        });
        if !ok {
            bad.push(p);
        }
    }
    Ok(bad)
}
