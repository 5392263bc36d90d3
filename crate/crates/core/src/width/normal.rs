use serde::Serialize;

use super::of_set::width_of_set;
use crate::error::{Error, Result};
use crate::geometry::{distance, Cone, GridDomain, PointCloud, Vector};

/// Sampling parameters of [`estimate_normal_cone`].
#[derive(Clone, Debug, Serialize)]
pub struct NormalConeParams {
    pub eps_list: Vec<f64>,
    pub r_list: Vec<f64>,
    pub directions: Vec<Vector>,
    pub threshold: f64,
    /// Neighborhood radius as a fraction of `r`.
    pub nbhd_frac: f64,
    /// Grid cells per neighborhood radius.
    pub cells_per_nbhd: usize,
    pub s_max: usize,
}

impl Default for NormalConeParams {
    fn default() -> Self {
        NormalConeParams {
            eps_list: vec![0.5],
            r_list: vec![0.1, 0.05],
            directions: vec![Vector::from([1.0, 0.0]), Vector::from([0.0, 1.0])],
            threshold: 0.1,
            nbhd_frac: 0.25,
            cells_per_nbhd: 4,
            s_max: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionReport {
    pub direction: Vector,
    /// `(eps, r, width)` for every tested pair.
    pub widths: Vec<(f64, f64, f64)>,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalConeEstimate {
    pub point: Vector,
    pub threshold: f64,
    pub directions: Vec<DirectionReport>,
}

impl NormalConeEstimate {
    pub fn accepted(&self) -> Vec<Vector> {
        self.directions
            .iter()
            .filter(|d| d.accepted)
            .map(|d| d.direction.clone())
            .collect()
    }

    pub fn is_accepted(&self, e: &[f64]) -> bool {
        self.directions
            .iter()
            .any(|d| d.accepted && distance(&d.direction, e) < 1e-12)
    }
}

/// Tests which directions look like members of 𝒩(E,x): a direction is
/// accepted when for every tested aperture some radius `r` gives
/// `width(E ∩ B(x,r)) <= threshold·r`, widths measured on a local grid.
pub fn estimate_normal_cone(e: &PointCloud, x: &[f64], params: &NormalConeParams) -> Result<NormalConeEstimate> {
    if params.eps_list.is_empty() || params.r_list.is_empty() || params.directions.is_empty() {
        return Err(Error::invalid("eps, radius and direction lists must be nonempty"));
    }
    if !(params.nbhd_frac > 0.0) || params.cells_per_nbhd == 0 {
        return Err(Error::invalid("neighborhood fraction and resolution must be positive"));
    }
    let n = x.len();
    let h_min = params
        .r_list
        .iter()
        .map(|r| r * params.nbhd_frac / params.cells_per_nbhd as f64)
        .fold(f64::INFINITY, f64::min);
    let near = e.points().iter().map(|p| distance(p, x)).fold(f64::INFINITY, f64::min);
    if near > h_min {
        return Err(Error::invalid(format!("probe point is {near} away from the set")));
    }
    let mut reports = Vec::with_capacity(params.directions.len());
    for dir in &params.directions {
        let mut widths = Vec::new();
        let mut accepted = true;
        for &eps in &params.eps_list {
            let cone = Cone::new(dir.clone(), eps)?;
            let mut some_r = false;
            for &r in &params.r_list {
                let nb = r * params.nbhd_frac;
                let h = nb / params.cells_per_nbhd as f64;
                let half = r + nb + h;
                let cells = (2.0 * half / h).ceil() as usize;
                let origin: Vec<f64> = x.iter().map(|&c| c - half).collect();
                let domain = GridDomain::new(origin, h, vec![cells; n], 4)?;
                let local = e.restrict_to_ball(x, r);
                let w = width_of_set(&local, &cone, &[nb], params.s_max, &domain)?.estimate();
                widths.push((eps, r, w));
                some_r |= w <= params.threshold * r;
            }
            accepted &= some_r;
        }
        reports.push(DirectionReport {
            direction: dir.clone(),
            widths,
            accepted,
        });
    }
    Ok(NormalConeEstimate {
        point: Vector::new(x.to_vec()),
        threshold: params.threshold,
        directions: reports,
    })
}
