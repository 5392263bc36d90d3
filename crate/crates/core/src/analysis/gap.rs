use serde::Serialize;

use super::dini::dini_derivatives;
use super::residual::{join, pass_fraction};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{dot, norm, NormalData, NormalKind, PointCloud, Vector};

#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub index: usize,
    pub point: Vec<f64>,
    pub y: Vec<f64>,
    /// None when a probe left the domain.
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub slack: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub rows: Vec<GapRow>,
    pub pass_rate: f64,
}

/// 2·max over the claimed normal set of ⟨e, y⟩.
pub fn normal_gap_bound(nd: &NormalData, y: &[f64]) -> f64 {
    match &nd.kind {
        NormalKind::Full => 2.0 * norm(y),
        NormalKind::Line(u) => 2.0 * dot(u, y).abs(),
    }
}

/// Upper minus lower Dini estimate against the normal bound for every
/// (sample, y); a row passes when gap ≥ bound − slack.
pub fn gap_report(f: &ScalarField, e_set: &PointCloud, ys: &[Vector], j_min: i32, j_max: i32, slack: f64) -> Result<GapReport> {
    let normals = e_set.normals().ok_or(Error::MissingNormal { index: 0 })?;
    let mut rows = Vec::with_capacity(e_set.len() * ys.len());
    for (i, (p, nd)) in e_set.points().iter().zip(normals).enumerate() {
        for y in ys {
            let bound = normal_gap_bound(nd, y);
            let (upper, lower) = match dini_derivatives(f, p, y, j_min, j_max) {
                Ok(d) => (Some(d.upper), Some(d.lower)),
                Err(Error::ProbeEscapes { .. }) => (None, None),
                Err(err) => return Err(err),
            };
            let pass = match (upper, lower) {
                (Some(u), Some(l)) => u - l >= bound - slack,
                _ => false,
            };
            rows.push(GapRow {
                index: i,
                point: p.as_slice().to_vec(),
                y: y.as_slice().to_vec(),
                upper,
                lower,
                bound,
                pass,
            });
        }
    }
    let pass_rate = pass_fraction(rows.iter().map(|r| r.pass));
    Ok(GapReport {
        slack,
        j_min,
        j_max,
        rows,
        pass_rate,
    })
}

impl GapReport {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "point", "y", "upper", "lower", "gap", "bound", "pass"])?;
        let opt = |v: Option<f64>| v.map_or("escape".to_string(), |x| format!("{x:e}"));
        for r in &self.rows {
            let gap = r.upper.zip(r.lower).map(|(u, l)| u - l);
            w.write_record([
                r.index.to_string(),
                join(&r.point),
                join(&r.y),
                opt(r.upper),
                opt(r.lower),
                opt(gap),
                format!("{:e}", r.bound),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
