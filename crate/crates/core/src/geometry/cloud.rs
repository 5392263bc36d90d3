use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{distance, dot, norm, Vector};
use crate::error::{Error, Result};

/// Which directions a point's normal data claims for 𝒩(E,x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormalKind {
    /// Every direction of the closed unit ball.
    Full,
    /// The segment `{t u : |t| <= 1}` for a unit vector `u`.
    Line(Vector),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalData {
    pub kind: NormalKind,
    /// Radius of the ball around the point on which the claim is made.
    pub delta: f64,
}

impl NormalData {
    pub fn full(delta: f64) -> Self {
        NormalData {
            kind: NormalKind::Full,
            delta,
        }
    }

    pub fn line(u: impl Into<Vector>, delta: f64) -> Self {
        NormalData {
            kind: NormalKind::Line(u.into()),
            delta,
        }
    }

    /// Whether `v` lies in the claimed normal set (a subset of the unit ball).
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        let nv = norm(v);
        if nv > 1.0 + tol {
            return false;
        }
        match &self.kind {
            NormalKind::Full => true,
            NormalKind::Line(u) => {
                let t = dot(v, u);
                let perp: f64 = v
                    .iter()
                    .zip(u.iter())
                    .map(|(a, b)| (a - t * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                perp <= tol
            }
        }
    }

    /// A member of the normal set of maximal norm among those within `r` of
    /// `target`, or `None` if none is that close.
    pub fn best_member_near(&self, target: &[f64], r: f64) -> Option<Vector> {
        match &self.kind {
            NormalKind::Full => {
                let nt = norm(target);
                if nt > 1.0 + r {
                    return None;
                }
                // push the target outward by r, staying in the unit ball
                let scale = if nt > 0.0 { ((nt + r).min(1.0)) / nt } else { 1.0 };
                let v: Vec<f64> = target.iter().map(|x| x * scale).collect();
                Some(if nt > 0.0 { Vector::new(v) } else { Vector::new(target.to_vec()) })
            }
            NormalKind::Line(u) => {
                let mut best: Option<(f64, Vector)> = None;
                for s in [1.0, -1.0] {
                    let p = u.scaled(s);
                    let d = distance(&p, target);
                    if d < r {
                        // the endpoint is the max-norm member on its half-line
                        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                            best = Some((d, p));
                        }
                    }
                }
                if best.is_none() {
                    // largest |t| with |t u - target| < r
                    let t0 = dot(target, u);
                    let perp2 = norm(target).powi(2) - t0 * t0;
                    if perp2 < r * r {
                        let half = (r * r - perp2).max(0.0).sqrt();
                        let t = if t0 >= 0.0 { (t0 + half * 0.999_999).min(1.0) } else { (t0 - half * 0.999_999).max(-1.0) };
                        return Some(u.scaled(t));
                    }
                }
                best.map(|(_, p)| p)
            }
        }
    }
}

/// A finite sample of a set, optionally with normal data per point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector>,
    normals: Option<Vec<NormalData>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector>) -> Self {
        PointCloud {
            points,
            normals: None,
        }
    }

    pub fn with_normals(points: Vec<Vector>, normals: Vec<NormalData>) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(Error::invalid("one normal record per point is required"));
        }
        let dim = points.first().map(|p| p.dim());
        for (p, nd) in points.iter().zip(&normals) {
            if Some(p.dim()) != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim.unwrap_or(0),
                    got: p.dim(),
                });
            }
            if !(nd.delta > 0.0) {
                return Err(Error::invalid(format!("validity radius must be positive, got {}", nd.delta)));
            }
            if let NormalKind::Line(u) = &nd.kind {
                if u.dim() != p.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: p.dim(),
                        got: u.dim(),
                    });
                }
                if (u.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("normal {:?} is not unit", u.as_slice())));
                }
            }
        }
        Ok(PointCloud {
            points,
            normals: Some(normals),
        })
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[NormalData]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.dim())
    }

    /// Points inside the open ball `B(x, r)`, normals kept.
    pub fn restrict_to_ball(&self, x: &[f64], r: f64) -> PointCloud {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| distance(&self.points[i], x) < r)
            .collect();
        self.select(&keep)
    }

    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i].clone()).collect()),
        }
    }

    /// Checks that every point lies in the closed box `[lo, hi]`.
    pub fn check_in_box(&self, lo: &[f64], hi: &[f64], tol: f64) -> Result<()> {
        for p in &self.points {
            if p.iter().zip(lo.iter().zip(hi)).any(|(&v, (&l, &u))| v < l - tol || v > u + tol) {
                return Err(Error::OutsideDomain { point: p.to_vec() });
            }
        }
        Ok(())
    }

    /// CSV with columns `x, y[, z, w], [nx, ny, ..., delta]`.
    /// A full normal set is written as the zero vector.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_records(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_records(&mut w)?;
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn write_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let n = self.dim().unwrap_or(2);
        let mut header: Vec<String> = COORD_NAMES[..n].iter().map(|s| s.to_string()).collect();
        if self.normals.is_some() {
            header.extend(COORD_NAMES[..n].iter().map(|s| format!("n{s}")));
            header.push("delta".into());
        }
        w.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut rec: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            if let Some(ns) = &self.normals {
                let nd = &ns[i];
                match &nd.kind {
                    NormalKind::Full => rec.extend((0..n).map(|_| "0.0".to_string())),
                    NormalKind::Line(u) => rec.extend(u.iter().map(|v| format!("{v:?}"))),
                }
                rec.push(format!("{:?}", nd.delta));
            }
            w.write_record(&rec)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<PointCloud> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let n = header.iter().take_while(|h| COORD_NAMES.contains(&h.as_str())).count();
        if n < 2 || header[..n].iter().zip(COORD_NAMES).any(|(h, c)| h != c) {
            return Err(Error::format(path, "expected leading coordinate columns x, y[, z, w]"));
        }
        let with_normals = match header.len() - n {
            0 => false,
            k if k == n + 1 => {
                let expect: Vec<String> = COORD_NAMES[..n].iter().map(|s| format!("n{s}")).collect();
                if header[n..2 * n] != expect[..] || header[2 * n] != "delta" {
                    return Err(Error::format(path, "normal columns must be nx, ny[, ...], delta"));
                }
                true
            }
            _ => return Err(Error::format(path, "unexpected column count")),
        };
        let mut points = Vec::new();
        let mut normals = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format(path, format!("row {}: {e}", line + 2)))?;
            points.push(Vector::new(vals[..n].to_vec()));
            if with_normals {
                let u = &vals[n..2 * n];
                let delta = vals[2 * n];
                if norm(u) == 0.0 {
                    normals.push(NormalData::full(delta));
                } else {
                    normals.push(NormalData::line(u.to_vec(), delta));
                }
            }
        }
        if with_normals {
            PointCloud::with_normals(points, normals).map_err(|e| Error::format(path, e.to_string()))
        } else {
            Ok(PointCloud::new(points))
        }
    }
}

const COORD_NAMES: [&str; 4] = ["x", "y", "z", "w"];
