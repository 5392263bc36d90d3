use serde::Serialize;

use crate::builder::golden_direction;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{PointCloud, Vector};

/// Ball sample set: `directions` unit vectors times `shells` radii k/shells.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BallPattern {
    pub directions: usize,
    pub shells: usize,
}

impl Default for BallPattern {
    fn default() -> Self {
        BallPattern {
            directions: 64,
            shells: 4,
        }
    }
}

impl BallPattern {
    pub fn offsets(&self, n: usize) -> Vec<Vector> {
        let dirs: Vec<Vector> = (1..=self.directions).map(|i| golden_direction(n, i)).collect();
        let mut out = Vec::with_capacity(self.directions * self.shells);
        for s in 1..=self.shells {
            let rho = s as f64 / self.shells as f64;
            out.extend(dirs.iter().map(|u| u.scaled(rho)));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualProfile {
    pub point: Vec<f64>,
    pub target: Vec<f64>,
    pub radii: Vec<f64>,
    pub residuals: Vec<f64>,
    pub min: f64,
}

impl ResidualProfile {
    pub fn argmin_radius(&self) -> Option<f64> {
        self.residuals
            .iter()
            .zip(&self.radii)
            .min_by(|a, b| a.0.total_cmp(b.0))
            .map(|(_, r)| *r)
    }
}

/// For each r: max over the ball pattern scaled by r of |f(x+y) − f(x) − ⟨e,y⟩|/r.
pub fn residual_profile(f: &ScalarField, x: &[f64], e: &[f64], radii: &[f64], ball: &BallPattern) -> Result<ResidualProfile> {
    let n = x.len();
    if e.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: e.len() });
    }
    let fx = f.evaluate(x)?;
    let offs = ball.offsets(n);
    let mut residuals = Vec::with_capacity(radii.len());
    for (j, &r) in radii.iter().enumerate() {
        let mut worst = 0.0f64;
        for o in &offs {
            let y: Vec<f64> = o.iter().map(|v| v * r).collect();
            let p: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            if !f.domain().contains_point(&p) {
                return Err(Error::ProbeEscapes { j: j as i32 });
            }
            let lin: f64 = e.iter().zip(&y).map(|(a, b)| a * b).sum();
            worst = worst.max((f.evaluate(&p)? - fx - lin).abs() / r);
        }
        residuals.push(worst);
    }
    let min = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ResidualProfile {
        point: x.to_vec(),
        target: e.to_vec(),
        radii: radii.to_vec(),
        residuals,
        min,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub point: Vec<f64>,
    pub target: Vec<f64>,
    /// None when a probe left the domain.
    pub min: Option<f64>,
    pub argmin_radius: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSweep {
    pub threshold: f64,
    pub radii: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub pass_rate: f64,
}

/// Residual minima at each sample of `e_set` against `target(index)`;
/// a sample passes when its minimum is at most `threshold`.
pub fn residual_sweep(
    f: &ScalarField,
    e_set: &PointCloud,
    target: impl Fn(usize) -> Vector,
    radii: &[f64],
    ball: &BallPattern,
    threshold: f64,
) -> Result<ResidualSweep> {
    let mut rows = Vec::with_capacity(e_set.len());
    for (i, p) in e_set.points().iter().enumerate() {
        let e = target(i);
        let (min, arg) = match residual_profile(f, p, &e, radii, ball) {
            Ok(pr) => (Some(pr.min), pr.argmin_radius()),
            Err(Error::ProbeEscapes { .. }) => (None, None),
            Err(err) => return Err(err),
        };
        rows.push(SweepRow {
            index: i,
            point: p.as_slice().to_vec(),
            target: e.into_inner(),
            min,
            argmin_radius: arg,
            pass: min.is_some_and(|m| m <= threshold),
        });
    }
    let pass_rate = pass_fraction(rows.iter().map(|r| r.pass));
    Ok(ResidualSweep {
        threshold,
        radii: radii.to_vec(),
        rows,
        pass_rate,
    })
}

pub(crate) fn pass_fraction(it: impl Iterator<Item = bool>) -> f64 {
    let (mut n, mut k) = (0usize, 0usize);
    for p in it {
        n += 1;
        k += p as usize;
    }
    if n == 0 {
        1.0
    } else {
        k as f64 / n as f64
    }
}

impl ResidualSweep {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "point", "target", "min_residual", "argmin_radius", "pass"])?;
        for r in &self.rows {
            w.write_record([
                r.index.to_string(),
                join(&r.point),
                join(&r.target),
                r.min.map_or("escape".into(), |m| format!("{m:e}")),
                r.argmin_radius.map_or(String::new(), |m| format!("{m:e}")),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridDomain;

    fn dom() -> GridDomain {
        GridDomain::square(-1.0, 2.0, 1.0 / 64.0, 0).unwrap()
    }

    #[test]
    fn own_gradient_gives_zero() {
        let f = ScalarField::from_fn(dom(), |x| 0.4 * x[0] + 0.1 * x[1]);
        let p = residual_profile(&f, &[0.5, 0.5], &[0.4, 0.1], &[0.25, 0.125], &BallPattern::default()).unwrap();
        assert!(p.residuals.iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn wrong_gradient_gives_defect() {
        let f = ScalarField::from_fn(dom(), |x| 0.4 * x[0] + 0.1 * x[1]);
        let p = residual_profile(&f, &[0.5, 0.5], &[0.4, 0.4], &[0.25], &BallPattern::default()).unwrap();
        // sup over 64 directions of |<d, u>|, ‖d‖ = 0.3, angular gaps below 0.2
        assert!(p.min <= 0.3 + 1e-12 && p.min >= 0.3 * 0.1f64.cos() - 1e-12);
    }

    #[test]
    fn pattern_size() {
        let o = BallPattern::default().offsets(2);
        assert_eq!(o.len(), 256);
        assert!(o.iter().all(|v| v.norm() <= 1.0 + 1e-15));
    }

    #[test]
    fn sweep_marks_escapes() {
        let f = ScalarField::zeros(GridDomain::unit_square(16, 0));
        let e = PointCloud::new(vec![Vector::from([0.5, 0.5]), Vector::from([0.99, 0.5])]);
        let s = residual_sweep(&f, &e, |_| Vector::from([0.0, 0.0]), &[0.125], &BallPattern::default(), 0.1).unwrap();
        assert!(s.rows[0].pass && !s.rows[1].pass);
        assert_eq!(s.pass_rate, 0.5);
    }
}
