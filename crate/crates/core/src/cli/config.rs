use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cone, GridDomain};

/// Flat run configuration; every key is optional in the file and unknown keys
/// are rejected. Command-line flags override file values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // grid
    pub h: f64,
    pub lo: f64,
    pub hi: f64,
    pub padding: usize,
    // cone
    pub axis: Vec<f64>,
    pub aperture: f64,
    // step set
    pub s_max: usize,
    // set generation
    pub kind: String,
    pub depth: u32,
    pub ratio: f64,
    pub y_samples: usize,
    pub k_max: u32,
    pub samples: usize,
    pub lines: usize,
    pub seed: u64,
    pub density: f64,
    // width of point sets
    pub radius: f64,
    // pipelines
    pub pipeline: String,
    pub eps: f64,
    pub stages: usize,
    pub i_max: usize,
    pub threshold: f64,
    // analysis
    pub gap_slack: f64,
    pub residual_slack: f64,
    pub pass_rate: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub radius_j_min: i32,
    pub radius_j_max: i32,
    pub directions: usize,
    pub ball_directions: usize,
    pub ball_shells: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            h: 1.0 / 256.0,
            lo: -0.125,
            hi: 1.125,
            padding: 0,
            axis: vec![1.0, 0.0],
            aperture: 0.5,
            s_max: 3,
            kind: "four-corner".into(),
            depth: 4,
            ratio: 1.0 / 3.0,
            y_samples: 9,
            k_max: 8,
            samples: 64,
            lines: 8,
            seed: 7,
            density: 0.5,
            radius: 0.0,
            pipeline: "theorem4".into(),
            eps: 0.3,
            stages: 3,
            i_max: 4,
            threshold: 0.1,
            gap_slack: 0.2,
            residual_slack: 0.1,
            pass_rate: 0.9,
            j_min: 3,
            j_max: 10,
            radius_j_min: 3,
            radius_j_max: 8,
            directions: 8,
            ball_directions: 64,
            ball_shells: 4,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.h > 0.0 && self.h <= 1.0) {
            return bad(format!("h = {} must lie in (0, 1]", self.h));
        }
        if !(self.hi > self.lo) {
            return bad(format!("hi = {} must exceed lo = {}", self.hi, self.lo));
        }
        if !(self.aperture > 0.0 && self.aperture <= 1.0) {
            return bad(format!("aperture = {} must lie in (0, 1]", self.aperture));
        }
        if self.s_max == 0 || self.s_max > 16 {
            return bad(format!("s_max = {} must lie in 1..=16", self.s_max));
        }
        if !(self.ratio > 0.0 && self.ratio < 0.5) {
            return bad(format!("ratio = {} must lie in (0, 1/2)", self.ratio));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad(format!("eps = {} must lie in (0, 1]", self.eps));
        }
        if self.i_max == 0 {
            return bad("i_max must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.pass_rate) || !(0.0..=1.0).contains(&self.density) {
            return bad("pass_rate and density must lie in [0, 1]".into());
        }
        if self.j_min > self.j_max || self.radius_j_min > self.radius_j_max {
            return bad("scale ladders need j_min <= j_max".into());
        }
        if self.radius < 0.0 || self.threshold < 0.0 || self.gap_slack < 0.0 || self.residual_slack < 0.0 {
            return bad("radius, threshold and slacks must be nonnegative".into());
        }
        if self.ball_directions == 0 || self.ball_shells == 0 {
            return bad("ball pattern needs directions and shells".into());
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<GridDomain> {
        GridDomain::square(self.lo, self.hi, self.h, self.padding)
    }

    pub fn cone(&self) -> Result<Cone> {
        Cone::new(self.axis.clone(), self.aperture)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::from_toml("aperture = 0.4\napperture = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("apperture"), "{err}");
    }

    #[test]
    fn range_checked() {
        assert!(RunConfig::from_toml("aperture = 1.5").is_err());
        assert!(RunConfig::from_toml("h = 0.0").is_err());
        assert!(RunConfig::from_toml("j_min = 5\nj_max = 4").is_err());
        assert_eq!(RunConfig::from_toml("eps = 0.2").unwrap().eps, 0.2);
    }
}
