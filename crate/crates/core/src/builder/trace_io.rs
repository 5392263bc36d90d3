use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::recursion::BuildTrace;
use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const MANIFEST: &str = "manifest.toml";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageEntry {
    pub index: usize,
    pub sigma: f64,
    pub direction: Vec<f64>,
    pub phi_support_nodes: usize,
    pub f_file: String,
    pub omega_file: String,
    pub psi_file: String,
    pub h_file: String,
    pub passed: bool,
    pub failures: Vec<String>,
    pub samples_outside_h: usize,
    pub halving_excess: f64,
    pub step_excess: f64,
    pub gradient_deviation: f64,
    pub gradient_bound: f64,
    pub clamped_pieces: usize,
    pub pieces: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceManifest {
    pub pipeline: String,
    pub final_field: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    /// Pipeline report and resolved config, free-form.
    #[serde(default)]
    pub report: toml::Table,
    #[serde(default)]
    pub stages: Vec<StageEntry>,
}

impl TraceManifest {
    pub fn final_field_path(&self, dir: &Path) -> PathBuf {
        dir.join(&self.final_field)
    }
}

/// Writes every trace of `traces` (run in order) plus the final field into
/// `dir`; stage files are numbered consecutively across traces.
pub fn write_trace(dir: &Path, pipeline: &str, traces: &[&BuildTrace], final_f: &ScalarField, report: toml::Table) -> Result<TraceManifest> {
    std::fs::create_dir_all(dir)?;
    let mut stages = Vec::new();
    let mut aborted = None;
    let mut idx = 0usize;
    if let Some(t) = traces.first() {
        t.f0.write_binary(&dir.join("f0.cwf"))?;
    }
    for t in traces {
        for s in &t.stages {
            idx += 1;
            let name = |what: &str, ext: &str| format!("stage{idx:04}_{what}.{ext}");
            let (ff, wf, pf, hf) = (name("f", "cwf"), name("omega", "cwf"), name("psi", "cwf"), name("h", "pbm"));
            s.f.write_binary(&dir.join(&ff))?;
            s.omega.write_binary(&dir.join(&wf))?;
            s.psi.write_binary(&dir.join(&pf))?;
            s.h_set.write_pbm(&dir.join(&hf))?;
            stages.push(StageEntry {
                index: idx,
                sigma: s.config.sigma,
                direction: s.config.direction.clone(),
                phi_support_nodes: s.config.phi_support_nodes,
                f_file: ff,
                omega_file: wf,
                psi_file: pf,
                h_file: hf,
                passed: s.checks.failures.is_empty(),
                failures: s.checks.failures.clone(),
                samples_outside_h: s.checks.samples_outside_h,
                halving_excess: finite(s.checks.halving_excess),
                step_excess: finite(s.checks.step_excess),
                gradient_deviation: s.checks.gradient_deviation,
                gradient_bound: s.checks.gradient_bound,
                clamped_pieces: s.lemma2.clamped_pieces,
                pieces: s.lemma2.pieces,
            });
        }
        if let (None, Some((j, m))) = (&aborted, &t.aborted) {
            aborted = Some(format!("stage {}: {m}", idx.max(*j)));
        }
    }
    final_f.write_binary(&dir.join("final.cwf"))?;
    let manifest = TraceManifest {
        pipeline: pipeline.to_string(),
        final_field: "final.cwf".into(),
        passed: aborted.is_none() && stages.iter().all(|s| s.passed),
        aborted,
        report,
        stages,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::format(dir.join(MANIFEST), e.to_string()))?;
    std::fs::write(dir.join(MANIFEST), text)?;
    Ok(manifest)
}

pub fn read_trace_manifest(dir: &Path) -> Result<TraceManifest> {
    let p = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::format(&p, e.to_string()))?;
    toml::from_str(&text).map_err(|e| Error::format(&p, e.to_string()))
}

// toml has no -inf for empty maxima; report 0 instead
fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{run_recursion, RecursionCfg};
    use crate::geometry::{GridDomain, GridSet, PointCloud, Vector};

    #[test]
    fn roundtrip_empty_trace() {
        let d = GridDomain::unit_square(8, 1);
        let f0 = ScalarField::zeros(d.clone());
        let t = run_recursion(
            &PointCloud::new(vec![Vector::from([0.5, 0.5])]),
            &f0,
            &GridSet::full(d.clone()),
            &ScalarField::constant(d, 1.0),
            &[],
            0,
            &RecursionCfg::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut rep = toml::Table::new();
        rep.insert("lipschitz".into(), 0.0.into());
        let m = write_trace(dir.path(), "theorem4", &[&t], &f0, rep).unwrap();
        assert!(m.passed);
        let back = read_trace_manifest(dir.path()).unwrap();
        assert_eq!(back.pipeline, "theorem4");
        assert_eq!(back.report["lipschitz"].as_float(), Some(0.0));
        let f = ScalarField::read_binary(&back.final_field_path(dir.path())).unwrap();
        assert_eq!(f.samples(), f0.samples());
        assert!(read_trace_manifest(&dir.path().join("missing")).is_err());
    }
}
