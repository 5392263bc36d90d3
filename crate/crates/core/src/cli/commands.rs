use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::RunConfig;
use super::{AnalyzeArgs, BuildArgs, GenSetArgs, VerifyArgs, WidthArgs};
use crate::acceptance::{keep_going, run_all};
use crate::analysis::{dyadic_radii, gap_report, residual_sweep, BallPattern};
use crate::builder::{read_trace_manifest, theorem4_build, theorem9_build, write_trace, Theorem4Cfg, Theorem9Cfg, TraceManifest};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{gen_cantor_product, gen_four_corner_cantor, gen_graph_family, gen_line_neighborhood_set, GridSet, PointCloud, Vector};
use crate::width::{width_brute_force, width_of_set, width_open};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// A check ran and did not meet its threshold.
    Fail(String),
}

fn table<T: Serialize>(v: &T) -> Result<toml::Table> {
    toml::Table::try_from(v).map_err(|e| Error::invalid(format!("report serialization: {e}")))
}

fn write_report(path: Option<&Path>, t: &toml::Table) -> Result<()> {
    let text = toml::to_string(t).map_err(|e| Error::invalid(format!("report serialization: {e}")))?;
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn extension(p: &Path) -> String {
    p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn report_base(cfg: &RunConfig, command: &str) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert("command".into(), command.into());
    t.insert("config".into(), cfg.to_table().into());
    t
}

pub fn cmd_gen_set(cfg: &RunConfig, a: &GenSetArgs) -> Result<Status> {
    let ext = extension(&a.out);
    let cloud = match cfg.kind.as_str() {
        "four-corner" => Some(gen_four_corner_cantor(cfg.depth)?),
        "cantor-product" => Some(gen_cantor_product(cfg.ratio, cfg.depth, cfg.y_samples)?),
        "graph-family" => Some(gen_graph_family(cfg.k_max, cfg.samples)?),
        "line-neighborhood" | "random" => None,
        k => return Err(Error::Config(format!("unknown set kind {k:?}"))),
    };
    match cloud {
        Some(pc) => {
            if ext != "csv" {
                return Err(Error::Config(format!("kind {:?} writes a point set; use a .csv output", cfg.kind)));
            }
            pc.write_csv(&a.out)?;
            println!("{}: {} points", a.out.display(), pc.len());
        }
        None => {
            if ext != "pbm" {
                return Err(Error::Config(format!("kind {:?} writes a grid set; use a .pbm output", cfg.kind)));
            }
            let d = cfg.domain()?;
            let g = if cfg.kind == "random" {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                GridSet::from_cells(d, |_| rng.gen_bool(cfg.density))
            } else {
                gen_line_neighborhood_set(&d, cfg.lines, cfg.eps, &cfg.cone()?)?
            };
            g.write_pbm(&a.out)?;
            println!("{}: {} of {} cells", a.out.display(), g.count(), g.domain().cell_count());
        }
    }
    Ok(Status::Pass)
}

pub fn cmd_width(cfg: &RunConfig, a: &WidthArgs) -> Result<Status> {
    let cone = cfg.cone()?;
    let mut t = report_base(cfg, "width");
    let mut status = Status::Pass;
    match extension(&a.input).as_str() {
        "pbm" => {
            let g = GridSet::read_pbm(&a.input)?;
            let w = width_open(&g, &cone, cfg.s_max)?;
            t.insert("value".into(), w.value.into());
            if a.oracle {
                let slow = width_brute_force(&g, &cone, cfg.s_max)?;
                t.insert("oracle_value".into(), slow.into());
                t.insert("oracle_equal".into(), (slow == w.value).into());
                if slow != w.value {
                    status = Status::Fail(format!("width {} differs from oracle {}", w.value, slow));
                }
            }
            t.insert("result".into(), table(&w)?.into());
        }
        "csv" => {
            if a.oracle {
                return Err(Error::Config("--oracle needs a .pbm grid set".into()));
            }
            let e = PointCloud::read_csv(&a.input)?;
            let radii = if cfg.radius > 0.0 {
                vec![cfg.radius]
            } else {
                dyadic_radii(cfg.radius_j_min, cfg.radius_j_max)
            };
            let w = width_of_set(&e, &cone, &radii, cfg.s_max, &cfg.domain()?)?;
            t.insert("value".into(), w.estimate().into());
            t.insert("result".into(), table(&w)?.into());
        }
        other => return Err(Error::Config(format!("width input must be .pbm or .csv, got {other:?}"))),
    }
    write_report(a.out.as_deref(), &t)?;
    Ok(status)
}

/// ω = 1 on the domain box shrunk by 2% of its side, 0 elsewhere.
fn box_omega(cfg: &RunConfig) -> Result<ScalarField> {
    let d = cfg.domain()?;
    let m = 0.02 * (cfg.hi - cfg.lo);
    let (lo, hi) = (cfg.lo + m, cfg.hi - m);
    Ok(ScalarField::from_fn(d, |x| if x.iter().all(|v| *v > lo && *v < hi) { 1.0 } else { 0.0 }))
}

fn build_status(m: &TraceManifest) -> Status {
    let bad: Vec<String> = m
        .stages
        .iter()
        .filter(|s| !s.passed)
        .map(|s| format!("stage {}: {}", s.index, s.failures.join("; ")))
        .collect();
    if let Some(why) = &m.aborted {
        return Status::Fail(format!("aborted: {why}"));
    }
    if bad.is_empty() {
        Status::Pass
    } else {
        Status::Fail(format!("{} stage(s) failed\n  {}", bad.len(), bad.join("\n  ")))
    }
}

pub fn cmd_build(cfg: &RunConfig, a: &BuildArgs) -> Result<Status> {
    let e = PointCloud::read_csv(&a.set)?;
    let mut report = report_base(cfg, "build");
    let manifest = match cfg.pipeline.as_str() {
        "theorem4" => {
            let c = Theorem4Cfg {
                i_max: cfg.i_max,
                recursion: keep_going(),
                ..Default::default()
            };
            let out = theorem4_build(&e, cfg.eps, &box_omega(cfg)?, cfg.stages, &c)?;
            report.insert("pipeline_report".into(), table(&out.report)?.into());
            write_trace(&a.out, "theorem4", &[&out.trace], &out.f, report)?
        }
        "theorem9" => {
            let c = Theorem9Cfg {
                recursion: keep_going(),
                ..Default::default()
            };
            let out = theorem9_build(&e, &cfg.domain()?, cfg.stages, &c)?;
            report.insert("pipeline_report".into(), table(&out.report)?.into());
            let traces: Vec<_> = out.traces.iter().collect();
            write_trace(&a.out, "theorem9", &traces, &out.f, report)?
        }
        p => return Err(Error::Config(format!("unknown pipeline {p:?}"))),
    };
    println!("{}: {} stages, passed = {}", a.out.display(), manifest.stages.len(), manifest.passed);
    Ok(build_status(&manifest))
}

/// `(direction, eta)` per step of a theorem9 manifest.
fn theorem9_targets(m: &TraceManifest) -> Result<Vec<(Vector, f64)>> {
    let bad = || Error::Config("theorem9 manifest lacks pipeline_report.steps".into());
    let steps = m
        .report
        .get("pipeline_report")
        .and_then(|r| r.get("steps"))
        .and_then(|s| s.as_array())
        .ok_or_else(bad)?;
    steps
        .iter()
        .map(|s| {
            let dir: Vec<f64> = s
                .get("direction")
                .and_then(|d| d.as_array())
                .ok_or_else(bad)?
                .iter()
                .map(|v| v.as_float().ok_or_else(bad))
                .collect::<Result<_>>()?;
            let eta = s.get("eta").and_then(|v| v.as_float()).ok_or_else(bad)?;
            Ok((Vector::from(dir), eta))
        })
        .collect()
}

pub fn cmd_analyze(cfg: &RunConfig, a: &AnalyzeArgs) -> Result<Status> {
    let e = PointCloud::read_csv(&a.set)?;
    std::fs::create_dir_all(&a.out)?;
    let radii = dyadic_radii(cfg.radius_j_min, cfg.radius_j_max);
    let ball = BallPattern {
        directions: cfg.ball_directions,
        shells: cfg.ball_shells,
    };
    let mut s = report_base(cfg, "analyze");
    let mut rates: Vec<(String, f64)> = Vec::new();
    match (&a.trace, &a.field) {
        (Some(dir), _) => {
            let m = read_trace_manifest(dir)?;
            let f = ScalarField::read_binary(&m.final_field_path(dir))?;
            s.insert("pipeline".into(), m.pipeline.clone().into());
            match m.pipeline.as_str() {
                "theorem4" => {
                    let y = Vector::from(cfg.axis.clone())
                        .normalized()
                        .ok_or_else(|| Error::Config("axis must be nonzero".into()))?;
                    let gap = gap_report(&f, &e, &[y], cfg.j_min, cfg.j_max, cfg.gap_slack)?;
                    gap.write_csv(&a.out.join("gap.csv"))?;
                    rates.push(("gap".into(), gap.pass_rate));
                }
                "theorem9" => {
                    for (k, (dir, eta)) in theorem9_targets(&m)?.into_iter().take(cfg.directions).enumerate() {
                        let sw = residual_sweep(&f, &e, |_| dir.clone(), &radii, &ball, eta + cfg.residual_slack)?;
                        sw.write_csv(&a.out.join(format!("residual_e{}.csv", k + 1)))?;
                        rates.push((format!("residual_e{}", k + 1), sw.pass_rate));
                    }
                }
                p => return Err(Error::Config(format!("unknown pipeline {p:?} in manifest"))),
            }
        }
        (None, Some(path)) => {
            let f = ScalarField::read_binary(path)?;
            let grad = f.gradient_field();
            let targets: Vec<Vector> = e.points().iter().map(|p| grad.evaluate(p)).collect::<Result<_>>()?;
            let sw = residual_sweep(&f, &e, |i| targets[i].clone(), &radii, &ball, cfg.threshold)?;
            sw.write_csv(&a.out.join("residual.csv"))?;
            rates.push(("residual".into(), sw.pass_rate));
        }
        (None, None) => return Err(Error::Config("analyze needs --trace or --field".into())),
    }
    let failing: Vec<String> = rates
        .iter()
        .filter(|(_, r)| *r < cfg.pass_rate)
        .map(|(k, r)| format!("{k} pass rate {r:.3} < {}", cfg.pass_rate))
        .collect();
    let mut rt = toml::Table::new();
    for (k, r) in &rates {
        rt.insert(k.clone(), (*r).into());
        println!("{k}: pass rate {r:.3}");
    }
    s.insert("pass_rates".into(), rt.into());
    s.insert("passed".into(), failing.is_empty().into());
    write_report(Some(&a.out.join("summary.toml")), &s)?;
    if rates.is_empty() {
        return Ok(Status::Fail("no checks were run".into()));
    }
    Ok(if failing.is_empty() { Status::Pass } else { Status::Fail(failing.join(", ")) })
}

pub fn cmd_verify(cfg: &RunConfig, a: &VerifyArgs) -> Result<Status> {
    let outcomes = run_all(|o| println!("{}", o.line()));
    let mut t = report_base(cfg, "verify");
    for o in &outcomes {
        let mut r = o.report.clone();
        r.insert("passed".into(), o.passed.into());
        r.insert("title".into(), o.title.into());
        t.insert(format!("criterion{}", o.id), r.into());
    }
    if let Some(p) = &a.out {
        write_report(Some(p), &t)?;
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    Ok(if failed.is_empty() {
        Status::Pass
    } else {
        Status::Fail(format!("criteria failed: {}", failed.join(", ")))
    })
}
