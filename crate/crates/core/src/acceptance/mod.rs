//! Desk-scale acceptance criteria 1–9 with PASS/FAIL reporting.

mod builders;
mod pipelines;
mod width;

use std::time::{Duration, Instant};

pub use builders::{criterion3, criterion6, criterion8};
pub use pipelines::{criterion4, criterion5, criterion7, fixture_domain, keep_going, unit_box_omega, Theorem4Run, Theorem9Run};
pub use width::{criterion1, criterion2};

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    /// Deterministic measured values; no timings.
    pub report: toml::Table,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {} ({}): {} [{:.1} s, limit {} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        )
    }

    pub fn report_text(&self) -> String {
        toml::to_string(&self.report).unwrap_or_default()
    }
}

pub(crate) struct Check {
    id: u8,
    title: &'static str,
    limit: Duration,
    start: Instant,
    report: toml::Table,
    parts: Vec<(String, bool)>,
}

impl Check {
    pub(crate) fn new(id: u8, title: &'static str, limit_secs: u64) -> Self {
        Check {
            id,
            title,
            limit: Duration::from_secs(limit_secs),
            start: Instant::now(),
            report: toml::Table::new(),
            parts: Vec::new(),
        }
    }

    pub(crate) fn put(&mut self, key: &str, v: impl Into<toml::Value>) {
        self.report.insert(key.into(), v.into());
    }

    pub(crate) fn num(&mut self, key: &str, v: f64) {
        // toml rejects nothing, but NaN breaks byte comparison of reruns
        self.put(key, if v.is_nan() { f64::INFINITY } else { v });
    }

    pub(crate) fn part(&mut self, label: impl Into<String>, ok: bool) {
        let label = label.into();
        let key: String = label
            .chars()
            .map(|ch| if ch.is_ascii_alphanumeric() { ch.to_ascii_lowercase() } else { '_' })
            .collect();
        self.put(&format!("pass_{key}"), ok);
        self.parts.push((label, ok));
    }

    pub(crate) fn finish(self) -> Outcome {
        let elapsed = self.start.elapsed();
        let in_time = elapsed <= self.limit;
        let mut summary: Vec<String> = self
            .parts
            .iter()
            .map(|(l, ok)| format!("{l} {}", if *ok { "ok" } else { "fail" }))
            .collect();
        if !in_time {
            summary.push("over time limit".into());
        }
        Outcome {
            id: self.id,
            title: self.title,
            passed: in_time && !self.parts.is_empty() && self.parts.iter().all(|p| p.1),
            summary: summary.join(", "),
            report: self.report,
            elapsed,
            limit: self.limit,
        }
    }
}

/// Outcome for a criterion whose run returned an error.
pub fn failed(id: u8, title: &'static str, err: &crate::Error) -> Outcome {
    let mut report = toml::Table::new();
    report.insert("error".into(), err.to_string().into());
    Outcome {
        id,
        title,
        passed: false,
        summary: format!("error: {err}"),
        report,
        elapsed: Duration::ZERO,
        limit: Duration::ZERO,
    }
}

/// Criterion 9: reruns of criteria 1, 4 and 5 reproduce their report text.
pub fn criterion9(first: &[&Outcome]) -> Result<Outcome> {
    let mut c = Check::new(9, "determinism", 1200);
    for o in first {
        let again = match o.id {
            1 => criterion1()?,
            4 => criterion4()?.outcome,
            5 => criterion5()?.outcome,
            _ => continue,
        };
        let same = again.report_text() == o.report_text();
        c.part(format!("criterion {} rerun", o.id), same);
    }
    Ok(c.finish())
}

pub const TITLES: [&str; 9] = [
    "width oracle equivalence",
    "width-function properties",
    "mollified gluing",
    "Theorem-4 certificate",
    "Theorem-9 certificate",
    "stage selection",
    "Example-e check",
    "normal-cone joining",
    "determinism",
];

/// Runs all nine criteria in order, calling `sink` after each.
pub fn run_all(mut sink: impl FnMut(&Outcome)) -> Vec<Outcome> {
    fn wrap(id: u8, r: Result<Outcome>) -> Outcome {
        r.unwrap_or_else(|e| failed(id, TITLES[id as usize - 1], &e))
    }
    let mut out = Vec::with_capacity(9);
    let mut push = |o: Outcome, out: &mut Vec<Outcome>| {
        sink(&o);
        out.push(o);
    };
    push(wrap(1, criterion1()), &mut out);
    push(wrap(2, criterion2()), &mut out);
    push(wrap(3, criterion3()), &mut out);
    push(wrap(4, criterion4().map(|r| r.outcome)), &mut out);
    push(wrap(5, criterion5().map(|r| r.outcome)), &mut out);
    push(wrap(6, criterion6()), &mut out);
    push(wrap(7, criterion7()), &mut out);
    push(wrap(8, criterion8()), &mut out);
    let o9 = {
        let firsts: Vec<&Outcome> = out.iter().filter(|o| matches!(o.id, 1 | 4 | 5)).collect();
        wrap(9, criterion9(&firsts))
    };
    push(o9, &mut out);
    out
}
