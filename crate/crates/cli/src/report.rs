//! Run reports: per-trial records, summaries, and rendering.
//!
//! Every check a suite performs becomes one [`TrialRecord`] with a
//! measured `violation`, the `budget` it is held to, and named metric
//! values. A record passes iff `violation <= budget`; the report passes
//! iff every record does. Rendering is deterministic: records are kept in
//! trial order, metric maps are sorted, and the wall-time field is the
//! only part of a report that varies between identical runs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{ExperimentConfig, ReportFormat};

/// One verified postcondition of one trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    /// Trial index within the command (sorted ascending in reports).
    pub trial: usize,
    /// Which postcondition this record verifies.
    pub check: String,
    /// Instance description (dimensions, parameters, error messages).
    pub detail: String,
    /// Named measured values backing the verdict.
    pub metrics: BTreeMap<String, f64>,
    /// Measured violation; the record passes iff it is at most `budget`.
    pub violation: f64,
    /// Tolerance this check is held to.
    pub budget: f64,
    pub pass: bool,
}

impl TrialRecord {
    /// Record with a measured violation, passing iff within budget.
    pub fn measured(
        trial: usize,
        check: &str,
        detail: String,
        metrics: BTreeMap<String, f64>,
        violation: f64,
        budget: f64,
    ) -> Self {
        Self {
            trial,
            check: check.to_string(),
            detail,
            metrics,
            violation,
            budget,
            pass: violation <= budget,
        }
    }

    /// Failing record for a trial whose computation errored out; the
    /// batch keeps running.
    pub fn failed(trial: usize, check: &str, budget: f64, message: &str) -> Self {
        Self {
            trial,
            check: check.to_string(),
            detail: format!("error: {message}"),
            metrics: BTreeMap::new(),
            violation: f64::INFINITY,
            budget,
            pass: false,
        }
    }
}

/// Aggregate verdict over all records of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub records: usize,
    pub failures: usize,
    /// Largest violation per check name (the budgets are per record, but
    /// within one check they coincide).
    pub max_violation_by_check: BTreeMap<String, f64>,
    /// Largest `violation - budget` over all records; the run passes iff
    /// this is at most zero.
    pub worst_margin: f64,
    pub pass: bool,
}

/// A full experiment report: the configuration echo, every record, the
/// summary, and the wall time (the only nondeterministic field).
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
    pub wall_time_s: f64,
}

impl RunReport {
    /// Assembles a report from records, computing the summary. The wall
    /// time starts at zero; the runner fills it in.
    pub fn assemble(config: ExperimentConfig, records: Vec<TrialRecord>) -> Self {
        let mut by_check: BTreeMap<String, f64> = BTreeMap::new();
        let mut worst = f64::NEG_INFINITY;
        let mut failures = 0usize;
        for r in &records {
            let entry = by_check.entry(r.check.clone()).or_insert(f64::NEG_INFINITY);
            *entry = entry.max(r.violation);
            worst = worst.max(r.violation - r.budget);
            if !r.pass {
                failures += 1;
            }
        }
        if records.is_empty() {
            worst = 0.0;
        }
        let summary = Summary {
            records: records.len(),
            failures,
            max_violation_by_check: by_check,
            worst_margin: worst,
            pass: failures == 0,
        };
        Self {
            config,
            records,
            summary,
            wall_time_s: 0.0,
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.render_text(),
            ReportFormat::Json => self.render_json(),
            ReportFormat::Csv => self.render_csv(),
        }
    }

    fn json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("reports serialize")
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json_value()).expect("reports serialize");
        s.push('\n');
        s
    }

    /// JSON rendering with the wall-time field removed; two runs of the
    /// same configuration produce identical output here.
    pub fn render_json_modulo_wall_time(&self) -> String {
        let mut v = self.json_value();
        v.as_object_mut()
            .expect("report is a JSON object")
            .remove("wall_time_s");
        let mut s = serde_json::to_string_pretty(&v).expect("reports serialize");
        s.push('\n');
        s
    }

    /// CSV rendering: one row per record; metric columns are the sorted
    /// union of all metric names, blank where a record lacks one.
    pub fn render_csv(&self) -> String {
        let mut metric_names: Vec<String> = Vec::new();
        {
            let mut seen = std::collections::BTreeSet::new();
            for r in &self.records {
                for k in r.metrics.keys() {
                    seen.insert(k.clone());
                }
            }
            metric_names.extend(seen);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "trial".to_string(),
            "check".to_string(),
            "detail".to_string(),
            "violation".to_string(),
            "budget".to_string(),
            "pass".to_string(),
        ];
        header.extend(metric_names.iter().cloned());
        w.write_record(&header).expect("csv write");
        for r in &self.records {
            let mut row = vec![
                r.trial.to_string(),
                r.check.clone(),
                r.detail.clone(),
                format!("{:e}", r.violation),
                format!("{:e}", r.budget),
                r.pass.to_string(),
            ];
            for name in &metric_names {
                row.push(r.metrics.get(name).map_or(String::new(), |v| format!("{v:.17e}")));
            }
            w.write_record(&row).expect("csv write");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
    }

    pub fn render_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(s, "crlab {}", c.command.name());
        let _ = writeln!(
            s,
            "  kernel {}   seed {}   trials {}   d<={} n<={} N<={}",
            c.kernel, c.seed, c.trials, c.d, c.n, c.big_n
        );
        let _ = writeln!(
            s,
            "  tol {:e}   bisection tol {:e}",
            c.tol, c.bisection_tol
        );
        let _ = writeln!(
            s,
            "  records {}   failures {}",
            self.summary.records, self.summary.failures
        );
        let _ = writeln!(s, "  max violation by check:");
        for (check, max_violation) in &self.summary.max_violation_by_check {
            let budget = self
                .records
                .iter()
                .find(|r| &r.check == check)
                .map_or(f64::NAN, |r| r.budget);
            let _ = writeln!(
                s,
                "    {check}: {max_violation:.3e} (budget {budget:.3e})"
            );
        }
        // Reproduction runs are small; show every record. Suites show
        // only failing records, capped.
        let show_all = self.records.len() <= 16;
        let mut shown = 0usize;
        for r in &self.records {
            if !show_all && r.pass {
                continue;
            }
            if shown >= 24 {
                let _ = writeln!(s, "    ... further failing records elided");
                break;
            }
            let verdict = if r.pass { "pass" } else { "FAIL" };
            let _ = writeln!(
                s,
                "  [{verdict}] trial {} {}: {}  violation {:.3e} budget {:.3e}",
                r.trial, r.check, r.detail, r.violation, r.budget
            );
            for (k, v) in &r.metrics {
                let _ = writeln!(s, "        {k} = {v:.12}");
            }
            shown += 1;
        }
        let _ = writeln!(
            s,
            "  result: {}   (wall time {:.2} s)",
            if self.summary.pass { "PASS" } else { "FAIL" },
            self.wall_time_s
        );
        s
    }
}
