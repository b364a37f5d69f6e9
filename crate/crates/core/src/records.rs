//! Persisted result records and their renderings.
//!
//! One JSON object per line, one line per ensemble. Every record carries the
//! artifact version and the fully resolved configuration, so a file is
//! enough to reproduce itself.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{Experiment, RunConfig};
use crate::entropy::ErasureReport;
use crate::error::{Error, Result};
use crate::harness::{
    bit_report, capacitor_experiment, capacitor_report, capacitor_sweep,
    error_vs_dissipation_experiment, mfpt_experiment, passive_ite_experiment, reset_experiment,
    EnsembleStats, ExperimentOutcome, SweepResult,
};
use crate::protocols::{deterministic_data_audit, DataAudit};
use crate::VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub seed: u64,
    pub n: u64,
    pub mean_work: Option<f64>,
    pub stderr_work: Option<f64>,
    pub mean_heat: Option<f64>,
    pub stderr_heat: Option<f64>,
    pub final_p1: Option<f64>,
    pub stderr_p1: Option<f64>,
    pub error_prob: Option<f64>,
    pub delta_s_info_bits: Option<f64>,
    pub landauer_min_heat: Option<f64>,
    pub verdict: Option<String>,
    pub stderr_error_prob: Option<f64>,
    pub initial_p1: Option<f64>,
    pub max_first_law_residual: Option<f64>,
    pub axis: Option<String>,
    pub axis_value: Option<f64>,
    pub mfpt: Option<f64>,
    pub stderr_mfpt: Option<f64>,
    pub crossings: Option<u64>,
    pub inconclusive: bool,
    pub fit_slope: Option<f64>,
    pub stderr_fit_slope: Option<f64>,
    pub ones_fraction: Option<f64>,
    pub entropy_bits_per_bit: Option<f64>,
    pub description_cost_bits: Option<f64>,
    pub version: String,
    pub config: RunConfig,
}

impl ResultRecord {
    fn blank(config: &RunConfig, n: u64) -> Self {
        ResultRecord {
            experiment: config.run.experiment.as_str().to_string(),
            seed: config.run.master_seed,
            n,
            mean_work: None,
            stderr_work: None,
            mean_heat: None,
            stderr_heat: None,
            final_p1: None,
            stderr_p1: None,
            error_prob: None,
            delta_s_info_bits: None,
            landauer_min_heat: None,
            verdict: None,
            stderr_error_prob: None,
            initial_p1: None,
            max_first_law_residual: None,
            axis: None,
            axis_value: None,
            mfpt: None,
            stderr_mfpt: None,
            crossings: None,
            inconclusive: false,
            fit_slope: None,
            stderr_fit_slope: None,
            ones_fraction: None,
            entropy_bits_per_bit: None,
            description_cost_bits: None,
            version: VERSION.to_string(),
            config: config.clone(),
        }
    }

    fn with_stats(mut self, stats: &EnsembleStats) -> Self {
        self.mean_work = Some(stats.work.mean);
        self.stderr_work = Some(stats.work.stderr);
        self.mean_heat = Some(stats.heat_to_bath.mean);
        self.stderr_heat = Some(stats.heat_to_bath.stderr);
        self.final_p1 = stats.final_p1.map(|e| e.mean);
        self.stderr_p1 = stats.final_p1.map(|e| e.stderr);
        self.initial_p1 = stats.initial_p1.map(|e| e.mean);
        self.error_prob = stats.error_probability.map(|e| e.mean);
        self.stderr_error_prob = stats.error_probability.map(|e| e.stderr);
        self.max_first_law_residual = Some(stats.max_first_law_residual);
        self
    }

    fn with_report(mut self, report: &ErasureReport) -> Self {
        self.delta_s_info_bits = Some(report.delta_s_info);
        self.landauer_min_heat = Some(report.landauer_min_heat);
        self.verdict = Some(report.verdict.as_str().to_string());
        self
    }

    pub fn from_outcome(config: &RunConfig, out: &ExperimentOutcome) -> Self {
        Self::blank(config, out.stats.n_trajectories)
            .with_stats(&out.stats)
            .with_report(&out.report)
    }

    pub fn from_audit(config: &RunConfig, audit: &DataAudit) -> Self {
        let mut r = Self::blank(config, audit.n_bits);
        r.ones_fraction = Some(audit.ones_fraction);
        r.entropy_bits_per_bit = Some(audit.empirical_entropy_bits_per_bit);
        r.description_cost_bits = Some(audit.description_cost_bits);
        r
    }

    /// One record per sweep row, in grid order.
    pub fn from_sweep(config: &RunConfig, sweep: &SweepResult) -> Result<Vec<Self>> {
        let bath = config.bath()?;
        sweep
            .rows
            .iter()
            .map(|row| {
                let mut r = Self::blank(config, row.stats.n_trajectories).with_stats(&row.stats);
                r = match config.run.experiment {
                    Experiment::ErrorVsDissipation => {
                        r.with_report(&bit_report(&row.stats, &bath)?)
                    }
                    Experiment::CapacitorSweep => {
                        r.with_report(&capacitor_report(&row.stats, &bath)?)
                    }
                    _ => r,
                };
                r.axis = Some(sweep.axis.clone());
                r.axis_value = Some(row.value);
                r.mfpt = row.mfpt.map(|e| e.mean);
                r.stderr_mfpt = row.mfpt.map(|e| e.stderr);
                r.crossings = row.crossings;
                r.inconclusive = row.inconclusive;
                r.fit_slope = sweep.fit.map(|f| f.slope);
                r.stderr_fit_slope = sweep.fit.map(|f| f.slope_stderr);
                Ok(r)
            })
            .collect()
    }

    pub fn to_json_line(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Io(format!("cannot encode record: {e}")))
    }
}

/// Execute the configured experiment and produce its records.
pub fn execute(config: &RunConfig, workers: usize) -> Result<Vec<ResultRecord>> {
    let run = config.run_settings(workers);
    match config.run.experiment {
        Experiment::PassiveIte => {
            let out = passive_ite_experiment(&config.passive_config()?, &run)?;
            Ok(vec![ResultRecord::from_outcome(config, &out)])
        }
        Experiment::Reset => {
            let out = reset_experiment(&config.well_setup()?, &config.reset_params(), &run)?;
            Ok(vec![ResultRecord::from_outcome(config, &out)])
        }
        Experiment::CapacitorIte => {
            let out = capacitor_experiment(&config.capacitor_config()?, &run)?;
            Ok(vec![ResultRecord::from_outcome(config, &out)])
        }
        Experiment::PiAudit => {
            let audit = deterministic_data_audit(config.pi.n_bits)?;
            Ok(vec![ResultRecord::from_audit(config, &audit)])
        }
        Experiment::Mfpt => {
            let sweep = mfpt_experiment(
                config.sweep_values(),
                &config.potential()?,
                config.bath.gamma,
                config.run.n_trajectories,
                config.step.step_budget,
                config.step.dt,
                config.run.master_seed,
                workers,
            )?;
            ResultRecord::from_sweep(config, &sweep)
        }
        Experiment::ErrorVsDissipation => {
            let sweep = error_vs_dissipation_experiment(
                config.sweep_values(),
                &config.well_setup()?,
                &config.reset_params(),
                &run,
            )?;
            ResultRecord::from_sweep(config, &sweep)
        }
        Experiment::CapacitorSweep => {
            let sweep = capacitor_sweep(config.sweep_values(), &config.capacitor_config()?, &run)?;
            ResultRecord::from_sweep(config, &sweep)
        }
    }
}

pub fn to_jsonl(records: &[ResultRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line()?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<ResultRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::Usage(format!("line {}: not a result record: {e}", i + 1)))
        })
        .collect()
}

/// CSV column order.
pub const CSV_COLUMNS: [&str; 20] = [
    "experiment",
    "seed",
    "n",
    "mean_work",
    "stderr_work",
    "mean_heat",
    "stderr_heat",
    "final_p1",
    "stderr_p1",
    "error_prob",
    "delta_s_info_bits",
    "landauer_min_heat",
    "verdict",
    "stderr_error_prob",
    "axis",
    "axis_value",
    "mfpt",
    "stderr_mfpt",
    "inconclusive",
    "description_cost_bits",
];

/// 17 significant digits: round-trips every `f64`.
fn float17(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.16e}"))
}

pub fn to_csv(records: &[ResultRecord]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let cells = [
            r.experiment.clone(),
            r.seed.to_string(),
            r.n.to_string(),
            float17(r.mean_work),
            float17(r.stderr_work),
            float17(r.mean_heat),
            float17(r.stderr_heat),
            float17(r.final_p1),
            float17(r.stderr_p1),
            float17(r.error_prob),
            float17(r.delta_s_info_bits),
            float17(r.landauer_min_heat),
            r.verdict.clone().unwrap_or_default(),
            float17(r.stderr_error_prob),
            r.axis.clone().unwrap_or_default(),
            float17(r.axis_value),
            float17(r.mfpt),
            float17(r.stderr_mfpt),
            r.inconclusive.to_string(),
            float17(r.description_cost_bits),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn cell(v: Option<f64>, se: Option<f64>) -> String {
    match (v, se) {
        (Some(v), Some(se)) => format!("{v:.4} ± {se:.4}"),
        (Some(v), None) => format!("{v:.4}"),
        _ => "-".to_string(),
    }
}

pub fn to_table(records: &[ResultRecord]) -> String {
    let header = [
        "experiment",
        "axis",
        "value",
        "n",
        "work",
        "heat",
        "final_p1",
        "error",
        "dS_info",
        "bound",
        "verdict",
    ];
    let rows: Vec<[String; 11]> = records
        .iter()
        .map(|r| {
            [
                r.experiment.clone(),
                r.axis.clone().unwrap_or_else(|| "-".into()),
                cell(r.axis_value, None),
                r.n.to_string(),
                cell(r.mean_work, r.stderr_work),
                cell(r.mean_heat, r.stderr_heat),
                cell(r.final_p1, r.stderr_p1),
                cell(r.error_prob, r.stderr_error_prob),
                cell(r.delta_s_info_bits, None),
                cell(r.landauer_min_heat, None),
                match (&r.verdict, r.inconclusive) {
                    (_, true) => "inconclusive".into(),
                    (Some(v), _) => v.clone(),
                    (None, _) => "-".into(),
                },
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut out, &mut header.iter().copied());
    for row in &rows {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    for r in records.iter().filter(|r| r.ones_fraction.is_some()) {
        let _ = writeln!(
            out,
            "{}: n_bits={} ones_fraction={:.6} entropy={:.6} bits/bit description_cost={:.4} bits",
            r.experiment,
            r.n,
            r.ones_fraction.unwrap_or(f64::NAN),
            r.entropy_bits_per_bit.unwrap_or(f64::NAN),
            r.description_cost_bits.unwrap_or(f64::NAN),
        );
    }
    if let Some(r) = records.iter().find(|r| r.fit_slope.is_some()) {
        let _ = writeln!(
            out,
            "fit: slope = {:.4} ± {:.4}",
            r.fit_slope.unwrap_or(f64::NAN),
            r.stderr_fit_slope.unwrap_or(f64::NAN)
        );
    }
    out
}

/// Two-column `x y err` tables, one block per sweep relation.
pub fn to_plot(records: &[ResultRecord]) -> String {
    let mut out = String::new();
    let mut groups: Vec<(&str, Vec<&ResultRecord>)> = Vec::new();
    for r in records.iter().filter(|r| r.axis.is_some()) {
        match groups.iter_mut().find(|(e, _)| *e == r.experiment) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.experiment.as_str(), vec![r])),
        }
    }
    for (experiment, rows) in groups {
        type Point = fn(&ResultRecord) -> Option<(f64, f64, f64)>;
        let (title, cols, point): (&str, &str, Point) = match experiment {
            "mfpt" => ("ln MFPT vs E/kT", "barrier_over_kbt ln_mfpt err", |r| {
                let (m, se) = (r.mfpt?, r.stderr_mfpt?);
                Some((r.axis_value?, m.ln(), se / m))
            }),
            "error-vs-dissipation" => (
                "error probability vs mean heat",
                "mean_heat error_prob err",
                |r| Some((r.mean_heat?, r.error_prob?, r.stderr_error_prob?)),
            ),
            _ => ("mean heat vs axis", "axis_value mean_heat err", |r| {
                Some((r.axis_value?, r.mean_heat?, r.stderr_heat?))
            }),
        };
        let _ = writeln!(out, "# {experiment}: {title}");
        let _ = writeln!(out, "# {cols}");
        for r in rows {
            match point(r) {
                Some((x, y, e)) if !r.inconclusive => {
                    let _ = writeln!(out, "{x:.16e} {y:.16e} {e:.16e}");
                }
                _ => {}
            }
        }
        out.push('\n');
    }
    if out.is_empty() {
        out.push_str("# no sweep relations in input\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn pi_record() -> ResultRecord {
        let cfg = parse_config("[run]\nexperiment = \"pi-audit\"\n[pi]\nn_bits = 1000\n").unwrap();
        execute(&cfg, 1).unwrap().remove(0)
    }

    #[test]
    fn jsonl_round_trip() {
        let r = pi_record();
        let text = to_jsonl(&[r.clone(), r.clone()]).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_jsonl(&text).unwrap(), vec![r.clone(), r]);
    }

    #[test]
    fn record_has_stable_field_names() {
        let v: serde_json::Value =
            serde_json::from_str(&pi_record().to_json_line().unwrap()).unwrap();
        for key in [
            "experiment",
            "seed",
            "n",
            "mean_work",
            "stderr_work",
            "mean_heat",
            "stderr_heat",
            "final_p1",
            "stderr_p1",
            "error_prob",
            "delta_s_info_bits",
            "landauer_min_heat",
            "verdict",
            "version",
            "config",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v.get("wall_time").is_none());
    }

    #[test]
    fn csv_floats_round_trip() {
        let mut r = pi_record();
        r.mean_heat = Some(0.1 + 0.2);
        let csv = to_csv(&[r.clone()]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), CSV_COLUMNS.len());
        let heat: f64 = row[5].parse().unwrap();
        assert_eq!(heat.to_bits(), (0.1f64 + 0.2).to_bits());
        let cost: f64 = row[19].parse().unwrap();
        assert_eq!(cost.to_bits(), r.description_cost_bits.unwrap().to_bits());
    }

    #[test]
    fn capacitor_sweep_records_follow_grid() {
        let text = "[run]\nexperiment = \"capacitor-sweep\"\nn_trajectories = 50\n\
                    [sweep]\nvalues = [0.0, 1.0, 2.0]\n";
        let cfg = parse_config(text).unwrap();
        let recs = execute(&cfg, 1).unwrap();
        assert_eq!(recs.len(), 3);
        let xs: Vec<f64> = recs.iter().map(|r| r.axis_value.unwrap()).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0]);
        let plot = to_plot(&recs);
        assert_eq!(
            plot.lines()
                .filter(|l| !l.starts_with('#') && !l.is_empty())
                .count(),
            3
        );
        assert!(to_table(&recs).lines().count() >= 4);
    }
}
