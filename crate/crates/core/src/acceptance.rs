//! Built-in acceptance suite.
//!
//! Each criterion runs a fixed experiment and checks it against a
//! closed-form or simulation oracle. Output is one line per criterion with
//! the `PASS` / `FAIL` / `INCONCLUSIVE` token first.

use std::f64::consts::LN_2;
use std::fmt;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::{evolve_trajectory, Physics, StepParams, DEFAULT_STEP_BUDGET};
use crate::entropy::Verdict;
use crate::error::{Error, Result};
use crate::harness::{
    capacitor_sweep, collect_ordered, error_vs_dissipation_experiment, mfpt_experiment,
    passive_ite_experiment, reset_experiment, CapacitorIteConfig, PassiveIteConfig, ResetParams,
    RunSettings, WellSetup,
};
use crate::model::{
    AttemptTime, BathParams, CapacitorSpec, ControlState, PotentialSpec, TwoStateSpec,
};
use crate::protocols::{deterministic_data_audit, pi_bits, ControlPoint, ProtocolSchedule};
use crate::rng::StreamRng;

/// Every criterion, in report order.
pub const ALL: [&str; 9] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9"];
/// Subset run by `validate --quick`.
pub const QUICK: [&str; 3] = ["A1", "A4", "A6"];
/// Default master seed for the suite.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Reset schedule used by A2 and A8.
pub const RESET_BARRIER: f64 = 6.0;
pub const RESET_LOWER_FRACTION: f64 = 0.85;
pub const RESET_TILT_PEAK: f64 = 10.0;
pub const RESET_DURATION: f64 = 150.0;
pub const TRADEOFF_DURATIONS: [f64; 5] = [0.03, 0.1, 0.3, 1.0, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub status: Status,
    pub detail: String,
    /// Canonical serialization of everything the criterion measured.
    pub persisted: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.status.as_str(), self.id, self.detail)
    }
}

struct Measured {
    pass: bool,
    detail: String,
    persisted: String,
}

fn measured(pass: bool, detail: String, record: &impl Serialize) -> Result<Measured> {
    let persisted = serde_json::to_string(record)
        .map_err(|e| Error::Io(format!("cannot encode measurement: {e}")))?;
    Ok(Measured {
        pass,
        detail,
        persisted,
    })
}

fn run_settings(n: u64, seed: u64, workers: usize) -> RunSettings {
    RunSettings {
        n_trajectories: n,
        master_seed: seed,
        workers,
    }
}

fn reset_setup() -> Result<WellSetup> {
    Ok(WellSetup::new(
        PotentialSpec::new(RESET_BARRIER, 1.0)?,
        BathParams::default(),
    ))
}

/// A1: passive thermalization of an all-1 ensemble.
fn a1(seed: u64, workers: usize) -> Result<Measured> {
    let spec = PotentialSpec::new(4.0, 1.0)?;
    let bath = BathParams::default();
    let cfg = PassiveIteConfig {
        physics: Physics::Langevin(spec),
        bath,
        barrier_height: spec.barrier_height,
        tau0: AttemptTime(1.0),
        wait_multiplier: 20.0,
        hold: ControlState::NOMINAL,
        dt: spec.max_stable_dt(&bath),
        step_budget: DEFAULT_STEP_BUDGET,
        pre_equilibration: None,
    };
    let out = passive_ite_experiment(&cfg, &run_settings(10_000, seed, workers))?;
    let s = &out.stats;
    let p1 = s.final_p1.expect("langevin has a bit readout");
    let work_zero = s.work.mean == 0.0 && s.work.stderr == 0.0;
    let heat = s.heat_to_bath;
    let heat_ok = heat.mean.abs() <= (3.0 * heat.stderr).max(0.05 * bath.kbt);
    let ds_ok = (out.report.delta_s_info - 1.0).abs() <= 0.01;
    let p1_ok = (0.48..=0.52).contains(&p1.mean);
    let verdict_ok = out.report.verdict == Verdict::BoundVacuous;
    let detail = format!(
        "passive ITE: work={} p1={:.4} dS={:.5} heat={:.4}±{:.4} verdict={}",
        s.work.mean,
        p1.mean,
        out.report.delta_s_info,
        heat.mean,
        heat.stderr,
        out.report.verdict.as_str()
    );
    measured(
        work_zero && heat_ok && ds_ok && p1_ok && verdict_ok,
        detail,
        &out,
    )
}

/// A2: slow reset of a randomized bit.
fn a2(seed: u64, workers: usize) -> Result<Measured> {
    let reset = ResetParams {
        duration: RESET_DURATION,
        lower_fraction: RESET_LOWER_FRACTION,
        tilt_peak: RESET_TILT_PEAK,
    };
    let out = reset_experiment(
        &reset_setup()?,
        &reset,
        &run_settings(10_000, seed, workers),
    )?;
    let heat = out.stats.heat_to_bath.mean;
    let err = out
        .stats
        .error_probability
        .expect("reset has a target")
        .mean;
    let pass = (LN_2..=1.5 * LN_2).contains(&heat) && err <= 0.05;
    let detail = format!(
        "quasi-static reset: heat={heat:.4} in [{LN_2:.4}, {:.4}] error={err:.4} verdict={}",
        1.5 * LN_2,
        out.report.verdict.as_str()
    );
    measured(pass, detail, &out)
}

/// A3: capacitor thermalization across stored energies.
fn a3(seed: u64, workers: usize) -> Result<Measured> {
    let bath = BathParams::default();
    let cfg = CapacitorIteConfig {
        spec: CapacitorSpec::new(1.0, 1.0, 0.0)?,
        bath,
        settle_multiplier: 10.0,
        switch_cost: 0.0,
    };
    let energies = [0.0, 0.25, 0.5, 1.0, 2.0];
    let sweep = capacitor_sweep(&energies, &cfg, &run_settings(100_000, seed, workers))?;
    let mut pass = true;
    let mut parts = Vec::new();
    for row in &sweep.rows {
        let h = row.stats.heat_to_bath;
        let oracle = row.value - 0.5 * bath.kbt;
        let within = (h.mean - oracle).abs() <= 3.0 * h.stderr;
        let half = 0.5 * bath.kbt;
        let sign_ok = if row.value < half {
            h.mean + 3.0 * h.stderr < 0.0
        } else if row.value > half {
            h.mean - 3.0 * h.stderr > 0.0
        } else {
            h.mean.abs() <= 3.0 * h.stderr
        };
        pass &= within && sign_ok;
        parts.push(format!("{}:{:.4}", row.value, h.mean));
    }
    let detail = format!("capacitor heat vs E-kT/2: {}", parts.join(" "));
    measured(pass, detail, &sweep)
}

fn uniform_in(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

/// One randomized single-trajectory configuration of 1000 steps.
fn random_ledger_residual(seed: u64, i: u64) -> Result<f64> {
    const STEPS: f64 = 1000.0;
    let mut rng = StreamRng::new((seed ^ 0x5eed_a4a4, i));
    let bath = BathParams::new(
        uniform_in(&mut rng, 0.5, 2.0),
        uniform_in(&mut rng, 0.5, 2.0),
    )?;
    let (physics, dt, initial, tilt_span) = match i % 4 {
        0 | 1 => {
            let spec = PotentialSpec::new(
                uniform_in(&mut rng, 1.0, 10.0),
                uniform_in(&mut rng, 0.5, 2.0),
            )?;
            let dt = spec.max_stable_dt(&bath) * uniform_in(&mut rng, 0.2, 1.0);
            let x = spec.well_halfwidth * uniform_in(&mut rng, -2.0, 2.0);
            (Physics::Langevin(spec), dt, x, 5.0)
        }
        2 => {
            let spec = TwoStateSpec::new(uniform_in(&mut rng, 0.1, 1.0), 0.5)?;
            let dt = 0.02 / spec.rate;
            let bit = if rng.coin() { 1.0 } else { 0.0 };
            (Physics::TwoState(spec), dt, bit, 1.0)
        }
        _ => {
            let spec = CapacitorSpec::new(
                uniform_in(&mut rng, 0.5, 2.0),
                uniform_in(&mut rng, 0.5, 2.0),
                uniform_in(&mut rng, -3.0, 3.0),
            )?;
            let dt = spec.time_constant() * uniform_in(&mut rng, 0.001, 0.05);
            let switch_cost = uniform_in(&mut rng, 0.0, 1.0);
            (
                Physics::Capacitor { spec, switch_cost },
                dt,
                spec.setpoint_voltage,
                0.0,
            )
        }
    };
    let duration = STEPS * dt;
    let points = (0..4)
        .map(|k| {
            ControlPoint::new(
                duration * k as f64 / 3.0,
                rng.uniform(),
                uniform_in(&mut rng, -tilt_span, tilt_span),
            )
        })
        .collect();
    let schedule = ProtocolSchedule::new(points)?;
    let ledger = evolve_trajectory(
        initial,
        &schedule,
        &physics,
        &StepParams::endpoints(dt)?,
        &bath,
        (seed, i),
    )?;
    Ok(ledger.first_law_residual())
}

/// A4: first-law residual over randomized configurations.
fn a4(seed: u64, workers: usize) -> Result<Measured> {
    let residuals = collect_ordered(100, workers, |i| random_ledger_residual(seed, i))?;
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let detail =
        format!("first-law ledger: max |dU - W + Q| = {worst:.3e} over 100 configs x 1e3 steps");
    measured(worst <= 1e-12, detail, &residuals)
}

/// A5: Kramers exponent from the MFPT sweep.
fn a5(seed: u64, workers: usize) -> Result<Measured> {
    let spec = PotentialSpec::new(4.0, 1.0)?;
    let ratios = [4.0, 5.0, 6.0, 7.0, 8.0];
    let sweep = mfpt_experiment(
        &ratios,
        &spec,
        1.0,
        500,
        DEFAULT_STEP_BUDGET,
        None,
        seed,
        workers,
    )?;
    if let Some(row) = sweep.rows.iter().find(|r| r.inconclusive) {
        return Err(Error::Inconclusive(format!(
            "E/kT = {}: {} of 500 crossings",
            row.value,
            row.crossings.unwrap_or(0)
        )));
    }
    let all_crossed = sweep.rows.iter().all(|r| r.crossings == Some(500));
    let fit = sweep
        .fit
        .ok_or_else(|| Error::Inconclusive("no MFPT fit".into()))?;
    let detail = format!(
        "Kramers scaling: slope of ln MFPT vs E/kT = {:.4} ± {:.4}",
        fit.slope, fit.slope_stderr
    );
    measured(
        all_crossed && (fit.slope - 1.0).abs() <= 0.1,
        detail,
        &sweep,
    )
}

/// Probability mass of `exp(-U/kT)` on `[a, b]` by composite Simpson.
fn boltzmann_mass(spec: &PotentialSpec, c: ControlState, kbt: f64, a: f64, b: f64) -> f64 {
    const M: usize = 256;
    let h = (b - a) / M as f64;
    let f = |x: f64| (-spec.energy(c, x) / kbt).exp();
    let mut s = f(a) + f(b);
    for k in 1..M {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

#[derive(Serialize)]
struct EquilibriumRecord {
    ou_variance: f64,
    ou_target: f64,
    chi2: f64,
    dof: usize,
    p_value: f64,
    counts: Vec<u64>,
}

/// A6: stationary OU variance and Boltzmann histogram of the double well.
fn a6(seed: u64, workers: usize) -> Result<Measured> {
    let bath = BathParams::default();

    let cap = CapacitorSpec::new(2.0, 1.0, 0.0)?;
    let rc = cap.time_constant();
    let physics = Physics::Capacitor {
        spec: cap,
        switch_cost: 0.0,
    };
    let schedule = ProtocolSchedule::constant(ControlState::NOMINAL, 10.0 * rc)?;
    let step = StepParams::endpoints(rc / 10.0)?;
    let volts = collect_ordered(100_000, workers, |i| {
        Ok(evolve_trajectory(0.0, &schedule, &physics, &step, &bath, (seed, i))?.final_state())
    })?;
    let n = volts.len() as f64;
    let mean = volts.iter().sum::<f64>() / n;
    let var = volts.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let target = bath.kbt / cap.capacitance;
    let ou_ok = (var / target - 1.0).abs() <= 0.01;

    let spec = PotentialSpec::new(4.0, 1.0)?;
    let hold = ControlState {
        barrier_scale: 0.25,
        tilt: 0.3,
    };
    let physics = Physics::Langevin(spec);
    let schedule = ProtocolSchedule::constant(hold, 30.0)?;
    let step = StepParams::endpoints(0.001)?;
    let xs = collect_ordered(10_000, workers, |i| {
        let start = if i % 2 == 0 { 1.0 } else { -1.0 };
        let seed_path = (seed ^ 0xb017_2a77, i);
        Ok(evolve_trajectory(start, &schedule, &physics, &step, &bath, seed_path)?.final_state())
    })?;
    let (lo, hi, bins) = (-1.6, 1.6, 32usize);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in &xs {
        let k = ((x - lo) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[k] += 1;
    }
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut mass: Vec<f64> = edges
        .windows(2)
        .map(|w| boltzmann_mass(&spec, hold, bath.kbt, w[0], w[1]))
        .collect();
    mass[0] += boltzmann_mass(&spec, hold, bath.kbt, lo - 4.0, lo);
    mass[bins - 1] += boltzmann_mass(&spec, hold, bath.kbt, hi, hi + 4.0);
    let z: f64 = mass.iter().sum();
    let total = xs.len() as f64;
    let chi2: f64 = counts
        .iter()
        .zip(&mass)
        .map(|(&o, &m)| {
            let e = total * m / z;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    let p_value = dist.sf(chi2);
    let detail = format!(
        "equilibrium: OU var={var:.5} (target {target}) Boltzmann chi2={chi2:.2} dof={dof} p={p_value:.4}"
    );
    let record = EquilibriumRecord {
        ou_variance: var,
        ou_target: target,
        chi2,
        dof,
        p_value,
        counts,
    };
    measured(ou_ok && p_value > 0.01, detail, &record)
}

#[derive(Serialize)]
struct AuditRecord {
    ones_fraction: f64,
    entropy_bits_per_bit: f64,
    description_cost_bits: f64,
    prefix: String,
}

/// A7: entropy of the pi bit stream versus its description cost.
fn a7(_seed: u64, _workers: usize) -> Result<Measured> {
    let audit = deterministic_data_audit(10_000)?;
    let head = pi_bits(32)?;
    let word = head.iter().fold(0u32, |w, &b| (w << 1) | b as u32);
    let prefix = format!("{word:08X}");
    let cost_target = 10_000f64.log2();
    let pass = (0.99..=1.0).contains(&audit.empirical_entropy_bits_per_bit)
        && (audit.description_cost_bits - cost_target).abs() <= 1e-12
        && word == 0x243F_6A88;
    let detail = format!(
        "pi audit: entropy={:.6} bits/bit description_cost={:.4} bits prefix={prefix}",
        audit.empirical_entropy_bits_per_bit, audit.description_cost_bits
    );
    let record = AuditRecord {
        ones_fraction: audit.ones_fraction,
        entropy_bits_per_bit: audit.empirical_entropy_bits_per_bit,
        description_cost_bits: audit.description_cost_bits,
        prefix,
    };
    measured(pass, detail, &record)
}

/// A8: error probability against reset duration.
fn a8(seed: u64, workers: usize) -> Result<Measured> {
    let reset = ResetParams {
        duration: TRADEOFF_DURATIONS[0],
        lower_fraction: RESET_LOWER_FRACTION,
        tilt_peak: RESET_TILT_PEAK,
    };
    let sweep = error_vs_dissipation_experiment(
        &TRADEOFF_DURATIONS,
        &reset_setup()?,
        &reset,
        &run_settings(10_000, seed, workers),
    )?;
    let errs: Vec<_> = sweep
        .rows
        .iter()
        .map(|r| r.stats.error_probability.expect("reset has a target"))
        .collect();
    let first = errs.first().expect("grid is non-empty").mean;
    let last = errs.last().expect("grid is non-empty").mean;
    let monotone = errs
        .windows(2)
        .all(|w| w[1].mean <= w[0].mean + 2.0 * (w[0].stderr.hypot(w[1].stderr)));
    let pass = first >= 0.4 && last <= 0.05 && monotone;
    let trend: Vec<String> = sweep
        .rows
        .iter()
        .zip(&errs)
        .map(|(r, e)| format!("{}:{:.4}", r.value, e.mean))
        .collect();
    let detail = format!("error vs duration: {}", trend.join(" "));
    measured(pass, detail, &sweep)
}

fn measure(id: &str, seed: u64, workers: usize) -> Result<Measured> {
    match id {
        "A1" => a1(seed, workers),
        "A2" => a2(seed, workers),
        "A3" => a3(seed, workers),
        "A4" => a4(seed, workers),
        "A5" => a5(seed, workers),
        "A6" => a6(seed, workers),
        "A7" => a7(seed, workers),
        "A8" => a8(seed, workers),
        other => Err(Error::Usage(format!("unknown criterion `{other}`"))),
    }
}

fn criterion_id(id: &str) -> Result<&'static str> {
    ALL.iter()
        .copied()
        .find(|c| *c == id)
        .ok_or_else(|| Error::Usage(format!("unknown criterion `{id}`")))
}

/// Run one measurable criterion (A1 to A8).
pub fn run_criterion(id: &str, seed: u64, workers: usize) -> Result<CriterionResult> {
    let id = criterion_id(id)?;
    Ok(match measure(id, seed, workers) {
        Ok(m) => CriterionResult {
            id,
            status: if m.pass { Status::Pass } else { Status::Fail },
            detail: m.detail,
            persisted: m.persisted,
        },
        Err(e @ Error::Inconclusive(_)) => CriterionResult {
            id,
            status: Status::Inconclusive,
            detail: e.to_string(),
            persisted: e.to_string(),
        },
        Err(e) => CriterionResult {
            id,
            status: Status::Fail,
            detail: e.to_string(),
            persisted: e.to_string(),
        },
    })
}

/// Worker count used for the reproducibility rerun.
pub fn alternate_workers(workers: usize) -> usize {
    let effective = if workers == 0 {
        rayon::current_num_threads()
    } else {
        workers
    };
    if effective == 1 {
        2
    } else {
        1
    }
}

/// Run `ids` in order, reporting each result through `on_result` as it lands.
/// `A9` reruns every other selected criterion with a different worker count
/// and compares the persisted bytes.
pub fn run_suite(
    ids: &[&str],
    seed: u64,
    workers: usize,
    mut on_result: impl FnMut(&CriterionResult),
) -> Result<Vec<CriterionResult>> {
    for id in ids {
        criterion_id(id)?;
    }
    let mut results = Vec::new();
    for &id in ids.iter().filter(|id| **id != "A9") {
        let r = run_criterion(id, seed, workers)?;
        on_result(&r);
        results.push(r);
    }
    if ids.contains(&"A9") {
        let alt = alternate_workers(workers);
        let mut mismatched = Vec::new();
        for r in &results {
            let again = run_criterion(r.id, seed, alt)?;
            if again.persisted != r.persisted {
                mismatched.push(r.id);
            }
        }
        let compared: Vec<&str> = results.iter().map(|r| r.id).collect();
        let r = CriterionResult {
            id: "A9",
            status: if mismatched.is_empty() && !compared.is_empty() {
                Status::Pass
            } else {
                Status::Fail
            },
            detail: if mismatched.is_empty() {
                format!(
                    "reproducibility: {} byte-identical with workers={alt}",
                    compared.join(",")
                )
            } else {
                format!(
                    "reproducibility: {} differ with workers={alt}",
                    mismatched.join(",")
                )
            },
            persisted: String::new(),
        };
        on_result(&r);
        results.push(r);
    }
    Ok(results)
}
