//! Ensemble runs, parameter sweeps and the named erasure experiments.
//!
//! Trajectory `i` of an ensemble seeded with `s` always draws from stream
//! `(s, i)`. Per-trajectory summaries are collected in index order and
//! reduced with pairwise summation in that order, so the worker count only
//! changes how fast an ensemble finishes.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_with_rng, Physics, StepParams, DEFAULT_STEP_BUDGET};
use crate::entropy::{make_erasure_report, BitEnsemble, ErasureReport};
use crate::error::{Error, Result, SeedPath};
use crate::model::{AttemptTime, BathParams, CapacitorSpec, ControlState, PotentialSpec};
use crate::protocols::{
    capacitor_ensemble_config, make_passive_ite_schedule, make_reset_schedule, ProtocolSchedule,
};
use crate::rng::StreamRng;

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        mean: 0.0,
        stderr: 0.0,
    };

    /// Sample mean and `sd / sqrt(n)` with the `n - 1` variance.
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Estimate { mean, stderr: 0.0 };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Estimate {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }

    fn from_bits(bits: impl Iterator<Item = bool>) -> Estimate {
        let xs: Vec<f64> = bits.map(|b| if b { 1.0 } else { 0.0 }).collect();
        Estimate::from_samples(&xs)
    }
}

/// Pairwise summation with a fixed split: the canonical reduction order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().fold(0.0, |a, b| a + b)
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_trajectories: u64,
    pub work: Estimate,
    pub heat_to_bath: Estimate,
    pub initial_p1: Option<Estimate>,
    pub final_p1: Option<Estimate>,
    /// Fraction of trajectories that did not end in the target bit.
    pub error_probability: Option<Estimate>,
    pub max_first_law_residual: f64,
    #[serde(skip)]
    pub wall_time: f64,
}

impl EnsembleStats {
    pub fn empty(n: u64) -> Self {
        EnsembleStats {
            n_trajectories: n,
            work: Estimate::ZERO,
            heat_to_bath: Estimate::ZERO,
            initial_p1: None,
            final_p1: None,
            error_probability: None,
            max_first_law_residual: 0.0,
            wall_time: 0.0,
        }
    }
}

/// How each trajectory of an ensemble starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Initial {
    Fixed {
        value: f64,
    },
    /// Given bit value, locally equilibrated in its well (Langevin) or set
    /// directly (two-state).
    Bit {
        one: bool,
    },
    /// Fair coin per trajectory, then as [`Initial::Bit`].
    RandomBit,
    /// Capacitor setpoint voltage, or a Bernoulli draw with the two-state
    /// `p1_initial`.
    FromSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub physics: Physics,
    pub bath: BathParams,
    pub schedule: ProtocolSchedule,
    pub step: StepParams,
    pub initial: Initial,
    /// Bit every trajectory should end in; `None` skips error readout.
    pub target_bit: Option<bool>,
    pub n_trajectories: u64,
    /// Local pre-equilibration time for Langevin bit initial conditions.
    pub pre_equilibration: f64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories < 2 {
            return Err(Error::Usage(format!(
                "an ensemble needs n_trajectories >= 2, got {}",
                self.n_trajectories
            )));
        }
        self.physics.validate()?;
        self.bath.validate()?;
        self.step.validate()?;
        if !(self.pre_equilibration >= 0.0 && self.pre_equilibration.is_finite()) {
            return Err(Error::invalid(
                "pre_equilibration",
                "must be finite and >= 0",
            ));
        }
        match (&self.physics, self.initial) {
            (Physics::Langevin(spec), _) => {
                self.step.check_stability(spec, &self.bath)?;
                if self.initial == Initial::FromSpec {
                    return Err(Error::Usage(
                        "the langevin backend has no spec-defined initial state".into(),
                    ));
                }
            }
            (Physics::Capacitor { .. }, Initial::Bit { .. } | Initial::RandomBit) => {
                return Err(Error::Usage("capacitor cells have no bit readout".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

/// `5 γ x0² / kT`: local pre-equilibration time before a reset.
pub fn default_pre_equilibration(spec: &PotentialSpec, bath: &BathParams) -> f64 {
    5.0 * bath.gamma * spec.well_halfwidth * spec.well_halfwidth / bath.kbt
}

fn readout(physics: &Physics, state: f64) -> Option<bool> {
    match physics {
        Physics::Langevin(_) => Some(state > 0.0),
        Physics::TwoState(_) => Some(state > 0.5),
        Physics::Capacitor { .. } => None,
    }
}

/// Relax in the chosen well with the dividing point `x = 0` reflecting.
fn local_equilibrate(
    spec: &PotentialSpec,
    control: ControlState,
    bath: &BathParams,
    dt: f64,
    time: f64,
    one: bool,
    rng: &mut StreamRng,
) -> Result<f64> {
    let sign = if one { 1.0 } else { -1.0 };
    let mut x = sign * spec.well_halfwidth;
    let steps = (time / dt).ceil() as u64;
    let mob = dt / bath.gamma;
    let sd = (2.0 * bath.kbt * dt / bath.gamma).sqrt();
    for k in 0..steps {
        x += spec.force(control, x) * mob + sd * rng.normal();
        if !x.is_finite() {
            return Err(Error::Blowup {
                step: k,
                seed_path: None,
            });
        }
        x = sign * x.abs();
    }
    Ok(x)
}

fn prepare_initial(config: &EnsembleConfig, rng: &mut StreamRng) -> Result<f64> {
    let bit_state = |one: bool, rng: &mut StreamRng| -> Result<f64> {
        match &config.physics {
            Physics::Langevin(spec) => local_equilibrate(
                spec,
                config.schedule.control_at(0.0),
                &config.bath,
                config.step.dt,
                config.pre_equilibration,
                one,
                rng,
            ),
            _ => Ok(if one { 1.0 } else { 0.0 }),
        }
    };
    match (config.initial, &config.physics) {
        (Initial::Fixed { value }, _) => Ok(value),
        (Initial::Bit { one }, _) => bit_state(one, rng),
        (Initial::RandomBit, _) => {
            let one = rng.coin();
            bit_state(one, rng)
        }
        (Initial::FromSpec, Physics::Capacitor { spec, .. }) => Ok(spec.setpoint_voltage),
        (Initial::FromSpec, Physics::TwoState(spec)) => Ok(if rng.uniform() < spec.p1_initial {
            1.0
        } else {
            0.0
        }),
        (Initial::FromSpec, Physics::Langevin(_)) => Err(Error::Usage(
            "the langevin backend has no spec-defined initial state".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy)]
struct Summary {
    work: f64,
    heat: f64,
    initial_bit: Option<bool>,
    final_bit: Option<bool>,
    residual: f64,
}

fn run_one(config: &EnsembleConfig, path: SeedPath) -> Result<Summary> {
    let mut rng = StreamRng::new(path);
    let start = prepare_initial(config, &mut rng).map_err(|e| e.with_seed_path(path))?;
    let ledger = evolve_with_rng(
        start,
        &config.schedule,
        &config.physics,
        &config.step,
        &config.bath,
        path,
        &mut rng,
    )?;
    Ok(Summary {
        work: ledger.work,
        heat: ledger.heat_to_bath,
        initial_bit: readout(&config.physics, ledger.initial_state()),
        final_bit: readout(&config.physics, ledger.final_state()),
        residual: ledger.first_law_residual().abs(),
    })
}

/// Run `f` on a pool with `workers` threads (0 = rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) fn collect_ordered<T: Send>(
    n: u64,
    workers: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> =
        with_workers(workers, || (0..n).into_par_iter().map(&f).collect())?;
    results.into_iter().collect()
}

pub fn run_ensemble(
    config: &EnsembleConfig,
    master_seed: u64,
    workers: usize,
) -> Result<EnsembleStats> {
    config.validate()?;
    let started = Instant::now();
    let summaries = collect_ordered(config.n_trajectories, workers, |i| {
        run_one(config, (master_seed, i))
    })?;
    let works: Vec<f64> = summaries.iter().map(|s| s.work).collect();
    let heats: Vec<f64> = summaries.iter().map(|s| s.heat).collect();
    let has_bits = summaries.first().is_some_and(|s| s.final_bit.is_some());
    let initial_p1 = has_bits
        .then(|| Estimate::from_bits(summaries.iter().map(|s| s.initial_bit.unwrap_or(false))));
    let final_p1 = has_bits
        .then(|| Estimate::from_bits(summaries.iter().map(|s| s.final_bit.unwrap_or(false))));
    let error_probability = match (has_bits, config.target_bit) {
        (true, Some(t)) => Some(Estimate::from_bits(
            summaries.iter().map(|s| s.final_bit != Some(t)),
        )),
        _ => None,
    };
    Ok(EnsembleStats {
        n_trajectories: config.n_trajectories,
        work: Estimate::from_samples(&works),
        heat_to_bath: Estimate::from_samples(&heats),
        initial_p1,
        final_p1,
        error_probability,
        max_first_law_residual: summaries.iter().map(|s| s.residual).fold(0.0, f64::max),
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Independent master seed for row `row` of a sweep.
pub fn derive_seed(master: u64, row: u64) -> u64 {
    let mut z = master ^ row.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ensemble size, seed and parallelism shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub n_trajectories: u64,
    pub master_seed: u64,
    /// Worker threads; affects speed only.
    #[serde(skip)]
    pub workers: usize,
}

/// Langevin double-well setup shared by the well experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellSetup {
    pub spec: PotentialSpec,
    pub bath: BathParams,
    pub dt: f64,
    pub step_budget: u64,
    /// `None` uses [`default_pre_equilibration`].
    pub pre_equilibration: Option<f64>,
}

impl WellSetup {
    /// Largest stable step and the default budget.
    pub fn new(spec: PotentialSpec, bath: BathParams) -> Self {
        WellSetup {
            spec,
            bath,
            dt: spec.max_stable_dt(&bath),
            step_budget: DEFAULT_STEP_BUDGET,
            pre_equilibration: None,
        }
    }

    fn step(&self) -> Result<StepParams> {
        let mut p = StepParams::endpoints(self.dt)?;
        p.step_budget = self.step_budget;
        Ok(p)
    }

    fn pre_equilibration(&self) -> f64 {
        self.pre_equilibration
            .unwrap_or_else(|| default_pre_equilibration(&self.spec, &self.bath))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub stats: EnsembleStats,
    pub report: ErasureReport,
}

pub fn bit_report(stats: &EnsembleStats, bath: &BathParams) -> Result<ErasureReport> {
    let before = stats
        .initial_p1
        .ok_or_else(|| Error::Usage("experiment has no bit readout".into()))?;
    let after = stats.final_p1.expect("final readout accompanies initial");
    make_erasure_report(
        &BitEnsemble::new(vec![before.mean])?,
        &BitEnsemble::new(vec![after.mean])?,
        stats,
        bath,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassiveIteConfig {
    /// Langevin or two-state cell.
    pub physics: Physics,
    pub bath: BathParams,
    /// Barrier used for the Kramers waiting time.
    pub barrier_height: f64,
    pub tau0: AttemptTime,
    pub wait_multiplier: f64,
    /// Control held for the whole wait.
    pub hold: ControlState,
    pub dt: f64,
    pub step_budget: u64,
    pub pre_equilibration: Option<f64>,
}

/// Thermalize cells that all start in bit 1 by holding the nominal well.
pub fn passive_ite_experiment(
    cfg: &PassiveIteConfig,
    run: &RunSettings,
) -> Result<ExperimentOutcome> {
    let probe = PotentialSpec::new(cfg.barrier_height, 1.0)?;
    let wait = make_passive_ite_schedule(cfg.wait_multiplier, cfg.tau0, &probe, &cfg.bath)?;
    let schedule = ProtocolSchedule::constant(cfg.hold, wait.duration())?;
    let pre = match (&cfg.physics, cfg.pre_equilibration) {
        (_, Some(t)) => t,
        (Physics::Langevin(spec), None) => default_pre_equilibration(spec, &cfg.bath),
        _ => 0.0,
    };
    if let Physics::Capacitor { .. } = cfg.physics {
        return Err(Error::Usage(
            "passive ITE runs on the langevin or two-state backend".into(),
        ));
    }
    let mut step = StepParams::endpoints(cfg.dt)?;
    step.step_budget = cfg.step_budget;
    let config = EnsembleConfig {
        physics: cfg.physics,
        bath: cfg.bath,
        schedule,
        step,
        initial: Initial::Bit { one: true },
        target_bit: None,
        n_trajectories: run.n_trajectories,
        pre_equilibration: pre,
    };
    let stats = run_ensemble(&config, run.master_seed, run.workers)?;
    let report = bit_report(&stats, &cfg.bath)?;
    Ok(ExperimentOutcome { stats, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetParams {
    pub duration: f64,
    pub lower_fraction: f64,
    pub tilt_peak: f64,
}

fn reset_config(setup: &WellSetup, reset: &ResetParams, n: u64) -> Result<EnsembleConfig> {
    Ok(EnsembleConfig {
        physics: Physics::Langevin(setup.spec),
        bath: setup.bath,
        schedule: make_reset_schedule(reset.duration, reset.lower_fraction, reset.tilt_peak)?,
        step: setup.step()?,
        initial: Initial::RandomBit,
        target_bit: Some(false),
        n_trajectories: n,
        pre_equilibration: setup.pre_equilibration(),
    })
}

/// Reset randomized bits to 0 with the lower/tilt/restore schedule.
pub fn reset_experiment(
    setup: &WellSetup,
    reset: &ResetParams,
    run: &RunSettings,
) -> Result<ExperimentOutcome> {
    let config = reset_config(setup, reset, run.n_trajectories)?;
    let stats = run_ensemble(&config, run.master_seed, run.workers)?;
    let report = bit_report(&stats, &setup.bath)?;
    Ok(ExperimentOutcome { stats, report })
}

/// Report for a thermalized capacitor: a known bit before, one unknown bit after.
pub fn capacitor_report(stats: &EnsembleStats, bath: &BathParams) -> Result<ErasureReport> {
    make_erasure_report(
        &BitEnsemble::new(vec![1.0])?,
        &BitEnsemble::new(vec![0.5])?,
        stats,
        bath,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitorIteConfig {
    pub spec: CapacitorSpec,
    pub bath: BathParams,
    pub settle_multiplier: f64,
    pub switch_cost: f64,
}

/// Thermalize capacitors holding a known setpoint. The stored bit is known
/// beforehand (zero entropy) and carries no trace afterwards (one bit).
pub fn capacitor_experiment(
    cfg: &CapacitorIteConfig,
    run: &RunSettings,
) -> Result<ExperimentOutcome> {
    let config = capacitor_ensemble_config(
        &cfg.spec,
        &cfg.bath,
        run.n_trajectories,
        cfg.settle_multiplier,
        cfg.switch_cost,
    )?;
    let stats = run_ensemble(&config, run.master_seed, run.workers)?;
    let report = capacitor_report(&stats, &cfg.bath)?;
    Ok(ExperimentOutcome { stats, report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub stats: EnsembleStats,
    /// Mean first-passage time over the trajectories that crossed.
    pub mfpt: Option<Estimate>,
    pub crossings: Option<u64>,
    pub inconclusive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = pairwise_sum(xs) / n as f64;
    let my = pairwise_sum(ys) / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub values: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// For first-passage sweeps: ln(MFPT) against `E/kT` over conclusive rows.
    pub fit: Option<LinearFit>,
}

fn check_grid(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Usage(format!("{what} grid is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage(format!(
            "{what} grid must be finite and strictly increasing"
        )));
    }
    Ok(())
}

pub const MFPT_RATIO_RANGE: (f64, f64) = (2.0, 10.0);

#[derive(Debug, Clone, Copy)]
struct Passage {
    time: Option<f64>,
    heat: f64,
    end: f64,
}

fn first_passage(
    spec: &PotentialSpec,
    bath: &BathParams,
    dt: f64,
    budget: u64,
    path: SeedPath,
) -> Result<Passage> {
    let mut rng = StreamRng::new(path);
    let c = ControlState::NOMINAL;
    let target = -spec.well_halfwidth;
    let mob = dt / bath.gamma;
    let sd = (2.0 * bath.kbt * dt / bath.gamma).sqrt();
    let mut x = spec.well_halfwidth;
    let u0 = spec.energy(c, x);
    for k in 0..budget {
        x += spec.force(c, x) * mob + sd * rng.normal();
        if !x.is_finite() {
            return Err(Error::Blowup {
                step: k,
                seed_path: Some(path),
            });
        }
        if x <= target {
            return Ok(Passage {
                time: Some((k + 1) as f64 * dt),
                heat: u0 - spec.energy(c, x),
                end: x,
            });
        }
    }
    Ok(Passage {
        time: None,
        heat: u0 - spec.energy(c, x),
        end: x,
    })
}

/// Mean first-passage time from `+x0` to `-x0` on a grid of `E/kT`.
///
/// The well shape stays fixed and `kT = E / ratio`, so the Kramers prefactor
/// does not vary along the grid and `ln MFPT` is linear in the ratio.
#[allow(clippy::too_many_arguments)]
pub fn mfpt_experiment(
    ratios: &[f64],
    spec: &PotentialSpec,
    gamma: f64,
    n_per_point: u64,
    step_budget: u64,
    dt: Option<f64>,
    master_seed: u64,
    workers: usize,
) -> Result<SweepResult> {
    check_grid(ratios, "barrier")?;
    let (lo, hi) = MFPT_RATIO_RANGE;
    if let Some(r) = ratios.iter().find(|r| !(lo..=hi).contains(*r)) {
        return Err(Error::Usage(format!(
            "barrier ratio E/kT = {r} outside [{lo}, {hi}]"
        )));
    }
    if n_per_point < 2 {
        return Err(Error::Usage(
            "need at least 2 trajectories per point".into(),
        ));
    }
    spec.validate()?;
    let mut rows = Vec::with_capacity(ratios.len());
    for (row, &ratio) in ratios.iter().enumerate() {
        let started = Instant::now();
        let bath = BathParams::new(spec.barrier_height / ratio, gamma)?;
        let dt = dt.unwrap_or_else(|| spec.max_stable_dt(&bath));
        StepParams::endpoints(dt)?.check_stability(spec, &bath)?;
        let seed = derive_seed(master_seed, row as u64);
        let passages = collect_ordered(n_per_point, workers, |i| {
            first_passage(spec, &bath, dt, step_budget, (seed, i))
        })?;
        let times: Vec<f64> = passages.iter().filter_map(|p| p.time).collect();
        let heats: Vec<f64> = passages.iter().map(|p| p.heat).collect();
        let crossings = times.len() as u64;
        let inconclusive = 2 * crossings < n_per_point;
        let mut stats = EnsembleStats::empty(n_per_point);
        stats.heat_to_bath = Estimate::from_samples(&heats);
        stats.initial_p1 = Some(Estimate {
            mean: 1.0,
            stderr: 0.0,
        });
        stats.final_p1 = Some(Estimate::from_bits(passages.iter().map(|p| p.end > 0.0)));
        stats.wall_time = started.elapsed().as_secs_f64();
        rows.push(SweepRow {
            value: ratio,
            stats,
            mfpt: (crossings > 0).then(|| Estimate::from_samples(&times)),
            crossings: Some(crossings),
            inconclusive,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| !r.inconclusive)
        .filter_map(|r| r.mfpt.map(|m| (r.value, m.mean.ln())))
        .unzip();
    Ok(SweepResult {
        axis: "barrier_over_kbt".into(),
        values: ratios.to_vec(),
        rows,
        fit: least_squares(&xs, &ys),
    })
}

/// Reset protocol at each duration in `durations`.
pub fn error_vs_dissipation_experiment(
    durations: &[f64],
    setup: &WellSetup,
    reset: &ResetParams,
    run: &RunSettings,
) -> Result<SweepResult> {
    check_grid(durations, "duration")?;
    let mut rows = Vec::with_capacity(durations.len());
    for (row, &d) in durations.iter().enumerate() {
        let params = ResetParams {
            duration: d,
            ..*reset
        };
        let config = reset_config(setup, &params, run.n_trajectories)?;
        let stats = run_ensemble(
            &config,
            derive_seed(run.master_seed, row as u64),
            run.workers,
        )?;
        rows.push(SweepRow {
            value: d,
            stats,
            mfpt: None,
            crossings: None,
            inconclusive: false,
        });
    }
    Ok(SweepResult {
        axis: "duration".into(),
        values: durations.to_vec(),
        rows,
        fit: None,
    })
}

/// Capacitor thermalization at each stored energy `C V_s^2 / 2`.
pub fn capacitor_sweep(
    stored_energies: &[f64],
    cfg: &CapacitorIteConfig,
    run: &RunSettings,
) -> Result<SweepResult> {
    check_grid(stored_energies, "stored_energy")?;
    let mut rows = Vec::with_capacity(stored_energies.len());
    for (row, &e) in stored_energies.iter().enumerate() {
        let spec = CapacitorSpec::with_stored_energy(cfg.spec.capacitance, cfg.spec.resistance, e)?;
        let config = capacitor_ensemble_config(
            &spec,
            &cfg.bath,
            run.n_trajectories,
            cfg.settle_multiplier,
            cfg.switch_cost,
        )?;
        let stats = run_ensemble(
            &config,
            derive_seed(run.master_seed, row as u64),
            run.workers,
        )?;
        rows.push(SweepRow {
            value: e,
            stats,
            mfpt: None,
            crossings: None,
            inconclusive: false,
        });
    }
    Ok(SweepResult {
        axis: "stored_energy".into(),
        values: stored_energies.to_vec(),
        rows,
        fit: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::Verdict;
    use crate::model::TwoStateSpec;

    fn run(n: u64, seed: u64, workers: usize) -> RunSettings {
        RunSettings {
            n_trajectories: n,
            master_seed: seed,
            workers,
        }
    }

    #[test]
    fn zero_duration_ensemble() {
        let config = EnsembleConfig {
            physics: Physics::Langevin(PotentialSpec::new(4.0, 1.0).unwrap()),
            bath: BathParams::default(),
            schedule: ProtocolSchedule::constant(ControlState::NOMINAL, 0.0).unwrap(),
            step: StepParams::endpoints(0.001).unwrap(),
            initial: Initial::Fixed { value: 1.0 },
            target_bit: None,
            n_trajectories: 2,
            pre_equilibration: 0.0,
        };
        let s = run_ensemble(&config, 1, 1).unwrap();
        assert_eq!(s.work, Estimate::ZERO);
        assert_eq!(s.heat_to_bath, Estimate::ZERO);
    }

    #[test]
    fn single_trajectory_rejected() {
        let config = EnsembleConfig {
            physics: Physics::TwoState(TwoStateSpec::new(1.0, 1.0).unwrap()),
            bath: BathParams::default(),
            schedule: ProtocolSchedule::constant(ControlState::NOMINAL, 1.0).unwrap(),
            step: StepParams::endpoints(0.01).unwrap(),
            initial: Initial::FromSpec,
            target_bit: None,
            n_trajectories: 1,
            pre_equilibration: 0.0,
        };
        assert!(matches!(run_ensemble(&config, 1, 1), Err(Error::Usage(_))));
    }

    #[test]
    fn worker_count_does_not_change_stats() {
        let setup = WellSetup::new(PotentialSpec::new(4.0, 1.0).unwrap(), BathParams::default());
        let reset = ResetParams {
            duration: 5.0,
            lower_fraction: 0.9,
            tilt_peak: 3.0,
        };
        let a = reset_experiment(&setup, &reset, &run(64, 9, 1)).unwrap();
        let b = reset_experiment(&setup, &reset, &run(64, 9, 4)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn passive_two_state_matches_relaxation_oracle() {
        let spec = TwoStateSpec::new(0.05, 1.0).unwrap();
        let cfg = PassiveIteConfig {
            physics: Physics::TwoState(spec),
            bath: BathParams::default(),
            barrier_height: 2.0,
            tau0: AttemptTime(1.0),
            wait_multiplier: 1.0,
            hold: ControlState::NOMINAL,
            dt: 0.1,
            step_budget: DEFAULT_STEP_BUDGET,
            pre_equilibration: None,
        };
        let out = passive_ite_experiment(&cfg, &run(20_000, 3, 0)).unwrap();
        let t = 2f64.exp();
        let oracle = crate::model::two_state_relaxation(&spec, t).unwrap();
        let p = out.stats.final_p1.unwrap();
        assert!(
            (p.mean - oracle).abs() < 4.0 * p.stderr,
            "{} vs {oracle}",
            p.mean
        );
        assert_eq!(out.stats.work, Estimate::ZERO);
        assert_eq!(out.stats.heat_to_bath, Estimate::ZERO);
        assert_eq!(out.report.verdict, Verdict::BoundVacuous);
    }

    #[test]
    fn mfpt_rejects_out_of_range_barriers() {
        let spec = PotentialSpec::new(1.0, 1.0).unwrap();
        for bad in [vec![0.0, 4.0], vec![4.0, 11.0], vec![5.0, 4.0]] {
            assert!(matches!(
                mfpt_experiment(&bad, &spec, 1.0, 10, 1000, None, 1, 1),
                Err(Error::Usage(_))
            ));
        }
    }

    #[test]
    fn mfpt_budget_exhaustion_flags_inconclusive() {
        let spec = PotentialSpec::new(1.0, 1.0).unwrap();
        let r = mfpt_experiment(&[10.0], &spec, 1.0, 8, 10, None, 1, 1).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].inconclusive);
        assert_eq!(r.rows[0].crossings, Some(0));
        assert!(r.fit.is_none());
    }

    #[test]
    fn least_squares_exact_line() {
        let f = least_squares(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn stderr_halves_with_four_times_n() {
        let cfg = CapacitorIteConfig {
            spec: CapacitorSpec::new(1.0, 1.0, 1.0).unwrap(),
            bath: BathParams::default(),
            settle_multiplier: 10.0,
            switch_cost: 0.0,
        };
        let small = capacitor_experiment(&cfg, &run(4_000, 5, 0)).unwrap();
        let big = capacitor_experiment(&cfg, &run(16_000, 5, 0)).unwrap();
        let ratio = small.stats.heat_to_bath.stderr / big.stats.heat_to_bath.stderr;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn sweep_rows_match_grid() {
        let cfg = CapacitorIteConfig {
            spec: CapacitorSpec::new(1.0, 1.0, 0.0).unwrap(),
            bath: BathParams::default(),
            settle_multiplier: 10.0,
            switch_cost: 0.0,
        };
        let grid = [0.0, 0.5, 2.0];
        let r = capacitor_sweep(&grid, &cfg, &run(100, 1, 1)).unwrap();
        assert_eq!(r.rows.len(), grid.len());
        assert!(capacitor_sweep(&[1.0, 1.0], &cfg, &run(100, 1, 1)).is_err());
    }

    #[test]
    fn pairwise_sum_matches_exact_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }
}
