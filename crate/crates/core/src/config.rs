//! Run configuration: a strict, flat, sectioned TOML document.
//!
//! ```toml
//! [run]
//! experiment = "passive-ite"
//! backend = "langevin"
//! n_trajectories = 10000
//! master_seed = 42
//!
//! [potential]
//! barrier_height = 4.0
//! ```
//!
//! Unknown keys are fatal. Every error names the offending key path.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Physics, DEFAULT_STEP_BUDGET};
use crate::error::{Error, Result};
use crate::harness::{CapacitorIteConfig, PassiveIteConfig, ResetParams, RunSettings, WellSetup};
use crate::model::{
    AttemptTime, BathParams, CapacitorSpec, ControlState, PotentialSpec, TwoStateSpec,
};
use crate::protocols::PI_BITS_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PassiveIte,
    Reset,
    CapacitorIte,
    PiAudit,
    Mfpt,
    ErrorVsDissipation,
    CapacitorSweep,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::PassiveIte => "passive-ite",
            Experiment::Reset => "reset",
            Experiment::CapacitorIte => "capacitor-ite",
            Experiment::PiAudit => "pi-audit",
            Experiment::Mfpt => "mfpt",
            Experiment::ErrorVsDissipation => "error-vs-dissipation",
            Experiment::CapacitorSweep => "capacitor-sweep",
        }
    }

    /// Experiments that iterate over `[sweep] values`.
    pub fn is_sweep(self) -> bool {
        matches!(
            self,
            Experiment::Mfpt | Experiment::ErrorVsDissipation | Experiment::CapacitorSweep
        )
    }

    fn default_backend(self) -> Option<Backend> {
        match self {
            Experiment::PassiveIte | Experiment::Reset | Experiment::Mfpt => {
                Some(Backend::Langevin)
            }
            Experiment::ErrorVsDissipation => Some(Backend::Langevin),
            Experiment::CapacitorIte | Experiment::CapacitorSweep => Some(Backend::Capacitor),
            Experiment::PiAudit => None,
        }
    }

    fn accepts(self, backend: Backend) -> bool {
        match self {
            Experiment::PassiveIte => matches!(backend, Backend::Langevin | Backend::TwoState),
            Experiment::Reset | Experiment::Mfpt | Experiment::ErrorVsDissipation => {
                backend == Backend::Langevin
            }
            Experiment::CapacitorIte | Experiment::CapacitorSweep => backend == Backend::Capacitor,
            Experiment::PiAudit => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Langevin,
    TwoState,
    Capacitor,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Langevin => "langevin",
            Backend::TwoState => "two-state",
            Backend::Capacitor => "capacitor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default = "default_n")]
    pub n_trajectories: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_n() -> u64 {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub kbt: f64,
    pub gamma: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        let b = BathParams::default();
        BathSection {
            kbt: b.kbt,
            gamma: b.gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub barrier_height: f64,
    pub well_halfwidth: f64,
    pub tau0: f64,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection {
            barrier_height: 4.0,
            well_halfwidth: 1.0,
            tau0: AttemptTime::default().0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub barrier_scale: f64,
    pub tilt: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        ControlSection {
            barrier_scale: ControlState::NOMINAL.barrier_scale,
            tilt: ControlState::NOMINAL.tilt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepSection {
    /// `None` resolves to the largest stable step for the potential.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub step_budget: u64,
    /// `None` resolves to `5 γ x0² / kT`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_equilibration: Option<f64>,
}

impl Default for StepSection {
    fn default() -> Self {
        StepSection {
            dt: None,
            step_budget: DEFAULT_STEP_BUDGET,
            pre_equilibration: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PassiveSection {
    pub wait_multiplier: f64,
}

impl Default for PassiveSection {
    fn default() -> Self {
        PassiveSection {
            wait_multiplier: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResetSection {
    pub duration: f64,
    pub lower_fraction: f64,
    pub tilt_peak: f64,
}

impl Default for ResetSection {
    fn default() -> Self {
        ResetSection {
            duration: 150.0,
            lower_fraction: 0.85,
            tilt_peak: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacitorSection {
    pub capacitance: f64,
    pub resistance: f64,
    pub setpoint_voltage: f64,
    pub settle_multiplier: f64,
    pub switch_cost: f64,
}

impl Default for CapacitorSection {
    fn default() -> Self {
        let c = CapacitorSpec::default();
        CapacitorSection {
            capacitance: c.capacitance,
            resistance: c.resistance,
            setpoint_voltage: 1.0,
            settle_multiplier: 10.0,
            switch_cost: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoStateSection {
    pub rate: f64,
    pub p1_initial: f64,
}

impl Default for TwoStateSection {
    fn default() -> Self {
        TwoStateSection {
            rate: 1.0,
            p1_initial: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PiSection {
    pub n_bits: u64,
}

impl Default for PiSection {
    fn default() -> Self {
        PiSection { n_bits: 10_000 }
    }
}

/// Fully resolved run specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub step: StepSection,
    #[serde(default)]
    pub passive: PassiveSection,
    #[serde(default)]
    pub reset: ResetSection,
    #[serde(default)]
    pub capacitor: CapacitorSection,
    #[serde(default)]
    pub two_state: TwoStateSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub pi: PiSection,
}

/// Rewrite a model-level error as a config error under `section`.
fn under<T>(section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Invalid { field, constraint } => Error::Config {
            key: format!("{section}.{field}"),
            message: constraint,
        },
        Error::Config { .. } => e,
        other => Error::Config {
            key: section.to_string(),
            message: other.to_string(),
        },
    })
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parse, default-fill and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| config_err("<document>", e.message()))?;
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path.is_empty() || path == "." {
            "<document>".to_string()
        } else {
            path
        };
        config_err(&key, e.inner().message())
    })?;
    cfg.resolve()?;
    Ok(cfg)
}

impl RunConfig {
    /// Minimal configuration for `experiment` with every default filled.
    pub fn for_experiment(experiment: Experiment) -> Result<Self> {
        let mut cfg = RunConfig {
            run: RunSection {
                experiment,
                backend: None,
                n_trajectories: default_n(),
                master_seed: 0,
                output: None,
            },
            bath: BathSection::default(),
            potential: PotentialSection::default(),
            control: ControlSection::default(),
            step: StepSection::default(),
            passive: PassiveSection::default(),
            reset: ResetSection::default(),
            capacitor: CapacitorSection::default(),
            two_state: TwoStateSection::default(),
            sweep: None,
            pi: PiSection::default(),
        };
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Check every invariant and fill the derived defaults.
    pub fn resolve(&mut self) -> Result<()> {
        let exp = self.run.experiment;
        if let Some(backend) = self.run.backend {
            if !exp.accepts(backend) {
                return Err(config_err(
                    "run.backend",
                    format!(
                        "backend `{}` cannot run `{}`",
                        backend.as_str(),
                        exp.as_str()
                    ),
                ));
            }
        }
        self.run.backend = self.run.backend.or(exp.default_backend());
        if exp != Experiment::PiAudit && self.run.n_trajectories < 2 {
            return Err(config_err("run.n_trajectories", "must be >= 2"));
        }
        if matches!(&self.run.output, Some(p) if p.is_empty()) {
            return Err(config_err("run.output", "must not be empty"));
        }
        let bath = self.bath()?;
        let spec = self.potential()?;
        under("potential", AttemptTime::new(self.potential.tau0))?;
        self.control()?;
        under(
            "two_state",
            TwoStateSpec::new(self.two_state.rate, self.two_state.p1_initial),
        )?;
        under(
            "capacitor",
            CapacitorSpec::new(
                self.capacitor.capacitance,
                self.capacitor.resistance,
                self.capacitor.setpoint_voltage,
            ),
        )?;
        for (key, v) in [
            (
                "capacitor.settle_multiplier",
                self.capacitor.settle_multiplier,
            ),
            ("capacitor.switch_cost", self.capacitor.switch_cost),
            ("passive.wait_multiplier", self.passive.wait_multiplier),
            ("reset.duration", self.reset.duration),
            ("reset.lower_fraction", self.reset.lower_fraction),
            ("reset.tilt_peak", self.reset.tilt_peak),
        ] {
            if !v.is_finite() {
                return Err(config_err(key, format!("must be finite, got {v}")));
            }
        }
        if self.capacitor.switch_cost < 0.0 {
            return Err(config_err("capacitor.switch_cost", "must be >= 0"));
        }
        if let Some(t) = self.step.pre_equilibration {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(config_err(
                    "step.pre_equilibration",
                    "must be finite and >= 0",
                ));
            }
        }
        if self.step.step_budget == 0 {
            return Err(config_err("step.step_budget", "must be >= 1"));
        }
        match self.step.dt {
            Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(config_err(
                    "step.dt",
                    format!("must be finite and > 0, got {dt}"),
                ));
            }
            Some(dt) if self.run.backend == Some(Backend::Langevin) => {
                let limit = spec.max_stable_dt(&bath);
                if dt > limit {
                    return Err(config_err(
                        "step.dt",
                        format!("{dt} exceeds the stability limit {limit}"),
                    ));
                }
            }
            Some(_) => {}
            None => {
                self.step.dt = Some(match self.run.backend {
                    Some(Backend::TwoState) => 0.1 / self.two_state.rate.max(1.0),
                    _ => spec.max_stable_dt(&bath),
                })
            }
        }
        if exp == Experiment::PiAudit && !(1000..=PI_BITS_LIMIT).contains(&self.pi.n_bits) {
            return Err(config_err(
                "pi.n_bits",
                format!(
                    "must lie in [1000, {PI_BITS_LIMIT}], got {}",
                    self.pi.n_bits
                ),
            ));
        }
        match (&self.sweep, exp.is_sweep()) {
            (None, true) => return Err(config_err("sweep.values", "required for sweeps")),
            (Some(s), true) => {
                if s.values.len() < 2 {
                    return Err(config_err("sweep.values", "need at least two grid values"));
                }
                if s.values.iter().any(|v| !v.is_finite()) {
                    return Err(config_err("sweep.values", "values must be finite"));
                }
                if s.values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_err("sweep.values", "must be strictly increasing"));
                }
            }
            (Some(_), false) => {
                return Err(config_err(
                    "sweep",
                    format!("`{}` is not a sweep experiment", exp.as_str()),
                ))
            }
            (None, false) => {}
        }
        Ok(())
    }

    pub fn bath(&self) -> Result<BathParams> {
        under("bath", BathParams::new(self.bath.kbt, self.bath.gamma))
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        under(
            "potential",
            PotentialSpec::new(self.potential.barrier_height, self.potential.well_halfwidth),
        )
    }

    pub fn control(&self) -> Result<ControlState> {
        let c = ControlState {
            barrier_scale: self.control.barrier_scale,
            tilt: self.control.tilt,
        };
        under("control", c.validate())?;
        Ok(c)
    }

    pub fn dt(&self) -> f64 {
        self.step.dt.expect("dt resolved")
    }

    pub fn run_settings(&self, workers: usize) -> RunSettings {
        RunSettings {
            n_trajectories: self.run.n_trajectories,
            master_seed: self.run.master_seed,
            workers,
        }
    }

    pub fn well_setup(&self) -> Result<WellSetup> {
        Ok(WellSetup {
            spec: self.potential()?,
            bath: self.bath()?,
            dt: self.dt(),
            step_budget: self.step.step_budget,
            pre_equilibration: self.step.pre_equilibration,
        })
    }

    pub fn reset_params(&self) -> ResetParams {
        ResetParams {
            duration: self.reset.duration,
            lower_fraction: self.reset.lower_fraction,
            tilt_peak: self.reset.tilt_peak,
        }
    }

    pub fn passive_config(&self) -> Result<PassiveIteConfig> {
        let physics = match self.run.backend {
            Some(Backend::TwoState) => Physics::TwoState(under(
                "two_state",
                TwoStateSpec::new(self.two_state.rate, self.two_state.p1_initial),
            )?),
            _ => Physics::Langevin(self.potential()?),
        };
        Ok(PassiveIteConfig {
            physics,
            bath: self.bath()?,
            barrier_height: self.potential.barrier_height,
            tau0: AttemptTime(self.potential.tau0),
            wait_multiplier: self.passive.wait_multiplier,
            hold: self.control()?,
            dt: self.dt(),
            step_budget: self.step.step_budget,
            pre_equilibration: self.step.pre_equilibration,
        })
    }

    pub fn capacitor_config(&self) -> Result<CapacitorIteConfig> {
        Ok(CapacitorIteConfig {
            spec: under(
                "capacitor",
                CapacitorSpec::new(
                    self.capacitor.capacitance,
                    self.capacitor.resistance,
                    self.capacitor.setpoint_voltage,
                ),
            )?,
            bath: self.bath()?,
            settle_multiplier: self.capacitor.settle_multiplier,
            switch_cost: self.capacitor.switch_cost,
        })
    }

    pub fn sweep_values(&self) -> &[f64] {
        self.sweep.as_ref().map_or(&[], |s| &s.values)
    }
}
