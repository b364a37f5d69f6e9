//! Trajectory integration with an exact first-law ledger.
//!
//! Each step is split in two: the control moves `λ -> λ'` at fixed state
//! (the energy change is work), then the state relaxes `x -> x'` at fixed
//! `λ'` (the energy change leaves as heat to the bath). The same `f64`
//! energy value closes one substep and opens the next, so work minus heat
//! telescopes to `U_final - U_initial` and the ledger sums are compensated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SeedPath};
use crate::model::{BathParams, CapacitorSpec, ControlState, PotentialSpec, TwoStateSpec};
use crate::protocols::ProtocolSchedule;
use crate::rng::StreamRng;

/// Default cap on steps per trajectory.
pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;

/// Compensated running sum (branch-free TwoSum error tracking).
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        let vp = t - self.sum;
        self.comp += (self.sum - (t - vp)) + (v - vp);
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub dt: f64,
    /// Store every `record_stride`-th sample. Initial and final samples are
    /// always stored.
    pub record_stride: u64,
    pub step_budget: u64,
}

impl StepParams {
    pub fn new(dt: f64, record_stride: u64) -> Result<Self> {
        let p = StepParams {
            dt,
            record_stride,
            step_budget: DEFAULT_STEP_BUDGET,
        };
        p.validate()?;
        Ok(p)
    }

    /// Only endpoints are recorded.
    pub fn endpoints(dt: f64) -> Result<Self> {
        Self::new(dt, u64::MAX)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(
                "dt",
                format!("must be finite and > 0, got {}", self.dt),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be >= 1"));
        }
        if self.step_budget == 0 {
            return Err(Error::invalid("step_budget", "must be >= 1"));
        }
        Ok(())
    }

    /// Stability guard for the Langevin backend.
    pub fn check_stability(&self, spec: &PotentialSpec, bath: &BathParams) -> Result<()> {
        let limit = spec.max_stable_dt(bath);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "dt",
                format!(
                    "{} exceeds the stability limit 0.01*gamma*x0^2/E = {limit}",
                    self.dt
                ),
            ));
        }
        Ok(())
    }
}

/// Which physics advances the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "kebab-case")]
pub enum Physics {
    /// Overdamped particle in the controllable double well; state is `x`.
    Langevin(PotentialSpec),
    /// Symmetric two-state hopping; state is the bit value (0.0 or 1.0) and
    /// the level energies are `-a` for bit 0 and `+a` for bit 1.
    TwoState(TwoStateSpec),
    /// RC circuit with Johnson noise; state is the capacitor voltage. The
    /// schedule only supplies the duration. `switch_cost` is charged once as
    /// control work and dissipated in the switch.
    Capacitor {
        spec: CapacitorSpec,
        switch_cost: f64,
    },
}

impl Physics {
    pub fn validate(&self) -> Result<()> {
        match self {
            Physics::Langevin(s) => s.validate(),
            Physics::TwoState(s) => s.validate(),
            Physics::Capacitor { spec, switch_cost } => {
                spec.validate()?;
                if !(*switch_cost >= 0.0 && switch_cost.is_finite()) {
                    return Err(Error::invalid("switch_cost", "must be finite and >= 0"));
                }
                Ok(())
            }
        }
    }

    /// Energy of `state` under `control`.
    pub fn energy(&self, control: ControlState, state: f64) -> f64 {
        match self {
            Physics::Langevin(s) => s.energy(control, state),
            Physics::TwoState(_) => two_state_energy(control, state),
            Physics::Capacitor { spec, .. } => spec.energy(state),
        }
    }
}

#[inline]
fn two_state_energy(control: ControlState, bit: f64) -> f64 {
    if bit > 0.5 {
        control.tilt
    } else {
        -control.tilt
    }
}

/// One Euler-Maruyama step of overdamped Langevin motion:
/// `x' = x + F(x) dt/γ + sqrt(2 kT dt/γ) ξ`.
pub fn em_step(
    x: f64,
    control: ControlState,
    bath: &BathParams,
    spec: &PotentialSpec,
    dt: f64,
    noise: f64,
) -> Result<f64> {
    let sd = (2.0 * bath.kbt * dt / bath.gamma).sqrt();
    em_step_raw(x, control, spec, dt / bath.gamma, sd, noise, 0)
}

#[inline]
fn em_step_raw(
    x: f64,
    control: ControlState,
    spec: &PotentialSpec,
    mobility_dt: f64,
    noise_sd: f64,
    noise: f64,
    step: u64,
) -> Result<f64> {
    let next = x + spec.force(control, x) * mobility_dt + noise_sd * noise;
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Blowup {
            step,
            seed_path: None,
        })
    }
}

/// Exact Ornstein-Uhlenbeck transition of the RC voltage:
/// `v' = v e^{-dt/RC} + sqrt(kT/C (1 - e^{-2dt/RC})) ξ`.
pub fn ou_step(v: f64, spec: &CapacitorSpec, bath: &BathParams, dt: f64, noise: f64) -> f64 {
    let (decay, sd) = ou_coefficients(spec, bath, dt);
    v * decay + sd * noise
}

fn ou_coefficients(spec: &CapacitorSpec, bath: &BathParams, dt: f64) -> (f64, f64) {
    let tau = spec.time_constant();
    let decay = (-dt / tau).exp();
    let var = bath.kbt / spec.capacitance * -(-2.0 * dt / tau).exp_m1();
    (decay, var.sqrt())
}

/// Flip `state` with probability `1 - e^{-rate dt}`.
pub fn jump_step(state: bool, rate: f64, dt: f64, uniform: f64) -> Result<bool> {
    let rdt = rate * dt;
    if rdt > 0.1 {
        return Err(Error::Precision { rate_dt: rdt });
    }
    let p_flip = -(-rdt).exp_m1();
    Ok(if uniform < p_flip { !state } else { state })
}

/// Per-trajectory record: sampled time series plus cumulative energetics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLedger {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub work: f64,
    pub heat_to_bath: f64,
    pub u_initial: f64,
    pub u_final: f64,
    pub seed_path: SeedPath,
    pub steps: u64,
}

impl TrajectoryLedger {
    pub fn initial_state(&self) -> f64 {
        self.states[0]
    }

    pub fn final_state(&self) -> f64 {
        *self
            .states
            .last()
            .expect("ledger always holds the initial sample")
    }

    /// `ΔU - W + Q_bath`; zero up to rounding of the compensated sums.
    pub fn first_law_residual(&self) -> f64 {
        (self.u_final - self.u_initial) - self.work + self.heat_to_bath
    }
}

/// Integrate one trajectory from `initial` under `schedule`.
pub fn evolve_trajectory(
    initial: f64,
    schedule: &ProtocolSchedule,
    physics: &Physics,
    params: &StepParams,
    bath: &BathParams,
    seed_path: SeedPath,
) -> Result<TrajectoryLedger> {
    let mut rng = StreamRng::new(seed_path);
    evolve_with_rng(
        initial, schedule, physics, params, bath, seed_path, &mut rng,
    )
}

/// As [`evolve_trajectory`], drawing deviates from an already-positioned
/// stream (used after pre-equilibration).
pub fn evolve_with_rng(
    initial: f64,
    schedule: &ProtocolSchedule,
    physics: &Physics,
    params: &StepParams,
    bath: &BathParams,
    seed_path: SeedPath,
    rng: &mut StreamRng,
) -> Result<TrajectoryLedger> {
    params.validate()?;
    bath.validate()?;
    physics.validate()?;
    if !initial.is_finite() {
        return Err(Error::Domain(format!(
            "initial state must be finite, got {initial}"
        )));
    }
    if let Physics::Langevin(spec) = physics {
        params.check_stability(spec, bath)?;
    }

    let duration = schedule.duration();
    let n_steps = if duration > 0.0 {
        (duration / params.dt).ceil().max(1.0)
    } else {
        0.0
    };
    if n_steps > params.step_budget as f64 {
        return Err(Error::Inconclusive(format!(
            "trajectory needs {n_steps} steps, budget is {}",
            params.step_budget
        )));
    }
    let n_steps = n_steps as u64;
    let h = if n_steps > 0 {
        duration / n_steps as f64
    } else {
        0.0
    };

    let mut control = schedule.control_at(0.0);
    let mut state = match physics {
        Physics::TwoState(_) => {
            if initial > 0.5 {
                1.0
            } else {
                0.0
            }
        }
        _ => initial,
    };
    let mut u = physics.energy(control, state);
    let u_initial = u;
    let mut work = CompensatedSum::default();
    let mut heat = CompensatedSum::default();

    let cap = n_steps.div_ceil(params.record_stride.min(n_steps.max(1))) as usize + 2;
    let mut times = Vec::with_capacity(cap.min(1 << 20));
    let mut states = Vec::with_capacity(cap.min(1 << 20));
    times.push(0.0);
    states.push(state);

    if let Physics::Capacitor { switch_cost, .. } = physics {
        if *switch_cost > 0.0 && n_steps > 0 {
            work.add(*switch_cost);
            heat.add(*switch_cost);
        }
    }

    let langevin_coeffs = (h / bath.gamma, (2.0 * bath.kbt * h / bath.gamma).sqrt());
    let ou = match physics {
        Physics::Capacitor { spec, .. } => ou_coefficients(spec, bath, h),
        _ => (1.0, 0.0),
    };

    let mut until_record = params.record_stride;
    for k in 0..n_steps {
        let t_next = if k + 1 == n_steps {
            duration
        } else {
            (k + 1) as f64 * h
        };
        let next_control = schedule.control_at(t_next);
        let u_mid = if next_control != control {
            let e = physics.energy(next_control, state);
            work.add(e);
            work.add(-u);
            e
        } else {
            u
        };
        control = next_control;

        state = match physics {
            Physics::Langevin(spec) => em_step_raw(
                state,
                control,
                spec,
                langevin_coeffs.0,
                langevin_coeffs.1,
                rng.normal(),
                k,
            )
            .map_err(|e| e.with_seed_path(seed_path))?,
            Physics::Capacitor { .. } => {
                let v = state * ou.0 + ou.1 * rng.normal();
                if !v.is_finite() {
                    return Err(Error::Blowup {
                        step: k,
                        seed_path: Some(seed_path),
                    });
                }
                v
            }
            Physics::TwoState(spec) => {
                let bit = state > 0.5;
                let other = if bit { 0.0 } else { 1.0 };
                let du = two_state_energy(control, other) - u_mid;
                let rate = spec.rate * (-du / (2.0 * bath.kbt)).exp();
                if jump_step(bit, rate, h, rng.uniform())? {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let u_next = physics.energy(control, state);
        heat.add(u_mid);
        heat.add(-u_next);
        u = u_next;

        until_record -= 1;
        if until_record == 0 || k + 1 == n_steps {
            times.push(t_next);
            states.push(state);
            until_record = params.record_stride;
        }
    }

    Ok(TrajectoryLedger {
        times,
        states,
        work: work.value(),
        heat_to_bath: heat.value(),
        u_initial,
        u_final: u,
        seed_path,
        steps: n_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::ControlPoint;

    fn unit_well() -> PotentialSpec {
        PotentialSpec::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn em_fixed_point_without_noise() {
        let bath = BathParams::new(1e-300, 1.0).unwrap();
        let x = em_step(1.0, ControlState::NOMINAL, &bath, &unit_well(), 0.01, 3.0).unwrap();
        assert_eq!(x, 1.0 + 3.0 * (2.0e-302f64).sqrt());
        assert!((x - 1.0).abs() < 1e-140);
    }

    #[test]
    fn em_free_diffusion_increment() {
        // b = 0, a = 0: no force
        let flat = ControlState::new(0.0, 0.0).unwrap();
        let x = em_step(0.3, flat, &BathParams::default(), &unit_well(), 0.01, 1.0).unwrap();
        assert!((x - 0.3 - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((x - 0.3 - 0.141421356).abs() < 1e-9);
    }

    #[test]
    fn em_deterministic_drift() {
        let x = em_step(
            0.5,
            ControlState::NOMINAL,
            &BathParams::default(),
            &unit_well(),
            0.001,
            0.0,
        )
        .unwrap();
        assert!((x - 0.5015).abs() < 1e-15);
    }

    #[test]
    fn em_blowup_detected() {
        let r = em_step(
            1e200,
            ControlState::NOMINAL,
            &BathParams::default(),
            &unit_well(),
            0.001,
            0.0,
        );
        assert!(matches!(r, Err(Error::Blowup { .. })));
    }

    #[test]
    fn ou_examples() {
        let bath = BathParams::default();
        let spec = CapacitorSpec::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(ou_step(0.7, &spec, &bath, 0.0, 1.234), 0.7);
        let v = ou_step(1.0, &spec, &bath, 1.0, 0.0);
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn ou_stationary_variance() {
        let bath = BathParams::new(1.0, 1.0).unwrap();
        let spec = CapacitorSpec::new(2.0, 0.5, 0.0).unwrap();
        let mut rng = StreamRng::new((11, 0));
        let n = 100_000;
        let mut s2 = 0.0;
        for _ in 0..n {
            let v = ou_step(5.0, &spec, &bath, 1e3, rng.normal());
            s2 += v * v;
        }
        let var = s2 / n as f64;
        assert!((var / 0.5 - 1.0).abs() < 0.01, "var = {var}");
    }

    #[test]
    fn jump_examples() {
        assert!(!jump_step(false, 0.0, 0.01, 0.0).unwrap());
        assert!(jump_step(true, 0.0, 0.01, 0.0).unwrap());
        assert!(jump_step(false, 5.0, 0.01, 0.01).unwrap());
        assert!(!jump_step(false, 5.0, 0.01, 0.5).unwrap());
        assert!(matches!(
            jump_step(false, 20.0, 0.01, 0.5),
            Err(Error::Precision { .. })
        ));
    }

    #[test]
    fn constant_schedule_has_zero_work() {
        let sched = ProtocolSchedule::constant(ControlState::NOMINAL, 5.0).unwrap();
        let physics = Physics::Langevin(PotentialSpec::new(4.0, 1.0).unwrap());
        let params = StepParams::new(0.002, 100).unwrap();
        for i in 0..5 {
            let l = evolve_trajectory(
                1.0,
                &sched,
                &physics,
                &params,
                &BathParams::default(),
                (3, i),
            )
            .unwrap();
            assert_eq!(l.work, 0.0);
            assert!(l.first_law_residual().abs() < 1e-12);
            assert_eq!(l.steps, 2500);
            assert_eq!(*l.times.last().unwrap(), 5.0);
        }
    }

    #[test]
    fn zero_duration_schedule() {
        let sched = ProtocolSchedule::constant(ControlState::NOMINAL, 0.0).unwrap();
        let physics = Physics::Langevin(unit_well());
        let l = evolve_trajectory(
            0.3,
            &sched,
            &physics,
            &StepParams::new(0.001, 1).unwrap(),
            &BathParams::default(),
            (0, 0),
        )
        .unwrap();
        assert_eq!((l.work, l.heat_to_bath), (0.0, 0.0));
        assert_eq!(l.u_final, l.u_initial);
        assert_eq!(l.states, vec![0.3]);
    }

    #[test]
    fn single_control_jump_work() {
        // tilt 0 -> 0.5 within the first step, particle starting at x = 1
        let sched = ProtocolSchedule::new(vec![
            ControlPoint::new(0.0, 1.0, 0.0),
            ControlPoint::new(1e-3, 1.0, 0.5),
        ])
        .unwrap();
        let physics = Physics::Langevin(unit_well());
        let bath = BathParams::new(1e-300, 1.0).unwrap();
        let l = evolve_trajectory(
            1.0,
            &sched,
            &physics,
            &StepParams::new(1e-3, 1).unwrap(),
            &bath,
            (0, 0),
        )
        .unwrap();
        assert_eq!(l.steps, 1);
        assert_eq!(l.work, 0.5);
    }

    #[test]
    fn stability_guard_enforced() {
        let sched = ProtocolSchedule::constant(ControlState::NOMINAL, 1.0).unwrap();
        let physics = Physics::Langevin(PotentialSpec::new(10.0, 1.0).unwrap());
        let err = evolve_trajectory(
            1.0,
            &sched,
            &physics,
            &StepParams::new(0.01, 1).unwrap(),
            &BathParams::default(),
            (0, 0),
        )
        .unwrap_err();
        assert!(err.to_string().contains("stability"));
    }

    #[test]
    fn step_budget_is_inconclusive() {
        let sched = ProtocolSchedule::constant(ControlState::NOMINAL, 10.0).unwrap();
        let mut params = StepParams::new(0.001, 1).unwrap();
        params.step_budget = 100;
        let r = evolve_trajectory(
            1.0,
            &sched,
            &Physics::Langevin(unit_well()),
            &params,
            &BathParams::default(),
            (0, 0),
        );
        assert!(matches!(r, Err(Error::Inconclusive(_))));
    }

    #[test]
    fn determinism_per_seed_path() {
        let sched = ProtocolSchedule::constant(ControlState::NOMINAL, 2.0).unwrap();
        let physics = Physics::Langevin(PotentialSpec::new(4.0, 1.0).unwrap());
        let params = StepParams::new(0.001, 10).unwrap();
        let a = evolve_trajectory(
            1.0,
            &sched,
            &physics,
            &params,
            &BathParams::default(),
            (9, 2),
        )
        .unwrap();
        let b = evolve_trajectory(
            1.0,
            &sched,
            &physics,
            &params,
            &BathParams::default(),
            (9, 2),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_state_backend_records_bits() {
        let sched = ProtocolSchedule::constant(ControlState::NOMINAL, 50.0).unwrap();
        let physics = Physics::TwoState(TwoStateSpec::new(1.0, 1.0).unwrap());
        let l = evolve_trajectory(
            1.0,
            &sched,
            &physics,
            &StepParams::new(0.01, 1).unwrap(),
            &BathParams::default(),
            (1, 1),
        )
        .unwrap();
        assert!(l.states.iter().all(|s| *s == 0.0 || *s == 1.0));
        assert!(l.states.contains(&0.0));
        assert_eq!((l.work, l.heat_to_bath), (0.0, 0.0));
    }

    #[test]
    fn capacitor_switch_cost_keeps_first_law() {
        let sched = ProtocolSchedule::constant(ControlState::NOMINAL, 10.0).unwrap();
        let physics = Physics::Capacitor {
            spec: CapacitorSpec::new(1.0, 1.0, 1.0).unwrap(),
            switch_cost: 0.25,
        };
        let l = evolve_trajectory(
            1.0,
            &sched,
            &physics,
            &StepParams::new(0.1, 1).unwrap(),
            &BathParams::default(),
            (1, 1),
        )
        .unwrap();
        assert_eq!(l.work, 0.25);
        assert!(l.first_law_residual().abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_cancels() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }
}
