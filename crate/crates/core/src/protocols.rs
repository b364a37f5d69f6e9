//! Erasure scenarios: control schedules for the double well, the capacitor
//! thermalization run, and the analytic side calculations (write-over
//! addressing cost, ice-cube reset, deterministic π data).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Physics, StepParams};
use crate::entropy::{estimate_bit_probabilities, shannon_entropy_bits};
use crate::error::{Error, Result};
use crate::harness::{run_ensemble, EnsembleConfig, EnsembleStats, Initial};
use crate::model::{
    kramers_time, AttemptTime, BathParams, CapacitorSpec, ControlState, PotentialSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub time: f64,
    pub barrier_scale: f64,
    pub tilt: f64,
}

impl ControlPoint {
    pub const fn new(time: f64, barrier_scale: f64, tilt: f64) -> Self {
        ControlPoint {
            time,
            barrier_scale,
            tilt,
        }
    }

    fn control(&self) -> ControlState {
        ControlState {
            barrier_scale: self.barrier_scale,
            tilt: self.tilt,
        }
    }
}

/// Piecewise-linear control schedule starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ControlPoint>", into = "Vec<ControlPoint>")]
pub struct ProtocolSchedule {
    points: Vec<ControlPoint>,
    constant: bool,
}

impl TryFrom<Vec<ControlPoint>> for ProtocolSchedule {
    type Error = Error;

    fn try_from(points: Vec<ControlPoint>) -> Result<Self> {
        ProtocolSchedule::new(points)
    }
}

impl From<ProtocolSchedule> for Vec<ControlPoint> {
    fn from(s: ProtocolSchedule) -> Self {
        s.points
    }
}

impl ProtocolSchedule {
    pub fn new(points: Vec<ControlPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::invalid("control_points", "at least one point required"))?;
        if first.time != 0.0 {
            return Err(Error::invalid(
                "control_points",
                "first point must be at t = 0",
            ));
        }
        for p in &points {
            if !p.time.is_finite() {
                return Err(Error::invalid("control_points", "times must be finite"));
            }
            p.control().validate()?;
        }
        if points.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::invalid(
                "control_points",
                "times must be strictly increasing",
            ));
        }
        let c0 = first.control();
        let constant = points.iter().all(|p| p.control() == c0);
        Ok(ProtocolSchedule { points, constant })
    }

    /// Fixed control for `duration` (a zero duration gives a single point).
    pub fn constant(control: ControlState, duration: f64) -> Result<Self> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::invalid("duration", "must be finite and >= 0"));
        }
        let mut pts = vec![ControlPoint::new(0.0, control.barrier_scale, control.tilt)];
        if duration > 0.0 {
            pts.push(ControlPoint::new(
                duration,
                control.barrier_scale,
                control.tilt,
            ));
        }
        Self::new(pts)
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    pub fn duration(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.time)
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// Control at time `t`, clamped to the end points outside `[0, duration]`.
    #[inline]
    pub fn control_at(&self, t: f64) -> ControlState {
        if self.constant {
            return self.points[0].control();
        }
        let i = self.points.partition_point(|p| p.time <= t);
        if i == 0 {
            return self.points[0].control();
        }
        if i == self.points.len() {
            return self.points[i - 1].control();
        }
        let (p, q) = (&self.points[i - 1], &self.points[i]);
        let f = (t - p.time) / (q.time - p.time);
        ControlState {
            barrier_scale: p.barrier_scale + (q.barrier_scale - p.barrier_scale) * f,
            tilt: p.tilt + (q.tilt - p.tilt) * f,
        }
    }
}

/// Lower the barrier, tilt toward bit 0, restore the barrier, remove the tilt.
pub fn make_reset_schedule(
    duration: f64,
    lower_fraction: f64,
    tilt_peak: f64,
) -> Result<ProtocolSchedule> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Usage(format!(
            "reset duration must be finite and > 0, got {duration}"
        )));
    }
    if !(0.0..=1.0).contains(&lower_fraction) {
        return Err(Error::Usage(format!(
            "lower_fraction must lie in [0, 1], got {lower_fraction}"
        )));
    }
    if !tilt_peak.is_finite() {
        return Err(Error::Usage("tilt_peak must be finite".into()));
    }
    let d = duration;
    let low = 1.0 - lower_fraction;
    ProtocolSchedule::new(vec![
        ControlPoint::new(0.0, 1.0, 0.0),
        ControlPoint::new(d / 4.0, low, 0.0),
        ControlPoint::new(d / 2.0, low, tilt_peak),
        ControlPoint::new(3.0 * d / 4.0, 1.0, tilt_peak),
        ControlPoint::new(d, 1.0, 0.0),
    ])
}

/// Hold the nominal well for `wait_multiplier` Kramers times.
pub fn make_passive_ite_schedule(
    wait_multiplier: f64,
    tau0: AttemptTime,
    spec: &PotentialSpec,
    bath: &BathParams,
) -> Result<ProtocolSchedule> {
    if !(wait_multiplier >= 1.0 && wait_multiplier.is_finite()) {
        return Err(Error::Usage(format!(
            "wait_multiplier must be >= 1, got {wait_multiplier}"
        )));
    }
    spec.validate()?;
    let t = kramers_time(tau0, spec.barrier_height, bath)?;
    ProtocolSchedule::constant(ControlState::NOMINAL, wait_multiplier * t)
}

/// Step used for the exact capacitor kernel: one hundredth of the settle time.
pub const CAPACITOR_STEPS: f64 = 100.0;

/// Thermalize an ensemble of capacitors that start at the deterministic
/// setpoint voltage.
pub fn run_capacitor_ite(
    spec: &CapacitorSpec,
    bath: &BathParams,
    ensemble_size: u64,
    settle_multiplier: f64,
    switch_cost: f64,
    master_seed: u64,
    workers: usize,
) -> Result<EnsembleStats> {
    let config =
        capacitor_ensemble_config(spec, bath, ensemble_size, settle_multiplier, switch_cost)?;
    run_ensemble(&config, master_seed, workers)
}

pub(crate) fn capacitor_ensemble_config(
    spec: &CapacitorSpec,
    bath: &BathParams,
    ensemble_size: u64,
    settle_multiplier: f64,
    switch_cost: f64,
) -> Result<EnsembleConfig> {
    if !(settle_multiplier >= 10.0 && settle_multiplier.is_finite()) {
        return Err(Error::Usage(format!(
            "settle_multiplier must be >= 10, got {settle_multiplier}"
        )));
    }
    spec.validate()?;
    let duration = settle_multiplier * spec.time_constant();
    Ok(EnsembleConfig {
        physics: Physics::Capacitor {
            spec: *spec,
            switch_cost,
        },
        bath: *bath,
        schedule: ProtocolSchedule::constant(ControlState::NOMINAL, duration)?,
        step: StepParams::endpoints(duration / CAPACITOR_STEPS)?,
        initial: Initial::FromSpec,
        target_bit: None,
        n_trajectories: ensemble_size,
        pre_equilibration: 0.0,
    })
}

/// Address bits needed to designate one freed block in a memory of `n` blocks.
pub fn write_over_cost_bits(memory_size_n: u64) -> Result<f64> {
    if memory_size_n == 0 {
        return Err(Error::Domain("memory size must be >= 1".into()));
    }
    // log2(m * 2^k) = k + log2(m) with m odd keeps doublings exact
    let k = memory_size_n.trailing_zeros();
    let odd = memory_size_n >> k;
    Ok(k as f64 + (odd as f64).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IceCubeSpec {
    pub n_bits: u64,
    pub latent_heat_per_bit: f64,
    pub melt_temperature: f64,
}

/// Environment-driven melt of every ice-phase bit: heat flows in from the
/// bath, so `heat_to_bath = -n L` while the memory gains `n L / T_melt`.
pub fn ice_cube_reset(spec: &IceCubeSpec) -> Result<(f64, f64)> {
    if !(spec.latent_heat_per_bit > 0.0 && spec.latent_heat_per_bit.is_finite()) {
        return Err(Error::invalid(
            "latent_heat_per_bit",
            "must be finite and > 0",
        ));
    }
    if !(spec.melt_temperature > 0.0 && spec.melt_temperature.is_finite()) {
        return Err(Error::invalid("melt_temperature", "must be finite and > 0"));
    }
    let q = spec.n_bits as f64 * spec.latent_heat_per_bit;
    Ok((-q, q / spec.melt_temperature))
}

pub const PI_BITS_LIMIT: u64 = 1_000_000;

/// Hex digits produced per digit-extraction evaluation.
const HEX_PER_CHUNK: usize = 16;

#[inline]
fn pow16_mod(mut exp: u64, m: u64) -> u64 {
    let mut base = 16 % m;
    let mut acc = 1 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// `frac(r / m)` as a 128-bit binary fraction.
#[inline]
fn fixed_fraction(r: u64, m: u64) -> u128 {
    let num = (r as u128) << 64;
    let hi = num / m as u128;
    let rem = num % m as u128;
    let lo = (rem << 64) / m as u128;
    (hi << 64) | lo
}

/// `frac(sum_k 16^(d-k) / (8k + j))` in 128-bit fixed point.
fn bbp_series(d: u64, j: u64) -> u128 {
    let mut s: u128 = 0;
    for k in 0..=d {
        let m = 8 * k + j;
        s = s.wrapping_add(fixed_fraction(pow16_mod(d - k, m), m));
    }
    let mut k = d + 1;
    loop {
        let m = 8 * k + j;
        let shift = 4 * (k - d);
        if shift >= 128 {
            break;
        }
        let term = (u128::MAX / m as u128) >> shift;
        if term == 0 {
            break;
        }
        s = s.wrapping_add(term);
        k += 1;
    }
    s
}

/// Sixteen hex digits of π starting at fractional position `d + 1`.
fn pi_hex_chunk(d: u64) -> Result<u64> {
    let x = bbp_series(d, 1)
        .wrapping_mul(4)
        .wrapping_sub(bbp_series(d, 4).wrapping_mul(2))
        .wrapping_sub(bbp_series(d, 5))
        .wrapping_sub(bbp_series(d, 6));
    // accumulated truncation is at most a few units per term
    let slack = 64 * (d as u128 + 64);
    let low = x as u64 as u128;
    if low < slack || (1u128 << 64) - low <= slack {
        return Err(Error::Inconclusive(format!(
            "hex digits at position {} straddle a carry boundary",
            d + 1
        )));
    }
    Ok((x >> 64) as u64)
}

/// First `n` bits of the fractional part of π (hex digits unpacked most
/// significant bit first), by Bailey-Borwein-Plouffe digit extraction.
pub fn pi_bits(n: u64) -> Result<Vec<u8>> {
    pi_bits_bounded(n, PI_BITS_LIMIT)
}

pub fn pi_bits_bounded(n: u64, limit: u64) -> Result<Vec<u8>> {
    if n == 0 {
        return Err(Error::Usage("pi_bits needs n >= 1".into()));
    }
    if n > limit {
        return Err(Error::Usage(format!(
            "pi_bits: n = {n} exceeds the configured bound {limit}"
        )));
    }
    let hex_digits = n.div_ceil(4) as usize;
    let chunks = hex_digits.div_ceil(HEX_PER_CHUNK);
    let words: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| pi_hex_chunk((c * HEX_PER_CHUNK) as u64))
        .collect::<Result<_>>()?;
    let mut bits = Vec::with_capacity(n as usize);
    'outer: for w in words {
        for b in (0..64).rev() {
            if bits.len() as u64 == n {
                break 'outer;
            }
            bits.push(((w >> b) & 1) as u8);
        }
    }
    Ok(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataAudit {
    pub n_bits: u64,
    pub ones_fraction: f64,
    /// Plug-in Shannon entropy of the bit frequency, per bit.
    pub empirical_entropy_bits_per_bit: f64,
    /// `log2(n)`: the index that picks the sequence out of the generator.
    pub description_cost_bits: f64,
}

pub fn deterministic_data_audit(n: u64) -> Result<DataAudit> {
    if n < 1000 {
        return Err(Error::Usage(format!(
            "deterministic_data_audit needs n >= 1000, got {n}"
        )));
    }
    let bits = pi_bits(n)?;
    let est = estimate_bit_probabilities(&[bits.iter().map(|&b| b == 1).collect::<Vec<_>>()])?;
    Ok(DataAudit {
        n_bits: n,
        ones_fraction: est.ensemble.p1()[0],
        empirical_entropy_bits_per_bit: shannon_entropy_bits(&est.ensemble),
        description_cost_bits: write_over_cost_bits(n)?,
    })
}
