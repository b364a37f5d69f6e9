//! Physical model of a single memory cell.
//!
//! Everything is in natural units: `k_B T` is one number (`kbt`, default 1),
//! friction `gamma` defaults to 1 and the well half-width `x0` to 1, so
//! energies read directly in multiples of `k_B T`.
//!
//! The controllable double well is
//!
//! ```text
//! U(x; b, a) = b * E * ((x/x0)^2 - 1)^2 + a * (x/x0)
//! ```
//!
//! with barrier scale `b` in `[0, 1]` and linear tilt `a`. A positive tilt
//! lowers the `x < 0` well, which carries bit value 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub kbt: f64,
    pub gamma: f64,
}

impl Default for BathParams {
    fn default() -> Self {
        BathParams {
            kbt: 1.0,
            gamma: 1.0,
        }
    }
}

impl BathParams {
    pub fn new(kbt: f64, gamma: f64) -> Result<Self> {
        let bath = BathParams { kbt, gamma };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        positive("kbt", self.kbt)?;
        positive("gamma", self.gamma)
    }
}

/// Shape of the double well: barrier height `E` and the distance `x0` from
/// the origin to each minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub barrier_height: f64,
    pub well_halfwidth: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            barrier_height: 10.0,
            well_halfwidth: 1.0,
        }
    }
}

impl PotentialSpec {
    pub fn new(barrier_height: f64, well_halfwidth: f64) -> Result<Self> {
        let spec = PotentialSpec {
            barrier_height,
            well_halfwidth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        positive("barrier_height", self.barrier_height)?;
        positive("well_halfwidth", self.well_halfwidth)
    }

    /// Unchecked `U(x)`; callers guarantee finite inputs.
    #[inline]
    pub(crate) fn energy(&self, control: ControlState, x: f64) -> f64 {
        let y = x / self.well_halfwidth;
        let s = y * y - 1.0;
        control.barrier_scale * self.barrier_height * s * s + control.tilt * y
    }

    /// Unchecked `-dU/dx`.
    #[inline]
    pub(crate) fn force(&self, control: ControlState, x: f64) -> f64 {
        let x0 = self.well_halfwidth;
        let y = x / x0;
        -(4.0 * control.barrier_scale * self.barrier_height * x * (y * y - 1.0) / (x0 * x0)
            + control.tilt / x0)
    }

    /// Largest Euler-Maruyama step the engine accepts for this well.
    pub fn max_stable_dt(&self, bath: &BathParams) -> f64 {
        0.01 * bath.gamma * self.well_halfwidth * self.well_halfwidth / self.barrier_height
    }
}

/// Control parameters of the well: barrier scale `b` and tilt `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlState {
    pub barrier_scale: f64,
    pub tilt: f64,
}

impl Default for ControlState {
    fn default() -> Self {
        ControlState::NOMINAL
    }
}

impl ControlState {
    /// Full barrier, no tilt.
    pub const NOMINAL: ControlState = ControlState {
        barrier_scale: 1.0,
        tilt: 0.0,
    };

    pub fn new(barrier_scale: f64, tilt: f64) -> Result<Self> {
        let c = ControlState {
            barrier_scale,
            tilt,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.barrier_scale) {
            return Err(Error::invalid(
                "barrier_scale",
                format!("must lie in [0, 1], got {}", self.barrier_scale),
            ));
        }
        if !self.tilt.is_finite() {
            return Err(Error::invalid("tilt", "must be finite"));
        }
        Ok(())
    }
}

/// RC circuit whose capacitor voltage stores one bit as a deterministic
/// setpoint `V_s`; stored energy is `C * V_s^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitorSpec {
    pub capacitance: f64,
    pub resistance: f64,
    pub setpoint_voltage: f64,
}

impl Default for CapacitorSpec {
    fn default() -> Self {
        CapacitorSpec {
            capacitance: 1.0,
            resistance: 1.0,
            setpoint_voltage: 0.0,
        }
    }
}

impl CapacitorSpec {
    pub fn new(capacitance: f64, resistance: f64, setpoint_voltage: f64) -> Result<Self> {
        let spec = CapacitorSpec {
            capacitance,
            resistance,
            setpoint_voltage,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        positive("capacitance", self.capacitance)?;
        positive("resistance", self.resistance)?;
        if !self.setpoint_voltage.is_finite() {
            return Err(Error::invalid("setpoint_voltage", "must be finite"));
        }
        Ok(())
    }

    pub fn time_constant(&self) -> f64 {
        self.resistance * self.capacitance
    }

    #[inline]
    pub fn energy(&self, v: f64) -> f64 {
        0.5 * self.capacitance * v * v
    }

    pub fn stored_energy(&self) -> f64 {
        self.energy(self.setpoint_voltage)
    }

    /// Capacitor whose setpoint stores `energy` (in units of energy).
    pub fn with_stored_energy(capacitance: f64, resistance: f64, energy: f64) -> Result<Self> {
        if energy < 0.0 || !energy.is_finite() {
            return Err(Error::invalid(
                "stored_energy",
                format!("must be finite and >= 0, got {energy}"),
            ));
        }
        CapacitorSpec::new(capacitance, resistance, (2.0 * energy / capacitance).sqrt())
    }
}

/// Discrete two-state cell hopping symmetrically at `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStateSpec {
    pub rate: f64,
    pub p1_initial: f64,
}

impl TwoStateSpec {
    pub fn new(rate: f64, p1_initial: f64) -> Result<Self> {
        let spec = TwoStateSpec { rate, p1_initial };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid(
                "rate",
                format!("must be finite and >= 0, got {}", self.rate),
            ));
        }
        if !(0.0..=1.0).contains(&self.p1_initial) {
            return Err(Error::invalid(
                "p1_initial",
                format!("must lie in [0, 1], got {}", self.p1_initial),
            ));
        }
        Ok(())
    }
}

/// Kramers attempt time `tau0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttemptTime(pub f64);

impl Default for AttemptTime {
    fn default() -> Self {
        AttemptTime(1.0)
    }
}

impl AttemptTime {
    pub fn new(tau0: f64) -> Result<Self> {
        positive("tau0", tau0)?;
        Ok(AttemptTime(tau0))
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn finite_position(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("position must be finite, got {x}")))
    }
}

pub fn potential_energy(spec: &PotentialSpec, control: ControlState, x: f64) -> Result<f64> {
    spec.validate()?;
    control.validate()?;
    finite_position(x)?;
    Ok(spec.energy(control, x))
}

/// Analytic force `-dU/dx`.
pub fn potential_force(spec: &PotentialSpec, control: ControlState, x: f64) -> Result<f64> {
    spec.validate()?;
    control.validate()?;
    finite_position(x)?;
    Ok(spec.force(control, x))
}

/// `tau0 * exp(E / kT)`.
pub fn kramers_time(tau0: AttemptTime, barrier: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    AttemptTime::new(tau0.0)?;
    if !(barrier >= 0.0) {
        return Err(Error::Domain(format!(
            "barrier must be >= 0, got {barrier}"
        )));
    }
    let exponent = barrier / bath.kbt;
    let t = tau0.0 * exponent.exp();
    if t.is_finite() {
        Ok(t)
    } else {
        Err(Error::Range { exponent })
    }
}

/// Probability of bit value 1 after time `t` of symmetric hopping:
/// `p1(t) = 1/2 + (p1(0) - 1/2) * exp(-2 r t)`.
pub fn two_state_relaxation(spec: &TwoStateSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    Ok(0.5 + (spec.p1_initial - 0.5) * (-2.0 * spec.rate * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> PotentialSpec {
        PotentialSpec::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn energy_at_wells_and_barrier() {
        let c = ControlState::NOMINAL;
        assert_eq!(potential_energy(&unit(), c, 1.0).unwrap(), 0.0);
        assert_eq!(potential_energy(&unit(), c, -1.0).unwrap(), 0.0);
        assert_eq!(potential_energy(&unit(), c, 0.0).unwrap(), 1.0);
        assert_eq!(potential_energy(&unit(), c, 0.5).unwrap(), 0.5625);
    }

    #[test]
    fn force_examples() {
        let c = ControlState::NOMINAL;
        assert_eq!(potential_force(&unit(), c, 0.0).unwrap(), 0.0);
        assert_eq!(potential_force(&unit(), c, 1.0).unwrap(), 0.0);
        assert_eq!(potential_force(&unit(), c, 0.5).unwrap(), 1.5);
    }

    #[test]
    fn non_finite_position_is_domain_error() {
        let c = ControlState::NOMINAL;
        assert!(matches!(
            potential_energy(&unit(), c, f64::NAN),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            potential_force(&unit(), c, f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn barrier_scale_above_one_rejected() {
        let err = ControlState::new(1.5, 0.0).unwrap_err();
        assert!(err.to_string().contains("barrier_scale"));
        assert!(potential_energy(
            &unit(),
            ControlState {
                barrier_scale: 1.5,
                tilt: 0.0
            },
            0.0
        )
        .is_err());
    }

    #[test]
    fn kramers_examples() {
        let bath = BathParams::default();
        assert_eq!(kramers_time(AttemptTime(1.0), 0.0, &bath).unwrap(), 1.0);
        assert_relative_eq!(
            kramers_time(AttemptTime(1.0), 10.0, &bath).unwrap(),
            22026.465794806718,
            max_relative = 1e-12
        );
        let warm = BathParams::new(2.5, 1.0).unwrap();
        assert_relative_eq!(
            kramers_time(AttemptTime(2.0), 5.0, &warm).unwrap(),
            14.7781121978613,
            max_relative = 1e-12
        );
    }

    #[test]
    fn kramers_overflow_reports_exponent() {
        let err = kramers_time(AttemptTime(1.0), 1000.0, &BathParams::default()).unwrap_err();
        assert_eq!(err, Error::Range { exponent: 1000.0 });
        assert!(kramers_time(AttemptTime(1.0), -1.0, &BathParams::default()).is_err());
    }

    #[test]
    fn relaxation_examples() {
        let s = TwoStateSpec::new(3.0, 1.0).unwrap();
        assert_eq!(two_state_relaxation(&s, 0.0).unwrap(), 1.0);
        assert_relative_eq!(two_state_relaxation(&s, 1e3).unwrap(), 0.5);
        let s = TwoStateSpec::new(1.0, 1.0).unwrap();
        assert_relative_eq!(
            two_state_relaxation(&s, 0.5).unwrap(),
            0.5 + 0.5 * (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert!((two_state_relaxation(&s, 0.5).unwrap() - 0.6839).abs() < 1e-4);
        assert!(matches!(
            two_state_relaxation(&s, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spec_invariants() {
        assert!(BathParams::new(0.0, 1.0).is_err());
        assert!(BathParams::new(1.0, -1.0).is_err());
        assert!(PotentialSpec::new(-1.0, 1.0).is_err());
        assert!(CapacitorSpec::new(1.0, 0.0, 0.0).is_err());
        assert!(TwoStateSpec::new(-0.1, 0.5).is_err());
        assert!(TwoStateSpec::new(0.1, 1.5).is_err());
        assert!(AttemptTime::new(0.0).is_err());
    }

    proptest! {
        #[test]
        fn force_matches_central_difference(
            b in 0.0f64..=1.0,
            a in -5.0f64..5.0,
            x in -2.5f64..2.5,
            e in 0.5f64..12.0,
            x0 in 0.5f64..2.0,
        ) {
            let spec = PotentialSpec::new(e, x0).unwrap();
            let c = ControlState::new(b, a).unwrap();
            let h = 1e-5;
            let fd = -(spec.energy(c, x + h) - spec.energy(c, x - h)) / (2.0 * h);
            let f = spec.force(c, x);
            // relative error with an absolute floor for near-zero forces
            let scale = f.abs().max(1.0);
            prop_assert!((f - fd).abs() / scale < 1e-6, "f={f} fd={fd}");
        }

        #[test]
        fn untilted_energy_is_even(b in 0.0f64..=1.0, x in -3.0f64..3.0) {
            let c = ControlState::new(b, 0.0).unwrap();
            let spec = PotentialSpec::new(4.0, 1.3).unwrap();
            prop_assert_eq!(spec.energy(c, x), spec.energy(c, -x));
        }

        #[test]
        fn kramers_monotone(e in 0.0f64..30.0, de in 1e-3f64..5.0, kt in 0.2f64..5.0, dk in 1e-3f64..2.0) {
            let tau = AttemptTime(1.3);
            let bath = BathParams::new(kt, 1.0).unwrap();
            let hotter = BathParams::new(kt + dk, 1.0).unwrap();
            let base = kramers_time(tau, e, &bath).unwrap();
            prop_assert!(kramers_time(tau, e + de, &bath).unwrap() > base);
            if e > 0.0 {
                prop_assert!(kramers_time(tau, e, &hotter).unwrap() < base);
            }
        }

        #[test]
        fn relaxation_semigroup(p0 in 0.0f64..=1.0, r in 0.0f64..5.0, t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
            let direct = two_state_relaxation(&TwoStateSpec::new(r, p0).unwrap(), t1 + t2).unwrap();
            let mid = two_state_relaxation(&TwoStateSpec::new(r, p0).unwrap(), t1).unwrap();
            let staged = two_state_relaxation(&TwoStateSpec::new(r, mid).unwrap(), t2).unwrap();
            prop_assert!((direct - staged).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&direct));
            prop_assert!((direct - 0.5).abs() <= (p0 - 0.5).abs() + 1e-15);
        }
    }
}
