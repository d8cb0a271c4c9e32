//! Linear-drift memristor with a hard threshold.
//!
//! Conductance interpolates linearly between the low-dopant bound `g_off` and
//! the high-dopant bound `g_on` according to a dimensionless state `x`. The
//! state drifts in proportion to the device current, but only while the
//! applied voltage exceeds the threshold in magnitude; below it the device is
//! an ordinary fixed resistor.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemristorDevice {
    /// Low-dopant-state conductance (S).
    pub g_off: f64,
    /// High-dopant-state conductance (S).
    pub g_on: f64,
    /// Threshold voltage (V).
    pub v_th: f64,
    /// State mobility, 1/(A·s).
    pub k_mob: f64,
}

impl MemristorDevice {
    pub fn new(g_off: f64, g_on: f64, v_th: f64, k_mob: f64) -> Result<Self> {
        let dev = Self {
            g_off,
            g_on,
            v_th,
            k_mob,
        };
        dev.validate()?;
        Ok(dev)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("g_off", self.g_off)?;
        ensure_positive("g_on", self.g_on)?;
        if self.g_off >= self.g_on {
            return Err(Error::invalid(format!(
                "device requires 0 < g_off < g_on, got g_off = {:e} S, g_on = {:e} S",
                self.g_off, self.g_on
            )));
        }
        ensure_non_negative("v_th", self.v_th)?;
        ensure_positive("k_mob", self.k_mob)?;
        Ok(())
    }

    /// Closed interval of programmable conductances.
    pub fn range(&self) -> (f64, f64) {
        (self.g_off, self.g_on)
    }

    pub fn contains(&self, g: f64) -> bool {
        g >= self.g_off && g <= self.g_on
    }

    pub fn conductance(&self, state: DeviceState) -> f64 {
        let x = state.x();
        self.g_off * (1.0 - x) + self.g_on * x
    }

    pub fn current(&self, state: DeviceState, v: f64) -> f64 {
        self.conductance(state) * v
    }

    /// Forward-Euler integration of the state over a sampled waveform.
    ///
    /// Each sample holds for one step `dt`. Samples with `|v| <= v_th` leave
    /// the state untouched.
    pub fn evolve_state(&self, state: DeviceState, waveform: &Waveform) -> Result<DeviceState> {
        let mut x = state.x();
        for (k, &v) in waveform.samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "waveform sample {k} is not finite ({v})"
                )));
            }
            if v.abs() <= self.v_th {
                continue;
            }
            let g = self.g_off * (1.0 - x) + self.g_on * x;
            x = (x + waveform.dt * self.k_mob * g * v).clamp(0.0, 1.0);
        }
        Ok(DeviceState(x))
    }

    /// Inverse of [`conductance`](Self::conductance).
    pub fn program_to_conductance(&self, g_target: f64) -> Result<DeviceState> {
        if !g_target.is_finite() || !self.contains(g_target) {
            return Err(Error::OutOfRange {
                what: "target conductance",
                value: g_target,
                min: self.g_off,
                max: self.g_on,
            });
        }
        let x = (g_target - self.g_off) / (self.g_on - self.g_off);
        Ok(DeviceState(x.clamp(0.0, 1.0)))
    }
}

/// Dimensionless dopant state, always within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DeviceState(f64);

impl DeviceState {
    pub fn new(x: f64) -> Result<Self> {
        ensure_finite("device state", x)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfRange {
                what: "device state",
                value: x,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(Self(x))
    }

    /// Saturates at the dopant boundaries instead of failing.
    pub fn clamped(x: f64) -> Self {
        if x.is_nan() {
            Self(0.0)
        } else {
            Self(x.clamp(0.0, 1.0))
        }
    }

    pub fn x(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DeviceState {
    type Error = Error;

    fn try_from(x: f64) -> Result<Self> {
        Self::new(x)
    }
}

impl From<DeviceState> for f64 {
    fn from(s: DeviceState) -> f64 {
        s.0
    }
}

/// Uniformly sampled voltage waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub dt: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        ensure_positive("waveform dt", dt)?;
        Ok(Self { samples, dt })
    }

    pub fn constant(v: f64, n: usize, dt: f64) -> Result<Self> {
        Self::new(vec![v; n], dt)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dev() -> MemristorDevice {
        MemristorDevice::new(1e-5, 1e-3, 1.0, 1e4).unwrap()
    }

    #[test]
    fn conductance_endpoints_and_midpoint() {
        let d = dev();
        assert_eq!(d.conductance(DeviceState::new(0.0).unwrap()), 1e-5);
        assert_eq!(d.conductance(DeviceState::new(1.0).unwrap()), 1e-3);
        assert_relative_eq!(
            d.conductance(DeviceState::new(0.5).unwrap()),
            5.05e-4,
            max_relative = 1e-15
        );
    }

    #[test]
    fn current_is_ohmic() {
        let d = dev();
        assert_relative_eq!(
            d.current(DeviceState::new(0.5).unwrap(), 0.5),
            2.525e-4,
            max_relative = 1e-15
        );
        assert_eq!(d.current(DeviceState::new(0.3).unwrap(), 0.0), 0.0);
        assert_relative_eq!(
            d.current(DeviceState::new(1.0).unwrap(), 0.1),
            1e-4,
            max_relative = 1e-15
        );
    }

    #[test]
    fn rejects_bad_devices() {
        assert!(MemristorDevice::new(1e-3, 1e-5, 1.0, 1.0).is_err());
        assert!(MemristorDevice::new(0.0, 1e-5, 1.0, 1.0).is_err());
        assert!(MemristorDevice::new(1e-5, 1e-3, -0.1, 1.0).is_err());
        assert!(MemristorDevice::new(1e-5, 1e-3, 1.0, 0.0).is_err());
        assert!(DeviceState::new(1.5).is_err());
    }

    #[test]
    fn empty_waveform_keeps_state() {
        let s = DeviceState::new(0.3).unwrap();
        let w = Waveform::new(vec![], 1e-6).unwrap();
        assert_eq!(dev().evolve_state(s, &w).unwrap(), s);
    }

    #[test]
    fn sub_threshold_waveform_keeps_state() {
        let s = DeviceState::new(0.3).unwrap();
        let w = Waveform::constant(0.5, 1000, 1e-6).unwrap();
        assert_eq!(dev().evolve_state(s, &w).unwrap(), s);
    }

    #[test]
    fn non_finite_sample_is_rejected() {
        let w = Waveform::new(vec![0.0, f64::NAN], 1e-6).unwrap();
        let err = dev().evolve_state(DeviceState::new(0.3).unwrap(), &w);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    /// dG/dt = (g_on - g_off) k v G for constant v, so G grows exponentially
    /// and x follows by inverting the linear conductance law.
    fn closed_form_state(d: &MemristorDevice, x0: f64, v: f64, t: f64) -> f64 {
        let span = d.g_on - d.g_off;
        let g0 = d.g_off + span * x0;
        let g = g0 * (span * d.k_mob * v * t).exp();
        (g - d.g_off) / span
    }

    #[test]
    fn supra_threshold_matches_separable_ode() {
        let d = dev();
        let v = 2.0;
        let n = 2_000_000;
        // span·k·v·T = 1
        let t_total = 1.0 / ((d.g_on - d.g_off) * d.k_mob * v);
        let w = Waveform::constant(v, n, t_total / n as f64).unwrap();
        let x = d.evolve_state(DeviceState::new(0.1).unwrap(), &w).unwrap().x();
        let expected = closed_form_state(&d, 0.1, v, t_total);
        assert_relative_eq!(x, expected, max_relative = 1e-6);

        // negative drive depletes the state along the same law
        let w = Waveform::constant(-v, n, t_total / n as f64).unwrap();
        let x = d.evolve_state(DeviceState::new(0.9).unwrap(), &w).unwrap().x();
        let expected = closed_form_state(&d, 0.9, -v, t_total);
        assert_relative_eq!(x, expected, max_relative = 1e-6);
    }

    #[test]
    fn state_saturates_at_bounds() {
        let d = dev();
        let w = Waveform::constant(5.0, 10_000, 1e-2).unwrap();
        assert_eq!(d.evolve_state(DeviceState::new(0.5).unwrap(), &w).unwrap().x(), 1.0);
        let w = Waveform::constant(-5.0, 10_000, 1e-2).unwrap();
        assert_eq!(d.evolve_state(DeviceState::new(0.5).unwrap(), &w).unwrap().x(), 0.0);
    }

    #[test]
    fn programming_endpoints_and_errors() {
        let d = dev();
        assert_eq!(d.program_to_conductance(d.g_off).unwrap().x(), 0.0);
        assert_relative_eq!(
            d.program_to_conductance(0.5 * (d.g_on + d.g_off)).unwrap().x(),
            0.5,
            max_relative = 1e-15
        );
        match d.program_to_conductance(2.0 * d.g_on) {
            Err(Error::OutOfRange { min, max, .. }) => {
                assert_eq!((min, max), (d.g_off, d.g_on));
            }
            other => panic!("expected out-of-range, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn conductance_monotone_in_state(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let d = dev();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let g_lo = d.conductance(DeviceState::new(lo).unwrap());
            let g_hi = d.conductance(DeviceState::new(hi).unwrap());
            prop_assert!(g_lo <= g_hi);
            prop_assert!(g_lo >= d.g_off && g_hi <= d.g_on);
        }

        #[test]
        fn program_then_read_is_identity(frac in 0.0f64..=1.0) {
            let d = dev();
            let g = d.g_off + frac * (d.g_on - d.g_off);
            let back = d.conductance(d.program_to_conductance(g).unwrap());
            prop_assert!(((back - g) / g).abs() <= 1e-12);
        }

        #[test]
        fn sub_threshold_is_bit_exact(
            x0 in 0.0f64..=1.0,
            samples in proptest::collection::vec(-1.0f64..=1.0, 0..200),
        ) {
            let d = dev();
            let s = DeviceState::new(x0).unwrap();
            let w = Waveform::new(samples, 1e-3).unwrap();
            prop_assert_eq!(d.evolve_state(s, &w).unwrap().x().to_bits(), x0.to_bits());
        }

        #[test]
        fn state_stays_in_unit_interval(
            x0 in 0.0f64..=1.0,
            samples in proptest::collection::vec(-50.0f64..=50.0, 0..200),
            dt in 1e-4f64..10.0,
        ) {
            let d = dev();
            let w = Waveform::new(samples, dt).unwrap();
            let x = d.evolve_state(DeviceState::new(x0).unwrap(), &w).unwrap().x();
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }
}
