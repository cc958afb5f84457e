//! Device power model and per-device energy ledger.
//!
//! Active power is the sum of a fixed circuit term, one RF term per antenna
//! element, a baseband term proportional to bandwidth, and the PA input power
//! needed for the maximum transmit power. Reception and control monitoring
//! are folded into the circuit and idle terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DeviceProfile;
use crate::phy::dbm_to_mw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModelParams {
    pub p_idle_mw: f64,
    pub p_circuit_mw: f64,
    pub p_per_antenna_mw: f64,
    pub p_bb_mw_per_mhz: f64,
    pub pa_efficiency: f64,
}

impl Default for PowerModelParams {
    fn default() -> Self {
        Self {
            p_idle_mw: 0.5,
            p_circuit_mw: 20.0,
            p_per_antenna_mw: 15.0,
            p_bb_mw_per_mhz: 0.2,
            pa_efficiency: 0.3,
        }
    }
}

impl PowerModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_idle_mw", self.p_idle_mw),
            ("p_circuit_mw", self.p_circuit_mw),
            ("p_per_antenna_mw", self.p_per_antenna_mw),
            ("p_bb_mw_per_mhz", self.p_bb_mw_per_mhz),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("energy.{name} must be non-negative, got {v}")));
            }
        }
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return Err(Error::config("energy.pa_efficiency must lie in (0, 1]"));
        }
        Ok(())
    }
}

pub fn active_power_mw(profile: &DeviceProfile, params: &PowerModelParams) -> f64 {
    params.p_circuit_mw
        + f64::from(profile.num_antenna_elements) * params.p_per_antenna_mw
        + params.p_bb_mw_per_mhz * profile.bandwidth_mhz
        + dbm_to_mw(profile.max_tx_power_dbm) / params.pa_efficiency
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub active_time_s: f64,
    pub idle_time_s: f64,
    /// Energy in millijoules.
    pub energy_mj: f64,
}

impl EnergyLedger {
    /// A device is active in a slot iff it transmits a transport block.
    pub fn accumulate(&mut self, slot_active: bool, slot_duration_s: f64, active_power_mw: f64, p_idle_mw: f64) {
        if slot_active {
            self.active_time_s += slot_duration_s;
            self.energy_mj += active_power_mw * slot_duration_s;
        } else {
            self.idle_time_s += slot_duration_s;
            self.energy_mj += p_idle_mw * slot_duration_s;
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.active_time_s + self.idle_time_s
    }

    pub fn duty_cycle(&self) -> f64 {
        let d = self.duration_s();
        if d > 0.0 {
            self.active_time_s / d
        } else {
            0.0
        }
    }

    /// Average power in mW (mJ per second).
    pub fn avg_power_mw(&self) -> f64 {
        let d = self.duration_s();
        if d > 0.0 {
            self.energy_mj / d
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{named_profile, ProfileName};

    #[test]
    fn ledger_examples() {
        let slot = 125e-6;
        let slots = 80_000;

        let mut idle = EnergyLedger::default();
        for _ in 0..slots {
            idle.accumulate(false, slot, 111.5, 0.5);
        }
        assert!((idle.energy_mj - 5.0).abs() < 1e-9);
        assert!((idle.avg_power_mw() - 0.5).abs() < 1e-9);

        let mut duty = EnergyLedger::default();
        for i in 0..slots {
            duty.accumulate(i % 5 == 0, slot, 111.5, 0.5);
        }
        assert!((duty.duty_cycle() - 0.2).abs() < 1e-9);
        assert!((duty.avg_power_mw() - 22.7).abs() < 1e-9);

        let mut full = EnergyLedger::default();
        for _ in 0..slots {
            full.accumulate(true, slot, 111.5, 0.5);
        }
        assert!((full.avg_power_mw() - 111.5).abs() < 1e-9);
        assert!((full.duration_s() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn params_validation() {
        assert!(PowerModelParams::default().validate().is_ok());
        let p = PowerModelParams { pa_efficiency: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = PowerModelParams { p_idle_mw: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn nr_device_draws_more_than_reduced_devices() {
        let params = PowerModelParams::default();
        let low = active_power_mw(&named_profile(ProfileName::NrLLow), &params);
        let mid = active_power_mw(&named_profile(ProfileName::NrLMid), &params);
        let nr = active_power_mw(&named_profile(ProfileName::NrRelease15), &params);
        assert!(low < mid && mid < nr);
    }
}
