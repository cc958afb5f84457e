//! Benchmark fixtures shared by the criterion targets.

use nrlight_core::{named_profile, DeviceProfile, ProfileName, SimConfig};

/// Default scenario shortened to `duration_s` with a single drop.
pub fn short_config(duration_s: f64) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.scenario.sim_duration_s = duration_s;
    cfg.scenario.num_drops = 1;
    cfg.metrics.warmup_s = 0.0;
    cfg.metrics.tail_guard_s = 0.0;
    cfg
}

pub fn baseline() -> DeviceProfile {
    named_profile(ProfileName::NrLLow)
}
