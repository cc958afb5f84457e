//! Whole-simulation configuration, loadable from TOML or JSON.
//!
//! Every table is optional; missing keys take the defaults below.
//!
//! ```toml
//! [scenario]
//! area_m = [20.0, 20.0]
//! num_devices = 20
//! video_fraction = 0.1
//! carrier_ghz = 28.0
//! bs_position = [10.0, 10.0, 3.0]
//! ue_height_m = 1.5
//! inf_variant = "dh"
//! sim_duration_s = 10.0
//! num_drops = 20
//! seed = 1
//!
//! [channel]          # pathloss coefficients, shadowing, clutter, fast fading
//! [phy]              # bs_elements = 64, noise_figure_db = 7, amc_margin_db = 2, ...
//! [mac]              # scs_khz = 120, queue_capacity_bytes = 1000000, ...
//! [traffic]          # video_rate_bps = 10e6, data_mean_rate_bps = 500e3, ...
//! [energy]           # p_idle_mw = 0.5, p_circuit_mw = 20, ...
//! [metrics]          # warmup_s = 0.5, tail_guard_s = 0.1
//!
//! [[profiles]]       # optional custom profile list for `campaign`
//! label = "NR-L-Low"
//! bandwidth_mhz = 50
//! max_mcs_index = 9
//! num_antenna_elements = 1
//! max_tx_power_dbm = 13
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelParams;
use crate::energy::PowerModelParams;
use crate::error::{Error, Result};
use crate::mac::MacConfig;
use crate::model::{DeviceProfile, Scenario};
use crate::phy::{PhyConfig, PhyTables};
use crate::traffic::SourceConfig;

/// Measurement window settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Initial period excluded from every metric.
    pub warmup_s: f64,
    /// Packets created in the final `tail_guard_s` are not counted, so every
    /// counted packet has had a full deadline to complete.
    pub tail_guard_s: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            warmup_s: 0.5,
            tail_guard_s: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub channel: ChannelParams,
    pub phy: PhyConfig,
    pub mac: MacConfig,
    pub traffic: SourceConfig,
    pub energy: PowerModelParams,
    pub metrics: MetricsConfig,
    pub profiles: Vec<DeviceProfile>,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Loads by extension: `.json` as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    /// Checks every section and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.scenario.validate()?;
        self.channel.validate()?;
        self.phy.validate()?;
        self.mac.validate()?;
        self.traffic.validate()?;
        self.energy.validate()?;
        let m = &self.metrics;
        if !(m.warmup_s >= 0.0 && m.tail_guard_s >= 0.0) {
            return Err(Error::config("metrics windows must be non-negative"));
        }
        if m.warmup_s + m.tail_guard_s >= self.scenario.sim_duration_s {
            return Err(Error::config(format!(
                "warm-up ({} s) plus tail guard ({} s) leaves no measurement window in a {} s run",
                m.warmup_s, m.tail_guard_s, self.scenario.sim_duration_s
            )));
        }
        for v in crate::model::InfVariant::ALL {
            let h_bs = self.scenario.bs_position[2];
            self.channel.los_decay_length_m(v, h_bs, self.scenario.ue_height_m)?;
        }
        let tables = PhyTables::load(&self.phy)?;

        let mut warnings = Vec::new();
        let mut labels = std::collections::HashSet::new();
        for p in &self.profiles {
            warnings.extend(self.validate_profile_with(p, &tables)?);
            if !labels.insert(p.label.as_str()) {
                return Err(Error::config(format!("duplicate profile label '{}'", p.label)));
            }
        }
        Ok(warnings)
    }

    pub fn validate_profile(&self, profile: &DeviceProfile) -> Result<Vec<String>> {
        let tables = PhyTables::load(&self.phy)?;
        self.validate_profile_with(profile, &tables)
    }

    fn validate_profile_with(&self, profile: &DeviceProfile, tables: &PhyTables) -> Result<Vec<String>> {
        let warnings = profile.validate()?;
        tables.prb.num_prb(profile.bandwidth_mhz)?;
        if profile.max_mcs_index > tables.mcs.max_index() {
            return Err(Error::config(format!(
                "profile '{}': MCS cap {} exceeds the table (max {})",
                profile.label,
                profile.max_mcs_index,
                tables.mcs.max_index()
            )));
        }
        Ok(warnings)
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let c = SimConfig::from_toml_str("").unwrap();
        assert_eq!(c, SimConfig::default());
        assert_eq!(c.scenario.num_devices, 20);
        assert_eq!(c.scenario.area_m, [20.0, 20.0]);
        assert_eq!(c.phy.bs_elements, 64);
        assert!(c.validate().unwrap().is_empty());
    }

    #[test]
    fn partial_tables_override_defaults() {
        let c = SimConfig::from_toml_str(
            r#"
            [scenario]
            num_devices = 5
            inf_variant = "sh"
            [channel]
            fast_fading_db = 0.0
            [[profiles]]
            label = "custom"
            bandwidth_mhz = 100
            max_mcs_index = 16
            num_antenna_elements = 2
            max_tx_power_dbm = 20
            "#,
        )
        .unwrap();
        assert_eq!(c.scenario.num_devices, 5);
        assert_eq!(c.scenario.video_fraction, 0.1);
        assert_eq!(c.channel.fast_fading_db, 0.0);
        assert_eq!(c.channel.shadow_los_db, 4.3);
        let warnings = c.validate().unwrap();
        assert_eq!(warnings.len(), 2, "{warnings:?}");
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(SimConfig::from_toml_str("[scenario]\nnum_device = 3\n").unwrap_err().is_config());
        let mut c = SimConfig::default();
        c.scenario.sim_duration_s = 0.5;
        assert!(c.validate().unwrap_err().is_config());
        let mut c = SimConfig::default();
        c.channel.dh_clutter.height_m = 1.0;
        assert!(c.validate().unwrap_err().is_config());
        let mut c = SimConfig::default();
        c.profiles = vec![crate::model::named_profile(crate::model::ProfileName::NrLLow); 2];
        assert!(c.validate().unwrap_err().is_config());
    }

    #[test]
    fn json_and_toml_agree() {
        let c = SimConfig::default();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(SimConfig::from_json_str(&json).unwrap(), c);
        let toml_text = toml::to_string(&c).unwrap();
        assert_eq!(SimConfig::from_toml_str(&toml_text).unwrap(), c);
        assert_eq!(c.hash(), SimConfig::default().hash());
    }
}
