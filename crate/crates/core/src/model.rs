//! Scenario geometry, device profiles and network drops.
//!
//! A [`DeviceProfile`] captures the four simplification knobs studied for
//! reduced-capability devices: bandwidth, MCS cap, antenna count and maximum
//! transmit power. [`named_profile`] and [`sweep_variants`] produce the
//! configurations of the reference campaign; [`build_drop`] places devices.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{DropStreams, Subsystem};

pub const BANDWIDTH_GRID_MHZ: [f64; 3] = [50.0, 100.0, 200.0];
pub const MCS_CAP_GRID: [u8; 3] = [9, 16, 28];
pub const ANTENNA_GRID: [u32; 3] = [1, 4, 16];
pub const TX_POWER_GRID_DBM: [f64; 3] = [13.0, 18.0, 23.0];

/// Device capability knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub label: String,
    pub bandwidth_mhz: f64,
    pub max_mcs_index: u8,
    pub num_antenna_elements: u32,
    pub max_tx_power_dbm: f64,
}

impl DeviceProfile {
    /// Hard errors for values the simulator cannot run. Values outside the
    /// reference grid are returned as warnings only.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.bandwidth_mhz.is_finite() && self.bandwidth_mhz > 0.0) {
            return Err(Error::config(format!(
                "profile '{}': bandwidth must be positive, got {}",
                self.label, self.bandwidth_mhz
            )));
        }
        if self.max_mcs_index > 28 {
            return Err(Error::config(format!(
                "profile '{}': max MCS index must be within 0..=28, got {}",
                self.label, self.max_mcs_index
            )));
        }
        if self.num_antenna_elements == 0 {
            return Err(Error::config(format!(
                "profile '{}': at least one antenna element is required",
                self.label
            )));
        }
        if !self.max_tx_power_dbm.is_finite() {
            return Err(Error::config(format!(
                "profile '{}': transmit power must be finite",
                self.label
            )));
        }

        let mut warnings = Vec::new();
        if !BANDWIDTH_GRID_MHZ.contains(&self.bandwidth_mhz) {
            warnings.push(format!(
                "profile '{}': bandwidth {} MHz is outside the reference grid {:?}",
                self.label, self.bandwidth_mhz, BANDWIDTH_GRID_MHZ
            ));
        }
        if !MCS_CAP_GRID.contains(&self.max_mcs_index) {
            warnings.push(format!(
                "profile '{}': MCS cap {} is outside the reference grid {:?}",
                self.label, self.max_mcs_index, MCS_CAP_GRID
            ));
        }
        if !ANTENNA_GRID.contains(&self.num_antenna_elements) {
            warnings.push(format!(
                "profile '{}': {} antenna elements is outside the reference grid {:?}",
                self.label, self.num_antenna_elements, ANTENNA_GRID
            ));
        }
        if !TX_POWER_GRID_DBM.contains(&self.max_tx_power_dbm) {
            warnings.push(format!(
                "profile '{}': {} dBm is outside the reference grid {:?}",
                self.label, self.max_tx_power_dbm, TX_POWER_GRID_DBM
            ));
        }
        Ok(warnings)
    }

    fn knobs_equal(&self, other: &DeviceProfile) -> [bool; 4] {
        [
            self.bandwidth_mhz == other.bandwidth_mhz,
            self.max_mcs_index == other.max_mcs_index,
            self.num_antenna_elements == other.num_antenna_elements,
            self.max_tx_power_dbm == other.max_tx_power_dbm,
        ]
    }

    /// Number of knobs (out of four) in which the two profiles differ.
    pub fn knob_distance(&self, other: &DeviceProfile) -> usize {
        self.knobs_equal(other).iter().filter(|eq| !**eq).count()
    }
}

/// Named reference configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileName {
    NrLLow,
    NrLMid,
    NrRelease15,
}

impl ProfileName {
    pub const ALL: [ProfileName; 3] = [ProfileName::NrLLow, ProfileName::NrLMid, ProfileName::NrRelease15];

    pub fn label(self) -> &'static str {
        match self {
            ProfileName::NrLLow => "NR-L-Low",
            ProfileName::NrLMid => "NR-L-Mid",
            ProfileName::NrRelease15 => "NR",
        }
    }
}

impl FromStr for ProfileName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "nr-l-low" | "nrl-low" | "low" => Ok(ProfileName::NrLLow),
            "nr-l-mid" | "nrl-mid" | "mid" => Ok(ProfileName::NrLMid),
            "nr" | "nr-release15" | "nr-release-15" | "release15" => Ok(ProfileName::NrRelease15),
            other => Err(Error::config(format!(
                "unknown profile '{other}' (expected nr-l-low, nr-l-mid or nr)"
            ))),
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn named_profile(name: ProfileName) -> DeviceProfile {
    let (bw, mcs, ant, ptx) = match name {
        ProfileName::NrLLow => (50.0, 9, 1, 13.0),
        ProfileName::NrLMid => (50.0, 9, 4, 18.0),
        ProfileName::NrRelease15 => (200.0, 28, 16, 23.0),
    };
    DeviceProfile {
        label: name.label().to_string(),
        bandwidth_mhz: bw,
        max_mcs_index: mcs,
        num_antenna_elements: ant,
        max_tx_power_dbm: ptx,
    }
}

/// Single-knob relaxations of `baseline`: bandwidth {100, 200} MHz, MCS cap
/// {16, 28}, antennas {4, 16}, TX power {18, 23} dBm, in that order.
pub fn sweep_variants(baseline: &DeviceProfile) -> Vec<DeviceProfile> {
    let mut out = Vec::with_capacity(8);
    for bw in [100.0, 200.0] {
        out.push(DeviceProfile {
            label: format!("BW {bw} MHz"),
            bandwidth_mhz: bw,
            ..baseline.clone()
        });
    }
    for mcs in [16, 28] {
        out.push(DeviceProfile {
            label: format!("Max MCS {mcs}"),
            max_mcs_index: mcs,
            ..baseline.clone()
        });
    }
    for ant in [4, 16] {
        out.push(DeviceProfile {
            label: format!("Antennas {ant}"),
            num_antenna_elements: ant,
            ..baseline.clone()
        });
    }
    for p in [18.0, 23.0] {
        out.push(DeviceProfile {
            label: format!("TX {p} dBm"),
            max_tx_power_dbm: p,
            ..baseline.clone()
        });
    }
    out
}

/// Baseline followed by its eight single-knob variants.
pub fn bandwidth_sweep_campaign() -> Vec<DeviceProfile> {
    let base = named_profile(ProfileName::NrLLow);
    let mut v = vec![base.clone()];
    v.extend(sweep_variants(&base));
    v
}

/// The three-way summary comparison: full NR device and both reduced profiles.
pub fn summary_campaign() -> Vec<DeviceProfile> {
    vec![
        named_profile(ProfileName::NrRelease15),
        named_profile(ProfileName::NrLMid),
        named_profile(ProfileName::NrLLow),
    ]
}

/// Indoor-factory channel sub-scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfVariant {
    /// Sparse clutter, elevated base station.
    Sh,
    /// Dense clutter, elevated base station.
    Dh,
}

impl InfVariant {
    pub const ALL: [InfVariant; 2] = [InfVariant::Sh, InfVariant::Dh];

    pub fn as_str(self) -> &'static str {
        match self {
            InfVariant::Sh => "InF-SH",
            InfVariant::Dh => "InF-DH",
        }
    }
}

impl FromStr for InfVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_start_matches("inf-") {
            "sh" => Ok(InfVariant::Sh),
            "dh" => Ok(InfVariant::Dh),
            other => Err(Error::config(format!("unknown InF variant '{other}' (expected sh or dh)"))),
        }
    }
}

impl fmt::Display for InfVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    VideoStream,
    DataSensor,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::VideoStream, Role::DataSensor];
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance_2d(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_3d(&self, other: &Position) -> f64 {
        let d2 = self.distance_2d(other);
        d2.hypot(self.z - other.z)
    }
}

impl From<[f64; 3]> for Position {
    fn from(p: [f64; 3]) -> Self {
        Position::new(p[0], p[1], p[2])
    }
}

/// Deployment description shared by every run of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub area_m: [f64; 2],
    pub num_devices: u32,
    pub video_fraction: f64,
    pub carrier_ghz: f64,
    pub bs_position: [f64; 3],
    pub ue_height_m: f64,
    pub inf_variant: InfVariant,
    pub sim_duration_s: f64,
    pub num_drops: u32,
    pub seed: u64,
    /// Optional fixed (x, y) device positions; replaces random placement.
    pub fixed_ue_positions: Option<Vec<[f64; 2]>>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            area_m: [20.0, 20.0],
            num_devices: 20,
            video_fraction: 0.1,
            carrier_ghz: 28.0,
            bs_position: [10.0, 10.0, 3.0],
            ue_height_m: 1.5,
            inf_variant: InfVariant::Dh,
            sim_duration_s: 10.0,
            num_drops: 20,
            seed: 1,
            fixed_ue_positions: None,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let [w, h] = self.area_m;
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            return Err(Error::config(format!("area must be positive, got {w} x {h} m")));
        }
        if self.num_devices == 0 {
            return Err(Error::config("num_devices must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.video_fraction) {
            return Err(Error::config(format!(
                "video_fraction must lie in [0, 1], got {}",
                self.video_fraction
            )));
        }
        if !(self.carrier_ghz > 0.0) {
            return Err(Error::config("carrier frequency must be positive"));
        }
        let [bx, by, bz] = self.bs_position;
        if !(0.0..=w).contains(&bx) || !(0.0..=h).contains(&by) || !(bz > 0.0) {
            return Err(Error::config(format!(
                "base station ({bx}, {by}, {bz}) must lie inside the area above the floor"
            )));
        }
        if !(self.ue_height_m >= 0.0 && self.ue_height_m < bz) {
            return Err(Error::config(format!(
                "device height {} m must be non-negative and below the base station ({bz} m)",
                self.ue_height_m
            )));
        }
        if !(self.sim_duration_s > 0.0) {
            return Err(Error::config("simulation duration must be positive"));
        }
        if self.num_drops == 0 {
            return Err(Error::config("num_drops must be at least 1"));
        }
        if let Some(fixed) = &self.fixed_ue_positions {
            if fixed.len() != self.num_devices as usize {
                return Err(Error::config(format!(
                    "{} fixed positions given for {} devices",
                    fixed.len(),
                    self.num_devices
                )));
            }
            for &[x, y] in fixed {
                if !(0.0..=w).contains(&x) || !(0.0..=h).contains(&y) {
                    return Err(Error::config(format!("fixed position ({x}, {y}) lies outside the area")));
                }
            }
        }
        Ok(())
    }

    pub fn num_video_devices(&self) -> usize {
        (self.video_fraction * f64::from(self.num_devices)).round() as usize
    }

    pub fn bs(&self) -> Position {
        self.bs_position.into()
    }
}

/// One random realization of device placement and roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drop {
    pub index: u32,
    pub ue_positions: Vec<Position>,
    pub ue_roles: Vec<Role>,
    pub rng_streams: DropStreams,
}

impl Drop {
    pub fn num_devices(&self) -> usize {
        self.ue_positions.len()
    }
}

pub fn build_drop(scenario: &Scenario, drop_index: u32) -> Result<Drop> {
    scenario.validate()?;
    if drop_index >= scenario.num_drops {
        return Err(Error::config(format!(
            "drop index {drop_index} out of range (num_drops = {})",
            scenario.num_drops
        )));
    }
    let streams = DropStreams::new(scenario.seed, drop_index);
    let n = scenario.num_devices as usize;
    let [w, h] = scenario.area_m;
    let z = scenario.ue_height_m;

    let ue_positions = match &scenario.fixed_ue_positions {
        Some(fixed) => fixed.iter().map(|&[x, y]| Position::new(x, y, z)).collect(),
        None => {
            let mut rng = streams.for_entity(Subsystem::Placement, 0);
            (0..n)
                .map(|_| Position::new(rng.random_range(0.0..=w), rng.random_range(0.0..=h), z))
                .collect()
        }
    };

    let mut ue_roles = vec![Role::DataSensor; n];
    let mut rng = streams.for_entity(Subsystem::Roles, 0);
    for i in sample(&mut rng, n, scenario.num_video_devices().min(n)) {
        ue_roles[i] = Role::VideoStream;
    }

    Ok(Drop {
        index: drop_index,
        ue_positions,
        ue_roles,
        rng_streams: streams,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_profiles_match_reference_configurations() {
        let low = named_profile(ProfileName::NrLLow);
        assert_eq!(
            (low.bandwidth_mhz, low.max_mcs_index, low.num_antenna_elements, low.max_tx_power_dbm),
            (50.0, 9, 1, 13.0)
        );
        let mid = named_profile(ProfileName::NrLMid);
        assert_eq!(
            (mid.bandwidth_mhz, mid.max_mcs_index, mid.num_antenna_elements, mid.max_tx_power_dbm),
            (50.0, 9, 4, 18.0)
        );
        let nr = named_profile(ProfileName::NrRelease15);
        assert_eq!(
            (nr.bandwidth_mhz, nr.max_mcs_index, nr.num_antenna_elements, nr.max_tx_power_dbm),
            (200.0, 28, 16, 23.0)
        );
        assert_eq!(nr.label, "NR");
    }

    #[test]
    fn sweep_has_eight_single_knob_variants_in_order() {
        let base = named_profile(ProfileName::NrLLow);
        let v = sweep_variants(&base);
        assert_eq!(v.len(), 8);
        assert_eq!(
            (v[0].bandwidth_mhz, v[0].max_mcs_index, v[0].num_antenna_elements, v[0].max_tx_power_dbm),
            (100.0, 9, 1, 13.0)
        );
        assert_eq!(
            (v[5].bandwidth_mhz, v[5].max_mcs_index, v[5].num_antenna_elements, v[5].max_tx_power_dbm),
            (50.0, 9, 16, 13.0)
        );
        for p in &v {
            assert_eq!(p.knob_distance(&base), 1, "{}", p.label);
        }
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                assert_ne!(v[i], v[j]);
                assert_ne!(v[i].label, v[j].label);
            }
        }
    }

    #[test]
    fn profile_name_parsing() {
        assert_eq!("nr-l-low".parse::<ProfileName>().unwrap(), ProfileName::NrLLow);
        assert_eq!("NR_L_MID".parse::<ProfileName>().unwrap(), ProfileName::NrLMid);
        assert_eq!("nr".parse::<ProfileName>().unwrap(), ProfileName::NrRelease15);
        assert!("nr-l-high".parse::<ProfileName>().is_err());
        assert_eq!("InF-DH".parse::<InfVariant>().unwrap(), InfVariant::Dh);
        assert_eq!("sh".parse::<InfVariant>().unwrap(), InfVariant::Sh);
    }

    #[test]
    fn off_grid_profiles_warn_but_validate() {
        let mut p = named_profile(ProfileName::NrLLow);
        assert!(p.validate().unwrap().is_empty());
        p.bandwidth_mhz = 400.0;
        p.max_tx_power_dbm = 20.0;
        assert_eq!(p.validate().unwrap().len(), 2);
        p.max_mcs_index = 29;
        assert!(p.validate().unwrap_err().is_config());
    }

    #[test]
    fn drop_roles_follow_video_fraction() {
        let sc = Scenario::default();
        let d = build_drop(&sc, 0).unwrap();
        assert_eq!(d.ue_roles.iter().filter(|r| **r == Role::VideoStream).count(), 2);

        let sc = Scenario { video_fraction: 0.0, ..Scenario::default() };
        let d = build_drop(&sc, 0).unwrap();
        assert!(d.ue_roles.iter().all(|r| *r == Role::DataSensor));
    }

    #[test]
    fn drop_is_deterministic() {
        let sc = Scenario { seed: 42, ..Scenario::default() };
        let a = serde_json::to_vec(&build_drop(&sc, 3).unwrap()).unwrap();
        let b = serde_json::to_vec(&build_drop(&sc, 3).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_vec(&build_drop(&sc, 4).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn drop_rejects_bad_inputs() {
        let sc = Scenario::default();
        assert!(build_drop(&sc, 20).unwrap_err().is_config());
        let sc = Scenario { area_m: [0.0, 20.0], ..Scenario::default() };
        assert!(build_drop(&sc, 0).unwrap_err().is_config());
        let sc = Scenario { fixed_ue_positions: Some(vec![[1.0, 1.0]]), ..Scenario::default() };
        assert!(build_drop(&sc, 0).unwrap_err().is_config());
    }
}
