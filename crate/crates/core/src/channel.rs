//! Large-scale indoor-factory channel: LOS probability, pathloss, shadowing,
//! and a per-slot small-scale term.
//!
//! Pathloss coefficients follow the 3GPP InF tables:
//!
//! | state   | intercept | distance slope | frequency slope |
//! |---------|-----------|----------------|-----------------|
//! | LOS     | 31.84     | 21.5           | 19.0            |
//! | SH NLOS | 32.4      | 23.0           | 20.0            |
//! | DH NLOS | 33.63     | 21.9           | 20.0            |
//!
//! NLOS pathloss is lower-bounded by the LOS value at the same geometry.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InfVariant, Position};

/// `intercept + distance_slope·log10(d) + frequency_slope·log10(fc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossCoeffs {
    pub intercept_db: f64,
    pub distance_slope: f64,
    pub frequency_slope: f64,
}

impl PathlossCoeffs {
    pub fn eval(&self, d3d_m: f64, fc_ghz: f64) -> f64 {
        self.intercept_db + self.distance_slope * d3d_m.log10() + self.frequency_slope * fc_ghz.log10()
    }
}

/// Clutter description driving the LOS probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterParams {
    /// Fraction of the area covered by clutter, `r`.
    pub density: f64,
    /// Typical clutter size in meters.
    pub size_m: f64,
    /// Clutter height in meters.
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub los: PathlossCoeffs,
    pub sh_nlos: PathlossCoeffs,
    pub dh_nlos: PathlossCoeffs,
    pub shadow_los_db: f64,
    pub shadow_sh_nlos_db: f64,
    pub shadow_dh_nlos_db: f64,
    pub sh_clutter: ClutterParams,
    pub dh_clutter: ClutterParams,
    pub fast_fading_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            los: PathlossCoeffs { intercept_db: 31.84, distance_slope: 21.5, frequency_slope: 19.0 },
            sh_nlos: PathlossCoeffs { intercept_db: 32.4, distance_slope: 23.0, frequency_slope: 20.0 },
            dh_nlos: PathlossCoeffs { intercept_db: 33.63, distance_slope: 21.9, frequency_slope: 20.0 },
            shadow_los_db: 4.3,
            shadow_sh_nlos_db: 5.9,
            shadow_dh_nlos_db: 4.0,
            sh_clutter: ClutterParams { density: 0.2, size_m: 10.0, height_m: 2.0 },
            dh_clutter: ClutterParams { density: 0.6, size_m: 2.0, height_m: 2.0 },
            fast_fading_db: 3.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("shadow_los_db", self.shadow_los_db),
            ("shadow_sh_nlos_db", self.shadow_sh_nlos_db),
            ("shadow_dh_nlos_db", self.shadow_dh_nlos_db),
            ("fast_fading_db", self.fast_fading_db),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::config(format!("channel.{name} must be a non-negative std dev, got {s}")));
            }
        }
        for (name, c) in [("sh_clutter", self.sh_clutter), ("dh_clutter", self.dh_clutter)] {
            if !(c.density > 0.0 && c.density < 1.0) {
                return Err(Error::config(format!(
                    "channel.{name}.density must lie strictly between 0 and 1, got {}",
                    c.density
                )));
            }
            if !(c.size_m > 0.0) {
                return Err(Error::config(format!("channel.{name}.size_m must be positive")));
            }
        }
        Ok(())
    }

    pub fn clutter(&self, variant: InfVariant) -> ClutterParams {
        match variant {
            InfVariant::Sh => self.sh_clutter,
            InfVariant::Dh => self.dh_clutter,
        }
    }

    pub fn nlos(&self, variant: InfVariant) -> PathlossCoeffs {
        match variant {
            InfVariant::Sh => self.sh_nlos,
            InfVariant::Dh => self.dh_nlos,
        }
    }

    pub fn shadow_std_db(&self, variant: InfVariant, is_los: bool) -> f64 {
        match (is_los, variant) {
            (true, _) => self.shadow_los_db,
            (false, InfVariant::Sh) => self.shadow_sh_nlos_db,
            (false, InfVariant::Dh) => self.shadow_dh_nlos_db,
        }
    }

    /// Decay length `k` of the LOS probability for an elevated base station:
    /// `k = -d_clutter / ln(1 - r) · (h_bs - h_ut) / (h_c - h_ut)`.
    ///
    /// The clutter height is clipped to the base-station height so the
    /// elevation factor never drops below one.
    pub fn los_decay_length_m(&self, variant: InfVariant, bs_height_m: f64, ue_height_m: f64) -> Result<f64> {
        let c = self.clutter(variant);
        if c.height_m <= ue_height_m {
            return Err(Error::config(format!(
                "clutter height {} m must exceed the device height {} m",
                c.height_m, ue_height_m
            )));
        }
        let h_c = c.height_m.min(bs_height_m);
        let base = -c.size_m / (1.0 - c.density).ln();
        Ok(base * (bs_height_m - ue_height_m) / (h_c - ue_height_m))
    }
}

/// `exp(-d2d / k)`. Equals 1 at zero distance and never increases with distance.
pub fn los_probability(d2d_m: f64, decay_length_m: f64) -> f64 {
    (-d2d_m.max(0.0) / decay_length_m).exp()
}

pub fn pathloss_db(d3d_m: f64, fc_ghz: f64, is_los: bool, variant: InfVariant, params: &ChannelParams) -> f64 {
    let d = d3d_m.max(1.0);
    let los = params.los.eval(d, fc_ghz);
    if is_los {
        los
    } else {
        params.nlos(variant).eval(d, fc_ghz).max(los)
    }
}

/// Large-scale state of one device-to-base-station link. Frozen for the
/// whole run because devices are static.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub distance_2d_m: f64,
    pub distance_3d_m: f64,
    pub is_los: bool,
    pub los_probability: f64,
    pub pathloss_db: f64,
    pub shadow_db: f64,
}

/// Draws the LOS state (one uniform) and then the shadowing (one normal)
/// from `rng`.
pub fn realize_link<R: Rng + ?Sized>(
    bs: &Position,
    ue: &Position,
    carrier_ghz: f64,
    variant: InfVariant,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<LinkState> {
    let d2d = bs.distance_2d(ue);
    let d3d = bs.distance_3d(ue);
    let k = params.los_decay_length_m(variant, bs.z, ue.z)?;
    let p_los = los_probability(d2d, k);
    let u: f64 = rng.random();
    let is_los = u < p_los;
    let z: f64 = rng.sample(StandardNormal);
    Ok(LinkState {
        distance_2d_m: d2d,
        distance_3d_m: d3d,
        is_los,
        los_probability: p_los,
        pathloss_db: pathloss_db(d3d, carrier_ghz, is_los, variant, params),
        shadow_db: params.shadow_std_db(variant, is_los) * z,
    })
}

/// Per-slot small-scale offset in dB, `N(0, sigma²)`.
pub fn instantaneous_offset_db<R: Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma_db * z
}
