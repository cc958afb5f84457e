//! Link budget, analog beamforming gain, MCS tables, link adaptation,
//! transport-block sizing and the block-error abstraction.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::LinkState;
use crate::error::{Error, Result};
use crate::model::DeviceProfile;

pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;
/// Floor applied to MCS thresholds whose spectral efficiency tends to zero.
pub const THRESHOLD_FLOOR_DB: f64 = -20.0;

const DEFAULT_MCS_TABLE: &str = include_str!("../data/mcs_table_64qam.csv");
const DEFAULT_PRB_TABLE: &str = include_str!("../data/prb_scs120.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhyConfig {
    pub bs_elements: u32,
    pub noise_figure_db: f64,
    /// Backoff added to the Shannon-gap threshold when selecting an MCS.
    pub amc_margin_db: f64,
    /// Logistic slope of the BLER curve.
    pub bler_slope_db: f64,
    pub re_per_prb: u32,
    /// Lumped loss not captured by the large-scale model: beam misalignment,
    /// polarization mismatch and receiver implementation loss.
    pub excess_loss_db: f64,
    /// Weight of the newest sample in the AMC SINR filter.
    pub amc_filter_alpha: f64,
    pub mcs_table: Option<PathBuf>,
    pub prb_table: Option<PathBuf>,
}

impl Default for PhyConfig {
    fn default() -> Self {
        Self {
            bs_elements: 64,
            noise_figure_db: 7.0,
            amc_margin_db: 2.0,
            bler_slope_db: 0.5,
            re_per_prb: 144,
            excess_loss_db: 34.0,
            amc_filter_alpha: 0.1,
            mcs_table: None,
            prb_table: None,
        }
    }
}

impl PhyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bs_elements == 0 {
            return Err(Error::config("phy.bs_elements must be at least 1"));
        }
        if !(self.bler_slope_db > 0.0) {
            return Err(Error::config("phy.bler_slope_db must be positive"));
        }
        if !(self.amc_filter_alpha > 0.0 && self.amc_filter_alpha <= 1.0) {
            return Err(Error::config("phy.amc_filter_alpha must lie in (0, 1]"));
        }
        if !self.excess_loss_db.is_finite() || !self.noise_figure_db.is_finite() || !self.amc_margin_db.is_finite() {
            return Err(Error::config("phy losses and margins must be finite"));
        }
        Ok(())
    }
}

/// One row of the MCS table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: u8,
    pub modulation_order: u8,
    pub code_rate_x1024: u16,
    pub spectral_efficiency: f64,
    /// Minimum filtered SINR at which link adaptation picks this entry.
    pub min_sinr_db: f64,
}

impl McsEntry {
    pub fn new(index: u8, modulation_order: u8, code_rate_x1024: u16) -> Self {
        let spectral_efficiency = f64::from(modulation_order) * f64::from(code_rate_x1024) / 1024.0;
        Self {
            index,
            modulation_order,
            code_rate_x1024,
            spectral_efficiency,
            min_sinr_db: f64::NAN,
        }
    }

    pub fn code_rate(&self) -> f64 {
        f64::from(self.code_rate_x1024) / 1024.0
    }

    /// SINR at which decoding succeeds half of the time.
    pub fn decoding_threshold_db(&self) -> f64 {
        mcs_threshold_db(self, 0.0)
    }
}

/// Shannon-gap threshold `10·log10(2^SE − 1) + margin`, floored at −20 dB.
pub fn mcs_threshold_db(entry: &McsEntry, margin_db: f64) -> f64 {
    let snr = 2f64.powf(entry.spectral_efficiency) - 1.0;
    let db = if snr > 0.0 { 10.0 * snr.log10() } else { f64::NEG_INFINITY };
    (db + margin_db).max(THRESHOLD_FLOOR_DB)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

#[derive(Deserialize)]
struct McsRow {
    index: u8,
    modulation_order: u8,
    code_rate_x1024: u16,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

impl McsTable {
    pub fn standard(margin_db: f64) -> Self {
        Self::from_csv_str(DEFAULT_MCS_TABLE, margin_db).expect("bundled MCS table is valid")
    }

    pub fn from_path(path: &Path, margin_db: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read MCS table {}: {e}", path.display())))?;
        Self::from_csv_str(&text, margin_db)
    }

    /// Parses `index,modulation_order,code_rate_x1024` rows. Selection
    /// thresholds are made strictly increasing in index: where the
    /// Shannon-gap threshold would not increase (a higher modulation order at
    /// equal or lower efficiency) it is nudged 0.01 dB above its predecessor.
    pub fn from_csv_str(text: &str, margin_db: f64) -> Result<Self> {
        let mut entries = Vec::new();
        for row in csv_reader(text).deserialize::<McsRow>() {
            let row = row.map_err(|e| Error::config(format!("bad MCS table row: {e}")))?;
            if !matches!(row.modulation_order, 2 | 4 | 6 | 8) || row.code_rate_x1024 == 0 || row.code_rate_x1024 >= 1024
            {
                return Err(Error::config(format!("MCS {}: invalid modulation order or rate", row.index)));
            }
            entries.push(McsEntry::new(row.index, row.modulation_order, row.code_rate_x1024));
        }
        if entries.is_empty() {
            return Err(Error::config("MCS table is empty"));
        }
        for (i, e) in entries.iter().enumerate() {
            if usize::from(e.index) != i {
                return Err(Error::config(format!("MCS table must list indices 0.. in order; found {} at row {i}", e.index)));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for e in &mut entries {
            let t = mcs_threshold_db(e, margin_db);
            e.min_sinr_db = if t > prev { t } else { prev + 0.01 };
            prev = e.min_sinr_db;
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn get(&self, index: u8) -> Option<&McsEntry> {
        self.entries.get(usize::from(index))
    }

    pub fn max_index(&self) -> u8 {
        self.entries.last().map(|e| e.index).unwrap_or(0)
    }
}

/// Bandwidth to PRB-count mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct PrbTable {
    rows: Vec<(f64, u32)>,
}

#[derive(Deserialize)]
struct PrbRow {
    bandwidth_mhz: f64,
    num_prb: u32,
}

impl PrbTable {
    pub fn standard() -> Self {
        Self::from_csv_str(DEFAULT_PRB_TABLE).expect("bundled PRB table is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read PRB table {}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for row in csv_reader(text).deserialize::<PrbRow>() {
            let row = row.map_err(|e| Error::config(format!("bad PRB table row: {e}")))?;
            if row.num_prb == 0 {
                return Err(Error::config(format!("PRB count for {} MHz must be positive", row.bandwidth_mhz)));
            }
            rows.push((row.bandwidth_mhz, row.num_prb));
        }
        Ok(Self { rows })
    }

    pub fn num_prb(&self, bandwidth_mhz: f64) -> Result<u32> {
        self.rows
            .iter()
            .find(|(bw, _)| (bw - bandwidth_mhz).abs() < 1e-9)
            .map(|&(_, n)| n)
            .ok_or_else(|| Error::config(format!("no PRB count configured for {bandwidth_mhz} MHz")))
    }
}

/// Tables resolved from a [`PhyConfig`].
#[derive(Debug, Clone)]
pub struct PhyTables {
    pub mcs: McsTable,
    pub prb: PrbTable,
}

impl PhyTables {
    pub fn load(cfg: &PhyConfig) -> Result<Self> {
        let mcs = match &cfg.mcs_table {
            Some(p) => McsTable::from_path(p, cfg.amc_margin_db)?,
            None => McsTable::standard(cfg.amc_margin_db),
        };
        let prb = match &cfg.prb_table {
            Some(p) => PrbTable::from_path(p)?,
            None => PrbTable::standard(),
        };
        Ok(Self { mcs, prb })
    }
}

/// Boresight gain of an analog array with `num_elements` elements.
pub fn array_gain_db(num_elements: u32) -> f64 {
    10.0 * f64::from(num_elements.max(1)).log10()
}

pub fn noise_power_dbm(bandwidth_mhz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * (bandwidth_mhz * 1e6).log10() + noise_figure_db
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub pathloss_db: f64,
    pub shadow_db: f64,
    pub excess_loss_db: f64,
    pub noise_dbm: f64,
    pub mean_snr_db: f64,
}

pub fn link_budget(profile: &DeviceProfile, link: &LinkState, phy: &PhyConfig) -> LinkBudget {
    let tx_gain_db = array_gain_db(profile.num_antenna_elements);
    let rx_gain_db = array_gain_db(phy.bs_elements);
    let noise_dbm = noise_power_dbm(profile.bandwidth_mhz, phy.noise_figure_db);
    let mean_snr_db = profile.max_tx_power_dbm + tx_gain_db + rx_gain_db
        - link.pathloss_db
        - link.shadow_db
        - phy.excess_loss_db
        - noise_dbm;
    LinkBudget {
        tx_power_dbm: profile.max_tx_power_dbm,
        tx_gain_db,
        rx_gain_db,
        pathloss_db: link.pathloss_db,
        shadow_db: link.shadow_db,
        excess_loss_db: phy.excess_loss_db,
        noise_dbm,
        mean_snr_db,
    }
}

/// Long-term SNR of the link. Single cell with one transmitter per slot, so
/// SINR and SNR coincide.
pub fn mean_snr_db(profile: &DeviceProfile, link: &LinkState, phy: &PhyConfig) -> f64 {
    link_budget(profile, link, phy).mean_snr_db
}

/// Highest entry with index ≤ `max_mcs_index` whose threshold is met.
pub fn select_mcs(sinr_db: f64, max_mcs_index: u8, table: &McsTable) -> Option<&McsEntry> {
    table
        .entries()
        .iter()
        .take_while(|e| e.index <= max_mcs_index)
        .filter(|e| e.min_sinr_db <= sinr_db)
        .last()
}

pub fn transport_block_size_bits(num_prb: u32, entry: &McsEntry, re_per_prb: u32) -> u64 {
    (f64::from(num_prb) * f64::from(re_per_prb) * entry.spectral_efficiency).floor() as u64
}

/// Chase-combining gain after `attempt` transmissions of the same block.
pub fn combining_gain_db(attempt: u32) -> f64 {
    10.0 * f64::from(attempt.max(1)).log10()
}

/// Logistic block-error probability around the decoding threshold.
pub fn block_error_probability(inst_sinr_db: f64, entry: &McsEntry, attempt: u32, slope_db: f64) -> f64 {
    let s_eff = inst_sinr_db + combining_gain_db(attempt);
    1.0 / (1.0 + ((s_eff - entry.decoding_threshold_db()) / slope_db).exp())
}

pub fn block_error<R: Rng + ?Sized>(
    inst_sinr_db: f64,
    entry: &McsEntry,
    attempt: u32,
    slope_db: f64,
    rng: &mut R,
) -> bool {
    let p = block_error_probability(inst_sinr_db, entry, attempt, slope_db);
    rng.random::<f64>() < p
}

/// Exponential moving average of per-slot SINR measurements, used by link
/// adaptation instead of the raw draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmcFilter {
    alpha: f64,
    value: Option<f64>,
}

impl AmcFilter {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, value: None }
    }

    pub fn update(&mut self, sample_db: f64) -> f64 {
        let v = match self.value {
            None => sample_db,
            Some(prev) => prev + self.alpha * (sample_db - prev),
        };
        self.value = Some(v);
        v
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn bundled_table_layout() {
        let t = McsTable::standard(2.0);
        assert_eq!(t.entries().len(), 29);
        for e in t.entries() {
            let qm = match e.index {
                0..=9 => 2,
                10..=16 => 4,
                _ => 6,
            };
            assert_eq!(e.modulation_order, qm, "MCS {}", e.index);
            assert_eq!(e.spectral_efficiency, f64::from(e.modulation_order) * e.code_rate());
        }
        for w in t.entries().windows(2) {
            assert!(w[1].min_sinr_db > w[0].min_sinr_db, "MCS {} vs {}", w[0].index, w[1].index);
        }
    }

    #[test]
    fn select_mcs_boundaries() {
        let t = McsTable::standard(2.0);
        assert_eq!(select_mcs(40.0, 9, &t).unwrap().index, 9);
        assert_eq!(select_mcs(40.0, 28, &t).unwrap().index, 28);
        let m0 = t.get(0).unwrap().min_sinr_db;
        assert_eq!(select_mcs(m0, 28, &t).unwrap().index, 0);
        assert!(select_mcs(m0 - 1e-9, 28, &t).is_none());
    }

    #[test]
    fn threshold_floor_for_vanishing_efficiency() {
        let mut e = McsEntry::new(0, 2, 1);
        e.spectral_efficiency = 0.0;
        assert_eq!(mcs_threshold_db(&e, 2.0), THRESHOLD_FLOOR_DB);
    }

    #[test]
    fn prb_lookup() {
        let p = PrbTable::standard();
        assert_eq!(p.num_prb(50.0).unwrap(), 32);
        assert_eq!(p.num_prb(100.0).unwrap(), 66);
        assert_eq!(p.num_prb(200.0).unwrap(), 132);
        assert!(p.num_prb(75.0).unwrap_err().is_config());
    }

    #[test]
    fn custom_tables_are_validated() {
        assert!(McsTable::from_csv_str("index,modulation_order,code_rate_x1024\n1,2,120\n", 2.0).is_err());
        assert!(McsTable::from_csv_str("index,modulation_order,code_rate_x1024\n0,3,120\n", 2.0).is_err());
        let t = McsTable::from_csv_str("index,modulation_order,code_rate_x1024\n0,2,120\n1,2,157\n", 0.0).unwrap();
        assert_eq!(t.max_index(), 1);
        assert!(PrbTable::from_csv_str("bandwidth_mhz,num_prb\n50,0\n").is_err());
    }

    #[test]
    fn combining_gain_and_midpoint() {
        let t = McsTable::standard(2.0);
        let e = t.get(9).unwrap();
        let thr = e.decoding_threshold_db();
        assert!((block_error_probability(thr, e, 1, 0.5) - 0.5).abs() < 1e-12);
        let two = block_error_probability(thr - combining_gain_db(2), e, 2, 0.5);
        assert!((two - 0.5).abs() < 1e-12);
        assert!((combining_gain_db(2) - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn block_error_is_stream_deterministic() {
        let t = McsTable::standard(2.0);
        let e = t.get(5).unwrap();
        let a: Vec<bool> = {
            let mut r = stream(3, 3);
            (0..64).map(|_| block_error(1.0, e, 1, 0.5, &mut r)).collect()
        };
        let b: Vec<bool> = {
            let mut r = stream(3, 3);
            (0..64).map(|_| block_error(1.0, e, 1, 0.5, &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn amc_filter_tracks_samples() {
        let mut f = AmcFilter::new(0.1);
        assert_eq!(f.update(10.0), 10.0);
        assert!((f.update(20.0) - 11.0).abs() < 1e-12);
        for _ in 0..500 {
            f.update(5.0);
        }
        assert!((f.value().unwrap() - 5.0).abs() < 1e-9);
    }
}
