//! Campaign runner and results bundle.
//!
//! A campaign is the grid `profiles × variants × drops`. Runs are independent
//! and may execute on a worker pool; results are collected in run-id order,
//! so the bundle does not depend on the number of workers.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::engine::{run_detailed, LinkRow, RunOptions, SlotTraceRow};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, MetricsRecord, RoleMetrics};
use crate::mac::UeId;
use crate::model::{DeviceProfile, InfVariant, Role};

pub const RESULTS_FILE: &str = "results.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LINKS_FILE: &str = "links.csv";
pub const TRACE_FILE: &str = "slot_trace.csv";
pub const ENERGY_FILE: &str = "energy.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunId {
    pub profile: usize,
    pub variant: InfVariant,
    pub drop: u32,
}

#[derive(Debug, Clone, Default)]
pub struct CampaignOptions {
    /// Worker threads; 0 uses all cores, 1 runs serially.
    pub workers: usize,
    pub link_dump: bool,
    pub slot_trace: bool,
}

#[derive(Debug, Clone)]
pub struct CampaignResults {
    /// Per-run records in (profile, variant, drop) order.
    pub runs: Vec<MetricsRecord>,
    /// One aggregate per (profile, variant), same order.
    pub summary: Vec<MetricsRecord>,
    pub links: Vec<LinkRow>,
    pub slot_trace: Vec<SlotTraceRow>,
    /// Per-device energy over the measurement window of every run.
    pub energy: Vec<EnergyRow>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub label: String,
    pub variant: InfVariant,
    pub drop: u32,
    pub ue: UeId,
    pub role: Role,
    pub active_time_s: f64,
    pub idle_time_s: f64,
    pub energy_mj: f64,
    pub avg_power_mw: f64,
}

impl CampaignResults {
    pub fn find(&self, label: &str, variant: InfVariant) -> Option<&MetricsRecord> {
        self.summary
            .iter()
            .find(|r| r.label == label && r.inf_variant == variant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub num_drops: u32,
    pub num_runs: usize,
    pub profiles: Vec<DeviceProfile>,
    pub variants: Vec<InfVariant>,
    pub config: SimConfig,
}

/// Runs every `(profile, variant, drop)` combination.
pub fn campaign(
    cfg: &SimConfig,
    profiles: &[DeviceProfile],
    variants: &[InfVariant],
    options: &CampaignOptions,
) -> Result<CampaignResults> {
    for w in cfg.validate()? {
        log::warn!("{w}");
    }
    if profiles.is_empty() || variants.is_empty() {
        return Err(Error::config("campaign needs at least one profile and one variant"));
    }
    let mut labels = std::collections::HashSet::new();
    for p in profiles {
        for w in cfg.validate_profile(p)? {
            log::warn!("{w}");
        }
        if !labels.insert(&p.label) {
            return Err(Error::config(format!("duplicate profile label '{}'", p.label)));
        }
    }

    let ids: Vec<RunId> = (0..profiles.len())
        .flat_map(|profile| {
            variants.iter().flat_map(move |&variant| {
                (0..cfg.scenario.num_drops).map(move |drop| RunId { profile, variant, drop })
            })
        })
        .collect();
    let run_opts = RunOptions { slot_trace: options.slot_trace };

    let execute = |id: &RunId| {
        let mut run_cfg = cfg.clone();
        run_cfg.scenario.inf_variant = id.variant;
        let profile = &profiles[id.profile];
        log::debug!("running '{}' {} drop {}", profile.label, id.variant, id.drop);
        run_detailed(&run_cfg, profile, id.drop, run_opts).map_err(|e| match e {
            e @ (Error::Run { .. } | Error::Config(_)) => e,
            other => Error::Run {
                label: profile.label.clone(),
                variant: id.variant.to_string(),
                drop: id.drop,
                message: other.to_string(),
            },
        })
    };

    let outputs: Vec<Result<_>> = if options.workers == 1 {
        ids.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| Error::Internal(format!("cannot start worker pool: {e}")))?;
        pool.install(|| ids.par_iter().map(execute).collect())
    };

    let mut runs = Vec::with_capacity(ids.len());
    let mut links = Vec::new();
    let mut slot_trace = Vec::new();
    let mut energy = Vec::new();
    for out in outputs {
        let out = out?;
        energy.extend(out.links.iter().zip(&out.ledgers).map(|(l, e)| EnergyRow {
            label: l.label.clone(),
            variant: l.variant,
            drop: l.drop,
            ue: l.ue,
            role: l.role,
            active_time_s: e.active_time_s,
            idle_time_s: e.idle_time_s,
            energy_mj: e.energy_mj,
            avg_power_mw: e.avg_power_mw(),
        }));
        if options.link_dump {
            links.extend(out.links);
        }
        slot_trace.extend(out.slot_trace);
        runs.push(out.record);
    }

    let per_cell = cfg.scenario.num_drops as usize;
    let summary = runs
        .chunks(per_cell)
        .map(aggregate)
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.scenario.seed,
        config_hash: cfg.hash(),
        num_drops: cfg.scenario.num_drops,
        num_runs: runs.len(),
        profiles: profiles.to_vec(),
        variants: variants.to_vec(),
        config: cfg.clone(),
    };
    Ok(CampaignResults {
        runs,
        summary,
        links,
        slot_trace,
        energy,
        manifest,
    })
}

/// Flat CSV row shared by `results.csv` and `runs.csv`. Throughput in Mbps,
/// latency in ms (mean over delivered packets), power in mW. `*_hw` columns
/// are 95% half-widths across drops, empty when unavailable. `mean_sinr_db`
/// averages, over devices, the filtered SINR of the slots each device
/// transmits in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub variant: String,
    pub drop: Option<u32>,
    pub num_drops: u32,
    pub video_throughput_mbps: f64,
    pub video_throughput_hw_mbps: Option<f64>,
    pub video_offered_mbps: f64,
    pub video_latency_ms: Option<f64>,
    pub video_latency_hw_ms: Option<f64>,
    pub video_deadline_ratio: f64,
    pub video_deadline_hw: Option<f64>,
    pub video_prr: f64,
    pub video_prr_hw: Option<f64>,
    pub video_power_mw: f64,
    pub video_power_hw_mw: Option<f64>,
    pub video_generated_packets: u64,
    pub video_delivered_packets: u64,
    pub video_vacuous: bool,
    pub data_throughput_mbps: f64,
    pub data_throughput_hw_mbps: Option<f64>,
    pub data_offered_mbps: f64,
    pub data_latency_ms: Option<f64>,
    pub data_latency_hw_ms: Option<f64>,
    pub data_deadline_ratio: f64,
    pub data_deadline_hw: Option<f64>,
    pub data_prr: f64,
    pub data_prr_hw: Option<f64>,
    pub data_power_mw: f64,
    pub data_power_hw_mw: Option<f64>,
    pub data_generated_packets: u64,
    pub data_delivered_packets: u64,
    pub data_vacuous: bool,
    pub mean_sinr_db: Option<f64>,
    pub mean_sinr_hw_db: Option<f64>,
}

struct RoleCols {
    throughput_mbps: f64,
    throughput_hw_mbps: Option<f64>,
    offered_mbps: f64,
    latency_ms: Option<f64>,
    latency_hw_ms: Option<f64>,
    deadline_ratio: f64,
    deadline_hw: Option<f64>,
    prr: f64,
    prr_hw: Option<f64>,
    power_mw: f64,
    power_hw_mw: Option<f64>,
    generated: u64,
    delivered: u64,
    vacuous: bool,
}

fn role_cols(r: &RoleMetrics) -> RoleCols {
    RoleCols {
        throughput_mbps: r.throughput_bps / 1e6,
        throughput_hw_mbps: r.half_widths.throughput_bps.map(|x| x / 1e6),
        offered_mbps: r.offered_bps / 1e6,
        latency_ms: r.latency_ms,
        latency_hw_ms: r.half_widths.latency_ms,
        deadline_ratio: r.deadline_met_ratio,
        deadline_hw: r.half_widths.deadline_met_ratio,
        prr: r.prr,
        prr_hw: r.half_widths.prr,
        power_mw: r.avg_power_mw,
        power_hw_mw: r.half_widths.avg_power_mw,
        generated: r.counts.generated_packets,
        delivered: r.counts.delivered_packets,
        vacuous: r.vacuous,
    }
}

impl From<&MetricsRecord> for ResultRow {
    fn from(r: &MetricsRecord) -> Self {
        let v = role_cols(&r.video);
        let d = role_cols(&r.data);
        Self {
            label: r.label.clone(),
            variant: r.inf_variant.to_string(),
            drop: r.drop,
            num_drops: r.num_drops,
            video_throughput_mbps: v.throughput_mbps,
            video_throughput_hw_mbps: v.throughput_hw_mbps,
            video_offered_mbps: v.offered_mbps,
            video_latency_ms: v.latency_ms,
            video_latency_hw_ms: v.latency_hw_ms,
            video_deadline_ratio: v.deadline_ratio,
            video_deadline_hw: v.deadline_hw,
            video_prr: v.prr,
            video_prr_hw: v.prr_hw,
            video_power_mw: v.power_mw,
            video_power_hw_mw: v.power_hw_mw,
            video_generated_packets: v.generated,
            video_delivered_packets: v.delivered,
            video_vacuous: v.vacuous,
            data_throughput_mbps: d.throughput_mbps,
            data_throughput_hw_mbps: d.throughput_hw_mbps,
            data_offered_mbps: d.offered_mbps,
            data_latency_ms: d.latency_ms,
            data_latency_hw_ms: d.latency_hw_ms,
            data_deadline_ratio: d.deadline_ratio,
            data_deadline_hw: d.deadline_hw,
            data_prr: d.prr,
            data_prr_hw: d.prr_hw,
            data_power_mw: d.power_mw,
            data_power_hw_mw: d.power_hw_mw,
            data_generated_packets: d.generated,
            data_delivered_packets: d.delivered,
            data_vacuous: d.vacuous,
            mean_sinr_db: r.mean_sinr_db,
            mean_sinr_hw_db: r.mean_sinr_half_width_db,
        }
    }
}

pub fn write_records_csv<W: std::io::Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(ResultRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

impl CampaignResults {
    /// Writes `results.csv`, `runs.csv`, `energy.csv` and `manifest.json`
    /// into `dir`, plus the link dump and slot trace when they were collected.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_records_csv(&self.summary, fs::File::create(dir.join(RESULTS_FILE))?)?;
        write_records_csv(&self.runs, fs::File::create(dir.join(RUNS_FILE))?)?;
        let manifest = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
        write_rows(&self.energy, &dir.join(ENERGY_FILE))?;

        if !self.links.is_empty() {
            write_rows(&self.links, &dir.join(LINKS_FILE))?;
        }
        if !self.slot_trace.is_empty() {
            write_rows(&self.slot_trace, &dir.join(TRACE_FILE))?;
        }
        Ok(())
    }
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
