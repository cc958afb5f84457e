//! Per-run and per-configuration metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InfVariant, Role};
use crate::traffic::TrafficPacket;

/// z-value of the two-sided 95% normal interval.
const Z95: f64 = 1.959_963_984_540_054;

/// Raw packet and bit counts for one role, pooled when aggregating.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RoleCounts {
    pub num_devices: u64,
    pub generated_packets: u64,
    pub delivered_packets: u64,
    pub deadline_met_packets: u64,
    pub dropped_packets: u64,
    pub generated_bits: u64,
    pub delivered_bits: u64,
    pub latency_sum_ms: f64,
}

impl RoleCounts {
    fn add(&mut self, o: &RoleCounts) {
        self.num_devices += o.num_devices;
        self.generated_packets += o.generated_packets;
        self.delivered_packets += o.delivered_packets;
        self.deadline_met_packets += o.deadline_met_packets;
        self.dropped_packets += o.dropped_packets;
        self.generated_bits += o.generated_bits;
        self.delivered_bits += o.delivered_bits;
        self.latency_sum_ms += o.latency_sum_ms;
    }

    /// `delivered / generated`, or 1.0 when nothing was generated.
    pub fn prr(&self) -> f64 {
        ratio_or_one(self.delivered_packets, self.generated_packets)
    }

    pub fn deadline_met_ratio(&self) -> f64 {
        ratio_or_one(self.deadline_met_packets, self.generated_packets)
    }

    pub fn mean_latency_ms(&self) -> Option<f64> {
        (self.delivered_packets > 0).then(|| self.latency_sum_ms / self.delivered_packets as f64)
    }
}

fn ratio_or_one(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// 95% half-widths across drops; `None` with fewer than two drops.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HalfWidths {
    pub throughput_bps: Option<f64>,
    pub latency_ms: Option<f64>,
    pub deadline_met_ratio: Option<f64>,
    pub prr: Option<f64>,
    pub avg_power_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoleMetrics {
    pub counts: RoleCounts,
    /// Mean delivered throughput per device.
    pub throughput_bps: f64,
    /// Mean offered load per device.
    pub offered_bps: f64,
    pub latency_ms: Option<f64>,
    pub deadline_met_ratio: f64,
    pub prr: f64,
    pub avg_power_mw: f64,
    /// No packets were generated: ratios are reported as 1.0.
    pub vacuous: bool,
    pub half_widths: HalfWidths,
}

impl RoleMetrics {
    pub fn from_counts(counts: RoleCounts, window_s: f64, avg_power_mw: f64) -> Self {
        let per_device = |bits: u64| {
            if counts.num_devices == 0 {
                0.0
            } else {
                bits as f64 / (counts.num_devices as f64 * window_s)
            }
        };
        Self {
            throughput_bps: per_device(counts.delivered_bits),
            offered_bps: per_device(counts.generated_bits),
            latency_ms: counts.mean_latency_ms(),
            deadline_met_ratio: counts.deadline_met_ratio(),
            prr: counts.prr(),
            avg_power_mw,
            vacuous: counts.generated_packets == 0,
            half_widths: HalfWidths::default(),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub label: String,
    pub inf_variant: InfVariant,
    /// Drop index for single-run records.
    pub drop: Option<u32>,
    pub num_drops: u32,
    pub video: RoleMetrics,
    pub data: RoleMetrics,
    /// Mean over devices of the filtered SINR in slots where each transmits.
    pub mean_sinr_db: Option<f64>,
    pub mean_sinr_half_width_db: Option<f64>,
}

impl MetricsRecord {
    pub fn role(&self, role: Role) -> &RoleMetrics {
        match role {
            Role::VideoStream => &self.video,
            Role::DataSensor => &self.data,
        }
    }

    /// Mean power over all devices, weighting each role by its device count.
    pub fn mean_device_power_mw(&self) -> f64 {
        let nv = self.video.counts.num_devices as f64;
        let nd = self.data.counts.num_devices as f64;
        if nv + nd == 0.0 {
            return 0.0;
        }
        (nv * self.video.avg_power_mw + nd * self.data.avg_power_mw) / (nv + nd)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Normal-approximation 95% half-width of the mean of `xs`.
pub fn half_width(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some(Z95 * (var / xs.len() as f64).sqrt())
}

fn aggregate_role(per_drop: &[&RoleMetrics]) -> RoleMetrics {
    let mut counts = RoleCounts::default();
    for r in per_drop {
        counts.add(&r.counts);
    }
    // Device counts are per drop; keep the per-drop mean so per-device
    // rates stay meaningful.
    counts.num_devices = (counts.num_devices as f64 / per_drop.len() as f64).round() as u64;

    let col = |f: &dyn Fn(&RoleMetrics) -> f64| per_drop.iter().map(|r| f(r)).collect::<Vec<_>>();
    let throughput = col(&|r| r.throughput_bps);
    let offered = col(&|r| r.offered_bps);
    let power = col(&|r| r.avg_power_mw);
    let prr = col(&|r| r.prr);
    let deadline = col(&|r| r.deadline_met_ratio);
    let latency: Vec<f64> = per_drop.iter().filter_map(|r| r.latency_ms).collect();

    RoleMetrics {
        throughput_bps: mean(&throughput),
        offered_bps: mean(&offered),
        latency_ms: counts.mean_latency_ms(),
        deadline_met_ratio: counts.deadline_met_ratio(),
        prr: counts.prr(),
        avg_power_mw: mean(&power),
        vacuous: counts.generated_packets == 0,
        half_widths: HalfWidths {
            throughput_bps: half_width(&throughput),
            latency_ms: half_width(&latency),
            deadline_met_ratio: half_width(&deadline),
            prr: half_width(&prr),
            avg_power_mw: half_width(&power),
        },
        counts,
    }
}

/// Combines per-drop records of one (configuration, variant) pair.
///
/// Throughput, power and SINR are unweighted means over drops; PRR,
/// deadline ratio and latency are pooled over packets.
pub fn aggregate(records: &[MetricsRecord]) -> Result<MetricsRecord> {
    let first = records.first().ok_or(Error::EmptyAggregate)?;
    if let [single] = records {
        return Ok(single.clone());
    }
    if let Some(r) = records
        .iter()
        .find(|r| r.label != first.label || r.inf_variant != first.inf_variant)
    {
        return Err(Error::Internal(format!(
            "cannot aggregate '{}' ({}) with '{}' ({})",
            first.label, first.inf_variant, r.label, r.inf_variant
        )));
    }
    let video: Vec<&RoleMetrics> = records.iter().map(|r| &r.video).collect();
    let data: Vec<&RoleMetrics> = records.iter().map(|r| &r.data).collect();
    let sinr: Vec<f64> = records.iter().filter_map(|r| r.mean_sinr_db).collect();
    Ok(MetricsRecord {
        label: first.label.clone(),
        inf_variant: first.inf_variant,
        drop: None,
        num_drops: records.iter().map(|r| r.num_drops).sum(),
        video: aggregate_role(&video),
        data: aggregate_role(&data),
        mean_sinr_db: (!sinr.is_empty()).then(|| mean(&sinr)),
        mean_sinr_half_width_db: half_width(&sinr),
    })
}

/// Fraction of generated packets of `role` delivered within their deadline;
/// `None` if no packet of that role was generated.
pub fn deadline_ratio(packets: &[TrafficPacket], role: Role) -> Option<f64> {
    let (generated, met) = packets
        .iter()
        .filter(|p| p.role == role)
        .fold((0u64, 0u64), |(g, m), p| (g + 1, m + u64::from(p.met_deadline())));
    (generated > 0).then(|| met as f64 / generated as f64)
}
