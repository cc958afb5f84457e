//! Application traffic: constant bit-rate video and Poisson FTP bursts.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::{PacketId, UeId};
use crate::model::Role;
use crate::rng::SimRng;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub video_rate_bps: f64,
    pub data_mean_rate_bps: f64,
    pub ftp_file_bytes: u64,
    pub packet_bytes: u64,
    pub video_deadline_ms: u64,
    pub data_deadline_ms: u64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            video_rate_bps: 10e6,
            data_mean_rate_bps: 500e3,
            ftp_file_bytes: 100_000,
            packet_bytes: 1500,
            video_deadline_ms: 50,
            data_deadline_ms: 20,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.video_rate_bps > 0.0 && self.data_mean_rate_bps > 0.0) {
            return Err(Error::config("traffic rates must be positive"));
        }
        if self.packet_bytes == 0 || self.ftp_file_bytes == 0 {
            return Err(Error::config("traffic packet and file sizes must be positive"));
        }
        Ok(())
    }

    pub fn deadline(&self, role: Role) -> SimTime {
        SimTime::from_millis(match role {
            Role::VideoStream => self.video_deadline_ms,
            Role::DataSensor => self.data_deadline_ms,
        })
    }

    /// FTP file arrival rate in files per second.
    pub fn ftp_file_rate(&self) -> f64 {
        self.data_mean_rate_bps / (8.0 * self.ftp_file_bytes as f64)
    }
}

/// One packet handed to the radio by the application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub time: SimTime,
    pub size_bytes: u64,
}

/// Equally spaced packets `packet_bits / rate` apart, starting at `phase`.
#[derive(Debug, Clone)]
pub struct CbrSource {
    interval: SimTime,
    next: SimTime,
    end: SimTime,
    packet_bytes: u64,
}

impl CbrSource {
    pub fn new(rate_bps: f64, packet_bytes: u64, duration: SimTime) -> Self {
        Self::with_phase(rate_bps, packet_bytes, duration, SimTime::ZERO)
    }

    pub fn with_phase(rate_bps: f64, packet_bytes: u64, duration: SimTime, phase: SimTime) -> Self {
        let interval = SimTime::from_secs_f64((packet_bytes * 8) as f64 / rate_bps).max(SimTime(1));
        Self {
            interval,
            next: phase,
            end: duration,
            packet_bytes,
        }
    }

    pub fn interval(&self) -> SimTime {
        self.interval
    }
}

impl Iterator for CbrSource {
    type Item = Arrival;

    fn next(&mut self) -> Option<Arrival> {
        if self.next >= self.end {
            return None;
        }
        let a = Arrival {
            time: self.next,
            size_bytes: self.packet_bytes,
        };
        self.next = self.next + self.interval;
        Some(a)
    }
}

pub fn cbr_arrivals(rate_bps: f64, packet_bytes: u64, duration_s: f64) -> CbrSource {
    CbrSource::new(rate_bps, packet_bytes, SimTime::from_secs_f64(duration_s))
}

/// Splits a file into full packets followed by one remainder packet.
pub fn file_packet_sizes(file_bytes: u64, packet_bytes: u64) -> impl Iterator<Item = u64> {
    let n = file_bytes.div_ceil(packet_bytes);
    (0..n).map(move |i| (file_bytes - i * packet_bytes).min(packet_bytes))
}

/// Files arrive as a Poisson process; every file deposits all of its packets
/// at the arrival instant.
#[derive(Debug, Clone)]
pub struct FtpPoissonSource {
    rng: SimRng,
    inter_arrival: Exp<f64>,
    clock_s: f64,
    end: SimTime,
    file_bytes: u64,
    packet_bytes: u64,
    burst_time: SimTime,
    burst_sizes: Vec<u64>,
}

impl FtpPoissonSource {
    pub fn new(mean_rate_bps: f64, file_bytes: u64, packet_bytes: u64, duration: SimTime, rng: SimRng) -> Self {
        let lambda = mean_rate_bps / (8.0 * file_bytes as f64);
        Self {
            rng,
            inter_arrival: Exp::new(lambda).expect("positive file rate"),
            clock_s: 0.0,
            end: duration,
            file_bytes,
            packet_bytes,
            burst_time: SimTime::ZERO,
            burst_sizes: Vec::new(),
        }
    }

    /// Time of the next file arrival, or `None` past the end of the run.
    pub fn next_file_time(&mut self) -> Option<SimTime> {
        self.clock_s += self.inter_arrival.sample(&mut self.rng);
        let t = SimTime::from_secs_f64(self.clock_s);
        (t < self.end).then_some(t)
    }
}

impl Iterator for FtpPoissonSource {
    type Item = Arrival;

    fn next(&mut self) -> Option<Arrival> {
        if self.burst_sizes.is_empty() {
            self.burst_time = self.next_file_time()?;
            self.burst_sizes = file_packet_sizes(self.file_bytes, self.packet_bytes).collect();
            self.burst_sizes.reverse();
        }
        self.burst_sizes.pop().map(|size_bytes| Arrival {
            time: self.burst_time,
            size_bytes,
        })
    }
}

pub fn ftp_poisson_arrivals(
    mean_rate_bps: f64,
    file_bytes: u64,
    packet_bytes: u64,
    duration_s: f64,
    rng: SimRng,
) -> FtpPoissonSource {
    FtpPoissonSource::new(mean_rate_bps, file_bytes, packet_bytes, SimTime::from_secs_f64(duration_s), rng)
}

/// Per-device traffic generator selected by role.
#[derive(Debug, Clone)]
pub enum Source {
    Cbr(CbrSource),
    Ftp(FtpPoissonSource),
}

impl Source {
    /// Builds the source for `role`. Video streams start at a random phase
    /// within one packet interval so that devices are not synchronized.
    pub fn for_role(role: Role, cfg: &SourceConfig, duration: SimTime, mut rng: SimRng) -> Self {
        match role {
            Role::VideoStream => {
                let interval = (cfg.packet_bytes * 8) as f64 / cfg.video_rate_bps;
                let phase = SimTime::from_secs_f64(rng.random::<f64>() * interval);
                Source::Cbr(CbrSource::with_phase(cfg.video_rate_bps, cfg.packet_bytes, duration, phase))
            }
            Role::DataSensor => Source::Ftp(FtpPoissonSource::new(
                cfg.data_mean_rate_bps,
                cfg.ftp_file_bytes,
                cfg.packet_bytes,
                duration,
                rng,
            )),
        }
    }
}

impl Iterator for Source {
    type Item = Arrival;

    fn next(&mut self) -> Option<Arrival> {
        match self {
            Source::Cbr(s) => s.next(),
            Source::Ftp(s) => s.next(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficPacket {
    pub id: PacketId,
    pub ue: UeId,
    pub size_bytes: u64,
    pub created: SimTime,
    pub delivered: Option<SimTime>,
    pub role: Role,
    pub deadline: SimTime,
}

impl TrafficPacket {
    pub fn latency(&self) -> Option<SimTime> {
        self.delivered.map(|d| d - self.created)
    }

    pub fn met_deadline(&self) -> bool {
        self.latency().is_some_and(|l| l <= self.deadline)
    }
}

/// Records the delivery instant.
///
/// # Panics
///
/// If the packet was already delivered or `time` precedes its creation.
pub fn mark_delivered(packet: &mut TrafficPacket, time: SimTime) {
    assert!(packet.delivered.is_none(), "packet {} delivered twice", packet.id);
    assert!(time >= packet.created, "packet {} delivered before creation", packet.id);
    packet.delivered = Some(time);
}
