//! Discrete-event loop for one drop.
//!
//! Events are ordered by `(time, sequence)`; the sequence is a global counter
//! so ties always resolve the same way. Time is kept in integer nanoseconds.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::channel::{instantaneous_offset_db, realize_link};
use crate::config::SimConfig;
use crate::energy::{active_power_mw, EnergyLedger};
use crate::error::{Error, Result};
use crate::mac::{
    harq_feedback, serve, GrantKind, HarqAction, HarqProcess, PacketId, RoundRobin, SlotClock, TransportBlock,
    UeId, UeQueue,
};
use crate::metrics::{MetricsRecord, RoleCounts, RoleMetrics};
use crate::model::{build_drop, DeviceProfile, InfVariant, Role};
use crate::phy::{block_error, link_budget, select_mcs, transport_block_size_bits, AmcFilter, PhyTables};
use crate::rng::{SimRng, Subsystem};
use crate::time::SimTime;
use crate::traffic::{mark_delivered, Arrival, Source, TrafficPacket};

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    PacketArrival { ue: UeId },
    SlotBoundary { slot: u64 },
    HarqFeedback { tb: TransportBlock, failed: bool },
    SimEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: SimTime,
    pub sequence: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed so that `BinaryHeap` pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.sequence).cmp(&(self.time, self.sequence))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_sequence: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: SimTime, kind: EventKind) {
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Event { time, sequence, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Optional outputs of a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub slot_trace: bool,
}

/// Per-link large-scale state, for the link-budget dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub label: String,
    pub variant: InfVariant,
    pub drop: u32,
    pub ue: UeId,
    pub role: Role,
    pub x_m: f64,
    pub y_m: f64,
    pub distance_2d_m: f64,
    pub distance_3d_m: f64,
    pub is_los: bool,
    pub los_probability: f64,
    pub pathloss_db: f64,
    pub shadow_db: f64,
    pub mean_snr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxOutcome {
    Ok,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotTraceRow {
    pub label: String,
    pub variant: InfVariant,
    pub drop: u32,
    pub slot: u64,
    pub ue: UeId,
    pub mcs: u8,
    pub tb_bits: u64,
    pub payload_bits: u64,
    pub harq_attempt: u32,
    pub outcome: TxOutcome,
}

/// End-of-run bookkeeping; every generated bit and packet is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConservationAudit {
    pub generated_bits: u64,
    pub delivered_bits: u64,
    pub queued_bits: u64,
    pub harq_pending_bits: u64,
    pub in_flight_bits: u64,
    pub overflow_dropped_bits: u64,
    pub harq_dropped_bits: u64,
    pub generated_packets: u64,
    pub delivered_packets: u64,
    pub dropped_packets: u64,
    pub pending_packets: u64,
}

impl ConservationAudit {
    pub fn bits_balance(&self) -> bool {
        self.generated_bits
            == self.delivered_bits
                + self.queued_bits
                + self.harq_pending_bits
                + self.in_flight_bits
                + self.overflow_dropped_bits
                + self.harq_dropped_bits
    }

    pub fn packets_balance(&self) -> bool {
        self.generated_packets == self.delivered_packets + self.dropped_packets + self.pending_packets
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: MetricsRecord,
    pub links: Vec<LinkRow>,
    pub slot_trace: Vec<SlotTraceRow>,
    pub audit: ConservationAudit,
    /// Every packet generated in the run, indexed by id.
    pub packets: Vec<TrafficPacket>,
    pub ledgers: Vec<EnergyLedger>,
}

struct PacketState {
    packet: TrafficPacket,
    undelivered_bits: u64,
    lost: bool,
}

struct UeState {
    role: Role,
    mean_snr_db: f64,
    amc: AmcFilter,
    inst_sinr_db: f64,
    filtered_sinr_db: f64,
    queue: UeQueue,
    eligible_at: SimTime,
    harq: Vec<HarqProcess>,
    source: Source,
    pending_arrival: Option<Arrival>,
    fading_rng: SimRng,
    bler_rng: SimRng,
    ledger: EnergyLedger,
    sinr_sum_db: f64,
    sinr_samples: u64,
    /// Packet ids not yet released to the application, in creation order.
    reorder: VecDeque<PacketId>,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    profile: &'a DeviceProfile,
    tables: PhyTables,
    num_prb: u32,
    active_power_mw: f64,
    clock: SlotClock,
    end: SimTime,
    warmup: SimTime,
    window_end: SimTime,
    events: EventQueue,
    ues: Vec<UeState>,
    packets: Vec<PacketState>,
    scheduler: RoundRobin,
    audit: ConservationAudit,
    options: RunOptions,
    trace: Vec<SlotTraceRow>,
    drop_index: u32,
    backlogged: Vec<bool>,
    harq_due: Vec<(u64, UeId)>,
    due_ues: Vec<UeId>,
}

/// Simulates one drop and returns its metrics.
pub fn run(cfg: &SimConfig, profile: &DeviceProfile, drop_index: u32) -> Result<MetricsRecord> {
    Ok(run_detailed(cfg, profile, drop_index, RunOptions::default())?.record)
}

pub fn run_detailed(
    cfg: &SimConfig,
    profile: &DeviceProfile,
    drop_index: u32,
    options: RunOptions,
) -> Result<RunOutput> {
    for w in cfg.validate()? {
        log::warn!("{w}");
    }
    for w in cfg.validate_profile(profile)? {
        log::warn!("{w}");
    }
    let drop = build_drop(&cfg.scenario, drop_index)?;
    let tables = PhyTables::load(&cfg.phy)?;
    let num_prb = tables.prb.num_prb(profile.bandwidth_mhz)?;
    let clock = SlotClock::new(cfg.mac.scs_khz).expect("validated numerology");
    let end = SimTime::from_secs_f64(cfg.scenario.sim_duration_s);
    let bs = cfg.scenario.bs();
    let variant = cfg.scenario.inf_variant;

    let mut ues = Vec::with_capacity(drop.num_devices());
    let mut links = Vec::with_capacity(drop.num_devices());
    for (ue, (pos, &role)) in drop.ue_positions.iter().zip(&drop.ue_roles).enumerate() {
        let id = ue as u64;
        let mut channel_rng = drop.rng_streams.for_entity(Subsystem::Channel, id);
        let link = realize_link(&bs, pos, cfg.scenario.carrier_ghz, variant, &cfg.channel, &mut channel_rng)?;
        let budget = link_budget(profile, &link, &cfg.phy);
        links.push(LinkRow {
            label: profile.label.clone(),
            variant,
            drop: drop_index,
            ue,
            role,
            x_m: pos.x,
            y_m: pos.y,
            distance_2d_m: link.distance_2d_m,
            distance_3d_m: link.distance_3d_m,
            is_los: link.is_los,
            los_probability: link.los_probability,
            pathloss_db: link.pathloss_db,
            shadow_db: link.shadow_db,
            mean_snr_db: budget.mean_snr_db,
        });
        let source = Source::for_role(
            role,
            &cfg.traffic,
            end,
            drop.rng_streams.for_entity(Subsystem::Traffic, id),
        );
        ues.push(UeState {
            role,
            mean_snr_db: budget.mean_snr_db,
            amc: AmcFilter::new(cfg.phy.amc_filter_alpha),
            inst_sinr_db: budget.mean_snr_db,
            filtered_sinr_db: budget.mean_snr_db,
            queue: UeQueue::new(cfg.mac.queue_capacity_bytes),
            eligible_at: SimTime::ZERO,
            harq: Vec::new(),
            source,
            pending_arrival: None,
            fading_rng: drop.rng_streams.for_entity(Subsystem::FastFading, id),
            bler_rng: drop.rng_streams.for_entity(Subsystem::BlockError, id),
            ledger: EnergyLedger::default(),
            sinr_sum_db: 0.0,
            sinr_samples: 0,
            reorder: VecDeque::new(),
        });
    }

    let n = ues.len();
    let mut engine = Engine {
        cfg,
        profile,
        tables,
        num_prb,
        active_power_mw: active_power_mw(profile, &cfg.energy),
        clock,
        end,
        warmup: SimTime::from_secs_f64(cfg.metrics.warmup_s),
        window_end: end.saturating_sub(SimTime::from_secs_f64(cfg.metrics.tail_guard_s)),
        events: EventQueue::default(),
        ues,
        packets: Vec::new(),
        scheduler: RoundRobin::new(n),
        audit: ConservationAudit::default(),
        options,
        trace: Vec::new(),
        drop_index,
        backlogged: vec![false; n],
        harq_due: Vec::with_capacity(n),
        due_ues: Vec::with_capacity(n),
    };
    engine.simulate();
    engine.finish(links)
}

impl Engine<'_> {
    fn simulate(&mut self) {
        self.events.push(self.end, EventKind::SimEnd);
        for ue in 0..self.ues.len() {
            self.schedule_next_arrival(ue);
        }
        self.events.push(SimTime::ZERO, EventKind::SlotBoundary { slot: 0 });

        while let Some(ev) = self.events.pop() {
            match ev.kind {
                EventKind::SimEnd => break,
                EventKind::PacketArrival { ue } => self.on_arrival(ue, ev.time),
                EventKind::SlotBoundary { slot } => self.on_slot(slot),
                EventKind::HarqFeedback { tb, failed } => self.on_feedback(tb, failed, ev.time),
            }
        }
    }

    fn schedule_next_arrival(&mut self, ue: UeId) {
        let state = &mut self.ues[ue];
        state.pending_arrival = state.source.next();
        if let Some(a) = state.pending_arrival {
            self.events.push(a.time, EventKind::PacketArrival { ue });
        }
    }

    fn on_arrival(&mut self, ue: UeId, now: SimTime) {
        let arrival = self.ues[ue].pending_arrival.take().expect("arrival event without pending packet");
        let id = self.packets.len() as PacketId;
        let bits = arrival.size_bytes * 8;
        let role = self.ues[ue].role;
        self.packets.push(PacketState {
            packet: TrafficPacket {
                id,
                ue,
                size_bytes: arrival.size_bytes,
                created: now,
                delivered: None,
                role,
                deadline: self.cfg.traffic.deadline(role),
            },
            undelivered_bits: bits,
            lost: false,
        });
        self.audit.generated_bits += bits;
        self.audit.generated_packets += 1;

        let grant_delay = SimTime(self.cfg.mac.grant_latency_slots * self.clock.slot_duration.0);
        let state = &mut self.ues[ue];
        let was_empty = state.queue.is_empty();
        if state.queue.push(id, bits, now) {
            if was_empty {
                state.eligible_at = now + grant_delay;
            }
            state.reorder.push_back(id);
        } else {
            self.packets[id as usize].lost = true;
            self.audit.overflow_dropped_bits += bits;
            self.audit.dropped_packets += 1;
        }
        self.schedule_next_arrival(ue);
    }

    fn on_slot(&mut self, slot: u64) {
        let start = self.clock.slot_start(slot);
        let slot_len = self.clock.slot_duration;
        let sigma = self.cfg.channel.fast_fading_db;

        self.harq_due.clear();
        for (u, s) in self.ues.iter_mut().enumerate() {
            s.inst_sinr_db = s.mean_snr_db + instantaneous_offset_db(sigma, &mut s.fading_rng);
            s.filtered_sinr_db = s.amc.update(s.inst_sinr_db);
            self.backlogged[u] = !s.queue.is_empty() && s.eligible_at <= start;
            if let Some(due) = s.harq.iter().map(|p| p.next_retx_slot).filter(|&d| d <= slot).min() {
                self.harq_due.push((due, u));
            }
        }
        self.harq_due.sort_unstable();
        self.due_ues.clear();
        self.due_ues.extend(self.harq_due.iter().map(|&(_, u)| u));

        let grant = self.scheduler.schedule_slot(&self.backlogged, &self.due_ues);
        let active = grant.map(|g| g.ue);
        if let Some(g) = grant {
            let tb = match g.kind {
                GrantKind::Retransmission => {
                    let s = &mut self.ues[g.ue];
                    let (i, _) = s
                        .harq
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.next_retx_slot <= slot)
                        .min_by_key(|(_, p)| p.next_retx_slot)
                        .expect("due process exists");
                    let mut tb = s.harq.remove(i).tb;
                    self.audit.harq_pending_bits -= tb.payload_bits();
                    tb.harq_attempt += 1;
                    tb.slot_index = slot;
                    tb
                }
                GrantKind::NewData => {
                    let s = &mut self.ues[g.ue];
                    // Out of range of every entry: still try the most robust one.
                    let entry = select_mcs(s.filtered_sinr_db, self.profile.max_mcs_index, &self.tables.mcs)
                        .unwrap_or(&self.tables.mcs.entries()[0]);
                    let capacity = transport_block_size_bits(self.num_prb, entry, self.cfg.phy.re_per_prb);
                    serve(&mut s.queue, g.ue, capacity, entry.index, slot)
                }
            };
            let s = &mut self.ues[g.ue];
            let entry = self.tables.mcs.get(tb.mcs_index).expect("MCS from table");
            let failed = block_error(
                s.inst_sinr_db,
                entry,
                tb.harq_attempt,
                self.cfg.phy.bler_slope_db,
                &mut s.bler_rng,
            );
            if start >= self.warmup {
                s.sinr_sum_db += s.filtered_sinr_db;
                s.sinr_samples += 1;
            }
            if self.options.slot_trace {
                self.trace.push(SlotTraceRow {
                    label: self.profile.label.clone(),
                    variant: self.cfg.scenario.inf_variant,
                    drop: self.drop_index,
                    slot,
                    ue: g.ue,
                    mcs: tb.mcs_index,
                    tb_bits: tb.size_bits,
                    payload_bits: tb.payload_bits(),
                    harq_attempt: tb.harq_attempt,
                    outcome: if failed { TxOutcome::Fail } else { TxOutcome::Ok },
                });
            }
            self.audit.in_flight_bits += tb.payload_bits();
            self.events.push(start + slot_len, EventKind::HarqFeedback { tb, failed });
        }

        if start >= self.warmup {
            let dt = slot_len.as_secs_f64();
            let p_idle = self.cfg.energy.p_idle_mw;
            for (u, s) in self.ues.iter_mut().enumerate() {
                s.ledger.accumulate(active == Some(u), dt, self.active_power_mw, p_idle);
            }
        }

        let next = self.clock.slot_start(slot + 1);
        if next < self.end {
            self.events.push(next, EventKind::SlotBoundary { slot: slot + 1 });
        }
    }

    fn on_feedback(&mut self, tb: TransportBlock, failed: bool, now: SimTime) {
        let ue = tb.ue;
        let payload = tb.payload_bits();
        self.audit.in_flight_bits -= payload;
        let slot = tb.slot_index;
        match harq_feedback(tb, failed, slot, &self.cfg.mac) {
            HarqAction::Deliver(carried) => {
                self.audit.delivered_bits += payload;
                for c in carried {
                    self.packets[c.packet_id as usize].undelivered_bits -= c.bits;
                }
            }
            HarqAction::Retransmit(process) => {
                self.audit.harq_pending_bits += payload;
                self.ues[ue].harq.push(process);
            }
            HarqAction::Drop(carried) => {
                self.audit.harq_dropped_bits += payload;
                for c in carried {
                    let p = &mut self.packets[c.packet_id as usize];
                    p.undelivered_bits -= c.bits;
                    if !p.lost {
                        p.lost = true;
                        self.audit.dropped_packets += 1;
                    }
                }
            }
        }
        self.release_in_order(ue, now);
    }

    /// Hands completed packets to the application in creation order.
    fn release_in_order(&mut self, ue: UeId, now: SimTime) {
        let reorder = &mut self.ues[ue].reorder;
        while let Some(&id) = reorder.front() {
            let p = &mut self.packets[id as usize];
            if p.lost {
                reorder.pop_front();
            } else if p.undelivered_bits == 0 {
                mark_delivered(&mut p.packet, now);
                self.audit.delivered_packets += 1;
                reorder.pop_front();
            } else {
                break;
            }
        }
    }

    fn finish(mut self, links: Vec<LinkRow>) -> Result<RunOutput> {
        self.audit.queued_bits = self.ues.iter().map(|s| s.queue.backlog_bits()).sum();
        self.audit.pending_packets = self
            .packets
            .iter()
            .filter(|p| !p.lost && p.packet.delivered.is_none())
            .count() as u64;
        let pending_harq: u64 = self
            .ues
            .iter()
            .flat_map(|s| s.harq.iter())
            .map(|p| p.tb.payload_bits())
            .sum();
        if pending_harq != self.audit.harq_pending_bits {
            return Err(self.internal("HARQ pending bits out of sync"));
        }
        if !self.audit.bits_balance() {
            return Err(self.internal(&format!("bit conservation violated: {:?}", self.audit)));
        }
        if !self.audit.packets_balance() {
            return Err(self.internal(&format!("packet conservation violated: {:?}", self.audit)));
        }

        let window_s = (self.window_end.saturating_sub(self.warmup)).as_secs_f64();
        let mut counts = [RoleCounts::default(), RoleCounts::default()];
        let mut power = [0.0f64, 0.0f64];
        let role_idx = |r: Role| match r {
            Role::VideoStream => 0,
            Role::DataSensor => 1,
        };
        for s in &self.ues {
            let i = role_idx(s.role);
            counts[i].num_devices += 1;
            power[i] += s.ledger.avg_power_mw();
        }
        for p in &self.packets {
            let pkt = &p.packet;
            if pkt.created < self.warmup || pkt.created >= self.window_end {
                continue;
            }
            let c = &mut counts[role_idx(pkt.role)];
            let bits = pkt.size_bytes * 8;
            c.generated_packets += 1;
            c.generated_bits += bits;
            if p.lost {
                c.dropped_packets += 1;
            }
            if let Some(lat) = pkt.latency() {
                c.delivered_packets += 1;
                c.delivered_bits += bits;
                c.latency_sum_ms += lat.as_millis_f64();
                if lat <= pkt.deadline {
                    c.deadline_met_packets += 1;
                }
            }
        }
        let role_metrics = |i: usize| {
            let n = counts[i].num_devices;
            let avg_power = if n > 0 { power[i] / n as f64 } else { 0.0 };
            RoleMetrics::from_counts(counts[i], window_s, avg_power)
        };
        let per_ue_sinr: Vec<f64> = self
            .ues
            .iter()
            .filter(|s| s.sinr_samples > 0)
            .map(|s| s.sinr_sum_db / s.sinr_samples as f64)
            .collect();
        let mean_sinr_db =
            (!per_ue_sinr.is_empty()).then(|| per_ue_sinr.iter().sum::<f64>() / per_ue_sinr.len() as f64);

        let record = MetricsRecord {
            label: self.profile.label.clone(),
            inf_variant: self.cfg.scenario.inf_variant,
            drop: Some(self.drop_index),
            num_drops: 1,
            video: role_metrics(0),
            data: role_metrics(1),
            mean_sinr_db,
            mean_sinr_half_width_db: None,
        };
        Ok(RunOutput {
            record,
            links,
            slot_trace: self.trace,
            audit: self.audit,
            packets: self.packets.into_iter().map(|p| p.packet).collect(),
            ledgers: self.ues.iter().map(|s| s.ledger).collect(),
        })
    }

    fn internal(&self, message: &str) -> Error {
        Error::Run {
            label: self.profile.label.clone(),
            variant: self.cfg.scenario.inf_variant.to_string(),
            drop: self.drop_index,
            message: message.to_string(),
        }
    }
}
