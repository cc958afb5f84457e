//! Uplink MAC: slot clock, per-device queues, full-band TDMA round robin and
//! HARQ.
//!
//! One device owns the whole carrier in a slot. Retransmissions that are due
//! preempt new data; otherwise a round-robin pointer walks the devices that
//! are backlogged and have passed their grant latency.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::SimTime;

pub type UeId = usize;
pub type PacketId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacConfig {
    pub scs_khz: u32,
    pub queue_capacity_bytes: u64,
    pub max_harq_attempts: u32,
    pub harq_retx_delay_slots: u64,
    pub grant_latency_slots: u64,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            scs_khz: 120,
            queue_capacity_bytes: 1_000_000,
            max_harq_attempts: 4,
            harq_retx_delay_slots: 8,
            grant_latency_slots: 4,
        }
    }
}

impl MacConfig {
    pub fn validate(&self) -> Result<()> {
        if SlotClock::new(self.scs_khz).is_none() {
            return Err(Error::config(format!(
                "mac.scs_khz must be 15·2^μ kHz with μ in 0..=6, got {}",
                self.scs_khz
            )));
        }
        if self.max_harq_attempts == 0 {
            return Err(Error::config("mac.max_harq_attempts must be at least 1"));
        }
        if self.harq_retx_delay_slots == 0 {
            return Err(Error::config("mac.harq_retx_delay_slots must be at least 1"));
        }
        if self.queue_capacity_bytes == 0 {
            return Err(Error::config("mac.queue_capacity_bytes must be positive"));
        }
        Ok(())
    }
}

/// Constant scheduling-request plus grant delay applied when data arrives at
/// an empty queue.
pub fn grant_latency_slots(cfg: &MacConfig) -> u64 {
    cfg.grant_latency_slots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotClock {
    pub scs_khz: u32,
    pub slot_duration: SimTime,
    pub slot_index: u64,
}

impl SlotClock {
    /// `None` unless `scs_khz` is a valid numerology.
    pub fn new(scs_khz: u32) -> Option<Self> {
        let ratio = scs_khz / 15;
        if !scs_khz.is_multiple_of(15) || !ratio.is_power_of_two() || ratio > 64 {
            return None;
        }
        Some(Self {
            scs_khz,
            slot_duration: SimTime(1_000_000 / u64::from(ratio)),
            slot_index: 0,
        })
    }

    pub fn slot_start(&self, slot: u64) -> SimTime {
        SimTime(slot * self.slot_duration.0)
    }

    pub fn now(&self) -> SimTime {
        self.slot_start(self.slot_index)
    }

    pub fn advance(&mut self) -> u64 {
        self.slot_index += 1;
        self.slot_index
    }

    /// First slot whose start is at or after `t`.
    pub fn first_slot_at_or_after(&self, t: SimTime) -> u64 {
        t.0.div_ceil(self.slot_duration.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueuedPacket {
    pub id: PacketId,
    pub total_bits: u64,
    pub remaining_bits: u64,
    pub created: SimTime,
}

/// Drop-tail FIFO of packet segments, in bits.
#[derive(Debug, Clone)]
pub struct UeQueue {
    packets: VecDeque<QueuedPacket>,
    backlog_bits: u64,
    capacity_bits: u64,
}

impl UeQueue {
    pub fn new(capacity_bytes: u64) -> Self {
        Self {
            packets: VecDeque::new(),
            backlog_bits: 0,
            capacity_bits: capacity_bytes * 8,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn backlog_bits(&self) -> u64 {
        self.backlog_bits
    }

    pub fn capacity_bits(&self) -> u64 {
        self.capacity_bits
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn head_of_line(&self) -> Option<SimTime> {
        self.packets.front().map(|p| p.created)
    }

    /// Appends the packet, or returns `false` if it does not fit.
    pub fn push(&mut self, id: PacketId, bits: u64, created: SimTime) -> bool {
        if self.backlog_bits + bits > self.capacity_bits {
            return false;
        }
        self.packets.push_back(QueuedPacket {
            id,
            total_bits: bits,
            remaining_bits: bits,
            created,
        });
        self.backlog_bits += bits;
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueuedPacket> {
        self.packets.iter()
    }
}

/// A slice of one packet carried in a transport block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Carried {
    pub packet_id: PacketId,
    pub bits: u64,
    /// True when this segment ends the packet.
    pub final_segment: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportBlock {
    pub ue: UeId,
    pub mcs_index: u8,
    /// Transport block size for the allocation.
    pub size_bits: u64,
    pub slot_index: u64,
    pub harq_attempt: u32,
    pub carried: Vec<Carried>,
}

impl TransportBlock {
    pub fn payload_bits(&self) -> u64 {
        self.carried.iter().map(|c| c.bits).sum()
    }
}

/// Dequeues up to `tb_capacity_bits` from the head of the queue, segmenting
/// the last packet if needed.
pub fn serve(queue: &mut UeQueue, ue: UeId, tb_capacity_bits: u64, mcs_index: u8, slot_index: u64) -> TransportBlock {
    let mut room = tb_capacity_bits;
    let mut carried = Vec::new();
    while room > 0 {
        let Some(head) = queue.packets.front_mut() else { break };
        let take = head.remaining_bits.min(room);
        head.remaining_bits -= take;
        room -= take;
        queue.backlog_bits -= take;
        let final_segment = head.remaining_bits == 0;
        carried.push(Carried {
            packet_id: head.id,
            bits: take,
            final_segment,
        });
        if final_segment {
            queue.packets.pop_front();
        }
    }
    TransportBlock {
        ue,
        mcs_index,
        size_bits: tb_capacity_bits,
        slot_index,
        harq_attempt: 1,
        carried,
    }
}

/// A failed block waiting for retransmission.
#[derive(Debug, Clone, PartialEq)]
pub struct HarqProcess {
    pub tb: TransportBlock,
    pub next_retx_slot: u64,
}

impl HarqProcess {
    pub fn attempt(&self) -> u32 {
        self.tb.harq_attempt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarqAction {
    /// Carried segments reached the receiver.
    Deliver(Vec<Carried>),
    /// Block goes back to the device for another attempt.
    Retransmit(HarqProcess),
    /// Attempts exhausted; carried packets are lost.
    Drop(Vec<Carried>),
}

pub fn harq_feedback(tb: TransportBlock, failed: bool, slot_index: u64, cfg: &MacConfig) -> HarqAction {
    if !failed {
        HarqAction::Deliver(tb.carried)
    } else if tb.harq_attempt < cfg.max_harq_attempts {
        HarqAction::Retransmit(HarqProcess {
            tb,
            next_retx_slot: slot_index + cfg.harq_retx_delay_slots,
        })
    } else {
        HarqAction::Drop(tb.carried)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrantKind {
    Retransmission,
    NewData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grant {
    pub ue: UeId,
    pub kind: GrantKind,
}

/// Round-robin pointer over device ids `0..num_ues`.
#[derive(Debug, Clone)]
pub struct RoundRobin {
    num_ues: usize,
    next: usize,
}

impl RoundRobin {
    pub fn new(num_ues: usize) -> Self {
        Self { num_ues, next: 0 }
    }

    /// `backlogged[u]` tells whether device `u` has eligible new data;
    /// `harq_due` lists devices with a retransmission due, highest priority
    /// first. A due retransmission always wins and does not move the pointer.
    pub fn schedule_slot(&mut self, backlogged: &[bool], harq_due: &[UeId]) -> Option<Grant> {
        if let Some(&ue) = harq_due.first() {
            return Some(Grant {
                ue,
                kind: GrantKind::Retransmission,
            });
        }
        let n = self.num_ues;
        let ue = (0..n).map(|k| (self.next + k) % n).find(|&u| backlogged[u])?;
        self.next = (ue + 1) % n;
        Some(Grant {
            ue,
            kind: GrantKind::NewData,
        })
    }
}
