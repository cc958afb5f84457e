use nrlight_core::engine::TxOutcome;
use nrlight_core::phy::{link_budget, PhyConfig};
use nrlight_core::channel::LinkState;
use nrlight_core::{named_profile, run, run_detailed, ProfileName, Role, RunOptions, SimConfig};

fn short(duration_s: f64) -> SimConfig {
    let mut c = SimConfig::default();
    c.scenario.sim_duration_s = duration_s;
    c.scenario.num_drops = 3;
    c
}

#[test]
fn idle_network_draws_idle_power_only() {
    let mut c = short(2.0);
    c.scenario.video_fraction = 0.0;
    c.traffic.data_mean_rate_bps = 1e-3;
    let out = run_detailed(&c, &named_profile(ProfileName::NrLLow), 0, RunOptions::default()).unwrap();
    let d = &out.record.data;
    assert_eq!(d.counts.generated_packets, 0);
    assert!(d.vacuous && out.record.video.vacuous);
    assert_eq!(d.prr, 1.0);
    assert!(d.latency_ms.is_none());
    assert!((d.avg_power_mw - c.energy.p_idle_mw).abs() < 1e-12);
    assert!(out.record.mean_sinr_db.is_none());
    for l in &out.ledgers {
        assert_eq!(l.active_time_s, 0.0);
        assert!((l.duration_s() - (2.0 - c.metrics.warmup_s)).abs() < 1e-9);
    }
}

#[test]
fn single_device_next_to_the_base_station_gets_its_offered_load() {
    let mut c = short(3.0);
    c.scenario.num_devices = 1;
    c.scenario.video_fraction = 1.0;
    c.scenario.fixed_ue_positions = Some(vec![[10.0, 10.0]]);
    let out = run_detailed(&c, &named_profile(ProfileName::NrRelease15), 0, RunOptions::default()).unwrap();
    assert!(out.links[0].is_los);
    let v = &out.record.video;
    assert_eq!(v.counts.num_devices, 1);
    assert_eq!(v.prr, 1.0);
    assert_eq!(v.deadline_met_ratio, 1.0);
    let window = 3.0 - c.metrics.warmup_s - c.metrics.tail_guard_s;
    let one_packet_bps = 12_000.0 / window;
    assert!((v.throughput_bps - 10e6).abs() <= one_packet_bps, "{}", v.throughput_bps);
    assert!(v.throughput_bps <= v.offered_bps);
}

#[test]
fn runs_are_reproducible_and_drops_differ() {
    let c = short(2.0);
    let p = named_profile(ProfileName::NrLLow);
    assert_eq!(run(&c, &p, 1).unwrap(), run(&c, &p, 1).unwrap());
    assert_ne!(run(&c, &p, 1).unwrap(), run(&c, &p, 2).unwrap());
    let mut other_seed = c.clone();
    other_seed.scenario.seed = 99;
    assert_ne!(run(&c, &p, 0).unwrap(), run(&other_seed, &p, 0).unwrap());
}

#[test]
fn accounting_balances_and_trace_is_consistent() {
    let c = short(2.0);
    let p = named_profile(ProfileName::NrLLow);
    let out = run_detailed(&c, &p, 0, RunOptions { slot_trace: true }).unwrap();
    assert!(out.audit.bits_balance() && out.audit.packets_balance());
    assert!(!out.slot_trace.is_empty());

    // One transmission per slot, never more payload than block size.
    let mut slots: Vec<u64> = out.slot_trace.iter().map(|r| r.slot).collect();
    slots.dedup();
    assert_eq!(slots.len(), out.slot_trace.len());
    for r in &out.slot_trace {
        assert!(r.payload_bits <= r.tb_bits);
        assert!(r.mcs <= p.max_mcs_index);
        assert!((1..=c.mac.max_harq_attempts).contains(&r.harq_attempt));
    }
    let ok_new_payload: u64 = out
        .slot_trace
        .iter()
        .filter(|r| r.outcome == TxOutcome::Ok)
        .map(|r| r.payload_bits)
        .sum();
    assert_eq!(ok_new_payload, out.audit.delivered_bits);

    // Packets are released in creation order per device.
    for ue in 0..c.scenario.num_devices as usize {
        let mut delivered: Vec<_> = out.packets.iter().filter(|p| p.ue == ue && p.delivered.is_some()).collect();
        delivered.sort_by_key(|p| p.id);
        assert!(delivered.windows(2).all(|w| w[0].delivered <= w[1].delivered));
    }

    // Energy ledger matches the declared powers.
    for l in &out.ledgers {
        assert!((l.duration_s() - (2.0 - c.metrics.warmup_s)).abs() < 1e-9);
        assert!(l.energy_mj >= c.energy.p_idle_mw * l.duration_s() - 1e-9);
    }
}

#[test]
fn link_dump_matches_the_budget() {
    let c = short(1.0);
    let p = named_profile(ProfileName::NrLMid);
    let out = run_detailed(&c, &p, 0, RunOptions::default()).unwrap();
    assert_eq!(out.links.len(), 20);
    assert_eq!(out.links.iter().filter(|l| l.role == Role::VideoStream).count(), 2);
    for l in &out.links {
        let state = LinkState {
            distance_2d_m: l.distance_2d_m,
            distance_3d_m: l.distance_3d_m,
            is_los: l.is_los,
            los_probability: l.los_probability,
            pathloss_db: l.pathloss_db,
            shadow_db: l.shadow_db,
        };
        let phy = PhyConfig::default();
        assert!((link_budget(&p, &state, &phy).mean_snr_db - l.mean_snr_db).abs() < 1e-9);
        assert!(l.distance_3d_m >= l.distance_2d_m);
    }
}

#[test]
fn overflowing_queues_drop_packets_without_breaking_accounting() {
    let mut c = short(2.0);
    c.traffic.video_rate_bps = 200e6;
    c.mac.queue_capacity_bytes = 30_000;
    let out = run_detailed(&c, &named_profile(ProfileName::NrLLow), 0, RunOptions::default()).unwrap();
    assert!(out.audit.overflow_dropped_bits > 0);
    assert!(out.record.video.prr < 1.0);
    assert!(out.record.video.counts.dropped_packets > 0);
    assert!(out.audit.bits_balance() && out.audit.packets_balance());
}

#[test]
fn invalid_configuration_is_rejected_before_running() {
    let mut c = short(1.0);
    c.metrics.warmup_s = 1.0;
    assert!(run(&c, &named_profile(ProfileName::NrLLow), 0).unwrap_err().is_config());
    let c = short(1.0);
    assert!(run(&c, &named_profile(ProfileName::NrLLow), 3).unwrap_err().is_config());
    let mut bad = named_profile(ProfileName::NrLLow);
    bad.bandwidth_mhz = 75.0;
    assert!(run(&c, &bad, 0).unwrap_err().is_config());
}
