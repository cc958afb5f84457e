use nrlight_core::channel::{pathloss_db, ChannelParams, LinkState};
use nrlight_core::energy::{active_power_mw, EnergyLedger, PowerModelParams};
use nrlight_core::mac::{harq_feedback, serve, HarqAction, MacConfig, RoundRobin, UeQueue};
use nrlight_core::phy::{link_budget, select_mcs, transport_block_size_bits, McsTable, PhyConfig};
use nrlight_core::{build_drop, DeviceProfile, InfVariant, Role, Scenario, SimTime};
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = DeviceProfile> {
    (
        "[A-Za-z0-9 -]{1,16}",
        prop::sample::select(vec![50.0, 100.0, 200.0]),
        0u8..=28,
        prop::sample::select(vec![1u32, 4, 16]),
        prop::sample::select(vec![13.0, 18.0, 23.0]),
    )
        .prop_map(|(label, bw, mcs, ant, ptx)| DeviceProfile {
            label,
            bandwidth_mhz: bw,
            max_mcs_index: mcs,
            num_antenna_elements: ant,
            max_tx_power_dbm: ptx,
        })
}

fn variant() -> impl Strategy<Value = InfVariant> {
    prop::sample::select(InfVariant::ALL.to_vec())
}

fn link(pathloss_db: f64, shadow_db: f64) -> LinkState {
    LinkState {
        distance_2d_m: 5.0,
        distance_3d_m: 5.2,
        is_los: true,
        los_probability: 1.0,
        pathloss_db,
        shadow_db,
    }
}

proptest! {
    #[test]
    fn profile_json_round_trip(p in profile()) {
        let json = serde_json::to_string(&p).unwrap();
        prop_assert_eq!(serde_json::from_str::<DeviceProfile>(&json).unwrap(), p);
    }

    #[test]
    fn drops_stay_in_area_with_exact_role_split(seed in any::<u64>(), n in 1u32..60, frac in 0.0f64..=1.0, drop in 0u32..5) {
        let s = Scenario { seed, num_devices: n, video_fraction: frac, num_drops: 5, ..Default::default() };
        let d = build_drop(&s, drop).unwrap();
        prop_assert_eq!(d.ue_positions.len(), n as usize);
        for p in &d.ue_positions {
            prop_assert!((0.0..=20.0).contains(&p.x) && (0.0..=20.0).contains(&p.y));
            prop_assert_eq!(p.z, s.ue_height_m);
        }
        let video = d.ue_roles.iter().filter(|r| **r == Role::VideoStream).count();
        prop_assert_eq!(video, s.num_video_devices());
        let again = build_drop(&s, drop).unwrap();
        prop_assert_eq!(again.ue_positions, d.ue_positions);
        prop_assert_eq!(again.ue_roles, d.ue_roles);
    }

    #[test]
    fn pathloss_grows_with_distance(v in variant(), los in any::<bool>(), d in 1.0f64..40.0, step in 0.0f64..20.0) {
        let p = ChannelParams::default();
        let near = pathloss_db(d, 28.0, los, v, &p);
        prop_assert!(pathloss_db(d + step, 28.0, los, v, &p) >= near);
        prop_assert!(pathloss_db(d, 28.0, false, v, &p) >= pathloss_db(d, 28.0, true, v, &p));
    }

    #[test]
    fn snr_knob_deltas_are_exact(p in profile(), pl in 50.0f64..130.0, sh in -15.0f64..15.0, excess in 0.0f64..40.0) {
        let phy = PhyConfig { excess_loss_db: excess, ..Default::default() };
        let l = link(pl, sh);
        let base = link_budget(&p, &l, &phy).mean_snr_db;
        let more_ant = DeviceProfile { num_antenna_elements: p.num_antenna_elements * 4, ..p.clone() };
        let more_bw = DeviceProfile { bandwidth_mhz: p.bandwidth_mhz * 2.0, ..p.clone() };
        let more_ptx = DeviceProfile { max_tx_power_dbm: p.max_tx_power_dbm + 5.0, ..p.clone() };
        prop_assert!((link_budget(&more_ant, &l, &phy).mean_snr_db - base - 10.0 * 4f64.log10()).abs() < 1e-9);
        prop_assert!((link_budget(&more_bw, &l, &phy).mean_snr_db - base + 10.0 * 2f64.log10()).abs() < 1e-9);
        prop_assert!((link_budget(&more_ptx, &l, &phy).mean_snr_db - base - 5.0).abs() < 1e-9);
    }

    #[test]
    fn mcs_selection_is_monotone_and_capped(a in -30.0f64..40.0, b in -30.0f64..40.0, cap in 0u8..=28) {
        let t = McsTable::standard(2.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let i = |s| select_mcs(s, cap, &t).map(|e| i32::from(e.index)).unwrap_or(-1);
        prop_assert!(i(lo) <= i(hi));
        prop_assert!(i(hi) <= i32::from(cap));
        if let Some(e) = select_mcs(hi, cap, &t) {
            prop_assert!(e.min_sinr_db <= hi);
        }
    }

    #[test]
    fn tbs_is_monotone(prb in 1u32..300, extra in 0u32..100, mcs in 0u8..=28) {
        let t = McsTable::standard(2.0);
        let e = t.get(mcs).unwrap();
        prop_assert!(transport_block_size_bits(prb + extra, e, 144) >= transport_block_size_bits(prb, e, 144));
        for f in t.entries() {
            if f.spectral_efficiency >= e.spectral_efficiency {
                prop_assert!(transport_block_size_bits(prb, f, 144) >= transport_block_size_bits(prb, e, 144));
            }
        }
    }

    #[test]
    fn round_robin_is_fair_under_full_backlog(n in 1usize..12, rounds in 1usize..20) {
        let mut rr = RoundRobin::new(n);
        let all = vec![true; n];
        let mut counts = vec![0usize; n];
        for _ in 0..n * rounds {
            counts[rr.schedule_slot(&all, &[]).unwrap().ue] += 1;
        }
        prop_assert!(counts.iter().all(|&c| c == rounds));
    }

    #[test]
    fn round_robin_only_grants_backlogged(pattern in prop::collection::vec(prop::collection::vec(any::<bool>(), 5), 1..60)) {
        let mut rr = RoundRobin::new(5);
        for b in &pattern {
            match rr.schedule_slot(b, &[]) {
                Some(g) => prop_assert!(b[g.ue]),
                None => prop_assert!(b.iter().all(|x| !x)),
            }
        }
    }

    #[test]
    fn serving_conserves_bits(sizes in prop::collection::vec(1u64..20_000, 0..40), caps in prop::collection::vec(0u64..50_000, 1..30)) {
        let mut q = UeQueue::new(1_000_000);
        let mut accepted = 0;
        for (i, &s) in sizes.iter().enumerate() {
            if q.push(i as u64, s, SimTime::ZERO) {
                accepted += s;
            }
        }
        prop_assert!(q.backlog_bits() <= q.capacity_bits());
        let mut carried = 0;
        let mut finished = Vec::new();
        for (slot, &cap) in caps.iter().enumerate() {
            let tb = serve(&mut q, 0, cap, 9, slot as u64);
            prop_assert!(tb.payload_bits() <= cap);
            carried += tb.payload_bits();
            finished.extend(tb.carried.iter().filter(|c| c.final_segment).map(|c| c.packet_id));
        }
        prop_assert_eq!(carried + q.backlog_bits(), accepted);
        prop_assert!(finished.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn harq_never_exceeds_attempt_budget(fails in prop::collection::vec(any::<bool>(), 1..10)) {
        let cfg = MacConfig::default();
        let mut q = UeQueue::new(1_000_000);
        q.push(0, 12_000, SimTime::ZERO);
        let mut tb = serve(&mut q, 0, 20_000, 9, 0);
        let mut slot = 0;
        for &failed in &fails {
            match harq_feedback(tb.clone(), failed, slot, &cfg) {
                HarqAction::Deliver(c) => { prop_assert!(!failed); prop_assert_eq!(c[0].bits, 12_000); break; }
                HarqAction::Drop(_) => { prop_assert!(failed); prop_assert_eq!(tb.harq_attempt, cfg.max_harq_attempts); break; }
                HarqAction::Retransmit(p) => {
                    prop_assert!(tb.harq_attempt < cfg.max_harq_attempts);
                    prop_assert_eq!(p.next_retx_slot, slot + cfg.harq_retx_delay_slots);
                    slot = p.next_retx_slot;
                    tb = p.tb;
                    tb.harq_attempt += 1;
                }
            }
        }
    }

    #[test]
    fn average_power_is_monotone_in_every_knob(p in profile(), duty in 1u32..100) {
        let params = PowerModelParams::default();
        let avg = |prof: &DeviceProfile| {
            let mut l = EnergyLedger::default();
            for i in 0..100 {
                l.accumulate(i < duty, 1e-3, active_power_mw(prof, &params), params.p_idle_mw);
            }
            l.avg_power_mw()
        };
        let base = avg(&p);
        prop_assert!(base >= params.p_idle_mw);
        let ant = DeviceProfile { num_antenna_elements: p.num_antenna_elements + 1, ..p.clone() };
        let bw = DeviceProfile { bandwidth_mhz: p.bandwidth_mhz + 10.0, ..p.clone() };
        let ptx = DeviceProfile { max_tx_power_dbm: p.max_tx_power_dbm + 1.0, ..p.clone() };
        prop_assert!(avg(&ant) > base);
        prop_assert!(avg(&bw) > base);
        prop_assert!(avg(&ptx) > base);
    }
}
