use proptest::prelude::*;
use v2p_sim::engine::{run_simulation, DropStage, FadingPair, Outcome, PacketRecord};
use v2p_sim::latency::e2e_latency_ms;
use v2p_sim::metrics::{MetricsReport, RunSummary};
use v2p_sim::mobility::{generate_intersection_traffic, MobilityTrace, ENB_POSITION};
use v2p_sim::rng::{SeedStreams, Stream};
use v2p_sim::scenario::{validate_config, DeliveryMode, NetworkMode, ScenarioConfig, ValidatedConfig};

struct Setup {
    cfg: ValidatedConfig,
    trace: MobilityTrace,
    fading: FadingPair,
    streams: SeedStreams,
}

fn setup(edit: impl FnOnce(&mut ScenarioConfig)) -> Setup {
    let mut c = ScenarioConfig { sim_duration_s: 3.0, vru_count: 20, ..ScenarioConfig::default() };
    edit(&mut c);
    let cfg = validate_config(c).unwrap();
    let streams = SeedStreams::new(cfg.seed);
    let trace = generate_intersection_traffic(&cfg, &mut streams.rng(Stream::Mobility, 0)).unwrap();
    let fading = FadingPair::generate(&cfg, &streams).unwrap();
    Setup { cfg, trace, fading, streams }
}

fn run(s: &Setup, index: u64) -> Vec<PacketRecord> {
    run_simulation(&s.cfg, &s.trace, &s.fading, &s.streams, index).unwrap()
}

/// Weak links so both uplink and downlink drops occur.
fn lossy(c: &mut ScenarioConfig) {
    c.vru_tx_power_dbm = -6.0;
    c.enb_tx_power_dbm = 20.0;
    c.harq_max_attempts = 2;
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn causality_and_conservation(seed in any::<u64>(), mec in any::<bool>(), weak in any::<bool>()) {
        let s = setup(|c| {
            c.seed = seed;
            c.network_mode = if mec { NetworkMode::Mec } else { NetworkMode::Conventional };
            if weak {
                lossy(c);
            }
        });
        let records = run(&s, 0);
        for (i, r) in records.iter().enumerate() {
            prop_assert_eq!(r.packet_id, i as u64);
            prop_assert!(r.generated_at_s >= 0.0 && r.generated_at_s < s.cfg.sim_duration_s);
            let uplink_lost = r.receivers.iter().any(|rx| matches!(rx.outcome, Outcome::Dropped { stage: DropStage::Uplink, .. }));
            for rx in &r.receivers {
                match rx.outcome {
                    Outcome::Delivered { breakdown, delivered_at_s } => {
                        prop_assert!(!uplink_lost);
                        prop_assert_eq!(breakdown.mode, s.cfg.network_mode);
                        if mec {
                            prop_assert_eq!((breakdown.t_tn_ms, breakdown.t_cn_ms), (0.0, 0.0));
                        }
                        let expected = r.generated_at_s + e2e_latency_ms(&breakdown) / 1e3;
                        prop_assert!((delivered_at_s - expected).abs() < 1e-9);
                    }
                    Outcome::Dropped { stage, .. } => {
                        if uplink_lost {
                            prop_assert_eq!(stage, DropStage::Uplink);
                        }
                    }
                }
            }
        }
        // Packets are generated in time order, which is also event order.
        prop_assert!(records.windows(2).all(|w| w[0].generated_at_s <= w[1].generated_at_s));
    }

    #[test]
    fn broadcast_targets_match_range_query(seed in any::<u64>()) {
        let s = setup(|c| c.seed = seed);
        for r in run(&s, 1) {
            let ids: Vec<u32> = r.receivers.iter().map(|rx| rx.vehicle_id).collect();
            let expected = s.trace.in_range_vehicles(ENB_POSITION, r.generated_at_s, s.cfg.transmission_range_m).unwrap();
            prop_assert_eq!(ids, expected);
        }
    }

    #[test]
    fn nearest_k_targets_match_query(seed in any::<u64>(), k in 1usize..=8) {
        let s = setup(|c| {
            c.seed = seed;
            c.delivery_mode = DeliveryMode::NearestK(k);
        });
        for r in run(&s, 2) {
            let centroid = s.trace.vru_centroid(r.generated_at_s).unwrap();
            let expected = s.trace.nearest_vehicles(centroid, r.generated_at_s, k).unwrap();
            let ids: Vec<u32> = r.receivers.iter().map(|rx| rx.vehicle_id).collect();
            prop_assert_eq!(ids, expected);
        }
    }
}

#[test]
fn identical_inputs_give_identical_records() {
    let s = setup(lossy);
    assert_eq!(run(&s, 5), run(&s, 5));
}

#[test]
fn weak_links_drop_at_both_stages() {
    let s = setup(lossy);
    let records = run(&s, 0);
    let stages: Vec<DropStage> = records
        .iter()
        .flat_map(|r| &r.receivers)
        .filter_map(|rx| match rx.outcome {
            Outcome::Dropped { stage, .. } => Some(stage),
            _ => None,
        })
        .collect();
    assert!(stages.contains(&DropStage::Uplink));
    assert!(stages.contains(&DropStage::Downlink));
}

#[test]
fn pdr_matches_raw_recount() {
    let s = setup(lossy);
    let runs: Vec<Vec<PacketRecord>> = (0..4).map(|i| run(&s, i)).collect();
    let summaries: Vec<RunSummary> = runs.iter().map(|r| RunSummary::from_records(r)).collect();
    let report = MetricsReport::aggregate(&summaries).unwrap();
    let (mut delivered, mut total) = (0usize, 0usize);
    for rx in runs.iter().flatten().flat_map(|r| &r.receivers) {
        total += 1;
        delivered += matches!(rx.outcome, Outcome::Delivered { .. }) as usize;
    }
    assert!(total > 0 && delivered < total);
    assert_eq!(report.pdr, delivered as f64 / total as f64);
}

#[test]
fn receivers_later_in_distance_order_wait_for_grants() {
    let s = setup(|c| {
        c.vehicle_density = 0.09;
        c.bler_s0 = -200.0;
    });
    let records = run(&s, 0);
    let mut by_rank_max = 0.0f64;
    for r in &records {
        assert!(r.receivers.len() > 10);
        let mut dl: Vec<f64> = r.receivers.iter().filter_map(|rx| rx.breakdown()).map(|b| b.t_dl_ms).collect();
        dl.sort_by(f64::total_cmp);
        // 1 ms scheduling + 1 ms airtime, plus one extra ms per full set of grants.
        assert_eq!(dl[0], 2.0);
        let expected_last = 2.0 + ((r.receivers.len() - 1) / s.cfg.dl_assignments_per_subframe) as f64;
        assert_eq!(*dl.last().unwrap(), expected_last);
        by_rank_max = by_rank_max.max(expected_last);
    }
    assert!(by_rank_max >= 10.0);
}
