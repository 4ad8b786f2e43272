//! Synthetic urban-intersection traffic.
//!
//! Geometry: vehicles drive in +x along a straight road centered on the
//! intersection at the origin, one lane every [`LANE_WIDTH_M`] in y. The
//! road wraps around, so a vehicle leaving at `+L/2` re-enters at `-L/2`
//! and the density stays constant for the whole run. VRUs cross in +y
//! inside a 10 m strip centered on x = 0. The eNodeB sits at
//! [`ENB_POSITION`](super::ENB_POSITION).

use rand::Rng;

use super::matern::hard_core_ring;
use super::{MobilityError, MobilityTrace, NodeClass, NodeId, NodeTrack, Waypoint, ENB_POSITION, SAMPLE_INTERVAL_S};
use crate::scenario::{vehicle_count, ValidatedConfig};

pub const LANE_WIDTH_M: f64 = 3.5;
pub const VEHICLE_LENGTH_M: f64 = 5.0;
/// Width of the pedestrian crossing strip around x = 0.
pub const CROSSING_WIDTH_M: f64 = 10.0;

/// Duration of the jump segment inserted when a vehicle wraps around.
pub const WRAP_JUMP_S: f64 = 1e-6;

/// Parameters of the simplified Krauss car-following rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarFollowing {
    pub accel_mps2: f64,
    pub decel_mps2: f64,
    /// Driver reaction time.
    pub tau_s: f64,
    /// Minimum bumper-to-bumper gap.
    pub min_gap_m: f64,
}

pub const KRAUSS: CarFollowing = CarFollowing { accel_mps2: 2.6, decel_mps2: 4.5, tau_s: 1.0, min_gap_m: 2.5 };

pub(crate) fn lane_y(lane: usize) -> f64 {
    lane as f64 * LANE_WIDTH_M
}

pub(crate) fn sample_count(duration_s: f64) -> usize {
    (duration_s / SAMPLE_INTERVAL_S - 1e-9).ceil().max(0.0) as usize
}

pub(crate) fn sample_time(k: usize) -> f64 {
    k as f64 * SAMPLE_INTERVAL_S
}

pub(crate) fn enb_track(id: NodeId) -> NodeTrack {
    let (x, y) = ENB_POSITION;
    NodeTrack {
        id,
        class: NodeClass::Enb,
        waypoints: vec![Waypoint { t: 0.0, x, y, speed_mps: 0.0 }],
        desired_speed_mps: None,
    }
}

/// VRUs start on the near curb inside the crossing strip and walk in +y.
pub(crate) fn vru_tracks(cfg: &ValidatedConfig, first_id: NodeId, rng: &mut impl Rng) -> Vec<NodeTrack> {
    let speed = if cfg.vru_moving { cfg.pedestrian_speed_kmh / 3.6 } else { 0.0 };
    let curb = -LANE_WIDTH_M / 2.0;
    let samples = sample_count(cfg.sim_duration_s);
    (0..cfg.vru_count)
        .map(|i| {
            let x0 = rng.random_range(-CROSSING_WIDTH_M / 2.0..=CROSSING_WIDTH_M / 2.0);
            let y0 = curb - rng.random_range(0.0..=4.0);
            let waypoints = if speed > 0.0 {
                (0..=samples)
                    .map(|k| {
                        let t = sample_time(k);
                        Waypoint { t, x: x0, y: y0 + speed * t, speed_mps: speed }
                    })
                    .collect()
            } else {
                vec![Waypoint { t: 0.0, x: x0, y: y0, speed_mps: 0.0 }]
            };
            NodeTrack { id: first_id + i as NodeId, class: NodeClass::Vru, waypoints, desired_speed_mps: None }
        })
        .collect()
}

/// Samples a ring trajectory into waypoints. `ring[k]` is the arc position
/// in `[0, road_length)` at sample `k`; a decrease means the vehicle wrapped,
/// which is encoded as a near-instant jump one road length back.
pub(crate) fn ring_waypoints(ring: &[(f64, f64)], road_length_m: f64, y: f64) -> Vec<Waypoint> {
    let half = road_length_m / 2.0;
    let mut out = Vec::with_capacity(ring.len() + 4);
    for (k, &(s, speed)) in ring.iter().enumerate() {
        if k > 0 && s < ring[k - 1].0 {
            let (prev_s, prev_speed) = ring[k - 1];
            out.push(Waypoint { t: sample_time(k - 1) + WRAP_JUMP_S, x: prev_s - half - road_length_m, y, speed_mps: prev_speed });
        }
        out.push(Waypoint { t: sample_time(k), x: s - half, y, speed_mps: speed });
    }
    out
}

/// Generates vehicles under car-following dynamics plus the VRU cluster
/// and the eNodeB, sampled every 100 ms for the configured duration.
///
/// Node ids: 0 is the eNodeB, then vehicles lane by lane, then VRUs.
pub fn generate_intersection_traffic(cfg: &ValidatedConfig, rng: &mut impl Rng) -> Result<MobilityTrace, MobilityError> {
    let total = vehicle_count(cfg);
    let lanes = cfg.lane_count;
    let road = cfg.road_length_m;
    let (vmin, vmax) = (cfg.vehicle_speed_range_kmh.0 / 3.6, cfg.vehicle_speed_range_kmh.1 / 3.6);
    let samples = sample_count(cfg.sim_duration_s);

    let mut nodes = vec![enb_track(0)];
    let mut next_id: NodeId = 1;
    for lane in 0..lanes {
        let n = total / lanes + usize::from(lane < total % lanes);
        if n == 0 {
            continue;
        }
        let spacing = VEHICLE_LENGTH_M + KRAUSS.min_gap_m;
        let mut s = hard_core_ring(n, road, spacing, rng).ok_or(MobilityError::InfeasibleDensity {
            density: cfg.vehicle_density,
            repulsion_m: spacing,
        })?;
        let desired: Vec<f64> = (0..n).map(|_| rng.random_range(vmin..=vmax)).collect();
        let mut v: Vec<f64> = (0..n)
            .map(|i| desired[i].min((gap(&s, i, road) - KRAUSS.min_gap_m).max(0.0) / KRAUSS.tau_s))
            .collect();

        let mut rings = vec![Vec::with_capacity(samples + 1); n];
        for k in 0..=samples {
            if k > 0 {
                krauss_step(&mut s, &mut v, &desired, road, &KRAUSS, SAMPLE_INTERVAL_S);
            }
            for i in 0..n {
                rings[i].push((s[i], v[i]));
            }
        }
        // `speed_mps` describes the segment leaving each sample, i.e. the
        // speed chosen at the next step.
        for ring in &mut rings {
            for k in 0..samples {
                ring[k].1 = ring[k + 1].1;
            }
        }
        let y = lane_y(lane);
        for (i, ring) in rings.iter().enumerate() {
            nodes.push(NodeTrack {
                id: next_id,
                class: NodeClass::Vehicle,
                waypoints: ring_waypoints(ring, road, y),
                desired_speed_mps: Some(desired[i]),
            });
            next_id += 1;
        }
    }
    nodes.extend(vru_tracks(cfg, next_id, rng));
    MobilityTrace::new(nodes, cfg.sim_duration_s)
}

/// Bumper-to-bumper gap from vehicle `i` to its leader `i + 1` on the ring.
fn gap(s: &[f64], i: usize, road: f64) -> f64 {
    let n = s.len();
    if n == 1 {
        return road - VEHICLE_LENGTH_M;
    }
    (s[(i + 1) % n] - s[i]).rem_euclid(road) - VEHICLE_LENGTH_M
}

/// One synchronous update of every vehicle on a ring lane. Vehicle `i + 1`
/// (mod n) leads vehicle `i` for the whole run since nobody overtakes.
pub(crate) fn krauss_step(s: &mut [f64], v: &mut [f64], desired: &[f64], road: f64, p: &CarFollowing, dt: f64) {
    let n = s.len();
    let gaps: Vec<f64> = (0..n).map(|i| gap(s, i, road)).collect();
    let mut next: Vec<f64> = (0..n)
        .map(|i| {
            let lead = (i + 1) % n;
            let safe = v[lead] + (gaps[i] - p.min_gap_m) / p.tau_s;
            let wanted = (v[i] + p.accel_mps2 * dt).min(desired[i]).min(safe);
            wanted.max((v[i] - p.decel_mps2 * dt).max(0.0))
        })
        .collect();

    // The gap after the step is gap + (v_lead' - v') dt; keep it >= min_gap
    // even if that takes harder braking than the deceleration cap.
    if n > 1 {
        loop {
            let mut changed = false;
            for i in 0..n {
                let bound = ((gaps[i] - p.min_gap_m) / dt + next[(i + 1) % n]).max(0.0);
                if next[i] > bound {
                    next[i] = bound;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    for i in 0..n {
        let mut pos = (s[i] + next[i] * dt).rem_euclid(road);
        if pos >= road {
            pos -= road;
        }
        s[i] = pos;
        v[i] = next[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedStreams, Stream};
    use crate::scenario::{validate_config, ScenarioConfig};

    fn cfg(density: f64, lanes: usize) -> ValidatedConfig {
        validate_config(ScenarioConfig { vehicle_density: density, lane_count: lanes, ..Default::default() }).unwrap()
    }

    #[test]
    fn sparse_density_yields_ten_vehicles() {
        let mut rng = SeedStreams::new(1).rng(Stream::Mobility, 0);
        let trace = generate_intersection_traffic(&cfg(0.01, 1), &mut rng).unwrap();
        assert_eq!(trace.count_of(NodeClass::Vehicle), 10);
        assert_eq!(trace.count_of(NodeClass::Vru), 80);
        assert_eq!(trace.count_of(NodeClass::Enb), 1);
    }

    #[test]
    fn pedestrians_walk_at_three_kmh() {
        for seed in 0..5 {
            let mut rng = SeedStreams::new(seed).rng(Stream::Mobility, 0);
            let trace = generate_intersection_traffic(&cfg(0.03, 1), &mut rng).unwrap();
            for node in trace.nodes().iter().filter(|n| n.class == NodeClass::Vru) {
                assert!(node.waypoints.iter().all(|w| (w.speed_mps - 3.0 / 3.6).abs() < 1e-12));
                let x = node.waypoints[0].x;
                assert!((-5.0..=5.0).contains(&x));
            }
        }
    }

    #[test]
    fn desired_speeds_within_range() {
        for seed in 0..5 {
            let mut rng = SeedStreams::new(seed).rng(Stream::Mobility, 0);
            let trace = generate_intersection_traffic(&cfg(0.09, 2), &mut rng).unwrap();
            for node in trace.nodes().iter().filter(|n| n.class == NodeClass::Vehicle) {
                let v = node.desired_speed_mps.unwrap();
                assert!((70.0 / 3.6..=110.0 / 3.6).contains(&v), "{v}");
                assert!(node.waypoints.iter().all(|w| w.speed_mps <= v + 1e-9));
            }
        }
    }

    #[test]
    fn stationary_vrus_flag() {
        let cfg = validate_config(ScenarioConfig { vru_moving: false, ..Default::default() }).unwrap();
        let mut rng = SeedStreams::new(3).rng(Stream::Mobility, 0);
        let trace = generate_intersection_traffic(&cfg, &mut rng).unwrap();
        let vru = trace.ids_of(NodeClass::Vru).next().unwrap();
        let (a, b) = (trace.position_at(vru, 0.0).unwrap(), trace.position_at(vru, 5.0).unwrap());
        assert_eq!((a.x, a.y), (b.x, b.y));
    }

    #[test]
    fn wrap_keeps_positions_on_road_at_samples() {
        let mut rng = SeedStreams::new(5).rng(Stream::Mobility, 0);
        let trace = generate_intersection_traffic(&cfg(0.02, 1), &mut rng).unwrap();
        for id in trace.ids_of(NodeClass::Vehicle) {
            for k in 0..=100 {
                let p = trace.position_at(id, sample_time(k)).unwrap();
                assert!((-500.0..500.0).contains(&p.x), "{}", p.x);
            }
        }
    }

    #[test]
    fn overpacked_lane_is_infeasible() {
        let cfg = validate_config(ScenarioConfig {
            vehicle_density: 0.2,
            allow_density_override: true,
            ..Default::default()
        })
        .unwrap();
        let mut rng = SeedStreams::new(1).rng(Stream::Mobility, 0);
        assert!(matches!(generate_intersection_traffic(&cfg, &mut rng), Err(MobilityError::InfeasibleDensity { .. })));
    }

    #[test]
    fn single_vehicle_reaches_desired_speed() {
        let mut s = vec![0.0];
        let mut v = vec![0.0];
        for _ in 0..200 {
            krauss_step(&mut s, &mut v, &[25.0], 1000.0, &KRAUSS, 0.1);
        }
        assert!((v[0] - 25.0).abs() < 1e-9);
    }
}
