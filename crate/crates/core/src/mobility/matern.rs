//! Hard-core vehicle placement on a freeway segment.
//!
//! Matérn type-II thinning on a line: a Poisson process of intensity
//! `λp` gets uniform marks, and a point survives only if no other point
//! within the repulsion distance carries a smaller mark. The surviving
//! intensity is `(1 - exp(-2 r λp)) / (2 r)`, so the parent intensity
//! matching a target `λ` is `-ln(1 - 2 r λ) / (2 r)`.
//!
//! Type-II thinning cannot exceed an intensity of `1 / (2r)`. Between that
//! ceiling and the packing bound `1 / r` we fall back to drawing exactly
//! `round(λ L)` points uniformly among all hard-core configurations.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::traffic::{enb_track, lane_y, ring_waypoints, sample_count, sample_time, vru_tracks};
use super::{MobilityError, MobilityTrace, NodeClass, NodeId, NodeTrack};
use crate::scenario::ValidatedConfig;

/// How the positions of one lane were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardCoreMethod {
    MaternII,
    FixedCount,
}

/// Chooses the sampler for density `lambda` and hard-core distance `r`.
pub fn hard_core_method(lambda: f64, r: f64) -> Result<HardCoreMethod, MobilityError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(MobilityError::InvalidArgument(format!("repulsion must be > 0, got {r}")));
    }
    if lambda * r >= 1.0 {
        Err(MobilityError::InfeasibleDensity { density: lambda, repulsion_m: r })
    } else if 2.0 * r * lambda < 1.0 {
        Ok(HardCoreMethod::MaternII)
    } else {
        Ok(HardCoreMethod::FixedCount)
    }
}

/// Parent Poisson intensity whose type-II thinning has mean intensity
/// `lambda`. Requires `2 r lambda < 1`.
pub fn matern_parent_intensity(lambda: f64, r: f64) -> f64 {
    -(1.0 - 2.0 * r * lambda).ln() / (2.0 * r)
}

/// Matérn type-II thinning on a ring of circumference `length`. Returns
/// sorted positions in `[0, length)`.
pub fn matern_ii_ring(lambda: f64, length: f64, r: f64, rng: &mut impl Rng) -> Vec<f64> {
    let parent = matern_parent_intensity(lambda, r) * length;
    let count = if parent > 0.0 { Poisson::new(parent).map(|d| d.sample(rng) as usize).unwrap_or(0) } else { 0 };
    let mut pts: Vec<(f64, f64)> = (0..count).map(|_| (rng.random_range(0.0..length), rng.random())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = pts.len();
    let ring_dist = |a: f64, b: f64| {
        let d = (a - b).abs();
        d.min(length - d)
    };
    let mut kept = Vec::new();
    for i in 0..n {
        let (x, mark) = pts[i];
        let mut survives = true;
        // Walk outward in both directions until neighbours leave the disc.
        for step in 1..n {
            let fwd = pts[(i + step) % n];
            let bwd = pts[(i + n - step) % n];
            let fwd_in = ring_dist(x, fwd.0) < r;
            let bwd_in = ring_dist(x, bwd.0) < r;
            if (fwd_in && fwd.1 < mark) || (bwd_in && bwd.1 < mark) {
                survives = false;
                break;
            }
            if !fwd_in && !bwd_in {
                break;
            }
        }
        if survives {
            kept.push(x);
        }
    }
    kept
}

/// `n` points on a ring of circumference `length`, pairwise at least
/// `spacing` apart, uniform over all such configurations. `None` if they
/// do not fit.
pub fn hard_core_ring(n: usize, length: f64, spacing: f64, rng: &mut impl Rng) -> Option<Vec<f64>> {
    let free = length - n as f64 * spacing;
    if free < 0.0 {
        return None;
    }
    let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=free)).collect();
    u.sort_by(f64::total_cmp);
    let shift = rng.random_range(0.0..length);
    let mut pts: Vec<f64> = u.iter().enumerate().map(|(i, x)| (x + i as f64 * spacing + shift) % length).collect();
    pts.sort_by(f64::total_cmp);
    Some(pts)
}

/// Places vehicles per lane with a hard core of `repulsion_m`, then moves
/// them at constant speed (drawn from the configured range) with the same
/// wrap-around road as the intersection generator. VRUs and the eNodeB are
/// laid out as in [`generate_intersection_traffic`](super::generate_intersection_traffic).
pub fn generate_matern_placement(cfg: &ValidatedConfig, repulsion_m: f64, rng: &mut impl Rng) -> Result<MobilityTrace, MobilityError> {
    let method = hard_core_method(cfg.vehicle_density, repulsion_m)?;
    let road = cfg.road_length_m;
    let (vmin, vmax) = (cfg.vehicle_speed_range_kmh.0 / 3.6, cfg.vehicle_speed_range_kmh.1 / 3.6);
    let samples = sample_count(cfg.sim_duration_s);

    let mut nodes = vec![enb_track(0)];
    let mut next_id: NodeId = 1;
    for lane in 0..cfg.lane_count {
        let positions = match method {
            HardCoreMethod::MaternII => matern_ii_ring(cfg.vehicle_density, road, repulsion_m, rng),
            HardCoreMethod::FixedCount => {
                let n = (cfg.vehicle_density * road).round() as usize;
                hard_core_ring(n, road, repulsion_m, rng)
                    .ok_or(MobilityError::InfeasibleDensity { density: cfg.vehicle_density, repulsion_m })?
            }
        };
        for s0 in positions {
            let speed = rng.random_range(vmin..=vmax);
            let ring: Vec<(f64, f64)> = (0..=samples).map(|k| ((s0 + speed * sample_time(k)) % road, speed)).collect();
            nodes.push(NodeTrack {
                id: next_id,
                class: NodeClass::Vehicle,
                waypoints: ring_waypoints(&ring, road, lane_y(lane)),
                desired_speed_mps: Some(speed),
            });
            next_id += 1;
        }
    }
    nodes.extend(vru_tracks(cfg, next_id, rng));
    MobilityTrace::new(nodes, cfg.sim_duration_s)
}
