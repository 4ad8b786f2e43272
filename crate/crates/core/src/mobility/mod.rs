//! Node trajectories and proximity queries.
//!
//! A [`MobilityTrace`] holds piecewise-linear tracks for every node. Tracks
//! come from the synthetic intersection generator ([`traffic`]), the
//! hard-core freeway placement ([`matern`]) or a parsed movement script
//! ([`ns2`]).

pub mod matern;
pub mod ns2;
pub mod traffic;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use matern::generate_matern_placement;
pub use ns2::{parse_movement_trace, write_movement_trace};
pub use traffic::generate_intersection_traffic;

pub type NodeId = u32;

/// Fixed eNodeB site, roadside next to the intersection.
pub const ENB_POSITION: (f64, f64) = (0.0, 50.0);

/// Interval between generated trajectory samples.
pub const SAMPLE_INTERVAL_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeClass {
    Vehicle,
    Vru,
    Enb,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Vehicle => "vehicle",
            NodeClass::Vru => "vru",
            NodeClass::Enb => "enb",
        }
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vehicle" => Ok(NodeClass::Vehicle),
            "vru" => Ok(NodeClass::Vru),
            "enb" => Ok(NodeClass::Enb),
            other => Err(format!("unknown node class `{other}`")),
        }
    }
}

/// A timestamped position. `speed_mps` is the speed the node travels at
/// from this waypoint until the next one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrack {
    pub id: NodeId,
    pub class: NodeClass,
    pub waypoints: Vec<Waypoint>,
    /// Free-flow speed a vehicle aims for, when known.
    pub desired_speed_mps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub speed_mps: f64,
}

impl Position {
    pub fn distance_to(&self, (x, y): (f64, f64)) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("UnknownNode: node {0} is not in the trace")]
    UnknownNode(NodeId),
    #[error("TimeOutOfRange: t = {0} s")]
    TimeOutOfRange(f64),
    #[error("InfeasibleDensity: density {density} with repulsion {repulsion_m} m cannot be packed")]
    InfeasibleDensity { density: f64, repulsion_m: f64 },
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("InvalidTrace: {0}")]
    InvalidTrace(String),
    #[error("SyntaxError at line {line}: expected {expected}")]
    Syntax { line: usize, expected: String },
    #[error("NonMonotoneTime: node {node} at line {line}")]
    NonMonotoneTime { node: NodeId, line: usize },
    #[error("UnknownNodeReference: node {node} at line {line} has no initial position")]
    UnknownNodeReference { node: NodeId, line: usize },
}

impl MobilityError {
    pub fn name(&self) -> &'static str {
        match self {
            MobilityError::UnknownNode(_) => "UnknownNode",
            MobilityError::TimeOutOfRange(_) => "TimeOutOfRange",
            MobilityError::InfeasibleDensity { .. } => "InfeasibleDensity",
            MobilityError::InvalidArgument(_) => "InvalidArgument",
            MobilityError::InvalidTrace(_) => "InvalidTrace",
            MobilityError::Syntax { .. } => "SyntaxError",
            MobilityError::NonMonotoneTime { .. } => "NonMonotoneTime",
            MobilityError::UnknownNodeReference { .. } => "UnknownNodeReference",
        }
    }
}

/// Trajectories of every node in a scenario. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    nodes: Vec<NodeTrack>,
    duration_s: f64,
}

impl MobilityTrace {
    /// Builds a trace, checking per-node invariants: first waypoint at
    /// t = 0, strictly increasing timestamps, finite coordinates and
    /// non-negative speeds, unique ids.
    pub fn new(mut nodes: Vec<NodeTrack>, duration_s: f64) -> Result<Self, MobilityError> {
        if !(duration_s.is_finite() && duration_s >= 0.0) {
            return Err(MobilityError::InvalidTrace(format!("duration {duration_s} s")));
        }
        nodes.sort_by_key(|n| n.id);
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(MobilityError::InvalidTrace(format!("duplicate node {}", pair[0].id)));
            }
        }
        for node in &nodes {
            let bad = |what: &str| MobilityError::InvalidTrace(format!("node {}: {what}", node.id));
            let first = node.waypoints.first().ok_or_else(|| bad("no waypoints"))?;
            if first.t != 0.0 {
                return Err(bad("first waypoint not at t = 0"));
            }
            for w in &node.waypoints {
                if !(w.t.is_finite() && w.x.is_finite() && w.y.is_finite() && w.speed_mps.is_finite()) {
                    return Err(bad("non-finite waypoint"));
                }
                if w.speed_mps < 0.0 {
                    return Err(bad("negative speed"));
                }
            }
            if node.waypoints.windows(2).any(|p| p[1].t <= p[0].t) {
                return Err(bad("timestamps not strictly increasing"));
            }
        }
        Ok(Self { nodes, duration_s })
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn nodes(&self) -> &[NodeTrack] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeTrack, MobilityError> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .map(|i| &self.nodes[i])
            .map_err(|_| MobilityError::UnknownNode(id))
    }

    pub fn ids_of(&self, class: NodeClass) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.class == class).map(|n| n.id)
    }

    pub fn count_of(&self, class: NodeClass) -> usize {
        self.ids_of(class).count()
    }

    /// The first eNodeB in the trace, if any.
    pub fn enb(&self) -> Option<NodeId> {
        self.ids_of(NodeClass::Enb).next()
    }

    /// Position at time `t`, linearly interpolated between the bracketing
    /// waypoints. Past the last waypoint the node rests there with speed 0.
    pub fn position_at(&self, id: NodeId, t: f64) -> Result<Position, MobilityError> {
        if t.is_nan() || t < 0.0 {
            return Err(MobilityError::TimeOutOfRange(t));
        }
        Ok(track_position(&self.node(id)?.waypoints, t))
    }

    /// Centroid of all VRU positions at `t`.
    pub fn vru_centroid(&self, t: f64) -> Result<(f64, f64), MobilityError> {
        let mut n = 0usize;
        let (mut sx, mut sy) = (0.0, 0.0);
        for node in self.nodes.iter().filter(|n| n.class == NodeClass::Vru) {
            let p = self.position_at(node.id, t)?;
            sx += p.x;
            sy += p.y;
            n += 1;
        }
        if n == 0 {
            return Err(MobilityError::InvalidTrace("no VRU nodes".into()));
        }
        Ok((sx / n as f64, sy / n as f64))
    }

    /// The `k` vehicles closest to `centroid` at `t`, nearest first. Ties go
    /// to the lower node id.
    pub fn nearest_vehicles(&self, centroid: (f64, f64), t: f64, k: usize) -> Result<Vec<NodeId>, MobilityError> {
        if k == 0 {
            return Err(MobilityError::InvalidArgument("k must be >= 1".into()));
        }
        let mut ranked = self.vehicle_distances(centroid, t)?;
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(ranked.into_iter().take(k).map(|(id, _)| id).collect())
    }

    /// Every vehicle within `range_m` (inclusive) of `origin` at `t`, in
    /// ascending id order.
    pub fn in_range_vehicles(&self, origin: (f64, f64), t: f64, range_m: f64) -> Result<Vec<NodeId>, MobilityError> {
        if !(range_m > 0.0) {
            return Err(MobilityError::InvalidArgument("range must be > 0".into()));
        }
        Ok(self
            .vehicle_distances(origin, t)?
            .into_iter()
            .filter(|&(_, d)| d <= range_m)
            .map(|(id, _)| id)
            .collect())
    }

    /// (id, distance) of every vehicle, ascending id.
    pub fn vehicle_distances(&self, origin: (f64, f64), t: f64) -> Result<Vec<(NodeId, f64)>, MobilityError> {
        if t.is_nan() || t < 0.0 {
            return Err(MobilityError::TimeOutOfRange(t));
        }
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.class == NodeClass::Vehicle)
            .map(|n| (n.id, track_position(&n.waypoints, t).distance_to(origin)))
            .collect())
    }
}

fn track_position(waypoints: &[Waypoint], t: f64) -> Position {
    // Index of the last waypoint with timestamp <= t.
    let k = waypoints.partition_point(|w| w.t <= t).saturating_sub(1);
    let w = waypoints[k];
    match waypoints.get(k + 1) {
        Some(next) if t > w.t => {
            let frac = (t - w.t) / (next.t - w.t);
            Position { x: w.x + frac * (next.x - w.x), y: w.y + frac * (next.y - w.y), speed_mps: w.speed_mps }
        }
        Some(_) => Position { x: w.x, y: w.y, speed_mps: w.speed_mps },
        None => Position { x: w.x, y: w.y, speed_mps: 0.0 },
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn wp(t: f64, x: f64, y: f64, speed_mps: f64) -> Waypoint {
        Waypoint { t, x, y, speed_mps }
    }

    pub(crate) fn track(id: NodeId, class: NodeClass, waypoints: Vec<Waypoint>) -> NodeTrack {
        NodeTrack { id, class, waypoints, desired_speed_mps: None }
    }

    fn static_vehicles(xs: &[(NodeId, f64)]) -> MobilityTrace {
        let nodes = xs.iter().map(|&(id, x)| track(id, NodeClass::Vehicle, vec![wp(0.0, x, 0.0, 0.0)])).collect();
        MobilityTrace::new(nodes, 1.0).unwrap()
    }

    #[test]
    fn interpolation_rules() {
        let trace = MobilityTrace::new(
            vec![track(0, NodeClass::Vehicle, vec![wp(0.0, 0.0, 0.0, 10.0), wp(1.0, 10.0, 0.0, 10.0)])],
            2.0,
        )
        .unwrap();
        let at = |t| trace.position_at(0, t).unwrap();
        assert_eq!((at(0.0).x, at(0.0).y), (0.0, 0.0));
        assert_eq!((at(1.0).x, at(1.0).y), (10.0, 0.0));
        assert_eq!((at(0.5).x, at(0.5).y), (5.0, 0.0));
        let beyond = at(1.7);
        assert_eq!((beyond.x, beyond.y, beyond.speed_mps), (10.0, 0.0, 0.0));
        assert_eq!(trace.position_at(3, 0.0), Err(MobilityError::UnknownNode(3)));
        assert!(matches!(trace.position_at(0, -0.1), Err(MobilityError::TimeOutOfRange(_))));
    }

    #[test]
    fn trace_invariants_enforced() {
        let late = track(0, NodeClass::Vru, vec![wp(0.5, 0.0, 0.0, 0.0)]);
        assert!(MobilityTrace::new(vec![late], 1.0).is_err());
        let backwards = track(0, NodeClass::Vru, vec![wp(0.0, 0.0, 0.0, 0.0), wp(0.0, 1.0, 0.0, 0.0)]);
        assert!(MobilityTrace::new(vec![backwards], 1.0).is_err());
        let negative = track(0, NodeClass::Vru, vec![wp(0.0, 0.0, 0.0, -1.0)]);
        assert!(MobilityTrace::new(vec![negative], 1.0).is_err());
    }

    #[test]
    fn nearest_returns_all_when_fewer_than_k() {
        let trace = static_vehicles(&[(1, 30.0), (2, 10.0), (3, 20.0)]);
        assert_eq!(trace.nearest_vehicles((0.0, 0.0), 0.0, 5).unwrap(), vec![2, 3, 1]);
    }

    #[test]
    fn nearest_takes_exactly_k() {
        let xs: Vec<_> = (1..=10).map(|i| (i, i as f64 * 7.0)).collect();
        let trace = static_vehicles(&xs);
        assert_eq!(trace.nearest_vehicles((0.0, 0.0), 0.0, 5).unwrap(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn nearest_tie_goes_to_lower_id() {
        let trace = static_vehicles(&[(7, -15.0), (4, 15.0)]);
        assert_eq!(trace.nearest_vehicles((0.0, 0.0), 0.0, 2).unwrap(), vec![4, 7]);
    }

    #[test]
    fn range_is_a_closed_ball() {
        let trace = static_vehicles(&[(1, 500.0), (2, 501.0), (3, -20.0)]);
        assert_eq!(trace.in_range_vehicles((0.0, 0.0), 0.0, 500.0).unwrap(), vec![1, 3]);
        let empty = MobilityTrace::new(vec![], 1.0).unwrap();
        assert!(empty.in_range_vehicles((0.0, 0.0), 0.0, 500.0).unwrap().is_empty());
    }

    #[test]
    fn non_vehicles_are_ignored_by_proximity_queries() {
        let nodes = vec![
            track(0, NodeClass::Enb, vec![wp(0.0, 0.0, 0.0, 0.0)]),
            track(1, NodeClass::Vru, vec![wp(0.0, 1.0, 0.0, 0.0)]),
            track(2, NodeClass::Vehicle, vec![wp(0.0, 2.0, 0.0, 0.0)]),
        ];
        let trace = MobilityTrace::new(nodes, 1.0).unwrap();
        assert_eq!(trace.nearest_vehicles((0.0, 0.0), 0.0, 3).unwrap(), vec![2]);
        assert_eq!(trace.vru_centroid(0.0).unwrap(), (1.0, 0.0));
        assert_eq!(trace.enb(), Some(0));
    }
}
