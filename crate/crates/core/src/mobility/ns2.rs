//! The classic ns-2 movement-script format.
//!
//! ```text
//! $node_(0) set X_ 100.000000
//! $node_(0) set Y_ 50.000000
//! $node_(0) set Z_ 0.000000
//! $ns_ at 1.000000 "$node_(0) setdest 110.000000 50.000000 10.000000"
//! ```
//!
//! `setdest X Y S` starts a straight move toward (X, Y) at S m/s from
//! wherever the node is at that instant; a later `setdest` interrupts it.
//! Z is parsed and discarded. Two comment directives carry what the format
//! itself cannot express and are ignored by other tools:
//!
//! ```text
//! # class 3 vru
//! # duration 10.000000
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{MobilityError, MobilityTrace, NodeClass, NodeId, NodeTrack, Waypoint};

#[derive(Debug, Default)]
struct PendingNode {
    x: Option<f64>,
    y: Option<f64>,
    class: Option<NodeClass>,
    moves: Vec<Move>,
}

#[derive(Debug, Clone, Copy)]
struct Move {
    t: f64,
    x: f64,
    y: f64,
    speed: f64,
}

fn syntax(line: usize, expected: &str) -> MobilityError {
    MobilityError::Syntax { line, expected: expected.to_string() }
}

fn number(tok: Option<&str>, line: usize, what: &str) -> Result<f64, MobilityError> {
    tok.and_then(|t| t.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| syntax(line, what))
}

/// Parses `$node_(I)` and returns I.
fn node_ref(tok: Option<&str>, line: usize) -> Result<NodeId, MobilityError> {
    tok.and_then(|t| t.strip_prefix("$node_("))
        .and_then(|t| t.strip_suffix(')'))
        .and_then(|t| t.parse::<NodeId>().ok())
        .ok_or_else(|| syntax(line, "`$node_(<id>)`"))
}

/// Parses a movement script into a trace.
pub fn parse_movement_trace(text: &str) -> Result<MobilityTrace, MobilityError> {
    let mut nodes: BTreeMap<NodeId, PendingNode> = BTreeMap::new();
    let mut duration: Option<f64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut toks = comment.split_whitespace();
            match toks.next() {
                Some("class") => {
                    let id = toks
                        .next()
                        .and_then(|t| t.parse::<NodeId>().ok())
                        .ok_or_else(|| syntax(line, "node id after `# class`"))?;
                    let class = toks
                        .next()
                        .and_then(|t| t.parse::<NodeClass>().ok())
                        .ok_or_else(|| syntax(line, "vehicle|vru|enb"))?;
                    nodes.entry(id).or_default().class = Some(class);
                }
                Some("duration") => {
                    let d = number(toks.next(), line, "duration in seconds")?;
                    if d < 0.0 {
                        return Err(syntax(line, "non-negative duration"));
                    }
                    duration = Some(d);
                }
                _ => {}
            }
            continue;
        }

        if trimmed.starts_with("$node_(") {
            let mut toks = trimmed.split_whitespace();
            let id = node_ref(toks.next(), line)?;
            if toks.next() != Some("set") {
                return Err(syntax(line, "`set`"));
            }
            let axis = toks.next().ok_or_else(|| syntax(line, "X_, Y_ or Z_"))?;
            let value = number(toks.next(), line, "coordinate")?;
            if toks.next().is_some() {
                return Err(syntax(line, "end of line"));
            }
            let node = nodes.entry(id).or_default();
            if !node.moves.is_empty() {
                return Err(syntax(line, "initial position before any scheduled move"));
            }
            match axis {
                "X_" => node.x = Some(value),
                "Y_" => node.y = Some(value),
                "Z_" => {}
                _ => return Err(syntax(line, "X_, Y_ or Z_")),
            }
        } else if let Some(rest) = trimmed.strip_prefix("$ns_") {
            let mut toks = rest.split_whitespace();
            if toks.next() != Some("at") {
                return Err(syntax(line, "`at`"));
            }
            let t = number(toks.next(), line, "event time")?;
            if t < 0.0 {
                return Err(syntax(line, "non-negative event time"));
            }
            let cmd = toks.collect::<Vec<_>>().join(" ");
            let body = cmd
                .strip_prefix('"')
                .and_then(|c| c.strip_suffix('"'))
                .ok_or_else(|| syntax(line, "quoted command"))?;
            let mut ctoks = body.split_whitespace();
            let id = node_ref(ctoks.next(), line)?;
            if ctoks.next() != Some("setdest") {
                return Err(syntax(line, "`setdest`"));
            }
            let x = number(ctoks.next(), line, "destination x")?;
            let y = number(ctoks.next(), line, "destination y")?;
            let speed = number(ctoks.next(), line, "speed")?;
            if speed < 0.0 {
                return Err(syntax(line, "non-negative speed"));
            }
            if ctoks.next().is_some() {
                return Err(syntax(line, "end of command"));
            }
            let node = match nodes.get_mut(&id) {
                Some(n) if n.x.is_some() || n.y.is_some() => n,
                _ => return Err(MobilityError::UnknownNodeReference { node: id, line }),
            };
            if node.moves.last().is_some_and(|m| t < m.t) {
                return Err(MobilityError::NonMonotoneTime { node: id, line });
            }
            node.moves.push(Move { t, x, y, speed });
        } else {
            return Err(syntax(line, "`$node_(<id>) set ...` or `$ns_ at ...`"));
        }
    }

    let mut tracks = Vec::with_capacity(nodes.len());
    let mut last_t: f64 = 0.0;
    for (id, node) in nodes {
        if node.x.is_none() && node.y.is_none() {
            return Err(MobilityError::InvalidTrace(format!("node {id} has a class but no position")));
        }
        let waypoints = build_waypoints(node.x.unwrap_or(0.0), node.y.unwrap_or(0.0), &node.moves);
        last_t = last_t.max(waypoints.last().map_or(0.0, |w| w.t));
        tracks.push(NodeTrack { id, class: node.class.unwrap_or(NodeClass::Vehicle), waypoints, desired_speed_mps: None });
    }
    MobilityTrace::new(tracks, duration.unwrap_or(last_t))
}

fn build_waypoints(x0: f64, y0: f64, moves: &[Move]) -> Vec<Waypoint> {
    let mut wps = vec![Waypoint { t: 0.0, x: x0, y: y0, speed_mps: 0.0 }];
    for m in moves {
        let here = super::track_position(&wps, m.t);
        wps.retain(|w| w.t < m.t);
        let dist = (m.x - here.x).hypot(m.y - here.y);
        if m.speed > 0.0 && dist > 0.0 {
            wps.push(Waypoint { t: m.t, x: here.x, y: here.y, speed_mps: m.speed });
            wps.push(Waypoint { t: m.t + dist / m.speed, x: m.x, y: m.y, speed_mps: 0.0 });
        } else {
            wps.push(Waypoint { t: m.t, x: here.x, y: here.y, speed_mps: 0.0 });
        }
    }
    wps
}

fn fixed(v: f64) -> String {
    let s = format!("{v:.6}");
    // Avoid emitting "-0.000000".
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn rounded(v: f64) -> f64 {
    fixed(v).parse().expect("formatted float parses")
}

/// Serializes a trace. Every waypoint-to-waypoint segment becomes one
/// `setdest` issued at the segment start; stationary segments are skipped.
/// Speeds are derived from the printed (6-decimal) values so a reader
/// reproduces the waypoints to within the print precision.
pub fn write_movement_trace(trace: &MobilityTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# v2psim movement trace");
    let _ = writeln!(out, "# duration {}", fixed(trace.duration_s()));
    for node in trace.nodes() {
        let _ = writeln!(out, "# class {} {}", node.id, node.class);
    }
    for node in trace.nodes() {
        let w = node.waypoints[0];
        let _ = writeln!(out, "$node_({}) set X_ {}", node.id, fixed(w.x));
        let _ = writeln!(out, "$node_({}) set Y_ {}", node.id, fixed(w.y));
        let _ = writeln!(out, "$node_({}) set Z_ 0.000000", node.id);
    }

    let mut moves: Vec<(f64, NodeId, String)> = Vec::new();
    for node in trace.nodes() {
        for pair in node.waypoints.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (ax, ay, bx, by) = (rounded(a.x), rounded(a.y), rounded(b.x), rounded(b.y));
            let dist = (bx - ax).hypot(by - ay);
            if dist == 0.0 {
                continue;
            }
            let (ta, tb) = (rounded(a.t), rounded(b.t));
            let speed = dist / (tb - ta);
            moves.push((
                ta,
                node.id,
                format!(
                    "$ns_ at {} \"$node_({}) setdest {} {} {}\"",
                    fixed(ta),
                    node.id,
                    fixed(bx),
                    fixed(by),
                    fixed(speed)
                ),
            ));
        }
    }
    moves.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, _, line) in moves {
        out.push_str(&line);
        out.push('\n');
    }
    out
}
