//! Discrete-event simulation of VRU awareness messages relayed through the
//! eNodeB to nearby vehicles.
//!
//! Packet life cycle:
//!
//! 1. `PacketGenerated`: the receiver set is fixed and the uplink is
//!    evaluated (access delay, HARQ over EPA fading).
//! 2. `UplinkDone`: network latency is sampled; the packet traverses
//!    backhaul/transport/core up, is processed, and comes back down.
//! 3. `CoreDone`: the eNodeB schedules one downlink per receiver. The control
//!    channel carries `dl_assignments_per_subframe` grants per 1 ms, so the
//!    j-th receiver (nearest first) waits `floor(j / G)` ms.
//! 4. `DownlinkDone`: the receiver's outcome is final.

pub mod queue;

use std::fmt;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

pub use queue::{Event, EventKind, EventQueue};

use crate::channel::{self, generate_fading_trace, ChannelError, FadingTrace, TapProfile};
use crate::latency::{self, LatencyBreakdown, NetworkLatency};
use crate::linkphy::{self, BlerCurve, LinkError, McsProfile, ResourceGrid};
use crate::mobility::{MobilityError, MobilityTrace, NodeClass, NodeId, ENB_POSITION};
use crate::rng::{SeedStreams, Stream};
use crate::scenario::{DeliveryMode, ValidatedConfig};

/// Vehicle speed the shared downlink fading trace is generated for.
pub const REFERENCE_VEHICLE_SPEED_KMH: f64 = 80.0;

/// Distances are floored here so pathloss stays finite.
const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("TraceTooShort: mobility covers {trace_s} s, simulation needs {required_s} s")]
    TraceTooShort { trace_s: f64, required_s: f64 },
    #[error("FadingTooShort: {which} fading covers {trace_s} s, simulation needs {required_s} s")]
    FadingTooShort { which: &'static str, trace_s: f64, required_s: f64 },
    #[error("FadingMismatch: fading has {fading} RBs, grid has {grid}")]
    FadingMismatch { fading: usize, grid: usize },
    #[error("EmptyQueue: no pending events")]
    EmptyQueue,
    #[error("InvalidEventTime: {0}")]
    InvalidEventTime(f64),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

impl EngineError {
    pub fn name(&self) -> &'static str {
        match self {
            EngineError::TraceTooShort { .. } => "TraceTooShort",
            EngineError::FadingTooShort { .. } => "FadingTooShort",
            EngineError::FadingMismatch { .. } => "FadingMismatch",
            EngineError::EmptyQueue => "EmptyQueue",
            EngineError::InvalidEventTime(_) => "InvalidEventTime",
            EngineError::Mobility(e) => e.name(),
            EngineError::Channel(e) => e.name(),
            EngineError::Link(e) => e.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropStage {
    Uplink,
    Downlink,
}

impl fmt::Display for DropStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropStage::Uplink => "uplink",
            DropStage::Downlink => "downlink",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    HarqExhausted,
    Collision,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::HarqExhausted => "harq_exhausted",
            DropReason::Collision => "collision",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Delivered { breakdown: LatencyBreakdown, delivered_at_s: f64 },
    Dropped { stage: DropStage, reason: DropReason },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverOutcome {
    pub vehicle_id: NodeId,
    pub outcome: Outcome,
}

impl ReceiverOutcome {
    pub fn breakdown(&self) -> Option<&LatencyBreakdown> {
        match &self.outcome {
            Outcome::Delivered { breakdown, .. } => Some(breakdown),
            Outcome::Dropped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub packet_id: u64,
    pub vru_id: NodeId,
    pub generated_at_s: f64,
    /// In target-set order: ascending id for broadcast, nearest first for
    /// nearest-k.
    pub receivers: Vec<ReceiverOutcome>,
}

/// Downlink (vehicular) and uplink (pedestrian) fading shared by every link.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingPair {
    pub eva: FadingTrace,
    pub epa: FadingTrace,
}

impl FadingPair {
    /// EVA at the reference vehicle speed and EPA at walking speed, both
    /// covering the simulated duration.
    pub fn generate(cfg: &ValidatedConfig, streams: &SeedStreams) -> Result<Self, EngineError> {
        let grid = ResourceGrid::for_bandwidth(cfg.bandwidth_mhz)?;
        let fd_eva = channel::doppler_frequency(REFERENCE_VEHICLE_SPEED_KMH, cfg.carrier_freq_ghz)?;
        let fd_epa = channel::doppler_frequency(cfg.pedestrian_speed_kmh, cfg.carrier_freq_ghz)?;
        let eva = generate_fading_trace(
            &TapProfile::eva(),
            fd_eva,
            cfg.sim_duration_s,
            grid.rb_count,
            cfg.bandwidth_mhz,
            &mut streams.rng(Stream::Fading, 0),
        )?;
        let epa = generate_fading_trace(
            &TapProfile::epa(),
            fd_epa,
            cfg.sim_duration_s,
            grid.rb_count,
            cfg.bandwidth_mhz,
            &mut streams.rng(Stream::Fading, 1),
        )?;
        Ok(Self { eva, epa })
    }
}

/// Radio parameters fixed for one run.
struct Radio<'a> {
    curve: BlerCurve,
    noise_dbm: f64,
    carrier_ghz: f64,
    fading: &'a FadingTrace,
    offsets: &'a [f64],
    scratch: Vec<f64>,
}

impl Radio<'_> {
    /// Effective SNR of the link from a transmitter to `node` at time `t`.
    fn effective_snr_db(&mut self, node: NodeId, distance_m: f64, tx_dbm: f64, t: f64) -> Result<f64, EngineError> {
        let pl = channel::pathloss_db(distance_m.max(MIN_DISTANCE_M), self.carrier_ghz)?;
        let scale = 10f64.powf((tx_dbm - pl - self.noise_dbm) / 10.0);
        let row = self.fading.row_at(t + self.offsets[node as usize]);
        self.scratch.clear();
        self.scratch.extend(self.fading.row_linear(row).iter().map(|g| g * scale));
        Ok(linkphy::effective_snr_db_linear(&self.scratch)?)
    }
}

struct Pending {
    targets: Vec<NodeId>,
    t_ul_ms: f64,
    net: Option<NetworkLatency>,
    breakdowns: Vec<Option<LatencyBreakdown>>,
    outcomes: Vec<Option<Outcome>>,
}

/// Runs one Monte Carlo replication. `run` selects the engine and latency
/// sub-streams, so the same `(cfg, trace, fading, streams, run)` always
/// yields the same records.
pub fn run_simulation(
    cfg: &ValidatedConfig,
    trace: &MobilityTrace,
    fading: &FadingPair,
    streams: &SeedStreams,
    run: u64,
) -> Result<Vec<PacketRecord>, EngineError> {
    let duration = cfg.sim_duration_s;
    if trace.duration_s() + 1e-9 < duration {
        return Err(EngineError::TraceTooShort { trace_s: trace.duration_s(), required_s: duration });
    }
    for (which, f) in [("EVA", &fading.eva), ("EPA", &fading.epa)] {
        if f.duration_s() + 1e-9 < duration {
            return Err(EngineError::FadingTooShort { which, trace_s: f.duration_s(), required_s: duration });
        }
    }
    let grid = ResourceGrid::for_bandwidth(cfg.bandwidth_mhz)?;
    for f in [&fading.eva, &fading.epa] {
        if f.rb_count() != grid.rb_count {
            return Err(EngineError::FadingMismatch { fading: f.rb_count(), grid: grid.rb_count });
        }
    }
    let mcs = McsProfile::default();
    let curve = BlerCurve::new(cfg.bler_k, cfg.bler_s0);
    let tx_ms = linkphy::tx_duration_ms(cfg.packet_size_bits, &grid, &mcs, grid.rb_count)?;
    let noise_dbm = channel::noise_floor_dbm(cfg.bandwidth_mhz);
    let enb_pos = trace.enb().map(|id| trace.position_at(id, 0.0)).transpose()?.map_or(ENB_POSITION, |p| (p.x, p.y));

    let mut rng = streams.rng(Stream::Engine, run);
    let mut lat_rng = streams.rng(Stream::Latency, run);

    let id_span = trace.nodes().iter().map(|n| n.id as usize + 1).max().unwrap_or(0);
    let ul_offsets: Vec<f64> = (0..id_span).map(|_| rng.random_range(0.0..fading.epa.duration_s())).collect();
    let dl_offsets: Vec<f64> = (0..id_span).map(|_| rng.random_range(0.0..fading.eva.duration_s())).collect();
    let radio = |fading, offsets| Radio {
        curve,
        noise_dbm,
        carrier_ghz: cfg.carrier_freq_ghz,
        fading,
        offsets,
        scratch: Vec::with_capacity(grid.rb_count),
    };
    let mut uplink = radio(&fading.epa, &ul_offsets);
    let mut downlink = radio(&fading.eva, &dl_offsets);

    let mut queue = EventQueue::new();
    let arrivals = (cfg.cam_rate_hz > 0.0).then(|| Exp::new(cfg.cam_rate_hz).expect("positive rate"));
    let vrus: Vec<NodeId> = trace.ids_of(NodeClass::Vru).collect();
    if let Some(exp) = &arrivals {
        for &vru in &vrus {
            let t = exp.sample(&mut rng);
            if t < duration {
                queue.push(Event { time_s: t, kind: EventKind::PacketGenerated { vru }, packet_id: 0 })?;
            }
        }
    }

    let mut records: Vec<PacketRecord> = Vec::new();
    let mut pending: Vec<Pending> = Vec::new();
    let mut last_t = 0.0;

    while let Ok(event) = queue.next_event() {
        debug_assert!(event.time_s >= last_t);
        last_t = event.time_s;
        let t = event.time_s;
        match event.kind {
            EventKind::PacketGenerated { vru } => {
                if let Some(exp) = &arrivals {
                    let next = t + exp.sample(&mut rng);
                    if next < duration {
                        queue.push(Event { time_s: next, kind: EventKind::PacketGenerated { vru }, packet_id: 0 })?;
                    }
                }
                let packet_id = records.len() as u64;
                let targets = match cfg.delivery_mode {
                    DeliveryMode::Broadcast => trace.in_range_vehicles(enb_pos, t, cfg.transmission_range_m)?,
                    DeliveryMode::NearestK(k) => {
                        let centroid = trace.vru_centroid(t)?;
                        trace.nearest_vehicles(centroid, t, k)?
                    }
                };
                records.push(PacketRecord { packet_id, vru_id: vru, generated_at_s: t, receivers: Vec::new() });
                let n = targets.len();
                let mut p = Pending {
                    targets,
                    t_ul_ms: 0.0,
                    net: None,
                    breakdowns: vec![None; n],
                    outcomes: vec![None; n],
                };

                let collided = cfg.collision_prob > 0.0 && rng.random::<f64>() < cfg.collision_prob;
                let ul = if collided {
                    None
                } else {
                    let d = trace.position_at(vru, t)?.distance_to(enb_pos);
                    let snr = uplink.effective_snr_db(vru, d, cfg.vru_tx_power_dbm, t)?;
                    Some(linkphy::run_harq(uplink.curve.bler(snr), cfg.harq_max_attempts, tx_ms, &mut rng)?)
                };
                match ul {
                    Some(ul) if ul.delivered => {
                        p.t_ul_ms = latency::uplink_radio_ms(&ul);
                        queue.push(Event { time_s: t + p.t_ul_ms / 1e3, kind: EventKind::UplinkDone, packet_id })?;
                    }
                    _ => {
                        let reason = if collided { DropReason::Collision } else { DropReason::HarqExhausted };
                        p.outcomes.fill(Some(Outcome::Dropped { stage: DropStage::Uplink, reason }));
                    }
                }
                pending.push(p);
            }
            EventKind::UplinkDone => {
                let p = &mut pending[event.packet_id as usize];
                let net = latency::sample_network(cfg.network_mode, &mut lat_rng);
                p.net = Some(net);
                let core_ms = 2.0 * (net.t_bh_ms + net.t_tn_ms + net.t_cn_ms) + net.t_exc_ms;
                queue.push(Event { time_s: t + core_ms / 1e3, kind: EventKind::CoreDone, packet_id: event.packet_id })?;
            }
            EventKind::CoreDone => {
                let p = &mut pending[event.packet_id as usize];
                let net = p.net.expect("network sampled before core completion");
                let mut order: Vec<(usize, f64)> = p
                    .targets
                    .iter()
                    .enumerate()
                    .map(|(slot, &v)| Ok((slot, trace.position_at(v, t)?.distance_to(enb_pos))))
                    .collect::<Result<_, MobilityError>>()?;
                order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                for (rank, (slot, d)) in order.into_iter().enumerate() {
                    let vehicle = p.targets[slot];
                    let wait_ms = (rank / cfg.dl_assignments_per_subframe.max(1)) as f64;
                    let snr = downlink.effective_snr_db(vehicle, d, cfg.enb_tx_power_dbm, t + wait_ms / 1e3)?;
                    let dl = linkphy::run_harq(downlink.curve.bler(snr), cfg.harq_max_attempts, tx_ms, &mut rng)?;
                    if dl.delivered {
                        let t_dl_ms = wait_ms + latency::downlink_radio_ms(&dl);
                        p.breakdowns[slot] = Some(latency::compose(cfg.network_mode, p.t_ul_ms, t_dl_ms, &net));
                        queue.push(Event {
                            time_s: t + t_dl_ms / 1e3,
                            kind: EventKind::DownlinkDone { vehicle, slot },
                            packet_id: event.packet_id,
                        })?;
                    } else {
                        p.outcomes[slot] =
                            Some(Outcome::Dropped { stage: DropStage::Downlink, reason: DropReason::HarqExhausted });
                    }
                }
            }
            EventKind::DownlinkDone { slot, .. } => {
                let p = &mut pending[event.packet_id as usize];
                let breakdown = p.breakdowns[slot].expect("breakdown set when the downlink was scheduled");
                p.outcomes[slot] = Some(Outcome::Delivered { breakdown, delivered_at_s: t });
            }
        }
    }

    for (record, p) in records.iter_mut().zip(pending) {
        record.receivers = p
            .targets
            .into_iter()
            .zip(p.outcomes)
            .map(|(vehicle_id, o)| ReceiverOutcome { vehicle_id, outcome: o.expect("every receiver resolved") })
            .collect();
    }
    Ok(records)
}

/// Per-receiver latency rows for delivered outcomes.
pub fn latency_csv(records: &[PacketRecord]) -> String {
    let mut out = String::from(latency::CSV_HEADER);
    out.push('\n');
    for r in records {
        for rx in &r.receivers {
            if let Some(b) = rx.breakdown() {
                out.push_str(&latency::csv_row(r.packet_id, rx.vehicle_id, b));
                out.push('\n');
            }
        }
    }
    out
}

/// One row per dropped receiver outcome.
pub fn drop_log_csv(records: &[PacketRecord]) -> String {
    let mut out = String::from("packet_id,stage,reason\n");
    for r in records {
        for rx in &r.receivers {
            if let Outcome::Dropped { stage, reason } = rx.outcome {
                writeln!(out, "{},{stage},{reason}", r.packet_id).expect("string write");
            }
        }
    }
    out
}
