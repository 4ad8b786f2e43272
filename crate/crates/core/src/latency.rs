//! One-way and end-to-end latency composition, network latency sampling and
//! the edge-computing (MEC) variant.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::linkphy::HarqOutcome;
use crate::scenario::NetworkMode;

/// Combined transport + core latency range in conventional mode.
pub const NETWORK_RANGE_MS: (f64, f64) = (15.0, 35.0);
/// Share of the combined draw attributed to the transport network.
pub const TRANSPORT_SHARE: f64 = 0.4;
pub const BACKHAUL_RANGE_MS: (f64, f64) = (1.0, 5.0);
pub const EXCHANGE_MS: f64 = 2.0;
/// Scheduling request plus grant before an uplink transmission.
pub const UPLINK_ACCESS_MS: f64 = 4.0;
pub const DOWNLINK_SCHEDULING_MS: f64 = 1.0;

pub const CSV_HEADER: &str = "packet_id,vehicle_id,mode,t_ul,t_bh,t_tn,t_cn,t_exc,t_dl,e2e";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatencyError {
    #[error("UndeliveredPacket: no latency for a dropped packet")]
    UndeliveredPacket,
}

impl LatencyError {
    pub fn name(&self) -> &'static str {
        "UndeliveredPacket"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBreakdown {
    pub t_ul_ms: f64,
    pub t_dl_ms: f64,
    pub t_bh_ms: f64,
    pub t_tn_ms: f64,
    pub t_cn_ms: f64,
    pub t_exc_ms: f64,
    pub mode: NetworkMode,
}

impl LatencyBreakdown {
    pub fn network_ms(&self) -> f64 {
        self.t_bh_ms + self.t_tn_ms + self.t_cn_ms
    }

    /// Same packet with transport and core removed.
    pub fn without_core(&self) -> Self {
        Self { t_tn_ms: 0.0, t_cn_ms: 0.0, mode: NetworkMode::Mec, ..*self }
    }
}

pub fn one_way_latency_ms(b: &LatencyBreakdown) -> f64 {
    b.t_ul_ms + b.t_bh_ms + b.t_tn_ms + b.t_cn_ms + b.t_exc_ms
}

/// The network hops are traversed on the way up and again on the way
/// down; the exchange is counted once.
pub fn e2e_latency_ms(b: &LatencyBreakdown) -> f64 {
    b.t_ul_ms + 2.0 * (b.t_bh_ms + b.t_tn_ms + b.t_cn_ms) + b.t_exc_ms + b.t_dl_ms
}

/// Network-side terms shared by every receiver of one packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkLatency {
    pub t_bh_ms: f64,
    pub t_tn_ms: f64,
    pub t_cn_ms: f64,
    pub t_exc_ms: f64,
}

pub fn sample_network(mode: NetworkMode, rng: &mut impl Rng) -> NetworkLatency {
    let t_bh_ms = rng.random_range(BACKHAUL_RANGE_MS.0..BACKHAUL_RANGE_MS.1);
    let (t_tn_ms, t_cn_ms) = match mode {
        NetworkMode::Conventional => {
            let total = rng.random_range(NETWORK_RANGE_MS.0..NETWORK_RANGE_MS.1);
            (TRANSPORT_SHARE * total, (1.0 - TRANSPORT_SHARE) * total)
        }
        NetworkMode::Mec => (0.0, 0.0),
    };
    NetworkLatency { t_bh_ms, t_tn_ms, t_cn_ms, t_exc_ms: EXCHANGE_MS }
}

pub fn uplink_radio_ms(ul: &HarqOutcome) -> f64 {
    UPLINK_ACCESS_MS + ul.airtime_ms + ul.harq_delay_ms
}

pub fn downlink_radio_ms(dl: &HarqOutcome) -> f64 {
    DOWNLINK_SCHEDULING_MS + dl.airtime_ms + dl.harq_delay_ms
}

/// Builds a breakdown from radio terms and sampled network terms.
pub fn compose(mode: NetworkMode, t_ul_ms: f64, t_dl_ms: f64, net: &NetworkLatency) -> LatencyBreakdown {
    LatencyBreakdown {
        t_ul_ms,
        t_dl_ms,
        t_bh_ms: net.t_bh_ms,
        t_tn_ms: net.t_tn_ms,
        t_cn_ms: net.t_cn_ms,
        t_exc_ms: net.t_exc_ms,
        mode,
    }
}

pub fn sample_breakdown(
    mode: NetworkMode,
    ul: &HarqOutcome,
    dl: &HarqOutcome,
    rng: &mut impl Rng,
) -> Result<LatencyBreakdown, LatencyError> {
    if !ul.delivered || !dl.delivered {
        return Err(LatencyError::UndeliveredPacket);
    }
    let net = sample_network(mode, rng);
    Ok(compose(mode, uplink_radio_ms(ul), downlink_radio_ms(dl), &net))
}

pub fn csv_row(packet_id: u64, vehicle_id: u32, b: &LatencyBreakdown) -> String {
    let mut s = String::new();
    write!(
        s,
        "{packet_id},{vehicle_id},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        b.mode,
        b.t_ul_ms,
        b.t_bh_ms,
        b.t_tn_ms,
        b.t_cn_ms,
        b.t_exc_ms,
        b.t_dl_ms,
        e2e_latency_ms(b)
    )
    .expect("string write");
    s
}
