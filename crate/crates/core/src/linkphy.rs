//! Resource-block link abstraction: capacity, effective SNR, BLER and HARQ.

use rand::Rng;
use thiserror::Error;

pub const DEFAULT_BLER_K: f64 = 0.448;
pub const DEFAULT_BLER_S0: f64 = -4.90;
/// EESM calibration factor for 16-QAM, rate 1/2.
pub const EESM_BETA: f64 = 7.0;
pub const HARQ_RTT_MS: f64 = 8.0;

const BLER_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("AllocationOutOfRange: {allocated} RBs requested, grid has {available}")]
    AllocationOutOfRange { allocated: usize, available: usize },
    #[error("EmptyPacket: packet has no bits")]
    EmptyPacket,
    #[error("EmptyList: no per-RB SNR values")]
    EmptyList,
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
}

impl LinkError {
    pub fn name(&self) -> &'static str {
        match self {
            LinkError::AllocationOutOfRange { .. } => "AllocationOutOfRange",
            LinkError::EmptyPacket => "EmptyPacket",
            LinkError::EmptyList => "EmptyList",
            LinkError::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceGrid {
    pub rb_count: usize,
    pub subcarriers_per_rb: usize,
    pub symbols_per_slot: usize,
    pub slots_per_subframe: usize,
    pub subframe_ms: usize,
}

impl ResourceGrid {
    pub fn with_rbs(rb_count: usize) -> Self {
        Self { rb_count, subcarriers_per_rb: 12, symbols_per_slot: 7, slots_per_subframe: 2, subframe_ms: 1 }
    }

    /// Standard channel bandwidths only.
    pub fn for_bandwidth(bandwidth_mhz: f64) -> Result<Self, LinkError> {
        let rbs = [(1.4, 6), (3.0, 15), (5.0, 25), (10.0, 50), (15.0, 75), (20.0, 100)]
            .iter()
            .find(|(bw, _)| (bw - bandwidth_mhz).abs() < 1e-9)
            .map(|&(_, n)| n)
            .ok_or_else(|| LinkError::InvalidArgument(format!("no RB grid for {bandwidth_mhz} MHz")))?;
        Ok(Self::with_rbs(rbs))
    }
}

impl Default for ResourceGrid {
    fn default() -> Self {
        Self::with_rbs(50)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsProfile {
    pub bits_per_symbol: u32,
    pub code_rate: f64,
}

impl McsProfile {
    pub fn new(bits_per_symbol: u32, code_rate: f64) -> Result<Self, LinkError> {
        if ![2, 4, 6].contains(&bits_per_symbol) || !(code_rate > 0.0 && code_rate <= 1.0) {
            return Err(LinkError::InvalidArgument(format!("unsupported MCS {bits_per_symbol} bits, rate {code_rate}")));
        }
        Ok(Self { bits_per_symbol, code_rate })
    }

    pub fn qam16_half() -> Self {
        Self { bits_per_symbol: 4, code_rate: 0.5 }
    }
}

impl Default for McsProfile {
    fn default() -> Self {
        Self::qam16_half()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarqOutcome {
    pub delivered: bool,
    pub attempts: u32,
    pub airtime_ms: f64,
    pub harq_delay_ms: f64,
}

pub fn bits_per_subframe(grid: &ResourceGrid, mcs: &McsProfile, allocated_rbs: usize) -> Result<u64, LinkError> {
    if allocated_rbs == 0 || allocated_rbs > grid.rb_count {
        return Err(LinkError::AllocationOutOfRange { allocated: allocated_rbs, available: grid.rb_count });
    }
    let symbols = allocated_rbs * grid.subcarriers_per_rb * grid.symbols_per_slot * grid.slots_per_subframe;
    Ok((symbols as f64 * mcs.bits_per_symbol as f64 * mcs.code_rate).floor() as u64)
}

pub fn tx_duration_ms(packet_bits: u64, grid: &ResourceGrid, mcs: &McsProfile, allocated_rbs: usize) -> Result<f64, LinkError> {
    if packet_bits == 0 {
        return Err(LinkError::EmptyPacket);
    }
    let per_subframe = bits_per_subframe(grid, mcs, allocated_rbs)?;
    Ok((packet_bits.div_ceil(per_subframe) * grid.subframe_ms as u64) as f64)
}

/// Exponential effective SNR mapping. Computed relative to the weakest RB
/// so that large SNRs do not underflow the exponentials.
pub fn effective_snr_db(per_rb_snr_db: &[f64]) -> Result<f64, LinkError> {
    if per_rb_snr_db.is_empty() {
        return Err(LinkError::EmptyList);
    }
    let lin: Vec<f64> = per_rb_snr_db.iter().map(|s| 10f64.powf(s / 10.0)).collect();
    let lo = per_rb_snr_db.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = per_rb_snr_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(effective_snr_db_linear(&lin)?.clamp(lo, hi))
}

/// Same mapping from linear per-RB SNRs.
pub fn effective_snr_db_linear(per_rb_snr: &[f64]) -> Result<f64, LinkError> {
    if per_rb_snr.is_empty() {
        return Err(LinkError::EmptyList);
    }
    let min = per_rb_snr.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = per_rb_snr.iter().map(|g| (-(g - min) / EESM_BETA).exp()).sum::<f64>() / per_rb_snr.len() as f64;
    Ok(10.0 * (min - EESM_BETA * mean.ln()).log10())
}

/// Logistic BLER curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerCurve {
    pub k: f64,
    pub s0_db: f64,
}

impl BlerCurve {
    pub fn new(k: f64, s0_db: f64) -> Self {
        Self { k, s0_db }
    }

    pub fn bler(&self, effective_snr_db: f64) -> f64 {
        let p = 1.0 / (1.0 + (self.k * (effective_snr_db - self.s0_db)).exp());
        p.clamp(BLER_FLOOR, 1.0 - BLER_FLOOR)
    }
}

impl Default for BlerCurve {
    fn default() -> Self {
        Self { k: DEFAULT_BLER_K, s0_db: DEFAULT_BLER_S0 }
    }
}

pub fn bler(effective_snr_db: f64) -> f64 {
    BlerCurve::default().bler(effective_snr_db)
}

/// Independent attempts with failure probability `p` each.
pub fn run_harq(p_fail: f64, max_attempts: u32, tx_ms: f64, rng: &mut impl Rng) -> Result<HarqOutcome, LinkError> {
    if max_attempts == 0 {
        return Err(LinkError::InvalidArgument("max_attempts must be >= 1".into()));
    }
    let mut attempts = 0;
    let mut delivered = false;
    while attempts < max_attempts {
        attempts += 1;
        if rng.random::<f64>() >= p_fail {
            delivered = true;
            break;
        }
    }
    Ok(HarqOutcome {
        delivered,
        attempts,
        airtime_ms: attempts as f64 * tx_ms,
        harq_delay_ms: (attempts - 1) as f64 * HARQ_RTT_MS,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn transmit_with_harq(
    packet_bits: u64,
    per_rb_snr_db: &[f64],
    grid: &ResourceGrid,
    mcs: &McsProfile,
    allocated_rbs: usize,
    max_attempts: u32,
    curve: &BlerCurve,
    rng: &mut impl Rng,
) -> Result<HarqOutcome, LinkError> {
    let tx_ms = tx_duration_ms(packet_bits, grid, mcs, allocated_rbs)?;
    let p = curve.bler(effective_snr_db(per_rb_snr_db)?);
    run_harq(p, max_attempts, tx_ms, rng)
}
