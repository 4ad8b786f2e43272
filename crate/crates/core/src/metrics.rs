//! Monte Carlo aggregation and the three headline sweeps: latency against
//! vehicle density, PDR against SNR, and the edge-computing latency gain.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{run_simulation, EngineError, FadingPair, PacketRecord};
use crate::latency::e2e_latency_ms;
use crate::linkphy::{self, BlerCurve};
use crate::mobility::{generate_intersection_traffic, MobilityError};
use crate::rng::{SeedStreams, Stream};
use crate::scenario::{density_for_count, ConfigError, DeliveryMode, NetworkMode, ValidatedConfig};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("NoDeliveredPackets: latency undefined (pdr = {pdr})")]
    NoDeliveredPackets { pdr: f64 },
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error("{}: {}", .0.name(), .0)]
    Config(#[from] ConfigError),
}

impl MetricsError {
    pub fn name(&self) -> &'static str {
        match self {
            MetricsError::NoDeliveredPackets { .. } => "NoDeliveredPackets",
            MetricsError::InvalidArgument(_) => "InvalidArgument",
            MetricsError::Engine(e) => e.name(),
            MetricsError::Mobility(e) => e.name(),
            MetricsError::Config(e) => e.name(),
        }
    }
}

/// What one replication contributes to a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    /// Mean e2e latency over delivered receiver outcomes, if any.
    pub mean_ms: Option<f64>,
    pub delivered: u64,
    pub attempted: u64,
}

impl RunSummary {
    pub fn from_latencies(latencies_ms: &[f64], attempted: u64) -> Self {
        let n = latencies_ms.len();
        Self {
            mean_ms: (n > 0).then(|| latencies_ms.iter().sum::<f64>() / n as f64),
            delivered: n as u64,
            attempted,
        }
    }

    pub fn from_records(records: &[PacketRecord]) -> Self {
        let latencies: Vec<f64> =
            records.iter().flat_map(|r| &r.receivers).filter_map(|rx| rx.breakdown()).map(e2e_latency_ms).collect();
        let attempted = records.iter().map(|r| r.receivers.len() as u64).sum();
        Self::from_latencies(&latencies, attempted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub run_means_ms: Vec<f64>,
    pub mean_ms: f64,
    pub stderr_ms: f64,
    pub run_count: usize,
    pub pdr: f64,
}

impl MetricsReport {
    /// Mean of per-run means, with the standard error of that mean. Runs
    /// without any delivery contribute to the PDR only.
    pub fn aggregate(runs: &[RunSummary]) -> Result<Self, MetricsError> {
        if runs.is_empty() {
            return Err(MetricsError::InvalidArgument("no runs to aggregate".into()));
        }
        let delivered: u64 = runs.iter().map(|r| r.delivered).sum();
        let attempted: u64 = runs.iter().map(|r| r.attempted).sum();
        let pdr = if attempted == 0 { 0.0 } else { delivered as f64 / attempted as f64 };
        let means: Vec<f64> = runs.iter().filter_map(|r| r.mean_ms).collect();
        if means.is_empty() {
            return Err(MetricsError::NoDeliveredPackets { pdr });
        }
        let (mean, sd) = mean_sd(&means);
        Ok(Self {
            mean_ms: mean,
            stderr_ms: sd / (means.len() as f64).sqrt(),
            run_means_ms: means,
            run_count: runs.len(),
            pdr,
        })
    }
}

/// Mean and sample standard deviation (0 for a single value).
fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Relative latency reduction of MEC against the conventional core.
pub fn mec_gain(conv: &MetricsReport, mec: &MetricsReport) -> Result<f64, MetricsError> {
    if !(conv.mean_ms > 0.0) {
        return Err(MetricsError::NoDeliveredPackets { pdr: conv.pdr });
    }
    Ok((conv.mean_ms - mec.mean_ms) / conv.mean_ms)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs equal-length samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, sx) = mean_sd(&rx);
    let (my, sy) = mean_sd(&ry);
    let n = x.len() as f64;
    let cov = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    cov / (sx * sy)
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// One row of the density sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub vehicles: usize,
    pub density: f64,
    pub mode: NetworkMode,
    pub delivery_mode: DeliveryMode,
    pub report: MetricsReport,
}

/// Latency and PDR for each vehicle count and network mode.
///
/// Both modes replay the same mobility, fading and radio draws for a given
/// run, so their difference isolates the network path. One fading pair is
/// shared across the whole sweep. Rows come out ordered by (count, mode)
/// whatever `jobs` is.
pub fn sweep_density(
    base: &ValidatedConfig,
    vehicle_counts: &[usize],
    modes: &[NetworkMode],
    runs_per_point: usize,
    jobs: usize,
) -> Result<Vec<DensityRow>, MetricsError> {
    if runs_per_point == 0 || modes.is_empty() {
        return Err(MetricsError::InvalidArgument("need at least one run and one mode".into()));
    }
    let streams = SeedStreams::new(base.seed);
    let fading = FadingPair::generate(base, &streams)?;
    let configs: Vec<ValidatedConfig> = vehicle_counts
        .iter()
        .map(|&n| base.with(|c| c.vehicle_density = density_for_count(c, n)))
        .collect::<Result<_, _>>()?;

    let jobs_list: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|d| (0..runs_per_point).map(move |r| (d, r))).collect();
    let one = |&(d, r): &(usize, usize)| -> Result<Vec<RunSummary>, MetricsError> {
        let cfg = &configs[d];
        let index = (d * runs_per_point + r) as u64;
        let trace = generate_intersection_traffic(cfg, &mut streams.rng(Stream::Mobility, index))?;
        modes
            .iter()
            .map(|&mode| {
                let cfg = cfg.with(|c| c.network_mode = mode)?;
                Ok(RunSummary::from_records(&run_simulation(&cfg, &trace, &fading, &streams, index)?))
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| MetricsError::InvalidArgument(e.to_string()))?;
    let summaries: Vec<Vec<RunSummary>> = pool.install(|| jobs_list.par_iter().map(one).collect::<Result<_, _>>())?;

    let mut rows = Vec::new();
    for (d, cfg) in configs.iter().enumerate() {
        for (m, &mode) in modes.iter().enumerate() {
            let runs: Vec<RunSummary> =
                summaries[d * runs_per_point..(d + 1) * runs_per_point].iter().map(|s| s[m]).collect();
            rows.push(DensityRow {
                vehicles: vehicle_counts[d],
                density: cfg.vehicle_density,
                mode,
                delivery_mode: cfg.delivery_mode,
                report: MetricsReport::aggregate(&runs)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdrRow {
    pub snr_db: f64,
    pub pdr: f64,
    pub stderr: f64,
}

/// Single-attempt delivery ratio through the BLER curve at each SNR.
pub fn sweep_pdr_snr(snr_points: &[f64], packets_per_point: u64, curve: &BlerCurve, seed: u64) -> Result<Vec<PdrRow>, MetricsError> {
    if packets_per_point == 0 {
        return Err(MetricsError::InvalidArgument("packets_per_point must be >= 1".into()));
    }
    let streams = SeedStreams::new(seed);
    snr_points
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let mut rng = streams.rng(Stream::Pdr, i as u64);
            let p = curve.bler(snr_db);
            let mut ok = 0u64;
            for _ in 0..packets_per_point {
                ok += linkphy::run_harq(p, 1, 1.0, &mut rng).map_err(EngineError::from)?.delivered as u64;
            }
            let pdr = ok as f64 / packets_per_point as f64;
            Ok(PdrRow { snr_db, pdr, stderr: (pdr * (1.0 - pdr) / packets_per_point as f64).sqrt() })
        })
        .collect()
}

pub const DENSITY_CSV_HEADER: &str = "density,mode,mean_ms,stderr_ms,pdr,runs";
pub const PDR_CSV_HEADER: &str = "snr_db,pdr,stderr";

fn density_line(row: &DensityRow, sep: char) -> String {
    let r = &row.report;
    [
        format!("{:.4}", row.density),
        row.mode.to_string(),
        format!("{:.6}", r.mean_ms),
        format!("{:.6}", r.stderr_ms),
        format!("{:.6}", r.pdr),
        r.run_count.to_string(),
    ]
    .join(&sep.to_string())
}

pub fn density_csv(rows: &[DensityRow]) -> String {
    let mut out = format!("{DENSITY_CSV_HEADER}\n");
    for row in rows {
        writeln!(out, "{}", density_line(row, ',')).expect("string write");
    }
    out
}

/// Whitespace-separated variant for plotting; one block per mode.
pub fn density_gnuplot(rows: &[DensityRow]) -> String {
    let mut out = format!("# {}\n", DENSITY_CSV_HEADER.replace(',', " "));
    let mut modes: Vec<NetworkMode> = Vec::new();
    for row in rows {
        if !modes.contains(&row.mode) {
            modes.push(row.mode);
        }
    }
    for (i, mode) in modes.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        for row in rows.iter().filter(|r| r.mode == *mode) {
            writeln!(out, "{}", density_line(row, ' ')).expect("string write");
        }
    }
    out
}

pub fn pdr_csv(rows: &[PdrRow]) -> String {
    let mut out = format!("{PDR_CSV_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{:.6},{:.6}", r.snr_db, r.pdr, r.stderr).expect("string write");
    }
    out
}

pub fn pdr_gnuplot(rows: &[PdrRow]) -> String {
    let mut out = format!("# {}\n", PDR_CSV_HEADER.replace(',', " "));
    for r in rows {
        writeln!(out, "{} {:.6} {:.6}", r.snr_db, r.pdr, r.stderr).expect("string write");
    }
    out
}
