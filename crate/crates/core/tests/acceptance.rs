//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use v2p_sim::channel::{doppler_frequency, generate_fading_trace, TapProcess, TapProfile};
use v2p_sim::latency::{e2e_latency_ms, LatencyBreakdown};
use v2p_sim::linkphy::run_harq;
use v2p_sim::metrics::{mec_gain, spearman, sweep_density, DensityRow};
use v2p_sim::mobility::{generate_intersection_traffic, parse_movement_trace, write_movement_trace, SAMPLE_INTERVAL_S};
use v2p_sim::rng::{SeedStreams, Stream};
use v2p_sim::scenario::{validate_config, DeliveryMode, NetworkMode, ScenarioConfig, ValidatedConfig};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

const DENSITY_COUNTS: [usize; 9] = [10, 20, 30, 40, 50, 60, 70, 80, 90];
const RUNS: usize = 100;

fn v2psim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_v2psim")).args(args).output().expect("binary runs")
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn base(delivery: DeliveryMode) -> ValidatedConfig {
    validate_config(ScenarioConfig { delivery_mode: delivery, ..ScenarioConfig::default() }).unwrap()
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pdr_anchor() -> Verdict {
    let start = Instant::now();
    let o = v2psim(&["sweep-snr", "--packets", "100000"]);
    let elapsed = start.elapsed().as_secs_f64();
    if !o.status.success() {
        return Err(format!("sweep-snr failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let text = String::from_utf8(o.stdout).map_err(|e| e.to_string())?;
    let row = text.lines().find(|l| l.starts_with("-8,")).ok_or("no -8 dB row")?;
    let pdr: f64 = row.split(',').nth(1).ok_or("short row")?.parse().map_err(|_| "bad pdr")?;
    check((pdr - 0.20).abs() <= 0.02 && elapsed < 10.0, format!("pdr(-8 dB)={pdr:.4} in {elapsed:.2}s"))
}

fn mec_gain_bracket() -> Verdict {
    let start = Instant::now();
    let rows = sweep_density(
        &base(DeliveryMode::Broadcast),
        &[50],
        &[NetworkMode::Conventional, NetworkMode::Mec],
        RUNS,
        jobs(),
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let gain = mec_gain(&rows[0].report, &rows[1].report).map_err(|e| e.to_string())?;
    check(
        (0.70..=0.85).contains(&gain) && elapsed < 120.0,
        format!(
            "gain={gain:.4} (conventional {:.2} ms, mec {:.2} ms) in {elapsed:.1}s",
            rows[0].report.mean_ms, rows[1].report.mean_ms
        ),
    )
}

fn density_means(delivery: DeliveryMode, runs: usize) -> Result<Vec<DensityRow>, String> {
    sweep_density(&base(delivery), &DENSITY_COUNTS, &[NetworkMode::Conventional], runs, jobs()).map_err(|e| e.to_string())
}

fn fmt_means(means: &[f64]) -> String {
    means.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join(" ")
}

fn density_trend() -> Verdict {
    let rows = density_means(DeliveryMode::Broadcast, RUNS)?;
    let means: Vec<f64> = rows.iter().map(|r| r.report.mean_ms).collect();
    let counts: Vec<f64> = DENSITY_COUNTS.iter().map(|&n| n as f64).collect();
    let rho = spearman(&counts, &means);
    let monotone = means.windows(2).all(|w| w[1] >= w[0]);
    check(rho > 0.8 && monotone, format!("rho={rho:.3} monotone={monotone} means=[{}]", fmt_means(&means)))
}

fn nearest_flatness() -> Verdict {
    let rows = density_means(DeliveryMode::NearestK(5), RUNS)?;
    let means: Vec<f64> = rows.iter().map(|r| r.report.mean_ms).collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let spread = means.iter().cloned().fold(f64::MIN, f64::max) - means.iter().cloned().fold(f64::MAX, f64::min);
    check(spread / grand < 0.15, format!("spread/mean={:.4} means=[{}]", spread / grand, fmt_means(&means)))
}

fn bessel_j0(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |k: usize| (x * (k as f64 * h).sin()).cos();
    let mut s = f(0) + f(n);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
    }
    s * h / 3.0 / PI
}

fn fading_statistics() -> Verdict {
    let start = Instant::now();
    let fd = doppler_frequency(80.0, 5.9).map_err(|e| e.to_string())?;
    let streams = SeedStreams::new(5);
    let trace = generate_fading_trace(&TapProfile::eva(), fd, 100.0, 50, 10.0, &mut streams.rng(Stream::Fading, 0))
        .map_err(|e| e.to_string())?;
    let mut amp: Vec<f64> = trace.column_db(0).map(|g| 10f64.powf(g / 20.0)).collect();
    let samples = amp.len();
    let omega = amp.iter().map(|a| a * a).sum::<f64>() / samples as f64;
    amp.sort_by(f64::total_cmp);
    let n = samples as f64;
    let ks = amp
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let cdf = 1.0 - (-a * a / omega).exp();
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);

    // The 1 ms trace period is past the first zero, so the lag structure is
    // checked on one tap sampled finely.
    let dt = 1.0 / 20_000.0;
    let max_lag = (2.404_825_557_695_773 / (2.0 * PI * fd) / dt).floor() as usize;
    let h = TapProcess::new(fd, &mut streams.rng(Stream::Fading, 1)).samples(200_000, dt);
    let power = h.iter().map(|c| c.norm_sqr()).sum::<f64>() / h.len() as f64;
    let mut worst: f64 = 0.0;
    for lag in 0..=max_lag {
        let m = h.len() - lag;
        let r: Complex64 = (0..m).map(|i| h[i + lag] * h[i].conj()).sum::<Complex64>() / m as f64;
        worst = worst.max((r.re / power - bessel_j0(2.0 * PI * fd * lag as f64 * dt)).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        samples >= 100_000 && ks < 0.01 && worst <= 0.05 && elapsed < 30.0,
        format!("fd={fd:.1} Hz, KS={ks:.5} over {samples}, max |R-J0|={worst:.4} over {max_lag} lags, {elapsed:.1}s"),
    )
}

fn harq_oracle() -> Verdict {
    let trials = 100_000;
    let streams = SeedStreams::new(11);
    let mut worst: f64 = 0.0;
    for (i, p) in [0.1f64, 0.5, 0.9].into_iter().enumerate() {
        for (j, m) in [1u32, 2, 4].into_iter().enumerate() {
            let mut rng = streams.rng(Stream::Pdr, (i * 3 + j) as u64);
            let (mut delivered, mut attempts, mut attempts_sq) = (0.0, 0.0, 0.0);
            for _ in 0..trials {
                let o = run_harq(p, m, 1.0, &mut rng).map_err(|e| e.to_string())?;
                delivered += o.delivered as u8 as f64;
                attempts += o.attempts as f64;
                attempts_sq += (o.attempts as f64).powi(2);
            }
            let n = trials as f64;
            let rate = delivered / n;
            let want_rate = 1.0 - p.powi(m as i32);
            let se_rate = (want_rate * (1.0 - want_rate) / n).sqrt();
            let mean = attempts / n;
            let want_mean = (1.0 - p.powi(m as i32)) / (1.0 - p);
            let se_mean = ((attempts_sq / n - mean * mean) / n).sqrt();
            // m = 1 is deterministic in attempts.
            let z_rate = if se_rate > 0.0 { (rate - want_rate).abs() / se_rate } else { 0.0 };
            let z_mean = if se_mean > 0.0 { (mean - want_mean).abs() / se_mean } else { (mean - want_mean).abs() * 1e9 };
            worst = worst.max(z_rate).max(z_mean);
        }
    }
    check(worst <= 3.0, format!("max deviation {worst:.2} SE over 9 (p, m) pairs"))
}

fn direct(b: &LatencyBreakdown) -> f64 {
    b.t_ul_ms + 2.0 * (b.t_bh_ms + b.t_tn_ms + b.t_cn_ms) + b.t_exc_ms + b.t_dl_ms
}

fn random_breakdown(rng: &mut impl Rng, grid: Option<f64>) -> LatencyBreakdown {
    let q = |x: f64| grid.map_or(x, |g| (x / g).round() * g);
    let total = rng.random_range(15.0..35.0);
    LatencyBreakdown {
        t_ul_ms: q(rng.random_range(5.0..45.0)),
        t_dl_ms: q(rng.random_range(2.0..45.0)),
        t_bh_ms: q(rng.random_range(1.0..5.0)),
        t_tn_ms: q(0.4 * total),
        t_cn_ms: q(0.6 * total),
        t_exc_ms: 2.0,
        mode: NetworkMode::Conventional,
    }
}

fn equation_fidelity() -> Verdict {
    let mut rng = SeedStreams::new(3).rng(Stream::Latency, 0);
    let mut direct_mismatch = 0;
    let mut grid_mismatch = 0;
    let mut worst_ulps: u64 = 0;
    for _ in 0..1000 {
        let b = random_breakdown(&mut rng, None);
        direct_mismatch += (e2e_latency_ms(&b).to_bits() != direct(&b).to_bits()) as usize;
        let diff = e2e_latency_ms(&b) - e2e_latency_ms(&b.without_core());
        let want = 2.0 * (b.t_tn_ms + b.t_cn_ms);
        worst_ulps = worst_ulps.max(diff.to_bits().abs_diff(want.to_bits()));

        // On a binary grid every partial sum is representable, so the
        // identity holds with no rounding at all.
        let g = random_breakdown(&mut rng, Some(1.0 / 1024.0));
        let diff = e2e_latency_ms(&g) - e2e_latency_ms(&g.without_core());
        grid_mismatch += (diff != 2.0 * (g.t_tn_ms + g.t_cn_ms)) as usize;
        direct_mismatch += (e2e_latency_ms(&g).to_bits() != direct(&g).to_bits()) as usize;
    }
    check(
        direct_mismatch == 0 && grid_mismatch == 0 && worst_ulps <= 64,
        format!(
            "e2e vs direct: {direct_mismatch} mismatches; conv-mec on binary grid: {grid_mismatch} mismatches; \
             unquantized worst {worst_ulps} ulp"
        ),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let outs: Vec<_> = ["a", "b"].iter().map(|n| dir.path().join(n)).collect();
    for out in &outs {
        let o = v2psim(&["run", "--seed", "17", "--out", out.to_str().unwrap()]);
        if !o.status.success() {
            return Err(format!("run failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    let mut bytes = 0;
    for name in ["packets.csv", "drops.csv", "report.csv"] {
        let a = fs::read(outs[0].join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(outs[1].join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs"));
        }
        bytes += a.len();
    }
    Ok(format!("3 CSVs identical ({bytes} bytes)"))
}

fn parser_round_trip() -> Verdict {
    let mut pick = SeedStreams::new(9).rng(Stream::Mobility, u64::MAX);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let cfg = validate_config(ScenarioConfig {
            vehicle_density: pick.random_range(0.01..=0.09),
            lane_count: pick.random_range(1..=2),
            vru_moving: pick.random(),
            vru_count: pick.random_range(1..=20),
            sim_duration_s: 3.0,
            seed: i,
            ..ScenarioConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let trace = generate_intersection_traffic(&cfg, &mut SeedStreams::new(i).rng(Stream::Mobility, 0))
            .map_err(|e| e.to_string())?;
        let parsed = parse_movement_trace(&write_movement_trace(&trace)).map_err(|e| e.to_string())?;
        if parsed.nodes().len() != trace.nodes().len() {
            return Err(format!("trace {i}: node count changed"));
        }
        let steps = (trace.duration_s() / SAMPLE_INTERVAL_S).round() as usize;
        for node in trace.nodes() {
            for k in 0..=steps {
                let t = k as f64 * SAMPLE_INTERVAL_S;
                let p = trace.position_at(node.id, t).map_err(|e| e.to_string())?;
                let q = parsed.position_at(node.id, t).map_err(|e| e.to_string())?;
                worst = worst.max((p.x - q.x).abs()).max((p.y - q.y).abs());
            }
        }
    }
    check(worst <= 1e-6, format!("100 traces, max position error {worst:.2e} m"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("pdr anchor at -8 dB", pdr_anchor),
        ("mec gain at 50 vehicles", mec_gain_bracket),
        ("density trend, broadcast", density_trend),
        ("density flatness, nearest 5", nearest_flatness),
        ("fading statistics", fading_statistics),
        ("harq oracle", harq_oracle),
        ("equation fidelity", equation_fidelity),
        ("determinism", determinism),
        ("parser round trip", parser_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
