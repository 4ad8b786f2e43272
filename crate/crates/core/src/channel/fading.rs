//! Time- and frequency-selective Rayleigh fading traces.
//!
//! Each tap is a complex sum of sinusoids,
//!
//! ```text
//! h(t) = N^-1/2 · Σn exp(j(2π fd cos(αn) t + φn)),   αn = (2πn + θ) / N
//! ```
//!
//! with one random rotation `θ` per tap and independent uniform phases
//! `φn`. Equally spaced arrival angles make the autocorrelation track
//! `J0(2π fd τ)` closely even with a single realization.
//!
//! Over the generated window the tap sequences are orthogonalized
//! (Gram-Schmidt) and scaled to unit mean power, so the time-mean power of
//! every resource block equals the normalized profile power exactly. The
//! frequency response at RB centre `f` is `Σl √pl · hl(t) · exp(-j2π f τl)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::{ChannelError, TapProfile, RB_BANDWIDTH_HZ};

pub const SINUSOIDS_PER_TAP: usize = 64;
pub const FADING_SAMPLE_PERIOD_S: f64 = 1e-3;

/// Gains are floored here before taking the logarithm.
const MIN_AMPLITUDE: f64 = 1e-12;

/// One Rayleigh tap as a sum of sinusoids.
#[derive(Debug, Clone)]
pub struct TapProcess {
    omegas: Vec<f64>,
    phases: Vec<f64>,
}

impl TapProcess {
    pub fn new(doppler_hz: f64, rng: &mut impl Rng) -> Self {
        let n = SINUSOIDS_PER_TAP;
        let rotation = rng.random_range(0.0..2.0 * PI);
        let omegas = (0..n)
            .map(|i| {
                let alpha = (2.0 * PI * i as f64 + rotation) / n as f64;
                2.0 * PI * doppler_hz * alpha.cos()
            })
            .collect();
        let phases = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        Self { omegas, phases }
    }

    pub fn sample(&self, t: f64) -> Complex64 {
        let sum: Complex64 = self
            .omegas
            .iter()
            .zip(&self.phases)
            .map(|(w, p)| {
                let (s, c) = (w * t + p).sin_cos();
                Complex64::new(c, s)
            })
            .sum();
        sum / (self.omegas.len() as f64).sqrt()
    }

    pub fn samples(&self, count: usize, dt: f64) -> Vec<Complex64> {
        (0..count).map(|k| self.sample(k as f64 * dt)).collect()
    }
}

/// Gain matrix `[time × RB]` in dB for one profile and Doppler.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingTrace {
    gains_db: Vec<f64>,
    gains_linear: Vec<f64>,
    rows: usize,
    rb_count: usize,
    sample_period_s: f64,
    doppler_hz: f64,
    profile: TapProfile,
    frequency_flat: bool,
}

impl FadingTrace {
    /// Wraps an existing dB matrix (row-major).
    pub fn from_db(
        gains_db: Vec<f64>,
        rb_count: usize,
        sample_period_s: f64,
        doppler_hz: f64,
        profile: TapProfile,
    ) -> Result<Self, ChannelError> {
        if rb_count == 0 || gains_db.is_empty() || !gains_db.len().is_multiple_of(rb_count) {
            return Err(ChannelError::Malformed(format!("{} gains do not fill {rb_count} RB columns", gains_db.len())));
        }
        if !(sample_period_s > 0.0) {
            return Err(ChannelError::Malformed("sample period must be > 0".into()));
        }
        if gains_db.iter().any(|g| !g.is_finite()) {
            return Err(ChannelError::Malformed("non-finite gain".into()));
        }
        let gains_linear = gains_db.iter().map(|g| 10f64.powf(g / 10.0)).collect();
        let frequency_flat = profile.is_frequency_flat();
        Ok(Self {
            rows: gains_db.len() / rb_count,
            gains_db,
            gains_linear,
            rb_count,
            sample_period_s,
            doppler_hz,
            profile,
            frequency_flat,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn rb_count(&self) -> usize {
        self.rb_count
    }

    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    pub fn profile(&self) -> &TapProfile {
        &self.profile
    }

    /// Set for single-tap profiles: every RB sees the same gain.
    pub fn frequency_flat(&self) -> bool {
        self.frequency_flat
    }

    pub fn duration_s(&self) -> f64 {
        self.rows as f64 * self.sample_period_s
    }

    pub fn gains_db(&self) -> &[f64] {
        &self.gains_db
    }

    pub fn row_db(&self, row: usize) -> &[f64] {
        &self.gains_db[row * self.rb_count..(row + 1) * self.rb_count]
    }

    /// Power gains `|H|²` for one row.
    pub fn row_linear(&self, row: usize) -> &[f64] {
        &self.gains_linear[row * self.rb_count..(row + 1) * self.rb_count]
    }

    /// Row for time `t`, wrapping around the end of the trace.
    pub fn row_at(&self, t: f64) -> usize {
        let idx = (t / self.sample_period_s).floor();
        (idx.rem_euclid(self.rows as f64) as usize).min(self.rows - 1)
    }

    /// Gain of one RB over time.
    pub fn column_db(&self, rb: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.gains_db[r * self.rb_count + rb])
    }
}

/// Centre frequencies of `rb_count` RBs relative to the carrier. The
/// occupied band is 90 % of the channel bandwidth (180 kHz per RB at
/// 10 MHz / 50 RBs).
pub fn rb_center_offsets_hz(rb_count: usize, bandwidth_mhz: f64) -> Vec<f64> {
    let spacing = if bandwidth_mhz > 0.0 { bandwidth_mhz * 1e6 * 0.9 / rb_count as f64 } else { RB_BANDWIDTH_HZ };
    (0..rb_count).map(|k| (k as f64 - (rb_count as f64 - 1.0) / 2.0) * spacing).collect()
}

/// Synthesizes a trace sampled every millisecond.
pub fn generate_fading_trace(
    profile: &TapProfile,
    doppler_hz: f64,
    duration_s: f64,
    rb_count: usize,
    bandwidth_mhz: f64,
    rng: &mut impl Rng,
) -> Result<FadingTrace, ChannelError> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(ChannelError::InvalidArgument(format!("duration must be > 0, got {duration_s}")));
    }
    if rb_count == 0 {
        return Err(ChannelError::InvalidArgument("rb_count must be >= 1".into()));
    }
    if !(doppler_hz >= 0.0 && doppler_hz.is_finite()) || !(bandwidth_mhz > 0.0) {
        return Err(ChannelError::InvalidArgument("doppler must be >= 0 and bandwidth > 0".into()));
    }
    let rows = ((duration_s / FADING_SAMPLE_PERIOD_S).round() as usize).max(1);
    let powers = profile.normalized_powers();

    let mut taps: Vec<Vec<Complex64>> = powers
        .iter()
        .map(|_| TapProcess::new(doppler_hz, rng).samples(rows, FADING_SAMPLE_PERIOD_S))
        .collect();
    if doppler_hz > 0.0 {
        orthonormalize(&mut taps);
    }

    let offsets = rb_center_offsets_hz(rb_count, bandwidth_mhz);
    // steer[l][k] = √pl · exp(-j2π f_k τl)
    let steer: Vec<Vec<Complex64>> = profile
        .taps()
        .iter()
        .zip(&powers)
        .map(|(tap, p)| {
            offsets
                .iter()
                .map(|f| Complex64::from_polar(p.sqrt(), -2.0 * PI * f * tap.delay_ns * 1e-9))
                .collect()
        })
        .collect();

    let mut gains_db = Vec::with_capacity(rows * rb_count);
    let mut gains_linear = Vec::with_capacity(rows * rb_count);
    for r in 0..rows {
        for k in 0..rb_count {
            let h: Complex64 = taps.iter().zip(&steer).map(|(tap, st)| tap[r] * st[k]).sum();
            let amp = h.norm().max(MIN_AMPLITUDE);
            gains_db.push(20.0 * amp.log10());
            gains_linear.push(amp * amp);
        }
    }

    Ok(FadingTrace {
        gains_db,
        gains_linear,
        rows,
        rb_count,
        sample_period_s: FADING_SAMPLE_PERIOD_S,
        doppler_hz,
        profile: profile.clone(),
        frequency_flat: profile.is_frequency_flat(),
    })
}

/// Modified Gram-Schmidt over the tap sequences followed by unit mean-power
/// scaling. A tap that is (numerically) a combination of earlier ones, as
/// happens with very short windows, is only rescaled.
fn orthonormalize(taps: &mut [Vec<Complex64>]) {
    let mean_power = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>() / v.len() as f64;
    let mut basis: Vec<usize> = Vec::new();
    for l in 0..taps.len() {
        let original = mean_power(&taps[l]);
        let mut v = taps[l].clone();
        for &b in &basis {
            let proj: Complex64 = taps[b].iter().zip(&v).map(|(q, x)| q.conj() * x).sum::<Complex64>() / taps[b].len() as f64;
            for (x, q) in v.iter_mut().zip(&taps[b]) {
                *x -= proj * q;
            }
        }
        let residual = mean_power(&v);
        if residual > 1e-6 * original {
            let scale = residual.sqrt().recip();
            taps[l] = v.into_iter().map(|x| x * scale).collect();
            basis.push(l);
        } else if original > 0.0 {
            let scale = original.sqrt().recip();
            for x in &mut taps[l] {
                *x *= scale;
            }
        }
    }
}
