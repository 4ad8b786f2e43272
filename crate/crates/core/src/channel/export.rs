//! Fading trace serialization.
//!
//! Binary layout (little-endian throughout):
//!
//! ```text
//! offset 0   u64  rows    (time samples)
//! offset 8   u64  cols    (resource blocks)
//! offset 16  f64  gain_db[row 0, rb 0], gain_db[row 0, rb 1], ...
//! ```
//!
//! The payload is row-major, `rows * cols` IEEE-754 doubles, nothing after.

use std::fmt::Write as _;
use std::io::{Read, Write};

use super::{ChannelError, FadingTrace, TapProfile, FADING_SAMPLE_PERIOD_S};

pub const BINARY_HEADER_BYTES: usize = 16;

pub fn write_binary(trace: &FadingTrace, mut out: impl Write) -> Result<(), ChannelError> {
    let mut buf = Vec::with_capacity(BINARY_HEADER_BYTES + trace.gains_db().len() * 8);
    buf.extend_from_slice(&(trace.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(trace.rb_count() as u64).to_le_bytes());
    for g in trace.gains_db() {
        buf.extend_from_slice(&g.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a binary trace. Metadata not stored in the file (profile, Doppler)
/// is supplied by the caller.
pub fn read_binary(mut input: impl Read, profile: TapProfile, doppler_hz: f64) -> Result<FadingTrace, ChannelError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < BINARY_HEADER_BYTES {
        return Err(ChannelError::Malformed(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(0), word(8));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(BINARY_HEADER_BYTES as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(ChannelError::Malformed(format!(
            "header says {rows}x{cols} but payload is {} bytes",
            bytes.len() - BINARY_HEADER_BYTES
        )));
    }
    let gains = bytes[BINARY_HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    FadingTrace::from_db(gains, cols as usize, FADING_SAMPLE_PERIOD_S, doppler_hz, profile)
}

/// Long-format CSV: one line per (time, RB).
pub fn write_csv(trace: &FadingTrace, mut out: impl Write) -> Result<(), ChannelError> {
    let mut text = String::from("t_ms,rb,gain_db\n");
    let step_ms = trace.sample_period_s() * 1e3;
    for r in 0..trace.rows() {
        let t = r as f64 * step_ms;
        for (k, g) in trace.row_db(r).iter().enumerate() {
            writeln!(text, "{t},{k},{g:.6}").expect("string write");
        }
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// `key=value` sidecar describing how a trace was produced.
pub fn metadata(trace: &FadingTrace, seed: u64) -> String {
    format!(
        "profile={}\ndoppler_hz={:.1}\nseed={}\nrows={}\nrb_count={}\nsample_period_ms={}\nfrequency_flat={}\n",
        trace.profile().name(),
        trace.doppler_hz(),
        seed,
        trace.rows(),
        trace.rb_count(),
        trace.sample_period_s() * 1e3,
        trace.frequency_flat(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_fading_trace;
    use crate::rng::{SeedStreams, Stream};

    fn small() -> FadingTrace {
        let mut rng = SeedStreams::new(9).rng(Stream::Fading, 0);
        generate_fading_trace(&TapProfile::eva(), 437.3, 0.05, 6, 1.4, &mut rng).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let trace = small();
        let mut bytes = Vec::new();
        write_binary(&trace, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 16 + 50 * 6 * 8);
        assert_eq!(&bytes[0..8], &50u64.to_le_bytes());
        assert_eq!(&bytes[8..16], &6u64.to_le_bytes());
        let back = read_binary(bytes.as_slice(), TapProfile::eva(), 437.3).unwrap();
        assert_eq!(back.gains_db(), trace.gains_db());
    }

    #[test]
    fn binary_rejects_truncation() {
        let mut bytes = Vec::new();
        write_binary(&small(), &mut bytes).unwrap();
        bytes.pop();
        assert!(matches!(read_binary(bytes.as_slice(), TapProfile::eva(), 0.0), Err(ChannelError::Malformed(_))));
        assert!(read_binary(&bytes[..10], TapProfile::eva(), 0.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_csv(&small(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_ms,rb,gain_db");
        assert_eq!(lines.len(), 1 + 50 * 6);
        assert!(lines[7].starts_with("1,0,"));
    }

    #[test]
    fn metadata_records_doppler() {
        let meta = metadata(&small(), 9);
        assert!(meta.contains("doppler_hz=437.3"));
        assert!(meta.contains("profile=EVA"));
        assert!(meta.contains("seed=9"));
    }
}
