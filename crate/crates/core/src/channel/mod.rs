//! Radio channel: tapped-delay-line Rayleigh fading, pathloss, noise and SNR.

pub mod export;
pub mod fading;
pub mod profile;
pub mod propagation;

use thiserror::Error;

pub use fading::{generate_fading_trace, FadingTrace, TapProcess, FADING_SAMPLE_PERIOD_S, SINUSOIDS_PER_TAP};
pub use profile::{ProfileName, Tap, TapProfile};
pub use propagation::{doppler_frequency, link_snr_db, noise_floor_dbm, pathloss_db, NOISE_FIGURE_DB, PATHLOSS_EXPONENT};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Bandwidth of one resource block.
pub const RB_BANDWIDTH_HZ: f64 = 180e3;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("NonpositiveDistance: {0} m")]
    NonpositiveDistance(f64),
    #[error("InvalidProfile: {0}")]
    InvalidProfile(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("MalformedTrace: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl ChannelError {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelError::NonpositiveDistance(_) => "NonpositiveDistance",
            ChannelError::InvalidProfile(_) => "InvalidProfile",
            ChannelError::InvalidArgument(_) => "InvalidArgument",
            ChannelError::Malformed(_) => "MalformedTrace",
            ChannelError::Io(_) => "IoError",
        }
    }
}
