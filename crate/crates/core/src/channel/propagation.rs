//! Large-scale propagation and link budget.

use std::f64::consts::PI;

use super::{ChannelError, SPEED_OF_LIGHT};

/// Log-distance exponent for an urban street canyon.
pub const PATHLOSS_EXPONENT: f64 = 2.7;
/// Receiver noise figure.
pub const NOISE_FIGURE_DB: f64 = 9.0;
/// Thermal noise density at 290 K.
const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Maximum Doppler shift `v · f_c / c` for a speed in km/h.
pub fn doppler_frequency(speed_kmh: f64, carrier_freq_ghz: f64) -> Result<f64, ChannelError> {
    if !(speed_kmh >= 0.0 && speed_kmh.is_finite()) || !(carrier_freq_ghz > 0.0 && carrier_freq_ghz.is_finite()) {
        return Err(ChannelError::InvalidArgument(format!(
            "doppler needs speed >= 0 and frequency > 0 (got {speed_kmh} km/h, {carrier_freq_ghz} GHz)"
        )));
    }
    Ok(speed_kmh / 3.6 * carrier_freq_ghz * 1e9 / SPEED_OF_LIGHT)
}

/// Log-distance pathloss anchored at the 1 m free-space loss.
pub fn pathloss_db(distance_m: f64, carrier_freq_ghz: f64) -> Result<f64, ChannelError> {
    if !(distance_m > 0.0) {
        return Err(ChannelError::NonpositiveDistance(distance_m));
    }
    let reference = 20.0 * (4.0 * PI * carrier_freq_ghz * 1e9 / SPEED_OF_LIGHT).log10();
    Ok(reference + 10.0 * PATHLOSS_EXPONENT * distance_m.log10())
}

/// Thermal noise over the bandwidth plus the receiver noise figure.
pub fn noise_floor_dbm(bandwidth_mhz: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * (bandwidth_mhz * 1e6).log10() + NOISE_FIGURE_DB
}

pub fn link_snr_db(tx_power_dbm: f64, pathloss_db: f64, fading_gain_db: f64, noise_floor_dbm: f64) -> f64 {
    tx_power_dbm - pathloss_db + fading_gain_db - noise_floor_dbm
}
