use std::fmt;
use std::str::FromStr;

use super::ChannelError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProfileName {
    Eva,
    Epa,
    Custom(String),
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileName::Eva => f.write_str("EVA"),
            ProfileName::Epa => f.write_str("EPA"),
            ProfileName::Custom(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay_ns: f64,
    pub power_db: f64,
}

/// A tapped-delay-line multipath profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    name: ProfileName,
    taps: Vec<Tap>,
}

const EVA_TAPS: [(f64, f64); 9] = [
    (0.0, 0.0),
    (30.0, -1.5),
    (150.0, -1.4),
    (310.0, -3.6),
    (370.0, -0.6),
    (710.0, -9.1),
    (1090.0, -7.0),
    (1730.0, -12.0),
    (2510.0, -16.9),
];

const EPA_TAPS: [(f64, f64); 7] = [
    (0.0, 0.0),
    (30.0, -1.0),
    (70.0, -2.0),
    (90.0, -3.0),
    (110.0, -8.0),
    (190.0, -17.2),
    (410.0, -20.8),
];

impl TapProfile {
    /// Delays must start at 0 and strictly increase; at least one tap.
    pub fn new(name: ProfileName, taps: Vec<Tap>) -> Result<Self, ChannelError> {
        let first = taps.first().ok_or_else(|| ChannelError::InvalidProfile("no taps".into()))?;
        if first.delay_ns != 0.0 {
            return Err(ChannelError::InvalidProfile("first delay must be 0".into()));
        }
        if taps.iter().any(|t| !t.delay_ns.is_finite() || !t.power_db.is_finite()) {
            return Err(ChannelError::InvalidProfile("non-finite tap".into()));
        }
        if taps.windows(2).any(|w| w[1].delay_ns <= w[0].delay_ns) {
            return Err(ChannelError::InvalidProfile("delays must strictly increase".into()));
        }
        Ok(Self { name, taps })
    }

    /// Extended Vehicular A.
    pub fn eva() -> Self {
        Self::from_table(ProfileName::Eva, &EVA_TAPS)
    }

    /// Extended Pedestrian A.
    pub fn epa() -> Self {
        Self::from_table(ProfileName::Epa, &EPA_TAPS)
    }

    fn from_table(name: ProfileName, table: &[(f64, f64)]) -> Self {
        let taps = table.iter().map(|&(delay_ns, power_db)| Tap { delay_ns, power_db }).collect();
        Self::new(name, taps).expect("built-in profile is valid")
    }

    pub fn name(&self) -> &ProfileName {
        &self.name
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn is_frequency_flat(&self) -> bool {
        self.taps.len() == 1
    }

    /// Linear tap powers scaled to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.taps.iter().map(|t| 10f64.powf(t.power_db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }
}

impl FromStr for TapProfile {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eva" => Ok(Self::eva()),
            "epa" => Ok(Self::epa()),
            other => Err(ChannelError::InvalidProfile(format!("unknown model `{other}` (expected eva|epa)"))),
        }
    }
}
