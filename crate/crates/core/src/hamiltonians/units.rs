use crate::error::{Error, Result};

/// Reduced Planck constant in eV s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// The time unit of a run. All frequencies and rates are angular frequencies
/// in inverse units of this.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeUnit {
    pub label: String,
    /// Length of one run time unit in seconds.
    pub seconds: f64,
}

impl Default for TimeUnit {
    fn default() -> Self {
        Self { label: "1".into(), seconds: 1.0 }
    }
}

/// Units accepted for frequency-like and time-like inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnit {
    /// Already an angular frequency in run units.
    Native,
    /// Cyclic frequency `f`, converted as `w = 2 pi f`.
    Ghz,
    Thz,
    /// Energy `E`, converted as `w = E / hbar`.
    MicroEv,
}

impl FrequencyUnit {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "native" => Ok(Self::Native),
            "GHz" => Ok(Self::Ghz),
            "THz" => Ok(Self::Thz),
            "ueV" | "μeV" | "µeV" => Ok(Self::MicroEv),
            other => Err(Error::InvalidParameter(format!(
                "unknown frequency unit {other:?}; expected one of native, GHz, THz, ueV"
            ))),
        }
    }
}

impl TimeUnit {
    pub fn new(label: impl Into<String>, seconds: f64) -> Result<Self> {
        if !(seconds > 0.0 && seconds.is_finite()) {
            return Err(Error::InvalidParameter(format!("time unit scale must be positive, got {seconds}")));
        }
        Ok(Self { label: label.into(), seconds })
    }

    /// Named units: `s`, `ns`, `ps`, `fs`, or `1` for dimensionless runs.
    pub fn named(label: &str) -> Result<Self> {
        let seconds = match label {
            "1" => 1.0,
            "s" => 1.0,
            "ns" => 1e-9,
            "ps" => 1e-12,
            "fs" => 1e-15,
            other => return Err(Error::InvalidParameter(format!("unknown time unit {other:?}"))),
        };
        Self::new(label, seconds)
    }

    /// Converts a frequency-like quantity into an angular frequency in run units.
    pub fn angular_frequency(&self, value: f64, unit: FrequencyUnit) -> f64 {
        let rad_per_s = match unit {
            FrequencyUnit::Native => return value,
            FrequencyUnit::Ghz => std::f64::consts::TAU * value * 1e9,
            FrequencyUnit::Thz => std::f64::consts::TAU * value * 1e12,
            FrequencyUnit::MicroEv => value * 1e-6 / HBAR_EV_S,
        };
        rad_per_s * self.seconds
    }

    /// Converts a duration given in `ps`, `ns` or `s` into run time units.
    pub fn duration(&self, value: f64, unit: &str) -> Result<f64> {
        let seconds = match unit {
            "native" => return Ok(value),
            "s" => value,
            "ns" => value * 1e-9,
            "ps" => value * 1e-12,
            "fs" => value * 1e-15,
            other => return Err(Error::InvalidParameter(format!("unknown duration unit {other:?}"))),
        };
        Ok(seconds / self.seconds)
    }

    /// Decay rate `1 / lifetime` in run units.
    pub fn rate_from_lifetime(&self, value: f64, unit: &str) -> Result<f64> {
        let tau = self.duration(value, unit)?;
        if tau <= 0.0 {
            return Err(Error::InvalidParameter("lifetime must be positive".into()));
        }
        Ok(1.0 / tau)
    }
}
