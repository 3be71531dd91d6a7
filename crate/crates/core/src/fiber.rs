//! Fiber parameters in SI units.

use crate::error::{Error, Result};

/// Transmission band with its standard single-mode fiber parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    C,
    O,
}

impl Band {
    pub fn name(self) -> &'static str {
        match self {
            Band::C => "C",
            Band::O => "O",
        }
    }
}

impl std::str::FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "C" | "c" => Ok(Band::C),
            "O" | "o" => Ok(Band::O),
            other => Err(Error::InvalidParameter(format!("unknown band {other:?}"))),
        }
    }
}

/// Converts an attenuation in dB/km to a power attenuation coefficient in 1/m.
pub fn alpha_from_db_per_km(alpha_db_km: f64) -> f64 {
    std::f64::consts::LN_10 / 10.0 * alpha_db_km / 1000.0
}

/// ps²/km to s²/m.
pub fn beta2_from_ps2_per_km(v: f64) -> f64 {
    v * 1e-27
}

/// ps³/km to s³/m.
pub fn beta3_from_ps3_per_km(v: f64) -> f64 {
    v * 1e-39
}

/// 1/(W·km) to 1/(W·m).
pub fn gamma_from_per_w_km(v: f64) -> f64 {
    v * 1e-3
}

/// Physical parameters of one fiber span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberParams {
    /// Power attenuation, 1/m.
    pub alpha: f64,
    /// Group-velocity dispersion, s²/m.
    pub beta2: f64,
    /// Third-order dispersion, s³/m (zero disables it).
    pub beta3: f64,
    /// Kerr coefficient, 1/(W·m).
    pub gamma: f64,
    /// Span length, m.
    pub length: f64,
}

impl FiberParams {
    pub fn new(alpha: f64, beta2: f64, beta3: f64, gamma: f64, length: f64) -> Result<Self> {
        let f = Self { alpha, beta2, beta3, gamma, length };
        f.validate()?;
        Ok(f)
    }

    /// Standard single-mode fiber for `band` (β₃ only in the O-band).
    pub fn ssmf(band: Band, length: f64) -> Self {
        match band {
            Band::C => Self {
                alpha: alpha_from_db_per_km(0.2),
                beta2: beta2_from_ps2_per_km(-21.67),
                beta3: 0.0,
                gamma: gamma_from_per_w_km(1.2),
                length,
            },
            Band::O => Self {
                alpha: alpha_from_db_per_km(0.4),
                beta2: beta2_from_ps2_per_km(-0.2),
                beta3: beta3_from_ps3_per_km(0.0765),
                gamma: gamma_from_per_w_km(1.4),
                length,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.alpha, self.beta2, self.beta3, self.gamma, self.length]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidParameter(format!("non-finite fiber parameter: {self:?}")));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidParameter(format!("alpha = {} < 0", self.alpha)));
        }
        if self.length < 0.0 {
            return Err(Error::InvalidParameter(format!("length = {} < 0", self.length)));
        }
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_beta2(mut self, beta2: f64) -> Self {
        self.beta2 = beta2;
        self
    }

    pub fn with_beta3(mut self, beta3: f64) -> Self {
        self.beta3 = beta3;
        self
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    /// Span loss in dB.
    pub fn loss_db(&self) -> f64 {
        10.0 * std::f64::consts::LOG10_E * self.alpha * self.length
    }

    /// Amplitude factor `e^{−αL/2}` turning the normalized output field into
    /// the physical one.
    pub fn amplitude_loss(&self) -> f64 {
        (-self.alpha * self.length / 2.0).exp()
    }
}
