//! Closed-form first-order perturbation models of single-span propagation.
//!
//! Each model expands the NLSE solution in a small parameter θ (either γ or
//! β₂) around an exactly solvable limit:
//!
//! | kind      | zeroth order          | combination                         |
//! |-----------|-----------------------|-------------------------------------|
//! | RP        | `A₀`                  | `A₀ + θA₁`                          |
//! | LP        | `A₀`                  | `A₀ exp(θA₁/A₀)` in time            |
//! | FLP       | `Ã₀`                  | `Ã₀ exp(θÃ₁/Ã₀)` in angular frequency |
//!
//! Expanding in γ starts from the dispersion-only field, expanding in β₂ from
//! the nonlinear-phase-noise (NLPN) field. All outputs are normalized fields
//! (loss carried by the Kerr term), like the split-step solver.

mod beta2;
mod gamma;
mod stabilize;

pub use beta2::{flp_beta2, lp_beta2, nlpn, rp_beta2, Beta2Terms};
pub use gamma::{dispersion_only, flp_gamma, lp_gamma, rp_gamma, GammaTerms};
pub use stabilize::StabilizationConfig;

use crate::error::{Error, Result};
use crate::fiber::FiberParams;
use crate::signal::ComplexEnvelope;

pub const DEFAULT_QUAD_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    DispersionOnly,
    Nlpn,
    RpGamma,
    RpBeta2,
    LpGamma,
    LpBeta2,
    FlpGamma,
    FlpBeta2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::DispersionOnly,
        ModelKind::Nlpn,
        ModelKind::RpGamma,
        ModelKind::RpBeta2,
        ModelKind::LpGamma,
        ModelKind::LpBeta2,
        ModelKind::FlpGamma,
        ModelKind::FlpBeta2,
    ];

    /// The six first-order perturbation models.
    pub const PERTURBATIVE: [ModelKind; 6] = [
        ModelKind::RpGamma,
        ModelKind::RpBeta2,
        ModelKind::LpGamma,
        ModelKind::LpBeta2,
        ModelKind::FlpGamma,
        ModelKind::FlpBeta2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DispersionOnly => "dispersion-only",
            ModelKind::Nlpn => "nlpn",
            ModelKind::RpGamma => "rp-gamma",
            ModelKind::RpBeta2 => "rp-beta2",
            ModelKind::LpGamma => "lp-gamma",
            ModelKind::LpBeta2 => "lp-beta2",
            ModelKind::FlpGamma => "flp-gamma",
            ModelKind::FlpBeta2 => "flp-beta2",
        }
    }

    /// True for the models expanded in γ (zeroth order = dispersion only).
    pub fn expands_gamma(self) -> bool {
        matches!(
            self,
            ModelKind::DispersionOnly | ModelKind::RpGamma | ModelKind::LpGamma | ModelKind::FlpGamma
        )
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model {s:?}")))
    }
}

/// A propagated waveform tagged with the model that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub waveform: ComplexEnvelope,
    pub kind: ModelKind,
    /// Fraction of samples (LP) or bins (FLP) where the RP value was used.
    pub stabilized_fraction: f64,
}

impl ModelOutput {
    pub(crate) fn exact(waveform: ComplexEnvelope, kind: ModelKind) -> Self {
        Self { waveform, kind, stabilized_fraction: 0.0 }
    }
}

/// Numerical settings shared by all models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Trapezoid nodes for the γ first-order integral.
    pub quad_steps: usize,
    /// Rules for the time-domain LP models.
    pub time_stab: StabilizationConfig,
    /// Rules for the frequency-domain FLP models.
    pub freq_stab: StabilizationConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            quad_steps: DEFAULT_QUAD_STEPS,
            time_stab: StabilizationConfig::TIME_DEFAULT,
            freq_stab: StabilizationConfig::FREQUENCY_DEFAULT,
        }
    }
}

pub fn propagate_model(
    x: &ComplexEnvelope,
    fiber: &FiberParams,
    kind: ModelKind,
    cfg: &ModelConfig,
) -> Result<ModelOutput> {
    fiber.validate()?;
    match kind {
        ModelKind::DispersionOnly => Ok(dispersion_only(x, fiber)),
        ModelKind::Nlpn => Ok(nlpn(x, fiber)),
        ModelKind::RpGamma => rp_gamma(x, fiber, cfg.quad_steps),
        ModelKind::RpBeta2 => Ok(rp_beta2(x, fiber)),
        ModelKind::LpGamma => lp_gamma(x, fiber, cfg.quad_steps, &cfg.time_stab),
        ModelKind::LpBeta2 => Ok(lp_beta2(x, fiber, &cfg.time_stab)),
        ModelKind::FlpGamma => flp_gamma(x, fiber, cfg.quad_steps, &cfg.freq_stab),
        ModelKind::FlpBeta2 => Ok(flp_beta2(x, fiber, &cfg.freq_stab)),
    }
}

#[cfg(test)]
mod tests;
