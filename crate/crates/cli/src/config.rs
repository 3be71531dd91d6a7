//! Experiment configuration (TOML).

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ponsim::fiber::{gamma_from_per_w_km, Band};
use ponsim::models::ModelKind;
use ponsim::transceiver::LinkConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::seeds::hex;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TodSetting {
    One(bool),
    Many(Vec<bool>),
}

impl TodSetting {
    pub fn values(&self) -> Vec<bool> {
        match self {
            TodSetting::One(b) => vec![*b],
            TodSetting::Many(v) => v.clone(),
        }
    }
}

fn default_sps() -> usize {
    16
}
fn default_symbols() -> usize {
    2048
}
fn default_ssfm_steps() -> usize {
    1000
}
fn default_frames() -> usize {
    1
}
fn default_quad() -> usize {
    ponsim::models::DEFAULT_QUAD_STEPS
}
fn default_guard() -> usize {
    32
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}
fn default_tod() -> TodSetting {
    TodSetting::One(true)
}
fn default_pw() -> Vec<usize> {
    vec![1024, 2048]
}

/// On-disk layout. Every field has a default except the sweep itself.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form identifier copied into every result row.
    #[serde(default)]
    pub experiment: String,
    #[serde(default = "default_band")]
    pub band: String,
    pub power_sweep_dbm: Vec<f64>,
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default = "default_symbols")]
    pub symbols: usize,
    #[serde(default = "default_sps")]
    pub samples_per_symbol: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ssfm_steps")]
    pub ssfm_steps: usize,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_tod")]
    pub tod_enabled: TodSetting,
    /// Independent frames averaged per sweep point.
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_quad")]
    pub quad_steps: usize,
    #[serde(default = "default_guard")]
    pub guard_symbols: usize,
    /// |β₂| values (ps²/km) for the dispersion sweep; the launch power is the
    /// first entry of `power_sweep_dbm`.
    #[serde(default)]
    pub beta2_sweep_ps2_per_km: Vec<f64>,
    /// Retained symbols used to train each histogram detector.
    #[serde(default)]
    pub train_symbols: usize,
    /// Retained symbols used to estimate BER.
    #[serde(default)]
    pub test_symbols: usize,
    /// Training-set sizes of the Parzen-window detectors.
    #[serde(default = "default_pw")]
    pub pw_training: Vec<usize>,
    #[serde(default)]
    pub pw_validation_symbols: usize,
    /// Keep the bit-error trace of the SSFM histogram detector for FEC
    /// validation.
    #[serde(default)]
    pub record_errors: bool,
    /// Overrides the band's nonlinear coefficient, in 1/(W·km), on every
    /// span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_per_w_km: Option<f64>,
}

fn default_band() -> String {
    "C".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.band()?;
        self.model_kinds()?;
        if self.power_sweep_dbm.is_empty() {
            bail!("power_sweep_dbm is empty");
        }
        if self.power_sweep_dbm.iter().any(|p| !p.is_finite()) {
            bail!("non-finite launch power");
        }
        if self.symbols < 256 || !self.symbols.is_power_of_two() {
            bail!("symbols must be a power of two >= 256, got {}", self.symbols);
        }
        if self.samples_per_symbol < 2 || !self.samples_per_symbol.is_power_of_two() {
            bail!("samples_per_symbol must be a power of two >= 2");
        }
        if self.ssfm_steps == 0 || self.frames == 0 || self.quad_steps < 2 {
            bail!("ssfm_steps, frames must be positive and quad_steps >= 2");
        }
        if 2 * self.guard_symbols >= self.symbols {
            bail!("guard symbols leave no payload");
        }
        if self.beta2_sweep_ps2_per_km.iter().any(|b| !b.is_finite()) {
            bail!("non-finite beta2 value");
        }
        if self.gamma_per_w_km.is_some_and(|g| !(g.is_finite() && g >= 0.0)) {
            bail!("gamma_per_w_km must be finite and non-negative");
        }
        if self.tod_enabled.values().is_empty() {
            bail!("tod_enabled is empty");
        }
        Ok(())
    }

    pub fn band(&self) -> Result<Band> {
        self.band.parse::<Band>().map_err(|e| anyhow::anyhow!("band {:?}: {e}", self.band))
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>> {
        self.models
            .iter()
            .map(|m| m.parse::<ModelKind>().map_err(|e| anyhow::anyhow!("model {m:?}: {e}")))
            .collect()
    }

    /// The PON link of the configured band, with any γ override applied.
    pub fn link(&self, tod: bool) -> Result<LinkConfig> {
        let link = LinkConfig::pon(self.band()?, tod);
        Ok(match self.gamma_per_w_km {
            Some(g) => link.map_spans(|f| f.with_gamma(gamma_from_per_w_km(g))),
            None => link,
        })
    }

    pub fn retained_per_frame(&self) -> usize {
        self.symbols - 2 * self.guard_symbols
    }

    /// Content hash of everything that determines results (the output
    /// directory excluded).
    pub fn content_hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        let text = toml::to_string(&canon).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes())[..8])
    }
}
