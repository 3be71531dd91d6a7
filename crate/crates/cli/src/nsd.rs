//! Model accuracy sweeps: NSD of each perturbation model against the
//! split-step reference, versus launch power or versus |β₂|.

use anyhow::Result;
use ponsim::fiber::{beta2_from_ps2_per_km, Band};
use ponsim::models::{ModelConfig, ModelKind};
use ponsim::signal::nsd;
use ponsim::ssfm::SsfmConfig;
use ponsim::transceiver::{propagate_link, propagate_link_detailed, Engine, Transceiver};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::output::{ResultIndex, ResultRow, ResultWriter};
use crate::seeds::{cell_seed, Role};

/// Self-NSD above which a reference run is flagged as not certified.
pub const CERTIFICATION_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelNsd {
    pub kind: ModelKind,
    /// Mean NSD over frames, in percent.
    pub nsd_percent: f64,
    pub std_err: f64,
    pub stabilized_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NsdPoint {
    pub band: Band,
    pub tod: bool,
    pub power_dbm: f64,
    pub beta2_ps2_per_km: Option<f64>,
    pub models: Vec<ModelNsd>,
    /// Largest NSD between N and 2N split-step runs over the frames.
    pub ssfm_self_nsd: f64,
    pub seed: u64,
}

impl NsdPoint {
    pub fn get(&self, kind: ModelKind) -> Option<&ModelNsd> {
        self.models.iter().find(|m| m.kind == kind)
    }

    pub fn certified(&self) -> bool {
        self.ssfm_self_nsd <= CERTIFICATION_LIMIT
    }
}

struct FrameResult {
    nsd: Vec<f64>,
    stabilized: Vec<f64>,
    self_nsd: f64,
}

fn mean_and_err(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One sweep point averaged over `cfg.frames` independent frames.
pub fn nsd_point(cfg: &ExperimentConfig, tod: bool, power_dbm: f64, beta2_ps2_per_km: Option<f64>) -> Result<NsdPoint> {
    let band = cfg.band()?;
    let kinds = cfg.model_kinds()?;
    let t = Transceiver::new(cfg.symbols, cfg.samples_per_symbol)?.with_guard_symbols(cfg.guard_symbols);
    let mut link = cfg.link(tod)?;
    if let Some(b) = beta2_ps2_per_km {
        let beta2 = -beta2_from_ps2_per_km(b.abs());
        link = link.map_spans(|f| f.with_beta2(beta2).with_beta3(0.0));
    }
    let ssfm = SsfmConfig::new(cfg.ssfm_steps)?;
    let model_cfg = ModelConfig { quad_steps: cfg.quad_steps, ..ModelConfig::default() };
    let seed_tag = beta2_ps2_per_km.map_or("frame".to_string(), |b| format!("frame-b2={b}"));
    let frames: Vec<FrameResult> = (0..cfg.frames as u64)
        .into_par_iter()
        .map(|i| -> Result<FrameResult> {
            let seed = cell_seed(cfg.seed, band, power_dbm, &seed_tag, Role::Frame, i);
            let frame = t.frame(seed)?;
            let tx = t.transmit(&frame, power_dbm)?;
            let coarse = propagate_link(&tx.envelope, &link, &Engine::Ssfm(ssfm))?;
            let reference = propagate_link(&tx.envelope, &link, &Engine::Ssfm(ssfm.refined()))?;
            let self_nsd = nsd(&coarse, &reference)?;
            let mut out = FrameResult { nsd: Vec::new(), stabilized: Vec::new(), self_nsd };
            for kind in &kinds {
                let m = propagate_link_detailed(&tx.envelope, &link, &Engine::Model(*kind, model_cfg))?;
                out.nsd.push(100.0 * nsd(&m.waveform, &reference)?);
                out.stabilized.push(0.5 * (m.stabilized_fraction[0] + m.stabilized_fraction[1]));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let models = kinds
        .iter()
        .enumerate()
        .map(|(j, kind)| {
            let (nsd_percent, std_err) = mean_and_err(&frames.iter().map(|f| f.nsd[j]).collect::<Vec<_>>());
            let stabilized_fraction = frames.iter().map(|f| f.stabilized[j]).sum::<f64>() / frames.len() as f64;
            ModelNsd { kind: *kind, nsd_percent, std_err, stabilized_fraction }
        })
        .collect();
    Ok(NsdPoint {
        band,
        tod,
        power_dbm,
        beta2_ps2_per_km,
        models,
        ssfm_self_nsd: frames.iter().map(|f| f.self_nsd).fold(0.0, f64::max),
        seed: cfg.seed,
    })
}

pub fn point_rows(cfg: &ExperimentConfig, cell: &str, p: &NsdPoint) -> Vec<ResultRow> {
    let hash = cfg.content_hash();
    let mut rows = Vec::new();
    for m in &p.models {
        for (metric, value, std_err) in [
            ("nsd_percent", m.nsd_percent, m.std_err),
            ("stabilized_fraction", m.stabilized_fraction, f64::NAN),
        ] {
            rows.push(ResultRow {
                experiment: cfg.experiment.clone(),
                cell: cell.to_string(),
                band: p.band.name().to_string(),
                tod: p.tod,
                power_dbm: p.power_dbm,
                beta2_ps2_per_km: p.beta2_ps2_per_km,
                model: m.kind.name().to_string(),
                metric: metric.to_string(),
                value,
                std_err,
                seed: p.seed,
                config_hash: hash.clone(),
                ssfm_self_nsd: p.ssfm_self_nsd,
                certified: p.certified(),
            });
        }
    }
    rows
}

fn sweep(
    cfg: &ExperimentConfig,
    writer: &mut ResultWriter,
    cells: Vec<(bool, f64, Option<f64>)>,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<NsdPoint>> {
    let index = ResultIndex::load(writer.path(), &cfg.content_hash())?;
    let mut points = Vec::new();
    for (tod, power, beta2) in cells {
        let cell = match beta2 {
            Some(b) => format!("nsd-b2|{}|tod={tod}|p={power}|b2={b}", cfg.band),
            None => format!("nsd|{}|tod={tod}|p={power}", cfg.band),
        };
        if index.contains(&cell) {
            log(&format!("skip {cell} (done)"));
            continue;
        }
        let p = nsd_point(cfg, tod, power, beta2)?;
        writer.write_cell(&point_rows(cfg, &cell, &p))?;
        let summary: Vec<String> = p.models.iter().map(|m| format!("{}={:.3e}%", m.kind, m.nsd_percent)).collect();
        log(&format!("{cell} self-nsd={:.1e} {}", p.ssfm_self_nsd, summary.join(" ")));
        points.push(p);
    }
    Ok(points)
}

/// NSD versus launch power, for each TOD setting.
pub fn run_nsd_sweep(cfg: &ExperimentConfig, writer: &mut ResultWriter, log: &mut dyn FnMut(&str)) -> Result<Vec<NsdPoint>> {
    let cells = cfg
        .tod_enabled
        .values()
        .into_iter()
        .flat_map(|tod| cfg.power_sweep_dbm.iter().map(move |&p| (tod, p, None)))
        .collect();
    sweep(cfg, writer, cells, log)
}

/// NSD versus |β₂| at the first configured power, without TOD.
pub fn run_nsd_vs_beta2(cfg: &ExperimentConfig, writer: &mut ResultWriter, log: &mut dyn FnMut(&str)) -> Result<Vec<NsdPoint>> {
    if cfg.beta2_sweep_ps2_per_km.is_empty() {
        anyhow::bail!("beta2_sweep_ps2_per_km is empty");
    }
    let power = cfg.power_sweep_dbm[0];
    let cells = cfg.beta2_sweep_ps2_per_km.iter().map(|&b| (false, power, Some(b))).collect();
    sweep(cfg, writer, cells, log)
}
