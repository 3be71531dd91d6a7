//! BER of model-trained detectors on split-step test frames.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use num_complex::Complex64;
use ponsim::detection::{
    detect_hb, min_distance_detect, optimize_pw_radius, symbol_bit_errors, train_pw, GridSpec, HbCounts,
    HistogramDetector,
};
use ponsim::fiber::Band;
use ponsim::models::ModelConfig;
use ponsim::signal::nsd;
use ponsim::ssfm::SsfmConfig;
use ponsim::transceiver::{propagate_link, Engine, LinkConfig, Transceiver};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::nsd::CERTIFICATION_LIMIT;
use crate::output::{ResultIndex, ResultRow, ResultWriter};
use crate::seeds::{cell_seed, Role};

/// Transmitted frames are shared by every engine at a power.
const FRAME_TAG: &str = "link";

/// Everything needed to run frames at one launch power.
pub struct Setup {
    pub band: Band,
    pub transceiver: Transceiver,
    pub link: LinkConfig,
    /// `(name, engine)`; the split-step engine comes first.
    pub engines: Vec<(String, Engine)>,
    pub seed: u64,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, tod: bool) -> Result<Self> {
        let band = cfg.band()?;
        let mut engines = vec![("ssfm".to_string(), Engine::Ssfm(SsfmConfig::new(cfg.ssfm_steps)?))];
        let model_cfg = ModelConfig { quad_steps: cfg.quad_steps, ..ModelConfig::default() };
        for kind in cfg.model_kinds()? {
            engines.push((kind.name().to_string(), Engine::Model(kind, model_cfg)));
        }
        Ok(Self {
            band,
            transceiver: Transceiver::new(cfg.symbols, cfg.samples_per_symbol)?.with_guard_symbols(cfg.guard_symbols),
            link: cfg.link(tod)?,
            engines,
            seed: cfg.seed,
        })
    }

    fn frames_for(&self, symbols: usize) -> usize {
        let per = self.transceiver.grid.symbols() - 2 * self.transceiver.guard_symbols;
        symbols.div_ceil(per).max(1)
    }

    /// Received retained samples of frame `i` for engine `e`, with labels.
    fn receive(&self, power: f64, role: Role, i: u64, engine: &Engine) -> Result<(Vec<Complex64>, Vec<usize>, Vec<u8>)> {
        let t = &self.transceiver;
        let frame = t.frame(cell_seed(self.seed, self.band, power, FRAME_TAG, role, i))?;
        let tx = t.transmit(&frame, power)?;
        let rx = t.receive(&tx, &frame, &self.link, engine)?;
        Ok((rx, frame.retained_symbols().to_vec(), frame.retained_bits().to_vec()))
    }

    /// Split-step self-NSD (N vs 2N steps) on the first test frame.
    pub fn certify(&self, power: f64) -> Result<f64> {
        let Engine::Ssfm(cfg) = self.engines[0].1 else { bail!("first engine must be split-step") };
        let t = &self.transceiver;
        let frame = t.frame(cell_seed(self.seed, self.band, power, FRAME_TAG, Role::Test, 0))?;
        let tx = t.transmit(&frame, power)?;
        let a = propagate_link(&tx.envelope, &self.link, &Engine::Ssfm(cfg))?;
        let b = propagate_link(&tx.envelope, &self.link, &Engine::Ssfm(cfg.refined()))?;
        Ok(nsd(&a, &b)?)
    }
}

/// Histogram training state of every engine plus the leading split-step
/// samples kept for Parzen-window training.
struct Training {
    counts: Vec<HbCounts>,
    kept: BTreeMap<u64, (Vec<Complex64>, Vec<usize>)>,
}

impl Training {
    fn merge(mut self, other: Training) -> Result<Training> {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.merge(b)?;
        }
        self.kept.extend(other.kept);
        Ok(self)
    }
}

pub struct Trained {
    /// One histogram detector per engine, in engine order.
    pub histograms: Vec<HistogramDetector>,
    /// Split-step training samples in frame order (at least the requested
    /// amount, when any was requested).
    pub ssfm_samples: Vec<Complex64>,
    pub ssfm_labels: Vec<usize>,
}

/// Trains one histogram detector per engine on `symbols` training symbols
/// and keeps the first `keep` split-step samples.
pub fn train(setup: &Setup, power: f64, symbols: usize, keep: usize) -> Result<Trained> {
    let frames = setup.frames_for(symbols) as u64;
    let per = (setup.transceiver.grid.symbols() - 2 * setup.transceiver.guard_symbols) as u64;
    let keep_frames = (keep as u64).div_ceil(per);
    let empty = || Training {
        counts: setup.engines.iter().map(|_| HbCounts::new(GridSpec::default())).collect(),
        kept: BTreeMap::new(),
    };
    let state = (0..frames.max(keep_frames))
        .into_par_iter()
        .map(|i| -> Result<Training> {
            let mut s = empty();
            for (e, (_, engine)) in setup.engines.iter().enumerate() {
                if e > 0 && i >= frames {
                    break;
                }
                let (rx, labels, _) = setup.receive(power, Role::Train, i, engine)?;
                if i < frames {
                    s.counts[e].add(&rx, &labels)?;
                }
                if e == 0 && i < keep_frames {
                    s.kept.insert(i, (rx, labels));
                }
            }
            Ok(s)
        })
        .try_reduce(empty, |a, b| a.merge(b))?;
    let mut ssfm_samples = Vec::new();
    let mut ssfm_labels = Vec::new();
    for (_, (y, l)) in state.kept {
        ssfm_samples.extend(y);
        ssfm_labels.extend(l);
    }
    Ok(Trained {
        histograms: state.counts.into_iter().map(|c| c.finish()).collect::<ponsim::Result<_>>()?,
        ssfm_samples,
        ssfm_labels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBer {
    pub name: String,
    pub bit_errors: u64,
    pub bits: u64,
    /// Standard error from frame-to-frame variation.
    pub std_err: f64,
}

impl DetectorBer {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }
}

#[derive(Debug, Clone)]
pub struct BerPoint {
    pub power_dbm: f64,
    pub detectors: Vec<DetectorBer>,
    pub ssfm_self_nsd: f64,
    /// Optimized radius per Parzen-window training size.
    pub pw_radius: Vec<(usize, f64)>,
    /// Bit-error indicators of the split-step histogram detector, in
    /// transmission order, when requested.
    pub error_trace: Option<Vec<u8>>,
}

impl BerPoint {
    pub fn get(&self, name: &str) -> Option<&DetectorBer> {
        self.detectors.iter().find(|d| d.name == name)
    }
}

pub fn hb_name(engine: &str) -> String {
    format!("{engine}-hb")
}

pub fn pw_name(t: usize) -> String {
    format!("pw-{t}")
}

pub const MIN_DISTANCE: &str = "min-distance";

/// Trains every detector at `power` and counts bit errors on split-step
/// test frames.
pub fn ber_point(cfg: &ExperimentConfig, setup: &Setup, power: f64) -> Result<BerPoint> {
    if cfg.test_symbols == 0 {
        bail!("test_symbols must be positive");
    }
    if cfg.train_symbols == 0 {
        bail!("train_symbols must be positive");
    }
    let pw_max = cfg.pw_training.iter().copied().max().unwrap_or(0);
    let keep = if pw_max > 0 { pw_max + cfg.pw_validation_symbols } else { 0 };
    let trained = train(setup, power, cfg.train_symbols, keep)?;

    let mut pw = Vec::new();
    let mut pw_radius = Vec::new();
    for &t in &cfg.pw_training {
        let (tr, tl) = (&trained.ssfm_samples[..t], &trained.ssfm_labels[..t]);
        let radius = if cfg.pw_validation_symbols > 0 {
            let (v, vl) = (
                &trained.ssfm_samples[pw_max..pw_max + cfg.pw_validation_symbols],
                &trained.ssfm_labels[pw_max..pw_max + cfg.pw_validation_symbols],
            );
            optimize_pw_radius(tr, tl, v, vl)?.0
        } else {
            0.1
        };
        pw_radius.push((t, radius));
        pw.push(train_pw(tr, tl, radius)?);
    }

    let mut names: Vec<String> = setup.engines.iter().map(|(n, _)| hb_name(n)).collect();
    names.push(MIN_DISTANCE.to_string());
    names.extend(cfg.pw_training.iter().map(|&t| pw_name(t)));

    let c = &setup.transceiver.constellation;
    let frames = setup.frames_for(cfg.test_symbols) as u64;
    let ssfm = &setup.engines[0].1;
    let per_frame: Vec<(Vec<u64>, u64, Option<Vec<u8>>)> = (0..frames)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let (rx, labels, bits) = setup.receive(power, Role::Test, i, ssfm)?;
            let mut errors = Vec::with_capacity(names.len());
            let mut trace = None;
            for (e, hb) in trained.histograms.iter().enumerate() {
                let decided = detect_hb(hb, &rx);
                errors.push(symbol_bit_errors(&labels, &decided, c) as u64);
                if e == 0 && cfg.record_errors {
                    let rx_bits = c.demap(&decided);
                    trace = Some(bits.iter().zip(&rx_bits).map(|(a, b)| a ^ b).collect());
                }
            }
            errors.push(symbol_bit_errors(&labels, &min_distance_detect(&rx, c), c) as u64);
            for det in &pw {
                let decided: Vec<usize> = rx.iter().map(|y| det.decide(*y)).collect();
                errors.push(symbol_bit_errors(&labels, &decided, c) as u64);
            }
            Ok((errors, 2 * rx.len() as u64, trace))
        })
        .collect::<Result<_>>()?;

    let detectors = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let bit_errors: u64 = per_frame.iter().map(|f| f.0[j]).sum();
            let bits: u64 = per_frame.iter().map(|f| f.1).sum();
            let rates: Vec<f64> = per_frame.iter().map(|f| f.0[j] as f64 / f.1 as f64).collect();
            let n = rates.len() as f64;
            let mean = bit_errors as f64 / bits as f64;
            let std_err = if rates.len() > 1 {
                (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                (mean.max(1.0 / bits as f64) / bits as f64).sqrt()
            };
            DetectorBer { name: name.clone(), bit_errors, bits, std_err }
        })
        .collect();
    let error_trace = if cfg.record_errors {
        Some(per_frame.into_iter().flat_map(|f| f.2.unwrap_or_default()).collect())
    } else {
        None
    };
    Ok(BerPoint { power_dbm: power, detectors, ssfm_self_nsd: setup.certify(power)?, pw_radius, error_trace })
}

pub fn point_rows(cfg: &ExperimentConfig, cell: &str, tod: bool, p: &BerPoint) -> Vec<ResultRow> {
    let hash = cfg.content_hash();
    p.detectors
        .iter()
        .map(|d| ResultRow {
            experiment: cfg.experiment.clone(),
            cell: cell.to_string(),
            band: cfg.band.clone(),
            tod,
            power_dbm: p.power_dbm,
            beta2_ps2_per_km: None,
            model: d.name.clone(),
            metric: "ber".into(),
            value: d.ber(),
            std_err: d.std_err,
            seed: cfg.seed,
            config_hash: hash.clone(),
            ssfm_self_nsd: p.ssfm_self_nsd,
            certified: p.ssfm_self_nsd <= CERTIFICATION_LIMIT,
        })
        .collect()
}

/// BER versus launch power; the first TOD setting is used.
pub fn run_ber_sweep(cfg: &ExperimentConfig, writer: &mut ResultWriter, log: &mut dyn FnMut(&str)) -> Result<Vec<BerPoint>> {
    let tod = cfg.tod_enabled.values()[0];
    let setup = Setup::new(cfg, tod)?;
    let index = ResultIndex::load(writer.path(), &cfg.content_hash())?;
    let mut points = Vec::new();
    for &power in &cfg.power_sweep_dbm {
        let cell = format!("ber|{}|tod={tod}|p={power}", cfg.band);
        if index.contains(&cell) {
            log(&format!("skip {cell} (done)"));
            continue;
        }
        let p = ber_point(cfg, &setup, power)?;
        writer.write_cell(&point_rows(cfg, &cell, tod, &p))?;
        let summary: Vec<String> = p.detectors.iter().map(|d| format!("{}={:.3e}", d.name, d.ber())).collect();
        log(&format!("{cell} self-nsd={:.1e} {}", p.ssfm_self_nsd, summary.join(" ")));
        points.push(p);
    }
    Ok(points)
}
