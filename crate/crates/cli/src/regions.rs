//! Histogram decision regions per propagation engine.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ponsim::detection::{min_distance_detect, DecisionRegionMap, GridSpec, HistogramDetector};
use ponsim::transceiver::Constellation;

use crate::ber::{train, Setup};
use crate::config::ExperimentConfig;

/// Constellation index of (1 − j)/√2, whose received cloud is exported.
pub const CLOUD_SYMBOL: usize = 3;

#[derive(Debug, Clone)]
pub struct RegionSet {
    pub power_dbm: f64,
    /// `(engine, map)` in engine order.
    pub maps: Vec<(String, DecisionRegionMap)>,
    pub files: Vec<PathBuf>,
}

/// Minimum-distance decisions on the default grid.
pub fn min_distance_map() -> DecisionRegionMap {
    let grid = GridSpec::default();
    let centers: Vec<_> = (0..grid.len()).map(|i| grid.center(i)).collect();
    DecisionRegionMap {
        bins: grid.bins,
        indices: min_distance_detect(&centers, &Constellation::qpsk()).iter().map(|&m| m as u8).collect(),
    }
}

fn write_cloud(path: &Path, det: &HistogramDetector, header: &[(&str, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "# received-cloud-counts v1")?;
    for (k, v) in header {
        writeln!(w, "# {k}={v}")?;
    }
    for row in det.counts().chunks(det.grid.bins) {
        let line: Vec<String> = row.iter().map(|c| c[CLOUD_SYMBOL].to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn run_decision_regions(cfg: &ExperimentConfig, out_dir: &Path, log: &mut dyn FnMut(&str)) -> Result<Vec<RegionSet>> {
    std::fs::create_dir_all(out_dir)?;
    let tod = cfg.tod_enabled.values()[0];
    let setup = Setup::new(cfg, tod)?;
    let mut sets = Vec::new();
    for &power in &cfg.power_sweep_dbm {
        let trained = train(&setup, power, cfg.train_symbols.max(1), 0)?;
        let mut set = RegionSet { power_dbm: power, maps: Vec::new(), files: Vec::new() };
        for ((name, _), det) in setup.engines.iter().zip(&trained.histograms) {
            let header = [
                ("power_dbm", power.to_string()),
                ("model", name.clone()),
                ("seed", cfg.seed.to_string()),
                ("config_hash", cfg.content_hash()),
                ("band", cfg.band.clone()),
            ];
            let map = det.region_map();
            let path = out_dir.join(format!("regions-{name}-p{power}.csv"));
            map.write_csv(BufWriter::new(File::create(&path)?), &header)?;
            let cloud = out_dir.join(format!("cloud-{name}-p{power}.csv"));
            write_cloud(&cloud, det, &header)?;
            log(&format!("wrote {} and {}", path.display(), cloud.display()));
            set.files.extend([path, cloud]);
            set.maps.push((name.clone(), map));
        }
        sets.push(set);
    }
    Ok(sets)
}
