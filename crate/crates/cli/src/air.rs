//! Achievable information rates from measured pre-FEC BER.

use std::path::Path;

use anyhow::{bail, Result};
use ponsim::fec::{bsc_rs_oracle, evaluate_air, post_fec_ber, ErrorSource, OracleResult, RsCode, MAX_K};

use crate::output::{read_rows, ResultRow, ResultWriter};

/// AIR rows (`air_th`, `air_rs`, `k_star`) for every BER row.
pub fn air_rows(ber_rows: &[ResultRow]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for r in ber_rows.iter().filter(|r| r.metric == "ber") {
        let air = evaluate_air(r.value.clamp(0.0, 1.0))?;
        for (metric, value) in [
            ("air_th", air.air_th),
            ("air_rs", air.air_rs),
            ("k_star", air.k_star.map_or(0.0, |k| k as f64)),
        ] {
            rows.push(ResultRow {
                cell: format!("air|{}", r.cell),
                metric: metric.into(),
                value,
                std_err: f64::NAN,
                ..r.clone()
            });
        }
    }
    Ok(rows)
}

pub fn run_air_sweep(ber_csv: &Path, writer: &mut ResultWriter, log: &mut dyn FnMut(&str)) -> Result<Vec<ResultRow>> {
    let ber_rows = read_rows(ber_csv)?;
    if !ber_rows.iter().any(|r| r.metric == "ber") {
        bail!("{} has no BER rows", ber_csv.display());
    }
    let rows = air_rows(&ber_rows)?;
    writer.write_cell(&rows)?;
    log(&format!("{} AIR rows from {}", rows.len(), ber_csv.display()));
    Ok(rows)
}

/// Code whose analytical post-FEC BER at `p` is closest (in log) to
/// `target`.
pub fn code_for_target(p: f64, target: f64) -> Result<RsCode> {
    let mut best = (f64::INFINITY, 1);
    for k in 1..=MAX_K {
        let v = post_fec_ber(p, &RsCode::new(k)?)?;
        if v > 0.0 {
            let d = (v.log10() - target.log10()).abs();
            if d < best.0 {
                best = (d, k);
            }
        }
    }
    Ok(RsCode::new(best.1)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainValidation {
    pub code: RsCode,
    pub oracle: OracleResult,
    /// Analytical prediction at the channel BER the oracle actually saw.
    pub predicted: f64,
}

impl ChainValidation {
    /// Distance between measurement and prediction in standard errors.
    pub fn sigmas(&self) -> f64 {
        (self.oracle.p_pos - self.predicted).abs() / self.oracle.std_err
    }
}

/// Runs recorded link errors through the interleaved RS chain, with the code
/// chosen so the predicted post-FEC BER is near `target`.
pub fn validate_chain(trace: &[u8], target: f64, seed: u64) -> Result<ChainValidation> {
    let frame_bits = ponsim::fec::INTERLEAVER_CODEWORDS * 255 * 8;
    let frames = trace.len() / frame_bits;
    if frames == 0 {
        bail!("error trace of {} bits is shorter than one interleaver frame", trace.len());
    }
    let used = &trace[..frames * frame_bits];
    let p = used.iter().filter(|&&e| e != 0).count() as f64 / used.len() as f64;
    let code = code_for_target(p, target)?;
    let oracle = bsc_rs_oracle(ErrorSource::Recorded(used), &code, frames * ponsim::fec::INTERLEAVER_CODEWORDS, seed)?;
    let predicted = post_fec_ber(oracle.p_channel, &code)?;
    Ok(ChainValidation { code, oracle, predicted })
}
