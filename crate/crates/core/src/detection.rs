//! Symbol detectors trained on received sample clouds: minimum distance,
//! histogram MAP (HB) and Parzen window (PW).

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transceiver::Constellation;

/// Square binning of the complex plane. Row index runs along the imaginary
/// axis (upwards), column index along the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub bin: f64,
    pub bins: usize,
}

impl Default for GridSpec {
    /// `[−2, 2]²` with bins of side 0.01.
    fn default() -> Self {
        Self { lo: -2.0, bin: 0.01, bins: 400 }
    }
}

impl GridSpec {
    pub fn new(lo: f64, bin: f64, bins: usize) -> Result<Self> {
        if !(bin > 0.0 && lo.is_finite() && bin.is_finite()) || bins == 0 {
            return Err(Error::InvalidParameter(format!("grid lo={lo} bin={bin} bins={bins}")));
        }
        Ok(Self { lo, bin, bins })
    }

    pub fn len(&self) -> usize {
        self.bins * self.bins
    }

    pub fn is_empty(&self) -> bool {
        self.bins == 0
    }

    fn axis(&self, v: f64) -> usize {
        let i = ((v - self.lo) / self.bin).floor();
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as usize).min(self.bins - 1)
        }
    }

    /// Row-major bin index, clamping out-of-region samples to the boundary.
    pub fn index(&self, y: Complex64) -> usize {
        self.axis(y.im) * self.bins + self.axis(y.re)
    }

    pub fn center(&self, index: usize) -> Complex64 {
        let (r, c) = (index / self.bins, index % self.bins);
        Complex64::new(
            self.lo + (c as f64 + 0.5) * self.bin,
            self.lo + (r as f64 + 0.5) * self.bin,
        )
    }
}

/// Mergeable per-bin class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct HbCounts {
    pub grid: GridSpec,
    counts: Vec<[u64; 4]>,
    total: u64,
}

impl HbCounts {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid, counts: vec![[0; 4]; grid.len()], total: 0 }
    }

    pub fn add(&mut self, samples: &[Complex64], labels: &[usize]) -> Result<()> {
        if samples.len() != labels.len() {
            return Err(Error::LengthMismatch(samples.len(), labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&m| m >= 4) {
            return Err(Error::InvalidParameter(format!("label {bad}")));
        }
        for (y, &m) in samples.iter().zip(labels) {
            self.counts[self.grid.index(*y)][m] += 1;
        }
        self.total += samples.len() as u64;
        Ok(())
    }

    pub fn merge(&mut self, other: &HbCounts) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("histogram grids differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for m in 0..4 {
                a[m] += b[m];
            }
        }
        self.total += other.total;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[[u64; 4]] {
        &self.counts
    }

    pub fn finish(self) -> Result<HistogramDetector> {
        if self.total == 0 {
            return Err(Error::EmptyTraining);
        }
        let decision = fill_decisions(&self.grid, &self.counts);
        Ok(HistogramDetector { grid: self.grid, counts: self.counts, decision })
    }
}

fn argmax(c: &[u64; 4]) -> usize {
    // strict comparison keeps the lowest index on ties
    (1..4).fold(0, |best, m| if c[m] > c[best] { m } else { best })
}

/// Decision of every bin; empty bins copy the nearest nonempty bin
/// (bin-center Euclidean distance, ties to the smaller row-major index).
fn fill_decisions(grid: &GridSpec, counts: &[[u64; 4]]) -> Vec<u8> {
    let n = grid.bins;
    let nonempty: Vec<bool> = counts.iter().map(|c| c.iter().any(|&v| v > 0)).collect();
    let own: Vec<u8> = counts.iter().map(|c| argmax(c) as u8).collect();
    if nonempty.iter().all(|&b| b) {
        return own;
    }
    // nearest[c][r]: closest nonempty row in column c (ties to the lower row).
    const NONE: usize = usize::MAX;
    let mut nearest = vec![NONE; n * n];
    for c in 0..n {
        let col = &mut nearest[c * n..(c + 1) * n];
        let mut last = NONE;
        for r in 0..n {
            if nonempty[r * n + c] {
                last = r;
            }
            col[r] = last;
        }
        let mut next = NONE;
        for r in (0..n).rev() {
            if nonempty[r * n + c] {
                next = r;
            }
            let below = col[r];
            col[r] = match (below, next) {
                (NONE, x) => x,
                (b, NONE) => b,
                (b, x) => {
                    if r - b <= x - r {
                        b
                    } else {
                        x
                    }
                }
            };
        }
    }
    let mut decision = own;
    for r in 0..n {
        for c in 0..n {
            let idx = r * n + c;
            if nonempty[idx] {
                continue;
            }
            let mut best = (u64::MAX, usize::MAX);
            for c2 in 0..n {
                let r2 = nearest[c2 * n + r];
                if r2 == NONE {
                    continue;
                }
                let (dr, dc) = (r.abs_diff(r2) as u64, c.abs_diff(c2) as u64);
                let key = (dr * dr + dc * dc, r2 * n + c2);
                if key < best {
                    best = key;
                }
            }
            decision[idx] = decision[best.1];
        }
    }
    decision
}

/// Histogram approximation of the MAP rule on binned received samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramDetector {
    pub grid: GridSpec,
    counts: Vec<[u64; 4]>,
    decision: Vec<u8>,
}

impl HistogramDetector {
    pub fn counts(&self) -> &[[u64; 4]] {
        &self.counts
    }

    pub fn decisions(&self) -> &[u8] {
        &self.decision
    }

    pub fn decide(&self, y: Complex64) -> usize {
        self.decision[self.grid.index(y)] as usize
    }

    /// Bin decisions as a row-major map (row 0 is the lowest imaginary bin).
    pub fn region_map(&self) -> DecisionRegionMap {
        DecisionRegionMap { bins: self.grid.bins, indices: self.decision.clone() }
    }
}

pub fn train_hb(samples: &[Complex64], labels: &[usize], grid: GridSpec) -> Result<HistogramDetector> {
    let mut counts = HbCounts::new(grid);
    counts.add(samples, labels)?;
    counts.finish()
}

pub fn detect_hb(det: &HistogramDetector, samples: &[Complex64]) -> Vec<usize> {
    samples.iter().map(|y| det.decide(*y)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRegionMap {
    pub bins: usize,
    pub indices: Vec<u8>,
}

impl DecisionRegionMap {
    /// CSV with `#`-prefixed `key=value` header lines followed by one line
    /// per row.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[(&str, String)]) -> Result<()> {
        writeln!(w, "# decision-region-map v1")?;
        for (k, v) in header {
            writeln!(w, "# {k}={v}")?;
        }
        for row in self.indices.chunks(self.bins) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<u8>> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|v| v.trim().parse::<u8>().map_err(|e| Error::Io(format!("bad map entry {v:?}: {e}"))))
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<_>>()?;
        let bins = rows.len();
        if bins == 0 || rows.iter().any(|r| r.len() != bins) {
            return Err(Error::Io("decision map is not square".into()));
        }
        Ok(Self { bins, indices: rows.concat() })
    }

    /// Fraction of bins whose decision differs from `other`.
    pub fn disagreement(&self, other: &DecisionRegionMap) -> f64 {
        let diff = self.indices.iter().zip(&other.indices).filter(|(a, b)| a != b).count();
        diff as f64 / self.indices.len() as f64
    }

    /// Number of 4-connected components of bins labelled `index`.
    pub fn components(&self, index: u8) -> usize {
        let n = self.bins;
        let mut seen = vec![false; n * n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n * n {
            if seen[start] || self.indices[start] != index {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (r, c) = (i / n, i % n);
                let mut visit = |j: usize| {
                    if !seen[j] && self.indices[j] == index {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if r > 0 {
                    visit(i - n);
                }
                if r + 1 < n {
                    visit(i + n);
                }
                if c > 0 {
                    visit(i - 1);
                }
                if c + 1 < n {
                    visit(i + 1);
                }
            }
        }
        count
    }
}

/// Minimum Euclidean distance decisions (ties to the lowest index).
pub fn min_distance_detect(samples: &[Complex64], constellation: &Constellation) -> Vec<usize> {
    samples
        .iter()
        .map(|y| {
            let mut best = (f64::INFINITY, 0);
            for (m, s) in constellation.points.iter().enumerate() {
                let d = (y - s).norm_sqr();
                if d < best.0 {
                    best = (d, m);
                }
            }
            best.1
        })
        .collect()
}

/// Inverse-distance-weighted vote over training samples within a radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PwDetector {
    pub training: Vec<Complex64>,
    pub labels: Vec<usize>,
    pub radius: f64,
}

pub fn train_pw(training: &[Complex64], labels: &[usize], radius: f64) -> Result<PwDetector> {
    if training.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if training.len() != labels.len() {
        return Err(Error::LengthMismatch(training.len(), labels.len()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius}")));
    }
    if let Some(&bad) = labels.iter().find(|&&m| m >= 4) {
        return Err(Error::InvalidParameter(format!("label {bad}")));
    }
    Ok(PwDetector { training: training.to_vec(), labels: labels.to_vec(), radius })
}

impl PwDetector {
    pub fn decide(&self, y: Complex64) -> usize {
        let mut score = [0.0f64; 4];
        let mut any = false;
        let mut nearest = (f64::INFINITY, 0);
        for (t, &m) in self.training.iter().zip(&self.labels) {
            let d = (t - y).norm();
            if d == 0.0 {
                return m;
            }
            if d < nearest.0 {
                nearest = (d, m);
            }
            if d <= self.radius {
                score[m] += 1.0 / d;
                any = true;
            }
        }
        if !any {
            return nearest.1;
        }
        (1..4).fold(0, |best, m| if score[m] > score[best] { m } else { best })
    }
}

pub fn detect_pw(det: &PwDetector, samples: &[Complex64]) -> Vec<usize> {
    samples.iter().map(|y| det.decide(*y)).collect()
}

pub const PW_RADIUS_GRID: usize = 50;

/// `PW_RADIUS_GRID` logarithmically spaced radii in `[0.01, 1]`.
pub fn pw_radius_grid() -> Vec<f64> {
    (0..PW_RADIUS_GRID)
        .map(|i| 10f64.powf(-2.0 + 2.0 * i as f64 / (PW_RADIUS_GRID - 1) as f64))
        .collect()
}

/// Radius from the grid minimizing the symbol error count on a labelled
/// validation set (ties to the smallest radius). Returns the radius and the
/// error count per grid radius.
pub fn optimize_pw_radius(
    training: &[Complex64],
    labels: &[usize],
    validation: &[Complex64],
    validation_labels: &[usize],
) -> Result<(f64, Vec<usize>)> {
    let base = train_pw(training, labels, 1.0)?;
    if validation.len() != validation_labels.len() {
        return Err(Error::LengthMismatch(validation.len(), validation_labels.len()));
    }
    let radii = pw_radius_grid();
    let mut errors = vec![0usize; radii.len()];
    let mut near: Vec<(f64, usize)> = Vec::new();
    for (y, &truth) in validation.iter().zip(validation_labels) {
        near.clear();
        let mut coincident = None;
        let mut nearest = (f64::INFINITY, 0);
        for (t, &m) in base.training.iter().zip(&base.labels) {
            let d = (t - y).norm();
            if d == 0.0 {
                coincident = Some(m);
                break;
            }
            if d < nearest.0 {
                nearest = (d, m);
            }
            if d <= radii[radii.len() - 1] {
                near.push((d, m));
            }
        }
        if let Some(m) = coincident {
            if m != truth {
                errors.iter_mut().for_each(|e| *e += 1);
            }
            continue;
        }
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        // sweep radii upwards, accumulating scores
        let mut score = [0.0f64; 4];
        let mut k = 0;
        for (i, r) in radii.iter().enumerate() {
            while k < near.len() && near[k].0 <= *r {
                score[near[k].1] += 1.0 / near[k].0;
                k += 1;
            }
            let decision = if k == 0 {
                nearest.1
            } else {
                (1..4).fold(0, |best, m| if score[m] > score[best] { m } else { best })
            };
            if decision != truth {
                errors[i] += 1;
            }
        }
    }
    let best = (0..radii.len()).fold(0, |b, i| if errors[i] < errors[b] { i } else { b });
    Ok((radii[best], errors))
}

/// Fraction of differing bits.
pub fn ber(tx_bits: &[u8], rx_bits: &[u8]) -> Result<f64> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::LengthMismatch(tx_bits.len(), rx_bits.len()));
    }
    if tx_bits.is_empty() {
        return Err(Error::InvalidParameter("no bits".into()));
    }
    Ok(bit_errors(tx_bits, rx_bits) as f64 / tx_bits.len() as f64)
}

pub fn bit_errors(tx_bits: &[u8], rx_bits: &[u8]) -> usize {
    tx_bits.iter().zip(rx_bits).filter(|(a, b)| (*a ^ *b) & 1 == 1).count()
}

/// Bit errors between transmitted and detected symbol indices.
pub fn symbol_bit_errors(tx: &[usize], rx: &[usize], constellation: &Constellation) -> usize {
    tx.iter()
        .zip(rx)
        .map(|(&a, &b)| {
            let (x, y) = (constellation.labels[a], constellation.labels[b]);
            ((x[0] ^ y[0]) + (x[1] ^ y[1])) as usize
        })
        .sum()
}
