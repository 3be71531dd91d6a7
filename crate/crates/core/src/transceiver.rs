//! Coherent QPSK transmitter and receiver over the two-span PON link.
//!
//! Transmit chain: Gray mapping, upsampling, root-raised-cosine shaping and
//! scaling to the launch power. Receive chain: undo the transmit and link
//! scaling, matched filter, sample at symbol instants, drop guard symbols.
//! There is no dispersion compensation and no noise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fiber::{Band, FiberParams};
use crate::models::{propagate_model, ModelConfig, ModelKind, ModelOutput};
use crate::signal::{angular_frequencies, ComplexEnvelope, Grid, Transformer};
use crate::ssfm::{self, SsfmConfig};

pub const SYMBOL_RATE: f64 = 10e9;
pub const DEFAULT_SAMPLES_PER_SYMBOL: usize = 16;
pub const DEFAULT_GUARD_SYMBOLS: usize = 32;

/// dBm to W.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(p: f64) -> f64 {
    10.0 * p.log10() + 30.0
}

/// Gray-labeled QPSK, `(±1±j)/√2`.
///
/// Index order and labels `(b₁b₀)`: 0 → `00` → (1+j), 1 → `01` → (−1+j),
/// 2 → `11` → (−1−j), 3 → `10` → (1−j).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub points: [Complex64; 4],
    pub labels: [[u8; 2]; 4],
}

impl Default for Constellation {
    fn default() -> Self {
        Self::qpsk()
    }
}

impl Constellation {
    pub fn qpsk() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            points: [
                Complex64::new(r, r),
                Complex64::new(-r, r),
                Complex64::new(-r, -r),
                Complex64::new(r, -r),
            ],
            labels: [[0, 0], [0, 1], [1, 1], [1, 0]],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of_bits(&self, b1: u8, b0: u8) -> usize {
        self.labels
            .iter()
            .position(|l| l == &[b1 & 1, b0 & 1])
            .expect("labels cover every bit pair")
    }

    pub fn bits_of(&self, index: usize) -> [u8; 2] {
        self.labels[index]
    }

    /// Maps bit pairs to constellation indices.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<usize>> {
        if !bits.len().is_multiple_of(2) {
            return Err(Error::OddBitCount(bits.len()));
        }
        Ok(bits.chunks_exact(2).map(|p| self.index_of_bits(p[0], p[1])).collect())
    }

    pub fn demap(&self, indices: &[usize]) -> Vec<u8> {
        indices.iter().flat_map(|&i| self.labels[i]).collect()
    }
}

/// Root-raised-cosine pulse.
///
/// The filter is applied as its exact frequency response on the periodic
/// sample grid, so the transmit/matched-filter cascade is Nyquist to machine
/// precision. `span_symbols` is the support, in symbols, that guard intervals
/// must cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub rolloff: f64,
    pub span_symbols: usize,
    pub samples_per_symbol: usize,
}

impl PulseShape {
    pub fn rrc(rolloff: f64, span_symbols: usize, samples_per_symbol: usize) -> Result<Self> {
        if !(rolloff > 0.0 && rolloff <= 1.0) {
            return Err(Error::InvalidParameter(format!("rolloff {rolloff} outside (0, 1]")));
        }
        if samples_per_symbol < 2 || span_symbols == 0 {
            return Err(Error::InvalidParameter(format!(
                "samples_per_symbol={samples_per_symbol}, span_symbols={span_symbols}"
            )));
        }
        Ok(Self { rolloff, span_symbols, samples_per_symbol })
    }

    /// Roll-off 0.1, 32-symbol span.
    pub fn default_with_sps(samples_per_symbol: usize) -> Self {
        Self { rolloff: 0.1, span_symbols: 32, samples_per_symbol }
    }

    /// Frequency response on an `n`-point grid, normalized so that the
    /// discrete impulse response has unit energy.
    pub fn frequency_response(&self, n: usize) -> Vec<f64> {
        let sps = self.samples_per_symbol as f64;
        let b = self.rolloff;
        // frequency in units of the symbol rate
        let mut h: Vec<f64> = angular_frequencies(n, 1.0)
            .into_iter()
            .map(|w| {
                let f = (w / (2.0 * std::f64::consts::PI) * sps).abs();
                if f <= (1.0 - b) / 2.0 {
                    1.0
                } else if f <= (1.0 + b) / 2.0 {
                    (0.5 * (1.0 + (std::f64::consts::PI / b * (f - (1.0 - b) / 2.0)).cos())).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        // Σ|h[t]|² = (1/n) Σ|H[k]|²
        let energy = h.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let norm = energy.sqrt();
        h.iter_mut().for_each(|v| *v /= norm);
        h
    }

    /// Time-domain taps over one period (circular, centered at index 0).
    pub fn taps(&self, n: usize) -> Vec<f64> {
        let h = self.frequency_response(n);
        let mut buf: Vec<Complex64> = h.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let mut tf = Transformer::new(n, 1.0);
        tf.inverse_unscaled(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }

    /// Gain at the sampling instant of the shaping + matched filter cascade.
    fn cascade_peak(&self, n: usize) -> f64 {
        let h = self.frequency_response(n);
        h.iter().map(|v| v * v).sum::<f64>() / n as f64
    }
}

fn filter(samples: &mut [Complex64], response: &[f64], dt: f64) {
    let n = samples.len();
    let mut tf = Transformer::new(n, dt);
    tf.forward_unscaled(samples);
    let inv = 1.0 / n as f64;
    samples.iter_mut().zip(response).for_each(|(c, h)| *c *= h * inv);
    tf.inverse_unscaled(samples);
}

/// Transmitted symbols of one frame, guard symbols included.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub bits: Vec<u8>,
    pub symbols: Vec<usize>,
    /// Symbols discarded at each edge by the receiver.
    pub guard_symbols: usize,
}

impl SymbolFrame {
    pub fn from_bits(bits: Vec<u8>, guard_symbols: usize, constellation: &Constellation) -> Result<Self> {
        let symbols = constellation.map_bits(&bits)?;
        if symbols.len() <= 2 * guard_symbols {
            return Err(Error::InvalidParameter(format!(
                "{} symbols leave nothing after {} guards per edge",
                symbols.len(),
                guard_symbols
            )));
        }
        Ok(Self { bits, symbols, guard_symbols })
    }

    /// Uniformly random bits from a seeded generator.
    pub fn random(total_symbols: usize, guard_symbols: usize, seed: u64, constellation: &Constellation) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = (0..2 * total_symbols).map(|_| rng.random::<bool>() as u8).collect();
        Self::from_bits(bits, guard_symbols, constellation)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn retained_symbols(&self) -> &[usize] {
        &self.symbols[self.guard_symbols..self.symbols.len() - self.guard_symbols]
    }

    pub fn retained_bits(&self) -> &[u8] {
        &self.bits[2 * self.guard_symbols..self.bits.len() - 2 * self.guard_symbols]
    }
}

/// A launched waveform and the amplitude factor applied to reach the target
/// launch power.
#[derive(Debug, Clone, PartialEq)]
pub struct TxWaveform {
    pub envelope: ComplexEnvelope,
    pub amplitude_scale: f64,
}

/// Gray-maps `bits`, shapes them with `pulse` and scales the waveform so its
/// mean power over the (periodic) frame is `p_tx_dbm`.
pub fn modulate(
    bits: &[u8],
    constellation: &Constellation,
    pulse: &PulseShape,
    grid: &Grid,
    p_tx_dbm: f64,
) -> Result<TxWaveform> {
    let indices = constellation.map_bits(bits)?;
    if indices.len() * grid.samples_per_symbol != grid.n || pulse.samples_per_symbol != grid.samples_per_symbol {
        return Err(Error::GridMismatch(format!(
            "{} symbols at {} sps on a {}-sample grid",
            indices.len(),
            pulse.samples_per_symbol,
            grid.n
        )));
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); grid.n];
    for (k, &m) in indices.iter().enumerate() {
        samples[k * grid.samples_per_symbol] = constellation.points[m];
    }
    filter(&mut samples, &pulse.frequency_response(grid.n), grid.dt);
    let unscaled = ComplexEnvelope::new(samples, grid.dt)?;
    let amplitude_scale = (dbm_to_watts(p_tx_dbm) / unscaled.mean_power()).sqrt();
    Ok(TxWaveform { envelope: unscaled.scaled(amplitude_scale), amplitude_scale })
}

/// Matched filter and symbol-instant sampling of the retained symbols.
///
/// `gain` is the total linear amplitude gain between the unit-scale
/// constellation and `y` (transmit scaling times link amplitude gain); it is
/// divided out so a linear back-to-back link returns the constellation points.
pub fn matched_filter_and_sample(
    y: &ComplexEnvelope,
    pulse: &PulseShape,
    grid: &Grid,
    frame: &SymbolFrame,
    gain: f64,
) -> Result<Vec<Complex64>> {
    if y.len() != grid.n || y.dt() != grid.dt || frame.len() != grid.symbols() {
        return Err(Error::GridMismatch(format!(
            "waveform of {} samples, grid of {}, frame of {} symbols",
            y.len(),
            grid.n,
            frame.len()
        )));
    }
    if frame.guard_symbols < pulse.span_symbols {
        return Err(Error::InvalidParameter(format!(
            "{} guard symbols shorter than the {}-symbol pulse span",
            frame.guard_symbols, pulse.span_symbols
        )));
    }
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(Error::InvalidParameter(format!("receiver gain {gain}")));
    }
    let mut samples = y.samples().to_vec();
    filter(&mut samples, &pulse.frequency_response(grid.n), grid.dt);
    let norm = 1.0 / (gain * pulse.cascade_peak(grid.n));
    let sps = grid.samples_per_symbol;
    Ok((frame.guard_symbols..frame.len() - frame.guard_symbols)
        .map(|k| samples[k * sps] * norm)
        .collect())
}

/// Feeder fiber, passive splitter, drop fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub span1: FiberParams,
    pub splitter_ratio: f64,
    pub span2: FiberParams,
    pub band: Band,
}

impl LinkConfig {
    /// 20 km SSMF, 1:64 splitter, 1 km SSMF. Third-order dispersion is
    /// present in the O-band fiber and disabled with `tod = false`.
    pub fn pon(band: Band, tod: bool) -> Self {
        let mut span1 = FiberParams::ssmf(band, 20e3);
        let mut span2 = FiberParams::ssmf(band, 1e3);
        if !tod {
            span1.beta3 = 0.0;
            span2.beta3 = 0.0;
        }
        Self { span1, splitter_ratio: 64.0, span2, band }
    }

    pub fn validate(&self) -> Result<()> {
        self.span1.validate()?;
        self.span2.validate()?;
        if !(self.splitter_ratio >= 1.0 && self.splitter_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!("splitter ratio {}", self.splitter_ratio)));
        }
        Ok(())
    }

    pub fn map_spans(mut self, f: impl Fn(FiberParams) -> FiberParams) -> Self {
        self.span1 = f(self.span1);
        self.span2 = f(self.span2);
        self
    }

    pub fn total_loss_db(&self) -> f64 {
        self.span1.loss_db() + 10.0 * self.splitter_ratio.log10() + self.span2.loss_db()
    }

    /// Amplitude factor from launch to receiver for a linear link.
    pub fn amplitude_gain(&self) -> f64 {
        self.span1.amplitude_loss() / self.splitter_ratio.sqrt() * self.span2.amplitude_loss()
    }
}

/// What propagates the field through each span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Ssfm(SsfmConfig),
    Model(ModelKind, ModelConfig),
}

impl Engine {
    pub fn name(&self) -> String {
        match self {
            Engine::Ssfm(_) => "ssfm".to_string(),
            Engine::Model(kind, _) => kind.name().to_string(),
        }
    }

    fn span(&self, x: &ComplexEnvelope, fiber: &FiberParams) -> Result<ModelOutput> {
        match self {
            Engine::Ssfm(cfg) => Ok(ModelOutput {
                waveform: ssfm::propagate(x, fiber, cfg)?,
                kind: ModelKind::Nlpn,
                stabilized_fraction: 0.0,
            }),
            Engine::Model(kind, cfg) => propagate_model(x, fiber, *kind, cfg),
        }
    }
}

/// Per-span detail of a link propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkOutput {
    pub waveform: ComplexEnvelope,
    /// Stabilization fallback fraction of each span (zero for exact engines).
    pub stabilized_fraction: [f64; 2],
}

/// Span 1, physical rescaling, splitter, span 2, physical rescaling. Every
/// engine goes through the same composition.
pub fn propagate_link(x: &ComplexEnvelope, link: &LinkConfig, engine: &Engine) -> Result<ComplexEnvelope> {
    Ok(propagate_link_detailed(x, link, engine)?.waveform)
}

pub fn propagate_link_detailed(x: &ComplexEnvelope, link: &LinkConfig, engine: &Engine) -> Result<LinkOutput> {
    link.validate()?;
    let first = engine.span(x, &link.span1)?;
    let into_drop = first
        .waveform
        .scaled(link.span1.amplitude_loss() / link.splitter_ratio.sqrt());
    let second = engine.span(&into_drop, &link.span2)?;
    let stabilized = |o: &ModelOutput| match engine {
        Engine::Ssfm(_) => 0.0,
        Engine::Model(..) => o.stabilized_fraction,
    };
    Ok(LinkOutput {
        stabilized_fraction: [stabilized(&first), stabilized(&second)],
        waveform: second.waveform.scaled(link.span2.amplitude_loss()),
    })
}

/// One frame from bits to received samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Transceiver {
    pub constellation: Constellation,
    pub pulse: PulseShape,
    pub grid: Grid,
    pub guard_symbols: usize,
}

impl Transceiver {
    /// QPSK at 10 GBd with an RRC(0.1) pulse.
    pub fn new(symbols: usize, samples_per_symbol: usize) -> Result<Self> {
        Ok(Self {
            constellation: Constellation::qpsk(),
            pulse: PulseShape::default_with_sps(samples_per_symbol),
            grid: Grid::new(symbols, samples_per_symbol, SYMBOL_RATE)?,
            guard_symbols: DEFAULT_GUARD_SYMBOLS,
        })
    }

    pub fn with_guard_symbols(mut self, guard_symbols: usize) -> Self {
        self.guard_symbols = guard_symbols;
        self
    }

    pub fn frame(&self, seed: u64) -> Result<SymbolFrame> {
        SymbolFrame::random(self.grid.symbols(), self.guard_symbols, seed, &self.constellation)
    }

    pub fn transmit(&self, frame: &SymbolFrame, p_tx_dbm: f64) -> Result<TxWaveform> {
        modulate(&frame.bits, &self.constellation, &self.pulse, &self.grid, p_tx_dbm)
    }

    /// Retained received samples after the link.
    pub fn receive(
        &self,
        tx: &TxWaveform,
        frame: &SymbolFrame,
        link: &LinkConfig,
        engine: &Engine,
    ) -> Result<Vec<Complex64>> {
        let y = propagate_link(&tx.envelope, link, engine)?;
        matched_filter_and_sample(&y, &self.pulse, &self.grid, frame, tx.amplitude_scale * link.amplitude_gain())
    }
}
