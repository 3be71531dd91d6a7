//! Complex baseband signals on a uniform periodic time grid.
//!
//! The Fourier pair used throughout the crate is
//!
//! ```text
//! Ã(ω) = ∫ A(t) e^{+jωt} dt,        A(t) = 1/(2π) ∫ Ã(ω) e^{−jωt} dω
//! ```
//!
//! discretized as `Ã[k] = dt · Σ A[n] e^{+jω_k t_n}` with `t_n = n·dt` taken
//! modulo the period `n·dt`. Under this convention `∂/∂t` maps to a
//! multiplication by `−jω` and the dispersive part of the NLSE becomes the
//! all-pass factor `exp(+jβ₂ω²z/2)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Sampling grid of a transmitted frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub dt: f64,
    pub symbol_rate: f64,
    pub samples_per_symbol: usize,
}

impl Grid {
    /// Grid holding `symbols` symbols at `samples_per_symbol` samples each.
    pub fn new(symbols: usize, samples_per_symbol: usize, symbol_rate: f64) -> Result<Self> {
        if samples_per_symbol == 0 || !(symbol_rate > 0.0 && symbol_rate.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "samples_per_symbol={samples_per_symbol}, symbol_rate={symbol_rate}"
            )));
        }
        let n = symbols * samples_per_symbol;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "sample count {n} is not a power of two >= 2"
            )));
        }
        Ok(Self {
            n,
            dt: 1.0 / (symbol_rate * samples_per_symbol as f64),
            symbol_rate,
            samples_per_symbol,
        })
    }

    pub fn symbols(&self) -> usize {
        self.n / self.samples_per_symbol
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dt)
    }
}

/// Uniformly sampled complex envelope `A(t)` in √W.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEnvelope {
    samples: Vec<Complex64>,
    dt: f64,
}

/// Spectrum `Ã(ω)` of a [`ComplexEnvelope`] in FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEnvelope {
    coefficients: Vec<Complex64>,
    d_omega: f64,
    dt: f64,
}

fn check_grid(n: usize, dt: f64) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "sample count {n} is not a power of two >= 2"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidGrid(format!("dt={dt}")));
    }
    Ok(())
}

impl ComplexEnvelope {
    pub fn new(samples: Vec<Complex64>, dt: f64) -> Result<Self> {
        check_grid(samples.len(), dt)?;
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidParameter(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, dt })
    }

    /// Builds an envelope by sampling `f` at `t_n = n·dt`, with the upper half
    /// of the grid mapped to negative times.
    pub fn from_fn(n: usize, dt: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_grid(n, dt)?;
        let samples = (0..n).map(|i| f(centered_time(i, n, dt))).collect();
        Self::new(samples, dt)
    }

    pub fn zeros(n: usize, dt: f64) -> Result<Self> {
        check_grid(n, dt)?;
        Ok(Self { samples: vec![Complex64::new(0.0, 0.0); n], dt })
    }

    /// Wraps samples already known to be valid (grid checked by the caller).
    pub(crate) fn from_raw(samples: Vec<Complex64>, dt: f64) -> Self {
        debug_assert!(samples.len().is_power_of_two() && dt > 0.0);
        Self { samples, dt }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|s| s.re.is_finite() && s.im.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(self.samples.iter().map(|s| s * factor).collect(), self.dt)
    }

    pub fn rotated(&self, phase: f64) -> Self {
        let r = Complex64::from_polar(1.0, phase);
        Self::from_raw(self.samples.iter().map(|s| s * r).collect(), self.dt)
    }

    /// Sample-wise combination of two envelopes on the same grid.
    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        same_grid(self, other)?;
        Ok(Self::from_raw(
            self.samples.iter().zip(&other.samples).map(|(a, b)| f(*a, *b)).collect(),
            self.dt,
        ))
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }
}

impl SpectralEnvelope {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn d_omega(&self) -> f64 {
        self.d_omega
    }

    /// Sample spacing of the time-domain grid this spectrum belongs to.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn angular_frequencies(&self) -> Vec<f64> {
        angular_frequencies(self.coefficients.len(), self.dt)
    }

    /// Replaces the coefficients, keeping the grid.
    pub fn with_coefficients(&self, coefficients: Vec<Complex64>) -> Self {
        assert_eq!(coefficients.len(), self.coefficients.len());
        Self { coefficients, d_omega: self.d_omega, dt: self.dt }
    }

    /// Energy `1/(2π) Σ|Ã|² dω`.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.d_omega / (2.0 * PI)
    }
}

/// Time of sample `i` on a periodic grid centered at zero.
pub fn centered_time(i: usize, n: usize, dt: f64) -> f64 {
    if i < n / 2 {
        i as f64 * dt
    } else {
        (i as f64 - n as f64) * dt
    }
}

/// Angular frequency of each FFT bin.
pub fn angular_frequencies(n: usize, dt: f64) -> Vec<f64> {
    let d_omega = 2.0 * PI / (n as f64 * dt);
    (0..n)
        .map(|k| if k < n / 2 { k as f64 } else { k as f64 - n as f64 } * d_omega)
        .collect()
}

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<usize, Plans>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    if let Some(p) = map.get(&n) {
        return p.clone();
    }
    // rustfft's inverse kernel carries e^{+j...}, which is our forward sign.
    let p: Plans = (planner.plan_fft_inverse(n), planner.plan_fft_forward(n));
    map.insert(n, p.clone());
    p
}

/// Reusable in-place transform pair for hot loops.
pub(crate) struct Transformer {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    dt: f64,
}

impl Transformer {
    pub(crate) fn new(n: usize, dt: f64) -> Self {
        let (forward, inverse) = plans(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self { forward, inverse, scratch: vec![Complex64::new(0.0, 0.0); len], dt }
    }

    /// Time samples to spectral coefficients, in place.
    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
        let dt = self.dt;
        buf.iter_mut().for_each(|c| *c *= dt);
    }

    /// Spectral coefficients to time samples, in place.
    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / (buf.len() as f64 * self.dt);
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    /// Transform without the `dt` / `1/(n dt)` factors; a forward-inverse
    /// pair still needs a `1/n` overall.
    pub(crate) fn forward_unscaled(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub(crate) fn inverse_unscaled(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }
}

pub fn forward_transform(x: &ComplexEnvelope) -> SpectralEnvelope {
    let mut coefficients = x.samples.clone();
    Transformer::new(x.len(), x.dt).forward(&mut coefficients);
    SpectralEnvelope {
        d_omega: 2.0 * PI / (x.len() as f64 * x.dt),
        coefficients,
        dt: x.dt,
    }
}

pub fn inverse_transform(x: &SpectralEnvelope) -> ComplexEnvelope {
    let mut samples = x.coefficients.clone();
    Transformer::new(x.len(), x.dt).inverse(&mut samples);
    ComplexEnvelope::from_raw(samples, x.dt)
}

/// `order`-th time derivative computed spectrally.
pub fn spectral_derivative(x: &ComplexEnvelope, order: u32) -> Result<ComplexEnvelope> {
    if !(1..=3).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut spec = forward_transform(x);
    let omegas = angular_frequencies(x.len(), x.dt);
    for (c, w) in spec.coefficients.iter_mut().zip(omegas) {
        *c *= Complex64::new(0.0, -w).powu(order);
    }
    Ok(inverse_transform(&spec))
}

/// Frequency response of the linear fiber operator over length `z`:
/// `exp(j(β₂ω²/2 + β₃ω³/6)z)`.
pub fn linear_response(n: usize, dt: f64, beta2: f64, beta3: f64, z: f64) -> Vec<Complex64> {
    angular_frequencies(n, dt)
        .into_iter()
        .map(|w| Complex64::from_polar(1.0, (beta2 * w * w / 2.0 + beta3 * w * w * w / 6.0) * z))
        .collect()
}

/// Dispersion operator `D_z`: exact solution of the linear NLSE over `z`.
pub fn apply_dispersion(x: &ComplexEnvelope, beta2: f64, z: f64) -> ComplexEnvelope {
    apply_linear(x, beta2, 0.0, z)
}

/// Linear propagation including third-order dispersion.
pub fn apply_linear(x: &ComplexEnvelope, beta2: f64, beta3: f64, z: f64) -> ComplexEnvelope {
    if z == 0.0 || (beta2 == 0.0 && beta3 == 0.0) {
        return x.clone();
    }
    let h = linear_response(x.len(), x.dt, beta2, beta3, z);
    let mut buf = x.samples.clone();
    let mut tf = Transformer::new(x.len(), x.dt);
    tf.forward_unscaled(&mut buf);
    let inv_n = 1.0 / x.len() as f64;
    buf.iter_mut().zip(&h).for_each(|(c, h)| *c *= h * inv_n);
    tf.inverse_unscaled(&mut buf);
    ComplexEnvelope::from_raw(buf, x.dt)
}

/// `Σ|A|² dt`, in joules.
pub fn energy(x: &ComplexEnvelope) -> f64 {
    x.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * x.dt
}

fn same_grid(a: &ComplexEnvelope, b: &ComplexEnvelope) -> Result<()> {
    if a.len() != b.len() || a.dt != b.dt {
        return Err(Error::GridMismatch(format!(
            "({}, {}) vs ({}, {})",
            a.len(),
            a.dt,
            b.len(),
            b.dt
        )));
    }
    Ok(())
}

/// Normalized squared deviation `∫|A_M − A|² / ∫|A|²` as a fraction.
pub fn nsd(model_out: &ComplexEnvelope, reference: &ComplexEnvelope) -> Result<f64> {
    same_grid(model_out, reference)?;
    nsd_samples(&model_out.samples, &reference.samples)
}

/// NSD over raw sample slices (uniform spacing cancels).
pub fn nsd_samples(model_out: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if model_out.len() != reference.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} samples",
            model_out.len(),
            reference.len()
        )));
    }
    let den: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::ZeroEnergyReference);
    }
    let num: f64 = model_out
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(num / den)
}
