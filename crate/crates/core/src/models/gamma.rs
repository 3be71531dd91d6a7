//! Expansions in the Kerr coefficient γ around the dispersion-only field.
//!
//! Third-order dispersion is not part of these models; only β₂ enters the
//! dispersion operator.

use num_complex::Complex64;

use super::stabilize::{log_combine, StabilizationConfig};
use super::{ModelKind, ModelOutput};
use crate::error::{Error, Result};
use crate::fiber::FiberParams;
use crate::signal::{apply_dispersion, linear_response, ComplexEnvelope, Transformer};

/// Zeroth- and first-order γ terms, in both domains.
#[derive(Debug, Clone)]
pub struct GammaTerms {
    /// `A₀ = D_z{A(·,0)}`.
    pub a0: Vec<Complex64>,
    /// `A₁ = j∫₀ᶻ e^{−αu} D_{z−u}{|A₀(·,u)|²A₀(·,u)} du`.
    pub a1: Vec<Complex64>,
    pub a0_spectrum: Vec<Complex64>,
    pub a1_spectrum: Vec<Complex64>,
    dt: f64,
}

impl GammaTerms {
    /// Evaluates the first-order integral with a composite trapezoid rule on
    /// `quad_steps` equally spaced nodes. Each node costs one transform pair.
    pub fn compute(x: &ComplexEnvelope, fiber: &FiberParams, quad_steps: usize) -> Result<Self> {
        if quad_steps < 2 {
            return Err(Error::InvalidParameter(format!("quad_steps = {quad_steps} < 2")));
        }
        let n = x.len();
        let dt = x.dt();
        let z = fiber.length;
        let mut tf = Transformer::new(n, dt);

        let mut input = x.samples().to_vec();
        tf.forward(&mut input);

        let mut a1_spectrum = vec![Complex64::new(0.0, 0.0); n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let du = z / (quad_steps - 1) as f64;
        for i in 0..quad_steps {
            let u = i as f64 * du;
            let weight = if i == 0 || i + 1 == quad_steps { 0.5 * du } else { du };
            if weight == 0.0 {
                continue;
            }
            let to_u = linear_response(n, dt, fiber.beta2, 0.0, u);
            buf.iter_mut()
                .zip(input.iter().zip(&to_u))
                .for_each(|(b, (a, h))| *b = a * h);
            tf.inverse(&mut buf);
            buf.iter_mut().for_each(|a| *a *= a.norm_sqr());
            tf.forward(&mut buf);
            let rest = linear_response(n, dt, fiber.beta2, 0.0, z - u);
            let w = Complex64::new(0.0, weight * (-fiber.alpha * u).exp());
            a1_spectrum
                .iter_mut()
                .zip(buf.iter().zip(&rest))
                .for_each(|(acc, (c, h))| *acc += w * h * c);
        }

        let h_z = linear_response(n, dt, fiber.beta2, 0.0, z);
        let a0_spectrum: Vec<Complex64> = input.iter().zip(&h_z).map(|(a, h)| a * h).collect();
        let mut a0 = a0_spectrum.clone();
        tf.inverse(&mut a0);
        let mut a1 = a1_spectrum.clone();
        tf.inverse(&mut a1);
        Ok(Self { a0, a1, a0_spectrum, a1_spectrum, dt })
    }

    fn envelope(&self, samples: Vec<Complex64>) -> ComplexEnvelope {
        ComplexEnvelope::from_raw(samples, self.dt)
    }
}

/// Exact solution for γ = 0.
pub fn dispersion_only(x: &ComplexEnvelope, fiber: &FiberParams) -> ModelOutput {
    ModelOutput::exact(apply_dispersion(x, fiber.beta2, fiber.length), ModelKind::DispersionOnly)
}

pub fn rp_gamma(x: &ComplexEnvelope, fiber: &FiberParams, quad_steps: usize) -> Result<ModelOutput> {
    if fiber.gamma == 0.0 {
        return Ok(ModelOutput { kind: ModelKind::RpGamma, ..dispersion_only(x, fiber) });
    }
    let t = GammaTerms::compute(x, fiber, quad_steps)?;
    let out = t.a0.iter().zip(&t.a1).map(|(a0, a1)| a0 + a1 * fiber.gamma).collect();
    Ok(ModelOutput::exact(t.envelope(out), ModelKind::RpGamma))
}

pub fn lp_gamma(
    x: &ComplexEnvelope,
    fiber: &FiberParams,
    quad_steps: usize,
    stab: &StabilizationConfig,
) -> Result<ModelOutput> {
    if fiber.gamma == 0.0 {
        return Ok(ModelOutput { kind: ModelKind::LpGamma, ..dispersion_only(x, fiber) });
    }
    let t = GammaTerms::compute(x, fiber, quad_steps)?;
    let (out, fallbacks) = log_combine(&t.a0, &t.a1, fiber.gamma, stab);
    Ok(ModelOutput {
        stabilized_fraction: fallbacks as f64 / out.len() as f64,
        waveform: t.envelope(out),
        kind: ModelKind::LpGamma,
    })
}

pub fn flp_gamma(
    x: &ComplexEnvelope,
    fiber: &FiberParams,
    quad_steps: usize,
    stab: &StabilizationConfig,
) -> Result<ModelOutput> {
    if fiber.gamma == 0.0 {
        return Ok(ModelOutput { kind: ModelKind::FlpGamma, ..dispersion_only(x, fiber) });
    }
    let t = GammaTerms::compute(x, fiber, quad_steps)?;
    let (mut spec, fallbacks) = log_combine(&t.a0_spectrum, &t.a1_spectrum, fiber.gamma, stab);
    Transformer::new(x.len(), x.dt()).inverse(&mut spec);
    Ok(ModelOutput {
        stabilized_fraction: fallbacks as f64 / spec.len() as f64,
        waveform: t.envelope(spec),
        kind: ModelKind::FlpGamma,
    })
}
