//! Expansions in the dispersion parameter β₂ around the NLPN field.
//!
//! Everything is closed form: the first-order term only needs time
//! derivatives of the span input and the accumulators `G, G₁, G₂, G₃`.

use num_complex::Complex64;

use super::stabilize::{log_combine, StabilizationConfig};
use super::{ModelKind, ModelOutput};
use crate::accumulators::{effective_length, g_accumulators};
use crate::fiber::FiberParams;
use crate::signal::{angular_frequencies, ComplexEnvelope, Transformer};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Zeroth- and first-order β₂ terms (time domain).
#[derive(Debug, Clone)]
pub struct Beta2Terms {
    /// NLPN field `A(t,0)·e^{jγ|A(t,0)|²G(z)}`.
    pub a0: Vec<Complex64>,
    /// `B(t,z)·e^{jγ|A(t,0)|²G(z)}`.
    pub a1: Vec<Complex64>,
    dt: f64,
}

impl Beta2Terms {
    pub fn compute(x: &ComplexEnvelope, fiber: &FiberParams) -> Self {
        let n = x.len();
        let dt = x.dt();
        let gamma = fiber.gamma;
        let z = fiber.length;
        let acc = g_accumulators(z, fiber.alpha);

        // a_t and a_tt from one forward transform.
        let mut tf = Transformer::new(n, dt);
        let mut spec = x.samples().to_vec();
        tf.forward(&mut spec);
        let omegas = angular_frequencies(n, dt);
        let mut d1: Vec<Complex64> = spec.iter().zip(&omegas).map(|(c, w)| c * Complex64::new(0.0, -w)).collect();
        let mut d2: Vec<Complex64> = spec.iter().zip(&omegas).map(|(c, w)| c * (-w * w)).collect();
        tf.inverse(&mut d1);
        tf.inverse(&mut d2);

        let mut a0 = Vec::with_capacity(n);
        let mut a1 = Vec::with_capacity(n);
        for ((&a, &at), &att) in x.samples().iter().zip(&d1).zip(&d2) {
            let power = a.norm_sqr();
            // d|a|²/dt = 2Re{a* a_t}; d²|a|²/dt² = 2Re{a* a_tt} + 2|a_t|²
            let s_t = 2.0 * (a.conj() * at).re;
            let s_tt = 2.0 * (a.conj() * att).re + 2.0 * at.norm_sqr();
            let m = J * 0.5 * att;
            let r = a * (0.5 * gamma * s_tt) + at * (gamma * s_t);
            let p = J * (0.5 * gamma * gamma * s_t * s_t) * a;
            let v = (m * z - r * acc.g1 - p * acc.g2) * acc.g - m * acc.g1 + r * acc.g2 + p * acc.g3;
            let b = -m * z + r * acc.g1 + p * acc.g2 - J * (2.0 * gamma) * a * (a.conj() * v).re;
            let rot = Complex64::from_polar(1.0, gamma * power * acc.g);
            a0.push(a * rot);
            a1.push(b * rot);
        }
        Self { a0, a1, dt }
    }

    fn envelope(&self, samples: Vec<Complex64>) -> ComplexEnvelope {
        ComplexEnvelope::from_raw(samples, self.dt)
    }
}

/// Exact solution for β₂ = 0.
pub fn nlpn(x: &ComplexEnvelope, fiber: &FiberParams) -> ModelOutput {
    let g = effective_length(fiber.length, fiber.alpha);
    let out = x
        .samples()
        .iter()
        .map(|a| a * Complex64::from_polar(1.0, fiber.gamma * a.norm_sqr() * g))
        .collect();
    ModelOutput::exact(ComplexEnvelope::from_raw(out, x.dt()), ModelKind::Nlpn)
}

pub fn rp_beta2(x: &ComplexEnvelope, fiber: &FiberParams) -> ModelOutput {
    let t = Beta2Terms::compute(x, fiber);
    let out = t.a0.iter().zip(&t.a1).map(|(a0, a1)| a0 + a1 * fiber.beta2).collect();
    ModelOutput::exact(t.envelope(out), ModelKind::RpBeta2)
}

pub fn lp_beta2(x: &ComplexEnvelope, fiber: &FiberParams, stab: &StabilizationConfig) -> ModelOutput {
    if fiber.beta2 == 0.0 {
        return ModelOutput { kind: ModelKind::LpBeta2, ..nlpn(x, fiber) };
    }
    let t = Beta2Terms::compute(x, fiber);
    let (out, fallbacks) = log_combine(&t.a0, &t.a1, fiber.beta2, stab);
    ModelOutput {
        stabilized_fraction: fallbacks as f64 / out.len() as f64,
        waveform: t.envelope(out),
        kind: ModelKind::LpBeta2,
    }
}

pub fn flp_beta2(x: &ComplexEnvelope, fiber: &FiberParams, stab: &StabilizationConfig) -> ModelOutput {
    if fiber.beta2 == 0.0 {
        return ModelOutput { kind: ModelKind::FlpBeta2, ..nlpn(x, fiber) };
    }
    let t = Beta2Terms::compute(x, fiber);
    let mut tf = Transformer::new(x.len(), x.dt());
    let mut s0 = t.a0.clone();
    let mut s1 = t.a1.clone();
    tf.forward(&mut s0);
    tf.forward(&mut s1);
    let (mut spec, fallbacks) = log_combine(&s0, &s1, fiber.beta2, stab);
    tf.inverse(&mut spec);
    ModelOutput {
        stabilized_fraction: fallbacks as f64 / spec.len() as f64,
        waveform: t.envelope(spec),
        kind: ModelKind::FlpBeta2,
    }
}
