//! Symmetric split-step Fourier solver for the normalized NLSE
//!
//! ```text
//! ∂A/∂z = −(jβ₂/2) ∂²A/∂t² + (β₃/6) ∂³A/∂t³ + jγ e^{−αz} |A|² A
//! ```
//!
//! The loss is carried by the nonlinear coefficient, so the returned field is
//! the normalized one; multiply by `e^{−αL/2}` for the physical field.

use num_complex::Complex64;

use crate::accumulators::effective_length;
use crate::error::{Error, Result};
use crate::fiber::FiberParams;
use crate::signal::{linear_response, nsd, ComplexEnvelope, Transformer};

pub const DEFAULT_STEPS_PER_SPAN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SsfmConfig {
    pub steps_per_span: usize,
}

impl Default for SsfmConfig {
    fn default() -> Self {
        Self { steps_per_span: DEFAULT_STEPS_PER_SPAN }
    }
}

impl SsfmConfig {
    pub fn new(steps_per_span: usize) -> Result<Self> {
        if steps_per_span == 0 {
            return Err(Error::InvalidParameter("steps_per_span must be >= 1".into()));
        }
        Ok(Self { steps_per_span })
    }

    pub fn refined(self) -> Self {
        Self { steps_per_span: self.steps_per_span * 2 }
    }
}

/// Half linear step, full Kerr step, half linear step; consecutive linear
/// halves are fused into a single full linear step.
pub fn propagate(x: &ComplexEnvelope, fiber: &FiberParams, cfg: &SsfmConfig) -> Result<ComplexEnvelope> {
    fiber.validate()?;
    if cfg.steps_per_span == 0 {
        return Err(Error::InvalidParameter("steps_per_span must be >= 1".into()));
    }
    if fiber.length == 0.0 {
        return Ok(x.clone());
    }
    let n = x.len();
    let dt = x.dt();
    let steps = cfg.steps_per_span;
    let h = fiber.length / steps as f64;
    let inv_n = 1.0 / n as f64;
    let linear = fiber.beta2 != 0.0 || fiber.beta3 != 0.0;
    let scale = |v: Vec<Complex64>| -> Vec<Complex64> { v.into_iter().map(|c| c * inv_n).collect() };
    let half = scale(linear_response(n, dt, fiber.beta2, fiber.beta3, h / 2.0));
    let full = scale(linear_response(n, dt, fiber.beta2, fiber.beta3, h));
    let step_leff = effective_length(h, fiber.alpha);

    let mut tf = Transformer::new(n, dt);
    let mut buf = x.samples().to_vec();
    let mut apply = |buf: &mut [Complex64], resp: &[Complex64]| {
        tf.forward_unscaled(buf);
        buf.iter_mut().zip(resp).for_each(|(c, r)| *c *= r);
        tf.inverse_unscaled(buf);
    };

    if linear {
        apply(&mut buf, &half);
    }
    for k in 0..steps {
        let kerr = fiber.gamma * (-fiber.alpha * k as f64 * h).exp() * step_leff;
        if kerr != 0.0 {
            let mut finite = true;
            for s in buf.iter_mut() {
                let p = s.norm_sqr();
                finite &= p.is_finite();
                *s *= Complex64::from_polar(1.0, kerr * p);
            }
            if !finite {
                return Err(Error::NonFinite { step: k, total: steps });
            }
        }
        if linear {
            apply(&mut buf, if k + 1 == steps { &half } else { &full });
        }
    }
    let out = ComplexEnvelope::from_raw(buf, dt);
    if !out.is_finite() {
        return Err(Error::NonFinite { step: steps, total: steps });
    }
    Ok(out)
}

/// NSD between solutions at `cfg.steps_per_span` and twice that.
pub fn convergence_check(x: &ComplexEnvelope, fiber: &FiberParams, cfg: &SsfmConfig) -> Result<f64> {
    let coarse = propagate(x, fiber, cfg)?;
    let fine = propagate(x, fiber, &cfg.refined())?;
    nsd(&coarse, &fine)
}
