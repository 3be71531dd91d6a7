use num_complex::Complex64;

use crate::error::{Error, Result};

/// Thresholds that replace a logarithmic-perturbation value by the regular
/// perturbation value.
///
/// The RP value is used where `|A₀| < ε` with `ε = max|A₀| / eps_divisor`,
/// or where `|A_LP| > c·|A_RP|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationConfig {
    pub c: f64,
    pub eps_divisor: f64,
}

impl StabilizationConfig {
    /// Thresholds for the time-domain LP models.
    pub const TIME_DEFAULT: Self = Self { c: 1.15, eps_divisor: 1e5 };
    /// Thresholds for the frequency-domain FLP models.
    pub const FREQUENCY_DEFAULT: Self = Self { c: 1.1, eps_divisor: 1e6 };

    pub fn new(c: f64, eps_divisor: f64) -> Result<Self> {
        if !(c > 1.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("stabilization c = {c} must be > 1")));
        }
        if !(eps_divisor > 0.0 && eps_divisor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps_divisor = {eps_divisor} must be > 0"
            )));
        }
        Ok(Self { c, eps_divisor })
    }
}

/// Pointwise `a0·exp(θ·a1/a0)` with the RP fallback. Returns the combined
/// values and the number of points that fell back.
pub(crate) fn log_combine(
    a0: &[Complex64],
    a1: &[Complex64],
    theta: f64,
    stab: &StabilizationConfig,
) -> (Vec<Complex64>, usize) {
    let peak = a0.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let eps = peak / stab.eps_divisor;
    let ln_c = stab.c.ln();
    let mut fallbacks = 0;
    let out = a0
        .iter()
        .zip(a1)
        .map(|(&base, &first)| {
            let rp = base + first * theta;
            let mag = base.norm();
            if mag < eps || mag == 0.0 {
                fallbacks += 1;
                return rp;
            }
            let psi = first * theta / base;
            // Compare in the log domain so a large exponent never overflows.
            let ln_lp = mag.ln() + psi.re;
            if ln_lp > rp.norm().ln() + ln_c {
                fallbacks += 1;
                rp
            } else {
                base * psi.exp()
            }
        })
        .collect();
    (out, fallbacks)
}
