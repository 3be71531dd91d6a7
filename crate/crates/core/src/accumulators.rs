//! Loss-weighted distance accumulators.
//!
//! `G(z) = ∫₀ᶻ e^{−αu} du` is the effective length; `Gₖ(z) = ∫₀ᶻ G(u)^k du`
//! for k = 1, 2, 3 weight the dispersion kernels of the β₂ expansion.

/// Below this value of `αz` the closed forms lose digits to cancellation
/// (`G₃` divides by `α⁴`), so a power series in `αz` is summed instead.
const SERIES_THRESHOLD: f64 = 0.5;
const SERIES_TERMS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accumulators {
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

/// Effective length `(1 − e^{−αz})/α`, equal to `z` when `α = 0`.
pub fn effective_length(z: f64, alpha: f64) -> f64 {
    let x = alpha * z;
    if x == 0.0 {
        z
    } else {
        -(-x).exp_m1() / alpha
    }
}

pub fn g_accumulators(z: f64, alpha: f64) -> Accumulators {
    let x = alpha * z;
    if x < SERIES_THRESHOLD {
        return series(z, x);
    }
    let e1 = (-x).exp();
    let e2 = e1 * e1;
    let e3 = e2 * e1;
    let a2 = alpha * alpha;
    Accumulators {
        g: effective_length(z, alpha),
        g1: (x + e1 - 1.0) / a2,
        g2: (2.0 * x + 4.0 * e1 - e2 - 3.0) / (2.0 * a2 * alpha),
        g3: (6.0 * x + 18.0 * e1 - 9.0 * e2 + 2.0 * e3 - 11.0) / (6.0 * a2 * a2),
    }
}

/// `G(u) = u·φ(αu)` with `φ(x) = Σ (−x)ⁿ/(n+1)!`; `∫₀ᶻ uᵏ φ(αu)ᵏ du` is
/// summed term by term from the coefficients of `φᵏ`.
fn series(z: f64, x: f64) -> Accumulators {
    let mut phi = [0.0; SERIES_TERMS];
    let mut fact = 1.0;
    for (n, c) in phi.iter_mut().enumerate() {
        fact *= (n + 1) as f64;
        *c = if n % 2 == 0 { 1.0 } else { -1.0 } / fact;
    }
    let mul = |a: &[f64; SERIES_TERMS], b: &[f64; SERIES_TERMS]| {
        let mut out = [0.0; SERIES_TERMS];
        for i in 0..SERIES_TERMS {
            for j in 0..SERIES_TERMS - i {
                out[i + j] += a[i] * b[j];
            }
        }
        out
    };
    let phi2 = mul(&phi, &phi);
    let phi3 = mul(&phi2, &phi);
    let integrate = |coef: &[f64; SERIES_TERMS], k: usize| {
        let mut sum = 0.0;
        let mut xn = 1.0;
        for (n, c) in coef.iter().enumerate() {
            sum += c * xn / (n + k + 1) as f64;
            xn *= x;
        }
        sum * z.powi(k as i32 + 1)
    };
    let g = {
        let mut sum = 0.0;
        let mut xn = 1.0;
        for c in phi.iter() {
            sum += c * xn;
            xn *= x;
        }
        sum * z
    };
    Accumulators {
        g,
        g1: integrate(&phi, 1),
        g2: integrate(&phi2, 2),
        g3: integrate(&phi3, 3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::alpha_from_db_per_km;

    /// Adaptive Simpson quadrature, used only as an independent oracle.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                left + right + delta / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn oracle(z: f64, alpha: f64) -> [f64; 4] {
        let g = |u: f64| if alpha == 0.0 { u } else { (1.0 - (-alpha * u).exp()) / alpha };
        let g0 = adaptive_simpson(&|u| (-alpha * u).exp(), 0.0, z, 1e-14 * z);
        let scale = |k: i32| z.powi(k + 1) * 1e-14;
        [
            g0,
            adaptive_simpson(&|u| g(u), 0.0, z, scale(1)),
            adaptive_simpson(&|u| g(u).powi(2), 0.0, z, scale(2)),
            adaptive_simpson(&|u| g(u).powi(3), 0.0, z, scale(3)),
        ]
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn origin_is_zero() {
        let a = g_accumulators(0.0, 4.6e-5);
        assert_eq!((a.g, a.g1, a.g2, a.g3), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn lossless_limit() {
        let z = 1234.5;
        for alpha in [0.0, 1e-13, 1e-12] {
            let a = g_accumulators(z, alpha);
            // corrections are O(αz) ≈ 1e-9
            assert!(rel(a.g, z) < 1e-8);
            assert!(rel(a.g1, z * z / 2.0) < 1e-8);
            assert!(rel(a.g2, z.powi(3) / 3.0) < 1e-8);
            assert!(rel(a.g3, z.powi(4) / 4.0) < 1e-8);
        }
    }

    #[test]
    fn matches_quadrature() {
        for (alpha_db, z) in [(0.2, 20e3), (0.2, 1e3), (0.4, 20e3), (0.4, 1e3), (0.2, 200e3)] {
            let alpha = alpha_from_db_per_km(alpha_db);
            let a = g_accumulators(z, alpha);
            let o = oracle(z, alpha);
            for (got, want) in [a.g, a.g1, a.g2, a.g3].iter().zip(o) {
                assert!(rel(*got, want) < 1e-10, "alpha_db={alpha_db} z={z}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_threshold() {
        let alpha = 1e-4;
        let z = SERIES_THRESHOLD / alpha;
        let s = series(z * (1.0 - 1e-12), alpha * z * (1.0 - 1e-12));
        let c = g_accumulators(z * (1.0 + 1e-12), alpha);
        assert!(rel(s.g3, c.g3) < 1e-10);
        assert!(rel(s.g2, c.g2) < 1e-10);
    }
}
