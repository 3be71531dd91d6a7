use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::accumulators::effective_length;
use crate::fiber::Band;
use crate::signal::{apply_dispersion, nsd};
use crate::ssfm::{self, SsfmConfig};

const DT: f64 = 6.25e-12;

/// Smooth random QPSK-like waveform: raised-cosine interpolated symbols at
/// 16 samples per symbol with mean power `power` (W).
fn test_waveform(symbols: usize, power: f64, seed: u64) -> ComplexEnvelope {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sps = 16;
    let pts: Vec<Complex64> = (0..symbols)
        .map(|_| {
            let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Complex64::new(re, im) / 2f64.sqrt()
        })
        .collect();
    let n = symbols * sps;
    let samples: Vec<Complex64> = (0..n)
        .map(|i| {
            let k = i / sps;
            let frac = (i % sps) as f64 / sps as f64;
            let w = 0.5 - 0.5 * (std::f64::consts::PI * frac).cos();
            pts[k] * (1.0 - w) + pts[(k + 1) % symbols] * w
        })
        .collect();
    let x = ComplexEnvelope::new(samples, DT).unwrap();
    x.scaled((power / x.mean_power()).sqrt())
}

fn dbm(p: f64) -> f64 {
    10f64.powf((p - 30.0) / 10.0)
}

fn c_band() -> FiberParams {
    FiberParams::ssmf(Band::C, 20e3)
}

fn run(kind: ModelKind, x: &ComplexEnvelope, f: &FiberParams) -> ModelOutput {
    propagate_model(x, f, kind, &ModelConfig::default()).unwrap()
}

#[test]
fn limit_reductions() {
    let x = test_waveform(128, dbm(12.0), 1);
    let no_kerr = c_band().with_gamma(0.0);
    let d = dispersion_only(&x, &no_kerr).waveform;
    for kind in [ModelKind::RpGamma, ModelKind::LpGamma, ModelKind::FlpGamma] {
        let out = run(kind, &x, &no_kerr);
        assert_eq!(out.kind, kind);
        assert!(nsd(&out.waveform, &d).unwrap() <= 1e-12, "{kind}");
    }
    let no_gvd = c_band().with_beta2(0.0);
    let p = nlpn(&x, &no_gvd).waveform;
    for kind in [ModelKind::RpBeta2, ModelKind::LpBeta2, ModelKind::FlpBeta2] {
        let out = run(kind, &x, &no_gvd);
        assert!(nsd(&out.waveform, &p).unwrap() <= 1e-12, "{kind}");
    }
    let neither = c_band().with_beta2(0.0).with_gamma(0.0);
    for kind in ModelKind::ALL {
        let out = run(kind, &x, &neither);
        assert!(nsd(&out.waveform, &x).unwrap() <= 1e-24, "{kind}");
    }
}

#[test]
fn gamma_zero_lp_and_flp_computed_paths_reduce() {
    // Tiny γ instead of exactly zero: the full quadrature path is exercised.
    let x = test_waveform(64, dbm(5.0), 2);
    let f = c_band().with_gamma(1e-12);
    let d = apply_dispersion(&x, f.beta2, f.length);
    for kind in [ModelKind::RpGamma, ModelKind::LpGamma, ModelKind::FlpGamma] {
        assert!(nsd(&run(kind, &x, &f).waveform, &d).unwrap() < 1e-12, "{kind}");
    }
}

#[test]
fn dispatch_covers_every_kind() {
    let x = test_waveform(32, dbm(3.0), 3);
    let f = c_band();
    for kind in ModelKind::ALL {
        let out = run(kind, &x, &f);
        assert_eq!(out.kind, kind);
        assert!((0.0..=1.0).contains(&out.stabilized_fraction));
        assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
    }
    assert_eq!(run(ModelKind::DispersionOnly, &x, &f), dispersion_only(&x, &f));
    assert_eq!(run(ModelKind::RpGamma, &x, &f), rp_gamma(&x, &f, DEFAULT_QUAD_STEPS).unwrap());
    assert!(rp_gamma(&x, &f, 1).is_err());
}

#[test]
fn nlpn_preserves_modulus_and_rotates_constant_envelope() {
    let x = test_waveform(64, dbm(15.0), 4);
    let f = c_band();
    let out = nlpn(&x, &f).waveform;
    for (a, b) in out.samples().iter().zip(x.samples()) {
        assert!((a.norm() - b.norm()).abs() < 1e-15);
    }
    let p: f64 = 0.02;
    let c = ComplexEnvelope::new(vec![Complex64::new(p.sqrt(), 0.0); 256], DT).unwrap();
    let rot = nlpn(&c, &f).waveform;
    let phase = f.gamma * p * effective_length(f.length, f.alpha);
    for s in rot.samples() {
        assert!((s.arg() - phase).abs() < 1e-12);
    }
}

#[test]
fn constant_envelope_beta2_models_equal_nlpn() {
    let c = ComplexEnvelope::new(vec![Complex64::new(0.1, 0.05); 512], DT).unwrap();
    let f = c_band();
    let p = nlpn(&c, &f).waveform;
    for kind in [ModelKind::RpBeta2, ModelKind::LpBeta2, ModelKind::FlpBeta2] {
        let out = run(kind, &c, &f);
        assert!(nsd(&out.waveform, &p).unwrap() < 1e-20, "{kind}");
    }
    let lp = run(ModelKind::LpBeta2, &c, &f);
    assert_eq!(lp.stabilized_fraction, 0.0);
}

#[test]
fn exact_limits_match_split_step() {
    let x = test_waveform(128, dbm(14.0), 5);
    let cfg = SsfmConfig::new(200).unwrap();
    let f = c_band().with_gamma(0.0);
    let s = ssfm::propagate(&x, &f, &cfg).unwrap();
    assert!(nsd(&dispersion_only(&x, &f).waveform, &s).unwrap() < 1e-10);
    let f = c_band().with_beta2(0.0);
    let s = ssfm::propagate(&x, &f, &cfg).unwrap();
    assert!(nsd(&nlpn(&x, &f).waveform, &s).unwrap() < 1e-10);
}

#[test]
fn first_order_consistency() {
    // ‖A_LP − A_RP‖ = O(θ²): the ratio to θ² stays bounded as θ shrinks.
    let x = test_waveform(128, dbm(12.0), 6);
    let base = c_band();
    let cases: [(ModelKind, ModelKind, bool); 4] = [
        (ModelKind::LpGamma, ModelKind::RpGamma, true),
        (ModelKind::FlpGamma, ModelKind::RpGamma, true),
        (ModelKind::LpBeta2, ModelKind::RpBeta2, false),
        (ModelKind::FlpBeta2, ModelKind::RpBeta2, false),
    ];
    for (log_kind, rp_kind, on_gamma) in cases {
        let mut ratios = Vec::new();
        for scale in [1.0, 0.5, 0.25] {
            let f = if on_gamma {
                base.with_gamma(base.gamma * scale)
            } else {
                base.with_beta2(base.beta2 * scale)
            };
            let lp = run(log_kind, &x, &f).waveform;
            let rp = run(rp_kind, &x, &f).waveform;
            let diff = nsd(&lp, &rp).unwrap().sqrt();
            ratios.push(diff / (scale * scale));
        }
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        // an O(θ) remainder would grow the ratio fourfold over this range
        assert!(hi / lo < 2.5, "{log_kind}: {ratios:?}");
    }
}

#[test]
fn quadrature_is_converged_at_default_nodes() {
    let x = test_waveform(256, dbm(10.0), 7);
    let f = c_band();
    let a = rp_gamma(&x, &f, DEFAULT_QUAD_STEPS).unwrap().waveform;
    let b = rp_gamma(&x, &f, 2 * DEFAULT_QUAD_STEPS).unwrap().waveform;
    assert!(nsd(&a, &b).unwrap() <= 1e-9);
}

#[test]
fn lp_gamma_tends_to_nlpn_as_dispersion_vanishes() {
    let x = test_waveform(128, dbm(10.0), 8);
    let gap = |scale: f64| {
        let f = c_band().with_beta2(c_band().beta2 * scale);
        let lp = run(ModelKind::LpGamma, &x, &f).waveform;
        nsd(&lp, &nlpn(&x, &f).waveform).unwrap()
    };
    // The gap is first order in β₂, so its NSD falls 100x per decade.
    let (a, b, c) = (gap(1.0), gap(0.1), gap(0.01));
    assert!(a / b > 50.0 && b / c > 80.0 && b / c < 120.0, "{a} {b} {c}");
}

#[test]
fn rp_gamma_residual_scales_with_fourth_power_of_launch() {
    // RP on γ drops γ²A₂ whose relative size grows as (γP)², so the
    // squared-deviation ratio for a 3 dB step is 2⁴.
    let f = c_band();
    let cfg = SsfmConfig::new(400).unwrap();
    let err = |p_dbm: f64| {
        let x = test_waveform(256, dbm(p_dbm), 9);
        let s = ssfm::propagate(&x, &f, &cfg).unwrap();
        nsd(&rp_gamma(&x, &f, DEFAULT_QUAD_STEPS).unwrap().waveform, &s).unwrap()
    };
    let ratio = err(3.0) / err(0.0);
    assert!((ratio / 16.0 - 1.0).abs() <= 0.25, "ratio {ratio}");
}

#[test]
fn flp_single_tone_falls_back_outside_occupied_bin() {
    let n = 1024;
    let w = 2.0 * std::f64::consts::PI * 4.0 / (n as f64 * DT);
    let x = ComplexEnvelope::from_fn(n, DT, |t| Complex64::from_polar(0.01, -w * t)).unwrap();
    let f = c_band();
    let out = run(ModelKind::FlpGamma, &x, &f);
    let expected = 1.0 - 1.0 / n as f64;
    assert!((out.stabilized_fraction - expected).abs() < 1e-12, "{}", out.stabilized_fraction);
}

#[test]
fn time_lp_does_not_stabilize_constant_envelope() {
    let c = ComplexEnvelope::new(vec![Complex64::new(0.05, 0.0); 256], DT).unwrap();
    let out = run(ModelKind::LpGamma, &c, &c_band());
    assert_eq!(out.stabilized_fraction, 0.0);
}

#[test]
fn models_track_split_step_in_weak_regime() {
    let x = test_waveform(256, dbm(0.0), 10);
    let f = c_band();
    let s = ssfm::propagate(&x, &f, &SsfmConfig::default()).unwrap();
    // At 0 dBm only the β₂ models that truncate the dispersion phase
    // (RP and time-domain LP) keep a visible linear-regime floor.
    for kind in ModelKind::PERTURBATIVE {
        let d = nsd(&run(kind, &x, &f).waveform, &s).unwrap();
        let bound = match kind {
            ModelKind::RpBeta2 | ModelKind::LpBeta2 => 1e-2,
            _ => 1e-5,
        };
        assert!(d < bound, "{kind}: {d}");
    }
}

#[test]
fn random_inputs_stay_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let f = c_band();
    for _ in 0..3 {
        let s = (0..256)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.3)
            .collect();
        let x = ComplexEnvelope::new(s, DT).unwrap();
        for kind in ModelKind::ALL {
            assert!(run(kind, &x, &f).waveform.is_finite(), "{kind}");
        }
    }
}
