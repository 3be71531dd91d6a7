//! Reproduction acceptance run: one PASS/FAIL line per criterion.
//!
//! Sweep results are cached (resumable CSVs) under the cargo target tmp
//! directory, so only the first run pays for the BER sweep. Set
//! `PONSIM_ACCEPTANCE_STRICT=1` to exit nonzero when any criterion fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use ponsim::fec::{air_th, bsc_rs_oracle, post_fec_ber, ErrorSource, RsCode, POST_FEC_THRESHOLD};
use ponsim::fiber::{Band, FiberParams};
use ponsim::models::{propagate_model, ModelConfig, ModelKind};
use ponsim::signal::{energy, nsd};
use ponsim::ssfm::{propagate, SsfmConfig};
use ponsim::transceiver::{propagate_link, Engine, LinkConfig, Transceiver};
use ponsim_experiments::air::{air_rows, validate_chain};
use ponsim_experiments::analysis::{crossing, falling_crossing, loglog_slope};
use ponsim_experiments::ber::{hb_name, run_ber_sweep, MIN_DISTANCE};
use ponsim_experiments::nsd::{run_nsd_sweep, run_nsd_vs_beta2, NsdPoint};
use ponsim_experiments::output::{read_rows, ResultRow, ResultWriter};
use ponsim_experiments::{selftest, ExperimentConfig};

struct Verdict {
    id: u32,
    passed: bool,
    detail: String,
}

fn cache_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("cache directory");
    dir
}

fn log(msg: &str) {
    eprintln!("  {msg}");
}

type NsdRun = fn(&ExperimentConfig, &mut ResultWriter, &mut dyn FnMut(&str)) -> Result<Vec<NsdPoint>>;

/// Runs (or resumes) a sweep and returns every cached row of this config.
fn cached(name: &str, toml: &str, run: NsdRun) -> Result<Vec<ResultRow>> {
    let cfg = ExperimentConfig::from_toml(toml)?;
    let path = cache_dir().join(format!("{name}.csv"));
    let mut w = ResultWriter::open(&path)?;
    run(&cfg, &mut w, &mut log)?;
    let hash = cfg.content_hash();
    Ok(read_rows(&path)?.into_iter().filter(|r| r.config_hash == hash).collect())
}

fn nsd_of(rows: &[ResultRow], model: &str, tod: bool, power: f64) -> Option<f64> {
    rows.iter()
        .find(|r| r.model == model && r.tod == tod && r.power_dbm == power && r.metric == "nsd_percent")
        .map(|r| r.value)
}

fn curve(rows: &[ResultRow], model: &str, metric: &str, tod: bool) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.model == model && r.metric == metric && r.tod == tod)
        .map(|r| (r.beta2_ps2_per_km.map_or(r.power_dbm, f64::abs), r.value))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("none".into(), |v| format!("{v:.2}"))
}

fn criterion1() -> Result<Verdict> {
    let t = Transceiver::new(4096, 16)?;
    let tx = t.transmit(&t.frame(1)?, 10.0)?;
    let link = LinkConfig::pon(Band::C, true);
    let cfg = SsfmConfig::default();
    let start = Instant::now();
    let a = propagate_link(&tx.envelope, &link, &Engine::Ssfm(cfg))?;
    let secs = start.elapsed().as_secs_f64();
    let b = propagate_link(&tx.envelope, &link, &Engine::Ssfm(cfg.refined()))?;
    let self_nsd = nsd(&a, &b)?;
    Ok(Verdict {
        id: 1,
        passed: self_nsd <= 1e-8 && secs <= 120.0,
        detail: format!("self-NSD {self_nsd:.2e} (<= 1e-8), {secs:.1} s per frame (<= 120 s)"),
    })
}

fn criterion2() -> Result<Verdict> {
    let checks = selftest::run()?;
    let c = checks.iter().find(|c| c.name.starts_with("limit")).ok_or_else(|| anyhow!("limit check missing"))?;
    Ok(Verdict { id: 2, passed: c.passed, detail: format!("worst reduction NSD {}% (<= 1e-10%)", c.detail) })
}

const CBAND: &str = r#"
experiment = "acceptance-cband"
band = "C"
power_sweep_dbm = [5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0, 8.5, 9.0, 9.5, 10.0, 10.5, 11.0, 11.5, 12.0, 12.5, 13.0, 13.5, 14.0, 14.5, 15.0, 15.5, 16.0, 16.5, 17.0, 17.5]
models = ["rp-gamma", "rp-beta2", "lp-gamma", "flp-beta2"]
symbols = 2048
frames = 5
seed = 11
ssfm_steps = 500
tod_enabled = true
"#;

const OBAND: &str = r#"
experiment = "acceptance-oband"
band = "O"
power_sweep_dbm = [-4.0, -2.0, 0.0, 1.0, 2.0, 10.0, 12.0, 14.0, 16.0]
models = ["rp-beta2", "lp-gamma", "flp-beta2"]
symbols = 2048
frames = 3
seed = 12
ssfm_steps = 500
tod_enabled = [true, false]
"#;

const BETA2: &str = r#"
experiment = "acceptance-beta2"
band = "C"
power_sweep_dbm = [10.0]
beta2_sweep_ps2_per_km = [-0.2, -0.35, -0.6, -1.0, -1.7, -3.0, -5.0, -8.5, -14.0, -21.67]
models = ["rp-gamma", "rp-beta2", "lp-gamma", "flp-beta2"]
symbols = 2048
frames = 2
seed = 13
ssfm_steps = 500
tod_enabled = false
"#;

const BER: &str = r#"
experiment = "acceptance-ber"
band = "C"
power_sweep_dbm = [14.0, 14.5, 15.0, 15.5, 16.0, 16.5, 17.0, 17.5, 18.0, 18.5, 19.0]
models = ["flp-beta2", "lp-gamma"]
symbols = 4096
seed = 14
ssfm_steps = 100
quad_steps = 20
train_symbols = 1048576
test_symbols = 1048576
pw_training = [1024, 2048]
pw_validation_symbols = 16384
record_errors = true
"#;

fn criterion3(rows: &[ResultRow], secs: f64) -> Verdict {
    let level = 0.1;
    let x = |m: &str| crossing(&curve(rows, m, "nsd_percent", true), level, true);
    let (rpg, rpb, lpg, flp) = (x("rp-gamma"), x("rp-beta2"), x("lp-gamma"), x("flp-beta2"));
    let gap = lpg.zip(flp).map(|(l, f)| f - l);
    // LPγ is the more accurate model at low power, FLPβ₂ at high power
    let diff: Vec<(f64, f64)> = curve(rows, "lp-gamma", "nsd_percent", true)
        .iter()
        .zip(curve(rows, "flp-beta2", "nsd_percent", true))
        .map(|(l, f)| (l.0, (f.1 / l.1).log10()))
        .collect();
    let cross = falling_crossing(&diff, 0.0, false);
    let within = |v: Option<f64>, c: f64, tol: f64| v.is_some_and(|v| (v - c).abs() <= tol);
    Verdict {
        id: 3,
        passed: within(rpg, 9.8, 1.0) && within(rpb, 14.0, 1.0) && within(gap, 1.5, 0.5) && within(cross, 7.5, 1.5) && secs <= 3600.0,
        detail: format!(
            "RPγ 0.1% at {} dBm (9.8±1), RPβ₂ at {} (14±1), FLPβ₂−LPγ {} dB (1.5±0.5), LPγ/FLPβ₂ crossover {} dBm (7.5±1.5), sweep {:.0} s this run (cached points reused)",
            fmt_opt(rpg),
            fmt_opt(rpb),
            fmt_opt(gap),
            fmt_opt(cross),
            secs
        ),
    }
}

fn criterion4(cband: &[ResultRow], oband: &[ResultRow]) -> Verdict {
    let ratio = |rows: &[ResultRow], tod: bool| {
        Some(nsd_of(rows, "rp-beta2", tod, 10.0)? / nsd_of(rows, "flp-beta2", tod, 10.0)?)
    };
    let (c, o) = (ratio(cband, true), ratio(oband, false));
    let near = |v: Option<f64>, t: f64| v.is_some_and(|v| v >= t / 2.0 && v <= t * 2.0);
    Verdict {
        id: 4,
        passed: near(c, 42.0) && near(o, 91.0),
        detail: format!("RPβ₂/FLPβ₂ at 10 dBm: C-band {} (42, ×2), O-band {} (91, ×2)", fmt_opt(c), fmt_opt(o)),
    }
}

fn criterion5(rows: &[ResultRow]) -> Verdict {
    let slope = |m: &str| loglog_slope(&curve(rows, m, "nsd_percent", false));
    let (rpb, flp, lpg) = (slope("rp-beta2"), slope("flp-beta2"), slope("lp-gamma"));
    let rpg: Vec<f64> = curve(rows, "rp-gamma", "nsd_percent", false).iter().map(|p| p.1).collect();
    let spread = rpg.iter().cloned().fold(0.0, f64::max) / rpg.iter().cloned().fold(f64::INFINITY, f64::min);
    let four = |s: f64| (3.5..=4.5).contains(&s);
    Verdict {
        id: 5,
        passed: four(rpb) && four(flp) && (1.5..=2.5).contains(&lpg) && spread <= 2.0,
        detail: format!("slopes RPβ₂ {rpb:.2}, FLPβ₂ {flp:.2} ([3.5,4.5]), LPγ {lpg:.2} ([1.5,2.5]); RPγ max/min {spread:.2} (<= 2)"),
    }
}

fn criterion6(rows: &[ResultRow]) -> Verdict {
    let low = [-4.0, -2.0, 0.0, 1.0];
    let floor = |m: &str, tod: bool| -> Vec<f64> { low.iter().filter_map(|&p| nsd_of(rows, m, tod, p)).collect() };
    let plateau = floor("rp-beta2", false);
    let mean = plateau.iter().sum::<f64>() / plateau.len() as f64;
    let flat = plateau.iter().all(|v| (v / mean).log10().abs() < 0.3);
    let rp_ok = flat && (4.6e-11 / 3.0..=4.6e-11 * 3.0).contains(&mean);
    let tod_floors: Vec<f64> = ["rp-beta2", "lp-gamma", "flp-beta2"]
        .iter()
        .map(|m| {
            let v = floor(m, true);
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    let tod_ok = tod_floors.iter().all(|&v| (1e-10..=1e-8).contains(&v));
    let agree: Vec<f64> = [12.0, 14.0, 16.0]
        .iter()
        .filter_map(|&p| Some(nsd_of(rows, "lp-gamma", true, p)? / nsd_of(rows, "lp-gamma", false, p)?))
        .collect();
    let agree_ok = agree.len() == 3 && agree.iter().all(|r| (1.0 / 1.5..=1.5).contains(r));
    Verdict {
        id: 6,
        passed: rp_ok && tod_ok && agree_ok,
        detail: format!(
            "no-TOD RPβ₂ floor {mean:.2e}% (4.6e-11, ×3, flat={flat}); TOD floors RPβ₂/LPγ/FLPβ₂ {:.1e}/{:.1e}/{:.1e}% (order 1e-9); LPγ TOD/no-TOD above 10 dBm {:?} (within 1.5)",
            tod_floors[0],
            tod_floors[1],
            tod_floors[2],
            agree.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn ber_at(rows: &[ResultRow], det: &str, power: f64) -> Option<(f64, f64)> {
    rows.iter()
        .find(|r| r.model == det && r.power_dbm == power && r.metric == "ber")
        .map(|r| (r.value, r.std_err))
}

/// Ratio a/b with its propagated standard error.
fn ratio(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let r = a.0 / b.0;
    (r, r * ((a.1 / a.0).powi(2) + (b.1 / b.0).powi(2)).sqrt())
}

fn criterion7(rows: &[ResultRow]) -> Result<Verdict> {
    let get = |d: &str, p: f64| ber_at(rows, d, p).ok_or_else(|| anyhow!("no BER for {d} at {p} dBm"));
    let (ssfm, flp, lp) = (get(&hb_name("ssfm"), 15.0)?, get(&hb_name("flp-beta2"), 15.0)?, get(&hb_name("lp-gamma"), 15.0)?);
    let (r_flp, r_lp) = (ratio(flp, ssfm), ratio(lp, ssfm));
    let order = flp.0 - lp.0 <= 2.0 * (flp.1.powi(2) + lp.1.powi(2)).sqrt();
    let lp_flp = ratio(lp, flp);
    let md = ratio(get(MIN_DISTANCE, 16.0)?, get(&hb_name("ssfm"), 16.0)?);
    Ok(Verdict {
        id: 7,
        passed: order && lp_flp.0 + 2.0 * lp_flp.1 >= 2.0 && md.0 + 2.0 * md.1 >= 5.0,
        detail: format!(
            "15 dBm: FLPβ₂/SSFM {:.2}±{:.2} <= LPγ/SSFM {:.2}±{:.2}; LPγ/FLPβ₂ {:.2}±{:.2} (>= 2); 16 dBm: min-dist/SSFM {:.1}±{:.1} (>= 5)",
            r_flp.0, r_flp.1, r_lp.0, r_lp.1, lp_flp.0, lp_flp.1, md.0, md.1
        ),
    })
}

/// Largest BER at which an RS(255, k) code still meets the post-FEC target.
fn ber_threshold(k: usize) -> Result<f64> {
    let code = RsCode::new(k)?;
    let (mut lo, mut hi) = (1e-8f64, 0.5f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if post_fec_ber(mid, &code)? <= POST_FEC_THRESHOLD {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// BER at which `air_th` equals `rate`.
fn air_th_threshold(rate: f64) -> f64 {
    let (mut lo, mut hi) = (1e-12f64, 0.5f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if air_th(mid) >= rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn criterion8(trace_dir: &Path, ber_rows: &[ResultRow]) -> Result<Verdict> {
    let mut parts = Vec::new();
    let mut passed = true;
    for (p, k) in [(1e-2, 223), (1e-3, 239)] {
        let code = RsCode::new(k)?;
        let o = bsc_rs_oracle(ErrorSource::Bsc(p), &code, 1_000_000, 8)?;
        let predicted = post_fec_ber(p, &code)?;
        let sig = (o.p_pos - predicted).abs() / o.std_err;
        passed &= sig <= 3.0;
        parts.push(format!("p={p:.0e} RS(255,{k}): {:.3e} vs {predicted:.3e} ({sig:.1}σ)", o.p_pos));
    }
    // the recorded SSFM-HB trace with the most errors below BER 2e-3
    let ssfm = hb_name("ssfm");
    let power = ber_rows
        .iter()
        .filter(|r| r.model == ssfm && r.metric == "ber" && r.value <= 2e-3)
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .map(|r| r.power_dbm)
        .ok_or_else(|| anyhow!("no SSFM-HB BER row usable for the fiber chain"))?;
    let path = trace_dir.join(format!("errors-p{power}.bin"));
    let trace = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let v = validate_chain(&trace, 1e-5, 9)?;
    passed &= v.sigmas() <= 3.0;
    parts.push(format!(
        "fiber chain at {power} dBm (p={:.2e}) RS(255,{}): {:.2e}±{:.1e} vs {:.2e} ({:.1}σ)",
        v.oracle.p_channel,
        v.code.k,
        v.oracle.p_pos,
        v.oracle.std_err,
        v.predicted,
        v.sigmas()
    ));
    Ok(Verdict { id: 8, passed, detail: parts.join("; ") })
}

fn criterion9(rows: &[ResultRow]) -> Result<Verdict> {
    let air = air_rows(rows)?;
    let dominates = air
        .iter()
        .filter(|r| r.metric == "air_th")
        .all(|th| air.iter().any(|rs| rs.metric == "air_rs" && rs.cell == th.cell && rs.model == th.model && th.value >= rs.value));
    let rate = 2.0 * 223.0 / 255.0;
    let (p223, p239, pth) = (ber_threshold(223)?, ber_threshold(239)?, air_th_threshold(rate));
    let ber_curve = |d: &str| curve(rows, d, "ber", true);
    let at = |d: &str, p: f64| crossing(&ber_curve(d), p, true);
    let ssfm = hb_name("ssfm");
    let x223 = at(&ssfm, p223);
    let gap239 = at(&hb_name("lp-gamma"), p239).zip(at(&hb_name("flp-beta2"), p239)).map(|(l, f)| f - l);
    let th_gap = at(&ssfm, pth).zip(x223).map(|(t, r)| t - r);
    let within = |v: Option<f64>, c: f64, tol: f64| v.is_some_and(|v| (v - c).abs() <= tol);
    Ok(Verdict {
        id: 9,
        passed: dominates && within(x223, 16.5, 1.0) && within(gap239, 0.4, 0.3) && within(th_gap, 1.9, 0.5),
        detail: format!(
            "air_th >= air_rs everywhere: {dominates}; SSFM-HB RS(255,223) rate (BER {p223:.2e}) up to {} dBm (16.5±1); FLPβ₂−LPγ at RS(255,239) (BER {p239:.2e}) {} dB (0.4±0.3); air_th−air_rs crossing {} dB (1.9±0.5)",
            fmt_opt(x223),
            fmt_opt(gap239),
            fmt_opt(th_gap)
        ),
    })
}

fn criterion10() -> Result<Verdict> {
    let start = Instant::now();
    let mut failed: Vec<String> = selftest::run()?.into_iter().filter(|c| !c.passed).map(|c| c.name.to_string()).collect();

    let t = Transceiver::new(512, 16)?;
    let x = t.transmit(&t.frame(3)?, 12.0)?.envelope;
    let lossless = FiberParams::ssmf(Band::C, 20e3);
    let lossless = FiberParams::new(0.0, lossless.beta2, lossless.beta3, lossless.gamma, lossless.length)?;
    let y = propagate(&x, &lossless, &SsfmConfig::new(200)?)?;
    if (energy(&y) / energy(&x) - 1.0).abs() > 1e-12 {
        failed.push("energy conservation".into());
    }

    // LP/FLP agree with RP to first order: the gap shrinks as θ²
    let base = FiberParams::ssmf(Band::C, 20e3);
    let cfg = ModelConfig::default();
    for (log_kind, rp_kind, on_gamma) in [
        (ModelKind::LpGamma, ModelKind::RpGamma, true),
        (ModelKind::FlpBeta2, ModelKind::RpBeta2, false),
    ] {
        let mut ratios = Vec::new();
        for s in [1.0, 0.5, 0.25] {
            let f = if on_gamma { base.with_gamma(base.gamma * s) } else { base.with_beta2(base.beta2 * s) };
            let a = propagate_model(&x, &f, log_kind, &cfg)?.waveform;
            let b = propagate_model(&x, &f, rp_kind, &cfg)?.waveform;
            ratios.push(nsd(&a, &b)?.sqrt() / (s * s));
        }
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        if hi / lo >= 2.5 {
            failed.push(format!("first-order consistency {log_kind}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Verdict {
        id: 10,
        passed: failed.is_empty() && secs < 60.0,
        detail: if failed.is_empty() {
            format!("Parseval/round trip, self-NSD, energy, O(θ²), tie-breaks, rate search in {secs:.1} s")
        } else {
            format!("failed: {}", failed.join(", "))
        },
    })
}

fn timed_nsd(name: &str, toml: &str, vs_beta2: bool) -> Result<(Vec<ResultRow>, f64)> {
    let start = Instant::now();
    let rows = cached(name, toml, if vs_beta2 { run_nsd_vs_beta2 } else { run_nsd_sweep })?;
    Ok((rows, start.elapsed().as_secs_f64()))
}

fn ber_rows() -> Result<Vec<ResultRow>> {
    let cfg = ExperimentConfig::from_toml(BER)?;
    let dir = cache_dir();
    let path = dir.join("ber.csv");
    let mut w = ResultWriter::open(&path)?;
    for p in run_ber_sweep(&cfg, &mut w, &mut log)? {
        if let Some(trace) = p.error_trace {
            std::fs::write(dir.join(format!("errors-p{}.bin", p.power_dbm)), trace)?;
        }
    }
    let hash = cfg.content_hash();
    Ok(read_rows(&path)?.into_iter().filter(|r| r.config_hash == hash).collect())
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let report = |v: Result<Verdict>, id: u32| -> bool {
        match v {
            Ok(v) => {
                println!("criterion {:>2} {}: {}", v.id, if v.passed { "PASS" } else { "FAIL" }, v.detail);
                v.passed
            }
            Err(e) => {
                println!("criterion {id:>2} FAIL: error {e:#}");
                false
            }
        }
    };
    let mut all = true;
    all &= report(criterion1(), 1);
    all &= report(criterion2(), 2);
    let cband = timed_nsd("cband", CBAND, false);
    let oband = timed_nsd("oband", OBAND, false);
    all &= report(cband.as_ref().map_err(|e| anyhow!("{e:#}")).map(|(r, s)| criterion3(r, *s)), 3);
    all &= report(
        match (&cband, &oband) {
            (Ok(c), Ok(o)) => Ok(criterion4(&c.0, &o.0)),
            (Err(e), _) | (_, Err(e)) => Err(anyhow!("{e:#}")),
        },
        4,
    );
    all &= report(timed_nsd("beta2", BETA2, true).map(|(r, _)| criterion5(&r)), 5);
    all &= report(oband.as_ref().map_err(|e| anyhow!("{e:#}")).map(|(r, _)| criterion6(r)), 6);
    let ber = ber_rows();
    all &= report(ber.as_ref().map_err(|e| anyhow!("{e:#}")).and_then(|r| criterion7(r)), 7);
    all &= report(ber.as_ref().map_err(|e| anyhow!("{e:#}")).and_then(|r| criterion8(&cache_dir(), r)), 8);
    all &= report(ber.as_ref().map_err(|e| anyhow!("{e:#}")).and_then(|r| criterion9(r)), 9);
    all &= report(criterion10(), 10);
    println!("acceptance finished in {:.0} s; all criteria passed: {all}", start.elapsed().as_secs_f64());
    if !all && std::env::var_os("PONSIM_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
