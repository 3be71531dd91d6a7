//! Quick invariant checks runnable from the command line.

use anyhow::Result;
use num_complex::Complex64;
use ponsim::detection::{train_hb, train_pw, GridSpec};
use ponsim::fec::{find_max_k, post_fec_ber, RsCode, MAX_K, POST_FEC_THRESHOLD};
use ponsim::fiber::Band;
use ponsim::models::{propagate_model, ModelConfig, ModelKind};
use ponsim::signal::{energy, forward_transform, inverse_transform, nsd};
use ponsim::ssfm::{convergence_check, SsfmConfig};
use ponsim::transceiver::{LinkConfig, Transceiver};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn run() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let t = Transceiver::new(512, 16)?;
    let frame = t.frame(1)?;
    let tx = t.transmit(&frame, 10.0)?;
    let x = &tx.envelope;

    let back = inverse_transform(&forward_transform(x));
    let rt = nsd(&back, x)?;
    let parseval = (forward_transform(x).energy() / energy(x) - 1.0).abs();
    out.push(check("fourier round trip and Parseval", rt < 1e-28 && parseval < 1e-12, format!("nsd={rt:.1e} parseval={parseval:.1e}")));

    let span = LinkConfig::pon(Band::C, false).span1;
    let self_nsd = convergence_check(x, &span, &SsfmConfig::new(500)?)?;
    out.push(check("split-step self-NSD at 10 dBm", self_nsd <= 1e-8, format!("{self_nsd:.2e}")));

    let mut worst: f64 = 0.0;
    for kind in ModelKind::PERTURBATIVE {
        let f = if kind.expands_gamma() { span.with_gamma(0.0) } else { span.with_beta2(0.0) };
        let exact = if kind.expands_gamma() { ModelKind::DispersionOnly } else { ModelKind::Nlpn };
        let a = propagate_model(x, &f, kind, &ModelConfig::default())?.waveform;
        let b = propagate_model(x, &f, exact, &ModelConfig::default())?.waveform;
        worst = worst.max(100.0 * nsd(&a, &b)?);
    }
    out.push(check("limit reductions (NSD %)", worst <= 1e-10, format!("{worst:.1e}")));

    let c = &t.constellation;
    let hb = train_hb(&[Complex64::new(0.0, 0.0); 2], &[2, 1], GridSpec::default())?;
    let pw = train_pw(&[c.points[0], c.points[3]], &[3, 0], f64::INFINITY)?;
    let ties = hb.decide(Complex64::new(0.0, 0.0)) == 1 && pw.decide(Complex64::new(0.9, 0.0)) == 0;
    out.push(check("detector tie-breaks", ties, String::new()));

    let mut agree = true;
    for i in 0..20 {
        let p = 10f64.powf(-6.0 + 5.3 * i as f64 / 19.0);
        let scan = (1..=MAX_K).rev().find(|&k| post_fec_ber(p, &RsCode::new(k).unwrap()).unwrap() < POST_FEC_THRESHOLD);
        agree &= find_max_k(p, POST_FEC_THRESHOLD)? == scan;
    }
    out.push(check("rate search equals exhaustive scan", agree, String::new()));
    Ok(out)
}
