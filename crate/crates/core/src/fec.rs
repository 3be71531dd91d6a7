//! Hard-decision Reed–Solomon layer: analytical post-FEC BER on a binary
//! symmetric channel, code-rate search, achievable information rates, and a
//! Monte-Carlo bounded-distance-decoding oracle.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const RS_N: usize = 255;
pub const RS_M: usize = 8;
pub const MAX_K: usize = 253;
pub const POST_FEC_THRESHOLD: f64 = 1e-12;

/// Shortening-free RS(255, k) over GF(2⁸).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsCode {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub m: usize,
}

impl RsCode {
    pub fn new(k: usize) -> Result<Self> {
        if !(1..=MAX_K).contains(&k) {
            return Err(Error::InvalidParameter(format!("RS(255, {k}): k must lie in [1, {MAX_K}]")));
        }
        Ok(Self { n: RS_N, k, t: (RS_N - k) / 2, m: RS_M })
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

fn ln_choose(n: usize, r: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
}

/// RS-symbol error probability `1 − (1 − p)^m`.
pub fn symbol_error_probability(p: f64, m: usize) -> f64 {
    -(m as f64 * (-p).ln_1p()).exp_m1()
}

/// Post-FEC BER of a bounded-distance decoder on a BSC with bit error
/// probability `p`:
///
/// `p_pos ≈ (1/n) Σ_{r=t+1}^{n} (r·p/p_s + 1/(2(t−1)!)) C(n,r) p_sʳ (1−p_s)^{n−r}`.
///
/// Summed in the log domain; clamped to `[0, 1]`.
pub fn post_fec_ber(p: f64, code: &RsCode) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("bit error probability {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let n = code.n;
    let ps = symbol_error_probability(p, code.m);
    let ln_ps = ps.ln();
    let ln_q = code.m as f64 * (-p).ln_1p(); // ln(1 − p_s)
    let miscorrection = 0.5 / factorial(code.t - 1);
    let mut terms = Vec::with_capacity(n - code.t);
    for r in code.t + 1..=n {
        let weight = p / ps * r as f64 + miscorrection;
        let tail = if r == n { 0.0 } else { (n - r) as f64 * ln_q };
        terms.push(weight.ln() + ln_choose(n, r) + r as f64 * ln_ps + tail);
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let sum: f64 = terms.iter().map(|v| (v - max).exp()).sum();
    Ok(((max + sum.ln()).exp() / n as f64).clamp(0.0, 1.0))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn monotone_in_k_self_test() {
    static CHECKED: OnceLock<()> = OnceLock::new();
    CHECKED.get_or_init(|| {
        for p in [1e-5, 1e-4, 1e-3, 5e-3, 1e-2, 3e-2] {
            let mut prev = 0.0;
            for k in 1..=MAX_K {
                let v = post_fec_ber(p, &RsCode::new(k).unwrap()).unwrap();
                assert!(v >= prev, "post-FEC BER not monotone in k at p={p}, k={k}");
                prev = v;
            }
        }
    });
}

/// Largest `k` with post-FEC BER below `threshold`, by binary search.
pub fn find_max_k(p: f64, threshold: f64) -> Result<Option<usize>> {
    monotone_in_k_self_test();
    let ok = |k: usize| -> Result<bool> { Ok(post_fec_ber(p, &RsCode::new(k)?)? < threshold) };
    if !ok(1)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (1, MAX_K);
    if ok(hi)? {
        return Ok(Some(hi));
    }
    // invariant: ok(lo), !ok(hi)
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// RS code rate in bits per QPSK symbol, `2k/255`; zero when no code works.
pub fn air_rs(k: Option<usize>) -> f64 {
    k.map_or(0.0, |k| 2.0 * k as f64 / RS_N as f64)
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Hard-decision bound `2(1 − H_b(p))` bits per QPSK symbol.
pub fn air_th(p: f64) -> f64 {
    2.0 * (1.0 - binary_entropy(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirResult {
    pub p: f64,
    pub p_pos: f64,
    pub k_star: Option<usize>,
    pub air_rs: f64,
    pub air_th: f64,
}

pub fn evaluate_air(p: f64) -> Result<AirResult> {
    let k_star = find_max_k(p, POST_FEC_THRESHOLD)?;
    let p_pos = match k_star {
        Some(k) => post_fec_ber(p, &RsCode::new(k)?)?,
        None => post_fec_ber(p, &RsCode::new(1)?)?,
    };
    Ok(AirResult { p, p_pos, k_star, air_rs: air_rs(k_star), air_th: air_th(p) })
}

/// Where channel bit errors come from.
#[derive(Debug, Clone, Copy)]
pub enum ErrorSource<'a> {
    /// Independent flips with probability `p`.
    Bsc(f64),
    /// Recorded error indicators (nonzero = error) in transmission order,
    /// e.g. from the fiber link and detector.
    Recorded(&'a [u8]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// Info-bit error rate after decoding.
    pub p_pos: f64,
    /// Standard error of `p_pos` from frame-to-frame variation.
    pub std_err: f64,
    /// Channel bit error rate actually seen.
    pub p_channel: f64,
    pub codewords: usize,
    pub failures: usize,
}

/// Codewords interleaved together.
pub const INTERLEAVER_CODEWORDS: usize = 64;

/// Monte-Carlo RS chain at the symbol-error level: random codewords, a
/// seeded uniform bit interleaver over frames of `INTERLEAVER_CODEWORDS`
/// codewords, channel errors, deinterleaving and bounded-distance decoding.
/// A codeword decodes iff at most `t` RS symbols are hit; otherwise its
/// channel errors pass through and, as in the analytical expression, a
/// miscorrection surrogate of `k·m / (2(t−1)!·n)` info bits is added.
///
/// `codewords` is rounded up to a whole number of frames.
pub fn bsc_rs_oracle(source: ErrorSource, code: &RsCode, codewords: usize, seed: u64) -> Result<OracleResult> {
    if codewords == 0 {
        return Err(Error::NoCodewords);
    }
    let frames = codewords.div_ceil(INTERLEAVER_CODEWORDS);
    let codewords = frames * INTERLEAVER_CODEWORDS;
    let cw_bits = code.n * code.m;
    let frame_bits = INTERLEAVER_CODEWORDS * cw_bits;
    let info_bits = code.k * code.m;
    if let ErrorSource::Bsc(p) = source {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("bit error probability {p}")));
        }
    }
    if let ErrorSource::Recorded(r) = source {
        if r.len() < frames * frame_bits {
            return Err(Error::InvalidParameter(format!(
                "{} recorded bits cannot cover {} codewords ({} bits)",
                r.len(),
                codewords,
                frames * frame_bits
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // channel position → codeword-domain position
    let mut deinterleave: Vec<u32> = (0..frame_bits as u32).collect();
    for i in (1..frame_bits).rev() {
        deinterleave.swap(i, rng.random_range(0..=i));
    }
    let surrogate = info_bits as f64 / (2.0 * factorial(code.t - 1) * code.n as f64);

    let geometric = match source {
        ErrorSource::Bsc(p) if p > 0.0 && p < 1.0 => Some(Geometric::new(p).expect("p in (0, 1)")),
        _ => None,
    };
    let mut positions: Vec<usize> = Vec::new();
    let mut symbol_hits = vec![0u16; INTERLEAVER_CODEWORDS * code.n];
    let mut info_errors = vec![0usize; INTERLEAVER_CODEWORDS];
    let (mut sum, mut sum_sq, mut channel_errors, mut failures) = (0.0, 0.0, 0usize, 0usize);

    for frame in 0..frames {
        positions.clear();
        match source {
            ErrorSource::Bsc(p) => {
                let mut frame_rng = ChaCha8Rng::seed_from_u64(seed);
                frame_rng.set_stream(frame as u64 + 1);
                if p >= 1.0 {
                    positions.extend(0..frame_bits);
                } else if let Some(g) = &geometric {
                    let mut pos = g.sample(&mut frame_rng) as usize;
                    while pos < frame_bits {
                        positions.push(pos);
                        pos += 1 + g.sample(&mut frame_rng) as usize;
                    }
                }
            }
            ErrorSource::Recorded(r) => {
                let chunk = &r[frame * frame_bits..(frame + 1) * frame_bits];
                positions.extend(chunk.iter().enumerate().filter(|(_, &e)| e != 0).map(|(i, _)| i));
            }
        }
        channel_errors += positions.len();
        symbol_hits.iter_mut().for_each(|h| *h = 0);
        info_errors.iter_mut().for_each(|e| *e = 0);
        let mut bit_errors = vec![0usize; INTERLEAVER_CODEWORDS];
        for &pos in &positions {
            let bit = deinterleave[pos] as usize;
            let (cw, offset) = (bit / cw_bits, bit % cw_bits);
            symbol_hits[cw * code.n + offset / code.m] += 1;
            bit_errors[cw] += 1;
            // systematic code: the first k symbols carry the information
            if offset < info_bits {
                info_errors[cw] += 1;
            }
        }
        let mut frame_errors = 0.0;
        for cw in 0..INTERLEAVER_CODEWORDS {
            let hit = symbol_hits[cw * code.n..(cw + 1) * code.n].iter().filter(|&&h| h > 0).count();
            if hit > code.t {
                failures += 1;
                frame_errors += info_errors[cw] as f64 + surrogate;
            }
        }
        let rate = frame_errors / (INTERLEAVER_CODEWORDS * info_bits) as f64;
        sum += rate;
        sum_sq += rate * rate;
    }
    let mean = sum / frames as f64;
    let var = if frames > 1 { (sum_sq / frames as f64 - mean * mean).max(0.0) * frames as f64 / (frames - 1) as f64 } else { 0.0 };
    Ok(OracleResult {
        p_pos: mean,
        std_err: (var / frames as f64).sqrt(),
        p_channel: channel_errors as f64 / (frames * frame_bits) as f64,
        codewords,
        failures,
    })
}
