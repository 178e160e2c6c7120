//! Deterministic random number streams and distribution samplers.
//!
//! A `RngStream` is a PCG64 (XSL-RR 128/64) generator keyed by a
//! `(seed, stream_id)` pair. Identical pairs replay identical sequences
//! bit for bit; distinct stream ids select distinct increments, so
//! parallel replications each own an independent stream instead of
//! sharing one.

use crate::core::normal::std_normal_quantile;
use crate::core::special::ln_gamma;
use crate::error::{Error, Result};

const PCG_MUL: u128 = 0x2360_ed05_1fc6_5da4_4385_df64_9fcc_f645;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn expand_u128(v: u64) -> u128 {
    let mut s = v;
    let hi = splitmix64(&mut s);
    let lo = splitmix64(&mut s);
    ((hi as u128) << 64) | lo as u128
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    state: u128,
    inc: u128,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let initstate = expand_u128(seed);
        let initseq = expand_u128(stream_id);
        let inc = (initseq << 1) | 1;
        let mut state: u128 = 0;
        state = state.wrapping_mul(PCG_MUL).wrapping_add(inc);
        state = state.wrapping_add(initstate);
        state = state.wrapping_mul(PCG_MUL).wrapping_add(inc);
        RngStream {
            seed,
            stream_id,
            state,
            inc,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream derived from this stream's identity; used to hand
    /// independent generators to parallel replications.
    pub fn split(&self, k: u64) -> RngStream {
        let mut s = self.stream_id ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        RngStream::new(self.seed, splitmix64(&mut s))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(PCG_MUL).wrapping_add(self.inc);
        let xored = ((self.state >> 64) as u64) ^ (self.state as u64);
        let rot = (self.state >> 122) as u32;
        xored.rotate_right(rot)
    }

    /// Uniform draw on [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on the open interval (0, 1); safe for quantile input.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via the quantile transform.
    pub fn normal(&mut self) -> f64 {
        std_normal_quantile(self.uniform_open()).expect("open uniform is in (0,1)")
    }

    pub fn normal_with(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.normal()
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("bernoulli p = {p}")));
        }
        Ok(self.uniform() < p)
    }

    /// Marsaglia-Tsang gamma sampler; `shape` > 0, `rate` > 0.
    pub fn gamma(&mut self, shape: f64, rate: f64) -> Result<f64> {
        if shape <= 0.0 || !shape.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma shape = {shape}")));
        }
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma rate = {rate}")));
        }
        if shape < 1.0 {
            let boost = self.uniform_open().powf(1.0 / shape);
            return Ok(self.gamma_shape_ge1(shape + 1.0) * boost / rate);
        }
        Ok(self.gamma_shape_ge1(shape) / rate)
    }

    fn gamma_shape_ge1(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform_open();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    /// Poisson sampler: inversion below mean 10, transformed rejection above.
    pub fn poisson(&mut self, mean: f64) -> Result<u64> {
        if mean < 0.0 || !mean.is_finite() {
            return Err(Error::InvalidParameter(format!("poisson mean = {mean}")));
        }
        if mean == 0.0 {
            return Ok(0);
        }
        if mean < 10.0 {
            let limit = (-mean).exp();
            let mut k = 0u64;
            let mut prod = self.uniform_open();
            while prod > limit {
                k += 1;
                prod *= self.uniform_open();
            }
            Ok(k)
        } else {
            Ok(self.poisson_ptrs(mean))
        }
    }

    // Hoermann's PTRS transformed-rejection sampler.
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let slam = mean.sqrt();
        let loglam = mean.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform_open();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            if (v * inv_alpha / (a / (us * us) + b)).ln() <= k * loglam - mean - ln_gamma(k + 1.0) {
                return k as u64;
            }
        }
    }

    /// Categorical draw over unnormalized non-negative weights.
    pub fn categorical(&mut self, probs: &[f64]) -> Result<usize> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("categorical: empty weights".into()));
        }
        let mut total = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "categorical weight {i} = {p}"
                )));
            }
            total += p;
        }
        if total <= 0.0 {
            return Err(Error::InvalidParameter(
                "categorical: zero total mass".into(),
            ));
        }
        let target = self.uniform() * total;
        let mut cum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            cum += p;
            if target < cum {
                return Ok(i);
            }
        }
        Ok(probs.len() - 1)
    }
}
