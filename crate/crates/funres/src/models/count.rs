//! Count-distribution CDFs and samplers shared by the Poisson-family
//! models and the scenario generators.

use crate::core::rng::RngStream;
use crate::core::special::{beta_reg, gamma_q};
use crate::error::Result;

/// Poisson CDF Pr(Y <= y) via the regularized upper incomplete gamma.
pub fn poisson_cdf(y: i64, mu: f64) -> f64 {
    if y < 0 {
        return 0.0;
    }
    if mu <= 0.0 {
        return 1.0;
    }
    gamma_q(y as f64 + 1.0, mu)
}

/// Zero-truncated Poisson CDF Pr(Y <= y | Y >= 1).
pub fn truncated_poisson_cdf(y: i64, mu: f64) -> f64 {
    if y < 1 {
        return 0.0;
    }
    let p0 = (-mu).exp();
    let denom = -(-mu).exp_m1(); // 1 - e^{-mu}
    if denom <= 0.0 {
        // mu == 0 is degenerate; all conditional mass collapses at 1
        return 1.0;
    }
    ((poisson_cdf(y, mu) - p0) / denom).clamp(0.0, 1.0)
}

/// Inverse-CDF draw from the zero-truncated Poisson.
pub fn truncated_poisson_sample(mu: f64, rng: &mut RngStream) -> u64 {
    let p0 = (-mu).exp();
    let u = p0 + rng.uniform() * -(-mu).exp_m1();
    // walk the Poisson CDF starting from k = 1
    let mut k: u64 = 1;
    let mut term = p0 * mu; // P(Y = 1)
    let mut cum = p0 + term;
    let cap = (mu + 12.0 * mu.sqrt() + 60.0) as u64;
    while cum < u && k < cap {
        k += 1;
        term *= mu / k as f64;
        cum += term;
    }
    k
}

/// Gamma-mixed Poisson CDF with mean `mu` and variance-to-mean ratio
/// `dispersion` (NB1). Reduces to the Poisson CDF at dispersion <= 1.
pub fn nb1_cdf(y: i64, mu: f64, dispersion: f64) -> f64 {
    if y < 0 {
        return 0.0;
    }
    if mu <= 0.0 {
        return 1.0;
    }
    if dispersion <= 1.0 {
        return poisson_cdf(y, mu);
    }
    let phi = 1.0 / (dispersion - 1.0);
    let size = mu * phi;
    let p = phi / (1.0 + phi);
    beta_reg(size, y as f64 + 1.0, p)
}

/// Draw from the gamma-mixed Poisson: lambda ~ Gamma(mu*phi, phi),
/// Y ~ Poisson(lambda).
pub fn nb1_sample(mu: f64, dispersion: f64, rng: &mut RngStream) -> Result<u64> {
    if mu <= 0.0 {
        return Ok(0);
    }
    if dispersion <= 1.0 {
        return rng.poisson(mu);
    }
    let phi = 1.0 / (dispersion - 1.0);
    let lambda = rng.gamma(mu * phi, phi)?;
    rng.poisson(lambda)
}
