//! Per-family log-likelihoods, scores, and Hessians.
//!
//! Every objective works on a packed parameter vector
//! `theta = [alpha..., beta...]` against a fixed design matrix of slope
//! columns (no intercept column; intercepts and cutpoints are the alpha
//! block).

use crate::core::matrix::Matrix;
use crate::core::normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use crate::core::special::ln_gamma;
use crate::error::{Error, Result};
use crate::models::newton::Objective;

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

// ---------------------------------------------------------------------------
// binary logit
// ---------------------------------------------------------------------------

/// Bernoulli outcomes with logit link; theta = [intercept, beta...].
pub(crate) struct BinaryLogitObjective<'a> {
    pub design: &'a Matrix, // n x p slope columns
    pub y: &'a [f64],       // 0/1
}

impl BinaryLogitObjective<'_> {
    fn eta(&self, theta: &[f64], i: usize) -> f64 {
        let row = self.design.row(i);
        theta[0] + row.iter().zip(&theta[1..]).map(|(x, b)| x * b).sum::<f64>()
    }
}

impl Objective for BinaryLogitObjective<'_> {
    fn npar(&self) -> usize {
        1 + self.design.cols()
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.y.len() {
            let eta = self.eta(theta, i);
            ll += self.y[i] * eta - log1p_exp(eta);
        }
        ll
    }

    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>, Matrix) {
        let q = self.npar();
        let mut ll = 0.0;
        let mut grad = vec![0.0; q];
        let mut hess = Matrix::zeros(q, q);
        let mut xrow = vec![0.0; q];
        for i in 0..self.y.len() {
            let eta = self.eta(theta, i);
            let p = logistic(eta);
            ll += self.y[i] * eta - log1p_exp(eta);
            let resid = self.y[i] - p;
            let w = p * (1.0 - p);
            xrow[0] = 1.0;
            xrow[1..].copy_from_slice(self.design.row(i));
            for a in 0..q {
                grad[a] += resid * xrow[a];
                for b in a..q {
                    hess[(a, b)] -= w * xrow[a] * xrow[b];
                }
            }
        }
        symmetrize(&mut hess);
        (ll, grad, hess)
    }
}

// ---------------------------------------------------------------------------
// Poisson (and zero-truncated Poisson)
// ---------------------------------------------------------------------------

/// Poisson log link; theta = [intercept, beta...]. With `truncated` the
/// outcomes are conditioned on being positive.
pub(crate) struct PoissonObjective<'a> {
    pub design: &'a Matrix,
    pub y: &'a [f64],
    pub truncated: bool,
}

impl PoissonObjective<'_> {
    fn eta(&self, theta: &[f64], i: usize) -> f64 {
        let row = self.design.row(i);
        theta[0] + row.iter().zip(&theta[1..]).map(|(x, b)| x * b).sum::<f64>()
    }
}

impl Objective for PoissonObjective<'_> {
    fn npar(&self) -> usize {
        1 + self.design.cols()
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.y.len() {
            let eta = self.eta(theta, i);
            if eta > 690.0 {
                return f64::NEG_INFINITY;
            }
            let mu = eta.exp();
            ll += self.y[i] * eta - mu - ln_gamma(self.y[i] + 1.0);
            if self.truncated {
                // subtract log(1 - exp(-mu))
                let log_tail = (-(-mu).exp_m1()).ln();
                ll -= log_tail;
            }
        }
        ll
    }

    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>, Matrix) {
        let q = self.npar();
        let mut ll = 0.0;
        let mut grad = vec![0.0; q];
        let mut hess = Matrix::zeros(q, q);
        let mut xrow = vec![0.0; q];
        for i in 0..self.y.len() {
            let eta = self.eta(theta, i);
            let mu = eta.exp();
            ll += self.y[i] * eta - mu - ln_gamma(self.y[i] + 1.0);
            let mut score = self.y[i] - mu;
            let mut w = mu;
            if self.truncated {
                // s(mu) = mu e^{-mu} / (1 - e^{-mu})
                let one_m_e = -(-mu).exp_m1();
                ll -= one_m_e.ln();
                let e = (-mu).exp();
                let s = mu * e / one_m_e;
                score -= s;
                // d s / d eta = mu * s' where s' in mu
                let sp = e * ((1.0 - mu) / one_m_e - mu * e / (one_m_e * one_m_e));
                w += mu * sp;
            }
            xrow[0] = 1.0;
            xrow[1..].copy_from_slice(self.design.row(i));
            for a in 0..q {
                grad[a] += score * xrow[a];
                for b in a..q {
                    hess[(a, b)] -= w * xrow[a] * xrow[b];
                }
            }
        }
        symmetrize(&mut hess);
        (ll, grad, hess)
    }
}

// ---------------------------------------------------------------------------
// adjacent-category logit
// ---------------------------------------------------------------------------

/// Adjacent-category logit for categories 0..=J with shared slopes:
/// log(p_j / p_{j+1}) = alpha_j + x beta. theta = [alpha_0..alpha_{J-1},
/// beta...].
pub(crate) struct AdjacentCategoryObjective<'a> {
    pub design: &'a Matrix,
    pub y: &'a [u32],
    pub j_max: usize,
}

/// Category probabilities (p_0, ..., p_J) for cutpoint-to-next log odds
/// `alpha` and linear predictor `eta`, normalized by log-sum-exp.
pub(crate) fn adjacent_probs_from_eta(alpha: &[f64], eta: f64) -> Vec<f64> {
    let j_max = alpha.len();
    // log p_j (unnormalized) = sum_{k=j}^{J-1} alpha_k + (J - j) eta
    let mut logits = vec![0.0; j_max + 1];
    let mut acc = 0.0;
    for j in (0..j_max).rev() {
        acc += alpha[j];
        logits[j] = acc + (j_max - j) as f64 * eta;
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    probs
}

impl AdjacentCategoryObjective<'_> {
    fn eta(&self, theta: &[f64], i: usize) -> f64 {
        let beta = &theta[self.j_max..];
        self.design
            .row(i)
            .iter()
            .zip(beta)
            .map(|(x, b)| x * b)
            .sum()
    }
}

impl Objective for AdjacentCategoryObjective<'_> {
    fn npar(&self) -> usize {
        self.j_max + self.design.cols()
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        let alpha = &theta[..self.j_max];
        let mut ll = 0.0;
        for i in 0..self.y.len() {
            let probs = adjacent_probs_from_eta(alpha, self.eta(theta, i));
            ll += probs[self.y[i] as usize].max(1e-300).ln();
        }
        ll
    }

    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>, Matrix) {
        let j_max = self.j_max;
        let p_cols = self.design.cols();
        let q = j_max + p_cols;
        let alpha = &theta[..j_max];
        let mut ll = 0.0;
        let mut grad = vec![0.0; q];
        let mut hess = Matrix::zeros(q, q);
        let w: Vec<f64> = (0..=j_max).map(|j| (j_max - j) as f64).collect();
        for i in 0..self.y.len() {
            let yi = self.y[i] as usize;
            let probs = adjacent_probs_from_eta(alpha, self.eta(theta, i));
            ll += probs[yi].max(1e-300).ln();
            // cumulative probabilities pi(m) = Pr(Y <= m)
            let mut cum = vec![0.0; j_max + 1];
            let mut acc = 0.0;
            for (m, &p) in probs.iter().enumerate() {
                acc += p;
                cum[m] = acc;
            }
            let e_w: f64 = probs.iter().zip(&w).map(|(p, w)| p * w).sum();
            let e_w2: f64 = probs.iter().zip(&w).map(|(p, w)| p * w * w).sum();
            let var_w = e_w2 - e_w * e_w;
            // E[ 1{Y<=m} (J - Y) ]
            let mut e_ind_w = vec![0.0; j_max];
            let mut acc_w = 0.0;
            for m in 0..j_max {
                acc_w += probs[m] * w[m];
                e_ind_w[m] = acc_w;
            }
            let xrow = self.design.row(i);
            // alpha block
            for m in 0..j_max {
                let ind = if yi <= m { 1.0 } else { 0.0 };
                grad[m] += ind - cum[m];
                for m2 in m..j_max {
                    // Cov(1{Y<=m}, 1{Y<=m2}) = pi(min) - pi(m) pi(m2)
                    let cov = cum[m.min(m2)] - cum[m] * cum[m2];
                    hess[(m, m2)] -= cov;
                }
                // alpha-beta cross: Cov(1{Y<=m}, (J-Y)) x
                let cov_aw = e_ind_w[m] - cum[m] * e_w;
                for (b, xb) in xrow.iter().enumerate() {
                    hess[(m, j_max + b)] -= cov_aw * xb;
                }
            }
            // beta block
            let resid_w = w[yi] - e_w;
            for (a, xa) in xrow.iter().enumerate() {
                grad[j_max + a] += resid_w * xa;
                for (b, xb) in xrow.iter().enumerate().skip(a) {
                    hess[(j_max + a, j_max + b)] -= var_w * xa * xb;
                }
            }
        }
        symmetrize(&mut hess);
        (ll, grad, hess)
    }
}

// ---------------------------------------------------------------------------
// cumulative link
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Logit,
    Probit,
    Cloglog,
}

impl LinkKind {
    /// CDF of the latent error distribution.
    pub fn cdf(self, z: f64) -> f64 {
        match self {
            LinkKind::Logit => logistic(z),
            LinkKind::Probit => std_normal_cdf(z),
            LinkKind::Cloglog => {
                if z > 690.0 {
                    1.0
                } else {
                    -(-z.exp()).exp_m1()
                }
            }
        }
    }

    /// Density of the latent error distribution.
    pub fn pdf(self, z: f64) -> f64 {
        match self {
            LinkKind::Logit => {
                let p = logistic(z);
                p * (1.0 - p)
            }
            LinkKind::Probit => std_normal_pdf(z),
            LinkKind::Cloglog => {
                if z > 690.0 {
                    0.0
                } else {
                    (z - z.exp()).exp()
                }
            }
        }
    }

    /// Derivative of the density.
    fn pdf_deriv(self, z: f64) -> f64 {
        match self {
            LinkKind::Logit => {
                let p = logistic(z);
                p * (1.0 - p) * (1.0 - 2.0 * p)
            }
            LinkKind::Probit => -z * std_normal_pdf(z),
            LinkKind::Cloglog => {
                if z > 690.0 {
                    0.0
                } else {
                    (z - z.exp()).exp() * (1.0 - z.exp())
                }
            }
        }
    }

    /// Quantile of the latent error distribution.
    pub fn quantile(self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::QuantileDomain(p));
        }
        Ok(match self {
            LinkKind::Logit => (p / (1.0 - p)).ln(),
            LinkKind::Probit => std_normal_quantile(p)?,
            LinkKind::Cloglog => (-(1.0 - p).ln()).ln(),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Logit => "logit",
            LinkKind::Probit => "probit",
            LinkKind::Cloglog => "cloglog",
        }
    }
}

/// Cumulative link model Pr(Y <= j) = G(c_j - x beta) for categories
/// 0..=J. Optimized over psi = [c_0, log gaps...] so the cutpoints stay
/// ordered; theta = [psi..., beta...].
pub(crate) struct CumulativeLinkObjective<'a> {
    pub design: &'a Matrix,
    pub y: &'a [u32],
    pub j_max: usize, // J: categories 0..=J, J cutpoints
    pub link: LinkKind,
}

pub(crate) fn cutpoints_from_psi(psi: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(psi.len());
    let mut acc = psi[0];
    c.push(acc);
    for &lg in &psi[1..] {
        acc += lg.exp();
        c.push(acc);
    }
    c
}

pub(crate) fn psi_from_cutpoints(c: &[f64]) -> Vec<f64> {
    let mut psi = Vec::with_capacity(c.len());
    psi.push(c[0]);
    for k in 1..c.len() {
        psi.push((c[k] - c[k - 1]).max(1e-8).ln());
    }
    psi
}

impl CumulativeLinkObjective<'_> {
    fn eta(&self, theta: &[f64], i: usize) -> f64 {
        let beta = &theta[self.j_max..];
        self.design
            .row(i)
            .iter()
            .zip(beta)
            .map(|(x, b)| x * b)
            .sum()
    }
}

impl Objective for CumulativeLinkObjective<'_> {
    fn npar(&self) -> usize {
        self.j_max + self.design.cols()
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        let c = cutpoints_from_psi(&theta[..self.j_max]);
        let mut ll = 0.0;
        for i in 0..self.y.len() {
            let eta = self.eta(theta, i);
            let yi = self.y[i] as usize;
            let upper = if yi < self.j_max {
                self.link.cdf(c[yi] - eta)
            } else {
                1.0
            };
            let lower = if yi > 0 {
                self.link.cdf(c[yi - 1] - eta)
            } else {
                0.0
            };
            ll += (upper - lower).max(1e-300).ln();
        }
        ll
    }

    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>, Matrix) {
        let j_max = self.j_max;
        let p_cols = self.design.cols();
        let q = j_max + p_cols;
        let psi = &theta[..j_max];
        let c = cutpoints_from_psi(psi);
        let mut ll = 0.0;
        // gradient and Hessian in (c, beta) space first
        let mut grad_c = vec![0.0; q];
        let mut hess_c = Matrix::zeros(q, q);
        for i in 0..self.y.len() {
            let eta = self.eta(theta, i);
            let yi = self.y[i] as usize;
            let (gu, gl, pu, pl, du, dl);
            if yi < j_max {
                let u = c[yi] - eta;
                pu = self.link.cdf(u);
                gu = self.link.pdf(u);
                du = self.link.pdf_deriv(u);
            } else {
                pu = 1.0;
                gu = 0.0;
                du = 0.0;
            }
            if yi > 0 {
                let l = c[yi - 1] - eta;
                pl = self.link.cdf(l);
                gl = self.link.pdf(l);
                dl = self.link.pdf_deriv(l);
            } else {
                pl = 0.0;
                gl = 0.0;
                dl = 0.0;
            }
            let prob = (pu - pl).max(1e-300);
            ll += prob.ln();
            let su = gu / prob;
            let sl = -gl / prob;
            let huu = du / prob - su * su;
            let hll = -dl / prob - sl * sl;
            let hul = -su * sl; // = gu*gl/prob^2
            let xrow = self.design.row(i);
            if yi < j_max {
                grad_c[yi] += su;
                hess_c[(yi, yi)] += huu;
            }
            if yi > 0 {
                grad_c[yi - 1] += sl;
                hess_c[(yi - 1, yi - 1)] += hll;
            }
            if yi < j_max && yi > 0 {
                let (a, b) = (yi - 1, yi);
                hess_c[(a, b)] += hul;
                hess_c[(b, a)] += hul;
            }
            let s_eta = -(su + sl);
            let h_eta = huu + 2.0 * hul + hll;
            for (a, xa) in xrow.iter().enumerate() {
                grad_c[j_max + a] += s_eta * xa;
                for (b, xb) in xrow.iter().enumerate() {
                    if b >= a {
                        hess_c[(j_max + a, j_max + b)] += h_eta * xa * xb;
                    }
                }
                if yi < j_max {
                    hess_c[(yi, j_max + a)] += -(huu + hul) * xa;
                    hess_c[(j_max + a, yi)] = hess_c[(yi, j_max + a)];
                }
                if yi > 0 {
                    hess_c[(yi - 1, j_max + a)] += -(hll + hul) * xa;
                    hess_c[(j_max + a, yi - 1)] = hess_c[(yi - 1, j_max + a)];
                }
            }
        }
        for a in 0..p_cols {
            for b in 0..a {
                hess_c[(j_max + a, j_max + b)] = hess_c[(j_max + b, j_max + a)];
            }
        }
        // chain rule to psi space: c_k = psi_0 + sum_{m=1..k} exp(psi_m)
        let jac = |m: usize, k: usize| -> f64 {
            // d c_k / d psi_m
            if m == 0 {
                1.0
            } else if m <= k {
                psi[m].exp()
            } else {
                0.0
            }
        };
        let mut grad = vec![0.0; q];
        let mut hess = Matrix::zeros(q, q);
        for m in 0..j_max {
            let mut g = 0.0;
            for k in 0..j_max {
                g += jac(m, k) * grad_c[k];
            }
            grad[m] = g;
        }
        grad[j_max..q].copy_from_slice(&grad_c[j_max..q]);
        for m1 in 0..j_max {
            for m2 in 0..j_max {
                let mut h = 0.0;
                for k1 in 0..j_max {
                    let j1 = jac(m1, k1);
                    if j1 == 0.0 {
                        continue;
                    }
                    for k2 in 0..j_max {
                        h += j1 * jac(m2, k2) * hess_c[(k1, k2)];
                    }
                }
                hess[(m1, m2)] = h;
            }
            // second-derivative correction: d^2 c_k / d psi_m^2 = exp(psi_m)
            if m1 >= 1 {
                let tail: f64 = (m1..j_max).map(|k| grad_c[k]).sum();
                hess[(m1, m1)] += psi[m1].exp() * tail;
            }
        }
        for m in 0..j_max {
            for a in 0..p_cols {
                let mut h = 0.0;
                for k in 0..j_max {
                    h += jac(m, k) * hess_c[(k, j_max + a)];
                }
                hess[(m, j_max + a)] = h;
                hess[(j_max + a, m)] = h;
            }
        }
        for a in 0..p_cols {
            for b in 0..p_cols {
                hess[(j_max + a, j_max + b)] = hess_c[(j_max + a, j_max + b)];
            }
        }
        (ll, grad, hess)
    }
}

pub(crate) fn symmetrize(h: &mut Matrix) {
    let n = h.rows();
    for a in 0..n {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
}
