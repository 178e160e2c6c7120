//! Maximum-likelihood fitting of discrete regression families, each
//! exposing the cumulative probability pi(y; x) of the fitted outcome
//! distribution.
//!
//! Families: binary logit, cumulative link (logit/probit/cloglog),
//! adjacent-category logit, Poisson, quasi-Poisson (gamma-mixed Poisson
//! for its residual distribution), and hurdle Poisson (logistic zeros +
//! zero-truncated Poisson positives).
//!
//! Intercepts are implicit: scalar families get one automatically and
//! ordinal families get their cutpoint/per-category intercept vector, so
//! the `TermSet` of a model spec holds covariate terms only.

pub mod count;
mod families;
mod newton;

use serde::Serialize;

use crate::core::dataset::Dataset;
use crate::core::matrix::Matrix;
use crate::core::rng::RngStream;
use crate::core::special::ln_gamma;
use crate::core::terms::{CompiledTerms, TermSet};
use crate::error::{Error, Result};
use families::{
    cutpoints_from_psi, logistic, psi_from_cutpoints, AdjacentCategoryObjective,
    BinaryLogitObjective, CumulativeLinkObjective, PoissonObjective,
};
use newton::maximize;

pub use families::LinkKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    BinaryLogit,
    CumulativeLink(LinkKind),
    AdjacentCategoryLogit,
    Poisson,
    QuasiPoisson,
    HurdlePoisson,
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::BinaryLogit => "binary-logit".into(),
            Family::CumulativeLink(link) => format!("cumulative-{}", link.name()),
            Family::AdjacentCategoryLogit => "adjacent-category-logit".into(),
            Family::Poisson => "poisson".into(),
            Family::QuasiPoisson => "quasi-poisson".into(),
            Family::HurdlePoisson => "hurdle-poisson".into(),
        }
    }

    pub fn is_ordinal(&self) -> bool {
        matches!(
            self,
            Family::CumulativeLink(_) | Family::AdjacentCategoryLogit
        )
    }

    pub fn is_count(&self) -> bool {
        matches!(
            self,
            Family::Poisson | Family::QuasiPoisson | Family::HurdlePoisson
        )
    }
}

/// What to fit: family, covariate terms, and for ordinal families the
/// maximum category code J (outcomes live on 0..=J).
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub family: Family,
    pub terms: TermSet,
    pub num_categories: Option<u32>,
    /// Hurdle models carry a second term set for the zero component.
    pub zero_terms: Option<TermSet>,
}

impl ModelSpec {
    pub fn binary_logit(terms: TermSet) -> Self {
        ModelSpec {
            family: Family::BinaryLogit,
            terms,
            num_categories: None,
            zero_terms: None,
        }
    }

    pub fn poisson(terms: TermSet) -> Self {
        ModelSpec {
            family: Family::Poisson,
            terms,
            num_categories: None,
            zero_terms: None,
        }
    }

    pub fn quasi_poisson(terms: TermSet) -> Self {
        ModelSpec {
            family: Family::QuasiPoisson,
            terms,
            num_categories: None,
            zero_terms: None,
        }
    }

    pub fn adjacent_category(terms: TermSet, j_max: u32) -> Self {
        ModelSpec {
            family: Family::AdjacentCategoryLogit,
            terms,
            num_categories: Some(j_max),
            zero_terms: None,
        }
    }

    pub fn cumulative_link(link: LinkKind, terms: TermSet, j_max: u32) -> Self {
        ModelSpec {
            family: Family::CumulativeLink(link),
            terms,
            num_categories: Some(j_max),
            zero_terms: None,
        }
    }

    pub fn hurdle_poisson(zero_terms: TermSet, positive_terms: TermSet) -> Self {
        ModelSpec {
            family: Family::HurdlePoisson,
            terms: positive_terms,
            num_categories: None,
            zero_terms: Some(zero_terms),
        }
    }

    fn validate(&self, data: &Dataset) -> Result<u32> {
        if self.terms.has_intercept() || self.zero_terms.as_ref().is_some_and(|t| t.has_intercept())
        {
            return Err(Error::InvalidSpec(
                "model terms must not include an explicit intercept; one is implied".into(),
            ));
        }
        let max_y = data.y().iter().copied().max().unwrap_or(0);
        let j_max = match self.family {
            Family::BinaryLogit => {
                if max_y > 1 {
                    return Err(Error::InvalidData(format!(
                        "binary outcomes must be 0/1, found {max_y}"
                    )));
                }
                1
            }
            Family::CumulativeLink(_) | Family::AdjacentCategoryLogit => {
                let j = self.num_categories.ok_or_else(|| {
                    Error::InvalidSpec("ordinal families need the maximum category J".into())
                })?;
                if j < 2 {
                    return Err(Error::InvalidSpec(format!(
                        "ordinal families need J >= 2, got {j}"
                    )));
                }
                if max_y > j {
                    return Err(Error::OutcomeOutOfRange {
                        y: max_y as i64,
                        max: j as i64,
                    });
                }
                j
            }
            Family::Poisson | Family::QuasiPoisson | Family::HurdlePoisson => u32::MAX,
        };
        if self.family == Family::HurdlePoisson && self.zero_terms.is_none() {
            return Err(Error::InvalidSpec(
                "hurdle-poisson needs a zero-part term set".into(),
            ));
        }
        Ok(j_max)
    }
}

/// The logistic zero component of a fitted hurdle model.
#[derive(Debug, Clone)]
pub struct ZeroPart {
    pub design: CompiledTerms,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub vcov: Matrix,
}

impl ZeroPart {
    /// Pr(Y = 0 | x).
    pub fn prob_zero(&self, x: &[f64]) -> f64 {
        let mut row = Vec::with_capacity(self.design.n_cols());
        self.design.eval_row(x, &mut row);
        let eta = self.alpha + dot(&row, &self.beta);
        logistic(eta)
    }
}

/// A maximum-likelihood fit exposing cumulative probabilities.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub family: Family,
    design: CompiledTerms,
    /// Cutpoints (ordinal families) or a single intercept.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Variance-to-mean ratio; quasi-Poisson only.
    pub dispersion: Option<f64>,
    /// Set when the dispersion estimate fell below 1 and the Poisson CDF
    /// is used instead of the gamma-mixed one.
    pub dispersion_floored: bool,
    pub loglik: f64,
    /// Covariance of the packed (alpha, beta) parameters.
    pub vcov: Matrix,
    pub iterations: usize,
    pub converged: bool,
    /// L2 norm of the score at the estimate divided by n.
    pub grad_norm: f64,
    pub n: usize,
    pub j_max: Option<u32>,
    pub zero_part: Option<Box<ZeroPart>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterSummary {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub family: String,
    pub n: usize,
    pub parameters: Vec<ParameterSummary>,
    pub zero_parameters: Option<Vec<ParameterSummary>>,
    pub loglik: f64,
    pub aic: Option<f64>,
    pub dispersion: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl FittedModel {
    /// Assemble a model with known parameters and no fitting, for
    /// evaluating probabilities and residuals under a hypothesized model.
    /// `zero` supplies the hurdle zero part as (intercept, slopes).
    pub fn from_parameters(
        spec: &ModelSpec,
        data: &Dataset,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        zero: Option<(f64, Vec<f64>)>,
    ) -> Result<FittedModel> {
        let j_max = spec.validate(data)?;
        let design = CompiledTerms::compile(&spec.terms, data)?;
        if beta.len() != design.n_cols() {
            return Err(Error::InvalidSpec(format!(
                "{} slope coefficients for {} design columns",
                beta.len(),
                design.n_cols()
            )));
        }
        let expected_alpha = if spec.family.is_ordinal() {
            j_max as usize
        } else {
            1
        };
        if alpha.len() != expected_alpha {
            return Err(Error::InvalidSpec(format!(
                "{} intercept/cutpoint values, expected {expected_alpha}",
                alpha.len()
            )));
        }
        if let Family::CumulativeLink(_) = spec.family {
            if alpha.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidSpec(
                    "cutpoints must be strictly increasing".into(),
                ));
            }
        }
        let zero_part = match (spec.family, zero) {
            (Family::HurdlePoisson, Some((za, zb))) => {
                let zdesign = CompiledTerms::compile(spec.zero_terms.as_ref().unwrap(), data)?;
                if zb.len() != zdesign.n_cols() {
                    return Err(Error::InvalidSpec(
                        "zero-part slope count does not match its design".into(),
                    ));
                }
                let q = 1 + zb.len();
                Some(Box::new(ZeroPart {
                    design: zdesign,
                    alpha: za,
                    beta: zb,
                    vcov: Matrix::zeros(q, q),
                }))
            }
            (Family::HurdlePoisson, None) => {
                return Err(Error::InvalidSpec(
                    "hurdle-poisson needs zero-part parameters".into(),
                ))
            }
            (_, Some(_)) => {
                return Err(Error::InvalidSpec(
                    "zero-part parameters only apply to hurdle-poisson".into(),
                ))
            }
            (_, None) => None,
        };
        let q = alpha.len() + beta.len();
        Ok(FittedModel {
            family: spec.family,
            design,
            alpha,
            beta,
            dispersion: if spec.family == Family::QuasiPoisson {
                Some(1.0)
            } else {
                None
            },
            dispersion_floored: false,
            loglik: 0.0,
            vcov: Matrix::zeros(q, q),
            iterations: 0,
            converged: true,
            grad_norm: 0.0,
            n: data.n(),
            j_max: if spec.family.is_count() {
                None
            } else {
                Some(j_max)
            },
            zero_part,
        })
    }

    pub fn design(&self) -> &CompiledTerms {
        &self.design
    }

    pub fn term_labels(&self) -> &[String] {
        self.design.labels()
    }

    /// Number of freely estimated parameters (both hurdle parts included).
    pub fn n_parameters(&self) -> usize {
        let base = self.alpha.len() + self.beta.len();
        base + self.zero_part.as_ref().map_or(0, |z| 1 + z.beta.len())
    }

    /// Akaike information criterion; undefined for quasi-likelihood fits.
    pub fn aic(&self) -> Option<f64> {
        if self.family == Family::QuasiPoisson {
            None
        } else {
            Some(-2.0 * self.loglik + 2.0 * self.n_parameters() as f64)
        }
    }

    /// Linear predictor of the slope design (plus intercept when scalar).
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        let mut row = Vec::with_capacity(self.design.n_cols());
        self.design.eval_row(x, &mut row);
        let base = dot(&row, &self.beta);
        if self.family.is_ordinal() {
            base
        } else {
            self.alpha[0] + base
        }
    }

    /// Fitted mean for count and binary families.
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        match self.family {
            Family::Poisson | Family::QuasiPoisson => Ok(self.linear_predictor(x).exp()),
            Family::BinaryLogit => Ok(logistic(self.linear_predictor(x))),
            Family::HurdlePoisson => {
                let p0 = self.zero_part.as_ref().unwrap().prob_zero(x);
                let mu = self.linear_predictor(x).exp();
                Ok((1.0 - p0) * mu / -(-mu).exp_m1())
            }
            _ => Err(Error::UnsupportedFamily("mean", "binary and count")),
        }
    }

    /// Category probabilities for ordinal families.
    pub fn category_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        let j_max = self.j_max.unwrap_or(0) as usize;
        match self.family {
            Family::AdjacentCategoryLogit => Ok(families::adjacent_probs_from_eta(
                &self.alpha,
                self.linear_predictor(x),
            )),
            Family::CumulativeLink(link) => {
                let eta = self.linear_predictor(x);
                let mut probs = Vec::with_capacity(j_max + 1);
                let mut prev = 0.0;
                for j in 0..j_max {
                    let c = link.cdf(self.alpha[j] - eta);
                    probs.push((c - prev).max(0.0));
                    prev = c;
                }
                probs.push((1.0 - prev).max(0.0));
                Ok(probs)
            }
            _ => Err(Error::UnsupportedFamily("category_probs", "ordinal")),
        }
    }

    /// Cumulative probability pi(y; x) = Pr(Y <= y | x). `y = -1` gives 0
    /// by convention so pi(y-1; x) is always defined.
    pub fn cumulative_prob(&self, y: i64, x: &[f64]) -> Result<f64> {
        if y < 0 {
            return Ok(0.0);
        }
        match self.family {
            Family::BinaryLogit => {
                let p1 = logistic(self.linear_predictor(x));
                Ok(if y == 0 { 1.0 - p1 } else { 1.0 })
            }
            Family::AdjacentCategoryLogit | Family::CumulativeLink(_) => {
                let j_max = self.j_max.unwrap() as i64;
                if y > j_max {
                    return Err(Error::OutcomeOutOfRange { y, max: j_max });
                }
                if y == j_max {
                    return Ok(1.0);
                }
                if let Family::CumulativeLink(link) = self.family {
                    let eta = self.linear_predictor(x);
                    return Ok(link.cdf(self.alpha[y as usize] - eta));
                }
                let probs = self.category_probs(x)?;
                Ok(probs[..=y as usize].iter().sum::<f64>().min(1.0))
            }
            Family::Poisson => Ok(count::poisson_cdf(y, self.linear_predictor(x).exp())),
            Family::QuasiPoisson => {
                let mu = self.linear_predictor(x).exp();
                let d = self
                    .dispersion
                    .expect("quasi fit has a dispersion estimate");
                Ok(count::nb1_cdf(y, mu, d))
            }
            Family::HurdlePoisson => self.hurdle_cumulative(y, x),
        }
    }

    /// Hurdle CDF: mass p0 at zero from the logistic part, the remainder
    /// spread as a zero-truncated Poisson.
    pub fn hurdle_cumulative(&self, y: i64, x: &[f64]) -> Result<f64> {
        if self.family != Family::HurdlePoisson {
            return Err(Error::UnsupportedFamily(
                "hurdle_cumulative",
                "hurdle-poisson",
            ));
        }
        if y < 0 {
            return Ok(0.0);
        }
        let p0 = self.zero_part.as_ref().unwrap().prob_zero(x);
        if y == 0 {
            return Ok(p0);
        }
        let mu = self.linear_predictor(x).exp();
        Ok(p0 + (1.0 - p0) * count::truncated_poisson_cdf(y, mu))
    }

    /// Draw an outcome from the fitted distribution at `x`.
    pub fn simulate(&self, x: &[f64], rng: &mut RngStream) -> Result<u32> {
        match self.family {
            Family::BinaryLogit => Ok(rng.bernoulli(logistic(self.linear_predictor(x)))? as u32),
            Family::AdjacentCategoryLogit | Family::CumulativeLink(_) => {
                let probs = self.category_probs(x)?;
                Ok(rng.categorical(&probs)? as u32)
            }
            Family::Poisson => Ok(rng.poisson(self.linear_predictor(x).exp())? as u32),
            Family::QuasiPoisson => {
                let mu = self.linear_predictor(x).exp();
                Ok(count::nb1_sample(mu, self.dispersion.unwrap_or(1.0), rng)? as u32)
            }
            Family::HurdlePoisson => {
                let p0 = self.zero_part.as_ref().unwrap().prob_zero(x);
                if rng.bernoulli(p0)? {
                    Ok(0)
                } else {
                    let mu = self.linear_predictor(x).exp();
                    Ok(count::truncated_poisson_sample(mu, rng) as u32)
                }
            }
        }
    }

    pub fn summary(&self) -> ModelSummary {
        let mut names: Vec<String> = Vec::new();
        if self.family.is_ordinal() {
            for j in 0..self.alpha.len() {
                names.push(format!("alpha[{j}]"));
            }
        } else {
            names.push("(intercept)".into());
        }
        names.extend(self.design.labels().iter().cloned());
        let estimates: Vec<f64> = self.alpha.iter().chain(self.beta.iter()).copied().collect();
        let parameters = names
            .iter()
            .zip(&estimates)
            .enumerate()
            .map(|(i, (name, &estimate))| ParameterSummary {
                name: name.clone(),
                estimate,
                std_error: self.vcov[(i, i)].max(0.0).sqrt(),
            })
            .collect();
        let zero_parameters = self.zero_part.as_ref().map(|z| {
            let mut names = vec!["(intercept)".to_string()];
            names.extend(z.design.labels().iter().cloned());
            let estimates: Vec<f64> = std::iter::once(z.alpha)
                .chain(z.beta.iter().copied())
                .collect();
            names
                .iter()
                .zip(&estimates)
                .enumerate()
                .map(|(i, (name, &estimate))| ParameterSummary {
                    name: name.clone(),
                    estimate,
                    std_error: z.vcov[(i, i)].max(0.0).sqrt(),
                })
                .collect()
        });
        ModelSummary {
            family: self.family.name(),
            n: self.n,
            parameters,
            zero_parameters,
            loglik: self.loglik,
            aic: self.aic(),
            dispersion: self.dispersion,
            converged: self.converged,
            iterations: self.iterations,
            grad_norm: self.grad_norm,
        }
    }
}

/// Category probabilities (p_0, ..., p_J) of the adjacent-category model
/// log(p_j / p_{j+1}) = alpha_j + x beta; `x` is a design row aligned
/// with `beta`.
pub fn adjacent_category_probs(alpha: &[f64], beta: &[f64], x: &[f64]) -> Vec<f64> {
    families::adjacent_probs_from_eta(alpha, dot(x, beta))
}

/// Fit a model by Newton-Raphson with step-halving.
pub fn fit(spec: &ModelSpec, data: &Dataset) -> Result<FittedModel> {
    let j_max = spec.validate(data)?;
    let design_terms = CompiledTerms::compile(&spec.terms, data)?;
    let design = design_terms.matrix(data)?;
    rank_check_with_intercept(&design)?;

    match spec.family {
        Family::BinaryLogit => fit_binary(spec, data, design_terms, design),
        Family::Poisson => fit_poisson(spec, data, design_terms, design, false),
        Family::QuasiPoisson => fit_poisson(spec, data, design_terms, design, true),
        Family::AdjacentCategoryLogit => {
            fit_adjacent(spec, data, design_terms, design, j_max as usize)
        }
        Family::CumulativeLink(link) => {
            fit_cumulative(spec, data, design_terms, design, j_max as usize, link)
        }
        Family::HurdlePoisson => fit_hurdle(spec, data, design_terms, design),
    }
}

/// Rank check of the design augmented with the implicit intercept (the
/// cutpoint block absorbs the same direction for ordinal families).
fn rank_check_with_intercept(design: &Matrix) -> Result<()> {
    let n = design.rows();
    let q = design.cols();
    let mut aug = Matrix::zeros(n, q + 1);
    for i in 0..n {
        aug[(i, 0)] = 1.0;
        for j in 0..q {
            aug[(i, j + 1)] = design[(i, j)];
        }
    }
    aug.rank_check().map_err(|e| match e {
        // report in caller-facing column numbering (0 = first term)
        Error::RankDeficient(j) if j > 0 => Error::RankDeficient(j - 1),
        other => other,
    })
}

/// Per-parameter scale factors for the separation check: 1 for the
/// alpha block, the design column standard deviation for each slope.
fn separation_scales(n_alpha: usize, design: &Matrix) -> Vec<f64> {
    let n = design.rows() as f64;
    let mut scales = vec![1.0; n_alpha];
    for j in 0..design.cols() {
        let mean = (0..design.rows()).map(|i| design[(i, j)]).sum::<f64>() / n;
        let var = (0..design.rows())
            .map(|i| (design[(i, j)] - mean).powi(2))
            .sum::<f64>()
            / n;
        scales.push(var.sqrt().max(1e-12));
    }
    scales
}

fn fit_binary(
    spec: &ModelSpec,
    data: &Dataset,
    design_terms: CompiledTerms,
    design: Matrix,
) -> Result<FittedModel> {
    let y: Vec<f64> = data.y().iter().map(|&v| v as f64).collect();
    let obj = BinaryLogitObjective {
        design: &design,
        y: &y,
    };
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let p0 = mean.clamp(0.02, 0.98);
    let mut theta0 = vec![0.0; 1 + design.cols()];
    theta0[0] = (p0 / (1.0 - p0)).ln();
    let scales = separation_scales(1, &design);
    let res = maximize(&obj, theta0, data.n(), &scales)?;
    let vcov = neg_inverse(&res.hessian)?;
    Ok(FittedModel {
        family: spec.family,
        design: design_terms,
        alpha: vec![res.theta[0]],
        beta: res.theta[1..].to_vec(),
        dispersion: None,
        dispersion_floored: false,
        loglik: res.loglik,
        vcov,
        iterations: res.iterations,
        converged: res.converged,
        grad_norm: res.grad_norm_scaled,
        n: data.n(),
        j_max: Some(1),
        zero_part: None,
    })
}

fn fit_poisson(
    spec: &ModelSpec,
    data: &Dataset,
    design_terms: CompiledTerms,
    design: Matrix,
    quasi: bool,
) -> Result<FittedModel> {
    let y: Vec<f64> = data.y().iter().map(|&v| v as f64).collect();
    let obj = PoissonObjective {
        design: &design,
        y: &y,
        truncated: false,
    };
    let mean = (y.iter().sum::<f64>() / y.len() as f64).max(1e-4);
    let mut theta0 = vec![0.0; 1 + design.cols()];
    theta0[0] = mean.ln();
    let scales = separation_scales(1, &design);
    let res = maximize(&obj, theta0, data.n(), &scales)?;
    let mut vcov = neg_inverse(&res.hessian)?;

    let mut dispersion = None;
    let mut floored = false;
    if quasi {
        // Pearson chi^2 / (n - q) moment estimator
        let q = 1 + design.cols();
        let mut chi2 = 0.0;
        for i in 0..data.n() {
            let row = design.row(i);
            let eta = res.theta[0] + dot(row, &res.theta[1..]);
            let mu = eta.exp();
            chi2 += (y[i] - mu) * (y[i] - mu) / mu;
        }
        let d = chi2 / (data.n() - q) as f64;
        if d < 1.0 {
            floored = true;
        }
        dispersion = Some(d);
        let scale = d.max(0.0);
        for a in 0..vcov.rows() {
            for b in 0..vcov.cols() {
                vcov[(a, b)] *= scale;
            }
        }
    }

    Ok(FittedModel {
        family: spec.family,
        design: design_terms,
        alpha: vec![res.theta[0]],
        beta: res.theta[1..].to_vec(),
        dispersion,
        dispersion_floored: floored,
        loglik: res.loglik,
        vcov,
        iterations: res.iterations,
        converged: res.converged,
        grad_norm: res.grad_norm_scaled,
        n: data.n(),
        j_max: None,
        zero_part: None,
    })
}

fn fit_adjacent(
    spec: &ModelSpec,
    data: &Dataset,
    design_terms: CompiledTerms,
    design: Matrix,
    j_max: usize,
) -> Result<FittedModel> {
    let obj = AdjacentCategoryObjective {
        design: &design,
        y: data.y(),
        j_max,
    };
    // initialize the per-category intercepts from marginal frequencies
    let mut counts = vec![0.5f64; j_max + 1];
    for &yi in data.y() {
        counts[yi as usize] += 1.0;
    }
    let mut theta0 = vec![0.0; j_max + design.cols()];
    for j in 0..j_max {
        theta0[j] = (counts[j] / counts[j + 1]).ln();
    }
    let scales = separation_scales(j_max, &design);
    let res = maximize(&obj, theta0, data.n(), &scales)?;
    let vcov = neg_inverse(&res.hessian)?;
    Ok(FittedModel {
        family: spec.family,
        design: design_terms,
        alpha: res.theta[..j_max].to_vec(),
        beta: res.theta[j_max..].to_vec(),
        dispersion: None,
        dispersion_floored: false,
        loglik: res.loglik,
        vcov,
        iterations: res.iterations,
        converged: res.converged,
        grad_norm: res.grad_norm_scaled,
        n: data.n(),
        j_max: Some(j_max as u32),
        zero_part: None,
    })
}

fn fit_cumulative(
    spec: &ModelSpec,
    data: &Dataset,
    design_terms: CompiledTerms,
    design: Matrix,
    j_max: usize,
    link: LinkKind,
) -> Result<FittedModel> {
    let obj = CumulativeLinkObjective {
        design: &design,
        y: data.y(),
        j_max,
        link,
    };
    // cutpoints from smoothed cumulative frequencies
    let mut counts = vec![0.0f64; j_max + 1];
    for &yi in data.y() {
        counts[yi as usize] += 1.0;
    }
    let total = data.n() as f64 + 0.5 * (j_max as f64 + 1.0);
    let mut cum = 0.0;
    let mut c0 = Vec::with_capacity(j_max);
    for item in counts.iter().take(j_max) {
        cum += item + 0.5;
        c0.push(link.quantile(cum / total)?);
    }
    let mut theta0 = psi_from_cutpoints(&c0);
    theta0.extend(std::iter::repeat_n(0.0, design.cols()));
    let scales = separation_scales(j_max, &design);
    let res = maximize(&obj, theta0, data.n(), &scales)?;

    let psi = &res.theta[..j_max];
    let cut = cutpoints_from_psi(psi);
    let vcov_psi = neg_inverse(&res.hessian)?;
    // delta method back to (cutpoint, beta) space
    let q = j_max + design.cols();
    let mut jac = Matrix::zeros(q, q);
    for k in 0..j_max {
        jac[(k, 0)] = 1.0;
        for m in 1..=k {
            jac[(k, m)] = psi[m].exp();
        }
    }
    for a in j_max..q {
        jac[(a, a)] = 1.0;
    }
    let vcov = sandwich(&jac, &vcov_psi);

    Ok(FittedModel {
        family: spec.family,
        design: design_terms,
        alpha: cut,
        beta: res.theta[j_max..].to_vec(),
        dispersion: None,
        dispersion_floored: false,
        loglik: res.loglik,
        vcov,
        iterations: res.iterations,
        converged: res.converged,
        grad_norm: res.grad_norm_scaled,
        n: data.n(),
        j_max: Some(j_max as u32),
        zero_part: None,
    })
}

fn fit_hurdle(
    spec: &ModelSpec,
    data: &Dataset,
    design_terms: CompiledTerms,
    design: Matrix,
) -> Result<FittedModel> {
    let zero_terms = spec.zero_terms.as_ref().unwrap();
    let zero_compiled = CompiledTerms::compile(zero_terms, data)?;
    let zero_design = zero_compiled.matrix(data)?;
    rank_check_with_intercept(&zero_design)?;

    // zero part: logistic regression on 1{y == 0}
    let z: Vec<f64> = data
        .y()
        .iter()
        .map(|&v| if v == 0 { 1.0 } else { 0.0 })
        .collect();
    let zero_obj = BinaryLogitObjective {
        design: &zero_design,
        y: &z,
    };
    let zmean = (z.iter().sum::<f64>() / z.len() as f64).clamp(0.02, 0.98);
    let mut theta0 = vec![0.0; 1 + zero_design.cols()];
    theta0[0] = (zmean / (1.0 - zmean)).ln();
    let zero_scales = separation_scales(1, &zero_design);
    let zero_res = maximize(&zero_obj, theta0, data.n(), &zero_scales)?;
    let zero_vcov = neg_inverse(&zero_res.hessian)?;

    // positive part: zero-truncated Poisson on the y > 0 rows
    let pos_rows: Vec<usize> = (0..data.n()).filter(|&i| data.y()[i] > 0).collect();
    if pos_rows.is_empty() {
        return Err(Error::InvalidData(
            "hurdle-poisson needs at least one positive outcome".into(),
        ));
    }
    let mut pos_design = Matrix::zeros(pos_rows.len(), design.cols());
    let mut pos_y = Vec::with_capacity(pos_rows.len());
    for (r, &i) in pos_rows.iter().enumerate() {
        pos_y.push(data.y()[i] as f64);
        for j in 0..design.cols() {
            pos_design[(r, j)] = design[(i, j)];
        }
    }
    let pos_obj = PoissonObjective {
        design: &pos_design,
        y: &pos_y,
        truncated: true,
    };
    let pos_mean = pos_y.iter().sum::<f64>() / pos_y.len() as f64;
    let mut theta0 = vec![0.0; 1 + design.cols()];
    theta0[0] = pos_mean.max(1.01).ln();
    let pos_scales = separation_scales(1, &pos_design);
    let pos_res = maximize(&pos_obj, theta0, pos_rows.len(), &pos_scales)?;
    let pos_vcov = neg_inverse(&pos_res.hessian)?;

    let converged = zero_res.converged && pos_res.converged;
    Ok(FittedModel {
        family: spec.family,
        design: design_terms,
        alpha: vec![pos_res.theta[0]],
        beta: pos_res.theta[1..].to_vec(),
        dispersion: None,
        dispersion_floored: false,
        loglik: zero_res.loglik + pos_res.loglik,
        vcov: pos_vcov,
        iterations: zero_res.iterations + pos_res.iterations,
        converged,
        grad_norm: zero_res.grad_norm_scaled.max(pos_res.grad_norm_scaled),
        n: data.n(),
        j_max: None,
        zero_part: Some(Box::new(ZeroPart {
            design: zero_compiled,
            alpha: zero_res.theta[0],
            beta: zero_res.theta[1..].to_vec(),
            vcov: zero_vcov,
        })),
    })
}

fn neg_inverse(h: &Matrix) -> Result<Matrix> {
    let n = h.rows();
    let mut neg = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            neg[(i, j)] = -h[(i, j)];
        }
    }
    neg.inverse().ok_or_else(|| {
        Error::InvalidSpec("observed information is singular at the estimate".into())
    })
}

fn sandwich(j: &Matrix, v: &Matrix) -> Matrix {
    let n = j.rows();
    let mut jv = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += j[(a, k)] * v[(k, b)];
            }
            jv[(a, b)] = s;
        }
    }
    let mut out = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += jv[(a, k)] * j[(b, k)];
            }
            out[(a, b)] = s;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Poisson log pmf, used by the classical residuals and tests.
pub fn poisson_log_pmf(y: f64, mu: f64) -> f64 {
    y * mu.ln() - mu - ln_gamma(y + 1.0)
}
