//! Marginal likelihoods, Bayes factors and posterior model probabilities.
//!
//! Two testbeds are covered:
//!
//! * a normal mean with known variance, point null `θ = θ₀` against
//!   `θ ~ N(θ₀, σ²)`, summarised by `(n, x̄)`;
//! * Poisson against Geometric counts sharing a mean λ with the improper
//!   prior `π(λ) = 1/λ`.
//!
//! For the second testbed two Bayes factors are exposed. `log_bf12_shared_improper`
//! is the ratio of the two marginals obtained by integrating each likelihood
//! against `1/λ`. `log_bf12_printed` evaluates the closed form
//! `n^S Π x_i! Γ(n+2+S) / Γ(n+2)` as commonly quoted for this comparison; it
//! does not equal the ratio of the integrated marginals and carries its own
//! method label so the two are never confused.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{CountDataset, CountFamily, DistributionError};
use crate::quadrature::{integrate_log, QuadratureConfig, QuadratureError};
use crate::special::{log_gamma_unchecked, log_sum_exp};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("improper marginal likelihood: all counts are zero (S = 0), so ∫ λ^(S-1) ... dλ diverges at λ = 0 under the 1/λ prior")]
    ImproperEvidence,
    #[error("quadrature: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("invalid model weights: {0}")]
    InvalidWeights(&'static str),
    #[error("all log evidences are -inf or the inputs are not finite")]
    Degenerate,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("invalid normal summary: {0}")]
    InvalidSummary(&'static str),
}

impl EvidenceError {
    /// Whether the failure is a modelling degeneracy (as opposed to a
    /// numerical accuracy failure).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            EvidenceError::ImproperEvidence
                | EvidenceError::Degenerate
                | EvidenceError::Quadrature(QuadratureError::NonIntegrable { .. })
        )
    }
}

/// How a log evidence or log Bayes factor was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    PrintedFormula,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::PrintedFormula => "printed_formula",
        }
    }
}

/// Sufficient statistics for the normal point-null testbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSummary {
    pub n: u64,
    pub xbar: f64,
    pub theta0: f64,
    pub sigma: f64,
}

impl NormalSummary {
    /// Summary with `θ₀ = 0` and `σ = 1`.
    pub fn standard(n: u64, xbar: f64) -> Result<Self, EvidenceError> {
        Self::new(n, xbar, 0.0, 1.0)
    }

    pub fn new(n: u64, xbar: f64, theta0: f64, sigma: f64) -> Result<Self, EvidenceError> {
        if n == 0 {
            return Err(EvidenceError::InvalidSummary("n must be at least 1"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(EvidenceError::InvalidSummary("sigma must be positive"));
        }
        if !xbar.is_finite() || !theta0.is_finite() {
            return Err(EvidenceError::InvalidSummary("xbar and theta0 must be finite"));
        }
        Ok(Self {
            n,
            xbar,
            theta0,
            sigma,
        })
    }

    /// `t_n = √n |x̄ - θ₀| / σ`
    pub fn t_statistic(&self) -> f64 {
        (self.n as f64).sqrt() * (self.xbar - self.theta0).abs() / self.sigma
    }

    /// Standardized mean `(x̄ - θ₀)/σ`, which reduces the general case to
    /// `θ₀ = 0, σ = 1`.
    pub fn standardized_mean(&self) -> f64 {
        (self.xbar - self.theta0) / self.sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvidence {
    pub log_value: f64,
    pub model: String,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBayesFactor {
    pub log_bf: f64,
    pub numerator_model: String,
    pub denominator_model: String,
    pub method: Method,
}

impl LogBayesFactor {
    fn new(log_bf: f64, numerator: &str, denominator: &str, method: Method) -> Self {
        Self {
            log_bf,
            numerator_model: numerator.to_owned(),
            denominator_model: denominator.to_owned(),
            method,
        }
    }

    pub fn from_evidences(numerator: &LogEvidence, denominator: &LogEvidence) -> Self {
        let method = if numerator.method == denominator.method {
            numerator.method
        } else {
            Method::Quadrature
        };
        Self::new(
            numerator.log_value - denominator.log_value,
            &numerator.model,
            &denominator.model,
            method,
        )
    }

    /// The reciprocal Bayes factor, labels swapped.
    pub fn swapped(&self) -> Self {
        Self {
            log_bf: -self.log_bf,
            numerator_model: self.denominator_model.clone(),
            denominator_model: self.numerator_model.clone(),
            method: self.method,
        }
    }

    pub fn bayes_factor(&self) -> f64 {
        self.log_bf.exp()
    }

    /// `B/(1+B)`: posterior probability of the numerator model under equal
    /// prior weights.
    pub fn posterior_probability(&self) -> f64 {
        crate::special::logistic(self.log_bf)
    }
}

/// Prior model weights; non-negative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights(Vec<f64>);

impl ModelWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, EvidenceError> {
        if weights.is_empty() {
            return Err(EvidenceError::InvalidWeights("no weights"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(EvidenceError::InvalidWeights("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(EvidenceError::InvalidWeights("weights must sum to one"));
        }
        Ok(Self(weights))
    }

    pub fn equal(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `log B₁₀` for `x̄ ~ N(θ, 1/n)`, `θ = 0` under H₀ and `θ ~ N(0, 1)` under
/// H₁: `-½ ln(1+n) + n² x̄² / (2(1+n))`, on the standardized mean.
pub fn log_bf10_normal(s: &NormalSummary) -> LogBayesFactor {
    // n² z² = n t², with t the standardized statistic.
    let log_bf = -lindley_log_bf01(s.n as f64, s.t_statistic());
    LogBayesFactor::new(log_bf, "H1", "H0", Method::ClosedForm)
}

/// `log B₀₁(t) = ½ ln(1+n) - n t² / (2(1+n))`.
pub fn log_bf01_lindley(n: u64, t: f64) -> Result<LogBayesFactor, EvidenceError> {
    if n == 0 {
        return Err(EvidenceError::InvalidSummary("n must be at least 1"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(EvidenceError::InvalidSummary("t must be finite and non-negative"));
    }
    Ok(LogBayesFactor::new(
        lindley_log_bf01(n as f64, t),
        "H0",
        "H1",
        Method::ClosedForm,
    ))
}

fn lindley_log_bf01(n: f64, t: f64) -> f64 {
    0.5 * n.ln_1p() - n * t * t / (2.0 * (1.0 + n))
}

fn require_positive_sum(data: &CountDataset) -> Result<(), EvidenceError> {
    if data.sum() == 0 {
        Err(EvidenceError::ImproperEvidence)
    } else {
        Ok(())
    }
}

/// Poisson marginal under `1/λ`: `ln Γ(S) - S ln n - Σ ln Γ(x_i+1)`.
pub fn log_marginal_poisson_improper(data: &CountDataset) -> Result<LogEvidence, EvidenceError> {
    require_positive_sum(data)?;
    let s = data.sum() as f64;
    let n = data.len() as f64;
    Ok(LogEvidence {
        log_value: log_gamma_unchecked(s) - s * n.ln() - data.log_factorial_sum(),
        model: "poisson".into(),
        method: Method::ClosedForm,
    })
}

/// Geometric marginal under `1/λ`: `ln Γ(S) + ln Γ(n) - ln Γ(S+n)`.
pub fn log_marginal_geometric_improper(
    data: &CountDataset,
) -> Result<LogEvidence, EvidenceError> {
    require_positive_sum(data)?;
    let s = data.sum() as f64;
    let n = data.len() as f64;
    Ok(LogEvidence {
        log_value: log_gamma_unchecked(s) + log_gamma_unchecked(n) - log_gamma_unchecked(s + n),
        model: "geometric".into(),
        method: Method::ClosedForm,
    })
}

/// The closed form `S ln n + Σ ln Γ(x_i+1) + ln Γ(n+2+S) - ln Γ(n+2)`,
/// evaluated as written.
pub fn log_bf12_printed(data: &CountDataset) -> LogBayesFactor {
    let s = data.sum() as f64;
    let n = data.len() as f64;
    let log_bf = s * n.ln() + data.log_factorial_sum() + log_gamma_unchecked(n + 2.0 + s)
        - log_gamma_unchecked(n + 2.0);
    LogBayesFactor::new(log_bf, "poisson", "geometric", Method::PrintedFormula)
}

/// Poisson over Geometric with the same `1/λ` prior on the shared mean:
/// `ln Γ(S+n) - S ln n - Σ ln Γ(x_i+1) - ln Γ(n)`.
pub fn log_bf12_shared_improper(data: &CountDataset) -> Result<LogBayesFactor, EvidenceError> {
    require_positive_sum(data)?;
    let s = data.sum() as f64;
    let n = data.len() as f64;
    let log_bf = log_gamma_unchecked(s + n) - s * n.ln() - data.log_factorial_sum()
        - log_gamma_unchecked(n);
    Ok(LogBayesFactor::new(log_bf, "poisson", "geometric", Method::ClosedForm))
}

/// Prior on the mean of a count family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CountPrior {
    /// The improper `π(λ) = 1/λ`.
    Reciprocal,
    /// Proper Gamma(shape, rate).
    Gamma { shape: f64, rate: f64 },
}

impl CountPrior {
    /// Log prior density on `u = ln λ` (Jacobian included).
    fn log_density_log_scale(&self, u: f64) -> f64 {
        match *self {
            CountPrior::Reciprocal => 0.0,
            CountPrior::Gamma { shape, rate } => {
                shape * rate.ln() - log_gamma_unchecked(shape) + shape * u - rate * u.exp()
            }
        }
    }
}

/// What [`log_marginal_quadrature`] integrates.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureTarget<'a> {
    /// Count likelihood integrated over `λ` on the axis `u = ln λ`.
    Counts {
        data: &'a CountDataset,
        family: CountFamily,
        prior: CountPrior,
    },
    /// Density of `x̄ ~ N(θ, σ²/n)` integrated against `θ ~ N(θ₀, prior_sd²)`.
    NormalMean {
        summary: NormalSummary,
        prior_sd: f64,
    },
}

/// Marginal likelihood by adaptive Gauss–Legendre quadrature, an oracle
/// independent of the closed forms above.
pub fn log_marginal_quadrature(
    target: &QuadratureTarget<'_>,
    config: &QuadratureConfig,
) -> Result<LogEvidence, EvidenceError> {
    match target {
        QuadratureTarget::Counts {
            data,
            family,
            prior,
        } => {
            let values = data.values();
            let log_fact = data.log_factorial_sum();
            let s = data.sum() as f64;
            let n = data.len() as f64;
            let family = *family;
            let log_integrand = |u: f64| {
                let lambda = u.exp();
                let loglik = match family {
                    CountFamily::Poisson => s * u - n * lambda - log_fact,
                    CountFamily::Geometric => {
                        let l1p = lambda.ln_1p();
                        values
                            .iter()
                            .map(|&x| x as f64 * u - (x as f64 + 1.0) * l1p)
                            .sum()
                    }
                };
                loglik + prior.log_density_log_scale(u)
            };
            let hint = if s > 0.0 { (s / n).ln() } else { 0.0 };
            let r = integrate_log(log_integrand, hint, config)?;
            Ok(LogEvidence {
                log_value: r.log_value,
                model: family.label().into(),
                method: Method::Quadrature,
            })
        }
        QuadratureTarget::NormalMean { summary, prior_sd } => {
            if !(*prior_sd > 0.0) {
                return Err(EvidenceError::InvalidSummary("prior_sd must be positive"));
            }
            let se = summary.sigma / (summary.n as f64).sqrt();
            let xbar = summary.xbar;
            let theta0 = summary.theta0;
            let tau = *prior_sd;
            let log_integrand = |theta: f64| {
                normal_log_density(xbar, theta, se) + normal_log_density(theta, theta0, tau)
            };
            // Start at the posterior mean.
            let prec = 1.0 / (se * se) + 1.0 / (tau * tau);
            let hint = (xbar / (se * se) + theta0 / (tau * tau)) / prec;
            let step = config.step.min(0.25 / prec.sqrt());
            let cfg = QuadratureConfig { step, ..*config };
            let r = integrate_log(log_integrand, hint, &cfg)?;
            Ok(LogEvidence {
                log_value: r.log_value,
                model: "H1".into(),
                method: Method::Quadrature,
            })
        }
    }
}

/// Density of `x̄` under the point null, used with the normal quadrature
/// target to form a Bayes factor.
pub fn log_marginal_normal_null(summary: &NormalSummary) -> LogEvidence {
    let se = summary.sigma / (summary.n as f64).sqrt();
    LogEvidence {
        log_value: normal_log_density(summary.xbar, summary.theta0, se),
        model: "H0".into(),
        method: Method::ClosedForm,
    }
}

fn normal_log_density(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    -HALF_LN_2PI - sd.ln() - 0.5 * z * z
}

/// `π(M_i | x) = ω_i m_i(x) / Σ_j ω_j m_j(x)`, evaluated in log space.
pub fn posterior_model_probabilities(
    log_evidences: &[f64],
    weights: &ModelWeights,
) -> Result<Vec<f64>, EvidenceError> {
    let w = weights.as_slice();
    if w.len() != log_evidences.len() {
        return Err(EvidenceError::InvalidWeights("one weight per model required"));
    }
    if log_evidences.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(EvidenceError::Degenerate);
    }
    let terms: Vec<f64> = log_evidences
        .iter()
        .zip(w)
        .map(|(m, w)| if *w == 0.0 { f64::NEG_INFINITY } else { m + w.ln() })
        .collect();
    let total = log_sum_exp(&terms);
    if !total.is_finite() {
        return Err(EvidenceError::Degenerate);
    }
    Ok(terms.iter().map(|t| (t - total).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn counts(v: &[u64]) -> CountDataset {
        CountDataset::new(v.to_vec()).unwrap()
    }

    #[test]
    fn bf10_normal_examples() {
        let bf = |n, x| log_bf10_normal(&NormalSummary::standard(n, x).unwrap()).log_bf;
        assert_abs_diff_eq!(bf(1, 0.0), -0.3465735903, epsilon = 1e-10);
        // -½ ln 101 + 400/202
        assert_abs_diff_eq!(bf(100, 0.2), -0.5 * 101f64.ln() + 400.0 / 202.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bf(100, 0.2), -0.3273622386, epsilon = 1e-9);
        assert_abs_diff_eq!(bf(10_000, 0.1), 45.3897803165, epsilon = 1e-9);
    }

    #[test]
    fn general_summary_reduces_by_standardization() {
        let general = NormalSummary::new(50, 3.4, 3.0, 2.0).unwrap();
        let std = NormalSummary::standard(50, 0.2).unwrap();
        assert_abs_diff_eq!(
            log_bf10_normal(&general).log_bf,
            log_bf10_normal(&std).log_bf,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(general.t_statistic(), 50f64.sqrt() * 0.2, epsilon = 1e-12);
    }

    #[test]
    fn lindley_examples() {
        assert_abs_diff_eq!(log_bf01_lindley(3, 0.0).unwrap().log_bf, 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            log_bf01_lindley(1_000_000, 1.96).unwrap().log_bf,
            4.9869,
            epsilon = 1e-4
        );
        assert!(log_bf01_lindley(0, 1.0).is_err());
        assert!(log_bf01_lindley(10, -0.1).is_err());
    }

    #[test]
    fn reciprocal_identity_examples() {
        for &(n, x) in &[(1u64, 0.0), (7, -1.3), (1000, 0.05), (1_000_000, 4.9)] {
            let s = NormalSummary::standard(n, x).unwrap();
            let t = (n as f64).sqrt() * x.abs();
            let total = log_bf10_normal(&s).log_bf + log_bf01_lindley(n, t).unwrap().log_bf;
            assert!(total.abs() <= 1e-12, "{n},{x}: {total}");
        }
    }

    #[test]
    fn poisson_marginal_examples() {
        assert_eq!(log_marginal_poisson_improper(&counts(&[1])).unwrap().log_value, 0.0);
        let expected = 24f64.ln() - 5.0 * 2f64.ln() - 2f64.ln() - 6f64.ln();
        let got = log_marginal_poisson_improper(&counts(&[2, 3])).unwrap().log_value;
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got, -2.7725887222, epsilon = 1e-9);
    }

    #[test]
    fn geometric_marginal_examples() {
        assert_abs_diff_eq!(
            log_marginal_geometric_improper(&counts(&[1])).unwrap().log_value,
            0.0,
            epsilon = 1e-14
        );
        let got = log_marginal_geometric_improper(&counts(&[2, 3])).unwrap().log_value;
        // Γ(5)Γ(2)/Γ(7) = 24/720
        assert_abs_diff_eq!(got, (24.0f64 / 720.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(got, -3.4011974, epsilon = 1e-7);
    }

    #[test]
    fn zero_sum_is_improper() {
        let zeros = counts(&[0, 0, 0]);
        assert_eq!(log_marginal_poisson_improper(&zeros), Err(EvidenceError::ImproperEvidence));
        assert_eq!(log_marginal_geometric_improper(&zeros), Err(EvidenceError::ImproperEvidence));
        assert_eq!(log_bf12_shared_improper(&zeros), Err(EvidenceError::ImproperEvidence));
        let q = log_marginal_quadrature(
            &QuadratureTarget::Counts {
                data: &zeros,
                family: CountFamily::Poisson,
                prior: CountPrior::Reciprocal,
            },
            &QuadratureConfig::default(),
        )
        .unwrap_err();
        assert!(q.is_degenerate(), "{q:?}");
    }

    #[test]
    fn proper_prior_integrates_zero_counts() {
        // Poisson-Gamma(1,1) marginal of all zeros: (1/(1+n))^1.
        let zeros = counts(&[0, 0, 0]);
        let q = log_marginal_quadrature(
            &QuadratureTarget::Counts {
                data: &zeros,
                family: CountFamily::Poisson,
                prior: CountPrior::Gamma { shape: 1.0, rate: 1.0 },
            },
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(q.log_value, -(4f64.ln()), epsilon = 1e-9);
    }

    #[test]
    fn printed_bf12_examples() {
        assert_abs_diff_eq!(log_bf12_printed(&counts(&[0])).log_bf, 0.0, epsilon = 1e-14);
        let expected =
            5.0 * 2f64.ln() + 2f64.ln() + 6f64.ln() + 40320f64.ln() - 6f64.ln();
        let got = log_bf12_printed(&counts(&[2, 3]));
        assert_abs_diff_eq!(got.log_bf, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got.log_bf, 14.7634859869, epsilon = 1e-9);
        assert_eq!(got.method, Method::PrintedFormula);
    }

    #[test]
    fn shared_improper_bf12_examples() {
        assert_abs_diff_eq!(
            log_bf12_shared_improper(&counts(&[1])).unwrap().log_bf,
            0.0,
            epsilon = 1e-14
        );
        let d = counts(&[2, 3]);
        let got = log_bf12_shared_improper(&d).unwrap().log_bf;
        assert_abs_diff_eq!(got, 0.6286086594, epsilon = 1e-9);
        let diff = log_marginal_poisson_improper(&d).unwrap().log_value
            - log_marginal_geometric_improper(&d).unwrap().log_value;
        assert_abs_diff_eq!(got, diff, epsilon = 1e-12);
        // The printed form is a different quantity.
        assert!((log_bf12_printed(&d).log_bf - got).abs() > 1.0);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let d = counts(&[2, 3]);
        let cfg = QuadratureConfig::default();
        for (family, closed) in [
            (CountFamily::Poisson, -2.7725887222),
            (CountFamily::Geometric, -3.4011974),
        ] {
            let q = log_marginal_quadrature(
                &QuadratureTarget::Counts {
                    data: &d,
                    family,
                    prior: CountPrior::Reciprocal,
                },
                &cfg,
            )
            .unwrap();
            assert_eq!(q.method, Method::Quadrature);
            assert_abs_diff_eq!(q.log_value, closed, epsilon = 1e-6);
        }
    }

    #[test]
    fn normal_quadrature_reproduces_bf10() {
        for &(n, x) in &[(1u64, 0.0), (25, 0.3), (1000, -0.08), (100_000, 0.01)] {
            let s = NormalSummary::standard(n, x).unwrap();
            let h1 = log_marginal_quadrature(
                &QuadratureTarget::NormalMean {
                    summary: s,
                    prior_sd: 1.0,
                },
                &QuadratureConfig::default(),
            )
            .unwrap();
            let h0 = log_marginal_normal_null(&s);
            let bf = LogBayesFactor::from_evidences(&h1, &h0);
            assert_abs_diff_eq!(bf.log_bf, log_bf10_normal(&s).log_bf, epsilon = 1e-8);
        }
    }

    #[test]
    fn swapping_negates() {
        let bf = log_bf12_printed(&counts(&[4, 1, 7]));
        let sw = bf.swapped();
        assert_eq!(sw.log_bf, -bf.log_bf);
        assert_eq!(sw.numerator_model, "geometric");
        assert_eq!(sw.swapped(), bf);
    }

    #[test]
    fn posterior_probability_examples() {
        let eq = ModelWeights::equal(2);
        let p = posterior_model_probabilities(&[0.0, 0.0], &eq).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        let p = posterior_model_probabilities(&[3f64.ln(), 0.0], &eq).unwrap();
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-15);
        let w = ModelWeights::new(vec![0.25, 0.25, 0.5]).unwrap();
        let p = posterior_model_probabilities(&[0.0, 0.0, 2f64.ln()], &w).unwrap();
        for (got, want) in p.iter().zip([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn posterior_probability_errors() {
        let eq = ModelWeights::equal(2);
        assert_eq!(
            posterior_model_probabilities(&[f64::NEG_INFINITY, f64::NEG_INFINITY], &eq),
            Err(EvidenceError::Degenerate)
        );
        assert!(posterior_model_probabilities(&[0.0], &eq).is_err());
        assert!(ModelWeights::new(vec![0.5, 0.6]).is_err());
        assert!(ModelWeights::new(vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn equal_weight_probability_is_logistic_of_bf() {
        let d = counts(&[3, 5, 2, 4, 6, 3]);
        let bf = log_bf12_shared_improper(&d).unwrap();
        let p = posterior_model_probabilities(
            &[
                log_marginal_poisson_improper(&d).unwrap().log_value,
                log_marginal_geometric_improper(&d).unwrap().log_value,
            ],
            &ModelWeights::equal(2),
        )
        .unwrap();
        assert_abs_diff_eq!(p[0], bf.posterior_probability(), epsilon = 1e-14);
    }
}
