//! Predictive calibration of decision statistics.
//!
//! * Tail probabilities of a Bayes factor under the prior or posterior
//!   predictive of each model: `P0(B01(X) >= B01(x_obs))` and
//!   `P1(B01(X) <= B01(x_obs))`.
//! * Posterior predictive p-values `P(T(X_rep, θ) >= T(x_obs, θ) | x_obs)`.
//! * Parametric-bootstrap cut-offs for posterior summaries of the mixture
//!   weight α.
//!
//! Ties always count toward the tail being measured. Replicate `i` draws
//! from the stream `seed.child(i)` and results are reduced in replicate
//! order, so parallel and serial runs agree exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{CountDataset, CountFamily, DistributionError, RngSeed, SeededRng};
use crate::evidence::{
    log_bf10_normal, log_bf12_printed, log_bf12_shared_improper, CountPrior, EvidenceError,
    Method, ModelWeights, NormalSummary,
};
use crate::mixture::{run_gibbs, McmcConfig, MixtureError, MixtureSpec};
use crate::special::quantile_sorted;

/// Smallest replicate count accepted by the Bayes factor tail estimators.
pub const MIN_REPLICATES: usize = 100;
/// Smallest replica count accepted by the bootstrap calibration.
pub const MIN_BOOTSTRAP_REPLICAS: usize = 20;
/// Resimulation budget per bootstrap replica for all-zero datasets.
const MAX_RESIMULATIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("posterior of model `{model}` is not available: {hint}")]
    PosteriorUnavailable { model: String, hint: String },
    #[error("prior predictive of model `{model}` is undefined under an improper prior")]
    ImproperPrior { model: String },
    #[error("generator produced {0} consecutive all-zero datasets")]
    TooManyDegenerate(usize),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictiveMode {
    Prior,
    #[default]
    Posterior,
}

impl std::str::FromStr for PredictiveMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prior" => Ok(PredictiveMode::Prior),
            "posterior" => Ok(PredictiveMode::Posterior),
            other => Err(format!("unknown predictive mode `{other}`")),
        }
    }
}

/// Which side of the observed value is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    /// `stat(X) >= stat(x_obs)`
    Upper,
    /// `stat(X) <= stat(x_obs)`
    Lower,
}

impl Tail {
    fn hit(self, replicate: f64, observed: f64) -> bool {
        match self {
            Tail::Upper => replicate >= observed,
            Tail::Lower => replicate <= observed,
        }
    }
}

/// A data-generating model with prior and posterior predictive draws.
pub trait PredictiveModel: Sync {
    type Data: Sync;

    fn name(&self) -> String;

    /// A replicate of the same size as `observed`, drawn from the prior
    /// predictive or from the posterior predictive given `observed`.
    fn replicate(
        &self,
        observed: &Self::Data,
        mode: PredictiveMode,
        rng: &mut SeededRng,
    ) -> Result<Self::Data, CalibrationError>;

    /// Whether the model's prior is improper, in which case any Bayes
    /// factor involving it carries an arbitrary constant.
    fn improper_prior(&self) -> bool {
        false
    }
}

/// `log B01` evaluated on a dataset.
pub trait BayesFactorStatistic<D>: Sync {
    fn log_bf01(&self, data: &D) -> Result<f64, EvidenceError>;
    fn method(&self) -> Method;
}

/// Wraps a closure as a statistic with an explicit method label.
pub struct FnStatistic<F> {
    pub f: F,
    pub method: Method,
}

impl<D, F> BayesFactorStatistic<D> for FnStatistic<F>
where
    F: Fn(&D) -> Result<f64, EvidenceError> + Sync,
{
    fn log_bf01(&self, data: &D) -> Result<f64, EvidenceError> {
        (self.f)(data)
    }

    fn method(&self) -> Method {
        self.method
    }
}

/// `log B01` of the normal testbed (point null against `N(θ₀, σ²)`).
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalBf01;

impl BayesFactorStatistic<NormalSummary> for NormalBf01 {
    fn log_bf01(&self, data: &NormalSummary) -> Result<f64, EvidenceError> {
        Ok(-log_bf10_normal(data).log_bf)
    }

    fn method(&self) -> Method {
        Method::ClosedForm
    }
}

/// `log B12` of Poisson against Geometric under the shared `1/λ` prior,
/// with either the integrated marginals or the printed closed form.
#[derive(Debug, Clone, Copy)]
pub struct PoissonGeometricBf {
    pub method: Method,
}

impl BayesFactorStatistic<CountDataset> for PoissonGeometricBf {
    fn log_bf01(&self, data: &CountDataset) -> Result<f64, EvidenceError> {
        match self.method {
            Method::PrintedFormula => Ok(log_bf12_printed(data).log_bf),
            _ => Ok(log_bf12_shared_improper(data)?.log_bf),
        }
    }

    fn method(&self) -> Method {
        self.method
    }
}

/// Prior on the mean of the normal testbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormalMeanPrior {
    /// `θ = θ₀` exactly.
    Point,
    /// `θ ~ N(mean, sd²)`.
    Normal { mean: f64, sd: f64 },
}

/// `x̄ ~ N(θ, σ²/n)` with the sample size taken from the observed summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalModel {
    pub theta0: f64,
    pub sigma: f64,
    pub prior: NormalMeanPrior,
}

impl NormalModel {
    /// The point null `θ = 0`, `σ = 1`.
    pub fn null() -> Self {
        Self {
            theta0: 0.0,
            sigma: 1.0,
            prior: NormalMeanPrior::Point,
        }
    }

    /// The alternative `θ ~ N(0, 1)`, `σ = 1`.
    pub fn alternative() -> Self {
        Self {
            theta0: 0.0,
            sigma: 1.0,
            prior: NormalMeanPrior::Normal { mean: 0.0, sd: 1.0 },
        }
    }
}

impl PredictiveModel for NormalModel {
    type Data = NormalSummary;

    fn name(&self) -> String {
        match self.prior {
            NormalMeanPrior::Point => "H0".into(),
            NormalMeanPrior::Normal { .. } => "H1".into(),
        }
    }

    fn replicate(
        &self,
        observed: &NormalSummary,
        mode: PredictiveMode,
        rng: &mut SeededRng,
    ) -> Result<NormalSummary, CalibrationError> {
        let n = observed.n as f64;
        let se = self.sigma / n.sqrt();
        let theta = match (self.prior, mode) {
            (NormalMeanPrior::Point, _) => self.theta0,
            (NormalMeanPrior::Normal { mean, sd }, PredictiveMode::Prior) => rng.normal(mean, sd)?,
            (NormalMeanPrior::Normal { mean, sd }, PredictiveMode::Posterior) => {
                let prec = 1.0 / (sd * sd) + 1.0 / (se * se);
                let post_mean = (mean / (sd * sd) + observed.xbar / (se * se)) / prec;
                rng.normal(post_mean, prec.sqrt().recip())?
            }
        };
        let xbar = rng.normal(theta, se)?;
        Ok(NormalSummary::new(observed.n, xbar, self.theta0, self.sigma)?)
    }
}

/// Count model indexed by its mean, with optional attached posterior draws
/// for priors without a conjugate update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountModel {
    pub family: CountFamily,
    pub prior: CountPrior,
    pub posterior_draws: Option<Vec<f64>>,
}

impl CountModel {
    pub fn new(family: CountFamily, prior: CountPrior) -> Self {
        Self {
            family,
            prior,
            posterior_draws: None,
        }
    }

    /// Posterior draws of λ to use in posterior mode instead of the
    /// conjugate update.
    pub fn with_posterior_draws(mut self, draws: Vec<f64>) -> Self {
        self.posterior_draws = Some(draws);
        self
    }

    /// `k` posterior draws of the mean on stream `seed`.
    pub fn sample_posterior(
        &self,
        observed: &CountDataset,
        k: usize,
        seed: RngSeed,
    ) -> Result<Vec<f64>, CalibrationError> {
        let mut rng = seed.rng();
        (0..k).map(|_| self.draw_posterior_mean(observed, &mut rng)).collect()
    }

    fn draw_posterior_mean(
        &self,
        observed: &CountDataset,
        rng: &mut SeededRng,
    ) -> Result<f64, CalibrationError> {
        if let Some(draws) = &self.posterior_draws {
            if draws.is_empty() {
                return Err(CalibrationError::InvalidInput("attached posterior draws are empty".into()));
            }
            return Ok(draws[rng.index(draws.len())]);
        }
        let s = observed.sum() as f64;
        let n = observed.len() as f64;
        let unavailable = |why: &str| CalibrationError::PosteriorUnavailable {
            model: self.family.label().into(),
            hint: format!(
                "{why}; attach draws of λ with CountModel::with_posterior_draws \
                 (for example from mixture::run_marginal_mh)"
            ),
        };
        match (self.family, self.prior) {
            (CountFamily::Poisson, CountPrior::Reciprocal) => {
                if observed.sum() == 0 {
                    return Err(unavailable("posterior is improper when all counts are zero"));
                }
                Ok(rng.gamma(s, n)?)
            }
            (CountFamily::Poisson, CountPrior::Gamma { shape, rate }) => {
                Ok(rng.gamma(shape + s, rate + n)?)
            }
            (CountFamily::Geometric, CountPrior::Reciprocal) => {
                if observed.sum() == 0 {
                    return Err(unavailable("posterior is improper when all counts are zero"));
                }
                // p = 1/(1+λ) ~ Beta(n, S)
                let p = rng.beta(n, s)?;
                Ok(((1.0 - p) / p).max(f64::MIN_POSITIVE))
            }
            (CountFamily::Geometric, CountPrior::Gamma { .. }) => {
                Err(unavailable("no conjugate update for the Geometric mean under a Gamma prior"))
            }
        }
    }
}

impl PredictiveModel for CountModel {
    type Data = CountDataset;

    fn name(&self) -> String {
        self.family.label().into()
    }

    fn replicate(
        &self,
        observed: &CountDataset,
        mode: PredictiveMode,
        rng: &mut SeededRng,
    ) -> Result<CountDataset, CalibrationError> {
        let lambda = match mode {
            PredictiveMode::Prior => match self.prior {
                CountPrior::Reciprocal => {
                    return Err(CalibrationError::ImproperPrior { model: self.name() })
                }
                CountPrior::Gamma { shape, rate } => rng.gamma(shape, rate)?,
            },
            PredictiveMode::Posterior => self.draw_posterior_mean(observed, rng)?,
        };
        let values = self.family.sample_n(lambda, observed.len(), rng)?;
        Ok(CountDataset::new(values)?)
    }

    fn improper_prior(&self) -> bool {
        matches!(self.prior, CountPrior::Reciprocal)
    }
}

/// Monte Carlo estimate of one tail probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p: f64,
    /// `√(p(1-p)/n_valid)`
    pub mc_se: f64,
    pub n_rep: usize,
    /// Replicates on which the statistic was undefined (for example
    /// all-zero count data under an improper prior); excluded from `p`.
    pub degenerate: usize,
}

impl TailEstimate {
    fn from_hits(hits: usize, valid: usize, n_rep: usize) -> Self {
        let p = if valid == 0 { f64::NAN } else { hits as f64 / valid as f64 };
        Self {
            p,
            mc_se: binomial_se(p, valid),
            n_rep,
            degenerate: n_rep - valid,
        }
    }
}

pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Both predictive tails of a Bayes factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// `P0(B01(X) >= B01(x_obs))`
    pub p0: f64,
    /// `P1(B01(X) <= B01(x_obs))`
    pub p1: f64,
    pub n_rep: usize,
    pub mc_se0: f64,
    pub mc_se1: f64,
    pub degenerate0: usize,
    pub degenerate1: usize,
    pub mode: PredictiveMode,
    pub observed_log_bf01: f64,
    pub method: Method,
    /// Set when either model has an improper prior: the Bayes factor then
    /// carries an arbitrary constant even though the predictive is proper.
    pub improper_prior: bool,
}

fn check_replicates(n_rep: usize) -> Result<(), CalibrationError> {
    if n_rep < MIN_REPLICATES {
        Err(CalibrationError::InvalidInput(format!(
            "n_rep must be at least {MIN_REPLICATES}, got {n_rep}"
        )))
    } else {
        Ok(())
    }
}

/// Evaluates the statistic on `n_rep` replicates, in replicate order.
/// `Ok(None)` marks a replicate on which the statistic is undefined.
fn replicate_statistics<M, S>(
    observed: &M::Data,
    model: &M,
    statistic: &S,
    mode: PredictiveMode,
    n_rep: usize,
    seed: RngSeed,
) -> Result<Vec<Option<f64>>, CalibrationError>
where
    M: PredictiveModel,
    S: BayesFactorStatistic<M::Data>,
{
    (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            let rep = model.replicate(observed, mode, &mut rng)?;
            match statistic.log_bf01(&rep) {
                Ok(v) => Ok(Some(v)),
                Err(e) if e.is_degenerate() => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

fn count_tail(values: &[Option<f64>], observed: f64, tail: Tail) -> TailEstimate {
    let valid = values.iter().flatten().count();
    let hits = values.iter().flatten().filter(|&&v| tail.hit(v, observed)).count();
    TailEstimate::from_hits(hits, valid, values.len())
}

/// Tail probability of `statistic` under one model's predictive.
pub fn predictive_tail<M, S>(
    observed: &M::Data,
    model: &M,
    statistic: &S,
    mode: PredictiveMode,
    tail: Tail,
    n_rep: usize,
    seed: RngSeed,
) -> Result<TailEstimate, CalibrationError>
where
    M: PredictiveModel,
    S: BayesFactorStatistic<M::Data>,
{
    check_replicates(n_rep)?;
    let obs = statistic.log_bf01(observed)?;
    let values = replicate_statistics(observed, model, statistic, mode, n_rep, seed)?;
    Ok(count_tail(&values, obs, tail))
}

/// `P0(B01(X) >= B01(x_obs))` under model 0 and `P1(B01(X) <= B01(x_obs))`
/// under model 1. Streams `seed.child(0)` and `seed.child(1)` feed the two
/// models.
pub fn predictive_bf_tails<M0, M1, S>(
    observed: &M0::Data,
    model0: &M0,
    model1: &M1,
    statistic: &S,
    mode: PredictiveMode,
    n_rep: usize,
    seed: RngSeed,
) -> Result<CalibrationReport, CalibrationError>
where
    M0: PredictiveModel,
    M1: PredictiveModel<Data = M0::Data>,
    S: BayesFactorStatistic<M0::Data>,
{
    check_replicates(n_rep)?;
    let obs = statistic.log_bf01(observed)?;
    let v0 = replicate_statistics(observed, model0, statistic, mode, n_rep, seed.child(0))?;
    let v1 = replicate_statistics(observed, model1, statistic, mode, n_rep, seed.child(1))?;
    let t0 = count_tail(&v0, obs, Tail::Upper);
    let t1 = count_tail(&v1, obs, Tail::Lower);
    Ok(CalibrationReport {
        p0: t0.p,
        p1: t1.p,
        n_rep,
        mc_se0: t0.mc_se,
        mc_se1: t1.mc_se,
        degenerate0: t0.degenerate,
        degenerate1: t1.degenerate,
        mode,
        observed_log_bf01: obs,
        method: statistic.method(),
        improper_prior: model0.improper_prior() || model1.improper_prior(),
    })
}

/// Both tails under the single encompassing predictive
/// `ω0 p0(x) + ω1 p1(x)`. The weights are the caller's prior model
/// probabilities and the result depends on them.
#[allow(clippy::too_many_arguments)]
pub fn predictive_bf_tails_encompassing<M0, M1, S>(
    observed: &M0::Data,
    model0: &M0,
    model1: &M1,
    weights: &ModelWeights,
    statistic: &S,
    mode: PredictiveMode,
    n_rep: usize,
    seed: RngSeed,
) -> Result<CalibrationReport, CalibrationError>
where
    M0: PredictiveModel,
    M1: PredictiveModel<Data = M0::Data>,
    S: BayesFactorStatistic<M0::Data>,
{
    check_replicates(n_rep)?;
    let w = weights.as_slice();
    if w.len() != 2 {
        return Err(CalibrationError::InvalidInput("two model weights required".into()));
    }
    let w0 = w[0];
    let obs = statistic.log_bf01(observed)?;
    let values: Vec<Option<f64>> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            let rep = if rng.uniform() < w0 {
                model0.replicate(observed, mode, &mut rng)?
            } else {
                model1.replicate(observed, mode, &mut rng)?
            };
            match statistic.log_bf01(&rep) {
                Ok(v) => Ok(Some(v)),
                Err(e) if e.is_degenerate() => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_, CalibrationError>>()?;
    let upper = count_tail(&values, obs, Tail::Upper);
    let lower = count_tail(&values, obs, Tail::Lower);
    Ok(CalibrationReport {
        p0: upper.p,
        p1: lower.p,
        n_rep,
        mc_se0: upper.mc_se,
        mc_se1: lower.mc_se,
        degenerate0: upper.degenerate,
        degenerate1: lower.degenerate,
        mode,
        observed_log_bf01: obs,
        method: statistic.method(),
        improper_prior: model0.improper_prior() || model1.improper_prior(),
    })
}

/// Replicated datasets from the posterior predictive: replicate `i` picks a
/// posterior draw uniformly (stream `seed.child(i)`) and samples `n_obs`
/// counts from `family` at that mean.
pub fn posterior_predictive_replicate(
    posterior_draws: &[f64],
    family: CountFamily,
    n_obs: usize,
    n_rep: usize,
    seed: RngSeed,
) -> Result<Vec<Vec<u64>>, CalibrationError> {
    if n_rep == 0 {
        return Ok(Vec::new());
    }
    if posterior_draws.is_empty() {
        return Err(CalibrationError::InvalidInput("no posterior draws".into()));
    }
    (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            let theta = posterior_draws[rng.index(posterior_draws.len())];
            Ok(family.sample_n(theta, n_obs, &mut rng)?)
        })
        .collect()
}

/// Discrepancy measure `T(x, θ)` for posterior predictive checks.
pub trait Discrepancy: Sync {
    fn eval(&self, data: &[u64], theta: f64) -> f64;
}

impl<F> Discrepancy for F
where
    F: Fn(&[u64], f64) -> f64 + Sync,
{
    fn eval(&self, data: &[u64], theta: f64) -> f64 {
        self(data, theta)
    }
}

/// Built-in discrepancies; none of them depends on θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardDiscrepancy {
    Mean,
    Variance,
    Max,
    ZeroCount,
}

impl Discrepancy for StandardDiscrepancy {
    fn eval(&self, data: &[u64], _theta: f64) -> f64 {
        let n = data.len() as f64;
        match self {
            StandardDiscrepancy::Mean => data.iter().sum::<u64>() as f64 / n,
            StandardDiscrepancy::Variance => {
                if data.len() < 2 {
                    return 0.0;
                }
                let m = data.iter().sum::<u64>() as f64 / n;
                data.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (n - 1.0)
            }
            StandardDiscrepancy::Max => data.iter().copied().max().unwrap_or(0) as f64,
            StandardDiscrepancy::ZeroCount => data.iter().filter(|&&x| x == 0).count() as f64,
        }
    }
}

impl std::str::FromStr for StandardDiscrepancy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Self::Mean),
            "variance" => Ok(Self::Variance),
            "max" => Ok(Self::Max),
            "zero_count" | "zeros" => Ok(Self::ZeroCount),
            other => Err(format!("unknown discrepancy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValueEstimate {
    pub p: f64,
    pub mc_se: f64,
    pub n_rep: usize,
}

/// `P(T(X_rep, θ) >= T(x_obs, θ) | x_obs)` averaged over joint draws of θ
/// (uniform over `posterior_draws`) and `X_rep ~ family(θ)`.
pub fn posterior_predictive_pvalue<T: Discrepancy + ?Sized>(
    observed: &[u64],
    posterior_draws: &[f64],
    family: CountFamily,
    discrepancy: &T,
    n_rep: usize,
    seed: RngSeed,
) -> Result<PValueEstimate, CalibrationError> {
    if n_rep == 0 {
        return Err(CalibrationError::InvalidInput("n_rep must be positive".into()));
    }
    if posterior_draws.is_empty() {
        return Err(CalibrationError::InvalidInput("no posterior draws".into()));
    }
    let hits: Vec<bool> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            let theta = posterior_draws[rng.index(posterior_draws.len())];
            let rep = family.sample_n(theta, observed.len(), &mut rng)?;
            Ok(discrepancy.eval(&rep, theta) >= discrepancy.eval(observed, theta))
        })
        .collect::<Result<_, CalibrationError>>()?;
    let p = hits.iter().filter(|&&h| h).count() as f64 / n_rep as f64;
    Ok(PValueEstimate {
        p,
        mc_se: binomial_se(p, n_rep),
        n_rep,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaSummary {
    Mean,
    Median,
}

impl std::str::FromStr for AlphaSummary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Self::Mean),
            "median" => Ok(Self::Median),
            other => Err(format!("unknown summary `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub spec: MixtureSpec,
    pub generator: CountFamily,
    pub lambda_true: f64,
    pub n_obs: usize,
    pub replicas: usize,
    pub mcmc: McmcConfig,
    pub summary: AlphaSummary,
    pub seed: RngSeed,
}

/// Sampling distribution of an α posterior summary under one generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCalibration {
    /// Per-replica summaries in ascending order.
    pub summaries: Vec<f64>,
    /// All-zero datasets that were discarded and redrawn.
    pub resimulated: usize,
    pub summary: AlphaSummary,
}

impl BootstrapCalibration {
    /// Empirical q-quantile of the summaries (type 7); `q = 0` is the
    /// minimum.
    pub fn cutoff(&self, q: f64) -> f64 {
        quantile_sorted(&self.summaries, q)
    }
}

/// Simulates datasets from the generator, runs the Gibbs sampler on each
/// and collects the chosen α summary. Replica `i` simulates from
/// `seed.child(2i)` and runs its chain on `seed.child(2i+1)`.
pub fn bootstrap_alpha_summaries(
    config: &BootstrapConfig,
) -> Result<BootstrapCalibration, CalibrationError> {
    if config.replicas < MIN_BOOTSTRAP_REPLICAS {
        return Err(CalibrationError::InvalidInput(format!(
            "replicas must be at least {MIN_BOOTSTRAP_REPLICAS}, got {}",
            config.replicas
        )));
    }
    if config.n_obs == 0 {
        return Err(CalibrationError::InvalidInput("n_obs must be positive".into()));
    }
    let results: Vec<(f64, usize)> = (0..config.replicas)
        .into_par_iter()
        .map(|i| {
            let i = i as u64;
            let mut rng = config.seed.child(2 * i).rng();
            let (data, redraws) =
                simulate_nondegenerate(config.generator, config.lambda_true, config.n_obs, &mut rng)?;
            let chain = run_gibbs(&data, &config.spec, &config.mcmc, config.seed.child(2 * i + 1))?;
            let s = match config.summary {
                AlphaSummary::Mean => chain.alpha_mean(),
                AlphaSummary::Median => chain.alpha_median(),
            };
            Ok((s, redraws))
        })
        .collect::<Result<_, CalibrationError>>()?;
    let mut summaries: Vec<f64> = results.iter().map(|r| r.0).collect();
    summaries.sort_by(f64::total_cmp);
    Ok(BootstrapCalibration {
        summaries,
        resimulated: results.iter().map(|r| r.1).sum(),
        summary: config.summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCutoff {
    pub cutoff: f64,
    pub q: f64,
    pub replicas: usize,
    pub resimulated: usize,
}

/// Decision cut-off on α: the q-quantile of the bootstrap summaries.
pub fn bootstrap_alpha_cutoff(
    config: &BootstrapConfig,
    q: f64,
) -> Result<BootstrapCutoff, CalibrationError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(CalibrationError::InvalidInput(format!("q = {q} outside [0, 1]")));
    }
    let cal = bootstrap_alpha_summaries(config)?;
    Ok(BootstrapCutoff {
        cutoff: cal.cutoff(q),
        q,
        replicas: config.replicas,
        resimulated: cal.resimulated,
    })
}

/// Draws datasets until one has a positive sum. Returns the dataset and the
/// number of discarded all-zero draws.
pub fn simulate_nondegenerate(
    family: CountFamily,
    lambda: f64,
    n: usize,
    rng: &mut SeededRng,
) -> Result<(CountDataset, usize), CalibrationError> {
    for redraws in 0..MAX_RESIMULATIONS {
        let data = CountDataset::new(family.sample_n(lambda, n, rng)?)?;
        if data.sum() > 0 {
            return Ok((data, redraws));
        }
    }
    Err(CalibrationError::TooManyDegenerate(MAX_RESIMULATIONS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_statistic_counts_ties_on_both_sides() {
        let stat = FnStatistic {
            f: |_: &NormalSummary| Ok(1.25),
            method: Method::ClosedForm,
        };
        let obs = NormalSummary::standard(25, 0.3).unwrap();
        let r = predictive_bf_tails(
            &obs,
            &NormalModel::null(),
            &NormalModel::alternative(),
            &stat,
            PredictiveMode::Prior,
            200,
            RngSeed::new(1, 0),
        )
        .unwrap();
        assert_eq!((r.p0, r.p1), (1.0, 1.0));
        assert_eq!((r.mc_se0, r.mc_se1), (0.0, 0.0));
    }

    #[test]
    fn observed_zero_mean_has_no_upper_tail_mass() {
        // B01 is maximal at x̄ = 0; only the (null) tie set reaches it.
        let obs = NormalSummary::standard(25, 0.0).unwrap();
        let t = predictive_tail(
            &obs,
            &NormalModel::null(),
            &NormalBf01,
            PredictiveMode::Prior,
            Tail::Upper,
            1000,
            RngSeed::new(2, 0),
        )
        .unwrap();
        assert_eq!(t.p, 0.0);
    }

    #[test]
    fn discrete_ties_count_toward_both_tails() {
        // Statistic with positive tie mass: the number of zeros in a Poisson
        // sample. Upper and lower tails overlap exactly on the ties.
        let stat = FnStatistic {
            f: |d: &CountDataset| Ok(d.values().iter().filter(|&&x| x == 0).count() as f64),
            method: Method::ClosedForm,
        };
        let obs = CountDataset::new(vec![0, 1, 2, 3, 4]).unwrap();
        let model = CountModel::new(CountFamily::Poisson, CountPrior::Gamma { shape: 2.0, rate: 1.0 });
        let seed = RngSeed::new(3, 0);
        let up = predictive_tail(&obs, &model, &stat, PredictiveMode::Prior, Tail::Upper, 4000, seed)
            .unwrap();
        let lo = predictive_tail(&obs, &model, &stat, PredictiveMode::Prior, Tail::Lower, 4000, seed)
            .unwrap();
        let ties = predictive_tail(
            &obs,
            &model,
            &FnStatistic {
                f: |d: &CountDataset| {
                    let z = d.values().iter().filter(|&&x| x == 0).count();
                    Ok(if z == 1 { 1.0 } else { 0.0 })
                },
                method: Method::ClosedForm,
            },
            PredictiveMode::Prior,
            Tail::Upper,
            4000,
            seed,
        )
        .unwrap();
        assert!(ties.p > 0.05);
        assert_abs_diff_eq!(up.p + lo.p, 1.0 + ties.p, epsilon = 1e-12);
    }

    #[test]
    fn replicate_count_is_checked() {
        let obs = NormalSummary::standard(10, 0.1).unwrap();
        assert!(predictive_bf_tails(
            &obs,
            &NormalModel::null(),
            &NormalModel::alternative(),
            &NormalBf01,
            PredictiveMode::Prior,
            99,
            RngSeed::new(0, 0)
        )
        .is_err());
    }

    #[test]
    fn mc_se_is_binomial() {
        let obs = NormalSummary::standard(30, 0.25).unwrap();
        let r = predictive_bf_tails(
            &obs,
            &NormalModel::null(),
            &NormalModel::alternative(),
            &NormalBf01,
            PredictiveMode::Posterior,
            2000,
            RngSeed::new(4, 0),
        )
        .unwrap();
        assert_eq!(r.mc_se0, (r.p0 * (1.0 - r.p0) / 2000.0).sqrt());
        assert_eq!(r.mc_se1, (r.p1 * (1.0 - r.p1) / 2000.0).sqrt());
        assert!((0.0..=1.0).contains(&r.p0) && (0.0..=1.0).contains(&r.p1));
        assert!(!r.improper_prior);
    }

    #[test]
    fn improper_prior_mode_and_missing_posterior_are_errors() {
        let obs = CountDataset::new(vec![2, 3, 1]).unwrap();
        let stat = PoissonGeometricBf {
            method: Method::ClosedForm,
        };
        let p = CountModel::new(CountFamily::Poisson, CountPrior::Reciprocal);
        let g = CountModel::new(CountFamily::Geometric, CountPrior::Gamma { shape: 1.0, rate: 1.0 });
        let err = predictive_bf_tails(&obs, &p, &g, &stat, PredictiveMode::Prior, 100, RngSeed::new(0, 0))
            .unwrap_err();
        assert!(matches!(err, CalibrationError::ImproperPrior { .. }));
        let err =
            predictive_bf_tails(&obs, &p, &g, &stat, PredictiveMode::Posterior, 100, RngSeed::new(0, 0))
                .unwrap_err();
        match err {
            CalibrationError::PosteriorUnavailable { hint, .. } => {
                assert!(hint.contains("with_posterior_draws"))
            }
            other => panic!("unexpected {other:?}"),
        }
        // Attaching draws fixes it.
        let g = g.with_posterior_draws(vec![2.0, 2.1, 1.9]);
        let r = predictive_bf_tails(&obs, &p, &g, &stat, PredictiveMode::Posterior, 100, RngSeed::new(0, 0))
            .unwrap();
        assert!(r.improper_prior);
        assert_eq!(r.method, Method::ClosedForm);
    }

    #[test]
    fn conjugate_count_posteriors_center_on_the_data() {
        let obs = CountDataset::new(vec![4; 200]).unwrap();
        for family in [CountFamily::Poisson, CountFamily::Geometric] {
            let m = CountModel::new(family, CountPrior::Reciprocal);
            let mut rng = RngSeed::new(5, 0).rng();
            let draws: Vec<f64> = (0..4000)
                .map(|_| m.draw_posterior_mean(&obs, &mut rng).unwrap())
                .collect();
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            assert!((mean - 4.0).abs() < 0.15, "{family:?}: {mean}");
        }
    }

    #[test]
    fn encompassing_predictive_mixes_both_models() {
        let obs = NormalSummary::standard(50, 0.2).unwrap();
        let seed = RngSeed::new(6, 0);
        let r0 = predictive_bf_tails_encompassing(
            &obs,
            &NormalModel::null(),
            &NormalModel::alternative(),
            &ModelWeights::new(vec![1.0, 0.0]).unwrap(),
            &NormalBf01,
            PredictiveMode::Prior,
            2000,
            seed,
        )
        .unwrap();
        let r5 = predictive_bf_tails_encompassing(
            &obs,
            &NormalModel::null(),
            &NormalModel::alternative(),
            &ModelWeights::equal(2),
            &NormalBf01,
            PredictiveMode::Prior,
            2000,
            seed,
        )
        .unwrap();
        // Weight on the alternative shifts mass to small B01.
        assert!(r5.p1 > r0.p1);
        assert!(r5.p0 < r0.p0);
    }

    #[test]
    fn replicates_from_pinned_posterior() {
        let reps = posterior_predictive_replicate(&[4.0], CountFamily::Poisson, 400, 50, RngSeed::new(7, 0))
            .unwrap();
        assert_eq!(reps.len(), 50);
        for r in &reps {
            assert_eq!(r.len(), 400);
            let m = r.iter().sum::<u64>() as f64 / 400.0;
            // 4σ CLT bound, σ = √(4/400) = 0.1
            assert!((m - 4.0).abs() < 0.4, "{m}");
        }
        let again = posterior_predictive_replicate(&[4.0], CountFamily::Poisson, 400, 50, RngSeed::new(7, 0))
            .unwrap();
        assert_eq!(reps, again);
        assert!(posterior_predictive_replicate(&[], CountFamily::Poisson, 4, 0, RngSeed::new(0, 0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn pvalues() {
        let obs = vec![3, 5, 4, 2, 6];
        let p = posterior_predictive_pvalue(
            &obs,
            &[4.0],
            CountFamily::Poisson,
            &|_: &[u64], _: f64| 1.0,
            500,
            RngSeed::new(8, 0),
        )
        .unwrap();
        assert_eq!(p.p, 1.0);
        let far = vec![100u64; 20];
        let p = posterior_predictive_pvalue(
            &far,
            &[4.0],
            CountFamily::Poisson,
            &StandardDiscrepancy::Mean,
            10_000,
            RngSeed::new(8, 1),
        )
        .unwrap();
        assert!(p.p < 0.001);
    }

    #[test]
    fn standard_discrepancies() {
        let d = [0, 2, 0, 4];
        assert_eq!(StandardDiscrepancy::Mean.eval(&d, 0.0), 1.5);
        assert_abs_diff_eq!(StandardDiscrepancy::Variance.eval(&d, 0.0), 11.0 / 3.0, epsilon = 1e-14);
        assert_eq!(StandardDiscrepancy::Max.eval(&d, 0.0), 4.0);
        assert_eq!(StandardDiscrepancy::ZeroCount.eval(&d, 0.0), 2.0);
    }

    #[test]
    fn bootstrap_cutoffs_are_ordered() {
        let cfg = BootstrapConfig {
            spec: MixtureSpec::new(0.5).unwrap(),
            generator: CountFamily::Poisson,
            lambda_true: 4.0,
            n_obs: 30,
            replicas: 20,
            mcmc: McmcConfig::with_iterations(1500, 300),
            summary: AlphaSummary::Median,
            seed: RngSeed::new(9, 0),
        };
        let cal = bootstrap_alpha_summaries(&cfg).unwrap();
        assert_eq!(cal.summaries.len(), 20);
        assert_eq!(cal.cutoff(0.0), cal.summaries[0]);
        assert!(cal.cutoff(0.1) <= cal.cutoff(0.9));
        let c = bootstrap_alpha_cutoff(&cfg, 0.1).unwrap();
        assert_eq!(c.cutoff, cal.cutoff(0.1));
        assert!(bootstrap_alpha_cutoff(&BootstrapConfig { replicas: 19, ..cfg }, 0.1).is_err());
        assert!(bootstrap_alpha_cutoff(&cfg, 1.5).is_err());
    }

    #[test]
    fn resimulation_is_counted() {
        // Mean 0.05 over 3 observations: P(all zero) ≈ 0.86.
        let mut rng = RngSeed::new(10, 0).rng();
        let mut total = 0;
        for _ in 0..50 {
            let (d, redraws) = simulate_nondegenerate(CountFamily::Poisson, 0.05, 3, &mut rng).unwrap();
            assert!(d.sum() > 0);
            total += redraws;
        }
        assert!(total > 50);
    }
}
