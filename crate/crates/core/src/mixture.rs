//! Posterior inference on the weight α of the encompassing mixture
//!
//! ```text
//! x_i ~ α Poisson(λ) + (1 - α) Geometric(mean λ),   α ~ Beta(a0, a0),   π(λ) = 1/λ
//! ```
//!
//! Component 1 is always the Poisson and component 2 always the Geometric;
//! the components are not exchangeable, so no relabelling is ever done.
//!
//! Three routes to the posterior of α are provided:
//!
//! * [`run_gibbs`]: latent allocations, conjugate Beta update for α, and an
//!   adaptive random-walk Metropolis step on `ln λ`;
//! * [`run_marginal_mh`]: random-walk Metropolis on `(logit α, ln λ)` with the
//!   allocations summed out;
//! * [`grid_posterior_alpha`]: deterministic quadrature over `(logit α, ln λ)`,
//!   used as the oracle for both samplers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{CountDataset, CountFamily, DistributionError, RngSeed, SeededRng};
use crate::quadrature::{bracket, integrate_log, QuadratureConfig, QuadratureError};
use crate::special::{log_add_exp, log_gamma_unchecked, logistic, quantile_sorted, softplus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixtureError {
    #[error("degenerate dataset: all counts are zero (S = 0), so the 1/λ prior gives an improper posterior")]
    Degenerate,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("grid quadrature: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("chain is empty")]
    EmptyChain,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

impl MixtureError {
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            MixtureError::Degenerate
                | MixtureError::Quadrature(QuadratureError::NonIntegrable { .. })
        )
    }
}

/// Mixture component label. The mapping to families is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Poisson,
    Geometric,
}

impl Component {
    pub fn family(self) -> CountFamily {
        match self {
            Component::Poisson => CountFamily::Poisson,
            Component::Geometric => CountFamily::Geometric,
        }
    }

    /// 1 for the Poisson component, 2 for the Geometric.
    pub fn index(self) -> u8 {
        match self {
            Component::Poisson => 1,
            Component::Geometric => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    /// Symmetric Beta(a0, a0) prior on α.
    pub a0: f64,
}

impl MixtureSpec {
    pub fn new(a0: f64) -> Result<Self, MixtureError> {
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(MixtureError::InvalidConfig(format!("a0 must be positive, got {a0}")));
        }
        Ok(Self { a0 })
    }

    pub fn components(&self) -> [Component; 2] {
        [Component::Poisson, Component::Geometric]
    }

    /// The shared-mean flag; every component is indexed by the same λ.
    pub fn shared_parameter(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParameters {
    pub a: f64,
    pub b: f64,
}

impl BetaParameters {
    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }
}

/// Latent allocations with per-component counts and sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationState {
    labels: Vec<Component>,
    pub n1: u64,
    pub n2: u64,
    pub s1: u64,
    pub s2: u64,
}

impl AllocationState {
    pub fn new(values: &[u64], labels: Vec<Component>) -> Result<Self, MixtureError> {
        if values.len() != labels.len() {
            return Err(MixtureError::InvalidConfig("one label per observation".into()));
        }
        let mut state = Self {
            labels,
            n1: 0,
            n2: 0,
            s1: 0,
            s2: 0,
        };
        state.recount(values);
        Ok(state)
    }

    /// Bare counts, for callers that only need the sufficient statistics.
    pub fn from_counts(n1: u64, s1: u64, n2: u64, s2: u64) -> Self {
        Self {
            labels: Vec::new(),
            n1,
            n2,
            s1,
            s2,
        }
    }

    pub fn labels(&self) -> &[Component] {
        &self.labels
    }

    fn recount(&mut self, values: &[u64]) {
        let (mut n1, mut n2, mut s1, mut s2) = (0, 0, 0, 0);
        for (&x, &z) in values.iter().zip(&self.labels) {
            match z {
                Component::Poisson => {
                    n1 += 1;
                    s1 += x;
                }
                Component::Geometric => {
                    n2 += 1;
                    s2 += x;
                }
            }
        }
        self.n1 = n1;
        self.n2 = n2;
        self.s1 = s1;
        self.s2 = s2;
    }
}

/// Full conditional of α given the allocations: `Beta(a0 + n1, a0 + n2)`.
pub fn conditional_alpha(state: &AllocationState, a0: f64) -> BetaParameters {
    BetaParameters {
        a: a0 + state.n1 as f64,
        b: a0 + state.n2 as f64,
    }
}

/// Probability that `x` was generated by the Poisson component:
/// `α f1(x|λ) / (α f1(x|λ) + (1-α) f2(x|λ))`.
pub fn allocation_probability(x: u64, alpha: f64, lambda: f64) -> f64 {
    let logit_alpha = alpha.ln() - (-alpha).ln_1p();
    allocation_probability_logit(
        x,
        logit_alpha,
        lambda,
        lambda.ln_1p(),
        log_gamma_unchecked(x as f64 + 1.0),
    )
}

/// The `x ln λ` terms of both pmfs cancel in the ratio, leaving
/// `logistic(logit α - λ - ln x! + (x+1) ln(1+λ))`.
#[inline]
fn allocation_probability_logit(
    x: u64,
    logit_alpha: f64,
    lambda: f64,
    log1p_lambda: f64,
    log_factorial: f64,
) -> f64 {
    logistic(logit_alpha - lambda - log_factorial + (x as f64 + 1.0) * log1p_lambda)
}

/// Log full conditional of λ up to a constant:
/// `(S1 + S2 - 1) ln λ - n1 λ - (S2 + n2) ln(1 + λ)`.
pub fn log_lambda_conditional(lambda: f64, state: &AllocationState) -> f64 {
    let s = (state.s1 + state.s2) as f64;
    (s - 1.0) * lambda.ln() - state.n1 as f64 * lambda - (state.s2 + state.n2) as f64 * lambda.ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub initial_proposal_sd: f64,
    pub target_acceptance: f64,
    /// Robbins–Monro scaling of the proposal sd during burn-in.
    pub adapt: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 2_000,
            initial_proposal_sd: 0.5,
            target_acceptance: 0.44,
            adapt: true,
        }
    }
}

impl McmcConfig {
    pub fn with_iterations(iterations: usize, burn_in: usize) -> Self {
        Self {
            iterations,
            burn_in,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), MixtureError> {
        if self.iterations <= self.burn_in {
            return Err(MixtureError::InvalidConfig(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        if !(self.initial_proposal_sd > 0.0) {
            return Err(MixtureError::InvalidConfig("proposal sd must be positive".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(MixtureError::InvalidConfig("target acceptance must be in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Gibbs,
    MarginalMh,
}

/// Post-burn-in draws of `(α, λ)` with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureChain {
    pub alpha_draws: Vec<f64>,
    pub lambda_draws: Vec<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub mh_acceptance_rate: f64,
    pub final_proposal_sd: Vec<f64>,
    pub seed: RngSeed,
    pub kernel: Kernel,
    pub warnings: Vec<String>,
}

impl MixtureChain {
    pub fn len(&self) -> usize {
        self.alpha_draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_draws.is_empty()
    }

    pub fn alpha_mean(&self) -> f64 {
        self.alpha_draws.iter().sum::<f64>() / self.alpha_draws.len() as f64
    }

    pub fn alpha_median(&self) -> f64 {
        let mut sorted = self.alpha_draws.clone();
        sorted.sort_by(f64::total_cmp);
        quantile_sorted(&sorted, 0.5)
    }

    fn check_acceptance(&mut self) {
        let r = self.mh_acceptance_rate;
        if !(0.05..=0.95).contains(&r) {
            self.warnings.push(format!(
                "Metropolis acceptance rate {r:.3} outside [0.05, 0.95] after adaptation"
            ));
        }
    }
}

/// Closest representable values to 0 and 1 kept for stored α draws.
fn clamp_unit(alpha: f64) -> f64 {
    alpha.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// One-dimensional random-walk proposal scale with Robbins–Monro
/// adaptation of `ln sd` toward the target acceptance rate.
#[derive(Debug, Clone)]
struct AdaptiveScale {
    log_sd: f64,
    target: f64,
    accepted: u64,
    proposed: u64,
}

impl AdaptiveScale {
    fn new(sd: f64, target: f64) -> Self {
        Self {
            log_sd: sd.ln(),
            target,
            accepted: 0,
            proposed: 0,
        }
    }

    fn sd(&self) -> f64 {
        self.log_sd.exp()
    }

    fn record(&mut self, accepted: bool, iteration: usize, adapting: bool) {
        if adapting {
            let gain = 1.0 / ((iteration + 1) as f64).powf(0.6);
            let hit = if accepted { 1.0 } else { 0.0 };
            self.log_sd = (self.log_sd + gain * (hit - self.target)).clamp(-12.0, 5.0);
        } else {
            self.proposed += 1;
            if accepted {
                self.accepted += 1;
            }
        }
    }

    fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Random-walk Metropolis step on a scalar. Returns the new point and
/// whether the move was accepted.
fn rw_step<F: Fn(f64) -> f64>(
    current: f64,
    current_log: f64,
    log_target: F,
    sd: f64,
    rng: &mut SeededRng,
) -> (f64, f64, bool) {
    let proposal = current + sd * rng.standard_normal();
    let proposal_log = log_target(proposal);
    if proposal_log.is_finite() && rng.uniform().ln() < proposal_log - current_log {
        (proposal, proposal_log, true)
    } else {
        (current, current_log, false)
    }
}

fn check_data(data: &CountDataset) -> Result<(), MixtureError> {
    if data.sum() == 0 {
        Err(MixtureError::Degenerate)
    } else {
        Ok(())
    }
}

/// Metropolis-within-Gibbs with latent allocations.
///
/// Each sweep draws the allocations given `(α, λ)`, then `α` from its Beta
/// conditional, then takes one random-walk Metropolis step on `ln λ`.
pub fn run_gibbs(
    data: &CountDataset,
    spec: &MixtureSpec,
    config: &McmcConfig,
    seed: RngSeed,
) -> Result<MixtureChain, MixtureError> {
    check_data(data)?;
    config.validate()?;
    let values = data.values();
    let log_fact: Vec<f64> = values
        .iter()
        .map(|&x| log_gamma_unchecked(x as f64 + 1.0))
        .collect();
    let mut rng = seed.rng();

    let mut logit_alpha = rng.beta_logit(spec.a0, spec.a0)?;
    let mut u = data.mean().ln();
    let mut scale = AdaptiveScale::new(config.initial_proposal_sd, config.target_acceptance);
    let mut state = AllocationState::new(values, vec![Component::Poisson; values.len()])?;

    let kept = config.iterations - config.burn_in;
    let mut alpha_draws = Vec::with_capacity(kept);
    let mut lambda_draws = Vec::with_capacity(kept);

    for it in 0..config.iterations {
        // z | α, λ
        let lambda = u.exp();
        let l1p = lambda.ln_1p();
        for ((z, &x), &lf) in state.labels.iter_mut().zip(values).zip(&log_fact) {
            let p = allocation_probability_logit(x, logit_alpha, lambda, l1p, lf);
            *z = if rng.uniform() < p {
                Component::Poisson
            } else {
                Component::Geometric
            };
        }
        state.recount(values);

        // α | z
        let beta = conditional_alpha(&state, spec.a0);
        logit_alpha = rng.beta_logit(beta.a, beta.b)?;

        // ln λ | z, random walk; the +u is the Jacobian of λ = e^u.
        let target = |v: f64| log_lambda_conditional(v.exp(), &state) + v;
        let (nu, _, accepted) = rw_step(u, target(u), target, scale.sd(), &mut rng);
        u = nu;
        let adapting = config.adapt && it < config.burn_in;
        if it >= config.burn_in || adapting {
            scale.record(accepted, it, adapting);
        }

        if it >= config.burn_in {
            alpha_draws.push(clamp_unit(logistic(logit_alpha)));
            lambda_draws.push(u.exp());
        }
    }

    let mut chain = MixtureChain {
        alpha_draws,
        lambda_draws,
        iterations: config.iterations,
        burn_in: config.burn_in,
        mh_acceptance_rate: scale.rate(),
        final_proposal_sd: vec![scale.sd()],
        seed,
        kernel: Kernel::Gibbs,
        warnings: Vec::new(),
    };
    chain.check_acceptance();
    Ok(chain)
}

/// Log posterior of `(v, u) = (logit α, ln λ)` with the allocations summed
/// out, Jacobians included.
struct MarginalTarget<'a> {
    values: &'a [u64],
    log_fact: Vec<f64>,
    sum: f64,
    a0: f64,
}

impl<'a> MarginalTarget<'a> {
    fn new(values: &'a [u64], a0: f64) -> Self {
        Self {
            values,
            log_fact: values
                .iter()
                .map(|&x| log_gamma_unchecked(x as f64 + 1.0))
                .collect(),
            sum: values.iter().sum::<u64>() as f64,
            a0,
        }
    }

    /// `Σ_i ln(α f1(x_i|λ) + (1-α) f2(x_i|λ))`, with the π(λ) = 1/λ prior
    /// cancelling the Jacobian of `λ = e^u`.
    fn log_likelihood(&self, log_alpha: f64, log_1m_alpha: f64, u: f64) -> f64 {
        let lambda = u.exp();
        let l1p = lambda.ln_1p();
        let mut total = self.sum * u;
        for (&x, &lf) in self.values.iter().zip(&self.log_fact) {
            total += log_add_exp(
                log_alpha - lambda - lf,
                log_1m_alpha - (x as f64 + 1.0) * l1p,
            );
        }
        total
    }

    /// Beta(a0, a0) prior on α times the `α(1-α)` Jacobian, on the logit
    /// scale, normalized.
    fn log_prior_logit(&self, v: f64) -> (f64, f64, f64) {
        let log_alpha = -softplus(-v);
        let log_1m_alpha = -softplus(v);
        let log_beta_fn = 2.0 * log_gamma_unchecked(self.a0) - log_gamma_unchecked(2.0 * self.a0);
        (self.a0 * (log_alpha + log_1m_alpha) - log_beta_fn, log_alpha, log_1m_alpha)
    }

    fn log_posterior(&self, v: f64, u: f64) -> f64 {
        let (lp, la, l1a) = self.log_prior_logit(v);
        lp + self.log_likelihood(la, l1a, u)
    }
}

/// Componentwise random-walk Metropolis on `(logit α, ln λ)` targeting the
/// allocation-marginalized posterior.
pub fn run_marginal_mh(
    data: &CountDataset,
    spec: &MixtureSpec,
    config: &McmcConfig,
    seed: RngSeed,
) -> Result<MixtureChain, MixtureError> {
    check_data(data)?;
    config.validate()?;
    let target = MarginalTarget::new(data.values(), spec.a0);
    let mut rng = seed.rng();

    let mut v = rng.beta_logit(spec.a0, spec.a0)?;
    let mut u = data.mean().ln();
    let mut current = target.log_posterior(v, u);
    let mut scales = [
        AdaptiveScale::new(config.initial_proposal_sd, config.target_acceptance),
        AdaptiveScale::new(config.initial_proposal_sd, config.target_acceptance),
    ];

    let kept = config.iterations - config.burn_in;
    let mut alpha_draws = Vec::with_capacity(kept);
    let mut lambda_draws = Vec::with_capacity(kept);

    for it in 0..config.iterations {
        let adapting = config.adapt && it < config.burn_in;
        let record = it >= config.burn_in || adapting;

        let fixed_u = u;
        let (nv, nlog, acc) = rw_step(
            v,
            current,
            |cand| target.log_posterior(cand, fixed_u),
            scales[0].sd(),
            &mut rng,
        );
        v = nv;
        current = nlog;
        if record {
            scales[0].record(acc, it, adapting);
        }

        let fixed_v = v;
        let (nu, nlog, acc) = rw_step(
            u,
            current,
            |cand| target.log_posterior(fixed_v, cand),
            scales[1].sd(),
            &mut rng,
        );
        u = nu;
        current = nlog;
        if record {
            scales[1].record(acc, it, adapting);
        }

        if it >= config.burn_in {
            alpha_draws.push(clamp_unit(logistic(v)));
            lambda_draws.push(u.exp());
        }
    }

    let mut chain = MixtureChain {
        alpha_draws,
        lambda_draws,
        iterations: config.iterations,
        burn_in: config.burn_in,
        mh_acceptance_rate: 0.5 * (scales[0].rate() + scales[1].rate()),
        final_proposal_sd: scales.iter().map(AdaptiveScale::sd).collect(),
        seed,
        kernel: Kernel::MarginalMh,
        warnings: Vec::new(),
    };
    chain.check_acceptance();
    Ok(chain)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGridConfig {
    /// Inner integral over `ln λ` at each α node.
    pub inner: QuadratureConfig,
    /// Initial number of trapezoid intervals on the `logit α` axis.
    pub initial_intervals: usize,
    pub max_intervals: usize,
    /// Convergence threshold on the normalizer (log scale) and on the mean.
    pub tol: f64,
    /// Bracket cut-off below the maximum of the `logit α` log-density.
    pub drop: f64,
}

impl Default for AlphaGridConfig {
    fn default() -> Self {
        Self {
            inner: QuadratureConfig {
                order: 16,
                initial_panels: 2,
                log_tol: 1e-10,
                ..QuadratureConfig::default()
            },
            initial_intervals: 128,
            max_intervals: 1 << 14,
            tol: 1e-9,
            drop: 40.0,
        }
    }
}

/// Posterior of α on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedPosterior {
    /// Grid nodes in increasing order.
    pub alpha: Vec<f64>,
    /// Posterior density with respect to Lebesgue measure on α.
    pub density: Vec<f64>,
    /// Quadrature weights on α; `Σ weights · density = 1`.
    pub weights: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    /// Log marginal likelihood of the mixture model (1/λ prior, so only
    /// defined up to the prior's arbitrary constant).
    pub log_normalizer: f64,
    cdf: Vec<f64>,
}

impl DiscretizedPosterior {
    /// Posterior quantile by linear interpolation of the grid CDF.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let k = self.cdf.partition_point(|&c| c < q);
        if k == 0 {
            return self.alpha[0];
        }
        if k >= self.cdf.len() {
            return *self.alpha.last().unwrap();
        }
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let t = if c1 > c0 { (q - c0) / (c1 - c0) } else { 0.0 };
        self.alpha[k - 1] + t * (self.alpha[k] - self.alpha[k - 1])
    }

    pub fn normalization(&self) -> f64 {
        self.weights.iter().zip(&self.density).map(|(w, d)| w * d).sum()
    }
}

/// Marginal posterior of α by tensor quadrature: trapezoid on `v = logit α`
/// (spectrally accurate for the smooth, exponentially decaying integrand)
/// over an inner adaptive Gauss–Legendre integral on `u = ln λ`.
pub fn grid_posterior_alpha(
    data: &CountDataset,
    spec: &MixtureSpec,
    grid: &AlphaGridConfig,
) -> Result<DiscretizedPosterior, MixtureError> {
    check_data(data)?;
    grid_posterior_values(data.values(), spec, grid)
}

fn grid_posterior_values(
    values: &[u64],
    spec: &MixtureSpec,
    grid: &AlphaGridConfig,
) -> Result<DiscretizedPosterior, MixtureError> {
    if grid.initial_intervals < 2 || grid.max_intervals < grid.initial_intervals {
        return Err(MixtureError::InvalidConfig("grid interval counts".into()));
    }
    let target = MarginalTarget::new(values, spec.a0);
    let hint_u = if values.is_empty() {
        0.0
    } else {
        (target.sum.max(1.0) / values.len() as f64).ln()
    };
    // ln p(v | x) up to a constant.
    let log_density_v = |v: f64| -> Result<f64, QuadratureError> {
        let (lp, la, l1a) = target.log_prior_logit(v);
        if values.is_empty() {
            // No likelihood: the λ factor separates out and α keeps its prior.
            return Ok(lp);
        }
        let inner = integrate_log(|u| target.log_likelihood(la, l1a, u), hint_u, &grid.inner)?;
        Ok(lp + inner.log_value)
    };

    // Bracket on the logit axis. Errors from the inner integral surface as
    // NaN here and are re-raised below.
    let failure = std::cell::RefCell::new(None);
    let probe = |v: f64| match log_density_v(v) {
        Ok(x) => x,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let bracket_cfg = QuadratureConfig {
        drop: grid.drop,
        step: 0.5,
        ..QuadratureConfig::default()
    };
    let bracketed = bracket(&probe, 0.0, &bracket_cfg);
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    let (lower, upper, _) = bracketed?;

    // Trapezoid with interval halving; previously computed nodes are reused.
    let mut n = grid.initial_intervals;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|k| lower + (upper - lower) * k as f64 / n as f64)
        .collect();
    let mut logs: Vec<f64> = nodes
        .iter()
        .map(|&v| log_density_v(v))
        .collect::<Result<_, _>>()?;
    let mut previous = trapezoid_moments(&nodes, &logs);
    loop {
        if n * 2 > grid.max_intervals {
            return Err(MixtureError::Quadrature(QuadratureError::NotConverged {
                estimate: previous.0,
                error: f64::INFINITY,
            }));
        }
        let mut next_nodes = Vec::with_capacity(2 * n + 1);
        let mut next_logs = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            next_nodes.push(nodes[k]);
            next_logs.push(logs[k]);
            let mid = 0.5 * (nodes[k] + nodes[k + 1]);
            next_nodes.push(mid);
            next_logs.push(log_density_v(mid)?);
        }
        next_nodes.push(nodes[n]);
        next_logs.push(logs[n]);
        nodes = next_nodes;
        logs = next_logs;
        n *= 2;
        let current = trapezoid_moments(&nodes, &logs);
        let converged = (current.0 - previous.0).abs() <= grid.tol
            && (current.1 - previous.1).abs() <= grid.tol;
        previous = current;
        if converged {
            break;
        }
    }

    let (log_z, mean) = previous;
    let h = (upper - lower) / n as f64;
    let mut alpha = Vec::with_capacity(nodes.len());
    let mut density = Vec::with_capacity(nodes.len());
    let mut weights = Vec::with_capacity(nodes.len());
    let mut cdf = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    let mut prev_mass = 0.0;
    for (k, (&v, &lg)) in nodes.iter().zip(&logs).enumerate() {
        let a = logistic(v);
        // p(α) = p(v) / (α (1-α))
        let jac = -softplus(-v) - softplus(v);
        let p_v = (lg - log_z).exp();
        let trap = if k == 0 || k == n { 0.5 * h } else { h };
        alpha.push(a);
        density.push((lg - log_z - jac).exp());
        weights.push(trap * jac.exp());
        if k > 0 {
            acc += 0.5 * h * (prev_mass + p_v);
        }
        prev_mass = p_v;
        cdf.push(acc);
    }
    let total = *cdf.last().unwrap();
    for c in &mut cdf {
        *c /= total;
    }
    let mut post = DiscretizedPosterior {
        alpha,
        density,
        weights,
        mean,
        median: 0.0,
        log_normalizer: log_z,
        cdf,
    };
    post.median = post.quantile(0.5);
    Ok(post)
}

/// `(ln ∫ p(v) dv, ∫ α(v) p(v) dv / ∫ p(v) dv)` by the trapezoid rule.
fn trapezoid_moments(nodes: &[f64], logs: &[f64]) -> (f64, f64) {
    let n = nodes.len() - 1;
    let h = (nodes[n] - nodes[0]) / n as f64;
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut first = 0.0;
    for (k, (&v, &lg)) in nodes.iter().zip(logs).enumerate() {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        let e = w * (lg - m).exp();
        z += e;
        first += e * logistic(v);
    }
    ((z * h).ln() + m, first / z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub mean: f64,
    pub median: f64,
    /// `(probability, value)` pairs in the requested order.
    pub quantiles: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub alpha: ParameterSummary,
    pub lambda: ParameterSummary,
    pub draws: usize,
}

fn summarize(draws: &[f64], quantiles: &[f64]) -> ParameterSummary {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    ParameterSummary {
        mean: draws.iter().sum::<f64>() / draws.len() as f64,
        median: quantile_sorted(&sorted, 0.5),
        quantiles: quantiles
            .iter()
            .map(|&q| (q, quantile_sorted(&sorted, q)))
            .collect(),
    }
}

/// Mean, median and requested quantiles of α and λ.
pub fn posterior_summary(
    chain: &MixtureChain,
    quantiles: &[f64],
) -> Result<SummaryTable, MixtureError> {
    if chain.is_empty() || chain.lambda_draws.is_empty() {
        return Err(MixtureError::EmptyChain);
    }
    if let Some(q) = quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(MixtureError::InvalidConfig(format!("quantile {q} outside [0, 1]")));
    }
    Ok(SummaryTable {
        alpha: summarize(&chain.alpha_draws, quantiles),
        lambda: summarize(&chain.lambda_draws, quantiles),
        draws: chain.len(),
    })
}
