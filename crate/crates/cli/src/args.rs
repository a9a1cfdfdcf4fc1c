use std::path::PathBuf;

use bayes_arbiter::calibration::{AlphaSummary, PredictiveMode, StandardDiscrepancy};
use bayes_arbiter::experiments::ExperimentKind;
use bayes_arbiter::CountFamily;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bayes factors, mixture-weight model comparison and predictive calibration.
#[derive(Debug, Parser)]
#[command(name = "bayes-arbiter", version)]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bayes factors with closed-form evidences.
    Bf {
        #[command(subcommand)]
        model: BfCommand,
    },
    /// Posterior of the Poisson/Geometric mixture weight.
    Mixture(MixtureArgs),
    /// Predictive calibration of Bayes factors and α summaries.
    Calibrate {
        #[command(subcommand)]
        target: CalibrateCommand,
    },
    /// Regenerate a figure's tables and ribbon plots.
    Experiment(ExperimentArgs),
    /// log B01 at a fixed standardized statistic.
    Lindley(LindleyArgs),
}

#[derive(Debug, Subcommand)]
pub enum BfCommand {
    /// Point null θ = θ0 against θ ~ N(θ0, σ²) for a normal mean.
    Normal(NormalArgs),
    /// Poisson against Geometric under the 1/λ prior.
    Poisgeo(DataArgs),
}

#[derive(Debug, Clone, Args)]
pub struct NormalArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub xbar: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct DataArgs {
    /// Comma-separated counts.
    #[arg(long)]
    pub data: Option<String>,
    /// File of counts separated by commas, spaces or newlines; `#` starts a
    /// comment and a non-numeric first line is read as a header.
    #[arg(long, value_name = "FILE")]
    pub data_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gibbs,
    Mh,
    Grid,
}

#[derive(Debug, Clone, Args)]
pub struct McmcArgs {
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0.5)]
    pub proposal_sd: f64,
    /// Keep the proposal scale fixed during burn-in.
    #[arg(long)]
    pub no_adapt: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MixtureArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.5)]
    pub a0: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Gibbs)]
    pub kernel: KernelArg,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Comma-separated posterior quantile levels.
    #[arg(long, default_value = "0.025,0.25,0.5,0.75,0.975")]
    pub quantiles: String,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Subcommand)]
pub enum CalibrateCommand {
    /// Predictive tails of B01 on the normal testbed.
    Normal(CalibrateNormalArgs),
    /// Predictive tails of B12 for Poisson against Geometric.
    Poisgeo(CalibrateCountArgs),
    /// Posterior predictive p-value of a discrepancy.
    Pvalue(PvalueArgs),
    /// Parametric-bootstrap cut-off for a posterior summary of α.
    Bootstrap(BootstrapArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TailArgs {
    #[arg(long, default_value = "posterior")]
    pub mode: PredictiveMode,
    #[arg(long, default_value_t = 10_000)]
    pub n_rep: usize,
    /// Two comma-separated prior model weights; selects the single
    /// encompassing predictive.
    #[arg(long)]
    pub weights: Option<String>,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateNormalArgs {
    #[command(flatten)]
    pub summary: NormalArgs,
    /// Prior standard deviation of θ under the alternative.
    #[arg(long, default_value_t = 1.0)]
    pub prior_sd: f64,
    #[command(flatten)]
    pub tails: TailArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BfMethodArg {
    Shared,
    Printed,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateCountArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = BfMethodArg::Shared)]
    pub method: BfMethodArg,
    #[command(flatten)]
    pub tails: TailArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PvalueArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "poisson")]
    pub family: CountFamily,
    /// mean, variance, max or zero_count.
    #[arg(long, default_value = "mean")]
    pub discrepancy: StandardDiscrepancy,
    #[arg(long, default_value_t = 10_000)]
    pub n_rep: usize,
    /// Posterior draws of λ taken from the conjugate posterior under 1/λ.
    #[arg(long, default_value_t = 4_000)]
    pub draws: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BootstrapArgs {
    #[arg(long, default_value = "poisson")]
    pub generator: CountFamily,
    #[arg(long, default_value_t = 4.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100)]
    pub n_obs: usize,
    #[arg(long, default_value_t = 20)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    #[arg(long, default_value = "median")]
    pub summary: AlphaSummary,
    #[arg(long, default_value_t = 0.5)]
    pub a0: f64,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// fig1, fig2, fig3 or lindley.
    pub experiment: ExperimentKind,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Output directory [default: results/<experiment>].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Comma-separated ascending sample sizes.
    #[arg(long)]
    pub n_grid: Option<String>,
    /// Comma-separated Beta(a0, a0) prior parameters.
    #[arg(long)]
    pub a0: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Replica counts of the published figures.
    #[arg(long)]
    pub paper_scale: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LindleyArgs {
    #[arg(long)]
    pub t: f64,
    /// One or more comma-separated sample sizes; `1e6` notation accepted.
    #[arg(long)]
    pub n: String,
}
