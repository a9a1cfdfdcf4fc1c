//! Seed-pinned replication harness for the three figures and the Lindley
//! table. Every run is a pure function of its configuration: replicas are
//! computed in parallel on independent streams and gathered in replica
//! order before anything is aggregated or written.

pub mod format;
pub mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{simulate_nondegenerate, CalibrationError};
use crate::distributions::{CountFamily, RngSeed};
use crate::evidence::{
    log_bf01_lindley, log_bf10_normal, log_bf12_printed, log_bf12_shared_improper, EvidenceError,
    NormalSummary,
};
use crate::mixture::{run_gibbs, McmcConfig, MixtureError, MixtureSpec};
use crate::special::{logistic, quantile_sorted};
use format::fmt_g;

const TAG_DATA: u64 = 0x_da7a;
const TAG_CHAIN: u64 = 0x_c4a1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub fn is_degenerate(&self) -> bool {
        match self {
            ExperimentError::Evidence(e) => e.is_degenerate(),
            ExperimentError::Mixture(e) => e.is_degenerate(),
            ExperimentError::Calibration(CalibrationError::TooManyDegenerate(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fig1,
    Fig2,
    Fig3,
    Lindley,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Fig1 => "fig1",
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Lindley => "lindley",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "lindley" => Ok(Self::Lindley),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}

pub const FIG1_N_GRID: [u64; 3] = [10, 100, 1000];
pub const FIG2_N_GRID: [u64; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];
pub const LINDLEY_N_GRID: [u64; 6] = [10, 100, 1_000, 10_000, 100_000, 1_000_000];
pub const DEFAULT_A0: [f64; 3] = [0.1, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_grid: Vec<u64>,
    pub replicas: usize,
    pub a0_list: Vec<f64>,
    pub lambda_true: f64,
    /// Fixed test statistic of the Lindley table.
    pub t: f64,
    pub mcmc: McmcConfig,
    pub seed: RngSeed,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Desk-scale defaults: 250 replicas for fig1, 20 for fig2 and fig3.
    pub fn desk(experiment: ExperimentKind, seed: RngSeed) -> Self {
        let (n_grid, replicas) = match experiment {
            ExperimentKind::Fig1 => (FIG1_N_GRID.to_vec(), 250),
            ExperimentKind::Fig2 | ExperimentKind::Fig3 => (FIG2_N_GRID.to_vec(), 20),
            ExperimentKind::Lindley => (LINDLEY_N_GRID.to_vec(), 1),
        };
        Self {
            experiment,
            n_grid,
            replicas,
            a0_list: DEFAULT_A0.to_vec(),
            lambda_true: 4.0,
            t: 1.96,
            mcmc: McmcConfig::default(),
            seed,
            output_dir: PathBuf::from("."),
        }
    }

    /// Replica counts of the published figures (100 simulations for fig2
    /// and fig3).
    pub fn paper_scale(experiment: ExperimentKind, seed: RngSeed) -> Self {
        let mut c = Self::desk(experiment, seed);
        if matches!(experiment, ExperimentKind::Fig2 | ExperimentKind::Fig3) {
            c.replicas = 100;
        }
        c
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        if self.n_grid[0] == 0 {
            return bad("sample sizes must be positive".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid must be strictly ascending".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        match self.experiment {
            ExperimentKind::Fig2 | ExperimentKind::Fig3 => {
                if self.a0_list.is_empty() || self.a0_list.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                    return bad("a0_list must be nonempty and positive".into());
                }
                if !(self.lambda_true > 0.0 && self.lambda_true.is_finite()) {
                    return bad(format!("lambda_true = {} must be positive", self.lambda_true));
                }
            }
            ExperimentKind::Lindley => {
                if !(self.t >= 0.0 && self.t.is_finite()) {
                    return bad(format!("t = {} must be non-negative", self.t));
                }
            }
            ExperimentKind::Fig1 => {}
        }
        Ok(())
    }
}

/// Five-number summary of one series at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibbonBand {
    pub condition: String,
    pub series: String,
    pub n: u64,
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

pub const RIBBON_QUANTILES: [(&str, f64); 5] =
    [("min", 0.0), ("q25", 0.25), ("q50", 0.5), ("q75", 0.75), ("max", 1.0)];

impl RibbonBand {
    fn from_values(condition: &str, series: &str, n: u64, values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(&v, p);
        Self {
            condition: condition.into(),
            series: series.into(),
            n,
            min: q(0.0),
            q25: q(0.25),
            q50: q(0.5),
            q75: q(0.75),
            max: q(1.0),
        }
    }

    pub fn values(&self) -> [f64; 5] {
        [self.min, self.q25, self.q50, self.q75, self.max]
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibbonTable {
    pub experiment: ExperimentKind,
    pub bands: Vec<RibbonBand>,
}

impl RibbonTable {
    pub fn band(&self, condition: &str, series: &str, n: u64) -> Option<&RibbonBand> {
        self.bands
            .iter()
            .find(|b| b.condition == condition && b.series == series && b.n == n)
    }

    /// Bands of one (condition, series) pair in ascending `n`.
    pub fn series(&self, condition: &str, series: &str) -> Vec<&RibbonBand> {
        self.bands
            .iter()
            .filter(|b| b.condition == condition && b.series == series)
            .collect()
    }

    /// `(condition, series, n, quantile label, value)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, u64, &'static str, f64)> + '_ {
        self.bands.iter().flat_map(|b| {
            RIBBON_QUANTILES
                .iter()
                .zip(b.values())
                .map(move |(&(label, _), v)| (b.condition.as_str(), b.series.as_str(), b.n, label, v))
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("condition,series,n,quantile,value\n");
        for (c, series, n, label, v) in self.rows() {
            writeln!(s, "{c},{series},{n},{label},{}", fmt_g(v)).unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig1Record {
    pub hypothesis: Hypothesis,
    pub n: u64,
    pub replica: usize,
    pub log_bf10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Output {
    pub records: Vec<Fig1Record>,
    pub ribbons: RibbonTable,
}

impl Fig1Output {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("experiment,hypothesis,n,replica,log_bf10\n");
        for r in &self.records {
            writeln!(s, "fig1,{},{},{},{}", r.hypothesis.label(), r.n, r.replica, fmt_g(r.log_bf10))
                .unwrap();
        }
        s
    }

    pub fn values(&self, hypothesis: Hypothesis, n: u64) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.hypothesis == hypothesis && r.n == n)
            .map(|r| r.log_bf10)
            .collect()
    }
}

/// `log B10` of the normal testbed over replicas drawn under the null
/// (`x̄ ~ N(0, 1/n)`) and under the prior predictive of the alternative
/// (`μ ~ N(0, 1)`, `x̄ ~ N(μ, 1/n)`).
pub fn run_fig1(config: &ExperimentConfig) -> Result<Fig1Output, ExperimentError> {
    config.validate()?;
    let tasks: Vec<(Hypothesis, u64, usize)> = [Hypothesis::H0, Hypothesis::H1]
        .into_iter()
        .flat_map(|h| {
            config
                .n_grid
                .iter()
                .flat_map(move |&n| (0..config.replicas).map(move |r| (h, n, r)))
        })
        .collect();
    let records = tasks
        .into_par_iter()
        .map(|(h, n, r)| {
            let mut rng = config.seed.child(h as u64).child(n).child(r as u64).rng();
            let se = (n as f64).sqrt().recip();
            let mu = match h {
                Hypothesis::H0 => 0.0,
                Hypothesis::H1 => rng.standard_normal(),
            };
            let xbar = mu + se * rng.standard_normal();
            let summary = NormalSummary::standard(n, xbar)?;
            Ok(Fig1Record {
                hypothesis: h,
                n,
                replica: r,
                log_bf10: log_bf10_normal(&summary).log_bf,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut out = Fig1Output {
        records,
        ribbons: RibbonTable {
            experiment: ExperimentKind::Fig1,
            bands: Vec::new(),
        },
    };
    for h in [Hypothesis::H0, Hypothesis::H1] {
        for &n in &config.n_grid {
            let band = RibbonBand::from_values(h.label(), "log_bf10", n, &out.values(h, n));
            out.ribbons.bands.push(band);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRecord {
    pub a0: f64,
    pub n: u64,
    pub replica: usize,
    pub post_mean_alpha: f64,
    pub post_median_alpha: f64,
    /// 5% and 95% posterior quantiles of α.
    pub post_interval_alpha: (f64, f64),
    pub post_prob_m1_shared: Option<f64>,
    pub post_prob_m1_printed: Option<f64>,
    /// All-zero datasets discarded before this replica's dataset.
    pub resimulated: usize,
    pub mh_acceptance_rate: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaOutput {
    pub experiment: ExperimentKind,
    pub records: Vec<AlphaRecord>,
    pub ribbons: RibbonTable,
    /// Discarded all-zero datasets, counted once per (n, replica).
    pub resimulated: usize,
}

pub fn condition_a0(a0: f64) -> String {
    format!("a0={}", fmt_g(a0))
}

impl AlphaOutput {
    pub fn to_csv(&self) -> String {
        let fig3 = self.experiment == ExperimentKind::Fig3;
        let mut s = String::from("a0,n,replica,post_mean_alpha,post_median_alpha");
        if fig3 {
            s.push_str(",post_prob_m1_shared,post_prob_m1_printed");
        }
        s.push('\n');
        for r in &self.records {
            write!(
                s,
                "{},{},{},{},{}",
                fmt_g(r.a0),
                r.n,
                r.replica,
                fmt_g(r.post_mean_alpha),
                fmt_g(r.post_median_alpha)
            )
            .unwrap();
            if fig3 {
                let f = |v: Option<f64>| v.map(fmt_g).unwrap_or_default();
                write!(s, ",{},{}", f(r.post_prob_m1_shared), f(r.post_prob_m1_printed)).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn records_at(&self, a0: f64, n: u64) -> impl Iterator<Item = &AlphaRecord> {
        self.records.iter().filter(move |r| r.a0 == a0 && r.n == n)
    }
}

fn run_alpha(config: &ExperimentConfig, with_bf: bool) -> Result<AlphaOutput, ExperimentError> {
    config.validate()?;
    let tasks: Vec<(usize, u64, usize)> = (0..config.a0_list.len())
        .flat_map(|a| {
            config
                .n_grid
                .iter()
                .flat_map(move |&n| (0..config.replicas).map(move |r| (a, n, r)))
        })
        .collect();
    let records = tasks
        .into_par_iter()
        .map(|(a, n, r)| {
            let a0 = config.a0_list[a];
            // The dataset depends on (n, replica) only, so every a0 sees the
            // same data.
            let mut rng = config.seed.child(TAG_DATA).child(n).child(r as u64).rng();
            let (data, resimulated) =
                simulate_nondegenerate(CountFamily::Poisson, config.lambda_true, n as usize, &mut rng)?;
            let chain_seed = config
                .seed
                .child(TAG_CHAIN)
                .child(a0.to_bits())
                .child(n)
                .child(r as u64);
            let chain = run_gibbs(&data, &MixtureSpec::new(a0)?, &config.mcmc, chain_seed)?;
            let mut sorted = chain.alpha_draws.clone();
            sorted.sort_by(f64::total_cmp);
            let (shared, printed) = if with_bf {
                (
                    Some(logistic(log_bf12_shared_improper(&data)?.log_bf)),
                    Some(logistic(log_bf12_printed(&data).log_bf)),
                )
            } else {
                (None, None)
            };
            Ok(AlphaRecord {
                a0,
                n,
                replica: r,
                post_mean_alpha: chain.alpha_mean(),
                post_median_alpha: quantile_sorted(&sorted, 0.5),
                post_interval_alpha: (quantile_sorted(&sorted, 0.05), quantile_sorted(&sorted, 0.95)),
                post_prob_m1_shared: shared,
                post_prob_m1_printed: printed,
                resimulated,
                mh_acceptance_rate: chain.mh_acceptance_rate,
                warnings: chain.warnings,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let experiment = if with_bf { ExperimentKind::Fig3 } else { ExperimentKind::Fig2 };
    let first_a0 = config.a0_list[0];
    let resimulated = records
        .iter()
        .filter(|r| r.a0 == first_a0)
        .map(|r| r.resimulated)
        .sum();
    let mut out = AlphaOutput {
        experiment,
        records,
        ribbons: RibbonTable {
            experiment,
            bands: Vec::new(),
        },
        resimulated,
    };
    type Column = (&'static str, fn(&AlphaRecord) -> Option<f64>);
    let mut columns: Vec<Column> = vec![
        ("post_mean_alpha", |r| Some(r.post_mean_alpha)),
        ("post_median_alpha", |r| Some(r.post_median_alpha)),
    ];
    if with_bf {
        columns.push(("post_prob_m1_shared", |r| r.post_prob_m1_shared));
        columns.push(("post_prob_m1_printed", |r| r.post_prob_m1_printed));
    }
    for &a0 in &config.a0_list {
        let condition = condition_a0(a0);
        for (series, get) in &columns {
            for &n in &config.n_grid {
                let values: Vec<f64> = out.records_at(a0, n).filter_map(get).collect();
                out.ribbons
                    .bands
                    .push(RibbonBand::from_values(&condition, series, n, &values));
            }
        }
    }
    Ok(out)
}

/// Posterior mean and median of the mixture weight α over Poisson datasets
/// for every `(a0, n, replica)`.
pub fn run_fig2(config: &ExperimentConfig) -> Result<AlphaOutput, ExperimentError> {
    run_alpha(config, false)
}

/// As [`run_fig2`], plus `P(M1 | x)` for Poisson against Geometric under
/// equal prior weights, from the shared-improper Bayes factor and from the
/// printed closed form.
pub fn run_fig3(config: &ExperimentConfig) -> Result<AlphaOutput, ExperimentError> {
    run_alpha(config, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindleyTable {
    pub t: f64,
    pub rows: Vec<(u64, f64)>,
}

impl LindleyTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,n,log_bf01\n");
        for &(n, v) in &self.rows {
            writeln!(s, "{},{n},{}", fmt_g(self.t), fmt_g(v)).unwrap();
        }
        s
    }
}

/// `log B01` at a fixed standardized statistic `t` over a grid of sample
/// sizes.
pub fn run_lindley(t: f64, n_grid: &[u64]) -> Result<LindleyTable, ExperimentError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ExperimentError::InvalidConfig(format!("t = {t} must be non-negative")));
    }
    let rows = n_grid
        .iter()
        .map(|&n| Ok((n, log_bf01_lindley(n, t)?.log_bf)))
        .collect::<Result<_, ExperimentError>>()?;
    Ok(LindleyTable { t, rows })
}

/// A named file produced by an experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentResult {
    Fig1(Fig1Output),
    Alpha(AlphaOutput),
    Lindley(LindleyTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub result: ExperimentResult,
    pub artifacts: Vec<Artifact>,
}

fn file_safe(s: &str) -> String {
    s.replace('=', "_")
}

/// `(condition, y label, series, fixed y range)` of one plot.
type PlotSpec<'a> = (&'a str, &'a str, Vec<&'a str>, Option<(f64, f64)>);

fn ribbon_svgs(table: &RibbonTable, plots: &[PlotSpec]) -> Vec<Artifact> {
    plots
        .iter()
        .map(|(condition, y_label, series, range)| {
            let plot = svg::Plot {
                title: format!("{} {}", table.experiment.label(), condition),
                y_label: y_label.to_string(),
                y_range: *range,
                series: series
                    .iter()
                    .enumerate()
                    .map(|(k, s)| svg::Series {
                        label: s.to_string(),
                        color: svg::PALETTE[k % svg::PALETTE.len()],
                        bands: table.series(condition, s),
                    })
                    .collect(),
            };
            Artifact {
                name: format!("{}_{}.svg", table.experiment.label(), file_safe(condition)),
                contents: svg::render(&plot),
            }
        })
        .collect()
}

/// Runs the configured experiment and renders its CSV and SVG artifacts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun, ExperimentError> {
    config.validate()?;
    let label = config.experiment.label();
    let mut artifacts = Vec::new();
    let result = match config.experiment {
        ExperimentKind::Fig1 => {
            let out = run_fig1(config)?;
            artifacts.push(Artifact {
                name: format!("{label}.csv"),
                contents: out.to_csv(),
            });
            artifacts.push(Artifact {
                name: format!("{label}_ribbons.csv"),
                contents: out.ribbons.to_csv(),
            });
            let plots: Vec<_> = ["H0", "H1"]
                .iter()
                .map(|h| (*h, "log B10", vec!["log_bf10"], None))
                .collect();
            artifacts.extend(ribbon_svgs(&out.ribbons, &plots));
            ExperimentResult::Fig1(out)
        }
        ExperimentKind::Fig2 | ExperimentKind::Fig3 => {
            let out = if config.experiment == ExperimentKind::Fig2 {
                run_fig2(config)?
            } else {
                run_fig3(config)?
            };
            artifacts.push(Artifact {
                name: format!("{label}.csv"),
                contents: out.to_csv(),
            });
            artifacts.push(Artifact {
                name: format!("{label}_ribbons.csv"),
                contents: out.ribbons.to_csv(),
            });
            let conditions: Vec<String> = config.a0_list.iter().map(|&a| condition_a0(a)).collect();
            let series = if config.experiment == ExperimentKind::Fig2 {
                vec!["post_mean_alpha", "post_median_alpha"]
            } else {
                vec!["post_median_alpha", "post_prob_m1_shared", "post_prob_m1_printed"]
            };
            let plots: Vec<_> = conditions
                .iter()
                .map(|c| (c.as_str(), "posterior summary", series.clone(), Some((0.0, 1.0))))
                .collect();
            artifacts.extend(ribbon_svgs(&out.ribbons, &plots));
            ExperimentResult::Alpha(out)
        }
        ExperimentKind::Lindley => {
            let table = run_lindley(config.t, &config.n_grid)?;
            artifacts.push(Artifact {
                name: format!("{label}.csv"),
                contents: table.to_csv(),
            });
            let bands: Vec<RibbonBand> = table
                .rows
                .iter()
                .map(|&(n, v)| RibbonBand::from_values("t", "log_bf01", n, &[v]))
                .collect();
            let ribbons = RibbonTable {
                experiment: ExperimentKind::Lindley,
                bands,
            };
            let plot = svg::Plot {
                title: format!("lindley t={}", fmt_g(config.t)),
                y_label: "log B01".into(),
                y_range: None,
                series: vec![svg::Series {
                    label: "log_bf01".into(),
                    color: svg::PALETTE[0],
                    bands: ribbons.bands.iter().collect(),
                }],
            };
            artifacts.push(Artifact {
                name: format!("lindley_t_{}.svg", fmt_g(config.t)),
                contents: svg::render(&plot),
            });
            ExperimentResult::Lindley(table)
        }
    };
    Ok(ExperimentRun {
        config: config.clone(),
        result,
        artifacts,
    })
}

/// Writes each artifact into `dir` through a temporary file and rename.
/// On failure, files written by this call are removed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, ExperimentError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExperimentError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        let tmp = dir.join(format!(".{}.tmp", a.name));
        let res = std::fs::write(&tmp, a.contents.as_bytes())
            .and_then(|_| std::fs::rename(&tmp, &path));
        if let Err(e) = res {
            let _ = std::fs::remove_file(&tmp);
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(io(&path)(e));
        }
        written.push(path);
    }
    Ok(written)
}
