use std::path::{Path, PathBuf};
use std::time::Instant;

use bayes_arbiter::calibration::{
    bootstrap_alpha_cutoff, posterior_predictive_pvalue, predictive_bf_tails,
    predictive_bf_tails_encompassing, BootstrapConfig, CalibrationReport, CountModel, NormalBf01,
    NormalMeanPrior, NormalModel, PoissonGeometricBf,
};
use bayes_arbiter::evidence::{
    log_bf10_normal, log_bf12_printed, log_bf12_shared_improper, log_marginal_geometric_improper,
    log_marginal_poisson_improper, CountPrior, LogBayesFactor,
};
use bayes_arbiter::experiments::format::fmt_g;
use bayes_arbiter::experiments::{
    run_experiment, run_lindley, write_artifacts, ExperimentConfig, ExperimentResult,
};
use bayes_arbiter::mixture::{
    grid_posterior_alpha, posterior_summary, run_gibbs, run_marginal_mh, AlphaGridConfig,
    McmcConfig, MixtureChain, MixtureSpec, ParameterSummary,
};
use bayes_arbiter::{CountDataset, CountFamily, Method, ModelWeights, NormalSummary, RngSeed};
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::output::{num, sha256_hex, write_manifest, ArtifactEntry, CliError, RunManifest};

pub fn dispatch(command: Command) -> Result<Value, CliError> {
    match command {
        Command::Bf { model } => match model {
            BfCommand::Normal(a) => bf_normal(&a),
            BfCommand::Poisgeo(a) => bf_poisgeo(&a),
        },
        Command::Mixture(a) => mixture(&a),
        Command::Calibrate { target } => match target {
            CalibrateCommand::Normal(a) => calibrate_normal(&a),
            CalibrateCommand::Poisgeo(a) => calibrate_poisgeo(&a),
            CalibrateCommand::Pvalue(a) => pvalue(&a),
            CalibrateCommand::Bootstrap(a) => bootstrap(&a),
        },
        Command::Experiment(a) => experiment(&a),
        Command::Lindley(a) => lindley(&a),
    }
}

pub fn parse_counts(text: &str) -> Result<Vec<u64>, CliError> {
    let mut values = Vec::new();
    let mut first_line = true;
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let header = first_line && tokens.iter().all(|t| t.parse::<f64>().is_err());
        first_line = false;
        if header {
            continue;
        }
        for t in tokens {
            let v = t
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("`{t}` is not a non-negative integer count")))?;
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(CliError::Usage("no counts supplied".into()));
    }
    Ok(values)
}

fn load_data(a: &DataArgs) -> Result<CountDataset, CliError> {
    let values = match (&a.data, &a.data_file) {
        (Some(inline), _) => parse_counts(inline)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
            parse_counts(&text)?
        }
        (None, None) => return Err(CliError::Usage("supply --data or --data-file".into())),
    };
    CountDataset::new(values).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| CliError::Usage(format!("invalid {what} `{t}`")))
        })
        .collect()
}

/// Sample sizes written as integers or in `1e6` notation.
fn parse_sizes(s: &str) -> Result<Vec<u64>, CliError> {
    let raw: Vec<f64> = parse_list(s, "sample size")?;
    if raw.is_empty() {
        return Err(CliError::Usage("no sample sizes supplied".into()));
    }
    raw.into_iter()
        .map(|x| {
            if x >= 1.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 {
                Ok(x as u64)
            } else {
                Err(CliError::Usage(format!("sample size {x} must be a positive integer")))
            }
        })
        .collect()
}

fn seed_of(s: &SeedArgs) -> RngSeed {
    RngSeed::new(s.seed, s.stream)
}

fn seed_json(s: RngSeed) -> Value {
    json!({ "master_seed": s.master_seed, "stream_index": s.stream_index })
}

fn bf_json(bf: &LogBayesFactor, name: &str) -> Value {
    let mut m = Map::new();
    m.insert(format!("log_{name}"), num(bf.log_bf));
    m.insert(name.to_string(), num(bf.bayes_factor()));
    m.insert("post_prob_numerator".into(), num(bf.posterior_probability()));
    m.insert("method".into(), json!(bf.method.label()));
    Value::Object(m)
}

fn bf_normal(a: &NormalArgs) -> Result<Value, CliError> {
    let s = NormalSummary::new(a.n, a.xbar, a.theta0, a.sigma)?;
    let bf = log_bf10_normal(&s);
    Ok(json!({
        "command": "bf normal",
        "n": a.n,
        "xbar": num(a.xbar),
        "theta0": num(a.theta0),
        "sigma": num(a.sigma),
        "t": num(s.t_statistic()),
        "log_bf10": num(bf.log_bf),
        "bf10": num(bf.bayes_factor()),
        "log_bf01": num(-bf.log_bf),
        "post_prob_h1": num(bf.posterior_probability()),
        "method": bf.method.label(),
    }))
}

fn bf_poisgeo(a: &DataArgs) -> Result<Value, CliError> {
    let data = load_data(a)?;
    let shared = log_bf12_shared_improper(&data)?;
    let printed = log_bf12_printed(&data);
    Ok(json!({
        "command": "bf poisgeo",
        "n": data.len(),
        "sum": data.sum(),
        "log_marginal_poisson": num(log_marginal_poisson_improper(&data)?.log_value),
        "log_marginal_geometric": num(log_marginal_geometric_improper(&data)?.log_value),
        "shared_improper": bf_json(&shared, "bf12"),
        "printed_formula": bf_json(&printed, "bf12"),
    }))
}

fn mcmc_config(m: &McmcArgs) -> McmcConfig {
    McmcConfig {
        iterations: m.iters,
        burn_in: m.burn_in,
        initial_proposal_sd: m.proposal_sd,
        adapt: !m.no_adapt,
        ..McmcConfig::default()
    }
}

fn summary_json(s: &ParameterSummary) -> Value {
    let q: Map<String, Value> = s.quantiles.iter().map(|&(p, v)| (fmt_g(p), num(v))).collect();
    json!({ "mean": num(s.mean), "median": num(s.median), "quantiles": q })
}

fn chain_json(chain: &MixtureChain, quantiles: &[f64]) -> Result<Value, CliError> {
    let table = posterior_summary(chain, quantiles)?;
    Ok(json!({
        "alpha": summary_json(&table.alpha),
        "lambda": summary_json(&table.lambda),
        "draws": table.draws,
        "iterations": chain.iterations,
        "burn_in": chain.burn_in,
        "mh_acceptance_rate": num(chain.mh_acceptance_rate),
        "final_proposal_sd": chain.final_proposal_sd.iter().map(|&v| num(v)).collect::<Vec<_>>(),
        "warnings": chain.warnings,
    }))
}

fn mixture(a: &MixtureArgs) -> Result<Value, CliError> {
    let data = load_data(&a.data)?;
    let spec = MixtureSpec::new(a.a0)?;
    let quantiles: Vec<f64> = parse_list(&a.quantiles, "quantile")?;
    if let Some(q) = quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(CliError::Usage(format!("quantile {q} outside [0, 1]")));
    }
    let seed = seed_of(&a.seed);
    let mut out = json!({
        "command": "mixture",
        "n": data.len(),
        "sum": data.sum(),
        "a0": num(a.a0),
        "seed": seed_json(seed),
    });
    let body = match a.kernel {
        KernelArg::Gibbs => {
            let chain = run_gibbs(&data, &spec, &mcmc_config(&a.mcmc), seed)?;
            let mut v = chain_json(&chain, &quantiles)?;
            v["kernel"] = json!("gibbs");
            v
        }
        KernelArg::Mh => {
            let chain = run_marginal_mh(&data, &spec, &mcmc_config(&a.mcmc), seed)?;
            let mut v = chain_json(&chain, &quantiles)?;
            v["kernel"] = json!("marginal_mh");
            v
        }
        KernelArg::Grid => {
            let post = grid_posterior_alpha(&data, &spec, &AlphaGridConfig::default())?;
            let q: Map<String, Value> = quantiles
                .iter()
                .map(|&p| (fmt_g(p), num(post.quantile(p))))
                .collect();
            json!({
                "kernel": "grid",
                "alpha": { "mean": num(post.mean), "median": num(post.median), "quantiles": q },
                "nodes": post.alpha.len(),
                "log_normalizer": num(post.log_normalizer),
            })
        }
    };
    for (k, v) in body.as_object().expect("object") {
        out[k] = v.clone();
    }
    Ok(out)
}

fn report_json(command: &str, r: &CalibrationReport, weights: Option<&ModelWeights>) -> Value {
    json!({
        "command": command,
        "p0": num(r.p0),
        "p1": num(r.p1),
        "mc_se0": num(r.mc_se0),
        "mc_se1": num(r.mc_se1),
        "n_rep": r.n_rep,
        "degenerate0": r.degenerate0,
        "degenerate1": r.degenerate1,
        "mode": match r.mode {
            bayes_arbiter::calibration::PredictiveMode::Prior => "prior",
            bayes_arbiter::calibration::PredictiveMode::Posterior => "posterior",
        },
        "observed_log_bf": num(r.observed_log_bf01),
        "method": r.method.label(),
        "improper_prior": r.improper_prior,
        "encompassing_weights": weights.map(|w| w.as_slice().iter().map(|&x| num(x)).collect::<Vec<_>>()),
    })
}

fn weights_of(t: &TailArgs) -> Result<Option<ModelWeights>, CliError> {
    t.weights
        .as_deref()
        .map(|s| {
            let w: Vec<f64> = parse_list(s, "weight")?;
            if w.len() != 2 {
                return Err(CliError::Usage("--weights takes exactly two values".into()));
            }
            ModelWeights::new(w).map_err(|e| CliError::Usage(e.to_string()))
        })
        .transpose()
}

fn calibrate_normal(a: &CalibrateNormalArgs) -> Result<Value, CliError> {
    let s = &a.summary;
    let observed = NormalSummary::new(s.n, s.xbar, s.theta0, s.sigma)?;
    let m0 = NormalModel {
        theta0: s.theta0,
        sigma: s.sigma,
        prior: NormalMeanPrior::Point,
    };
    let m1 = NormalModel {
        prior: NormalMeanPrior::Normal {
            mean: s.theta0,
            sd: a.prior_sd * s.sigma,
        },
        ..m0
    };
    let t = &a.tails;
    let weights = weights_of(t)?;
    let seed = seed_of(&t.seed);
    let r = match &weights {
        Some(w) => predictive_bf_tails_encompassing(&observed, &m0, &m1, w, &NormalBf01, t.mode, t.n_rep, seed)?,
        None => predictive_bf_tails(&observed, &m0, &m1, &NormalBf01, t.mode, t.n_rep, seed)?,
    };
    Ok(report_json("calibrate normal", &r, weights.as_ref()))
}

fn calibrate_poisgeo(a: &CalibrateCountArgs) -> Result<Value, CliError> {
    let data = load_data(&a.data)?;
    let stat = PoissonGeometricBf {
        method: match a.method {
            BfMethodArg::Shared => Method::ClosedForm,
            BfMethodArg::Printed => Method::PrintedFormula,
        },
    };
    let m0 = CountModel::new(CountFamily::Poisson, CountPrior::Reciprocal);
    let m1 = CountModel::new(CountFamily::Geometric, CountPrior::Reciprocal);
    let t = &a.tails;
    let weights = weights_of(t)?;
    let seed = seed_of(&t.seed);
    let r = match &weights {
        Some(w) => predictive_bf_tails_encompassing(&data, &m0, &m1, w, &stat, t.mode, t.n_rep, seed)?,
        None => predictive_bf_tails(&data, &m0, &m1, &stat, t.mode, t.n_rep, seed)?,
    };
    Ok(report_json("calibrate poisgeo", &r, weights.as_ref()))
}

fn pvalue(a: &PvalueArgs) -> Result<Value, CliError> {
    let data = load_data(&a.data)?;
    let seed = seed_of(&a.seed);
    let model = CountModel::new(a.family, CountPrior::Reciprocal);
    let draws = model.sample_posterior(&data, a.draws, seed.child(0))?;
    let p = posterior_predictive_pvalue(data.values(), &draws, a.family, &a.discrepancy, a.n_rep, seed.child(1))?;
    Ok(json!({
        "command": "calibrate pvalue",
        "family": a.family.label(),
        "discrepancy": serde_json::to_value(a.discrepancy).expect("serializable"),
        "p": num(p.p),
        "mc_se": num(p.mc_se),
        "n_rep": p.n_rep,
        "posterior_draws": draws.len(),
        "seed": seed_json(seed),
    }))
}

fn bootstrap(a: &BootstrapArgs) -> Result<Value, CliError> {
    let config = BootstrapConfig {
        spec: MixtureSpec::new(a.a0)?,
        generator: a.generator,
        lambda_true: a.lambda,
        n_obs: a.n_obs,
        replicas: a.replicas,
        mcmc: mcmc_config(&a.mcmc),
        summary: a.summary,
        seed: seed_of(&a.seed),
    };
    let c = bootstrap_alpha_cutoff(&config, a.q)?;
    Ok(json!({
        "command": "calibrate bootstrap",
        "generator": a.generator.label(),
        "lambda": num(a.lambda),
        "n_obs": a.n_obs,
        "summary": serde_json::to_value(a.summary).expect("serializable"),
        "q": num(c.q),
        "cutoff": num(c.cutoff),
        "replicas": c.replicas,
        "resimulated": c.resimulated,
        "seed": seed_json(config.seed),
    }))
}

fn experiment(a: &ExperimentArgs) -> Result<Value, CliError> {
    let started = Instant::now();
    let seed = seed_of(&a.seed);
    let mut config = if a.paper_scale {
        ExperimentConfig::paper_scale(a.experiment, seed)
    } else {
        ExperimentConfig::desk(a.experiment, seed)
    };
    config.output_dir = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(a.experiment.label()));
    if let Some(r) = a.replicas {
        config.replicas = r;
    }
    if let Some(g) = &a.n_grid {
        config.n_grid = parse_sizes(g)?;
    }
    if let Some(list) = &a.a0 {
        config.a0_list = parse_list(list, "a0")?;
    }
    if let Some(l) = a.lambda {
        config.lambda_true = l;
    }
    if let Some(t) = a.t {
        config.t = t;
    }
    if let Some(i) = a.iters {
        config.mcmc.iterations = i;
    }
    if let Some(b) = a.burn_in {
        config.mcmc.burn_in = b;
    }
    let run = run_experiment(&config)?;

    let dir = config.output_dir.as_path();
    let written = write_artifacts(dir, &run.artifacts)?;
    let entries: Vec<ArtifactEntry> = run
        .artifacts
        .iter()
        .map(|x| ArtifactEntry {
            name: x.name.clone(),
            sha256: sha256_hex(x.contents.as_bytes()),
            bytes: x.contents.len(),
        })
        .collect();
    let command = format!("experiment {}", a.experiment.label());
    let manifest = RunManifest {
        command: command.clone(),
        config: &config,
        seed: seed_json(seed),
        artifacts: entries,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    if let Err(e) = write_manifest(dir, &manifest) {
        remove_all(&written);
        return Err(e);
    }

    let (resimulated, warnings) = match &run.result {
        ExperimentResult::Alpha(out) => (
            out.resimulated,
            out.records.iter().filter(|r| !r.warnings.is_empty()).count(),
        ),
        _ => (0, 0),
    };
    Ok(json!({
        "command": command,
        "output_dir": dir.display().to_string(),
        "seed": seed_json(seed),
        "artifacts": manifest
            .artifacts
            .iter()
            .map(|e| json!({ "name": e.name, "sha256": e.sha256 }))
            .collect::<Vec<_>>(),
        "manifest": "manifest.json",
        "resimulated_datasets": resimulated,
        "chains_with_warnings": warnings,
    }))
}

fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = std::fs::remove_file(Path::new(p));
    }
}

fn lindley(a: &LindleyArgs) -> Result<Value, CliError> {
    let sizes = parse_sizes(&a.n)?;
    let table = run_lindley(a.t, &sizes)?;
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|&(n, v)| json!({ "n": n, "log_bf01": num(v) }))
        .collect();
    let mut out = json!({
        "command": "lindley",
        "t": num(a.t),
        "rows": rows,
        "method": Method::ClosedForm.label(),
    });
    if let [(n, v)] = table.rows[..] {
        out["n"] = json!(n);
        out["log_bf01"] = num(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_with_header_and_comments() {
        assert_eq!(parse_counts("x\n1,2\n# note\n3 4\n").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_counts("2,3").unwrap(), vec![2, 3]);
        assert!(parse_counts("1,-2").is_err());
        assert!(parse_counts("1\nx").is_err());
        assert!(parse_counts("# nothing\n").is_err());
    }

    #[test]
    fn sizes_accept_scientific_notation() {
        assert_eq!(parse_sizes("1e6").unwrap(), vec![1_000_000]);
        assert_eq!(parse_sizes("10, 100").unwrap(), vec![10, 100]);
        assert!(parse_sizes("0").is_err());
        assert!(parse_sizes("2.5").is_err());
    }
}
