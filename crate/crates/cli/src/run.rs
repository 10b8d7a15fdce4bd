//! `ovi run`: play every configured learner over the stream and write the
//! series files and `summary.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ovi_core::evaluation::{
    best_in_hindsight_with, build_ledger, generalization_estimate, online_to_batch, ComparatorOptions,
    RegretLedger,
};
use ovi_core::learners::{run_online, RunOptions};
use ovi_core::losses::point_loss;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, GridShape};
use crate::error::CliError;
use crate::setup::{prepare, resolve};
use crate::theory::{evaluate, BoundReport};

pub const CONFIG_COPY: &str = "config.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const COMPARATOR_FILE: &str = "comparator.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub d: usize,
    pub d_in: usize,
    pub task: String,
    pub seed: u64,
    pub standardize: bool,
    pub permute: bool,
    pub holdout_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorSummary {
    pub value: f64,
    pub avg_value: f64,
    pub method: String,
    pub theta_star: Vec<f64>,
    pub final_grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub kind: String,
    pub eta: Option<f64>,
    pub final_avg_loss: f64,
    pub regret: f64,
    pub bound: Option<f64>,
    pub slack_ratio: Option<f64>,
    pub wall_ms: f64,
    pub bound_check: Option<BoundReport>,
    pub grid: Option<String>,
    pub experts: Option<usize>,
    pub holdout_risk: Option<f64>,
    pub holdout_se: Option<f64>,
    pub backtracked_steps: usize,
    pub box_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dataset: DatasetSummary,
    pub loss: String,
    pub mc_samples: usize,
    pub comparator: ComparatorSummary,
    pub algorithms: BTreeMap<String, AlgorithmSummary>,
    /// Learner with the lowest final average cumulative loss.
    pub lowest_final_avg_loss: String,
    /// Directory the configuration was read from; relative paths in the
    /// copied config resolve against it.
    pub config_dir: String,
}

/// Fixed 17-significant-digit rendering shared by every series file.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn series_csv(ledger: &RegretLedger) -> String {
    let mut out = String::from("t,instant_loss,cum_loss,avg_cum_loss\n");
    for i in 0..ledger.horizon() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            fmt_f64(ledger.instantaneous[i]),
            fmt_f64(ledger.cumulative[i]),
            fmt_f64(ledger.average[i])
        );
    }
    out
}

fn comparator_csv(ledger: &RegretLedger) -> String {
    let mut out = String::from("t,cum_loss_star,avg_cum_loss_star\n");
    for i in 0..ledger.horizon() {
        let _ = writeln!(out, "{},{},{}", i + 1, fmt_f64(ledger.cumulative[i]), fmt_f64(ledger.average[i]));
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_run(config_path: &Path, out: &Path) -> Result<RunSummary, CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
    let cfg = ExperimentConfig::parse(&text, &base)?;
    let config_dir = fs::canonicalize(&base).unwrap_or(base);
    run_experiment(&cfg, &text, &config_dir, out)
}

pub fn run_experiment(cfg: &ExperimentConfig, text: &str, config_dir: &Path, out: &Path) -> Result<RunSummary, CliError> {
    let prepared = prepare(cfg)?;
    let resolved = cfg
        .algorithms
        .iter()
        .map(|a| resolve(a, &prepared, cfg.loss))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    write(out.join(CONFIG_COPY), text)?;

    let kind = cfg.loss;
    let comparator = best_in_hindsight_with(
        &prepared.stream,
        kind,
        &prepared.bx,
        &ComparatorOptions {
            seed: cfg.seed,
            ..Default::default()
        },
    )?;
    let star_losses = prepared
        .stream
        .iter()
        .map(|ex| point_loss(kind, &comparator.theta_star, ex))
        .collect::<Result<Vec<_>, _>>()?;
    let star_ledger = RegretLedger::from_losses(&star_losses)?;
    write(out.join(COMPARATOR_FILE), &comparator_csv(&star_ledger))?;
    // The comparator line is the ledger total so every summary number can be
    // recomputed from the series files.
    let comparator_value = star_ledger.total();

    let options = RunOptions {
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
        record_snapshots: false,
    };
    let t = prepared.horizon();
    let mut algorithms = BTreeMap::new();
    for res in &resolved {
        let start = Instant::now();
        let trace = run_online(&res.config, &prepared.stream, kind, &options).map_err(|e| {
            CliError::Runtime(format!("{}: {e}", res.entry.name))
        })?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let ledger = build_ledger(&trace)?;
        write(out.join(format!("{}.csv", res.entry.name)), &series_csv(&ledger))?;
        let check = evaluate(res, &prepared, kind, ledger.total(), &comparator.theta_star, comparator_value)?;
        let (holdout_risk, holdout_se) = if prepared.holdout.is_empty() {
            (None, None)
        } else {
            let theta_bar = online_to_batch(&trace)?;
            let est = generalization_estimate(&theta_bar, &prepared.holdout, kind)?;
            (Some(est.mean), Some(est.se))
        };
        let experts = match &res.config.spec {
            ovi_core::learners::LearnerSpec::EwaGrid { experts, .. } => Some(experts.len()),
            _ => None,
        };
        algorithms.insert(
            res.entry.name.clone(),
            AlgorithmSummary {
                kind: res.entry.kind.tag().to_string(),
                eta: res.eta,
                final_avg_loss: ledger.average[t - 1],
                regret: ledger.total() - comparator_value,
                bound: check.as_ref().map(|c| c.bound),
                slack_ratio: check.as_ref().map(|c| c.slack_ratio()).filter(|v| v.is_finite()),
                wall_ms,
                bound_check: check,
                grid: res.grid_shape.map(|g| match g {
                    GridShape::Lattice => "lattice".to_string(),
                    GridShape::Diagonal => "diagonal".to_string(),
                }),
                experts,
                holdout_risk,
                holdout_se,
                backtracked_steps: trace.backtracked_steps,
                box_violations: trace.box_violations,
            },
        );
    }
    let lowest_final_avg_loss = algorithms
        .iter()
        .min_by(|a, b| a.1.final_avg_loss.total_cmp(&b.1.final_avg_loss))
        .map(|(k, _)| k.clone())
        .unwrap_or_default();
    let summary = RunSummary {
        dataset: DatasetSummary {
            name: prepared.name.clone(),
            horizon: t,
            d: prepared.dim(),
            d_in: prepared.d_in,
            task: prepared.task.name().to_string(),
            seed: cfg.seed,
            standardize: cfg.standardize,
            permute: cfg.permute,
            holdout_rows: prepared.holdout.len(),
        },
        loss: kind.name().to_string(),
        mc_samples: cfg.mc_samples,
        comparator: ComparatorSummary {
            value: comparator_value,
            avg_value: star_ledger.average[t - 1],
            method: comparator.method.name().to_string(),
            theta_star: comparator.theta_star.clone(),
            final_grad_norm: if comparator.final_grad_norm.is_finite() { comparator.final_grad_norm } else { 0.0 },
        },
        algorithms,
        lowest_final_avg_loss,
        config_dir: config_dir.display().to_string(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(out.join(SUMMARY_FILE), &(json + "\n"))?;
    Ok(summary)
}
