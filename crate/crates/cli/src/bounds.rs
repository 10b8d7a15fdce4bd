//! `ovi bounds`: re-check the regret bounds of a finished run directory.

use std::fs;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::{RunSummary, COMPARATOR_FILE, CONFIG_COPY, SUMMARY_FILE};
use crate::setup::{prepare, resolve};
use crate::theory::{evaluate, theorem_of, BoundReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremSelector {
    One(u8),
    All,
}

impl TheoremSelector {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "all" => Ok(Self::All),
            n @ ("1" | "2" | "3" | "4") => Ok(Self::One(n.parse().expect("digit"))),
            other => Err(CliError::Config(format!("theorem must be 1, 2, 3, 4 or all, got {other:?}"))),
        }
    }

    fn selects(self, theorem: u8) -> bool {
        match self {
            Self::All => true,
            Self::One(n) => n == theorem,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsLine {
    pub algorithm: String,
    pub report: BoundReport,
}

impl BoundsLine {
    pub fn render(&self) -> String {
        let r = &self.report;
        format!(
            "theorem {} {}: regret={:.6} bound={:.6} slack={:.4} {}{}",
            r.theorem,
            self.algorithm,
            r.regret,
            r.bound,
            r.slack_ratio(),
            match (r.holds, r.deterministic) {
                (true, _) => "holds",
                (false, true) => "VIOLATED",
                (false, false) => "exceeded (informational)",
            },
            r.note.as_ref().map(|n| format!(" [{n}]")).unwrap_or_default()
        )
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Last `cum_loss` entry of a series file.
fn final_cumulative(text: &str, path: &Path) -> Result<f64, CliError> {
    let last = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .last()
        .ok_or_else(|| CliError::Config(format!("{} has no rows", path.display())))?;
    last.split(',')
        .nth(2)
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| CliError::Config(format!("{}: malformed row {last:?}", path.display())))
}

/// Recomputes every selected bound from the files in `run_dir`. The returned
/// error is `Check` when a deterministic bound is violated.
pub fn cmd_bounds(run_dir: &Path, selector: TheoremSelector) -> Result<Vec<BoundsLine>, CliError> {
    let summary: RunSummary = serde_json::from_str(&read(&run_dir.join(SUMMARY_FILE))?)
        .map_err(|e| CliError::Config(format!("{SUMMARY_FILE}: {e}")))?;
    let comparator_path = run_dir.join(COMPARATOR_FILE);
    let comparator_value = final_cumulative(&read(&comparator_path)?, &comparator_path)?;
    let text = read(&run_dir.join(CONFIG_COPY))?;
    let cfg = ExperimentConfig::parse(&text, Path::new(&summary.config_dir))?;
    let prepared = prepare(&cfg)?;
    let kind = cfg.loss;

    let mut lines = Vec::new();
    let mut matched = false;
    for entry in &cfg.algorithms {
        let res = resolve(entry, &prepared, kind)?;
        let Some(theorem) = theorem_of(&res) else { continue };
        if !selector.selects(theorem) {
            continue;
        }
        matched = true;
        let series = run_dir.join(format!("{}.csv", res.entry.name));
        let total = final_cumulative(&read(&series)?, &series)?;
        let report = evaluate(&res, &prepared, kind, total, &summary.comparator.theta_star, comparator_value)?
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{}: the constants of theorem {theorem} are unavailable for loss {}",
                    res.entry.name,
                    kind.name()
                ))
            })?;
        lines.push(BoundsLine {
            algorithm: res.entry.name.clone(),
            report,
        });
    }
    if !matched {
        return Err(CliError::Config(match selector {
            TheoremSelector::One(n) => format!("no configured algorithm is covered by theorem {n}"),
            TheoremSelector::All => "no configured algorithm is covered by any theorem".into(),
        }));
    }
    Ok(lines)
}

/// `Check` error listing the violated deterministic bounds, if any.
pub fn violations(lines: &[BoundsLine]) -> Result<(), CliError> {
    let bad: Vec<&str> = lines
        .iter()
        .filter(|l| l.report.deterministic && !l.report.holds)
        .map(|l| l.algorithm.as_str())
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("bound violated for {}", bad.join(", "))))
    }
}
