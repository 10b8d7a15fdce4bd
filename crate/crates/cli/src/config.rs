//! Experiment configuration: line-oriented `key = value` pairs, `#` comments,
//! and one `[algorithm.<name>]` section per learner.
//!
//! ```text
//! dataset = toy
//! n = 10000
//! seed = 1
//! loss = hinge
//!
//! [algorithm.svb]
//! schedule = inv_var_sqrt_t
//!
//! [algorithm.svb_convex]
//! kind = svb
//! schedule = convex
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ovi_core::data::{CsvSchema, LabelColumn};
use ovi_core::learners::Algorithm;
use ovi_core::losses::LossKind;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Toy {
        n: usize,
    },
    IidRegression {
        n: usize,
        theta_star: Vec<f64>,
        noise_sd: f64,
    },
    Csv {
        path: PathBuf,
        schema: CsvSchema,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSetting {
    Value(f64),
    /// `1 / sqrt(T)`.
    InvSqrtHorizon,
    /// Minimiser of the grid bound, `sqrt(8 log K / (B^2 T))`.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSetting {
    Fixed,
    InvVarianceSqrtT,
    Convex,
    StronglyConvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridShape {
    Lattice,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmEntry {
    pub name: String,
    pub kind: Algorithm,
    pub eta: Option<EtaSetting>,
    pub schedule: Option<ScheduleSetting>,
    pub alpha: Option<f64>,
    pub strong_convexity: Option<f64>,
    pub project: Option<bool>,
    pub resolution: Option<usize>,
    pub grid: Option<GridShape>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub loss: LossKind,
    pub algorithms: Vec<AlgorithmEntry>,
    pub horizon: Option<usize>,
    pub seed: u64,
    pub mc_samples: usize,
    pub holdout: f64,
    pub prior_s: f64,
    pub m_bound: f64,
    pub sigma_max: f64,
    pub permute: bool,
    pub standardize: bool,
    pub subsample: Option<usize>,
}

type Section = BTreeMap<String, (usize, String)>;

fn err(line: usize, msg: impl std::fmt::Display) -> CliError {
    if line == 0 {
        CliError::Config(msg.to_string())
    } else {
        CliError::Config(format!("line {line}: {msg}"))
    }
}

fn split_sections(text: &str) -> Result<(Section, Vec<(String, usize, Section)>), CliError> {
    let mut top = Section::new();
    let mut sections: Vec<(String, usize, Section)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header"))?
                .trim();
            let name = inner
                .strip_prefix("algorithm.")
                .ok_or_else(|| err(line_no, format!("unknown section [{inner}]")))?
                .trim();
            if name.is_empty() {
                return Err(err(line_no, "empty algorithm name"));
            }
            if sections.iter().any(|(n, _, _)| n == name) {
                return Err(err(line_no, format!("duplicate algorithm {name:?}")));
            }
            sections.push((name.to_string(), line_no, Section::new()));
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got {line:?}")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() {
            return Err(err(line_no, "empty key"));
        }
        let target = match sections.last_mut() {
            Some((_, _, s)) => s,
            None => &mut top,
        };
        if target.insert(k.clone(), (line_no, v)).is_some() {
            return Err(err(line_no, format!("duplicate key {k:?}")));
        }
    }
    Ok((top, sections))
}

struct Reader {
    map: Section,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| err(line, format!("invalid value {v:?} for {key}"))),
        }
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(Some(true)),
                "false" | "no" | "0" | "off" => Ok(Some(false)),
                _ => Err(err(line, format!("invalid boolean {v:?} for {key}"))),
            },
        }
    }

    fn positive(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        let line = self.map.get(key).map(|(l, _)| *l).unwrap_or(0);
        match self.parse::<f64>(key)? {
            Some(v) if !(v > 0.0) || !v.is_finite() => Err(err(line, format!("{key} must be positive"))),
            other => Ok(other),
        }
    }

    fn finish(self, context: &str) -> Result<(), CliError> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(err(line, format!("key {k:?} is not valid {context}"))),
        }
    }
}

fn parse_loss(v: &str, hidden: Option<usize>) -> Option<LossKind> {
    match v.to_ascii_lowercase().replace('-', "_").as_str() {
        "hinge" => Some(LossKind::Hinge),
        "squared" | "squared_linear" => Some(LossKind::SquaredLinear),
        "nn" | "squared_nn" => Some(LossKind::SquaredNn {
            hidden_width: hidden.unwrap_or(8),
        }),
        _ => None,
    }
}

fn parse_vec(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn parse_algorithm(name: &str, line: usize, section: Section) -> Result<AlgorithmEntry, CliError> {
    let mut r = Reader { map: section };
    let kind_text = r.take("kind").map(|(_, v)| v).unwrap_or_else(|| name.to_string());
    let kind = Algorithm::from_tag(&kind_text)
        .ok_or_else(|| err(line, format!("unknown algorithm kind {kind_text:?}")))?;
    let eta = match r.take("eta") {
        None => None,
        Some((l, v)) => Some(match v.to_ascii_lowercase().as_str() {
            "inv_sqrt_t" | "1/sqrt(t)" => EtaSetting::InvSqrtHorizon,
            "optimal" => EtaSetting::Optimal,
            _ => match v.parse::<f64>() {
                Ok(x) if x > 0.0 && x.is_finite() => EtaSetting::Value(x),
                _ => return Err(err(l, format!("invalid eta {v:?}"))),
            },
        }),
    };
    let schedule = match r.take("schedule") {
        None => None,
        Some((l, v)) => Some(match v.to_ascii_lowercase().as_str() {
            "fixed" => ScheduleSetting::Fixed,
            "inv_var_sqrt_t" | "experimental" => ScheduleSetting::InvVarianceSqrtT,
            "convex" => ScheduleSetting::Convex,
            "strongly_convex" => ScheduleSetting::StronglyConvex,
            _ => return Err(err(l, format!("unknown schedule {v:?}"))),
        }),
    };
    let grid = match r.take("grid") {
        None => None,
        Some((l, v)) => Some(match v.to_ascii_lowercase().as_str() {
            "lattice" => GridShape::Lattice,
            "diagonal" => GridShape::Diagonal,
            _ => return Err(err(l, format!("unknown grid {v:?}"))),
        }),
    };
    let entry = AlgorithmEntry {
        name: name.to_string(),
        kind,
        eta,
        schedule,
        alpha: r.positive("alpha")?,
        strong_convexity: r.positive("H")?,
        project: r.flag("project")?,
        resolution: r.parse("resolution")?,
        grid,
    };
    r.finish(&format!("in [algorithm.{name}]"))?;

    let bad = |field: &str| err(line, format!("{field} does not apply to {} in [algorithm.{name}]", kind.tag()));
    let allowed: &[&str] = match kind {
        Algorithm::Sva => &["eta", "project"],
        Algorithm::Svb => &["eta", "schedule", "H"],
        Algorithm::Ngvi => &["eta", "alpha"],
        Algorithm::Oga | Algorithm::OgaEl => &["eta"],
        Algorithm::EwaGrid => &["eta", "resolution", "grid"],
    };
    let present = [
        ("eta", entry.eta.is_some()),
        ("schedule", entry.schedule.is_some()),
        ("alpha", entry.alpha.is_some()),
        ("H", entry.strong_convexity.is_some()),
        ("project", entry.project.is_some()),
        ("resolution", entry.resolution.is_some()),
        ("grid", entry.grid.is_some()),
    ];
    for (field, is_set) in present {
        if is_set && !allowed.contains(&field) {
            return Err(bad(field));
        }
    }
    if matches!(entry.eta, Some(EtaSetting::Optimal)) && kind != Algorithm::EwaGrid {
        return Err(err(line, format!("eta = optimal is only defined for ewa in [algorithm.{name}]")));
    }
    if kind == Algorithm::Svb {
        let schedule = entry.schedule.unwrap_or(ScheduleSetting::InvVarianceSqrtT);
        match schedule {
            ScheduleSetting::Fixed if entry.eta.is_none() => {
                return Err(err(line, "schedule = fixed requires eta"))
            }
            ScheduleSetting::Fixed => {}
            _ if entry.eta.is_some() => {
                return Err(err(line, "eta only applies with schedule = fixed"))
            }
            _ => {}
        }
        if (schedule == ScheduleSetting::StronglyConvex) != entry.strong_convexity.is_some() {
            return Err(err(line, "H is required by, and only by, schedule = strongly_convex"));
        }
    }
    if entry.resolution == Some(0) {
        return Err(err(line, "resolution must be positive"));
    }
    Ok(entry)
}

impl ExperimentConfig {
    /// Parses `text`; relative CSV paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let (top, sections) = split_sections(text)?;
        let mut r = Reader { map: top };
        let seed: u64 = r
            .parse("seed")?
            .ok_or_else(|| err(0, "seed is required"))?;
        let hidden: Option<usize> = r.parse("hidden_width")?;
        let loss = match r.take("loss") {
            None => return Err(err(0, "loss is required")),
            Some((l, v)) => parse_loss(&v, hidden).ok_or_else(|| err(l, format!("unknown loss {v:?}")))?,
        };
        if hidden.is_some() && !matches!(loss, LossKind::SquaredNn { .. }) {
            return Err(err(0, "hidden_width only applies to the nn loss"));
        }
        if hidden == Some(0) {
            return Err(err(0, "hidden_width must be positive"));
        }
        let (dline, dkind) = r.take("dataset").ok_or_else(|| err(0, "dataset is required"))?;
        let dataset = match dkind.to_ascii_lowercase().as_str() {
            "toy" => DatasetSpec::Toy {
                n: r.parse("n")?.unwrap_or(10_000),
            },
            "iid_regression" => {
                let (tl, tv) = r
                    .take("theta_star")
                    .ok_or_else(|| err(dline, "iid_regression requires theta_star"))?;
                let theta_star = parse_vec(&tv).ok_or_else(|| err(tl, format!("invalid theta_star {tv:?}")))?;
                let noise_sd = r.parse("noise_sd")?.unwrap_or(0.5);
                if !(noise_sd >= 0.0) {
                    return Err(err(0, "noise_sd must be nonnegative"));
                }
                DatasetSpec::IidRegression {
                    n: r.parse("n")?.unwrap_or(2000),
                    theta_star,
                    noise_sd,
                }
            }
            "csv" => {
                let (_, path) = r.take("path").ok_or_else(|| err(dline, "csv dataset requires path"))?;
                let path = PathBuf::from(path);
                let path = if path.is_absolute() { path } else { base_dir.join(path) };
                let (ll, label) = r
                    .take("label_column")
                    .ok_or_else(|| err(dline, "csv dataset requires label_column"))?;
                if label.is_empty() {
                    return Err(err(ll, "empty label_column"));
                }
                let label = match label.parse::<usize>() {
                    Ok(i) => LabelColumn::Index(i),
                    Err(_) => LabelColumn::Name(label),
                };
                let name = r
                    .take("name")
                    .map(|(_, v)| v)
                    .unwrap_or_else(|| path.file_stem().map_or("csv".into(), |s| s.to_string_lossy().into_owned()));
                let mut schema = CsvSchema::new(label, name);
                schema.positive_label = r.take("positive_label").map(|(_, v)| v);
                if let Some((l, d)) = r.take("delimiter") {
                    schema.delimiter = match d.as_str() {
                        "tab" | "\\t" => b'\t',
                        s if s.len() == 1 => s.as_bytes()[0],
                        _ => return Err(err(l, format!("invalid delimiter {d:?}"))),
                    };
                }
                if let Some(h) = r.flag("header")? {
                    schema.has_header = h;
                }
                DatasetSpec::Csv { path, schema }
            }
            other => return Err(err(dline, format!("unknown dataset {other:?}"))),
        };
        if matches!(dataset, DatasetSpec::Toy { n: 0 } | DatasetSpec::IidRegression { n: 0, .. }) {
            return Err(err(0, "n must be positive"));
        }
        let classification = matches!(
            dataset,
            DatasetSpec::Toy { .. }
                | DatasetSpec::Csv {
                    schema: CsvSchema {
                        positive_label: Some(_),
                        ..
                    },
                    ..
                }
        );
        if loss.is_classification() != classification {
            return Err(err(0, format!("loss {} does not match the dataset's task", loss.name())));
        }
        let horizon = r.parse("horizon")?;
        if horizon == Some(0) {
            return Err(err(0, "horizon must be positive"));
        }
        let holdout: f64 = r.parse("holdout")?.unwrap_or(0.0);
        if !(0.0..1.0).contains(&holdout) {
            return Err(err(0, "holdout must lie in [0, 1)"));
        }
        let mc_samples = r.parse("mc_samples")?.unwrap_or(32);
        if mc_samples == 0 {
            return Err(err(0, "mc_samples must be positive"));
        }
        let is_csv = matches!(dataset, DatasetSpec::Csv { .. });
        let mut cfg = ExperimentConfig {
            loss,
            horizon,
            seed,
            mc_samples,
            holdout,
            prior_s: r.positive("prior_s")?.unwrap_or(1.0),
            m_bound: r.positive("m_bound")?.unwrap_or(20.0),
            sigma_max: r.positive("sigma_max")?.unwrap_or(1.0),
            permute: r.flag("permute")?.unwrap_or(is_csv),
            standardize: r.flag("standardize")?.unwrap_or(false),
            subsample: r.parse("subsample")?,
            dataset,
            algorithms: sections
                .into_iter()
                .map(|(name, line, s)| parse_algorithm(&name, line, s))
                .collect::<Result<_, _>>()?,
        };
        r.finish("at top level")?;
        if cfg.algorithms.is_empty() {
            cfg.algorithms = Self::default_algorithms();
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// The five learners with the default experimental settings plus the
    /// grid aggregator.
    pub fn default_algorithms() -> Vec<AlgorithmEntry> {
        ["oga", "ogael", "sva", "svb", "ngvi", "ewa"]
            .iter()
            .map(|n| AlgorithmEntry {
                name: n.to_string(),
                kind: Algorithm::from_tag(n).expect("static tag"),
                eta: None,
                schedule: None,
                alpha: None,
                strong_convexity: None,
                project: None,
                resolution: None,
                grid: None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::parse(text, Path::new("/data"))
    }

    #[test]
    fn minimal_toy() {
        let c = parse("dataset = toy\nn = 100\nseed = 3\nloss = hinge\n[algorithm.sva]\n").unwrap();
        assert_eq!(c.dataset, DatasetSpec::Toy { n: 100 });
        assert_eq!(c.algorithms.len(), 1);
        assert_eq!(c.algorithms[0].kind, Algorithm::Sva);
        assert_eq!(c.mc_samples, 32);
        assert!(!c.permute);
    }

    #[test]
    fn sections_and_kinds() {
        let c = parse(
            "# comment\ndataset = toy\nseed = 1\nloss = hinge\n\
             [algorithm.fast]\nkind = svb\nschedule = convex\n\
             [algorithm.ewa]\neta = optimal\nresolution = 41\ngrid = diagonal\n",
        )
        .unwrap();
        assert_eq!(c.algorithms[0].kind, Algorithm::Svb);
        assert_eq!(c.algorithms[0].schedule, Some(ScheduleSetting::Convex));
        assert_eq!(c.algorithms[1].grid, Some(GridShape::Diagonal));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "dataset = toy\nseed = 1\nloss = hinge\n";
        assert!(parse("dataset = toy\nloss = hinge\n[algorithm.sva]\n").is_err());
        assert!(parse(&format!("{base}horizon = 0\n[algorithm.sva]\n")).is_err());
        assert!(parse(&format!("{base}[algorithm.sva]\nalpha = 1\n")).is_err());
        assert!(parse(&format!("{base}[algorithm.nope]\n")).is_err());
        assert!(parse(&format!("{base}[algorithm.svb]\nschedule = strongly_convex\n")).is_err());
        assert!(parse(&format!("{base}[algorithm.oga]\neta = optimal\n")).is_err());
        assert!(parse(&format!("{base}bogus = 1\n[algorithm.oga]\n")).is_err());
        assert_eq!(parse(base).unwrap().algorithms, ExperimentConfig::default_algorithms());
        assert!(parse("dataset = toy\nseed = 1\nloss = squared\n[algorithm.oga]\n").is_err());
    }

    #[test]
    fn csv_paths_resolve() {
        let c = parse(
            "dataset = csv\npath = pima.csv\nlabel_column = 8\npositive_label = 1\nseed = 1\nloss = hinge\n[algorithm.oga]\n",
        )
        .unwrap();
        match c.dataset {
            DatasetSpec::Csv { path, schema } => {
                assert_eq!(path, PathBuf::from("/data/pima.csv"));
                assert_eq!(schema.label, LabelColumn::Index(8));
                assert_eq!(schema.name, "pima");
            }
            _ => unreachable!(),
        }
        assert!(c.permute);
    }
}
