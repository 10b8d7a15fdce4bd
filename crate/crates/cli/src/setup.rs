//! Turning a parsed configuration into a stream, a box and learner configs.

use ovi_core::data::{
    gen_iid_regression, gen_toy_classification, load_csv, prepare_stream, Dataset, StreamConfig, Task,
};
use ovi_core::evaluation::loss_range;
use ovi_core::family::{BoxConstraints, GaussianPrior};
use ovi_core::learners::{Algorithm, EwaGrid, LearnerConfig, LearnerSpec, SvbSchedule};
use ovi_core::losses::{lipschitz_constant, DataExample, LossKind};

use crate::config::{AlgorithmEntry, DatasetSpec, EtaSetting, ExperimentConfig, GridShape, ScheduleSetting};
use crate::error::CliError;

pub const DEFAULT_NGVI_ALPHA: f64 = 0.02;
pub const DEFAULT_GRID_RESOLUTION: usize = 41;
const MAX_LATTICE: usize = 100_000;
const NGVI_MAX_BACKTRACKS: usize = 10;

#[derive(Debug, Clone)]
pub struct Prepared {
    pub name: String,
    pub task: Task,
    pub stream: Vec<DataExample>,
    pub holdout: Vec<DataExample>,
    pub d_in: usize,
    pub bx: BoxConstraints,
    pub prior: GaussianPrior,
}

impl Prepared {
    pub fn horizon(&self) -> usize {
        self.stream.len()
    }

    pub fn dim(&self) -> usize {
        self.bx.dim()
    }
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    let ds = match &cfg.dataset {
        DatasetSpec::Toy { n } => gen_toy_classification(*n, cfg.seed),
        DatasetSpec::IidRegression {
            n,
            theta_star,
            noise_sd,
        } => gen_iid_regression(*n, theta_star, *noise_sd, cfg.seed),
        DatasetSpec::Csv { path, schema } => load_csv(path, schema),
    };
    ds.map_err(|e| CliError::Config(format!("dataset: {e}")))
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let raw = load_dataset(cfg)?;
    let ds = prepare_stream(
        &raw,
        &StreamConfig {
            seed: cfg.seed.wrapping_add(1),
            permute: cfg.permute,
            standardize: cfg.standardize,
            subsample: cfg.subsample,
        },
    )
    .map_err(|e| CliError::Config(format!("dataset: {e}")))?;
    let holdout_rows = (cfg.holdout * ds.len() as f64).round() as usize;
    let (train, holdout) = if holdout_rows > 0 {
        let (a, b) = ds
            .split_tail(holdout_rows)
            .map_err(|e| CliError::Config(format!("holdout: {e}")))?;
        (a, b.examples())
    } else {
        (ds, Vec::new())
    };
    let mut stream = train.examples();
    if let Some(h) = cfg.horizon {
        stream.truncate(h);
    }
    let d_in = train.dim();
    let d = cfg.loss.param_dim(d_in);
    let bx = BoxConstraints::symmetric(d, cfg.m_bound, 0.0, cfg.sigma_max)?;
    let prior = GaussianPrior::new(cfg.prior_s, d)?;
    Ok(Prepared {
        name: train.name.clone(),
        task: train.task,
        stream,
        holdout,
        d_in,
        bx,
        prior,
    })
}

pub fn experts_for(entry: &EffectiveEntry, bx: &BoxConstraints) -> Result<(Vec<Vec<f64>>, GridShape), CliError> {
    let r = entry.resolution;
    let d = bx.dim();
    let shape = match entry.grid {
        Some(s) => s,
        None if (r as f64).powi(d as i32) <= MAX_LATTICE as f64 => GridShape::Lattice,
        None => GridShape::Diagonal,
    };
    let experts = match shape {
        GridShape::Lattice => EwaGrid::lattice(bx, r)?,
        GridShape::Diagonal => {
            let step = |j: usize, i: usize| {
                if r == 1 {
                    0.5 * (bx.m_lo()[j] + bx.m_hi()[j])
                } else {
                    bx.m_lo()[j] + (bx.m_hi()[j] - bx.m_lo()[j]) * i as f64 / (r - 1) as f64
                }
            };
            (0..r).map(|i| (0..d).map(|j| step(j, i)).collect()).collect()
        }
    };
    Ok((experts, shape))
}

/// Algorithm entry with the defaults filled in.
#[derive(Debug, Clone)]
pub struct EffectiveEntry {
    pub name: String,
    pub kind: Algorithm,
    pub eta: EtaSetting,
    pub schedule: ScheduleSetting,
    pub alpha: f64,
    pub strong_convexity: Option<f64>,
    pub project: bool,
    pub resolution: usize,
    pub grid: Option<GridShape>,
}

impl EffectiveEntry {
    pub fn from_entry(e: &AlgorithmEntry) -> Self {
        let default_eta = match e.kind {
            Algorithm::Ngvi => EtaSetting::Value(1.0),
            Algorithm::EwaGrid => EtaSetting::Optimal,
            _ => EtaSetting::InvSqrtHorizon,
        };
        Self {
            name: e.name.clone(),
            kind: e.kind,
            eta: e.eta.unwrap_or(default_eta),
            schedule: e.schedule.unwrap_or(ScheduleSetting::InvVarianceSqrtT),
            alpha: e.alpha.unwrap_or(DEFAULT_NGVI_ALPHA),
            strong_convexity: e.strong_convexity,
            project: e.project.unwrap_or(true),
            resolution: e.resolution.unwrap_or(DEFAULT_GRID_RESOLUTION),
            grid: e.grid,
        }
    }
}

/// A learner ready to run, with the constants that went into it.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub entry: EffectiveEntry,
    pub config: LearnerConfig,
    /// Scalar step size, when the learner has one.
    pub eta: Option<f64>,
    pub grid_shape: Option<GridShape>,
    /// Range `B` of the expert losses.
    pub loss_range: Option<f64>,
}

pub fn lipschitz(kind: LossKind, prepared: &Prepared) -> Result<f64, CliError> {
    lipschitz_constant(kind, &prepared.stream, &prepared.bx).map_err(CliError::from)
}

pub fn resolve(entry: &AlgorithmEntry, prepared: &Prepared, kind: LossKind) -> Result<Resolved, CliError> {
    let e = EffectiveEntry::from_entry(entry);
    let t = prepared.horizon() as f64;
    let scalar = |eta: EtaSetting| match eta {
        EtaSetting::Value(v) => v,
        EtaSetting::InvSqrtHorizon => 1.0 / t.sqrt(),
        EtaSetting::Optimal => unreachable!("rejected while parsing"),
    };
    let mut grid_shape = None;
    let mut range = None;
    let (spec, eta) = match e.kind {
        Algorithm::Sva => {
            let eta = scalar(e.eta);
            (
                LearnerSpec::Sva {
                    eta,
                    project: e.project,
                },
                Some(eta),
            )
        }
        Algorithm::Oga => {
            let eta = scalar(e.eta);
            (LearnerSpec::Oga { eta }, Some(eta))
        }
        Algorithm::OgaEl => {
            let eta = scalar(e.eta);
            (LearnerSpec::OgaEl { eta }, Some(eta))
        }
        Algorithm::Ngvi => {
            let eta = scalar(e.eta);
            (
                LearnerSpec::Ngvi {
                    eta,
                    alpha: e.alpha,
                    max_backtracks: NGVI_MAX_BACKTRACKS,
                },
                Some(eta),
            )
        }
        Algorithm::Svb => {
            let schedule = match e.schedule {
                ScheduleSetting::Fixed => SvbSchedule::Fixed(scalar(e.eta)),
                ScheduleSetting::InvVarianceSqrtT => SvbSchedule::InvVarianceSqrtT,
                ScheduleSetting::Convex => SvbSchedule::ConvexBound {
                    diameter: prepared.bx.diameter(),
                    lipschitz: lipschitz(kind, prepared)?,
                },
                ScheduleSetting::StronglyConvex => SvbSchedule::StronglyConvexBound {
                    strong_convexity: e.strong_convexity.expect("checked while parsing"),
                },
            };
            let eta = match schedule {
                SvbSchedule::Fixed(v) => Some(v),
                _ => None,
            };
            (LearnerSpec::Svb { schedule }, eta)
        }
        Algorithm::EwaGrid => {
            let (experts, shape) = experts_for(&e, &prepared.bx)?;
            grid_shape = Some(shape);
            let b = loss_range(&prepared.stream, kind, &experts)?;
            range = Some(b);
            let eta = match e.eta {
                EtaSetting::Optimal if b > 0.0 && experts.len() > 1 => {
                    (8.0 * (experts.len() as f64).ln() / (b * b * t)).sqrt()
                }
                EtaSetting::Optimal => 1.0,
                other => scalar(other),
            };
            (LearnerSpec::EwaGrid { eta, experts }, Some(eta))
        }
    };
    let config = LearnerConfig::new(spec, prepared.prior, prepared.bx.clone())?;
    Ok(Resolved {
        entry: e,
        config,
        eta,
        grid_shape,
        loss_range: range,
    })
}
