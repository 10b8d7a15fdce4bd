//! `ovi gradcheck`: analytic expected-loss gradients against finite
//! differences on random instances.
//!
//! For the closed-form kinds the statistic is the relative error
//! `||g - g_fd|| / ||g_fd||` over the stacked `(g_m, g_sigma)`, with central
//! differences of step `1e-5`. For the network the gradient is itself a
//! Monte-Carlo estimate, so it is compared with central differences of an
//! independent Monte-Carlo loss estimate (common random numbers within the
//! differences). The statistic is then the root-mean-square z-score of the
//! componentwise differences, and `tol` is read in standard errors.

use ovi_core::family::MeanFieldGaussian;
use ovi_core::losses::{expected_loss, expected_loss_grad, mc_estimate, DataExample, LossKind};
use ovi_core::rng::SeededStream;

use crate::error::CliError;

pub const FD_STEP: f64 = 1e-5;
pub const NN_FD_STEP: f64 = 1e-4;
pub const NN_SAMPLES: usize = 100_000;
pub const NN_HIDDEN: usize = 3;
pub const NN_INPUTS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub kind: LossKind,
    pub trials: usize,
    pub max_error: f64,
    pub tol: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tol
    }
}

pub fn parse_kind(name: &str) -> Result<LossKind, CliError> {
    match name.to_ascii_lowercase().replace('-', "_").as_str() {
        "hinge" => Ok(LossKind::Hinge),
        "squared" | "squared_linear" => Ok(LossKind::SquaredLinear),
        "nn" | "squared_nn" => Ok(LossKind::SquaredNn {
            hidden_width: NN_HIDDEN,
        }),
        other => Err(CliError::Config(format!("unknown loss {other:?}"))),
    }
}

/// A random `(q, example)` pair for `kind`.
pub fn random_instance(kind: LossKind, rng: &mut SeededStream) -> (MeanFieldGaussian, DataExample) {
    let d_in = match kind {
        LossKind::SquaredNn { .. } => NN_INPUTS,
        _ => 1 + rng.below(6) as usize,
    };
    let p = kind.param_dim(d_in);
    let x = rng.gaussian_vec(d_in);
    let y = if kind.is_classification() {
        if rng.bernoulli(0.5) { 1.0 } else { -1.0 }
    } else {
        rng.gaussian()
    };
    let (m_scale, s_lo, s_hi) = match kind {
        LossKind::SquaredNn { .. } => (0.5, 0.1, 0.5),
        _ => (0.7, 0.2, 1.2),
    };
    let m = (0..p).map(|_| m_scale * rng.gaussian()).collect();
    let sigma = (0..p).map(|_| rng.uniform_in(s_lo, s_hi)).collect();
    (
        MeanFieldGaussian::new(m, sigma).expect("sampled sigma is positive"),
        DataExample::new(x, y),
    )
}

/// Central differences of `f` in every `m_j` then every `sigma_j`.
pub fn fd_gradient<F>(q: &MeanFieldGaussian, h: f64, mut f: F) -> Result<Vec<f64>, CliError>
where
    F: FnMut(&MeanFieldGaussian) -> Result<f64, CliError>,
{
    let d = q.dim();
    let mut out = Vec::with_capacity(2 * d);
    for which in 0..2 {
        for j in 0..d {
            let shifted = |delta: f64| {
                let (mut m, mut s) = (q.m().to_vec(), q.sigma().to_vec());
                if which == 0 {
                    m[j] += delta;
                } else {
                    s[j] += delta;
                }
                MeanFieldGaussian::new(m, s).map_err(CliError::from)
            };
            let up = f(&shifted(h)?)?;
            let down = f(&shifted(-h)?)?;
            out.push((up - down) / (2.0 * h));
        }
    }
    Ok(out)
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    diff / scale
}

fn closed_form_trial(kind: LossKind, rng: &mut SeededStream) -> Result<f64, CliError> {
    let (q, ex) = random_instance(kind, rng);
    let g = expected_loss_grad(kind, &q, &ex)?;
    let analytic: Vec<f64> = g.g_m.iter().chain(&g.g_sigma).copied().collect();
    let fd = fd_gradient(&q, FD_STEP, |q| Ok(expected_loss(kind, q, &ex)?))?;
    Ok(relative_error(&analytic, &fd))
}

fn mc_trial(kind: LossKind, rng: &mut SeededStream) -> Result<f64, CliError> {
    let (q, ex) = random_instance(kind, rng);
    let seed_a = rng.next_u64();
    let seed_b = rng.next_u64();
    let a = mc_estimate(kind, &q, &ex, NN_SAMPLES, seed_a)?;
    let b = mc_estimate(kind, &q, &ex, NN_SAMPLES, seed_b)?;
    let fd = fd_gradient(&q, NN_FD_STEP, |q| Ok(mc_estimate(kind, q, &ex, NN_SAMPLES, seed_b)?.loss))?;
    let analytic: Vec<f64> = a.grad.g_m.iter().chain(&a.grad.g_sigma).copied().collect();
    let se_a: Vec<f64> = a.g_m_se.iter().chain(&a.g_sigma_se).copied().collect();
    let se_b: Vec<f64> = b.g_m_se.iter().chain(&b.g_sigma_se).copied().collect();
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for i in 0..analytic.len() {
        let se = (se_a[i].powi(2) + se_b[i].powi(2)).sqrt();
        let diff = analytic[i] - fd[i];
        if se == 0.0 {
            // Both estimators are exact for this component (an inactive unit).
            if diff.abs() > 1e-8 * (1.0 + fd[i].abs()) {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        sum_sq += (diff / se).powi(2);
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { (sum_sq / count as f64).sqrt() })
}

pub fn cmd_gradcheck(kind: LossKind, trials: usize, tol: f64, seed: u64) -> Result<GradcheckReport, CliError> {
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    if !(tol >= 0.0) {
        return Err(CliError::Config("tol must be nonnegative".into()));
    }
    let mut rng = SeededStream::new(seed);
    let mut max_error: f64 = 0.0;
    for _ in 0..trials {
        let e = if kind.has_closed_form() {
            closed_form_trial(kind, &mut rng)?
        } else {
            mc_trial(kind, &mut rng)?
        };
        max_error = max_error.max(e);
    }
    Ok(GradcheckReport {
        kind,
        trials,
        max_error,
        tol,
    })
}
