//! Regret accounting, comparators in hindsight, regret-bound calculators and
//! online-to-batch conversion.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::family::{kl_divergence, BoxConstraints, GaussianPrior, MeanFieldGaussian};
use crate::learners::Trace;
use crate::losses::{expected_loss, point_grad, point_loss, DataExample, LossKind};
use crate::rng::SeededStream;

#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub average: Vec<f64>,
}

impl RegretLedger {
    /// Sums left to right.
    pub fn from_losses(losses: &[f64]) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut cumulative = Vec::with_capacity(losses.len());
        let mut average = Vec::with_capacity(losses.len());
        let mut acc = 0.0;
        for (i, &l) in losses.iter().enumerate() {
            if !l.is_finite() {
                return Err(Error::NonFinite(format!("loss at step {}", i + 1)));
            }
            acc += l;
            cumulative.push(acc);
            average.push(acc / (i + 1) as f64);
        }
        Ok(Self {
            instantaneous: losses.to_vec(),
            cumulative,
            average,
        })
    }

    pub fn horizon(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("ledger is nonempty")
    }
}

pub fn build_ledger(trace: &Trace) -> Result<RegretLedger> {
    RegretLedger::from_losses(&trace.losses())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparatorMethod {
    /// Convex objective, solved to a global minimum.
    Global,
    /// Nonconvex objective; best local minimum found.
    Local,
    /// Exact minimum over a finite set of points.
    Grid,
}

impl ComparatorMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ComparatorMethod::Global => "global",
            ComparatorMethod::Local => "local",
            ComparatorMethod::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorResult {
    pub theta_star: Vec<f64>,
    pub cumulative_loss_star: f64,
    pub method: ComparatorMethod,
    pub restarts: usize,
    /// Norm of the projected-gradient step at `theta_star`.
    pub final_grad_norm: f64,
}

impl ComparatorResult {
    pub fn average_loss_star(&self, horizon: usize) -> f64 {
        self.cumulative_loss_star / horizon as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparatorOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ComparatorOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            iterations: 2000,
            seed: 0,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

// Average loss and a subgradient of it.
fn avg_loss_grad(kind: LossKind, data: &[DataExample], theta: &[f64], g: &mut [f64]) -> f64 {
    g.fill(0.0);
    let mut total = 0.0;
    match kind {
        LossKind::Hinge => {
            for ex in data {
                let margin = 1.0 - ex.y * dot(theta, &ex.x);
                if margin > 0.0 {
                    total += margin;
                    for (gj, xj) in g.iter_mut().zip(&ex.x) {
                        *gj -= ex.y * xj;
                    }
                }
            }
        }
        LossKind::SquaredLinear => {
            for ex in data {
                let r = ex.y - dot(theta, &ex.x);
                total += r * r;
                for (gj, xj) in g.iter_mut().zip(&ex.x) {
                    *gj -= 2.0 * r * xj;
                }
            }
        }
        LossKind::SquaredNn { .. } => {
            for ex in data {
                total += point_loss(kind, theta, ex).expect("dimensions checked");
                let pg = point_grad(kind, theta, ex).expect("dimensions checked");
                for (gj, v) in g.iter_mut().zip(&pg) {
                    *gj += v;
                }
            }
        }
    }
    let n = data.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    total / n
}

// Softplus smoothing of the hinge, `mu log(1 + exp(z / mu)) >= max(z, 0)`,
// off by at most `mu log 2`.
fn smoothed_hinge_grad(data: &[DataExample], theta: &[f64], mu: f64, g: &mut [f64]) {
    g.fill(0.0);
    for ex in data {
        let z = 1.0 - ex.y * dot(theta, &ex.x);
        let s = 1.0 / (1.0 + (-z / mu).exp());
        for (gj, xj) in g.iter_mut().zip(&ex.x) {
            *gj -= s * ex.y * xj;
        }
    }
    let n = data.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
}

fn projected_step_norm(theta: &[f64], g: &[f64], bx: &BoxConstraints) -> f64 {
    let mut next: Vec<f64> = theta.iter().zip(g).map(|(t, g)| t - g).collect();
    bx.project_mean(&mut next);
    theta
        .iter()
        .zip(&next)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

struct Candidate {
    theta: Vec<f64>,
    value: f64,
}

// Projected subgradient descent with step c/sqrt(k), keeping the best iterate.
fn subgradient_run(
    kind: LossKind,
    data: &[DataExample],
    bx: &BoxConstraints,
    start: Vec<f64>,
    iterations: usize,
) -> Candidate {
    let p = start.len();
    let mut theta = start;
    let mut g = vec![0.0; p];
    let mut value = avg_loss_grad(kind, data, &theta, &mut g);
    let mut best = Candidate {
        theta: theta.clone(),
        value,
    };
    let radius = 0.5
        * (0..p)
            .map(|j| (bx.m_hi()[j] - bx.m_lo()[j]).powi(2))
            .sum::<f64>()
            .sqrt();
    let gn = norm(&g);
    if gn == 0.0 {
        return best;
    }
    let c = radius.max(1e-12) / gn;
    for k in 1..=iterations {
        let step = c / (k as f64).sqrt();
        for (t, gj) in theta.iter_mut().zip(&g) {
            *t -= step * gj;
        }
        bx.project_mean(&mut theta);
        value = avg_loss_grad(kind, data, &theta, &mut g);
        if value < best.value {
            best = Candidate {
                theta: theta.clone(),
                value,
            };
        }
        if norm(&g) == 0.0 {
            break;
        }
    }
    best
}

// Accelerated projected gradient with fixed step `1 / smooth`.
fn fista<F>(bx: &BoxConstraints, start: &[f64], smooth: f64, iterations: usize, mut grad: F) -> Vec<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let p = start.len();
    let mut x = start.to_vec();
    let mut y = start.to_vec();
    let mut g = vec![0.0; p];
    let mut tk = 1.0f64;
    for _ in 0..iterations {
        grad(&y, &mut g);
        let mut next: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b / smooth).collect();
        bx.project_mean(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let w = (tk - 1.0) / t_next;
        for j in 0..p {
            y[j] = next[j] + w * (next[j] - x[j]);
        }
        bx.project_mean(&mut y);
        x = next;
        tk = t_next;
    }
    x
}

fn polish(kind: LossKind, data: &[DataExample], bx: &BoxConstraints, start: &[f64], iterations: usize) -> Vec<f64> {
    let mean_sq: f64 = data.iter().map(|ex| dot(&ex.x, &ex.x)).sum::<f64>() / data.len() as f64;
    if mean_sq == 0.0 {
        return start.to_vec();
    }
    match kind {
        LossKind::SquaredLinear => fista(bx, start, 2.0 * mean_sq, iterations, |th, g| {
            avg_loss_grad(kind, data, th, g);
        }),
        LossKind::Hinge => {
            let mut x = start.to_vec();
            let per = (iterations / 4).max(1);
            for mu in [1e-1, 1e-2, 1e-3, 1e-4] {
                x = fista(bx, &x, mean_sq / (4.0 * mu), per, |th, g| {
                    smoothed_hinge_grad(data, th, mu, g)
                });
            }
            x
        }
        LossKind::SquaredNn { .. } => start.to_vec(),
    }
}

/// `inf_{theta in M_m} sum_t l_t(theta)` with the default solver settings.
pub fn best_in_hindsight(data: &[DataExample], kind: LossKind, bx: &BoxConstraints) -> Result<ComparatorResult> {
    best_in_hindsight_with(data, kind, bx, &ComparatorOptions::default())
}

/// Multi-start projected subgradient descent on the average loss. Restart 0
/// starts at the projected origin, the others uniformly in the box. For the
/// convex kinds the best restart is refined by an accelerated polishing pass
/// (on a softplus-smoothed hinge for the hinge loss), kept only if it lowers
/// the exact objective. The nonconvex kind is labelled `Local`.
pub fn best_in_hindsight_with(
    data: &[DataExample],
    kind: LossKind,
    bx: &BoxConstraints,
    opts: &ComparatorOptions,
) -> Result<ComparatorResult> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let p = kind.param_dim(data[0].x.len());
    check_dim(p, bx.dim())?;
    for ex in data {
        check_dim(data[0].x.len(), ex.x.len())?;
    }
    let restarts = opts.restarts.max(1);
    let best = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                let mut z = vec![0.0; p];
                bx.project_mean(&mut z);
                z
            } else {
                let mut rng = SeededStream::with_stream(opts.seed, r as u64);
                (0..p).map(|j| rng.uniform_in(bx.m_lo()[j], bx.m_hi()[j])).collect()
            };
            let cand = subgradient_run(kind, data, bx, start, opts.iterations);
            (r, cand)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .expect("at least one restart")
        .1;
    let best = if kind.is_convex() {
        let polished = polish(kind, data, bx, &best.theta, opts.iterations);
        let mut g = vec![0.0; p];
        let v = avg_loss_grad(kind, data, &polished, &mut g);
        if v < best.value {
            Candidate {
                theta: polished,
                value: v,
            }
        } else {
            best
        }
    } else {
        best
    };
    let mut g = vec![0.0; p];
    let avg = avg_loss_grad(kind, data, &best.theta, &mut g);
    let cumulative_loss_star = data
        .iter()
        .map(|ex| point_loss(kind, &best.theta, ex))
        .sum::<Result<f64>>()?;
    debug_assert!((avg * data.len() as f64 - cumulative_loss_star).abs() <= 1e-9 * cumulative_loss_star.max(1.0));
    Ok(ComparatorResult {
        final_grad_norm: projected_step_norm(&best.theta, &g, bx),
        theta_star: best.theta,
        cumulative_loss_star,
        method: if kind.is_convex() {
            ComparatorMethod::Global
        } else {
            ComparatorMethod::Local
        },
        restarts,
    })
}

/// Best single expert by cumulative loss (first one on ties).
pub fn best_expert(data: &[DataExample], kind: LossKind, experts: &[Vec<f64>]) -> Result<ComparatorResult> {
    if data.is_empty() || experts.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut best: Option<(usize, f64)> = None;
    for (k, theta) in experts.iter().enumerate() {
        let total = data.iter().map(|ex| point_loss(kind, theta, ex)).sum::<Result<f64>>()?;
        if best.is_none_or(|(_, b)| total < b) {
            best = Some((k, total));
        }
    }
    let (k, total) = best.expect("experts nonempty");
    Ok(ComparatorResult {
        theta_star: experts[k].clone(),
        cumulative_loss_star: total,
        method: ComparatorMethod::Grid,
        restarts: 0,
        final_grad_norm: f64::NAN,
    })
}

/// Largest point loss over experts and data, a valid `B` for the grid.
pub fn loss_range(data: &[DataExample], kind: LossKind, experts: &[Vec<f64>]) -> Result<f64> {
    let mut b: f64 = 0.0;
    for theta in experts {
        for ex in data {
            b = b.max(point_loss(kind, theta, ex)?);
        }
    }
    Ok(b)
}

/// `sum_t l_t(theta_hat_t) - sum_t l_t(theta_star)`; may be negative.
pub fn regret(ledger: &RegretLedger, comparator: &ComparatorResult) -> f64 {
    ledger.total() - comparator.cumulative_loss_star
}

/// `E_q[sum_t l_t]` through the closed forms.
pub fn expected_cumulative_loss(kind: LossKind, q: &MeanFieldGaussian, data: &[DataExample]) -> Result<f64> {
    data.iter().map(|ex| expected_loss(kind, q, ex)).sum()
}

fn require_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

fn require_nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("{name} must be nonnegative, got {v}")));
    }
    Ok(())
}

/// `eta B^2 T / 8 + kl / eta`.
pub fn ewa_bound(eta: f64, b: f64, horizon: usize, kl: f64) -> Result<f64> {
    require_positive(&[("eta", eta), ("B", b), ("T", horizon as f64)])?;
    require_nonnegative("kl", kl)?;
    Ok(eta * b * b * horizon as f64 / 8.0 + kl / eta)
}

/// Minimiser of `ewa_bound` in `eta`: `sqrt(8 kl / (B^2 T))`.
pub fn ewa_optimal_eta(b: f64, horizon: usize, kl: f64) -> Result<f64> {
    require_positive(&[("B", b), ("T", horizon as f64), ("kl", kl)])?;
    Ok((8.0 * kl / (b * b * horizon as f64)).sqrt())
}

/// `eta L^2 T / alpha + kl / eta`.
pub fn sva_bound(eta: f64, lipschitz: f64, alpha: f64, horizon: usize, kl: f64) -> Result<f64> {
    require_positive(&[("eta", eta), ("L", lipschitz), ("alpha", alpha), ("T", horizon as f64)])?;
    require_nonnegative("kl", kl)?;
    Ok(eta * lipschitz * lipschitz * horizon as f64 / alpha + kl / eta)
}

/// `(D L sqrt(2T), L^2 (1 + log T) / H)`; the second is `None` without `H`.
pub fn svb_bounds(
    diameter: f64,
    lipschitz: f64,
    horizon: usize,
    strong_convexity: Option<f64>,
) -> Result<(f64, Option<f64>)> {
    require_positive(&[("D", diameter), ("L", lipschitz), ("T", horizon as f64)])?;
    let t = horizon as f64;
    let convex = diameter * lipschitz * (2.0 * t).sqrt();
    let strong = match strong_convexity {
        Some(h) => {
            require_positive(&[("H", h)])?;
            Some(lipschitz * lipschitz * (1.0 + t.ln()) / h)
        }
        None => None,
    };
    Ok((convex, strong))
}

/// `eta L^2 T + ||mu - mu_1||^2 / eta`.
pub fn ogael_bound(eta: f64, lipschitz: f64, horizon: usize, dist_sq: f64) -> Result<f64> {
    require_positive(&[("eta", eta), ("L", lipschitz), ("T", horizon as f64)])?;
    require_nonnegative("dist^2", dist_sq)?;
    Ok(eta * lipschitz * lipschitz * horizon as f64 + dist_sq / eta)
}

/// `eta L^2 T + alpha kl / (2 eta)`.
pub fn ogael_bound_kl(eta: f64, lipschitz: f64, horizon: usize, alpha: f64, kl: f64) -> Result<f64> {
    require_positive(&[("eta", eta), ("L", lipschitz), ("T", horizon as f64), ("alpha", alpha)])?;
    require_nonnegative("kl", kl)?;
    Ok(eta * lipschitz * lipschitz * horizon as f64 + alpha * kl / (2.0 * eta))
}

/// Running averages `(1/t) sum_{i<=t} theta_hat_i`.
pub fn averaged_path(predictions: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let first = predictions.first().ok_or(Error::EmptyData)?;
    let mut acc = vec![0.0; first.len()];
    let mut out = Vec::with_capacity(predictions.len());
    for (i, p) in predictions.iter().enumerate() {
        check_dim(acc.len(), p.len())?;
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
        let n = (i + 1) as f64;
        out.push(acc.iter().map(|a| a / n).collect());
    }
    Ok(out)
}

/// `theta_bar_T = (1/T) sum_t theta_hat_t`.
pub fn online_to_batch(trace: &Trace) -> Result<Vec<f64>> {
    let first = trace.steps.first().ok_or(Error::EmptyData)?;
    let mut acc = vec![0.0; first.prediction.len()];
    for s in &trace.steps {
        check_dim(acc.len(), s.prediction.len())?;
        for (a, v) in acc.iter_mut().zip(&s.prediction) {
            *a += v;
        }
    }
    let n = trace.steps.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// Mean holdout loss with its standard error.
pub fn generalization_estimate(theta: &[f64], holdout: &[DataExample], kind: LossKind) -> Result<Estimate> {
    if holdout.is_empty() {
        return Err(Error::EmptyData);
    }
    let losses = holdout
        .iter()
        .map(|ex| point_loss(kind, theta, ex))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_se(&losses))
}

pub fn mean_se(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Estimate { mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate {
        mean,
        se: (var / n).sqrt(),
    }
}

/// Smallest Hessian eigenvalue of `mu -> KL(q_mu || prior)` in the `(m, sigma)`
/// coordinates, by central finite differences over `resolution x resolution`
/// levels of `(m, sigma)` shared by all coordinates. The KL is a sum over
/// coordinates, so these points cover every combination of per-coordinate
/// curvatures. The value is an empirical estimate, not a certificate.
pub fn alpha_estimate(prior: &GaussianPrior, bx: &BoxConstraints, resolution: usize) -> Result<f64> {
    check_dim(prior.dim(), bx.dim())?;
    if resolution < 2 {
        return Err(Error::Config("alpha grid needs at least 2 levels".into()));
    }
    let d = bx.dim();
    if (0..d).any(|j| !(bx.sigma_lo()[j] > 0.0)) {
        return Err(Error::Domain("alpha grid touches sigma = 0".into()));
    }
    let p = prior.distribution();
    let level = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let kl = |x: &[f64]| -> f64 {
        let q = MeanFieldGaussian::new(x[..d].to_vec(), x[d..].to_vec()).expect("grid point is valid");
        kl_divergence(&q, &p).expect("dimensions match")
    };
    let mut alpha = f64::INFINITY;
    for a in 0..resolution {
        for b in 0..resolution {
            let mut x = vec![0.0; 2 * d];
            let mut h = vec![0.0; 2 * d];
            for j in 0..d {
                x[j] = level(bx.m_lo()[j], bx.m_hi()[j], a);
                x[d + j] = level(bx.sigma_lo()[j], bx.sigma_hi()[j], b);
                h[j] = 1e-3 * (1.0 + x[j].abs());
                h[d + j] = 1e-3 * x[d + j];
            }
            let hess = fd_hessian(&kl, &x, &h);
            let eig = SymmetricEigen::new(hess).eigenvalues;
            alpha = alpha.min(eig.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("KL is not strongly convex on the box (min eigenvalue {alpha})")));
    }
    Ok(alpha)
}

fn fd_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let f0 = f(x);
    let mut hess = DMatrix::zeros(n, n);
    let mut y = x.to_vec();
    for i in 0..n {
        y[i] = x[i] + h[i];
        let fp = f(&y);
        y[i] = x[i] - h[i];
        let fm = f(&y);
        y[i] = x[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                y[i] = x[i] + si * h[i];
                y[j] = x[j] + sj * h[j];
                let v = f(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}
