//! Point losses, their expectations under a mean-field Gaussian, and
//! gradients of those expectations.
//!
//! For the linear kinds the score `theta^T x` is univariate Gaussian under
//! `q = N(m, diag(sigma^2))`, which gives closed forms:
//!
//! * squared-linear: `E(y - theta^T x)^2 = (y - m^T x)^2 + sum_j sigma_j^2 x_j^2`
//! * hinge: with `mu = 1 - y m^T x` and `s^2 = sum_j sigma_j^2 x_j^2`,
//!   `E(1 - y theta^T x)_+ = mu Phi(mu/s) + s phi(mu/s)`.
//!
//! The one-hidden-layer ReLU regressor has no closed form and goes through
//! the reparameterized Monte-Carlo estimator.

use crate::error::{check_dim, Error, Result};
use crate::family::{BoxConstraints, MeanFieldGaussian};
use crate::rng::SeededStream;
use crate::special::{normal_cdf, normal_pdf};

#[derive(Debug, Clone, PartialEq)]
pub struct DataExample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl DataExample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Hinge,
    SquaredLinear,
    /// Squared loss of `w2^T relu(W1 x + b1) + b2`, parameters packed as
    /// `[W1 (row-major, hidden x d_in), b1, w2, b2]`.
    SquaredNn { hidden_width: usize },
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::SquaredLinear => "squared_linear",
            LossKind::SquaredNn { .. } => "squared_nn",
        }
    }

    /// Parameter dimension for inputs of dimension `d_in`.
    pub fn param_dim(&self, d_in: usize) -> usize {
        match *self {
            LossKind::Hinge | LossKind::SquaredLinear => d_in,
            LossKind::SquaredNn { hidden_width } => hidden_width * (d_in + 2) + 1,
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, LossKind::SquaredNn { .. })
    }

    pub fn has_closed_form(&self) -> bool {
        self.is_convex()
    }

    pub fn is_classification(&self) -> bool {
        matches!(self, LossKind::Hinge)
    }
}

/// `(dL/dm, dL/dsigma)` for the expected loss `L(m, sigma) = E_q[l(theta)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLossGradient {
    pub g_m: Vec<f64>,
    pub g_sigma: Vec<f64>,
}

impl ExpectedLossGradient {
    pub fn zeros(d: usize) -> Self {
        Self {
            g_m: vec![0.0; d],
            g_sigma: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.g_m.len()
    }

    /// Euclidean norm of the stacked vector `(g_m, g_sigma)`.
    pub fn norm(&self) -> f64 {
        self.g_m
            .iter()
            .chain(&self.g_sigma)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.g_m.iter().chain(&self.g_sigma).all(|v| v.is_finite())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_theta(kind: LossKind, theta_len: usize, ex: &DataExample) -> Result<()> {
    check_dim(kind.param_dim(ex.x.len()), theta_len)
}

struct NnView<'a> {
    hidden: usize,
    d_in: usize,
    theta: &'a [f64],
}

impl<'a> NnView<'a> {
    fn w1(&self, k: usize) -> &'a [f64] {
        &self.theta[k * self.d_in..(k + 1) * self.d_in]
    }
    fn b1(&self, k: usize) -> f64 {
        self.theta[self.hidden * self.d_in + k]
    }
    fn w2(&self, k: usize) -> f64 {
        self.theta[self.hidden * (self.d_in + 1) + k]
    }
    fn b2(&self) -> f64 {
        self.theta[self.hidden * (self.d_in + 2)]
    }

    fn pre_activations(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden).map(|k| dot(self.w1(k), x) + self.b1(k)).collect()
    }

    fn output(&self, z: &[f64]) -> f64 {
        z.iter()
            .enumerate()
            .map(|(k, &zk)| self.w2(k) * zk.max(0.0))
            .sum::<f64>()
            + self.b2()
    }
}

/// Output of the packed one-hidden-layer ReLU network.
pub fn nn_predict(hidden_width: usize, theta: &[f64], x: &[f64]) -> f64 {
    let net = NnView {
        hidden: hidden_width,
        d_in: x.len(),
        theta,
    };
    net.output(&net.pre_activations(x))
}

/// Linear score or network output used by the regression kinds.
pub fn predict(kind: LossKind, theta: &[f64], x: &[f64]) -> f64 {
    match kind {
        LossKind::Hinge | LossKind::SquaredLinear => dot(theta, x),
        LossKind::SquaredNn { hidden_width } => nn_predict(hidden_width, theta, x),
    }
}

pub fn point_loss(kind: LossKind, theta: &[f64], ex: &DataExample) -> Result<f64> {
    check_theta(kind, theta.len(), ex)?;
    Ok(match kind {
        LossKind::Hinge => (1.0 - ex.y * dot(theta, &ex.x)).max(0.0),
        LossKind::SquaredLinear => {
            let r = ex.y - dot(theta, &ex.x);
            r * r
        }
        LossKind::SquaredNn { hidden_width } => {
            let r = ex.y - nn_predict(hidden_width, theta, &ex.x);
            r * r
        }
    })
}

/// A (sub)gradient of the point loss. The hinge kink and the ReLU kink both
/// take derivative 0.
pub fn point_grad(kind: LossKind, theta: &[f64], ex: &DataExample) -> Result<Vec<f64>> {
    check_theta(kind, theta.len(), ex)?;
    let mut g = vec![0.0; theta.len()];
    point_grad_into(kind, theta, ex, &mut g);
    Ok(g)
}

// Overwrites `out` with the gradient and returns the loss; dimensions are
// assumed checked.
fn point_grad_into(kind: LossKind, theta: &[f64], ex: &DataExample, out: &mut [f64]) -> f64 {
    match kind {
        LossKind::Hinge => {
            let margin = 1.0 - ex.y * dot(theta, &ex.x);
            if margin > 0.0 {
                for (o, &xj) in out.iter_mut().zip(&ex.x) {
                    *o = -ex.y * xj;
                }
            } else {
                out.fill(0.0);
            }
            margin.max(0.0)
        }
        LossKind::SquaredLinear => {
            let r = ex.y - dot(theta, &ex.x);
            for (o, &xj) in out.iter_mut().zip(&ex.x) {
                *o = -2.0 * xj * r;
            }
            r * r
        }
        LossKind::SquaredNn { hidden_width } => {
            let d_in = ex.x.len();
            let net = NnView {
                hidden: hidden_width,
                d_in,
                theta,
            };
            let z = net.pre_activations(&ex.x);
            let r = ex.y - net.output(&z);
            let df = -2.0 * r;
            let h = hidden_width;
            for k in 0..h {
                let active = z[k] > 0.0;
                let a = if active { z[k] } else { 0.0 };
                out[h * (d_in + 1) + k] = df * a;
                let dz = if active { df * net.w2(k) } else { 0.0 };
                out[h * d_in + k] = dz;
                for (j, &xj) in ex.x.iter().enumerate() {
                    out[k * d_in + j] = dz * xj;
                }
            }
            out[h * (d_in + 2)] = df;
            r * r
        }
    }
}

fn check_q(kind: LossKind, q: &MeanFieldGaussian, ex: &DataExample) -> Result<()> {
    check_theta(kind, q.dim(), ex)
}

// (mu_z, s_z) of the hinge margin `1 - y theta^T x` under q.
fn hinge_margin_moments(q: &MeanFieldGaussian, ex: &DataExample) -> (f64, f64) {
    let mu = 1.0 - ex.y * dot(q.m(), &ex.x);
    let var: f64 = q
        .sigma()
        .iter()
        .zip(&ex.x)
        .map(|(s, x)| s * s * x * x)
        .sum();
    (mu, var.sqrt())
}

/// Closed-form `E_q[l(theta)]` for the convex kinds.
pub fn expected_loss(kind: LossKind, q: &MeanFieldGaussian, ex: &DataExample) -> Result<f64> {
    check_q(kind, q, ex)?;
    match kind {
        LossKind::Hinge => {
            let (mu, s) = hinge_margin_moments(q, ex);
            if s == 0.0 {
                return Ok(mu.max(0.0));
            }
            let z = mu / s;
            Ok(mu * normal_cdf(z) + s * normal_pdf(z))
        }
        LossKind::SquaredLinear => {
            let r = ex.y - dot(q.m(), &ex.x);
            let spread: f64 = q
                .sigma()
                .iter()
                .zip(&ex.x)
                .map(|(s, x)| s * s * x * x)
                .sum();
            Ok(r * r + spread)
        }
        LossKind::SquaredNn { .. } => Err(Error::NoClosedForm(kind.name().into())),
    }
}

pub fn expected_loss_grad(
    kind: LossKind,
    q: &MeanFieldGaussian,
    ex: &DataExample,
) -> Result<ExpectedLossGradient> {
    check_q(kind, q, ex)?;
    let d = q.dim();
    match kind {
        LossKind::Hinge => {
            let (mu, s) = hinge_margin_moments(q, ex);
            if s == 0.0 {
                let active = if mu > 0.0 { 1.0 } else { 0.0 };
                return Ok(ExpectedLossGradient {
                    g_m: ex.x.iter().map(|x| -ex.y * x * active).collect(),
                    g_sigma: vec![0.0; d],
                });
            }
            let z = mu / s;
            let cdf = normal_cdf(z);
            let pdf = normal_pdf(z);
            Ok(ExpectedLossGradient {
                g_m: ex.x.iter().map(|x| -ex.y * x * cdf).collect(),
                g_sigma: q
                    .sigma()
                    .iter()
                    .zip(&ex.x)
                    .map(|(sj, x)| sj * x * x / s * pdf)
                    .collect(),
            })
        }
        LossKind::SquaredLinear => {
            let r = ex.y - dot(q.m(), &ex.x);
            Ok(ExpectedLossGradient {
                g_m: ex.x.iter().map(|x| -2.0 * x * r).collect(),
                g_sigma: q
                    .sigma()
                    .iter()
                    .zip(&ex.x)
                    .map(|(sj, x)| 2.0 * sj * x * x)
                    .collect(),
            })
        }
        LossKind::SquaredNn { .. } => Err(Error::NoClosedForm(kind.name().into())),
    }
}

/// Monte-Carlo estimate with per-component standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub loss: f64,
    pub grad: ExpectedLossGradient,
    pub loss_se: f64,
    pub g_m_se: Vec<f64>,
    pub g_sigma_se: Vec<f64>,
}

/// Reparameterized estimator: `theta_s = m + sigma * eps_s`, `eps_s ~ N(0, I)`
/// drawn from `SeededStream::new(seed)`.
pub fn mc_estimate(
    kind: LossKind,
    q: &MeanFieldGaussian,
    ex: &DataExample,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_q(kind, q, ex)?;
    if samples == 0 {
        return Err(Error::Domain("Monte-Carlo sample count must be positive".into()));
    }
    let d = q.dim();
    let mut stream = SeededStream::new(seed);
    let mut theta = vec![0.0; d];
    let mut eps = vec![0.0; d];
    let mut g = vec![0.0; d];
    let (mut l1, mut l2) = (0.0, 0.0);
    let mut gm1 = vec![0.0; d];
    let mut gm2 = vec![0.0; d];
    let mut gs1 = vec![0.0; d];
    let mut gs2 = vec![0.0; d];
    for _ in 0..samples {
        for j in 0..d {
            eps[j] = stream.gaussian();
            theta[j] = q.m()[j] + q.sigma()[j] * eps[j];
        }
        let loss = point_grad_into(kind, &theta, ex, &mut g);
        l1 += loss;
        l2 += loss * loss;
        for j in 0..d {
            let gs = g[j] * eps[j];
            gm1[j] += g[j];
            gm2[j] += g[j] * g[j];
            gs1[j] += gs;
            gs2[j] += gs * gs;
        }
    }
    let n = samples as f64;
    let se = |s1: f64, s2: f64| {
        if samples < 2 {
            return 0.0;
        }
        let mean = s1 / n;
        let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    };
    Ok(McEstimate {
        loss: l1 / n,
        loss_se: se(l1, l2),
        g_m_se: (0..d).map(|j| se(gm1[j], gm2[j])).collect(),
        g_sigma_se: (0..d).map(|j| se(gs1[j], gs2[j])).collect(),
        grad: ExpectedLossGradient {
            g_m: gm1.iter().map(|v| v / n).collect(),
            g_sigma: gs1.iter().map(|v| v / n).collect(),
        },
    })
}

pub fn mc_expected_loss_and_grad(
    kind: LossKind,
    q: &MeanFieldGaussian,
    ex: &DataExample,
    samples: usize,
    seed: u64,
) -> Result<(f64, ExpectedLossGradient)> {
    let est = mc_estimate(kind, q, ex, samples, seed)?;
    Ok((est.loss, est.grad))
}

/// Closed form when available, Monte-Carlo otherwise.
pub fn expected_loss_and_grad(
    kind: LossKind,
    q: &MeanFieldGaussian,
    ex: &DataExample,
    mc_samples: usize,
    seed: u64,
) -> Result<(f64, ExpectedLossGradient)> {
    if kind.has_closed_form() {
        Ok((expected_loss(kind, q, ex)?, expected_loss_grad(kind, q, ex)?))
    } else {
        mc_expected_loss_and_grad(kind, q, ex, mc_samples, seed)
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lipschitz constant of `mu -> E_q[l_t]` over the box, `L = 2 L'` where
/// `L'` bounds the point-loss gradient.
///
/// For squared-linear, `L'` is the exact maximum over `M_m` of
/// `2 ||x|| |y - theta^T x|`; the returned value is also kept at least
/// `L' + 2 sigma_max ||x||^2` so that the sigma-gradient is covered.
pub fn lipschitz_constant(kind: LossKind, data: &[DataExample], bx: &BoxConstraints) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    match kind {
        LossKind::Hinge => {
            let lp = data.iter().map(|ex| l2_norm(&ex.x)).fold(0.0, f64::max);
            Ok(2.0 * lp)
        }
        LossKind::SquaredLinear => {
            let mut lp: f64 = 0.0;
            let mut sigma_term: f64 = 0.0;
            let sigma_max = bx.sigma_hi().iter().copied().fold(0.0, f64::max);
            for ex in data {
                check_dim(bx.dim(), ex.x.len())?;
                let (mut lo, mut hi) = (0.0, 0.0);
                for (j, &xj) in ex.x.iter().enumerate() {
                    let a = bx.m_lo()[j] * xj;
                    let b = bx.m_hi()[j] * xj;
                    lo += a.min(b);
                    hi += a.max(b);
                }
                let resid = (ex.y - lo).abs().max((ex.y - hi).abs());
                let nx = l2_norm(&ex.x);
                lp = lp.max(2.0 * nx * resid);
                sigma_term = sigma_term.max(2.0 * sigma_max * nx * nx);
            }
            Ok((2.0 * lp).max(lp + sigma_term))
        }
        LossKind::SquaredNn { .. } => Err(Error::UnsupportedConstant(kind.name().into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::SIGMA_FLOOR;

    fn ex(x: &[f64], y: f64) -> DataExample {
        DataExample::new(x.to_vec(), y)
    }

    fn q(m: &[f64], s: &[f64]) -> MeanFieldGaussian {
        MeanFieldGaussian::new(m.to_vec(), s.to_vec()).unwrap()
    }

    #[test]
    fn point_loss_examples() {
        let h = LossKind::Hinge;
        assert_eq!(point_loss(h, &[2.0], &ex(&[1.0], 1.0)).unwrap(), 0.0);
        assert_eq!(point_loss(h, &[0.0], &ex(&[1.0], 1.0)).unwrap(), 1.0);
        assert_eq!(
            point_loss(LossKind::SquaredLinear, &[0.0], &ex(&[1.0], 1.0)).unwrap(),
            1.0
        );
        assert!(matches!(
            point_loss(h, &[0.0, 1.0], &ex(&[1.0], 1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expected_loss_examples() {
        let sq = LossKind::SquaredLinear;
        assert_eq!(expected_loss(sq, &q(&[0.0], &[1.0]), &ex(&[1.0], 0.0)).unwrap(), 1.0);
        let zero = ex(&[0.0, 0.0], 1.0);
        for (m, s) in [([3.0, -2.0], [0.5, 2.0]), ([0.0, 0.0], [1.0, 1.0])] {
            assert_eq!(expected_loss(LossKind::Hinge, &q(&m, &s), &zero).unwrap(), 1.0);
            let g = expected_loss_grad(LossKind::Hinge, &q(&m, &s), &zero).unwrap();
            assert!(g.g_m.iter().chain(&g.g_sigma).all(|&v| v == 0.0));
        }
        let v = expected_loss(LossKind::Hinge, &q(&[0.0], &[1.0]), &ex(&[1.0], 1.0)).unwrap();
        assert!((v - 1.083_315_470_587_686).abs() < 1e-12, "{v}");
    }

    #[test]
    fn closed_form_gradient_examples() {
        let g = expected_loss_grad(LossKind::SquaredLinear, &q(&[1.0], &[1.0]), &ex(&[1.0], 0.0))
            .unwrap();
        assert_eq!(g.g_m, vec![2.0]);
        assert_eq!(g.g_sigma, vec![2.0]);
        let g = expected_loss_grad(LossKind::Hinge, &q(&[0.0], &[1.0]), &ex(&[1.0], 1.0)).unwrap();
        assert!((g.g_m[0] + 0.841_344_7).abs() < 1e-7);
        assert!((g.g_sigma[0] - 0.241_970_7).abs() < 1e-7);
    }

    #[test]
    fn nn_has_no_closed_form() {
        let kind = LossKind::SquaredNn { hidden_width: 2 };
        let d = kind.param_dim(3);
        assert_eq!(d, 11);
        let qq = MeanFieldGaussian::isotropic(vec![0.0; d], 1.0).unwrap();
        assert!(matches!(
            expected_loss(kind, &qq, &ex(&[1.0, 2.0, 3.0], 1.0)),
            Err(Error::NoClosedForm(_))
        ));
    }

    #[test]
    fn nn_forward_by_hand() {
        // hidden 2, d_in 1: W1 = [1, -1], b1 = [0, 1], w2 = [2, 3], b2 = 0.5
        let theta = [1.0, -1.0, 0.0, 1.0, 2.0, 3.0, 0.5];
        // x = 2: z = [2, -1], relu = [2, 0], f = 4 + 0.5
        assert_eq!(nn_predict(2, &theta, &[2.0]), 4.5);
        let kind = LossKind::SquaredNn { hidden_width: 2 };
        assert_eq!(point_loss(kind, &theta, &ex(&[2.0], 1.0)).unwrap(), 12.25);
    }

    #[test]
    fn point_grads_match_finite_differences() {
        let kind = LossKind::SquaredNn { hidden_width: 3 };
        let mut s = SeededStream::new(9);
        for _ in 0..20 {
            let x = s.gaussian_vec(4);
            let e = ex(&x, s.gaussian());
            let theta = s.gaussian_vec(kind.param_dim(4));
            let g = point_grad(kind, &theta, &e).unwrap();
            for j in 0..theta.len() {
                let h = 1e-6;
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] += h;
                tm[j] -= h;
                let fd = (point_loss(kind, &tp, &e).unwrap() - point_loss(kind, &tm, &e).unwrap())
                    / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-5 * (1.0 + fd.abs()), "j={j} fd={fd} g={}", g[j]);
            }
        }
    }

    #[test]
    fn mc_degenerate_and_deterministic() {
        let e = ex(&[0.3, -1.2], 1.0);
        let m = [0.4, 0.1];
        for kind in [LossKind::Hinge, LossKind::SquaredLinear] {
            let qq = q(&m, &[SIGMA_FLOOR, SIGMA_FLOOR]);
            let (l, _) = mc_expected_loss_and_grad(kind, &qq, &e, 16, 1).unwrap();
            assert!((l - point_loss(kind, &m, &e).unwrap()).abs() <= 1e-6);
        }
        let qq = q(&m, &[0.5, 0.7]);
        let a = mc_expected_loss_and_grad(LossKind::Hinge, &qq, &e, 64, 42).unwrap();
        let b = mc_expected_loss_and_grad(LossKind::Hinge, &qq, &e, 64, 42).unwrap();
        assert_eq!(a, b);
        assert!(mc_estimate(LossKind::Hinge, &qq, &e, 0, 1).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let bx = BoxConstraints::experiment_default(2);
        assert_eq!(lipschitz_constant(LossKind::Hinge, &[ex(&[3.0, 4.0], 1.0)], &bx).unwrap(), 10.0);
        assert_eq!(lipschitz_constant(LossKind::Hinge, &[ex(&[0.0, 0.0], 1.0)], &bx).unwrap(), 0.0);
        assert!(matches!(
            lipschitz_constant(LossKind::SquaredNn { hidden_width: 2 }, &[ex(&[1.0, 1.0], 1.0)], &bx),
            Err(Error::UnsupportedConstant(_))
        ));
        assert!(matches!(
            lipschitz_constant(LossKind::Hinge, &[], &bx),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn hinge_sigma_gradient_nonnegative() {
        let mut s = SeededStream::new(4);
        for _ in 0..200 {
            let x = s.gaussian_vec(3);
            let y = if s.bernoulli(0.5) { 1.0 } else { -1.0 };
            let m = s.gaussian_vec(3);
            let sig: Vec<f64> = (0..3).map(|_| s.uniform_in(0.01, 2.0)).collect();
            let g = expected_loss_grad(LossKind::Hinge, &q(&m, &sig), &ex(&x, y)).unwrap();
            assert!(g.g_sigma.iter().all(|&v| v >= 0.0));
        }
    }
}
