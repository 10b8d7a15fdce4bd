//! Mean-field Gaussian variational family.
//!
//! A member is `N(m, diag(sigma^2))`. Besides the standard `(m, sigma)`
//! coordinates the family is exposed in natural coordinates
//! `(m / sigma^2, -1 / (2 sigma^2))` and expectation coordinates
//! `(m, m^2 + sigma^2)`, all componentwise.

use crate::error::{check_dim, Error, Result};

/// Smallest standard deviation an iterate may take. Box projections and
/// conversions never go below it; exact point masses only appear as
/// comparators in the evaluation code.
pub const SIGMA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldGaussian {
    m: Vec<f64>,
    sigma: Vec<f64>,
}

impl MeanFieldGaussian {
    pub fn new(m: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        check_dim(m.len(), sigma.len())?;
        if let Some(j) = m.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("mean component {j}")));
        }
        if let Some(j) = sigma.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma[{j}] = {} must be strictly positive and finite",
                sigma[j]
            )));
        }
        Ok(Self { m, sigma })
    }

    /// Isotropic Gaussian `N(m, s^2 I)`.
    pub fn isotropic(m: Vec<f64>, s: f64) -> Result<Self> {
        let d = m.len();
        Self::new(m, vec![s; d])
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// True when some coordinate sits at the numerical floor, i.e. the
    /// distribution is a point mass for practical purposes.
    pub fn is_degenerate(&self) -> bool {
        self.sigma.iter().any(|&s| s <= SIGMA_FLOOR)
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.m, self.sigma)
    }

    /// Flattened parameter vector `(m, sigma)`.
    pub fn params(&self) -> Vec<f64> {
        self.m.iter().chain(&self.sigma).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParams {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationParams {
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
}

/// Axis-aligned box `M_m x M_sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxConstraints {
    m_lo: Vec<f64>,
    m_hi: Vec<f64>,
    sigma_lo: Vec<f64>,
    sigma_hi: Vec<f64>,
}

impl BoxConstraints {
    pub fn new(m_lo: Vec<f64>, m_hi: Vec<f64>, sigma_lo: Vec<f64>, sigma_hi: Vec<f64>) -> Result<Self> {
        let d = m_lo.len();
        check_dim(d, m_hi.len())?;
        check_dim(d, sigma_lo.len())?;
        check_dim(d, sigma_hi.len())?;
        for j in 0..d {
            if !(m_lo[j] <= m_hi[j]) {
                return Err(Error::Domain(format!("m box inverted at {j}")));
            }
            if !(0.0 <= sigma_lo[j] && sigma_lo[j] <= sigma_hi[j]) {
                return Err(Error::Domain(format!("sigma box invalid at {j}")));
            }
            if sigma_hi[j] < SIGMA_FLOOR {
                return Err(Error::Domain(format!("sigma upper bound below floor at {j}")));
            }
        }
        Ok(Self {
            m_lo,
            m_hi,
            sigma_lo,
            sigma_hi,
        })
    }

    /// `[-m_bound, m_bound]^d x [sigma_lo, sigma_hi]^d`.
    pub fn symmetric(d: usize, m_bound: f64, sigma_lo: f64, sigma_hi: f64) -> Result<Self> {
        Self::new(
            vec![-m_bound; d],
            vec![m_bound; d],
            vec![sigma_lo; d],
            vec![sigma_hi; d],
        )
    }

    /// The experimental box `[-20, 20]^d x [0, 1]^d`.
    pub fn experiment_default(d: usize) -> Self {
        Self::symmetric(d, 20.0, 0.0, 1.0).expect("static box is well formed")
    }

    pub fn dim(&self) -> usize {
        self.m_lo.len()
    }

    pub fn m_lo(&self) -> &[f64] {
        &self.m_lo
    }

    pub fn m_hi(&self) -> &[f64] {
        &self.m_hi
    }

    pub fn sigma_lo(&self) -> &[f64] {
        &self.sigma_lo
    }

    pub fn sigma_hi(&self) -> &[f64] {
        &self.sigma_hi
    }

    /// Effective lower bound on sigma once the floor is applied.
    pub fn sigma_floor_at(&self, j: usize) -> f64 {
        self.sigma_lo[j].max(SIGMA_FLOOR)
    }

    /// `D = sqrt(sup ||m - m'||^2 + ||sigma||^2)` over the box.
    pub fn diameter(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.dim() {
            let w = self.m_hi[j] - self.m_lo[j];
            acc += w * w + self.sigma_hi[j] * self.sigma_hi[j];
        }
        acc.sqrt()
    }

    /// Clamp a point into `M_m`.
    pub fn project_mean(&self, theta: &mut [f64]) {
        for (j, v) in theta.iter_mut().enumerate() {
            *v = v.clamp(self.m_lo[j], self.m_hi[j]);
        }
    }

    pub fn project_sigma(&self, sigma: &mut [f64]) {
        for (j, s) in sigma.iter_mut().enumerate() {
            *s = s.clamp(self.sigma_floor_at(j), self.sigma_hi[j]);
        }
    }

    pub fn contains_mean(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .enumerate()
            .all(|(j, &v)| self.m_lo[j] <= v && v <= self.m_hi[j])
    }

    pub fn contains(&self, q: &MeanFieldGaussian) -> bool {
        self.contains_mean(q.m())
            && q
                .sigma()
                .iter()
                .enumerate()
                .all(|(j, &s)| self.sigma_floor_at(j) <= s && s <= self.sigma_hi[j])
    }
}

/// Isotropic zero-mean prior `N(0, s^2 I_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrior {
    s: f64,
    d: usize,
}

impl GaussianPrior {
    pub fn new(s: f64, d: usize) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("prior scale {s} must be positive")));
        }
        Ok(Self { s, d })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn distribution(&self) -> MeanFieldGaussian {
        MeanFieldGaussian::isotropic(vec![0.0; self.d], self.s).expect("prior is valid")
    }
}

/// `KL(q || p)` for diagonal Gaussians.
pub fn kl_divergence(q: &MeanFieldGaussian, p: &MeanFieldGaussian) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    let mut acc = 0.0;
    for j in 0..q.dim() {
        let vq = q.sigma[j] * q.sigma[j];
        let vp = p.sigma[j] * p.sigma[j];
        let dm = q.m[j] - p.m[j];
        acc += dm * dm / vp + vq / vp - 1.0 + (vp / vq).ln();
    }
    // Rounding can leave a tiny negative residue when q == p.
    Ok((0.5 * acc).max(0.0))
}

/// `h(x) = sqrt(1 + x^2) - x`, evaluated without cancellation for large `x`.
#[inline]
pub fn h_scalar(x: f64) -> f64 {
    let r = 1.0_f64.hypot(x);
    if x > 0.0 {
        1.0 / (r + x)
    } else {
        r - x
    }
}

pub fn h_map(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| h_scalar(v)).collect()
}

/// Componentwise orthogonal projection onto the box (with the sigma floor).
pub fn project_box(q: &MeanFieldGaussian, bx: &BoxConstraints) -> Result<MeanFieldGaussian> {
    check_dim(bx.dim(), q.dim())?;
    let mut m = q.m.clone();
    let mut sigma = q.sigma.clone();
    bx.project_mean(&mut m);
    bx.project_sigma(&mut sigma);
    Ok(MeanFieldGaussian { m, sigma })
}

pub fn to_natural(q: &MeanFieldGaussian) -> NaturalParams {
    let lambda1 = q.m.iter().zip(&q.sigma).map(|(m, s)| m / (s * s)).collect();
    let lambda2 = q.sigma.iter().map(|s| -0.5 / (s * s)).collect();
    NaturalParams { lambda1, lambda2 }
}

pub fn from_natural(lambda: &NaturalParams) -> Result<MeanFieldGaussian> {
    check_dim(lambda.lambda1.len(), lambda.lambda2.len())?;
    let d = lambda.lambda1.len();
    let mut m = Vec::with_capacity(d);
    let mut sigma = Vec::with_capacity(d);
    for j in 0..d {
        let l2 = lambda.lambda2[j];
        if !(l2 < 0.0) {
            return Err(Error::InvalidPrecision {
                step: 0,
                coord: j,
                lambda2: l2,
            });
        }
        let var = -0.5 / l2;
        m.push(var * lambda.lambda1[j]);
        sigma.push(var.sqrt().max(SIGMA_FLOOR));
    }
    MeanFieldGaussian::new(m, sigma)
}

pub fn to_expectation(q: &MeanFieldGaussian) -> ExpectationParams {
    let mu1 = q.m.clone();
    let mu2 = q.m.iter().zip(&q.sigma).map(|(m, s)| m * m + s * s).collect();
    ExpectationParams { mu1, mu2 }
}

pub fn from_expectation(mu: &ExpectationParams) -> Result<MeanFieldGaussian> {
    check_dim(mu.mu1.len(), mu.mu2.len())?;
    let mut sigma = Vec::with_capacity(mu.mu1.len());
    for (j, (a, b)) in mu.mu1.iter().zip(&mu.mu2).enumerate() {
        let var = b - a * a;
        if !(var > 0.0) {
            return Err(Error::Domain(format!("non-positive variance at {j}")));
        }
        sigma.push(var.sqrt());
    }
    MeanFieldGaussian::new(mu.mu1.clone(), sigma)
}

/// The decision a variational learner plays: the mean of `q`.
pub fn posterior_mean(q: &MeanFieldGaussian) -> Vec<f64> {
    q.m.clone()
}
