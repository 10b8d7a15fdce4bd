//! Online update rules behind a common predict / observe / update loop.
//!
//! Variational learners keep `q_t = N(m_t, diag(sigma_t^2))` and predict
//! its mean. The closed forms (componentwise, `h(x) = sqrt(1+x^2) - x`):
//!
//! ```text
//! SVA     m' = m - eta s^2 g_m            G' = G + g_sigma      sigma' = s h(eta s G' / 2)
//! SVB     m' = P[m - eta sigma^2 g_m]     sigma' = P[sigma h(eta sigma g_sigma / 2)]
//! NGVI    lambda' = (1 - beta) lambda + beta lambda_1 - eta beta grad_mu,   1/beta = 1/alpha + 1/eta
//! OGA-EL  (m, sigma)' = P[(m, sigma) - eta (g_m, g_sigma)]
//! OGA     theta' = P[theta - eta dl(theta)]
//! ```

mod ewa;
mod run;

pub use ewa::{ewa_grid_update, logsumexp, EwaGrid};
pub use run::{run_online, step_seed, RunOptions, Snapshot, Trace, TraceStep};

use crate::error::{check_dim, Error, Result};
use crate::family::{
    from_natural, h_scalar, to_natural, BoxConstraints, GaussianPrior, MeanFieldGaussian,
    NaturalParams, SIGMA_FLOOR,
};
use crate::losses::ExpectedLossGradient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Sva,
    Svb,
    Ngvi,
    Oga,
    OgaEl,
    EwaGrid,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Oga,
        Algorithm::OgaEl,
        Algorithm::Sva,
        Algorithm::Svb,
        Algorithm::Ngvi,
        Algorithm::EwaGrid,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Sva => "sva",
            Algorithm::Svb => "svb",
            Algorithm::Ngvi => "ngvi",
            Algorithm::Oga => "oga",
            Algorithm::OgaEl => "ogael",
            Algorithm::EwaGrid => "ewa",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sva" => Algorithm::Sva,
            "svb" => Algorithm::Svb,
            "ngvi" => Algorithm::Ngvi,
            "oga" => Algorithm::Oga,
            "ogael" => Algorithm::OgaEl,
            "ewa" | "ewagrid" => Algorithm::EwaGrid,
            _ => return None,
        })
    }

    pub fn is_variational(&self) -> bool {
        matches!(
            self,
            Algorithm::Sva | Algorithm::Svb | Algorithm::Ngvi | Algorithm::OgaEl
        )
    }
}

/// Per-coordinate step sizes for SVB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvbSchedule {
    Fixed(f64),
    /// `eta_{t,j} = 1 / (sigma_{t,j}^2 sqrt t)`, the experimental default.
    InvVarianceSqrtT,
    /// `eta_{t,j} = D sqrt 2 / (L sqrt t sigma_{t,j}^2)`.
    ConvexBound { diameter: f64, lipschitz: f64 },
    /// `eta_{t,j} = 2 / (H t sigma_{t,j}^2)`.
    StronglyConvexBound { strong_convexity: f64 },
}

impl SvbSchedule {
    /// `eta_{t,j} * sigma_{t,j}^2`, the effective mean step. Computing this
    /// product directly keeps the sigma^2 cancellation exact.
    fn mean_step(&self, t: usize, sigma: f64) -> f64 {
        let t = t as f64;
        match *self {
            SvbSchedule::Fixed(eta) => eta * sigma * sigma,
            SvbSchedule::InvVarianceSqrtT => 1.0 / t.sqrt(),
            SvbSchedule::ConvexBound {
                diameter,
                lipschitz,
            } => diameter * std::f64::consts::SQRT_2 / (lipschitz * t.sqrt()),
            SvbSchedule::StronglyConvexBound { strong_convexity } => 2.0 / (strong_convexity * t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LearnerSpec {
    Sva { eta: f64, project: bool },
    Svb { schedule: SvbSchedule },
    Ngvi { eta: f64, alpha: f64, max_backtracks: usize },
    Oga { eta: f64 },
    OgaEl { eta: f64 },
    EwaGrid { eta: f64, experts: Vec<Vec<f64>> },
}

impl LearnerSpec {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            LearnerSpec::Sva { .. } => Algorithm::Sva,
            LearnerSpec::Svb { .. } => Algorithm::Svb,
            LearnerSpec::Ngvi { .. } => Algorithm::Ngvi,
            LearnerSpec::Oga { .. } => Algorithm::Oga,
            LearnerSpec::OgaEl { .. } => Algorithm::OgaEl,
            LearnerSpec::EwaGrid { .. } => Algorithm::EwaGrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub spec: LearnerSpec,
    pub prior: GaussianPrior,
    pub bx: BoxConstraints,
}

impl LearnerConfig {
    pub fn new(spec: LearnerSpec, prior: GaussianPrior, bx: BoxConstraints) -> Result<Self> {
        check_dim(prior.dim(), bx.dim())?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        match &spec {
            LearnerSpec::Sva { eta, .. } | LearnerSpec::Oga { eta } | LearnerSpec::OgaEl { eta } => {
                positive("eta", *eta)?
            }
            LearnerSpec::Svb { schedule } => match *schedule {
                SvbSchedule::Fixed(eta) => positive("eta", eta)?,
                SvbSchedule::InvVarianceSqrtT => {}
                SvbSchedule::ConvexBound {
                    diameter,
                    lipschitz,
                } => {
                    positive("D", diameter)?;
                    positive("L", lipschitz)?;
                }
                SvbSchedule::StronglyConvexBound { strong_convexity } => {
                    positive("H", strong_convexity)?
                }
            },
            LearnerSpec::Ngvi { eta, alpha, .. } => {
                positive("eta", *eta)?;
                positive("alpha", *alpha)?;
            }
            LearnerSpec::EwaGrid { eta, experts } => {
                if *eta < 0.0 || !eta.is_finite() {
                    return Err(Error::Config(format!("eta must be nonnegative, got {eta}")));
                }
                if experts.is_empty() {
                    return Err(Error::Config("expert grid is empty".into()));
                }
                for e in experts {
                    check_dim(prior.dim(), e.len())?;
                }
            }
        }
        Ok(Self { spec, prior, bx })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.spec.algorithm()
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Sva {
        q: MeanFieldGaussian,
        accum_g_sigma: Vec<f64>,
    },
    Svb {
        q: MeanFieldGaussian,
    },
    Ngvi {
        q: MeanFieldGaussian,
        lambda: NaturalParams,
        prior_lambda: NaturalParams,
    },
    OgaEl {
        q: MeanFieldGaussian,
    },
    Oga {
        theta: Vec<f64>,
    },
    EwaGrid {
        grid: EwaGrid,
    },
}

/// Evolving learner state; `t` counts completed updates.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub t: usize,
    pub data: StateData,
}

impl LearnerState {
    /// Initial state: the prior for variational learners, the origin for
    /// OGA, uniform weights for the grid.
    pub fn initial(config: &LearnerConfig) -> Result<Self> {
        let prior = config.prior.distribution();
        let data = match &config.spec {
            LearnerSpec::Sva { .. } => StateData::Sva {
                accum_g_sigma: vec![0.0; prior.dim()],
                q: prior,
            },
            LearnerSpec::Svb { .. } => StateData::Svb { q: prior },
            LearnerSpec::OgaEl { .. } => StateData::OgaEl { q: prior },
            LearnerSpec::Ngvi { .. } => {
                let lambda = to_natural(&prior);
                StateData::Ngvi {
                    prior_lambda: lambda.clone(),
                    lambda,
                    q: prior,
                }
            }
            LearnerSpec::Oga { .. } => StateData::Oga {
                theta: vec![0.0; prior.dim()],
            },
            LearnerSpec::EwaGrid { eta, experts } => StateData::EwaGrid {
                grid: EwaGrid::uniform(experts.clone(), *eta)?,
            },
        };
        Ok(Self { t: 0, data })
    }

    /// Current variational distribution, if the learner keeps one.
    pub fn q(&self) -> Option<&MeanFieldGaussian> {
        match &self.data {
            StateData::Sva { q, .. }
            | StateData::Svb { q }
            | StateData::Ngvi { q, .. }
            | StateData::OgaEl { q } => Some(q),
            StateData::Oga { .. } | StateData::EwaGrid { .. } => None,
        }
    }
}

/// The decision played at the next step.
pub fn predict(state: &LearnerState) -> Vec<f64> {
    match &state.data {
        StateData::Oga { theta } => theta.clone(),
        StateData::EwaGrid { grid } => grid.mean(),
        _ => state.q().expect("variational state").m().to_vec(),
    }
}

fn mismatch(expected: Algorithm, state: &LearnerState) -> Error {
    Error::Config(format!(
        "{} update applied to incompatible state {:?}",
        expected.tag(),
        std::mem::discriminant(&state.data)
    ))
}

fn check_grad(q: &MeanFieldGaussian, grad: &ExpectedLossGradient) -> Result<()> {
    check_dim(q.dim(), grad.g_m.len())?;
    check_dim(q.dim(), grad.g_sigma.len())?;
    if !grad.is_finite() {
        return Err(Error::NonFinite("expected-loss gradient".into()));
    }
    Ok(())
}

pub fn sva_update(
    state: &LearnerState,
    grad: &ExpectedLossGradient,
    config: &LearnerConfig,
) -> Result<LearnerState> {
    let (LearnerSpec::Sva { eta, project }, StateData::Sva { q, accum_g_sigma }) =
        (&config.spec, &state.data)
    else {
        return Err(mismatch(Algorithm::Sva, state));
    };
    check_grad(q, grad)?;
    let s = config.prior.s();
    let d = q.dim();
    let mut m = Vec::with_capacity(d);
    let mut accum = Vec::with_capacity(d);
    let mut sigma = Vec::with_capacity(d);
    for j in 0..d {
        m.push(q.m()[j] - eta * s * s * grad.g_m[j]);
        let g = accum_g_sigma[j] + grad.g_sigma[j];
        accum.push(g);
        sigma.push(s * h_scalar(0.5 * eta * s * g));
    }
    if *project {
        config.bx.project_mean(&mut m);
        config.bx.project_sigma(&mut sigma);
    } else {
        sigma.iter_mut().for_each(|v| *v = v.max(SIGMA_FLOOR));
    }
    Ok(LearnerState {
        t: state.t + 1,
        data: StateData::Sva {
            q: MeanFieldGaussian::new(m, sigma)?,
            accum_g_sigma: accum,
        },
    })
}

/// Unprojected SVB proposal for step `t` (1-based): returns `(m', sigma')`.
pub fn svb_proposal(
    q: &MeanFieldGaussian,
    grad: &ExpectedLossGradient,
    schedule: &SvbSchedule,
    t: usize,
) -> (Vec<f64>, Vec<f64>) {
    let d = q.dim();
    let mut m = Vec::with_capacity(d);
    let mut sigma = Vec::with_capacity(d);
    for j in 0..d {
        let sj = q.sigma()[j];
        let step = schedule.mean_step(t, sj);
        m.push(q.m()[j] - step * grad.g_m[j]);
        // eta sigma g / 2 == (eta sigma^2) g / (2 sigma)
        sigma.push(sj * h_scalar(0.5 * step * grad.g_sigma[j] / sj));
    }
    (m, sigma)
}

pub fn svb_update(
    state: &LearnerState,
    grad: &ExpectedLossGradient,
    config: &LearnerConfig,
) -> Result<LearnerState> {
    let (LearnerSpec::Svb { schedule }, StateData::Svb { q }) = (&config.spec, &state.data) else {
        return Err(mismatch(Algorithm::Svb, state));
    };
    check_grad(q, grad)?;
    let (mut m, mut sigma) = svb_proposal(q, grad, schedule, state.t + 1);
    config.bx.project_mean(&mut m);
    config.bx.project_sigma(&mut sigma);
    Ok(LearnerState {
        t: state.t + 1,
        data: StateData::Svb {
            q: MeanFieldGaussian::new(m, sigma)?,
        },
    })
}

/// Gradient of the expected loss in expectation coordinates
/// `(mu1, mu2) = (m, m^2 + sigma^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationGradient {
    pub d_mu1: Vec<f64>,
    pub d_mu2: Vec<f64>,
}

/// Chain rule from `(m, sigma)`: with `g_v = g_sigma / (2 sigma)`,
/// `dL/dmu1 = g_m - 2 m g_v` and `dL/dmu2 = g_v`.
pub fn grad_to_expectation_coords(
    grad: &ExpectedLossGradient,
    q: &MeanFieldGaussian,
) -> Result<ExpectationGradient> {
    check_grad(q, grad)?;
    let d = q.dim();
    let mut d_mu1 = Vec::with_capacity(d);
    let mut d_mu2 = Vec::with_capacity(d);
    for j in 0..d {
        let s = q.sigma()[j];
        if !(s > 0.0) {
            return Err(Error::Domain(format!("sigma[{j}] = {s}")));
        }
        let gv = grad.g_sigma[j] / (2.0 * s);
        d_mu1.push(grad.g_m[j] - 2.0 * q.m()[j] * gv);
        d_mu2.push(gv);
    }
    Ok(ExpectationGradient { d_mu1, d_mu2 })
}

/// `1/beta = 1/alpha + 1/eta`.
pub fn ngvi_beta(alpha: f64, eta: f64) -> f64 {
    1.0 / (1.0 / alpha + 1.0 / eta)
}

/// One application of the natural-parameter recursion.
pub fn ngvi_recursion(
    lambda: &NaturalParams,
    prior_lambda: &NaturalParams,
    grad: &ExpectationGradient,
    eta: f64,
    alpha: f64,
) -> NaturalParams {
    let beta = ngvi_beta(alpha, eta);
    let mix = |cur: &[f64], first: &[f64], g: &[f64]| -> Vec<f64> {
        cur.iter()
            .zip(first)
            .zip(g)
            .map(|((c, f), g)| (1.0 - beta) * c + beta * f - eta * beta * g)
            .collect()
    };
    NaturalParams {
        lambda1: mix(&lambda.lambda1, &prior_lambda.lambda1, &grad.d_mu1),
        lambda2: mix(&lambda.lambda2, &prior_lambda.lambda2, &grad.d_mu2),
    }
}

/// Result of an NGVI step: the new state and the step size actually used
/// (smaller than the configured one when the step had to be backtracked).
#[derive(Debug, Clone, PartialEq)]
pub struct NgviStep {
    pub state: LearnerState,
    pub eta_used: f64,
}

pub fn ngvi_update(
    state: &LearnerState,
    grad: &ExpectationGradient,
    config: &LearnerConfig,
) -> Result<NgviStep> {
    let (
        LearnerSpec::Ngvi {
            eta,
            alpha,
            max_backtracks,
        },
        StateData::Ngvi {
            lambda,
            prior_lambda,
            ..
        },
    ) = (&config.spec, &state.data)
    else {
        return Err(mismatch(Algorithm::Ngvi, state));
    };
    check_dim(lambda.lambda1.len(), grad.d_mu1.len())?;
    check_dim(lambda.lambda1.len(), grad.d_mu2.len())?;
    let step = state.t + 1;
    let mut eta_try = *eta;
    let mut last_bad = None;
    for _ in 0..=*max_backtracks {
        let next = ngvi_recursion(lambda, prior_lambda, grad, eta_try, *alpha);
        if let Some(coord) = next.lambda2.iter().position(|&l| !(l < 0.0)) {
            last_bad = Some((coord, next.lambda2[coord]));
            eta_try *= 0.5;
            continue;
        }
        let q = from_natural(&next)?;
        return Ok(NgviStep {
            state: LearnerState {
                t: step,
                data: StateData::Ngvi {
                    q,
                    lambda: next,
                    prior_lambda: prior_lambda.clone(),
                },
            },
            eta_used: eta_try,
        });
    }
    let (coord, lambda2) = last_bad.expect("loop ran at least once");
    Err(Error::InvalidPrecision {
        step,
        coord,
        lambda2,
    })
}

pub fn oga_update(state: &LearnerState, point_grad: &[f64], config: &LearnerConfig) -> Result<LearnerState> {
    let (LearnerSpec::Oga { eta }, StateData::Oga { theta }) = (&config.spec, &state.data) else {
        return Err(mismatch(Algorithm::Oga, state));
    };
    check_dim(theta.len(), point_grad.len())?;
    let mut next: Vec<f64> = theta.iter().zip(point_grad).map(|(t, g)| t - eta * g).collect();
    config.bx.project_mean(&mut next);
    Ok(LearnerState {
        t: state.t + 1,
        data: StateData::Oga { theta: next },
    })
}

pub fn ogael_update(
    state: &LearnerState,
    grad: &ExpectedLossGradient,
    config: &LearnerConfig,
) -> Result<LearnerState> {
    let (LearnerSpec::OgaEl { eta }, StateData::OgaEl { q }) = (&config.spec, &state.data) else {
        return Err(mismatch(Algorithm::OgaEl, state));
    };
    check_grad(q, grad)?;
    let mut m: Vec<f64> = q.m().iter().zip(&grad.g_m).map(|(m, g)| m - eta * g).collect();
    let mut sigma: Vec<f64> = q
        .sigma()
        .iter()
        .zip(&grad.g_sigma)
        .map(|(s, g)| s - eta * g)
        .collect();
    config.bx.project_mean(&mut m);
    config.bx.project_sigma(&mut sigma);
    Ok(LearnerState {
        t: state.t + 1,
        data: StateData::OgaEl {
            q: MeanFieldGaussian::new(m, sigma)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::SIGMA_FLOOR;

    fn cfg(spec: LearnerSpec, s: f64, d: usize) -> LearnerConfig {
        LearnerConfig::new(
            spec,
            GaussianPrior::new(s, d).unwrap(),
            BoxConstraints::experiment_default(d),
        )
        .unwrap()
    }

    fn with_q(data: StateData) -> LearnerState {
        LearnerState { t: 0, data }
    }

    fn q1(m: f64, s: f64) -> MeanFieldGaussian {
        MeanFieldGaussian::new(vec![m], vec![s]).unwrap()
    }

    fn g1(gm: f64, gs: f64) -> ExpectedLossGradient {
        ExpectedLossGradient {
            g_m: vec![gm],
            g_sigma: vec![gs],
        }
    }

    #[test]
    fn sva_examples() {
        let c = cfg(LearnerSpec::Sva { eta: 0.1, project: true }, 1.0, 1);
        let st = LearnerState::initial(&c).unwrap();
        assert_eq!(predict(&st), vec![0.0]);
        let next = sva_update(&st, &g1(0.0, 0.0), &c).unwrap();
        assert_eq!(next.q().unwrap(), st.q().unwrap());
        assert_eq!(next.t, 1);

        let st = with_q(StateData::Sva {
            q: q1(0.5, 1.0),
            accum_g_sigma: vec![0.0],
        });
        let next = sva_update(&st, &g1(2.0, 1.5), &c).unwrap();
        let q = next.q().unwrap();
        assert!((q.m()[0] - 0.3).abs() < 1e-15);
        assert!((q.sigma()[0] - 0.927_808_5).abs() < 1e-7);
    }

    #[test]
    fn svb_examples() {
        let (m, s) = svb_proposal(&q1(0.0, 2.0), &g1(1.0, 1.0), &SvbSchedule::Fixed(0.1), 1);
        assert!((m[0] + 0.4).abs() < 1e-15);
        assert!((s[0] - 1.809_975_2).abs() < 1e-7);

        // Bound schedule: mean step is independent of sigma.
        let sched = SvbSchedule::ConvexBound {
            diameter: 3.0,
            lipschitz: 2.0,
        };
        for sigma in [0.01, 0.3, 1.0] {
            let (m, _) = svb_proposal(&q1(0.7, sigma), &g1(0.5, 0.2), &sched, 4);
            let expected = 0.7 - 3.0 * 2f64.sqrt() / (2.0 * 2.0) * 0.5;
            assert!((m[0] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn svb_projects() {
        let c = cfg(LearnerSpec::Svb { schedule: SvbSchedule::Fixed(100.0) }, 1.0, 1);
        let st = with_q(StateData::Svb { q: q1(19.0, 1.0) });
        let next = svb_update(&st, &g1(-1.0, -5.0), &c).unwrap();
        let q = next.q().unwrap();
        assert_eq!(q.m(), &[20.0]);
        assert_eq!(q.sigma(), &[1.0]);
    }

    #[test]
    fn ngvi_beta_and_fixed_point() {
        assert_eq!(ngvi_beta(1.0, 1.0), 0.5);
        let c = cfg(
            LearnerSpec::Ngvi {
                eta: 1.0,
                alpha: 1.0,
                max_backtracks: 10,
            },
            2.0,
            2,
        );
        let st = LearnerState::initial(&c).unwrap();
        let zero = ExpectationGradient {
            d_mu1: vec![0.0; 2],
            d_mu2: vec![0.0; 2],
        };
        let next = ngvi_update(&st, &zero, &c).unwrap();
        match (&next.state.data, &st.data) {
            (StateData::Ngvi { lambda: a, .. }, StateData::Ngvi { lambda: b, .. }) => assert_eq!(a, b),
            _ => unreachable!(),
        }
        assert_eq!(next.eta_used, 1.0);
    }

    #[test]
    fn ngvi_backtracks_then_fails() {
        let c = cfg(
            LearnerSpec::Ngvi {
                eta: 1.0,
                alpha: 1.0,
                max_backtracks: 10,
            },
            1.0,
            1,
        );
        let st = LearnerState::initial(&c).unwrap();
        // lambda2' = -0.5 - 0.5 eta g with beta = eta/(1+eta) for alpha = 1.
        let g = ExpectationGradient {
            d_mu1: vec![0.0],
            d_mu2: vec![-1.5],
        };
        let out = ngvi_update(&st, &g, &c).unwrap();
        assert!(out.eta_used < 1.0);
        match &out.state.data {
            StateData::Ngvi { lambda, .. } => assert!(lambda.lambda2[0] < 0.0),
            _ => unreachable!(),
        }
        let g = ExpectationGradient {
            d_mu1: vec![0.0],
            d_mu2: vec![-1e9],
        };
        assert!(matches!(
            ngvi_update(&st, &g, &c),
            Err(Error::InvalidPrecision { step: 1, coord: 0, .. })
        ));
    }

    #[test]
    fn expectation_coords() {
        let q = MeanFieldGaussian::new(vec![0.0, 1.5], vec![0.5, 2.0]).unwrap();
        let zero = ExpectedLossGradient::zeros(2);
        let e = grad_to_expectation_coords(&zero, &q).unwrap();
        assert_eq!(e.d_mu1, vec![0.0, 0.0]);
        assert_eq!(e.d_mu2, vec![0.0, 0.0]);
        let g = ExpectedLossGradient {
            g_m: vec![0.3, 0.3],
            g_sigma: vec![1.0, 1.0],
        };
        let e = grad_to_expectation_coords(&g, &q).unwrap();
        assert_eq!(e.d_mu1[0], 0.3);
        assert!((e.d_mu1[1] - (0.3 - 2.0 * 1.5 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn oga_examples() {
        let c = cfg(LearnerSpec::Oga { eta: 0.5 }, 1.0, 1);
        let st = with_q(StateData::Oga { theta: vec![1.0] });
        assert_eq!(predict(&oga_update(&st, &[0.0], &c).unwrap()), vec![1.0]);
        assert_eq!(predict(&oga_update(&st, &[1.0], &c).unwrap()), vec![0.5]);
        assert_eq!(predict(&oga_update(&st, &[-100.0], &c).unwrap()), vec![20.0]);
        assert_eq!(predict(&st), vec![1.0]);
    }

    #[test]
    fn ogael_examples() {
        let c = cfg(LearnerSpec::OgaEl { eta: 0.1 }, 1.0, 1);
        let st = with_q(StateData::OgaEl { q: q1(0.0, 1.0) });
        let same = ogael_update(&st, &g1(0.0, 0.0), &c).unwrap();
        assert_eq!(same.q(), st.q());
        let next = ogael_update(&st, &g1(1.0, 0.5), &c).unwrap();
        let q = next.q().unwrap();
        assert!((q.m()[0] + 0.1).abs() < 1e-15);
        assert!((q.sigma()[0] - 0.95).abs() < 1e-15);
        let next = ogael_update(&st, &g1(0.0, 50.0), &c).unwrap();
        assert_eq!(next.q().unwrap().sigma(), &[SIGMA_FLOOR]);
    }

    #[test]
    fn config_rejects_irrelevant_or_bad_values() {
        let prior = GaussianPrior::new(1.0, 1).unwrap();
        let bx = BoxConstraints::experiment_default(1);
        assert!(LearnerConfig::new(LearnerSpec::Oga { eta: 0.0 }, prior, bx.clone()).is_err());
        assert!(LearnerConfig::new(
            LearnerSpec::EwaGrid {
                eta: 1.0,
                experts: vec![vec![0.0, 1.0]]
            },
            prior,
            bx.clone()
        )
        .is_err());
        let c = cfg(LearnerSpec::Oga { eta: 0.1 }, 1.0, 1);
        let st = LearnerState::initial(&c).unwrap();
        let other = cfg(LearnerSpec::OgaEl { eta: 0.1 }, 1.0, 1);
        assert!(ogael_update(&st, &g1(0.0, 0.0), &other).is_err());
    }
}
