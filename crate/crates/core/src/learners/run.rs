use super::{
    ewa_grid_update, grad_to_expectation_coords, ngvi_update, oga_update, ogael_update, predict,
    sva_update, svb_update, ExpectationGradient, LearnerConfig, LearnerState, StateData,
};
use crate::error::{check_dim, Result};
use crate::family::{MeanFieldGaussian, NaturalParams};
use crate::losses::{expected_loss_and_grad, point_grad, point_loss, DataExample, ExpectedLossGradient, LossKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub mc_samples: usize,
    pub seed: u64,
    pub record_snapshots: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mc_samples: 32,
            seed: 0,
            record_snapshots: false,
        }
    }
}

/// Seed of the Monte-Carlo draw at step `t`. Depends only on the run seed
/// and `t`, so every learner sees the same noise at a given step.
pub fn step_seed(seed: u64, t: usize) -> u64 {
    let mut z = seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// State after the update of one step, with what drove it.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub q: Option<MeanFieldGaussian>,
    pub natural: Option<NaturalParams>,
    pub grad: Option<ExpectedLossGradient>,
    pub grad_expectation: Option<ExpectationGradient>,
    pub point_grad: Option<Vec<f64>>,
    pub eta_used: Option<f64>,
    pub box_violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub prediction: Vec<f64>,
    pub loss: f64,
    /// `E_{q_t}[l_t]` for variational learners.
    pub expected_loss: Option<f64>,
    pub snapshot: Option<Snapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub final_state: LearnerState,
    /// NGVI steps whose step size had to be reduced.
    pub backtracked_steps: usize,
    /// NGVI steps whose iterate left the box.
    pub box_violations: usize,
}

impl Trace {
    pub fn losses(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.loss).collect()
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.steps.iter().map(|s| s.loss).sum()
    }

    pub fn predictions(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.prediction.clone()).collect()
    }
}

/// Plays the stream once: predict, incur the point loss, update.
pub fn run_online(
    config: &LearnerConfig,
    stream: &[DataExample],
    kind: LossKind,
    options: &RunOptions,
) -> Result<Trace> {
    let d = config.dim();
    let mut state = LearnerState::initial(config)?;
    let mut steps = Vec::with_capacity(stream.len());
    let mut backtracked_steps = 0;
    let mut box_violations = 0;
    for (i, ex) in stream.iter().enumerate() {
        let t = i + 1;
        let prediction = predict(&state);
        check_dim(d, prediction.len())?;
        let loss = point_loss(kind, &prediction, ex)?;
        let mut snap = Snapshot {
            q: None,
            natural: None,
            grad: None,
            grad_expectation: None,
            point_grad: None,
            eta_used: None,
            box_violation: false,
        };
        let mut expected_loss = None;
        let next = match &state.data {
            StateData::Oga { theta } => {
                let g = point_grad(kind, theta, ex)?;
                let next = oga_update(&state, &g, config)?;
                snap.point_grad = Some(g);
                next
            }
            StateData::EwaGrid { grid } => {
                let losses = grid
                    .thetas()
                    .iter()
                    .map(|th| point_loss(kind, th, ex))
                    .collect::<Result<Vec<_>>>()?;
                LearnerState {
                    t: state.t + 1,
                    data: StateData::EwaGrid {
                        grid: ewa_grid_update(grid, &losses)?,
                    },
                }
            }
            _ => {
                let q = state.q().expect("variational state");
                let (el, grad) =
                    expected_loss_and_grad(kind, q, ex, options.mc_samples, step_seed(options.seed, t))?;
                expected_loss = Some(el);
                let next = match &state.data {
                    StateData::Sva { .. } => sva_update(&state, &grad, config)?,
                    StateData::Svb { .. } => svb_update(&state, &grad, config)?,
                    StateData::OgaEl { .. } => ogael_update(&state, &grad, config)?,
                    StateData::Ngvi { .. } => {
                        let ge = grad_to_expectation_coords(&grad, q)?;
                        let out = ngvi_update(&state, &ge, config)?;
                        if out.eta_used != config_eta(config) {
                            backtracked_steps += 1;
                        }
                        let violation = !config.bx.contains(out.state.q().expect("ngvi q"));
                        if violation {
                            box_violations += 1;
                        }
                        snap.eta_used = Some(out.eta_used);
                        snap.box_violation = violation;
                        snap.grad_expectation = Some(ge);
                        if let StateData::Ngvi { lambda, .. } = &out.state.data {
                            snap.natural = Some(lambda.clone());
                        }
                        out.state
                    }
                    _ => unreachable!(),
                };
                snap.grad = Some(grad);
                next
            }
        };
        snap.q = next.q().cloned();
        steps.push(TraceStep {
            t,
            prediction,
            loss,
            expected_loss,
            snapshot: options.record_snapshots.then_some(snap),
        });
        state = next;
    }
    Ok(Trace {
        steps,
        final_state: state,
        backtracked_steps,
        box_violations,
    })
}

fn config_eta(config: &LearnerConfig) -> f64 {
    match &config.spec {
        super::LearnerSpec::Ngvi { eta, .. } => *eta,
        _ => f64::NAN,
    }
}
