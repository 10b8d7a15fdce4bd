use crate::error::{check_dim, Error, Result};
use crate::family::BoxConstraints;

const MAX_EXPERTS: usize = 1 << 22;

/// Exponentially weighted average over a finite set of point experts,
/// weights kept in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct EwaGrid {
    thetas: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    eta: f64,
}

pub fn logsumexp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl EwaGrid {
    pub fn uniform(thetas: Vec<Vec<f64>>, eta: f64) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::Config("expert grid is empty".into()));
        }
        let d = thetas[0].len();
        for t in &thetas {
            check_dim(d, t.len())?;
        }
        let lw = -(thetas.len() as f64).ln();
        Ok(Self {
            log_weights: vec![lw; thetas.len()],
            thetas,
            eta,
        })
    }

    /// Product lattice with `resolution` evenly spaced points per axis of the
    /// mean box.
    pub fn lattice(bx: &BoxConstraints, resolution: usize) -> Result<Vec<Vec<f64>>> {
        if resolution == 0 {
            return Err(Error::Config("grid resolution must be positive".into()));
        }
        let d = bx.dim();
        let count = (resolution as f64).powi(d as i32);
        if count > MAX_EXPERTS as f64 {
            return Err(Error::Config(format!(
                "grid of {resolution}^{d} experts is too large"
            )));
        }
        let axis = |j: usize| -> Vec<f64> {
            if resolution == 1 {
                return vec![0.5 * (bx.m_lo()[j] + bx.m_hi()[j])];
            }
            let step = (bx.m_hi()[j] - bx.m_lo()[j]) / (resolution - 1) as f64;
            (0..resolution).map(|i| bx.m_lo()[j] + i as f64 * step).collect()
        };
        let axes: Vec<Vec<f64>> = (0..d).map(axis).collect();
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for a in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    a.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    /// Weighted mean of the experts.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.thetas[0].len();
        let mut out = vec![0.0; d];
        for (theta, lw) in self.thetas.iter().zip(&self.log_weights) {
            let w = lw.exp();
            for (o, t) in out.iter_mut().zip(theta) {
                *o += w * t;
            }
        }
        out
    }
}

/// `log w_k <- log w_k - eta * loss_k`, renormalized.
pub fn ewa_grid_update(grid: &EwaGrid, losses: &[f64]) -> Result<EwaGrid> {
    check_dim(grid.len(), losses.len())?;
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("expert loss".into()));
    }
    let mut lw: Vec<f64> = grid
        .log_weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w - grid.eta * l)
        .collect();
    let z = logsumexp(&lw);
    lw.iter_mut().for_each(|w| *w -= z);
    Ok(EwaGrid {
        thetas: grid.thetas.clone(),
        log_weights: lw,
        eta: grid.eta,
    })
}
