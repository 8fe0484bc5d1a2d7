//! Backtracking line search on the sampled model.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{AlasError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecreaseCondition {
    /// `m(x+αd) − m(x) ≤ −(η/6) α³ ‖d‖³`
    Cubic,
    /// `m(x+αd) − m(x) ≤ −(η/2) α² ‖d‖²`
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    pub theta: f64,
    pub eta: f64,
    pub condition: DecreaseCondition,
    pub j_max: u32,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            theta: 0.9,
            eta: 0.01,
            condition: DecreaseCondition::Cubic,
            j_max: 50,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(AlasError::invalid(format!("theta must lie in (0,1), got {}", self.theta)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(AlasError::invalid(format!("eta must be positive, got {}", self.eta)));
        }
        if self.j_max < 1 {
            return Err(AlasError::invalid("j_max must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub alpha: f64,
    /// `m(x+αd) − m(x)`
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub j: u32,
    pub trials: Vec<Trial>,
    pub satisfied: bool,
    /// Model value at the accepted point; at the last trial when not satisfied.
    pub model_value: f64,
}

pub fn decrease_condition(condition: DecreaseCondition, m_trial: f64, m_0: f64, alpha: f64, d_norm: f64, eta: f64) -> bool {
    let s = alpha * d_norm;
    let bound = match condition {
        DecreaseCondition::Cubic => -(eta / 6.0) * s * s * s,
        DecreaseCondition::Quadratic => -(eta / 2.0) * s * s,
    };
    m_trial - m_0 <= bound
}

/// Tries `α = θ^j` for `j = 0, 1, …, j_max` and stops at the first `α` that
/// satisfies the decrease condition.
///
/// `model` evaluates `m(·; S)` for the current sample; `m_0` is its value at
/// `x`. When no trial passes, the result has `satisfied = false` and
/// `α = θ^{j_max}`.
pub fn backtrack<F>(mut model: F, x: &DVector<f64>, d: &DVector<f64>, m_0: f64, cfg: &LineSearchConfig) -> Result<LineSearchResult>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    cfg.validate()?;
    if x.len() != d.len() {
        return Err(AlasError::DimensionMismatch {
            expected: x.len(),
            got: d.len(),
        });
    }
    let d_norm = d.norm();
    if d_norm == 0.0 || !d_norm.is_finite() {
        return Err(AlasError::invalid("line search needs a finite nonzero direction"));
    }
    let mut trials = Vec::new();
    let mut alpha = 1.0;
    let mut last = m_0;
    for j in 0..=cfg.j_max {
        if j > 0 {
            alpha *= cfg.theta;
        }
        let xt = x + d * alpha;
        let m = model(&xt)?;
        if !m.is_finite() {
            return Err(AlasError::numeric(format!("non-finite model value at trial α = {alpha:e}")));
        }
        trials.push(Trial { alpha, decrease: m - m_0 });
        last = m;
        if decrease_condition(cfg.condition, m, m_0, alpha, d_norm, cfg.eta) {
            return Ok(LineSearchResult {
                alpha,
                j,
                trials,
                satisfied: true,
                model_value: m,
            });
        }
    }
    Ok(LineSearchResult {
        alpha,
        j: cfg.j_max,
        trials,
        satisfied: false,
        model_value: last,
    })
}
