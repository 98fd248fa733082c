//! Online minimizers over a single probability simplex.
//!
//! Regret matching (RM), regret matching+ (RM+), multiplicative weights (MWU)
//! and projected gradient descent (GDA), each optionally optimistic. Every
//! solver in the crate is assembled from these steps. RM and RM+ consume a
//! value vector (higher is better); MWU and GDA consume a loss vector.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::nfg::SimplexVector;

/// Accumulated regrets of one decision point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretState {
    pub cum_regret: Vec<f64>,
    /// Previous loss, kept as the prediction of optimistic variants.
    pub last_loss: Option<Vec<f64>>,
    pub iteration: u64,
}

impl RegretState {
    pub fn zeros(n: usize) -> Self {
        RegretState {
            cum_regret: vec![0.0; n],
            last_loss: None,
            iteration: 0,
        }
    }

    /// Regrets initialized to a strategy, `Q⁰ = σ¹`.
    pub fn from_strategy(strategy: &SimplexVector) -> Self {
        RegretState {
            cum_regret: strategy.as_slice().to_vec(),
            last_loss: None,
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.cum_regret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum_regret.is_empty()
    }

    /// Strategy induced by positive-part normalization; uniform when no
    /// regret is positive.
    pub fn strategy(&self) -> SimplexVector {
        SimplexVector::from_weights_or_uniform(self.cum_regret.iter().map(|q| q.max(0.0)).collect())
    }

    fn check(&self, values: &[f64], current: &SimplexVector) -> Result<()> {
        ensure_len("value vector", self.len(), values.len())?;
        ensure_len("current strategy", self.len(), current.len())?;
        ensure_finite("value vector", values)?;
        ensure_finite("regret state", &self.cum_regret)
    }

    /// In-place RM+ update: `Q ← max(Q + r, 0)` with
    /// `r = q − ⟨σ, q⟩`. Returns the next strategy.
    pub fn rm_plus_update(
        &mut self,
        values: &[f64],
        current: &SimplexVector,
    ) -> Result<SimplexVector> {
        self.check(values, current)?;
        let baseline = current.dot(values);
        for (q, v) in self.cum_regret.iter_mut().zip(values) {
            *q = (*q + (v - baseline)).max(0.0);
        }
        self.iteration += 1;
        Ok(self.strategy())
    }

    /// In-place RM update: `Q ← Q + r` with no flooring.
    pub fn rm_update(&mut self, values: &[f64], current: &SimplexVector) -> Result<SimplexVector> {
        self.check(values, current)?;
        let baseline = current.dot(values);
        for (q, v) in self.cum_regret.iter_mut().zip(values) {
            *q += v - baseline;
        }
        self.iteration += 1;
        Ok(self.strategy())
    }
}

/// Simplex minimizer family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MinimizerKind {
    Rm,
    RmPlus,
    Mwu,
    Gda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizerConfig {
    pub kind: MinimizerKind,
    /// Step size, ignored by RM and RM+.
    pub learning_rate: f64,
    pub optimistic: bool,
}

impl MinimizerConfig {
    pub fn rm() -> Self {
        MinimizerConfig {
            kind: MinimizerKind::Rm,
            learning_rate: 1.0,
            optimistic: false,
        }
    }

    pub fn rm_plus() -> Self {
        MinimizerConfig {
            kind: MinimizerKind::RmPlus,
            learning_rate: 1.0,
            optimistic: false,
        }
    }

    pub fn mwu(learning_rate: f64, optimistic: bool) -> Self {
        MinimizerConfig {
            kind: MinimizerKind::Mwu,
            learning_rate,
            optimistic,
        }
    }

    pub fn gda(learning_rate: f64, optimistic: bool) -> Self {
        MinimizerConfig {
            kind: MinimizerKind::Gda,
            learning_rate,
            optimistic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            MinimizerKind::Mwu | MinimizerKind::Gda => {
                if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "learning rate must be positive, got {}",
                        self.learning_rate
                    )));
                }
            }
            MinimizerKind::Rm | MinimizerKind::RmPlus => {
                if self.optimistic {
                    return Err(Error::InvalidConfig(
                        "optimism is only defined for MWU and GDA".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// True for the variants whose last iterate is the quantity of interest.
    pub fn is_last_iterate(&self) -> bool {
        self.optimistic
    }
}

/// Weighting of iterates in the reported average strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Averaging {
    /// Report the last iterate.
    None,
    Uniform,
    /// Iterate `t` has weight `t`.
    Linear,
}

impl Averaging {
    pub fn weight(self, t: u64) -> f64 {
        match self {
            Averaging::None => 0.0,
            Averaging::Uniform => 1.0,
            Averaging::Linear => t as f64,
        }
    }
}

/// One RM+ step on a copy of `state`.
pub fn rm_plus_step(
    state: &RegretState,
    values: &[f64],
    current: &SimplexVector,
) -> Result<(RegretState, SimplexVector)> {
    let mut next = state.clone();
    let strategy = next.rm_plus_update(values, current)?;
    Ok((next, strategy))
}

/// One RM step on a copy of `state`.
pub fn rm_step(
    state: &RegretState,
    values: &[f64],
    current: &SimplexVector,
) -> Result<(RegretState, SimplexVector)> {
    let mut next = state.clone();
    let strategy = next.rm_update(values, current)?;
    Ok((next, strategy))
}

/// `2·loss − prediction` when a prediction is supplied.
fn effective_loss(loss: &[f64], prediction: Option<&[f64]>) -> Result<Vec<f64>> {
    ensure_finite("loss vector", loss)?;
    match prediction {
        None => Ok(loss.to_vec()),
        Some(pred) => {
            ensure_len("prediction", loss.len(), pred.len())?;
            ensure_finite("prediction", pred)?;
            Ok(loss.iter().zip(pred).map(|(l, p)| 2.0 * l - p).collect())
        }
    }
}

/// Multiplicative weights: `σ'(a) ∝ σ(a) exp(−η ℓ̃(a))`, evaluated in log
/// space. `ℓ̃` is the loss, or `2ℓ − prediction` when optimistic.
pub fn mwu_step(
    current: &SimplexVector,
    loss: &[f64],
    learning_rate: f64,
    prediction: Option<&[f64]>,
) -> Result<SimplexVector> {
    ensure_len("loss vector", current.len(), loss.len())?;
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    if !current.is_interior() {
        return Err(Error::Boundary(
            "MWU requires a strictly positive strategy".into(),
        ));
    }
    let eff = effective_loss(loss, prediction)?;
    let logits: Vec<f64> = current
        .as_slice()
        .iter()
        .zip(&eff)
        .map(|(p, l)| p.ln() - learning_rate * l)
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let next = SimplexVector::from_weights(weights)?;
    if !next.is_interior() {
        return Err(Error::Boundary(
            "MWU iterate underflowed to the boundary".into(),
        ));
    }
    Ok(next)
}

/// Projected gradient step `Π_Δ(σ − η ℓ̃)`.
pub fn gda_step(
    current: &SimplexVector,
    loss: &[f64],
    learning_rate: f64,
    prediction: Option<&[f64]>,
) -> Result<SimplexVector> {
    ensure_len("loss vector", current.len(), loss.len())?;
    if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be nonnegative, got {learning_rate}"
        )));
    }
    if learning_rate == 0.0 {
        return Ok(current.clone());
    }
    let eff = effective_loss(loss, prediction)?;
    let point: Vec<f64> = current
        .as_slice()
        .iter()
        .zip(&eff)
        .map(|(p, l)| p - learning_rate * l)
        .collect();
    simplex_project(&point)
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn simplex_project(v: &[f64]) -> Result<SimplexVector> {
    if v.is_empty() {
        return Err(Error::Empty("projection input"));
    }
    ensure_finite("projection input", v)?;
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    SimplexVector::from_weights(v.iter().map(|x| (x - tau).max(0.0)).collect())
}

/// Online-mirror-descent form of RM+ over the nonnegative orthant:
/// `θ' = max(θ + η m, 0)` with `m = q − ⟨θ/‖θ‖₁, q⟩`.
pub fn omd_rm_plus_step(theta: &[f64], values: &[f64], learning_rate: f64) -> Result<Vec<f64>> {
    ensure_len("value vector", theta.len(), values.len())?;
    ensure_finite("value vector", values)?;
    ensure_finite("theta", theta)?;
    if theta.iter().any(|t| *t < 0.0) {
        return Err(Error::InvalidConfig("theta must be nonnegative".into()));
    }
    let norm: f64 = theta.iter().sum();
    if norm <= 0.0 {
        return Err(Error::Empty("theta is all zero"));
    }
    let baseline: f64 = theta.iter().zip(values).map(|(t, q)| t / norm * q).sum();
    Ok(theta
        .iter()
        .zip(values)
        .map(|(t, q)| (t + learning_rate * (q - baseline)).max(0.0))
        .collect())
}
