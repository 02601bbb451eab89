//! Participant selection: uniform sampling or active-learning sampling by
//! training value `v_k = √n_k · l̄_k`, turned into probabilities with a softmax.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which selected clients refresh their training value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSource {
    /// Every selected client, including those that dropped out.
    #[default]
    Selected,
    /// Only clients that uploaded a model.
    Uploaders,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    /// Scale `β` applied to values before the softmax.
    pub beta: f64,
    /// Active-learning selection is used for rounds `1..=al_rounds`.
    pub al_rounds: usize,
    pub value_source: ValueSource,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            beta: 0.01,
            al_rounds: 0,
            value_source: ValueSource::Selected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueReport {
    pub client: usize,
    pub samples: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionState {
    values: Vec<f64>,
    params: SelectionParams,
    per_round: usize,
}

impl SelectionState {
    /// All values start at 0, so the first active-learning round is uniform.
    pub fn new(num_clients: usize, per_round: usize, params: SelectionParams) -> Result<Self> {
        if num_clients == 0 {
            return Err(Error::InvalidParameter("need at least one client".into()));
        }
        if per_round == 0 || per_round > num_clients {
            return Err(Error::InvalidParameter(format!(
                "clients per round must be in 1..={num_clients}, got {per_round}"
            )));
        }
        if !(params.beta >= 0.0 && params.beta.is_finite()) {
            return Err(Error::InvalidParameter(
                "beta must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            values: vec![0.0; num_clients],
            params,
            per_round,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> &SelectionParams {
        &self.params
    }

    pub fn per_round(&self) -> usize {
        self.per_round
    }

    pub fn num_clients(&self) -> usize {
        self.values.len()
    }

    pub fn set_value(&mut self, client: usize, value: f64) -> Result<()> {
        let slot = self
            .values
            .get_mut(client)
            .ok_or(Error::UnknownClient(client))?;
        *slot = value;
        Ok(())
    }

    /// `v_k ← √n_k · l̄_k` for every reporting client; others keep their value.
    pub fn update_values(&mut self, reports: &[ValueReport]) -> Result<()> {
        if let Some(r) = reports.iter().find(|r| r.client >= self.values.len()) {
            return Err(Error::UnknownClient(r.client));
        }
        for r in reports {
            self.values[r.client] = (r.samples as f64).sqrt() * r.mean_loss;
        }
        Ok(())
    }

    /// Softmax of `β · v` over all clients.
    pub fn selection_probabilities(&self) -> Vec<f64> {
        softmax_scaled(&self.values, self.params.beta)
    }

    pub fn uses_active_learning(&self, round: usize) -> bool {
        round <= self.params.al_rounds
    }

    /// Picks `per_round` distinct clients for `round` (1-based), sorted by id.
    pub fn select<R: Rng + ?Sized>(&self, round: usize, rng: &mut R) -> Vec<usize> {
        let n = self.values.len();
        let k = self.per_round;
        let mut chosen = if self.uses_active_learning(round) {
            weighted_without_replacement(&self.selection_probabilities(), k, rng)
        } else {
            rand::seq::index::sample(rng, n, k).into_vec()
        };
        chosen.sort_unstable();
        chosen
    }
}

pub fn softmax_scaled(values: &[f64], beta: f64) -> Vec<f64> {
    let max = values
        .iter()
        .map(|v| beta * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (beta * v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Sequential draws, each from the remaining mass renormalized.
pub fn weighted_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    assert!(
        count <= weights.len(),
        "cannot draw {count} of {}",
        weights.len()
    );
    let mut remaining: Vec<f64> = weights.to_vec();
    let mut taken = vec![false; weights.len()];
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = remaining.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in remaining.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if target < acc {
                    break;
                }
            }
            pick
        } else {
            None
        };
        // Only zero mass left: fall back to a uniform pick among untaken ids.
        let pick = pick.unwrap_or_else(|| {
            let free: Vec<usize> = (0..weights.len()).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        });
        taken[pick] = true;
        remaining[pick] = 0.0;
        chosen.push(pick);
    }
    chosen
}
