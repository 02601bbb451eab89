//! Affordable-workload prediction.
//!
//! Every client carries a task pair `(L, H)` measured in local epochs. In a round
//! the client trains `L` epochs (the easy task) and keeps going towards `H` (the
//! difficult task). Three things can happen, decided by the epochs `Ẽ` the client
//! could actually afford:
//!
//! | capacity        | completed | uploads      |
//! |-----------------|-----------|--------------|
//! | `Ẽ > H`         | `H`       | yes          |
//! | `L ≤ Ẽ ≤ H`     | `L`       | yes          |
//! | `Ẽ < L`         | 0         | no (dropout) |
//!
//! After the round the pair is moved by one of two AIMD-style controllers:
//!
//! * **Ira** grows each bound by `U / bound` (an increment inversely
//!   proportional to the bound itself) and halves both bounds on dropout.
//! * **Fassa** keeps an exponential moving average `θ` of past capacities. Bounds
//!   below `θ` are in the fast *start* stage and grow by `γ1`; bounds at or above
//!   `θ` are in the cautious *arise* stage and grow by `γ2 < γ1`. Dropout halves.
//!
//! Both controllers return the pair sorted so that `L ≤ H` holds after every update.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskPair {
    pub low: f64,
    pub high: f64,
    /// Fassa capacity threshold; carried through unchanged by Ira.
    pub theta: f64,
}

impl TaskPair {
    pub fn new(low: f64, high: f64, theta: f64) -> Self {
        Self { low, high, theta }
    }

    fn sorted(low: f64, high: f64, theta: f64) -> Self {
        Self {
            low: low.min(high),
            high: low.max(high),
            theta,
        }
    }

    fn halved(&self) -> Self {
        Self {
            low: self.low / 2.0,
            high: self.high / 2.0,
            theta: self.theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    /// Capacity exceeded `H`; the client trained all of `H`.
    Full,
    /// Capacity fell in `[L, H]`; the model after `L` epochs was uploaded.
    Partial,
    /// Capacity fell below `L`; nothing was uploaded.
    Dropped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub completed_epochs: f64,
    pub uploaded: bool,
    pub affordable: f64,
    pub completion: Completion,
}

/// How Fassa treats a partial completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FassaPartialRule {
    /// `r = γ2` if `θ ≥ L` else `γ1`; then `(min(L + r, H/2), max(L + r, H/2))`,
    /// the same shape as Ira's partial branch.
    #[default]
    MirrorIra,
    /// Alternative reading of the partial branch: when `θ ≥ L` the low bound
    /// is `min(L + γ2, L/2)`; otherwise as [`MirrorIra`](Self::MirrorIra) with `γ1`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorParams {
    /// Ira inverse-ratio constant `U`.
    pub inverse_ratio: f64,
    /// Fassa start-stage increment `γ1`.
    pub gamma_fast: f64,
    /// Fassa arise-stage increment `γ2`.
    pub gamma_slow: f64,
    /// EMA smoothness `α` of the Fassa threshold.
    pub smoothness: f64,
    pub initial_low: f64,
    pub initial_high: f64,
    pub partial_rule: FassaPartialRule,
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self {
            inverse_ratio: 10.0,
            gamma_fast: 3.0,
            gamma_slow: 1.0,
            smoothness: 0.95,
            initial_low: 1.0,
            initial_high: 2.0,
            partial_rule: FassaPartialRule::MirrorIra,
        }
    }
}

impl PredictorParams {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidParameter(m.to_string()));
        if !(self.inverse_ratio > 0.0 && self.inverse_ratio.is_finite()) {
            return bad("inverse_ratio must be positive");
        }
        if !(self.gamma_slow > 0.0
            && self.gamma_fast > self.gamma_slow
            && self.gamma_fast.is_finite())
        {
            return bad("increments must satisfy gamma_fast > gamma_slow > 0");
        }
        if !(self.smoothness > 0.0 && self.smoothness < 1.0) {
            return bad("smoothness must lie in (0, 1)");
        }
        if !(self.initial_low > 0.0
            && self.initial_low < self.initial_high
            && self.initial_high.is_finite())
        {
            return bad("initial pair must satisfy 0 < initial_low < initial_high");
        }
        Ok(())
    }

    /// Starting pair of every client. `θ` starts at the easy bound.
    pub fn initial_pair(&self) -> TaskPair {
        TaskPair::new(self.initial_low, self.initial_high, self.initial_low)
    }
}

/// Plays one round of the task pair against the client's actual capacity.
pub fn execute_assignment(pair: &TaskPair, affordable: f64) -> RoundOutcome {
    let (completed_epochs, completion) = if affordable > pair.high {
        (pair.high, Completion::Full)
    } else if affordable >= pair.low {
        (pair.low, Completion::Partial)
    } else {
        (0.0, Completion::Dropped)
    };
    RoundOutcome {
        completed_epochs,
        uploaded: completion != Completion::Dropped,
        affordable,
        completion,
    }
}

/// Ira pair update.
pub fn ira_update(pair: &TaskPair, outcome: &RoundOutcome, params: &PredictorParams) -> TaskPair {
    let u = params.inverse_ratio;
    let (low, high) = (pair.low, pair.high);
    match outcome.completion {
        Completion::Full => TaskPair::sorted(low + u / low, high + u / high, pair.theta),
        Completion::Partial => {
            let grown = low + u / low;
            let half = high / 2.0;
            TaskPair::sorted(grown.min(half), grown.max(half), pair.theta)
        }
        Completion::Dropped => pair.halved(),
    }
}

/// One EMA step of the Fassa threshold: `α θ + (1 − α) Ẽ`.
pub fn fassa_update_theta(theta: f64, affordable: f64, smoothness: f64) -> f64 {
    smoothness * theta + (1.0 - smoothness) * affordable
}

/// Fassa pair update. `pair.theta` must already include this round's capacity.
pub fn fassa_update(pair: &TaskPair, outcome: &RoundOutcome, params: &PredictorParams) -> TaskPair {
    let (low, high, theta) = (pair.low, pair.high, pair.theta);
    let (fast, slow) = (params.gamma_fast, params.gamma_slow);
    match outcome.completion {
        Completion::Full => {
            let (dl, dh) = if theta <= low {
                (slow, slow)
            } else if theta <= high {
                (fast, slow)
            } else {
                (fast, fast)
            };
            TaskPair::sorted(low + dl, high + dh, theta)
        }
        Completion::Partial => {
            let half = high / 2.0;
            match params.partial_rule {
                FassaPartialRule::MirrorIra => {
                    let grown = low + if theta >= low { slow } else { fast };
                    TaskPair::sorted(grown.min(half), grown.max(half), theta)
                }
                FassaPartialRule::Literal => {
                    if theta >= low {
                        let grown = low + slow;
                        TaskPair::sorted(grown.min(low / 2.0), grown.max(half), theta)
                    } else {
                        let grown = low + fast;
                        TaskPair::sorted(grown.min(half), grown.max(half), theta)
                    }
                }
            }
        }
        Completion::Dropped => pair.halved(),
    }
}
