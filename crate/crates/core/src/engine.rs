//! The federated round loop shared by FedAvg and both FedSAE variants.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::ClientShard;
use crate::error::{Error, Result};
use crate::hetero::{self, CapacityProfile};
use crate::model::{self, ModelWeights, TrainingConfig};
use crate::predictor::{self, Completion, PredictorParams, RoundOutcome, TaskPair};
use crate::rng::{self, Purpose};
use crate::selector::{SelectionParams, SelectionState, ValueReport, ValueSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "fedavg")]
    FedAvg,
    #[serde(rename = "fedsae_ira")]
    FedSaeIra,
    #[serde(rename = "fedsae_fassa")]
    FedSaeFassa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::FedAvg,
        Algorithm::FedSaeIra,
        Algorithm::FedSaeFassa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::FedAvg => "fedavg",
            Algorithm::FedSaeIra => "fedsae_ira",
            Algorithm::FedSaeFassa => "fedsae_fassa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "fedavg" => Ok(Algorithm::FedAvg),
            "fedsae_ira" | "ira" => Ok(Algorithm::FedSaeIra),
            "fedsae_fassa" | "fassa" => Ok(Algorithm::FedSaeFassa),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub rounds: usize,
    pub clients_per_round: usize,
    /// Epochs every FedAvg participant is asked to run.
    pub fixed_epochs: f64,
    pub training: TrainingConfig,
    pub predictor: PredictorParams,
    pub selection: SelectionParams,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::FedSaeIra,
            rounds: 200,
            clients_per_round: 10,
            fixed_epochs: 15.0,
            training: TrainingConfig::default(),
            predictor: PredictorParams::default(),
            selection: SelectionParams::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if self.algorithm == Algorithm::FedAvg
            && !(self.fixed_epochs > 0.0 && self.fixed_epochs.is_finite())
        {
            return Err(Error::InvalidParameter(
                "fixed_epochs must be positive for fedavg".into(),
            ));
        }
        self.training.validate()?;
        self.predictor.validate()
    }
}

/// Per-round summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub round: usize,
    pub test_accuracy: f64,
    pub train_loss: f64,
    pub dropout_rate: f64,
    pub mean_assigned_workload: f64,
    pub mean_completed_workload: f64,
}

/// What one selected client did in one round.
#[derive(Debug, Clone)]
pub struct RoundReport {
    pub client: usize,
    pub train_samples: usize,
    /// Epochs requested by the server (`H` for FedSAE, `E` for FedAvg).
    pub assigned: f64,
    pub outcome: RoundOutcome,
    /// Uploaded model, if any.
    pub weights: Option<ModelWeights>,
    /// Training loss of the broadcast model on the client's data.
    pub mean_loss: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ClientState {
    pub shard: ClientShard,
    pub profile: CapacityProfile,
    pub pair: TaskPair,
}

#[derive(Debug, Clone)]
pub struct RoundResult {
    pub metrics: MetricsRow,
    pub reports: Vec<RoundReport>,
}

/// Owns the global model and all per-client state of a run.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: ExperimentConfig,
    clients: Vec<ClientState>,
    selection: SelectionState,
    global: ModelWeights,
    completed_rounds: usize,
}

impl Simulator {
    pub fn new(config: ExperimentConfig, shards: Vec<ClientShard>) -> Result<Self> {
        config.validate()?;
        if shards.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let first = shards
            .iter()
            .flat_map(|s| s.train.first())
            .next()
            .ok_or(Error::EmptyDataset)?;
        let dim = first.features.len();
        let classes = shards.iter().flat_map(|s| s.labels()).max().unwrap_or(0) + 1;
        if let Some(s) = shards.iter().find(|s| s.train.is_empty()) {
            return Err(Error::InvalidParameter(format!(
                "client {} has no training samples",
                s.client_id
            )));
        }

        let selection =
            SelectionState::new(shards.len(), config.clients_per_round, config.selection)?;
        let pair = config.predictor.initial_pair();
        let clients = shards
            .into_iter()
            .enumerate()
            .map(|(k, shard)| {
                let mut rng = rng::stream(config.seed, Purpose::Profile, k as u64, 0);
                ClientState {
                    shard,
                    profile: hetero::sample_profile(&mut rng),
                    pair,
                }
            })
            .collect();

        Ok(Self {
            global: ModelWeights::zeros(classes.max(2), dim),
            config,
            clients,
            selection,
            completed_rounds: 0,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn global(&self) -> &ModelWeights {
        &self.global
    }

    pub fn set_global(&mut self, weights: ModelWeights) -> Result<()> {
        if !weights.same_shape(&self.global) {
            return Err(Error::DimensionMismatch {
                expected: self.global.len(),
                found: weights.len(),
            });
        }
        self.global = weights;
        Ok(())
    }

    pub fn clients(&self) -> &[ClientState] {
        &self.clients
    }

    pub fn set_profile(&mut self, client: usize, profile: CapacityProfile) -> Result<()> {
        self.clients
            .get_mut(client)
            .ok_or(Error::UnknownClient(client))?
            .profile = profile;
        Ok(())
    }

    pub fn selection(&self) -> &SelectionState {
        &self.selection
    }

    pub fn shards(&self) -> impl Iterator<Item = &ClientShard> {
        self.clients.iter().map(|c| &c.shard)
    }

    /// 1-based index of the round [`run_round`](Self::run_round) will play next.
    pub fn next_round(&self) -> usize {
        self.completed_rounds + 1
    }

    fn play_client(&self, client: usize, round: usize) -> Result<RoundReport> {
        let seed = self.config.seed;
        let state = &self.clients[client];
        let mut cap_rng = rng::stream(seed, Purpose::Capacity, client as u64, round as u64);
        let affordable = hetero::draw_capacity(&state.profile, &mut cap_rng);

        let (assigned, outcome) = match self.config.algorithm {
            Algorithm::FedAvg => {
                let e = self.config.fixed_epochs;
                let outcome = if affordable >= e {
                    RoundOutcome {
                        completed_epochs: e,
                        uploaded: true,
                        affordable,
                        completion: Completion::Full,
                    }
                } else {
                    RoundOutcome {
                        completed_epochs: 0.0,
                        uploaded: false,
                        affordable,
                        completion: Completion::Dropped,
                    }
                };
                (e, outcome)
            }
            Algorithm::FedSaeIra | Algorithm::FedSaeFassa => (
                state.pair.high,
                predictor::execute_assignment(&state.pair, affordable),
            ),
        };

        let shard = &state.shard;
        let (weights, mean_loss, iterations) = if outcome.uploaded {
            let mut train_rng = rng::stream(seed, Purpose::Training, client as u64, round as u64);
            let out = model::local_train(
                &self.global,
                shard,
                outcome.completed_epochs,
                &self.config.training,
                &mut train_rng,
            )?;
            (Some(out.weights), out.pre_training_loss, out.iterations)
        } else {
            let (loss, _) = model::loss_and_accuracy(&self.global, &shard.train)?;
            (None, loss, 0)
        };

        Ok(RoundReport {
            client,
            train_samples: shard.num_train(),
            assigned,
            outcome,
            weights,
            mean_loss,
            iterations,
        })
    }

    /// Plays one communication round: select, train, aggregate, update predictors
    /// and values, evaluate.
    pub fn run_round(&mut self) -> Result<RoundResult> {
        let round = self.next_round();
        let mut select_rng = rng::stream(self.config.seed, Purpose::Selection, round as u64, 0);
        let selected = self.selection.select(round, &mut select_rng);

        let reports: Vec<RoundReport> = selected
            .par_iter()
            .map(|&k| self.play_client(k, round))
            .collect::<Result<_>>()?;

        let uploads: Vec<(usize, &ModelWeights)> = reports
            .iter()
            .filter_map(|r| r.weights.as_ref().map(|w| (r.train_samples, w)))
            .collect();
        if let Some(aggregate) = aggregate(&uploads) {
            assert!(
                aggregate.is_finite(),
                "round {round}: aggregated model has non-finite parameters"
            );
            self.global = aggregate;
        }

        self.update_predictors(&reports);

        let value_reports: Vec<ValueReport> = reports
            .iter()
            .filter(|r| match self.selection.params().value_source {
                ValueSource::Selected => true,
                ValueSource::Uploaders => r.outcome.uploaded,
            })
            .map(|r| ValueReport {
                client: r.client,
                samples: r.train_samples,
                mean_loss: r.mean_loss,
            })
            .collect();
        self.selection.update_values(&value_reports)?;

        let (test_accuracy, _) = evaluate_global(&self.global, self.shards())?;
        let k = reports.len() as f64;
        let participant_samples: usize = reports.iter().map(|r| r.train_samples).sum();
        let train_loss = reports
            .iter()
            .map(|r| r.train_samples as f64 * r.mean_loss)
            .sum::<f64>()
            / participant_samples as f64;
        let metrics = MetricsRow {
            round,
            test_accuracy,
            train_loss,
            dropout_rate: reports.iter().filter(|r| !r.outcome.uploaded).count() as f64 / k,
            mean_assigned_workload: reports.iter().map(|r| r.assigned).sum::<f64>() / k,
            mean_completed_workload: reports
                .iter()
                .map(|r| r.outcome.completed_epochs)
                .sum::<f64>()
                / k,
        };
        self.completed_rounds = round;
        Ok(RoundResult { metrics, reports })
    }

    fn update_predictors(&mut self, reports: &[RoundReport]) {
        let params = self.config.predictor;
        for r in reports {
            let state = &mut self.clients[r.client];
            let next = match self.config.algorithm {
                Algorithm::FedAvg => continue,
                Algorithm::FedSaeIra => predictor::ira_update(&state.pair, &r.outcome, &params),
                Algorithm::FedSaeFassa => {
                    let mut pair = state.pair;
                    pair.theta = predictor::fassa_update_theta(
                        pair.theta,
                        r.outcome.affordable,
                        params.smoothness,
                    );
                    predictor::fassa_update(&pair, &r.outcome, &params)
                }
            };
            assert!(
                next.low > 0.0 && next.low <= next.high,
                "client {}: task pair invariant broken: {:?} -> {:?}",
                r.client,
                state.pair,
                next
            );
            state.pair = next;
        }
    }

    pub fn run(mut self) -> Result<Vec<MetricsRow>> {
        let mut rows = Vec::with_capacity(self.config.rounds);
        while self.completed_rounds < self.config.rounds {
            rows.push(self.run_round()?.metrics);
        }
        Ok(rows)
    }
}

/// Runs a whole experiment and returns one metrics row per round.
pub fn run_experiment(
    config: &ExperimentConfig,
    shards: Vec<ClientShard>,
) -> Result<Vec<MetricsRow>> {
    Simulator::new(config.clone(), shards)?.run()
}

/// Weights `n_k / Σ n` of the uploaders.
pub fn aggregation_weights(samples: &[usize]) -> Vec<f64> {
    let total: usize = samples.iter().sum();
    samples.iter().map(|&n| n as f64 / total as f64).collect()
}

/// Sample-weighted average of the uploaded models, or `None` without uploads.
///
/// Computed as a running mean, so identical inputs come back bit-for-bit.
pub fn aggregate(uploads: &[(usize, &ModelWeights)]) -> Option<ModelWeights> {
    let ((n0, w0), rest) = uploads.split_first()?;
    let mut mean = (*w0).clone();
    let mut seen = *n0 as f64;
    for &(n, w) in rest {
        if n == 0 {
            continue;
        }
        seen += n as f64;
        let step = n as f64 / seen;
        for (m, x) in mean.params_mut().zip(w.params()) {
            *m += step * (x - *m);
        }
    }
    Some(mean)
}

/// Sample-weighted top-1 accuracy and mean loss over every client's test set.
pub fn evaluate_global<'a>(
    w: &ModelWeights,
    shards: impl IntoIterator<Item = &'a ClientShard>,
) -> Result<(f64, f64)> {
    let mut total = 0usize;
    let (mut acc, mut loss) = (0.0, 0.0);
    for shard in shards {
        if shard.test.is_empty() {
            continue;
        }
        let (l, a) = model::loss_and_accuracy(w, &shard.test)?;
        let n = shard.test.len();
        total += n;
        acc += a * n as f64;
        loss += l * n as f64;
    }
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok((acc / total as f64, loss / total as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::Sample;

    fn toy_shards(n_clients: usize) -> Vec<ClientShard> {
        (0..n_clients)
            .map(|k| {
                let make = |i: usize| {
                    let label = (i + k) % 2;
                    let sign = if label == 0 { -1.0 } else { 1.0 };
                    Sample::new(vec![sign * (1.0 + (i % 3) as f64 * 0.1), 0.5], label)
                };
                ClientShard {
                    client_id: k,
                    train: (0..12).map(make).collect(),
                    test: (12..16).map(make).collect(),
                }
            })
            .collect()
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("fedprox".parse::<Algorithm>().is_err());
    }

    #[test]
    fn weighted_pair_aggregate() {
        let w1 = ModelWeights::from_parts(2, 1, vec![1.0, -2.0], vec![0.5, 4.0]).unwrap();
        let w2 = ModelWeights::from_parts(2, 1, vec![3.0, 6.0], vec![-1.5, 0.0]).unwrap();
        let agg = aggregate(&[(1, &w1), (3, &w2)]).unwrap();
        for ((a, x), y) in agg.params().zip(w1.params()).zip(w2.params()) {
            assert!((a - (0.25 * x + 0.75 * y)).abs() < 1e-12);
        }
        assert!(aggregate(&[]).is_none());
    }

    #[test]
    fn identical_uploads_aggregate_exactly() {
        let w =
            ModelWeights::from_parts(2, 2, vec![0.1, 0.7, -0.3, 1e-3], vec![0.2, -0.9]).unwrap();
        let agg = aggregate(&[(3, &w), (7, &w), (11, &w)]).unwrap();
        assert_eq!(agg, w);
    }

    #[test]
    fn equal_shards_average_accuracy() {
        let shards = toy_shards(2);
        let w = ModelWeights::from_parts(2, 2, vec![-1.0, 0.0, 1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let (a0, _) = evaluate_global(&w, &shards[..1]).unwrap();
        let (a1, _) = evaluate_global(&w, &shards[1..]).unwrap();
        let (both, _) = evaluate_global(&w, &shards).unwrap();
        assert!((both - (a0 + a1) / 2.0).abs() < 1e-15);
        assert_eq!(both, 1.0);
    }

    #[test]
    fn zero_model_predicts_first_class() {
        let shards = toy_shards(3);
        let w = ModelWeights::zeros(2, 2);
        let (acc, loss) = evaluate_global(&w, &shards).unwrap();
        let labels: Vec<usize> = shards
            .iter()
            .flat_map(|s| s.test.iter().map(|x| x.label))
            .collect();
        let zeros = labels.iter().filter(|&&l| l == 0).count() as f64 / labels.len() as f64;
        assert_eq!(acc, zeros);
        assert!((loss - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fedavg_all_stragglers_keeps_model() {
        let config = ExperimentConfig {
            algorithm: Algorithm::FedAvg,
            rounds: 3,
            clients_per_round: 2,
            ..ExperimentConfig::default()
        };
        let mut sim = Simulator::new(config, toy_shards(4)).unwrap();
        for k in 0..4 {
            sim.set_profile(k, CapacityProfile::new(3.0, 0.0)).unwrap();
        }
        let start =
            ModelWeights::from_parts(2, 2, vec![0.3, -0.1, 0.2, 0.4], vec![0.05, -0.05]).unwrap();
        sim.set_global(start.clone()).unwrap();
        let result = sim.run_round().unwrap();
        assert_eq!(result.metrics.dropout_rate, 1.0);
        assert_eq!(sim.global(), &start);
        assert_eq!(result.metrics.mean_completed_workload, 0.0);
    }

    #[test]
    fn forced_success_round() {
        let config = ExperimentConfig {
            algorithm: Algorithm::FedSaeIra,
            rounds: 1,
            clients_per_round: 4,
            ..ExperimentConfig::default()
        };
        let mut sim = Simulator::new(config, toy_shards(4)).unwrap();
        for k in 0..4 {
            sim.set_profile(k, CapacityProfile::new(100.0, 0.0))
                .unwrap();
        }
        let result = sim.run_round().unwrap();
        assert_eq!(result.metrics.dropout_rate, 0.0);
        assert_eq!(result.reports.len(), 4);
        for r in &result.reports {
            assert_eq!(r.assigned, 2.0);
            assert_eq!(r.outcome.completed_epochs, 2.0);
            assert_eq!(r.iterations, model::iteration_count(2.0, 12, 10));
        }
        // (1, 2) -> (11, 7) sorted
        assert!(sim
            .clients()
            .iter()
            .all(|c| (c.pair.low, c.pair.high) == (7.0, 11.0)));
        assert!(sim.global() != &ModelWeights::zeros(2, 2));
    }

    #[test]
    fn rejects_invalid_config() {
        let config = ExperimentConfig {
            rounds: 0,
            ..ExperimentConfig::default()
        };
        assert!(Simulator::new(config, toy_shards(12)).is_err());
        let config = ExperimentConfig {
            clients_per_round: 5,
            ..ExperimentConfig::default()
        };
        assert!(Simulator::new(config, toy_shards(4)).is_err());
    }
}
