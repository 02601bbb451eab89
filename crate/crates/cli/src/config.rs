//! Run configuration: a flat TOML file whose keys all default to the reference
//! hyperparameters, plus command-line overrides.

use std::path::{Path, PathBuf};

use fedsae_core::datagen::{self, ClientShard, PartitionOptions, SyntheticSpec};
use fedsae_core::{
    Algorithm, ExperimentConfig, FassaPartialRule, PredictorParams, SelectionParams,
    TrainingConfig, ValueSource,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    #[default]
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithms: Vec<Algorithm>,
    pub rounds: usize,
    pub clients_per_round: usize,
    pub fixed_epochs: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Seed of the dataset; follows `seed` when unset.
    pub data_seed: Option<u64>,

    pub inverse_ratio: f64,
    pub smoothness: f64,
    pub gamma_fast: f64,
    pub gamma_slow: f64,
    pub initial_low: f64,
    pub initial_high: f64,
    pub fassa_partial_rule: FassaPartialRule,

    pub al_beta: f64,
    pub al_rounds: usize,
    pub value_source: ValueSource,
    pub target_accuracy: Option<f64>,
    pub sweep_al_rounds: Vec<usize>,
    pub sweep_algorithm: Algorithm,

    pub dataset: DatasetKind,
    pub num_clients: usize,
    pub power_law_exponent: f64,
    pub synthetic_alpha: f64,
    pub synthetic_beta: f64,
    pub dim: usize,
    pub num_classes: usize,
    pub total_samples: usize,
    pub csv_path: Option<PathBuf>,
    pub label_column: String,
    pub classes_per_client: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let predictor = PredictorParams::default();
        let training = TrainingConfig::default();
        let selection = SelectionParams::default();
        let synthetic = SyntheticSpec::default();
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            rounds: 200,
            clients_per_round: 10,
            fixed_epochs: 15.0,
            learning_rate: training.learning_rate,
            batch_size: training.batch_size,
            seed: 0,
            data_seed: None,
            inverse_ratio: predictor.inverse_ratio,
            smoothness: predictor.smoothness,
            gamma_fast: predictor.gamma_fast,
            gamma_slow: predictor.gamma_slow,
            initial_low: predictor.initial_low,
            initial_high: predictor.initial_high,
            fassa_partial_rule: predictor.partial_rule,
            al_beta: selection.beta,
            al_rounds: selection.al_rounds,
            value_source: selection.value_source,
            target_accuracy: None,
            sweep_al_rounds: vec![0, 20, 50, 100, 150, 200],
            sweep_algorithm: Algorithm::FedSaeIra,
            dataset: DatasetKind::Synthetic,
            num_clients: synthetic.num_clients,
            power_law_exponent: synthetic.power_law_exponent,
            synthetic_alpha: synthetic.alpha,
            synthetic_beta: synthetic.beta,
            dim: synthetic.dim,
            num_classes: synthetic.num_classes,
            total_samples: synthetic.total_samples,
            csv_path: None,
            label_column: "label".into(),
            classes_per_client: None,
        }
    }
}

/// Values given on the command line; `None` keeps the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub algorithms: Option<Vec<Algorithm>>,
    pub rounds: Option<usize>,
    pub seed: Option<u64>,
    pub al_rounds: Option<usize>,
    pub target_accuracy: Option<f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Loads a TOML config, or the config recorded in a run manifest (`.json`).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            let manifest: RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            return Ok(manifest.config);
        }
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = &o.algorithms {
            self.algorithms = a.clone();
        }
        if let Some(r) = o.rounds {
            self.rounds = r;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.al_rounds {
            self.al_rounds = n;
        }
        if let Some(t) = o.target_accuracy {
            self.target_accuracy = Some(t);
        }
    }

    pub fn resolved_data_seed(&self) -> u64 {
        self.data_seed.unwrap_or(self.seed)
    }

    pub fn experiment(&self, algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            rounds: self.rounds,
            clients_per_round: self.clients_per_round,
            fixed_epochs: self.fixed_epochs,
            training: TrainingConfig {
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
            },
            predictor: PredictorParams {
                inverse_ratio: self.inverse_ratio,
                gamma_fast: self.gamma_fast,
                gamma_slow: self.gamma_slow,
                smoothness: self.smoothness,
                initial_low: self.initial_low,
                initial_high: self.initial_high,
                partial_rule: self.fassa_partial_rule,
            },
            selection: SelectionParams {
                beta: self.al_beta,
                al_rounds: self.al_rounds,
                value_source: self.value_source,
            },
            seed: self.seed,
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            alpha: self.synthetic_alpha,
            beta: self.synthetic_beta,
            num_clients: self.num_clients,
            dim: self.dim,
            num_classes: self.num_classes,
            total_samples: self.total_samples,
            power_law_exponent: self.power_law_exponent,
            seed: self.resolved_data_seed(),
        }
    }

    /// Checks everything that can be checked without building the dataset.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.algorithms.is_empty() {
            return Err(CliError::Config(
                "at least one algorithm is required".into(),
            ));
        }
        for &a in &self.algorithms {
            self.experiment(a).validate()?;
        }
        if self.clients_per_round > self.num_clients || self.clients_per_round == 0 {
            return Err(CliError::Config(format!(
                "clients_per_round must be in 1..={}, got {}",
                self.num_clients, self.clients_per_round
            )));
        }
        if let Some(t) = self.target_accuracy {
            if !(0.0..=1.0).contains(&t) {
                return Err(CliError::Config(format!(
                    "target_accuracy must lie in [0, 1], got {t}"
                )));
            }
        }
        match self.dataset {
            DatasetKind::Synthetic => self.synthetic_spec().validate()?,
            DatasetKind::Csv => {
                if self.csv_path.is_none() {
                    return Err(CliError::Config(
                        "dataset = \"csv\" requires csv_path".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn load_shards(&self) -> Result<Vec<ClientShard>, CliError> {
        let shards = match self.dataset {
            DatasetKind::Synthetic => datagen::generate_synthetic(&self.synthetic_spec())?,
            DatasetKind::Csv => {
                let path = self.csv_path.as_ref().ok_or_else(|| {
                    CliError::Config("dataset = \"csv\" requires csv_path".into())
                })?;
                datagen::ingest_csv(
                    path,
                    &self.label_column,
                    self.num_clients,
                    &PartitionOptions {
                        classes_per_client: self.classes_per_client,
                        power_law_exponent: self.power_law_exponent,
                        seed: self.resolved_data_seed(),
                    },
                )?
            }
        };
        Ok(shards)
    }
}
