use std::path::Path;
use std::time::Instant;

use fedsae_core::datagen::ClientShard;
use fedsae_core::{run_experiment, Algorithm, MetricsRow};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, RunManifest};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_MANIFEST_FILE: &str = "sweep_manifest.json";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.csv";

pub fn metrics_file_name(algorithm: Algorithm) -> String {
    format!("metrics_{algorithm}.csv")
}

/// First round (1-based) whose test accuracy reaches `target`.
pub fn rounds_to_target(rows: &[MetricsRow], target: f64) -> Option<usize> {
    rows.iter()
        .find(|r| r.test_accuracy >= target)
        .map(|r| r.round)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))
}

fn dedup(algorithms: &[Algorithm]) -> Vec<Algorithm> {
    let mut out: Vec<Algorithm> = Vec::new();
    for &a in algorithms {
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

/// Runs every configured algorithm on one dataset and returns their metrics.
pub fn run_algorithms(
    config: &RunConfig,
    shards: &[ClientShard],
) -> Result<Vec<(Algorithm, Vec<MetricsRow>)>, CliError> {
    dedup(&config.algorithms)
        .into_par_iter()
        .map(|a| Ok((a, run_experiment(&config.experiment(a), shards.to_vec())?)))
        .collect()
}

/// Runs all algorithms, writes one metrics CSV each plus a manifest into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    config.validate()?;
    let shards = config.load_shards()?;
    let results = run_algorithms(config, &shards)?;

    create_dir(out_dir)?;
    let mut manifest = RunManifest::new(config);
    for (algorithm, rows) in &results {
        let name = metrics_file_name(*algorithm);
        output::write_file(&out_dir.join(&name), &output::metrics_csv(rows)?)?;
        manifest.metrics_files.insert(algorithm.to_string(), name);
    }
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub al_rounds: usize,
    pub rounds_to_target: Option<usize>,
    pub final_accuracy: f64,
}

/// Runs `config.sweep_algorithm` once per active-learning horizon and records how
/// many rounds each needs to reach `config.target_accuracy`.
pub fn sweep_al(
    config: &RunConfig,
    al_rounds: &[usize],
    out_dir: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    let started = Instant::now();
    config.validate()?;
    let target = config
        .target_accuracy
        .ok_or_else(|| CliError::Config("sweep requires target_accuracy".into()))?;
    if al_rounds.is_empty() {
        return Err(CliError::Config(
            "sweep needs at least one AL round count".into(),
        ));
    }
    let shards = config.load_shards()?;
    let algorithm = config.sweep_algorithm;

    let runs: Vec<(usize, Vec<MetricsRow>)> = al_rounds
        .par_iter()
        .map(|&n| {
            let mut cfg = config.clone();
            cfg.al_rounds = n;
            Ok((
                n,
                run_experiment(&cfg.experiment(algorithm), shards.clone())?,
            ))
        })
        .collect::<Result<_, CliError>>()?;

    create_dir(out_dir)?;
    let mut manifest = RunManifest::new(config);
    manifest.config.sweep_al_rounds = al_rounds.to_vec();
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary.write_record(["al_rounds", "rounds_to_target", "final_accuracy"])?;
    let mut rows = Vec::with_capacity(runs.len());
    for (n, metrics) in &runs {
        let name = format!("metrics_{algorithm}_al{n}.csv");
        output::write_file(&out_dir.join(&name), &output::metrics_csv(metrics)?)?;
        manifest.metrics_files.insert(format!("al{n}"), name);

        let row = SweepRow {
            al_rounds: *n,
            rounds_to_target: rounds_to_target(metrics, target),
            final_accuracy: metrics.last().map_or(0.0, |r| r.test_accuracy),
        };
        summary.write_record([
            row.al_rounds.to_string(),
            row.rounds_to_target
                .map(|r| r.to_string())
                .unwrap_or_default(),
            row.final_accuracy.to_string(),
        ])?;
        rows.push(row);
    }
    let summary = summary
        .into_inner()
        .map_err(|e| CliError::io("flushing sweep summary", e.into_error()))?;
    output::write_file(&out_dir.join(SWEEP_SUMMARY_FILE), &summary)?;
    manifest.sweep_summary = Some(SWEEP_SUMMARY_FILE.to_string());
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&out_dir.join(SWEEP_MANIFEST_FILE))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(round: usize, acc: f64) -> MetricsRow {
        MetricsRow {
            round,
            test_accuracy: acc,
            train_loss: 1.0,
            dropout_rate: 0.0,
            mean_assigned_workload: 0.0,
            mean_completed_workload: 0.0,
        }
    }

    #[test]
    fn first_round_reaching_target() {
        let rows = [row(1, 0.2), row(2, 0.5), row(3, 0.4), row(4, 0.7)];
        assert_eq!(rounds_to_target(&rows, 0.5), Some(2));
        assert_eq!(rounds_to_target(&rows, 0.1), Some(1));
        assert_eq!(rounds_to_target(&rows, 0.9), None);
    }
}
