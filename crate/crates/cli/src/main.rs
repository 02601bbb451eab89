use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedsae_cli::{run, sweep_al, CliError, Overrides, RunConfig};
use fedsae_core::Algorithm;

/// Federated learning simulator: FedAvg versus self-adaptive workload prediction.
#[derive(Debug, Parser)]
#[command(name = "fedsae", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run each configured algorithm and write one metrics CSV per algorithm.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Use active-learning selection for the first N rounds.
        #[arg(long, value_name = "N")]
        al_rounds: Option<usize>,
    },
    /// Run the sweep algorithm once per AL horizon and summarize rounds-to-target.
    SweepAl {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated AL horizons, e.g. 0,20,50.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        al_rounds: Option<Vec<usize>>,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML config file, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated algorithms: fedavg, fedsae_ira, fedsae_fassa.
    #[arg(long, value_delimiter = ',')]
    algorithm: Option<Vec<String>>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    target_accuracy: Option<f64>,
}

impl CommonArgs {
    fn load(&self, al_rounds: Option<usize>) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let algorithms = self
            .algorithm
            .as_ref()
            .map(|names| {
                names
                    .iter()
                    .map(|n| n.parse::<Algorithm>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        config.apply(&Overrides {
            algorithms,
            rounds: self.rounds,
            seed: self.seed,
            al_rounds,
            target_accuracy: self.target_accuracy,
        });
        Ok(config)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { common, al_rounds } => {
            let config = common.load(al_rounds)?;
            let manifest = run(&config, &common.out_dir)?;
            for (algorithm, file) in &manifest.metrics_files {
                println!("{algorithm}: {}", common.out_dir.join(file).display());
            }
        }
        Command::SweepAl { common, al_rounds } => {
            let mut config = common.load(None)?;
            if let Some(list) = al_rounds {
                config.sweep_al_rounds = list;
            }
            let list = config.sweep_al_rounds.clone();
            let rows = sweep_al(&config, &list, &common.out_dir)?;
            println!("al_rounds  rounds_to_target  final_accuracy");
            for r in rows {
                let reached = r
                    .rounds_to_target
                    .map_or("-".to_string(), |n| n.to_string());
                println!(
                    "{:>9}  {:>16}  {:>14.4}",
                    r.al_rounds, reached, r.final_accuracy
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
