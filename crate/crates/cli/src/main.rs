use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use macau_cli::{parse_config, run, split_file, validate, CliError};

#[derive(Parser)]
#[command(
    name = "macau",
    version,
    about = "Bayesian matrix and tensor factorization with side information"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `sampler.seed` of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Per-sweep progress logging.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler and write predictions and report.json.
    Run { config: PathBuf },
    /// Load all inputs and check the model structure.
    Validate { config: PathBuf },
    /// Split an observation file into train and test files.
    Split {
        observations: PathBuf,
        fraction: f64,
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Run { config } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = cli.seed {
                cfg.sampler.seed = s;
            }
            let report = run(&cfg)?;
            for (name, s) in &report.summary {
                match s.std {
                    Some(sd) => println!(
                        "{name}: test RMSE {:.5} ± {sd:.5} over {} repetitions",
                        s.mean,
                        s.values.len()
                    ),
                    None => println!("{name}: test RMSE {:.5}", s.mean),
                }
            }
            println!(
                "report written to {}",
                cfg.output_dir().join("report.json").display()
            );
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            let report = validate(&cfg)?;
            if !report.ok() {
                let text: Vec<String> = report.findings.iter().map(|f| f.message()).collect();
                return Err(CliError::Validation(text.join("\n")));
            }
            println!("model is valid");
        }
        Command::Split {
            observations,
            fraction,
            seed,
            out_dir,
        } => {
            let seed = cli.seed.unwrap_or(seed);
            let (train, test) = split_file(&observations, fraction, seed, out_dir.as_deref())?;
            println!("{}\n{}", train.display(), test.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
