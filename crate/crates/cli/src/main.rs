use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sadqas_cli::report::{cmd_report, to_text};
use sadqas_cli::run::{cmd_evaluate, cmd_fidelity, cmd_search};
use sadqas_cli::{CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "sadqas", version, about = "Quantum architecture search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel trials (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run this single seed instead of the configured trials.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg = cfg.with_seed(seed);
        }
        if let Some(out) = &self.out {
            cfg = cfg.with_out_dir(out.clone());
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Search, fine-tune and summarize every trial.
    Search(RunArgs),
    /// Fine-tune a fixed circuit from random starts.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        circuit: PathBuf,
    },
    /// Fidelity of searched circuits under terminal noise.
    Fidelity(RunArgs),
    /// Tabulate finished runs.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Search(args) => {
            let cfg = args.load()?;
            let s = cmd_search(&cfg)?;
            for t in &s.trials {
                println!(
                    "seed {:>4}  e = {:.6}  asp = {}  k* = {:?}",
                    t.seed,
                    t.final_energy,
                    t.asp.map_or("-".into(), |a| a.to_string()),
                    t.labels
                );
            }
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Evaluate { run, circuit } => {
            let cfg = run.load()?;
            let e = cmd_evaluate(&circuit, &cfg)?;
            println!(
                "final e = {:.6} ± {:.6} over {} trials",
                e.final_mean,
                e.final_std,
                e.seeds.len()
            );
            for n in &e.noisy {
                println!("{:>24}  {:.6} ± {:.6}", n.label, n.mean, n.std);
            }
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Fidelity(args) => {
            let cfg = args.load()?;
            let r = cmd_fidelity(&cfg)?;
            for env in &r.means {
                let cells: Vec<String> = env
                    .columns
                    .iter()
                    .zip(&env.means)
                    .map(|(c, m)| format!("{c}={m:.4}"))
                    .collect();
                println!("environment {}: {}", env.environment, cells.join("  "));
            }
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Report { dirs, out } => {
            let rows = cmd_report(&dirs, &out)?;
            print!("{}", to_text(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))
            .and_then(|pool| pool.install(|| execute(cli.command))),
        None => execute(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
