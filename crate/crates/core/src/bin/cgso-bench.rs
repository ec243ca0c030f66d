//! Benchmark CLI: `gen` writes instance files, `run` executes a config and
//! writes its reports, `report` re-renders the summary from cell files.
//!
//! Exits with status 0 iff every cell completed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cgso::bench::{self, BenchConfig, Scale};

#[derive(Parser)]
#[command(name = "cgso-bench", version, about = "Run CGSO comparison benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the instance files of a config.
    Gen(Common),
    /// Run every (instance, solver, repetition) cell and write reports.
    Run(Common),
    /// Re-render summary.csv from a previous run's cell files.
    Report(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Paper,
    Desk,
}

#[derive(Args)]
struct Common {
    /// JSON config; overrides --scale.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Global seed mixed into every instance seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: bench-out/<config name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent cells.
    #[arg(long)]
    threads: Option<usize>,
    /// Named config to use when --config is absent.
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
}

impl Common {
    fn config(&self) -> cgso::Result<BenchConfig> {
        let mut config = match &self.config {
            Some(path) => BenchConfig::read(path)?,
            None => match self.scale {
                ScaleArg::Paper => Scale::Paper.config(),
                ScaleArg::Desk => Scale::Desk.config(),
            },
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }

    fn out_dir(&self, config: &BenchConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("bench-out").join(&config.name))
    }
}

fn execute(command: Command) -> cgso::Result<bool> {
    match command {
        Command::Gen(args) => {
            let config = args.config()?;
            let out = args.out_dir(&config);
            for path in bench::write_instances(&config, &out)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::Run(args) => {
            let config = args.config()?;
            let out = args.out_dir(&config);
            let run = bench::run_bench(&config, args.threads)?;
            bench::emit_report(&run, &out)?;
            print!("{}", bench::render_table(&run));
            println!("wrote {}", out.join("summary.csv").display());
            Ok(run.all_completed())
        }
        Command::Report(args) => {
            let out = match (&args.out, &args.config) {
                (Some(out), _) => out.clone(),
                (None, _) => args.out_dir(&args.config()?),
            };
            let run = bench::rerender_summary(&out)?;
            print!("{}", bench::render_table(&run));
            Ok(run.all_completed())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
