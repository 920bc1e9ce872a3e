use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nonspread::config::ExperimentConfig;
use nonspread::harness::{self, Command, RunOutput, Status};

#[derive(Parser)]
#[command(name = "nonspread", version, about = "Fixed-point experiments for nonspreading mappings in CAT(0) spaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Geometry suites plus classification of the configured mapping.
    Verify(Args),
    /// Picard, Mann or cyclic iteration; writes a trace CSV and diagnostics.
    Iterate(Args),
    /// Classify one mapping and compare against the declared expectation.
    Classify(Args),
    /// Asymptotic center of a list of points.
    Ac(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the sampler seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Iterate(a) => (Command::Iterate, a),
        Cmd::Classify(a) => (Command::Classify, a),
        Cmd::Ac(a) => (Command::Ac, a),
    };
    ExitCode::from(execute(command, &args) as u8)
}

fn execute(command: Command, args: &Args) -> i32 {
    let start = Instant::now();
    let bytes = std::fs::read(&args.config).unwrap_or_default();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return Status::ConfigError.code();
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return Status::ConfigError.code();
        }
    };

    let out = match ExperimentConfig::load(&args.config) {
        Ok(cfg) => pool.install(|| harness::run(command, &cfg, args.seed)),
        Err(e) => Err(e),
    };
    let out = out.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        RunOutput { status: Status::for_error(&e), files: Vec::new(), summary: e.to_string(), seed: args.seed }
    });

    let manifest = harness::manifest(command, &bytes, &out, start.elapsed().as_secs_f64());
    if let Err(e) = harness::write_outputs(&args.out, &out, &manifest) {
        eprintln!("error: writing {}: {e}", args.out.display());
        return Status::ConfigError.code();
    }
    println!("{}", out.summary);
    out.status.code()
}
