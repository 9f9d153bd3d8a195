use clap::{Parser, Subcommand};

use graphopt_cli::commands::{self, env_seed, resolve_seed, RunArgs};

#[derive(Parser)]
#[command(name = "graphopt", version, about = "Stochastic optimization over graphons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a run configuration and print each condition.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: String,
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
    },
    /// Simulate a run configuration and write metrics.csv and report.json.
    Run {
        #[arg(long, value_name = "PATH")]
        config: String,
        #[arg(long, value_name = "DIR")]
        out: Option<String>,
        /// Overrides the config seed; GRAPHOPT_SEED is the last fallback.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        #[arg(long, value_name = "K")]
        threads: Option<usize>,
    },
    /// Estimate the algebraic connectivity of a kernel at N and 2N.
    Connectivity {
        /// Kernel block, or a run configuration holding one.
        #[arg(long, value_name = "PATH")]
        config: String,
        #[arg(long, value_name = "N", default_value_t = 256)]
        n: usize,
        #[arg(long, value_name = "K")]
        threads: Option<usize>,
    },
    /// Run a comparison sweep; the built-in sweep when no config is given.
    Lemmas {
        #[arg(long, value_name = "PATH")]
        config: Option<String>,
        #[arg(long, value_name = "DIR")]
        out: Option<String>,
        /// Seed of the randomized built-in cases.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        #[arg(long, value_name = "K")]
        threads: Option<usize>,
    },
}

fn with_threads(threads: Option<usize>, f: impl FnOnce() -> i32 + Send) -> i32 {
    match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
        Ok(pool) => pool.install(f),
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            commands::EXIT_FAILED
        }
    }
}

fn main() {
    let code = match Cli::parse().command {
        Command::Validate { config, seed } => commands::cmd_validate(&config, seed),
        Command::Run { config, out, seed, threads } => {
            commands::cmd_run(&RunArgs { config: &config, out: out.as_deref(), seed, threads })
        }
        Command::Connectivity { config, n, threads } => with_threads(threads, || commands::cmd_connectivity(&config, n)),
        Command::Lemmas { config, out, seed, threads } => match resolve_seed(seed, None, env_seed().as_deref()) {
            Ok(seed) => with_threads(threads, || commands::cmd_lemmas(config.as_deref(), seed, out.as_deref())),
            Err(e) => {
                eprintln!("error: {e:#}");
                commands::EXIT_FAILED
            }
        },
    };
    std::process::exit(code);
}
