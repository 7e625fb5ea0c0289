//! Command-line front end: seeded, reproducible experiments emitting JSON
//! reports on standard output. Exit codes: 0 success, 2 validation or
//! configuration failure, 3 search exhaustion, 70 internal invariant
//! breach.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use torus_spectrum::error::{Error, Result};
use torus_spectrum::geometry::{DualExponent, SubtorusSpec};
use torus_spectrum::morrey::MorreyMode;
use torus_spectrum::report::{
    self, blocks_table, load_function, run_chain_command, run_find_subtorus,
    run_morrey_check, run_oracle, run_spectrum, volumes_table, weights_table,
    with_envelope, ChainArgs, FindSubtorusArgs, MorreyCheckArgs, SpectrumArgs,
};
use torus_spectrum::rng::RandomStream;

#[derive(Parser)]
#[command(
    name = "torus-spectrum",
    version,
    about = "Seeded experiments around oscillation bounds and nearly-constant \
             subtori for Lipschitz functions on high-dimensional tori"
)]
struct Cli {
    /// Seed for all randomness; defaults to $TORUS_SPECTRUM_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores); results are identical for any
    /// worker count
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Directory for CSV/JSON artifacts referenced by flags like
    /// --emit-subtorus and --endpoints-csv
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExponentArg {
    /// Metric exponent p (> 1, or "inf")
    #[arg(long, default_value = "2")]
    p: String,
}

impl ExponentArg {
    fn parse(&self) -> Result<DualExponent> {
        let p = match self.p.as_str() {
            "inf" | "infinity" | "oo" => f64::INFINITY,
            s => s
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad exponent {s:?}")))?,
        };
        DualExponent::new(p)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Unit lp-ball volumes for dimensions 0..=n
    Volumes {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        p: ExponentArg,
    },
    /// Oscillation-bound weights for indices 1..=count
    Weights {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 5)]
        count: u32,
        #[command(flatten)]
        p: ExponentArg,
    },
    /// Index-block sizes for blocks 1..=count
    Blocks {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        count: u32,
        #[command(flatten)]
        p: ExponentArg,
    },
    /// Certify osc(f; T^n) < 8*eps from the weighted derivative bound
    MorreyCheck {
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        p: ExponentArg,
        /// Threshold mode: "finite" (bound 1) or "infinite" (bound 1/2)
        #[arg(long, default_value = "finite")]
        mode: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 256)]
        grid_resolution: u32,
    },
    /// Simulate the randomized point chain and its oscillation statistics
    Chain {
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        p: ExponentArg,
        #[arg(long, default_value_t = 10_000)]
        chains: u64,
        /// Fixed start point coordinates, comma separated (default origin)
        #[arg(long, value_delimiter = ',')]
        start: Option<Vec<f64>>,
        /// Also write chain end points as CSV (relative to --out-dir)
        #[arg(long)]
        endpoints_csv: Option<PathBuf>,
    },
    /// Search for a subtorus on which f oscillates less than 8*eps
    FindSubtorus {
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        p: ExponentArg,
        #[arg(long, default_value_t = 1)]
        blocks: u32,
        #[arg(long, default_value_t = 64)]
        max_attempts: u64,
        #[arg(long, default_value_t = 50_000)]
        samples: u64,
        /// Write the accepted subtorus spec to this JSON file
        #[arg(long)]
        emit_subtorus: Option<PathBuf>,
    },
    /// Nested subtorus searches over a shrinking eps schedule; the means
    /// converge to the function's spectrum value
    Spectrum {
        #[arg(long = "fn")]
        function: PathBuf,
        /// Strictly decreasing schedule, e.g. 0.4,0.3,0.25
        #[arg(long, value_delimiter = ',')]
        eps_seq: Vec<f64>,
        #[command(flatten)]
        p: ExponentArg,
        /// Blocks per stage: one value for all stages, or one per stage
        #[arg(long, value_delimiter = ',', default_value = "1")]
        blocks_seq: Vec<u32>,
        #[arg(long, default_value_t = 64)]
        max_attempts: u64,
        #[arg(long, default_value_t = 50_000)]
        samples: u64,
        /// Write the final certifying subtorus spec to this JSON file
        #[arg(long)]
        emit_subtorus: Option<PathBuf>,
    },
    /// Exact analytic quantities for families that support them
    Oracle {
        #[arg(long = "fn")]
        function: PathBuf,
        #[command(flatten)]
        p: ExponentArg,
        /// Restrict the oscillation/mean oracles to this subtorus spec
        #[arg(long)]
        subtorus: Option<PathBuf>,
    },
}

fn resolve_out(path: &PathBuf, out_dir: &Option<PathBuf>) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.clone(),
    }
}

fn default_seed() -> u64 {
    std::env::var("TORUS_SPECTRUM_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn run(cli: Cli) -> Result<report::Report> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    if let Some(dir) = &cli.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let seed = cli.seed.unwrap_or_else(default_seed);
    let rng = RandomStream::new(seed, 0);

    match &cli.command {
        Command::Volumes { n, p } => {
            let d = p.parse()?;
            with_envelope(
                json!({"command": "volumes", "n": n, "p": d.p(), "seed": seed}),
                || Ok(volumes_table(*n, &d)),
            )
        }
        Command::Weights { eps, count, p } => {
            let d = p.parse()?;
            with_envelope(
                json!({"command": "weights", "eps": eps, "count": count,
                       "p": d.p(), "seed": seed}),
                || weights_table(*count, *eps, &d),
            )
        }
        Command::Blocks { eps, count, p } => {
            let d = p.parse()?;
            with_envelope(
                json!({"command": "blocks", "eps": eps, "count": count,
                       "p": d.p(), "seed": seed}),
                || blocks_table(*count, *eps, &d),
            )
        }
        Command::MorreyCheck {
            function,
            n,
            eps,
            p,
            mode,
            samples,
            grid_resolution,
        } => {
            let d = p.parse()?;
            let mode: MorreyMode = serde_json::from_value(json!(mode))
                .map_err(|_| Error::Config(format!("bad mode {mode:?}")))?;
            let loaded = load_function(function)?;
            let args = MorreyCheckArgs {
                n: *n,
                eps: *eps,
                mode,
                samples: *samples,
                grid_resolution: *grid_resolution,
            };
            with_envelope(
                json!({"command": "morrey-check", "fn": loaded.spec, "n": n,
                       "eps": eps, "p": d.p(), "mode": mode,
                       "samples": samples, "grid_resolution": grid_resolution,
                       "seed": seed}),
                || run_morrey_check(loaded.function.as_ref(), &d, &args, &rng),
            )
        }
        Command::Chain {
            function,
            n,
            eps,
            p,
            chains,
            start,
            endpoints_csv,
        } => {
            let d = p.parse()?;
            let loaded = load_function(function)?;
            let args = ChainArgs {
                n: *n,
                eps: *eps,
                chains: *chains,
                start: start.clone(),
                endpoints_csv: endpoints_csv
                    .as_ref()
                    .map(|pth| resolve_out(pth, &cli.out_dir)),
            };
            with_envelope(
                json!({"command": "chain", "fn": loaded.spec, "n": n,
                       "eps": eps, "p": d.p(), "chains": chains,
                       "start": start, "seed": seed}),
                || run_chain_command(loaded.function.as_ref(), &d, &args, &rng),
            )
        }
        Command::FindSubtorus {
            function,
            eps,
            p,
            blocks,
            max_attempts,
            samples,
            emit_subtorus,
        } => {
            let d = p.parse()?;
            let loaded = load_function(function)?;
            let args = FindSubtorusArgs {
                eps: *eps,
                blocks: *blocks,
                max_attempts: *max_attempts,
                samples: *samples,
                emit_subtorus: emit_subtorus
                    .as_ref()
                    .map(|pth| resolve_out(pth, &cli.out_dir)),
            };
            with_envelope(
                json!({"command": "find-subtorus", "fn": loaded.spec,
                       "eps": eps, "p": d.p(), "blocks": blocks,
                       "max_attempts": max_attempts, "samples": samples,
                       "seed": seed}),
                || run_find_subtorus(loaded.function.as_ref(), &d, &args, &rng),
            )
        }
        Command::Spectrum {
            function,
            eps_seq,
            p,
            blocks_seq,
            max_attempts,
            samples,
            emit_subtorus,
        } => {
            let d = p.parse()?;
            let loaded = load_function(function)?;
            let block_schedule = if blocks_seq.len() == 1 {
                vec![blocks_seq[0]; eps_seq.len()]
            } else {
                blocks_seq.clone()
            };
            let args = SpectrumArgs {
                eps_schedule: eps_seq.clone(),
                block_schedule,
                max_attempts: *max_attempts,
                samples: *samples,
                emit_subtorus: emit_subtorus
                    .as_ref()
                    .map(|pth| resolve_out(pth, &cli.out_dir)),
            };
            let f: Arc<dyn torus_spectrum::function::TorusFunction> =
                loaded.function.clone();
            with_envelope(
                json!({"command": "spectrum", "fn": loaded.spec,
                       "eps_seq": eps_seq, "p": d.p(),
                       "blocks_seq": args.block_schedule,
                       "max_attempts": max_attempts, "samples": samples,
                       "seed": seed}),
                || run_spectrum(f, &d, &args, &rng),
            )
        }
        Command::Oracle {
            function,
            p,
            subtorus,
        } => {
            let d = p.parse()?;
            let loaded = load_function(function)?;
            let sub: Option<SubtorusSpec> = match subtorus {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    Some(serde_json::from_str(&text)?)
                }
                None => None,
            };
            with_envelope(
                json!({"command": "oracle", "fn": loaded.spec, "p": d.p(),
                       "subtorus": sub, "seed": seed}),
                || run_oracle(loaded.function.as_ref(), &d, sub.as_ref()),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report is serializable")
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(report::exit_code(&err) as u8)
        }
    }
}
