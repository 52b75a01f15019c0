use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use stochflow_cli::config::KINDS;
use stochflow_cli::{run_experiment, CliError, CliResult, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "stochflow", version, about = "Run a stochflow experiment from a TOML config")]
struct Args {
    /// Experiment config file.
    #[arg(long, required_unless_present = "list_experiments")]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for ensemble parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the experiment kinds and exit.
    #[arg(long)]
    list_experiments: bool,
}

fn run(args: &Args) -> CliResult<i32> {
    if args.list_experiments {
        for (kind, about) in KINDS {
            println!("{kind:<16} {about}");
        }
        return Ok(0);
    }
    if let Some(n) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config { key: "--jobs".into(), message: e.to_string() })?;
    }
    let path = args.config.as_ref().expect("clap enforces --config");
    let cfg = ExperimentConfig::load(path)?;
    let seed = match args.seed {
        Some(s) => s,
        None => cfg.require_seed()?,
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.kind));

    let started = Instant::now();
    let mut report = run_experiment(&cfg, seed)?;
    report.wall_clock = started.elapsed();
    report.write(&out)?;

    print!("{}", report.render_verdicts());
    if let Some(msg) = report.diagnostics.get("message").and_then(|m| m.as_str()) {
        println!("{msg}");
    }
    println!("wrote {} ({:.2} s)", out.display(), report.wall_clock.as_secs_f64());
    let failures = report.failures();
    if !failures.is_empty() {
        eprintln!("{} check(s) failed:", failures.len());
        for v in failures {
            eprintln!("  {}: {}", v.invariant, v.detail);
        }
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
