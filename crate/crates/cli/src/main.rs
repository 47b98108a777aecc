use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracfast::config::{build_config, parse_pairs};
use fracfast::experiment::{read_config, run_experiment};
use fracfast::CliError;
use log::error;

/// Convergence, memory and timing experiments for fast Caputo derivative schemes.
#[derive(Parser, Debug)]
#[command(name = "fracfast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write <id>.csv, <id>_trace.csv and <id>_plot.dat.
    Run(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// table1, table2, table41, table42, fisher, huxley, props, linear-space or longtime
    #[arg(long)]
    experiment: Option<String>,
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    outdir: Option<String>,
    /// Compare against the printed tables; exit 2 when a check fails
    #[arg(long)]
    check: bool,
    /// Worker threads for independent table rows
    #[arg(long)]
    jobs: Option<String>,
    /// Comma-separated alpha values to keep
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated methods to keep (l1, l1-2, cutoff, faom, faom-p4, faom-p9)
    #[arg(long)]
    methods: Option<String>,
    /// Merge arity of the fast schemes
    #[arg(long)]
    ntau: Option<String>,
    /// Kernel polynomial degree of the FAOM-PK schemes
    #[arg(long)]
    kdeg: Option<String>,
    /// Keep only the first N grids of each sweep
    #[arg(long)]
    levels: Option<String>,
    /// Reference-solution cache directory [default: $FRACFAST_REFDIR, else <outdir>/refs]
    #[arg(long)]
    refdir: Option<String>,
    /// Write zero wall times so repeated runs give identical files
    #[arg(long)]
    no_timings: bool,
    /// Extra key=value overrides
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn collect_pairs(args: &RunArgs) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = match &args.config {
        Some(path) => parse_pairs(&read_config(path)?)?,
        None => Vec::new(),
    };
    let flags = [
        ("experiment", &args.experiment),
        ("outdir", &args.outdir),
        ("jobs", &args.jobs),
        ("alpha", &args.alpha),
        ("methods", &args.methods),
        ("ntau", &args.ntau),
        ("kdeg", &args.kdeg),
        ("levels", &args.levels),
        ("refdir", &args.refdir),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            pairs.push((k.to_string(), v.clone()));
        }
    }
    if args.check {
        pairs.push(("check".into(), "true".into()));
    }
    if args.no_timings {
        pairs.push(("timings".into(), "false".into()));
    }
    pairs.extend(parse_pairs(&args.set.join("\n"))?);
    if !pairs.iter().any(|(k, _)| k.eq_ignore_ascii_case("refdir")) {
        if let Ok(dir) = std::env::var("FRACFAST_REFDIR") {
            pairs.insert(0, ("refdir".into(), dir));
        }
    }
    Ok(pairs)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let Command::Run(args) = Cli::parse().command;
    let outcome = collect_pairs(&args)
        .and_then(|pairs| build_config(&pairs))
        .and_then(|cfg| run_experiment(&cfg));
    match outcome {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}
