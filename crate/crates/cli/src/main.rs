use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mvsim::harness::{self, ExperimentConfig, ExperimentKind, FitOutcome, ReportFormat};

#[derive(Parser)]
#[command(name = "mvsim", version, about = "Particle simulations of path-dependent McKean-Vlasov equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strong convergence rate in the time step, from coupled coarse/fine runs.
    Rate(RunArgs),
    /// Decay in N of the sup-over-knots Wasserstein distance to a reference law.
    Chaos(RunArgs),
    /// Sample moments at the horizon against the OU moment ODE.
    Oracle(RunArgs),
    /// One-step path modulus relative to sqrt(h |ln h|).
    Modulus(RunArgs),
    /// Stability of E[sup |X|^p]^(1/p) across grid sizes.
    Moment(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; the built-in preset is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the CSV report and plot.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the SVG plot.
    #[arg(long)]
    no_plot: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<bool> {
    let (kind, args) = match command {
        Command::Rate(a) => (ExperimentKind::Rate, a),
        Command::Chaos(a) => (ExperimentKind::Chaos, a),
        Command::Oracle(a) => (ExperimentKind::Oracle, a),
        Command::Modulus(a) => (ExperimentKind::Modulus, a),
        Command::Moment(a) => (ExperimentKind::Moment, a),
    };
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::preset(kind),
    };
    if config.kind != kind {
        bail!(
            "config describes a {} experiment but `{}` was requested",
            config.kind.name(),
            kind.name()
        );
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    if args.print_config {
        print!("{}", config.to_toml()?);
        return Ok(true);
    }
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }

    let report = harness::run(&config)?;
    let dir = config.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut formats = vec![ReportFormat::Csv];
    if !args.no_plot {
        formats.push(ReportFormat::Plot);
    }
    let files = harness::emit_report(&report, &dir, &formats)?;

    println!("{:>10} {:>14} {:>12} {:>6}", "key", "estimate", "stderr", "reps");
    for r in &report.rows {
        println!("{:>10} {:>14.6e} {:>12.3e} {:>6}", r.key, r.estimate, r.stderr, r.n_reps);
    }
    match &report.fit {
        Some(FitOutcome::Fitted(f)) => println!(
            "slope {:.4} ± {:.4} (window from {})",
            f.slope,
            f.half_width,
            report.fit_window.as_deref().unwrap_or("first")
        ),
        Some(FitOutcome::Degenerate(why)) => println!("slope: degenerate ({why})"),
        None => {}
    }
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(report.passed())
}
