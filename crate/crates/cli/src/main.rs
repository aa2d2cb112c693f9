use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use logagg::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "agg", version, about = "Convex aggregation of log-density estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of replicates
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory (overrides the config's output_path)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rayon thread count (0 = automatic)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Suppress per-replicate progress output
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an oracle-inequality experiment from a TOML config
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Verify the separation and budget certificates of a hypercube family
    AuditLowerBound {
        config: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run the built-in invariant battery
    Selftest {
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn apply_overrides(cfg: &mut ExperimentConfig, opts: &CommonOpts) {
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(replicates) = opts.replicates {
        cfg.replicates = replicates;
    }
    if let Some(out) = &opts.out {
        cfg.output_path = out.display().to_string();
    }
}

fn init_threads(opts: &CommonOpts) -> Result<()> {
    if opts.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build_global()
            .context("failed to configure thread pool")?;
    }
    Ok(())
}

fn run(config: &PathBuf, opts: &CommonOpts) -> Result<bool> {
    init_threads(opts)?;
    let mut cfg = ExperimentConfig::load(config)?;
    apply_overrides(&mut cfg, opts);
    let report = harness::run_oracle(&cfg)?;
    let out = PathBuf::from(&cfg.output_path);
    harness::write_report_json(&out, &report)?;
    harness::write_replicates_csv(&out, &report)?;
    if !opts.quiet {
        println!(
            "threshold {:.6e}  violation_rate {:.4} (bound {:.4})  proposition_violations {}",
            report.threshold,
            report.violation_rate,
            report.violation_bound,
            report.proposition_violations
        );
        println!(
            "{}: wrote {} replicates to {}",
            if report.all_checks_passed { "PASS" } else { "FAIL" },
            report.per_replicate.len(),
            out.display()
        );
    }
    Ok(report.all_checks_passed)
}

fn audit(config: &PathBuf, opts: &CommonOpts) -> Result<bool> {
    init_threads(opts)?;
    let mut cfg = ExperimentConfig::load(config)?;
    apply_overrides(&mut cfg, opts);
    let report = harness::run_lower_bound_audit(&cfg)?;
    let out = PathBuf::from(&cfg.output_path);
    harness::write_report_json(&out, &report)?;
    harness::write_certificates_csv(&out, &report)?;
    if !opts.quiet {
        for c in &report.certificates {
            println!(
                "{} {:28} value {:.6e}  bound {:.6e}",
                if c.ok { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.bound
            );
        }
        println!(
            "{}: D = {}, amplitude = {:.6e}, {} certificates",
            if report.all_checks_passed { "PASS" } else { "FAIL" },
            report.d,
            report.amplitude,
            report.certificates.len()
        );
    }
    Ok(report.all_checks_passed)
}

fn selftest(opts: &CommonOpts) -> Result<bool> {
    init_threads(opts)?;
    let results = harness::selftest()?;
    let mut all = true;
    for (name, ok) in &results {
        all &= ok;
        if !opts.quiet {
            println!("{} {}", if *ok { "PASS" } else { "FAIL" }, name);
        }
    }
    if !opts.quiet {
        println!(
            "{}: {} / {} checks passed",
            if all { "PASS" } else { "FAIL" },
            results.iter().filter(|(_, ok)| *ok).count(),
            results.len()
        );
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, opts } => run(config, opts),
        Command::AuditLowerBound { config, opts } => audit(config, opts),
        Command::Selftest { opts } => selftest(opts),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
