use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use varnorm_core::emit;
use varnorm_core::experiment::{self, oracle_suite};
use varnorm_core::onsys::CoeffSeq;
use varnorm_core::variation::{
    dyadic_upper_bound, extrema_pruned_variation, sup_variation, variation_bruteforce, variation_exact,
    PartialSumPath, VariationResult,
};

#[derive(Parser)]
#[command(name = "varnorm", version, about = "p-variation norms of orthonormal partial sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Brute,
    Dyadic,
    Pruned,
}

#[derive(Subcommand)]
enum Command {
    /// p-variation of the partial sums of a coefficient file (`index,re,im`).
    Variation {
        coeff_file: PathBuf,
        /// Exponent >= 1, or `sup`.
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, value_enum, default_value = "exact")]
        method: MethodArg,
    },
    /// Runs a JSON experiment config and writes records.csv, summary.json and chart.svg.
    Experiment {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Skip the DP budget guard.
        #[arg(long)]
        force: bool,
    },
    /// Compares the DP against brute force on random complex paths.
    Oracle {
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Renders records.csv as an SVG chart.
    Plot {
        records: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn configure_workers() -> Result<()> {
    if let Ok(raw) = std::env::var("VARNORM_WORKERS") {
        let n: usize = raw.trim().parse().with_context(|| format!("VARNORM_WORKERS={raw:?} is not a count"))?;
        if n == 0 {
            bail!("VARNORM_WORKERS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn variation(coeff_file: &Path, p: &str, method: MethodArg) -> Result<()> {
    let coeffs = CoeffSeq::read_csv(coeff_file)?;
    let path = PartialSumPath::from_increments(coeffs.coeffs())?;
    let report = |r: VariationResult, p: serde_json::Value| {
        json!({
            "N": path.len(),
            "p": p,
            "method": format!("{:?}", r.method),
            "value": r.value,
            "breakpoints": r.breakpoints,
        })
    };
    let out = if p.eq_ignore_ascii_case("sup") || p.eq_ignore_ascii_case("inf") {
        if !matches!(method, MethodArg::Exact) {
            bail!("p = sup is only supported with --method exact");
        }
        report(sup_variation(&path), json!("sup"))
    } else {
        let p: f64 = p.parse().with_context(|| format!("--p {p:?} is neither a number nor `sup`"))?;
        match method {
            MethodArg::Exact => report(variation_exact(&path, p)?, json!(p)),
            MethodArg::Brute => report(variation_bruteforce(&path, p)?, json!(p)),
            MethodArg::Pruned => report(extrema_pruned_variation(&path, p)?, json!(p)),
            MethodArg::Dyadic => {
                if p != 2.0 {
                    bail!("the dyadic bound is defined for p = 2 only");
                }
                json!({ "N": path.len(), "p": 2.0, "method": "DyadicUpper", "value": dyadic_upper_bound(&path) })
            }
        }
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn run_experiment(config_path: &Path, out: &Path, force: bool) -> Result<()> {
    let mut config = experiment::load_config(config_path)?;
    config.force |= force;
    let output = experiment::run(&config)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    emit::write_csv(&output.records, &out.join("records.csv"))?;
    emit::write_json(&output.summary, &out.join("summary.json"))?;
    emit::write_svg(&output.records, &out.join("chart.svg"))?;
    eprintln!("{} records written to {}", output.records.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| match cli.command {
        Command::Variation { coeff_file, p, method } => variation(&coeff_file, &p, method).map(|()| true),
        Command::Experiment { config, out, force } => run_experiment(&config, &out, force).map(|()| true),
        Command::Oracle { n_max, instances, seed } => {
            let report = oracle_suite(n_max, instances, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.mismatches == 0)
        }
        Command::Plot { records, output } => {
            emit::write_svg(&emit::read_csv(&records)?, &output)?;
            Ok(true)
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
