mod config;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use config::ExperimentKind;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("CAPDUAL_GIT_REV"), ")");

#[derive(Parser)]
#[command(name = "capdual", version = VERSION, about = "Capacity duality experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's `out`, else the current
        /// directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomized experiments; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the experiments and their config fields.
    List,
}

fn describe(kind: ExperimentKind) -> (&'static str, &'static str) {
    match kind {
        ExperimentKind::Duality => (
            "(1/k) ln ‖Π_{k,kθ} v^⊗k‖² against 2 ln cap_θ(v) for a torus vector, along k with kθ integral",
            "vector{weights, amplitudes}, theta, k_max, tolerances{min_ratio, weak_duality_slack}",
        ),
        ExperimentKind::Prefactor => (
            "k^{d/2}·‖Π_k v^⊗k‖² for a unit torus vector with μ(v) = 0, d the rank of the weight differences",
            "vector, k_max (exact DP) or ks (quadrature), tolerances{target, target_tolerance, cauchy_from, cauchy_relative}",
        ),
        ExperimentKind::PermDual => (
            "(k!·perm_{kr,kc}(M))^{1/k} against the (r,c)-capacity cap², with the van der Waerden sandwich for uniform marginals",
            "matrix (rationals), r, c, k_max, tolerances{slack, final_window}",
        ),
        ExperimentKind::SchurWeylLdp => (
            "-(1/k) ln P(λ ≈ kθ) under the Schur–Weyl measure against D_KL(θ‖q)",
            "q (sorted), theta, k_max, tolerances{checkpoints, decreasing}",
        ),
        ExperimentKind::DuffieldLdp => (
            "-(1/k) ln P(highest weight ≈ kθ) in W^⊗k for SU(2) against the tilted rate function",
            "weights (symmetric multiset), theta, k_max, tolerances{checkpoints, decreasing}",
        ),
        ExperimentKind::McCheck => (
            "Monte Carlo Haar integrals of isotypic projection norms against their exact values",
            "cases[{action{kind, ...}, k, lambda}], samples, tolerances{sigmas, min_fraction}",
        ),
        ExperimentKind::Capacity => (
            "θ-capacity by Newton on the log-sum-exp objective and by constrained KL minimization, with polytope membership",
            "vector, theta, tolerances{solver_agreement}",
        ),
        ExperimentKind::Laurent => (
            "constant terms cst(f^k) of a Laurent polynomial against its critical values",
            "terms[[exponent, coefficient] | [exponent, re, im]], k_max, tolerances{growth, cap_sq, cap_sq_tolerance}",
        ),
    }
}

fn list() {
    for kind in ExperimentKind::ALL {
        let (what, fields) = describe(kind);
        println!("{}\n    {what}\n    fields: experiment, seed?, out?, {fields}", kind.name());
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("CAPDUAL_THREADS") {
        let n: usize = value
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("CAPDUAL_THREADS={value:?} is not a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn write_csv(path: &Path, table: &run::Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs a config; returns whether all checks passed.
fn run_config(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<bool> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let (experiment, common) = config::parse(&text, &config.display().to_string())?;
    let seed = seed.or(common.seed).unwrap_or(0);
    let outcome = run::run(&experiment, seed)?;

    let dir = out.or(common.out).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let pass = outcome.pass();
    let summary = json!({
        "experiment": experiment.kind().name(),
        "version": VERSION,
        "seed": seed,
        "config": experiment.to_json(),
        "headline": outcome.headline,
        "checks": outcome.checks,
        "pass": pass,
        "csv": csv_path.file_name().and_then(|s| s.to_str()),
    });
    write_csv(&csv_path, &outcome.table)?;
    fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;

    for c in &outcome.checks {
        println!(
            "{} {}: {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            run::show(c.value),
            c.threshold
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::List => {
            list();
            Ok(true)
        }
        Command::Run { config, out, seed } => run_config(&config, out, seed),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
