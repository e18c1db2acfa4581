use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use ldg_core::study::{emit, run_study, StudyConfig};

/// Refinement studies for LDG schemes with generalized alternating fluxes.
#[derive(Debug, Parser)]
#[command(name = "ldg", version)]
struct Args {
    /// Flat key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// periodic-ex1 | mixed-ex2 | dirichlet-ex2
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated refinement levels, e.g. 20,40,80,160.
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    t: Option<f64>,
    /// Correction depth of the initial data (default k).
    #[arg(long)]
    ell: Option<usize>,
    /// periodic | mixed | dirichlet; overrides the case's boundary condition.
    #[arg(long)]
    bc: Option<String>,
    /// Random interior node perturbation as a fraction of h (0 <= a < 0.4).
    #[arg(long)]
    perturb: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Accumulate time-integrated q errors.
    #[arg(long)]
    time_integrals: bool,
    /// Per-step CSV log of t, ||u_h||, energy; one file per N.
    #[arg(long)]
    trace_log: Option<PathBuf>,
}

fn build_config(args: &Args) -> anyhow::Result<StudyConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            StudyConfig::parse_str(&text)?
        }
        None => StudyConfig::default(),
    };
    let overrides = [
        ("case", args.case.clone()),
        ("k", args.k.map(|v| v.to_string())),
        ("N", args.n.clone()),
        ("theta", args.theta.map(|v| v.to_string())),
        ("lambda", args.lambda.map(|v| v.to_string())),
        ("cfl", args.cfl.map(|v| v.to_string())),
        ("T", args.t.map(|v| v.to_string())),
        ("ell", args.ell.map(|v| v.to_string())),
        ("bc", args.bc.clone()),
        ("perturb", args.perturb.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("format", args.format.clone()),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(log) = &args.trace_log {
        cfg.trace_log = Some(log.clone());
    }
    cfg.time_integrals |= args.time_integrals;
    Ok(cfg)
}

fn run(args: Args) -> anyhow::Result<()> {
    let cfg = build_config(&args)?;
    log::info!("running {} k={} N={:?}", cfg.case, cfg.k, cfg.n_list);
    let table = run_study(&cfg)?;
    emit(&table, cfg.format, cfg.out.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
