use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use routescan::io::{run_stages, RunConfig, RunSummary, Stage};

/// Audit mixture-of-experts serving telemetry for harmful-request routing patterns.
#[derive(Parser)]
#[command(name = "routescan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or load telemetry and write it as JSONL.
    Simulate(Common),
    /// Write the request-level representation of every record as CSV.
    Featurize(Common),
    /// Fit the feature selector of every fold.
    Select(Common),
    /// Fit selectors and detector bundles of every fold.
    Train(Common),
    /// Full run: train every fold, score its target and write the metric reports.
    Evaluate(Common),
    /// Run only the attribute-probing stage.
    Probe(Common),
    /// Print the metrics of a finished run.
    Report {
        /// Output directory of an earlier `evaluate` or `probe` run.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> routescan::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(common: &Common, stage: Stage, probe_only: bool) -> routescan::Result<()> {
    let mut cfg = load(common)?;
    if probe_only {
        if cfg.probe.is_none() {
            return Err(routescan::Error::Configuration("config has no [probe] section".into()));
        }
        cfg.protocol = None;
    }
    let out = run_stages(&cfg, stage)?;
    for f in &out.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn print_report(dir: &Path) -> routescan::Result<()> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| routescan::Error::Io { path: path.clone(), source: e })?;
    let s: RunSummary = serde_json::from_str(&text)?;
    println!("config {} seed {}", s.config_hash, s.seed);
    if !s.folds.is_empty() {
        println!("{:<32} {:>7} {:>7} {:>7} {:>7} {:>9} {:>9}", "fold", "AUROC", "AP", "F1", "Acc", "Prec@0.9", "Cov@0.9");
        for r in &s.folds {
            let m = &r.metrics;
            println!(
                "{:<32} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>9.4} {:>9.4}",
                r.fold, m.auroc, m.average_precision, m.f1_at_05, m.acc_at_05, m.precision_at_p90, m.coverage_at_p90
            );
        }
        if let Some(m) = s.mean {
            println!(
                "{:<32} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>9.4} {:>9.4}",
                "mean", m.auroc, m.average_precision, m.f1_at_05, m.acc_at_05, m.precision_at_p90, m.coverage_at_p90
            );
        }
    }
    for p in &s.probes {
        let r = &p.report.random_split;
        print!(
            "probe {}: random AUROC {:.4} F1 {:.4} (scenario-only {:.4}, all-positive {:.4})",
            p.attribute, r.auroc, r.f1_at_05, p.report.baselines.scenario_only_f1, p.report.baselines.all_positive_f1
        );
        match &p.report.loso {
            Some(l) => println!("; LOSO AUROC {:.4}", l.auroc),
            None => println!("; LOSO skipped"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => run(c, Stage::Simulate, false),
        Command::Featurize(c) => run(c, Stage::Featurize, false),
        Command::Select(c) => run(c, Stage::Select, false),
        Command::Train(c) => run(c, Stage::Train, false),
        Command::Evaluate(c) => run(c, Stage::Evaluate, false),
        Command::Probe(c) => run(c, Stage::Evaluate, true),
        Command::Report { out } => print_report(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
