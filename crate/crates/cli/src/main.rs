use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use conedbar_cli::config::parse_config_with;
use conedbar_cli::{emit_report, run_experiment, Experiment, ExperimentConfig, Format};

/// Runs a cone dbar experiment and writes its report.
///
/// Exit status: 0 when every check passes, 1 when a check or a stage
/// fails, 2 on usage or configuration errors.
#[derive(Debug, Parser)]
#[command(name = "dbar", version)]
struct Args {
    /// obstruction-table, solve-cp1, solve-bundle, solve-cone-l2,
    /// solve-cone-bounded or verify-suite.
    #[arg(long)]
    experiment: Option<Experiment>,
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json, csv or text.
    #[arg(long, default_value = "json")]
    format: Format,
    /// Number of nested grids.
    #[arg(long)]
    refine: Option<usize>,
    /// Single seed replacing the configured list.
    #[arg(long)]
    seed: Option<u64>,
}

fn usage_error(lines: &[String]) -> ExitCode {
    for l in lines {
        eprintln!("error: {l}");
    }
    ExitCode::from(2)
}

fn load(args: &Args) -> Result<ExperimentConfig, Vec<String>> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
            parse_config_with(&text, args.experiment)?
        }
        None => match args.experiment {
            Some(e) => ExperimentConfig::new(e),
            None => return Err(vec!["either --experiment or --config is required".into()]),
        },
    };
    if let Some(e) = args.experiment {
        config.experiment = e;
    }
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
    if let Some(r) = args.refine {
        config.refine = r;
    }
    if let Some(s) = args.seed {
        config.seeds = vec![s];
    }
    let v = config.violations();
    if v.is_empty() {
        Ok(config)
    } else {
        Err(v)
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = match load(&args) {
        Ok(c) => c,
        Err(v) => return usage_error(&v),
    };
    let report = run_experiment(&config);
    for (stage, secs) in &report.timings {
        eprintln!("{stage}: {secs:.2}s");
    }
    match emit_report(&report, args.format, &config.out) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("{}", c.line());
    }
    for s in report.failed_stages() {
        eprintln!("stage failed: {} [{}]: {}", s.name, s.grid, s.error.as_deref().unwrap_or(""));
    }
    ExitCode::from(report.exit_code() as u8)
}
