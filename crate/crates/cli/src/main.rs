use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kahler_flow::lab::experiment::resolve_out_dir;
use kahler_flow::lab::{evaluate_snapshot, run_checks, run_experiment, run_sweep, ExperimentConfig, LabError};

/// Kahler-Ricci flow experiments on rotationally symmetric spheres.
#[derive(Parser, Debug)]
#[command(name = "kahler-lab", version)]
struct Cli {
    /// Output directory (overrides the config's `output.directory`).
    #[arg(long, global = true, env = "LAB_OUT")]
    out: Option<PathBuf>,

    /// Suppress progress output on stderr.
    #[arg(long, global = true, env = "LAB_QUIET")]
    quiet: bool,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, env = "LAB_MAX_THREADS")]
    max_threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment from a TOML config.
    Run { config: PathBuf },
    /// Run a parameter sweep from a TOML config with `[[sweep.axes]]`.
    Sweep { config: PathBuf },
    /// Run the numerical self-check suites.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the energy report of a saved potential as JSON.
    Energy {
        snapshot: PathBuf,
        /// Config whose geometry defines the background (default: round sphere).
        #[arg(long)]
        background: Option<PathBuf>,
    },
}

fn read_text(path: &Path) -> Result<String, LabError> {
    std::fs::read_to_string(path).map_err(|e| LabError::Io { path: path.display().to_string(), source: e })
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(cli: Cli) -> Result<(), LabError> {
    let say = |msg: String| {
        if !cli.quiet {
            eprintln!("{msg}");
        }
    };
    match &cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let out = resolve_out_dir(&cfg, cli.out.as_deref())
                .ok_or_else(|| LabError::Config("no output directory: pass --out or set output.directory".into()))?;
            let outcome = run_experiment(&cfg, Some(&out))?;
            let s = &outcome.summary;
            say(format!(
                "{:?} at t = {} after {} steps ({} rejected), {} samples in {}",
                s.stop,
                s.t_final,
                s.steps_accepted,
                s.steps_rejected,
                s.samples,
                out.display()
            ));
            if let (Some(rate), Some(r2)) = (s.rate, s.rate_r2) {
                say(format!("decay rate {rate:.4} (R^2 = {r2:.4})"));
            }
        }
        Command::Sweep { config } => {
            let text = read_text(config)?;
            let probe = ExperimentConfig::from_toml_str(&text, base_dir(config))?;
            let out = resolve_out_dir(&probe, cli.out.as_deref())
                .ok_or_else(|| LabError::Config("no output directory: pass --out or set output.directory".into()))?;
            let cells = run_sweep(&text, &base_dir(config), &out, cli.max_threads)?;
            let failed = cells.iter().filter(|c| !c.ok).count();
            say(format!("{} cells, {} failed, index in {}", cells.len(), failed, out.join("index.jsonl").display()));
        }
        Command::Check { seed } => {
            let results = run_checks(*seed);
            let mut failed = 0;
            for r in &results {
                if !r.passed {
                    failed += 1;
                }
                let mark = if r.passed { "ok  " } else { "FAIL" };
                println!("{mark} {:<14} {:<40} {:.3e} (tol {:.1e})", r.suite, r.name, r.value, r.tolerance);
            }
            if failed > 0 {
                return Err(LabError::CheckFailed { failed, total: results.len() });
            }
        }
        Command::Energy { snapshot, background } => {
            let cfg = background.as_deref().map(ExperimentConfig::load).transpose()?;
            let report = evaluate_snapshot(snapshot, cfg.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
