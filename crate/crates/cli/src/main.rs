use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sisample_cli::{load_scenario, run, Overrides, RunConfig};

/// Injectivity, stability and angle analysis for sampling on (unions of)
/// shift-invariant subspaces. Loads a JSON scenario, runs its tasks, and
/// writes a deterministic report bundle (summary, CSV tables, manifest).
///
/// Exit codes: 0 all verdicts positive, 2 when any verdict is NotClosed /
/// not-injective / not-stable, 1 on errors. FSIS_THREADS caps grid-sweep
/// parallelism (0 or unset = auto).
#[derive(Parser)]
#[command(name = "sisample", version, about)]
struct Cli {
    /// Scenario file (JSON).
    scenario: PathBuf,

    /// Output directory for the report bundle.
    #[arg(long, default_value = "report")]
    out: PathBuf,

    /// Override the scenario's grid nodes per axis.
    #[arg(long)]
    grid: Option<usize>,

    /// Override the relative singular-value cutoff for ranks.
    #[arg(long)]
    rank_tol: Option<f64>,

    /// Override the relative zero/nonzero spectrum threshold.
    #[arg(long)]
    spec_tol: Option<f64>,

    /// Override the closedness margin epsilon.
    #[arg(long)]
    close_eps: Option<f64>,

    /// Override the alternating-projection iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    let mut scenario = load_scenario(&cli.scenario)?;
    scenario.apply_overrides(&Overrides {
        grid: cli.grid,
        rank_tol: cli.rank_tol,
        spec_tol: cli.spec_tol,
        close_eps: cli.close_eps,
        max_iter: cli.max_iter,
    });

    let threads = std::env::var("FSIS_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    let threads_label = if threads == 0 { "auto".to_string() } else { threads.to_string() };
    let config = RunConfig { out_dir: cli.out.clone(), threads_label };

    let outcome = if threads == 0 {
        run(&scenario, &config)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        pool.install(|| run(&scenario, &config))?
    };
    println!(
        "report written to {} ({} files); exit code {}",
        outcome.bundle.dir.display(),
        outcome.bundle.files.len(),
        outcome.exit_code
    );
    Ok(outcome.exit_code)
}
