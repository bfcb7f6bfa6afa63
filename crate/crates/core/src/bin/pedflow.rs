use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pedflow::runner::{self, Command};
use pedflow::scenario::Scenario;
use pedflow::Error;

#[derive(Parser)]
#[command(name = "pedflow", version, about = "Stop-and-go pedestrian flow: micro ensembles, macro solver, comparison")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the microscopic Monte-Carlo ensemble.
    Micro(RunArgs),
    /// Run the macroscopic solver.
    Macro(RunArgs),
    /// Run both tiers and write error and mass-balance tables.
    Compare(RunArgs),
    /// Load and check a scenario without running it.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Bundled scenario by name, e.g. `example1_desk`.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed for the Monte-Carlo replicates.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "PEDFLOW_OUT")]
    out: Option<PathBuf>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated snapshot times overriding the scenario's.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
    /// Override the number of Monte-Carlo replicates.
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the number of pedestrians per replicate.
    #[arg(long)]
    pedestrians: Option<usize>,
}

fn load(args: &RunArgs) -> Result<Scenario, Error> {
    let mut scenario = match (&args.scenario, &args.preset) {
        (Some(path), _) => Scenario::load(path)?,
        (None, Some(name)) => Scenario::preset(name)?,
        (None, None) => return Err(Error::Config("either --scenario or --preset is required".into())),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(times) = &args.snapshots {
        scenario.snapshots = times.clone();
    }
    if let Some(m) = args.replicates {
        scenario.micro.replicates = m;
    }
    if let Some(n) = args.pedestrians {
        scenario.micro.pedestrians = n;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn run(command: Command, args: &RunArgs) -> Result<(), Error> {
    if let Some(k) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {k} workers: {e}")))?;
    }
    let scenario = load(args)?;
    let out = args
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&scenario.name));
    let outcome = runner::execute(command, &scenario, &out)?;

    let mut text = String::new();
    match command {
        Command::Validate => writeln!(
            text,
            "ok: scenario '{}' (dt = {}, sup rate = {})",
            scenario.name,
            scenario.micro_dt(),
            scenario.rates.sup_bound()
        )
        .unwrap(),
        _ => {
            if let Some(run) = &outcome.macro_run {
                if let Some(last) = run.diagnostics.last() {
                    let _ = writeln!(text, "macro: {} steps, final mass {}", run.diagnostics.len() - 1, last.total_mass);
                }
            }
            if let Some(micro) = &outcome.micro {
                let _ = writeln!(
                    text,
                    "micro: {} replicates x {} pedestrians, {} projections",
                    micro.replicates, micro.pedestrians, micro.diagnostics.projections
                );
            }
            if let Some(report) = &outcome.report {
                for (t, (l1, l2)) in report.times.iter().zip(report.l1.iter().zip(&report.l2)) {
                    let _ = writeln!(text, "t = {t}: L1 = {l1:.4}, L2 = {l2:.4}");
                }
            }
            let _ = writeln!(text, "wrote {}", out.display());
        }
    }
    // a closed pipe downstream is not our failure
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Micro(a) => (Command::Micro, a),
        Sub::Macro(a) => (Command::Macro, a),
        Sub::Compare(a) => (Command::Compare, a),
        Sub::Validate(a) => (Command::Validate, a),
    };
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
