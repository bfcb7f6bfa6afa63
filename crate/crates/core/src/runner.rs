//! End-to-end runs: simulate, compare and write artifacts.

use std::path::Path;

use crate::macro_solver::{run_macro, MacroRun};
use crate::metrics::{crossing_time, lp_error, mass_balance, ComparisonReport};
use crate::micro::{run_ensemble, EnsembleResult};
use crate::output;
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Fraction of macroscopic mass that must have passed a cut for it to count
/// as crossed (densities have tails, so "everyone" is not attainable).
pub const MACRO_CROSSING_THRESHOLD: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Micro,
    Macro,
    Compare,
    Validate,
}

/// Pairs micro and macro snapshots by index and evaluates errors, mass
/// balances and crossing times.
pub fn compare(micro: &EnsembleResult, macro_run: &MacroRun) -> Result<ComparisonReport> {
    if micro.grid != macro_run.grid {
        return Err(Error::GridMismatch("micro and macro runs use different grids".into()));
    }
    if micro.times.len() != macro_run.snapshots.len() {
        return Err(Error::GridMismatch(format!(
            "{} micro snapshots vs {} macro snapshots",
            micro.times.len(),
            macro_run.snapshots.len()
        )));
    }
    let grid = &macro_run.grid;
    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    let mut macro_mb = Vec::new();
    for (density, field) in micro.densities.iter().zip(&macro_run.snapshots) {
        let total = field.total();
        l1.push(lp_error(grid, density, &total, 1.0)?);
        l2.push(lp_error(grid, density, &total, 2.0)?);
        macro_mb.push(micro.cuts.iter().map(|&c| mass_balance(grid, &total, c)).collect());
    }

    let diag_times: Vec<f64> = macro_run.diagnostics.iter().map(|d| d.t).collect();
    let macro_crossing = (0..macro_run.cuts.len())
        .map(|c| {
            let series: Vec<f64> = macro_run.diagnostics.iter().map(|d| d.mass_balance[c]).collect();
            crossing_time(&diag_times, &series, MACRO_CROSSING_THRESHOLD)
        })
        .collect();
    let micro_crossing = (0..micro.cuts.len())
        .map(|c| {
            let times: Vec<f64> = micro.crossing_times(c).into_iter().flatten().collect();
            let mean = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
            (mean, times.len())
        })
        .collect();

    Ok(ComparisonReport {
        times: micro.times.clone(),
        l1,
        l2,
        cuts: micro.cuts.clone(),
        micro_mass_balance: micro.mass_balance.clone(),
        macro_mass_balance: macro_mb,
        micro_crossing,
        replicates: micro.replicates,
        macro_crossing,
    })
}

/// Everything produced by one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub micro: Option<EnsembleResult>,
    pub macro_run: Option<MacroRun>,
    pub report: Option<ComparisonReport>,
}

/// Runs `command` for `scenario`, writing artifacts into `out_dir`.
pub fn execute(command: Command, scenario: &Scenario, out_dir: &Path) -> Result<Outcome> {
    scenario.validate()?;
    let mut outcome = Outcome::default();
    match command {
        Command::Validate => {}
        Command::Micro => {
            let result = run_ensemble(scenario)?;
            output::write_ensemble(out_dir, &result)?;
            outcome.micro = Some(result);
        }
        Command::Macro => {
            let run = run_macro(scenario)?;
            output::write_macro_run(out_dir, &run)?;
            outcome.macro_run = Some(run);
        }
        Command::Compare => {
            let (micro, macro_run) = rayon::join(|| run_ensemble(scenario), || run_macro(scenario));
            let (micro, macro_run) = (micro?, macro_run?);
            let report = compare(&micro, &macro_run)?;
            output::write_ensemble(out_dir, &micro)?;
            output::write_macro_run(out_dir, &macro_run)?;
            output::write_comparison(out_dir, &report)?;
            outcome = Outcome { micro: Some(micro), macro_run: Some(macro_run), report: Some(report) };
        }
    }
    Ok(outcome)
}
