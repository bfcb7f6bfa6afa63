//! Stochastic microscopic model: explicit Euler social-force dynamics with
//! Markov stop/go switching, replicated as a Monte-Carlo ensemble.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::forces::ForceParams;
use crate::geometry::reflect_with;
use crate::rates::{RateFunction, Status};
use crate::scenario::Scenario;
use crate::{Error, Grid, Rect, ReflectionParams, Result, Vec2, WalkableDomain};

/// Positions, velocities and statuses of all pedestrians at `t = step · dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroState {
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub statuses: Vec<Status>,
    pub step: u64,
    pub dt: f64,
}

impl MicroState {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn stopped_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let stopped = self.statuses.iter().filter(|s| !s.is_walking()).count();
        stopped as f64 / self.len() as f64
    }

    /// Stopped pedestrians must have zero velocity.
    pub fn is_consistent(&self) -> bool {
        self.statuses
            .iter()
            .zip(&self.velocities)
            .all(|(s, v)| s.is_walking() || *v == Vec2::ZERO)
    }
}

/// Counters collected while stepping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepDiagnostics {
    /// Positions that left the walkable set and were projected back.
    pub projections: u64,
    /// Pedestrians within the arrival radius of the destination.
    pub arrived: u64,
}

/// One-step transition machinery for a fixed parameter set.
#[derive(Debug, Clone)]
pub struct MicroModel {
    pub domain: WalkableDomain,
    pub reflection: ReflectionParams,
    pub forces: ForceParams,
    pub rates: RateFunction,
    dt: f64,
}

impl MicroModel {
    /// Fails if `dt · ‖λ‖_∞ > 1`.
    pub fn new(
        domain: WalkableDomain,
        reflection: ReflectionParams,
        forces: ForceParams,
        rates: RateFunction,
        dt: f64,
    ) -> Result<Self> {
        reflection.validate()?;
        forces.validate()?;
        rates.validate()?;
        rates.check_step(dt)?;
        Ok(Self { domain, reflection, forces, rates, dt })
    }

    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        Self::new(
            scenario.domain.clone(),
            scenario.reflection,
            scenario.forces,
            scenario.rates.clone(),
            scenario.micro.time_step(&scenario.rates),
        )
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `[P(r' = stopped), P(r' = walking)]` given status `r` at `x`.
    pub fn switch_distribution(&self, status: Status, x: Vec2) -> [f64; 2] {
        let flip = self.dt * self.rates.rate(status, x);
        match status {
            Status::Stopped => [1.0 - flip, flip],
            Status::Walking => [flip, 1.0 - flip],
        }
    }

    /// Initial state: uniform positions on `region`, `P(stopped) = p_stop`,
    /// and walking velocities set to the macroscopic closure velocity.
    pub fn sample_initial<R: Rng + ?Sized>(&self, region: &Rect, p_stop: f64, n: usize, rng: &mut R) -> MicroState {
        let positions: Vec<Vec2> = (0..n)
            .map(|_| {
                let ux: f64 = rng.random();
                let uy: f64 = rng.random();
                Vec2::new(
                    region.x[0] + ux * (region.x[1] - region.x[0]),
                    region.y[0] + uy * (region.y[1] - region.y[0]),
                )
            })
            .collect();
        let statuses: Vec<Status> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                if u < p_stop { Status::Stopped } else { Status::Walking }
            })
            .collect();
        let velocities = self.initial_velocities(&positions, &statuses);
        MicroState { positions, velocities, statuses, step: 0, dt: self.dt }
    }

    /// `v_i = r_i τ/(1 + τλ(1, x_i)) ((v^C/τ) D(x_i) + (1/N) Σ_j G(x_i − x_j))`.
    pub fn initial_velocities(&self, positions: &[Vec2], statuses: &[Status]) -> Vec<Vec2> {
        let n = positions.len();
        let tau = self.forces.relaxation_time;
        let drive = self.forces.comfort_speed / tau;
        positions
            .iter()
            .zip(statuses)
            .map(|(&x, &s)| {
                if !s.is_walking() {
                    return Vec2::ZERO;
                }
                let mut interaction = Vec2::ZERO;
                if !self.forces.kernel.is_zero() {
                    for &y in positions {
                        interaction += self.forces.kernel.eval(x - y);
                    }
                    interaction = interaction / n as f64;
                }
                let factor = tau / (1.0 + tau * self.rates.rate(Status::Walking, x));
                (self.forces.destination_direction(x) * drive + interaction) * factor
            })
            .collect()
    }

    /// Advances `state` by one step. Forces, boundary velocities and switching
    /// probabilities all read the state at the start of the step; one uniform
    /// draw per pedestrian is consumed in index order.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut MicroState, rng: &mut R) -> Result<StepDiagnostics> {
        let dt = self.dt;
        let forces = self.forces.micro_forces(&state.positions, &state.velocities);
        let mut diag = StepDiagnostics::default();
        for i in 0..state.len() {
            let x = state.positions[i];
            let v = state.velocities[i];
            let status = state.statuses[i];
            let (x_next, v_next) = if status.is_walking() {
                let q = self.domain.query(x)?;
                let boundary_velocity = reflect_with(&self.reflection, &q, v);
                (x + boundary_velocity * dt, v + forces[i] * dt)
            } else {
                (x, Vec2::ZERO)
            };
            if !(x_next.is_finite() && v_next.is_finite()) {
                return Err(Error::Runtime {
                    t: state.time(),
                    reason: format!("pedestrian {i} has a non-finite state"),
                });
            }
            let u: f64 = rng.random();
            let flip = u < dt * self.rates.rate(status, x);
            let x_next = if self.domain.contains(x_next) {
                x_next
            } else {
                diag.projections += 1;
                self.domain.project(x_next)
            };
            if self.forces.has_arrived(x_next) {
                diag.arrived += 1;
            }
            let status_next = if flip { status.flipped() } else { status };
            state.positions[i] = x_next;
            state.velocities[i] = if status_next.is_walking() { v_next } else { Vec2::ZERO };
            state.statuses[i] = status_next;
        }
        state.step += 1;
        Ok(diag)
    }
}

/// Cell counts of sampled positions; integer accumulation keeps ensemble
/// sums independent of the order replicates are merged in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityHistogram {
    pub counts: Vec<u64>,
    pub outside: u64,
    pub samples: u64,
}

impl DensityHistogram {
    pub fn new(grid: &Grid) -> Self {
        Self { counts: vec![0; grid.len()], outside: 0, samples: 0 }
    }

    pub fn add(&mut self, grid: &Grid, positions: &[Vec2]) {
        for &p in positions {
            match grid.locate(p) {
                Some((i, j)) => self.counts[grid.index(i, j)] += 1,
                None => self.outside += 1,
            }
        }
        self.samples += positions.len() as u64;
    }

    pub fn merge(&mut self, other: &DensityHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
        self.samples += other.samples;
    }

    /// Cell densities `count / (samples · dx dy)`.
    pub fn density(&self, grid: &Grid) -> Vec<f64> {
        if self.samples == 0 {
            return vec![0.0; self.counts.len()];
        }
        let scale = 1.0 / (self.samples as f64 * grid.cell_area());
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }

    pub fn outside_fraction(&self) -> f64 {
        if self.samples == 0 { 0.0 } else { self.outside as f64 / self.samples as f64 }
    }
}

/// Monte-Carlo density estimate `(1/M) Σ_m (1/N) Σ_l 1_Q(x_l) / (dx dy)` from
/// one position slice per replicate. Also returns the fraction of samples
/// that fell outside the grid window.
pub fn empirical_density(replicates: &[&[Vec2]], grid: &Grid) -> (Vec<f64>, f64) {
    let mut hist = DensityHistogram::new(grid);
    for positions in replicates {
        hist.add(grid, positions);
    }
    (hist.density(grid), hist.outside_fraction())
}

/// Deterministic RNG for one replicate: a ChaCha stream selected by the
/// replicate index under the master seed.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// Ensemble statistics at the configured snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub grid: Grid,
    pub dt: f64,
    pub pedestrians: usize,
    pub replicates: usize,
    pub times: Vec<f64>,
    /// Mean empirical density per snapshot.
    pub densities: Vec<Vec<f64>>,
    /// Fraction of pedestrians outside the recording window per snapshot.
    pub outside_fraction: Vec<f64>,
    pub cuts: Vec<f64>,
    /// Expected fraction of pedestrians with `x₁ ≤ cut`, `[snapshot][cut]`.
    pub mass_balance: Vec<Vec<f64>>,
    /// Stopped fraction per replicate and step (index 0 is the initial state).
    pub stopped_fraction: Vec<Vec<f64>>,
    /// First step at which every pedestrian has `x₁ > cut`, `[replicate][cut]`.
    pub crossing_steps: Vec<Vec<Option<u64>>>,
    pub diagnostics: StepDiagnostics,
}

impl EnsembleResult {
    /// Stopped fraction averaged over replicates, per step.
    pub fn mean_stopped_fraction(&self) -> Vec<f64> {
        let steps = self.stopped_fraction.first().map_or(0, Vec::len);
        (0..steps)
            .map(|n| self.stopped_fraction.iter().map(|r| r[n]).sum::<f64>() / self.replicates as f64)
            .collect()
    }

    /// Crossing times in seconds per replicate for cut `c`.
    pub fn crossing_times(&self, c: usize) -> Vec<Option<f64>> {
        self.crossing_steps
            .iter()
            .map(|r| r[c].map(|n| n as f64 * self.dt))
            .collect()
    }
}

struct ReplicateOutput {
    histograms: Vec<DensityHistogram>,
    left_of_cut: Vec<Vec<u64>>,
    stopped: Vec<f64>,
    crossing: Vec<Option<u64>>,
    diagnostics: StepDiagnostics,
}

fn run_replicate(
    model: &MicroModel,
    scenario: &Scenario,
    grid: &Grid,
    snapshot_steps: &[u64],
    total_steps: u64,
    replicate: u64,
) -> Result<ReplicateOutput> {
    let mut rng = replicate_rng(scenario.seed, replicate);
    let n = scenario.micro.pedestrians;
    let mut state = model.sample_initial(&scenario.initial.region, scenario.initial.p_stop, n, &mut rng);
    let mut histograms = Vec::with_capacity(snapshot_steps.len());
    let mut left_of_cut = Vec::with_capacity(snapshot_steps.len());
    let mut stopped = Vec::with_capacity(total_steps as usize + 1);
    let mut crossing = vec![None; scenario.cuts.len()];
    let mut diagnostics = StepDiagnostics::default();
    let mut next_snapshot = 0;

    for step in 0..=total_steps {
        if step > 0 {
            let d = model.step(&mut state, &mut rng)?;
            diagnostics.projections += d.projections;
            diagnostics.arrived = d.arrived;
        }
        stopped.push(state.stopped_fraction());
        for (c, &cut) in scenario.cuts.iter().enumerate() {
            if crossing[c].is_none() && state.positions.iter().all(|p| p.x > cut) {
                crossing[c] = Some(step);
            }
        }
        while next_snapshot < snapshot_steps.len() && snapshot_steps[next_snapshot] == step {
            let mut hist = DensityHistogram::new(grid);
            hist.add(grid, &state.positions);
            histograms.push(hist);
            left_of_cut.push(
                scenario
                    .cuts
                    .iter()
                    .map(|&cut| state.positions.iter().filter(|p| p.x <= cut).count() as u64)
                    .collect(),
            );
            next_snapshot += 1;
        }
    }
    Ok(ReplicateOutput { histograms, left_of_cut, stopped, crossing, diagnostics })
}

/// Runs `M` independent replicates to the horizon and aggregates snapshot
/// densities, mass balances, stopped fractions and crossing steps.
///
/// Output is bitwise reproducible for a fixed scenario and seed regardless
/// of the number of worker threads.
pub fn run_ensemble(scenario: &Scenario) -> Result<EnsembleResult> {
    scenario.validate()?;
    let model = MicroModel::from_scenario(scenario)?;
    let grid = Grid::for_domain(&scenario.domain, scenario.grid.dx, scenario.grid.dy)?;
    let dt = model.dt();
    let total_steps = (scenario.horizon / dt).round() as u64;
    let snapshot_steps: Vec<u64> = scenario.snapshots.iter().map(|t| (t / dt).round() as u64).collect();
    let m = scenario.micro.replicates;

    let outputs: Vec<ReplicateOutput> = (0..m as u64)
        .into_par_iter()
        .map(|r| run_replicate(&model, scenario, &grid, &snapshot_steps, total_steps, r))
        .collect::<Result<_>>()?;

    let n_snap = snapshot_steps.len();
    let mut hist: Vec<DensityHistogram> = (0..n_snap).map(|_| DensityHistogram::new(&grid)).collect();
    let mut left = vec![vec![0u64; scenario.cuts.len()]; n_snap];
    let mut diagnostics = StepDiagnostics::default();
    for out in &outputs {
        for s in 0..n_snap {
            hist[s].merge(&out.histograms[s]);
            for (acc, c) in left[s].iter_mut().zip(&out.left_of_cut[s]) {
                *acc += c;
            }
        }
        diagnostics.projections += out.diagnostics.projections;
        diagnostics.arrived += out.diagnostics.arrived;
    }
    let total = (m * scenario.micro.pedestrians) as f64;
    Ok(EnsembleResult {
        dt,
        pedestrians: scenario.micro.pedestrians,
        replicates: m,
        times: scenario.snapshots.clone(),
        densities: hist.iter().map(|h| h.density(&grid)).collect(),
        outside_fraction: hist.iter().map(DensityHistogram::outside_fraction).collect(),
        cuts: scenario.cuts.clone(),
        mass_balance: left.iter().map(|row| row.iter().map(|&c| c as f64 / total).collect()).collect(),
        stopped_fraction: outputs.iter().map(|o| o.stopped.clone()).collect(),
        crossing_steps: outputs.into_iter().map(|o| o.crossing).collect(),
        diagnostics,
        grid,
    })
}
