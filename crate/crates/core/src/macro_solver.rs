//! Macroscopic two-state model: stopped density `u0` and walking density `u1`.
//!
//! ```text
//! ∂t u0 = λ(1,x) u1 − λ(0,x) u0
//! ∂t u1 = λ(0,x) u0 − λ(1,x) u1 − div(V(x, τ𝐅(x,u) / (1 + τλ(1,x))) u1)
//! ```
//!
//! Each step freezes the nonlocal velocity field, advects `u1` with
//! dimension-split first-order upwinding, then applies the exact solution of
//! the linear reaction.

use crate::convolution::KernelConvolution;
use crate::forces::{ForceParams, ARRIVAL_RADIUS};
use crate::geometry::{reflect_with, BoundaryQuery};
use crate::rates::{RateFunction, Status};
use crate::scenario::{InitialLaw, Scenario};
use crate::{Error, ReflectionParams, Result, Vec2, WalkableDomain};

pub use crate::grid::Grid;

/// Densities below this are treated as round-off.
const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Cell means of the stopped (`u0`) and walking (`u1`) densities at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroField {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub t: f64,
}

impl MacroField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { u0: vec![0.0; grid.len()], u1: vec![0.0; grid.len()], t: 0.0 }
    }

    /// `u = u0 + u1` per cell.
    pub fn total(&self) -> Vec<f64> {
        self.u0.iter().zip(&self.u1).map(|(a, b)| a + b).collect()
    }

    /// `Σ (u0 + u1) dx dy`.
    pub fn mass(&self, grid: &Grid) -> f64 {
        self.u0.iter().zip(&self.u1).map(|(a, b)| a + b).sum::<f64>() * grid.cell_area()
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        grid.check_len(self.u0.len())?;
        grid.check_len(self.u1.len())
    }
}

/// Dimension-splitting order for one advection step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    XThenY,
    YThenX,
}

/// Exact solution of the two-state reaction over `dt`:
/// `(u0, u1) ← exp(dt Λ) (u0, u1)` with `Λ = [[−λ0, λ1], [λ0, −λ1]]`.
#[inline]
pub fn reaction_update(lambda0: f64, lambda1: f64, u0: f64, u1: f64, dt: f64) -> (f64, f64) {
    let total_rate = lambda0 + lambda1;
    if total_rate == 0.0 {
        return (u0, u1);
    }
    let decay = (-dt * total_rate).exp();
    let relaxed = -(-dt * total_rate).exp_m1();
    let u0_next = ((lambda1 + lambda0 * decay) * u0 + lambda1 * relaxed * u1) / total_rate;
    let u1_next = (lambda0 * relaxed * u0 + (lambda0 + lambda1 * decay) * u1) / total_rate;
    // u0 + u1 is invariant; assign the rounding residue to the larger part.
    let residue = (u0 + u1) - (u0_next + u1_next);
    if u0_next >= u1_next {
        (u0_next + residue, u1_next)
    } else {
        (u0_next, u1_next + residue)
    }
}

/// Closure velocity `V(x, τ𝐅(x, u) / (1 + τλ(1, x)))` at an arbitrary walkable
/// point, with the mean force summed directly over the grid cells.
pub fn closure_velocity(
    x: Vec2,
    grid: &Grid,
    field: &MacroField,
    rates: &RateFunction,
    forces: &ForceParams,
    domain: &WalkableDomain,
    reflection: &ReflectionParams,
) -> Result<Vec2> {
    field.check(grid)?;
    let force = forces.macro_mean_force(x, grid, &field.total())?;
    let tau = forces.relaxation_time;
    let v = force * (tau / (1.0 + tau * rates.rate(Status::Walking, x)));
    domain.reflect_velocity(reflection, x, v)
}

/// Per-step bookkeeping of [`run_macro`].
#[derive(Debug, Clone, PartialEq)]
pub struct MacroDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub total_mass: f64,
    /// Mass that has left through open ends so far.
    pub outflow: f64,
    /// Mass balance per configured cut.
    pub mass_balance: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MacroRun {
    pub grid: Grid,
    pub snapshots: Vec<MacroField>,
    pub diagnostics: Vec<MacroDiagnostics>,
    pub cuts: Vec<f64>,
}

/// Fractional-step solver on a fixed grid.
#[derive(Debug)]
pub struct MacroSolver {
    grid: Grid,
    domain: WalkableDomain,
    reflection: ReflectionParams,
    forces: ForceParams,
    /// `(λ(0, x_ij), λ(1, x_ij))` at cell centers.
    cell_rates: Vec<(f64, f64)>,
    /// Boundary information at unmasked cell centers.
    cell_boundary: Vec<Option<BoundaryQuery>>,
    convolution: Option<KernelConvolution>,
    cfl: f64,
    steps: u64,
}

impl MacroSolver {
    pub fn new(
        domain: WalkableDomain,
        reflection: ReflectionParams,
        forces: ForceParams,
        rates: &RateFunction,
        grid: Grid,
        cfl: f64,
    ) -> Result<Self> {
        reflection.validate()?;
        forces.validate()?;
        rates.validate()?;
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Config(format!("CFL number must lie in (0, 1], got {cfl}")));
        }
        let mut cell_rates = Vec::with_capacity(grid.len());
        let mut cell_boundary = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let (i, j) = grid.coords(k);
            let c = grid.center(i, j);
            cell_rates.push((rates.rate(Status::Stopped, c), rates.rate(Status::Walking, c)));
            cell_boundary.push(if grid.is_masked(k) { None } else { Some(domain.query(c)?) });
        }
        let convolution = (!forces.kernel.is_zero()).then(|| {
            let radius = forces.truncation_radius();
            let kernel = forces.kernel;
            KernelConvolution::new(&grid, move |d| {
                let r = d.norm();
                if r < ARRIVAL_RADIUS || r > radius { Vec2::ZERO } else { kernel.eval(d) }
            })
        });
        Ok(Self { grid, domain, reflection, forces, cell_rates, cell_boundary, convolution, cfl, steps: 0 })
    }

    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let grid = Grid::for_domain(&scenario.domain, scenario.grid.dx, scenario.grid.dy)?;
        Self::new(
            scenario.domain.clone(),
            scenario.reflection,
            scenario.forces,
            &scenario.rates,
            grid,
            scenario.grid.cfl,
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Largest rate sum `λ0 + λ1` over the grid.
    pub fn max_total_rate(&self) -> f64 {
        self.cell_rates.iter().map(|(a, b)| a + b).fold(0.0, f64::max)
    }

    /// Cell averages of the uniform initial law, split by `p_stop`.
    /// Fails if any initial mass would sit in a masked cell.
    pub fn initial_field(&self, law: &InitialLaw) -> Result<MacroField> {
        let grid = &self.grid;
        let mut field = MacroField::zeros(grid);
        let density = law.density();
        for k in 0..grid.len() {
            let (i, j) = grid.coords(k);
            let cover = grid.cell_rect(i, j).overlap_area(&law.region) / grid.cell_area();
            if cover == 0.0 {
                continue;
            }
            if grid.is_masked(k) {
                return Err(Error::Config(format!(
                    "initial mass overlaps the obstacle mask at cell ({i}, {j})"
                )));
            }
            field.u0[k] = law.p_stop * density * cover;
            field.u1[k] = (1.0 - law.p_stop) * density * cover;
        }
        let mass = field.mass(grid);
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("discretised initial mass is {mass}, expected 1")));
        }
        Ok(field)
    }

    /// Closure velocity at every cell center from one density snapshot;
    /// zero in masked cells.
    pub fn velocity_field(&self, field: &MacroField) -> Result<Vec<Vec2>> {
        field.check(&self.grid)?;
        let area = self.grid.cell_area();
        let interaction = match &self.convolution {
            Some(conv) => {
                let weights: Vec<f64> = field.u0.iter().zip(&field.u1).map(|(a, b)| (a + b) * area).collect();
                conv.apply(&weights)
            }
            None => vec![Vec2::ZERO; self.grid.len()],
        };
        let tau = self.forces.relaxation_time;
        let drive = self.forces.comfort_speed / tau;
        let mut velocity = vec![Vec2::ZERO; self.grid.len()];
        for (k, v) in velocity.iter_mut().enumerate() {
            let Some(q) = &self.cell_boundary[k] else { continue };
            let (i, j) = self.grid.coords(k);
            let x = self.grid.center(i, j);
            let force = self.forces.destination_direction(x) * drive + interaction[k];
            let raw = force * (tau / (1.0 + tau * self.cell_rates[k].1));
            *v = reflect_with(&self.reflection, q, raw);
            if !v.is_finite() {
                return Err(Error::Runtime { t: field.t, reason: format!("non-finite velocity at cell ({i}, {j})") });
            }
        }
        Ok(velocity)
    }

    /// Largest `dt` with `dt · max(|a_x|/dx + |a_y|/dy) ≤ cfl`; infinite for a
    /// resting field.
    pub fn stable_dt(&self, velocity: &[Vec2]) -> f64 {
        let rate = velocity
            .iter()
            .map(|v| v.x.abs() / self.grid.dx() + v.y.abs() / self.grid.dy())
            .fold(0.0, f64::max);
        if rate > 0.0 { self.cfl / rate } else { f64::INFINITY }
    }

    /// Advects `u1` over `dt` with the closure velocity frozen at the start.
    /// Returns the mass that left through open ends.
    pub fn advection_step(&self, field: &mut MacroField, dt: f64, order: SweepOrder) -> Result<f64> {
        let velocity = self.velocity_field(field)?;
        self.advect_with(field, &velocity, dt, order)
    }

    /// Upwind advection of `u1` under a prescribed cell-centered velocity.
    /// Each 1-D sweep is sub-stepped so that its Courant number stays ≤ 1.
    pub fn advect_with(&self, field: &mut MacroField, velocity: &[Vec2], dt: f64, order: SweepOrder) -> Result<f64> {
        field.check(&self.grid)?;
        self.grid.check_len(velocity.len())?;
        if velocity.iter().any(|v| !v.is_finite()) {
            return Err(Error::Runtime { t: field.t, reason: "non-finite advection velocity".into() });
        }
        let outflow = match order {
            SweepOrder::XThenY => self.sweep_x(&mut field.u1, velocity, dt) + self.sweep_y(&mut field.u1, velocity, dt),
            SweepOrder::YThenX => self.sweep_y(&mut field.u1, velocity, dt) + self.sweep_x(&mut field.u1, velocity, dt),
        };
        Ok(outflow)
    }

    fn sweep_x(&self, u: &mut [f64], velocity: &[Vec2], dt: f64) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let open = !self.domain.closed_ends();
        let mut outflow = 0.0;
        let mut line = vec![0.0; nx];
        let mut speed = vec![0.0; nx];
        let mut masked = vec![false; nx];
        for j in 0..ny {
            for i in 0..nx {
                let k = self.grid.index(i, j);
                line[i] = u[k];
                speed[i] = velocity[k].x;
                masked[i] = self.grid.is_masked(k);
            }
            outflow += upwind_line(&mut line, &speed, &masked, dt / self.grid.dx(), open) * self.grid.cell_area();
            for i in 0..nx {
                u[self.grid.index(i, j)] = line[i];
            }
        }
        outflow
    }

    fn sweep_y(&self, u: &mut [f64], velocity: &[Vec2], dt: f64) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut line = vec![0.0; ny];
        let mut speed = vec![0.0; ny];
        let mut masked = vec![false; ny];
        for i in 0..nx {
            for j in 0..ny {
                let k = self.grid.index(i, j);
                line[j] = u[k];
                speed[j] = velocity[k].y;
                masked[j] = self.grid.is_masked(k);
            }
            // Top and bottom are always walls.
            upwind_line(&mut line, &speed, &masked, dt / self.grid.dy(), false);
            for j in 0..ny {
                u[self.grid.index(i, j)] = line[j];
            }
        }
        0.0
    }

    /// Exact reaction over `dt` in every cell.
    pub fn reaction_step(&self, field: &mut MacroField, dt: f64) -> Result<()> {
        field.check(&self.grid)?;
        for (k, &(l0, l1)) in self.cell_rates.iter().enumerate() {
            let (a, b) = reaction_update(l0, l1, field.u0[k], field.u1[k], dt);
            field.u0[k] = a;
            field.u1[k] = b;
        }
        Ok(())
    }

    /// Godunov splitting: advection then reaction, alternating the sweep
    /// order between calls. Returns the outflow mass.
    pub fn fractional_step(&mut self, field: &mut MacroField, dt: f64) -> Result<f64> {
        let velocity = self.velocity_field(field)?;
        self.fractional_step_with(field, &velocity, dt)
    }

    fn fractional_step_with(&mut self, field: &mut MacroField, velocity: &[Vec2], dt: f64) -> Result<f64> {
        let order = if self.steps.is_multiple_of(2) { SweepOrder::XThenY } else { SweepOrder::YThenX };
        let outflow = self.advect_with(field, velocity, dt, order)?;
        self.reaction_step(field, dt)?;
        self.steps += 1;
        field.t += dt;
        for u in field.u0.iter_mut().chain(field.u1.iter_mut()) {
            if *u < 0.0 {
                if *u < -NEGATIVE_TOLERANCE || !u.is_finite() {
                    return Err(Error::Runtime { t: field.t, reason: format!("density {u} below zero") });
                }
                *u = 0.0;
            }
        }
        Ok(outflow)
    }

    /// Integrates from `field` to `horizon`, landing exactly on each snapshot
    /// time. The step is the CFL-limited `dt`, capped by `1 / max(λ0 + λ1)`.
    pub fn run(&mut self, mut field: MacroField, horizon: f64, snapshots: &[f64], cuts: &[f64]) -> Result<MacroRun> {
        let grid = self.grid.clone();
        let rate_cap = match self.max_total_rate() {
            r if r > 0.0 => 1.0 / r,
            _ => f64::INFINITY,
        };
        let mut outflow = 0.0;
        let diag = |field: &MacroField, dt: f64, outflow: f64| {
            let total = field.total();
            MacroDiagnostics {
                t: field.t,
                dt,
                total_mass: grid.integrate(&total),
                outflow,
                mass_balance: cuts.iter().map(|&c| crate::metrics::mass_balance(&grid, &total, c)).collect(),
            }
        };
        let mut diagnostics = vec![diag(&field, 0.0, 0.0)];
        let mut recorded = Vec::with_capacity(snapshots.len());
        let mut next = 0;
        while next < snapshots.len() && snapshots[next] <= field.t {
            recorded.push(field.clone());
            next += 1;
        }
        while field.t < horizon {
            let velocity = self.velocity_field(&field)?;
            let target = snapshots.get(next).copied().unwrap_or(horizon).min(horizon);
            let mut dt = self.stable_dt(&velocity).min(rate_cap);
            let remaining = target - field.t;
            let landing = dt >= remaining * (1.0 - 1e-12);
            if landing {
                dt = remaining;
            }
            outflow += self.fractional_step_with(&mut field, &velocity, dt)?;
            if landing {
                field.t = target;
            }
            diagnostics.push(diag(&field, dt, outflow));
            while next < snapshots.len() && snapshots[next] <= field.t {
                recorded.push(field.clone());
                next += 1;
            }
        }
        Ok(MacroRun { grid: self.grid.clone(), snapshots: recorded, diagnostics, cuts: cuts.to_vec() })
    }
}

/// One 1-D upwind update of `u` along a grid line; faces next to masked
/// cells carry no flux, open ends let mass leave but not enter. Returns the
/// outflow through the ends in units of density (multiply by the cell area).
fn upwind_line(u: &mut [f64], speed: &[f64], masked: &[bool], ratio: f64, open: bool) -> f64 {
    let n = u.len();
    // face f sits between cells f − 1 and f
    let mut face_speed = vec![0.0; n + 1];
    let mut active = vec![false; n + 1];
    for f in 1..n {
        if !masked[f - 1] && !masked[f] {
            face_speed[f] = 0.5 * (speed[f - 1] + speed[f]);
            active[f] = true;
        }
    }
    if open {
        if !masked[0] {
            face_speed[0] = speed[0].min(0.0);
            active[0] = true;
        }
        if !masked[n - 1] {
            face_speed[n] = speed[n - 1].max(0.0);
            active[n] = true;
        }
    }
    let courant = (0..n)
        .map(|i| ratio * (face_speed[i + 1].max(0.0) - face_speed[i].min(0.0)))
        .fold(0.0, f64::max);
    let substeps = courant.ceil().max(1.0) as usize;
    let ratio = ratio / substeps as f64;
    let mut flux = vec![0.0; n + 1];
    let mut outflow = 0.0;
    for _ in 0..substeps {
        for f in 0..=n {
            flux[f] = if !active[f] {
                0.0
            } else {
                let a = face_speed[f];
                let left = if f > 0 { u[f - 1] } else { 0.0 };
                let right = if f < n { u[f] } else { 0.0 };
                a.max(0.0) * left + a.min(0.0) * right
            };
        }
        for i in 0..n {
            u[i] -= ratio * (flux[i + 1] - flux[i]);
        }
        outflow += ratio * (flux[n] - flux[0]);
    }
    outflow
}

/// Runs the macroscopic model described by `scenario` from its initial law.
pub fn run_macro(scenario: &Scenario) -> Result<MacroRun> {
    scenario.validate()?;
    let mut solver = MacroSolver::from_scenario(scenario)?;
    let field = solver.initial_field(&scenario.initial)?;
    solver.run(field, scenario.horizon, &scenario.snapshots, &scenario.cuts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forces::MorseKernel;
    use crate::rates::{Region, SpatialRate};
    use crate::Rect;
    use approx::assert_abs_diff_eq;

    fn forces(kernel: MorseKernel, tau: f64) -> ForceParams {
        ForceParams {
            comfort_speed: 1.0,
            relaxation_time: tau,
            destination: Vec2::new(1e9, 0.0),
            kernel,
            truncation_radius: None,
        }
    }

    fn solver(closed: bool, obstacles: Vec<Rect>, kernel: MorseKernel, rates: &RateFunction, h: f64) -> MacroSolver {
        let domain = WalkableDomain::new([-2.0, 2.0], [-1.0, 1.0], obstacles, closed).unwrap();
        let grid = Grid::for_domain(&domain, h, h).unwrap();
        MacroSolver::new(domain, ReflectionParams::default(), forces(kernel, 1.0), rates, grid, 0.45).unwrap()
    }

    fn bump(grid: &Grid, centre: Vec2, width: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                let d = grid.center(i, j) - centre;
                (-d.norm_squared() / (2.0 * width * width)).exp()
            })
            .collect();
        let mass = grid.integrate(&raw);
        raw.into_iter().map(|u| u / mass).collect()
    }

    #[test]
    fn reaction_examples() {
        // hand values: λ0 = λ1 → both relax to the mean
        let (a, b) = reaction_update(1.0, 1.0, 1.0, 0.0, 1e3);
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.5, epsilon = 1e-15);
        // one rate zero: pure exponential decay of u0 into u1
        let (a, b) = reaction_update(2.0, 0.0, 1.0, 0.0, 0.5);
        assert_abs_diff_eq!(a, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(b, 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        // both zero: identity
        assert_eq!(reaction_update(0.0, 0.0, 0.3, 0.7, 5.0), (0.3, 0.7));
        // dt = 0: identity
        assert_eq!(reaction_update(6.0, 5.0, 0.3, 0.7, 0.0), (0.3, 0.7));
        // long times reach the equilibrium λ1/(λ0+λ1)
        let (a, b) = reaction_update(6.0, 5.0, 0.2, 0.8, 100.0 / 11.0);
        assert_abs_diff_eq!(a, 5.0 / 11.0, epsilon = 1e-10);
        assert_abs_diff_eq!(b, 6.0 / 11.0, epsilon = 1e-10);
        // semigroup property
        let once = reaction_update(10.0, 0.01, 0.4, 0.6, 0.3);
        let half = reaction_update(10.0, 0.01, 0.4, 0.6, 0.15);
        let twice = reaction_update(10.0, 0.01, half.0, half.1, 0.15);
        assert_abs_diff_eq!(once.0, twice.0, epsilon = 1e-14);
        assert_abs_diff_eq!(once.1, twice.1, epsilon = 1e-14);
    }

    #[test]
    fn upwind_is_exact_at_unit_courant() {
        let rates = RateFunction::zero();
        let s = solver(true, vec![], MorseKernel::none(), &rates, 0.1);
        let grid = s.grid().clone();
        let mut field = MacroField::zeros(&grid);
        for j in 0..grid.ny() {
            field.u1[grid.index(10, j)] = 1.0;
            field.u1[grid.index(11, j)] = 2.0;
        }
        let before = field.u1.clone();
        let velocity = vec![Vec2::new(1.0, 0.0); grid.len()];
        s.advect_with(&mut field, &velocity, 0.1, SweepOrder::XThenY).unwrap();
        for j in 0..grid.ny() {
            for i in 1..grid.nx() {
                assert_abs_diff_eq!(field.u1[grid.index(i, j)], before[grid.index(i - 1, j)], epsilon = 1e-15);
            }
        }
        // a second step with negative speed brings it back
        let velocity = vec![Vec2::new(-1.0, 0.0); grid.len()];
        s.advect_with(&mut field, &velocity, 0.1, SweepOrder::YThenX).unwrap();
        for (a, b) in field.u1.iter().zip(&before) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_velocity_is_identity() {
        let rates = RateFunction::zero();
        let s = solver(false, vec![], MorseKernel::none(), &rates, 0.1);
        let grid = s.grid().clone();
        let mut field = MacroField { u0: bump(&grid, Vec2::new(0.3, 0.1), 0.4), u1: bump(&grid, Vec2::ZERO, 0.3), t: 0.0 };
        let before = field.clone();
        let out = s.advect_with(&mut field, &vec![Vec2::ZERO; grid.len()], 0.7, SweepOrder::XThenY).unwrap();
        assert_eq!(out, 0.0);
        assert_eq!(field, before);
    }

    #[test]
    fn closed_box_conserves_mass() {
        let rates = RateFunction::homogeneous(6.0, 5.0);
        let mut s = solver(true, vec![Rect::new(-0.5, 0.5, 0.4, 1.0)], MorseKernel::default(), &rates, 0.1);
        let grid = s.grid().clone();
        let mut u1 = bump(&grid, Vec2::new(-1.0, 0.0), 0.3);
        for (k, u) in u1.iter_mut().enumerate() {
            if grid.is_masked(k) {
                *u = 0.0;
            }
        }
        let m = grid.integrate(&u1);
        let u1: Vec<f64> = u1.into_iter().map(|u| u / m).collect();
        let mut field = MacroField { u0: vec![0.0; grid.len()], u1, t: 0.0 };
        for _ in 0..200 {
            let v = s.velocity_field(&field).unwrap();
            let dt = s.stable_dt(&v).min(0.05);
            let out = s.fractional_step(&mut field, dt).unwrap();
            assert_eq!(out, 0.0);
            assert!(field.u0.iter().chain(&field.u1).all(|&u| u >= 0.0));
        }
        assert_abs_diff_eq!(field.mass(&grid), 1.0, epsilon = 1e-12);
        for k in 0..grid.len() {
            if grid.is_masked(k) {
                assert_eq!(field.u0[k] + field.u1[k], 0.0);
            }
        }
    }

    #[test]
    fn open_end_outflow_accounts_for_lost_mass() {
        let rates = RateFunction::zero();
        let s = solver(false, vec![], MorseKernel::none(), &rates, 0.1);
        let grid = s.grid().clone();
        let mut field = MacroField { u0: vec![0.0; grid.len()], u1: bump(&grid, Vec2::new(1.5, 0.0), 0.2), t: 0.0 };
        let velocity = vec![Vec2::new(1.0, 0.0); grid.len()];
        let mut out = 0.0;
        for _ in 0..10 {
            out += s.advect_with(&mut field, &velocity, 0.05, SweepOrder::XThenY).unwrap();
        }
        assert!(out > 0.1);
        assert_abs_diff_eq!(field.mass(&grid) + out, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn closure_speed_examples() {
        // v^C = τ = 1, λ1 = 4, no interaction → speed 1/5 in the interior
        let rates = RateFunction::homogeneous(1.0, 4.0);
        let s = solver(false, vec![], MorseKernel::none(), &rates, 0.1);
        let grid = s.grid().clone();
        let field = MacroField::zeros(&grid);
        let v = s.velocity_field(&field).unwrap();
        let k = grid.index(20, 10);
        assert_abs_diff_eq!(v[k].x, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(v[k].y, 0.0, epsilon = 1e-10);

        // τ = 0.2, λ1 = 1 → factor 1/1.2
        let domain = WalkableDomain::strip([-2.0, 2.0], [-1.0, 1.0]).unwrap();
        let rates = RateFunction::homogeneous(10.0, 1.0);
        let s = MacroSolver::new(
            domain.clone(),
            ReflectionParams::default(),
            forces(MorseKernel::none(), 0.2),
            &rates,
            grid.clone(),
            0.45,
        )
        .unwrap();
        let v = s.velocity_field(&field).unwrap();
        assert_abs_diff_eq!(v[k].x, 1.0 / 1.2, epsilon = 1e-12);
    }

    #[test]
    fn fft_velocity_matches_direct_sum() {
        let disc = Region::Disc { center: Vec2::ZERO, radius: 0.5 };
        let rates = RateFunction::new(
            SpatialRate::constant(0.0).with_region(disc, 6.0),
            SpatialRate::constant(0.0).with_region(disc, 5.0),
        );
        let obstacles = vec![Rect::new(-0.5, 0.5, 0.4, 1.0)];
        let s = solver(false, obstacles.clone(), MorseKernel::default(), &rates, 0.1);
        let grid = s.grid().clone();
        let mut u1 = bump(&grid, Vec2::new(-0.8, -0.2), 0.4);
        for (k, u) in u1.iter_mut().enumerate() {
            if grid.is_masked(k) {
                *u = 0.0;
            }
        }
        let field = MacroField { u0: bump(&grid, Vec2::new(0.5, 0.0), 0.5), u1, t: 0.0 };
        let fast = s.velocity_field(&field).unwrap();
        let domain = WalkableDomain::new([-2.0, 2.0], [-1.0, 1.0], obstacles, false).unwrap();
        let f = forces(MorseKernel::default(), 1.0);
        for k in (0..grid.len()).step_by(7) {
            if grid.is_masked(k) {
                continue;
            }
            let (i, j) = grid.coords(k);
            let slow =
                closure_velocity(grid.center(i, j), &grid, &field, &rates, &f, &domain, &ReflectionParams::default())
                    .unwrap();
            assert_abs_diff_eq!(fast[k].x, slow.x, epsilon = 1e-10);
            assert_abs_diff_eq!(fast[k].y, slow.y, epsilon = 1e-10);
        }
    }

    #[test]
    fn walls_reflect_the_closure_velocity() {
        let rates = RateFunction::zero();
        let domain = WalkableDomain::strip([-2.0, 2.0], [-1.0, 1.0]).unwrap();
        let grid = Grid::for_domain(&domain, 0.1, 0.1).unwrap();
        let mut f = forces(MorseKernel::none(), 1.0);
        f.destination = Vec2::new(0.0, 100.0);
        let s = MacroSolver::new(domain, ReflectionParams::default(), f, &rates, grid.clone(), 0.45).unwrap();
        let v = s.velocity_field(&MacroField::zeros(&grid)).unwrap();
        // head-on into the top wall at distance 0.05 < ε: v* = ṽ + J(0.5)(v − ṽ)
        let k = grid.index(19, grid.ny() - 1);
        let v_raw = f.destination_direction(grid.center(19, grid.ny() - 1));
        assert!(v[k].y < v_raw.y);
        assert_abs_diff_eq!(v[k].norm(), v_raw.norm(), epsilon = 1e-12);
    }

    #[test]
    fn deterministic_limit_translates() {
        // λ ≡ 0, u0 = 0, no interaction: u1 moves rigidly at v^C = 1.
        let rates = RateFunction::zero();
        let mut s = solver(false, vec![], MorseKernel::none(), &rates, 0.05);
        let grid = s.grid().clone();
        let law = InitialLaw { region: Rect::new(-1.5, -1.0, -1.0, 1.0), p_stop: 0.0 };
        let field = s.initial_field(&law).unwrap();
        let run = s.run(field, 1.0, &[0.0, 1.0], &[-0.75, 0.25]).unwrap();
        let last = &run.snapshots[1];
        assert_abs_diff_eq!(last.t, 1.0, epsilon = 1e-12);
        assert!(last.u0.iter().all(|&u| u == 0.0));
        // centre of mass moved by 1
        let com = |u: &[f64]| {
            (0..grid.len()).map(|k| grid.center(grid.coords(k).0, 0).x * u[k]).sum::<f64>() * grid.cell_area()
        };
        assert_abs_diff_eq!(com(&last.u1), com(&run.snapshots[0].u1) + 1.0, epsilon = 1e-3);
        let last_diag = run.diagnostics.last().unwrap();
        assert_abs_diff_eq!(last_diag.total_mass, 1.0, epsilon = 1e-12);
        // the block starts left of −0.75 and its centre ends at −0.25
        assert_abs_diff_eq!(run.diagnostics[0].mass_balance[0], 1.0, epsilon = 1e-12);
        assert!(last_diag.mass_balance[0] < 0.1);
        assert!(last_diag.mass_balance[1] > 0.9);
    }

    #[test]
    fn initial_field_rejects_mask_overlap() {
        let rates = RateFunction::zero();
        let s = solver(false, vec![Rect::new(-1.0, 1.0, 0.4, 1.0)], MorseKernel::none(), &rates, 0.1);
        let law = InitialLaw { region: Rect::new(-1.5, 0.0, -0.5, 0.5), p_stop: 0.5 };
        assert!(matches!(s.initial_field(&law), Err(Error::Config(_))));
        let law = InitialLaw { region: Rect::new(-1.5, -1.0, -0.5, 0.5), p_stop: 0.25 };
        let field = s.initial_field(&law).unwrap();
        assert_abs_diff_eq!(s.grid().integrate(&field.u0), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn run_lands_on_snapshots() {
        let rates = RateFunction::homogeneous(6.0, 5.0);
        let mut s = solver(true, vec![], MorseKernel::default(), &rates, 0.1);
        let law = InitialLaw { region: Rect::new(-1.0, 0.0, -0.5, 0.5), p_stop: 0.5 };
        let field = s.initial_field(&law).unwrap();
        let run = s.run(field, 0.5, &[0.0, 0.25, 0.5], &[]).unwrap();
        let times: Vec<f64> = run.snapshots.iter().map(|f| f.t).collect();
        assert_eq!(times, vec![0.0, 0.25, 0.5]);
        assert!(run.diagnostics.iter().skip(1).all(|d| d.dt <= 1.0 / 11.0 + 1e-15));
    }
}
