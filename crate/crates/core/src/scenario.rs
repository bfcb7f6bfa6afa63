//! Run descriptions: parameters for both tiers, validation, and bundled presets.
//!
//! Scenarios are JSON documents. See `scenarios/README.md` in this crate for
//! the schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::forces::ForceParams;
use crate::rates::RateFunction;
use crate::{Error, Rect, ReflectionParams, Result, WalkableDomain};

/// Uniform initial law on a rectangle, split into stopped/walking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialLaw {
    pub region: Rect,
    /// `P(r = stopped)` at `t = 0`.
    pub p_stop: f64,
}

impl InitialLaw {
    /// Constant density of the uniform law, so that it integrates to one.
    pub fn density(&self) -> f64 {
        1.0 / self.region.area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroParams {
    pub pedestrians: usize,
    pub replicates: usize,
    /// Euler step; defaults to `min(0.01, 0.5 / ‖λ‖_∞)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl MicroParams {
    pub fn time_step(&self, rates: &RateFunction) -> f64 {
        self.dt.unwrap_or_else(|| {
            let sup = rates.sup_bound();
            if sup > 0.0 { (0.5 / sup).min(0.01) } else { 0.01 }
        })
    }
}

fn default_cfl() -> f64 {
    0.45
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub dx: f64,
    pub dy: f64,
    /// Courant number of the macroscopic solver.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub domain: WalkableDomain,
    #[serde(default)]
    pub reflection: ReflectionParams,
    pub forces: ForceParams,
    pub rates: RateFunction,
    pub initial: InitialLaw,
    pub micro: MicroParams,
    pub grid: GridParams,
    pub horizon: f64,
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub cuts: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Names of the bundled presets.
pub const PRESETS: &[&str] = &[
    "example1",
    "example1_desk",
    "example2_lambda1",
    "example2_lambda1_desk",
    "example2_lambda2",
    "example2_lambda2_desk",
];

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "example1" => include_str!("../scenarios/example1.json"),
            "example1_desk" => include_str!("../scenarios/example1_desk.json"),
            "example2_lambda1" => include_str!("../scenarios/example2_lambda1.json"),
            "example2_lambda1_desk" => include_str!("../scenarios/example2_lambda1_desk.json"),
            "example2_lambda2" => include_str!("../scenarios/example2_lambda2.json"),
            "example2_lambda2_desk" => include_str!("../scenarios/example2_lambda2_desk.json"),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}', expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Self::from_json(text)
    }

    /// Micro time step after applying the default rule.
    pub fn micro_dt(&self) -> f64 {
        self.micro.time_step(&self.rates)
    }

    /// Checks every invariant, naming the violated bound.
    pub fn validate(&self) -> Result<()> {
        self.reflection.validate()?;
        self.forces.validate()?;
        self.rates.validate()?;
        self.rates.check_step(self.micro_dt())?;

        let law = &self.initial;
        if !(0.0..=1.0).contains(&law.p_stop) {
            return Err(Error::Config(format!("initial.p_stop must lie in [0, 1], got {}", law.p_stop)));
        }
        let r = law.region;
        if !(r.x[0] < r.x[1] && r.y[0] < r.y[1]) {
            return Err(Error::Config(format!("initial.region is degenerate: {r:?}")));
        }
        let window = self.domain.bounds();
        if r.x[0] < window.x[0] || r.x[1] > window.x[1] || r.y[0] < window.y[0] || r.y[1] > window.y[1] {
            return Err(Error::Config("initial.region must lie inside the domain window".into()));
        }
        if self.domain.obstacles().iter().any(|ob| ob.overlap_area(&r) > 0.0) {
            return Err(Error::Config("initial.region overlaps an obstacle".into()));
        }

        if self.micro.pedestrians == 0 {
            return Err(Error::Config("micro.pedestrians must be >= 1".into()));
        }
        if self.micro.replicates == 0 {
            return Err(Error::Config("micro.replicates must be >= 1".into()));
        }
        let g = &self.grid;
        if !(g.cfl > 0.0 && g.cfl <= 1.0) {
            return Err(Error::Config(format!("grid.cfl must lie in (0, 1], got {}", g.cfl)));
        }
        crate::Grid::for_domain(&self.domain, g.dx, g.dy)?;

        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0, got {}", self.horizon)));
        }
        for (k, &t) in self.snapshots.iter().enumerate() {
            if !(0.0..=self.horizon).contains(&t) {
                return Err(Error::Config(format!("snapshot time {t} is outside [0, {}]", self.horizon)));
            }
            if k > 0 && t <= self.snapshots[k - 1] {
                return Err(Error::Config("snapshot times must be strictly increasing".into()));
            }
        }
        if self.cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("cut positions must be finite".into()));
        }
        Ok(())
    }
}
