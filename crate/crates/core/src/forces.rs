//! Destination drive, Morse-type pair interaction, and the forces built on them.

use serde::{Deserialize, Serialize};

use crate::{Error, Grid, Result, Vec2};

/// Distance below which a pedestrian counts as having reached its destination.
pub const ARRIVAL_RADIUS: f64 = 1e-9;

/// Pair force `G(d) = −C (e^{−(‖d‖−r₀)/ℓa} − e^{−(‖d‖−r₀)/ℓr}) d/‖d‖`, the
/// negative gradient of a Morse potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorseKernel {
    #[serde(default = "MorseKernel::default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "MorseKernel::default_attraction_range")]
    pub attraction_range: f64,
    #[serde(default = "MorseKernel::default_repulsion_range")]
    pub repulsion_range: f64,
    #[serde(default = "MorseKernel::default_offset")]
    pub offset: f64,
}

impl MorseKernel {
    fn default_amplitude() -> f64 {
        2.0
    }
    fn default_attraction_range() -> f64 {
        1.0
    }
    fn default_repulsion_range() -> f64 {
        0.5
    }
    fn default_offset() -> f64 {
        0.9
    }

    /// Kernel that is identically zero.
    pub fn none() -> Self {
        Self { amplitude: 0.0, ..Self::default() }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// `G(d)`; zero at `d = 0`.
    #[inline]
    pub fn eval(&self, d: Vec2) -> Vec2 {
        let r = d.norm();
        if r == 0.0 || self.amplitude == 0.0 {
            return Vec2::ZERO;
        }
        let s = r - self.offset;
        let magnitude =
            -self.amplitude * ((-s / self.attraction_range).exp() - (-s / self.repulsion_range).exp());
        d * (magnitude / r)
    }

    /// Radius beyond which `‖G‖ < tol`, from the dominant attractive tail.
    pub fn cutoff_radius(&self, tol: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.offset + self.attraction_range * (self.amplitude.abs() / tol).ln().max(0.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.amplitude.is_finite()
            && self.attraction_range.is_finite()
            && self.attraction_range > 0.0
            && self.repulsion_range.is_finite()
            && self.repulsion_range > 0.0
            && self.offset.is_finite();
        if !ok {
            return Err(Error::Config(format!("invalid interaction kernel {self:?}")));
        }
        Ok(())
    }
}

impl Default for MorseKernel {
    fn default() -> Self {
        Self {
            amplitude: Self::default_amplitude(),
            attraction_range: Self::default_attraction_range(),
            repulsion_range: Self::default_repulsion_range(),
            offset: Self::default_offset(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceParams {
    /// Comfort speed `v^C` in m/s.
    pub comfort_speed: f64,
    /// Relaxation time `τ` in s.
    pub relaxation_time: f64,
    /// Destination point `x^D`.
    pub destination: Vec2,
    #[serde(default)]
    pub kernel: MorseKernel,
    /// Convolution cut-off for the macroscopic force; defaults to the radius
    /// where the kernel magnitude drops below 1e-8.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
}

impl ForceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.comfort_speed.is_finite() && self.comfort_speed > 0.0) {
            return Err(Error::Config(format!("comfort speed must be > 0, got {}", self.comfort_speed)));
        }
        if !(self.relaxation_time.is_finite() && self.relaxation_time > 0.0) {
            return Err(Error::Config(format!("relaxation time must be > 0, got {}", self.relaxation_time)));
        }
        if !self.destination.is_finite() {
            return Err(Error::Config("destination must be finite".into()));
        }
        if let Some(r) = self.truncation_radius {
            if !(r > 0.0) {
                return Err(Error::Config(format!("truncation radius must be > 0, got {r}")));
            }
        }
        self.kernel.validate()
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius.unwrap_or_else(|| self.kernel.cutoff_radius(1e-8))
    }

    pub fn has_arrived(&self, x: Vec2) -> bool {
        (self.destination - x).norm() < ARRIVAL_RADIUS
    }

    /// Unit vector `D(x)` toward the destination, zero once arrived.
    pub fn destination_direction(&self, x: Vec2) -> Vec2 {
        let d = self.destination - x;
        let r = d.norm();
        if r < ARRIVAL_RADIUS {
            return Vec2::ZERO;
        }
        d / r
    }

    pub fn interaction_kernel(&self, d: Vec2) -> Vec2 {
        self.kernel.eval(d)
    }

    /// `F^dest = (v^C D(x) − v) / τ`.
    pub fn destination_force(&self, x: Vec2, v: Vec2) -> Vec2 {
        (self.destination_direction(x) * self.comfort_speed - v) / self.relaxation_time
    }

    /// Total force on pedestrian `i`: destination drive plus the pair
    /// interaction averaged over the other `N − 1` pedestrians.
    pub fn micro_force(&self, i: usize, positions: &[Vec2], velocities: &[Vec2]) -> Vec2 {
        let xi = positions[i];
        let mut force = self.destination_force(xi, velocities[i]);
        let n = positions.len();
        if n > 1 && !self.kernel.is_zero() {
            let mut sum = Vec2::ZERO;
            for (j, &xj) in positions.iter().enumerate() {
                if j != i {
                    sum += self.kernel.eval(xi - xj);
                }
            }
            force += sum / (n - 1) as f64;
        }
        force
    }

    /// Forces on all pedestrians, summing each pair once.
    pub fn micro_forces(&self, positions: &[Vec2], velocities: &[Vec2]) -> Vec<Vec2> {
        let n = positions.len();
        let mut interaction = vec![Vec2::ZERO; n];
        if n > 1 && !self.kernel.is_zero() {
            for i in 0..n {
                for j in (i + 1)..n {
                    let g = self.kernel.eval(positions[i] - positions[j]);
                    interaction[i] += g;
                    interaction[j] -= g;
                }
            }
        }
        let scale = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
        positions
            .iter()
            .zip(velocities)
            .zip(interaction)
            .map(|((&x, &v), int)| self.destination_force(x, v) + int * scale)
            .collect()
    }

    /// Mean-field force `𝐅(x, u) = (v^C/τ) D(x) + Σ G(x − y_c) u(y_c) dx dy`
    /// by the rectangular rule over the grid cells of `density`.
    pub fn macro_mean_force(&self, x: Vec2, grid: &Grid, density: &[f64]) -> Result<Vec2> {
        grid.check_len(density.len())?;
        let drive = self.destination_direction(x) * (self.comfort_speed / self.relaxation_time);
        if self.kernel.is_zero() {
            return Ok(drive);
        }
        let radius = self.truncation_radius();
        let area = grid.cell_area();
        let mut sum = Vec2::ZERO;
        for (k, &u) in density.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            let (i, j) = grid.coords(k);
            let d = x - grid.center(i, j);
            let r = d.norm();
            if r < ARRIVAL_RADIUS || r > radius {
                continue;
            }
            sum += self.kernel.eval(d) * (u * area);
        }
        Ok(drive + sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rect;
    use approx::assert_abs_diff_eq;

    fn params() -> ForceParams {
        ForceParams {
            comfort_speed: 1.0,
            relaxation_time: 1.0,
            destination: Vec2::new(100.0, 0.0),
            kernel: MorseKernel::default(),
            truncation_radius: None,
        }
    }

    #[test]
    fn destination_direction_examples() {
        let p = params();
        assert_eq!(p.destination_direction(Vec2::new(99.0, 0.0)), Vec2::new(1.0, 0.0));
        assert_eq!(p.destination_direction(Vec2::new(100.0, 1.0)), Vec2::new(0.0, -1.0));
        let d = p.destination_direction(Vec2::new(97.0, 4.0));
        assert_abs_diff_eq!(d.x, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(d.y, -0.8, epsilon = 1e-15);
        assert_eq!(p.destination_direction(Vec2::new(100.0, 0.0)), Vec2::ZERO);
        assert!(p.has_arrived(Vec2::new(100.0, 1e-10)));
    }

    #[test]
    fn kernel_examples() {
        let p = params();
        let g = p.interaction_kernel(Vec2::new(0.9, 0.0));
        assert_eq!(g, Vec2::ZERO);
        let g = p.interaction_kernel(Vec2::new(0.0, 0.9));
        assert_eq!(g.norm(), 0.0);
        // independent arithmetic: −2(e⁻¹ − e⁻²), −2(e^{0.5} − e)
        let e = std::f64::consts::E;
        let g = p.interaction_kernel(Vec2::new(1.9, 0.0));
        assert_abs_diff_eq!(g.x, -2.0 * (1.0 / e - 1.0 / (e * e)), epsilon = 1e-14);
        assert_abs_diff_eq!(g.x, -0.46509, epsilon = 1e-5);
        let g = p.interaction_kernel(Vec2::new(0.4, 0.0));
        assert_abs_diff_eq!(g.x, -2.0 * (e.sqrt() - e), epsilon = 1e-14);
        assert_abs_diff_eq!(g.x, 2.13912, epsilon = 1e-5);
        assert_eq!(g.y, 0.0);
        assert_eq!(p.interaction_kernel(Vec2::ZERO), Vec2::ZERO);
    }

    #[test]
    fn cutoff_radius_default() {
        let r = params().truncation_radius();
        assert_abs_diff_eq!(r, 0.9 + (2e8f64).ln(), epsilon = 1e-12);
        assert!(r > 20.0 && r < 20.1);
        let beyond = MorseKernel::default().eval(Vec2::new(r + 1e-6, 0.0)).norm();
        assert!(beyond < 1e-8);
    }

    #[test]
    fn single_pedestrian_at_equilibrium() {
        let p = params();
        let x = vec![Vec2::new(3.0, 0.5)];
        let v = vec![p.destination_direction(x[0]) * p.comfort_speed];
        let f = p.micro_force(0, &x, &v);
        assert_abs_diff_eq!(f.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_pair_has_opposite_interactions() {
        let p = ForceParams { comfort_speed: 1e-300, ..params() };
        let x = vec![Vec2::new(-0.3, 0.1), Vec2::new(0.3, -0.1)];
        let v = vec![Vec2::ZERO; 2];
        let f0 = p.micro_force(0, &x, &v) - p.destination_force(x[0], v[0]);
        let f1 = p.micro_force(1, &x, &v) - p.destination_force(x[1], v[1]);
        assert_eq!(f0, -f1);
        assert!(f0.norm() > 0.0);
    }

    #[test]
    fn middle_of_three_feels_no_interaction() {
        // hand sum: G(−0.9) + G(0.9 − 1.8) = 0 + 0, and generally G(−a) + G(a) = 0
        let p = ForceParams { comfort_speed: 1.0, destination: Vec2::new(0.9, 0.0), ..params() };
        let x = vec![Vec2::new(0.0, 0.0), Vec2::new(0.9, 0.0), Vec2::new(1.8, 0.0)];
        let v = vec![Vec2::ZERO; 3];
        // middle pedestrian sits on the destination → zero drive as well
        let f = p.micro_force(1, &x, &v);
        assert_eq!(f, Vec2::ZERO);
        let x = vec![Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.0)];
        let f = p.micro_force(1, &x, &v) - p.destination_force(x[1], v[1]);
        assert_abs_diff_eq!(f.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pairwise_matches_direct_sum() {
        let p = params();
        let x: Vec<Vec2> = (0..17).map(|k| Vec2::new((k as f64 * 0.37).sin() * 2.0, (k as f64 * 1.3).cos())).collect();
        let v: Vec<Vec2> = (0..17).map(|k| Vec2::new(0.1 * k as f64, -0.05)).collect();
        let all = p.micro_forces(&x, &v);
        for i in 0..x.len() {
            let f = p.micro_force(i, &x, &v);
            assert_abs_diff_eq!(f.x, all[i].x, epsilon = 1e-12);
            assert_abs_diff_eq!(f.y, all[i].y, epsilon = 1e-12);
        }
    }

    #[test]
    fn macro_force_zero_density_and_zero_kernel_ring() {
        let p = params();
        let grid = Grid::new(Rect::new(-2.0, 2.0, -2.0, 2.0), 0.1, 0.1, &[]).unwrap();
        let x = Vec2::new(0.05, 0.05);
        let zero = vec![0.0; grid.len()];
        let f = p.macro_mean_force(x, &grid, &zero).unwrap();
        assert_eq!(f, p.destination_direction(x));

        // one unit-mass cell at distance exactly 0.9 along x
        let mut rho = zero.clone();
        let k = grid.index(29, 20);
        assert_abs_diff_eq!((grid.center(29, 20) - Vec2::new(0.95, 0.05)).norm(), 0.0, epsilon = 1e-12);
        rho[k] = 1.0 / grid.cell_area();
        let x = Vec2::new(0.05, 0.05);
        let f = p.macro_mean_force(x, &grid, &rho).unwrap() - p.destination_direction(x);
        assert_abs_diff_eq!(f.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.y, 0.0, epsilon = 1e-12);

        assert!(p.macro_mean_force(x, &grid, &rho[1..]).is_err());
    }

    #[test]
    fn uniform_disc_cancels() {
        let p = params();
        let grid = Grid::new(Rect::new(-2.0, 2.0, -2.0, 2.0), 0.05, 0.05, &[]).unwrap();
        let x = grid.center(40, 40);
        let rho: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                let (a, b) = (i as i64 - 40, j as i64 - 40);
                if a * a + b * b <= 900 { 0.3 } else { 0.0 }
            })
            .collect();
        let f = p.macro_mean_force(x, &grid, &rho).unwrap() - p.destination_direction(x);
        assert!(f.norm() < 1e-8, "{f:?}");
    }
}
