//! Position-dependent switching rates `λ(r, x)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Rect, Result, Vec2};

/// Pedestrian status: walking (`r = 1`) or stopped (`r = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Stopped = 0,
    Walking = 1,
}

impl Status {
    pub fn flipped(self) -> Self {
        match self {
            Status::Stopped => Status::Walking,
            Status::Walking => Status::Stopped,
        }
    }

    pub fn is_walking(self) -> bool {
        self == Status::Walking
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Closed disc `‖x − center‖ ≤ radius`.
    Disc { center: Vec2, radius: f64 },
    /// Vertical slab `x₁ ∈ [x0, x1]`.
    Slab { x: [f64; 2] },
    Rect(Rect),
}

impl Region {
    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Region::Disc { center, radius } => (p - *center).norm() <= *radius,
            Region::Slab { x } => p.x >= x[0] && p.x <= x[1],
            Region::Rect(r) => r.contains(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePiece {
    #[serde(flatten)]
    pub region: Region,
    pub value: f64,
}

/// Piecewise-constant rate field: the first region containing `x` decides,
/// otherwise `default` applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialRate {
    pub default: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<RatePiece>,
}

impl SpatialRate {
    pub fn constant(value: f64) -> Self {
        Self { default: value, regions: Vec::new() }
    }

    pub fn with_region(mut self, region: Region, value: f64) -> Self {
        self.regions.push(RatePiece { region, value });
        self
    }

    #[inline]
    pub fn at(&self, p: Vec2) -> f64 {
        self.regions
            .iter()
            .find(|piece| piece.region.contains(p))
            .map_or(self.default, |piece| piece.value)
    }

    pub fn sup(&self) -> f64 {
        self.regions.iter().map(|p| p.value).fold(self.default, f64::max)
    }

    fn validate(&self, which: &str) -> Result<()> {
        let values = std::iter::once(self.default).chain(self.regions.iter().map(|p| p.value));
        for v in values {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{which} rate must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `λ(0, ·)` (stopped → walking) and `λ(1, ·)` (walking → stopped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    pub stopped: SpatialRate,
    pub walking: SpatialRate,
}

impl RateFunction {
    pub fn new(stopped: SpatialRate, walking: SpatialRate) -> Self {
        Self { stopped, walking }
    }

    pub fn homogeneous(stopped: f64, walking: f64) -> Self {
        Self::new(SpatialRate::constant(stopped), SpatialRate::constant(walking))
    }

    /// No switching at all.
    pub fn zero() -> Self {
        Self::homogeneous(0.0, 0.0)
    }

    #[inline]
    pub fn rate(&self, status: Status, p: Vec2) -> f64 {
        match status {
            Status::Stopped => self.stopped.at(p),
            Status::Walking => self.walking.at(p),
        }
    }

    /// `‖λ‖_∞` over both statuses.
    pub fn sup_bound(&self) -> f64 {
        self.stopped.sup().max(self.walking.sup())
    }

    pub fn validate(&self) -> Result<()> {
        self.stopped.validate("stopped")?;
        self.walking.validate("walking")
    }

    /// Fails unless `dt · ‖λ‖_∞ ≤ 1`.
    pub fn check_step(&self, dt: f64) -> Result<()> {
        let sup = self.sup_bound();
        let product = dt * sup;
        if !(dt > 0.0 && dt.is_finite()) || product > 1.0 {
            return Err(Error::StepBound { dt, bound: 1.0 / sup, product });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> RateFunction {
        let disc = Region::Disc { center: Vec2::ZERO, radius: 0.5 };
        RateFunction::new(
            SpatialRate::constant(10.0).with_region(disc, 6.0),
            SpatialRate::constant(4.0).with_region(disc, 5.0),
        )
    }

    #[test]
    fn piecewise_lookup() {
        let r = example1();
        assert_eq!(r.rate(Status::Stopped, Vec2::new(0.0, 0.5)), 6.0);
        assert_eq!(r.rate(Status::Stopped, Vec2::new(0.0, 0.51)), 10.0);
        assert_eq!(r.rate(Status::Walking, Vec2::new(0.3, 0.3)), 5.0);
        assert_eq!(r.rate(Status::Walking, Vec2::new(-2.0, 0.0)), 4.0);
        assert_eq!(r.sup_bound(), 10.0);
    }

    #[test]
    fn slab_region() {
        let slab = Region::Slab { x: [-1.0, 1.0] };
        let r = SpatialRate::constant(0.01).with_region(slab, 1.0);
        assert_eq!(r.at(Vec2::new(1.0, 3.0)), 1.0);
        assert_eq!(r.at(Vec2::new(1.0001, 0.0)), 0.01);
    }

    #[test]
    fn step_bound() {
        let r = example1();
        assert!(r.check_step(0.1).is_ok());
        assert!(r.check_step(0.01).is_ok());
        let err = r.check_step(0.15).unwrap_err();
        assert!(matches!(err, Error::StepBound { product, .. } if (product - 1.5).abs() < 1e-12));
        assert!(RateFunction::zero().check_step(1e6).is_ok());
    }

    #[test]
    fn negative_rates_rejected() {
        let r = RateFunction::homogeneous(-1.0, 2.0);
        assert!(r.validate().is_err());
    }

    #[test]
    fn serde_shape() {
        let r = example1();
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"disc\""), "{s}");
        let back: RateFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
