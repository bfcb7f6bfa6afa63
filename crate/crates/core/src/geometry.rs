//! Walkable corridor geometry and the norm-preserving boundary velocity.
//!
//! The domain is a horizontal strip bounded by two walls, optionally closed at
//! both ends, with axis-aligned rectangular obstacles cut out of it. Points on
//! the boundary belong to the walkable set.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec2};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x: [x0, x1], y: [y0, y1] }
    }

    pub fn area(&self) -> f64 {
        (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x[0] && p.x <= self.x[1] && p.y >= self.y[0] && p.y <= self.y[1]
    }

    pub fn contains_strictly(&self, p: Vec2) -> bool {
        p.x > self.x[0] && p.x < self.x[1] && p.y > self.y[0] && p.y < self.y[1]
    }

    /// Area of the intersection of two rectangles.
    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let w = (self.x[1].min(other.x[1]) - self.x[0].max(other.x[0])).max(0.0);
        let h = (self.y[1].min(other.y[1]) - self.y[0].max(other.y[0])).max(0.0);
        w * h
    }

    fn is_valid(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
            && self.x[0] < self.x[1]
            && self.y[0] < self.y[1]
    }

    fn intersects_open(&self, other: &Rect) -> bool {
        self.x[0] < other.x[1] && other.x[0] < self.x[1] && self.y[0] < other.y[1] && other.y[0] < self.y[1]
    }
}

/// Shape of the blending function `J` on `[0, 1]`; both satisfy `J(0) = 0`, `J(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// `3s² − 2s³`
    #[default]
    Smoothstep,
    /// `6s⁵ − 15s⁴ + 10s³`
    Smootherstep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionParams {
    /// Width of the comfort zone next to walls, in meters.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub smoothing: Smoothing,
}

fn default_epsilon() -> f64 {
    0.1
}

impl Default for ReflectionParams {
    fn default() -> Self {
        Self { epsilon: default_epsilon(), smoothing: Smoothing::default() }
    }
}

impl ReflectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("reflection epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Blending weight `J(s)`, clamped so that `J(s) = 1` for `s ≥ 1`.
    pub fn blend(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self.smoothing {
            Smoothing::Smoothstep => s * s * (3.0 - 2.0 * s),
            Smoothing::Smootherstep => s * s * s * (s * (6.0 * s - 15.0) + 10.0),
        }
    }
}

/// Nearest-boundary information at a walkable point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryQuery {
    pub distance: f64,
    /// Unit normal pointing out of the walkable region.
    pub normal: Vec2,
    /// Index of the nearest boundary element in the fixed enumeration order.
    pub element: usize,
}

impl BoundaryQuery {
    /// `n⊥ = (−n₂, n₁)`.
    pub fn tangent(&self) -> Vec2 {
        self.normal.perp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Edge {
    Horizontal { y: f64, normal: Vec2 },
    Vertical { x: f64, normal: Vec2 },
    Segment { a: Vec2, b: Vec2, normal: Vec2 },
}

impl Edge {
    fn distance(&self, p: Vec2) -> f64 {
        match *self {
            Edge::Horizontal { y, .. } => (p.y - y).abs(),
            Edge::Vertical { x, .. } => (p.x - x).abs(),
            Edge::Segment { a, b, .. } => {
                let ab = b - a;
                let t = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (p - (a + ab * t)).norm()
            }
        }
    }

    /// Signed offset of `p` from the edge's supporting line, measured against the normal.
    fn line_offset(&self, p: Vec2) -> f64 {
        match *self {
            Edge::Horizontal { y, normal } => (Vec2::new(p.x, y) - p).dot(normal),
            Edge::Vertical { x, normal } => (Vec2::new(x, p.y) - p).dot(normal),
            Edge::Segment { a, normal, .. } => (a - p).dot(normal),
        }
    }

    fn normal(&self) -> Vec2 {
        match *self {
            Edge::Horizontal { normal, .. } | Edge::Vertical { normal, .. } | Edge::Segment { normal, .. } => normal,
        }
    }
}

/// Serialised form of [`WalkableDomain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDef {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    #[serde(default)]
    pub obstacles: Vec<Rect>,
    #[serde(default)]
    pub closed_ends: bool,
}

/// Corridor `Γ`: the strip `ℝ × [y0, y1]` (or `[x0, x1] × [y0, y1]` when
/// closed) minus the interiors of the obstacles.
///
/// `x_range` is the recording window; it only acts as a wall when
/// `closed_ends` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainDef", into = "DomainDef")]
pub struct WalkableDomain {
    def: DomainDef,
    edges: Vec<Edge>,
}

impl TryFrom<DomainDef> for WalkableDomain {
    type Error = Error;

    fn try_from(def: DomainDef) -> Result<Self> {
        Self::new(def.x_range, def.y_range, def.obstacles, def.closed_ends)
    }
}

impl From<WalkableDomain> for DomainDef {
    fn from(d: WalkableDomain) -> Self {
        d.def
    }
}

impl WalkableDomain {
    pub fn new(x_range: [f64; 2], y_range: [f64; 2], obstacles: Vec<Rect>, closed_ends: bool) -> Result<Self> {
        let def = DomainDef { x_range, y_range, obstacles, closed_ends };
        validate(&def)?;
        let edges = build_edges(&def);
        Ok(Self { def, edges })
    }

    /// Open strip `ℝ × [y0, y1]` with window `x_range` and no obstacles.
    pub fn strip(x_range: [f64; 2], y_range: [f64; 2]) -> Result<Self> {
        Self::new(x_range, y_range, Vec::new(), false)
    }

    pub fn x_range(&self) -> [f64; 2] {
        self.def.x_range
    }

    pub fn y_range(&self) -> [f64; 2] {
        self.def.y_range
    }

    pub fn obstacles(&self) -> &[Rect] {
        &self.def.obstacles
    }

    pub fn closed_ends(&self) -> bool {
        self.def.closed_ends
    }

    pub fn bounds(&self) -> Rect {
        Rect { x: self.def.x_range, y: self.def.y_range }
    }

    fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, p: Vec2) -> bool {
        if !p.is_finite() || p.y < self.def.y_range[0] || p.y > self.def.y_range[1] {
            return false;
        }
        if self.def.closed_ends && (p.x < self.def.x_range[0] || p.x > self.def.x_range[1]) {
            return false;
        }
        !self.def.obstacles.iter().any(|ob| ob.contains_strictly(p))
    }

    /// Nearest boundary element, its distance and outward normal.
    ///
    /// Ties between elements go to the one whose supporting line is farther
    /// away (this resolves obstacle corners toward the face being approached),
    /// then to the lowest index: walls first, obstacles in declaration order.
    pub fn query(&self, p: Vec2) -> Result<BoundaryQuery> {
        if !self.contains(p) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        let mut best: Option<(f64, f64, usize)> = None;
        for (k, edge) in self.edges().iter().enumerate() {
            let d = edge.distance(p);
            let offset = edge.line_offset(p);
            let better = match best {
                None => true,
                Some((bd, boff, _)) => d < bd || (d == bd && offset > boff),
            };
            if better {
                best = Some((d, offset, k));
            }
        }
        let (distance, _, element) = best.expect("domain has at least two walls");
        Ok(BoundaryQuery { distance, normal: self.edges()[element].normal(), element })
    }

    pub fn distance_to_boundary(&self, p: Vec2) -> Result<f64> {
        self.query(p).map(|q| q.distance)
    }

    pub fn outward_normal(&self, p: Vec2) -> Result<Vec2> {
        self.query(p).map(|q| q.normal)
    }

    /// Boundary velocity `V(x, v)`: inward velocities pass through, others are
    /// blended toward the wall tangent and rescaled to the original speed.
    pub fn reflect_velocity(&self, params: &ReflectionParams, p: Vec2, v: Vec2) -> Result<Vec2> {
        let q = self.query(p)?;
        Ok(reflect_with(params, &q, v))
    }

    /// Nearest walkable point to `p` (identity for walkable points).
    pub fn project(&self, p: Vec2) -> Vec2 {
        let [y_lo, y_hi] = self.def.y_range;
        let [x_lo, x_hi] = self.def.x_range;
        let mut q = Vec2::new(p.x, p.y.clamp(y_lo, y_hi));
        if self.def.closed_ends {
            q.x = q.x.clamp(x_lo, x_hi);
        }
        if let Some(ob) = self.def.obstacles.iter().find(|ob| ob.contains_strictly(q)) {
            let closed = self.def.closed_ends;
            // Faces lying on an outer wall are not exits.
            let exits = [
                (!(closed && ob.x[0] <= x_lo), q.x - ob.x[0], Vec2::new(ob.x[0], q.y)),
                (!(closed && ob.x[1] >= x_hi), ob.x[1] - q.x, Vec2::new(ob.x[1], q.y)),
                (ob.y[0] > y_lo, q.y - ob.y[0], Vec2::new(q.x, ob.y[0])),
                (ob.y[1] < y_hi, ob.y[1] - q.y, Vec2::new(q.x, ob.y[1])),
            ];
            if let Some(exit) = exits
                .iter()
                .filter(|e| e.0)
                .min_by(|a, b| a.1.total_cmp(&b.1))
            {
                q = exit.2;
            }
        }
        q
    }
}

fn validate(def: &DomainDef) -> Result<()> {
    if !(Rect { x: def.x_range, y: def.y_range }).is_valid() {
        return Err(Error::Config(format!(
            "domain bounds must be finite and increasing, got x {:?}, y {:?}",
            def.x_range, def.y_range
        )));
    }
    let bounds = Rect { x: def.x_range, y: def.y_range };
    for (k, ob) in def.obstacles.iter().enumerate() {
        if !ob.is_valid() {
            return Err(Error::Config(format!("obstacle {k} is degenerate: {ob:?}")));
        }
        if ob.y[0] < bounds.y[0] || ob.y[1] > bounds.y[1] || ob.x[0] < bounds.x[0] || ob.x[1] > bounds.x[1] {
            return Err(Error::Config(format!("obstacle {k} is not inside the corridor window")));
        }
        for (l, other) in def.obstacles.iter().enumerate().skip(k + 1) {
            if ob.intersects_open(other) {
                return Err(Error::Config(format!("obstacles {k} and {l} overlap")));
            }
        }
    }
    Ok(())
}

fn build_edges(def: &DomainDef) -> Vec<Edge> {
    let [x0, x1] = def.x_range;
    let [y0, y1] = def.y_range;
    let mut edges = vec![
        Edge::Horizontal { y: y0, normal: Vec2::new(0.0, -1.0) },
        Edge::Horizontal { y: y1, normal: Vec2::new(0.0, 1.0) },
    ];
    if def.closed_ends {
        edges.push(Edge::Vertical { x: x0, normal: Vec2::new(-1.0, 0.0) });
        edges.push(Edge::Vertical { x: x1, normal: Vec2::new(1.0, 0.0) });
    }
    for ob in &def.obstacles {
        let (a, b, c, d) = (
            Vec2::new(ob.x[0], ob.y[0]),
            Vec2::new(ob.x[1], ob.y[0]),
            Vec2::new(ob.x[1], ob.y[1]),
            Vec2::new(ob.x[0], ob.y[1]),
        );
        // Normals point into the obstacle, i.e. out of the walkable set.
        edges.push(Edge::Segment { a: d, b: a, normal: Vec2::new(1.0, 0.0) });
        edges.push(Edge::Segment { a: b, b: c, normal: Vec2::new(-1.0, 0.0) });
        edges.push(Edge::Segment { a, b, normal: Vec2::new(0.0, 1.0) });
        edges.push(Edge::Segment { a: c, b: d, normal: Vec2::new(0.0, -1.0) });
    }
    edges
}

/// `V(x, v)` given a precomputed boundary query at `x`.
pub fn reflect_with(params: &ReflectionParams, q: &BoundaryQuery, v: Vec2) -> Vec2 {
    let n = q.normal;
    if v.dot(n) < 0.0 {
        return v;
    }
    let speed = v.norm();
    if speed == 0.0 {
        return Vec2::ZERO;
    }
    let t = q.tangent();
    let sign = if v.dot(t) < 0.0 { -1.0 } else { 1.0 };
    let tangential = t * (speed * sign);
    let j = params.blend(q.distance / params.epsilon);
    if j >= 1.0 {
        return v;
    }
    let blended = tangential + (v - tangential) * j;
    let bn = blended.norm();
    if bn == 0.0 {
        return tangential;
    }
    blended * (speed / bn)
}
