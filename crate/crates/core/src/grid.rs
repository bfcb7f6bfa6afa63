//! Uniform cell grid over the recording window.

use crate::{Error, Rect, Result, Vec2, WalkableDomain};

/// Uniform grid of `nx × ny` cells `Q_ij` of size `dx × dy`.
///
/// Cells are stored row by row: index `j * nx + i`, `i` along x.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    origin: Vec2,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    mask: Vec<bool>,
}

impl Grid {
    /// Grid over `window`. Cells whose center lies in `obstacles` are masked.
    pub fn new(window: Rect, dx: f64, dy: f64, obstacles: &[Rect]) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0 && dy.is_finite() && dy > 0.0) {
            return Err(Error::Config(format!("grid spacing must be > 0, got dx = {dx}, dy = {dy}")));
        }
        let nx = cells_along(window.x, dx, "x")?;
        let ny = cells_along(window.y, dy, "y")?;
        let origin = Vec2::new(window.x[0], window.y[0]);
        let mut grid = Self { origin, dx, dy, nx, ny, mask: vec![false; nx * ny] };
        for j in 0..ny {
            for i in 0..nx {
                let c = grid.center(i, j);
                grid.mask[j * nx + i] = obstacles.iter().any(|ob| ob.contains(c));
            }
        }
        Ok(grid)
    }

    /// Grid over a domain's recording window with its obstacles masked.
    pub fn for_domain(domain: &WalkableDomain, dx: f64, dy: f64) -> Result<Self> {
        Self::new(domain.bounds(), dx, dy, domain.obstacles())
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (i as f64 + 0.5) * self.dx,
            self.origin.y + (j as f64 + 0.5) * self.dy,
        )
    }

    pub fn cell_rect(&self, i: usize, j: usize) -> Rect {
        let x0 = self.origin.x + i as f64 * self.dx;
        let y0 = self.origin.y + j as f64 * self.dy;
        Rect::new(x0, x0 + self.dx, y0, y0 + self.dy)
    }

    #[inline]
    pub fn is_masked(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Cell containing `p` under half-open `[x_i, x_i + dx) × [y_j, y_j + dy)`
    /// assignment, or `None` outside the window. The closing upper edges of
    /// the window are assigned to the last row/column.
    pub fn locate(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.dx;
        let fy = (p.y - self.origin.y) / self.dy;
        let i = cell_of(fx, self.nx)?;
        let j = cell_of(fy, self.ny)?;
        Some((i, j))
    }

    /// Sum of `values` times the cell area.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch(format!(
                "field has {len} cells but grid has {} ({} × {})",
                self.len(),
                self.nx,
                self.ny
            )));
        }
        Ok(())
    }
}

fn cells_along(range: [f64; 2], h: f64, axis: &str) -> Result<usize> {
    let width = range[1] - range[0];
    let n = (width / h).round();
    if n < 1.0 || ((n * h) - width).abs() > 1e-9 * width.max(1.0) {
        return Err(Error::Config(format!(
            "window {axis}-width {width} is not an integer multiple of the spacing {h}"
        )));
    }
    Ok(n as usize)
}

fn cell_of(f: f64, n: usize) -> Option<usize> {
    if !(f >= 0.0) || f > n as f64 {
        return None;
    }
    Some((f.floor() as usize).min(n - 1))
}
