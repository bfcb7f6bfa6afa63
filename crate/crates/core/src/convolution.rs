//! Discrete 2-D convolution of a cell field with a vector-valued kernel,
//! evaluated through zero-padded FFTs.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::{Grid, Vec2};

/// Precomputed spectrum of `K(d)` for all cell offsets `d = (di dx, dj dy)`
/// with `|di| < nx`, `|dj| < ny`.
///
/// `apply(m)[t] = Σ_s K(c_t − c_s) m[s]` over all cells `s`.
pub(crate) struct KernelConvolution {
    nx: usize,
    ny: usize,
    px: usize,
    py: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    spectrum_x: Vec<Complex<f64>>,
    spectrum_y: Vec<Complex<f64>>,
}

impl std::fmt::Debug for KernelConvolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelConvolution").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl KernelConvolution {
    pub(crate) fn new(grid: &Grid, kernel: impl Fn(Vec2) -> Vec2) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let (px, py) = (2 * nx, 2 * ny);
        let mut planner = FftPlanner::new();
        let mut conv = Self {
            nx,
            ny,
            px,
            py,
            row_fwd: planner.plan_fft_forward(px),
            row_inv: planner.plan_fft_inverse(px),
            col_fwd: planner.plan_fft_forward(py),
            col_inv: planner.plan_fft_inverse(py),
            spectrum_x: vec![Complex::default(); px * py],
            spectrum_y: vec![Complex::default(); px * py],
        };
        let (nxi, nyi) = (nx as isize, ny as isize);
        for dj in (1 - nyi)..nyi {
            for di in (1 - nxi)..nxi {
                let g = kernel(Vec2::new(di as f64 * grid.dx(), dj as f64 * grid.dy()));
                let k = conv.wrap(di, dj);
                conv.spectrum_x[k] = Complex::new(g.x, 0.0);
                conv.spectrum_y[k] = Complex::new(g.y, 0.0);
            }
        }
        let mut sx = std::mem::take(&mut conv.spectrum_x);
        let mut sy = std::mem::take(&mut conv.spectrum_y);
        conv.transform(&mut sx, true);
        conv.transform(&mut sy, true);
        conv.spectrum_x = sx;
        conv.spectrum_y = sy;
        conv
    }

    fn wrap(&self, di: isize, dj: isize) -> usize {
        let i = di.rem_euclid(self.px as isize) as usize;
        let j = dj.rem_euclid(self.py as isize) as usize;
        j * self.px + i
    }

    fn transform(&self, data: &mut [Complex<f64>], forward: bool) {
        let (row, col) = if forward { (&self.row_fwd, &self.col_fwd) } else { (&self.row_inv, &self.col_inv) };
        for r in data.chunks_exact_mut(self.px) {
            row.process(r);
        }
        let mut column = vec![Complex::default(); self.py];
        for i in 0..self.px {
            for j in 0..self.py {
                column[j] = data[j * self.px + i];
            }
            col.process(&mut column);
            for j in 0..self.py {
                data[j * self.px + i] = column[j];
            }
        }
    }

    /// Convolves the cell weights `m` (length `nx · ny`) with the kernel.
    pub(crate) fn apply(&self, m: &[f64]) -> Vec<Vec2> {
        let mut data = vec![Complex::default(); self.px * self.py];
        for j in 0..self.ny {
            for i in 0..self.nx {
                data[j * self.px + i] = Complex::new(m[j * self.nx + i], 0.0);
            }
        }
        self.transform(&mut data, true);
        let mut gx: Vec<Complex<f64>> = data.iter().zip(&self.spectrum_x).map(|(a, b)| a * b).collect();
        let mut gy: Vec<Complex<f64>> = data.iter().zip(&self.spectrum_y).map(|(a, b)| a * b).collect();
        self.transform(&mut gx, false);
        self.transform(&mut gy, false);
        let scale = 1.0 / (self.px * self.py) as f64;
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = j * self.px + i;
                out.push(Vec2::new(gx[k].re * scale, gy[k].re * scale));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rect;

    #[test]
    fn matches_direct_sum() {
        let grid = Grid::new(Rect::new(0.0, 1.4, 0.0, 0.6), 0.1, 0.1, &[]).unwrap();
        let kernel = |d: Vec2| Vec2::new(d.x * (-d.norm()).exp(), d.y.sin());
        let conv = KernelConvolution::new(&grid, kernel);
        let m: Vec<f64> = (0..grid.len()).map(|k| ((k * 7919) % 13) as f64 / 13.0).collect();
        let fast = conv.apply(&m);
        for t in 0..grid.len() {
            let (ti, tj) = grid.coords(t);
            let mut direct = Vec2::ZERO;
            for (s, &w) in m.iter().enumerate() {
                let (si, sj) = grid.coords(s);
                let d = Vec2::new((ti as f64 - si as f64) * 0.1, (tj as f64 - sj as f64) * 0.1);
                direct += kernel(d) * w;
            }
            assert!((fast[t] - direct).norm() < 1e-12, "{t}: {:?} vs {:?}", fast[t], direct);
        }
    }
}
