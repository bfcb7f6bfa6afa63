//! Comparison measures between microscopic and macroscopic densities.

use crate::{Error, Grid, Result};

/// `(dx dy Σ |a − b|^p)^{1/p}` over all cells.
pub fn lp_error(grid: &Grid, a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    grid.check_len(a.len())?;
    grid.check_len(b.len())?;
    if !(p >= 1.0) {
        return Err(Error::Config(format!("L^p exponent must be >= 1, got {p}")));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum();
    Ok((grid.cell_area() * sum).powf(1.0 / p))
}

/// Mass located at first coordinate `≤ cut`. Cells straddling the cut
/// contribute the fraction of their width left of it.
pub fn mass_balance(grid: &Grid, density: &[f64], cut: f64) -> f64 {
    let x0 = grid.origin().x;
    let dx = grid.dx();
    let mut column_fraction = vec![0.0; grid.nx()];
    for (i, w) in column_fraction.iter_mut().enumerate() {
        let left = x0 + i as f64 * dx;
        *w = ((cut - left) / dx).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for (k, &u) in density.iter().enumerate() {
        let (i, _) = grid.coords(k);
        sum += u * column_fraction[i];
    }
    sum * grid.cell_area()
}

/// First time at which the crossed fraction `1 − MB` reaches `threshold`,
/// linearly interpolated between samples; `None` if never reached.
pub fn crossing_time(times: &[f64], mass_balance: &[f64], threshold: f64) -> Option<f64> {
    let crossed = |k: usize| 1.0 - mass_balance[k];
    let k = (0..times.len().min(mass_balance.len())).find(|&k| crossed(k) >= threshold)?;
    if k == 0 {
        return Some(times[0]);
    }
    let (c0, c1) = (crossed(k - 1), crossed(k));
    let (t0, t1) = (times[k - 1], times[k]);
    if c1 == c0 {
        return Some(t1);
    }
    Some(t0 + (threshold - c0) / (c1 - c0) * (t1 - t0))
}

/// Summary of one micro/macro comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub cuts: Vec<f64>,
    /// `[snapshot][cut]`
    pub micro_mass_balance: Vec<Vec<f64>>,
    pub macro_mass_balance: Vec<Vec<f64>>,
    /// Mean over replicates that crossed, per cut, and how many did.
    pub micro_crossing: Vec<(Option<f64>, usize)>,
    pub replicates: usize,
    /// Macro crossing time at the configured threshold, per cut.
    pub macro_crossing: Vec<Option<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rect;

    fn grid() -> Grid {
        Grid::new(Rect::new(-4.0, 6.0, -1.0, 1.0), 0.05, 0.05, &[]).unwrap()
    }

    #[test]
    fn lp_identical_is_zero() {
        let g = grid();
        let a: Vec<f64> = (0..g.len()).map(|k| (k % 7) as f64).collect();
        assert_eq!(lp_error(&g, &a, &a, 1.0).unwrap(), 0.0);
        assert_eq!(lp_error(&g, &a, &a, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn lp_constant_offset_on_window() {
        // 0.25 m² window differing by c = 2: L¹ = 0.5, L² = sqrt(0.25 · 4) = 1
        let g = Grid::new(Rect::new(0.0, 0.5, 0.0, 0.5), 0.05, 0.05, &[]).unwrap();
        let a = vec![1.0; g.len()];
        let b = vec![3.0; g.len()];
        assert!((lp_error(&g, &a, &b, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((lp_error(&g, &a, &b, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_rejects_mismatch_and_bad_exponent() {
        let g = grid();
        let a = vec![0.0; g.len()];
        assert!(matches!(lp_error(&g, &a, &a[1..], 1.0), Err(Error::GridMismatch(_))));
        assert!(lp_error(&g, &a, &a, 0.5).is_err());
    }

    fn block(g: &Grid, r: Rect, value: f64) -> Vec<f64> {
        (0..g.len())
            .map(|k| {
                let (i, j) = g.coords(k);
                value * g.cell_rect(i, j).overlap_area(&r) / g.cell_area()
            })
            .collect()
    }

    #[test]
    fn mass_balance_examples() {
        let g = grid();
        let rho = block(&g, Rect::new(-2.5, -1.0, -0.5, 0.5), 2.0 / 3.0);
        assert!((mass_balance(&g, &rho, 0.0) - 1.0).abs() < 1e-12);
        assert_eq!(mass_balance(&g, &rho, -10.0), 0.0);
        let rho = block(&g, Rect::new(-2.0, -1.0, -1.0, 1.0), 0.5);
        assert!((mass_balance(&g, &rho, -1.5) - 0.5).abs() < 1e-12);
        // straddling cut: half a column of width 0.05 at x = -1.525
        assert!((mass_balance(&g, &rho, -1.525) - 0.475).abs() < 1e-12);
        assert!((mass_balance(&g, &rho, 100.0) - g.integrate(&rho)).abs() < 1e-12);
    }

    #[test]
    fn crossing_time_cases() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mb = [1.0, 1.0, 1.0, 0.0, 0.0];
        assert_eq!(crossing_time(&t, &mb, 0.0), Some(0.0));
        assert_eq!(crossing_time(&t, &mb, 1.0), Some(3.0));
        assert_eq!(crossing_time(&t, &mb, 0.5), Some(2.5));
        let never = [1.0, 0.9, 0.8, 0.7, 0.6];
        assert_eq!(crossing_time(&t, &never, 0.999), None);
        let ramp = [1.0, 0.75, 0.5, 0.25, 0.0];
        assert!((crossing_time(&t, &ramp, 0.6).unwrap() - 2.4).abs() < 1e-12);
    }
}
