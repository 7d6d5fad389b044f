//! Tabulated radial functions with natural cubic spline interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A radially symmetric function sampled on `0 ≤ s₀ < s₁ < … < s_N`.
///
/// Between samples the profile is the natural cubic spline through the data;
/// beyond the last abscissa it is zero. Below the first abscissa it is the
/// first stored value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    curvature: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(domain(format!(
                "profile grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(domain("profile needs at least two samples"));
        }
        if !(grid[0] >= 0.0) {
            return Err(domain("profile abscissae must be nonnegative"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("profile abscissae must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("profile values must be finite"));
        }
        let curvature = natural_spline_curvature(&grid, &values);
        Ok(Self { grid, values, curvature })
    }

    /// Sample `f` on `grid`.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Vec<f64>, f: F) -> Result<Self> {
        let values = grid.iter().map(|&s| f(s)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Last abscissa; the profile vanishes beyond it.
    pub fn support(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.grid.len();
        if s > self.grid[n - 1] {
            return 0.0;
        }
        if s <= self.grid[0] {
            return self.values[0];
        }
        // Index of the interval [grid[i], grid[i+1]] containing s.
        let i = match self.grid.binary_search_by(|g| g.total_cmp(&s)) {
            Ok(k) => return self.values[k],
            Err(k) => k - 1,
        };
        let h = self.grid[i + 1] - self.grid[i];
        let a = (self.grid[i + 1] - s) / h;
        let b = 1.0 - a;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.curvature[i] + (b * b * b - b) * self.curvature[i + 1]) * h * h / 6.0
    }
}

/// Second derivatives of the natural cubic spline, by the tridiagonal
/// (Thomas) solve.
fn natural_spline_curvature(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    // Forward elimination on rows 1..n-2; the sub-diagonal of row i is h_{i-1}.
    for i in 2..n - 1 {
        let lower = x[i] - x[i - 1];
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        let next = if i + 1 < n - 1 { m[i + 1] } else { 0.0 };
        m[i] = (rhs[i] - upper[i] * next) / diag[i];
    }
    m
}

/// `count` points geometrically spaced in `[first, last]`, preceded by 0.
pub fn geometric_grid_with_origin(first: f64, last: f64, count: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(count + 1);
    grid.push(0.0);
    let ratio = (last / first).powf(1.0 / (count - 1) as f64);
    for i in 0..count {
        grid.push(if i + 1 == count { last } else { first * ratio.powi(i as i32) });
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_vanishes_beyond() {
        let grid: Vec<f64> = (0..20).map(|i| 0.1 * i as f64 + 0.05 * (i as f64).sin()).collect();
        let p = RadialProfile::from_fn(grid.clone(), |s| (-s).exp()).unwrap();
        for &g in &grid {
            assert_eq!(p.eval(g), (-g).exp());
        }
        assert_eq!(p.eval(p.support() + 1e-12), 0.0);
    }

    #[test]
    fn cubic_accuracy_on_smooth_function() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.02).collect();
        let p = RadialProfile::from_fn(grid, |s| s.sin()).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..400 {
            let s = 0.3 + i as f64 * 0.0087;
            worst = worst.max((p.eval(s) - s.sin()).abs());
        }
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn reproduces_straight_lines() {
        let grid = geometric_grid_with_origin(0.01, 5.0, 40);
        let p = RadialProfile::from_fn(grid, |s| 2.0 - 3.0 * s).unwrap();
        for i in 0..100 {
            let s = 0.049 * i as f64;
            assert!((p.eval(s) - (2.0 - 3.0 * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_malformed_grids() {
        assert!(RadialProfile::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(RadialProfile::new(vec![-1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn geometric_grid_shape() {
        let g = geometric_grid_with_origin(1e-3, 10.0, 50);
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1e-3);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
