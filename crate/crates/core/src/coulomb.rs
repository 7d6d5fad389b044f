//! Decomposition of the Coulomb potential into overlaps of balls,
//!
//! `1/s = (1/π) ∫₀^∞ r^{-5} J_r(s) dr`,
//!
//! where `J_r(s)` is the volume of the intersection of two radius-`r` balls
//! whose centres are `s` apart. Splitting the radius integral at `R` gives a
//! short-range part `V_{<R}` (supported in `s < 2R`) and a bounded long-range
//! part `V_{>R}` with a nonnegative Fourier transform.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{domain, Result};
use crate::profile::RadialProfile;
use crate::quadrature::Integrator;
use crate::report::SweepReport;

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("radius must be positive, got {r}")))
    }
}

fn check_distance(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("distance must be nonnegative, got {s}")))
    }
}

/// Lens volume `J_r(s) = (π/12)(2r − s)²(4r + s)` for `s ≤ 2r`, else 0.
pub fn ball_overlap(r: f64, s: f64) -> Result<f64> {
    check_radius(r)?;
    check_distance(s)?;
    Ok(lens_volume(r, s))
}

#[inline]
fn lens_volume(r: f64, s: f64) -> f64 {
    if s >= 2.0 * r {
        0.0
    } else {
        let d = 2.0 * r - s;
        PI / 12.0 * d * d * (4.0 * r + s)
    }
}

/// `V_{>R}(s) = (1/π) ∫_R^∞ r^{-5} J_r(s) dr`.
///
/// Equals `4/(3R) − s/(2R²) + s³/(48R⁴)` for `s < 2R` and `1/s` beyond.
pub fn v_long(s: f64, r_split: f64) -> Result<f64> {
    check_radius(r_split)?;
    check_distance(s)?;
    Ok(long_range(s, r_split))
}

#[inline]
pub(crate) fn long_range(s: f64, r: f64) -> f64 {
    if s >= 2.0 * r {
        1.0 / s
    } else {
        4.0 / (3.0 * r) - s / (2.0 * r * r) + s * s * s / (48.0 * r * r * r * r)
    }
}

/// `V_{<R}(s) = 1/s − V_{>R}(s) = (2R − s)³(s + 6R) / (48 R⁴ s)` for
/// `s < 2R`, and 0 beyond.
pub fn v_short(s: f64, r_split: f64) -> Result<f64> {
    check_radius(r_split)?;
    check_distance(s)?;
    if s == 0.0 {
        return Err(domain("the short-range potential is singular at s = 0"));
    }
    Ok(short_range(s, r_split))
}

#[inline]
fn short_range(s: f64, r: f64) -> f64 {
    if s >= 2.0 * r {
        0.0
    } else {
        let d = 2.0 * r - s;
        d * d * d * (s + 6.0 * r) / (48.0 * r.powi(4) * s)
    }
}

/// `(1/π) ∫_a^b r^{-5} J_r(s) dr` by adaptive quadrature; `b = ∞` allowed.
pub fn radius_integral(s: f64, a: f64, b: f64) -> Result<f64> {
    check_distance(s)?;
    let lo = a.max(0.5 * s);
    if !(b > lo) {
        return Ok(0.0);
    }
    let f = |r: f64| lens_volume(r, s) / r.powi(5);
    let integrator = Integrator::new(1e-13);
    let est = if b.is_infinite() {
        integrator.integrate_to_infinity(f, lo)?
    } else {
        integrator.integrate(f, lo, b)?
    };
    Ok(est.value / PI)
}

/// Relative error of the full ball decomposition against `1/s`.
pub fn reconstruction_residual(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(domain("reconstruction needs s > 0"));
    }
    Ok((radius_integral(s, 0.0, f64::INFINITY)? * s - 1.0).abs())
}

/// The pair `V_{<R}`, `V_{>R}` tabulated for plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPotential {
    pub r_split: f64,
    pub short: RadialProfile,
    pub long: RadialProfile,
}

impl SplitPotential {
    /// Tabulate both parts on `grid` (abscissae must be positive and increasing).
    pub fn tabulate(r_split: f64, grid: Vec<f64>) -> Result<Self> {
        check_radius(r_split)?;
        if grid.first().is_some_and(|&s| s <= 0.0) {
            return Err(domain("tabulation grid must start above 0"));
        }
        let short = RadialProfile::from_fn(grid.clone(), |s| short_range(s, r_split))?;
        let long = RadialProfile::from_fn(grid, |s| long_range(s, r_split))?;
        Ok(Self { r_split, short, long })
    }
}

/// A radial potential that is arbitrary on `[0, 2R]` and equal to `c/s` beyond.
struct CompactPlusCoulomb<F> {
    inner: F,
    edge: f64,
    tail_charge: f64,
}

impl<F: Fn(f64) -> f64> CompactPlusCoulomb<F> {
    /// `V̂(k) = (4π/k) [∫₀^{2R} s sin(ks) V(s) ds + c cos(2kR)/k]`.
    ///
    /// The tail term is the Abel-regularised `c ∫_{2R}^∞ sin(ks) ds`.
    fn fourier(&self, k: f64) -> Result<f64> {
        let period = PI / k;
        let mut breaks = vec![0.0];
        let mut m = 1.0;
        while m * period < self.edge {
            breaks.push(m * period);
            m += 1.0;
        }
        breaks.push(self.edge);
        let est = Integrator::new(1e-13)
            .with_abs_tol(1e-16)
            .integrate_with_breaks(|s| s * (k * s).sin() * (self.inner)(s), &breaks)?;
        let tail = self.tail_charge * (k * self.edge).cos() / k;
        Ok(4.0 * PI / k * (est.value + tail))
    }
}

/// Radial Fourier transform `V̂_{>R}(k)`.
pub fn long_range_fourier(k: f64, r_split: f64) -> Result<f64> {
    check_radius(r_split)?;
    if !(k > 0.0) {
        return Err(domain("the long-range transform diverges at k = 0"));
    }
    let pot = CompactPlusCoulomb { inner: |s| long_range(s, r_split), edge: 2.0 * r_split, tail_charge: 1.0 };
    pot.fourier(k)
}

/// Momenta below this use the scale-free criterion `k² V̂(k) ≥ −tol·4π`.
pub const SMALL_MOMENTUM: f64 = 0.1;
/// Relative tolerance of positive-type certification.
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

fn certify<F: Fn(f64) -> f64>(name: &str, pot: &CompactPlusCoulomb<F>, r_split: f64, grid: &[f64]) -> Result<SweepReport> {
    let values: Vec<(f64, f64)> = grid.iter().map(|&k| Ok((k, pot.fourier(k)?))).collect::<Result<_>>()?;
    let reference = values
        .iter()
        .filter(|(k, _)| *k >= SMALL_MOMENTUM)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut report = SweepReport::new(
        name,
        json!({
            "r_split": r_split,
            "points": grid.len(),
            "k_min": grid.first(),
            "k_max": grid.last(),
            "small_momentum": SMALL_MOMENTUM,
            "reference": reference,
        }),
        POSITIVITY_TOLERANCE,
    );
    for &(k, v) in &values {
        let margin = if k < SMALL_MOMENTUM { k * k * v / (4.0 * PI) } else { v / reference };
        report.record(&[margin], || json!({ "k": k, "transform": v }));
    }
    Ok(report)
}

/// Check `V̂_{>R}(k) ≥ 0` on a momentum grid of at least 512 points.
///
/// Below [`SMALL_MOMENTUM`] the margin is `k²V̂(k)/4π`, which tends to 1; above
/// it is `V̂(k)` divided by the largest `|V̂|` on that part of the grid.
pub fn certify_positive_type(r_split: f64, grid: &[f64]) -> Result<SweepReport> {
    check_radius(r_split)?;
    check_momentum_grid(grid)?;
    let pot = CompactPlusCoulomb { inner: |s| long_range(s, r_split), edge: 2.0 * r_split, tail_charge: 1.0 };
    certify("long-range positive type", &pot, r_split, grid)
}

/// The same certification applied to `V_{<R} − δ/s`, which is not of
/// positive type for any `δ > 0`.
pub fn certify_shifted_short_range(r_split: f64, delta: f64, grid: &[f64]) -> Result<SweepReport> {
    check_radius(r_split)?;
    check_momentum_grid(grid)?;
    let pot = CompactPlusCoulomb {
        inner: |s: f64| short_range(s, r_split) - delta / s,
        edge: 2.0 * r_split,
        tail_charge: -delta,
    };
    certify("shifted short-range positive type", &pot, r_split, grid)
}

fn check_momentum_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 512 {
        return Err(domain(format!("momentum grid needs at least 512 points, got {}", grid.len())));
    }
    if grid.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
        return Err(domain("momentum grid must be positive and finite"));
    }
    Ok(())
}

/// `count` geometrically spaced momenta in `[k_min, k_max]`.
pub fn momentum_grid(k_min: f64, k_max: f64, count: usize) -> Vec<f64> {
    let ratio = (k_max / k_min).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| if i + 1 == count { k_max } else { k_min * ratio.powi(i as i32) }).collect()
}

/// `Σ_{ij} c_i c_j V_{>R}(|x_i − x_j|)`, including the diagonal `V_{>R}(0)`.
pub fn long_range_quadratic_form(points: &[[f64; 3]], charges: &[f64], r_split: f64) -> Result<f64> {
    check_radius(r_split)?;
    if points.len() != charges.len() {
        return Err(domain("one charge per point is required"));
    }
    let mut sum = 0.0;
    for i in 0..points.len() {
        sum += charges[i] * charges[i] * long_range(0.0, r_split);
        for j in i + 1..points.len() {
            let (a, b) = (points[i], points[j]);
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            sum += 2.0 * charges[i] * charges[j] * long_range(d, r_split);
        }
    }
    Ok(sum)
}

/// Random configurations of `count` points in a cube of side `4R` with
/// standard normal charges; the smallest normalised quadratic form is reported.
pub fn quadratic_form_sweep<R: Rng>(rng: &mut R, configurations: usize, count: usize, r_split: f64) -> Result<SweepReport> {
    let mut report = SweepReport::new(
        "long-range quadratic form",
        json!({ "configurations": configurations, "points": count, "r_split": r_split }),
        1e-12,
    );
    for _ in 0..configurations {
        let pts: Vec<[f64; 3]> = (0..count)
            .map(|_| [0, 1, 2].map(|_| rng.random::<f64>() * 4.0 * r_split))
            .collect();
        let charges: Vec<f64> = (0..count).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let q = long_range_quadratic_form(&pts, &charges, r_split)?;
        let norm: f64 = charges.iter().map(|c| c * c).sum::<f64>() * long_range(0.0, r_split);
        report.record(&[q / norm], || json!({ "points": pts, "charges": charges, "form": q }));
    }
    Ok(report)
}
