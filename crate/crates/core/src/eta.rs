//! The cutoff function η: the self-convolution of a polynomial bump,
//! normalised to η(0) = 1. It is supported in the unit ball and its Fourier
//! transform is a square, hence nonnegative.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::profile::RadialProfile;
use crate::quadrature::Integrator;

/// Exponent `m` of the bump `ψ(r) = (1 − 4r²)^m` on `r < 1/2`.
pub const BUMP_EXPONENT: i32 = 4;
/// Number of tabulation points of η on `[0, 1]`.
pub const ETA_POINTS: usize = 1024;

/// Bump `ψ(r) = (1 − 4r²)^m` for `r < 1/2`, zero beyond.
fn bump(r: f64, m: i32) -> f64 {
    if r >= 0.5 {
        0.0
    } else {
        (1.0 - 4.0 * r * r).powi(m)
    }
}

/// `G(t) = ∫₀^t u ψ(u) du = [1 − (1 − 4t²)^{m+1}] / (8(m+1))`.
fn bump_moment(t: f64, m: i32) -> f64 {
    let full = 1.0 / (8.0 * (m + 1) as f64);
    if t >= 0.5 {
        full
    } else {
        full * (1.0 - (1.0 - 4.0 * t * t).powi(m + 1))
    }
}

/// `(ψ * ψ)(s)` in three dimensions for radial ψ:
/// `(2π/s) ∫ r ψ(r) [G(s + r) − G(|s − r|)] dr`.
fn self_convolution(s: f64, m: i32) -> f64 {
    if s >= 1.0 {
        return 0.0;
    }
    if s == 0.0 {
        let est = Integrator::new(1e-15)
            .integrate(|r| 4.0 * PI * r * r * bump(r, m).powi(2), 0.0, 0.5)
            .expect("polynomial quadrature converges");
        return est.value;
    }
    let lo = (s - 0.5).max(0.0);
    let mut breaks = vec![lo];
    for b in [0.5 - s, s] {
        if b > lo && b < 0.5 {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.push(0.5);
    let f = |r: f64| r * bump(r, m) * (bump_moment(s + r, m) - bump_moment((s - r).abs(), m));
    let est = Integrator::new(1e-15)
        .with_abs_tol(1e-18)
        .integrate_with_breaks(f, &breaks)
        .expect("piecewise polynomial quadrature converges");
    2.0 * PI / s * est.value
}

/// `ψ̂(k) = (4π/k) ∫₀^{1/2} r sin(kr) ψ(r) dr`.
fn bump_fourier(k: f64, m: i32) -> f64 {
    let mut breaks = vec![0.0];
    if k > 0.0 {
        let period = PI / k;
        let mut j = 1.0;
        while j * period < 0.5 {
            breaks.push(j * period);
            j += 1.0;
        }
    }
    breaks.push(0.5);
    let f = |r: f64| {
        let kernel = if k == 0.0 { r } else { (k * r).sin() / k };
        4.0 * PI * r * kernel * bump(r, m)
    };
    Integrator::new(1e-14)
        .with_abs_tol(1e-22)
        .integrate_with_breaks(f, &breaks)
        .expect("polynomial quadrature converges")
        .value
}

/// η with an optional length scale `d` and lattice period `L`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaCutoff {
    /// η on `[0, 1]` at unit scale.
    pub profile: RadialProfile,
    pub exponent: i32,
    /// `(ψ * ψ)(0) = ∫ ψ²`.
    pub norm: f64,
    pub d: f64,
    pub period: Option<f64>,
}

/// Sampled checks of the η construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaDiagnostics {
    pub value_at_origin: f64,
    pub max_abs: f64,
    pub max_beyond_support: f64,
    /// `min_k η̂(k) / η̂(0)` from the tabulated profile.
    pub min_fourier_ratio: f64,
    /// Fourth derivative at 0 by finite differences at three steps.
    pub fourth_derivative: [f64; 3],
    /// `max_s (1 − η(s)²) / s^{1/4}` on `(0, 1]`.
    pub quarter_power_constant: f64,
}

/// Build η = (ψ*ψ)/(ψ*ψ)(0), tabulated on [`ETA_POINTS`] points.
pub fn build_eta() -> Result<EtaCutoff> {
    let m = BUMP_EXPONENT;
    let norm = self_convolution(0.0, m);
    let grid: Vec<f64> = (0..ETA_POINTS).map(|i| i as f64 / (ETA_POINTS - 1) as f64).collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&s| if s == 0.0 { 1.0 } else { self_convolution(s, m) / norm })
        .collect();
    let eta = EtaCutoff { profile: RadialProfile::new(grid, values)?, exponent: m, norm, d: 1.0, period: None };
    let diag = eta.diagnostics(&fourier_grid())?;
    if diag.min_fourier_ratio < -1e-8 {
        return Err(Error::Consistency(format!("η̂ has negative values (ratio {})", diag.min_fourier_ratio)));
    }
    if (diag.value_at_origin - 1.0).abs() > 1e-15 || diag.max_abs > 1.0 + 1e-12 || diag.max_beyond_support != 0.0 {
        return Err(Error::Consistency("η violates its normalisation or support".into()));
    }
    Ok(eta)
}

/// Momenta at which the tabulated η̂ is sampled.
pub fn fourier_grid() -> Vec<f64> {
    (0..400).map(|i| 0.1 * i as f64).collect()
}

impl EtaCutoff {
    /// Rescale to `η_d(x) = η(x/d)`.
    pub fn with_scale(mut self, d: f64) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(domain(format!("cutoff scale must be positive, got {d}")));
        }
        if let Some(l) = self.period {
            if 2.0 * d > l {
                return Err(domain(format!("cutoff scale d = {d} needs 2d ≤ L = {l}")));
            }
        }
        self.d = d;
        Ok(self)
    }

    /// Periodise with period `L ≥ 2d`.
    pub fn with_period(mut self, side: f64) -> Result<Self> {
        if !(side >= 2.0 * self.d) {
            return Err(domain(format!("period L = {side} must be at least 2d = {}", 2.0 * self.d)));
        }
        self.period = Some(side);
        Ok(self)
    }

    /// Tabulated η at unit scale.
    pub fn eval(&self, s: f64) -> f64 {
        if s >= 1.0 {
            0.0
        } else {
            self.profile.eval(s)
        }
    }

    /// η at unit scale from the convolution integral itself.
    pub fn eval_exact(&self, s: f64) -> f64 {
        if s == 0.0 {
            1.0
        } else {
            self_convolution(s, self.exponent) / self.norm
        }
    }

    /// `η_d(x) = η(|x|/d)`.
    pub fn eval_scaled(&self, s: f64) -> f64 {
        self.eval(s / self.d)
    }

    /// `η_d^per(x) = Σ_n η_d(x + nL)`. With `L ≥ 2d` only the minimal image
    /// contributes.
    pub fn periodic(&self, x: [f64; 3]) -> f64 {
        let r2: f64 = match self.period {
            Some(l) => x.iter().map(|c| (c - l * (c / l).round()).powi(2)).sum(),
            None => x.iter().map(|c| c * c).sum(),
        };
        self.eval_scaled(r2.sqrt())
    }

    /// `η̂(k) = |ψ̂(k)|² / ∫ψ²` at unit scale.
    pub fn fourier(&self, k: f64) -> f64 {
        bump_fourier(k, self.exponent).powi(2) / self.norm
    }

    /// `η̂_d(q) = d³ η̂(qd)`.
    pub fn fourier_scaled(&self, q: f64) -> f64 {
        self.d.powi(3) * self.fourier(q * self.d)
    }

    /// Radial transform of the tabulated profile, `(4π/k) ∫₀¹ s sin(ks) η(s) ds`.
    pub fn fourier_from_profile(&self, k: f64) -> Result<f64> {
        let grid = self.profile.grid();
        let f = |s: f64| {
            let kernel = if k == 0.0 { s } else { (k * s).sin() / k };
            4.0 * PI * s * kernel * self.profile.eval(s)
        };
        let est = Integrator::new(1e-12)
            .with_abs_tol(1e-16)
            .with_max_segments(20_000)
            .integrate_with_breaks(f, grid)?;
        Ok(est.value)
    }

    /// `η''''(0) ≈ 2(η(2h) − 4η(h) + 3η(0)) / h⁴`, using evenness.
    pub fn fourth_derivative_at_origin(&self, h: f64) -> f64 {
        2.0 * (self.eval_exact(2.0 * h) - 4.0 * self.eval_exact(h) + 3.0) / h.powi(4)
    }

    pub fn diagnostics(&self, k_grid: &[f64]) -> Result<EtaDiagnostics> {
        let fine: Vec<f64> = (0..=4000).map(|i| i as f64 / 4000.0).collect();
        let max_abs = fine.iter().map(|&s| self.eval(s).abs()).fold(0.0, f64::max);
        let max_beyond_support = [1.0, 1.0 + 1e-9, 1.5, 3.0].iter().map(|&s| self.eval(s).abs()).fold(0.0, f64::max);
        let f0 = self.fourier_from_profile(0.0)?;
        let mut min_ratio = f64::INFINITY;
        for &k in k_grid {
            min_ratio = min_ratio.min(self.fourier_from_profile(k)? / f0);
        }
        let quarter_power_constant = fine[1..]
            .iter()
            .map(|&s| (1.0 - self.eval(s).powi(2)) / s.powf(0.25))
            .fold(0.0, f64::max);
        Ok(EtaDiagnostics {
            value_at_origin: self.eval(0.0),
            max_abs,
            max_beyond_support,
            min_fourier_ratio: min_ratio,
            fourth_derivative: [0.05, 0.025, 0.0125].map(|h| self.fourth_derivative_at_origin(h)),
            quarter_power_constant,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn eta() -> &'static EtaCutoff {
        static ETA: OnceLock<EtaCutoff> = OnceLock::new();
        ETA.get_or_init(|| build_eta().unwrap())
    }

    #[test]
    fn normalisation_and_support() {
        let e = eta();
        assert_eq!(e.eval(0.0), 1.0);
        assert_eq!(e.eval(1.0), 0.0);
        assert_eq!(e.eval(1.3), 0.0);
        assert!(e.eval(0.999) > 0.0);
    }

    #[test]
    fn table_matches_convolution() {
        let e = eta();
        for s in [0.013, 0.2, 0.5, 0.77, 0.95] {
            assert!((e.eval(s) - e.eval_exact(s)).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn convolution_matches_brute_force_cubature() {
        // (ψ*ψ)(s) = ∫ ψ(|y|) ψ(|y − s e₃|) dy in spherical coordinates.
        let m = BUMP_EXPONENT;
        let s = 0.37;
        let inner = |r: f64| {
            Integrator::new(1e-12)
                .integrate(
                    |c: f64| bump((r * r + s * s - 2.0 * r * s * c).max(0.0).sqrt(), m),
                    -1.0,
                    1.0,
                )
                .unwrap()
                .value
        };
        let brute = Integrator::new(1e-11)
            .integrate(|r| 2.0 * PI * r * r * bump(r, m) * inner(r), 0.0, 0.5)
            .unwrap()
            .value;
        assert!((brute - self_convolution(s, m)).abs() < 1e-10 * brute);
    }

    #[test]
    fn fourier_of_table_is_the_square() {
        let e = eta();
        for k in [0.0, 1.0, 7.5, 19.0] {
            let a = e.fourier(k);
            let b = e.fourier_from_profile(k).unwrap();
            assert!((a - b).abs() < 1e-9 * e.fourier(0.0), "k={k}: {a} vs {b}");
        }
        // η̂(0) = ∫η = (∫ψ)² / ∫ψ².
        assert!(e.fourier(0.0) > 0.0);
    }

    #[test]
    fn fourth_derivative_converges() {
        let d = eta().diagnostics(&[0.0, 1.0]).unwrap();
        let [a, b, c] = d.fourth_derivative;
        assert!(((a / b) - 1.0).abs() < 0.1 && ((b / c) - 1.0).abs() < 0.1, "{a} {b} {c}");
    }

    #[test]
    fn quarter_power_remainder_is_bounded() {
        let d = eta().diagnostics(&[0.0]).unwrap();
        // The ratio is 1 at s = 1 and tends to 0 at the origin.
        assert!(d.quarter_power_constant >= 1.0 && d.quarter_power_constant < 2.0, "{}", d.quarter_power_constant);
    }

    #[test]
    fn periodic_minimal_image() {
        let e = eta().clone().with_scale(1.5).unwrap().with_period(4.0).unwrap();
        assert_eq!(e.periodic([0.0, 0.0, 0.0]), 1.0);
        assert!((e.periodic([3.9, 0.0, 0.0]) - e.eval_scaled(0.1)).abs() < 1e-15);
        assert_eq!(e.periodic([2.0, 0.0, 0.0]), 0.0);
        assert!(eta().clone().with_period(1.0).is_err());
        assert!(eta().clone().with_period(4.0).unwrap().with_scale(2.5).is_err());
    }
}
