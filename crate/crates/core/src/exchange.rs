//! The real-space one-particle density γ̃₀(s), the exchange integral
//! `I = ∫ |γ̃₀(x)|² / |x| dx`, and the two-term free-energy expansion.
//!
//! As in [`crate::statmech`], everything is computed at β = 1 in the reduced
//! variables `x = √β p`, `σ = s / √β` and rescaled:
//! `γ̃₀(s) = β^{-3/2} g(s/√β)` and `I = β^{-2} I₁`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::profile::RadialProfile;
use crate::quadrature::{kronrod_rule, Integrator};
use crate::statmech::{
    occupation_reduced, reduced_breaks, reduced_cutoff, reduced_density, solve_fugacity, ideal_free_energy,
    Statistics, ThermoState,
};

/// Minimum number of tabulation points of a γ̃₀ profile.
pub const PROFILE_POINTS: usize = 2048;
/// Requested bound on the neglected tail `4π∫_S^∞ s γ̃₀² ds` relative to `I`.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Relative disagreement between the two exchange routes that is treated as
/// a configuration failure.
pub const ROUTE_CONSISTENCY: f64 = 1e-4;

/// Largest `σ` accepted by the direct oscillatory quadrature.
const MAX_DIRECT_SIGMA: f64 = 1e5;

/// Reduced `g(σ) = (2π²σ)^{-1} ∫₀^∞ x sin(xσ) γ(x²) dx`, `g(0) = ρ̃`.
pub(crate) fn reduced_gamma_tilde(sigma: f64, log_z: f64, stats: Statistics) -> Result<f64> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(domain(format!("radius must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return reduced_density(log_z, stats);
    }
    if sigma > MAX_DIRECT_SIGMA {
        return Err(domain(format!(
            "radius {sigma} (thermal lengths) is too large for direct oscillatory quadrature; use the tabulated profile"
        )));
    }
    let top = reduced_cutoff(log_z);
    // Split at every half period of sin(xσ), merged with the Fermi-surface breaks.
    let period = PI / sigma;
    let mut breaks = reduced_breaks(log_z);
    let mut k = 1.0;
    while k * period < top {
        breaks.push(k * period);
        k += 1.0;
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |x: f64| x * (x * sigma).sin() / sigma * occupation_reduced(x * x, log_z, stats);
    let scale = 2.0 * PI * PI * reduced_density(log_z, stats)?;
    let est = Integrator::new(1e-12)
        .with_abs_tol(1e-16 * scale)
        .with_max_segments(20 * breaks.len() + 4000)
        .integrate_with_breaks(f, &breaks)?;
    Ok(est.value / (2.0 * PI * PI))
}

/// `γ̃₀(s) = (2π)^{-3} ∫ γ₀(p) e^{ips} dp` for one internal state.
pub fn gamma_tilde(state: &ThermoState, s: f64) -> Result<f64> {
    state.validate()?;
    let l = state.thermal_length();
    Ok(l.powi(-3) * reduced_gamma_tilde(s / l, state.log_fugacity(), state.stats)?)
}

/// Upper bound on `4π∫_S^∞ σ g(σ)² dσ` (reduced units).
///
/// For `z < 1`, `|g| ≤ Σ_ℓ z^ℓ (4πℓ)^{-3/2} e^{-σ²/(4ℓ)}`, the bosonic
/// Gaussian series, which is decreasing in σ; this gives a rigorous majorant.
/// For Fermi `z ≥ 1` the decay is governed by the poles of the occupation at
/// `x² = ln z ± iπ`; the estimate uses that exponential rate with a factor 2
/// safety margin on the amplitude.
pub(crate) fn reduced_tail_bound(radius: f64, log_z: f64, stats: Statistics) -> f64 {
    if log_z < 0.0 {
        let z = log_z.exp();
        let mut g = 0.0;
        let mut first_moment = 0.0;
        let mut l = 1.0f64;
        let lmax = (120.0 / -log_z).clamp(10.0, 1e7);
        while l <= lmax {
            let w = (l * log_z - radius * radius / (4.0 * l)).exp() * (4.0 * PI * l).powf(-1.5);
            g += w;
            first_moment += 2.0 * l * w;
            l += 1.0;
        }
        // Tail of the ℓ-series beyond lmax, bounded by a geometric sum.
        let rest = z.powf(lmax) / (1.0 - z) * (4.0 * PI).powf(-1.5);
        g += rest;
        first_moment += 2.0 * rest * lmax * 10.0;
        4.0 * PI * g * first_moment
    } else {
        let _ = stats;
        let kappa = pole_decay_rate(log_z);
        let amplitude = 2.0 / (2.0 * PI);
        // 4π ∫_S^∞ σ (A e^{-κσ}/σ)² dσ ≤ 4π A² e^{-2κS} / (2κS).
        4.0 * PI * amplitude * amplitude * (-2.0 * kappa * radius).exp() / (2.0 * kappa * radius)
    }
}

/// `Im √(ln z + iπ)`: decay rate of the Fermi γ̃₀ in reduced units.
fn pole_decay_rate(log_z: f64) -> f64 {
    // √(a + ib) has imaginary part √((|w| − a)/2).
    let modulus = (log_z * log_z + PI * PI).sqrt();
    ((modulus - log_z) / 2.0).sqrt()
}

/// Tabulated γ̃₀ for one thermodynamic state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaTildeProfile {
    pub beta: f64,
    pub log_z: f64,
    pub stats: Statistics,
    /// Profile of the reduced function `g(σ)`.
    pub reduced: RadialProfile,
    /// Bound on the reduced tail integral beyond the table.
    pub reduced_tail_bound: f64,
}

impl GammaTildeProfile {
    pub fn build(state: &ThermoState) -> Result<Self> {
        state.validate()?;
        let log_z = state.log_fugacity();
        let reduced = build_reduced_profile(log_z, state.stats)?;
        let radius = reduced.support();
        Ok(Self {
            beta: state.beta,
            log_z,
            stats: state.stats,
            reduced,
            reduced_tail_bound: reduced_tail_bound(radius, log_z, state.stats),
        })
    }

    /// Interpolated γ̃₀(s); zero beyond the truncation radius.
    pub fn eval(&self, s: f64) -> f64 {
        let l = self.beta.sqrt();
        l.powi(-3) * self.reduced.eval(s / l)
    }

    /// Truncation radius in physical units.
    pub fn radius(&self) -> f64 {
        self.reduced.support() * self.beta.sqrt()
    }

    /// `4π ∫₀^S σ g(σ)² dσ` over the table, integrated exactly on each
    /// spline interval.
    fn reduced_exchange(&self) -> f64 {
        let grid = self.reduced.grid();
        let sum: f64 = grid
            .windows(2)
            .map(|w| {
                kronrod_rule(
                    |s| {
                        let g = self.reduced.eval(s);
                        s * g * g
                    },
                    w[0],
                    w[1],
                )
            })
            .sum();
        4.0 * PI * sum
    }
}

/// Truncation radius, then a grid geometric near the origin (the natural
/// spline end condition is only first-order accurate there) and uniform once
/// the spacing reaches a fraction of the oscillation period.
fn build_reduced_profile(log_z: f64, stats: Statistics) -> Result<RadialProfile> {
    let x_fermi = log_z.max(0.0).sqrt();
    let inner = 1.0 / (1.0 + x_fermi);

    // Rigorous lower bound on I₁ from the inner region where g has not yet
    // oscillated, used to set the truncation target.
    let inner_part = Integrator::new(1e-8).integrate(
        |s| {
            let g = reduced_gamma_tilde(s, log_z, stats).unwrap_or(0.0);
            s * g * g
        },
        0.0,
        inner,
    )?;
    let target = 0.1 * TAIL_TOLERANCE * 4.0 * PI * inner_part.value;

    let mut radius = 4.0;
    let mut tries = 0;
    while reduced_tail_bound(radius, log_z, stats) > target {
        radius *= 1.25;
        tries += 1;
        if tries > 200 {
            return Err(Error::Truncation("γ̃₀ decays too slowly to truncate".into()));
        }
    }

    let period = 2.0 * PI / x_fermi.max(1.0);
    let mut h_max = (period / 48.0).min(0.08);
    let first = 1e-4 * inner;
    let ratio = 1.01;
    let grid = loop {
        let mut grid = vec![0.0, first];
        loop {
            let last = *grid.last().unwrap();
            let step = (last * (ratio - 1.0)).min(h_max);
            let next = last + step;
            if next >= radius {
                break;
            }
            grid.push(next);
        }
        grid.push(radius);
        if grid.len() >= PROFILE_POINTS {
            break grid;
        }
        h_max *= 0.8;
    };

    let values: Vec<f64> = grid
        .par_iter()
        .map(|&s| reduced_gamma_tilde(s, log_z, stats))
        .collect::<Result<_>>()?;
    RadialProfile::new(grid, values)
}

/// Exchange integral with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeIntegral {
    /// `∫ |γ̃₀(x)|² / |x| dx` from the real-space profile.
    pub value: f64,
    /// The same quantity from the momentum-space double integral.
    pub momentum_value: f64,
    /// Bound on the part of the real-space integral beyond the table.
    pub tail_bound: f64,
    /// Truncation radius of the profile.
    pub radius: f64,
}

impl ExchangeIntegral {
    pub fn relative_route_gap(&self) -> f64 {
        ((self.value - self.momentum_value) / self.momentum_value).abs()
    }
}

/// Reduced momentum-space exchange integral
/// `I₁ = (2π³)^{-1} ∫∫ x x' γ(x) γ(x') ln((x+x')/|x−x'|) dx dx'`,
/// symmetrised to `π^{-3} ∫ x³ γ(x) ∫₀¹ t γ(xt) ln((1+t)/(1−t)) dt dx`.
pub(crate) fn reduced_exchange_momentum(log_z: f64, stats: Statistics) -> Result<f64> {
    let x_fermi = log_z.max(0.0).sqrt();
    let bose_scale = if stats == Statistics::Bose { (-log_z).sqrt() } else { 0.0 };
    let inner = |x: f64| -> f64 {
        let mut breaks = vec![0.0];
        let mut push = |t: f64| {
            if t > 0.0 && t < 1.0 {
                breaks.push(t);
            }
        };
        if log_z > 1.0 {
            let w = 4.0 / x_fermi;
            push((x_fermi - w) / x);
            push(x_fermi / x);
            push((x_fermi + w) / x);
        }
        if bose_scale > 0.0 && bose_scale < 1.0 {
            push(bose_scale / x);
        }
        push(0.5);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks.push(1.0);
        let f = |t: f64| {
            let y = x * t;
            t * occupation_reduced(y * y, log_z, stats) * 2.0 * t.atanh()
        };
        match Integrator::new(1e-12).with_max_segments(8000).integrate_with_breaks(f, &breaks) {
            Ok(e) => e.value,
            Err(_) => f64::NAN,
        }
    };
    let outer = |x: f64| x * x * x * occupation_reduced(x * x, log_z, stats) * inner(x);
    let mut breaks = reduced_breaks(log_z);
    if bose_scale > 0.0 && bose_scale < breaks[breaks.len() - 1] {
        breaks.push(bose_scale);
        breaks.sort_by(f64::total_cmp);
    }
    let est = Integrator::new(1e-11).integrate_with_breaks(outer, &breaks)?;
    if !est.value.is_finite() {
        return Err(Error::Quadrature { achieved: f64::INFINITY, requested: 1e-12 });
    }
    Ok(est.value / (PI * PI * PI))
}

/// Momentum-space route to `∫ |γ̃₀(x)|² / |x| dx`, built from the Coulomb
/// kernel `4π/|p − p'|²`.
pub fn exchange_integral_momentum(state: &ThermoState) -> Result<f64> {
    state.validate()?;
    Ok(state.beta.powi(-2) * reduced_exchange_momentum(state.log_fugacity(), state.stats)?)
}

/// Real-space exchange integral, cross-checked against the momentum route.
///
/// Fails with [`Error::Consistency`] when the two disagree by more than
/// [`ROUTE_CONSISTENCY`].
pub fn exchange_integral_detailed(state: &ThermoState) -> Result<ExchangeIntegral> {
    let profile = GammaTildeProfile::build(state)?;
    let scale = state.beta.powi(-2);
    let value = scale * profile.reduced_exchange();
    let momentum_value = exchange_integral_momentum(state)?;
    let out = ExchangeIntegral {
        value,
        momentum_value,
        tail_bound: scale * profile.reduced_tail_bound,
        radius: profile.radius(),
    };
    if out.relative_route_gap() > ROUTE_CONSISTENCY {
        return Err(Error::Consistency(format!(
            "real-space exchange integral {value} and momentum-space value {momentum_value} disagree"
        )));
    }
    Ok(out)
}

/// `I = ∫ |γ̃₀(x)|² / |x| dx = 4π ∫₀^∞ s γ̃₀(s)² ds`.
pub fn exchange_integral(state: &ThermoState) -> Result<f64> {
    Ok(exchange_integral_detailed(state)?.value)
}

/// The two leading terms of the jellium free energy density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTermFreeEnergy {
    pub state: ThermoState,
    pub alpha: f64,
    /// Ideal-gas free energy density `f₀(β, ρ)`.
    pub f0: f64,
    /// Signed exchange correction `∓ (αn/2) I`: negative for fermions,
    /// positive for bosons.
    pub exchange: f64,
    /// `f₀ + exchange`.
    pub total: f64,
    /// The unsigned integral `I`.
    pub integral: ExchangeIntegral,
}

/// `f₀(β, ρ) ∓ (αn/2) ∫ |γ̃₀|² / |x|`, minus for fermions and plus for bosons.
pub fn two_term_free_energy(beta: f64, rho: f64, alpha: f64, n: u32, stats: Statistics) -> Result<TwoTermFreeEnergy> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(domain(format!("coupling alpha must be nonnegative, got {alpha}")));
    }
    let state = solve_fugacity(beta, rho, n, stats)?;
    let f0 = ideal_free_energy(&state)?;
    let integral = exchange_integral_detailed(&state)?;
    let exchange = stats.upper_minus() * 0.5 * alpha * n as f64 * integral.value;
    let total = if alpha == 0.0 { f0 } else { f0 + exchange };
    Ok(TwoTermFreeEnergy { state, alpha, f0, exchange, total, integral })
}
