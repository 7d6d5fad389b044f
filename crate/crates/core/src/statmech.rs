//! Ideal Fermi and Bose gas thermodynamics in units with ħ = 1 and 2m = 1.
//!
//! Every quantity is evaluated in the dimensionless variable `x = √β p`, so
//! that a (β, z) result is an exact power of β times a function of z alone.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::Integrator;

/// Particle statistics. Every ∓/± in the formulas is selected through this tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermi,
    Bose,
}

impl Statistics {
    /// The sign written `∓`: −1 for fermions, +1 for bosons.
    ///
    /// It appears in pair counting (`(tr Xγ)² ∓ tr (Xγ)²`), in `1 ∓ γ` and in
    /// the exchange correction to the free energy.
    pub fn upper_minus(self) -> f64 {
        match self {
            Statistics::Fermi => -1.0,
            Statistics::Bose => 1.0,
        }
    }

    /// The sign written `±`: +1 for fermions, −1 for bosons.
    pub fn upper_plus(self) -> f64 {
        -self.upper_minus()
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Fermi => "fermi",
            Statistics::Bose => "bose",
        }
    }
}

impl std::fmt::Display for Statistics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fermi" | "fermion" | "fermions" | "f" => Ok(Statistics::Fermi),
            "bose" | "boson" | "bosons" | "b" => Ok(Statistics::Bose),
            other => Err(domain(format!("unknown statistics '{other}'"))),
        }
    }
}

/// One equilibrium point of the ideal gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoState {
    pub beta: f64,
    pub rho: f64,
    pub n: u32,
    pub mu: f64,
    pub z: f64,
    pub stats: Statistics,
}

impl ThermoState {
    /// The state at given fugacity; the density follows from it.
    pub fn from_fugacity(beta: f64, z: f64, n: u32, stats: Statistics) -> Result<Self> {
        let rho = density_from_fugacity(beta, z, n, stats)?;
        let st = Self { beta, rho, n, mu: z.ln() / beta, z, stats };
        st.validate()?;
        Ok(st)
    }

    /// `ln z = βμ`, the quantity actually used by the kernels.
    pub fn log_fugacity(&self) -> f64 {
        self.beta * self.mu
    }

    /// Thermal length `√β`, the natural unit of distance.
    pub fn thermal_length(&self) -> f64 {
        self.beta.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(domain(format!("density must be positive, got {}", self.rho)));
        }
        if self.n == 0 {
            return Err(domain("internal degrees of freedom n must be at least 1"));
        }
        check_fugacity(self.z, self.stats, false)
    }
}

/// Relative tolerance used by the momentum quadratures of this module.
pub(crate) const MOMENTUM_REL_TOL: f64 = 1e-13;
/// Number of e-folds kept beyond the Fermi level; the neglected tail is below e^-45.
const TAIL_EFOLDS: f64 = 45.0;

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("inverse temperature must be positive, got {beta}")))
    }
}

fn check_fugacity(z: f64, stats: Statistics, allow_bose_boundary: bool) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(domain(format!("fugacity must be positive, got {z}")));
    }
    if stats == Statistics::Bose {
        let ok = if allow_bose_boundary { z <= 1.0 } else { z < 1.0 };
        if !ok {
            return Err(domain(format!("Bose fugacity must be below 1 (condensation boundary), got {z}")));
        }
    }
    Ok(())
}

/// Occupation at reduced kinetic energy `u = βp²` and `ln z`.
///
/// Fermi: `1/(e^{u - ln z} + 1)`; Bose: `1/(e^{u - ln z} - 1)`.
#[inline]
pub(crate) fn occupation_reduced(u: f64, log_z: f64, stats: Statistics) -> f64 {
    let a = u - log_z;
    match stats {
        Statistics::Fermi => {
            if a > 0.0 {
                let e = (-a).exp();
                e / (1.0 + e)
            } else {
                1.0 / (a.exp() + 1.0)
            }
        }
        Statistics::Bose => 1.0 / a.exp_m1(),
    }
}

/// `ln(1 ± z e^{-u})` with the sign of the statistics, computed without
/// cancellation or overflow.
#[inline]
fn log_partition_term(u: f64, log_z: f64, stats: Statistics) -> f64 {
    let t = log_z - u;
    match stats {
        Statistics::Fermi => {
            if t > 0.0 {
                t + (-t).exp().ln_1p()
            } else {
                t.exp().ln_1p()
            }
        }
        Statistics::Bose => {
            if t < -std::f64::consts::LN_2 {
                (-t.exp()).ln_1p()
            } else {
                (-t.exp_m1()).ln()
            }
        }
    }
}

/// Upper limit of the reduced momentum `x = √β p` beyond which the
/// integrands are negligible.
pub(crate) fn reduced_cutoff(log_z: f64) -> f64 {
    (log_z.max(0.0) + TAIL_EFOLDS).sqrt()
}

/// Break points for `x`-integrals: the Fermi surface is a steep step at low
/// temperature, so it is placed on an interval boundary.
pub(crate) fn reduced_breaks(log_z: f64) -> Vec<f64> {
    let top = reduced_cutoff(log_z);
    if log_z > 1.0 {
        let xf = log_z.sqrt();
        let width = 1.0 / xf;
        let mut pts = vec![0.0];
        for c in [xf - 4.0 * width, xf, xf + 4.0 * width] {
            if c > *pts.last().unwrap() && c < top {
                pts.push(c);
            }
        }
        pts.push(top);
        pts
    } else {
        vec![0.0, top]
    }
}

/// `γ₀(p) = 1/(z^{-1} e^{βp²} ± 1)`, + for fermions, − for bosons.
pub fn momentum_occupation(p: f64, beta: f64, z: f64, stats: Statistics) -> Result<f64> {
    check_beta(beta)?;
    check_fugacity(z, stats, false)?;
    if !(p >= 0.0) {
        return Err(domain(format!("momentum magnitude must be nonnegative, got {p}")));
    }
    Ok(occupation_reduced(beta * p * p, z.ln(), stats))
}

/// Density per internal state at β = 1, `(2π²)^{-1} ∫₀^∞ x² γ(x²) dx`.
pub(crate) fn reduced_density(log_z: f64, stats: Statistics) -> Result<f64> {
    let f = |x: f64| x * x * occupation_reduced(x * x, log_z, stats);
    let est = Integrator::new(MOMENTUM_REL_TOL).integrate_with_breaks(f, &reduced_breaks(log_z))?;
    Ok(est.value / (2.0 * PI * PI))
}

/// Pressure times β per internal state at β = 1,
/// `± (2π²)^{-1} ∫₀^∞ x² ln(1 ± z e^{-x²}) dx`. Positive for both statistics.
pub(crate) fn reduced_pressure(log_z: f64, stats: Statistics) -> Result<f64> {
    let sign = stats.upper_plus();
    let f = |x: f64| sign * x * x * log_partition_term(x * x, log_z, stats);
    let est = Integrator::new(MOMENTUM_REL_TOL).integrate_with_breaks(f, &reduced_breaks(log_z))?;
    Ok(est.value / (2.0 * PI * PI))
}

/// `ρ = n (2π)^{-3} ∫ γ₀(p) dp` at fugacity `z`.
///
/// Bose fugacity `z = 1` is accepted and returns the critical density.
pub fn density_from_fugacity(beta: f64, z: f64, n: u32, stats: Statistics) -> Result<f64> {
    check_beta(beta)?;
    check_fugacity(z, stats, true)?;
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    Ok(n as f64 * beta.powf(-1.5) * reduced_density(z.ln(), stats)?)
}

/// The grand potential term `n (2π)^{-3} β^{-1} ∫ ∓ln(1 ∓ ...)`, i.e. the pressure.
pub fn pressure(beta: f64, z: f64, n: u32, stats: Statistics) -> Result<f64> {
    check_beta(beta)?;
    check_fugacity(z, stats, true)?;
    Ok(n as f64 * beta.powf(-2.5) * reduced_pressure(z.ln(), stats)?)
}

/// `ζ(3/2)` by direct summation to 10⁶ with an Euler–Maclaurin tail.
pub fn zeta_three_halves() -> f64 {
    static ZETA: OnceLock<f64> = OnceLock::new();
    *ZETA.get_or_init(|| {
        const N: u32 = 1_000_000;
        // Smallest terms first.
        let head: f64 = (1..=N).rev().map(|l| (l as f64).powf(-1.5)).sum();
        let n = N as f64;
        let tail = 2.0 / n.sqrt() - 0.5 * n.powf(-1.5) + 0.125 * n.powf(-2.5);
        head + tail
    })
}

/// `ρ_c(β) = n (4πβ)^{-3/2} ζ(3/2)`, the Bose condensation density.
pub fn critical_density(beta: f64, n: u32) -> f64 {
    n as f64 * (4.0 * PI * beta).powf(-1.5) * zeta_three_halves()
}

/// Reduced density per internal state, `ρ β^{3/2} / n`.
fn reduced_target(beta: f64, rho: f64, n: u32) -> f64 {
    rho * beta.powf(1.5) / n as f64
}

/// Solve `density_from_fugacity(β, z) = ρ` for the fugacity.
pub fn solve_fugacity(beta: f64, rho: f64, n: u32, stats: Statistics) -> Result<ThermoState> {
    check_beta(beta)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(domain(format!("density must be positive, got {rho}")));
    }
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    if stats == Statistics::Bose {
        let critical = critical_density(beta, n);
        if rho >= critical {
            return Err(Error::Condensation { rho, critical });
        }
    }
    let target = reduced_target(beta, rho, n);
    let log_z = solve_reduced_log_fugacity(target, stats)?;
    let state = ThermoState { beta, rho, n, mu: log_z / beta, z: log_z.exp(), stats };
    Ok(state)
}

/// Root of `ln ρ̃(w) = ln target` in `w = ln z`: bracket, then Illinois
/// regula falsi with bisection fallback.
fn solve_reduced_log_fugacity(target: f64, stats: Statistics) -> Result<f64> {
    let classical = (4.0 * PI).powf(-1.5);
    let ln_target = target.ln();
    let g = |w: f64| -> Result<f64> { Ok(reduced_density(w, stats)?.ln() - ln_target) };

    // Fermi density lies below the Maxwell–Boltzmann value z(4π)^{-3/2},
    // Bose density above it.
    let mb = (target / classical).ln();
    let (mut lo, mut hi, mut g_lo, mut g_hi);
    match stats {
        Statistics::Fermi => {
            lo = mb;
            g_lo = g(lo)?;
            let mut step = 1.0;
            hi = lo + step;
            g_hi = g(hi)?;
            let mut tries = 0;
            while g_hi < 0.0 {
                lo = hi;
                g_lo = g_hi;
                step *= 2.0;
                hi = lo + step;
                g_hi = g(hi)?;
                tries += 1;
                if tries > 60 {
                    return Err(Error::Internal("could not bracket the Fermi fugacity".into()));
                }
            }
        }
        Statistics::Bose => {
            hi = mb.min(0.0);
            g_hi = g(hi)?;
            let mut step = 1.0;
            lo = hi - step;
            g_lo = g(lo)?;
            let mut tries = 0;
            while g_lo > 0.0 {
                hi = lo;
                g_hi = g_lo;
                step *= 2.0;
                lo = hi - step;
                g_lo = g(lo)?;
                tries += 1;
                if tries > 60 {
                    return Err(Error::Internal("could not bracket the Bose fugacity".into()));
                }
            }
        }
    }
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::Internal(format!("fugacity bracket [{lo}, {hi}] does not straddle the root")));
    }

    let mut side = 0i8;
    for _ in 0..200 {
        let mut w = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(w > lo && w < hi) {
            w = 0.5 * (lo + hi);
        }
        let gw = g(w)?;
        if gw.abs() <= 1e-14 || (hi - lo) <= 1e-15 * (1.0 + w.abs()) {
            return Ok(w);
        }
        if gw < 0.0 {
            lo = w;
            g_lo = gw;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = w;
            g_hi = gw;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Internal("fugacity iteration did not converge".into()))
}

/// `f₀ = μρ − p(β, μ)`, the ideal-gas free energy density at a solved state.
pub fn ideal_free_energy(state: &ThermoState) -> Result<f64> {
    state.validate()?;
    let p = pressure(state.beta, state.z, state.n, state.stats)?;
    Ok(state.mu * state.rho - p)
}

/// The function whose supremum over μ defines `f₀`: `μρ − p(β, μ)`.
pub fn free_energy_objective(beta: f64, rho: f64, mu: f64, n: u32, stats: Statistics) -> Result<f64> {
    let z = (beta * mu).exp();
    Ok(mu * rho - pressure(beta, z, n, stats)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maxwell–Boltzmann series `Σ (∓1)^{ℓ+1} z^ℓ ℓ^{-3/2} (4πβ)^{-3/2}`.
    fn series_density(beta: f64, z: f64, stats: Statistics, terms: usize) -> f64 {
        let mut sum = 0.0;
        for l in 1..=terms {
            let s = match stats {
                Statistics::Fermi if l % 2 == 0 => -1.0,
                _ => 1.0,
            };
            sum += s * z.powi(l as i32) * (l as f64).powf(-1.5);
        }
        sum * (4.0 * PI * beta).powf(-1.5)
    }

    #[test]
    fn occupation_examples() {
        let v = momentum_occupation(0.0, 1.0, 1.0, Statistics::Fermi).unwrap();
        assert_eq!(v, 0.5);
        let b = momentum_occupation(1.0, 1.0, 0.5, Statistics::Bose).unwrap();
        let series: f64 = (1..200).map(|l| 0.5f64.powi(l) * (-(l as f64)).exp()).sum();
        assert!((b - 1.0 / (2.0 * std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert!((b - series).abs() < 1e-15);
        assert!((b - 0.225_399_673_560_564_1).abs() < 1e-15);
        let far = momentum_occupation(40.0, 1.0, 3.0, Statistics::Fermi).unwrap();
        assert!(far < 1e-300);
    }

    #[test]
    fn occupation_decreases_in_momentum() {
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let mut prev = f64::INFINITY;
            for i in 0..100 {
                let v = momentum_occupation(0.1 * i as f64, 1.3, 0.7, stats).unwrap();
                assert!(v <= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn bose_rejects_condensed_fugacity() {
        assert!(momentum_occupation(1.0, 1.0, 1.0, Statistics::Bose).is_err());
        assert!(momentum_occupation(1.0, 1.0, 1.5, Statistics::Bose).is_err());
        assert!(density_from_fugacity(1.0, 1.5, 1, Statistics::Bose).is_err());
    }

    #[test]
    fn dilute_density_matches_series() {
        for stats in [Statistics::Fermi, Statistics::Bose] {
            for &z in &[1e-6, 1e-3, 0.3] {
                let d = density_from_fugacity(1.0, z, 1, stats).unwrap();
                let oracle = series_density(1.0, z, stats, 400);
                assert!(((d - oracle) / oracle).abs() < 1e-12, "{stats} z={z}: {d} vs {oracle}");
            }
        }
        let tiny = density_from_fugacity(1.0, 1e-9, 1, Statistics::Fermi).unwrap();
        let leading = 1e-9 * (4.0 * PI).powf(-1.5);
        assert!(((tiny - leading) / leading).abs() < 1e-8);
    }

    #[test]
    fn fermi_below_bose_at_same_fugacity() {
        let f = density_from_fugacity(1.0, 0.3, 1, Statistics::Fermi).unwrap();
        let b = density_from_fugacity(1.0, 0.3, 1, Statistics::Bose).unwrap();
        assert!(f < b);
    }

    #[test]
    fn zeta_and_critical_density() {
        // Partial sums to 10^7 with the integral tail bounds
        // ∫_{N+1}^∞ ≤ tail ≤ ∫_N^∞ bracket ζ(3/2) to within 2e-11.
        let n = 10_000_000u64;
        let head: f64 = (1..=n).rev().map(|l| (l as f64).powf(-1.5)).sum();
        let lower = head + 2.0 / ((n + 1) as f64).sqrt();
        let upper = head + 2.0 / (n as f64).sqrt();
        let zeta = zeta_three_halves();
        assert!(zeta > lower - 1e-13 && zeta < upper + 1e-13, "{lower} {zeta} {upper}");
        assert!((zeta - 2.612_375_348_685_488).abs() < 1e-13);
        let rc = critical_density(1.0, 1);
        assert!((rc - 0.058_643_621_347_644_42).abs() < 1e-15);
        assert!((critical_density(4.0, 1) - rc / 8.0).abs() < 1e-17);
        assert!((critical_density(1.0, 2) - 2.0 * rc).abs() < 1e-17);
    }

    #[test]
    fn bose_boundary_density_is_critical() {
        let d = density_from_fugacity(1.0, 1.0, 1, Statistics::Bose).unwrap();
        let rc = critical_density(1.0, 1);
        assert!(((d - rc) / rc).abs() < 1e-10, "{d} vs {rc}");
    }

    #[test]
    fn solve_round_trip_bose_half_critical() {
        let rho = 0.5 * critical_density(1.0, 1);
        let st = solve_fugacity(1.0, rho, 1, Statistics::Bose).unwrap();
        assert!(st.z > 0.0 && st.z < 1.0);
        let back = density_from_fugacity(1.0, st.z, 1, Statistics::Bose).unwrap();
        assert!(((back - rho) / rho).abs() <= 1e-10);
        assert!((st.z - (st.beta * st.mu).exp()).abs() <= 1e-15 * st.z);
    }

    #[test]
    fn dilute_fermi_fugacity_inverts_series() {
        // ρ(4πβ)^{3/2}/n = 0.01 ⇒ z = 0.01 + 2^{-3/2} z² + ... to second order.
        let beta = 1.0;
        let rho = 0.01 * (4.0 * PI * beta).powf(-1.5);
        let st = solve_fugacity(beta, rho, 1, Statistics::Fermi).unwrap();
        let y = 0.01;
        let second_order = y + 2f64.powf(-1.5) * y * y;
        assert!((st.z - second_order).abs() < 3.0 * y * y * y, "{}", st.z);
        assert!((st.z / 0.01 - 1.0).abs() < 0.01);
    }

    #[test]
    fn bose_at_critical_density_condenses() {
        let rc = critical_density(1.0, 1);
        match solve_fugacity(1.0, rc, 1, Statistics::Bose) {
            Err(Error::Condensation { critical, .. }) => assert_eq!(critical, rc),
            other => panic!("expected condensation error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_fermi_round_trip() {
        for &beta in &[0.1, 1.0, 30.0] {
            let st = solve_fugacity(beta, 1.0, 2, Statistics::Fermi).unwrap();
            let back = density_from_fugacity(beta, st.z, 2, Statistics::Fermi).unwrap();
            assert!(((back - 1.0) / 1.0).abs() <= 1e-10, "beta={beta}");
        }
    }

    #[test]
    fn classical_limit_free_energy() {
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let beta = 1.0;
            let rho = 1e-6 * (4.0 * PI * beta).powf(-1.5);
            let st = solve_fugacity(beta, rho, 1, stats).unwrap();
            let f0 = ideal_free_energy(&st).unwrap();
            let mb = rho / beta * ((rho * (4.0 * PI * beta).powf(1.5)).ln() - 1.0);
            assert!(((f0 - mb) / mb).abs() < 1e-5, "{stats}: {f0} vs {mb}");
        }
    }

    #[test]
    fn envelope_maximised_at_solved_mu() {
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let st = solve_fugacity(1.0, 0.02, 1, stats).unwrap();
            let at = free_energy_objective(1.0, 0.02, st.mu, 1, stats).unwrap();
            for d in [-0.01, 0.01] {
                let off = free_energy_objective(1.0, 0.02, st.mu + d, 1, stats).unwrap();
                assert!(off < at, "{stats}: {off} >= {at}");
            }
            assert_eq!(at, ideal_free_energy(&st).unwrap());
        }
    }

    #[test]
    fn homogeneity_in_beta() {
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let d1 = density_from_fugacity(1.0, 0.4, 1, stats).unwrap();
            let d3 = density_from_fugacity(3.0, 0.4, 1, stats).unwrap();
            assert!((d3 - 3f64.powf(-1.5) * d1).abs() <= 1e-15 * d1);
        }
    }

    #[test]
    fn statistics_parse_and_signs() {
        assert_eq!("Fermi".parse::<Statistics>().unwrap(), Statistics::Fermi);
        assert_eq!("bose".parse::<Statistics>().unwrap(), Statistics::Bose);
        assert!("anyon".parse::<Statistics>().is_err());
        assert_eq!(Statistics::Fermi.upper_minus(), -1.0);
        assert_eq!(Statistics::Bose.upper_plus(), -1.0);
    }
}
