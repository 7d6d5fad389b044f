//! Translation-invariant one-particle density matrices on a periodic box of
//! side `L`. They are diagonal in plane waves `e^{ipx}`, `p ∈ (2π/L)ℤ³`, so
//! only the occupations are stored.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::eta::EtaCutoff;
use crate::quasifree::OnePdm;
use crate::statmech::{occupation_reduced, Statistics, ThermoState};

/// Occupations below this are dropped from the mode set.
pub const OCCUPATION_CUTOFF: f64 = 1e-14;
/// Largest mode count converted to a dense matrix.
pub const MAX_DENSE_MODES: usize = 4096;

/// Occupations on the cube of integer vectors `|m_i| ≤ cutoff`, `p = 2πm/L`,
/// for one internal state; `n` copies are implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneWavePdm {
    pub side: f64,
    pub cutoff: i32,
    pub n: u32,
    pub stats: Statistics,
    occupations: Vec<f64>,
}

impl PlaneWavePdm {
    fn width(&self) -> usize {
        (2 * self.cutoff + 1) as usize
    }

    fn index(&self, m: [i32; 3]) -> Option<usize> {
        let c = self.cutoff;
        if m.iter().any(|&k| k < -c || k > c) {
            return None;
        }
        let w = self.width();
        Some(((m[0] + c) as usize * w + (m[1] + c) as usize) * w + (m[2] + c) as usize)
    }

    fn mode_of(&self, i: usize) -> [i32; 3] {
        let w = self.width();
        let c = self.cutoff;
        [(i / (w * w)) as i32 - c, ((i / w) % w) as i32 - c, (i % w) as i32 - c]
    }

    pub fn momentum(&self, m: [i32; 3]) -> [f64; 3] {
        m.map(|k| 2.0 * PI * k as f64 / self.side)
    }

    /// Occupation of mode `m`; zero outside the stored cube.
    pub fn occupation(&self, m: [i32; 3]) -> f64 {
        self.index(m).map_or(0.0, |i| self.occupations[i])
    }

    /// All stored modes with their occupations.
    pub fn modes(&self) -> impl Iterator<Item = ([i32; 3], f64)> + '_ {
        self.occupations.iter().enumerate().map(|(i, &g)| (self.mode_of(i), g))
    }

    /// Eigenvalues (per internal state), in storage order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.occupations
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(3)
    }

    /// `tr γ / |Λ|` summed over the internal states.
    pub fn density(&self) -> f64 {
        self.n as f64 * self.occupations.iter().sum::<f64>() / self.volume()
    }

    /// Position kernel `γ(x, σ; y, σ) = |Λ|⁻¹ Σ_p γ(p) e^{ip(x−y)}` at `r = x − y`.
    pub fn kernel(&self, r: [f64; 3]) -> f64 {
        let k = 2.0 * PI / self.side;
        // Mode set is symmetric under m → −m, so the sum is real.
        let sum: f64 = self
            .modes()
            .filter(|(_, g)| *g != 0.0)
            .map(|(m, g)| g * (k * (m[0] as f64 * r[0] + m[1] as f64 * r[1] + m[2] as f64 * r[2])).cos())
            .sum();
        sum / self.volume()
    }

    /// Dense matrix in the plane-wave basis, restricted to modes above the
    /// occupation cutoff (one internal state).
    pub fn to_onepdm(&self) -> Result<OnePdm> {
        let kept: Vec<f64> = self.occupations.iter().copied().filter(|&g| g > OCCUPATION_CUTOFF).collect();
        if kept.len() > MAX_DENSE_MODES {
            return Err(domain(format!("{} modes exceed the dense limit of {MAX_DENSE_MODES}", kept.len())));
        }
        OnePdm::diagonal(&kept, self.stats)
    }
}

/// γ₀ on the box `[0, L)³`, `|Λ|⁻¹ Σ_p γ₀(p) e^{ip(x−y)}`, keeping the modes
/// `|m_i| ≤ cutoff`.
///
/// Fails with [`Error::Truncation`] when a mode just outside the cube still
/// has occupation above [`OCCUPATION_CUTOFF`].
pub fn periodic_gamma0(side: f64, cutoff: i32, state: &ThermoState) -> Result<PlaneWavePdm> {
    state.validate()?;
    if !(side > 0.0) || !side.is_finite() {
        return Err(domain(format!("box side must be positive, got {side}")));
    }
    if cutoff < 0 {
        return Err(domain("mode cutoff must be nonnegative"));
    }
    let k = 2.0 * PI / side;
    let log_z = state.log_fugacity();
    let occ = |p2: f64| occupation_reduced(state.beta * p2, log_z, state.stats);
    let edge = k * (cutoff + 1) as f64;
    if occ(edge * edge) > OCCUPATION_CUTOFF {
        return Err(Error::Truncation(format!(
            "mode cutoff {cutoff} drops occupations up to {:.3e}",
            occ(edge * edge)
        )));
    }
    let w = (2 * cutoff + 1) as usize;
    let occupations = (0..w * w * w)
        .map(|i| {
            let m = [(i / (w * w)) as i32 - cutoff, ((i / w) % w) as i32 - cutoff, (i % w) as i32 - cutoff];
            let p2 = k * k * m.iter().map(|&c| (c * c) as f64).sum::<f64>();
            let g = occ(p2);
            if g > OCCUPATION_CUTOFF {
                g
            } else {
                0.0
            }
        })
        .collect();
    Ok(PlaneWavePdm { side, cutoff, n: state.n, stats: state.stats, occupations })
}

/// Smallest cutoff accepted by [`periodic_gamma0`].
pub fn minimal_mode_cutoff(side: f64, state: &ThermoState) -> Result<i32> {
    state.validate()?;
    // γ₀(p) ≤ OCCUPATION_CUTOFF once βp² ≥ ln z + ln(1/cutoff + 1).
    let a = state.log_fugacity() + (1.0 / OCCUPATION_CUTOFF).ln_1p();
    let p = (a.max(0.0) / state.beta).sqrt();
    Ok((p * side / (2.0 * PI)).ceil() as i32)
}

/// `γ_d(x; y) = γ₀(x; y) η_d^per(x − y)` together with its plane-wave
/// eigenvalues.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffPdm {
    pub gamma0: PlaneWavePdm,
    pub eta: EtaCutoff,
    /// Eigenvalues `|Λ|⁻¹ Σ_q η̂_d(q) γ₀(p − q)`.
    pub modes: PlaneWavePdm,
    /// Points per axis of the real-space sampling grid.
    pub samples: usize,
}

impl CutoffPdm {
    /// Kernel from the product form; exactly zero at separations `≥ d`.
    pub fn kernel(&self, r: [f64; 3]) -> f64 {
        let e = self.eta.periodic(r);
        if e == 0.0 {
            0.0
        } else {
            self.gamma0.kernel(r) * e
        }
    }

    /// Kernel summed from the convolved eigenvalues.
    pub fn kernel_from_modes(&self, r: [f64; 3]) -> f64 {
        self.modes.kernel(r)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.modes.eigenvalues()
    }
}

/// `|q| d` beyond which `η̂(qd) / η̂(0) < 1e-14`, so that aliased weights are
/// negligible.
const ETA_FOURIER_RANGE: f64 = 130.0;
/// Largest real-space sampling grid per axis.
const MAX_SAMPLES: usize = 256;

/// In-place 3-D DFT of an `n × n × n` array stored with the last index fastest.
fn fft3(data: &mut [Complex64], n: usize, direction: FftDirection) {
    let fft = FftPlanner::new().plan_fft(n, direction);
    // Last axis: contiguous rows.
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
    // Middle and first axes: gather lines into scratch buffers.
    for stride in [n, n * n] {
        let lines: Vec<Vec<Complex64>> = (0..n * n)
            .into_par_iter()
            .map(|l| {
                let base = if stride == n { (l / n) * n * n + l % n } else { l };
                let mut line: Vec<Complex64> = (0..n).map(|k| data[base + k * stride]).collect();
                fft.process(&mut line);
                line
            })
            .collect();
        for (l, line) in lines.into_iter().enumerate() {
            let base = if stride == n { (l / n) * n * n + l % n } else { l };
            for (k, v) in line.into_iter().enumerate() {
                data[base + k * stride] = v;
            }
        }
    }
}

/// Multiply the kernel of a translation-invariant γ₀ by `η_d^per`.
///
/// The eigenvalues of the product are the lattice convolution
/// `|Λ|⁻¹ Σ_q η̂_d(q) γ₀(p − q)` of nonnegative sequences. They are computed
/// by sampling the product kernel on a real-space grid fine enough that the
/// aliased part of `η̂_d` is negligible, then transforming back.
pub fn apply_eta_cutoff(gamma0: &PlaneWavePdm, eta: &EtaCutoff, d: f64) -> Result<CutoffPdm> {
    let side = gamma0.side;
    if !(d > 0.0) || 2.0 * d > side {
        return Err(domain(format!("cutoff scale d = {d} must satisfy 0 < 2d ≤ L = {side}")));
    }
    let eta = eta.clone().with_scale(d)?.with_period(side)?;

    let half = ((ETA_FOURIER_RANGE * side / (2.0 * PI * d)).ceil() as usize).max(gamma0.cutoff as usize + 1);
    let n = (2 * half).next_multiple_of(16);
    if n > MAX_SAMPLES {
        return Err(Error::Truncation(format!(
            "resolving η_d at d = {d} in a box of side {side} needs {n} samples per axis (limit {MAX_SAMPLES})"
        )));
    }
    let wrap = |m: i32| m.rem_euclid(n as i32) as usize;
    let mut data = vec![Complex64::new(0.0, 0.0); n * n * n];
    for (m, g) in gamma0.modes() {
        if g != 0.0 {
            data[(wrap(m[0]) * n + wrap(m[1])) * n + wrap(m[2])] = Complex64::new(g, 0.0);
        }
    }
    // Kernel up to the factor |Λ|⁻¹, times η_d^per on the grid.
    fft3(&mut data, n, FftDirection::Inverse);
    let h = side / n as f64;
    data.par_chunks_mut(n * n).enumerate().for_each(|(a, plane)| {
        for b in 0..n {
            for c in 0..n {
                let e = eta.periodic([a as f64 * h, b as f64 * h, c as f64 * h]);
                plane[b * n + c] *= e;
            }
        }
    });
    fft3(&mut data, n, FftDirection::Forward);

    let cutoff = (n / 2 - 1) as i32;
    let w = (2 * cutoff + 1) as usize;
    let scale = 1.0 / (n * n * n) as f64;
    let occupations = (0..w * w * w)
        .map(|i| {
            let m = [(i / (w * w)) as i32 - cutoff, ((i / w) % w) as i32 - cutoff, (i % w) as i32 - cutoff];
            data[(wrap(m[0]) * n + wrap(m[1])) * n + wrap(m[2])].re * scale
        })
        .collect();
    let modes = PlaneWavePdm { side, cutoff, n: gamma0.n, stats: gamma0.stats, occupations };
    Ok(CutoffPdm { gamma0: gamma0.clone(), eta, modes, samples: n })
}
