//! Quasi-free states on finitely many modes, described by their one-particle
//! density matrix γ.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde_json::Value;

use crate::coulomb::ball_overlap;
use crate::error::{domain, Error, Result};
use crate::exchange::gamma_tilde;
use crate::linalg::{
    from_spectrum, hermitian_eigen, hermitian_eigenvalues, hermiticity_defect, matrix_to_json, random_unitary,
    real_trace, CMatrix,
};
use crate::quadrature::Integrator;
use crate::statmech::{Statistics, ThermoState};

/// Tolerance on `M − M*` when validating a one-particle density matrix.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Tolerance on the spectral constraints `0 ≤ γ (≤ 1)`.
pub const SPECTRUM_TOLERANCE: f64 = 1e-10;
/// Eigenvalues at or below this are treated as exact zeros of γ or 1 ∓ γ.
const BRANCH_POINT: f64 = 1e-300;

/// One-particle density matrix of a quasi-free state.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePdm {
    matrix: CMatrix,
    stats: Statistics,
}

impl OnePdm {
    /// Validate Hermiticity and the spectrum: `[0, 1]` for fermions, `[0, ∞)`
    /// for bosons.
    pub fn new(matrix: CMatrix, stats: Statistics) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(domain("one-particle density matrix must be square"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("one-particle density matrix has non-finite entries"));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOLERANCE {
            return Err(domain(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        let ev = hermitian_eigenvalues(&matrix);
        if let Some(&lo) = ev.first() {
            if lo < -SPECTRUM_TOLERANCE {
                return Err(domain(format!("negative occupation {lo}")));
            }
        }
        if stats == Statistics::Fermi {
            if let Some(&hi) = ev.last() {
                if hi > 1.0 + SPECTRUM_TOLERANCE {
                    return Err(domain(format!("fermionic occupation {hi} exceeds 1")));
                }
            }
        }
        Ok(Self { matrix, stats })
    }

    pub fn diagonal(occupations: &[f64], stats: Statistics) -> Result<Self> {
        let d = nalgebra::DVector::from_iterator(occupations.len(), occupations.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(CMatrix::from_diagonal(&d), stats)
    }

    /// Gibbs one-particle density matrix `(e^{βh} ± 1)^{-1}`.
    pub fn gibbs(h: &CMatrix, beta: f64, stats: Statistics) -> Result<Self> {
        let (values, vectors) = hermitian_eigen(h);
        let occ = values
            .iter()
            .map(|&e| {
                let a = beta * e;
                match stats {
                    Statistics::Fermi => Ok(if a > 0.0 { (-a).exp() / (1.0 + (-a).exp()) } else { 1.0 / (a.exp() + 1.0) }),
                    Statistics::Bose if a > 0.0 => Ok(1.0 / a.exp_m1()),
                    Statistics::Bose => Err(domain("bosonic Gibbs state needs a positive one-particle Hamiltonian")),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(from_spectrum(&vectors, &occ), stats)
    }

    /// `V diag(u) V*` with Haar `V` and `u` uniform in (0.05, 0.95) for
    /// fermions, (0.05, 3) for bosons.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, stats: Statistics) -> Self {
        let hi = match stats {
            Statistics::Fermi => 0.95,
            Statistics::Bose => 3.0,
        };
        let u: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..hi)).collect();
        let v = random_unitary(rng, dim);
        Self { matrix: from_spectrum(&v, &u), stats }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn stats(&self) -> Statistics {
        self.stats
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Expected particle number.
    pub fn trace(&self) -> f64 {
        real_trace(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `V* γ V` for an isometry `V`: the restriction to the range of `V V*`.
    pub fn compress(&self, v: &CMatrix) -> Result<Self> {
        if v.nrows() != self.dim() {
            return Err(domain("isometry does not match the mode space"));
        }
        Self::new(v.adjoint() * &self.matrix * v, self.stats)
    }

    /// Restriction to a subset of the modes (a principal submatrix).
    pub fn restrict_modes(&self, modes: &[usize]) -> Result<Self> {
        if modes.iter().any(|&m| m >= self.dim()) {
            return Err(domain("mode index out of range"));
        }
        let m = CMatrix::from_fn(modes.len(), modes.len(), |r, c| self.matrix[(modes[r], modes[c])]);
        Ok(Self { matrix: m, stats: self.stats })
    }

    /// Block-diagonal `γ₁ ⊕ γ₂`.
    pub fn direct_sum(&self, other: &OnePdm) -> Result<Self> {
        if self.stats != other.stats {
            return Err(domain("direct sum of density matrices with different statistics"));
        }
        let (a, b) = (self.dim(), other.dim());
        let mut m = CMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        Ok(Self { matrix: m, stats: self.stats })
    }

    /// `(γ₁ + γ₂)/2`.
    pub fn midpoint(&self, other: &OnePdm) -> Result<Self> {
        if self.stats != other.stats || self.dim() != other.dim() {
            return Err(domain("midpoint of incompatible density matrices"));
        }
        Self::new((&self.matrix + &other.matrix) * Complex64::new(0.5, 0.0), self.stats)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "stats": self.stats, "matrix": matrix_to_json(&self.matrix) })
    }
}

fn check_projection(x: &CMatrix, dim: usize) -> Result<()> {
    if x.nrows() != dim || x.ncols() != dim {
        return Err(domain("projection does not match the mode space"));
    }
    let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let idem = (x * x - x).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
    if hermiticity_defect(x) > 1e-12 || idem > 1e-12 {
        return Err(domain("X must be a Hermitian projection"));
    }
    Ok(())
}

/// Orthogonal projection onto a subset of the modes.
pub fn mode_projection(dim: usize, modes: &[usize]) -> CMatrix {
    let mut x = CMatrix::zeros(dim, dim);
    for &m in modes {
        x[(m, m)] = Complex64::new(1.0, 0.0);
    }
    x
}

/// `(tr Xγ)² ∓ tr (Xγ)²`, the expected number of ordered pairs in the range
/// of `X`: minus for fermions, plus for bosons.
pub fn pair_count_quasifree(gamma: &OnePdm, x: &CMatrix) -> Result<f64> {
    check_projection(x, gamma.dim())?;
    let xg = x * gamma.matrix();
    let t = xg.trace().re;
    let t2 = (&xg * &xg).trace().re;
    Ok(t * t + gamma.stats().upper_minus() * t2)
}

/// `Σ_j ⟨v_j|A|v_j⟩ f(λ_j)` over the eigenpairs of `B`, i.e. `tr A f(B)`.
/// Returns +∞ when `f` is singular on an eigenvalue that `A` sees.
fn trace_against_log(a: &CMatrix, values: &[f64], vectors: &CMatrix) -> f64 {
    let mut sum = 0.0;
    for (j, &lam) in values.iter().enumerate() {
        let v = vectors.column(j);
        let weight = (v.adjoint() * a * v)[(0, 0)].re;
        if lam <= BRANCH_POINT {
            if weight > BRANCH_POINT {
                return f64::NEG_INFINITY;
            }
            continue;
        }
        sum += weight * lam.ln();
    }
    sum
}

fn entropy_term(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Relative entropy `S(Γ_ω, Γ_γ)` of two quasi-free states:
///
/// `tr ω(ln ω − ln γ) ± tr (1 ∓ ω)(ln(1 ∓ ω) − ln(1 ∓ γ))`.
///
/// Returns `f64::INFINITY` when the support of Γ_ω is not contained in that
/// of Γ_γ (an eigenvalue of γ, or of 1 − γ for fermions, vanishes where ω
/// does not).
pub fn rel_entropy_quasifree(omega: &OnePdm, gamma: &OnePdm) -> Result<f64> {
    if omega.stats() != gamma.stats() || omega.dim() != gamma.dim() {
        return Err(domain("relative entropy between incompatible density matrices"));
    }
    let stats = gamma.stats();
    let s = stats.upper_minus();
    let dim = gamma.dim();
    let id = CMatrix::identity(dim, dim);
    let complement = |m: &CMatrix| &id + m * Complex64::new(s, 0.0);

    let w = omega.eigenvalues();
    let self_term: f64 = w.iter().map(|&x| entropy_term(x)).sum::<f64>()
        - s * w.iter().map(|&x| entropy_term(1.0 + s * x)).sum::<f64>();

    let (g, gv) = hermitian_eigen(gamma.matrix());
    let cross = trace_against_log(omega.matrix(), &g, &gv);
    let cg: Vec<f64> = g.iter().map(|&x| 1.0 + s * x).collect();
    let cross_complement = trace_against_log(&complement(omega.matrix()), &cg, &gv);
    if cross == f64::NEG_INFINITY || cross_complement == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(self_term - cross + s * cross_complement)
}

/// Free energy of the quasi-free Gibbs state of `h`:
/// `−β⁻¹ tr ln(1 + e^{−βh})` for fermions, `β⁻¹ tr ln(1 − e^{−βh})` for bosons.
pub fn gibbs_free_energy(h: &CMatrix, beta: f64, stats: Statistics) -> Result<f64> {
    let values = hermitian_eigenvalues(h);
    let mut sum = 0.0;
    for e in values {
        let a = beta * e;
        sum += match stats {
            Statistics::Fermi => -(if a > 0.0 { (-a).exp().ln_1p() } else { -a + a.exp().ln_1p() }),
            Statistics::Bose if a > 0.0 => (-(-a).exp()).ln_1p(),
            Statistics::Bose => return Err(domain("bosonic Gibbs state needs a positive one-particle Hamiltonian")),
        };
    }
    Ok(sum / beta)
}

/// Both sides of `β⁻¹ S(Γ_ω, Γ_γ) = tr hω − β⁻¹ tr s(ω) − F` with γ the Gibbs
/// density matrix of `h` and `s(t) = −t ln t ∓ (1 ∓ t) ln(1 ∓ t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyIdentity {
    pub entropy_side: f64,
    pub energy_side: f64,
    pub free_energy: f64,
}

impl FreeEnergyIdentity {
    pub fn residual(&self) -> f64 {
        (self.entropy_side - self.energy_side).abs()
    }

    /// `residual ≤ 1e-10 (1 + |F|)`.
    pub fn holds(&self) -> bool {
        self.residual() <= 1e-10 * (1.0 + self.free_energy.abs())
    }
}

pub fn free_energy_identity_check(omega: &OnePdm, h: &CMatrix, beta: f64) -> Result<FreeEnergyIdentity> {
    let stats = omega.stats();
    if h.nrows() != omega.dim() {
        return Err(domain("Hamiltonian does not match the mode space"));
    }
    let gamma = OnePdm::gibbs(h, beta, stats)?;
    let entropy_side = rel_entropy_quasifree(omega, &gamma)? / beta;
    let s = stats.upper_minus();
    let energy = (h * omega.matrix()).trace().re;
    let w = omega.eigenvalues();
    // tr s(ω) = −tr ω ln ω ∓ tr (1 ∓ ω) ln(1 ∓ ω)
    let entropy: f64 = -w.iter().map(|&x| entropy_term(x)).sum::<f64>()
        + s * w.iter().map(|&x| entropy_term(1.0 + s * x)).sum::<f64>();
    let free_energy = gibbs_free_energy(h, beta, stats)?;
    Ok(FreeEnergyIdentity { entropy_side, energy_side: energy - entropy / beta - free_energy, free_energy })
}

/// Per-volume integrated pair count in balls of radius `r` of the
/// translation-invariant ideal gas,
/// `4π ∫₀^{2r} s² J_r(s) [ρ² ∓ n γ̃₀(s)²] ds`.
pub fn integrated_pair_count(state: &ThermoState, r: f64) -> Result<f64> {
    state.validate()?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(format!("ball radius must be positive, got {r}")));
    }
    let sign = state.stats.upper_minus();
    let rho = state.rho;
    let n = state.n as f64;
    let failure = std::cell::Cell::new(None);
    let f = |s: f64| {
        let g = match gamma_tilde(state, s) {
            Ok(g) => g,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        };
        s * s * ball_overlap(r, s).unwrap_or(0.0) * (rho * rho + sign * n * g * g)
    };
    let est = Integrator::new(1e-10).integrate(f, 0.0, 2.0 * r)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if !est.value.is_finite() {
        return Err(Error::Internal("pair count integrand is not finite".into()));
    }
    Ok(4.0 * PI * est.value)
}

/// Midpoint convexity margin `½S(ω‖γ₁) + ½S(ω‖γ₂) − S(ω‖(γ₁+γ₂)/2)`.
pub fn convexity_margin(omega: &OnePdm, g1: &OnePdm, g2: &OnePdm) -> Result<f64> {
    let mid = g1.midpoint(g2)?;
    Ok(0.5 * rel_entropy_quasifree(omega, g1)? + 0.5 * rel_entropy_quasifree(omega, g2)?
        - rel_entropy_quasifree(omega, &mid)?)
}

/// Keep the real matrix type in one place for callers building projections.
pub fn real_matrix_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
