//! Brute-force Fock space on a handful of modes.
//!
//! States are density matrices in the occupation-number basis. Fermionic
//! creation operators act in mode order: `|n⟩ = (a_0†)^{n_0} ⋯ (a_{M−1}†)^{n_{M−1}} |0⟩`,
//! so moving an operator past occupied lower modes costs a sign.
//!
//! The bosonic space is truncated by a cap on the total particle number rather
//! than on each mode. Number-conserving operators such as `dΓ(h)` then act
//! within the truncated space, which a per-mode cap would not allow for
//! non-diagonal `h`.

use std::collections::HashMap;
use std::ops::Range;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{domain, Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, hermiticity_defect, real_trace, CMatrix};
use crate::quasifree::OnePdm;
use crate::statmech::Statistics;

pub const MAX_FERMI_MODES: usize = 12;
pub const MAX_BOSE_MODES: usize = 6;
/// Largest bosonic dimension, `9⁶`.
pub const MAX_BOSE_DIM: usize = 531_441;
/// Largest dimension for which dense density matrices are formed.
pub const MAX_DENSE_DIM: usize = 4096;
/// Discarded Gibbs weight above which a bosonic cap is rejected.
pub const BOSE_TAIL_TOLERANCE: f64 = 1e-8;
/// Target for the adaptive cap: the discarded part of `E[(1 + N)²]`, which
/// bounds the truncation error of pair counts.
pub const ADAPTIVE_MOMENT_TOLERANCE: f64 = 1e-11;
pub const STATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct FockSpace {
    stats: Statistics,
    modes: usize,
    /// Total-number cap (bosons only).
    cap: Option<usize>,
    basis: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    sectors: Vec<Range<usize>>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All occupation vectors on `modes` modes with total `n`, each entry at most
/// `max_each`, in lexicographic order.
fn compositions(modes: usize, n: usize, max_each: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, left: usize, modes: usize, max_each: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == modes {
            if left <= max_each {
                prefix.push(left as u8);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for k in (0..=left.min(max_each)).rev() {
            prefix.push(k as u8);
            rec(prefix, left - k, modes, max_each, out);
            prefix.pop();
        }
    }
    if modes == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return;
    }
    rec(&mut Vec::with_capacity(modes), n, modes, max_each, out);
}

impl FockSpace {
    pub fn fermi(modes: usize) -> Result<Self> {
        if modes > MAX_FERMI_MODES {
            return Err(domain(format!("at most {MAX_FERMI_MODES} fermionic modes, got {modes}")));
        }
        Ok(Self::build(Statistics::Fermi, modes, modes, 1, None))
    }

    /// Bosonic space with at most `cap` particles in total.
    pub fn bose(modes: usize, cap: usize) -> Result<Self> {
        if modes > MAX_BOSE_MODES {
            return Err(domain(format!("at most {MAX_BOSE_MODES} bosonic modes, got {modes}")));
        }
        let dim = binomial(cap + modes, modes);
        if dim > MAX_BOSE_DIM || cap > u8::MAX as usize {
            return Err(domain(format!("bosonic space with {modes} modes and cap {cap} has dimension {dim}")));
        }
        Ok(Self::build(Statistics::Bose, modes, cap, cap, Some(cap)))
    }

    pub fn new(stats: Statistics, modes: usize, cap: usize) -> Result<Self> {
        match stats {
            Statistics::Fermi => Self::fermi(modes),
            Statistics::Bose => Self::bose(modes, cap),
        }
    }

    fn build(stats: Statistics, modes: usize, top: usize, max_each: usize, cap: Option<usize>) -> Self {
        let mut basis = Vec::new();
        let mut sectors = Vec::new();
        for n in 0..=top {
            let start = basis.len();
            compositions(modes, n, max_each, &mut basis);
            sectors.push(start..basis.len());
        }
        let index = basis.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { stats, modes, cap, basis, index, sectors }
    }

    pub fn stats(&self) -> Statistics {
        self.stats
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn occupations(&self, state: usize) -> &[u8] {
        &self.basis[state]
    }

    pub fn index_of(&self, occupations: &[u8]) -> Option<usize> {
        self.index.get(occupations).copied()
    }

    /// Basis index ranges of the fixed-particle-number sectors.
    pub fn sectors(&self) -> &[Range<usize>] {
        &self.sectors
    }

    /// `a_i† a_j |s⟩` as `(index, amplitude)`, or `None` if it vanishes.
    pub fn hop(&self, i: usize, j: usize, state: usize) -> Option<(usize, f64)> {
        let mut occ = self.basis[state].clone();
        if occ[j] == 0 {
            return None;
        }
        let amp = match self.stats {
            Statistics::Fermi => {
                let before_j: u32 = occ[..j].iter().map(|&n| n as u32).sum();
                occ[j] = 0;
                if occ[i] == 1 {
                    return None;
                }
                let before_i: u32 = occ[..i].iter().map(|&n| n as u32).sum();
                occ[i] = 1;
                if (before_i + before_j).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
            Statistics::Bose => {
                let a = (occ[j] as f64).sqrt();
                occ[j] -= 1;
                occ[i] += 1;
                a * (occ[i] as f64).sqrt()
            }
        };
        Some((self.index[&occ], amp))
    }

    /// `dΓ(h) = Σ_ij h_ij a_i† a_j` restricted to the basis range `block`.
    pub fn second_quantize_block(&self, h: &CMatrix, block: Range<usize>) -> CMatrix {
        let len = block.len();
        let mut out = CMatrix::zeros(len, len);
        for s in block.clone() {
            for i in 0..self.modes {
                for j in 0..self.modes {
                    let hij = h[(i, j)];
                    if hij == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    if let Some((t, amp)) = self.hop(i, j, s) {
                        out[(t - block.start, s - block.start)] += hij * amp;
                    }
                }
            }
        }
        out
    }

    /// `dΓ(h) v` without forming the matrix.
    pub fn apply_second_quantized(&self, h: &CMatrix, v: &[(usize, Complex64)]) -> Vec<(usize, Complex64)> {
        let mut acc: HashMap<usize, Complex64> = HashMap::new();
        for &(s, c) in v {
            for i in 0..self.modes {
                for j in 0..self.modes {
                    let hij = h[(i, j)];
                    if hij == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    if let Some((t, amp)) = self.hop(i, j, s) {
                        *acc.entry(t).or_default() += hij * c * amp;
                    }
                }
            }
        }
        let mut out: Vec<(usize, Complex64)> = acc.into_iter().collect();
        out.sort_by_key(|&(t, _)| t);
        out
    }

    fn check_dense(&self) -> Result<()> {
        if self.dim() > MAX_DENSE_DIM {
            return Err(domain(format!("dense states limited to dimension {MAX_DENSE_DIM}, got {}", self.dim())));
        }
        Ok(())
    }

    fn check_hamiltonian(&self, h: &CMatrix) -> Result<()> {
        if h.nrows() != self.modes || h.ncols() != self.modes {
            return Err(domain("one-particle Hamiltonian does not match the number of modes"));
        }
        if hermiticity_defect(h) > 1e-12 {
            return Err(domain("one-particle Hamiltonian is not Hermitian"));
        }
        Ok(())
    }
}

/// Probability of `N` particles in total for independent geometric modes with
/// ratios `x_k = e^{−ε_k}`, for `N = 0..len`.
fn bose_number_distribution(epsilons: &[f64], len: usize) -> Vec<f64> {
    let mut p = vec![0.0; len];
    p[0] = 1.0;
    for &e in epsilons {
        let x = (-e).exp();
        // Convolve with (1 − x) x^n.
        for n in 1..len {
            p[n] += x * p[n - 1];
        }
        for v in p.iter_mut() {
            *v *= 1.0 - x;
        }
    }
    p
}

/// Bosonic Gibbs weight discarded by the total-number cap.
pub fn bose_tail_mass(h: &CMatrix, cap: usize) -> Result<f64> {
    let eps = positive_spectrum(h)?;
    let p = bose_number_distribution(&eps, cap + 1);
    Ok((1.0 - p.iter().sum::<f64>()).max(0.0))
}

fn positive_spectrum(h: &CMatrix) -> Result<Vec<f64>> {
    let eps = hermitian_eigenvalues(h);
    if eps.first().is_some_and(|&e| !(e > 0.0)) {
        return Err(domain("bosonic Gibbs state needs a positive one-particle Hamiltonian"));
    }
    Ok(eps)
}

/// Smallest total-number cap whose discarded part of `E[(1 + N)²]` is below
/// `tolerance`. Fails if that cap exceeds the dimension limits.
pub fn adaptive_bose_cap(h: &CMatrix, tolerance: f64) -> Result<usize> {
    let eps = positive_spectrum(h)?;
    let modes = eps.len();
    let mut len = 64;
    loop {
        let p = bose_number_distribution(&eps, len);
        let w: Vec<f64> = p.iter().enumerate().map(|(n, &q)| q * ((1 + n) as f64).powi(2)).collect();
        // The tail beyond `len` must itself be negligible before trusting the scan.
        let beyond = 1.0 - p.iter().sum::<f64>();
        if beyond * ((1 + len) as f64).powi(2) < 1e-3 * tolerance || len >= 4096 {
            let mut tail: f64 = w.iter().sum::<f64>();
            for (cap, &wn) in w.iter().enumerate() {
                tail -= wn;
                if tail <= tolerance {
                    let dim = binomial(cap + modes, modes);
                    if dim > MAX_BOSE_DIM || cap > u8::MAX as usize {
                        break;
                    }
                    return Ok(cap);
                }
            }
            return Err(Error::Truncation(format!(
                "no bosonic cap within the dimension limit reaches moment tail {tolerance:e}"
            )));
        }
        len *= 2;
    }
}

/// Density matrix of a Fock-space state.
#[derive(Debug, Clone)]
pub enum Density {
    /// Dense matrix in the occupation basis of the original modes.
    Dense(CMatrix),
    /// Diagonal in the occupation basis of the modes given by the columns of
    /// the unitary `frame`.
    Eigenframe { frame: CMatrix, weights: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct FockState {
    space: FockSpace,
    density: Density,
    /// `ln ρ` when it is known exactly (Gibbs states), which avoids resolving
    /// tiny eigenvalues numerically.
    log_density: Option<CMatrix>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl FockState {
    /// Validate Hermiticity, unit trace and positivity (to 1e−12).
    pub fn new(space: FockSpace, rho: CMatrix) -> Result<Self> {
        space.check_dense()?;
        if rho.nrows() != space.dim() || rho.ncols() != space.dim() {
            return Err(domain("density matrix does not match the Fock space"));
        }
        if hermiticity_defect(&rho) > STATE_TOLERANCE {
            return Err(domain("density matrix is not Hermitian"));
        }
        let tr = real_trace(&rho);
        if (tr - 1.0).abs() > STATE_TOLERANCE {
            return Err(domain(format!("density matrix has trace {tr}")));
        }
        let lo = hermitian_eigenvalues(&rho).first().copied().unwrap_or(0.0);
        if lo < -STATE_TOLERANCE {
            return Err(domain(format!("density matrix has eigenvalue {lo}")));
        }
        Ok(Self { space, density: Density::Dense(rho), log_density: None })
    }

    pub fn vacuum(space: FockSpace) -> Result<Self> {
        space.check_dense()?;
        let mut rho = CMatrix::zeros(space.dim(), space.dim());
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(Self { space, density: Density::Dense(rho), log_density: None })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    /// The dense matrix, if the state is stored in the original occupation basis.
    pub fn matrix(&self) -> Option<&CMatrix> {
        match &self.density {
            Density::Dense(m) => Some(m),
            Density::Eigenframe { .. } => None,
        }
    }

    fn dense(&self, what: &str) -> Result<&CMatrix> {
        self.matrix().ok_or_else(|| domain(format!("{what} needs the dense occupation-basis density matrix")))
    }

    /// One-particle density matrix `γ_ij = Tr[a_j† a_i Γ]`.
    pub fn one_pdm(&self) -> Result<OnePdm> {
        let m = self.space.modes;
        let mut gamma = CMatrix::zeros(m, m);
        match &self.density {
            Density::Dense(rho) => {
                for i in 0..m {
                    for j in 0..m {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for t in 0..self.space.dim() {
                            if let Some((s, amp)) = self.space.hop(j, i, t) {
                                acc += rho[(t, s)] * amp;
                            }
                        }
                        gamma[(i, j)] = acc;
                    }
                }
            }
            Density::Eigenframe { frame, weights } => {
                let mut occ = vec![0.0; m];
                for (s, &w) in weights.iter().enumerate() {
                    for (k, &n) in self.space.basis[s].iter().enumerate() {
                        occ[k] += w * n as f64;
                    }
                }
                for i in 0..m {
                    for j in 0..m {
                        gamma[(i, j)] = (0..m).map(|k| frame[(i, k)] * frame[(j, k)].conj() * occ[k]).sum();
                    }
                }
            }
        }
        OnePdm::new(crate::linalg::hermitian_part(&gamma), self.space.stats)
    }
}

/// Quasi-free Gibbs state `e^{−dΓ(h)}/Z` as a dense matrix, by exponentiating
/// each fixed-number block of `dΓ(h)`.
///
/// For bosons the state lives on the capped space; an error is returned when
/// the discarded weight exceeds [`BOSE_TAIL_TOLERANCE`].
pub fn quasifree_gibbs(h: &CMatrix, space: &FockSpace) -> Result<FockState> {
    space.check_hamiltonian(h)?;
    space.check_dense()?;
    if space.stats == Statistics::Bose {
        let tail = bose_tail_mass(h, space.cap.unwrap_or(0))?;
        if tail > BOSE_TAIL_TOLERANCE {
            return Err(Error::Truncation(format!("bosonic cap discards Gibbs weight {tail:e}")));
        }
    }
    let blocks: Vec<(Range<usize>, Vec<f64>, CMatrix)> = space
        .sectors
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| {
            let (values, vectors) = hermitian_eigen(&space.second_quantize_block(h, r.clone()));
            (r.clone(), values, vectors)
        })
        .collect();
    let all: Vec<f64> = blocks.iter().flat_map(|(_, v, _)| v.iter().map(|e| -e)).collect();
    let log_z = log_sum_exp(&all);
    let dim = space.dim();
    let mut rho = CMatrix::zeros(dim, dim);
    for (range, values, vectors) in &blocks {
        let d = nalgebra::DVector::from_iterator(values.len(), values.iter().map(|e| Complex64::new((-e - log_z).exp(), 0.0)));
        let block = vectors * CMatrix::from_diagonal(&d) * vectors.adjoint();
        rho.view_mut((range.start, range.start), (range.len(), range.len())).copy_from(&block);
    }
    let rho = crate::linalg::hermitian_part(&rho);
    // ln ρ = −dΓ(h) − ln Z, block by block.
    let mut log_rho = CMatrix::zeros(dim, dim);
    for (range, _, _) in &blocks {
        let mut block = -space.second_quantize_block(h, range.clone());
        for k in 0..range.len() {
            block[(k, k)] -= Complex64::new(log_z, 0.0);
        }
        log_rho.view_mut((range.start, range.start), (range.len(), range.len())).copy_from(&block);
    }
    Ok(FockState { space: space.clone(), density: Density::Dense(rho), log_density: Some(log_rho) })
}

/// The same Gibbs state stored diagonally in the eigenbasis of `h`. Works for
/// spaces far beyond the dense limit.
pub fn quasifree_gibbs_eigenframe(h: &CMatrix, space: &FockSpace) -> Result<FockState> {
    space.check_hamiltonian(h)?;
    let (eps, frame) = hermitian_eigen(h);
    if space.stats == Statistics::Bose {
        let tail = bose_tail_mass(h, space.cap.unwrap_or(0))?;
        if tail > BOSE_TAIL_TOLERANCE {
            return Err(Error::Truncation(format!("bosonic cap discards Gibbs weight {tail:e}")));
        }
    }
    let logs: Vec<f64> = space
        .basis
        .iter()
        .map(|occ| -occ.iter().zip(&eps).map(|(&n, e)| n as f64 * e).sum::<f64>())
        .collect();
    let log_z = log_sum_exp(&logs);
    let weights = logs.iter().map(|l| (l - log_z).exp()).collect();
    Ok(FockState { space: space.clone(), density: Density::Eigenframe { frame, weights }, log_density: None })
}

/// Gibbs Hamiltonian `ln[(1 ∓ γ)/γ]` of a quasi-free state with density
/// matrix γ. The spectrum of γ must avoid 0 (and 1 for fermions).
pub fn gibbs_hamiltonian(gamma: &OnePdm) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(gamma.matrix());
    let s = gamma.stats().upper_minus();
    let h: Vec<f64> = values
        .iter()
        .map(|&g| {
            let num = 1.0 + s * g;
            if g > 0.0 && num > 0.0 {
                Ok((num / g).ln())
            } else {
                Err(domain(format!("occupation {g} has no finite Gibbs Hamiltonian")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(crate::linalg::from_spectrum(&vectors, &h))
}

/// `(Tr[n_X(n_X − 1)Γ], Tr[n_X²(n_X − 1)²Γ])` with `n_X = Σ_{i∈X} a_i† a_i`.
pub fn number_moments(state: &FockState, x_modes: &[usize]) -> Result<(f64, f64)> {
    let space = &state.space;
    if x_modes.iter().any(|&i| i >= space.modes) {
        return Err(domain("pair-count modes outside the mode range"));
    }
    match &state.density {
        Density::Dense(rho) => {
            // n_X is diagonal in the occupation basis.
            let mut moments = (0.0, 0.0);
            for s in 0..space.dim() {
                let n: f64 = x_modes.iter().map(|&i| space.basis[s][i] as f64).sum();
                let w = rho[(s, s)].re;
                moments.0 += w * n * (n - 1.0);
                moments.1 += w * (n * (n - 1.0)).powi(2);
            }
            Ok(moments)
        }
        Density::Eigenframe { frame, weights } => {
            let p = crate::quasifree::mode_projection(space.modes, x_modes);
            let xf = frame.adjoint() * p * frame;
            let mut moments = (0.0, 0.0);
            for (s, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let v = space.apply_second_quantized(&xf, &[(s, Complex64::new(1.0, 0.0))]);
                let av = space.apply_second_quantized(&xf, &v);
                let norm: f64 = v.iter().map(|(_, c)| c.norm_sqr()).sum();
                let diag = v.iter().find(|(t, _)| *t == s).map_or(0.0, |(_, c)| c.re);
                // A(A − 1)|s⟩ = Av − v.
                let mut diff: HashMap<usize, Complex64> = av.into_iter().collect();
                for (t, c) in v {
                    *diff.entry(t).or_default() -= c;
                }
                moments.0 += w * (norm - diag);
                moments.1 += w * diff.values().map(|c| c.norm_sqr()).sum::<f64>();
            }
            Ok(moments)
        }
    }
}

pub fn pair_count_exact(state: &FockState, x_modes: &[usize]) -> Result<f64> {
    number_moments(state, x_modes).map(|m| m.0)
}

/// Eigenvalues below this, relative to the largest in their block, count as
/// the kernel of a density matrix.
const KERNEL_THRESHOLD: f64 = 1e-13;

/// The fixed-number sectors when both matrices are block diagonal along them,
/// otherwise the whole space as one block.
fn common_blocks(space: &FockSpace, mats: &[&CMatrix]) -> Vec<Range<usize>> {
    let blocks: Vec<Range<usize>> = space.sectors.iter().filter(|r| !r.is_empty()).cloned().collect();
    let sector_of: Vec<usize> =
        blocks.iter().enumerate().flat_map(|(k, r)| std::iter::repeat_n(k, r.len())).collect();
    let off_block = mats.iter().any(|m| {
        (0..m.nrows()).any(|i| (0..m.ncols()).any(|j| sector_of[i] != sector_of[j] && m[(i, j)].norm() > 1e-15))
    });
    if off_block {
        std::iter::once(0..space.dim()).collect()
    } else {
        blocks
    }
}

/// `Tr ρ₁(ln ρ₁ − ln ρ₂)`; `f64::INFINITY` when ρ₁ has weight on the kernel of ρ₂.
///
/// Gibbs states carry `ln ρ` exactly. Other states are diagonalised sector by
/// sector when they conserve the particle number.
pub fn rel_entropy_exact(rho1: &FockState, rho2: &FockState) -> Result<f64> {
    let a = rho1.dense("relative entropy")?;
    let b = rho2.dense("relative entropy")?;
    if a.nrows() != b.nrows() || rho1.space.stats != rho2.space.stats {
        return Err(domain("relative entropy between states on different spaces"));
    }
    let trace_product = |x: &CMatrix, y: &CMatrix| x.component_mul(&y.transpose()).sum().re;
    let mut self_term = 0.0;
    let mut cross = 0.0;
    if let Some(l1) = &rho1.log_density {
        self_term = trace_product(a, l1);
    }
    if let Some(l2) = &rho2.log_density {
        cross = trace_product(a, l2);
    }
    if rho1.log_density.is_some() && rho2.log_density.is_some() {
        return Ok(self_term - cross);
    }
    for r in common_blocks(&rho1.space, &[a, b]) {
        let (len, at) = (r.len(), (r.start, r.start));
        let ab = a.view(at, (len, len)).into_owned();
        if rho1.log_density.is_none() {
            self_term += hermitian_eigenvalues(&ab).iter().filter(|&&l| l > 0.0).map(|l| l * l.ln()).sum::<f64>();
        }
        if rho2.log_density.is_some() {
            continue;
        }
        let bb = b.view(at, (len, len)).into_owned();
        let (values, vectors) = hermitian_eigen(&bb);
        let top = values.last().copied().unwrap_or(0.0).max(0.0);
        for (j, &lam) in values.iter().enumerate() {
            let v = vectors.column(j);
            let weight = (v.adjoint() * &ab * v)[(0, 0)].re;
            if lam <= KERNEL_THRESHOLD * top {
                if weight > STATE_TOLERANCE {
                    return Ok(f64::INFINITY);
                }
                continue;
            }
            cross += weight * lam.ln();
        }
    }
    Ok(self_term - cross)
}

/// `‖ρ₁ − ρ₂‖₁`.
pub fn trace_distance(rho1: &FockState, rho2: &FockState) -> Result<f64> {
    let a = rho1.dense("trace distance")?;
    let b = rho2.dense("trace distance")?;
    if a.nrows() != b.nrows() {
        return Err(domain("trace distance between states on different spaces"));
    }
    Ok(crate::linalg::trace_norm(&(a - b)))
}

/// Partial trace onto the modes in `keep` (listed in increasing order).
///
/// Fermionic basis vectors are first reordered as (kept modes)(discarded
/// modes); the reordering sign multiplies each matrix element. This is exact
/// for states that commute with the parity, which includes every state built
/// here.
pub fn restrict_state(state: &FockState, keep: &[usize]) -> Result<FockState> {
    let rho = state.dense("restriction")?;
    let space = &state.space;
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= space.modes) {
        return Err(domain("kept modes must be increasing and within range"));
    }
    let drop: Vec<usize> = (0..space.modes).filter(|m| !keep.contains(m)).collect();
    let sub = match space.stats {
        Statistics::Fermi => FockSpace::fermi(keep.len())?,
        Statistics::Bose => FockSpace::bose(keep.len(), space.cap.unwrap_or(0))?,
    };
    let split = |s: usize| -> (usize, Vec<u8>, f64) {
        let occ = &space.basis[s];
        let kept: Vec<u8> = keep.iter().map(|&k| occ[k]).collect();
        let dropped: Vec<u8> = drop.iter().map(|&k| occ[k]).collect();
        let mut sign = 1.0;
        if space.stats == Statistics::Fermi {
            for &d in &drop {
                for &k in keep {
                    if d < k && occ[d] == 1 && occ[k] == 1 {
                        sign = -sign;
                    }
                }
            }
        }
        (sub.index[&kept], dropped, sign)
    };
    let parts: Vec<(usize, Vec<u8>, f64)> = (0..space.dim()).map(split).collect();
    let mut by_env: HashMap<&[u8], Vec<usize>> = HashMap::new();
    for (s, (_, env, _)) in parts.iter().enumerate() {
        by_env.entry(env.as_slice()).or_default().push(s);
    }
    let mut out = CMatrix::zeros(sub.dim(), sub.dim());
    for group in by_env.values() {
        for &s in group {
            for &t in group {
                let (a, _, sa) = &parts[s];
                let (b, _, sb) = &parts[t];
                out[(*a, *b)] += rho[(s, t)] * (sa * sb);
            }
        }
    }
    Ok(FockState { space: sub, density: Density::Dense(out), log_density: None })
}

impl FockState {
    pub fn to_json(&self) -> Value {
        let dens = match &self.density {
            Density::Dense(m) => json!({ "dense": crate::linalg::matrix_to_json(m) }),
            Density::Eigenframe { frame, weights } => {
                json!({ "frame": crate::linalg::matrix_to_json(frame), "weights": weights })
            }
        };
        json!({
            "stats": self.space.stats,
            "modes": self.space.modes,
            "cap": self.space.cap,
            "density": dens,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_spectrum, hermitian_function, random_unitary};
    use crate::quasifree::{mode_projection, pair_count_quasifree, rel_entropy_quasifree};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_h(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> CMatrix {
        let e: Vec<f64> = (0..m).map(|_| rng.random_range(lo..hi)).collect();
        from_spectrum(&random_unitary(rng, m), &e)
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn dimensions() {
        assert_eq!(FockSpace::fermi(5).unwrap().dim(), 32);
        assert_eq!(FockSpace::bose(3, 4).unwrap().dim(), 35);
        assert!(FockSpace::fermi(13).is_err());
        assert!(FockSpace::bose(7, 1).is_err());
        let s = FockSpace::bose(2, 3).unwrap();
        for (n, r) in s.sectors().iter().enumerate() {
            for i in r.clone() {
                assert_eq!(s.occupations(i).iter().map(|&k| k as usize).sum::<usize>(), n);
            }
        }
    }

    #[test]
    fn canonical_anticommutation() {
        // {a_i, a_j†} = δ_ij on states, checked through a_i† a_j + a_j a_i† on
        // two modes via explicit matrices of a_i.
        let s = FockSpace::fermi(3).unwrap();
        let dim = s.dim();
        let annihilate = |j: usize| {
            let mut a = CMatrix::zeros(dim, dim);
            for t in 0..dim {
                let occ = s.occupations(t);
                if occ[j] == 1 {
                    let mut o = occ.to_vec();
                    o[j] = 0;
                    let sign = if occ[..j].iter().map(|&n| n as u32).sum::<u32>() % 2 == 0 { 1.0 } else { -1.0 };
                    a[(s.index_of(&o).unwrap(), t)] = c(sign);
                }
            }
            a
        };
        for i in 0..3 {
            for j in 0..3 {
                let (ai, aj) = (annihilate(i), annihilate(j));
                let anti = &ai * aj.adjoint() + aj.adjoint() * &ai;
                let expect = if i == j { CMatrix::identity(dim, dim) } else { CMatrix::zeros(dim, dim) };
                assert!((anti - expect).norm() < 1e-15);
                // hop reproduces a_i† a_j.
                let mut hop = CMatrix::zeros(dim, dim);
                for t in 0..dim {
                    if let Some((u, amp)) = s.hop(i, j, t) {
                        hop[(u, t)] = c(amp);
                    }
                }
                assert!((hop - ai.adjoint() * &aj).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_fermi_mode_at_zero_energy() {
        let s = FockSpace::fermi(1).unwrap();
        let st = quasifree_gibbs(&CMatrix::zeros(1, 1), &s).unwrap();
        assert!((st.one_pdm().unwrap().matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fermi_gibbs_matches_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_h(&mut rng, 4, -2.0, 2.0);
        let st = quasifree_gibbs(&h, &FockSpace::fermi(4).unwrap()).unwrap();
        let expect = hermitian_function(&h, |e| 1.0 / (e.exp() + 1.0));
        assert!((st.one_pdm().unwrap().matrix() - expect).norm() < 1e-10);
        // The eigenframe route agrees.
        let ef = quasifree_gibbs_eigenframe(&h, &FockSpace::fermi(4).unwrap()).unwrap();
        assert!((ef.one_pdm().unwrap().matrix() - st.one_pdm().unwrap().matrix()).norm() < 1e-12);
    }

    #[test]
    fn single_bose_mode_geometric() {
        let h = CMatrix::from_element(1, 1, c(2f64.ln()));
        let st = quasifree_gibbs(&h, &FockSpace::bose(1, 40).unwrap()).unwrap();
        // Σ n 2^{−n} / Σ 2^{−n} = 1, up to the 2^{−40} truncation.
        assert!((st.one_pdm().unwrap().matrix()[(0, 0)].re - 1.0).abs() < 1e-10);
        assert!(quasifree_gibbs(&h, &FockSpace::bose(1, 10).unwrap()).is_err());
    }

    #[test]
    fn bose_gibbs_matches_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_h(&mut rng, 3, 2.0, 4.0);
        let cap = adaptive_bose_cap(&h, ADAPTIVE_MOMENT_TOLERANCE).unwrap();
        let space = FockSpace::bose(3, cap).unwrap();
        let st = quasifree_gibbs(&h, &space).unwrap();
        let expect = hermitian_function(&h, |e| 1.0 / e.exp_m1());
        assert!((st.one_pdm().unwrap().matrix() - &expect).norm() < 1e-10);
        let ef = quasifree_gibbs_eigenframe(&h, &space).unwrap();
        assert!((ef.one_pdm().unwrap().matrix() - expect).norm() < 1e-10);
    }

    #[test]
    fn tail_mass_matches_single_mode_formula() {
        // One mode: discarded weight x^{cap+1}.
        let x: f64 = 0.3;
        let h = CMatrix::from_element(1, 1, c(-x.ln()));
        assert!((bose_tail_mass(&h, 5).unwrap() - x.powi(6)).abs() < 1e-15);
    }

    #[test]
    fn pair_count_examples() {
        let s = FockSpace::fermi(2).unwrap();
        assert_eq!(pair_count_exact(&FockState::vacuum(s.clone()).unwrap(), &[0, 1]).unwrap(), 0.0);
        let st = quasifree_gibbs(&CMatrix::zeros(2, 2), &s).unwrap();
        assert!((pair_count_exact(&st, &[0, 1]).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(pair_count_exact(&st, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn pair_counts_agree_with_wick() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for stats in [Statistics::Fermi, Statistics::Bose] {
            for _ in 0..10 {
                let m = rng.random_range(2..=4);
                let h = match stats {
                    Statistics::Fermi => random_h(&mut rng, m, -2.0, 2.0),
                    Statistics::Bose => random_h(&mut rng, m, 1.0, 3.0),
                };
                let space = match stats {
                    Statistics::Fermi => FockSpace::fermi(m).unwrap(),
                    Statistics::Bose => FockSpace::bose(m, adaptive_bose_cap(&h, ADAPTIVE_MOMENT_TOLERANCE).unwrap()).unwrap(),
                };
                let st = quasifree_gibbs_eigenframe(&h, &space).unwrap();
                let x: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.6)).collect();
                let gamma = st.one_pdm().unwrap();
                let wick = pair_count_quasifree(&gamma, &mode_projection(m, &x)).unwrap();
                let exact = pair_count_exact(&st, &x).unwrap();
                assert!((wick - exact).abs() < 1e-9, "{stats} {wick} {exact}");
            }
        }
    }

    #[test]
    fn dense_and_eigenframe_moments_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_h(&mut rng, 4, -1.0, 1.0);
        let s = FockSpace::fermi(4).unwrap();
        let (a, b) = (quasifree_gibbs(&h, &s).unwrap(), quasifree_gibbs_eigenframe(&h, &s).unwrap());
        let (ma, mb) = (number_moments(&a, &[0, 2, 3]).unwrap(), number_moments(&b, &[0, 2, 3]).unwrap());
        assert!((ma.0 - mb.0).abs() < 1e-12 && (ma.1 - mb.1).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_single_mode() {
        let s = FockSpace::fermi(1).unwrap();
        let st = |g: f64| quasifree_gibbs(&CMatrix::from_element(1, 1, c(((1.0 - g) / g).ln())), &s).unwrap();
        let (a, b) = (st(0.5), st(0.25));
        let expect = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((rel_entropy_exact(&a, &b).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 0.143841036225890).abs() < 1e-12);
        assert!(rel_entropy_exact(&a, &a).unwrap().abs() < 1e-15);
        assert_eq!(rel_entropy_exact(&a, &FockState::vacuum(s.clone()).unwrap()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn restriction_gives_submatrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_h(&mut rng, 4, -1.5, 1.5);
        let st = quasifree_gibbs(&h, &FockSpace::fermi(4).unwrap()).unwrap();
        let gamma = st.one_pdm().unwrap();
        for keep in [vec![1, 3], vec![0, 2], vec![2]] {
            let r = restrict_state(&st, &keep).unwrap();
            assert!((real_trace(r.matrix().unwrap()) - 1.0).abs() < 1e-12);
            let sub = gamma.restrict_modes(&keep).unwrap();
            assert!((r.one_pdm().unwrap().matrix() - sub.matrix()).norm() < 1e-12);
            // The restriction is the quasi-free state of the submatrix.
            let rebuilt = quasifree_gibbs(&gibbs_hamiltonian(&sub).unwrap(), r.space()).unwrap();
            assert!((rebuilt.matrix().unwrap() - r.matrix().unwrap()).norm() < 1e-10);
        }
        let all = restrict_state(&st, &[0, 1, 2, 3]).unwrap();
        assert!((all.matrix().unwrap() - st.matrix().unwrap()).norm() < 1e-15);
    }

    #[test]
    fn restriction_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (h1, h2) = (random_h(&mut rng, 2, -1.0, 1.0), random_h(&mut rng, 2, -1.0, 1.0));
        let mut h = CMatrix::zeros(4, 4);
        h.view_mut((0, 0), (2, 2)).copy_from(&h1);
        h.view_mut((2, 2), (2, 2)).copy_from(&h2);
        let st = quasifree_gibbs(&h, &FockSpace::fermi(4).unwrap()).unwrap();
        let r = restrict_state(&st, &[2, 3]).unwrap();
        let factor = quasifree_gibbs(&h2, &FockSpace::fermi(2).unwrap()).unwrap();
        assert!((r.matrix().unwrap() - factor.matrix().unwrap()).norm() < 1e-12);
    }

    #[test]
    fn exact_relative_entropy_matches_quasifree_and_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let m = if stats == Statistics::Fermi { 3 } else { 2 };
            let (lo, hi) = if stats == Statistics::Fermi { (-1.5, 1.5) } else { (2.5, 4.0) };
            let (h1, h2) = (random_h(&mut rng, m, lo, hi), random_h(&mut rng, m, lo, hi));
            let space = match stats {
                Statistics::Fermi => FockSpace::fermi(m).unwrap(),
                Statistics::Bose => {
                    let cap = adaptive_bose_cap(&h1, 1e-14).unwrap().max(adaptive_bose_cap(&h2, 1e-14).unwrap());
                    FockSpace::bose(m, cap).unwrap()
                }
            };
            let (a, b) = (quasifree_gibbs(&h1, &space).unwrap(), quasifree_gibbs(&h2, &space).unwrap());
            let exact = rel_entropy_exact(&a, &b).unwrap();
            let qf = rel_entropy_quasifree(&a.one_pdm().unwrap(), &b.one_pdm().unwrap()).unwrap();
            assert!((exact - qf).abs() < 1e-9, "{stats} {exact} {qf}");
            let keep = [0];
            let r = rel_entropy_exact(&restrict_state(&a, &keep).unwrap(), &restrict_state(&b, &keep).unwrap()).unwrap();
            assert!(r <= exact + 1e-12);
            let d = trace_distance(&a, &b).unwrap();
            assert!(exact >= 0.5 * d * d);
        }
    }
}
