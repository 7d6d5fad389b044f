//! Hermitian matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitian_part(m)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `(M + M*)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest entry of `M − M*`, relative to the largest entry of `M` (or 1).
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

/// `f(M)` for Hermitian `M`, by spectral calculus.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let d = DVector::from_iterator(values.len(), values.iter().map(|&x| Complex64::new(f(x), 0.0)));
    &vectors * CMatrix::from_diagonal(&d) * vectors.adjoint()
}

/// `‖M‖₁ = Σ |λ_i|` for Hermitian `M`.
pub fn trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

pub fn real_trace(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of the diagonal of R divided out.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// First `rank` columns of a Haar unitary: an isometry onto a random subspace.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    random_unitary(rng, dim).columns(0, rank).into_owned()
}

/// `V diag(values) V*`.
pub fn from_spectrum(vectors: &CMatrix, values: &[f64]) -> CMatrix {
    let d = DVector::from_iterator(values.len(), values.iter().map(|&x| Complex64::new(x, 0.0)));
    vectors * CMatrix::from_diagonal(&d) * vectors.adjoint()
}

/// Real and imaginary parts as nested arrays, for reports.
pub fn matrix_to_json(m: &CMatrix) -> Value {
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect()
    };
    json!({ "re": rows(|z| z.re), "im": rows(|z| z.im) })
}
