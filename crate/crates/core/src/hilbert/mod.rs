//! Finite-dimensional Hilbert-space primitives.
//!
//! States, observables, projective and Kraus coarse-grainings, and the
//! tensor-product structure of multipartite spaces. Projectors are stored as
//! an orthonormal basis of their range (an isometry `B` with `P = B B^dag`),
//! which keeps volumes exact integers and makes stacked orthogonality checks
//! a single Gram product.

mod check;
mod coarse;
pub mod io;
mod state;
mod tensor;

pub use check::{Check, Report};
pub use coarse::{
    coarse_graining_from_observable, energy_shell_coarse_graining, joint_coarse_graining, Binning,
    CoarseGraining, KrausCoarseGraining, Label, Projector,
};
pub use state::{Observable, QuantumState};
pub use tensor::{tensor_product_coarse_graining, TensorSpace};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for Hermiticity, trace, idempotence and orthogonality checks.
pub const TOL: f64 = 1e-10;

/// Default degeneracy tolerance, relative to the spectral range.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn identity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub(crate) fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized first so rounding asymmetry below the Hermiticity
/// tolerance does not leak into the solver.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    if m.iter().all(|z| z.im == 0.0) {
        let (values, vectors) = real_symmetric_eigen(&m.map(|z| z.re));
        return (values, to_complex(&vectors));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    sort_eigen(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

fn split_parts(m: &CMatrix) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
    let re = m.map(|z| z.re);
    let im = m.iter().any(|z| z.im != 0.0).then(|| m.map(|z| z.im));
    (re, im)
}

/// `a * b` through real matrix kernels (four real products, one when both
/// operands are real); much faster than the generic complex product.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split_parts(a);
    let (br, bi) = split_parts(b);
    let (re, im) = match (ai, bi) {
        (None, None) => (&ar * &br, None),
        (Some(ai), None) => (&ar * &br, Some(&ai * &br)),
        (None, Some(bi)) => (&ar * &br, Some(&ar * &bi)),
        (Some(ai), Some(bi)) => (&ar * &br - &ai * &bi, Some(&ar * &bi + &ai * &br)),
    };
    match im {
        None => to_complex(&re),
        Some(im) => re.zip_map(&im, C64::new),
    }
}

/// `a^dag * b`.
pub fn adjoint_matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    matmul(&a.adjoint(), b)
}

/// `w * m * w^dag`.
pub fn sandwich(w: &CMatrix, m: &CMatrix) -> CMatrix {
    matmul(&matmul(w, m), &w.adjoint())
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn real_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

fn sort_eigen(values: &[f64], vectors: &CMatrix) -> (Vec<f64>, CMatrix) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = order.iter().map(|&k| values[k]).collect();
    let vecs = CMatrix::from_fn(vectors.nrows(), order.len(), |i, j| vectors[(i, order[j])]);
    (sorted, vecs)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

pub(crate) fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub(crate) fn commutator_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(matmul(a, b) - matmul(b, a)))
}

/// Pauli matrices, handy for qubit examples.
pub fn pauli(which: char) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match which {
        'x' | 'X' => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'y' | 'Y' => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'z' | 'Z' => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => CMatrix::identity(2, 2),
    }
}
