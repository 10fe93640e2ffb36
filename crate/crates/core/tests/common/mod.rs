//! Independent reference implementations used as oracles by the
//! integration tests. Nothing here calls into the entropy or local modules.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use obsent_core::hilbert::CoarseGraining;

pub type M = DMatrix<Complex64>;

pub fn re_trace(m: &M) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Explicit projector matrices `P = B B^dag` of a coarse-graining.
pub fn projectors(cg: &CoarseGraining) -> Vec<M> {
    cg.elements()
        .iter()
        .map(|p| p.basis() * p.basis().adjoint())
        .collect()
}

/// Observational entropy by explicit branch enumeration: at each level the
/// post-measurement state is projected and renormalized, the probability is
/// the product of conditional probabilities, and the volume is
/// `tr[M M^dag]` for the accumulated product `M = P_k ... P_1`.
pub fn brute_force_entropy(rho: &M, sequence: &[Vec<M>]) -> f64 {
    let dim = rho.nrows();
    let mut total = 0.0;
    descend(rho, 1.0, &M::identity(dim, dim), sequence, &mut total);
    total
}

fn descend(state: &M, prob: f64, product: &M, rest: &[Vec<M>], total: &mut f64) {
    let Some((step, tail)) = rest.split_first() else {
        let volume = re_trace(&(product * product.adjoint()));
        if prob > 0.0 && volume > 1e-12 {
            *total -= prob * (prob / volume).ln();
        }
        return;
    };
    for p in step {
        let projected = p * state * p;
        let q = re_trace(&projected);
        let next_product = p * product;
        if q > 1e-300 {
            descend(
                &(projected / Complex64::new(q, 0.0)),
                prob * q,
                &next_product,
                tail,
                total,
            );
        } else {
            descend(state, 0.0, &next_product, tail, total);
        }
    }
}

/// Von Neumann entropy from nalgebra's own Hermitian eigensolver.
pub fn entropy_of_spectrum(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .filter(|&x| x > 1e-15)
        .map(|x| -x * x.ln())
        .sum()
}

pub fn von_neumann(rho: &M) -> f64 {
    entropy_of_spectrum(rho.clone().symmetric_eigenvalues().iter().copied())
}

/// Entanglement entropy of a bipartite pure state from its Schmidt
/// coefficients (singular values of the `dA x dB` coefficient matrix).
pub fn schmidt_entropy(psi: &DVector<Complex64>, da: usize, db: usize) -> f64 {
    let c = M::from_fn(da, db, |a, b| psi[a * db + b]);
    entropy_of_spectrum(c.singular_values().iter().map(|s| s * s))
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Index of `k` in the Kronecker order over the given radices.
pub fn kron_digits(mut k: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (slot, &r) in digits.iter_mut().zip(radices).rev() {
        *slot = k % r;
        k /= r;
    }
    digits
}
