//! Seeded random states, unitaries and coarse-grainings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{CMatrix, CVector, CoarseGraining, QuantumState, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase-fixed `R`).
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(dim, dim, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> QuantumState {
    let v = CVector::from_fn(dim, |_, _| gaussian(rng));
    let norm = v.norm();
    QuantumState::pure_unchecked(v.unscale(norm))
}

/// Density matrix `G G^dag / tr` of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> QuantumState {
    let g = ginibre(dim, rank.clamp(1, dim), rng);
    let rho = &g * g.adjoint();
    let tr: f64 = rho.diagonal().iter().map(|z| z.re).sum();
    let rho = rho.unscale(tr);
    let rho = (&rho + rho.adjoint()).scale(0.5);
    QuantumState::mixed_unchecked(rho)
}

/// Random rank in `1..=dim`, then [`random_density`].
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> QuantumState {
    let rank = rng.random_range(1..=dim);
    random_density(dim, rank, rng)
}

/// Random partition of `0..dim` into `1..=dim` nonempty groups.
pub fn random_partition<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let groups = rng.random_range(1..=dim);
    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(rng);
    let mut parts: Vec<Vec<usize>> = order[..groups].iter().map(|&k| vec![k]).collect();
    for &k in &order[groups..] {
        let g = rng.random_range(0..groups);
        parts[g].push(k);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

/// Random subspace partition: Haar basis grouped by a random partition.
pub fn random_coarse_graining<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CoarseGraining {
    let u = haar_unitary(dim, rng);
    let groups = random_partition(dim, rng);
    CoarseGraining::from_column_groups(&u, &groups).expect("Haar columns are orthonormal")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_unitary() {
        let mut rng = seeded(1);
        let u = haar_unitary(6, &mut rng);
        let r = crate::hilbert::hermitian_eigenvalues(&(u.adjoint() * &u));
        assert!(r.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn random_density_is_valid() {
        let mut rng = seeded(2);
        for dim in 2..8 {
            let s = random_state(dim, &mut rng);
            assert!(s.report().all_passed());
        }
    }

    #[test]
    fn partition_covers() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let p = random_partition(7, &mut rng);
            let mut all: Vec<usize> = p.concat();
            all.sort_unstable();
            assert_eq!(all, (0..7).collect::<Vec<_>>());
        }
    }
}
