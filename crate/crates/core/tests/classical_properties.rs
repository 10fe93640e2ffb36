use obsent_core::classical::{
    build_phase_space, classical_observational_entropy, gibbs_entropy, Axis,
    ClassicalCoarseGraining, ClassicalSpace, PhaseSpaceGrid,
};
use obsent_core::entropy::{observational_entropy, MeasurementSequence};
use obsent_core::hilbert::{CMatrix, CoarseGraining, Label, QuantumState};
use obsent_core::random::{random_partition, seeded};
use obsent_core::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_space(n: usize, rng: &mut impl Rng) -> ClassicalSpace {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let mass: f64 = raw.iter().zip(&weights).map(|(r, w)| r * w).sum();
    let density = raw.iter().map(|r| r / mass).collect();
    ClassicalSpace::new((0..n).map(Label::index).collect(), weights, density).unwrap()
}

fn random_cg(n: usize, rng: &mut impl Rng) -> ClassicalCoarseGraining {
    let cells = random_partition(n, rng);
    let labels = (0..cells.len()).map(Label::index).collect();
    ClassicalCoarseGraining::new(cells, labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classical_bounds(seed in any::<u64>(), n in 1usize..=20, k in 0usize..=3) {
        let mut rng = seeded(seed);
        let space = random_space(n, &mut rng);
        let cgs: Vec<_> = (0..k).map(|_| random_cg(n, &mut rng)).collect();
        let s = classical_observational_entropy(&space, &cgs).unwrap();
        prop_assert!(s >= gibbs_entropy(&space).unwrap() - 1e-9);
        prop_assert!(s <= space.total_measure().ln() + 1e-9);
    }

    #[test]
    fn order_does_not_matter(seed in any::<u64>(), n in 1usize..=20, k in 1usize..=4) {
        let mut rng = seeded(seed);
        let space = random_space(n, &mut rng);
        let mut cgs: Vec<_> = (0..k).map(|_| random_cg(n, &mut rng)).collect();
        let s = classical_observational_entropy(&space, &cgs).unwrap();
        cgs.shuffle(&mut rng);
        prop_assert!((classical_observational_entropy(&space, &cgs).unwrap() - s).abs() <= 1e-12);
    }

    #[test]
    fn refinement_never_increases(seed in any::<u64>(), n in 1usize..=20, k in 0usize..=3) {
        let mut rng = seeded(seed);
        let space = random_space(n, &mut rng);
        let mut cgs: Vec<_> = (0..k).map(|_| random_cg(n, &mut rng)).collect();
        let before = classical_observational_entropy(&space, &cgs).unwrap();
        cgs.push(random_cg(n, &mut rng));
        prop_assert!(classical_observational_entropy(&space, &cgs).unwrap() <= before + 1e-12);
    }

    #[test]
    fn diagonal_quantum_matches_classical(seed in any::<u64>(), n in 1usize..=10, k in 1usize..=3) {
        let mut rng = seeded(seed);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let partitions: Vec<Vec<Vec<usize>>> = (0..k).map(|_| random_partition(n, &mut rng)).collect();
        let identity = CMatrix::identity(n, n);
        let quantum_seq = MeasurementSequence::projective(
            partitions.iter().map(|p| CoarseGraining::from_column_groups(&identity, p).unwrap()).collect(),
        ).unwrap();
        let q = observational_entropy(&QuantumState::diagonal(&probs).unwrap(), &quantum_seq).unwrap();
        let cgs: Vec<_> = partitions.into_iter().map(|cells| {
            let labels = (0..cells.len()).map(Label::index).collect();
            ClassicalCoarseGraining::new(cells, labels)
        }).collect();
        let c = classical_observational_entropy(&ClassicalSpace::from_probabilities(&probs).unwrap(), &cgs).unwrap();
        prop_assert!((q - c).abs() <= 1e-12);
    }
}

#[test]
fn overlapping_cells_rejected() {
    let space = ClassicalSpace::from_probabilities(&[0.5, 0.5]).unwrap();
    let cg = ClassicalCoarseGraining::new(
        vec![vec![0, 1], vec![1]],
        vec![Label::index(0), Label::index(1)],
    );
    assert!(matches!(
        classical_observational_entropy(&space, &[cg]),
        Err(Error::PartitionMismatch(_))
    ));
}

#[test]
fn unnormalized_density_rejected() {
    let err = ClassicalSpace::new(
        vec![Label::index(0), Label::index(1)],
        vec![1.0, 1.0],
        vec![0.3, 0.3],
    )
    .unwrap_err();
    assert!(matches!(err, Error::NotADensity(_)));
}

#[test]
fn uniform_gas_on_a_grid() {
    // Uniform density on [0, 2) x [0, 1) with h = 1: Gibbs entropy is ln of
    // the total phase-space volume.
    let grid = PhaseSpaceGrid::new(
        1,
        vec![
            Axis {
                min: 0.0,
                max: 2.0,
                bins: 4,
            },
            Axis {
                min: 0.0,
                max: 1.0,
                bins: 1,
            },
            Axis {
                min: 0.0,
                max: 1.0,
                bins: 1,
            },
            Axis {
                min: 0.0,
                max: 1.0,
                bins: 2,
            },
            Axis {
                min: 0.0,
                max: 1.0,
                bins: 1,
            },
            Axis {
                min: 0.0,
                max: 1.0,
                bins: 1,
            },
        ],
    );
    let space = build_phase_space(&grid, |_| 1.0).unwrap();
    assert_eq!(space.len(), 8);
    assert!((gibbs_entropy(&space).unwrap() - 2f64.ln()).abs() < 1e-12);
    let halves = ClassicalCoarseGraining::contiguous(&[4, 4]);
    let s = classical_observational_entropy(&space, &[halves]).unwrap();
    assert!((s - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn zero_density_rejected() {
    let grid = PhaseSpaceGrid::new(
        1,
        vec![
            Axis {
                min: 0.0,
                max: 1.0,
                bins: 2
            };
            6
        ],
    );
    assert!(matches!(
        build_phase_space(&grid, |_| 0.0),
        Err(Error::ZeroDensity)
    ));
}
