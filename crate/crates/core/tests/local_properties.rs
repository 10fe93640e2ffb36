mod common;

use common::schmidt_entropy;
use obsent_core::entropy::{observational_entropy, MeasurementSequence};
use obsent_core::hilbert::{CVector, CoarseGraining, QuantumState, TensorSpace, C64};
use obsent_core::local::{
    decomposition_check, product_observational_entropy, quantum_correlation_entropy,
    quarrelation_bound_check, total_correlation, ProductMeasurement, QceOptions,
};
use obsent_core::random::{
    haar_unitary, random_coarse_graining, random_pure, random_state, seeded,
};
use proptest::prelude::*;
use rand::Rng;

fn random_dims(rng: &mut impl Rng) -> Vec<usize> {
    let parties = rng.random_range(2..=3);
    (0..parties).map(|_| rng.random_range(1..=3)).collect()
}

fn random_measurement(dims: &[usize], rng: &mut impl Rng) -> ProductMeasurement {
    let cgs = dims
        .iter()
        .map(|&d| random_coarse_graining(d, rng))
        .collect();
    ProductMeasurement::new(TensorSpace::new(dims.to_vec()).unwrap(), cgs).unwrap()
}

fn quick() -> QceOptions {
    QceOptions {
        restarts: 4,
        ..QceOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn entropy_splits_into_local_parts_minus_correlation(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let dims = random_dims(&mut rng);
        let rho = random_state(dims.iter().product(), &mut rng);
        let pm = random_measurement(&dims, &mut rng);
        prop_assert!(decomposition_check(&rho, &pm).unwrap() <= 1e-9);
        prop_assert!(total_correlation(&rho, &pm).unwrap() >= -1e-10);
    }

    #[test]
    fn product_states_are_additive(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let dims = random_dims(&mut rng);
        let parts: Vec<QuantumState> = dims.iter().map(|&d| random_state(d, &mut rng)).collect();
        let rho = parts[1..].iter().fold(parts[0].clone(), |acc, p| acc.kron(p));
        let pm = random_measurement(&dims, &mut rng);
        let local_sum: f64 = parts.iter().zip(pm.local_cgs()).map(|(p, cg)| {
            observational_entropy(p, &MeasurementSequence::single(cg.clone())).unwrap()
        }).sum();
        prop_assert!((product_observational_entropy(&rho, &pm).unwrap() - local_sum).abs() <= 1e-9);
        prop_assert!(total_correlation(&rho, &pm).unwrap().abs() <= 1e-9);
    }
}

#[test]
fn random_pure_two_qubit_states_recover_entanglement_entropy() {
    let space = TensorSpace::new(vec![2, 2]).unwrap();
    let mut rng = seeded(2024);
    for _ in 0..10 {
        let psi = random_pure(4, &mut rng);
        let qce = quantum_correlation_entropy(&psi, &space, &quick()).unwrap();
        let oracle = schmidt_entropy(psi.as_pure().unwrap(), 2, 2);
        assert!(
            (qce.value - oracle).abs() <= 1e-3,
            "{} vs {oracle}",
            qce.value
        );
    }
}

#[test]
fn qubit_qutrit_pure_state() {
    let space = TensorSpace::new(vec![2, 3]).unwrap();
    let psi = random_pure(6, &mut seeded(5));
    let qce = quantum_correlation_entropy(&psi, &space, &QceOptions::default()).unwrap();
    let oracle = schmidt_entropy(psi.as_pure().unwrap(), 2, 3);
    assert!(
        (qce.value - oracle).abs() <= 1e-3,
        "{} vs {oracle}",
        qce.value
    );
}

#[test]
fn zero_discord_states_have_no_quarrelation() {
    let space = TensorSpace::new(vec![2, 2]).unwrap();
    let mut rng = seeded(9);
    let product = random_state(2, &mut rng).kron(&random_state(2, &mut rng));
    // sum_kl p_kl |a_k b_l><a_k b_l| on rotated local bases
    let ua = haar_unitary(2, &mut rng);
    let ub = haar_unitary(2, &mut rng);
    let mut classical = obsent_core::hilbert::CMatrix::zeros(4, 4);
    for (k, l, p) in [(0, 0, 0.45), (0, 1, 0.05), (1, 0, 0.1), (1, 1, 0.4)] {
        let v = ua.column(k).kronecker(&ub.column(l));
        classical += (&v * v.adjoint()).scale(p);
    }
    let classical = QuantumState::from_density_matrix(classical).unwrap();
    for state in [product, classical] {
        let qce = quantum_correlation_entropy(&state, &space, &QceOptions::default()).unwrap();
        assert!(qce.value <= 1e-6, "{}", qce.value);
        assert!(qce.value >= -1e-9);
    }
}

#[test]
fn local_unitaries_leave_the_optimum_unchanged() {
    let space = TensorSpace::new(vec![2, 2]).unwrap();
    let mut rng = seeded(17);
    let rho = random_state(4, &mut rng);
    let before = quantum_correlation_entropy(&rho, &space, &QceOptions::default()).unwrap();
    let local = haar_unitary(2, &mut rng).kronecker(&haar_unitary(2, &mut rng));
    let rotated = rho.conjugated(&local).unwrap();
    let after = quantum_correlation_entropy(&rotated, &space, &QceOptions::default()).unwrap();
    assert!(
        (before.value - after.value).abs() <= 1e-4,
        "{} vs {}",
        before.value,
        after.value
    );
}

#[test]
fn optimum_bounds_every_product_measurement() {
    let space = TensorSpace::new(vec![2, 2]).unwrap();
    let mut rng = seeded(3);
    let rho = random_state(4, &mut rng);
    let qce = quantum_correlation_entropy(&rho, &space, &quick()).unwrap();
    assert!((qce.certificate_gap - qce.value).abs() <= 1e-9);
    for _ in 0..20 {
        let pm = random_measurement(&[2, 2], &mut rng);
        assert!(quarrelation_bound_check(&rho, &pm, &qce).unwrap());
    }
    assert!(quarrelation_bound_check(&rho, &qce.best_measurement, &qce).unwrap());
}

#[test]
fn optimizer_history_is_monotone() {
    let space = TensorSpace::new(vec![2, 3]).unwrap();
    let rho = random_state(6, &mut seeded(8));
    let qce = quantum_correlation_entropy(&rho, &space, &quick()).unwrap();
    for trace in &qce.optimizer_trace {
        assert!(trace.history.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn seed_fixes_the_result() {
    let space = TensorSpace::new(vec![2, 2]).unwrap();
    let rho = random_state(4, &mut seeded(4));
    let opts = QceOptions {
        seed: 77,
        ..quick()
    };
    let a = quantum_correlation_entropy(&rho, &space, &opts).unwrap();
    let b = quantum_correlation_entropy(&rho, &space, &opts).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

#[test]
fn bell_state() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = QuantumState::from_pure(CVector::from_vec(vec![
        C64::new(h, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(h, 0.0),
    ]))
    .unwrap();
    let space = TensorSpace::new(vec![2, 2]).unwrap();
    let qce = quantum_correlation_entropy(&bell, &space, &QceOptions::default()).unwrap();
    assert!((qce.value - 2f64.ln()).abs() <= 1e-3);
    let z = ProductMeasurement::new(space, vec![CoarseGraining::computational(2); 2]).unwrap();
    assert!((product_observational_entropy(&bell, &z).unwrap() - 2f64.ln()).abs() < 1e-12);
}
