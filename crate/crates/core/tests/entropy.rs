mod common;

use matphi::ensemble::{MatrixFunction, Measure, QuantumEnsemble, StateSpace};
use matphi::matcore::HermitianMatrix;
use matphi::phi_entropy::{
    holevo, holevo_entropy_difference, phi_entropy, subadditivity_gap, variance, PhiFamily, ProductMeasure,
};
use proptest::prelude::*;
use rand::Rng;

fn families() -> Vec<PhiFamily> {
    vec![
        PhiFamily::Square,
        PhiFamily::XLogX,
        PhiFamily::power(1.25).unwrap(),
        PhiFamily::power(1.5).unwrap(),
        PhiFamily::power(2.0).unwrap(),
    ]
}

fn random_measure(rng: &mut impl Rng, space: &std::sync::Arc<StateSpace>) -> Measure {
    let w: Vec<f64> = (0..space.size()).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    Measure::new(space.clone(), w.iter().map(|v| v / total).collect()).unwrap()
}

fn bit_product(rng: &mut impl Rng, n: usize) -> ProductMeasure {
    let factors = (0..n)
        .map(|_| {
            let p = rng.random_range(0.1..0.9);
            Measure::new(StateSpace::new(["0", "1"]).unwrap(), vec![1.0 - p, p]).unwrap()
        })
        .collect();
    ProductMeasure::new(factors).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn phi_entropy_is_nonnegative(seed in any::<u64>(), m in 1usize..5, d in 2usize..4) {
        let mut rng = common::rng(seed);
        let space = StateSpace::indexed(m).unwrap();
        let mu = random_measure(&mut rng, &space);
        let f = common::function(&space, || common::positive(&mut rng, d, 0.0));
        for phi in families() {
            prop_assert!(phi_entropy(phi, &mu, &f).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn constant_functions_have_zero_entropy(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let space = StateSpace::indexed(3).unwrap();
        let mu = random_measure(&mut rng, &space);
        let a = common::positive(&mut rng, 3, 0.0);
        let f = MatrixFunction::constant(space, &a);
        for phi in families() {
            prop_assert!(phi_entropy(phi, &mu, &f).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn variance_is_the_square_entropy(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let space = StateSpace::indexed(4).unwrap();
        let mu = random_measure(&mut rng, &space);
        let f = common::function(&space, || common::hermitian(&mut rng, 3));
        let v = variance(&mu, &f).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!((v - phi_entropy(PhiFamily::Square, &mu, &f).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn holevo_two_formulas_and_shannon_budget(seed in any::<u64>(), m in 2usize..6, d in 2usize..4) {
        let mut rng = common::rng(seed);
        let space = StateSpace::indexed(m).unwrap();
        let mu = random_measure(&mut rng, &space);
        let states = common::function(&space, || common::density(&mut rng, d, 0.0));
        let ens = QuantumEnsemble::validated(mu.clone(), states).unwrap();
        let a = holevo(&ens).unwrap();
        let b = holevo_entropy_difference(&ens).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!(a <= mu.shannon_entropy() + 1e-9);
    }

    #[test]
    fn subadditivity_holds(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = common::rng(seed);
        let pm = bit_product(&mut rng, n);
        let f = common::function(pm.space(), || common::positive(&mut rng, 2, 0.0));
        for phi in [PhiFamily::XLogX, PhiFamily::power(1.25).unwrap(), PhiFamily::power(1.5).unwrap(), PhiFamily::Square] {
            prop_assert!(subadditivity_gap(phi, &pm, &f).unwrap() >= -1e-9);
        }
    }
}

#[test]
fn subadditivity_over_two_hundred_seeds() {
    for seed in 0..200 {
        let mut rng = common::rng(seed);
        let pm = bit_product(&mut rng, 3);
        let f = common::function(pm.space(), || common::positive(&mut rng, 2, 0.0));
        assert!(subadditivity_gap(PhiFamily::XLogX, &pm, &f).unwrap() >= -1e-9);
    }
}

#[test]
fn pure_state_entropy_uses_zero_log_zero() {
    let space = StateSpace::indexed(2).unwrap();
    let f = MatrixFunction::new(
        space.clone(),
        vec![
            HermitianMatrix::basis_projector(2, 0),
            HermitianMatrix::basis_projector(2, 1),
        ],
    )
    .unwrap();
    let h = phi_entropy(PhiFamily::XLogX, &Measure::uniform(space), &f).unwrap();
    assert!((h - 2f64.ln()).abs() < 1e-14);
}
