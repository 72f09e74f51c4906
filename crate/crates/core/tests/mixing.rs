mod common;

use matphi::ensemble::{expectation, MatrixFunction, QuantumEnsemble};
use matphi::mixing::{
    check_irreducible, complete_graph, hypercube_graph, kernel_at, mixing_bounds, mixing_curve, poincare_constant,
    random_irreducible, remark_readings, spectral_gap, stationary_measure, tau2, tau_chi, ClassicalLift, GraphEnsemble,
    WeightMatrix,
};
use matphi::phi_entropy::variance;
use matphi::semigroup::check_chapman_kolmogorov;
use proptest::prelude::*;

fn random_states(seed: u64, w: &WeightMatrix, d: usize) -> GraphEnsemble {
    let mut rng = common::rng(seed);
    let mu = stationary_measure(w).unwrap();
    let states = common::function(w.space(), || common::density(&mut rng, d, 0.0));
    GraphEnsemble::new(w.clone(), QuantumEnsemble::new(mu, states).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kernels_are_row_stochastic_and_compose(seed in any::<u64>(), n in 2usize..7, s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let w = random_irreducible(n, seed).unwrap();
        prop_assert!(check_irreducible(&w));
        let p = kernel_at(&w, t).unwrap();
        for i in 0..n {
            prop_assert!((p.row(i).sum() - 1.0).abs() < 1e-9);
            prop_assert!(p.row(i).iter().all(|&v| v >= -1e-12));
        }
        let composed = kernel_at(&w, s).unwrap() * &p;
        prop_assert!((composed - kernel_at(&w, s + t).unwrap()).amax() < 1e-9);
        let lift = ClassicalLift::new(w, 2).unwrap();
        prop_assert!(check_chapman_kolmogorov(&lift, s, t).unwrap() < 1e-9);
    }

    #[test]
    fn stationary_measure_is_invariant(seed in any::<u64>(), n in 2usize..7) {
        let w = random_irreducible(n, seed).unwrap();
        let mu = stationary_measure(&w).unwrap();
        let p = kernel_at(&w, 1.3).unwrap();
        for j in 0..n {
            let flowed: f64 = (0..n).map(|i| mu.weight(i) * p[(i, j)]).sum();
            prop_assert!((flowed - mu.weight(j)).abs() < 1e-10);
        }
        prop_assert!(spectral_gap(&w, &mu).unwrap() > 0.0);
    }

    #[test]
    fn curves_are_monotone_and_mean_preserving(seed in any::<u64>(), n in 2usize..6) {
        let w = random_irreducible(n, seed).unwrap();
        let g = random_states(seed ^ 0x5eed, &w, 2);
        let mu = stationary_measure(&w).unwrap();
        let mean = expectation(&mu, g.ensemble().states()).unwrap();
        let grid: Vec<f64> = (0..15).map(|k| 0.3 * k as f64).collect();
        let curve = mixing_curve(&g, &grid).unwrap();
        for pair in curve.windows(2) {
            prop_assert!(pair[1].variance <= pair[0].variance + 1e-12);
            prop_assert!(pair[1].holevo <= pair[0].holevo + 1e-9);
        }
        let late: MatrixFunction = g.evolve(4.0).unwrap().states().clone();
        prop_assert!((&expectation(&mu, &late).unwrap() - &mean).max_abs() < 1e-10);
    }

    #[test]
    fn measured_tau2_within_poincare_bound(seed in any::<u64>(), n in 2usize..6) {
        let w = random_irreducible(n, seed).unwrap();
        let g = random_states(seed.wrapping_add(1), &w, 2);
        let mu = stationary_measure(&w).unwrap();
        let c2 = poincare_constant(&w, &mu).unwrap();
        let var0 = variance(&mu, g.ensemble().states()).unwrap();
        prop_assume!(var0 > 1e-2);
        let eps = 1e-3;
        let b = mixing_bounds(c2, 1.0, var0, 1.0, eps).unwrap();
        prop_assert!(tau2(&g, eps).unwrap() <= b.tau2 + 1e-6);
    }

    #[test]
    fn holevo_never_exceeds_shannon(seed in any::<u64>(), n in 2usize..6) {
        let w = random_irreducible(n, seed).unwrap();
        let g = random_states(seed, &w, 2);
        let r = remark_readings(g.ensemble().measure(), g.ensemble().states(), 1.0, 1.0, 1e-3).unwrap();
        prop_assert!(r.holevo_within_shannon());
    }
}

#[test]
fn hypercube_mixing_times_within_unit_constant_bounds() {
    let w = hypercube_graph(2, 0.5).unwrap();
    for seed in 0..10 {
        let g = random_states(seed, &w, 2);
        let mu = stationary_measure(&w).unwrap();
        let var0 = variance(&mu, g.ensemble().states()).unwrap();
        let chi0 = matphi::phi_entropy::entropy(&mu, g.ensemble().states()).unwrap();
        let eps = 1e-3;
        let b = mixing_bounds(1.0, 1.0, var0, chi0, eps).unwrap();
        if var0 > eps {
            assert!(tau2(&g, eps).unwrap() <= b.tau2 + 1e-6);
        }
        if chi0 > eps {
            assert!(tau_chi(&g, eps).unwrap() <= b.tau_chi + 1e-6);
        }
    }
}

#[test]
fn complete_graph_gap_is_its_rate() {
    for n in 2..6 {
        let w = complete_graph(n, 1.5).unwrap();
        let mu = stationary_measure(&w).unwrap();
        assert!((spectral_gap(&w, &mu).unwrap() - 1.5).abs() < 1e-10);
        assert!(mu.weights().iter().all(|&m| (m - 1.0 / n as f64).abs() < 1e-12));
    }
}
