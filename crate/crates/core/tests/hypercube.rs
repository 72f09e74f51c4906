mod common;

use matphi::hypercube::{delta, delta_via_gradient, efron_stein_rhs, jump_generator, BernoulliMeasure, JumpProcess};
use matphi::phi_entropy::{entropy, variance};
use matphi::semigroup::{energy, GeneratorAction, MarkovSemigroup, MatrixDomain};
use matphi::sobolev::mlsi_ratio;
use proptest::prelude::*;
use rand::Rng;

const TIMES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
const PS: [f64; 3] = [0.2, 0.5, 0.8];

#[test]
fn variance_and_entropy_decay_over_two_hundred_seeds() {
    for seed in 0..200 {
        let mut rng = common::rng(seed);
        let n = rng.random_range(1..=3);
        let d = rng.random_range(2..=3);
        let p = PS[rng.random_range(0..3)];
        let jp = JumpProcess::new(n, p, d).unwrap();
        let mu = jp.measure();
        let f = common::function(jp.space(), || common::density(&mut rng, d, 0.02));
        let var0 = variance(mu, &f).unwrap();
        let ent0 = entropy(mu, &f).unwrap();
        for t in TIMES {
            let pt = jp.jump_semigroup(t, &f).unwrap();
            assert!(
                variance(mu, &pt).unwrap() <= (-2.0 * t).exp() * var0 + 1e-9,
                "seed {seed}"
            );
            assert!(entropy(mu, &pt).unwrap() <= (-t).exp() * ent0 + 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn closed_form_matches_dense_exponential() {
    for seed in 0..200 {
        let mut rng = common::rng(seed);
        let n = rng.random_range(1..=3);
        let d = rng.random_range(2..=3);
        let p = PS[rng.random_range(0..3)];
        let jp = JumpProcess::new(n, p, d).unwrap();
        let dense = jump_generator(n, p, d).unwrap();
        let f = common::function(jp.space(), || common::hermitian(&mut rng, d));
        for t in TIMES {
            let a = jp.jump_semigroup(t, &f).unwrap();
            let b = dense.evolve(t, &f).unwrap();
            assert!(a.sub(&b).unwrap().max_abs() < 1e-9, "seed {seed} t {t}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn efron_stein_equals_energy(seed in any::<u64>(), n in 1usize..4, d in 2usize..4, pi in 0usize..3) {
        let mut rng = common::rng(seed);
        let jp = JumpProcess::new(n, PS[pi], d).unwrap();
        let f = common::function(jp.space(), || common::hermitian(&mut rng, d));
        let es = efron_stein_rhs(jp.bernoulli(), &f).unwrap();
        let e = energy(jp.measure(), &jp, &f).unwrap();
        prop_assert!((es - e).abs() < 1e-10 * (1.0 + e.abs()));
        prop_assert!(variance(jp.measure(), &f).unwrap() <= es + 1e-9);
    }

    #[test]
    fn delta_forms_agree(seed in any::<u64>(), n in 1usize..4, p in 0.05f64..0.95) {
        let mut rng = common::rng(seed);
        let mu = BernoulliMeasure::new(n, p).unwrap();
        let f = common::function(mu.cube().space(), || common::hermitian(&mut rng, 2));
        for i in 0..n {
            let a = delta(&mu, &f, i).unwrap();
            let b = delta_via_gradient(&mu, &f, i).unwrap();
            prop_assert!(a.sub(&b).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn hypercube_mlsi_ratio_at_most_one(seed in any::<u64>(), n in 1usize..4, pi in 0usize..3) {
        let mut rng = common::rng(seed);
        let jp = JumpProcess::new(n, PS[pi], 2).unwrap();
        let f = common::function(jp.space(), || common::density(&mut rng, 2, 0.02));
        if let Ok(r) = mlsi_ratio(jp.measure(), &jp, &f) {
            prop_assert!(r.ratio <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn generator_is_minus_sum_of_deltas(seed in any::<u64>(), n in 1usize..4, p in 0.05f64..0.95) {
        let mut rng = common::rng(seed);
        let jp = JumpProcess::new(n, p, 2).unwrap();
        let f = common::function(jp.space(), || common::hermitian(&mut rng, 2));
        let mut sum = f.scale(0.0);
        for i in 0..n {
            sum = sum.sub(&delta(jp.bernoulli(), &f, i).unwrap()).unwrap();
        }
        prop_assert!(jp.apply_generator(&f).unwrap().sub(&sum).unwrap().max_abs() < 1e-12);
        prop_assert_eq!(jp.dim(), 2);
    }
}

#[test]
fn transition_rows_are_stochastic() {
    for p in PS {
        let jp = JumpProcess::new(3, p, 1).unwrap();
        for t in TIMES {
            for x in 0..8 {
                let row: f64 = (0..8).map(|y| jp.transition(t, x, y)).sum();
                assert!((row - 1.0).abs() < 1e-12);
            }
        }
    }
}
