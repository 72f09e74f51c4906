mod common;

use std::sync::Arc;

use matphi::channels::{Depolarizing, PerStateDepolarizing, PhaseDamping};
use matphi::ensemble::{expectation, MatrixFunction, Measure, StateSpace};
use matphi::hypercube::JumpProcess;
use matphi::matcore::{apply_fn, frechet, psd_check, HermitianMatrix};
use matphi::mixing::{random_irreducible, ClassicalLift};
use matphi::phi_entropy::PhiFamily;
use matphi::semigroup::{
    carre_du_champ, check_axioms, check_chapman_kolmogorov, check_symmetry, de_bruijn, decay_curve, dirichlet_form,
    dirichlet_form_unchecked, generator_finite_difference, is_nonincreasing, GeneratorAction, MarkovSemigroup,
    MatrixDomain,
};
use proptest::prelude::*;
use rand::Rng;

/// Ensemble of `m` full-rank states with uniform weights and mean exactly `I/d`.
fn states_with_mixed_mean(rng: &mut impl Rng, space: &Arc<StateSpace>, d: usize) -> MatrixFunction {
    let m = space.size();
    let mut states: Vec<HermitianMatrix> = (0..m - 1)
        .map(|_| {
            let delta = common::hermitian(rng, d);
            let delta = &delta - &HermitianMatrix::identity(d).scale(delta.trace() / d as f64);
            delta.scale(0.3 / (d as f64 * m as f64 * delta.norm_inf().unwrap().max(1e-12)))
        })
        .collect();
    let sum = states.iter().fold(HermitianMatrix::zeros(d), |a, b| &a + b);
    states.push(-&sum);
    let pi = HermitianMatrix::maximally_mixed(d);
    MatrixFunction::new(space.clone(), states.iter().map(|s| &pi + s).collect()).unwrap()
}

struct Case {
    mu: Measure,
    sg: Box<dyn MarkovSemigroup>,
}

fn cases(rng: &mut impl Rng) -> Vec<Case> {
    let space = StateSpace::indexed(3).unwrap();
    let jp = JumpProcess::new(2, rng.random_range(0.2..0.8), 2).unwrap();
    let lift = ClassicalLift::new(random_irreducible(4, rng.random()).unwrap(), 2).unwrap();
    let lift_mu = matphi::mixing::stationary_measure(lift.weights()).unwrap();
    vec![
        Case {
            mu: Measure::uniform(space.clone()),
            sg: Box::new(Depolarizing::new(space.clone(), 2, rng.random_range(0.5..2.0)).unwrap()),
        },
        Case {
            mu: Measure::uniform(space.clone()),
            sg: Box::new(PhaseDamping::new(space.clone(), rng.random_range(0.5..2.0)).unwrap()),
        },
        Case {
            mu: jp.measure().clone(),
            sg: Box::new(jp),
        },
        Case {
            mu: lift_mu,
            sg: Box::new(lift),
        },
    ]
}

fn random_pd(rng: &mut impl Rng, sg: &dyn MarkovSemigroup) -> MatrixFunction {
    common::function(sg.space(), || common::density(rng, sg.dim(), 0.05))
}

#[test]
fn carre_du_champ_is_positive_over_two_hundred_seeds() {
    for seed in 0..200 {
        let mut rng = common::rng(seed);
        let dep = Depolarizing::new(StateSpace::indexed(3).unwrap(), 3, 1.0).unwrap();
        let jp = JumpProcess::new(3, 0.3, 2).unwrap();
        let gens: [&dyn GeneratorAction; 2] = [&dep, &jp];
        for l in gens {
            let f = common::function(l.space(), || common::hermitian(&mut rng, l.dim()));
            for v in carre_du_champ(l, &f, &f).unwrap().values() {
                assert!(psd_check(v, 1e-9), "seed {seed}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn carre_du_champ_symmetric_and_bilinear(seed in any::<u64>(), a in -2.0f64..2.0) {
        let mut rng = common::rng(seed);
        let jp = JumpProcess::new(2, 0.4, 2).unwrap();
        let f = common::function(jp.space(), || common::hermitian(&mut rng, 2));
        let g = common::function(jp.space(), || common::hermitian(&mut rng, 2));
        let h = common::function(jp.space(), || common::hermitian(&mut rng, 2));
        let fg = carre_du_champ(&jp, &f, &g).unwrap();
        let gf = carre_du_champ(&jp, &g, &f).unwrap();
        prop_assert!(fg.sub(&gf).unwrap().max_abs() < 1e-12);
        let lhs = carre_du_champ(&jp, &f.add(&h.scale(a)).unwrap(), &g).unwrap();
        let rhs = fg.add(&carre_du_champ(&jp, &h, &g).unwrap().scale(a)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn trace_cauchy_schwarz(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for case in cases(&mut rng) {
            let l = case.sg.as_ref();
            let f = common::function(l.space(), || common::hermitian(&mut rng, l.dim()));
            let g = common::function(l.space(), || common::hermitian(&mut rng, l.dim()));
            let fg = carre_du_champ(l, &f, &g).unwrap();
            let ff = carre_du_champ(l, &f, &f).unwrap();
            let gg = carre_du_champ(l, &g, &g).unwrap();
            for x in 0..l.space().size() {
                let slack = ff.value(x).trace() * gg.value(x).trace() - fg.value(x).trace().powi(2);
                prop_assert!(slack >= -1e-9);
            }
            let efg = dirichlet_form_unchecked(&case.mu, l, &f, &g).unwrap().trace();
            let eff = dirichlet_form_unchecked(&case.mu, l, &f, &f).unwrap().trace();
            let egg = dirichlet_form_unchecked(&case.mu, l, &g, &g).unwrap().trace();
            prop_assert!(eff * egg - efg * efg >= -1e-9);
        }
    }

    #[test]
    fn operator_jensen_along_the_flow(seed in any::<u64>(), t in 0.05f64..3.0) {
        let mut rng = common::rng(seed);
        for case in cases(&mut rng) {
            let sg = case.sg.as_ref();
            let f = random_pd(&mut rng, sg);
            for phi in [PhiFamily::Square, PhiFamily::XLogX] {
                let phi_f = f.try_map(|v| apply_fn(phi.scalar(), v)).unwrap();
                let lhs = sg.evolve(t, &phi_f).unwrap();
                let rhs = sg.evolve(t, &f).unwrap().try_map(|v| apply_fn(phi.scalar(), v)).unwrap();
                for (a, b) in lhs.values().iter().zip(rhs.values()) {
                    prop_assert!(psd_check(&(a - b), 1e-9));
                }
            }
            // trace form for the whole family
            let pt = sg.evolve(t, &f).unwrap();
            for phi in [PhiFamily::power(1.3).unwrap(), PhiFamily::power(1.8).unwrap()] {
                let lhs = sg.evolve(t, &f.try_map(|v| apply_fn(phi.scalar(), v)).unwrap()).unwrap();
                for x in 0..pt.len() {
                    let rhs = apply_fn(phi.scalar(), pt.value(x)).unwrap().trace();
                    prop_assert!(lhs.value(x).trace() >= rhs - 1e-9);
                }
            }
        }
    }

    #[test]
    fn generator_convexity(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for case in cases(&mut rng) {
            let sg = case.sg.as_ref();
            let f = random_pd(&mut rng, sg);
            let lf = sg.apply_generator(&f).unwrap();
            for phi in [PhiFamily::Square, PhiFamily::XLogX] {
                let l_phi = sg.apply_generator(&f.try_map(|v| apply_fn(phi.scalar(), v)).unwrap()).unwrap();
                for x in 0..f.len() {
                    let d = frechet(phi.scalar(), f.value(x), lf.value(x)).unwrap();
                    prop_assert!(psd_check(&(l_phi.value(x) - &d), 1e-9));
                }
            }
        }
    }

    #[test]
    fn de_bruijn_agreement_and_sign(seed in any::<u64>(), t in 0.0f64..2.0) {
        let mut rng = common::rng(seed);
        // the identity needs 𝔼_μ[L P_t f] = 0, so depolarizing gets ensembles with mean I/d
        let space = StateSpace::indexed(3).unwrap();
        let dep = Depolarizing::new(space.clone(), 2, rng.random_range(0.5..2.0)).unwrap();
        let dep_f = states_with_mixed_mean(&mut rng, &space, 2);
        let mut inputs: Vec<(Measure, Box<dyn MarkovSemigroup>, MatrixFunction)> =
            vec![(Measure::uniform(space), Box::new(dep), dep_f)];
        for case in cases(&mut rng).into_iter().skip(2) {
            let f = random_pd(&mut rng, case.sg.as_ref());
            inputs.push((case.mu, case.sg, f));
        }
        for (mu, sg, f) in &inputs {
            for phi in [PhiFamily::Square, PhiFamily::XLogX, PhiFamily::power(1.5).unwrap()] {
                let db = de_bruijn(phi, mu, sg.as_ref(), f, t).unwrap();
                prop_assert!((db.analytic - db.numeric).abs() < 1e-6, "{phi:?} {db:?}");
                prop_assert!(db.analytic <= 1e-9);
            }
        }
    }

    #[test]
    fn invariance_of_the_mean(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let jp = JumpProcess::new(3, rng.random_range(0.1..0.9), 2).unwrap();
        let f = common::function(jp.space(), || common::hermitian(&mut rng, 2));
        prop_assert!(expectation(jp.measure(), &jp.apply_generator(&f).unwrap()).unwrap().max_abs() < 1e-10);

        let space = StateSpace::indexed(4).unwrap();
        let dep = Depolarizing::new(space.clone(), 2, 1.3).unwrap();
        let g = states_with_mixed_mean(&mut rng, &space, 2);
        let mu = Measure::uniform(space);
        prop_assert!(expectation(&mu, &dep.apply_generator(&g).unwrap()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn phi_entropy_is_nonincreasing(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let grid: Vec<f64> = (0..12).map(|k| 0.25 * k as f64).collect();
        for case in cases(&mut rng) {
            let sg = case.sg.as_ref();
            let f = random_pd(&mut rng, sg);
            for phi in [PhiFamily::Square, PhiFamily::XLogX, PhiFamily::power(1.5).unwrap()] {
                let curve = decay_curve(phi, &case.mu, sg, &f, &grid).unwrap();
                prop_assert!(is_nonincreasing(&curve, 1e-9), "{phi:?}");
            }
        }
    }

    #[test]
    fn trace_preserving_kernels_contract(seed in any::<u64>(), t in 0.0f64..3.0) {
        let mut rng = common::rng(seed);
        for case in cases(&mut rng) {
            let sg = case.sg.as_ref();
            let f = common::function(sg.space(), || common::hermitian(&mut rng, sg.dim()));
            let before = f.sup_norm().unwrap();
            let after = sg.evolve(t, &f).unwrap().sup_norm().unwrap();
            prop_assert!(after <= before + 1e-9);
        }
    }

    #[test]
    fn depolarizing_symmetry_on_states_with_mixed_mean(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let space = StateSpace::indexed(3).unwrap();
        let dep = Depolarizing::new(space.clone(), 2, 0.8).unwrap();
        let mu = Measure::uniform(space.clone());
        let f = states_with_mixed_mean(&mut rng, &space, 2);
        let g = states_with_mixed_mean(&mut rng, &space, 2);
        let dev = check_symmetry(&mu, &dep, &f, &g).unwrap();
        prop_assert!(dev.pairing < 1e-9 && dev.integration_by_parts < 1e-9);
    }

    #[test]
    fn hypercube_symmetry(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let jp = JumpProcess::new(2, rng.random_range(0.1..0.9), 2).unwrap();
        let f = common::function(jp.space(), || common::hermitian(&mut rng, 2));
        let g = common::function(jp.space(), || common::hermitian(&mut rng, 2));
        let dev = check_symmetry(jp.measure(), &jp, &f, &g).unwrap();
        prop_assert!(dev.pairing < 1e-9 && dev.integration_by_parts < 1e-9);
    }

    #[test]
    fn gamma_form_matches_for_symmetric_measures(seed in any::<u64>(), t in 0.0f64..2.0) {
        let mut rng = common::rng(seed);
        let jp = JumpProcess::new(2, rng.random_range(0.1..0.9), 2).unwrap();
        let f = random_pd(&mut rng, &jp);
        let db = de_bruijn(PhiFamily::XLogX, jp.measure(), &jp, &f, t).unwrap();
        prop_assert!((db.analytic - db.gamma_form).abs() < 1e-7);
    }
}

#[test]
fn square_production_is_twice_the_energy() {
    let mut rng = common::rng(5);
    let jp = JumpProcess::new(2, 0.3, 2).unwrap();
    for _ in 0..20 {
        let f = common::function(jp.space(), || common::hermitian(&mut rng, 2));
        let t = rng.random_range(0.0..2.0);
        let db = de_bruijn(PhiFamily::Square, jp.measure(), &jp, &f, t).unwrap();
        let pt = jp.evolve(t, &f).unwrap();
        let e = dirichlet_form(jp.measure(), &jp, &pt, &pt).unwrap().trace();
        assert!((db.analytic + 2.0 * e).abs() < 1e-9);
    }
}

#[test]
fn constant_function_has_no_entropy_production() {
    let dep = Depolarizing::new(StateSpace::indexed(2).unwrap(), 2, 1.0).unwrap();
    let f = MatrixFunction::constant(dep.space().clone(), &HermitianMatrix::maximally_mixed(2));
    let db = de_bruijn(PhiFamily::XLogX, &Measure::uniform(dep.space().clone()), &dep, &f, 0.5).unwrap();
    assert!(db.analytic.abs() < 1e-12 && db.numeric.abs() < 1e-9);
}

#[test]
fn figure1_de_bruijn_with_regularization() {
    let space = StateSpace::indexed(2).unwrap();
    let dep = Depolarizing::new(space.clone(), 2, 1.0).unwrap();
    let f = MatrixFunction::new(
        space.clone(),
        vec![
            HermitianMatrix::basis_projector(2, 0),
            HermitianMatrix::basis_projector(2, 1),
        ],
    )
    .unwrap();
    let db = de_bruijn(PhiFamily::XLogX, &Measure::uniform(space), &dep, &f, 0.5).unwrap();
    assert!(!db.regularized);
    assert!((db.analytic - db.numeric).abs() < 1e-6);
}

#[test]
fn semigroup_axioms_hold_for_every_family() {
    let mut rng = common::rng(1);
    let times = [0.1, 0.5, 1.2];
    for case in cases(&mut rng) {
        let r = check_axioms(case.sg.as_ref(), &times).unwrap();
        assert!(r.identity_at_zero < 1e-8, "{r:?}");
        assert!(r.semigroup_law < 1e-8, "{r:?}");
        assert!(r.mass_conservation < 1e-8, "{r:?}");
        assert!(r.min_choi_eigenvalue > -1e-8, "{r:?}");
        assert!(r.continuity < 1e-5, "{r:?}");
    }
    let per = PerStateDepolarizing::new(StateSpace::indexed(2).unwrap(), 2, vec![1.0, 2.0]).unwrap();
    let r = check_axioms(&per, &times).unwrap();
    assert!(r.semigroup_law < 1e-8 && r.min_choi_eigenvalue > -1e-8);
}

#[test]
fn chapman_kolmogorov_examples() {
    let dep = Depolarizing::new(StateSpace::indexed(2).unwrap(), 2, 1.0).unwrap();
    assert_eq!(check_chapman_kolmogorov(&dep, 0.0, 0.7).unwrap(), 0.0);
    assert!(check_chapman_kolmogorov(&dep, 0.4, 0.7).unwrap() < 1e-9);
    let lift = ClassicalLift::new(random_irreducible(5, 3).unwrap(), 2).unwrap();
    assert!(check_chapman_kolmogorov(&lift, 1.0, 1.0).unwrap() < 1e-9);
}

#[test]
fn finite_difference_generators() {
    let mut rng = common::rng(8);
    for case in cases(&mut rng) {
        let sg = case.sg.as_ref();
        let f = common::function(sg.space(), || common::hermitian(&mut rng, sg.dim()));
        let fd = generator_finite_difference(sg, &f, 1e-6).unwrap();
        let lf = sg.apply_generator(&f).unwrap();
        assert!(fd.sub(&lf).unwrap().max_abs() < 1e-4 * (1.0 + lf.max_abs()));
    }
}

#[test]
fn depolarizing_dirichlet_form_closed_form() {
    let mut rng = common::rng(21);
    let space = StateSpace::indexed(4).unwrap();
    let r = 1.7;
    let d = 2;
    let dep = Depolarizing::new(space.clone(), d, r).unwrap();
    let mu = Measure::uniform(space.clone());
    for _ in 0..20 {
        let f = states_with_mixed_mean(&mut rng, &space, d);
        let gamma = dirichlet_form_unchecked(&mu, &dep, &f, &f).unwrap();
        // (r/2)(𝔼f² + Tr𝔼f²·π − 2(Tr[f]π)²) with Tr f = 1
        let f2 = expectation(&mu, &f.map(|v| v.square())).unwrap();
        let pi = HermitianMatrix::maximally_mixed(d);
        let closed = (&(&f2 + &pi.scale(f2.trace())) - &pi.square().scale(2.0)).scale(0.5 * r);
        assert!((&gamma - &closed).max_abs() < 1e-9);
    }
}

#[test]
fn commuting_arguments_reduce_to_classical_form() {
    let jp = JumpProcess::new(2, 0.35, 2).unwrap();
    let mut rng = common::rng(2);
    for _ in 0..20 {
        let f = common::function(jp.space(), || HermitianMatrix::diag(&[rng.random(), rng.random()]));
        let g = common::function(jp.space(), || HermitianMatrix::diag(&[rng.random(), rng.random()]));
        let gamma = carre_du_champ(&jp, &f, &g).unwrap();
        let fg = f.jordan(&g).unwrap();
        let lfg = jp.apply_generator(&fg).unwrap();
        let classical = lfg
            .sub(&f.jordan(&jp.apply_generator(&g).unwrap()).unwrap())
            .unwrap()
            .sub(&g.jordan(&jp.apply_generator(&f).unwrap()).unwrap())
            .unwrap()
            .scale(0.25);
        assert!(gamma.sub(&classical).unwrap().max_abs() < 1e-12);
    }
}
