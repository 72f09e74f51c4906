#![allow(dead_code)]

use std::sync::Arc;

use matphi::ensemble::{MatrixFunction, StateSpace};
use matphi::matcore::HermitianMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_like(rng: &mut impl Rng, d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn hermitian(rng: &mut impl Rng, d: usize) -> HermitianMatrix {
    let a = gaussian_like(rng, d);
    HermitianMatrix::new((&a + a.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
}

/// `G G† + floor·I`.
pub fn positive(rng: &mut impl Rng, d: usize, floor: f64) -> HermitianMatrix {
    let g = gaussian_like(rng, d);
    let m = &g * g.adjoint() + DMatrix::identity(d, d) * Complex64::new(floor, 0.0);
    HermitianMatrix::new(m).unwrap()
}

/// Full-rank density matrix with `λ_min ≥ floor / (Tr + d·floor)`.
pub fn density(rng: &mut impl Rng, d: usize, floor: f64) -> HermitianMatrix {
    let p = positive(rng, d, floor);
    p.scale(1.0 / p.trace())
}

pub fn function(space: &Arc<StateSpace>, mut gen: impl FnMut() -> HermitianMatrix) -> MatrixFunction {
    MatrixFunction::new(space.clone(), (0..space.size()).map(|_| gen()).collect()).unwrap()
}
