//! Unital quantum dynamical semigroups applied pointwise in `x`.
//!
//! Each semigroup here has a closed-form evaluator for `T_t` and for its
//! generator; the dense compilation (or [`LindbladGenerator::compile`]) is the
//! independent route used to check them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ensemble::{MatrixFunction, StateSpace};
use crate::error::{Error, Result};
use crate::matcore::{c, max_abs, CMatrix, HermitianMatrix};
use crate::semigroup::{
    check_time, compile_dense, CpKernel, CpMap, Generator, GeneratorAction, KernelFamily, MarkovSemigroup, MatrixDomain,
};

fn check_rate(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("rate must be positive, got {r}")));
    }
    Ok(())
}

/// Kraus operators of `X ↦ Tr[X]·I/d`: `E_ij / √d` for all `i, j`.
fn trace_times_pi_kraus(dim: usize, weight: f64) -> Vec<CMatrix> {
    if weight <= 0.0 {
        return Vec::new();
    }
    let s = (weight / dim as f64).sqrt();
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut k = CMatrix::zeros(dim, dim);
            k[(i, j)] = c(s);
            out.push(k);
        }
    }
    out
}

fn diagonal_kernel(space: &Arc<StateSpace>, dim: usize, per_point: impl Fn(usize) -> CpMap) -> Result<CpKernel> {
    let n = space.size();
    let maps = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| if x == y { per_point(x) } else { CpMap::zero(dim) })
                .collect()
        })
        .collect();
    CpKernel::new(space.clone(), dim, maps)
}

/// `T_t: ρ ↦ e^{−rt} ρ + (1 − e^{−rt}) Tr[ρ] π` with `π = I/d`.
#[derive(Clone, Debug)]
pub struct Depolarizing {
    space: Arc<StateSpace>,
    dim: usize,
    rate: f64,
}

impl Depolarizing {
    pub fn new(space: Arc<StateSpace>, dim: usize, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self { space, dim, rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn pi(&self) -> HermitianMatrix {
        HermitianMatrix::maximally_mixed(self.dim)
    }

    /// Single-state channel at time `t`.
    pub fn channel(&self, t: f64, rho: &HermitianMatrix) -> HermitianMatrix {
        depolarize_matrix(self.rate, t, rho)
    }

    pub fn depolarize(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        check_time(t)?;
        self.check_function(f)?;
        Ok(f.map(|v| depolarize_matrix(self.rate, t, v)))
    }

    /// Dense generator compiled from the closed form `L f = r(Tr[f]π − f)`.
    pub fn depolarizing_generator(&self) -> Result<Generator> {
        self.to_generator()
    }
}

fn depolarize_matrix(rate: f64, t: f64, rho: &HermitianMatrix) -> HermitianMatrix {
    let e = (-rate * t).exp();
    let d = rho.dim();
    &rho.scale(e) + &HermitianMatrix::identity(d).scale((1.0 - e) * rho.trace() / d as f64)
}

impl MatrixDomain for Depolarizing {
    fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

impl GeneratorAction for Depolarizing {
    fn apply_generator(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_function(f)?;
        let pi = self.pi();
        Ok(f.map(|v| (&pi.scale(v.trace()) - v).scale(self.rate)))
    }
}

impl KernelFamily for Depolarizing {
    fn kernel(&self, t: f64) -> Result<CpKernel> {
        check_time(t)?;
        let e = (-self.rate * t).exp();
        diagonal_kernel(&self.space, self.dim, |_| {
            let mut kraus = vec![CMatrix::identity(self.dim, self.dim) * c(e.sqrt())];
            kraus.extend(trace_times_pi_kraus(self.dim, 1.0 - e));
            CpMap::new(self.dim, self.dim, kraus).expect("square Kraus operators")
        })
    }
}

impl MarkovSemigroup for Depolarizing {
    fn evolve(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.depolarize(t, f)
    }

    fn trace_preserving(&self) -> bool {
        true
    }
}

/// Depolarizing channel with its own rate `r_x` at every point.
#[derive(Clone, Debug)]
pub struct PerStateDepolarizing {
    space: Arc<StateSpace>,
    dim: usize,
    rates: Vec<f64>,
}

impl PerStateDepolarizing {
    pub fn new(space: Arc<StateSpace>, dim: usize, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != space.size() {
            return Err(Error::DimensionMismatch {
                expected: space.size(),
                found: rates.len(),
            });
        }
        for &r in &rates {
            check_rate(r)?;
        }
        Ok(Self { space, dim, rates })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// `r_inf = min_x r_x`; the Sobolev constants are at most `1/r_inf`-type bounds.
    pub fn min_rate(&self) -> f64 {
        self.rates.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn per_state_depolarize(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        check_time(t)?;
        self.check_function(f)?;
        let values = f
            .values()
            .iter()
            .zip(&self.rates)
            .map(|(v, &r)| depolarize_matrix(r, t, v))
            .collect();
        MatrixFunction::new(self.space.clone(), values)
    }
}

impl MatrixDomain for PerStateDepolarizing {
    fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

impl GeneratorAction for PerStateDepolarizing {
    fn apply_generator(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_function(f)?;
        let pi = HermitianMatrix::maximally_mixed(self.dim);
        let values = f
            .values()
            .iter()
            .zip(&self.rates)
            .map(|(v, &r)| (&pi.scale(v.trace()) - v).scale(r))
            .collect();
        MatrixFunction::new(self.space.clone(), values)
    }
}

impl KernelFamily for PerStateDepolarizing {
    fn kernel(&self, t: f64) -> Result<CpKernel> {
        check_time(t)?;
        diagonal_kernel(&self.space, self.dim, |x| {
            let e = (-self.rates[x] * t).exp();
            let mut kraus = vec![CMatrix::identity(self.dim, self.dim) * c(e.sqrt())];
            kraus.extend(trace_times_pi_kraus(self.dim, 1.0 - e));
            CpMap::new(self.dim, self.dim, kraus).expect("square Kraus operators")
        })
    }
}

impl MarkovSemigroup for PerStateDepolarizing {
    fn evolve(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.per_state_depolarize(t, f)
    }

    fn trace_preserving(&self) -> bool {
        true
    }
}

/// Qubit phase damping `T_t: ρ ↦ ½(1 + e^{−rt}) ρ + ½(1 − e^{−rt}) σ_Z ρ σ_Z`.
#[derive(Clone, Debug)]
pub struct PhaseDamping {
    space: Arc<StateSpace>,
    rate: f64,
}

impl PhaseDamping {
    pub fn new(space: Arc<StateSpace>, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self { space, rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn phase_damp(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        check_time(t)?;
        self.check_function(f)?;
        let e = (-self.rate * t).exp();
        let z = HermitianMatrix::pauli_z().into_inner();
        Ok(f.map(|v| &v.scale(0.5 * (1.0 + e)) + &v.sandwich(&z).scale(0.5 * (1.0 - e))))
    }

    /// Dense generator compiled from `L f = (r/2)(σ_Z f σ_Z − f)`.
    pub fn phase_damping_generator(&self) -> Result<Generator> {
        self.to_generator()
    }
}

impl MatrixDomain for PhaseDamping {
    fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }
    fn dim(&self) -> usize {
        2
    }
}

impl GeneratorAction for PhaseDamping {
    fn apply_generator(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_function(f)?;
        let z = HermitianMatrix::pauli_z().into_inner();
        Ok(f.map(|v| (&v.sandwich(&z) - v).scale(0.5 * self.rate)))
    }
}

impl KernelFamily for PhaseDamping {
    fn kernel(&self, t: f64) -> Result<CpKernel> {
        check_time(t)?;
        let e = (-self.rate * t).exp();
        diagonal_kernel(&self.space, 2, |_| {
            let kraus = vec![
                CMatrix::identity(2, 2) * c((0.5 * (1.0 + e)).sqrt()),
                HermitianMatrix::pauli_z().into_inner() * c((0.5 * (1.0 - e)).sqrt()),
            ];
            CpMap::new(2, 2, kraus).expect("2x2 Kraus operators")
        })
    }
}

impl MarkovSemigroup for PhaseDamping {
    fn evolve(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.phase_damp(t, f)
    }

    fn trace_preserving(&self) -> bool {
        true
    }
}

/// `ℒ(X) = Ψ(X) − κX − Xκ†` with CP `Ψ` and `Ψ(I) = κ + κ†`.
#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    dim: usize,
    psi: CpMap,
    kappa: CMatrix,
}

impl LindbladGenerator {
    pub fn new(psi: CpMap, kappa: CMatrix) -> Result<Self> {
        let dim = psi.dim_in();
        if psi.dim_out() != dim || kappa.nrows() != dim || kappa.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: kappa.nrows(),
            });
        }
        let dev = max_abs(&(psi.unital_sum() - &kappa - kappa.adjoint()));
        if dev > 1e-10 {
            return Err(Error::NotUnital(dev));
        }
        Ok(Self { dim, psi, kappa })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &HermitianMatrix) -> HermitianMatrix {
        let raw = self.psi.apply_raw(x.matrix()) - &self.kappa * x.matrix() - x.matrix() * self.kappa.adjoint();
        HermitianMatrix::symmetrized(raw)
    }

    /// Dense generator acting pointwise on functions over `space`.
    pub fn compile(&self, space: Arc<StateSpace>) -> Result<Generator> {
        let m = compile_dense(&space, self.dim, |f| Ok(f.map(|v| self.apply(v))))?;
        Generator::new(space, self.dim, m)
    }
}

/// Depolarizing semigroup in Lindblad form: `Ψ(X) = r Tr[X] π`, `κ = (r/2) I`.
pub fn depolarizing_lindblad(dim: usize, rate: f64) -> Result<LindbladGenerator> {
    check_rate(rate)?;
    let psi = CpMap::new(dim, dim, trace_times_pi_kraus(dim, rate))?;
    LindbladGenerator::new(psi, CMatrix::identity(dim, dim) * c(rate / 2.0))
}

/// Phase damping in Lindblad form: `Ψ(X) = (r/2) σ_Z X σ_Z`, `κ = (r/4) I`.
pub fn phase_damping_lindblad(rate: f64) -> Result<LindbladGenerator> {
    check_rate(rate)?;
    let psi = CpMap::new(
        2,
        2,
        vec![HermitianMatrix::pauli_z().into_inner() * c((rate / 2.0).sqrt())],
    )?;
    LindbladGenerator::new(psi, CMatrix::identity(2, 2) * c(rate / 4.0))
}

/// Channel selection as accepted on the command line:
/// `{"channel": "depolarizing", "r": 1.0, "d": 2}` or `{"channel": "phase-damping", "r": 1.0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "kebab-case")]
pub enum ChannelSpec {
    Depolarizing {
        r: f64,
        #[serde(default = "default_dim")]
        d: usize,
    },
    PhaseDamping {
        r: f64,
    },
}

fn default_dim() -> usize {
    2
}

impl ChannelSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Depolarizing { d, .. } => *d,
            Self::PhaseDamping { .. } => 2,
        }
    }

    pub fn build(&self, space: Arc<StateSpace>) -> Result<Box<dyn MarkovSemigroup>> {
        Ok(match *self {
            Self::Depolarizing { r, d } => Box::new(Depolarizing::new(space, d, r)?),
            Self::PhaseDamping { r } => Box::new(PhaseDamping::new(space, r)?),
        })
    }
}
