//! The jump process on the Boolean hypercube `{0,1}ⁿ`.
//!
//! Points are indexed by `x = Σ xᵢ 2ⁱ` and labelled by bit-strings whose
//! `i`-th character is `xᵢ`, so the labels agree with a [`ProductMeasure`] of
//! `n` copies of `{0, 1}`. Sites are 0-based throughout.
//!
//! Each site resamples from Bernoulli(`p`) at rate 1. Every `Δᵢ` is an
//! idempotent conditional centering, and the `Δᵢ` commute, so
//! `P_t = ∏ᵢ (Id + (e^{−t} − 1) Δᵢ)` holds exactly.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::ensemble::{same_space, MatrixFunction, Measure, StateSpace};
use crate::error::{Error, Result};
use crate::matcore::HermitianMatrix;
use crate::phi_entropy::ProductMeasure;
use crate::semigroup::{check_time, CpKernel, CpMap, GeneratorAction, KernelFamily, MarkovSemigroup, MatrixDomain};

/// Largest supported number of sites; the state space is enumerated densely.
pub const MAX_SITES: usize = 12;

#[derive(Clone, Debug)]
pub struct HypercubeSpace {
    n: usize,
    space: Arc<StateSpace>,
}

impl HypercubeSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::InvalidArgument(format!(
                "hypercube needs 1 ≤ n ≤ {MAX_SITES}, got {n}"
            )));
        }
        let labels = (0..1usize << n).map(|x| {
            (0..n)
                .map(|i| if x >> i & 1 == 1 { '1' } else { '0' })
                .collect::<String>()
        });
        Ok(Self {
            n,
            space: StateSpace::new(labels)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        1 << self.n
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn bit(x: usize, i: usize) -> usize {
        x >> i & 1
    }

    /// `x` with coordinate `i` set to `b`.
    pub fn with_bit(x: usize, i: usize, b: usize) -> usize {
        (x & !(1 << i)) | (b << i)
    }

    fn check_site(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::InvalidArgument(format!(
                "site {i} out of range for n = {}",
                self.n
            )));
        }
        Ok(())
    }

    fn check_function(&self, f: &MatrixFunction) -> Result<()> {
        same_space(f.space(), &self.space)
    }
}

/// `μ_{n,p}(x) = p^{Σxᵢ} (1 − p)^{Σ(1−xᵢ)}`.
#[derive(Clone, Debug)]
pub struct BernoulliMeasure {
    cube: HypercubeSpace,
    p: f64,
    measure: Measure,
}

impl BernoulliMeasure {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("p must lie in (0, 1), got {p}")));
        }
        let cube = HypercubeSpace::new(n)?;
        let weights = (0..cube.size())
            .map(|x| {
                let ones = (x as u32).count_ones() as i32;
                p.powi(ones) * (1.0 - p).powi(n as i32 - ones)
            })
            .collect();
        let measure = Measure::new(cube.space.clone(), weights)?;
        Ok(Self { cube, p, measure })
    }

    pub fn cube(&self) -> &HypercubeSpace {
        &self.cube
    }

    pub fn n(&self) -> usize {
        self.cube.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    /// Single-site law `ν(0) = 1 − p`, `ν(1) = p`.
    pub fn site_weight(&self, b: usize) -> f64 {
        if b == 1 {
            self.p
        } else {
            1.0 - self.p
        }
    }

    /// The same measure as an explicit product, for conditional Φ-entropies.
    pub fn product(&self) -> Result<ProductMeasure> {
        let site = Measure::new(StateSpace::new(["0", "1"])?, vec![1.0 - self.p, self.p])?;
        ProductMeasure::new(vec![site; self.n()])
    }
}

/// `∇ᵢf(x) = f(x^{i←1}) − f(x^{i←0})`.
pub fn grad(cube: &HypercubeSpace, f: &MatrixFunction, i: usize) -> Result<MatrixFunction> {
    cube.check_site(i)?;
    cube.check_function(f)?;
    let values = (0..cube.size())
        .map(|x| f.value(HypercubeSpace::with_bit(x, i, 1)) - f.value(HypercubeSpace::with_bit(x, i, 0)))
        .collect();
    MatrixFunction::new(cube.space.clone(), values)
}

/// `Δᵢf = f − ∫ f dμ_{1,p}(xᵢ)`.
pub fn delta(mu: &BernoulliMeasure, f: &MatrixFunction, i: usize) -> Result<MatrixFunction> {
    let cube = mu.cube();
    cube.check_site(i)?;
    cube.check_function(f)?;
    let values = (0..cube.size())
        .map(|x| {
            let one = f.value(HypercubeSpace::with_bit(x, i, 1)).scale(mu.p);
            let zero = f.value(HypercubeSpace::with_bit(x, i, 0)).scale(1.0 - mu.p);
            &(f.value(x) - &one) - &zero
        })
        .collect();
    MatrixFunction::new(cube.space.clone(), values)
}

/// `Δᵢf` through the gradient: `(1 − p)∇ᵢf` where `xᵢ = 1`, `−p∇ᵢf` where `xᵢ = 0`.
pub fn delta_via_gradient(mu: &BernoulliMeasure, f: &MatrixFunction, i: usize) -> Result<MatrixFunction> {
    let g = grad(mu.cube(), f, i)?;
    let values = (0..mu.cube().size())
        .map(|x| {
            let coef = if HypercubeSpace::bit(x, i) == 1 {
                1.0 - mu.p
            } else {
                -mu.p
            };
            g.value(x).scale(coef)
        })
        .collect();
    MatrixFunction::new(mu.cube().space.clone(), values)
}

/// `½ Σᵢ Tr 𝔼[(f(X) − f(X̃⁽ⁱ⁾))²]`, with `X̃⁽ⁱ⁾` resampling coordinate `i`.
pub fn efron_stein_rhs(mu: &BernoulliMeasure, f: &MatrixFunction) -> Result<f64> {
    let cube = mu.cube();
    cube.check_function(f)?;
    let mut total = 0.0;
    for x in 0..cube.size() {
        let w = mu.measure.weight(x);
        for i in 0..cube.n {
            for b in 0..2 {
                let diff = f.value(x) - f.value(HypercubeSpace::with_bit(x, i, b));
                total += w * mu.site_weight(b) * diff.trace_product(&diff);
            }
        }
    }
    Ok(0.5 * total)
}

/// The generator `L = −Σᵢ Δᵢ` and its semigroup on `d × d` matrix functions.
#[derive(Clone, Debug)]
pub struct JumpProcess {
    mu: BernoulliMeasure,
    dim: usize,
}

impl JumpProcess {
    pub fn new(n: usize, p: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self {
            mu: BernoulliMeasure::new(n, p)?,
            dim,
        })
    }

    pub fn bernoulli(&self) -> &BernoulliMeasure {
        &self.mu
    }

    pub fn measure(&self) -> &Measure {
        self.mu.measure()
    }

    /// `p_t(x, y) = ∏ᵢ (e^{−t} [xᵢ = yᵢ] + (1 − e^{−t}) ν(yᵢ))`.
    pub fn transition(&self, t: f64, x: usize, y: usize) -> f64 {
        let e = (-t).exp();
        (0..self.mu.n())
            .map(|i| {
                let (a, b) = (HypercubeSpace::bit(x, i), HypercubeSpace::bit(y, i));
                let stay = if a == b { e } else { 0.0 };
                stay + (1.0 - e) * self.mu.site_weight(b)
            })
            .product()
    }

    /// Classical jump rates: `0 → 1` at rate `p`, `1 → 0` at rate `1 − p`, one site at a time.
    pub fn rate_matrix(&self) -> DMatrix<f64> {
        let size = self.mu.cube().size();
        let mut m = DMatrix::zeros(size, size);
        for x in 0..size {
            for i in 0..self.mu.n() {
                let y = x ^ (1 << i);
                let rate = self.mu.site_weight(HypercubeSpace::bit(y, i));
                m[(x, y)] = rate;
                m[(x, x)] -= rate;
            }
        }
        m
    }

    /// Closed-form `P_t f`.
    pub fn jump_semigroup(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        check_time(t)?;
        self.check_function(f)?;
        let damp = (-t).exp() - 1.0;
        let mut g = f.clone();
        for i in 0..self.mu.n() {
            g = g.add(&delta(&self.mu, &g, i)?.scale(damp))?;
        }
        Ok(g)
    }

    pub fn efron_stein_rhs(&self, f: &MatrixFunction) -> Result<f64> {
        efron_stein_rhs(&self.mu, f)
    }
}

impl MatrixDomain for JumpProcess {
    fn space(&self) -> &Arc<StateSpace> {
        self.mu.cube().space()
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

impl GeneratorAction for JumpProcess {
    fn apply_generator(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_function(f)?;
        let mut out = MatrixFunction::zeros(self.space().clone(), self.dim);
        for i in 0..self.mu.n() {
            out = out.sub(&delta(&self.mu, f, i)?)?;
        }
        Ok(out)
    }
}

impl KernelFamily for JumpProcess {
    fn kernel(&self, t: f64) -> Result<CpKernel> {
        check_time(t)?;
        let size = self.mu.cube().size();
        let maps = (0..size)
            .map(|x| {
                (0..size)
                    .map(|y| CpMap::scaled_identity(self.dim, self.transition(t, x, y)))
                    .collect()
            })
            .collect();
        CpKernel::new(self.space().clone(), self.dim, maps)
    }
}

impl MarkovSemigroup for JumpProcess {
    fn evolve(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.jump_semigroup(t, f)
    }
}

/// Dense generator of the jump process on `d × d` matrix functions.
pub fn jump_generator(n: usize, p: f64, dim: usize) -> Result<crate::semigroup::Generator> {
    JumpProcess::new(n, p, dim)?.to_generator()
}

/// Function on the hypercube built from its values in index order.
pub fn hypercube_function(cube: &HypercubeSpace, values: Vec<HermitianMatrix>) -> Result<MatrixFunction> {
    MatrixFunction::new(cube.space.clone(), values)
}
