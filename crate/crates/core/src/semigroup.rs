//! Completely positive kernels, Markov semigroups on matrix-valued functions,
//! their generators, and the carré du champ calculus built on them.
//!
//! A semigroup acts on `f: Ω → 𝕄_d^sa` by
//!
//! ```text
//! (P_t f)(x) = Σ_y Σ_i K_i(x,y) f(y) K_i(x,y)†
//! ```
//!
//! Every semigroup can also be compiled to a dense superoperator on the
//! row-major vectorization `x·d² + i·d + j` (see [`MatrixFunction::to_vector`]);
//! the dense form is the oracle for closed-form evaluators and is how generic
//! generators are exponentiated.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{expectation, same_space, MatrixFunction, Measure, StateSpace};
use crate::error::{Error, Result};
use crate::matcore::{apply_fn, c, eigh, max_abs, CMatrix, HermitianMatrix};
use crate::phi_entropy::{phi_entropy, PhiFamily};

/// Unitality and trace-preservation tolerance for kernels.
pub const KERNEL_TOL: f64 = 1e-9;

/// Tolerance for `L(I) = 0`.
pub const MASS_TOL: f64 = 1e-10;

/// `f_ε = (1 − ε) f + ε (Tr f / d) I` is used when `λ_min` drops below
/// [`REGULARIZATION_THRESHOLD`] and `Φ′` is singular at zero.
pub const REGULARIZATION_EPS: f64 = 1e-8;
pub const REGULARIZATION_THRESHOLD: f64 = 1e-10;

/// A completely positive map `X ↦ Σ K_i X K_i†` in Kraus form.
#[derive(Clone, Debug, PartialEq)]
pub struct CpMap {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
}

impl CpMap {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(Error::InvalidArgument(format!(
                    "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: Vec::new(),
        }
    }

    /// `X ↦ w·X` for `w ≥ 0`.
    pub fn scaled_identity(dim: usize, weight: f64) -> Self {
        let kraus = if weight > 0.0 {
            vec![CMatrix::identity(dim, dim) * c(weight.sqrt())]
        } else {
            Vec::new()
        };
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply_raw(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    pub fn apply(&self, x: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::symmetrized(self.apply_raw(x.matrix()))
    }

    /// `Σ K_i K_i†`
    pub fn unital_sum(&self) -> CMatrix {
        self.apply_raw(&CMatrix::identity(self.dim_in, self.dim_in))
    }

    /// `Σ K_i† K_i`
    pub fn trace_sum(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * k;
        }
        out
    }
}

/// Kernel `T(x, y)` of CP maps for one time, indexed `[x][y]`.
#[derive(Clone, Debug)]
pub struct CpKernel {
    space: Arc<StateSpace>,
    dim: usize,
    maps: Vec<Vec<CpMap>>,
}

impl CpKernel {
    /// Validates shapes and unitality `Σ_y Σ_i K_i(x,y) K_i(x,y)† = I`.
    pub fn new(space: Arc<StateSpace>, dim: usize, maps: Vec<Vec<CpMap>>) -> Result<Self> {
        let n = space.size();
        if maps.len() != n || maps.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "kernel must be {n}x{n} in the state space"
            )));
        }
        if maps.iter().flatten().any(|m| m.dim_in != dim || m.dim_out != dim) {
            return Err(Error::InvalidArgument(format!(
                "every map must act on {dim}x{dim} matrices"
            )));
        }
        let k = Self { space, dim, maps };
        let dev = k.unitality_deviation();
        if dev > KERNEL_TOL {
            return Err(Error::NotUnital(dev));
        }
        Ok(k)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn map(&self, x: usize, y: usize) -> &CpMap {
        &self.maps[x][y]
    }

    /// `max_x ‖Σ_y Σ_i K K† − I‖`.
    pub fn unitality_deviation(&self) -> f64 {
        self.row_deviation(CpMap::unital_sum)
    }

    /// `max_x ‖Σ_y Σ_i K† K − I‖`.
    pub fn trace_preservation_deviation(&self) -> f64 {
        self.row_deviation(CpMap::trace_sum)
    }

    fn row_deviation(&self, sum: impl Fn(&CpMap) -> CMatrix) -> f64 {
        let id = CMatrix::identity(self.dim, self.dim);
        self.maps
            .iter()
            .map(|row| {
                let total = row
                    .iter()
                    .fold(CMatrix::zeros(self.dim, self.dim), |acc, m| acc + sum(m));
                max_abs(&(total - &id))
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        same_space(&self.space, f.space())?;
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: f.dim(),
            });
        }
        let values = self
            .maps
            .iter()
            .map(|row| {
                let raw = row
                    .iter()
                    .zip(f.values())
                    .fold(CMatrix::zeros(self.dim, self.dim), |acc, (m, v)| {
                        acc + m.apply_raw(v.matrix())
                    });
                HermitianMatrix::symmetrized(raw)
            })
            .collect();
        MatrixFunction::new(self.space.clone(), values)
    }

    pub fn to_superoperator(&self) -> Superoperator {
        let d = self.dim;
        let d2 = d * d;
        let n = self.space.size();
        let mut m = CMatrix::zeros(n * d2, n * d2);
        for x in 0..n {
            for y in 0..n {
                for k in self.maps[x][y].kraus() {
                    // (K E_kl K†)_{ij} = K_{ik} conj(K_{jl})
                    for i in 0..d {
                        for j in 0..d {
                            for a in 0..d {
                                for b in 0..d {
                                    m[(x * d2 + i * d + j, y * d2 + a * d + b)] += k[(i, a)] * k[(j, b)].conj();
                                }
                            }
                        }
                    }
                }
            }
        }
        Superoperator {
            space: self.space.clone(),
            dim: d,
            matrix: m,
        }
    }
}

/// Dense linear operator on vectorized matrix functions.
#[derive(Clone, Debug)]
pub struct Superoperator {
    space: Arc<StateSpace>,
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn new(space: Arc<StateSpace>, dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = space.size() * dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows(),
            });
        }
        Ok(Self { space, dim, matrix })
    }

    pub fn identity(space: Arc<StateSpace>, dim: usize) -> Self {
        let n = space.size() * dim * dim;
        Self {
            space,
            dim,
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        same_space(&self.space, f.space())?;
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: f.dim(),
            });
        }
        let v: DVector<Complex64> = &self.matrix * f.to_vector();
        MatrixFunction::from_vector(self.space.clone(), self.dim, &v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        same_space(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Frobenius distance between the two dense matrices.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// Choi matrix `Σ_{kl} E_kl ⊗ Φ_{xy}(E_kl)` of the `(x, y)` block.
    pub fn choi(&self, x: usize, y: usize) -> HermitianMatrix {
        let d = self.dim;
        let d2 = d * d;
        let m = CMatrix::from_fn(d2, d2, |r, s| {
            let (k, i) = (r / d, r % d);
            let (l, j) = (s / d, s % d);
            self.matrix[(x * d2 + i * d + j, y * d2 + k * d + l)]
        });
        HermitianMatrix::symmetrized(m)
    }

    /// Smallest Choi eigenvalue over all blocks; nonnegative iff every block is CP.
    pub fn min_choi_eigenvalue(&self) -> Result<f64> {
        let n = self.space.size();
        let mut lmin = f64::INFINITY;
        for x in 0..n {
            for y in 0..n {
                lmin = lmin.min(eigh(&self.choi(x, y))?.eigenvalues[0]);
            }
        }
        Ok(lmin)
    }

    /// Kraus form of every block, read off the Choi eigenvectors.
    pub fn to_kernel(&self) -> Result<CpKernel> {
        let d = self.dim;
        let n = self.space.size();
        let mut maps = Vec::with_capacity(n);
        for x in 0..n {
            let mut row = Vec::with_capacity(n);
            for y in 0..n {
                let spec = eigh(&self.choi(x, y))?;
                let scale = spec.eigenvalues.last().copied().unwrap_or(0.0).abs().max(1.0);
                let mut kraus = Vec::new();
                for (a, &lambda) in spec.eigenvalues.iter().enumerate() {
                    if lambda < -1e-9 * scale {
                        return Err(Error::InvalidArgument(format!(
                            "block ({x},{y}) is not completely positive (Choi eigenvalue {lambda:e})"
                        )));
                    }
                    if lambda <= 1e-14 * scale {
                        continue;
                    }
                    let v = spec.eigenvectors.column(a);
                    let k = CMatrix::from_fn(d, d, |i, kk| v[kk * d + i] * lambda.sqrt());
                    kraus.push(k);
                }
                row.push(CpMap::new(d, d, kraus)?);
            }
            maps.push(row);
        }
        CpKernel::new(self.space.clone(), d, maps)
    }
}

/// The carrier of a semigroup: a state space and a matrix dimension.
pub trait MatrixDomain {
    fn space(&self) -> &Arc<StateSpace>;
    fn dim(&self) -> usize;

    fn check_function(&self, f: &MatrixFunction) -> Result<()> {
        same_space(self.space(), f.space())?;
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.dim(),
            });
        }
        Ok(())
    }
}

/// Anything that can produce the kernel `T_t` at a given time.
pub trait KernelFamily: MatrixDomain + Send + Sync {
    fn kernel(&self, t: f64) -> Result<CpKernel>;
}

/// A (complex-linear) generator `L` acting on matrix functions.
pub trait GeneratorAction: MatrixDomain + Send + Sync {
    fn apply_generator(&self, f: &MatrixFunction) -> Result<MatrixFunction>;

    /// Dense compilation from Hermitian probe functions.
    fn to_generator(&self) -> Result<Generator> {
        let matrix = compile_dense(self.space(), self.dim(), |f| self.apply_generator(f))?;
        Generator::new(self.space().clone(), self.dim(), matrix)
    }
}

/// A Markov semigroup `{P_t}` with generator `L`.
pub trait MarkovSemigroup: KernelFamily + GeneratorAction {
    fn evolve(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.kernel(t)?.apply(f)
    }

    fn superoperator(&self, t: f64) -> Result<Superoperator> {
        Ok(self.kernel(t)?.to_superoperator())
    }

    /// Whether every `T_t(x, ·)` is trace preserving, so `P_t` contracts sup-norms.
    fn trace_preserving(&self) -> bool {
        false
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// Hermitian basis of `𝕄_d^sa`-valued functions on `Ω`: for each point, `E_kk`,
/// `E_kl + E_lk` and `i(E_kl − E_lk)` for `k < l`.
pub fn hermitian_basis(space: &Arc<StateSpace>, dim: usize) -> Vec<MatrixFunction> {
    let mut out = Vec::new();
    for x in 0..space.size() {
        for (k, l, imag) in basis_pairs(dim) {
            let mut values = vec![HermitianMatrix::zeros(dim); space.size()];
            values[x] = basis_element(dim, k, l, imag);
            out.push(MatrixFunction::new(space.clone(), values).expect("consistent dims"));
        }
    }
    out
}

fn basis_pairs(dim: usize) -> Vec<(usize, usize, bool)> {
    let mut v = Vec::new();
    for k in 0..dim {
        for l in k..dim {
            v.push((k, l, false));
            if k != l {
                v.push((k, l, true));
            }
        }
    }
    v
}

fn basis_element(dim: usize, k: usize, l: usize, imag: bool) -> HermitianMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    if k == l {
        m[(k, k)] = c(1.0);
    } else if imag {
        m[(k, l)] = Complex64::i();
        m[(l, k)] = -Complex64::i();
    } else {
        m[(k, l)] = c(1.0);
        m[(l, k)] = c(1.0);
    }
    HermitianMatrix::symmetrized(m)
}

/// Dense matrix of a complex-linear, Hermiticity-preserving operator known only
/// through its action on Hermitian functions.
pub fn compile_dense(
    space: &Arc<StateSpace>,
    dim: usize,
    op: impl Fn(&MatrixFunction) -> Result<MatrixFunction>,
) -> Result<CMatrix> {
    let d2 = dim * dim;
    let n = space.size() * d2;
    let mut m = CMatrix::zeros(n, n);
    let probe = |x: usize, h: HermitianMatrix| -> Result<DVector<Complex64>> {
        let mut values = vec![HermitianMatrix::zeros(dim); space.size()];
        values[x] = h;
        Ok(op(&MatrixFunction::new(space.clone(), values)?)?.to_vector())
    };
    for x in 0..space.size() {
        for k in 0..dim {
            for l in k..dim {
                if k == l {
                    let col = probe(x, basis_element(dim, k, k, false))?;
                    m.set_column(x * d2 + k * dim + k, &col);
                    continue;
                }
                let re = probe(x, basis_element(dim, k, l, false))?;
                let im = probe(x, basis_element(dim, k, l, true))?;
                // E_kl = (H₁ − iH₂)/2, E_lk = (H₁ + iH₂)/2.
                let i = Complex64::i();
                let ekl = (&re - &im * i) * c(0.5);
                let elk = (&re + &im * i) * c(0.5);
                m.set_column(x * d2 + k * dim + l, &ekl);
                m.set_column(x * d2 + l * dim + k, &elk);
            }
        }
    }
    Ok(m)
}

/// A generator given as a dense superoperator; `P_t = e^{tL}`.
#[derive(Clone, Debug)]
pub struct Generator {
    space: Arc<StateSpace>,
    dim: usize,
    matrix: CMatrix,
}

impl Generator {
    /// Rejects generators with `‖L(I)‖ > MASS_TOL`.
    pub fn new(space: Arc<StateSpace>, dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = space.size() * dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows(),
            });
        }
        let g = Self { space, dim, matrix };
        let dev = g.mass_deviation();
        if dev > MASS_TOL {
            return Err(Error::MassNotConserved(dev));
        }
        Ok(g)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `sup |L(I)|`.
    pub fn mass_deviation(&self) -> f64 {
        let one = MatrixFunction::constant(self.space.clone(), &HermitianMatrix::identity(self.dim));
        let v = &self.matrix * one.to_vector();
        v.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// `e^{tL}` by Padé scaling and squaring.
    pub fn exp(&self, t: f64) -> Result<Superoperator> {
        check_time(t)?;
        let m = (&self.matrix * c(t)).exp();
        Superoperator::new(self.space.clone(), self.dim, m)
    }

    /// Largest entrywise difference to another dense generator.
    pub fn distance(&self, other: &Generator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}

impl MatrixDomain for Generator {
    fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

impl GeneratorAction for Generator {
    fn apply_generator(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_function(f)?;
        MatrixFunction::from_vector(self.space.clone(), self.dim, &(&self.matrix * f.to_vector()))
    }

    fn to_generator(&self) -> Result<Generator> {
        Ok(self.clone())
    }
}

impl KernelFamily for Generator {
    fn kernel(&self, t: f64) -> Result<CpKernel> {
        self.exp(t)?.to_kernel()
    }
}

impl MarkovSemigroup for Generator {
    fn evolve(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_function(f)?;
        self.exp(t)?.apply(f)
    }

    fn superoperator(&self, t: f64) -> Result<Superoperator> {
        self.exp(t)
    }
}

/// `(P_t f)(x) = Σ_y Σ_i K_i(x,y) f(y) K_i(x,y)†` through the Kraus kernel.
pub fn apply_kernel(k: &dyn KernelFamily, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
    check_time(t)?;
    k.kernel(t)?.apply(f)
}

/// `‖T_s ∘ T_t − T_{s+t}‖` over the dense forms of the Kraus kernels.
pub fn check_chapman_kolmogorov(k: &dyn KernelFamily, s: f64, t: f64) -> Result<f64> {
    let ks = k.kernel(s)?.to_superoperator();
    let kt = k.kernel(t)?.to_superoperator();
    let kst = k.kernel(s + t)?.to_superoperator();
    Ok(ks.compose(&kt)?.distance(&kst))
}

/// `(P_h f − f)/h`.
pub fn generator_finite_difference(k: &dyn MarkovSemigroup, f: &MatrixFunction, h: f64) -> Result<MatrixFunction> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    Ok(k.evolve(h, f)?.sub(f)?.scale(1.0 / h))
}

/// `Γ(f,g) = ¼(L(fg + gf) − (f L g + L g f) − (g L f + L f g))`.
pub fn carre_du_champ(l: &dyn GeneratorAction, f: &MatrixFunction, g: &MatrixFunction) -> Result<MatrixFunction> {
    f.check_compatible(g)?;
    let lf = l.apply_generator(f)?;
    let lg = if f == g { lf.clone() } else { l.apply_generator(g)? };
    let l_fg = l.apply_generator(&f.jordan(g)?)?;
    let f_lg = f.jordan(&lg)?;
    let g_lf = g.jordan(&lf)?;
    Ok(l_fg.sub(&f_lg)?.sub(&g_lf)?.scale(0.25))
}

/// `𝓔(f,g) = 𝔼_μ[Γ(f,g)]` after checking that `μ` is invariant for `L`.
pub fn dirichlet_form(
    mu: &Measure,
    l: &dyn GeneratorAction,
    f: &MatrixFunction,
    g: &MatrixFunction,
) -> Result<HermitianMatrix> {
    let dev = check_generator_invariance(mu, l)?;
    if dev > 1e-9 {
        return Err(Error::NotInvariant(dev));
    }
    dirichlet_form_unchecked(mu, l, f, g)
}

/// [`dirichlet_form`] without the invariance check.
pub fn dirichlet_form_unchecked(
    mu: &Measure,
    l: &dyn GeneratorAction,
    f: &MatrixFunction,
    g: &MatrixFunction,
) -> Result<HermitianMatrix> {
    expectation(mu, &carre_du_champ(l, f, g)?)
}

/// `ℰ(f) = Tr 𝓔(f,f)`, with the invariance check.
pub fn energy(mu: &Measure, l: &dyn GeneratorAction, f: &MatrixFunction) -> Result<f64> {
    Ok(dirichlet_form(mu, l, f, f)?.trace())
}

pub fn energy_unchecked(mu: &Measure, l: &dyn GeneratorAction, f: &MatrixFunction) -> Result<f64> {
    Ok(dirichlet_form_unchecked(mu, l, f, f)?.trace())
}

/// `max ‖𝔼_μ[P_t f] − 𝔼_μ[f]‖` over a Hermitian basis of functions.
pub fn check_invariance(mu: &Measure, k: &dyn MarkovSemigroup, t: f64) -> Result<f64> {
    same_space(mu.space(), k.space())?;
    let p = k.superoperator(t)?;
    let mut dev = 0.0_f64;
    for f in hermitian_basis(k.space(), k.dim()) {
        let diff = &expectation(mu, &p.apply(&f)?)? - &expectation(mu, &f)?;
        dev = dev.max(diff.max_abs());
    }
    Ok(dev)
}

/// `max ‖𝔼_μ[L f]‖` over a Hermitian basis of functions.
pub fn check_generator_invariance(mu: &Measure, l: &dyn GeneratorAction) -> Result<f64> {
    same_space(mu.space(), l.space())?;
    let mut dev = 0.0_f64;
    for f in hermitian_basis(l.space(), l.dim()) {
        dev = dev.max(expectation(mu, &l.apply_generator(&f)?)?.max_abs());
    }
    Ok(dev)
}

/// Deviations from the symmetry and integration-by-parts identities.
#[derive(Clone, Copy, Debug)]
pub struct SymmetryDeviation {
    /// `‖𝔼_μ[f L g + L g f] − 𝔼_μ[g L f + L f g]‖`
    pub pairing: f64,
    /// `|Tr 𝔼_μ Γ(f,g) + ½ Tr 𝔼_μ[f L g + L g f]|`
    pub integration_by_parts: f64,
}

pub fn check_symmetry(
    mu: &Measure,
    l: &dyn GeneratorAction,
    f: &MatrixFunction,
    g: &MatrixFunction,
) -> Result<SymmetryDeviation> {
    let lf = l.apply_generator(f)?;
    let lg = l.apply_generator(g)?;
    let f_lg = expectation(mu, &f.jordan(&lg)?)?;
    let g_lf = expectation(mu, &g.jordan(&lf)?)?;
    let gamma = dirichlet_form_unchecked(mu, l, f, g)?;
    Ok(SymmetryDeviation {
        pairing: (&f_lg - &g_lf).max_abs(),
        integration_by_parts: (gamma.trace() + 0.5 * f_lg.trace()).abs(),
    })
}

/// Symmetry of `L` in the `μ`-weighted pairing, maximized over all pairs of basis functions.
pub fn generator_symmetry_deviation(mu: &Measure, l: &dyn GeneratorAction) -> Result<f64> {
    let basis = hermitian_basis(l.space(), l.dim());
    let images = basis.iter().map(|f| l.apply_generator(f)).collect::<Result<Vec<_>>>()?;
    let mut dev = 0.0_f64;
    for (i, (f, lf)) in basis.iter().zip(&images).enumerate() {
        for (g, lg) in basis.iter().zip(&images).skip(i + 1) {
            let a = expectation(mu, &f.jordan(lg)?)?;
            let b = expectation(mu, &g.jordan(lf)?)?;
            dev = dev.max((&a - &b).max_abs());
        }
    }
    Ok(dev)
}

/// `f_ε = (1 − ε) f + ε (Tr f / d) I`, pointwise.
pub fn regularize(f: &MatrixFunction, eps: f64) -> MatrixFunction {
    let d = f.dim() as f64;
    f.map(|v| &v.scale(1.0 - eps) + &HermitianMatrix::identity(f.dim()).scale(eps * v.trace() / d))
}

/// Regularizes `f` when `Φ = u log u` and `λ_min(f)` is below the threshold.
/// Returns the function to use and whether it was changed.
pub fn regularize_for(phi: PhiFamily, f: &MatrixFunction) -> Result<(MatrixFunction, bool)> {
    if phi == PhiFamily::XLogX && f.lambda_min()? < REGULARIZATION_THRESHOLD {
        Ok((regularize(f, REGULARIZATION_EPS), true))
    } else {
        Ok((f.clone(), false))
    }
}

/// Entropy production at time `t`, three ways.
#[derive(Clone, Copy, Debug)]
pub struct DeBruijn {
    /// `Tr 𝔼_μ[Φ′(P_t f) L P_t f]`
    pub analytic: f64,
    /// Finite difference of `t ↦ H_Φ(P_t f)`.
    pub numeric: f64,
    /// `−Tr 𝔼_μ Γ(Φ′(P_t f), P_t f)`; equals `analytic` when `μ` is symmetric.
    pub gamma_form: f64,
    /// Whether `f` was replaced by `f_ε`.
    pub regularized: bool,
}

pub fn de_bruijn(
    phi: PhiFamily,
    mu: &Measure,
    k: &dyn MarkovSemigroup,
    f: &MatrixFunction,
    t: f64,
) -> Result<DeBruijn> {
    const H: f64 = 1e-5;
    check_time(t)?;
    let pt = k.evolve(t, f)?;
    let (f, regularized) = if phi == PhiFamily::XLogX && pt.lambda_min()? < REGULARIZATION_THRESHOLD {
        (regularize(f, REGULARIZATION_EPS), true)
    } else {
        (f.clone(), false)
    };
    let pt = if regularized { k.evolve(t, &f)? } else { pt };
    let dphi = pt.try_map(|v| apply_fn(phi.derivative(), v))?;
    let lpt = k.apply_generator(&pt)?;
    let analytic = expectation(mu, &dphi.jordan(&lpt)?)?.trace() * 0.5;
    let gamma_form = -dirichlet_form_unchecked(mu, k, &dphi, &pt)?.trace();

    let h_at = |s: f64| -> Result<f64> { phi_entropy(phi, mu, &k.evolve(s, &f)?) };
    let numeric = if t >= H {
        (h_at(t + H)? - h_at(t - H)?) / (2.0 * H)
    } else {
        (-3.0 * h_at(t)? + 4.0 * h_at(t + H)? - h_at(t + 2.0 * H)?) / (2.0 * H)
    };
    Ok(DeBruijn {
        analytic,
        numeric,
        gamma_form,
        regularized,
    })
}

/// `(t, H_Φ(P_t f))` on an ascending time grid.
pub fn decay_curve(
    phi: PhiFamily,
    mu: &Measure,
    k: &dyn MarkovSemigroup,
    f: &MatrixFunction,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidArgument("time grid must be ascending".into()));
    }
    grid.iter()
        .map(|&t| Ok((t, phi_entropy(phi, mu, &k.evolve(t, f)?)?)))
        .collect()
}

/// Whether the values are nonincreasing up to `tol`.
pub fn is_nonincreasing(series: &[(f64, f64)], tol: f64) -> bool {
    series.windows(2).all(|w| w[1].1 <= w[0].1 + tol)
}

/// Numeric checks of the semigroup axioms.
#[derive(Clone, Copy, Debug, Default)]
pub struct AxiomReport {
    /// `‖P_0 − Id‖`
    pub identity_at_zero: f64,
    /// `max ‖P_s P_t − P_{s+t}‖` over sampled pairs.
    pub semigroup_law: f64,
    /// `max ‖P_t I − I‖`
    pub mass_conservation: f64,
    /// Smallest Choi eigenvalue of `P_t` over sampled `t`.
    pub min_choi_eigenvalue: f64,
    /// `max ‖P_{t+δ} − P_t‖` with `δ = 1e-6`, a sampled continuity check.
    pub continuity: f64,
}

pub fn check_axioms(k: &dyn MarkovSemigroup, times: &[f64]) -> Result<AxiomReport> {
    let id = Superoperator::identity(k.space().clone(), k.dim());
    let one = MatrixFunction::constant(k.space().clone(), &HermitianMatrix::identity(k.dim()));
    let mut r = AxiomReport {
        identity_at_zero: k.superoperator(0.0)?.distance(&id),
        min_choi_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    for (i, &s) in times.iter().enumerate() {
        let ps = k.superoperator(s)?;
        r.mass_conservation = r.mass_conservation.max(ps.apply(&one)?.sub(&one)?.max_abs());
        r.min_choi_eigenvalue = r.min_choi_eigenvalue.min(ps.min_choi_eigenvalue()?);
        r.continuity = r.continuity.max(k.superoperator(s + 1e-6)?.distance(&ps));
        for &t in &times[i..] {
            let lhs = ps.compose(&k.superoperator(t)?)?;
            r.semigroup_law = r.semigroup_law.max(lhs.distance(&k.superoperator(s + t)?));
        }
    }
    Ok(r)
}

/// On-disk kernel specification.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum KernelFile {
    /// Kraus lists per ordered pair, tabulated at a set of times.
    KrausFamily {
        labels: Vec<String>,
        dim: usize,
        snapshots: Vec<KrausSnapshot>,
    },
    /// Dense `(|Ω|d²)²` generator in row-major `[re, im]` rows.
    Generator {
        labels: Vec<String>,
        dim: usize,
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KrausSnapshot {
    pub t: f64,
    pub pairs: Vec<KrausPair>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KrausPair {
    pub from: String,
    pub to: String,
    /// Each operator as `d²` row-major `[re, im]` entries.
    pub kraus: Vec<Vec<[f64; 2]>>,
}

/// Kernels tabulated at fixed times.
#[derive(Clone, Debug)]
pub struct KrausTable {
    space: Arc<StateSpace>,
    dim: usize,
    entries: Vec<(f64, CpKernel)>,
}

impl KrausTable {
    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|(t, _)| *t).collect()
    }
}

impl MatrixDomain for KrausTable {
    fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

impl KernelFamily for KrausTable {
    fn kernel(&self, t: f64) -> Result<CpKernel> {
        if t == 0.0 {
            let maps = (0..self.space.size())
                .map(|x| {
                    (0..self.space.size())
                        .map(|y| CpMap::scaled_identity(self.dim, if x == y { 1.0 } else { 0.0 }))
                        .collect()
                })
                .collect();
            return CpKernel::new(self.space.clone(), self.dim, maps);
        }
        self.entries
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|(_, k)| k.clone())
            .ok_or_else(|| Error::InvalidArgument(format!("no tabulated kernel at t = {t}")))
    }
}

/// A validated kernel file.
#[derive(Clone, Debug)]
pub enum LoadedKernel {
    Table(KrausTable),
    Generator(Generator),
}

fn complex_entries(dim: usize, entries: &[[f64; 2]]) -> Result<CMatrix> {
    if entries.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: entries.len(),
        });
    }
    let z: Vec<Complex64> = entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
    Ok(CMatrix::from_row_slice(dim, dim, &z))
}

impl KernelFile {
    /// Validates unitality of every snapshot, or mass conservation and
    /// complete positivity of `e^{tL}` at `t ∈ {0.1, 1}` for a generator.
    pub fn load(&self) -> Result<LoadedKernel> {
        match self {
            KernelFile::KrausFamily { labels, dim, snapshots } => {
                let space = StateSpace::new(labels.iter().cloned())?;
                let n = space.size();
                let mut entries = Vec::new();
                for snap in snapshots {
                    check_time(snap.t)?;
                    let mut maps: Vec<Vec<CpMap>> = vec![vec![CpMap::zero(*dim); n]; n];
                    for pair in &snap.pairs {
                        let lookup = |l: &str| {
                            space
                                .index_of(l)
                                .ok_or_else(|| Error::InvalidArgument(format!("unknown label {l:?}")))
                        };
                        let (x, y) = (lookup(&pair.from)?, lookup(&pair.to)?);
                        let kraus = pair
                            .kraus
                            .iter()
                            .map(|k| complex_entries(*dim, k))
                            .collect::<Result<Vec<_>>>()?;
                        maps[x][y] = CpMap::new(*dim, *dim, kraus)?;
                    }
                    entries.push((snap.t, CpKernel::new(space.clone(), *dim, maps)?));
                }
                Ok(LoadedKernel::Table(KrausTable {
                    space,
                    dim: *dim,
                    entries,
                }))
            }
            KernelFile::Generator { labels, dim, matrix } => {
                let space = StateSpace::new(labels.iter().cloned())?;
                let n = space.size() * dim * dim;
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: matrix.len(),
                    });
                }
                let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(matrix[i][j][0], matrix[i][j][1]));
                let g = Generator::new(space, *dim, m)?;
                for t in [0.1, 1.0] {
                    let lmin = g.exp(t)?.min_choi_eigenvalue()?;
                    if lmin < -KERNEL_TOL {
                        return Err(Error::InvalidArgument(format!(
                            "e^(tL) is not completely positive at t = {t} (Choi eigenvalue {lmin:e})"
                        )));
                    }
                }
                Ok(LoadedKernel::Generator(g))
            }
        }
    }
}

pub fn parse_kernel(json: &str) -> Result<LoadedKernel> {
    serde_json::from_str::<KernelFile>(json)?.load()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> Arc<StateSpace> {
        StateSpace::indexed(2).unwrap()
    }

    /// Classical two-state chain with rates a (0→1) and b (1→0), lifted to d = 1.
    fn classical_generator(a: f64, b: f64) -> Generator {
        let m = DMatrix::from_row_slice(2, 2, &[c(-a), c(a), c(b), c(-b)]);
        Generator::new(two_point(), 1, m).unwrap()
    }

    #[test]
    fn generator_rejects_mass_creation() {
        let m = DMatrix::from_row_slice(2, 2, &[c(-1.0), c(0.5), c(1.0), c(-1.0)]);
        assert!(matches!(
            Generator::new(two_point(), 1, m),
            Err(Error::MassNotConserved(_))
        ));
    }

    #[test]
    fn kernel_rejects_non_unital() {
        let space = StateSpace::indexed(1).unwrap();
        let maps = vec![vec![CpMap::scaled_identity(2, 0.5)]];
        assert!(matches!(CpKernel::new(space, 2, maps), Err(Error::NotUnital(_))));
    }

    #[test]
    fn classical_exponential_matches_closed_form() {
        let (a, b) = (0.7, 0.3);
        let g = classical_generator(a, b);
        let t = 0.9;
        let p = g.exp(t).unwrap();
        let s = a + b;
        let e = (-s * t).exp();
        let p00 = (b + a * e) / s;
        assert!((p.matrix()[(0, 0)].re - p00).abs() < 1e-12);
        assert!((p.matrix()[(0, 1)].re - (1.0 - p00)).abs() < 1e-12);
    }

    #[test]
    fn kraus_roundtrip_through_choi() {
        let g = classical_generator(0.4, 1.1);
        let p = g.exp(0.5).unwrap();
        let k = p.to_kernel().unwrap();
        assert!(k.to_superoperator().distance(&p) < 1e-12);
        assert!(k.unitality_deviation() < 1e-12);
    }

    #[test]
    fn chapman_kolmogorov_at_zero() {
        let g = classical_generator(0.4, 1.1);
        assert!(check_chapman_kolmogorov(&g, 0.0, 0.6).unwrap() < 1e-12);
        assert!(check_chapman_kolmogorov(&g, 1.0, 1.0).unwrap() < 1e-9);
    }

    #[test]
    fn carre_du_champ_of_constant_vanishes() {
        let g = classical_generator(0.4, 1.1);
        let f = MatrixFunction::constant(two_point(), &HermitianMatrix::diag(&[2.5]));
        let gamma = carre_du_champ(&g, &f, &f).unwrap();
        assert!(gamma.max_abs() < 1e-14);
    }

    #[test]
    fn classical_carre_du_champ() {
        // Γ(f,f)(x) = ½ Σ_y L(x,y)(f(y) − f(x))².
        let (a, b) = (0.4, 1.1);
        let g = classical_generator(a, b);
        let f = MatrixFunction::new(
            two_point(),
            vec![HermitianMatrix::diag(&[1.0]), HermitianMatrix::diag(&[3.0])],
        )
        .unwrap();
        let gamma = carre_du_champ(&g, &f, &f).unwrap();
        assert!((gamma.value(0).trace() - 0.5 * a * 4.0).abs() < 1e-12);
        assert!((gamma.value(1).trace() - 0.5 * b * 4.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_form_rejects_non_invariant_measure() {
        let g = classical_generator(0.4, 1.1);
        let f = MatrixFunction::new(
            two_point(),
            vec![HermitianMatrix::diag(&[1.0]), HermitianMatrix::diag(&[3.0])],
        )
        .unwrap();
        let uniform = Measure::uniform(two_point());
        assert!(matches!(energy(&uniform, &g, &f), Err(Error::NotInvariant(_))));
        let stationary = Measure::new(two_point(), vec![1.1 / 1.5, 0.4 / 1.5]).unwrap();
        let e = energy(&stationary, &g, &f).unwrap();
        // μ(0)·a·(Δf)²/2 + μ(1)·b·(Δf)²/2
        let expected = 0.5 * 4.0 * (stationary.weight(0) * 0.4 + stationary.weight(1) * 1.1);
        assert!((e - expected).abs() < 1e-12);
    }

    #[test]
    fn trivial_symmetry() {
        let g = classical_generator(0.4, 1.1);
        let one = MatrixFunction::constant(two_point(), &HermitianMatrix::identity(1));
        let mu = Measure::new(two_point(), vec![1.1 / 1.5, 0.4 / 1.5]).unwrap();
        let s = check_symmetry(&mu, &g, &one, &one).unwrap();
        assert!(s.pairing < 1e-15 && s.integration_by_parts < 1e-15);
        // Two-state chains are reversible with respect to their stationary measure.
        assert!(generator_symmetry_deviation(&mu, &g).unwrap() < 1e-12);
    }

    #[test]
    fn kernel_file_generator_loads() {
        let json = r#"{"type":"generator","labels":["a","b"],"dim":1,
            "matrix":[[[-1,0],[1,0]],[[2,0],[-2,0]]]}"#;
        match parse_kernel(json).unwrap() {
            LoadedKernel::Generator(g) => assert_eq!(g.space().size(), 2),
            other => panic!("unexpected {other:?}"),
        }
        let bad = r#"{"type":"generator","labels":["a","b"],"dim":1,
            "matrix":[[[-1,0],[2,0]],[[2,0],[-2,0]]]}"#;
        assert!(matches!(parse_kernel(bad), Err(Error::MassNotConserved(_))));
    }

    #[test]
    fn kernel_file_kraus_family_validates_unitality() {
        let json = r#"{"type":"kraus-family","labels":["a"],"dim":2,"snapshots":[
            {"t":1.0,"pairs":[{"from":"a","to":"a","kraus":[[[1,0],[0,0],[0,0],[1,0]]]}]}]}"#;
        let LoadedKernel::Table(table) = parse_kernel(json).unwrap() else {
            panic!("expected table")
        };
        assert_eq!(table.times(), vec![1.0]);
        assert!(table.kernel(2.0).is_err());
        let bad = r#"{"type":"kraus-family","labels":["a"],"dim":2,"snapshots":[
            {"t":1.0,"pairs":[{"from":"a","to":"a","kraus":[[[0.5,0],[0,0],[0,0],[1,0]]]}]}]}"#;
        assert!(matches!(parse_kernel(bad), Err(Error::NotUnital(_))));
    }

    #[test]
    fn regularization_shifts_spectrum() {
        let f = MatrixFunction::constant(two_point(), &HermitianMatrix::basis_projector(2, 0));
        let (g, changed) = regularize_for(PhiFamily::XLogX, &f).unwrap();
        assert!(changed);
        assert!(g.lambda_min().unwrap() > 0.0);
        let (_, changed) = regularize_for(PhiFamily::Square, &f).unwrap();
        assert!(!changed);
    }

    #[test]
    fn decay_curve_requires_ascending_grid() {
        let g = classical_generator(0.4, 1.1);
        let f = MatrixFunction::constant(two_point(), &HermitianMatrix::identity(1));
        let mu = Measure::uniform(two_point());
        assert!(decay_curve(PhiFamily::Square, &mu, &g, &f, &[1.0, 0.5]).is_err());
        let c = decay_curve(PhiFamily::Square, &mu, &g, &f, &[0.0, 0.5, 1.0]).unwrap();
        assert!(c.iter().all(|(_, h)| h.abs() < 1e-12));
    }
}
