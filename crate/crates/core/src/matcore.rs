//! Spectral calculus for Hermitian matrices.
//!
//! Everything downstream (entropies, generators, Sobolev ratios) is expressed
//! through [`HermitianMatrix`], its [`Spectrum`], and the scalar functions in
//! [`ScalarFunction`] lifted to matrices by `A = U Λ U† ↦ U φ(Λ) U†`.
//!
//! Fréchet derivatives use the Daleckii–Krein formula
//!
//! ```text
//! Dφ[A](E) = U (φ^{[1]}(Λ) ∘ U†EU) U†
//! ```
//!
//! with first divided differences `φ^{[1]}(λᵢ, λⱼ)`, switching to `φ′(λᵢ)` when
//! the two eigenvalues are closer than [`DEGENERACY_GAP`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Negative eigenvalues above `-CLIP_EPS` are treated as zero by functions
/// defined only on `[0, ∞)`.
pub const CLIP_EPS: f64 = 1e-10;

/// Eigenvalue pairs closer than this use `φ′` instead of a divided difference.
pub const DEGENERACY_GAP: f64 = 1e-9;

const EIGEN_MAX_ITER: usize = 10_000;

#[inline]
pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Largest absolute entry of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// A `d × d` complex self-adjoint matrix.
///
/// Hermiticity is enforced once, at construction, by replacing the input `A`
/// with `(A + A†)/2`.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianMatrix{}", self.m)
    }
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without validation. Callers guarantee a square, non-empty input.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        let mut h = (m + adj) * c(0.5);
        for i in 0..h.nrows() {
            h[(i, i)].im = 0.0;
        }
        Self { m: h }
    }

    /// Builds a matrix from `d²` row-major complex entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(CMatrix::from_row_slice(dim, dim, entries))
    }

    /// Real symmetric matrix from `d²` row-major entries.
    pub fn from_real_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        let z: Vec<Complex64> = entries.iter().map(|&x| c(x)).collect();
        Self::from_row_major(dim, &z)
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c(v);
        }
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::identity(dim).scale(1.0 / dim as f64)
    }

    /// Rank-one projector onto the computational basis vector `|k⟩`.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0);
        Self { m }
    }

    pub fn pauli_x() -> Self {
        Self::from_real_row_major(2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2")
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::i();
        Self {
            m: CMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]),
        }
    }

    pub fn pauli_z() -> Self {
        Self::diag(&[1.0, -1.0])
    }

    /// Qubit state `(I + b·σ)/2` for a Bloch vector `b`.
    pub fn from_bloch(b: [f64; 3]) -> Self {
        let mut m = Self::identity(2).m;
        m += Self::pauli_x().m * c(b[0]);
        m += Self::pauli_y().m * c(b[1]);
        m += Self::pauli_z().m * c(b[2]);
        Self { m: m * c(0.5) }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_inner(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// `Re Tr[AB]`, which is the full trace for Hermitian `A`, `B`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.m[(i, j)] * other.m[(j, i)]).re;
            }
        }
        acc
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { m: &self.m * c(a) }
    }

    /// Jordan product `AB + BA`.
    pub fn jordan(&self, other: &Self) -> Self {
        Self::symmetrized(&self.m * &other.m + &other.m * &self.m)
    }

    pub fn square(&self) -> Self {
        Self::symmetrized(&self.m * &self.m)
    }

    /// `K A K†`.
    pub fn sandwich(&self, k: &CMatrix) -> Self {
        Self::symmetrized(k * &self.m * k.adjoint())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    /// Operator norm `max |λ|`.
    pub fn norm_inf(&self) -> Result<f64> {
        let s = eigh(self)?;
        Ok(s.eigenvalues.iter().fold(0.0_f64, |a, l| a.max(l.abs())))
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(eigh(self)?.eigenvalues[0])
    }

    /// Trace norm `Σ|λ|`.
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(eigh(self)?.eigenvalues.iter().map(|l| l.abs()).sum())
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.m[(i, j)].norm() <= tol))
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix { m: &self.m + &rhs.m }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix { m: &self.m - &rhs.m }
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix { m: -&self.m }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, a: f64) -> HermitianMatrix {
        self.scale(a)
    }
}

/// Eigen-decomposition `A = U Λ U†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> CMatrix {
        self.with_values(&self.eigenvalues)
    }

    /// `U diag(values) U†`.
    pub fn with_values(&self, values: &[f64]) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, &v) in values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(v);
        }
        scaled * u.adjoint()
    }
}

/// Hermitian eigensolver.
///
/// Eigenvalues are sorted ascending. Each eigenvector is rotated so its first
/// non-negligible component is real and non-negative.
pub fn eigh(a: &HermitianMatrix) -> Result<Spectrum> {
    let d = a.dim();
    let eig = SymmetricEigen::try_new(a.m.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::EigenNoConvergence { norm: a.m.norm() })?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut vectors = CMatrix::zeros(d, d);
    let mut values = Vec::with_capacity(d);
    for (k, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(z) = col.iter().find(|z| z.norm() > 1e-12) {
            let phase = z.conj() / z.norm();
            col *= phase;
        }
        vectors.set_column(k, &col);
    }
    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Scalar functions that can be lifted to Hermitian matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarFunction {
    Identity,
    /// `u ↦ c`
    Constant(f64),
    /// `u ↦ a·u`
    Linear(f64),
    Square,
    /// `u log u`, extended by `0 log 0 = 0`.
    XLogX,
    /// `u^p` on `[0, ∞)`.
    Power(f64),
    /// `coef · u^exponent` on `[0, ∞)`, or `(0, ∞)` when the exponent is negative.
    ScaledPower {
        coef: f64,
        exponent: f64,
    },
    Log,
    /// `1 + log u`, the derivative of `u log u`.
    OnePlusLog,
}

impl ScalarFunction {
    pub fn name(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Constant(c) => format!("constant({c})"),
            Self::Linear(a) => format!("linear({a})"),
            Self::Square => "square".into(),
            Self::XLogX => "xlogx".into(),
            Self::Power(p) => format!("power({p})"),
            Self::ScaledPower { coef, exponent } => format!("{coef}*u^{exponent}"),
            Self::Log => "log".into(),
            Self::OnePlusLog => "1+log".into(),
        }
    }

    fn needs_nonnegative(&self) -> bool {
        matches!(
            self,
            Self::XLogX | Self::Power(_) | Self::ScaledPower { .. } | Self::Log | Self::OnePlusLog
        )
    }

    fn needs_positive(&self) -> bool {
        match self {
            Self::Log | Self::OnePlusLog => true,
            Self::ScaledPower { exponent, .. } => *exponent < 0.0,
            _ => false,
        }
    }

    /// Point evaluation without domain checks.
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Self::Identity => u,
            Self::Constant(c) => c,
            Self::Linear(a) => a * u,
            Self::Square => u * u,
            Self::XLogX => {
                if u == 0.0 {
                    0.0
                } else {
                    u * u.ln()
                }
            }
            Self::Power(p) => u.powf(p),
            Self::ScaledPower { coef, exponent } => {
                if exponent == 0.0 {
                    coef
                } else {
                    coef * u.powf(exponent)
                }
            }
            Self::Log => u.ln(),
            Self::OnePlusLog => 1.0 + u.ln(),
        }
    }

    pub fn derivative(&self) -> ScalarFunction {
        match *self {
            Self::Identity => Self::Constant(1.0),
            Self::Constant(_) => Self::Constant(0.0),
            Self::Linear(a) => Self::Constant(a),
            Self::Square => Self::Linear(2.0),
            Self::XLogX => Self::OnePlusLog,
            Self::Power(p) => Self::ScaledPower {
                coef: p,
                exponent: p - 1.0,
            },
            Self::ScaledPower { coef, exponent } => {
                if exponent == 0.0 {
                    Self::Constant(0.0)
                } else {
                    Self::ScaledPower {
                        coef: coef * exponent,
                        exponent: exponent - 1.0,
                    }
                }
            }
            Self::Log | Self::OnePlusLog => Self::ScaledPower {
                coef: 1.0,
                exponent: -1.0,
            },
        }
    }

    /// Clips an eigenvalue into the domain and evaluates, or reports a domain error.
    pub fn eval_checked(&self, lambda: f64) -> Result<f64> {
        let mut u = lambda;
        if self.needs_nonnegative() {
            if u < -CLIP_EPS {
                return Err(self.domain_error(lambda));
            }
            u = u.max(0.0);
        }
        if self.needs_positive() && u <= 0.0 {
            return Err(self.domain_error(lambda));
        }
        let v = self.value(u);
        if !v.is_finite() {
            return Err(self.domain_error(lambda));
        }
        Ok(v)
    }

    fn domain_error(&self, eigenvalue: f64) -> Error {
        Error::Domain {
            function: self.name(),
            eigenvalue,
        }
    }
}

/// `U φ(Λ) U†`.
pub fn apply_fn(phi: ScalarFunction, a: &HermitianMatrix) -> Result<HermitianMatrix> {
    if phi == ScalarFunction::Identity {
        return Ok(a.clone());
    }
    let s = eigh(a)?;
    apply_fn_spectrum(phi, &s)
}

pub(crate) fn apply_fn_spectrum(phi: ScalarFunction, s: &Spectrum) -> Result<HermitianMatrix> {
    let values = s
        .eigenvalues
        .iter()
        .map(|&l| phi.eval_checked(l))
        .collect::<Result<Vec<_>>>()?;
    Ok(HermitianMatrix::symmetrized(s.with_values(&values)))
}

/// `Tr φ(A)` from the spectrum.
pub fn trace_fn(phi: ScalarFunction, a: &HermitianMatrix) -> Result<f64> {
    let s = eigh(a)?;
    s.eigenvalues.iter().map(|&l| phi.eval_checked(l)).sum()
}

/// First divided differences `φ^{[1]}(λᵢ, λⱼ)`.
pub fn divided_differences(phi: ScalarFunction, eigenvalues: &[f64]) -> Result<DMatrix<f64>> {
    let d = eigenvalues.len();
    let dphi = phi.derivative();
    let values = eigenvalues
        .iter()
        .map(|&l| phi.eval_checked(l))
        .collect::<Result<Vec<_>>>()?;
    let slopes = eigenvalues
        .iter()
        .map(|&l| dphi.eval_checked(l))
        .collect::<Result<Vec<_>>>()?;
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let gap = eigenvalues[i] - eigenvalues[j];
            out[(i, j)] = if gap.abs() < DEGENERACY_GAP {
                0.5 * (slopes[i] + slopes[j])
            } else {
                (values[i] - values[j]) / gap
            };
        }
    }
    Ok(out)
}

/// Fréchet derivative `Dφ[A](E)` via Daleckii–Krein.
pub fn frechet(phi: ScalarFunction, a: &HermitianMatrix, e: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: e.dim(),
        });
    }
    let s = eigh(a)?;
    let dd = divided_differences(phi, &s.eigenvalues)?;
    let u = &s.eigenvectors;
    let mut inner = u.adjoint() * e.matrix() * u;
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            inner[(i, j)] *= dd[(i, j)];
        }
    }
    Ok(HermitianMatrix::symmetrized(u * inner * u.adjoint()))
}

/// Finite-difference and analytic sides of `d/dt Tr φ(A + tX) = Tr[X φ′(A + tX)]`.
#[derive(Clone, Copy, Debug)]
pub struct TraceDerivative {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn trace_derivative_check(
    phi: ScalarFunction,
    a: &HermitianMatrix,
    x: &HermitianMatrix,
    t0: f64,
) -> Result<TraceDerivative> {
    const H: f64 = 1e-5;
    let at = |t: f64| -> Result<f64> { trace_fn(phi, &(a + &x.scale(t))) };
    let lhs = (at(t0 + H)? - at(t0 - H)?) / (2.0 * H);
    let point = a + &x.scale(t0);
    let rhs = x.trace_product(&apply_fn(phi.derivative(), &point)?);
    Ok(TraceDerivative { lhs, rhs })
}

/// `λ_min(A) ≥ −tol`.
pub fn psd_check(a: &HermitianMatrix, tol: f64) -> bool {
    match eigh(a) {
        Ok(s) => s.eigenvalues[0] >= -tol,
        Err(_) => false,
    }
}

/// Von Neumann entropy `−Tr ρ log ρ`.
pub fn von_neumann_entropy(rho: &HermitianMatrix) -> Result<f64> {
    Ok(-trace_fn(ScalarFunction::XLogX, rho)?)
}

/// Full-rank density `(G G† + floor·I) / Tr(·)` with `G` having entries uniform in the unit square.
pub fn random_density<R: rand::Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> Result<HermitianMatrix> {
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &g * g.adjoint() + CMatrix::identity(d, d) * Complex64::new(floor.max(0.0), 0.0);
    let tr = m.trace().re;
    HermitianMatrix::new(m / Complex64::new(tr, 0.0))
}
