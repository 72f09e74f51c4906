//! Spectral-gap and modified log-Sobolev ratios, and numerical suprema.
//!
//! [`estimate_constant`] maximizes a ratio over ensembles with a prescribed
//! average state. The last state is solved from the mean constraint; the rest
//! are free parameters searched by multi-restart Nelder–Mead.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensemble::{expectation, MatrixFunction, Measure, QuantumEnsemble};
use crate::error::{Error, Result};
use crate::matcore::{apply_fn, psd_check, CMatrix, HermitianMatrix, ScalarFunction};
use crate::phi_entropy::{entropy, variance};
use crate::semigroup::{energy_unchecked, regularize, GeneratorAction, REGULARIZATION_EPS, REGULARIZATION_THRESHOLD};

/// Denominators below this make a ratio undefined.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// `Var(f) / ℰ(f)`.
///
/// `ℰ` is taken as `Tr 𝔼_μ Γ(f,f)` without an invariance check: the depolarizing
/// family only fixes `μ` on functions whose mean is a multiple of `I`.
pub fn spectral_gap_ratio(mu: &Measure, l: &dyn GeneratorAction, f: &MatrixFunction) -> Result<f64> {
    let e = energy_unchecked(mu, l, f)?;
    if e <= DENOMINATOR_TOL {
        return Err(Error::UndefinedRatio(format!("energy {e:.3e} vanishes; f is constant")));
    }
    Ok(variance(mu, f)? / e)
}

/// `−Tr 𝔼_μ[(I + log f) L f]`, the entropy production at `f`.
pub fn entropy_production(mu: &Measure, l: &dyn GeneratorAction, f: &MatrixFunction) -> Result<f64> {
    let lf = l.apply_generator(f)?;
    let dphi = f.try_map(|v| apply_fn(ScalarFunction::OnePlusLog, v))?;
    let mut total = 0.0;
    for (x, (a, b)) in dphi.values().iter().zip(lf.values()).enumerate() {
        total += mu.weight(x) * a.trace_product(b);
    }
    Ok(-total)
}

#[derive(Clone, Copy, Debug)]
pub struct MlsiRatio {
    pub ratio: f64,
    pub entropy: f64,
    pub production: f64,
    /// Whether `f` was replaced by `f_ε` because it was not strictly positive.
    pub regularized: bool,
}

/// `Ent(f) / (−Tr 𝔼_μ[(I + log f) L f])`.
pub fn mlsi_ratio(mu: &Measure, l: &dyn GeneratorAction, f: &MatrixFunction) -> Result<MlsiRatio> {
    let regularized = f.lambda_min()? < REGULARIZATION_THRESHOLD;
    let f = if regularized {
        regularize(f, REGULARIZATION_EPS)
    } else {
        f.clone()
    };
    let ent = entropy(mu, &f)?;
    let production = entropy_production(mu, l, &f)?;
    if production <= DENOMINATOR_TOL {
        return Err(Error::UndefinedRatio(format!(
            "entropy production {production:.3e} vanishes; f is constant"
        )));
    }
    Ok(MlsiRatio {
        ratio: ent / production,
        entropy: ent,
        production,
        regularized,
    })
}

/// The depolarizing MLSI ratio two ways, for an ensemble averaging to `π`.
#[derive(Clone, Copy, Debug)]
pub struct DepolarizingMlsiForms {
    /// From the definition of `Ent` and the generator.
    pub direct: f64,
    /// `(1/r)(Tr𝔼ρ log ρ + log d) / (Tr𝔼ρ log ρ − Tr𝔼 log ρ / d)`.
    pub displayed: f64,
}

pub fn depolarizing_mlsi_forms(ens: &QuantumEnsemble, rate: f64) -> Result<DepolarizingMlsiForms> {
    let d = ens.dim();
    let mu = ens.measure();
    let states = ens.states();
    let mean = expectation(mu, states)?;
    let dev = (&mean - &HermitianMatrix::maximally_mixed(d)).max_abs();
    if dev > 1e-9 {
        return Err(Error::InvalidEnsemble(format!(
            "average state is not I/d (deviation {dev:.3e})"
        )));
    }
    let l = crate::channels::Depolarizing::new(mu.space().clone(), d, rate)?;
    let direct = mlsi_ratio(mu, &l, states)?.ratio;

    let rho_log_rho = expectation(mu, &states.try_map(|v| apply_fn(ScalarFunction::XLogX, v))?)?.trace();
    let log_rho = expectation(mu, &states.try_map(|v| apply_fn(ScalarFunction::Log, v))?)?.trace();
    let displayed = (rho_log_rho + (d as f64).ln()) / (rho_log_rho - log_rho / d as f64) / rate;
    Ok(DepolarizingMlsiForms { direct, displayed })
}

/// `H_b(q) = −q log q − (1 − q) log(1 − q)`, with `0 log 0 = 0`.
pub fn binary_entropy(q: f64) -> f64 {
    let xlogx = |u: f64| if u <= 0.0 { 0.0 } else { u * u.ln() };
    -xlogx(q) - xlogx(1.0 - q)
}

/// `log 2 − H_b(½ + δ)`, free of cancellation for small `δ`.
fn binary_entropy_deficit(delta: f64) -> f64 {
    let term = |u: f64| if u <= -1.0 { 0.0 } else { (1.0 + u) * u.ln_1p() };
    0.5 * (term(2.0 * delta) + term(-2.0 * delta))
}

/// Two-state ratio `C(ε) = f(ε)/g(ε)` for `ρ₁ = π + (ε/p₁)σ_Z`, `ρ₂ = π − (ε/p₂)σ_Z`,
/// weights `(p₁, 1 − p₁)` and unit depolarizing rate.
///
/// `f = log 2 − Σ pₖ H_b(½ + ε/pₖ)` and
/// `g = −Σ pₖ H_b(½ + ε/pₖ) − ½ Σ pₖ log((½ + ε/pₖ)(½ − ε/pₖ))`.
/// At `ε = min(p₁, p₂)/2` a state is pure, `g = +∞`, and `C = 0`.
pub fn appendix_b_ratio(eps: f64, p1: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::InvalidArgument(format!("p₁ must lie in (0, 1), got {p1}")));
    }
    let p2 = 1.0 - p1;
    let max_eps = 0.5 * p1.min(p2);
    if !(eps > 0.0 && eps <= max_eps) {
        return Err(Error::InvalidArgument(format!(
            "ε must lie in (0, {max_eps}], got {eps}"
        )));
    }
    let (d1, d2) = (eps / p1, eps / p2);
    if 2.0 * d1 >= 1.0 || 2.0 * d2 >= 1.0 {
        return Ok(0.0);
    }
    let f = p1 * binary_entropy_deficit(d1) + p2 * binary_entropy_deficit(d2);
    // −½ log((½+δ)(½−δ)) = log 2 − ½ log(1 − 4δ²)
    let g = p1 * (binary_entropy_deficit(d1) - 0.5 * (-4.0 * d1 * d1).ln_1p())
        + p2 * (binary_entropy_deficit(d2) - 0.5 * (-4.0 * d2 * d2).ln_1p());
    Ok(f / g)
}

/// The ensemble whose MLSI ratio [`appendix_b_ratio`] evaluates.
pub fn appendix_b_ensemble(eps: f64, p1: f64) -> Result<QuantumEnsemble> {
    appendix_b_ratio(eps, p1)?;
    let space = crate::ensemble::StateSpace::indexed(2)?;
    let pi = HermitianMatrix::maximally_mixed(2);
    let z = HermitianMatrix::pauli_z();
    let p2 = 1.0 - p1;
    let states = MatrixFunction::new(space.clone(), vec![&pi + &z.scale(eps / p1), &pi - &z.scale(eps / p2)])?;
    QuantumEnsemble::new(Measure::new(space, vec![p1, p2])?, states)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RatioKind {
    SpectralGap,
    Mlsi,
}

impl RatioKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SpectralGap => "spectral-gap",
            Self::Mlsi => "mlsi",
        }
    }
}

impl fmt::Display for RatioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RatioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spectral-gap" | "spectral_gap" | "gap" | "c2" => Ok(Self::SpectralGap),
            "mlsi" | "log-sobolev" | "cchi" => Ok(Self::Mlsi),
            other => Err(Error::InvalidArgument(format!("unknown ratio kind `{other}`"))),
        }
    }
}

/// Ensembles over `measure` whose average state is `fixed_mean`.
#[derive(Clone, Debug)]
pub struct ConstraintSpec {
    fixed_mean: HermitianMatrix,
    measure: Measure,
}

impl ConstraintSpec {
    pub fn new(fixed_mean: HermitianMatrix, measure: Measure) -> Result<Self> {
        if (fixed_mean.trace() - 1.0).abs() > 1e-10 || !psd_check(&fixed_mean, 1e-10) {
            return Err(Error::InvalidArgument("fixed mean must be a density matrix".into()));
        }
        if measure.weights().iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidMeasure("every point needs positive weight".into()));
        }
        Ok(Self { fixed_mean, measure })
    }

    /// Mean `I/d` with `m` equally weighted states.
    pub fn maximally_mixed(dim: usize, m: usize) -> Result<Self> {
        let space = crate::ensemble::StateSpace::indexed(m)?;
        Self::new(HermitianMatrix::maximally_mixed(dim), Measure::uniform(space))
    }

    pub fn fixed_mean(&self) -> &HermitianMatrix {
        &self.fixed_mean
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn dim(&self) -> usize {
        self.fixed_mean.dim()
    }

    pub fn size(&self) -> usize {
        self.measure.space().size()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub simplex_tolerance: f64,
    pub seed: u64,
    /// Candidates whose ratio denominator falls below this are infeasible.
    /// Near constant `f` both sides of the ratio vanish quadratically and
    /// roundoff would otherwise dominate.
    pub min_denominator: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 2000,
            simplex_tolerance: 1e-12,
            seed: 0,
            min_denominator: 1e-8,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "restarts and iterations must be positive".into(),
            ));
        }
        if !(self.simplex_tolerance > 0.0) || !(self.min_denominator >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one restart.
#[derive(Clone, Debug)]
pub struct RestartLog {
    pub restart: usize,
    pub iterations: usize,
    /// Best ratio found, `−∞` when no feasible start was found.
    pub ratio: f64,
    pub feasible: bool,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Estimate {
    pub kind: RatioKind,
    pub value: f64,
    pub witness: QuantumEnsemble,
    pub best_restart: usize,
    pub restarts: Vec<RestartLog>,
}

/// Maps unconstrained real parameters to density matrices.
#[derive(Clone, Copy, Debug)]
enum StateParam {
    /// `ρ = ½(I + b·σ)` with `b = v / √(1 + |v|²)`.
    Bloch,
    /// `ρ = L L† / Tr(L L†)` with `L` lower triangular.
    Cholesky(usize),
}

impl StateParam {
    fn for_dim(dim: usize) -> Self {
        if dim == 2 {
            Self::Bloch
        } else {
            Self::Cholesky(dim)
        }
    }

    fn len(&self) -> usize {
        match self {
            Self::Bloch => 3,
            Self::Cholesky(d) => d * d,
        }
    }

    fn state(&self, v: &[f64]) -> Option<HermitianMatrix> {
        match *self {
            Self::Bloch => {
                let s = (1.0 + v.iter().map(|a| a * a).sum::<f64>()).sqrt();
                Some(HermitianMatrix::from_bloch([v[0] / s, v[1] / s, v[2] / s]))
            }
            Self::Cholesky(d) => {
                let mut l = CMatrix::zeros(d, d);
                let mut it = v.iter();
                for i in 0..d {
                    l[(i, i)] = num_complex::Complex64::new(*it.next()?, 0.0);
                    for j in 0..i {
                        l[(i, j)] = num_complex::Complex64::new(*it.next()?, *it.next()?);
                    }
                }
                let rho = &l * l.adjoint();
                let tr = rho.trace().re;
                if !(tr > 1e-300) {
                    return None;
                }
                HermitianMatrix::new(rho / num_complex::Complex64::new(tr, 0.0)).ok()
            }
        }
    }

    /// A random starting point; Cholesky starts near the identity so states are mixed.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match *self {
            Self::Bloch => (0..3).map(|_| rng.random_range(-0.5..0.5)).collect(),
            Self::Cholesky(d) => {
                let mut v = Vec::with_capacity(d * d);
                for i in 0..d {
                    v.push(1.0 + rng.random_range(-0.3..0.3));
                    for _ in 0..2 * i {
                        v.push(rng.random_range(-0.3..0.3));
                    }
                }
                v
            }
        }
    }
}

struct Problem<'a> {
    kind: RatioKind,
    l: &'a dyn GeneratorAction,
    constraint: &'a ConstraintSpec,
    param: StateParam,
    min_denominator: f64,
}

impl Problem<'_> {
    fn dimension(&self) -> usize {
        self.param.len() * (self.constraint.size() - 1)
    }

    /// Ensemble for the parameters, or `None` when the solved state is not admissible.
    fn decode(&self, v: &[f64]) -> Option<MatrixFunction> {
        let c = self.constraint;
        let m = c.size();
        let w = c.measure.weights();
        let mut states = Vec::with_capacity(m);
        let mut last = c.fixed_mean.clone();
        for (k, chunk) in v.chunks(self.param.len()).enumerate() {
            let rho = self.param.state(chunk)?;
            last = &last - &rho.scale(w[k]);
            states.push(rho);
        }
        states.push(last.scale(1.0 / w[m - 1]));
        let floor = match self.kind {
            RatioKind::SpectralGap => -1e-12,
            RatioKind::Mlsi => REGULARIZATION_THRESHOLD,
        };
        let lambda_min = states[m - 1].lambda_min().ok()?;
        if lambda_min < floor {
            return None;
        }
        if self.kind == RatioKind::Mlsi {
            for s in &states[..m - 1] {
                if s.lambda_min().ok()? < floor {
                    return None;
                }
            }
        }
        MatrixFunction::new(c.measure.space().clone(), states).ok()
    }

    fn ratio(&self, f: &MatrixFunction) -> Option<f64> {
        let mu = &self.constraint.measure;
        let (num, den) = match self.kind {
            RatioKind::SpectralGap => (variance(mu, f).ok()?, energy_unchecked(mu, self.l, f).ok()?),
            RatioKind::Mlsi => (entropy(mu, f).ok()?, entropy_production(mu, self.l, f).ok()?),
        };
        if den < self.min_denominator.max(DENOMINATOR_TOL) {
            return None;
        }
        let r = num / den;
        r.is_finite().then_some(r)
    }

    /// Negated ratio; `+∞` for infeasible points.
    fn objective(&self, v: &[f64]) -> f64 {
        self.decode(v)
            .and_then(|f| self.ratio(&f))
            .map_or(f64::INFINITY, |r| -r)
    }
}

struct Simplex {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
}

/// Nelder–Mead minimization with the standard coefficients.
fn nelder_mead(obj: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize, tol: f64) -> Simplex {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| obj(p)).collect();
    let along = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(u, w)| u + t * (w - u)).collect() };

    let mut iterations = 0;
    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= tol * (1.0 + vals[0].abs())) || diameter <= tol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let reflected = along(&centroid, &pts[n], -ALPHA);
        let fr = obj(&reflected);
        if fr < vals[0] {
            let expanded = along(&centroid, &pts[n], -GAMMA);
            let fe = obj(&expanded);
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[n] {
            let c = along(&centroid, &reflected, RHO);
            let f = obj(&c);
            (c, f)
        } else {
            let c = along(&centroid, &pts[n], RHO);
            let f = obj(&c);
            (c, f)
        };
        if fc < vals[n].min(fr) {
            pts[n] = contracted;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            pts[i] = along(&pts[0], &pts[i], SIGMA);
            vals[i] = obj(&pts[i]);
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Simplex {
        x: pts[best].clone(),
        value: vals[best],
        iterations,
    }
}

/// Supremum of the chosen ratio over ensembles satisfying `constraint`.
///
/// Restarts run in parallel; each draws its start from its own stream of a
/// ChaCha8 generator seeded with `cfg.seed`, and ties go to the lowest restart
/// index, so the result depends only on the inputs.
pub fn estimate_constant(
    kind: RatioKind,
    l: &dyn GeneratorAction,
    constraint: &ConstraintSpec,
    cfg: &OptimizerConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if l.dim() != constraint.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: constraint.dim(),
        });
    }
    crate::ensemble::same_space(l.space(), constraint.measure.space())?;
    if constraint.size() < 2 {
        return Err(Error::InvalidArgument("need at least two states".into()));
    }
    let problem = Problem {
        kind,
        l,
        constraint,
        param: StateParam::for_dim(constraint.dim()),
        min_denominator: cfg.min_denominator,
    };
    const START_ATTEMPTS: usize = 1000;

    let logs: Vec<RestartLog> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(restart as u64);
            let start = (0..START_ATTEMPTS).find_map(|_| {
                let v: Vec<f64> = (0..constraint.size() - 1)
                    .flat_map(|_| problem.param.sample(&mut rng))
                    .collect();
                problem.objective(&v).is_finite().then_some(v)
            });
            match start {
                None => RestartLog {
                    restart,
                    iterations: 0,
                    ratio: f64::NEG_INFINITY,
                    feasible: false,
                    params: Vec::new(),
                },
                Some(x0) => {
                    let s = nelder_mead(
                        |v| problem.objective(v),
                        &x0,
                        0.25,
                        cfg.max_iterations,
                        cfg.simplex_tolerance,
                    );
                    RestartLog {
                        restart,
                        iterations: s.iterations,
                        ratio: -s.value,
                        feasible: s.value.is_finite(),
                        params: s.x,
                    }
                }
            }
        })
        .collect();

    let best = logs
        .iter()
        .filter(|r| r.feasible)
        .fold(None::<&RestartLog>, |acc, r| match acc {
            Some(b) if b.ratio >= r.ratio => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no feasible start in {} restarts ({} states of dimension {}, {} parameters, mean trace {:.6})",
                cfg.restarts,
                constraint.size(),
                constraint.dim(),
                problem.dimension(),
                constraint.fixed_mean.trace()
            ))
        })?;
    let states = problem
        .decode(&best.params)
        .ok_or_else(|| Error::Infeasible("best point no longer decodes".into()))?;
    Ok(Estimate {
        kind,
        value: best.ratio,
        witness: QuantumEnsemble::new(constraint.measure.clone(), states)?,
        best_restart: best.restart,
        restarts: logs,
    })
}
