//! Quantum random graphs driven by a classical continuous-time Markov chain.
//!
//! Vertex `x` carries a state `ρ_x`; after time `t` it holds
//! `ρ_{t,x} = Σ_y p_t(x,y) ρ_y` with `p_t = e^{tL}`. Variance and Holevo
//! quantity are always measured against the stationary measure of `L`.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    expectation, same_space, validate_ensemble, EnsembleFile, MatrixFunction, Measure, QuantumEnsemble, StateSpace,
};
use crate::error::{Error, Result};
use crate::matcore::HermitianMatrix;
use crate::phi_entropy::{entropy, variance};
use crate::semigroup::{check_time, CpKernel, CpMap, GeneratorAction, KernelFamily, MarkovSemigroup, MatrixDomain};

/// Row sums of a weight matrix must vanish to this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Bisection stops once the bracket is this small relative to its upper end.
pub const TAU_REL_TOL: f64 = 1e-10;

/// Transition rates `L(x,y) ≥ 0` for `x ≠ y`, rows summing to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    space: Arc<StateSpace>,
    l: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn new(space: Arc<StateSpace>, l: DMatrix<f64>) -> Result<Self> {
        let n = space.size();
        if l.nrows() != l.ncols() {
            return Err(Error::NotSquare(l.nrows(), l.ncols()));
        }
        if l.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: l.nrows(),
            });
        }
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("weight matrix has non-finite entries".into()));
        }
        let scale = l.amax().max(1.0);
        for x in 0..n {
            for y in 0..n {
                if x != y && l[(x, y)] < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "negative rate L({x},{y}) = {}",
                        l[(x, y)]
                    )));
                }
            }
            let s = l.row(x).sum();
            if s.abs() > ROW_SUM_TOL * scale {
                return Err(Error::MassNotConserved(s.abs()));
            }
        }
        Ok(Self { space, l })
    }

    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("weight matrix rows have unequal length".into()));
        }
        Self::new(StateSpace::new(labels)?, DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn size(&self) -> usize {
        self.l.nrows()
    }
}

/// `p_t = e^{tL}`.
pub fn kernel_at(w: &WeightMatrix, t: f64) -> Result<DMatrix<f64>> {
    check_time(t)?;
    Ok((&w.l * t).exp())
}

fn reachable_from_zero(n: usize, edge: impl Fn(usize, usize) -> bool) -> usize {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = queue.pop_front() {
        for y in 0..n {
            if !seen[y] && edge(x, y) {
                seen[y] = true;
                count += 1;
                queue.push_back(y);
            }
        }
    }
    count
}

/// Strong connectivity of the graph `x → y` whenever `L(x,y) > 0`.
pub fn check_irreducible(w: &WeightMatrix) -> bool {
    let n = w.size();
    let forward = reachable_from_zero(n, |x, y| x != y && w.l[(x, y)] > 0.0);
    let backward = reachable_from_zero(n, |x, y| x != y && w.l[(y, x)] > 0.0);
    forward == n && backward == n
}

/// The unique `μ` with `μᵀL = 0`, from the null space of `Lᵀ`.
pub fn stationary_measure(w: &WeightMatrix) -> Result<Measure> {
    let n = w.size();
    let svd = w.l.transpose().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let sigma = &svd.singular_values;
    let tol = 1e-10 * sigma.amax().max(1.0) * n as f64;
    let null: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= tol).collect();
    if null.len() > 1 {
        return Err(Error::Reducible(null.len()));
    }
    let k = (0..sigma.len())
        .min_by(|&a, &b| sigma[a].total_cmp(&sigma[b]))
        .unwrap_or(0);
    let mut v: Vec<f64> = v_t.row(k).iter().cloned().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
    let total: f64 = v.iter().sum();
    if v.iter().any(|&a| a < -1e-12 * total.abs()) {
        return Err(Error::InvalidMeasure("null vector has mixed signs".into()));
    }
    let weights: Vec<f64> = v.iter().map(|&a| a.max(0.0)).collect();
    let mu = Measure::new(
        w.space.clone(),
        weights.iter().map(|a| a / weights.iter().sum::<f64>()).collect(),
    )?;
    for t in [0.5, 1.0, 2.0] {
        let p = kernel_at(w, t)?;
        let dev = (0..n)
            .map(|y| ((0..n).map(|x| mu.weight(x) * p[(x, y)]).sum::<f64>() - mu.weight(y)).abs())
            .fold(0.0, f64::max);
        if dev > 1e-9 {
            return Err(Error::NotInvariant(dev));
        }
    }
    Ok(mu)
}

/// Gap of the additive symmetrization of `L` in `L²(μ)`; `C₂ = 1/gap`.
pub fn spectral_gap(w: &WeightMatrix, mu: &Measure) -> Result<f64> {
    same_space(w.space(), mu.space())?;
    let n = w.size();
    if n < 2 {
        return Err(Error::InvalidArgument("a single vertex has no spectral gap".into()));
    }
    let sq: Vec<f64> = mu.weights().iter().map(|a| a.sqrt()).collect();
    // −D^{½} L D^{-½}, symmetrized
    let a = DMatrix::from_fn(n, n, |x, y| -sq[x] * w.l[(x, y)] / sq[y]);
    let sym = (&a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev[1])
}

/// Poincaré constant `C₂ = 1/gap`.
pub fn poincare_constant(w: &WeightMatrix, mu: &Measure) -> Result<f64> {
    let gap = spectral_gap(w, mu)?;
    if gap <= 0.0 {
        return Err(Error::Reducible(2));
    }
    Ok(1.0 / gap)
}

/// The chain lifted to `d × d` matrix functions: `(P_t f)(x) = Σ_y p_t(x,y) f(y)`.
#[derive(Clone, Debug)]
pub struct ClassicalLift {
    weights: WeightMatrix,
    dim: usize,
}

impl ClassicalLift {
    pub fn new(weights: WeightMatrix, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self { weights, dim })
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }
}

fn mix(space: &Arc<StateSpace>, p: &DMatrix<f64>, f: &MatrixFunction) -> Result<MatrixFunction> {
    let n = space.size();
    let values = (0..n)
        .map(|x| {
            (0..n).fold(HermitianMatrix::zeros(f.dim()), |acc, y| {
                &acc + &f.value(y).scale(p[(x, y)])
            })
        })
        .collect();
    MatrixFunction::new(space.clone(), values)
}

impl MatrixDomain for ClassicalLift {
    fn space(&self) -> &Arc<StateSpace> {
        &self.weights.space
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

impl GeneratorAction for ClassicalLift {
    fn apply_generator(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_function(f)?;
        mix(&self.weights.space, &self.weights.l, f)
    }
}

impl KernelFamily for ClassicalLift {
    fn kernel(&self, t: f64) -> Result<CpKernel> {
        let p = kernel_at(&self.weights, t)?;
        let n = self.weights.size();
        let maps = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| CpMap::scaled_identity(self.dim, p[(x, y)].max(0.0)))
                    .collect()
            })
            .collect();
        CpKernel::new(self.weights.space.clone(), self.dim, maps)
    }
}

impl MarkovSemigroup for ClassicalLift {
    fn evolve(&self, t: f64, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_function(f)?;
        mix(&self.weights.space, &kernel_at(&self.weights, t)?, f)
    }
}

/// A weight matrix together with the states sitting on its vertices.
#[derive(Clone, Debug)]
pub struct GraphEnsemble {
    weights: WeightMatrix,
    ensemble: QuantumEnsemble,
}

impl GraphEnsemble {
    pub fn new(weights: WeightMatrix, ensemble: QuantumEnsemble) -> Result<Self> {
        same_space(weights.space(), ensemble.measure().space())?;
        if let Some(v) = validate_ensemble(&ensemble).first() {
            return Err(Error::InvalidEnsemble(v.to_string()));
        }
        Ok(Self { weights, ensemble })
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn ensemble(&self) -> &QuantumEnsemble {
        &self.ensemble
    }

    pub fn lift(&self) -> ClassicalLift {
        ClassicalLift {
            weights: self.weights.clone(),
            dim: self.ensemble.dim(),
        }
    }

    /// States after time `t`, keeping the loaded weights.
    pub fn evolve(&self, t: f64) -> Result<QuantumEnsemble> {
        let p = kernel_at(&self.weights, t)?;
        self.ensemble
            .with_states(mix(self.weights.space(), &p, self.ensemble.states())?)
    }

    /// `Var(ρ_t)` and `χ(ρ_t)` with respect to `mu`.
    pub fn functionals(&self, mu: &Measure, t: f64) -> Result<(f64, f64)> {
        let states = self.evolve(t)?.states().clone();
        Ok((variance(mu, &states)?, entropy(mu, &states)?))
    }
}

pub fn evolve(g: &GraphEnsemble, t: f64) -> Result<QuantumEnsemble> {
    g.evolve(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixingFunctional {
    Variance,
    Holevo,
}

/// `inf{t : H(ρ_t) ≤ ε}` by doubling then bisection on the nonincreasing curve.
pub fn mixing_time(g: &GraphEnsemble, which: MixingFunctional, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    if !check_irreducible(&g.weights) {
        return Err(Error::Reducible(0));
    }
    let mu = stationary_measure(&g.weights)?;
    let value = |t: f64| -> Result<f64> {
        let (var, chi) = g.functionals(&mu, t)?;
        Ok(match which {
            MixingFunctional::Variance => var,
            MixingFunctional::Holevo => chi,
        })
    };
    if value(0.0)? <= eps {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while value(hi)? > eps {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidArgument(format!("no decay to {eps} before t = 1e12")));
        }
    }
    while hi - lo > TAU_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if value(mid)? > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

pub fn tau2(g: &GraphEnsemble, eps: f64) -> Result<f64> {
    mixing_time(g, MixingFunctional::Variance, eps)
}

pub fn tau_chi(g: &GraphEnsemble, eps: f64) -> Result<f64> {
    mixing_time(g, MixingFunctional::Holevo, eps)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingBounds {
    /// `(C₂/2)(log Var(ρ) + log 1/ε)`
    pub tau2: f64,
    /// `C_χ (log χ(ρ) + log 1/ε)`
    pub tau_chi: f64,
}

pub fn mixing_bounds(c2: f64, c_chi: f64, var0: f64, chi0: f64, eps: f64) -> Result<MixingBounds> {
    if !(c2 > 0.0 && c_chi > 0.0 && eps > 0.0) {
        return Err(Error::InvalidArgument("constants and ε must be positive".into()));
    }
    Ok(MixingBounds {
        tau2: 0.5 * c2 * (var0.ln() - eps.ln()),
        tau_chi: c_chi * (chi0.ln() - eps.ln()),
    })
}

/// Both sides of the a-priori budgets for the initial ensemble.
#[derive(Clone, Copy, Debug)]
pub struct RemarkReadings {
    pub variance: f64,
    /// `max_x μ(x) / d`
    pub mu_star_over_d: f64,
    pub holevo: f64,
    pub shannon: f64,
    /// `(C₂/2)(log(μ*/d) + log 1/ε)`
    pub tau2_mu_star: f64,
    /// `(C₂/2)(log H(μ) + log 1/ε)`, the display as printed.
    pub tau2_shannon: f64,
    /// `C_χ (log H(μ) + log 1/ε)`, the reading the context suggests.
    pub tau_chi_shannon: f64,
}

impl RemarkReadings {
    pub fn variance_within_mu_star(&self) -> bool {
        self.variance <= self.mu_star_over_d + 1e-12
    }

    pub fn holevo_within_shannon(&self) -> bool {
        self.holevo <= self.shannon + 1e-9
    }
}

pub fn remark_readings(mu: &Measure, states: &MatrixFunction, c2: f64, c_chi: f64, eps: f64) -> Result<RemarkReadings> {
    let mu_star_over_d = mu.max_weight() / states.dim() as f64;
    let shannon = mu.shannon_entropy();
    let log_inv = -eps.ln();
    Ok(RemarkReadings {
        variance: variance(mu, states)?,
        mu_star_over_d,
        holevo: entropy(mu, states)?,
        shannon,
        tau2_mu_star: 0.5 * c2 * (mu_star_over_d.ln() + log_inv),
        tau2_shannon: 0.5 * c2 * (shannon.ln() + log_inv),
        tau_chi_shannon: c_chi * (shannon.ln() + log_inv),
    })
}

/// One row of a mixing curve.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub t: f64,
    pub variance: f64,
    pub holevo: f64,
    /// Trace distance `½‖ρ_{t,x} − ρ̄‖₁` per vertex.
    pub distance_to_mean: Vec<f64>,
}

pub fn mixing_curve(g: &GraphEnsemble, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    let mu = stationary_measure(&g.weights)?;
    let mean = expectation(&mu, g.ensemble.states())?;
    grid.iter()
        .map(|&t| {
            let states = g.evolve(t)?.states().clone();
            let distance_to_mean = states
                .values()
                .iter()
                .map(|s| Ok(0.5 * (s - &mean).trace_norm()?))
                .collect::<Result<_>>()?;
            Ok(CurvePoint {
                t,
                variance: variance(&mu, &states)?,
                holevo: entropy(&mu, &states)?,
                distance_to_mean,
            })
        })
        .collect()
}

/// The jump process on `{0,1}ⁿ` as a weight matrix.
pub fn hypercube_graph(n: usize, p: f64) -> Result<WeightMatrix> {
    let jp = crate::hypercube::JumpProcess::new(n, p, 1)?;
    WeightMatrix::new(jp.space().clone(), jp.rate_matrix())
}

/// `L = λ(J/n − I)`: every vertex jumps at rate `λ` to a uniform vertex.
pub fn complete_graph(n: usize, rate: f64) -> Result<WeightMatrix> {
    let l = DMatrix::from_fn(n, n, |x, y| rate / n as f64 - if x == y { rate } else { 0.0 });
    WeightMatrix::new(StateSpace::indexed(n)?, l)
}

/// Random rates on `n` vertices with a directed cycle ensuring irreducibility.
pub fn random_irreducible(n: usize, seed: u64) -> Result<WeightMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            if y == (x + 1) % n || rng.random_bool(0.5) {
                l[(x, y)] = rng.random_range(0.1..1.0);
            }
        }
    }
    for x in 0..n {
        let s: f64 = l.row(x).sum();
        l[(x, x)] = -s;
    }
    WeightMatrix::new(StateSpace::indexed(n)?, l)
}

/// Either an inline ensemble or a path to an ensemble file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleRef {
    Inline(EnsembleFile),
    Path(String),
}

/// `{"labels": [...], "L": [[...]], "ensemble": ...}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub labels: Vec<String>,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    pub ensemble: EnsembleRef,
}

impl GraphFile {
    /// Relative ensemble paths are resolved against `base`.
    pub fn to_graph(&self, base: Option<&Path>) -> Result<GraphEnsemble> {
        let weights = WeightMatrix::from_rows(self.labels.clone(), &self.l)?;
        let ensemble = match &self.ensemble {
            EnsembleRef::Inline(e) => e.to_ensemble()?,
            EnsembleRef::Path(p) => {
                let path = match base {
                    Some(b) if Path::new(p).is_relative() => b.join(p),
                    _ => Path::new(p).to_path_buf(),
                };
                crate::ensemble::load_ensemble(path)?
            }
        };
        if ensemble.measure().space().labels() != weights.space().labels() {
            return Err(Error::SpaceMismatch);
        }
        let ensemble = QuantumEnsemble::new(
            Measure::new(weights.space().clone(), ensemble.measure().weights().to_vec())?,
            MatrixFunction::new(weights.space().clone(), ensemble.states().values().to_vec())?,
        )?;
        GraphEnsemble::new(weights, ensemble)
    }
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<GraphEnsemble> {
    let path = path.as_ref();
    let file: GraphFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    file.to_graph(path.parent())
}
