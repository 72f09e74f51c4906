//! Finite state spaces, probability measures, matrix-valued functions and
//! quantum ensembles.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{eigh, HermitianMatrix};

/// Weight drift tolerated before a measure is rejected.
pub const MEASURE_DRIFT_TOL: f64 = 1e-9;

/// Tolerance for the PSD and unit-trace checks on ensemble states.
pub const STATE_TOL: f64 = 1e-10;

/// Ordered finite set `Ω` of distinct labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Arc<Self>> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidArgument(
                "state space must contain at least one label".into(),
            ));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate label {l:?}")));
            }
        }
        Ok(Arc::new(Self { labels }))
    }

    /// Labels `"0", "1", …, "n-1"`.
    pub fn indexed(n: usize) -> Result<Arc<Self>> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

pub(crate) fn same_space(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// Probability vector over a [`StateSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    space: Arc<StateSpace>,
    weights: Vec<f64>,
}

impl Measure {
    /// Rejects negative weights and a total drifting more than [`MEASURE_DRIFT_TOL`]
    /// from one; smaller drift is normalized away.
    pub fn new(space: Arc<StateSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.size() {
            return Err(Error::DimensionMismatch {
                expected: space.size(),
                found: weights.len(),
            });
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "weight {w} at label {:?} is negative or not finite",
                space.label(i)
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MEASURE_DRIFT_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { space, weights })
    }

    pub fn uniform(space: Arc<StateSpace>) -> Self {
        let n = space.size();
        Self {
            space,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `μ* = max_x μ(x)`.
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// Shannon entropy `H(μ)` in nats.
    pub fn shannon_entropy(&self) -> f64 {
        -self
            .weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| w * w.ln())
            .sum::<f64>()
    }
}

/// Finite map `x ∈ Ω ↦ f(x)` into `d × d` Hermitian matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixFunction {
    space: Arc<StateSpace>,
    dim: usize,
    values: Vec<HermitianMatrix>,
}

impl MatrixFunction {
    pub fn new(space: Arc<StateSpace>, values: Vec<HermitianMatrix>) -> Result<Self> {
        if values.len() != space.size() {
            return Err(Error::DimensionMismatch {
                expected: space.size(),
                found: values.len(),
            });
        }
        let dim = values[0].dim();
        if let Some(v) = values.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        Ok(Self { space, dim, values })
    }

    pub fn constant(space: Arc<StateSpace>, value: &HermitianMatrix) -> Self {
        let values = vec![value.clone(); space.size()];
        Self {
            dim: value.dim(),
            space,
            values,
        }
    }

    pub fn zeros(space: Arc<StateSpace>, dim: usize) -> Self {
        Self::constant(space, &HermitianMatrix::zeros(dim))
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[HermitianMatrix] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &HermitianMatrix {
        &self.values[i]
    }

    pub fn into_values(self) -> Vec<HermitianMatrix> {
        self.values
    }

    /// Pointwise map, keeping space and dimension.
    pub fn map(&self, mut op: impl FnMut(&HermitianMatrix) -> HermitianMatrix) -> Self {
        Self {
            space: self.space.clone(),
            dim: self.dim,
            values: self.values.iter().map(&mut op).collect(),
        }
    }

    pub fn try_map(&self, op: impl FnMut(&HermitianMatrix) -> Result<HermitianMatrix>) -> Result<Self> {
        let values = self.values.iter().map(op).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space: self.space.clone(),
            dim: self.dim,
            values,
        })
    }

    /// Pointwise binary operation with a function on the same space.
    pub fn zip_with(
        &self,
        other: &Self,
        mut op: impl FnMut(&HermitianMatrix, &HermitianMatrix) -> HermitianMatrix,
    ) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            space: self.space.clone(),
            dim: self.dim,
            values: self.values.iter().zip(&other.values).map(|(a, b)| op(a, b)).collect(),
        })
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        same_space(&self.space, &other.space)?;
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| v.scale(a))
    }

    /// Pointwise Jordan product `fg + gf`.
    pub fn jordan(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.jordan(b))
    }

    /// `sup_x max|f(x)_{ij}|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.max_abs()).fold(0.0, f64::max)
    }

    /// `sup_x ‖f(x)‖_∞` in operator norm.
    pub fn sup_norm(&self) -> Result<f64> {
        self.values
            .iter()
            .map(|v| v.norm_inf())
            .try_fold(0.0_f64, |acc, n| n.map(|n| acc.max(n)))
    }

    /// Smallest eigenvalue over all points.
    pub fn lambda_min(&self) -> Result<f64> {
        self.values
            .iter()
            .map(|v| v.lambda_min())
            .try_fold(f64::INFINITY, |acc, l| l.map(|l| acc.min(l)))
    }

    /// Row-major vectorization, index `x·d² + i·d + j`.
    pub fn to_vector(&self) -> nalgebra::DVector<Complex64> {
        let d2 = self.dim * self.dim;
        let mut v = nalgebra::DVector::zeros(self.values.len() * d2);
        for (x, m) in self.values.iter().enumerate() {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    v[x * d2 + i * self.dim + j] = m.matrix()[(i, j)];
                }
            }
        }
        v
    }

    /// Inverse of [`to_vector`](Self::to_vector); the result is symmetrized.
    pub fn from_vector(space: Arc<StateSpace>, dim: usize, v: &nalgebra::DVector<Complex64>) -> Result<Self> {
        let d2 = dim * dim;
        if v.len() != space.size() * d2 {
            return Err(Error::DimensionMismatch {
                expected: space.size() * d2,
                found: v.len(),
            });
        }
        let values = (0..space.size())
            .map(|x| {
                let m = crate::matcore::CMatrix::from_fn(dim, dim, |i, j| v[x * d2 + i * dim + j]);
                HermitianMatrix::symmetrized(m)
            })
            .collect();
        Ok(Self { space, dim, values })
    }
}

/// `𝔼_μ[f] = Σ_x μ(x) f(x)`.
pub fn expectation(mu: &Measure, f: &MatrixFunction) -> Result<HermitianMatrix> {
    same_space(mu.space(), f.space())?;
    let mut acc = HermitianMatrix::zeros(f.dim());
    for (w, v) in mu.weights().iter().zip(f.values()) {
        if *w != 0.0 {
            acc = &acc + &v.scale(*w);
        }
    }
    Ok(acc)
}

/// Ensemble `{μ(x), ρ_x}` of density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumEnsemble {
    measure: Measure,
    states: MatrixFunction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NotPositive,
    TraceNotOne,
}

/// One failed ensemble check.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub label: String,
    pub kind: ViolationKind,
    /// `λ_min` for [`ViolationKind::NotPositive`], `|Tr ρ − 1|` for [`ViolationKind::TraceNotOne`].
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::NotPositive => {
                write!(f, "state {:?}: smallest eigenvalue {:e}", self.label, self.magnitude)
            }
            ViolationKind::TraceNotOne => {
                write!(f, "state {:?}: |Tr - 1| = {:e}", self.label, self.magnitude)
            }
        }
    }
}

impl QuantumEnsemble {
    /// Pairs a measure with states; only space and dimension are checked here.
    /// See [`validate_ensemble`] and [`QuantumEnsemble::validated`].
    pub fn new(measure: Measure, states: MatrixFunction) -> Result<Self> {
        same_space(measure.space(), states.space())?;
        Ok(Self { measure, states })
    }

    /// Like [`new`](Self::new) but rejects any state violation.
    pub fn validated(measure: Measure, states: MatrixFunction) -> Result<Self> {
        let ens = Self::new(measure, states)?;
        let violations = validate_ensemble(&ens);
        if violations.is_empty() {
            Ok(ens)
        } else {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidEnsemble(msg.join("; ")))
        }
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn states(&self) -> &MatrixFunction {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.dim()
    }

    pub fn with_states(&self, states: MatrixFunction) -> Result<Self> {
        Self::new(self.measure.clone(), states)
    }

    pub fn with_measure(&self, measure: Measure) -> Result<Self> {
        Self::new(measure, self.states.clone())
    }
}

/// `ρ̄ = Σ_x μ(x) ρ_x`.
pub fn average_state(ens: &QuantumEnsemble) -> Result<HermitianMatrix> {
    expectation(&ens.measure, &ens.states)
}

/// Lists every state that fails the PSD or unit-trace check at [`STATE_TOL`].
pub fn validate_ensemble(ens: &QuantumEnsemble) -> Vec<Violation> {
    let mut out = Vec::new();
    for (x, rho) in ens.states.values().iter().enumerate() {
        let label = ens.states.space().label(x).to_string();
        let tr_dev = (rho.trace() - 1.0).abs();
        if tr_dev > STATE_TOL {
            out.push(Violation {
                label: label.clone(),
                kind: ViolationKind::TraceNotOne,
                magnitude: tr_dev,
            });
        }
        let lmin = eigh(rho).map(|s| s.eigenvalues[0]).unwrap_or(f64::NEG_INFINITY);
        if lmin < -STATE_TOL {
            out.push(Violation {
                label,
                kind: ViolationKind::NotPositive,
                magnitude: lmin,
            });
        }
    }
    out
}

/// On-disk ensemble: `{ "labels", "weights", "dim", "states" }` with each state a
/// row-major list of `d²` `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
    pub dim: usize,
    pub states: Vec<Vec<[f64; 2]>>,
}

impl EnsembleFile {
    pub fn from_ensemble(ens: &QuantumEnsemble) -> Self {
        let dim = ens.dim();
        let states = ens
            .states()
            .values()
            .iter()
            .map(|m| {
                let mut entries = Vec::with_capacity(dim * dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let z = m.matrix()[(i, j)];
                        entries.push([z.re, z.im]);
                    }
                }
                entries
            })
            .collect();
        Self {
            labels: ens.states().space().labels().to_vec(),
            weights: ens.measure().weights().to_vec(),
            dim,
            states,
        }
    }

    /// Builds the ensemble without state validation.
    pub fn to_ensemble_unchecked(&self) -> Result<QuantumEnsemble> {
        let space = StateSpace::new(self.labels.iter().cloned())?;
        let measure = Measure::new(space.clone(), self.weights.clone())?;
        if self.states.len() != space.size() {
            return Err(Error::DimensionMismatch {
                expected: space.size(),
                found: self.states.len(),
            });
        }
        let values = self
            .states
            .iter()
            .map(|s| {
                let z: Vec<Complex64> = s.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                HermitianMatrix::from_row_major(self.dim, &z)
            })
            .collect::<Result<Vec<_>>>()?;
        QuantumEnsemble::new(measure, MatrixFunction::new(space, values)?)
    }

    /// Builds the ensemble and rejects it on any [`Violation`].
    pub fn to_ensemble(&self) -> Result<QuantumEnsemble> {
        let ens = self.to_ensemble_unchecked()?;
        QuantumEnsemble::validated(ens.measure.clone(), ens.states.clone())
    }
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<QuantumEnsemble> {
    let text = std::fs::read_to_string(path)?;
    parse_ensemble(&text)
}

pub fn parse_ensemble(json: &str) -> Result<QuantumEnsemble> {
    let file: EnsembleFile = serde_json::from_str(json)?;
    file.to_ensemble()
}
