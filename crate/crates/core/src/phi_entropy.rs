//! Matrix Φ-entropy functionals `H_Φ(f) = Tr[𝔼Φ(f) − Φ(𝔼f)]`.

use std::sync::Arc;

use crate::ensemble::{expectation, same_space, MatrixFunction, Measure, QuantumEnsemble, StateSpace};
use crate::error::{Error, Result};
use crate::matcore::{trace_fn, von_neumann_entropy, HermitianMatrix, ScalarFunction};

/// The convex functions for which matrix Φ-entropies are subadditive:
/// `u²`, `u log u` and `u^p` with `1 ≤ p ≤ 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhiFamily {
    Square,
    XLogX,
    Power(f64),
}

impl PhiFamily {
    pub fn power(p: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("power exponent {p} is outside [1, 2]")));
        }
        Ok(Self::Power(p))
    }

    pub fn scalar(&self) -> ScalarFunction {
        match *self {
            Self::Square => ScalarFunction::Square,
            Self::XLogX => ScalarFunction::XLogX,
            Self::Power(p) => ScalarFunction::Power(p),
        }
    }

    /// `Φ′` as a liftable scalar function.
    pub fn derivative(&self) -> ScalarFunction {
        self.scalar().derivative()
    }

    /// Whether `Φ` is only defined on positive semi-definite arguments.
    pub fn needs_psd(&self) -> bool {
        !matches!(self, Self::Square)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Square => "square".into(),
            Self::XLogX => "xlogx".into(),
            Self::Power(p) => format!("power({p})"),
        }
    }
}

impl std::str::FromStr for PhiFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" | "variance" => Ok(Self::Square),
            "xlogx" | "entropy" | "holevo" => Ok(Self::XLogX),
            other => {
                let p = other
                    .strip_prefix("power:")
                    .or_else(|| other.strip_prefix("power="))
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown Φ {other:?}")))?;
                Self::power(p)
            }
        }
    }
}

/// Which trace the functional is taken with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TraceConvention {
    /// `Tr`
    #[default]
    Standard,
    /// `tr = Tr / d`
    Normalized,
}

/// `Tr[𝔼_μ Φ(f) − Φ(𝔼_μ f)]` with the standard trace.
pub fn phi_entropy(phi: PhiFamily, mu: &Measure, f: &MatrixFunction) -> Result<f64> {
    phi_entropy_with(phi, mu, f, TraceConvention::Standard)
}

pub fn phi_entropy_with(phi: PhiFamily, mu: &Measure, f: &MatrixFunction, convention: TraceConvention) -> Result<f64> {
    same_space(mu.space(), f.space())?;
    let s = phi.scalar();
    let mut mean_of_phi = 0.0;
    for (w, v) in mu.weights().iter().zip(f.values()) {
        if *w != 0.0 {
            mean_of_phi += w * trace_fn(s, v)?;
        }
    }
    let phi_of_mean = trace_fn(s, &expectation(mu, f)?)?;
    let h = mean_of_phi - phi_of_mean;
    Ok(match convention {
        TraceConvention::Standard => h,
        TraceConvention::Normalized => h / f.dim() as f64,
    })
}

/// `Var(f) = Tr 𝔼_μ[(f − 𝔼_μ f)²]`, computed from centered values.
pub fn variance(mu: &Measure, f: &MatrixFunction) -> Result<f64> {
    let mean = expectation(mu, f)?;
    Ok(mu
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, v)| {
            let c = v - &mean;
            w * c.trace_product(&c)
        })
        .sum())
}

/// `Ent(f)`, the `u log u` entropy.
pub fn entropy(mu: &Measure, f: &MatrixFunction) -> Result<f64> {
    phi_entropy(PhiFamily::XLogX, mu, f)
}

/// Holevo quantity `χ = H_{u log u}(ρ_·)`.
pub fn holevo(ens: &QuantumEnsemble) -> Result<f64> {
    phi_entropy(PhiFamily::XLogX, ens.measure(), ens.states())
}

/// `S(ρ̄) − Σ_x μ(x) S(ρ_x)`.
pub fn holevo_entropy_difference(ens: &QuantumEnsemble) -> Result<f64> {
    let avg = expectation(ens.measure(), ens.states())?;
    let mut mean_entropy = 0.0;
    for (w, rho) in ens.measure().weights().iter().zip(ens.states().values()) {
        if *w != 0.0 {
            mean_entropy += w * von_neumann_entropy(rho)?;
        }
    }
    Ok(von_neumann_entropy(&avg)? - mean_entropy)
}

/// Product of per-coordinate measures `μ₁ ⊗ … ⊗ μ_n`.
///
/// Joint points are indexed in mixed radix with coordinate 0 varying fastest.
/// Joint labels concatenate the coordinate labels, separated by `,` unless
/// every coordinate label is a single character (so `{0,1}ⁿ` gets bit-string
/// labels `x₁x₂…x_n`).
#[derive(Clone, Debug)]
pub struct ProductMeasure {
    factors: Vec<Measure>,
    joint: Measure,
}

impl ProductMeasure {
    pub fn new(factors: Vec<Measure>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("product of zero measures".into()));
        }
        let compact = factors
            .iter()
            .all(|m| m.space().labels().iter().all(|l| l.chars().count() == 1));
        let sizes: Vec<usize> = factors.iter().map(|m| m.space().size()).collect();
        let total: usize = sizes.iter().product();
        let mut labels = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for idx in 0..total {
            let coords = mixed_radix(idx, &sizes);
            let parts: Vec<&str> = coords.iter().zip(&factors).map(|(&c, m)| m.space().label(c)).collect();
            labels.push(if compact { parts.concat() } else { parts.join(",") });
            weights.push(coords.iter().zip(&factors).map(|(&c, m)| m.weight(c)).product());
        }
        let joint = Measure::new(StateSpace::new(labels)?, weights)?;
        Ok(Self { factors, joint })
    }

    pub fn factors(&self) -> &[Measure] {
        &self.factors
    }

    pub fn joint(&self) -> &Measure {
        &self.joint
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        self.joint.space()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.factors.iter().map(|m| m.space().size()).collect()
    }

    pub fn coordinates(&self, index: usize) -> Vec<usize> {
        mixed_radix(index, &self.sizes())
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (c, m) in coords.iter().zip(&self.factors) {
            idx += c * stride;
            stride *= m.space().size();
        }
        idx
    }
}

fn mixed_radix(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&s| {
            let c = idx % s;
            idx /= s;
            c
        })
        .collect()
}

/// `H_Φ(f | X_{−i})` at one value of the other coordinates.
#[derive(Clone, Debug)]
pub struct ConditionalEntry {
    /// Coordinates of the joint point with coordinate `i` set to zero.
    pub context: Vec<usize>,
    /// Marginal weight `μ_{−i}(x_{−i})`.
    pub weight: f64,
    pub value: f64,
}

/// Φ-entropy of `f` over coordinate `i` (0-based) for each fixed `x_{−i}`.
pub fn conditional_phi_entropy(
    phi: PhiFamily,
    pm: &ProductMeasure,
    f: &MatrixFunction,
    i: usize,
) -> Result<Vec<ConditionalEntry>> {
    same_space(pm.space(), f.space())?;
    let sizes = pm.sizes();
    if i >= sizes.len() {
        return Err(Error::InvalidArgument(format!(
            "coordinate {i} out of range for {} coordinates",
            sizes.len()
        )));
    }
    let factor = &pm.factors[i];
    let mut out = Vec::new();
    for idx in 0..pm.joint.space().size() {
        let coords = pm.coordinates(idx);
        if coords[i] != 0 {
            continue;
        }
        let slice: Vec<HermitianMatrix> = (0..sizes[i])
            .map(|k| {
                let mut c = coords.clone();
                c[i] = k;
                f.value(pm.index(&c)).clone()
            })
            .collect();
        let slice = MatrixFunction::new(factor.space().clone(), slice)?;
        let weight: f64 = coords
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, &c)| pm.factors[j].weight(c))
            .product();
        out.push(ConditionalEntry {
            context: coords,
            weight,
            value: phi_entropy(phi, factor, &slice)?,
        });
    }
    Ok(out)
}

/// `Σᵢ 𝔼[H_Φ(f | X_{−i})] − H_Φ(f)`, nonnegative by subadditivity.
pub fn subadditivity_gap(phi: PhiFamily, pm: &ProductMeasure, f: &MatrixFunction) -> Result<f64> {
    if let PhiFamily::Power(p) = phi {
        PhiFamily::power(p)?;
    }
    let mut sum = 0.0;
    for i in 0..pm.factors.len() {
        sum += conditional_phi_entropy(phi, pm, f, i)?
            .iter()
            .map(|e| e.weight * e.value)
            .sum::<f64>();
    }
    Ok(sum - phi_entropy(phi, pm.joint(), f)?)
}
