//! Experiment configuration.
//!
//! A config is resolved (defaults filled in for its experiment) and validated
//! before anything runs. The hash written into every CSV is taken over the
//! resolved form without the output path, so equivalent configs hash equally.

use std::path::PathBuf;
use std::str::FromStr;

use matphi::channels::ChannelSpec;
use matphi::ensemble::{load_ensemble, QuantumEnsemble};
use matphi::phi_entropy::PhiFamily;
use matphi::sobolev::{appendix_b_ensemble, RatioKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Figure1,
    Constants,
    Hypercube,
    Mixing,
    SobolevEstimate,
    DecayCurve,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Figure1 => "figure1",
            Self::Constants => "constants",
            Self::Hypercube => "hypercube",
            Self::Mixing => "mixing",
            Self::SobolevEstimate => "sobolev-estimate",
            Self::DecayCurve => "decay-curve",
        }
    }
}

/// `{"process": "hypercube-jump", "n": 3, "p": 0.5}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "kebab-case")]
pub enum ProcessSpec {
    HypercubeJump {
        n: usize,
        p: f64,
        #[serde(default = "default_dim")]
        d: usize,
    },
}

fn default_dim() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dynamics {
    Channel(ChannelSpec),
    Process(ProcessSpec),
}

/// `points` equally spaced times on `[0, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points).map(|k| self.t_max * k as f64 / last).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    pub dynamics: Option<Dynamics>,
    /// `figure1`, `appendixB(ε,p₁)` or a path to an ensemble file.
    pub ensemble: Option<String>,
    pub grid: Option<TimeGrid>,
    pub rates: Option<Vec<f64>>,
    pub kind: Option<String>,
    pub m: Option<usize>,
    pub restarts: Option<usize>,
    /// `hypercube`, `random` or a path to a graph file.
    pub graph: Option<String>,
    pub vertices: Option<usize>,
    pub epsilon: Option<f64>,
    pub c2: Option<f64>,
    pub c_chi: Option<f64>,
    pub phi: Option<String>,
    /// Output path; `-` or `csv` write to stdout.
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment: Some(experiment),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
        Self::from_json(&text)
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment
            .ok_or_else(|| CliError::Input("config does not name an experiment".into()))
    }

    /// Fills every unset field the experiment reads with its default, then validates.
    pub fn resolve(mut self) -> Result<Self> {
        let exp = self.experiment()?;
        let depolarizing = Dynamics::Channel(ChannelSpec::Depolarizing { r: 1.0, d: 2 });
        let grid = |t_max, points| Some(TimeGrid { t_max, points });
        match exp {
            Experiment::Figure1 => {
                self.dynamics.get_or_insert(depolarizing);
                self.grid = self.grid.or(grid(3.0, 50));
            }
            Experiment::Constants => {
                self.dynamics.get_or_insert(depolarizing);
                self.rates.get_or_insert_with(|| vec![0.5, 1.0, 2.0]);
                self.m.get_or_insert(2);
                self.restarts.get_or_insert(32);
            }
            Experiment::Hypercube => {
                self.dynamics
                    .get_or_insert(Dynamics::Process(ProcessSpec::HypercubeJump { n: 3, p: 0.5, d: 2 }));
                self.grid = self.grid.or(grid(3.0, 31));
            }
            Experiment::Mixing => {
                self.graph.get_or_insert_with(|| "hypercube".into());
                self.vertices.get_or_insert(5);
                self.epsilon.get_or_insert(1e-3);
                self.restarts.get_or_insert(16);
                self.grid = self.grid.or(grid(10.0, 41));
            }
            Experiment::SobolevEstimate => {
                self.dynamics.get_or_insert(depolarizing);
                self.kind.get_or_insert_with(|| "mlsi".into());
                self.m.get_or_insert(2);
                self.restarts.get_or_insert(32);
            }
            Experiment::DecayCurve => {
                self.dynamics.get_or_insert(depolarizing);
                self.ensemble.get_or_insert_with(|| "figure1".into());
                self.phi.get_or_insert_with(|| "entropy".into());
                self.grid = self.grid.or(grid(3.0, 31));
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Input(msg));
        let exp = self.experiment()?;
        if let Some(g) = &self.grid {
            if g.points < 2 || !(g.t_max > 0.0 && g.t_max.is_finite()) {
                return bad(format!("grid needs t_max > 0 and at least 2 points, got {g:?}"));
            }
        }
        if let Some(rates) = &self.rates {
            if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return bad(format!("rates must be positive, got {rates:?}"));
            }
        }
        if matches!(self.m, Some(m) if m < 2) {
            return bad("m must be at least 2".into());
        }
        if self.restarts == Some(0) {
            return bad("restarts must be positive".into());
        }
        if matches!(self.vertices, Some(v) if v < 2) {
            return bad("vertices must be at least 2".into());
        }
        for (name, v) in [("epsilon", self.epsilon), ("c2", self.c2), ("c_chi", self.c_chi)] {
            if matches!(v, Some(x) if !(x > 0.0 && x.is_finite())) {
                return bad(format!("{name} must be positive"));
            }
        }
        if let Some(k) = &self.kind {
            RatioKind::from_str(k).map_err(|e| CliError::Input(e.to_string()))?;
        }
        if let Some(p) = &self.phi {
            PhiFamily::from_str(p).map_err(|e| CliError::Input(e.to_string()))?;
        }
        if let Some(e) = &self.ensemble {
            EnsembleSource::from_str(e)?;
        }
        match (&self.dynamics, exp) {
            (Some(Dynamics::Process(ProcessSpec::HypercubeJump { n, p, d })), _) => {
                if *n == 0 || *n > matphi::hypercube::MAX_SITES || !(*p > 0.0 && *p < 1.0) || *d == 0 {
                    return bad(format!(
                        "hypercube-jump needs 1 ≤ n ≤ 12, 0 < p < 1, d ≥ 1; got n={n} p={p} d={d}"
                    ));
                }
            }
            (Some(Dynamics::Channel(c)), _) => {
                let r = match c {
                    ChannelSpec::Depolarizing { r, .. } | ChannelSpec::PhaseDamping { r } => *r,
                };
                if !(r > 0.0 && r.is_finite()) || c.dim() == 0 {
                    return bad(format!("channel needs r > 0 and d ≥ 1, got {c:?}"));
                }
            }
            (None, _) => {}
        }
        let channel = matches!(self.dynamics, Some(Dynamics::Channel(_)));
        let depolarizing_qubit = matches!(
            self.dynamics,
            Some(Dynamics::Channel(ChannelSpec::Depolarizing { d: 2, .. }))
        );
        let ok = match exp {
            Experiment::Figure1 => depolarizing_qubit,
            Experiment::Constants => matches!(self.dynamics, Some(Dynamics::Channel(ChannelSpec::Depolarizing { .. }))),
            Experiment::Hypercube => matches!(self.dynamics, Some(Dynamics::Process(_))),
            Experiment::SobolevEstimate => channel,
            Experiment::Mixing | Experiment::DecayCurve => true,
        };
        if !ok {
            return bad(format!(
                "dynamics {:?} do not fit experiment {}",
                self.dynamics,
                exp.name()
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the config without its output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn grid_times(&self) -> Vec<f64> {
        self.grid.map(|g| g.times()).unwrap_or_default()
    }

    pub fn ratio_kind(&self) -> Result<RatioKind> {
        let k = self.kind.as_deref().unwrap_or("mlsi");
        RatioKind::from_str(k).map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn phi_family(&self) -> Result<PhiFamily> {
        let p = self.phi.as_deref().unwrap_or("entropy");
        PhiFamily::from_str(p).map_err(|e| CliError::Input(e.to_string()))
    }
}

/// Named builtin ensembles or a file.
#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleSource {
    /// `|0⟩⟨0|, |1⟩⟨1|` with uniform weights.
    Figure1,
    /// `π ± (ε/pᵢ)σ_Z` with weights `p₁, 1 − p₁`.
    AppendixB {
        eps: f64,
        p1: f64,
    },
    File(PathBuf),
}

impl FromStr for EnsembleSource {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "figure1" {
            return Ok(Self::Figure1);
        }
        if let Some(args) = s.strip_prefix("appendixB(").and_then(|r| r.strip_suffix(')')) {
            let parsed: Vec<f64> = args
                .split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| CliError::Input(format!("{s}: {e}")))?;
            return match parsed[..] {
                [eps, p1] => Ok(Self::AppendixB { eps, p1 }),
                _ => Err(CliError::Input(format!("{s}: expected appendixB(ε,p₁)"))),
            };
        }
        Ok(Self::File(PathBuf::from(s)))
    }
}

impl EnsembleSource {
    pub fn load(&self) -> Result<QuantumEnsemble> {
        match self {
            Self::Figure1 => Ok(figure1_ensemble()),
            Self::AppendixB { eps, p1 } => Ok(appendix_b_ensemble(*eps, *p1)?),
            Self::File(p) => load_ensemble(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        }
    }
}

pub fn figure1_ensemble() -> QuantumEnsemble {
    use matphi::ensemble::{MatrixFunction, Measure, StateSpace};
    use matphi::matcore::HermitianMatrix;
    let space = StateSpace::new(["rho1", "rho2"]).expect("two labels");
    let states = MatrixFunction::new(
        space.clone(),
        vec![
            HermitianMatrix::basis_projector(2, 0),
            HermitianMatrix::basis_projector(2, 1),
        ],
    )
    .expect("two qubit states");
    QuantumEnsemble::new(Measure::uniform(space), states).expect("uniform ensemble")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_hash() {
        let a = ExperimentConfig::new(Experiment::Figure1).resolve().unwrap();
        let b = ExperimentConfig::from_json(r#"{"experiment":"figure1","grid":{"t_max":3.0,"points":50}}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.out = Some("x.csv".into());
        assert_eq!(a.hash(), c.hash());
        c.seed = 1;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.grid_times().len(), 50);
        assert_eq!(*a.grid_times().last().unwrap(), 3.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_json(r#"{"experiment":"figure1","bogus":1}"#).is_err());
        let bad = [
            r#"{"experiment":"figure1","dynamics":{"channel":"phase-damping","r":1.0}}"#,
            r#"{"experiment":"constants","rates":[1.0,-2.0]}"#,
            r#"{"experiment":"hypercube","dynamics":{"process":"hypercube-jump","n":3,"p":1.5}}"#,
            r#"{"experiment":"sobolev-estimate","kind":"nope"}"#,
            r#"{"experiment":"mixing","epsilon":0.0}"#,
            r#"{"experiment":"decay-curve","grid":{"t_max":1.0,"points":1}}"#,
            r#"{"experiment":"decay-curve","ensemble":"appendixB(0.1)"}"#,
        ];
        for text in bad {
            let err = ExperimentConfig::from_json(text).and_then(|c| c.resolve()).unwrap_err();
            assert_eq!(err.exit_code(), 3, "{text}");
        }
        assert!(ExperimentConfig::default().resolve().is_err());
    }

    #[test]
    fn dynamics_forms() {
        let c = ExperimentConfig::from_json(
            r#"{"experiment":"hypercube","dynamics":{"process":"hypercube-jump","n":2,"p":0.3}}"#,
        )
        .unwrap();
        assert_eq!(
            c.dynamics,
            Some(Dynamics::Process(ProcessSpec::HypercubeJump { n: 2, p: 0.3, d: 2 }))
        );
        let c = ExperimentConfig::from_json(
            r#"{"experiment":"decay-curve","dynamics":{"channel":"phase-damping","r":2.0}}"#,
        )
        .unwrap();
        assert_eq!(
            c.dynamics,
            Some(Dynamics::Channel(ChannelSpec::PhaseDamping { r: 2.0 }))
        );
    }

    #[test]
    fn ensemble_sources() {
        assert_eq!(EnsembleSource::from_str("figure1").unwrap(), EnsembleSource::Figure1);
        assert_eq!(
            EnsembleSource::from_str("appendixB(0.1, 0.5)").unwrap(),
            EnsembleSource::AppendixB { eps: 0.1, p1: 0.5 }
        );
        assert!(matches!(
            EnsembleSource::from_str("e.json").unwrap(),
            EnsembleSource::File(_)
        ));
        assert_eq!(figure1_ensemble().states().len(), 2);
        assert!(EnsembleSource::AppendixB { eps: 0.4, p1: 0.5 }.load().is_err());
    }
}
