//! Scenario files: TOML with one table per concern. Times and strengths carry
//! their unit in the key name (`tmax_inv_coupling` is t_max in units of
//! 1/coupling, `lambda_per_coupling` is λ in units of the coupling).

use std::fs;
use std::path::{Path, PathBuf};

use purity_core::spin::{LmgParams, TimParams};
use purity_core::static_error::{MixedNoiseKind, MixedNoiseSpec};
use purity_core::{
    HermitianOperator, ObservableFamily, PerturbationKind, PerturbationModel, Representation,
    SpinSystem, StateEnsemble, TimeGrid,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub id: String,
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub observables: ObservablesConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    pub dynamics: Option<DynamicsConfig>,
    #[serde(rename = "static")]
    pub static_study: Option<StaticConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub gates: GateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lmg,
    Tim,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub particles: usize,
    /// "symmetric" or "full"; LMG defaults to symmetric, TIM is always full.
    pub representation: Option<String>,
    /// B/Λ for the LMG, h/J for the transverse Ising chain.
    pub field_per_coupling: f64,
    #[serde(default = "one")]
    pub coupling: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    pub families: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_states")]
    pub states: String,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_states() -> String {
    "haar".into()
}

fn default_count() -> usize {
    1
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            states: default_states(),
            count: default_count(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub perturbations: Vec<String>,
    pub lambda_per_coupling: f64,
    pub instances: usize,
    pub tmax_inv_coupling: f64,
    pub steps: usize,
    pub plateau_fraction: Option<f64>,
    /// Write every k-th time point of the series tables.
    #[serde(default = "default_stride")]
    pub output_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StaticNoise {
    Pure,
    Depolarizing,
    OrthogonalMixture,
}

impl StaticNoise {
    pub fn label(self) -> &'static str {
        match self {
            StaticNoise::Pure => "pure",
            StaticNoise::Depolarizing => "depolarizing",
            StaticNoise::OrthogonalMixture => "orthogonal-mixture",
        }
    }

    pub fn mixed(self, gamma: f64) -> purity_core::Result<Option<MixedNoiseSpec>> {
        match self {
            StaticNoise::Pure => Ok(None),
            StaticNoise::Depolarizing => MixedNoiseSpec::new(MixedNoiseKind::Depolarizing, gamma).map(Some),
            StaticNoise::OrthogonalMixture => {
                MixedNoiseSpec::new(MixedNoiseKind::OrthogonalMixture, gamma).map(Some)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticConfig {
    pub noise: StaticNoise,
    pub gammas: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Particles,
    FieldPerCoupling,
    LambdaPerCoupling,
    Gamma,
    Instances,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Particles => "particles",
            SweepParameter::FieldPerCoupling => "field_per_coupling",
            SweepParameter::LambdaPerCoupling => "lambda_per_coupling",
            SweepParameter::Gamma => "gamma",
            SweepParameter::Instances => "instances",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Static,
    Dynamics,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub study: Study,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    64
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    /// Every plateau within k ensemble standard errors of the Haar prediction.
    pub plateau_within_sigmas: Option<f64>,
    /// Plateaus strictly increase with purity (equal purities exempt).
    #[serde(default)]
    pub ordered_by_purity: bool,
    /// Plateau ordering identical across the perturbation kinds.
    #[serde(default)]
    pub same_order_across_perturbations: bool,
    /// Static Monte-Carlo within k standard errors of the closed form.
    pub static_within_sigmas: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
        }
    }
}

/// Reads and validates a scenario file. Parse errors carry the line and column
/// reported by the TOML parser; validation errors name the offending key.
pub fn load(path: &Path) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(path, format!("cannot read: {e}")))?;
    parse(&text).map_err(|m| CliError::config(path, m))
}

pub fn parse(text: &str) -> Result<ScenarioConfig, String> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    config.validate()?;
    Ok(config)
}

fn field_err(key: &str, msg: impl std::fmt::Display) -> String {
    format!("{key}: {msg}")
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(field_err("id", "use letters, digits, '-' and '_' only"));
        }
        let system = self.system().map_err(|e| field_err("model", e))?;
        self.hamiltonian_check()?;
        if self.observables.families.is_empty() {
            return Err(field_err("observables.families", "list at least one observable"));
        }
        for (i, d) in self.observables.families.iter().enumerate() {
            let fam: ObservableFamily = d
                .parse()
                .map_err(|e| field_err(&format!("observables.families[{i}]"), e))?;
            fam.build(&system)
                .map_err(|e| field_err(&format!("observables.families[{i}]"), e))?;
        }
        let ensemble = self.state_ensemble().map_err(|e| field_err("ensemble.states", e))?;
        if self.ensemble.count == 0 {
            return Err(field_err("ensemble.count", "must be at least 1"));
        }
        if !ensemble.is_random() && self.ensemble.count != 1 {
            return Err(field_err("ensemble.count", "a deterministic state takes count = 1"));
        }
        if let Some(d) = &self.dynamics {
            if d.perturbations.is_empty() {
                return Err(field_err("dynamics.perturbations", "list at least one kind"));
            }
            for (i, p) in d.perturbations.iter().enumerate() {
                let kind: PerturbationKind = p
                    .parse()
                    .map_err(|e| field_err(&format!("dynamics.perturbations[{i}]"), e))?;
                if kind == PerturbationKind::LocalFields && system.representation() != Representation::Full {
                    return Err(field_err(
                        &format!("dynamics.perturbations[{i}]"),
                        "local fields need the full space",
                    ));
                }
            }
            if !(d.lambda_per_coupling >= 0.0 && d.lambda_per_coupling.is_finite()) {
                return Err(field_err("dynamics.lambda_per_coupling", "must be finite and >= 0"));
            }
            if d.instances == 0 {
                return Err(field_err("dynamics.instances", "must be at least 1"));
            }
            if d.steps < 2 {
                return Err(field_err("dynamics.steps", "n_steps must be at least 2"));
            }
            self.time_grid().map_err(|e| field_err("dynamics.tmax_inv_coupling", e))?;
            if let Some(f) = d.plateau_fraction {
                if !(0.0..1.0).contains(&f) {
                    return Err(field_err("dynamics.plateau_fraction", "must lie in [0, 1)"));
                }
            }
            if d.output_stride == 0 {
                return Err(field_err("dynamics.output_stride", "must be at least 1"));
            }
        }
        if let Some(s) = &self.static_study {
            if s.gammas.is_empty() {
                return Err(field_err("static.gammas", "list at least one γ"));
            }
            for (i, &g) in s.gammas.iter().enumerate() {
                s.noise
                    .mixed(g)
                    .map_err(|e| field_err(&format!("static.gammas[{i}]"), e))?;
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(field_err(&format!("static.gammas[{i}]"), "must be finite and >= 0"));
                }
            }
            if s.samples < purity_core::static_error::MIN_SAMPLES {
                return Err(field_err(
                    "static.samples",
                    format!("need at least {}", purity_core::static_error::MIN_SAMPLES),
                ));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.len() > sw.budget {
                return Err(field_err(
                    "sweep.values",
                    format!("{} grid points exceed the budget of {}", sw.values.len(), sw.budget),
                ));
            }
            match sw.study {
                Study::Static if self.static_study.is_none() => {
                    return Err(field_err("sweep.study", "static sweep needs a [static] table"))
                }
                Study::Dynamics if self.dynamics.is_none() => {
                    return Err(field_err("sweep.study", "dynamics sweep needs a [dynamics] table"))
                }
                _ => {}
            }
            if sw.parameter == SweepParameter::Gamma && sw.study != Study::Static {
                return Err(field_err("sweep.parameter", "gamma applies to static sweeps"));
            }
            for (i, &v) in sw.values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(field_err(&format!("sweep.values[{i}]"), "must be finite"));
                }
                if matches!(sw.parameter, SweepParameter::Particles | SweepParameter::Instances)
                    && (v.fract() != 0.0 || v < 1.0)
                {
                    return Err(field_err(&format!("sweep.values[{i}]"), "must be a positive integer"));
                }
            }
        }
        if self.gates.same_order_across_perturbations
            && self.dynamics.as_ref().map_or(0, |d| d.perturbations.len()) < 2
        {
            return Err(field_err(
                "gates.same_order_across_perturbations",
                "needs at least two perturbation kinds",
            ));
        }
        Ok(())
    }

    fn hamiltonian_check(&self) -> Result<(), String> {
        let m = &self.model;
        if !(m.coupling > 0.0 && m.coupling.is_finite()) {
            return Err(field_err("model.coupling", "must be positive"));
        }
        if !m.field_per_coupling.is_finite() {
            return Err(field_err("model.field_per_coupling", "must be finite"));
        }
        if m.particles < 2 {
            return Err(field_err("model.particles", "need at least 2 particles"));
        }
        Ok(())
    }

    pub fn representation(&self) -> purity_core::Result<Representation> {
        match (&self.model.kind, &self.model.representation) {
            (ModelKind::Tim, None) => Ok(Representation::Full),
            (ModelKind::Tim, Some(r)) => {
                let r: Representation = r.parse()?;
                if r != Representation::Full {
                    return Err(purity_core::Error::InvalidParameter(
                        "the transverse Ising chain lives in the full space".into(),
                    ));
                }
                Ok(r)
            }
            (ModelKind::Lmg, None) => Ok(Representation::Symmetric),
            (ModelKind::Lmg, Some(r)) => r.parse(),
        }
    }

    pub fn system(&self) -> purity_core::Result<SpinSystem> {
        SpinSystem::new(self.model.particles, self.representation()?)
    }

    pub fn hamiltonian(&self) -> purity_core::Result<HermitianOperator> {
        let m = &self.model;
        match m.kind {
            ModelKind::Lmg => purity_core::spin::lmg_hamiltonian(
                &LmgParams {
                    field: m.field_per_coupling * m.coupling,
                    coupling: m.coupling,
                    particles: m.particles,
                },
                self.representation()?,
            ),
            ModelKind::Tim => purity_core::spin::tim_hamiltonian(&TimParams {
                field: m.field_per_coupling * m.coupling,
                coupling: m.coupling,
                particles: m.particles,
            }),
        }
    }

    pub fn families(&self) -> Vec<ObservableFamily> {
        self.observables
            .families
            .iter()
            .map(|d| d.parse().expect("validated"))
            .collect()
    }

    pub fn state_ensemble(&self) -> purity_core::Result<StateEnsemble> {
        self.ensemble.states.parse()
    }

    pub fn perturbations(&self) -> Vec<PerturbationModel> {
        let Some(d) = &self.dynamics else {
            return Vec::new();
        };
        d.perturbations
            .iter()
            .map(|p| {
                PerturbationModel::new(p.parse().expect("validated"), d.lambda_per_coupling * self.model.coupling)
                    .expect("validated")
            })
            .collect()
    }

    pub fn time_grid(&self) -> purity_core::Result<TimeGrid> {
        let d = self
            .dynamics
            .as_ref()
            .ok_or_else(|| purity_core::Error::InvalidParameter("no [dynamics] table".into()))?;
        TimeGrid::new(d.tmax_inv_coupling / self.model.coupling, d.steps)
    }

    /// Copy with one sweep parameter replaced.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self, String> {
        let mut c = self.clone();
        c.sweep = None;
        match parameter {
            SweepParameter::Particles => c.model.particles = value as usize,
            SweepParameter::FieldPerCoupling => c.model.field_per_coupling = value,
            SweepParameter::LambdaPerCoupling => {
                c.dynamics
                    .as_mut()
                    .ok_or("lambda sweep needs a [dynamics] table")?
                    .lambda_per_coupling = value
            }
            SweepParameter::Instances => {
                c.dynamics
                    .as_mut()
                    .ok_or("instance sweep needs a [dynamics] table")?
                    .instances = value as usize
            }
            SweepParameter::Gamma => {
                c.static_study.as_mut().ok_or("gamma sweep needs a [static] table")?.gammas = vec![value]
            }
        }
        c.validate()?;
        Ok(c)
    }
}
