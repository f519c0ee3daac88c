//! Experiment configuration: one TOML document with `lattice`, `decay`,
//! `model`, `thermo`, `solver`, `run` and optional `sweep` blocks.
//!
//! Overrides given as `--set key.path=value` are applied to the parsed
//! document before it is checked, so they obey the same rules as the file.

use std::fmt;
use std::path::{Path, PathBuf};

use mflab_core::game::GridSpec;
use mflab_core::{
    models, DecayFunction, FockContext, Interaction, LongRangeModel, LongRangeTerm, SolverOptions, TermSpec,
};
use serde::{Deserialize, Serialize};

use crate::commands::Command;

/// Invalid configuration, located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub code: &'static str,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, code: &'static str, message: impl Into<String>) -> Self {
        Self { path: path.into(), code, message: message.into() }
    }

    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(path, "config_invalid", message)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub thermo: ThermoConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default = "one")]
    pub d: usize,
    /// Window half-width, or a list of them.
    #[serde(rename = "L")]
    pub half_width: OneOrMany<usize>,
    pub spins: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_cap: Option<usize>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub varsigma: f64,
    pub epsilon: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        let f = DecayFunction::default();
        Self { varsigma: f.varsigma, epsilon: f.epsilon }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Short-range part `Φ`.
    pub base: Vec<TermSpec>,
    /// Mean-field terms `(Ψ_k, γ_k)`.
    pub terms: Vec<TermConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub weight: Weight,
    pub psi: Vec<TermSpec>,
}

/// A weight written as a decimal string (preferred) or a TOML float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Number(f64),
    Decimal(String),
}

impl Weight {
    pub fn value(&self) -> Result<f64, String> {
        let x = match self {
            Weight::Number(x) => *x,
            Weight::Decimal(s) => s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a decimal number"))?,
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err("weight must be finite".into())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoConfig {
    pub beta: OneOrMany<f64>,
}

impl Default for ThermoConfig {
    fn default() -> Self {
        Self { beta: OneOrMany::One(1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub damping: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub tol: f64,
    pub cluster_tol: f64,
    pub grid_points: usize,
    pub perturbations: usize,
    pub perturbation_size: f64,
    pub grid: GridConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            damping: o.damping,
            max_iter: o.max_iter,
            restarts: o.restarts,
            tol: o.tol,
            cluster_tol: o.cluster_tol,
            grid_points: o.grid_points,
            perturbations: o.perturbations,
            perturbation_size: o.perturbation_size,
            grid: GridConfig::default(),
        }
    }
}

/// Brute-force oracle grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub radius: f64,
    pub step: f64,
    pub phases: usize,
    pub max_cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self { radius: g.radius, step: g.step, phases: g.phases, max_cells: g.max_cells }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Command to run when none is given on the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Master seed; every random draw derives from it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Random operator pairs in KMS and modular panels.
    pub pairs: usize,
    /// Random states in the variational check of `pressure`; 0 disables it.
    pub samples: usize,
    /// Evaluation times for modular, stationarity and limit-trend runs.
    pub times: Vec<f64>,
    pub initial: InitialState,
    /// Observable as an interaction; its per-site element is measured.
    /// Defaults to the density of the first spin.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub observable: Vec<TermSpec>,
    /// Space-average radii for `ergodicity`; defaults to `0..=L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<Vec<usize>>,
    pub flow: FlowConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: None,
            out: None,
            pairs: 20,
            samples: 0,
            times: vec![0.1, 1.0],
            initial: InitialState::Gap,
            observable: Vec::new(),
            ell: None,
            flow: FlowConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Initial state of dynamics and ergodicity runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// Gibbs state of the approximating Hamiltonian at the conservative minimizer.
    Gap,
    /// Gibbs state of the short-range part at the run's `β`.
    Gibbs,
    /// Product of `(1-mix)|φ⟩⟨φ| + mix/4` with `φ = cos θ|0⟩ + sin θ|↑↓⟩`; needs two spins.
    Product { theta: f64, mix: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_interval: f64,
    pub step_tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, record_interval: 0.1, step_tol: 1e-12 }
    }
}

/// Bounds asserted by the runners. Every entry ends up in the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub variational: f64,
    pub kms_boundary: f64,
    pub kms_smeared: f64,
    pub bogoliubov: f64,
    pub modular: f64,
    pub oracle_value: f64,
    pub energy_drift: f64,
    pub trace_drift: f64,
    pub purity_drift: f64,
    pub stationarity: f64,
    pub twist: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            variational: 1e-10,
            kms_boundary: 1e-10,
            kms_smeared: 1e-9,
            bogoliubov: 1e-9,
            modular: 1e-8,
            oracle_value: 1e-3,
            energy_drift: 1e-8,
            trace_drift: 1e-10,
            purity_drift: 1e-8,
            stationarity: 1e-6,
            twist: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn table(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("variational", self.variational),
            ("kms_boundary", self.kms_boundary),
            ("kms_smeared", self.kms_smeared),
            ("bogoliubov", self.bogoliubov),
            ("modular", self.modular),
            ("oracle_value", self.oracle_value),
            ("energy_drift", self.energy_drift),
            ("trace_drift", self.trace_drift),
            ("purity_drift", self.purity_drift),
            ("stationarity", self.stationarity),
            ("twist", self.twist),
        ]
    }
}

/// Parameter grid of the `sweep` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Inverse temperatures; defaults to `thermo.beta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    /// Factors applied to every mean-field weight.
    pub coupling: Vec<f64>,
    pub max_cells: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { beta: None, coupling: vec![1.0], max_cells: 256 }
    }
}

/// Reads a config file, applies `key=value` overrides and the seed flag, and
/// checks the result.
/// Reads, overrides and validates a config. A command or seed given on the
/// command line replaces the one in the file.
pub fn load(
    path: &Path,
    overrides: &[String],
    command: Option<Command>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", "config_unreadable", format!("cannot read {}: {e}", path.display())))?;
    let mut doc: toml::Table =
        text.parse().map_err(|e: toml::de::Error| ConfigError::new("", "config_syntax", e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(doc))
        .map_err(|e| ConfigError::invalid(e.path().to_string(), e.inner().message().trim()))?;
    if seed.is_some() {
        cfg.run.seed = seed;
    }
    if command.is_some() {
        cfg.run.command = command;
    }
    if cfg.run.command.is_none() {
        return Err(ConfigError::new(
            "run.command",
            "command_missing",
            "no command on the command line or in the config",
        ));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Sets `a.b.c = value`, creating intermediate tables. The value is read as
/// TOML when possible and as a bare string otherwise.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::new("", "bad_override", format!("`{assignment}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new(key, "bad_override", "empty key segment"));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut table = doc;
    for (i, p) in parents.iter().enumerate() {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::new(path[..=i].join("."), "bad_override", "not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(path, format!("must be positive and finite, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let l = &self.lattice;
        if l.d == 0 {
            return Err(ConfigError::invalid("lattice.d", "must be at least 1"));
        }
        if l.half_width.to_vec().is_empty() {
            return Err(ConfigError::invalid("lattice.L", "needs at least one window"));
        }
        if l.spins.is_empty() {
            return Err(ConfigError::invalid("lattice.spins", "needs at least one spin label"));
        }
        for (i, s) in l.spins.iter().enumerate() {
            if l.spins[..i].contains(s) {
                return Err(ConfigError::invalid(format!("lattice.spins[{i}]"), format!("duplicate label `{s}`")));
            }
        }
        DecayFunction::new(self.decay.varsigma, self.decay.epsilon)
            .map_err(|e| ConfigError::new("decay", e.code(), e.to_string()))?;
        let betas = self.thermo.beta.to_vec();
        if betas.is_empty() {
            return Err(ConfigError::invalid("thermo.beta", "needs at least one value"));
        }
        for (i, b) in betas.iter().enumerate() {
            positive(&format!("thermo.beta[{i}]"), *b)?;
        }
        for (i, t) in self.model.terms.iter().enumerate() {
            t.weight.value().map_err(|m| ConfigError::invalid(format!("model.terms[{i}].weight"), m))?;
        }
        let s = &self.solver;
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return Err(ConfigError::invalid("solver.damping", "must lie in (0, 1]"));
        }
        positive("solver.tol", s.tol)?;
        positive("solver.cluster_tol", s.cluster_tol)?;
        positive("solver.perturbation_size", s.perturbation_size)?;
        positive("solver.grid.radius", s.grid.radius)?;
        positive("solver.grid.step", s.grid.step)?;
        for (path, n) in
            [("solver.max_iter", s.max_iter), ("solver.restarts", s.restarts), ("solver.grid.phases", s.grid.phases)]
        {
            if n == 0 {
                return Err(ConfigError::invalid(path, "must be at least 1"));
            }
        }
        let r = &self.run;
        positive("run.flow.dt", r.flow.dt)?;
        positive("run.flow.record_interval", r.flow.record_interval)?;
        positive("run.flow.step_tol", r.flow.step_tol)?;
        if !(r.flow.t_end >= 0.0 && r.flow.t_end.is_finite()) {
            return Err(ConfigError::invalid("run.flow.t_end", "must be nonnegative and finite"));
        }
        for (i, t) in r.times.iter().enumerate() {
            if !t.is_finite() {
                return Err(ConfigError::invalid(format!("run.times[{i}]"), "must be finite"));
            }
        }
        for (name, tol) in r.tolerances.table() {
            positive(&format!("run.tolerances.{name}"), tol)?;
        }
        if let InitialState::Product { mix, .. } = r.initial {
            if l.spins.len() != 2 {
                return Err(ConfigError::invalid("run.initial", "product states need exactly two spins"));
            }
            if !(0.0..=1.0).contains(&mix) {
                return Err(ConfigError::invalid("run.initial.mix", "must lie in [0, 1]"));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.coupling.is_empty() {
                return Err(ConfigError::invalid("sweep.coupling", "needs at least one value"));
            }
            for (i, b) in sw.beta.iter().flatten().enumerate() {
                positive(&format!("sweep.beta[{i}]"), *b)?;
            }
        }
        Ok(())
    }
}

/// A checked configuration with its core objects built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub decay: DecayFunction,
    pub model: LongRangeModel,
    pub contexts: Vec<FockContext>,
    pub betas: Vec<f64>,
    pub observable: Interaction,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, ConfigError> {
        let decay = DecayFunction::new(config.decay.varsigma, config.decay.epsilon)
            .map_err(|e| ConfigError::new("decay", e.code(), e.to_string()))?;
        let model = build_model(&config, decay, 1.0)?;
        let l = &config.lattice;
        let spins: Vec<&str> = l.spins.iter().map(String::as_str).collect();
        let contexts = l
            .half_width
            .to_vec()
            .into_iter()
            .map(|w| match l.mode_cap {
                Some(cap) => FockContext::with_cap(l.d, w, &spins, cap),
                None => FockContext::new(l.d, w, &spins),
            })
            .collect::<mflab_core::Result<Vec<_>>>()
            .map_err(|e| ConfigError::new("lattice", e.code(), e.to_string()))?;
        let observable = if config.run.observable.is_empty() {
            models::density(l.d, &l.spins[0])
        } else {
            Interaction::from_specs(l.d, &config.run.observable)
                .map_err(|e| ConfigError::new("run.observable", e.code(), e.to_string()))?
        };
        let betas = config.thermo.beta.to_vec();
        Ok(Self { config, decay, model, contexts, betas, observable })
    }

    /// The model with every mean-field weight multiplied by `coupling`.
    pub fn scaled_model(&self, coupling: f64) -> Result<LongRangeModel, ConfigError> {
        build_model(&self.config, self.decay, coupling)
    }

    pub fn solver(&self, seed: u64) -> SolverOptions {
        let s = &self.config.solver;
        SolverOptions {
            damping: s.damping,
            max_iter: s.max_iter,
            restarts: s.restarts,
            tol: s.tol,
            cluster_tol: s.cluster_tol,
            grid_points: s.grid_points,
            perturbations: s.perturbations,
            perturbation_size: s.perturbation_size,
            seed,
        }
    }

    pub fn grid(&self) -> GridSpec {
        let g = self.config.solver.grid;
        GridSpec { radius: g.radius, step: g.step, phases: g.phases, max_cells: g.max_cells }
    }

    /// The master seed, required by commands that draw random numbers.
    pub fn seed(&self) -> Result<u64, ConfigError> {
        self.config.run.seed.ok_or_else(|| ConfigError::new("run.seed", "seed_missing", "this command needs a seed"))
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.config.run.tolerances
    }
}

fn build_model(config: &ExperimentConfig, decay: DecayFunction, coupling: f64) -> Result<LongRangeModel, ConfigError> {
    let d = config.lattice.d;
    let base = Interaction::from_specs(d, &config.model.base)
        .map_err(|e| ConfigError::new("model.base", e.code(), e.to_string()))?;
    let mut terms = Vec::with_capacity(config.model.terms.len());
    for (i, t) in config.model.terms.iter().enumerate() {
        let path = format!("model.terms[{i}]");
        let mut psi = Interaction::from_specs(d, &t.psi)
            .map_err(|e| ConfigError::new(format!("{path}.psi"), e.code(), e.to_string()))?;
        if let Some(label) = &t.label {
            psi = psi.with_label(label);
        }
        let gamma = t.weight.value().map_err(|m| ConfigError::invalid(format!("{path}.weight"), m))? * coupling;
        terms.push(LongRangeTerm { psi, gamma });
    }
    LongRangeModel::new(base, terms, decay).map_err(|e| ConfigError::new("model.terms", e.code(), e.to_string()))
}
