//! Experiment configuration.
//!
//! Configs are TOML files with flat dotted keys (`solver.feas_tol = 1e-8`).
//! Command-line flags override file values after loading.

use std::path::{Path, PathBuf};

use bregman_cs::{FunctionalKind, InitialPoint, SolverConfig, Transform};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const PRESETS: [(&str, &str); 4] = [
    ("cusp-2s", include_str!("../presets/cusp-2s.toml")),
    ("cusp-10s", include_str!("../presets/cusp-10s.toml")),
    ("rand-6s", include_str!("../presets/rand-6s.toml")),
    ("rand-10s", include_str!("../presets/rand-10s.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SignalConfig {
    /// `sqrt(|t - 0.37|)` scaled by `amplitude`, thresholded to `sparsity`
    /// DCT coefficients. Measured through a DCT sensing matrix.
    Cusp {
        n: usize,
        sparsity: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Spikes with magnitudes uniform in `[amplitude_min, amplitude_max)`
    /// and random signs. Measured directly (identity transform).
    RandomSparse { n: usize, sparsity: usize, amplitude_min: f64, amplitude_max: f64 },
}

fn one() -> f64 {
    1.0
}

impl SignalConfig {
    pub fn n(&self) -> usize {
        match self {
            SignalConfig::Cusp { n, .. } | SignalConfig::RandomSparse { n, .. } => *n,
        }
    }

    pub fn sparsity(&self) -> usize {
        match self {
            SignalConfig::Cusp { sparsity, .. } | SignalConfig::RandomSparse { sparsity, .. } => *sparsity,
        }
    }

    pub fn transform(&self) -> Transform {
        match self {
            SignalConfig::Cusp { .. } => Transform::Dct,
            SignalConfig::RandomSparse { .. } => Transform::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Baselines {
    pub pseudo_inverse: bool,
    pub l0_oracle: bool,
    pub l0_k_max: usize,
}

impl Default for Baselines {
    fn default() -> Self {
        Baselines { pseudo_inverse: true, l0_oracle: false, l0_k_max: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { start, count } => (*start..start + count).collect(),
        }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::List(vec![0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_sweeps: usize,
    pub feas_tol: f64,
    pub delta_tol: f64,
    pub newton_tol: f64,
    pub newton_cap: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::new(FunctionalKind::ShiftedEntropy);
        SolverSection {
            max_sweeps: d.max_sweeps,
            feas_tol: d.feas_tol,
            delta_tol: d.delta_tol,
            newton_tol: d.newton_tol,
            newton_cap: d.newton_cap,
        }
    }
}

impl SolverSection {
    pub fn for_kind(&self, kind: FunctionalKind) -> SolverConfig {
        SolverConfig {
            max_sweeps: self.max_sweeps,
            feas_tol: self.feas_tol,
            delta_tol: self.delta_tol,
            newton_tol: self.newton_tol,
            newton_cap: self.newton_cap,
            ..SolverConfig::new(kind)
        }
    }

    pub fn with_initial(&self, kind: FunctionalKind, initial: InitialPoint) -> SolverConfig {
        SolverConfig { initial_point: initial, ..self.for_kind(kind) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub signal: SignalConfig,
    /// `M = round(measurement_factor * sparsity)`.
    pub measurement_factor: f64,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<String>,
    #[serde(default)]
    pub baselines: Baselines,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub solver: SolverSection,
    /// Recovered support threshold, relative to the largest coefficient.
    #[serde(default = "default_support_eps")]
    pub support_eps: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_name() -> String {
    "custom".into()
}

fn default_kinds() -> Vec<String> {
    vec![FunctionalKind::ShiftedEntropy.name().into()]
}

fn default_support_eps() -> f64 {
    1e-3
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Seed of the measurement-matrix stream for experiment seed `seed`.
/// The signal stream uses `seed` itself.
pub fn ensemble_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            return Self::from_manifest(&text);
        }
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Reads the config echoed in an experiment manifest.
    pub fn from_manifest(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let config = value
            .get("config")
            .ok_or_else(|| CliError::Config("manifest has no `config` field".into()))?;
        let config: ExperimentConfig =
            serde_json::from_value(config.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| {
                let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!("unknown preset '{name}' (known: {})", known.join(", ")))
            })?;
        Self::parse(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn measurements(&self) -> usize {
        (self.measurement_factor * self.signal.sparsity() as f64).round() as usize
    }

    pub fn kinds(&self) -> Result<Vec<FunctionalKind>, CliError> {
        self.kinds
            .iter()
            .map(|k| k.parse().map_err(|e: bregman_cs::Error| CliError::Config(format!("kinds: {e}"))))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        let n = self.signal.n();
        let sparsity = self.signal.sparsity();
        if n == 0 {
            return bad("signal.n", "must be at least 1".into());
        }
        if sparsity == 0 || sparsity > n {
            return bad("signal.sparsity", format!("must be in 1..={n}, got {sparsity}"));
        }
        match &self.signal {
            SignalConfig::Cusp { amplitude, .. } if !(*amplitude > 0.0 && amplitude.is_finite()) => {
                return bad("signal.amplitude", format!("must be positive, got {amplitude}"));
            }
            SignalConfig::RandomSparse { amplitude_min, amplitude_max, .. }
                if !(*amplitude_min > 0.0 && amplitude_min <= amplitude_max && amplitude_max.is_finite()) =>
            {
                return bad("signal.amplitude_min", format!("need 0 < min <= max, got ({amplitude_min}, {amplitude_max})"));
            }
            _ => {}
        }
        if !(self.measurement_factor * sparsity as f64 >= 1.0) {
            return bad("measurement_factor", "measurement_factor * sparsity must be at least 1".into());
        }
        let m = self.measurements();
        if m > n {
            return bad("measurement_factor", format!("gives M = {m} > N = {n}"));
        }
        self.kinds()?;
        if self.seeds.to_vec().is_empty() {
            return bad("seeds", "at least one seed is required".into());
        }
        if self.baselines.l0_oracle && (n > bregman_cs::baselines::L0_MAX_N || self.baselines.l0_k_max > bregman_cs::baselines::L0_MAX_K) {
            return bad(
                "baselines.l0_oracle",
                format!("exhaustive search needs n <= {} and l0_k_max <= {}", bregman_cs::baselines::L0_MAX_N, bregman_cs::baselines::L0_MAX_K),
            );
        }
        if !(self.support_eps > 0.0) {
            return bad("support_eps", "must be positive".into());
        }
        self.solver
            .for_kind(FunctionalKind::ShiftedEntropy)
            .validate()
            .map_err(|e| CliError::Config(format!("solver: {e}")))
    }
}
