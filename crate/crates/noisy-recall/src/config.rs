//! Experiment configuration.
//!
//! Configs are TOML files with dotted keys such as `generator.n = 400` or
//! `noise.nu_grid = [0.0, 0.25]`. Every key is optional; missing keys take
//! defaults that depend on the experiment kind. The resolved configuration
//! (every key filled in) is what the run manifest records.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use noisy_recall_core::GeneratorSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SerSweep,
    IterationSweep,
    PciGrid,
    DeCompare,
    NoExternalNoise,
    StoppingSetDemo,
    LargerAlphabet,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::SerSweep,
        ExperimentKind::IterationSweep,
        ExperimentKind::PciGrid,
        ExperimentKind::DeCompare,
        ExperimentKind::NoExternalNoise,
        ExperimentKind::StoppingSetDemo,
        ExperimentKind::LargerAlphabet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SerSweep => "ser_sweep",
            ExperimentKind::IterationSweep => "iteration_sweep",
            ExperimentKind::PciGrid => "pci_grid",
            ExperimentKind::DeCompare => "de_compare",
            ExperimentKind::NoExternalNoise => "no_external_noise",
            ExperimentKind::StoppingSetDemo => "stopping_set_demo",
            ExperimentKind::LargerAlphabet => "larger_alphabet",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
            format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

// ---- file layer: everything optional ----

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub experiment: ExperimentFile,
    #[serde(default)]
    pub generator: GeneratorFile,
    #[serde(default)]
    pub thresholds: ThresholdsFile,
    #[serde(default)]
    pub recall: RecallFile,
    #[serde(default)]
    pub noise: NoiseFile,
    #[serde(default)]
    pub pci: PciFile,
    #[serde(default)]
    pub stopping: StoppingFile,
    #[serde(default)]
    pub de: DeFile,
    pub manifest: Option<ManifestInfo>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub n: Option<usize>,
    pub l: Option<usize>,
    pub mean_cluster_size: Option<f64>,
    pub mean_constraints: Option<f64>,
    pub r: Option<f64>,
    pub q: Option<u32>,
    pub dual_density: Option<f64>,
    pub min_core_degree: Option<usize>,
    pub min_weight: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsFile {
    pub psi: Option<f64>,
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecallFile {
    pub t_max_inner: Option<usize>,
    pub t_max_outer: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    pub epsilon_grid: Option<Vec<f64>>,
    pub upsilon_grid: Option<Vec<f64>>,
    pub nu_grid: Option<Vec<f64>>,
    pub s: Option<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PciFile {
    pub max_errors: Option<usize>,
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingFile {
    pub sets: Option<usize>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeFile {
    pub tol: Option<f64>,
    pub grid: Option<usize>,
}

/// Provenance written into run manifests. When present in a config, the
/// regenerated model must match the recorded hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub version: String,
    pub model_sha256: String,
}

// ---- resolved layer ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub generator: GeneratorSection,
    pub thresholds: ThresholdsSection,
    pub recall: RecallSection,
    pub noise: NoiseSection,
    pub pci: PciSection,
    pub stopping: StoppingSection,
    pub de: DeSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    /// Trials per sweep grid point.
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSection {
    pub n: usize,
    pub l: usize,
    pub mean_cluster_size: f64,
    pub mean_constraints: f64,
    pub r: f64,
    pub q: u32,
    pub dual_density: f64,
    pub min_core_degree: usize,
    pub min_weight: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsSection {
    pub psi: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallSection {
    pub t_max_inner: usize,
    pub t_max_outer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSection {
    pub epsilon_grid: Vec<f64>,
    pub upsilon_grid: Vec<f64>,
    pub nu_grid: Vec<f64>,
    pub s: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PciSection {
    pub max_errors: usize,
    /// Attempts per cluster for every table entry.
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingSection {
    pub sets: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeSection {
    pub tol: f64,
    pub grid: usize,
}

fn steps(start: f64, step: f64, count: usize) -> Vec<f64> {
    // rounded so that grid values print as short decimals
    (0..count).map(|i| ((start + step * i as f64) * 1e9).round() / 1e9).collect()
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl ExperimentConfig {
    /// Defaults of every key for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        Self::resolve(ConfigFile::default(), Some(kind)).expect("defaults are valid")
    }

    /// Fills missing keys with the defaults of the selected kind. `kind`
    /// overrides the kind named in the file.
    pub fn resolve(file: ConfigFile, kind: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        use ExperimentKind::*;
        let kind = kind.or(file.experiment.kind).unwrap_or(SerSweep);
        let g = GeneratorSpec::default();
        let f = file.generator;
        let ser_eps = steps(0.025, 0.025, 10);
        let (eps, ups, nus): (Vec<f64>, Vec<f64>, Vec<f64>) = match kind {
            SerSweep | LargerAlphabet | DeCompare => (ser_eps, vec![0.0], vec![0.0, 0.25]),
            IterationSweep => (vec![0.125], steps(0.0, 0.1, 6), steps(0.0, 0.1, 6)),
            PciGrid => (vec![0.0], steps(0.0, 0.1, 10), vec![0.0]),
            NoExternalNoise => (vec![0.0], steps(0.1, 0.1, 4), steps(0.0, 0.2, 4)),
            StoppingSetDemo => (vec![0.0], vec![0.0, 0.6], vec![0.0]),
        };
        let phi = match kind {
            PciGrid | StoppingSetDemo => 0.99,
            NoExternalNoise => 0.05,
            SerSweep | IterationSweep | DeCompare | LargerAlphabet => 0.8,
        };
        let config = ExperimentConfig {
            experiment: ExperimentSection {
                kind,
                seed: file.experiment.seed.unwrap_or(1),
                workers: file.experiment.workers.unwrap_or_else(default_workers),
                out: file.experiment.out.unwrap_or_else(|| PathBuf::from("results").join(kind.name())),
                trials: file.experiment.trials.unwrap_or(2000),
            },
            generator: GeneratorSection {
                n: f.n.unwrap_or(g.n),
                l: f.l.unwrap_or(g.l),
                mean_cluster_size: f.mean_cluster_size.unwrap_or(g.mean_cluster_size),
                mean_constraints: f.mean_constraints.unwrap_or(g.mean_constraints),
                r: f.r.unwrap_or(g.r),
                q: f.q.unwrap_or(g.q),
                dual_density: f.dual_density.unwrap_or(g.dual_density),
                min_core_degree: f.min_core_degree.unwrap_or(g.min_core_degree),
                min_weight: f.min_weight.unwrap_or(g.min_weight),
                seed: f.seed.unwrap_or(g.seed),
            },
            thresholds: ThresholdsSection {
                psi: file.thresholds.psi.unwrap_or(0.45),
                phi: file.thresholds.phi.unwrap_or(phi),
            },
            recall: RecallSection {
                t_max_inner: file.recall.t_max_inner.unwrap_or(10),
                t_max_outer: file.recall.t_max_outer.unwrap_or(40),
            },
            noise: NoiseSection {
                epsilon_grid: file.noise.epsilon_grid.unwrap_or(eps),
                upsilon_grid: file.noise.upsilon_grid.unwrap_or(ups),
                nu_grid: file.noise.nu_grid.unwrap_or(nus),
                s: file.noise.s.unwrap_or(if kind == LargerAlphabet { 3 } else { 1 }),
            },
            pci: PciSection {
                max_errors: file.pci.max_errors.unwrap_or(4),
                trials: file.pci.trials.unwrap_or(if kind == DeCompare { 200 } else { 300 }),
            },
            stopping: StoppingSection {
                sets: file.stopping.sets.unwrap_or(20),
                restarts: file.stopping.restarts.unwrap_or(50),
            },
            de: DeSection { tol: file.de.tol.unwrap_or(1e-6), grid: file.de.grid.unwrap_or(10_000) },
            manifest: file.manifest,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_str(text: &str, kind: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        Self::resolve(toml::from_str(text)?, kind)
    }

    pub fn load(path: &Path, kind: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, kind)
    }

    pub fn generator_spec(&self) -> GeneratorSpec {
        let g = &self.generator;
        GeneratorSpec {
            n: g.n,
            l: g.l,
            mean_cluster_size: g.mean_cluster_size,
            mean_constraints: g.mean_constraints,
            r: g.r,
            q: g.q,
            s: self.noise.s,
            dual_density: g.dual_density,
            min_core_degree: g.min_core_degree,
            min_weight: g.min_weight,
            seed: g.seed,
            ..GeneratorSpec::default()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        let n = &self.noise;
        if n.epsilon_grid.is_empty() || n.upsilon_grid.is_empty() || n.nu_grid.is_empty() {
            return bad("noise grids must be non-empty");
        }
        if n.epsilon_grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return bad("epsilon values must lie in [0, 1]");
        }
        if n.upsilon_grid.iter().chain(&n.nu_grid).any(|v| !(0.0..1.0).contains(v)) {
            return bad("upsilon and nu values must lie in [0, 1)");
        }
        if n.s == 0 {
            return bad("noise.s must be at least 1");
        }
        if self.experiment.trials == 0 || self.pci.trials == 0 {
            return bad("trial counts must be at least 1");
        }
        if self.experiment.workers == 0 {
            return bad("experiment.workers must be at least 1");
        }
        let t = &self.thresholds;
        if !(t.psi > 0.0 && t.phi > 0.0 && t.psi.is_finite() && t.phi.is_finite()) {
            return bad("thresholds must be positive");
        }
        if self.recall.t_max_inner == 0 || self.recall.t_max_outer == 0 {
            return bad("iteration limits must be at least 1");
        }
        if self.pci.max_errors == 0 {
            return bad("pci.max_errors must be at least 1");
        }
        if self.stopping.sets == 0 || self.stopping.restarts == 0 {
            return bad("stopping.sets and stopping.restarts must be at least 1");
        }
        if !(self.de.tol > 0.0 && self.de.tol < 1.0) || self.de.grid < 2 {
            return bad("de.tol must lie in (0, 1) and de.grid must be at least 2");
        }
        self.generator_spec().validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
