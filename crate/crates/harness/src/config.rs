//! Experiment configuration.
//!
//! A config is one JSON object. Relative paths are resolved against the
//! directory holding the config file.
//!
//! ```json
//! {
//!   "model": "../fixtures/tiny.nnwc",
//!   "experiment": "dot-whiteness",
//!   "layer": "fc1",
//!   "manifests": ["illusions.json", "controls.json"],
//!   "output_dir": "out/whiteness"
//! }
//! ```

use std::path::{Path, PathBuf};

use gridprobe_core::deviation::{TTestKind, DEFAULT_NEURON_THRESHOLD};
use gridprobe_core::stimuli::{DotOrder, GridSpec, SWEEP_LEVELS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DotWhiteness,
    DotCount,
    LayerPropagation,
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DotOrderChoice {
    #[default]
    Raster,
    /// Shuffled with the config seed.
    Shuffled,
}

fn default_levels() -> usize {
    SWEEP_LEVELS
}

fn default_delta() -> f64 {
    1.0 / (SWEEP_LEVELS - 1) as f64
}

fn default_threshold() -> f64 {
    DEFAULT_NEURON_THRESHOLD
}

fn default_budget() -> usize {
    512
}

fn default_band() -> [f64; 2] {
    [0.05, 0.20]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: PathBuf,
    pub experiment: ExperimentKind,
    /// Analysis layer; defaults to `fc8` when present, else the last layer.
    #[serde(default)]
    pub layer: Option<String>,
    /// Layers for propagation and PCA; defaults to every layer.
    #[serde(default)]
    pub layers: Option<Vec<String>>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_delta")]
    pub delta_gamma: f64,
    #[serde(default)]
    pub manifests: Vec<PathBuf>,
    /// Grid spec file for dot-count, propagation and PCA; the default grid if absent.
    #[serde(default)]
    pub grid: Option<PathBuf>,
    /// Control grid for propagation and PCA; the no-lines variant of `grid` if absent.
    #[serde(default)]
    pub control_grid: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub neuron_threshold: f64,
    #[serde(default = "default_true")]
    pub neuron_fractions: bool,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: usize,
    #[serde(default)]
    pub dot_order: DotOrderChoice,
    #[serde(default)]
    pub ttest: TTestKind,
    /// Fraction of pixels the white mask of a photo must cover.
    #[serde(default = "default_band")]
    pub mask_band: [f64; 2],
}

/// A parsed config with paths resolved and its provenance hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    pub sha256: String,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn require_file(what: &str, p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("{what} {} does not exist", p.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<LoadedConfig> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(HarnessError::io(path))?;
        let mut config: ExperimentConfig = serde_json::from_slice(&bytes).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(LoadedConfig {
            config,
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.model = resolve(base, &self.model);
        self.output_dir = resolve(base, &self.output_dir);
        for m in &mut self.manifests {
            *m = resolve(base, m);
        }
        if let Some(g) = &mut self.grid {
            *g = resolve(base, g);
        }
        if let Some(g) = &mut self.control_grid {
            *g = resolve(base, g);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(HarnessError::Config(format!("levels must be at least 2, got {}", self.levels)));
        }
        let span = self.delta_gamma * (self.levels - 1) as f64;
        if (span - 1.0).abs() > 1e-12 {
            return Err(HarnessError::Config(format!(
                "delta_gamma * (levels - 1) = {span}, expected 1"
            )));
        }
        let [lo, hi] = self.mask_band;
        if !(lo > 0.0 && lo < hi && hi <= 1.0) {
            return Err(HarnessError::Config(format!("mask_band [{lo}, {hi}] is not a valid fraction range")));
        }
        require_file("model", &self.model)?;
        for m in &self.manifests {
            require_file("manifest", m)?;
        }
        if let Some(g) = &self.grid {
            require_file("grid", g)?;
        }
        if let Some(g) = &self.control_grid {
            require_file("control grid", g)?;
        }
        if self.experiment == ExperimentKind::DotWhiteness && self.manifests.is_empty() {
            return Err(HarnessError::Config("dot-whiteness needs at least one manifest".into()));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        match &self.grid {
            Some(p) => Ok(GridSpec::load(p)?),
            None => Ok(GridSpec::default()),
        }
    }

    pub fn control_spec(&self, grid: &GridSpec) -> Result<GridSpec> {
        match &self.control_grid {
            Some(p) => Ok(GridSpec::load(p)?),
            None => Ok(gridprobe_core::stimuli::no_lines_variant(grid)),
        }
    }

    pub fn dot_order(&self) -> DotOrder {
        match self.dot_order {
            DotOrderChoice::Raster => DotOrder::Raster,
            DotOrderChoice::Shuffled => DotOrder::Shuffled(self.seed),
        }
    }

    pub fn memory_budget_bytes(&self) -> usize {
        self.memory_budget_mb.saturating_mul(1 << 20)
    }
}
