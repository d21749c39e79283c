//! Per-experiment run configurations, loaded from TOML or from a manifest.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use kpz_core::growth::GrowthModel;
use kpz_core::mhfe::StromatoliteConfig;
use kpz_core::noise::MollifierKind;
use kpz_core::renorm::{CrossoverConfig, KappaRefinementConfig, LadderConfig};
use kpz_core::spectral::{Scheme, StepRule};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::manifest::Manifest;

/// Rejected configuration; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn ensure(ok: bool, field: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(format!("`{field}` {msg}")).into())
    }
}

fn positive(v: f64, field: &str) -> Result<()> {
    ensure(v > 0.0 && v.is_finite(), field, "must be positive")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    HeatSpectral,
    KpzMhfe,
    Growth,
    RenormCompare,
    RenormLadder,
    ConvergenceStudy,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::HeatSpectral => "heat-spectral",
            Experiment::KpzMhfe => "kpz-mhfe",
            Experiment::Growth => "growth",
            Experiment::RenormCompare => "renorm-compare",
            Experiment::RenormLadder => "renorm-ladder",
            Experiment::ConvergenceStudy => "convergence-study",
        }
    }

    /// Commented header printed above the default TOML.
    pub fn config_notes(self) -> &'static str {
        match self {
            Experiment::HeatSpectral => {
                "# dX = nu X'' dt + lambda X dW on the periodic unit interval, X0 = 1.\n\
                 # Time in model units; `modes` is the Galerkin dimension J; `steps` maps J to the step count.\n\
                 # The crossover section studies the roughness of log X and runs when `crossover_enabled`.\n"
            }
            Experiment::KpzMhfe => {
                "# Deterministic KPZ benchmark dh = nu h'' + (lambda/2)(h')^2 + (v + lambda) with exact Dirichlet data.\n\
                 # `cells` is the element count on `benchmark.domain`; `times` are the output times.\n"
            }
            Experiment::Growth => {
                "# Lattice growth on a periodic strip. Time in monolayers (L depositions per unit).\n\
                 # Samples run from t_min to horizon_factor * L^horizon_exponent, `samples_per_decade` per decade.\n\
                 # Exponent fits need at least two sizes and a saturating model (bd or rd-relax).\n"
            }
            Experiment::RenormCompare => {
                "# Renormalization constants for each mollifier and kappa; no random input.\n\
                 # `modes` noise modes and a `cells`-cell grid enter the Ito and grid constants.\n"
            }
            Experiment::RenormLadder => {
                "# KPZ on the periodic unit interval driven by mollified noise, compared with Hopf-Cole.\n\
                 # Unset optional keys: ladder.dt defaults to dx^3 and ladder.chi / refinement.chi to dx/2.\n\
                 # Counterterm: none | ito | grid | total | { fixed = value }.\n"
            }
            Experiment::ConvergenceStudy => {
                "# Mesh refinement of the deterministic KPZ benchmark at `t_final`; E is the absolute discrete L2 error.\n"
            }
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reads `path` as TOML, or as a run manifest when it ends in `.json`.
/// A manifest must come from the same experiment.
pub fn load<T: DeserializeOwned>(path: &Path, experiment: Experiment) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        if manifest.experiment != experiment {
            return Err(ConfigError(format!(
                "manifest {} records a `{}` run, not `{experiment}`",
                path.display(),
                manifest.experiment
            ))
            .into());
        }
        return serde_json::from_value(manifest.config)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())).into());
    }
    toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
}

pub trait RunConfig: Serialize + DeserializeOwned + Default {
    fn validate(&self) -> Result<()>;
    fn set_seed(&mut self, seed: u64);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSpectralConfig {
    pub nu: f64,
    pub lambda: f64,
    pub t_final: f64,
    pub modes: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub steps: StepRule,
    pub realizations: usize,
    pub seed: u64,
    /// Also write the finest-resolution noise of realization 0 for replay.
    pub dump_noise: bool,
    pub crossover_enabled: bool,
    pub crossover: CrossoverConfig,
}

impl Default for HeatSpectralConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 1.0,
            t_final: 1.0,
            modes: vec![2, 4, 8, 16, 32, 64],
            schemes: vec![Scheme::LordRougemont, Scheme::Milstein],
            steps: StepRule::Quadratic,
            realizations: 50,
            seed: 2024,
            dump_noise: false,
            crossover_enabled: true,
            crossover: CrossoverConfig::default(),
        }
    }
}

impl RunConfig for HeatSpectralConfig {
    fn validate(&self) -> Result<()> {
        positive(self.nu, "nu")?;
        positive(self.t_final, "t_final")?;
        ensure(self.modes.len() >= 2, "modes", "needs at least two resolutions")?;
        ensure(self.modes.windows(2).all(|w| w[1] > w[0]), "modes", "must increase")?;
        ensure(self.modes[0] >= 1, "modes", "entries must be at least 1")?;
        ensure(!self.schemes.is_empty(), "schemes", "must not be empty")?;
        ensure(self.realizations >= 1, "realizations", "must be at least 1")?;
        if self.crossover_enabled {
            let c = &self.crossover;
            positive(c.nu, "crossover.nu")?;
            positive(c.t_final, "crossover.t_final")?;
            ensure(c.modes >= 1, "crossover.modes", "must be at least 1")?;
            ensure(c.steps >= 1, "crossover.steps", "must be at least 1")?;
            ensure(c.realizations >= 1, "crossover.realizations", "must be at least 1")?;
            ensure(c.samples_per_decade >= 1, "crossover.samples_per_decade", "must be at least 1")?;
        }
        Ok(())
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.crossover.seed = seed;
    }
}

fn validate_benchmark(b: &StromatoliteConfig) -> Result<()> {
    positive(b.nu, "benchmark.nu")?;
    ensure(b.domain.1 > b.domain.0, "benchmark.domain", "must be an increasing interval")?;
    positive(b.chi1, "benchmark.chi1")?;
    positive(b.chi2, "benchmark.chi2")?;
    positive(b.tol, "benchmark.tol")?;
    ensure(b.max_iters >= 1, "benchmark.max_iters", "must be at least 1")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpzMhfeConfig {
    pub cells: usize,
    pub times: Vec<f64>,
    pub benchmark: StromatoliteConfig,
}

impl Default for KpzMhfeConfig {
    fn default() -> Self {
        Self { cells: 64, times: vec![0.1, 0.5, 1.0], benchmark: StromatoliteConfig::default() }
    }
}

impl RunConfig for KpzMhfeConfig {
    fn validate(&self) -> Result<()> {
        ensure(self.cells >= 2, "cells", "must be at least 2")?;
        ensure(!self.times.is_empty(), "times", "must not be empty")?;
        ensure(self.times.iter().all(|t| *t > 0.0), "times", "must be positive")?;
        validate_benchmark(&self.benchmark)
    }

    fn set_seed(&mut self, _seed: u64) {}
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub cells: Vec<usize>,
    pub t_final: f64,
    pub benchmark: StromatoliteConfig,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { cells: vec![128, 256, 512, 1024], t_final: 1.0, benchmark: StromatoliteConfig::default() }
    }
}

impl RunConfig for ConvergenceConfig {
    fn validate(&self) -> Result<()> {
        ensure(self.cells.len() >= 2, "cells", "needs at least two meshes")?;
        ensure(self.cells.iter().all(|m| *m >= 2), "cells", "entries must be at least 2")?;
        positive(self.t_final, "t_final")?;
        validate_benchmark(&self.benchmark)
    }

    fn set_seed(&mut self, _seed: u64) {}
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub model: GrowthModel,
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub t_min: f64,
    pub horizon_factor: f64,
    pub horizon_exponent: f64,
    pub samples_per_decade: usize,
    pub fit: bool,
    pub collapse_points: usize,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            model: GrowthModel::Ballistic,
            sizes: vec![64, 128, 256, 512],
            runs: 100,
            seed: 2024,
            t_min: 0.1,
            horizon_factor: 2.0,
            horizon_exponent: 1.5,
            samples_per_decade: 10,
            fit: true,
            collapse_points: 40,
        }
    }
}

impl GrowthConfig {
    pub fn horizon(&self, l: usize) -> f64 {
        self.horizon_factor * (l as f64).powf(self.horizon_exponent)
    }
}

impl RunConfig for GrowthConfig {
    fn validate(&self) -> Result<()> {
        ensure(!self.sizes.is_empty(), "sizes", "must not be empty")?;
        ensure(self.sizes.iter().all(|l| *l >= 2), "sizes", "entries must be at least 2")?;
        ensure(self.runs >= 1, "runs", "must be at least 1")?;
        positive(self.t_min, "t_min")?;
        positive(self.horizon_factor, "horizon_factor")?;
        ensure(self.samples_per_decade >= 1, "samples_per_decade", "must be at least 1")?;
        for &l in &self.sizes {
            ensure(self.horizon(l) >= self.t_min, "horizon_factor", "gives a horizon below t_min")?;
        }
        if self.fit && self.sizes.len() >= 2 && self.model != GrowthModel::Random {
            ensure(self.collapse_points >= 2, "collapse_points", "must be at least 2")?;
        }
        Ok(())
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormCompareConfig {
    pub kappas: Vec<f64>,
    pub mollifiers: Vec<MollifierKind>,
    pub modes: usize,
    pub cells: usize,
}

impl Default for RenormCompareConfig {
    fn default() -> Self {
        Self {
            kappas: vec![1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125],
            mollifiers: vec![MollifierKind::Bump, MollifierKind::Gaussian],
            modes: 63,
            cells: 64,
        }
    }
}

impl RunConfig for RenormCompareConfig {
    fn validate(&self) -> Result<()> {
        ensure(!self.kappas.is_empty(), "kappas", "must not be empty")?;
        ensure(self.kappas.iter().all(|k| *k > 0.0 && *k <= 1.0), "kappas", "must lie in (0, 1]")?;
        ensure(!self.mollifiers.is_empty(), "mollifiers", "must not be empty")?;
        ensure(self.modes >= 1, "modes", "must be at least 1")?;
        ensure(self.cells >= 2, "cells", "must be at least 2")
    }

    fn set_seed(&mut self, _seed: u64) {}
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormLadderConfig {
    pub ladder: LadderConfig,
    pub refinement_enabled: bool,
    pub refinement: KappaRefinementConfig,
}

impl Default for RenormLadderConfig {
    fn default() -> Self {
        Self { ladder: LadderConfig::default(), refinement_enabled: true, refinement: KappaRefinementConfig::default() }
    }
}

impl RunConfig for RenormLadderConfig {
    fn validate(&self) -> Result<()> {
        let l = &self.ladder;
        positive(l.nu, "ladder.nu")?;
        ensure(l.kappas.iter().all(|k| *k > 0.0 && *k <= 1.0), "ladder.kappas", "must lie in (0, 1]")?;
        ensure(!l.kappas.is_empty(), "ladder.kappas", "must not be empty")?;
        ensure(l.cells >= 4, "ladder.cells", "must be at least 4")?;
        ensure(l.realizations >= 1, "ladder.realizations", "must be at least 1")?;
        l.validate().map_err(|e| ConfigError(format!("ladder: {e}")))?;
        if self.refinement_enabled {
            let r = &self.refinement;
            positive(r.nu, "refinement.nu")?;
            ensure(r.levels.len() >= 2, "refinement.levels", "needs at least two levels")?;
            ensure(r.levels.iter().all(|v| v.kappa > 0.0 && v.kappa <= 1.0), "refinement.levels", "kappa must lie in (0, 1]")?;
            ensure(r.levels.iter().all(|v| v.cells >= 2), "refinement.levels", "cells must be at least 2")?;
            ensure(r.realizations >= 1, "refinement.realizations", "must be at least 1")?;
            positive(r.t_final, "refinement.t_final")?;
        }
        Ok(())
    }

    fn set_seed(&mut self, seed: u64) {
        self.ladder.seed = seed;
        self.refinement.seed = seed;
    }
}

/// A configuration as commented TOML.
pub fn config_toml<T: RunConfig>(cfg: &T, experiment: Experiment) -> Result<String> {
    let body = toml::to_string_pretty(cfg).context("serializing configuration")?;
    Ok(format!("# kpz {experiment}\n{}\n{body}", experiment.config_notes()))
}
