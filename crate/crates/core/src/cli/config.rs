//! Experiment configuration: a JSON document whose fields can all be
//! overridden from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{Decay, LearnerConfig, DEFAULT_WARMUP_SHIFTS};
use crate::synthdata::{self, MixtureSpec};

/// How the initial pool is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolInit {
    /// Axis-parallel planes, this many per dimension.
    Grid(usize),
    /// This many planes with random normals.
    Random(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sizes {
    pub train: usize,
    pub calib: usize,
    pub test: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Self {
            train: 10_000,
            calib: 400,
            test: 2_000,
        }
    }
}

/// Learner parameters in units of σ (except `alpha`, which is an angle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerParams {
    pub epsilon: f64,
    pub phi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub warmup: u64,
    /// Linear decay of ε and α over this many samples; off when absent.
    pub decay_horizon: Option<u64>,
    pub decay_floor: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            epsilon: 0.0033,
            phi: 2.0,
            alpha: 0.04,
            beta: 8.0,
            warmup: DEFAULT_WARMUP_SHIFTS,
            decay_horizon: None,
            decay_floor: 0.1,
        }
    }
}

impl LearnerParams {
    pub fn resolve(&self, sigma: f64, seed: u64) -> Result<LearnerConfig> {
        let cfg = LearnerConfig {
            epsilon: self.epsilon * sigma,
            phi: self.phi * sigma,
            alpha: self.alpha,
            beta: self.beta * sigma,
            warmup_shifts: self.warmup,
            rng_seed: seed,
            decay: self.decay_horizon.map(|horizon| Decay {
                horizon,
                floor: self.decay_floor,
            }),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Builtin name (`paper2d`, `paper50d`, `unequal`) or a path to a
    /// mixture JSON file.
    pub mixture: String,
    /// Parameter scale. When absent it is estimated from the data with
    /// `auto_domain`, otherwise taken from the mixture's mean σ.
    pub sigma: Option<f64>,
    pub learner: LearnerParams,
    pub init: PoolInit,
    /// Cube `[lo, hi]^d` for the initial pool. When absent the box is taken
    /// from the per-coordinate range of the calibration data.
    pub domain: Option<[f64; 2]>,
    /// Estimate σ from the calibration data (mean per-coordinate standard
    /// deviation) instead of taking it from the mixture.
    pub auto_domain: bool,
    pub sizes: Sizes,
    pub seed: u64,
    /// Samples between trace checkpoints.
    pub cadence: usize,
    pub ns: Vec<usize>,
    pub weighting: crate::headmap::Weighting,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mixture: "paper2d".into(),
            sigma: None,
            learner: LearnerParams::default(),
            init: PoolInit::Grid(4),
            domain: None,
            auto_domain: false,
            sizes: Sizes::default(),
            seed: 1,
            cadence: 500,
            ns: vec![1, 3, 5],
            weighting: Default::default(),
            out_dir: PathBuf::from("."),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cadence == 0 {
            return Err(Error::invalid("cadence must be positive"));
        }
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(Error::invalid("ns must be a non-empty list of positive integers"));
        }
        match self.init {
            PoolInit::Grid(0) | PoolInit::Random(0) => {
                return Err(Error::invalid("pool init needs at least one plane"))
            }
            _ => {}
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("sigma must be positive"));
            }
        }
        if let Some([lo, hi]) = self.domain {
            if !(lo < hi) {
                return Err(Error::invalid("domain needs lo < hi"));
            }
        }
        Ok(())
    }

    /// Resolves the mixture name to a spec. Builtins use unit σ.
    pub fn mixture_spec(&self) -> Result<MixtureSpec> {
        builtin_mixture(&self.mixture).unwrap_or_else(|| {
            let path = Path::new(&self.mixture);
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let spec: MixtureSpec = serde_json::from_str(&text)?;
            spec.validate()?;
            Ok(spec)
        })
    }
}

pub fn builtin_mixture(name: &str) -> Option<Result<MixtureSpec>> {
    match name {
        "paper2d" => Some(synthdata::paper_2d_spec(1.0)),
        "paper50d" => Some(synthdata::paper_50d_spec(1.0)),
        "unequal" => Some(synthdata::unequal_benchmark_spec(1.0)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_learner_defaults() {
        let cfg = LearnerParams::default().resolve(1.0, 0).unwrap();
        assert_eq!(cfg, LearnerConfig::scaled(1.0));
        let cfg = LearnerParams::default().resolve(2.5, 0).unwrap();
        assert_eq!(cfg.phi, 5.0);
        assert_eq!(cfg.alpha, 0.04);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"mixture":"paper50d","init":{"random":30},"learner":{"alpha":0.02}}"#).unwrap();
        assert_eq!(cfg.init, PoolInit::Random(30));
        assert_eq!(cfg.learner.alpha, 0.02);
        assert_eq!(cfg.learner.phi, 2.0);
        assert_eq!(cfg.sizes, Sizes::default());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"mixtur":"x"}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        cfg.cadence = 0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            domain: Some([1.0, 1.0]),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            ns: vec![1, 0],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn builtins_resolve() {
        for name in ["paper2d", "paper50d", "unequal"] {
            let cfg = ExperimentConfig {
                mixture: name.into(),
                ..Default::default()
            };
            cfg.mixture_spec().unwrap();
        }
        let cfg = ExperimentConfig {
            mixture: "/nonexistent/mix.json".into(),
            ..Default::default()
        };
        assert!(matches!(cfg.mixture_spec(), Err(Error::Io { .. })));
    }
}
