//! Run configuration: command-line flags override a flat JSON config file,
//! which overrides the built-in defaults.

use std::path::Path;

use clap::Args;
use fourier_contour::activation::DEFAULT_DELTA;
use fourier_contour::loss::RegressionWeights;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Highest retained frequency K.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of contour samples N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Activation range parameter.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Matches collected per ground truth.
    #[arg(long)]
    pub nm: Option<usize>,
    /// Proposals kept before matching.
    #[arg(long)]
    pub nq: Option<usize>,
    /// IoU threshold for NMS and evaluation.
    #[arg(long)]
    pub iou: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Overrides {
    fn or(self, fallback: Overrides) -> Overrides {
        Overrides {
            k: self.k.or(fallback.k),
            n: self.n.or(fallback.n),
            delta: self.delta.or(fallback.delta),
            lambda: self.lambda.or(fallback.lambda),
            alpha1: self.alpha1.or(fallback.alpha1),
            alpha2: self.alpha2.or(fallback.alpha2),
            nm: self.nm.or(fallback.nm),
            nq: self.nq.or(fallback.nq),
            iou: self.iou.or(fallback.iou),
            seed: self.seed.or(fallback.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub k_max: usize,
    pub n_samples: usize,
    pub delta: f64,
    pub weights: RegressionWeights,
    pub n_m: usize,
    pub n_q: usize,
    pub iou: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            k_max: 5,
            n_samples: 400,
            delta: DEFAULT_DELTA,
            weights: RegressionWeights::default(),
            n_m: 3,
            n_q: 300,
            iou: 0.5,
            seed: 0,
        }
    }
}

impl Config {
    pub fn resolve(flags: Overrides, file: Option<&Path>) -> Result<Self, CliError> {
        let from_file = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
            }
            None => Overrides::default(),
        };
        let o = flags.or(from_file);
        let d = Config::default();
        let config = Config {
            k_max: o.k.unwrap_or(d.k_max),
            n_samples: o.n.unwrap_or(d.n_samples),
            delta: o.delta.unwrap_or(d.delta),
            weights: RegressionWeights {
                lambda: o.lambda.unwrap_or(d.weights.lambda),
                alpha1: o.alpha1.unwrap_or(d.weights.alpha1),
                alpha2: o.alpha2.unwrap_or(d.weights.alpha2),
            },
            n_m: o.nm.unwrap_or(d.n_m),
            n_q: o.nq.unwrap_or(d.n_q),
            iou: o.iou.unwrap_or(d.iou),
            seed: o.seed.unwrap_or(d.seed),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let counts = [
            ("k", self.k_max),
            ("n", self.n_samples),
            ("nm", self.n_m),
            ("nq", self.n_q),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(CliError::input(format!("--{name} must be positive")));
            }
        }
        let reals = [
            ("delta", self.delta),
            ("lambda", self.weights.lambda),
            ("alpha1", self.weights.alpha1),
            ("alpha2", self.weights.alpha2),
            ("iou", self.iou),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::input(format!(
                    "--{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}
