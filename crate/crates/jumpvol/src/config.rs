//! Run configuration: a flat JSON object, overridable from the command line.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use jumpvol_core::estimator::{PenaltyKind, DEFAULT_KAPPA_G, DEFAULT_KAPPA_SIGMA};
use jumpvol_core::model::parse_model_id;
use jumpvol_core::{Interval, JumpLaw, LevyMeasure};

use crate::defaults::DEFAULT_REPLICATIONS;
use crate::experiment::{BoundsMode, CellConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("config is not a JSON object: {0}")]
    Syntax(String),
    #[error("`{key}` {constraint}")]
    Constraint { key: &'static str, constraint: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Simulate,
    Estimate,
    Table,
    Figure,
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TargetChoice {
    G,
    Sigma2,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SigmaPenalty {
    /// `kappa sigma0^4 D / n`
    #[default]
    Dim,
    /// `kappa sigma0^2 / n`
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundsChoice {
    #[default]
    Known,
    Plugin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Command,
    pub model: String,
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    pub reps: usize,
    /// `delta:n` pairs separated by commas, e.g. `1e-2:1e4,1e-3:1e5`.
    pub cells: String,
    pub interval: Option<[f64; 2]>,
    pub kappa_g: f64,
    pub kappa_sigma: f64,
    pub sigma_penalty: SigmaPenalty,
    pub bounds: BoundsChoice,
    pub target: TargetChoice,
    pub clip_xi2: bool,
    pub kappas: Vec<f64>,
    /// Laplace rate for model 2; the default gives unit variance.
    pub laplace_lambda: Option<f64>,
    /// Truncation level of the dyadic atoms of model 4.
    pub atom_levels: Option<u32>,
    /// Path CSV to estimate from instead of simulating.
    pub input: Option<String>,
    pub out_dir: String,
    pub format: Format,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            subcommand: Command::Simulate,
            model: "1".to_string(),
            n: 10_000,
            delta: 1e-2,
            seed: 0,
            reps: DEFAULT_REPLICATIONS,
            cells: String::new(),
            interval: None,
            kappa_g: DEFAULT_KAPPA_G,
            kappa_sigma: DEFAULT_KAPPA_SIGMA,
            sigma_penalty: SigmaPenalty::Dim,
            bounds: BoundsChoice::Known,
            target: TargetChoice::Both,
            clip_xi2: false,
            kappas: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            laplace_lambda: None,
            atom_levels: None,
            input: None,
            out_dir: "out".to_string(),
            format: Format::Csv,
            threads: None,
        }
    }
}

const KEYS: [&str; 22] = [
    "subcommand",
    "model",
    "n",
    "delta",
    "seed",
    "reps",
    "cells",
    "interval",
    "kappa_g",
    "kappa_sigma",
    "sigma_penalty",
    "bounds",
    "target",
    "clip_xi2",
    "kappas",
    "laplace_lambda",
    "atom_levels",
    "input",
    "out_dir",
    "format",
    "threads",
    // accepted for compatibility with hand-written files
    "comment",
];

impl RunConfig {
    /// Parses a flat JSON object; missing keys take their defaults.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let map = value
            .as_object_mut()
            .ok_or_else(|| ConfigError::Syntax("top level must be an object".into()))?;
        if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        map.remove("comment");
        // one key at a time so a type error names its key
        for (key, v) in map.iter() {
            let single = serde_json::json!({ key.clone(): v.clone() });
            serde_json::from_value::<RunConfig>(single).map_err(|e| ConfigError::BadValue {
                key: key.clone(),
                message: e.to_string(),
            })?;
        }
        serde_json::from_value(value).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |key: &'static str, constraint: &str| {
            Err(ConfigError::Constraint {
                key,
                constraint: constraint.to_string(),
            })
        };
        if parse_model_id(&self.model).is_err() {
            return fail("model", "must be 1, 2, 3 or 4");
        }
        if self.n < 2 {
            return fail("n", "must be at least 2");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return fail("delta", "must be positive and finite");
        }
        if self.reps == 0 {
            return fail("reps", "must be at least 1");
        }
        if !(self.kappa_g > 0.0 && self.kappa_g.is_finite()) {
            return fail("kappa_g", "must be positive and finite");
        }
        if !(self.kappa_sigma > 0.0 && self.kappa_sigma.is_finite()) {
            return fail("kappa_sigma", "must be positive and finite");
        }
        if self.kappas.is_empty() || self.kappas.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return fail("kappas", "must be a non-empty list of positive numbers");
        }
        if let Some([lo, hi]) = self.interval {
            if Interval::new(lo, hi).is_err() {
                return fail("interval", "must satisfy lo < hi with finite ends");
            }
        }
        if let Some(lambda) = self.laplace_lambda {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return fail("laplace_lambda", "must be positive and finite");
            }
        }
        if let Some(levels) = self.atom_levels {
            if !(1..=60).contains(&levels) {
                return fail("atom_levels", "must be between 1 and 60");
            }
        }
        if self.threads == Some(0) {
            return fail("threads", "must be at least 1");
        }
        self.parsed_cells()?;
        Ok(())
    }

    pub fn model_id(&self) -> Result<u32, ConfigError> {
        parse_model_id(&self.model).map_err(|e| ConfigError::BadValue {
            key: "model".into(),
            message: e.to_string(),
        })
    }

    /// `(delta, n)` cells of the `table` command; `[(delta, n)]` when `cells`
    /// is empty.
    pub fn parsed_cells(&self) -> Result<Vec<(f64, usize)>, ConfigError> {
        if self.cells.trim().is_empty() {
            return Ok(vec![(self.delta, self.n)]);
        }
        self.cells
            .split(',')
            .map(|cell| {
                let bad = || ConfigError::Constraint {
                    key: "cells",
                    constraint: format!("entry `{cell}` must look like `delta:n` with delta > 0 and n >= 2"),
                };
                let (d, n) = cell.trim().split_once(':').ok_or_else(bad)?;
                let delta: f64 = d.trim().parse().map_err(|_| bad())?;
                let n: f64 = n.trim().parse().map_err(|_| bad())?;
                if !(delta > 0.0 && delta.is_finite()) || n.is_nan() || n < 2.0 || n.fract() != 0.0 || n > 1e12 {
                    return Err(bad());
                }
                Ok((delta, n as usize))
            })
            .collect()
    }

    fn levy_override(&self, model_id: u32) -> Option<LevyMeasure> {
        match model_id {
            2 => self.laplace_lambda.map(|lambda| LevyMeasure::CompoundPoisson {
                intensity: 1.0,
                jump_law: JumpLaw::Laplace { lambda },
            }),
            4 => self
                .atom_levels
                .map(|truncation_level| LevyMeasure::DiscreteAtoms { truncation_level }),
            _ => None,
        }
    }

    pub fn cell(&self, delta: f64, n: usize) -> Result<CellConfig, ConfigError> {
        let model_id = self.model_id()?;
        let interval = match self.interval {
            Some([lo, hi]) => Some(Interval::new(lo, hi).map_err(|e| ConfigError::BadValue {
                key: "interval".into(),
                message: e.to_string(),
            })?),
            None => None,
        };
        Ok(CellConfig {
            model_id,
            n,
            delta,
            replications: self.reps,
            interval,
            kappa_g: self.kappa_g,
            kappa_sigma: self.kappa_sigma,
            sigma_penalty: match self.sigma_penalty {
                SigmaPenalty::Dim => PenaltyKind::Sigma,
                SigmaPenalty::Literal => PenaltyKind::SigmaLiteral,
            },
            bounds: match self.bounds {
                BoundsChoice::Known => BoundsMode::Known,
                BoundsChoice::Plugin => BoundsMode::Plugin,
            },
            levy: self.levy_override(model_id),
            base_seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn dump_round_trip() {
        let cfg = RunConfig {
            subcommand: Command::Table,
            model: "3".into(),
            delta: 1e-3,
            interval: Some([-1.5, 2.25]),
            kappas: vec![1.0, 3.5],
            threads: Some(4),
            laplace_lambda: Some(2.0),
            ..RunConfig::default()
        };
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(
            RunConfig::from_json(r#"{"n": 10, "bogus": 1}"#),
            Err(ConfigError::UnknownKey("bogus".into()))
        );
        match RunConfig::from_json(r#"{"delta": "fast"}"#) {
            Err(ConfigError::BadValue { key, .. }) => assert_eq!(key, "delta"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::from_json("[1, 2]"), Err(ConfigError::Syntax(_))));
        let cfg = RunConfig::from_json(r#"{"delta": -1}"#).unwrap();
        match cfg.validate() {
            Err(ConfigError::Constraint { key, .. }) => assert_eq!(key, "delta"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cells_parse() {
        let cfg = RunConfig {
            cells: "1e-2:1e4, 0.001:100000".into(),
            ..RunConfig::default()
        };
        assert_eq!(cfg.parsed_cells().unwrap(), vec![(0.01, 10_000), (0.001, 100_000)]);
        for bad in ["1e-2", "x:10", "0.1:1", "-1:100", "0.1:10.5"] {
            let cfg = RunConfig {
                cells: bad.into(),
                ..RunConfig::default()
            };
            assert!(cfg.parsed_cells().is_err(), "{bad}");
        }
    }

    #[test]
    fn overrides_reach_the_cell() {
        let cfg = RunConfig {
            model: "4".into(),
            atom_levels: Some(10),
            ..RunConfig::default()
        };
        let cell = cfg.cell(0.01, 100).unwrap();
        assert_eq!(cell.levy, Some(LevyMeasure::DiscreteAtoms { truncation_level: 10 }));
        assert_eq!(cell.model().unwrap().levy, LevyMeasure::DiscreteAtoms { truncation_level: 10 });
    }
}
