//! Monte Carlo evaluation of the adaptive estimators.
//!
//! A cell is one `(model, n, delta)` combination simulated `replications`
//! times with seeds `base_seed + i`. For every replication both estimators
//! are computed; the error of the selected fit is compared with the best
//! error over the whole grid.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use jumpvol_core::estimator::{
    estimate_g_on, estimate_sigma2_on, AdaptiveResult, GridConfig, Penalty, PenaltyKind,
    TruncationRule, DEFAULT_KAPPA_G, DEFAULT_KAPPA_SIGMA,
};
use jumpvol_core::model::builtin_model_by_id;
use jumpvol_core::{plugin_bounds, simulate, Bounds, Interval, LevyMeasure, ModelSpec, Path, SimConfig};

use crate::defaults::{self, FIGURE_GRID_POINTS};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: jumpvol_core::Error,
    },
    #[error(transparent)]
    Core(#[from] jumpvol_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// `sigma^2 + xi^2`
    G,
    Sigma2,
}

impl Target {
    pub fn truth(&self, model: &ModelSpec, x: f64) -> f64 {
        match self {
            Target::G => model.g(x),
            Target::Sigma2 => model.sigma2(x),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Target::G => "g",
            Target::Sigma2 => "sigma2",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsMode {
    Known,
    Plugin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellConfig {
    pub model_id: u32,
    pub n: usize,
    pub delta: f64,
    pub replications: usize,
    /// `None` selects the model's default interval.
    pub interval: Option<Interval>,
    pub kappa_g: f64,
    pub kappa_sigma: f64,
    pub sigma_penalty: PenaltyKind,
    pub bounds: BoundsMode,
    /// Replaces the model's Lévy measure when set.
    pub levy: Option<LevyMeasure>,
    pub base_seed: u64,
}

impl CellConfig {
    pub fn new(model_id: u32, n: usize, delta: f64) -> Self {
        CellConfig {
            model_id,
            n,
            delta,
            replications: defaults::DEFAULT_REPLICATIONS,
            interval: None,
            kappa_g: DEFAULT_KAPPA_G,
            kappa_sigma: DEFAULT_KAPPA_SIGMA,
            sigma_penalty: PenaltyKind::Sigma,
            bounds: BoundsMode::Known,
            levy: None,
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: &str| Err(ExperimentError::InvalidCell(msg.to_string()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta must be positive");
        }
        if !(self.kappa_g > 0.0 && self.kappa_sigma > 0.0) {
            return bad("kappa values must be positive");
        }
        if let Some(levy) = &self.levy {
            levy.validate()?;
        }
        builtin_model_by_id(self.model_id)?;
        Ok(())
    }

    pub fn model(&self) -> Result<ModelSpec, ExperimentError> {
        let model = builtin_model_by_id(self.model_id)?;
        Ok(match self.levy {
            Some(levy) => model.with_levy(levy),
            None => model,
        })
    }

    pub fn interval(&self) -> Result<Interval, ExperimentError> {
        match self.interval {
            Some(i) => Ok(i),
            None => Ok(defaults::default_interval(self.model_id)?),
        }
    }

    pub fn seed(&self, replication: usize) -> u64 {
        self.base_seed.wrapping_add(replication as u64)
    }
}

/// `(1/n) sum_k (fitted(X_k) - truth(X_k))^2 1{X_k in A}` over the design
/// points of `path`; the division is by `n`, not by the number of points in A.
pub fn empirical_error(
    fitted: impl Fn(f64) -> f64,
    truth: impl Fn(f64) -> f64,
    path: &Path,
    interval: &Interval,
) -> f64 {
    let xs = path.design_points();
    let sum: f64 = xs
        .iter()
        .filter(|&&x| interval.contains(x))
        .map(|&x| {
            let d = fitted(x) - truth(x);
            d * d
        })
        .sum();
    sum / xs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub seed: u64,
    pub err: f64,
    pub err_min: f64,
    pub level: u32,
    pub order: u32,
    pub dim: usize,
    pub level_min: u32,
    pub order_min: u32,
    /// Estimation wall time in seconds.
    pub seconds: f64,
}

impl ReplicationRecord {
    pub fn oracle_ratio(&self) -> f64 {
        if self.err_min > 0.0 {
            self.err / self.err_min
        } else if self.err == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub target: Target,
    pub risk: f64,
    pub oracle: f64,
    pub m_est: f64,
    pub r_est: f64,
    pub mean_dim: f64,
    /// Mean estimation wall time per replication, seconds.
    pub t_e: f64,
    pub per_replication: Vec<ReplicationRecord>,
}

impl ExperimentReport {
    fn aggregate(target: Target, records: Vec<ReplicationRecord>) -> Self {
        let count = records.len() as f64;
        let mean = |f: &dyn Fn(&ReplicationRecord) -> f64| records.iter().map(f).sum::<f64>() / count;
        ExperimentReport {
            target,
            risk: mean(&|r| r.err),
            oracle: mean(&|r| r.oracle_ratio()),
            m_est: mean(&|r| r.level as f64),
            r_est: mean(&|r| r.order as f64),
            mean_dim: mean(&|r| r.dim as f64),
            t_e: mean(&|r| r.seconds),
            per_replication: records,
        }
    }
}

/// Outcome of one target on one path.
fn score(
    target: Target,
    result: &AdaptiveResult,
    model: &ModelSpec,
    path: &Path,
    interval: &Interval,
    seed: u64,
    seconds: f64,
) -> ReplicationRecord {
    let truth = |x: f64| target.truth(model, x);
    let selected = result.selected_fit();
    let err = empirical_error(|x| selected.eval(x), truth, path, interval);
    let mut err_min = err;
    let (mut level_min, mut order_min) = (selected.level(), selected.order());
    for entry in result.fits.iter().filter(|f| !f.fit.singular) {
        let e = empirical_error(|x| entry.fit.eval(x), truth, path, interval);
        if e < err_min {
            err_min = e;
            level_min = entry.fit.level();
            order_min = entry.fit.order();
        }
    }
    ReplicationRecord {
        seed,
        err,
        err_min,
        level: selected.level(),
        order: selected.order(),
        dim: selected.dim(),
        level_min,
        order_min,
        seconds,
    }
}

/// Both adaptive estimates on one simulated path.
pub struct Estimates {
    pub path: Path,
    pub g: AdaptiveResult,
    pub sigma2: AdaptiveResult,
    pub bounds: Bounds,
    pub seconds: f64,
}

/// Simulates replication `index` of `cfg` and runs both estimators.
pub fn estimate_replication(cfg: &CellConfig, index: usize) -> Result<Estimates, ExperimentError> {
    let model = cfg.model()?;
    let interval = cfg.interval()?;
    let wrap = |source| ExperimentError::Replication { index, source };
    let path = simulate(&model, &SimConfig::new(cfg.n, cfg.delta, cfg.seed(index))).map_err(wrap)?;
    let start = Instant::now();
    let bounds = match cfg.bounds {
        BoundsMode::Known => Bounds::from_model(&model, &interval).map_err(wrap)?,
        BoundsMode::Plugin => plugin_bounds(&path).map_err(wrap)?,
    };
    let grid = GridConfig::for_sample(path.n(), path.delta);
    let g = estimate_g_on(&path, &interval, &Penalty::g(cfg.kappa_g, bounds), &grid).map_err(wrap)?;
    let sigma_penalty = Penalty {
        kind: cfg.sigma_penalty,
        kappa: cfg.kappa_sigma,
        bounds,
    };
    let rule = TruncationRule::from_bounds(&bounds, path.n(), path.delta);
    let sigma2 = estimate_sigma2_on(&path, &interval, &sigma_penalty, &grid, &rule).map_err(wrap)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(Estimates {
        path,
        g,
        sigma2,
        bounds,
        seconds,
    })
}

/// Runs every replication of a cell and aggregates one report per target
/// (`[g, sigma2]`). Replications run on the rayon pool; results are
/// aggregated in replication order, so the reports are deterministic apart
/// from the timing fields.
pub fn run_cell(cfg: &CellConfig) -> Result<[ExperimentReport; 2], ExperimentError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let interval = cfg.interval()?;
    let outcomes: Vec<(ReplicationRecord, ReplicationRecord)> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let est = estimate_replication(cfg, i)?;
            let seed = cfg.seed(i);
            Ok((
                score(Target::G, &est.g, &model, &est.path, &interval, seed, est.seconds),
                score(Target::Sigma2, &est.sigma2, &model, &est.path, &interval, seed, est.seconds),
            ))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let (g, sigma2): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok([
        ExperimentReport::aggregate(Target::G, g),
        ExperimentReport::aggregate(Target::Sigma2, sigma2),
    ])
}

/// Estimator curves of several replications on a uniform grid over A.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub target: Target,
    pub xs: Vec<f64>,
    pub truth: Vec<f64>,
    /// One curve per replication.
    pub estimates: Vec<Vec<f64>>,
}

/// Curves for both targets, `[g, sigma2]`, over `cfg.replications` paths.
pub fn figure_data(cfg: &CellConfig) -> Result<[FigureData; 2], ExperimentError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let interval = cfg.interval()?;
    // drop the right end point, which lies outside the half-open interval
    let xs: Vec<f64> = interval
        .grid(FIGURE_GRID_POINTS + 1)
        .into_iter()
        .take(FIGURE_GRID_POINTS)
        .collect();
    let runs: Vec<Estimates> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| estimate_replication(cfg, i))
        .collect::<Result<_, _>>()?;
    let curves = |target: Target| {
        let estimates = runs
            .iter()
            .map(|run| {
                let result = match target {
                    Target::G => &run.g,
                    Target::Sigma2 => &run.sigma2,
                };
                xs.iter().map(|&x| result.function().eval(x)).collect()
            })
            .collect();
        FigureData {
            target,
            xs: xs.clone(),
            truth: xs.iter().map(|&x| target.truth(&model, x)).collect(),
            estimates,
        }
    };
    Ok([curves(Target::G), curves(Target::Sigma2)])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub kappa: f64,
    pub risk_g: f64,
    pub mean_dim_g: f64,
    pub risk_sigma2: f64,
    pub mean_dim_sigma2: f64,
}

/// Risk and mean selected dimension of both estimators for each `kappa`
/// (applied to both penalties).
pub fn calibration_sweep(cfg: &CellConfig, kappas: &[f64]) -> Result<Vec<CalibrationRow>, ExperimentError> {
    kappas
        .iter()
        .map(|&kappa| {
            let cell = CellConfig {
                kappa_g: kappa,
                kappa_sigma: kappa,
                ..cfg.clone()
            };
            let [g, s] = run_cell(&cell)?;
            Ok(CalibrationRow {
                kappa,
                risk_g: g.risk,
                mean_dim_g: g.mean_dim,
                risk_sigma2: s.risk,
                mean_dim_sigma2: s.mean_dim,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_error_counts_only_points_in_a() {
        let path = Path::new(0.1, vec![0.1, 0.2, 0.3, 0.4, 9.0]).unwrap();
        let a = Interval::new(0.0, 1.0).unwrap();
        assert_eq!(empirical_error(|x| x, |x| x, &path, &a), 0.0);
        assert!((empirical_error(|x| x + 1.0, |x| x, &path, &a) - 1.0).abs() < 1e-15);
        let half = Interval::new(0.0, 0.25).unwrap();
        assert!((empirical_error(|x| x + 1.0, |x| x, &path, &half) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn oracle_ratio_edge_cases() {
        let mut r = ReplicationRecord {
            seed: 0,
            err: 0.0,
            err_min: 0.0,
            level: 0,
            order: 0,
            dim: 1,
            level_min: 0,
            order_min: 0,
            seconds: 0.0,
        };
        assert_eq!(r.oracle_ratio(), 1.0);
        r.err = 0.2;
        r.err_min = 0.1;
        assert!((r.oracle_ratio() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_cells() {
        let mut cfg = CellConfig::new(1, 1000, 0.01);
        cfg.replications = 0;
        assert!(matches!(run_cell(&cfg), Err(ExperimentError::InvalidCell(_))));
        assert!(CellConfig::new(7, 1000, 0.01).validate().is_err());
        assert!(CellConfig::new(1, 1000, -0.01).validate().is_err());
    }

    #[test]
    fn tiny_cell_fails_on_empty_grid() {
        // sqrt(n delta) < 1: no space fits under the cap
        let cfg = CellConfig {
            replications: 1,
            ..CellConfig::new(1, 100, 1e-3)
        };
        assert!(matches!(
            run_cell(&cfg),
            Err(ExperimentError::Replication { index: 0, .. })
        ));
    }
}
