//! Penalised least-squares estimators of `g = sigma^2 + xi^2` and of
//! `sigma^2`, with adaptive choice of the spline space.
//!
//! Both estimators regress a normalised squared increment on the left end
//! point of the increment:
//!
//! * `g`: responses `T_k = (X_{k+1} - X_k)^2 / delta`, penalty
//!   `kappa xi0^4 D / (n delta)`;
//! * `sigma^2`: responses `Y_k = T_k 1{|X_{k+1} - X_k| <= C}` with the jump
//!   threshold `C = (sigma0 + xi0) ln(n) sqrt(delta) + sqrt(delta)`, penalty
//!   `kappa sigma0^4 D / n`.
//!
//! For every `(m, r)` on the grid the contrast
//! `(1/n) sum_{X_k in A} (t(X_k) - response_k)^2` is minimised over `S_{m,r}`;
//! the space is then chosen by minimising contrast plus penalty, first over
//! `m` for each `r`, then over `r`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::ModelSpec;
use crate::sim::{increments, Path};
use crate::spline::{assemble, build_basis, Interval, SplineBasis, MAX_ORDER};

/// Fits whose Gram matrix has a larger condition number are flagged singular
/// and solved with a ridge.
pub const SINGULAR_CONDITION: f64 = 1e8;
/// Ridge `factor * trace(gram) / dim` added to ill-conditioned systems.
pub const DEFAULT_RIDGE_FACTOR: f64 = 1e-8;

pub const DEFAULT_KAPPA_G: f64 = 2.0;
pub const DEFAULT_KAPPA_SIGMA: f64 = 2.0;

pub const PLUGIN_QUANTILE: f64 = 0.995;
pub const PLUGIN_INFLATION: f64 = 1.5;
pub const PLUGIN_MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    Known,
    PlugIn,
}

/// Upper bounds `sigma^2 <= sigma0_sq` and `xi^2 <= xi0_sq` on the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub sigma0_sq: f64,
    pub xi0_sq: f64,
    pub source: BoundSource,
}

impl Bounds {
    pub fn new(sigma0_sq: f64, xi0_sq: f64, source: BoundSource) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(sigma0_sq) && ok(xi0_sq)) {
            return Err(Error::InvalidBounds);
        }
        Ok(Bounds {
            sigma0_sq,
            xi0_sq,
            source,
        })
    }

    /// Suprema of the true `sigma^2` and `xi^2` over `interval`, scanned on a
    /// grid of 4097 points.
    pub fn from_model(model: &ModelSpec, interval: &Interval) -> Result<Self> {
        let grid = interval.grid(4097);
        let sup = |f: &dyn Fn(f64) -> f64| grid.iter().map(|&x| f(x)).fold(0.0, f64::max);
        Bounds::new(
            sup(&|x| model.sigma2(x)),
            sup(&|x| model.xi2(x)),
            BoundSource::Known,
        )
    }

    pub fn sigma0(&self) -> f64 {
        math::sqrt(self.sigma0_sq)
    }

    pub fn xi0(&self) -> f64 {
        math::sqrt(self.xi0_sq)
    }
}

/// Jump filter `|X_{k+1} - X_k| <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRule {
    pub threshold: f64,
}

impl TruncationRule {
    /// `(sigma0 + xi0) ln(n) sqrt(delta) + sqrt(delta)`.
    pub fn new(sigma0: f64, xi0: f64, n: usize, delta: f64) -> Self {
        let root = math::sqrt(delta);
        TruncationRule {
            threshold: (sigma0 + xi0) * math::ln(n as f64) * root + root,
        }
    }

    pub fn from_bounds(bounds: &Bounds, n: usize, delta: f64) -> Self {
        TruncationRule::new(bounds.sigma0(), bounds.xi0(), n, delta)
    }

    pub fn with_threshold(threshold: f64) -> Self {
        TruncationRule { threshold }
    }

    #[inline]
    pub fn keeps(&self, jump: f64) -> bool {
        math::abs(jump) <= self.threshold
    }
}

/// Truncated responses `Y_k = T_k 1{|X_{k+1} - X_k| <= C}`.
pub fn truncate(path: &Path, rule: &TruncationRule) -> Vec<f64> {
    path.values
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if rule.keeps(d) {
                d * d / path.delta
            } else {
                0.0
            }
        })
        .collect()
}

/// Plug-in bounds from the data.
///
/// The bound on `sigma^2 + xi^2` is the 99.5% quantile of the `T_k`; the
/// bound on `sigma^2` is the same quantile of the `Y_k` truncated with
/// `sigma0 + xi0` replaced by `sqrt(2 * combined)`. Both are inflated by
/// 1.5. The combined bound also serves as the bound on `xi^2`.
pub fn plugin_bounds(path: &Path) -> Result<Bounds> {
    let n = path.n();
    if n < PLUGIN_MIN_SAMPLES {
        return Err(Error::PathTooShort {
            needed: PLUGIN_MIN_SAMPLES,
            got: n,
        });
    }
    let t = increments(path);
    if t.iter().all(|&v| v == 0.0) {
        return Err(Error::DegeneratePath);
    }
    let combined = quantile(&t, PLUGIN_QUANTILE) * PLUGIN_INFLATION;
    if !(combined > 0.0) {
        return Err(Error::DegeneratePath);
    }
    let root = math::sqrt(path.delta);
    let provisional = TruncationRule::with_threshold(
        math::sqrt(2.0 * combined) * math::ln(n as f64) * root + root,
    );
    let y = truncate(path, &provisional);
    let mut sigma0_sq = quantile(&y, PLUGIN_QUANTILE) * PLUGIN_INFLATION;
    if !(sigma0_sq > 0.0) {
        sigma0_sq = combined;
    }
    Bounds::new(sigma0_sq, combined, BoundSource::PlugIn)
}

/// Linearly interpolated empirical quantile.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = math::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// A function `sum_k coefficients[k] phi_k` of a spline space.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedFunction {
    pub basis: SplineBasis,
    pub coefficients: Vec<f64>,
}

impl FittedFunction {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.basis.eval_combination(&self.coefficients, x)
    }
}

/// Least-squares fit in one space `S_{m,r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub function: FittedFunction,
    /// Achieved contrast `(1/n) sum_{X_k in A} (t(X_k) - y_k)^2`.
    pub contrast: f64,
    pub n_in_a: usize,
    pub condition: f64,
    /// Under-determined or ill-conditioned; excluded from selection.
    pub singular: bool,
}

impl Fit {
    pub fn level(&self) -> u32 {
        self.function.basis.level()
    }

    pub fn order(&self) -> u32 {
        self.function.basis.order()
    }

    pub fn dim(&self) -> usize {
        self.function.basis.dim()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.function.coefficients
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.function.eval(x)
    }
}

/// Minimises the contrast over `basis`, using only the samples in its interval.
///
/// When the Gram matrix has condition number above [`SINGULAR_CONDITION`] the
/// fit is flagged singular and solved with the ridge
/// `ridge_factor * trace / dim`.
pub fn fit_ls(basis: &SplineBasis, xs: &[f64], responses: &[f64], ridge_factor: f64) -> Result<Fit> {
    let mut system = assemble(basis, xs, responses)?;
    let dim = system.dim;
    let ill_conditioned = !(system.condition_estimate <= SINGULAR_CONDITION);
    let mut singular = ill_conditioned || dim > system.n_in_a;
    if ill_conditioned {
        let ridge = ridge_factor * system.trace() / dim as f64;
        for i in 0..dim {
            system.gram[i * dim + i] += ridge;
        }
    }
    let coefficients = match crate::linalg::cholesky_solve(&system.gram, dim, &system.moment) {
        Some(c) if c.iter().all(|v| v.is_finite()) => c,
        _ => {
            singular = true;
            alloc::vec![0.0; dim]
        }
    };
    let function = FittedFunction {
        basis: *basis,
        coefficients,
    };
    let mut sum = 0.0;
    for (&x, &y) in xs.iter().zip(responses) {
        if basis.interval().contains(x) {
            let residual = function.eval(x) - y;
            sum += residual * residual;
        }
    }
    let contrast = if xs.is_empty() { 0.0 } else { sum / xs.len() as f64 };
    Ok(Fit {
        function,
        contrast,
        n_in_a: system.n_in_a,
        condition: system.condition_estimate,
        singular,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    /// `kappa xi0^4 D / (n delta)`.
    G,
    /// `kappa sigma0^4 D / n`.
    Sigma,
    /// `kappa sigma0^2 / n`, independent of the dimension.
    SigmaLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    pub kind: PenaltyKind,
    pub kappa: f64,
    pub bounds: Bounds,
}

impl Penalty {
    pub fn g(kappa: f64, bounds: Bounds) -> Self {
        Penalty {
            kind: PenaltyKind::G,
            kappa,
            bounds,
        }
    }

    pub fn sigma(kappa: f64, bounds: Bounds) -> Self {
        Penalty {
            kind: PenaltyKind::Sigma,
            kappa,
            bounds,
        }
    }

    pub fn value(&self, level: u32, order: u32, n: usize, delta: f64) -> f64 {
        self.value_for_dim((1usize << level) + order as usize, n, delta)
    }

    pub fn value_for_dim(&self, dim: usize, n: usize, delta: f64) -> f64 {
        let d = dim as f64;
        let n = n as f64;
        match self.kind {
            PenaltyKind::G => {
                let xi0_4 = self.bounds.xi0_sq * self.bounds.xi0_sq;
                self.kappa * xi0_4 * d / (n * delta)
            }
            PenaltyKind::Sigma => {
                let sigma0_4 = self.bounds.sigma0_sq * self.bounds.sigma0_sq;
                self.kappa * sigma0_4 * d / n
            }
            PenaltyKind::SigmaLiteral => self.kappa * self.bounds.sigma0_sq / n,
        }
    }
}

/// The `(m, r)` search grid: `r <= max_order`, `m <= max_level`,
/// `2^m + r <= dim_cap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub max_level: u32,
    pub max_order: u32,
    pub dim_cap: f64,
}

impl GridConfig {
    pub const MAX_LEVEL: u32 = 7;

    /// Default grid for `n` increments at step `delta`: `D <= sqrt(n delta)`.
    pub fn for_sample(n: usize, delta: f64) -> Self {
        GridConfig {
            max_level: Self::MAX_LEVEL,
            max_order: MAX_ORDER,
            dim_cap: math::sqrt(n as f64 * delta),
        }
    }

    /// Grid points ordered by `r`, then `m`.
    pub fn points(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for r in 0..=self.max_order.min(MAX_ORDER) {
            for m in 0..=self.max_level {
                let dim = (1usize << m) + r as usize;
                if dim as f64 <= self.dim_cap {
                    out.push((m, r));
                }
            }
        }
        out
    }
}

/// A grid fit together with its penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFit {
    pub fit: Fit,
    pub penalty: f64,
}

impl GridFit {
    pub fn criterion(&self) -> f64 {
        self.fit.contrast + self.penalty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveResult {
    pub fits: Vec<GridFit>,
    /// Index of the selected entry of `fits`.
    pub selected: usize,
}

impl AdaptiveResult {
    pub fn selected_fit(&self) -> &Fit {
        &self.fits[self.selected].fit
    }

    pub fn selected_level(&self) -> u32 {
        self.selected_fit().level()
    }

    pub fn selected_order(&self) -> u32 {
        self.selected_fit().order()
    }

    pub fn selected_criterion(&self) -> f64 {
        self.fits[self.selected].criterion()
    }

    pub fn function(&self) -> &FittedFunction {
        &self.selected_fit().function
    }
}

/// Index of the selected entry: for each order the level with the smallest
/// penalised contrast, then the best order among those winners. Singular fits
/// are skipped; ties go to the smaller dimension, then the smaller order.
pub fn select(fits: &[GridFit]) -> Result<usize> {
    if fits.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let better = |a: &GridFit, b: &GridFit| {
        let (ca, cb) = (a.criterion(), b.criterion());
        ca < cb
            || (ca == cb
                && (a.fit.dim(), a.fit.order()) < (b.fit.dim(), b.fit.order()))
    };
    let mut orders: Vec<u32> = fits.iter().map(|f| f.fit.order()).collect();
    orders.sort_unstable();
    orders.dedup();
    let mut best: Option<usize> = None;
    for order in orders {
        let mut winner: Option<usize> = None;
        for (i, f) in fits.iter().enumerate() {
            if f.fit.singular || f.fit.order() != order || !f.criterion().is_finite() {
                continue;
            }
            if winner.is_none_or(|w| better(f, &fits[w])) {
                winner = Some(i);
            }
        }
        if let Some(w) = winner {
            if best.is_none_or(|b| better(&fits[w], &fits[b])) {
                best = Some(w);
            }
        }
    }
    best.ok_or(Error::AllSingular)
}

/// Fits every grid space to `(xs, responses)` and selects one.
///
/// `n` in the penalty is `xs.len()`.
pub fn adaptive_fit(
    xs: &[f64],
    responses: &[f64],
    interval: &Interval,
    penalty: &Penalty,
    grid: &GridConfig,
    delta: f64,
) -> Result<AdaptiveResult> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut fits = Vec::with_capacity(points.len());
    for (m, r) in points {
        let basis = build_basis(*interval, m, r)?;
        let fit = fit_ls(&basis, xs, responses, DEFAULT_RIDGE_FACTOR)?;
        let penalty = penalty.value(m, r, xs.len(), delta);
        fits.push(GridFit { fit, penalty });
    }
    let selected = select(&fits)?;
    Ok(AdaptiveResult { fits, selected })
}

/// Adaptive estimator of `g = sigma^2 + xi^2` on `interval`.
pub fn estimate_g(path: &Path, interval: &Interval, bounds: &Bounds, kappa: f64) -> Result<AdaptiveResult> {
    let grid = GridConfig::for_sample(path.n(), path.delta);
    estimate_g_on(path, interval, &Penalty::g(kappa, *bounds), &grid)
}

pub fn estimate_g_on(
    path: &Path,
    interval: &Interval,
    penalty: &Penalty,
    grid: &GridConfig,
) -> Result<AdaptiveResult> {
    path.validate()?;
    let responses = increments(path);
    adaptive_fit(path.design_points(), &responses, interval, penalty, grid, path.delta)
}

/// Adaptive estimator of `sigma^2` on `interval` from jump-truncated increments.
pub fn estimate_sigma2(
    path: &Path,
    interval: &Interval,
    bounds: &Bounds,
    kappa: f64,
) -> Result<AdaptiveResult> {
    let grid = GridConfig::for_sample(path.n(), path.delta);
    let rule = TruncationRule::from_bounds(bounds, path.n(), path.delta);
    estimate_sigma2_on(path, interval, &Penalty::sigma(kappa, *bounds), &grid, &rule)
}

pub fn estimate_sigma2_on(
    path: &Path,
    interval: &Interval,
    penalty: &Penalty,
    grid: &GridConfig,
    rule: &TruncationRule,
) -> Result<AdaptiveResult> {
    path.validate()?;
    let responses = truncate(path, rule);
    adaptive_fit(path.design_points(), &responses, interval, penalty, grid, path.delta)
}

/// `xi^2` estimate as the pointwise difference of the two adaptive fits.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSquaredEstimate {
    pub g: FittedFunction,
    pub sigma2: FittedFunction,
    /// Report `max(difference, 0)` instead of the raw difference.
    pub clip_at_zero: bool,
}

impl XiSquaredEstimate {
    pub fn eval(&self, x: f64) -> f64 {
        let diff = self.g.eval(x) - self.sigma2.eval(x);
        if self.clip_at_zero && diff < 0.0 {
            0.0
        } else {
            diff
        }
    }
}

pub fn estimate_xi2(g: &AdaptiveResult, sigma2: &AdaptiveResult, clip_at_zero: bool) -> XiSquaredEstimate {
    XiSquaredEstimate {
        g: g.function().clone(),
        sigma2: sigma2.function().clone(),
        clip_at_zero,
    }
}
