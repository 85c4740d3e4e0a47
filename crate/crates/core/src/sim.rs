//! Euler simulation of a jump diffusion with exactly embedded jump times.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::levy::{JumpDraw, JumpSampler};
use crate::math;
use crate::model::ModelSpec;

/// Largest internal Euler step used by [`SimConfig::new`].
pub const MAX_EULER_STEP: f64 = 1e-4;
pub const DEFAULT_BURN_IN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Number of increments; the path has `n + 1` observations.
    pub n: usize,
    pub delta: f64,
    /// Euler steps per observation interval.
    pub substeps: usize,
    /// Simulated warm-up time discarded before `X_0`.
    pub burn_in: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Config with the default refinement (`delta / substeps <= 1e-4`) and warm-up.
    pub fn new(n: usize, delta: f64, seed: u64) -> Self {
        SimConfig {
            n,
            delta,
            substeps: default_substeps(delta),
            burn_in: DEFAULT_BURN_IN,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSimConfig("n must be at least 2"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidSimConfig("delta must be positive and finite"));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidSimConfig("substeps must be at least 1"));
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return Err(Error::InvalidSimConfig("burn_in must be non-negative and finite"));
        }
        Ok(())
    }
}

pub fn default_substeps(delta: f64) -> usize {
    let steps = math::round(delta / MAX_EULER_STEP);
    if steps >= 1.0 {
        steps as usize
    } else {
        1
    }
}

/// Discretely observed trajectory `X_0, X_delta, ..., X_{n delta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub delta: f64,
    pub values: Vec<f64>,
    pub model_name: String,
    pub seed: u64,
}

impl Path {
    pub fn new(delta: f64, values: Vec<f64>) -> Result<Self> {
        let path = Path {
            delta,
            values,
            model_name: String::new(),
            seed: 0,
        };
        path.validate()?;
        Ok(path)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::NonPositiveStep(self.delta));
        }
        if self.values.len() < 3 {
            return Err(Error::PathTooShort {
                needed: 2,
                got: self.values.len().saturating_sub(1),
            });
        }
        if let Some(step) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                step,
                time: step as f64 * self.delta,
            });
        }
        Ok(())
    }

    /// Number of increments.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// Left end points `X_0, ..., X_{(n-1) delta}` of the increments.
    pub fn design_points(&self) -> &[f64] {
        &self.values[..self.n()]
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.delta)
    }
}

/// Normalised squared increments `T_k = (X_{k+1} - X_k)^2 / delta`, `k = 0..n`.
pub fn increments(path: &Path) -> Vec<f64> {
    path.values
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            d * d / path.delta
        })
        .collect()
}

/// Simulates `cfg.n` observation intervals of `model`.
///
/// Each interval is split into `cfg.substeps` Euler steps; inside a step the
/// jumps are drawn first, then the state is moved by Euler increments between
/// consecutive jump times and by `xi(X_{t-}) * z` at each jump. The warm-up
/// segment is simulated from `model.initial_law` and discarded. The output is
/// a deterministic function of `(model, cfg)`.
pub fn simulate(model: &ModelSpec, cfg: &SimConfig) -> Result<Path> {
    run(model, cfg, |_| {})
}

fn run(model: &ModelSpec, cfg: &SimConfig, mut on_jump: impl FnMut(f64)) -> Result<Path> {
    cfg.validate()?;
    let h = cfg.delta / cfg.substeps as f64;
    let sampler = JumpSampler::new(&model.levy, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = JumpDraw::default();

    let mut x = model.initial_law.sample(&mut rng);
    let burn_steps = math::round(cfg.burn_in / h) as usize;
    for step in 0..burn_steps {
        x = substep(model, &sampler, x, &mut rng, &mut draw, &mut |_| {});
        if !x.is_finite() {
            return Err(Error::NonFiniteState {
                step: 0,
                time: -cfg.burn_in + step as f64 * h,
            });
        }
    }

    let mut values = Vec::with_capacity(cfg.n + 1);
    values.push(x);
    for k in 0..cfg.n {
        for _ in 0..cfg.substeps {
            x = substep(model, &sampler, x, &mut rng, &mut draw, &mut on_jump);
        }
        if !x.is_finite() {
            return Err(Error::NonFiniteState {
                step: k + 1,
                time: (k + 1) as f64 * cfg.delta,
            });
        }
        values.push(x);
    }

    Ok(Path {
        delta: cfg.delta,
        values,
        model_name: String::from(model.name.as_ref()),
        seed: cfg.seed,
    })
}

#[inline]
fn euler(model: &ModelSpec, x: f64, dt: f64, rng: &mut ChaCha8Rng) -> f64 {
    if dt <= 0.0 {
        return x;
    }
    let z: f64 = StandardNormal.sample(rng);
    x + (model.drift)(x) * dt + (model.diffusion)(x) * math::sqrt(dt) * z
}

fn substep(
    model: &ModelSpec,
    sampler: &JumpSampler,
    mut x: f64,
    rng: &mut ChaCha8Rng,
    draw: &mut JumpDraw,
    on_jump: &mut impl FnMut(f64),
) -> f64 {
    let h = sampler.dt();
    sampler.sample_into(rng, draw);
    let mut t = 0.0;
    for &(offset, size) in &draw.jumps {
        x = euler(model, x, offset - t, rng);
        // left limit
        x += (model.jump_coeff)(x) * size;
        on_jump(size);
        t = offset;
    }
    x = euler(model, x, h - t, rng);
    if draw.compensator != 0.0 {
        x += (model.jump_coeff)(x) * draw.compensator;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{JumpLaw, LevyMeasure};
    use crate::model::{builtin_model, InitialLaw};
    use alloc::borrow::Cow;

    fn zero(_: f64) -> f64 {
        0.0
    }
    fn one(_: f64) -> f64 {
        1.0
    }
    fn ou(x: f64) -> f64 {
        -2.0 * x
    }

    fn frozen() -> ModelSpec {
        ModelSpec {
            name: Cow::Borrowed("frozen"),
            drift: zero,
            diffusion: zero,
            jump_coeff: zero,
            levy: LevyMeasure::CompoundPoisson {
                intensity: 1.0,
                jump_law: JumpLaw::Binomial,
            },
            initial_law: InitialLaw::Point(1.25),
        }
    }

    #[test]
    fn zero_dynamics_constant_path() {
        let path = simulate(&frozen(), &SimConfig::new(50, 0.1, 3)).unwrap();
        assert_eq!(path.values.len(), 51);
        assert!(path.values.iter().all(|&v| v == 1.25));
        assert!(increments(&path).iter().all(|&t| t == 0.0));
    }

    #[test]
    fn increments_of_small_path() {
        let path = Path::new(0.5, alloc::vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(increments(&path), alloc::vec![2.0, 2.0]);
        assert_eq!(path.design_points(), &[0.0, 1.0]);
    }

    #[test]
    fn invalid_paths() {
        assert!(Path::new(0.0, alloc::vec![0.0, 1.0, 2.0]).is_err());
        assert!(Path::new(0.1, alloc::vec![0.0, 1.0]).is_err());
        assert!(Path::new(0.1, alloc::vec![0.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn invalid_config() {
        let model = frozen();
        let mut cfg = SimConfig::new(10, 0.1, 0);
        cfg.substeps = 0;
        assert!(simulate(&model, &cfg).is_err());
        assert!(simulate(&model, &SimConfig::new(1, 0.1, 0)).is_err());
        assert!(simulate(&model, &SimConfig::new(10, -0.1, 0)).is_err());
    }

    #[test]
    fn default_refinement() {
        assert_eq!(default_substeps(1e-4), 1);
        assert_eq!(default_substeps(1e-5), 1);
        assert_eq!(default_substeps(1e-3), 10);
        assert_eq!(default_substeps(0.1), 1000);
    }

    #[test]
    fn same_seed_same_path() {
        let model = builtin_model("1").unwrap();
        let cfg = SimConfig::new(500, 1e-2, 99);
        let a = simulate(&model, &cfg).unwrap();
        let b = simulate(&model, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate(&model, &SimConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn pure_jump_path_moves_by_the_sampled_jumps() {
        let model = ModelSpec {
            name: Cow::Borrowed("pure-jump"),
            drift: zero,
            diffusion: zero,
            jump_coeff: one,
            levy: LevyMeasure::CompoundPoisson {
                intensity: 3.0,
                jump_law: JumpLaw::Binomial,
            },
            initial_law: InitialLaw::Point(0.0),
        };
        let cfg = SimConfig {
            burn_in: 0.0,
            ..SimConfig::new(200, 0.05, 8)
        };
        let mut jumps = Vec::new();
        let path = run(&model, &cfg, |z| jumps.push(z)).unwrap();
        assert!(!jumps.is_empty());
        let total: f64 = jumps.iter().sum();
        assert_eq!(path.values[cfg.n] - path.values[0], total);
    }

    #[test]
    fn diverging_model_reports_step() {
        fn explode(x: f64) -> f64 {
            x * x * x + 1.0
        }
        let model = ModelSpec {
            drift: explode,
            ..frozen()
        };
        let cfg = SimConfig {
            burn_in: 0.0,
            substeps: 1,
            ..SimConfig::new(10_000, 0.5, 1)
        };
        match simulate(&model, &cfg) {
            Err(Error::NonFiniteState { step, .. }) => assert!(step >= 1),
            other => panic!("expected non-finite state, got {other:?}"),
        }
    }

    #[test]
    fn ou_without_jumps_stationary_variance() {
        let model = ModelSpec {
            name: Cow::Borrowed("ou"),
            drift: ou,
            diffusion: one,
            jump_coeff: zero,
            levy: LevyMeasure::CompoundPoisson {
                intensity: 1.0,
                jump_law: JumpLaw::Binomial,
            },
            initial_law: InitialLaw::Point(0.0),
        };
        // nΔ = 2000 time units; correlation time 1/2
        let path = simulate(&model, &SimConfig::new(200_000, 1e-2, 17)).unwrap();
        let n = path.values.len() as f64;
        let mean = path.values.iter().sum::<f64>() / n;
        let var = path.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((var - 0.25).abs() < 0.025, "variance {var}");
    }

    #[test]
    fn model1_quadratic_variation() {
        let model = builtin_model("1").unwrap();
        let path = simulate(&model, &SimConfig::new(100_000, 1e-3, 5)).unwrap();
        let t = increments(&path);
        assert_eq!(t.len(), 100_000);
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        assert!((mean - 2.0).abs() < 0.2, "mean increment {mean}");
    }
}
