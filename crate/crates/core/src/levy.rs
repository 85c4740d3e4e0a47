//! Lévy jump laws and samplers for the jump part over one time step.
//!
//! Two families are supported: compound Poisson processes with a centred
//! jump law, and the symmetric dyadic atom measure
//! `sum_k 2^{k+1} (delta_{2^-k} + delta_{-2^-k})`, truncated at a finite
//! level.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::math;

/// Law of a single compound-Poisson jump. Every variant is centred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpLaw {
    /// `+1` or `-1` with probability one half each.
    Binomial,
    /// Density `(lambda / 2) exp(-lambda |z|)`.
    Laplace { lambda: f64 },
    StandardNormal,
}

impl JumpLaw {
    /// Laplace law scaled to unit variance.
    pub fn unit_laplace() -> Self {
        JumpLaw::Laplace {
            lambda: core::f64::consts::SQRT_2,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            JumpLaw::Binomial | JumpLaw::StandardNormal => 1.0,
            JumpLaw::Laplace { lambda } => 2.0 / (lambda * lambda),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Binomial => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            JumpLaw::Laplace { lambda } => {
                let magnitude: f64 = Exp::new(lambda)
                    .expect("laplace rate validated on construction")
                    .sample(rng);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            JumpLaw::StandardNormal => StandardNormal.sample(rng),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::Laplace { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::InvalidLevy("laplace rate must be positive and finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Lévy measure of the driving pure-jump process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyMeasure {
    CompoundPoisson { intensity: f64, jump_law: JumpLaw },
    /// Atoms at `+-2^-k` with mass `2^{k+1}` for `k = 1..=truncation_level`.
    DiscreteAtoms { truncation_level: u32 },
}

impl LevyMeasure {
    pub const DEFAULT_TRUNCATION: u32 = 25;

    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyMeasure::CompoundPoisson {
                intensity,
                jump_law,
            } => {
                if !(intensity > 0.0 && intensity.is_finite()) {
                    return Err(Error::InvalidLevy("intensity must be positive and finite"));
                }
                jump_law.validate()
            }
            LevyMeasure::DiscreteAtoms { truncation_level } => {
                if truncation_level == 0 {
                    Err(Error::InvalidLevy("truncation level must be at least 1"))
                } else if truncation_level > 60 {
                    Err(Error::InvalidLevy("truncation level must be at most 60"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Signed atoms `(position, mass)` of a [`LevyMeasure::DiscreteAtoms`]
    /// measure, `+` and `-` interleaved per level. Empty for compound Poisson.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match *self {
            LevyMeasure::CompoundPoisson { .. } => Vec::new(),
            LevyMeasure::DiscreteAtoms { truncation_level } => (1..=truncation_level as i32)
                .flat_map(|k| {
                    let pos = math::exp2i(-k);
                    let mass = math::exp2i(k + 1);
                    [(pos, mass), (-pos, mass)]
                })
                .collect(),
        }
    }

    /// `sum position * mass` over the atoms; zero by symmetry.
    pub fn compensator_rate(&self) -> f64 {
        self.atoms().iter().map(|&(z, mass)| z * mass).sum()
    }
}

/// `int z^2 nu(dz)` in closed form.
pub fn second_moment(levy: &LevyMeasure) -> f64 {
    match *levy {
        LevyMeasure::CompoundPoisson {
            intensity,
            jump_law,
        } => intensity * jump_law.variance(),
        // 2 * 2^{k+1} * 2^{-2k} = 2^{2-k}
        LevyMeasure::DiscreteAtoms { truncation_level } => (1..=truncation_level as i32)
            .map(|k| math::exp2i(2 - k))
            .sum(),
    }
}

/// Jumps drawn over one step of length `dt`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpDraw {
    /// `(offset in [0, dt), size)`, sorted by offset.
    pub jumps: Vec<(f64, f64)>,
    /// Compensating drift `-dt * sum(position * mass)` to add over the step.
    pub compensator: f64,
}

impl JumpDraw {
    pub fn total(&self) -> f64 {
        self.jumps.iter().map(|&(_, z)| z).sum::<f64>() + self.compensator
    }
}

/// Jump sampler specialised to a fixed step length, with the Poisson laws
/// precomputed.
///
/// For the dyadic atom measure the two opposite atoms of a level are merged
/// into one net jump `2^-k (N_+ - N_-)` placed at a uniform time: the small
/// levels fire millions of times per unit time and embedding each of them
/// separately is out of reach. The law of the increment is unchanged.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    dt: f64,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Empty,
    CompoundPoisson {
        count: Poisson<f64>,
        law: JumpLaw,
    },
    Atoms {
        levels: Vec<(f64, Poisson<f64>)>,
        compensator: f64,
    },
}

impl JumpSampler {
    pub fn new(levy: &LevyMeasure, dt: f64) -> Result<Self> {
        levy.validate()?;
        if dt.is_nan() || dt < 0.0 || dt.is_infinite() {
            return Err(Error::NonPositiveStep(dt));
        }
        if dt == 0.0 {
            return Ok(JumpSampler {
                dt,
                kind: SamplerKind::Empty,
            });
        }
        let poisson = |mean: f64| {
            Poisson::new(mean).map_err(|_| Error::InvalidLevy("poisson mean out of range"))
        };
        let kind = match *levy {
            LevyMeasure::CompoundPoisson {
                intensity,
                jump_law,
            } => SamplerKind::CompoundPoisson {
                count: poisson(intensity * dt)?,
                law: jump_law,
            },
            LevyMeasure::DiscreteAtoms { truncation_level } => {
                let compensator = -dt * levy.compensator_rate();
                assert!(compensator == 0.0, "dyadic atoms must be symmetric");
                let levels = (1..=truncation_level as i32)
                    .map(|k| Ok((math::exp2i(-k), poisson(math::exp2i(k + 1) * dt)?)))
                    .collect::<Result<Vec<_>>>()?;
                SamplerKind::Atoms {
                    levels,
                    compensator,
                }
            }
        };
        Ok(JumpSampler { dt, kind })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JumpDraw {
        let mut draw = JumpDraw::default();
        self.sample_into(rng, &mut draw);
        draw
    }

    /// Like [`JumpSampler::sample`] but reuses the allocation of `draw`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, draw: &mut JumpDraw) {
        draw.jumps.clear();
        draw.compensator = 0.0;
        match &self.kind {
            SamplerKind::Empty => {}
            SamplerKind::CompoundPoisson { count, law } => {
                let count = count.sample(rng) as usize;
                for _ in 0..count {
                    let offset = rng.random::<f64>() * self.dt;
                    draw.jumps.push((offset, law.sample(rng)));
                }
            }
            SamplerKind::Atoms {
                levels,
                compensator,
            } => {
                for (size, count) in levels {
                    let up = count.sample(rng);
                    let down = count.sample(rng);
                    let net = up - down;
                    if net != 0.0 {
                        let offset = rng.random::<f64>() * self.dt;
                        draw.jumps.push((offset, net * size));
                    }
                }
                draw.compensator = *compensator;
            }
        }
        if draw.jumps.len() > 1 {
            draw.jumps.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        }
    }
}

/// Draws the jumps of `levy` over a step of length `dt`.
///
/// `dt == 0` yields an empty draw; negative or non-finite steps are rejected.
pub fn sample_jumps<R: Rng + ?Sized>(levy: &LevyMeasure, dt: f64, rng: &mut R) -> Result<JumpDraw> {
    Ok(JumpSampler::new(levy, dt)?.sample(rng))
}
