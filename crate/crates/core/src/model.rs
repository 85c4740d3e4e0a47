//! Model descriptions and the four built-in benchmark models.

use alloc::borrow::Cow;
use alloc::string::ToString;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::levy::{second_moment, JumpLaw, LevyMeasure};
use crate::math;

pub type ScalarFn = fn(f64) -> f64;

/// Law of the starting point `X_0` before warm-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw {
    Point(f64),
    Normal { mean: f64, sd: f64 },
}

impl InitialLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialLaw::Point(x) => x,
            InitialLaw::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }
}

/// `dX_t = b(X_t) dt + sigma(X_t) dW_t + xi(X_{t-}) dL_t`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: Cow<'static, str>,
    pub drift: ScalarFn,
    pub diffusion: ScalarFn,
    pub jump_coeff: ScalarFn,
    pub levy: LevyMeasure,
    pub initial_law: InitialLaw,
}

impl ModelSpec {
    pub fn sigma2(&self, x: f64) -> f64 {
        let s = (self.diffusion)(x);
        s * s
    }

    pub fn xi2(&self, x: f64) -> f64 {
        let s = (self.jump_coeff)(x);
        s * s
    }

    /// Conditional mean of the squared normalised increment in the small-step
    /// limit: `sigma^2(x) + xi^2(x) * int z^2 nu(dz)`.
    ///
    /// Equals `sigma^2 + xi^2` whenever the Lévy measure has unit second
    /// moment, which holds for the compound Poisson models.
    pub fn g(&self, x: f64) -> f64 {
        self.sigma2(x) + self.xi2(x) * second_moment(&self.levy)
    }

    /// Same model with a different Lévy measure.
    pub fn with_levy(mut self, levy: LevyMeasure) -> Self {
        self.levy = levy;
        self
    }
}

fn ou_drift(x: f64) -> f64 {
    -2.0 * x
}

fn one(_: f64) -> f64 {
    1.0
}

fn rational_diffusion(x: f64) -> f64 {
    let x2 = x * x;
    (x2 + 3.0) / (x2 + 1.0)
}

fn sine_drift(x: f64) -> f64 {
    -2.0 * x + math::sin(3.0 * x)
}

fn sine_diffusion(x: f64) -> f64 {
    math::sqrt(2.0 + 0.5 * math::sin(core::f64::consts::PI * x))
}

/// Built-in model by id `1..=4` or by name (`"1"`, `"model1"`, `"ou"`, ...).
///
/// * 1: Ornstein-Uhlenbeck, `b = -2x`, `sigma = xi = 1`, binomial jumps.
/// * 2: `b = -2x`, `sigma = (x^2+3)/(x^2+1)`, `xi = 1`, unit-variance Laplace jumps.
/// * 3: `b = -2x + sin(3x)`, `sigma = xi = sqrt(2 + 0.5 sin(pi x))`, normal jumps.
/// * 4: `b = -2x`, `sigma = xi = 1`, dyadic atoms truncated at level 25.
pub fn builtin_model(id: &str) -> Result<ModelSpec> {
    builtin_model_by_id(parse_model_id(id)?)
}

/// Numeric id of a built-in model name.
pub fn parse_model_id(id: &str) -> Result<u32> {
    let key = id.trim().to_ascii_lowercase();
    match key.as_str() {
        "1" | "model1" | "model-1" | "ou" => Ok(1),
        "2" | "model2" | "model-2" => Ok(2),
        "3" | "model3" | "model-3" => Ok(3),
        "4" | "model4" | "model-4" => Ok(4),
        _ => Err(Error::UnknownModel(id.to_string())),
    }
}

pub fn builtin_model_by_id(id: u32) -> Result<ModelSpec> {
    let compound = |jump_law| LevyMeasure::CompoundPoisson {
        intensity: 1.0,
        jump_law,
    };
    let model = match id {
        1 => ModelSpec {
            name: Cow::Borrowed("model1"),
            drift: ou_drift,
            diffusion: one,
            jump_coeff: one,
            levy: compound(JumpLaw::Binomial),
            initial_law: InitialLaw::Point(0.0),
        },
        2 => ModelSpec {
            name: Cow::Borrowed("model2"),
            drift: ou_drift,
            diffusion: rational_diffusion,
            jump_coeff: one,
            levy: compound(JumpLaw::unit_laplace()),
            initial_law: InitialLaw::Point(0.0),
        },
        3 => ModelSpec {
            name: Cow::Borrowed("model3"),
            drift: sine_drift,
            diffusion: sine_diffusion,
            jump_coeff: sine_diffusion,
            levy: compound(JumpLaw::StandardNormal),
            initial_law: InitialLaw::Point(0.0),
        },
        4 => ModelSpec {
            name: Cow::Borrowed("model4"),
            drift: ou_drift,
            diffusion: one,
            jump_coeff: one,
            levy: LevyMeasure::DiscreteAtoms {
                truncation_level: LevyMeasure::DEFAULT_TRUNCATION,
            },
            initial_law: InitialLaw::Point(0.0),
        },
        other => return Err(Error::UnknownModel(alloc::format!("{other}"))),
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let m1 = builtin_model("1").unwrap();
        assert_eq!((m1.drift)(1.0), -2.0);
        assert_eq!(m1.g(0.3), 2.0);

        let m2 = builtin_model("model2").unwrap();
        assert_eq!((m2.diffusion)(0.0), 3.0);
        assert_eq!(m2.sigma2(1.0), 4.0);
        assert!((m2.g(0.0) - 10.0).abs() < 1e-14);

        let m3 = builtin_model("3").unwrap();
        assert!((m3.sigma2(0.5) - 2.5).abs() < 1e-14);
        assert!((m3.xi2(0.5) - 2.5).abs() < 1e-14);
        assert!(((m3.drift)(0.0)).abs() < 1e-15);

        let m4 = builtin_model("4").unwrap();
        assert_eq!(m4.sigma2(7.0), 1.0);
        assert_eq!(
            m4.levy,
            LevyMeasure::DiscreteAtoms {
                truncation_level: 25
            }
        );
        // second moment of the truncated atoms is 4 - 2^-23
        assert!((m4.g(0.0) - (5.0 - math::exp2i(-23))).abs() < 1e-14);
    }

    #[test]
    fn positive_coefficients_on_a_wide_range() {
        for id in 1..=4 {
            let model = builtin_model_by_id(id).unwrap();
            for i in 0..=2000 {
                let x = -10.0 + i as f64 * 0.01;
                assert!(model.sigma2(x) > 0.0 && model.xi2(x) > 0.0);
            }
        }
    }

    #[test]
    fn unknown_model() {
        assert!(matches!(builtin_model("5"), Err(Error::UnknownModel(_))));
        assert!(builtin_model_by_id(0).is_err());
        assert!(builtin_model(" Model3 ").is_ok());
    }
}
