use jumpvol_core::{JumpLaw, JumpSampler, LevyMeasure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `|mean(samples) - expected| / standard error`.
fn z_score(samples: &[f64], expected: f64) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean - expected).abs() / (var / n).sqrt()
}

fn totals(levy: &LevyMeasure, dt: f64, draws: usize, seed: u64) -> Vec<f64> {
    let sampler = JumpSampler::new(levy, dt).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws).map(|_| sampler.sample(&mut rng).total()).collect()
}

// compound Poisson with rate 1 over dt: E S^2 = dt m2, E S^4 = dt m4 + 3 (dt m2)^2
#[test]
fn compound_poisson_moments() {
    let dt = 0.5;
    for (law, m4) in [
        (JumpLaw::Binomial, 1.0),
        (JumpLaw::unit_laplace(), 6.0),
        (JumpLaw::StandardNormal, 3.0),
    ] {
        let levy = LevyMeasure::CompoundPoisson { intensity: 1.0, jump_law: law };
        for seed in 0..3 {
            let s = totals(&levy, dt, 40_000, seed);
            let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
            let quart: Vec<f64> = sq.iter().map(|v| v * v).collect();
            assert!(z_score(&s, 0.0) < 4.0, "{law:?} mean");
            assert!(z_score(&sq, dt) < 4.0, "{law:?} second moment");
            assert!(z_score(&quart, dt * m4 + 3.0 * dt * dt) < 4.0, "{law:?} fourth moment");
        }
    }
}

// sum_{k<=K} 2 * 2^{k+1} * 2^{-2k} = 4 (1 - 2^-K)
#[test]
fn dyadic_atom_moments() {
    for levels in [3u32, 10, 25] {
        let levy = LevyMeasure::DiscreteAtoms { truncation_level: levels };
        let m2 = 4.0 * (1.0 - 2f64.powi(-(levels as i32)));
        let dt = 0.01;
        let s = totals(&levy, dt, 40_000, 7);
        let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
        assert!(z_score(&s, 0.0) < 4.0, "K={levels} mean");
        assert!(z_score(&sq, dt * m2) < 4.0, "K={levels} second moment");
    }
}

#[test]
fn jump_offsets_are_sorted_and_inside_the_step() {
    let levy = LevyMeasure::CompoundPoisson { intensity: 1.0, jump_law: JumpLaw::StandardNormal };
    let sampler = JumpSampler::new(&levy, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let draw = sampler.sample(&mut rng);
        assert!(draw.jumps.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(draw.jumps.iter().all(|&(t, _)| (0.0..5.0).contains(&t)));
    }
}
