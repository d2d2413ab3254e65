//! Normal noise on travel times, handling times and leg energy.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{LegRef, ProblemInstance};
use crate::error::{Error, Result};

/// Coefficients of variation of the perturbed quantities and the Monte
/// Carlo budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StochasticConfig {
    pub cv_travel: f64,
    pub cv_handling: f64,
    pub cv_energy: f64,
    pub runs: usize,
    pub master_seed: u64,
}

impl Default for StochasticConfig {
    fn default() -> Self {
        Self::uniform(0.05, 1000, 0)
    }
}

impl StochasticConfig {
    /// Same coefficient of variation on every quantity.
    pub fn uniform(cv: f64, runs: usize, master_seed: u64) -> Self {
        Self {
            cv_travel: cv,
            cv_handling: cv,
            cv_energy: cv,
            runs,
            master_seed,
        }
    }

    pub fn deterministic() -> Self {
        Self::uniform(0.0, 1, 0)
    }

    pub fn is_deterministic(&self) -> bool {
        self.cv_travel == 0.0 && self.cv_handling == 0.0 && self.cv_energy == 0.0
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("cv_travel", self.cv_travel),
            ("cv_handling", self.cv_handling),
            ("cv_energy", self.cv_energy),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be a finite value >= 0, got {v}"
                )));
            }
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws from N(x, cv * x) truncated below at zero. `cv = 0` returns `x`
/// exactly; one standard normal is consumed per accepted draw either way.
pub fn sample_perturbation<R: Rng + ?Sized>(nominal: f64, cv: f64, rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let x = nominal + cv * nominal * z;
        if x >= 0.0 {
            return x;
        }
    }
}

/// Realized values of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegNoise {
    pub travel_h: f64,
    pub unload_h: f64,
    pub load_h: f64,
    pub energy_kwh: f64,
}

/// Realized values of every leg, indexed `[vehicle][leg]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub legs: Vec<Vec<LegNoise>>,
}

impl Realization {
    pub fn nominal(inst: &ProblemInstance) -> Self {
        Self::build(inst, |x, _| x)
    }

    /// Draws in a fixed order (vehicle, leg, then travel, unload, load,
    /// energy) so that different policies see the same noise for a seed.
    pub fn draw<R: Rng + ?Sized>(
        inst: &ProblemInstance,
        cfg: &StochasticConfig,
        rng: &mut R,
    ) -> Self {
        let cvs = [
            cfg.cv_travel,
            cfg.cv_handling,
            cfg.cv_handling,
            cfg.cv_energy,
        ];
        Self::build(inst, |x, i| sample_perturbation(x, cvs[i], rng))
    }

    fn build(inst: &ProblemInstance, mut f: impl FnMut(f64, usize) -> f64) -> Self {
        let legs = inst
            .vehicles
            .iter()
            .enumerate()
            .map(|(k, v)| {
                (0..v.itinerary.len())
                    .map(|l| {
                        let leg = &v.itinerary[l];
                        let energy = inst.leg_energy(LegRef { vehicle: k, leg: l });
                        LegNoise {
                            travel_h: f(leg.travel_h, 0),
                            unload_h: f(leg.unload_h, 1),
                            load_h: f(leg.load_h, 2),
                            energy_kwh: f(energy, 3),
                        }
                    })
                    .collect()
            })
            .collect();
        Self { legs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_cv_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_perturbation(120.0, 0.0, &mut rng), 120.0);
            assert_eq!(sample_perturbation(0.0, 0.05, &mut rng), 0.0);
        }
    }

    #[test]
    fn moments_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_perturbation(100.0, 0.05, &mut rng))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 100.0).abs() < 1.0, "{mean}");
        assert!((sd - 5.0).abs() < 0.5, "{sd}");
    }

    #[test]
    fn truncated_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..10_000).all(|_| sample_perturbation(1.0, 2.0, &mut rng) >= 0.0));
    }
}
