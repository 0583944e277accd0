use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Verify,
    Deploy,
    Evaluate,
}

impl Phase {
    /// (mean, std-dev) in milliseconds observed on the physical testbed.
    fn scale_ms(self) -> (f64, f64) {
        match self {
            Phase::Verify => (2.49, 2.94),
            Phase::Deploy => (40_377.0, 25_187.3),
            Phase::Evaluate => (440_864.0, 169_850.88),
        }
    }
}

/// Optional artificial latency for simulated actions.
///
/// Durations are drawn from a normal distribution at the testbed scale,
/// clamped at zero and multiplied by `factor`; `factor = 0` disables it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LatencyModel {
    pub factor: f64,
}

impl LatencyModel {
    pub const NONE: LatencyModel = LatencyModel { factor: 0.0 };

    pub fn scaled(factor: f64) -> Self {
        Self {
            factor: factor.max(0.0),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.factor > 0.0
    }

    pub fn sample(&self, phase: Phase, experiment: &str, seed: u64) -> Duration {
        if !self.is_enabled() {
            return Duration::ZERO;
        }
        let (mean, sd) = phase.scale_ms();
        let salt = experiment
            .bytes()
            .fold(phase as u64 + 1, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
        let ms = Normal::new(mean, sd)
            .expect("finite parameters")
            .sample(&mut rng)
            .max(0.0);
        Duration::from_secs_f64(ms * self.factor / 1000.0)
    }

    pub fn pause(&self, phase: Phase, experiment: &str, seed: u64) {
        let d = self.sample(phase, experiment, seed);
        if !d.is_zero() {
            std::thread::sleep(d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_is_zero() {
        assert_eq!(LatencyModel::NONE.sample(Phase::Deploy, "e", 1), Duration::ZERO);
    }

    #[test]
    fn scaled_mean_tracks_testbed_scale() {
        let m = LatencyModel::scaled(0.001);
        let n = 400;
        let total: f64 = (0..n)
            .map(|i| m.sample(Phase::Deploy, &format!("e{i}"), 9).as_secs_f64() * 1000.0)
            .sum();
        let mean = total / n as f64;
        // 40 s at 1/1000 scale; clamping at zero nudges it upward slightly.
        assert!((35.0..50.0).contains(&mean), "mean {mean}");
    }
}
