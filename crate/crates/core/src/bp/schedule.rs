use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::rng_from_seed;

/// Update order used by [`run_bp`](super::run_bp).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Synchronous,
    RoundRobin,
    Random,
    Rbp,
    Wdbp,
    Nibp,
}

impl std::str::FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "synchronous" => Ok(Self::Synchronous),
            "round_robin" | "round-robin" => Ok(Self::RoundRobin),
            "random" => Ok(Self::Random),
            "rbp" => Ok(Self::Rbp),
            "wdbp" => Ok(Self::Wdbp),
            "nibp" => Ok(Self::Nibp),
            other => Err(format!("unknown scheduler '{other}'")),
        }
    }
}

/// Chooses the next directed edge for asynchronous BP.
pub trait Scheduler {
    /// `residuals[m]` is `max_x |BP(μ)_m(x) − μ_m(x)|`.
    fn next(&mut self, residuals: &[f64]) -> usize;

    /// Hook applied to the freshly computed `μ_m(+1)` before it is stored.
    fn adjust(&mut self, _directed: usize, plus: f64) -> f64 {
        plus
    }
}

/// Lowest index wins ties.
pub(crate) fn argmax<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

pub struct RoundRobin {
    step: usize,
}

impl RoundRobin {
    pub fn new() -> Self {
        RoundRobin { step: 0 }
    }
}

impl Default for RoundRobin {
    fn default() -> Self {
        Self::new()
    }
}

impl Scheduler for RoundRobin {
    fn next(&mut self, residuals: &[f64]) -> usize {
        let m = self.step % residuals.len();
        self.step += 1;
        m
    }
}

pub struct RandomOrder {
    rng: ChaCha8Rng,
}

impl RandomOrder {
    pub fn new(seed: u64) -> Self {
        RandomOrder { rng: rng_from_seed(seed) }
    }
}

impl Scheduler for RandomOrder {
    fn next(&mut self, residuals: &[f64]) -> usize {
        self.rng.random_range(0..residuals.len())
    }
}

#[derive(Default)]
pub struct Residual;

impl Scheduler for Residual {
    fn next(&mut self, residuals: &[f64]) -> usize {
        argmax(residuals.iter().copied())
    }
}

/// Residual divided by the number of times the message was scheduled
/// (counts start at one).
pub struct WeightDecay {
    counts: Vec<u64>,
}

impl WeightDecay {
    pub fn new(directed: usize) -> Self {
        WeightDecay { counts: vec![1; directed] }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

impl Scheduler for WeightDecay {
    fn next(&mut self, residuals: &[f64]) -> usize {
        let m = argmax(residuals.iter().zip(&self.counts).map(|(r, &c)| r / c as f64));
        self.counts[m] += 1;
        m
    }
}

/// Residual scheduling plus Gaussian noise on messages caught repeating a
/// value from their last `window` updates.
pub struct NoiseInjection {
    history: Vec<VecDeque<f64>>,
    window: usize,
    noise: Normal<f64>,
    rng: ChaCha8Rng,
    injections: usize,
}

const REPEAT_TOL: f64 = 1e-9;
const NOISE_CLIP: f64 = 1e-12;

impl NoiseInjection {
    pub fn new(directed: usize, sigma: f64, window: usize, seed: u64) -> Self {
        NoiseInjection {
            history: vec![VecDeque::with_capacity(window); directed],
            window,
            noise: Normal::new(0.0, sigma).expect("sigma must be finite and non-negative"),
            rng: rng_from_seed(seed),
            injections: 0,
        }
    }

    pub fn injections(&self) -> usize {
        self.injections
    }
}

impl Scheduler for NoiseInjection {
    fn next(&mut self, residuals: &[f64]) -> usize {
        argmax(residuals.iter().copied())
    }

    fn adjust(&mut self, directed: usize, plus: f64) -> f64 {
        let past = &mut self.history[directed];
        // a message that no longer moves is settled, not oscillating
        let moved = past.back().is_none_or(|last| (last - plus).abs() >= REPEAT_TOL);
        let repeats = moved && past.iter().rev().skip(1).any(|v| (v - plus).abs() < REPEAT_TOL);
        let out = if repeats {
            self.injections += 1;
            let p = (plus + self.noise.sample(&mut self.rng)).clamp(NOISE_CLIP, 1.0 - NOISE_CLIP);
            let q = (1.0 - plus + self.noise.sample(&mut self.rng)).clamp(NOISE_CLIP, 1.0 - NOISE_CLIP);
            p / (p + q)
        } else {
            plus
        };
        if self.window > 0 {
            if past.len() == self.window {
                past.pop_front();
            }
            past.push_back(out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_cycles() {
        let mut s = RoundRobin::new();
        let r = [0.0; 4];
        let seq: Vec<usize> = (0..6).map(|_| s.next(&r)).collect();
        assert_eq!(seq, vec![0, 1, 2, 3, 0, 1]);
    }

    #[test]
    fn residual_ties_go_low() {
        assert_eq!(Residual.next(&[0.0; 5]), 0);
        assert_eq!(Residual.next(&[0.1, 0.3, 0.3, 0.2]), 1);
    }

    #[test]
    fn weight_decay_prefers_fresh_messages() {
        let mut s = WeightDecay::new(3);
        let r = [1.0, 0.5, 0.5];
        assert_eq!(s.next(&r), 0);
        assert_eq!(s.next(&r), 0);
        assert_eq!(s.counts()[0], 3);
        assert_ne!(s.next(&[1.0, 1.0, 1.0]), 0);
    }

    #[test]
    fn noise_only_on_repeats() {
        let mut s = NoiseInjection::new(2, 0.1, 10, 0);
        assert_eq!(s.adjust(0, 0.3), 0.3);
        assert_eq!(s.adjust(0, 0.3), 0.3);
        assert_eq!(s.adjust(0, 0.4), 0.4);
        let kicked = s.adjust(0, 0.3);
        assert_ne!(kicked, 0.3);
        assert!(kicked > 0.0 && kicked < 1.0);
        assert_eq!(s.injections(), 1);
        assert_eq!(s.adjust(1, 0.3), 0.3);
    }

    #[test]
    fn random_order_is_seeded() {
        let r = [0.0; 7];
        let a: Vec<usize> = {
            let mut s = RandomOrder::new(4);
            (0..20).map(|_| s.next(&r)).collect()
        };
        let mut s = RandomOrder::new(4);
        let b: Vec<usize> = (0..20).map(|_| s.next(&r)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|&m| m < 7));
    }
}
