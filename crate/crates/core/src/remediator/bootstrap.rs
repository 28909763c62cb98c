//! Percentile bootstrap confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::text::derive_seed;

pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct Interval<S> {
    pub point: S,
    pub low: S,
    pub high: S,
}

impl<S: Scalar> Interval<S> {
    pub fn exact(point: S) -> Self {
        Self { point, low: point, high: point }
    }

    pub fn width(&self) -> S {
        self.high - self.low
    }

    pub fn contains(&self, x: S) -> bool {
        self.low <= x && x <= self.high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { iterations: DEFAULT_ITERATIONS, level: DEFAULT_LEVEL, seed: 0 }
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile<S: Scalar>(sorted: &[S], q: f64) -> S {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = S::from_f64_lossy(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Bootstrap intervals for a vector-valued statistic, one interval per
/// component. Each iteration draws its own RNG from the master seed and
/// its index, so results do not depend on thread scheduling.
pub fn bootstrap_many<T, S, F>(items: &[T], statistic: F, config: &BootstrapConfig) -> Vec<Interval<S>>
where
    T: Sync,
    S: Scalar,
    F: Fn(&[&T]) -> Vec<S> + Sync,
{
    let all: Vec<&T> = items.iter().collect();
    let point = statistic(&all);
    let n = items.len();
    if n <= 1 || config.iterations == 0 {
        return point.into_iter().map(Interval::exact).collect();
    }
    let draws: Vec<Vec<S>> = (0..config.iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &["bootstrap", &i.to_string()]));
            let sample: Vec<&T> = (0..n).map(|_| &items[rng.random_range(0..n)]).collect();
            statistic(&sample)
        })
        .collect();
    let alpha = (1.0 - config.level.clamp(0.0, 1.0)) / 2.0;
    point
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut col: Vec<S> = draws.iter().map(|d| d[k]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let low = quantile(&col, alpha);
            let high = quantile(&col, 1.0 - alpha);
            // percentile intervals need not cover the point estimate; widen
            Interval { point: p, low: low.min(p), high: high.max(p) }
        })
        .collect()
}

pub fn bootstrap_ci<T, S, F>(items: &[T], statistic: F, config: &BootstrapConfig) -> Interval<S>
where
    T: Sync,
    S: Scalar,
    F: Fn(&[&T]) -> S + Sync,
{
    bootstrap_many(items, |s| vec![statistic(s)], config)[0]
}
