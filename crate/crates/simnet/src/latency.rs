use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::time::VirtualTime;

/// Link latency sampled from a lognormal parameterized by its median and 95th
/// percentile. Defaults follow the observed propagation profile: median 50 ms,
/// p95 200 ms. `median == p95` degenerates to a constant delay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyModel {
    pub median: VirtualTime,
    pub p95: VirtualTime,
}

const Z95: f64 = 1.6448536269514722;

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            median: VirtualTime::from_millis(50),
            p95: VirtualTime::from_millis(200),
        }
    }
}

impl LatencyModel {
    pub fn constant(delay: VirtualTime) -> Self {
        LatencyModel {
            median: delay,
            p95: delay,
        }
    }

    pub fn zero() -> Self {
        Self::constant(VirtualTime::ZERO)
    }

    /// mu = ln(median); sigma solved from the p95 quantile.
    fn params(&self) -> (f64, f64) {
        let m = (self.median.as_micros() as f64).max(1.0);
        let q = (self.p95.as_micros() as f64).max(m);
        let mu = m.ln();
        let sigma = (q.ln() - mu) / Z95;
        (mu, sigma)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> VirtualTime {
        if self.median == self.p95 {
            return self.median;
        }
        let (mu, sigma) = self.params();
        let dist = LogNormal::new(mu, sigma).expect("sigma is finite and non-negative");
        let us = dist.sample(rng).max(1.0);
        VirtualTime(us.round() as u64)
    }
}
