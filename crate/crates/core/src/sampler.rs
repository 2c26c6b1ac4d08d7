//! Seeded Bernoulli sampling and `T`/`D` resource accounting.

use crate::error::{domain, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use std::fmt;

/// Stream index for block `block` of binary-search step `step`.
pub fn stream_id(step: u64, block: u64) -> u64 {
    (step << 16) + block
}

/// Counter-based generator: a ChaCha8 keystream selected by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream with the same seed.
    pub fn fork(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub(crate) fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Number of successes in `n` independent draws with probability `p`.
pub fn bernoulli_trials(p: f64, n: u64, rng: &mut RngStream) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("probability must lie in [0, 1], got {p}"));
    }
    if n == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(n);
    }
    let dist = Binomial::new(n, p).map_err(|e| crate::Error::Domain(e.to_string()))?;
    Ok(dist.sample(rng.inner()))
}

/// Total queries `T`, maximum per-shot depth `D` and shot count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ResourceLedger {
    pub total_queries: u64,
    pub max_depth: u64,
    pub shots: u64,
}

impl ResourceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `n` shots of the given per-shot depth. Negative arguments are
    /// unrepresentable; overflow is reported as a domain error.
    pub fn record_shots(self, depth: u64, n: u64) -> Result<Self> {
        let added = depth
            .checked_mul(n)
            .and_then(|q| q.checked_add(self.total_queries));
        let (Some(total_queries), Some(shots)) = (added, self.shots.checked_add(n)) else {
            return domain("resource ledger overflow");
        };
        Ok(Self {
            total_queries,
            max_depth: if n > 0 { self.max_depth.max(depth) } else { self.max_depth },
            shots,
        })
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            total_queries: self.total_queries + other.total_queries,
            max_depth: self.max_depth.max(other.max_depth),
            shots: self.shots + other.shots,
        }
    }

    /// Every shot's depth multiplied by `factor`.
    pub fn scaled(self, factor: u64) -> Self {
        Self {
            total_queries: self.total_queries * factor,
            max_depth: self.max_depth * factor,
            shots: self.shots,
        }
    }
}

impl fmt::Display for ResourceLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T={} D={} shots={}", self.total_queries, self.max_depth, self.shots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Left,
    Right,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Left => "LEFT",
            Outcome::Right => "RIGHT",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(bernoulli_trials(0.0, 1000, &mut rng).unwrap(), 0);
        assert_eq!(bernoulli_trials(1.0, 1000, &mut rng).unwrap(), 1000);
        assert_eq!(bernoulli_trials(0.3, 0, &mut rng).unwrap(), 0);
        assert!(bernoulli_trials(1.5, 10, &mut rng).is_err());
        assert!(bernoulli_trials(-0.1, 10, &mut rng).is_err());
        assert!(bernoulli_trials(f64::NAN, 10, &mut rng).is_err());
    }

    #[test]
    fn frozen_half_count() {
        let mut rng = RngStream::new(2024, 0);
        let count = bernoulli_trials(0.5, 100_000, &mut rng).unwrap();
        assert!((count as f64 / 1e5 - 0.5).abs() <= 0.01);
        assert_eq!(count, 49_738);
    }

    #[test]
    fn same_seed_and_stream_reproduce() {
        let mut a = RngStream::new(9, 3);
        let mut b = RngStream::new(9, 3);
        let xs: Vec<u64> = (0..5).map(|_| bernoulli_trials(0.4, 1000, &mut a).unwrap()).collect();
        let ys: Vec<u64> = (0..5).map(|_| bernoulli_trials(0.4, 1000, &mut b).unwrap()).collect();
        assert_eq!(xs, ys);
        let mut c = RngStream::new(9, 4);
        let zs: Vec<u64> = (0..5).map(|_| bernoulli_trials(0.4, 1000, &mut c).unwrap()).collect();
        assert_ne!(xs, zs);
    }

    #[test]
    fn frequencies_within_four_sigma_across_streams() {
        let n = 100_000u64;
        for p in [0.1, 0.5, 0.9] {
            let bound = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
            let good = (0..100)
                .filter(|&s| {
                    let mut rng = RngStream::new(77, s);
                    let k = bernoulli_trials(p, n, &mut rng).unwrap();
                    (k as f64 / n as f64 - p).abs() <= bound
                })
                .count();
            assert!(good >= 99, "p={p}: {good}/100");
        }
    }

    #[test]
    fn ledger_examples() {
        let l = ResourceLedger::new().record_shots(5, 3).unwrap();
        assert_eq!((l.total_queries, l.max_depth, l.shots), (15, 5, 3));
        let l = l.record_shots(2, 10).unwrap();
        assert_eq!((l.total_queries, l.max_depth, l.shots), (35, 5, 13));
        let l = l.record_shots(100, 0).unwrap();
        assert_eq!(l.max_depth, 5);
        assert!(ResourceLedger::new().record_shots(u64::MAX, 2).is_err());
    }

    fn permutations(items: &[(u64, u64)]) -> Vec<Vec<(u64, u64)>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            for mut tail in permutations(&rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn ledger_is_order_independent() {
        let records = [(5, 3), (2, 10), (0, 4), (7, 0)];
        let perms = permutations(&records);
        assert_eq!(perms.len(), 24);
        let fold = |rs: &[(u64, u64)]| {
            rs.iter()
                .fold(ResourceLedger::new(), |l, &(d, n)| l.record_shots(d, n).unwrap())
        };
        let first = fold(&perms[0]);
        assert_eq!(first, ResourceLedger { total_queries: 35, max_depth: 5, shots: 17 });
        for p in &perms {
            assert_eq!(fold(p), first);
        }
    }

    #[test]
    fn merge_and_scale() {
        let a = ResourceLedger::new().record_shots(3, 4).unwrap();
        let b = ResourceLedger::new().record_shots(5, 1).unwrap();
        assert_eq!(a.merge(b), a.record_shots(5, 1).unwrap());
        let s = a.scaled(6);
        assert_eq!((s.total_queries, s.max_depth, s.shots), (72, 18, 4));
    }

    #[test]
    fn stream_layout() {
        assert_eq!(stream_id(0, 5), 5);
        assert_eq!(stream_id(3, 2), 3 * 65536 + 2);
    }
}
