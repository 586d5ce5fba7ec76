//! Multinomial count generation, empirical types, and replicated
//! simulation of divergence statistics.
//!
//! Randomness is counter-based: replicate `i` of a run seeded with
//! `Seed { value, stream }` reads ChaCha12 keyed by `value`, on stream
//! `stream`, starting at word offset `i · 2³²`. Results therefore do not
//! depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{power_divergence_raw, Order, ProbVec};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Cell counts `X_n` of a sample of size `n = Σ X_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Counts {
    counts: Vec<u64>,
    n: u64,
}

impl Counts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid("counts need at least one cell"));
        }
        let n = counts
            .iter()
            .try_fold(0u64, |acc, &x| acc.checked_add(x))
            .ok_or_else(|| Error::invalid("count total overflows u64"))?;
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// The empirical type `X_n / n`.
    pub fn empirical(&self) -> Result<ProbVec> {
        if self.n == 0 {
            return Err(Error::EmptyCounts);
        }
        let n = self.n as f64;
        Ok(ProbVec::from_vec_unchecked(
            self.counts.iter().map(|&x| x as f64 / n).collect(),
        ))
    }
}

/// Convenience wrapper for [`Counts::empirical`].
pub fn empirical(counts: &Counts) -> Result<ProbVec> {
    counts.empirical()
}

/// Seed of a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Seed {
    pub value: u64,
    pub stream: u64,
}

const WORDS_PER_REPLICATE_LOG2: u32 = 32;

impl Seed {
    pub fn new(value: u64) -> Self {
        Self { value, stream: 0 }
    }

    pub fn with_stream(value: u64, stream: u64) -> Self {
        Self { value, stream }
    }

    fn key(&self) -> [u8; 32] {
        // SplitMix64 expansion of the 64-bit seed into a 256-bit key.
        let mut state = self.value;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        key
    }

    /// Generator for replicate `index`; `replicate_rng(0)` is the stream used
    /// by single draws such as [`sample_counts`].
    pub fn replicate_rng(&self, index: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::from_seed(self.key());
        rng.set_stream(self.stream);
        rng.set_word_pos((index as u128) << WORDS_PER_REPLICATE_LOG2);
        rng
    }

    pub fn rng(&self) -> ChaCha12Rng {
        self.replicate_rng(0)
    }
}

/// Suffix masses `Σ_{i ≥ j} p_i`, compensated.
fn suffix_masses(p: &[f64]) -> Vec<f64> {
    let mut tail = vec![0.0; p.len()];
    let mut acc = CompensatedSum::new();
    for j in (0..p.len()).rev() {
        acc.add(p[j]);
        tail[j] = acc.value();
    }
    tail
}

fn draw_counts<R: Rng + ?Sized>(p: &[f64], tail: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let k = p.len();
    let mut counts = vec![0u64; k];
    let mut remaining = n;
    for j in 0..k - 1 {
        if remaining == 0 {
            break;
        }
        if p[j] <= 0.0 {
            continue;
        }
        let cond = if tail[j] > 0.0 {
            (p[j] / tail[j]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let x = if cond >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, cond)
                .expect("conditional probability lies in [0, 1]")
                .sample(rng)
        };
        counts[j] = x;
        remaining -= x;
    }
    counts[k - 1] += remaining;
    counts
}

/// One draw of `Mult_k(n, P)` via sequential conditional binomials.
pub fn sample_counts(p: &ProbVec, n: u64, seed: Seed) -> Result<Counts> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be ≥ 1"));
    }
    let tail = suffix_masses(p.probs());
    let counts = draw_counts(p.probs(), &tail, n, &mut seed.rng());
    Ok(Counts { counts, n })
}

/// `reps` independent realizations of `D_α(P̂_n, Q)` with `P̂_n` drawn from
/// `p_true`. Output index `i` always comes from replicate stream `i`.
pub fn simulate_statistics(
    p_true: &ProbVec,
    q_null: &ProbVec,
    order: Order,
    n: u64,
    reps: u64,
    seed: Seed,
) -> Result<Vec<f64>> {
    if p_true.k() != q_null.k() {
        return Err(Error::DimensionMismatch {
            left: p_true.k(),
            right: q_null.k(),
        });
    }
    q_null.ensure_strictly_positive()?;
    if n == 0 {
        return Err(Error::invalid("sample size n must be ≥ 1"));
    }
    if reps == 0 {
        return Err(Error::invalid("reps must be ≥ 1"));
    }
    let p = p_true.probs();
    let q = q_null.probs();
    let tail = suffix_masses(p);
    let nf = n as f64;
    let values = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.replicate_rng(i);
            let counts = draw_counts(p, &tail, n, &mut rng);
            let p_hat: Vec<f64> = counts.iter().map(|&x| x as f64 / nf).collect();
            power_divergence_raw(&p_hat, q, order)
        })
        .collect();
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::power_divergence;

    #[test]
    fn degenerate_distribution() {
        let p = ProbVec::new(vec![1.0, 0.0, 0.0]).unwrap();
        for s in 0..5 {
            let c = sample_counts(&p, 7, Seed::new(s)).unwrap();
            assert_eq!(c.counts(), &[7, 0, 0]);
        }
        let p = ProbVec::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            sample_counts(&p, 7, Seed::new(3)).unwrap().counts(),
            &[0, 0, 7]
        );
    }

    #[test]
    fn zero_n_is_rejected() {
        let p = ProbVec::uniform(2).unwrap();
        assert!(sample_counts(&p, 0, Seed::new(1)).is_err());
        assert!(simulate_statistics(&p, &p, Order::KL, 0, 3, Seed::new(1)).is_err());
        assert!(simulate_statistics(&p, &p, Order::KL, 3, 0, Seed::new(1)).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = ProbVec::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let seed = Seed::with_stream(99, 7);
        let a = sample_counts(&p, 1000, seed).unwrap();
        let b = sample_counts(&p, 1000, seed).unwrap();
        assert_eq!(a, b);
        let c = sample_counts(&p, 1000, Seed::with_stream(99, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn large_n_binomial_moments() {
        let p = ProbVec::uniform(2).unwrap();
        let n = 1_000_000u64;
        let sigma = (n as f64 * 0.25).sqrt();
        for s in 0..10 {
            let c = sample_counts(&p, n, Seed::new(s)).unwrap();
            assert_eq!(c.n(), n);
            for &x in c.counts() {
                assert!((x as f64 - 500_000.0).abs() < 5.0 * sigma, "{x}");
            }
        }
    }

    #[test]
    fn empirical_examples() {
        let e = Counts::new(vec![2, 2]).unwrap().empirical().unwrap();
        assert_eq!(e.probs(), &[0.5, 0.5]);
        let e = Counts::new(vec![0, 4]).unwrap().empirical().unwrap();
        assert_eq!(e.probs(), &[0.0, 1.0]);
        let e = Counts::new(vec![1, 2, 3]).unwrap().empirical().unwrap();
        assert_eq!(e.probs(), &[1.0 / 6.0, 1.0 / 3.0, 0.5]);
        assert_eq!(
            Counts::new(vec![0, 0]).unwrap().empirical().unwrap_err(),
            Error::EmptyCounts
        );
    }

    #[test]
    fn single_replicate_matches_direct_draw() {
        let p = ProbVec::new(vec![0.2, 0.5, 0.3]).unwrap();
        let q = ProbVec::uniform(3).unwrap();
        let seed = Seed::new(2024);
        let sim = simulate_statistics(&p, &q, Order::PEARSON, 50, 1, seed).unwrap();
        let counts = sample_counts(&p, 50, seed).unwrap();
        let direct = power_divergence(&counts.empirical().unwrap(), &q, Order::PEARSON)
            .unwrap()
            .value;
        assert_eq!(sim, vec![direct]);
    }

    #[test]
    fn replicate_streams_differ() {
        let seed = Seed::new(5);
        let a: u64 = seed.replicate_rng(0).random();
        let b: u64 = seed.replicate_rng(1).random();
        assert_ne!(a, b);
    }
}
