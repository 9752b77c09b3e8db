//! Block-parallel Monte Carlo over standard normal inputs.
//!
//! Sample i belongs to block i / BLOCK, and each block draws from its own ChaCha8 stream keyed by
//! (seed, block). Block partial sums are merged pairwise in block order, so results depend only
//! on the seed and the sample count, never on the worker count.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

pub const BLOCK: usize = 4096;

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct McResult {
    pub samples: usize,
    pub seed: u64,
    pub estimates: Vec<Estimate>,
}

#[derive(Clone)]
struct Partial {
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Partial {
    fn merge(mut self, other: &Partial) -> Partial {
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.sq.iter_mut().zip(&other.sq).for_each(|(a, b)| *a += b);
        self
    }
}

fn pairwise(parts: &[Partial]) -> Partial {
    match parts.len() {
        1 => parts[0].clone(),
        len => {
            let (l, r) = parts.split_at(len / 2);
            pairwise(l).merge(&pairwise(r))
        }
    }
}

/// Draws `samples` vectors of `dim` independent N(0, 1) values and averages the `stats` outputs
/// that `f` writes for each one.
pub fn monte_carlo(samples: usize, seed: u64, dim: usize, stats: usize, f: impl Fn(&[f64], &mut [f64]) + Sync) -> McResult {
    let blocks = samples.div_ceil(BLOCK);
    let parts: Vec<Partial> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut h = vec![0.0; dim];
            let mut out = vec![0.0; stats];
            let mut part = Partial {
                sum: vec![0.0; stats],
                sq: vec![0.0; stats],
            };
            for _ in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                h.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                f(&h, &mut out);
                for (k, &v) in out.iter().enumerate() {
                    part.sum[k] += v;
                    part.sq[k] += v * v;
                }
            }
            part
        })
        .collect();
    let total = if parts.is_empty() {
        Partial {
            sum: vec![0.0; stats],
            sq: vec![0.0; stats],
        }
    } else {
        pairwise(&parts)
    };
    let n = samples as f64;
    let estimates = (0..stats)
        .map(|k| {
            let mean = total.sum[k] / n;
            let var = if samples > 1 { ((total.sq[k] / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
            Estimate {
                mean,
                stderr: (var / n).sqrt(),
            }
        })
        .collect();
    McResult { samples, seed, estimates }
}
