//! Seeded random instances for property tests and the verification suites.

use num::traits::Zero;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist_core::{Alphabet, StepDistribution};
use crate::fourier::{Anchored, Clause, FunctionKind, FunctionSpec, ModLinear};
use crate::invariance::MultilinearPolynomial;
use crate::number::{Rational, Weights};
use crate::radix;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normalize(counts: Vec<u64>) -> Weights {
    let total: u64 = counts.iter().sum();
    Weights::Exact(
        counts
            .into_iter()
            .map(|c| Rational::new(c.into(), total.into()))
            .collect(),
    )
}

/// A rational distribution with small integer weights; roughly `1 − density` of the cells are zero.
pub fn random_distribution(rng: &mut Rng, m: usize, steps: usize, density: f64) -> StepDistribution {
    let size = m.pow(steps as u32);
    loop {
        let counts: Vec<u64> = (0..size)
            .map(|_| if rng.random_bool(density) { rng.random_range(1..=9) } else { 0 })
            .collect();
        if counts.iter().any(|&c| c > 0) {
            return StepDistribution::new(Alphabet::numeric(m), steps, normalize(counts)).expect("valid");
        }
    }
}

/// A two-step rational distribution with equal marginals and full diagonal.
///
/// Built as a positive diagonal plus a few random weighted cycles, so in-weight equals
/// out-weight at every vertex exactly.
pub fn random_equal_marginal(rng: &mut Rng, m: usize) -> StepDistribution {
    let mut counts = vec![0u64; m * m];
    for x in 0..m {
        counts[x + m * x] = rng.random_range(1..=6);
    }
    if m >= 2 {
        let cycles = rng.random_range(1..=m + 1);
        for _ in 0..cycles {
            let mut verts: Vec<usize> = (0..m).collect();
            verts.shuffle(rng);
            verts.truncate(rng.random_range(2..=m));
            let w = rng.random_range(1..=6);
            for i in 0..verts.len() {
                let (u, v) = (verts[i], verts[(i + 1) % verts.len()]);
                counts[u + m * v] += w;
            }
        }
    }
    StepDistribution::new(Alphabet::numeric(m), 2, normalize(counts)).expect("valid")
}

/// A three-step Markov chain `π(a)K(a,b)K(b,c)` whose kernel comes from a random equal-marginal pair.
pub fn random_markov_chain3(rng: &mut Rng, m: usize) -> StepDistribution {
    let pair = random_equal_marginal(rng, m);
    let Weights::Exact(w) = pair.weights() else { unreachable!() };
    let pi: Vec<Rational> = (0..m).map(|a| (0..m).map(|b| &w[a + m * b]).sum()).collect();
    let mut out = vec![Rational::zero(); m * m * m];
    for (idx, o) in out.iter_mut().enumerate() {
        let t = radix::decode(idx, m, 3);
        *o = &w[t[0] + m * t[1]] * &w[t[1] + m * t[2]] / &pi[t[1]];
    }
    StepDistribution::new(Alphabet::numeric(m), 3, Weights::Exact(out)).expect("valid")
}

/// Table values drawn from a small grid of rationals in [0, 1].
pub fn random_values(rng: &mut Rng, len: usize) -> Vec<Rational> {
    (0..len)
        .map(|_| Rational::new(rng.random_range(0..=8i64).into(), 8.into()))
        .collect()
}

/// A table function with values from `random_values`.
pub fn random_table(rng: &mut Rng, m: usize, n: usize) -> FunctionSpec {
    FunctionSpec::table(Alphabet::numeric(m), n, random_values(rng, m.pow(n as u32))).expect("valid")
}

/// A union of one or two anchored clauses with random windows and ignored coordinates.
pub fn random_anchored(rng: &mut Rng, m: usize, n: usize) -> FunctionSpec {
    let clauses = (0..rng.random_range(1..=2))
        .map(|_| {
            let anchor = rng.random_bool(0.6).then(|| (rng.random_range(0..n), rng.random_range(0..m)));
            let mut c = Clause::new(anchor);
            for s in 0..m {
                if rng.random_bool(0.5) {
                    let lo = rng.random_range(0..=n as i64);
                    let hi = rng.random_range(lo..=n as i64);
                    c = c.window(s, lo, hi);
                }
            }
            c
        })
        .collect();
    let ignored = (0..n).filter(|_| rng.random_bool(0.2)).collect();
    FunctionSpec::new(Alphabet::numeric(m), n, FunctionKind::AnchoredSymmetric(Anchored { clauses, ignored })).expect("valid")
}

/// A mod-linear indicator with random modulus, coefficients and symbol map.
pub fn random_mod_linear(rng: &mut Rng, m: usize, n: usize) -> FunctionSpec {
    let modulus = rng.random_range(2..=4u64);
    let coeffs = (0..n).map(|_| rng.random_range(0..modulus)).collect();
    let symbol_map = (0..m).map(|_| rng.random_range(0..modulus)).collect();
    let residue = rng.random_range(0..modulus);
    FunctionSpec::new(
        Alphabet::numeric(m),
        n,
        FunctionKind::ModLinear(ModLinear { modulus, coeffs, residue, symbol_map }),
    )
    .expect("valid")
}

/// A conjunction of up to two `x_i = a` constraints on distinct coordinates.
pub fn random_junta(rng: &mut Rng, m: usize, n: usize) -> FunctionSpec {
    let mut coords: Vec<usize> = (0..n).collect();
    coords.shuffle(rng);
    coords.truncate(rng.random_range(0..=n.min(2)));
    let constraints = coords.into_iter().map(|i| (i, rng.random_range(0..m))).collect();
    FunctionSpec::junta(Alphabet::numeric(m), n, constraints).expect("valid")
}

/// A polynomial of degree at most `max_degree` on n coordinates with ensemble size p: every
/// monomial of low enough degree is kept with probability 1/2, with a coefficient uniform in
/// [−1, 1].
pub fn random_poly(rng: &mut Rng, n: usize, p: usize, max_degree: usize) -> MultilinearPolynomial {
    let mut sigma = vec![0usize; n];
    let mut terms = Vec::new();
    loop {
        let deg = sigma.iter().filter(|&&k| k != 0).count();
        if deg <= max_degree && rng.random_bool(0.5) {
            terms.push((sigma.clone(), rng.random_range(-1.0..=1.0)));
        }
        if !radix::increment(&mut sigma, p + 1) {
            break;
        }
    }
    MultilinearPolynomial::new(n, p, terms).expect("valid")
}
