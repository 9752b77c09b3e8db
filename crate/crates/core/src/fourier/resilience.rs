//! Restrictions, resilience checks and the local-variance certificate.

use serde::Serialize;

use super::engine::{expectation_in, table_as, Engine, Multinomial};
use super::function::FunctionSpec;
use super::ops::marginal_table;
use crate::dist_core::{Alphabet, MarginalDistribution};
use crate::error::{Error, Result};
use crate::number::{Number, Scalar};
use crate::with_weights;

/// A partial assignment: `entries[i]` is `Some(a)` when coordinate i is fixed to a.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Restriction {
    entries: Vec<Option<usize>>,
}

impl Restriction {
    /// The all-⋆ restriction.
    pub fn none(n: usize) -> Self {
        Restriction { entries: vec![None; n] }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut r = Restriction::none(n);
        for &(i, a) in pairs {
            if i >= n {
                return Err(Error::Range(format!("coordinate {i} outside 0..{n}")));
            }
            r.entries[i] = Some(a);
        }
        Ok(r)
    }

    pub fn entries(&self) -> &[Option<usize>] {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.map(|a| (i, a)))
            .collect()
    }

    /// `other` applied after `self`: coordinates still free here take `other`'s value.
    pub fn then(&self, other: &Restriction) -> Restriction {
        Restriction {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.or(*b)).collect(),
        }
    }

    pub fn apply(&self, f: &FunctionSpec) -> Result<FunctionSpec> {
        if self.entries.len() != f.n() {
            return Err(Error::Invalid("restriction length differs from n".into()));
        }
        if self.entries.iter().flatten().any(|&a| a >= f.alphabet().len()) {
            return Err(Error::Invalid("restriction symbol outside the alphabet".into()));
        }
        Ok(self
            .pairs()
            .into_iter()
            .fold(f.clone(), |g, (i, a)| g.restrict_coordinate(i, a)))
    }

    /// Rendering such as `⋆0⋆2`, coordinate 0 first.
    pub fn render(&self, alphabet: &Alphabet) -> String {
        self.entries
            .iter()
            .map(|e| e.map_or("⋆".to_string(), |a| alphabet.symbol(a).to_string()))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Rf for a restriction given as `(coordinate, symbol)` pairs.
pub fn restrict(f: &FunctionSpec, r: &Restriction) -> Result<FunctionSpec> {
    r.apply(f)
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Σ_{s≤k} C(n,s)·q^s, saturating.
pub fn search_size(n: usize, k: usize, q: usize) -> u128 {
    (0..=k.min(n)).fold(0u128, |acc, s| {
        acc.saturating_add(binomial(n, s).saturating_mul((q as u128).saturating_pow(s as u32)))
    })
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let s = c.len();
    for i in (0..s).rev() {
        if c[i] < n - s + i {
            c[i] += 1;
            for j in i + 1..s {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Lexicographic successor with the first position most significant.
fn next_lex(d: &mut [usize], base: usize) -> bool {
    for x in d.iter_mut().rev() {
        *x += 1;
        if *x < base {
            return true;
        }
        *x = 0;
    }
    false
}

/// Walks restrictions of size 0..=k in order (size, coordinate set, symbols) and stops at the
/// first one whose expectation satisfies `stop`.
fn search<T: Multinomial>(
    f: &FunctionSpec,
    probs: &[T],
    k: usize,
    mut stop: impl FnMut(&T) -> bool,
) -> (Option<(Restriction, T)>, u64) {
    let n = f.n();
    let m = probs.len();
    let support: Vec<usize> = (0..m).filter(|&a| !probs[a].is_zero()).collect();
    let table: Option<Vec<T>> = f.table_values().map(table_as);
    let mut checked = 0u64;
    for s in 0..=k.min(n) {
        let mut set: Vec<usize> = (0..s).collect();
        loop {
            let marginal = table.as_ref().map(|t| marginal_table(t, probs, n, &set));
            let mut digits = vec![0; s];
            loop {
                let pairs: Vec<(usize, usize)> = set.iter().zip(&digits).map(|(&i, &d)| (i, support[d])).collect();
                let r = Restriction::from_pairs(n, &pairs).expect("coordinates in range");
                let e = match &marginal {
                    Some(g) => {
                        let idx = pairs.iter().rev().fold(0, |acc, &(_, a)| acc * m + a);
                        g[idx].clone()
                    }
                    None => {
                        let g = r.apply(f).expect("valid restriction");
                        expectation_in(&g, probs, Engine::Dp, 0).expect("structured route never fails")
                    }
                };
                checked += 1;
                if stop(&e) {
                    return (Some((r, e)), checked);
                }
                if !next_lex(&mut digits, support.len()) {
                    break;
                }
            }
            if !next_combination(&mut set, n) {
                break;
            }
        }
    }
    (None, checked)
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub restriction: Restriction,
    pub expectation: Number,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResilienceReport {
    pub resilient: bool,
    pub upper_only: bool,
    pub eps: Number,
    pub k: usize,
    pub mean: Number,
    pub checked: u64,
    pub witness: Option<Witness>,
}

fn check_search(f: &FunctionSpec, pi: &MarginalDistribution, k: usize, budget: u128) -> Result<()> {
    if f.alphabet() != pi.alphabet() {
        return Err(Error::Invalid("function and distribution use different alphabets".into()));
    }
    if k > f.n() {
        return Err(Error::Precondition(format!("k = {k} exceeds n = {}", f.n())));
    }
    let needed = search_size(f.n(), k, pi.support().len());
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }
    Ok(())
}

fn scalar_of<T: Scalar>(x: &Number) -> T {
    match x {
        Number::Exact(r) => T::from_rational(r),
        Number::Float(v) => T::from_f64(*v),
    }
}

fn resilience_in<T: Multinomial>(f: &FunctionSpec, probs: &[T], eps: &Number, k: usize, upper_only: bool) -> ResilienceReport {
    let mean = expectation_in(f, probs, Engine::Dp, 0).expect("structured route never fails");
    let e = scalar_of::<T>(eps);
    let lo = (T::one() - e.clone()) * mean.clone();
    let hi = (T::one() + e) * mean.clone();
    let (found, checked) = search(f, probs, k, |x| *x > hi || (!upper_only && *x < lo));
    ResilienceReport {
        resilient: found.is_none(),
        upper_only,
        eps: eps.clone(),
        k,
        mean: mean.into_number(),
        checked,
        witness: found.map(|(restriction, e)| Witness {
            restriction,
            expectation: e.into_number(),
        }),
    }
}

/// (1−ε)E[f] ≤ E[Rf] ≤ (1+ε)E[f] for every restriction of size at most k.
pub fn is_resilient(f: &FunctionSpec, pi: &MarginalDistribution, eps: &Number, k: usize, budget: u128) -> Result<ResilienceReport> {
    check_search(f, pi, k, budget)?;
    Ok(with_weights!(pi.probs(), p => resilience_in(f, p, eps, k, false)))
}

/// E[Rf] ≤ (1+ε)E[f] for every restriction of size at most k.
pub fn is_upper_resilient(f: &FunctionSpec, pi: &MarginalDistribution, eps: &Number, k: usize, budget: u128) -> Result<ResilienceReport> {
    check_search(f, pi, k, budget)?;
    Ok(with_weights!(pi.probs(), p => resilience_in(f, p, eps, k, true)))
}

/// First restriction of size ≤ k, in search order, with E[Rf] ≥ threshold; also returns how many were checked.
pub fn first_restriction_reaching(
    f: &FunctionSpec,
    pi: &MarginalDistribution,
    k: usize,
    threshold: &Number,
    budget: u128,
) -> Result<(Option<Witness>, u64)> {
    check_search(f, pi, k, budget)?;
    Ok(with_weights!(pi.probs(), p => {
        let t = scalar_of(threshold);
        let (found, checked) = search(f, p, k, |x| *x >= t);
        (
            found.map(|(restriction, e)| Witness { restriction, expectation: e.into_number() }),
            checked,
        )
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalVarianceReport {
    pub passes: bool,
    /// α(π)^k·(ε·E[f])².
    pub threshold: Number,
    pub worst_set: Vec<usize>,
    pub worst_variance: Number,
    pub sets_checked: u64,
}

fn local_variance_in<T: Scalar>(f: &FunctionSpec, vals: &[T], probs: &[T], eps: &Number, k: usize) -> LocalVarianceReport {
    let n = f.n();
    let m = probs.len();
    let alpha = probs
        .iter()
        .filter(|p| !p.is_zero())
        .cloned()
        .reduce(|a, b| if b < a { b } else { a })
        .unwrap_or_else(T::one);
    let mean = marginal_table(vals, probs, n, &[])[0].clone();
    let em = scalar_of::<T>(eps) * mean.clone();
    let threshold = alpha.pow(k) * em.clone() * em;
    let mut set: Vec<usize> = (0..k).collect();
    let mut worst: Option<(Vec<usize>, T)> = None;
    let mut sets_checked = 0u64;
    loop {
        let g = marginal_table(vals, probs, n, &set);
        let second = g.iter().enumerate().fold(T::zero(), |acc, (idx, v)| {
            let w = (0..set.len()).fold(T::one(), |w, j| w * probs[(idx / m.pow(j as u32)) % m].clone());
            acc + w * v.clone() * v.clone()
        });
        let var = second - mean.clone() * mean.clone();
        sets_checked += 1;
        if worst.as_ref().is_none_or(|(_, v)| var > *v) {
            worst = Some((set.clone(), var));
        }
        if !next_combination(&mut set, n) {
            break;
        }
    }
    let (worst_set, worst_var) = worst.expect("at least one set");
    LocalVarianceReport {
        passes: worst_var <= threshold,
        threshold: threshold.into_number(),
        worst_set,
        worst_variance: worst_var.into_number(),
        sets_checked,
    }
}

/// Checks Var[f^{⊆S}] ≤ α(π)^k·(ε·E[f])² for every S with |S| = k, a sufficient condition for
/// ε-resilience up to size k.
pub fn resilience_from_local_variance(f: &FunctionSpec, pi: &MarginalDistribution, eps: &Number, k: usize) -> Result<LocalVarianceReport> {
    if f.alphabet() != pi.alphabet() {
        return Err(Error::Invalid("function and distribution use different alphabets".into()));
    }
    if k > f.n() {
        return Err(Error::Precondition(format!("k = {k} exceeds n = {}", f.n())));
    }
    let table = f.to_table()?;
    Ok(with_weights!(pi.probs(), p => local_variance_in(f, &table_as(&table), p, eps, k)))
}
