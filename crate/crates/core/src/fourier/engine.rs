//! Single-step expectations, variances and influences under the product measure π^n.

use num::bigint::BigInt;
use num::traits::One;
use serde::Serialize;

use super::function::{Anchored, FunctionKind, FunctionSpec, ModLinear};
use crate::dist_core::MarginalDistribution;
use crate::error::{Error, Result};
use crate::number::{Number, Rational, Scalar};
use crate::{par, radix, with_weights};

/// Default cap on brute-force evaluations.
pub const DEFAULT_BUDGET: u128 = 1 << 24;

/// Which expectation route to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Brute force over supp(π)^n.
    Enumerate,
    /// Structured route: count histograms, residue recursions, axis reductions or closed forms.
    Dp,
    Auto,
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumerate" => Ok(Engine::Enumerate),
            "dp" => Ok(Engine::Dp),
            "auto" => Ok(Engine::Auto),
            _ => Err(Error::Invalid(format!("unknown engine {s:?}"))),
        }
    }
}

/// Scalars that can weigh a count vector by its multinomial probability.
pub trait Multinomial: Scalar {
    type Table: Sync;
    fn table(total: usize, probs: &[Self]) -> Self::Table;
    /// `total! / ∏ k_c! · ∏ p_c^{k_c}` for a composition `ks` of `total`.
    fn weight(t: &Self::Table, ks: &[usize]) -> Self;
}

pub struct ExactMultinomial {
    fact: Vec<BigInt>,
    pows: Vec<Vec<Rational>>,
}

impl Multinomial for Rational {
    type Table = ExactMultinomial;

    fn table(total: usize, probs: &[Self]) -> ExactMultinomial {
        let mut fact = vec![BigInt::one()];
        for k in 1..=total {
            let next = &fact[k - 1] * BigInt::from(k);
            fact.push(next);
        }
        let pows = probs
            .iter()
            .map(|p| {
                let mut row = vec![Rational::one()];
                for k in 1..=total {
                    let next = &row[k - 1] * p;
                    row.push(next);
                }
                row
            })
            .collect();
        ExactMultinomial { fact, pows }
    }

    fn weight(t: &ExactMultinomial, ks: &[usize]) -> Self {
        let total: usize = ks.iter().sum();
        let denom = ks.iter().fold(BigInt::one(), |acc, &k| acc * &t.fact[k]);
        let coef = Rational::from_integer(&t.fact[total] / denom);
        ks.iter().enumerate().fold(coef, |acc, (c, &k)| acc * &t.pows[c][k])
    }
}

pub struct FloatMultinomial {
    ln_fact: Vec<f64>,
    ln_p: Vec<f64>,
}

impl Multinomial for f64 {
    type Table = FloatMultinomial;

    fn table(total: usize, probs: &[Self]) -> FloatMultinomial {
        let mut ln_fact = vec![0.0];
        for k in 1..=total {
            ln_fact.push(ln_fact[k - 1] + (k as f64).ln());
        }
        FloatMultinomial {
            ln_fact,
            ln_p: probs.iter().map(|p| p.ln()).collect(),
        }
    }

    fn weight(t: &FloatMultinomial, ks: &[usize]) -> Self {
        let total: usize = ks.iter().sum();
        let mut ln = t.ln_fact[total];
        for (c, &k) in ks.iter().enumerate() {
            if k > 0 {
                if t.ln_p[c] == f64::NEG_INFINITY {
                    return 0.0;
                }
                ln += k as f64 * t.ln_p[c] - t.ln_fact[k];
            }
        }
        ln.exp()
    }
}

/// Visits every composition of `total` into `parts` non-negative parts.
pub fn for_each_composition(total: usize, parts: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(ks: &mut Vec<usize>, left: usize, parts: usize, visit: &mut dyn FnMut(&[usize])) {
        if ks.len() + 1 == parts {
            ks.push(left);
            visit(ks);
            ks.pop();
            return;
        }
        for k in 0..=left {
            ks.push(k);
            rec(ks, left - k, parts, visit);
            ks.pop();
        }
    }
    if parts == 0 {
        if total == 0 {
            visit(&[]);
        }
        return;
    }
    rec(&mut Vec::with_capacity(parts), total, parts, &mut visit);
}

/// How an anchored-symmetric function splits Ω^n into explicitly enumerated coordinates
/// and an exchangeable pool summarized by class counts.
struct Layout<'a> {
    an: &'a Anchored,
    m: usize,
    specials: Vec<usize>,
    class_of: Vec<usize>,
    classes: usize,
    free: usize,
}

impl<'a> Layout<'a> {
    fn new(an: &'a Anchored, n: usize, m: usize, excluded: Option<usize>) -> Self {
        let mut specials: Vec<usize> = an
            .clauses
            .iter()
            .filter_map(|c| c.anchor.map(|(i, _)| i))
            .filter(|&i| Some(i) != excluded)
            .collect();
        specials.sort_unstable();
        specials.dedup();
        let mut constrained: Vec<usize> = an.clauses.iter().flat_map(|c| c.windows.keys().copied()).collect();
        constrained.sort_unstable();
        constrained.dedup();
        let other = constrained.len();
        let class_of: Vec<usize> = (0..m)
            .map(|s| constrained.binary_search(&s).unwrap_or(other))
            .collect();
        let classes = other + usize::from(constrained.len() < m);
        let free = (0..n)
            .filter(|&c| Self::counted_in(an, c) && specials.binary_search(&c).is_err() && Some(c) != excluded)
            .count();
        Layout {
            an,
            m,
            specials,
            class_of,
            classes,
            free,
        }
    }

    fn counted_in(an: &Anchored, c: usize) -> bool {
        an.ignored.binary_search(&c).is_err()
    }

    fn accepts(&self, syms: &[usize], extra: Option<(usize, usize)>, ks: &[usize]) -> bool {
        let sym_at = |c: usize| match extra {
            Some((i, a)) if i == c => a,
            _ => syms[self.specials.binary_search(&c).expect("anchor is enumerated")],
        };
        let count = |s: usize| -> i64 {
            let mut k = ks[self.class_of[s]] as i64;
            for (p, &c) in self.specials.iter().enumerate() {
                if syms[p] == s && Self::counted_in(self.an, c) {
                    k += 1;
                }
            }
            if let Some((i, a)) = extra {
                if a == s && Self::counted_in(self.an, i) {
                    k += 1;
                }
            }
            k
        };
        self.an.clauses.iter().any(|cl| {
            cl.anchor.is_none_or(|(i, v)| sym_at(i) == v)
                && cl.windows.iter().all(|(&s, &(lo, hi))| {
                    let k = count(s);
                    lo <= k && k <= hi
                })
        })
    }

    /// Calls `visit(weight, special symbols, class counts)` for every configuration of positive weight.
    fn visit<T: Multinomial>(&self, probs: &[T], mut visit: impl FnMut(T, &[usize], &[usize])) {
        let mut class_probs = vec![T::zero(); self.classes];
        for (s, p) in probs.iter().enumerate() {
            class_probs[self.class_of[s]] = class_probs[self.class_of[s]].clone() + p.clone();
        }
        let table = T::table(self.free, &class_probs);
        let mut syms = vec![0; self.specials.len()];
        loop {
            let w_special = syms.iter().fold(T::one(), |acc, &a| acc * probs[a].clone());
            if !w_special.is_zero() {
                for_each_composition(self.free, self.classes, |ks| {
                    let w = T::weight(&table, ks);
                    if !w.is_zero() {
                        visit(w_special.clone() * w, &syms, ks);
                    }
                });
            }
            if !radix::increment(&mut syms, self.m) {
                break;
            }
        }
    }
}

fn anchored_expectation<T: Multinomial>(an: &Anchored, n: usize, probs: &[T]) -> T {
    let lay = Layout::new(an, n, probs.len(), None);
    let mut acc = T::zero();
    lay.visit(probs, |w, syms, ks| {
        if lay.accepts(syms, None, ks) {
            acc = acc.clone() + w;
        }
    });
    acc
}

fn anchored_influence<T: Multinomial>(an: &Anchored, n: usize, probs: &[T], i: usize) -> T {
    if !Layout::counted_in(an, i) && an.clauses.iter().all(|c| c.anchor.is_none_or(|(a, _)| a != i)) {
        return T::zero();
    }
    let lay = Layout::new(an, n, probs.len(), Some(i));
    let mut acc = T::zero();
    lay.visit(probs, |w, syms, ks| {
        let mean = probs
            .iter()
            .enumerate()
            .filter(|(a, _)| lay.accepts(syms, Some((i, *a)), ks))
            .fold(T::zero(), |s, (_, p)| s + p.clone());
        acc = acc.clone() + w * (mean.clone() - mean.clone() * mean);
    });
    acc
}

/// Distribution of Σ_{k≠skip} c_k·map(x_k) mod m.
fn residue_distribution<T: Scalar>(ml: &ModLinear, probs: &[T], skip: Option<usize>) -> Vec<T> {
    let md = ml.modulus as usize;
    let mut dist = vec![T::zero(); md];
    dist[0] = T::one();
    for (k, &c) in ml.coeffs.iter().enumerate() {
        if Some(k) == skip || c == 0 {
            continue;
        }
        let mut next = vec![T::zero(); md];
        for (r, w) in dist.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            for (a, p) in probs.iter().enumerate() {
                let t = (r + (c * ml.symbol_map[a]) as usize) % md;
                next[t] = next[t].clone() + w.clone() * p.clone();
            }
        }
        dist = next;
    }
    dist
}

fn mod_linear_influence<T: Scalar>(ml: &ModLinear, probs: &[T], i: usize) -> T {
    let md = ml.modulus;
    let dist = residue_distribution(ml, probs, Some(i));
    dist.iter().enumerate().fold(T::zero(), |acc, (r, w)| {
        let mean = probs
            .iter()
            .enumerate()
            .filter(|(a, _)| (r as u64 + ml.coeffs[i] * ml.symbol_map[*a]) % md == ml.residue)
            .fold(T::zero(), |s, (_, p)| s + p.clone());
        acc + w.clone() * (mean.clone() - mean.clone() * mean)
    })
}

/// Per-coordinate required symbol, or `None` when two constraints conflict.
fn junta_requirements(cs: &[(usize, usize)]) -> Option<Vec<(usize, usize)>> {
    let mut req: Vec<(usize, usize)> = cs.to_vec();
    req.sort_unstable();
    req.dedup();
    if req.windows(2).any(|w| w[0].0 == w[1].0) {
        return None;
    }
    Some(req)
}

fn junta_expectation<T: Scalar>(cs: &[(usize, usize)], probs: &[T]) -> T {
    match junta_requirements(cs) {
        None => T::zero(),
        Some(req) => req.iter().fold(T::one(), |acc, &(_, v)| acc * probs[v].clone()),
    }
}

fn junta_influence<T: Scalar>(cs: &[(usize, usize)], probs: &[T], i: usize) -> T {
    let Some(req) = junta_requirements(cs) else {
        return T::zero();
    };
    let Some(&(_, v)) = req.iter().find(|(c, _)| *c == i) else {
        return T::zero();
    };
    let rest = req
        .iter()
        .filter(|(c, _)| *c != i)
        .fold(T::one(), |acc, &(_, u)| acc * probs[u].clone());
    let p = probs[v].clone();
    rest * (p.clone() - p.clone() * p)
}

/// Table values converted to `T`.
pub fn table_as<T: Scalar>(values: &[Rational]) -> Vec<T> {
    values.iter().map(T::from_rational).collect()
}

/// Σ_x vals(x)·∏π(x_i) by folding away the most significant coordinate repeatedly.
pub fn reduce_all<T: Scalar>(vals: &[T], probs: &[T]) -> T {
    let m = probs.len();
    let mut cur = vals.to_vec();
    while cur.len() > 1 {
        let s = cur.len() / m;
        cur = (0..s)
            .map(|j| (0..m).fold(T::zero(), |acc, a| acc + probs[a].clone() * cur[j + a * s].clone()))
            .collect();
    }
    cur.pop().unwrap_or_else(T::one)
}

/// Replaces every fiber along `axis` by `op(fiber)`.
pub fn map_fibers<T: Scalar>(vals: &[T], m: usize, axis: usize, op: impl Fn(&[T]) -> Vec<T>) -> Vec<T> {
    let stride = radix::stride(m, axis);
    let mut out = vals.to_vec();
    let mut fiber = Vec::with_capacity(m);
    for base in 0..vals.len() {
        if (base / stride) % m != 0 {
            continue;
        }
        fiber.clear();
        fiber.extend((0..m).map(|a| vals[base + a * stride].clone()));
        for (a, v) in op(&fiber).into_iter().enumerate() {
            out[base + a * stride] = v;
        }
    }
    out
}

pub fn mean_of<T: Scalar>(fiber: &[T], probs: &[T]) -> T {
    fiber.iter().zip(probs).fold(T::zero(), |acc, (v, p)| acc + v.clone() * p.clone())
}

fn table_influence<T: Scalar>(vals: &[T], probs: &[T], i: usize) -> T {
    let m = probs.len();
    let vars = map_fibers(vals, m, i, |fib| {
        let mean = mean_of(fib, probs);
        let sq = fib.iter().zip(probs).fold(T::zero(), |acc, (v, p)| acc + v.clone() * v.clone() * p.clone());
        vec![sq - mean.clone() * mean; m]
    });
    reduce_all(&vars, probs)
}

fn check_alphabet(f: &FunctionSpec, pi: &MarginalDistribution) -> Result<()> {
    if f.alphabet() != pi.alphabet() {
        return Err(Error::Invalid("function and distribution use different alphabets".into()));
    }
    Ok(())
}

/// Number of points in supp(π)^n, saturating.
pub fn support_points(support: usize, n: usize) -> u128 {
    (support as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

fn enumerate_expectation<T: Scalar>(f: &FunctionSpec, probs: &[T], budget: u128) -> Result<T> {
    let support: Vec<usize> = (0..probs.len()).filter(|&a| !probs[a].is_zero()).collect();
    let n = f.n();
    let k = support.len();
    let needed = support_points(k, n);
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }
    Ok(par::sum_ranges(needed as usize, |range| {
        let mut digits = radix::decode(range.start, k, n);
        let mut x = vec![0; n];
        let mut acc = T::zero();
        for _ in range {
            for (xi, &d) in x.iter_mut().zip(&digits) {
                *xi = support[d];
            }
            let v: T = f.value_as(&x);
            if !v.is_zero() {
                acc = acc + x.iter().fold(v, |w, &a| w * probs[a].clone());
            }
            radix::increment(&mut digits, k);
        }
        acc
    }))
}

fn structured_expectation<T: Multinomial>(f: &FunctionSpec, probs: &[T]) -> T {
    match f.kind() {
        FunctionKind::Constant(c) => T::from_rational(c),
        FunctionKind::Table(v) => reduce_all(&table_as::<T>(v), probs),
        FunctionKind::Junta(cs) => junta_expectation(cs, probs),
        FunctionKind::ModLinear(ml) => residue_distribution(ml, probs, None)[ml.residue as usize].clone(),
        FunctionKind::AnchoredSymmetric(an) => anchored_expectation(an, f.n(), probs),
    }
}

pub(crate) fn expectation_in<T: Multinomial>(f: &FunctionSpec, probs: &[T], engine: Engine, budget: u128) -> Result<T> {
    match engine {
        Engine::Enumerate => enumerate_expectation(f, probs, budget),
        Engine::Dp | Engine::Auto => Ok(structured_expectation(f, probs)),
    }
}

/// E[f(X)] for X ~ π^n.
pub fn expectation(f: &FunctionSpec, pi: &MarginalDistribution) -> Result<Number> {
    expectation_with(f, pi, Engine::Auto, DEFAULT_BUDGET)
}

pub fn expectation_with(f: &FunctionSpec, pi: &MarginalDistribution, engine: Engine, budget: u128) -> Result<Number> {
    check_alphabet(f, pi)?;
    with_weights!(pi.probs(), v => expectation_in(f, v, engine, budget).map(Scalar::into_number))
}

fn variance_in<T: Multinomial>(f: &FunctionSpec, probs: &[T]) -> T {
    let mean = structured_expectation(f, probs);
    let second = match f.kind() {
        FunctionKind::Table(v) => {
            let sq: Vec<T> = table_as::<T>(v).into_iter().map(|x| x.clone() * x).collect();
            reduce_all(&sq, probs)
        }
        FunctionKind::Constant(_) => mean.clone() * mean.clone(),
        _ => mean.clone(),
    };
    second - mean.clone() * mean
}

/// Var[f(X)] for X ~ π^n.
pub fn variance(f: &FunctionSpec, pi: &MarginalDistribution) -> Result<Number> {
    check_alphabet(f, pi)?;
    Ok(with_weights!(pi.probs(), v => variance_in(f, v).into_number()))
}

fn influence_in<T: Multinomial>(f: &FunctionSpec, probs: &[T], i: usize) -> T {
    match f.kind() {
        FunctionKind::Constant(_) => T::zero(),
        FunctionKind::Table(v) => table_influence(&table_as::<T>(v), probs, i),
        FunctionKind::Junta(cs) => junta_influence(cs, probs, i),
        FunctionKind::ModLinear(ml) => mod_linear_influence(ml, probs, i),
        FunctionKind::AnchoredSymmetric(an) => anchored_influence(an, f.n(), probs, i),
    }
}

/// Inf_i(f) = E[Var[f(X) | X_{∖i}]].
pub fn influence(f: &FunctionSpec, pi: &MarginalDistribution, i: usize) -> Result<Number> {
    check_alphabet(f, pi)?;
    if i >= f.n() {
        return Err(Error::Range(format!("coordinate {i} outside 0..{}", f.n())));
    }
    Ok(with_weights!(pi.probs(), v => influence_in(f, v, i).into_number()))
}

/// Influences of all coordinates. Symmetric coordinates of anchored functions share one computation.
pub fn influences(f: &FunctionSpec, pi: &MarginalDistribution) -> Result<Vec<Number>> {
    check_alphabet(f, pi)?;
    let n = f.n();
    if let FunctionKind::AnchoredSymmetric(an) = f.kind() {
        let anchors: Vec<usize> = an.clauses.iter().filter_map(|c| c.anchor.map(|(i, _)| i)).collect();
        let mut cache: Option<Number> = None;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let generic = !anchors.contains(&i) && an.ignored.binary_search(&i).is_err();
            if generic {
                if cache.is_none() {
                    cache = Some(influence(f, pi, i)?);
                }
                out.push(cache.clone().expect("cached"));
            } else {
                out.push(influence(f, pi, i)?);
            }
        }
        return Ok(out);
    }
    (0..n).map(|i| influence(f, pi, i)).collect()
}

pub fn total_influence(f: &FunctionSpec, pi: &MarginalDistribution) -> Result<Number> {
    let all = influences(f, pi)?;
    Ok(match pi.probs() {
        crate::Weights::Exact(_) => Number::Exact(all.iter().map(Number::to_rational).sum()),
        crate::Weights::Float(_) => Number::Float(all.iter().map(Number::to_f64).sum()),
    })
}
