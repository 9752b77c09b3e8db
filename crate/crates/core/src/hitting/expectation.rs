//! Exact E[∏_j f⁽ʲ⁾(X⁽ʲ⁾)] for coordinates drawn i.i.d. from a step distribution.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::integer::Integer;
use num::traits::{One, Pow, Zero};
use serde::Serialize;

use crate::dist_core::StepDistribution;
use crate::error::{Error, Result};
use crate::fourier::{support_points, Anchored, Engine, FunctionKind, FunctionSpec, ModLinear};
use crate::number::{Number, Rational, Scalar, Weights};
use crate::{par, radix, with_weights};

/// Anchored functions with more clauses than this fall back to enumeration.
const MAX_CLAUSES: usize = 32;

/// A hitting question: one function per step, all over the same Ω^n.
#[derive(Clone, Debug)]
pub struct HittingInstance {
    p: StepDistribution,
    fns: Vec<FunctionSpec>,
}

impl HittingInstance {
    /// The same function on every step.
    pub fn same_set(p: &StepDistribution, f: &FunctionSpec) -> Result<Self> {
        HittingInstance::multi_set(p, vec![f.clone(); p.steps()])
    }

    pub fn multi_set(p: &StepDistribution, fns: Vec<FunctionSpec>) -> Result<Self> {
        if fns.len() != p.steps() {
            return Err(Error::Invalid(format!(
                "{} functions given for a {}-step distribution",
                fns.len(),
                p.steps()
            )));
        }
        if fns.is_empty() {
            return Err(Error::Invalid("a hitting instance needs at least one step".into()));
        }
        let n = fns[0].n();
        for f in &fns {
            if f.alphabet() != p.alphabet() {
                return Err(Error::Invalid("function and distribution use different alphabets".into()));
            }
            if f.n() != n {
                return Err(Error::Invalid("functions disagree on n".into()));
            }
        }
        Ok(HittingInstance { p: p.clone(), fns })
    }

    pub fn distribution(&self) -> &StepDistribution {
        &self.p
    }

    pub fn functions(&self) -> &[FunctionSpec] {
        &self.fns
    }

    pub fn n(&self) -> usize {
        self.fns[0].n()
    }

    /// Number of terms the enumeration route would visit.
    pub fn enumeration_size(&self) -> u128 {
        support_points(self.p.support().len(), self.n())
    }

    /// The route `engine` resolves to, or the reason none applies.
    pub fn route(&self, engine: Engine, budget: u128) -> Result<Engine> {
        let dp = is_dp_compatible(&self.fns);
        match engine {
            Engine::Dp if dp => Ok(Engine::Dp),
            Engine::Dp => Err(Error::Precondition("a table function rules out the counting route".into())),
            Engine::Auto if dp => Ok(Engine::Dp),
            Engine::Enumerate | Engine::Auto => {
                let needed = self.enumeration_size();
                if needed > budget {
                    Err(Error::Budget { needed, budget })
                } else {
                    Ok(Engine::Enumerate)
                }
            }
        }
    }

    pub fn expectation(&self, engine: Engine, budget: u128) -> Result<Number> {
        Ok(self.evaluate(engine, budget)?.value)
    }

    /// The expectation together with the route that produced it.
    pub fn evaluate(&self, engine: Engine, budget: u128) -> Result<HittingValue> {
        let route = self.route(engine, budget)?;
        let value = match route {
            Engine::Dp => dp_expectation(&self.p, &self.fns),
            _ => with_weights!(self.p.weights(), w => enumerate(&self.p, w, &self.fns).into_number()),
        };
        Ok(HittingValue { value, route })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HittingValue {
    pub value: Number,
    pub route: Engine,
}

/// E[∏_j f(X⁽ʲ⁾)].
pub fn same_set_expectation(p: &StepDistribution, f: &FunctionSpec, engine: Engine, budget: u128) -> Result<Number> {
    HittingInstance::same_set(p, f)?.expectation(engine, budget)
}

/// E[∏_j f⁽ʲ⁾(X⁽ʲ⁾)].
pub fn multi_set_expectation(p: &StepDistribution, fns: &[FunctionSpec], engine: Engine, budget: u128) -> Result<Number> {
    HittingInstance::multi_set(p, fns.to_vec())?.expectation(engine, budget)
}

/// True when every function has a finite per-coordinate state: anchored (at most 32 clauses),
/// mod-linear, junta or constant.
pub fn is_dp_compatible(fns: &[FunctionSpec]) -> bool {
    fns.iter().all(|f| match f.kind() {
        FunctionKind::Table(_) => false,
        FunctionKind::AnchoredSymmetric(an) => an.clauses.len() <= MAX_CLAUSES,
        _ => true,
    })
}

fn enumerate<T: Scalar>(p: &StepDistribution, w: &[T], fns: &[FunctionSpec]) -> T {
    let support = p.support();
    let tuples: Vec<Vec<usize>> = support.iter().map(|&i| p.tuple(i)).collect();
    let n = fns[0].n();
    let k = support.len();
    let total = support_points(k, n) as usize;
    par::sum_ranges(total, |range| {
        let mut digits = radix::decode(range.start, k, n);
        let mut xs = vec![vec![0; n]; fns.len()];
        let mut acc = T::zero();
        for _ in range {
            for (i, &d) in digits.iter().enumerate() {
                for (j, x) in xs.iter_mut().enumerate() {
                    x[i] = tuples[d][j];
                }
            }
            let mut v = T::one();
            for (f, x) in fns.iter().zip(&xs) {
                v = v * f.value_as::<T>(x);
                if v.is_zero() {
                    break;
                }
            }
            if !v.is_zero() {
                acc = acc + digits.iter().fold(v, |a, &d| a * w[support[d]].clone());
            }
            radix::increment(&mut digits, k);
        }
        acc
    })
}

/// Per-function automaton read left to right over the coordinates.
enum Tracker<'a> {
    /// Contributes a constant factor and no state.
    Constant,
    Junta(Vec<Option<usize>>),
    ModLinear(&'a ModLinear),
    Anchored(AnchoredTracker<'a>),
}

struct AnchoredTracker<'a> {
    an: &'a Anchored,
    /// Constrained symbols; slot c of the state counts `symbols[c]`.
    symbols: Vec<usize>,
    slot_of: Vec<Option<usize>>,
    caps: Vec<u32>,
    /// `(clause, symbol)` anchors checked at each coordinate.
    anchors_at: Vec<Vec<(usize, usize)>>,
    counted: Vec<bool>,
    /// Counted coordinates strictly after each coordinate.
    remaining: Vec<i64>,
}

impl<'a> AnchoredTracker<'a> {
    fn new(an: &'a Anchored, n: usize, m: usize) -> Self {
        let mut symbols: Vec<usize> = an.clauses.iter().flat_map(|c| c.windows.keys().copied()).collect();
        symbols.sort_unstable();
        symbols.dedup();
        let mut slot_of = vec![None; m];
        for (c, &s) in symbols.iter().enumerate() {
            slot_of[s] = Some(c);
        }
        let caps = symbols
            .iter()
            .map(|s| {
                let hi = an.clauses.iter().filter_map(|c| c.windows.get(s).map(|w| w.1)).max().unwrap_or(0);
                (hi.max(-1) + 1) as u32
            })
            .collect();
        let mut anchors_at = vec![Vec::new(); n];
        for (k, c) in an.clauses.iter().enumerate() {
            if let Some((i, v)) = c.anchor {
                anchors_at[i].push((k, v));
            }
        }
        let counted: Vec<bool> = (0..n).map(|i| an.ignored.binary_search(&i).is_err()).collect();
        let mut remaining = vec![0i64; n];
        let mut after = 0i64;
        for i in (0..n).rev() {
            remaining[i] = after;
            after += i64::from(counted[i]);
        }
        AnchoredTracker {
            an,
            symbols,
            slot_of,
            caps,
            anchors_at,
            counted,
            remaining,
        }
    }

    fn slots(&self) -> usize {
        self.symbols.len() + 1
    }

    fn total_counted(&self) -> i64 {
        self.counted.iter().filter(|&&c| c).count() as i64
    }

    /// Clears clauses that can no longer be satisfied with `left` counted coordinates to come.
    fn prune(&self, st: &mut [u32], left: i64) -> bool {
        let k = self.symbols.len();
        let mut mask = st[k];
        for (c, cl) in self.an.clauses.iter().enumerate() {
            if mask & (1 << c) == 0 {
                continue;
            }
            let dead = cl.windows.iter().any(|(&s, &(lo, hi))| {
                let count = i64::from(st[self.slot_of[s].expect("constrained symbol")]);
                count > hi || count + left < lo
            });
            if dead {
                mask &= !(1 << c);
            }
        }
        st[k] = mask;
        mask != 0
    }

    fn init(&self, st: &mut [u32]) -> bool {
        let k = self.symbols.len();
        st[..k].fill(0);
        st[k] = if self.an.clauses.len() == 32 { u32::MAX } else { (1u32 << self.an.clauses.len()) - 1 };
        self.prune(st, self.total_counted())
    }

    fn step(&self, i: usize, a: usize, st: &mut [u32]) -> bool {
        let k = self.symbols.len();
        if self.counted[i] {
            if let Some(c) = self.slot_of[a] {
                st[c] = (st[c] + 1).min(self.caps[c]);
            }
        }
        for &(cl, v) in &self.anchors_at[i] {
            if a != v {
                st[k] &= !(1 << cl);
            }
        }
        self.prune(st, self.remaining[i])
    }
}

impl Tracker<'_> {
    fn slots(&self) -> usize {
        match self {
            Tracker::Constant | Tracker::Junta(_) => 0,
            Tracker::ModLinear(_) => 1,
            Tracker::Anchored(t) => t.slots(),
        }
    }

    fn init(&self, st: &mut [u32]) -> bool {
        match self {
            Tracker::Constant | Tracker::Junta(_) => true,
            Tracker::ModLinear(_) => {
                st[0] = 0;
                true
            }
            Tracker::Anchored(t) => t.init(st),
        }
    }

    fn step(&self, i: usize, a: usize, st: &mut [u32]) -> bool {
        match self {
            Tracker::Constant => true,
            Tracker::Junta(need) => need[i].is_none_or(|v| v == a),
            Tracker::ModLinear(ml) => {
                st[0] = ((u64::from(st[0]) + ml.coeffs[i] * ml.symbol_map[a]) % ml.modulus) as u32;
                true
            }
            Tracker::Anchored(t) => t.step(i, a, st),
        }
    }

    fn accepts(&self, st: &[u32]) -> bool {
        match self {
            Tracker::ModLinear(ml) => u64::from(st[0]) == ml.residue,
            Tracker::Anchored(t) => st[t.symbols.len()] != 0,
            _ => true,
        }
    }
}

/// Builds the trackers; `None` when some function is identically zero.
fn trackers(fns: &[FunctionSpec]) -> Option<(Vec<Tracker<'_>>, Rational)> {
    let mut factor = Rational::one();
    let mut out = Vec::with_capacity(fns.len());
    for f in fns {
        let t = match f.kind() {
            FunctionKind::Constant(c) => {
                if c.is_zero() {
                    return None;
                }
                factor *= c;
                Tracker::Constant
            }
            FunctionKind::Junta(cs) => {
                let mut need = vec![None; f.n()];
                for &(i, v) in cs {
                    if need[i].is_some_and(|u| u != v) {
                        return None;
                    }
                    need[i] = Some(v);
                }
                Tracker::Junta(need)
            }
            FunctionKind::ModLinear(ml) => Tracker::ModLinear(ml),
            FunctionKind::AnchoredSymmetric(an) => Tracker::Anchored(AnchoredTracker::new(an, f.n(), f.alphabet().len())),
            FunctionKind::Table(_) => unreachable!("checked by is_dp_compatible"),
        };
        out.push(t);
    }
    Some((out, factor))
}

/// Weighted count of accepted paths: Σ over x̄ of ∏ w(x̄_i) · [every tracker accepts].
fn run<A: Clone + Zero + One>(trackers: &[Tracker<'_>], n: usize, tuples: &[(Vec<usize>, A)]) -> A {
    let offsets: Vec<usize> = trackers
        .iter()
        .scan(0, |acc, t| {
            let o = *acc;
            *acc += t.slots();
            Some(o)
        })
        .collect();
    let width: usize = trackers.iter().map(Tracker::slots).sum();
    let slice = |j: usize| offsets[j]..offsets[j] + trackers[j].slots();

    let mut start = vec![0u32; width];
    for (j, t) in trackers.iter().enumerate() {
        if !t.init(&mut start[slice(j)]) {
            return A::zero();
        }
    }
    let mut layer: BTreeMap<Vec<u32>, A> = BTreeMap::new();
    layer.insert(start, A::one());
    for i in 0..n {
        let mut next: BTreeMap<Vec<u32>, A> = BTreeMap::new();
        for (st, w) in &layer {
            for (t, p) in tuples {
                let mut s = st.clone();
                let alive = trackers.iter().enumerate().all(|(j, tr)| tr.step(i, t[j], &mut s[slice(j)]));
                if alive {
                    let add = w.clone() * p.clone();
                    match next.get_mut(&s) {
                        Some(v) => *v = v.clone() + add,
                        None => {
                            next.insert(s, add);
                        }
                    }
                }
            }
        }
        layer = next;
    }
    layer
        .into_iter()
        .filter(|(st, _)| trackers.iter().enumerate().all(|(j, t)| t.accepts(&st[slice(j)])))
        .fold(A::zero(), |acc, (_, w)| acc + w)
}

fn dp_expectation(p: &StepDistribution, fns: &[FunctionSpec]) -> Number {
    let exact = p.is_exact();
    let Some((trackers, factor)) = trackers(fns) else {
        return if exact { Number::Exact(Rational::zero()) } else { Number::Float(0.0) };
    };
    let n = fns[0].n();
    let support = p.support();
    match p.weights() {
        Weights::Exact(w) => {
            // Integer numerators over a common denominator D keep the inner loop gcd-free.
            let d = support.iter().fold(BigInt::one(), |acc, &i| acc.lcm(w[i].denom()));
            let tuples: Vec<(Vec<usize>, BigInt)> = support
                .iter()
                .map(|&i| (p.tuple(i), (&w[i] * Rational::from_integer(d.clone())).to_integer()))
                .collect();
            let count = run(&trackers, n, &tuples);
            Number::Exact(Rational::new(count, Pow::pow(d, n)) * factor)
        }
        Weights::Float(w) => {
            let tuples: Vec<(Vec<usize>, f64)> = support.iter().map(|&i| (p.tuple(i), w[i])).collect();
            Number::Float(run(&trackers, n, &tuples) * Scalar::to_f64(&factor))
        }
    }
}
