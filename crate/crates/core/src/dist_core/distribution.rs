use std::collections::HashMap;
use std::fmt;

use num::traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::number::{sum, zero_of, Number, Rational, Scalar, Weights};
use crate::radix;
use crate::with_weights;

/// Largest dense table a distribution may occupy.
pub const MAX_TABLE: usize = 1 << 26;

const FLOAT_SUM_TOL: f64 = 1e-12;

/// Ordered set of symbol tokens; the index order is the canonical order for every table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Invalid("empty alphabet".into()));
        }
        let mut index = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::Invalid(format!("bad symbol token {s:?}")));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// The alphabet `0, 1, …, m−1`.
    pub fn numeric(m: usize) -> Self {
        Alphabet::new((0..m).map(|i| i.to_string())).expect("numeric alphabet is valid")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, tok: &str) -> Option<usize> {
        self.index.get(tok).copied()
    }

    pub(crate) fn subset(&self, keep: &[usize]) -> Alphabet {
        Alphabet::new(keep.iter().map(|&i| self.symbols[i].clone())).expect("subset of valid alphabet")
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.symbols.join(","))
    }
}

/// A probability vector over an alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalDistribution {
    alphabet: Alphabet,
    probs: Weights,
}

impl MarginalDistribution {
    pub fn new(alphabet: Alphabet, probs: Weights) -> Result<Self> {
        if probs.len() != alphabet.len() {
            return Err(Error::Invalid(format!(
                "{} probabilities for {} symbols",
                probs.len(),
                alphabet.len()
            )));
        }
        check_probability_vector(&probs)?;
        Ok(MarginalDistribution { alphabet, probs })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let m = alphabet.len();
        let p = Rational::new(1.into(), (m as i64).into());
        MarginalDistribution {
            alphabet,
            probs: Weights::Exact(vec![p; m]),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &Weights {
        &self.probs
    }

    pub fn prob(&self, a: usize) -> Number {
        self.probs.get(a)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&a| self.probs.is_positive(a)).collect()
    }

    /// Smallest positive probability, written α(π).
    pub fn min_positive(&self) -> Number {
        with_weights!(&self.probs, v => {
            v.iter()
                .filter(|x| **x > zero_of(v))
                .cloned()
                .reduce(|a, b| if b < a { b } else { a })
                .map(Scalar::into_number)
                .unwrap_or(Number::Float(0.0))
        })
    }
}

pub(crate) fn check_probability_vector(w: &Weights) -> Result<()> {
    match w {
        Weights::Exact(v) => {
            if let Some(x) = v.iter().find(|x| x.is_negative()) {
                return Err(Error::Invalid(format!("negative weight {x}")));
            }
            let s: Rational = sum(v.iter().cloned());
            if s != Rational::from_integer(1.into()) {
                return Err(Error::Normalization(s.to_string()));
            }
        }
        Weights::Float(v) => {
            if let Some(x) = v.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
                return Err(Error::Invalid(format!("negative or non-finite weight {x}")));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > FLOAT_SUM_TOL {
                return Err(Error::Normalization(s.to_string()));
            }
        }
    }
    Ok(())
}

/// An ℓ-step distribution over Ω^ℓ stored as a dense table.
///
/// Tuples are indexed in mixed radix with step 0 least significant; steps and
/// coordinates are 0-based throughout the library.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    alphabet: Alphabet,
    steps: usize,
    weights: Weights,
    name: Option<String>,
}

impl StepDistribution {
    pub fn new(alphabet: Alphabet, steps: usize, weights: Weights) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Invalid("a distribution needs at least one step".into()));
        }
        let size = radix::checked_pow(alphabet.len(), steps)
            .filter(|&s| s <= MAX_TABLE)
            .ok_or_else(|| Error::Invalid("table over Ω^ℓ is too large".into()))?;
        if weights.len() != size {
            return Err(Error::Invalid(format!(
                "table has {} entries, expected {size}",
                weights.len()
            )));
        }
        check_probability_vector(&weights)?;
        Ok(StepDistribution {
            alphabet,
            steps,
            weights,
            name: None,
        })
    }

    /// Builds a table from explicit `(tuple, weight)` entries; unlisted tuples get weight 0.
    pub fn from_entries(
        alphabet: Alphabet,
        steps: usize,
        entries: impl IntoIterator<Item = (Vec<usize>, Number)>,
    ) -> Result<Self> {
        let m = alphabet.len();
        let size = radix::checked_pow(m, steps)
            .filter(|&s| s <= MAX_TABLE)
            .ok_or_else(|| Error::Invalid("table over Ω^ℓ is too large".into()))?;
        let mut table: Vec<Option<Number>> = vec![None; size];
        for (t, w) in entries {
            if t.len() != steps || t.iter().any(|&a| a >= m) {
                return Err(Error::Invalid(format!("bad tuple {t:?}")));
            }
            let idx = radix::encode(&t, m);
            if table[idx].replace(w).is_some() {
                return Err(Error::Invalid(format!("duplicate entry {t:?}")));
            }
        }
        let exact = table.iter().flatten().all(Number::is_exact);
        let nums = table
            .into_iter()
            .map(|w| w.unwrap_or(if exact { Number::Exact(Rational::zero()) } else { Number::Float(0.0) }))
            .collect();
        StepDistribution::new(alphabet, steps, Weights::from_numbers(nums))
    }

    /// The exact uniform distribution on the listed tuples.
    pub fn uniform_on(alphabet: Alphabet, tuples: &[Vec<usize>]) -> Result<Self> {
        let steps = tuples
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Invalid("no tuples".into()))?;
        let w = Rational::new(1.into(), (tuples.len() as i64).into());
        StepDistribution::from_entries(
            alphabet,
            steps,
            tuples.iter().map(|t| (t.clone(), Number::Exact(w.clone()))),
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn is_exact(&self) -> bool {
        self.weights.is_exact()
    }

    pub fn table_len(&self) -> usize {
        self.weights.len()
    }

    pub fn tuple(&self, idx: usize) -> Vec<usize> {
        radix::decode(idx, self.alphabet.len(), self.steps)
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        radix::encode(tuple, self.alphabet.len())
    }

    pub fn weight(&self, tuple: &[usize]) -> Number {
        self.weights.get(self.index(tuple))
    }

    /// Indices of tuples with positive weight, in canonical order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights.is_positive(i))
            .collect()
    }

    /// Joint law of the listed steps, as a table with the first listed step least significant.
    pub fn project(&self, steps: &[usize]) -> Result<Weights> {
        if let Some(&j) = steps.iter().find(|&&j| j >= self.steps) {
            return Err(Error::Range(format!("step {j} of {}", self.steps)));
        }
        let m = self.alphabet.len();
        let out_len = radix::checked_pow(m, steps.len()).expect("projection fits");
        Ok(with_weights!(&self.weights, v => {
            let mut out = vec![zero_of(v); out_len];
            let mut digits = vec![0; self.steps];
            for (idx, w) in v.iter().enumerate() {
                if w.is_zero() {
                    continue;
                }
                radix::decode_into(idx, m, &mut digits);
                let o = steps.iter().rev().fold(0, |acc, &j| acc * m + digits[j]);
                out[o] = out[o].clone() + w.clone();
            }
            Scalar::into_weights(out)
        }))
    }

    /// Law of step `j`.
    pub fn marginal(&self, j: usize) -> Result<MarginalDistribution> {
        let probs = self.project(&[j])?;
        Ok(MarginalDistribution {
            alphabet: self.alphabet.clone(),
            probs,
        })
    }

    /// True iff all step marginals agree, exactly for rational tables and within `tol` otherwise.
    pub fn equal_marginals(&self, tol: f64) -> bool {
        let first = self.marginal(0).expect("step 0 exists");
        (1..self.steps).all(|j| {
            let mj = self.marginal(j).expect("step in range");
            match (first.probs(), mj.probs()) {
                (Weights::Exact(a), Weights::Exact(b)) => a == b,
                (a, b) => (0..a.len()).all(|i| (a.get_f64(i) - b.get_f64(i)).abs() <= tol),
            }
        })
    }

    /// Symbols carrying positive mass in at least one step.
    pub fn active_symbols(&self) -> Vec<usize> {
        let m = self.alphabet.len();
        let mut active = vec![false; m];
        for idx in self.support() {
            for a in self.tuple(idx) {
                active[a] = true;
            }
        }
        (0..m).filter(|&a| active[a]).collect()
    }

    /// α(P): the smallest diagonal weight P(x, …, x) over symbols in the support.
    pub fn alpha(&self) -> Number {
        let diag: Vec<usize> = self
            .active_symbols()
            .into_iter()
            .map(|x| self.index(&vec![x; self.steps]))
            .collect();
        self.min_over(&diag)
    }

    /// β(P): the smallest weight over the product of the per-step marginal supports.
    pub fn beta(&self) -> Number {
        let m = self.alphabet.len();
        let supports: Vec<Vec<usize>> = (0..self.steps)
            .map(|j| self.marginal(j).expect("step in range").support())
            .collect();
        let mut cells = Vec::new();
        let mut pos = vec![0usize; self.steps];
        'outer: loop {
            let t: Vec<usize> = pos.iter().zip(&supports).map(|(&p, s)| s[p]).collect();
            cells.push(radix::encode(&t, m));
            for j in 0..self.steps {
                pos[j] += 1;
                if pos[j] < supports[j].len() {
                    continue 'outer;
                }
                pos[j] = 0;
            }
            break;
        }
        self.min_over(&cells)
    }

    fn min_over(&self, cells: &[usize]) -> Number {
        with_weights!(&self.weights, v => {
            cells
                .iter()
                .map(|&i| v[i].clone())
                .reduce(|a, b| if b < a { b } else { a })
                .unwrap_or_else(|| zero_of(v))
                .into_number()
        })
    }

    /// Two-step symmetry P(x, y) = P(y, x), exact for rational tables.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.steps != 2 {
            return false;
        }
        let m = self.alphabet.len();
        (0..m).all(|x| {
            (0..m).all(|y| match &self.weights {
                Weights::Exact(v) => v[x + m * y] == v[y + m * x],
                Weights::Float(v) => (v[x + m * y] - v[y + m * x]).abs() <= tol,
            })
        })
    }

    /// (P + Pᵀ)/2 for a two-step distribution.
    pub fn symmetrized(&self) -> Result<StepDistribution> {
        if self.steps != 2 {
            return Err(Error::Precondition("symmetrization needs two steps".into()));
        }
        let m = self.alphabet.len();
        let weights = with_weights!(&self.weights, v => transpose_average(v, m));
        StepDistribution::new(self.alphabet.clone(), 2, weights)
    }
}

fn transpose_average<T: Scalar>(v: &[T], m: usize) -> Weights {
    let two = T::from_usize(2);
    let out: Vec<T> = (0..m * m)
        .map(|i| (v[i].clone() + v[(i % m) * m + i / m].clone()) / two.clone())
        .collect();
    T::into_weights(out)
}
