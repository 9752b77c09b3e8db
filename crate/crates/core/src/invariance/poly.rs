//! Multilinear polynomials over orthonormal ensembles.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fourier::{analyze, FunctionSpec, OrthonormalBasis};
use crate::radix;

/// Σ_σ α(σ)·∏_i x_{i,σ_i} with σ ∈ {0..p}^n and x_{i,0} ≡ 1. Zero coefficients are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearPolynomial {
    n: usize,
    p: usize,
    coeffs: BTreeMap<Vec<usize>, f64>,
}

impl Serialize for MultilinearPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term<'a> {
            sigma: &'a [usize],
            coeff: f64,
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            n: usize,
            ensemble_size: usize,
            terms: Vec<Term<'a>>,
        }
        Repr {
            n: self.n,
            ensemble_size: self.p,
            terms: self.coeffs.iter().map(|(sigma, &coeff)| Term { sigma, coeff }).collect(),
        }
        .serialize(s)
    }
}

/// Which degrees `truncate` keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeFilter {
    AtMost(usize),
    Above(usize),
    AtLeast(usize),
}

impl DegreeFilter {
    fn keeps(self, deg: usize) -> bool {
        match self {
            DegreeFilter::AtMost(d) => deg <= d,
            DegreeFilter::Above(d) => deg > d,
            DegreeFilter::AtLeast(d) => deg >= d,
        }
    }
}

fn weight(sigma: &[usize]) -> usize {
    sigma.iter().filter(|&&s| s != 0).count()
}

impl MultilinearPolynomial {
    pub fn new(n: usize, p: usize, terms: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (sigma, c) in terms {
            if sigma.len() != n || sigma.iter().any(|&s| s > p) {
                return Err(Error::Invalid(format!("σ = {sigma:?} is not in {{0..{p}}}^{n}")));
            }
            if !c.is_finite() {
                return Err(Error::Invalid(format!("coefficient {c} at σ = {sigma:?} is not finite")));
            }
            if c != 0.0 {
                *coeffs.entry(sigma).or_insert(0.0) += c;
            }
        }
        coeffs.retain(|_, c| *c != 0.0);
        Ok(MultilinearPolynomial { n, p, coeffs })
    }

    pub fn constant(n: usize, p: usize, c: f64) -> Self {
        MultilinearPolynomial::new(n, p, [(vec![0; n], c)]).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ensemble size p: each coordinate carries x_{i,0} ≡ 1 and x_{i,1..=p}.
    pub fn ensemble_size(&self) -> usize {
        self.p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.coeffs.iter().map(|(s, &c)| (s.as_slice(), c))
    }

    pub fn coefficient(&self, sigma: &[usize]) -> f64 {
        self.coeffs.get(sigma).copied().unwrap_or(0.0)
    }

    /// Largest |σ| over stored terms.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|s| weight(s)).max().unwrap_or(0)
    }

    /// α(0ⁿ).
    pub fn mean(&self) -> f64 {
        self.coefficient(&vec![0; self.n])
    }

    /// Σ_σ α(σ)².
    pub fn second_moment(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    pub fn variance(&self) -> f64 {
        self.coeffs.iter().filter(|(s, _)| weight(s) > 0).map(|(_, c)| c * c).sum()
    }

    /// Σ_{σ_i ≠ 0} α(σ)².
    pub fn influence(&self, i: usize) -> f64 {
        self.coeffs.iter().filter(|(s, _)| s[i] != 0).map(|(_, c)| c * c).sum()
    }

    pub fn influences(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.influence(i)).collect()
    }

    fn map_terms(&self, f: impl Fn(&[usize], f64) -> Option<f64>) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter_map(|(s, &c)| f(s, c).filter(|v| *v != 0.0).map(|v| (s.clone(), v)))
            .collect();
        MultilinearPolynomial {
            n: self.n,
            p: self.p,
            coeffs,
        }
    }

    /// T_ρ: each α(σ) scaled by ρ^{|σ|}.
    pub fn t_rho(&self, rho: f64) -> Self {
        self.map_terms(|s, c| Some(c * rho.powi(weight(s) as i32)))
    }

    pub fn truncate(&self, keep: DegreeFilter) -> Self {
        self.map_terms(|s, c| keep.keeps(weight(s)).then_some(c))
    }

    /// P_S: the terms whose set of active coordinates is exactly `set`.
    pub fn part(&self, set: &[usize]) -> Self {
        self.map_terms(|s, c| (0..self.n).all(|i| (s[i] != 0) == set.contains(&i)).then_some(c))
    }

    /// The distinct active-coordinate sets of the stored terms, in lexicographic order of σ.
    pub fn active_sets(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = self
            .coeffs
            .keys()
            .map(|s| (0..self.n).filter(|&i| s[i] != 0).collect())
            .collect();
        sets.sort();
        sets.dedup();
        sets
    }

    /// E[(P^{≥d})²].
    pub fn tail_mass(&self, d: usize) -> f64 {
        self.coeffs.iter().filter(|(s, _)| weight(s) >= d).map(|(_, c)| c * c).sum()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.p != other.p {
            return Err(Error::Invalid("polynomials live on different ensembles".into()));
        }
        let terms = self.terms().chain(other.terms()).map(|(s, c)| (s.to_vec(), c));
        MultilinearPolynomial::new(self.n, self.p, terms)
    }

    /// P(x) where `x[i][k]` is the value of x_{i,k} for k = 1..=p (x_{i,0} = 1 is implied).
    pub fn evaluate_with(&self, x: impl Fn(usize, usize) -> f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(s, &c)| {
                s.iter()
                    .enumerate()
                    .filter(|(_, &k)| k != 0)
                    .fold(c, |acc, (i, &k)| acc * x(i, k))
            })
            .sum()
    }

    /// P on the discrete ensemble x_{i,k} = φ_k(a_i).
    pub fn evaluate_discrete(&self, basis: &OrthonormalBasis, point: &[usize]) -> f64 {
        self.evaluate_with(|i, k| basis.value(k, point[i]))
    }

    /// P at every point of Ω^n, mixed radix with coordinate 0 least significant.
    pub fn discrete_values(&self, basis: &OrthonormalBasis) -> Result<Vec<f64>> {
        self.check_basis(basis)?;
        let m = basis.alphabet_len();
        let len = radix::checked_pow(m, self.n).ok_or_else(|| Error::Invalid("Ω^n is too large".into()))?;
        let mut x = vec![0; self.n];
        let mut out = Vec::with_capacity(len);
        loop {
            out.push(self.evaluate_discrete(basis, &x));
            if !radix::increment(&mut x, m) {
                return Ok(out);
            }
        }
    }

    pub(crate) fn check_basis(&self, basis: &OrthonormalBasis) -> Result<()> {
        if basis.size() != self.p + 1 {
            return Err(Error::Invalid(format!(
                "polynomial has ensemble size {}, basis has {} non-constant functions",
                self.p,
                basis.size() - 1
            )));
        }
        Ok(())
    }
}

/// The unique expansion of f in the product basis, dropping coefficients below 1e−15 in magnitude.
pub fn poly_from_function(f: &FunctionSpec, basis: &OrthonormalBasis) -> Result<MultilinearPolynomial> {
    let e = analyze(f, basis)?;
    let terms = (0..e.coeffs.len())
        .filter(|&idx| e.coeffs[idx].abs() > 1e-15)
        .map(|idx| (e.sigma(idx), e.coeffs[idx]));
    MultilinearPolynomial::new(f.n(), basis.size() - 1, terms)
}

/// Where the ensemble variables come from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleSequence {
    /// x_{i,k} = φ_k(X_i) with X_i i.i.d. from the basis' π.
    Discrete { basis: OrthonormalBasis, n: usize },
    /// x_{i,k} independent N(0, 1).
    Gaussian { n: usize, p: usize },
}

impl EnsembleSequence {
    pub fn n(&self) -> usize {
        match self {
            EnsembleSequence::Discrete { n, .. } | EnsembleSequence::Gaussian { n, .. } => *n,
        }
    }

    pub fn ensemble_size(&self) -> usize {
        match self {
            EnsembleSequence::Discrete { basis, .. } => basis.size() - 1,
            EnsembleSequence::Gaussian { p, .. } => *p,
        }
    }

    /// max |E[x_{i,j}x_{i,k}] − δ_{jk}|, computed exactly for discrete ensembles and 0 for Gaussian ones.
    pub fn orthonormality_defect(&self) -> f64 {
        match self {
            EnsembleSequence::Discrete { basis, .. } => {
                let k = basis.size();
                let g = basis.gram();
                (0..k * k)
                    .map(|e| (g[e] - if e / k == e % k { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max)
            }
            EnsembleSequence::Gaussian { .. } => 0.0,
        }
    }

    pub(crate) fn check(&self, poly: &MultilinearPolynomial) -> Result<()> {
        if poly.n() != self.n() || poly.ensemble_size() != self.ensemble_size() {
            return Err(Error::Invalid("polynomial and ensemble disagree on n or p".into()));
        }
        Ok(())
    }
}
