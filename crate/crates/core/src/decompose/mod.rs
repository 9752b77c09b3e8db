//! Cycle machinery for two-step distributions: (s, p)-cycles, cycle decompositions of
//! regular digraphs, and convex decompositions into cycles and point masses.

use num::traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dist_core::{rho_report, Alphabet, StepDistribution};
use crate::error::{Error, Result};
use crate::number::{Number, Rational, Scalar, Weights};

/// Non-negative rational edge weights on Ω × Ω, row-major (`weight[u·m + v]` is the edge u → v).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedDigraph {
    alphabet: Alphabet,
    weight: Vec<Rational>,
}

impl WeightedDigraph {
    pub fn new(alphabet: Alphabet, weight: Vec<Rational>) -> Result<Self> {
        let m = alphabet.len();
        if weight.len() != m * m {
            return Err(Error::Invalid(format!("digraph needs {} weights", m * m)));
        }
        if weight.iter().any(Signed::is_negative) {
            return Err(Error::Invalid("negative edge weight".into()));
        }
        Ok(WeightedDigraph { alphabet, weight })
    }

    /// The digraph with an edge x → y of weight P(x, y).
    pub fn from_distribution(p: &StepDistribution) -> Result<Self> {
        let Weights::Exact(w) = p.weights() else {
            return Err(Error::Precondition("digraphs need rational weights".into()));
        };
        if p.steps() != 2 {
            return Err(Error::Precondition("digraphs come from two-step distributions".into()));
        }
        let m = p.alphabet().len();
        let weight = (0..m * m).map(|e| w[(e / m) + m * (e % m)].clone()).collect();
        WeightedDigraph::new(p.alphabet().clone(), weight)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn weight(&self, u: usize, v: usize) -> &Rational {
        &self.weight[u * self.alphabet.len() + v]
    }

    pub fn is_regular(&self) -> bool {
        let m = self.alphabet.len();
        (0..m).all(|v| {
            let out: Rational = (0..m).map(|w| self.weight(v, w)).sum();
            let inn: Rational = (0..m).map(|u| self.weight(u, v)).sum();
            out == inn
        })
    }
}

/// A directed cycle whose edges all carry the same weight; a single vertex is a self-loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightedCycle {
    pub vertices: Vec<usize>,
    #[serde(serialize_with = "ser_rational")]
    pub weight: Rational,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl WeightedCycle {
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let s = self.vertices.len();
        (0..s).map(move |i| (self.vertices[i], self.vertices[(i + 1) % s]))
    }
}

/// Peels cycles off a regular digraph until no edges remain.
///
/// Each round walks from the smallest vertex with an outgoing edge, always taking the
/// smallest-index outgoing edge, until a vertex repeats; the repeated segment is removed
/// at its minimum edge weight. Every round deletes at least one edge.
pub fn digraph_cycle_decomposition(g: &WeightedDigraph) -> Result<Vec<WeightedCycle>> {
    if !g.is_regular() {
        return Err(Error::Precondition("digraph is not regular".into()));
    }
    let m = g.alphabet.len();
    let mut w = g.weight.clone();
    let mut cycles = Vec::new();
    let next = |w: &[Rational], u: usize| (0..m).find(|&v| w[u * m + v].is_positive());
    while let Some(start) = (0..m).find(|&u| next(&w, u).is_some()) {
        if cycles.len() >= m * m {
            return Err(Error::Internal("cycle decomposition exceeded |Ω|² rounds".into()));
        }
        let mut path = vec![start];
        let mut seen = vec![usize::MAX; m];
        seen[start] = 0;
        let cycle = loop {
            let cur = *path.last().expect("path is non-empty");
            let v = next(&w, cur).ok_or_else(|| Error::Internal("walk reached a sink in a regular digraph".into()))?;
            if seen[v] != usize::MAX {
                break path[seen[v]..].to_vec();
            }
            seen[v] = path.len();
            path.push(v);
        };
        let mut c = WeightedCycle {
            vertices: cycle,
            weight: Rational::zero(),
        };
        c.weight = c
            .edges()
            .map(|(u, v)| w[u * m + v].clone())
            .reduce(|a, b| if b < a { b } else { a })
            .expect("cycle has an edge");
        for (u, v) in c.edges().collect::<Vec<_>>() {
            w[u * m + v] -= &c.weight;
        }
        cycles.push(c);
    }
    Ok(cycles)
}

/// The (s, p)-cycle on `vertices`: mass p/s on each (v, v) and (1−p)/s on each forward edge.
pub fn make_cycle(alphabet: &Alphabet, p: &Rational, vertices: &[usize]) -> Result<StepDistribution> {
    let s = vertices.len();
    if s < 2 {
        return Err(Error::Precondition("a cycle needs at least two vertices".into()));
    }
    if !p.is_positive() || *p >= Rational::one() {
        return Err(Error::Precondition(format!("p = {p} is outside (0, 1)")));
    }
    let mut sorted = vertices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != s {
        return Err(Error::Invalid("cycle vertices must be distinct".into()));
    }
    if sorted.last().is_some_and(|&v| v >= alphabet.len()) {
        return Err(Error::Invalid("cycle vertex outside the alphabet".into()));
    }
    let sr = Rational::from_integer(s.into());
    let diag = p / &sr;
    let edge = (Rational::one() - p) / &sr;
    let entries = (0..s).flat_map(|i| {
        let (u, v) = (vertices[i], vertices[(i + 1) % s]);
        [
            (vec![u, u], Number::Exact(diag.clone())),
            (vec![u, v], Number::Exact(edge.clone())),
        ]
    });
    StepDistribution::from_entries(alphabet.clone(), 2, entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CycleRho {
    pub rho: f64,
    pub bound: f64,
}

/// ρ of an (s, p)-cycle from its kernel spectrum λ_k = 1 − 2p(1−p)(1 − cos 2πk/s),
/// together with the bound 1 − 7p(1−p)/s².
pub fn cycle_rho(s: usize, p: f64) -> CycleRho {
    let q = p * (1.0 - p);
    let lambda = (1..s)
        .map(|k| 1.0 - 2.0 * q * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / s as f64).cos()))
        .fold(f64::NEG_INFINITY, f64::max);
    CycleRho {
        rho: if s < 2 { 0.0 } else { lambda.max(0.0).sqrt() },
        bound: 1.0 - 7.0 * q / (s * s) as f64,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartKind {
    Cycle {
        s: usize,
        #[serde(serialize_with = "ser_rational")]
        p: Rational,
        vertices: Vec<usize>,
    },
    Point {
        symbol: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub weight: Rational,
    pub kind: PartKind,
    pub dist: StepDistribution,
}

/// `P = Σ weight_k · P_k` with every `P_k` an (s, p)-cycle or a point mass on a diagonal pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDecomposition {
    pub parts: Vec<Part>,
}

impl ConvexDecomposition {
    /// Σ weight_k · P_k as a dense exact table.
    pub fn reconstruct(&self) -> Vec<Rational> {
        let len = self.parts.first().map_or(0, |p| p.dist.table_len());
        let mut out = vec![Rational::zero(); len];
        for part in &self.parts {
            if let Weights::Exact(w) = part.dist.weights() {
                for (o, x) in out.iter_mut().zip(w) {
                    *o += &part.weight * x;
                }
            }
        }
        out
    }

    pub fn total_weight(&self) -> Rational {
        self.parts.iter().map(|p| &p.weight).sum()
    }
}

fn point_mass(alphabet: &Alphabet, x: usize) -> StepDistribution {
    StepDistribution::from_entries(alphabet.clone(), 2, [(vec![x, x], Number::Exact(Rational::one()))])
        .expect("point mass is valid")
}

/// Splits P − α(P)·Id into cycles, shrinks each cycle's share of the identity to
/// β_k = min(w_k, α/t²), and turns the rest of the identity into point masses.
pub fn convex_cycle_decomposition(p: &StepDistribution) -> Result<ConvexDecomposition> {
    if p.steps() != 2 {
        return Err(Error::Precondition("convex decomposition needs two steps".into()));
    }
    if !p.is_exact() {
        return Err(Error::Precondition("convex decomposition needs rational weights".into()));
    }
    if !p.equal_marginals(0.0) {
        return Err(Error::Precondition("marginals differ".into()));
    }
    let alpha = p.alpha().to_rational();
    if !alpha.is_positive() {
        return Err(Error::Precondition("α(P) = 0".into()));
    }
    let alphabet = p.alphabet().clone();
    let m = alphabet.len();
    let t = Rational::from_integer(m.into());
    let cap = &alpha / (&t * &t);

    let active = p.active_symbols();
    let mut g = WeightedDigraph::from_distribution(p)?;
    for &x in &active {
        g.weight[x * m + x] -= &alpha;
    }
    let cycles = digraph_cycle_decomposition(&g)?;

    let mut point = vec![Rational::zero(); m];
    for &x in &active {
        point[x] = alpha.clone();
    }
    let mut parts = Vec::new();
    for c in &cycles {
        if c.vertices.len() == 1 {
            point[c.vertices[0]] += &c.weight;
            continue;
        }
        let beta = if c.weight < cap { c.weight.clone() } else { cap.clone() };
        for &v in &c.vertices {
            point[v] -= &beta;
        }
        let s = c.vertices.len();
        let pk = &beta / (&beta + &c.weight);
        parts.push(Part {
            weight: Rational::from_integer(s.into()) * (&c.weight + &beta),
            dist: make_cycle(&alphabet, &pk, &c.vertices)?,
            kind: PartKind::Cycle {
                s,
                p: pk,
                vertices: c.vertices.clone(),
            },
        });
    }
    for (x, w) in point.into_iter().enumerate() {
        if w.is_negative() {
            return Err(Error::Internal(format!("identity leftover at {x} is negative")));
        }
        if w.is_positive() {
            parts.push(Part {
                weight: w,
                kind: PartKind::Point { symbol: x },
                dist: point_mass(&alphabet, x),
            });
        }
    }
    Ok(ConvexDecomposition { parts })
}

#[derive(Clone, Debug, Serialize)]
pub struct PartCheck {
    pub index: usize,
    #[serde(flatten)]
    pub kind: PartKind,
    pub weight: Number,
    pub alpha: Number,
    pub alpha_ok: bool,
    /// `None` for point masses, which are exempt from the ρ bound.
    pub rho: Option<f64>,
    pub rho_ok: bool,
    pub p_in_range: bool,
    pub equal_marginals: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GuaranteeReport {
    pub alpha: Number,
    pub alpha_floor: Number,
    pub rho_ceiling: f64,
    pub reconstruction_exact: bool,
    pub weights_sum_to_one: bool,
    pub part_count: usize,
    pub part_count_ok: bool,
    pub parts: Vec<PartCheck>,
    pub all_pass: bool,
}

/// Checks α(P_k) ≥ α(P)⁴, ρ(P_k) ≤ 1 − 3α(P)⁵ and p ∈ [α(P)³, 1/2] part by part, plus exact reconstruction.
pub fn decomposition_guarantees(dec: &ConvexDecomposition, p: &StepDistribution) -> Result<GuaranteeReport> {
    let alpha = p.alpha().to_rational();
    let alpha_floor = Scalar::pow(&alpha, 4);
    let p_floor = Scalar::pow(&alpha, 3);
    let rho_ceiling = 1.0 - 3.0 * Scalar::to_f64(&alpha).powi(5);
    let half = Rational::new(1.into(), 2.into());
    let m = p.alphabet().len();

    let mut parts = Vec::with_capacity(dec.parts.len());
    for (index, part) in dec.parts.iter().enumerate() {
        let a_k = part.dist.alpha().to_rational();
        let (rho, rho_ok, p_in_range) = match &part.kind {
            PartKind::Cycle { p: pk, .. } => {
                let r = rho_report(&part.dist)?.rho;
                (Some(r), r <= rho_ceiling + 1e-12, *pk >= p_floor && *pk <= half)
            }
            PartKind::Point { .. } => (None, true, true),
        };
        parts.push(PartCheck {
            index,
            kind: part.kind.clone(),
            weight: Number::Exact(part.weight.clone()),
            alpha_ok: a_k >= alpha_floor,
            alpha: Number::Exact(a_k),
            rho,
            rho_ok,
            p_in_range,
            equal_marginals: part.dist.equal_marginals(0.0),
        });
    }
    let reconstruction_exact = match p.weights() {
        Weights::Exact(w) => dec.reconstruct() == *w,
        Weights::Float(_) => false,
    };
    let weights_sum_to_one = dec.total_weight() == Rational::one();
    let part_count = dec.parts.len();
    let part_count_ok = part_count <= m * m + m;
    let all_pass = reconstruction_exact
        && weights_sum_to_one
        && part_count_ok
        && parts.iter().all(|c| c.alpha_ok && c.rho_ok && c.p_in_range && c.equal_marginals);
    Ok(GuaranteeReport {
        alpha_floor: Number::Exact(alpha_floor),
        alpha: Number::Exact(alpha),
        rho_ceiling,
        reconstruction_exact,
        weights_sum_to_one,
        part_count,
        part_count_ok,
        parts,
        all_pass,
    })
}
