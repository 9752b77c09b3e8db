use std::collections::BTreeMap;

use num::traits::Zero;
use serde::Serialize;

use super::{Alphabet, MarginalDistribution, StepDistribution};
use crate::error::{Error, Result};
use crate::linalg;
use crate::number::{zero_of, Number, Rational, Scalar, Weights};
use crate::radix;
use crate::with_weights;

/// Tolerance for structural checks such as reversibility.
pub const STRUCT_TOL: f64 = 1e-10;

/// A row-stochastic matrix over a set of states with a distinguished stationary law.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovKernel {
    alphabet: Alphabet,
    states: Vec<usize>,
    rows: Weights,
    stationary: MarginalDistribution,
}

impl MarkovKernel {
    /// Builds a kernel from a row-major matrix; `stationary` must be over the same alphabet.
    pub fn new(rows: Weights, stationary: MarginalDistribution) -> Result<Self> {
        let alphabet = stationary.alphabet().clone();
        let m = alphabet.len();
        if rows.len() != m * m {
            return Err(Error::Invalid(format!("kernel needs {} entries", m * m)));
        }
        for y in 0..m {
            let s: f64 = (0..m).map(|z| rows.get_f64(y * m + z)).sum();
            if (s - 1.0).abs() > STRUCT_TOL || (0..m).any(|z| rows.get_f64(y * m + z) < 0.0) {
                return Err(Error::Invalid(format!("row {y} is not stochastic")));
            }
        }
        Ok(MarkovKernel {
            states: (0..m).collect(),
            alphabet,
            rows,
            stationary,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Indices of the kernel's states in the alphabet of the distribution it came from.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn rows(&self) -> &Weights {
        &self.rows
    }

    pub fn entry(&self, y: usize, z: usize) -> Number {
        self.rows.get(y * self.len() + z)
    }

    pub fn stationary(&self) -> &MarginalDistribution {
        &self.stationary
    }

    /// Largest |π(y)K(y,z) − π(z)K(z,y)|; exactly 0 for reversible rational kernels.
    pub fn reversibility_defect(&self) -> f64 {
        let m = self.len();
        let pi = self.stationary.probs();
        match (&self.rows, pi) {
            (Weights::Exact(k), Weights::Exact(p)) => {
                let mut worst = Rational::from_integer(0.into());
                for y in 0..m {
                    for z in 0..m {
                        let d = &p[y] * &k[y * m + z] - &p[z] * &k[z * m + y];
                        let d = if d < Rational::from_integer(0.into()) { -d } else { d };
                        if d > worst {
                            worst = d;
                        }
                    }
                }
                Scalar::to_f64(&worst)
            }
            _ => {
                let mut worst = 0.0f64;
                for y in 0..m {
                    for z in 0..m {
                        let d = pi.get_f64(y) * self.rows.get_f64(y * m + z)
                            - pi.get_f64(z) * self.rows.get_f64(z * m + y);
                        worst = worst.max(d.abs());
                    }
                }
                worst
            }
        }
    }

    pub fn is_reversible(&self) -> bool {
        self.reversibility_defect() <= STRUCT_TOL
    }
}

/// Kernel of the double sample on step `j`: resample step `j` twice given the other steps.
///
/// Symbols with zero mass on step `j` are dropped, so the kernel's states are the support of
/// the step-`j` marginal.
pub fn double_sample_kernel(p: &StepDistribution, j: usize) -> Result<MarkovKernel> {
    let pi = p.marginal(j)?;
    let keep = pi.support();
    let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let k = keep.len();
    let m = p.alphabet().len();
    let alphabet = p.alphabet().subset(&keep);

    let (rows, stationary) = with_weights!(p.weights(), v => {
        let zero = zero_of(v);
        // Group the support by the values of all other steps.
        let mut groups: BTreeMap<usize, Vec<(usize, _)>> = BTreeMap::new();
        let stride = radix::stride(m, j);
        for (idx, w) in v.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let y = (idx / stride) % m;
            let rest = idx - y * stride;
            groups.entry(rest).or_default().push((pos[&y], w.clone()));
        }
        let mut acc = vec![zero.clone(); k * k];
        let mut stat = vec![zero.clone(); k];
        for members in groups.values() {
            let total = members.iter().fold(zero.clone(), |a, (_, w)| a + w.clone());
            for (y, wy) in members {
                stat[*y] = stat[*y].clone() + wy.clone();
                for (z, wz) in members {
                    acc[y * k + z] = acc[y * k + z].clone() + wy.clone() * wz.clone() / total.clone();
                }
            }
        }
        for y in 0..k {
            for z in 0..k {
                acc[y * k + z] = acc[y * k + z].clone() / stat[y].clone();
            }
        }
        (Scalar::into_weights(acc), Scalar::into_weights(stat))
    });

    Ok(MarkovKernel {
        alphabet: alphabet.clone(),
        states: keep,
        rows,
        stationary: MarginalDistribution::new(alphabet, stationary)?,
    })
}

/// Second-largest eigenvalue of a reversible kernel, computed on D^{1/2} K D^{−1/2}.
///
/// A one-state kernel has no second eigenvalue; 0 is returned.
pub fn kernel_second_eigenvalue(kernel: &MarkovKernel) -> Result<f64> {
    let defect = kernel.reversibility_defect();
    if defect > STRUCT_TOL {
        return Err(Error::NotReversible(defect));
    }
    let m = kernel.len();
    if m < 2 {
        return Ok(0.0);
    }
    let pi: Vec<f64> = kernel.stationary().probs().to_f64_vec();
    let mut sym = vec![0.0; m * m];
    for y in 0..m {
        for z in 0..m {
            sym[y * m + z] = (pi[y] / pi[z]).sqrt() * kernel.rows().get_f64(y * m + z);
        }
    }
    let ev = linalg::symmetric_eigenvalues_desc(&sym, m);
    Ok(ev[1].clamp(-1.0, 1.0))
}

/// ρ(P, S, T): the second singular value of the normalized joint table of the step groups.
pub fn maximal_correlation(p: &StepDistribution, s: &[usize], t: &[usize]) -> Result<f64> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::Precondition("step groups must be non-empty".into()));
    }
    if s.iter().any(|j| t.contains(j)) {
        return Err(Error::Precondition("step groups must be disjoint".into()));
    }
    let m = p.alphabet().len();
    let mut both: Vec<usize> = s.to_vec();
    both.extend_from_slice(t);
    let mut sorted = both.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != both.len() {
        return Err(Error::Precondition("repeated step in a group".into()));
    }
    let mut s_sorted = s.to_vec();
    s_sorted.sort_unstable();
    let mut t_sorted = t.to_vec();
    t_sorted.sort_unstable();
    let mut order = s_sorted.clone();
    order.extend_from_slice(&t_sorted);

    let joint = p.project(&order)?.to_f64_vec();
    let na = m.pow(s.len() as u32);
    let nb = m.pow(t.len() as u32);
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for (o, &w) in joint.iter().enumerate() {
        pa[o % na] += w;
        pb[o / na] += w;
    }
    let sa: Vec<usize> = (0..na).filter(|&a| pa[a] > 0.0).collect();
    let sb: Vec<usize> = (0..nb).filter(|&b| pb[b] > 0.0).collect();
    let mut mat = vec![0.0; sa.len() * sb.len()];
    for (i, &a) in sa.iter().enumerate() {
        for (k, &b) in sb.iter().enumerate() {
            mat[i * sb.len() + k] = joint[a + na * b] / (pa[a] * pb[b]).sqrt();
        }
    }
    let sv = linalg::singular_values_desc(&mat, sa.len(), sb.len());
    Ok(sv.get(1).copied().unwrap_or(0.0).clamp(0.0, 1.0))
}

/// Per-step correlations and their maximum ρ(P).
#[derive(Clone, Debug, Serialize)]
pub struct RhoReport {
    pub rho: f64,
    pub per_step: Vec<f64>,
    pub second_eigenvalues: Vec<f64>,
    /// Steps whose marginal is a point mass; their correlation is reported as 0.
    pub degenerate_steps: Vec<usize>,
}

pub fn rho_report(p: &StepDistribution) -> Result<RhoReport> {
    let l = p.steps();
    let mut report = RhoReport {
        rho: 0.0,
        per_step: vec![0.0; l],
        second_eigenvalues: vec![0.0; l],
        degenerate_steps: Vec::new(),
    };
    if l == 1 {
        report.degenerate_steps.push(0);
        return Ok(report);
    }
    for j in 0..l {
        let k = double_sample_kernel(p, j)?;
        if k.len() < 2 {
            report.degenerate_steps.push(j);
        }
        let lambda = kernel_second_eigenvalue(&k)?;
        if lambda < -STRUCT_TOL {
            return Err(Error::NegativeEigenvalue(lambda));
        }
        report.second_eigenvalues[j] = lambda;
        report.per_step[j] = lambda.max(0.0).sqrt();
    }
    report.rho = report.per_step.iter().copied().fold(0.0, f64::max);
    Ok(report)
}

/// ρ(P) = max over steps of √λ₂ of the double-sample kernel.
pub fn rho(p: &StepDistribution) -> Result<f64> {
    rho_report(p).map(|r| r.rho)
}

/// ρ(P) through singular values of the step-versus-rest tables, for cross-checking.
pub fn rho_via_svd(p: &StepDistribution) -> Result<f64> {
    let l = p.steps();
    let mut best = 0.0f64;
    for j in 0..l {
        let rest: Vec<usize> = (0..l).filter(|&i| i != j).collect();
        if rest.is_empty() {
            continue;
        }
        best = best.max(maximal_correlation(p, &[j], &rest)?);
    }
    Ok(best)
}

/// Transition matrices `K_t(a, b) = Pr[X⁽ᵗ⁾ = b | X⁽ᵗ⁻¹⁾ = a]` for t = 1..ℓ−1, if P is a Markov chain.
///
/// Rows for states of zero mass are set to the identity.
pub fn is_markov_generated(p: &StepDistribution, tol: f64) -> Result<Option<Vec<Weights>>> {
    let l = p.steps();
    if l < 2 {
        return Err(Error::Precondition("Markov structure needs at least two steps".into()));
    }
    let m = p.alphabet().len();
    for t in 2..l {
        let prefix: Vec<usize> = (0..=t).collect();
        let q_t = p.project(&prefix)?;
        let q_prev = p.project(&prefix[..t])?;
        let pair = p.project(&[t - 1, t])?;
        let pi = p.project(&[t - 1])?;
        let head = m.pow(t as u32);
        let stride = m.pow((t - 1) as u32);
        let ok = match (&q_t, &q_prev, &pair, &pi) {
            (Weights::Exact(q), Weights::Exact(qp), Weights::Exact(pr), Weights::Exact(pi)) => (0..q.len()).all(|idx| {
                let a = (idx / stride) % m;
                let b = idx / head;
                &q[idx] * &pi[a] == &qp[idx % head] * &pr[a + m * b]
            }),
            _ => {
                let (q, qp, pr, pi) = (q_t.to_f64_vec(), q_prev.to_f64_vec(), pair.to_f64_vec(), pi.to_f64_vec());
                (0..q.len()).all(|idx| {
                    let a = (idx / stride) % m;
                    let b = idx / head;
                    (q[idx] * pi[a] - qp[idx % head] * pr[a + m * b]).abs() <= tol
                })
            }
        };
        if !ok {
            return Ok(None);
        }
    }
    let mut kernels = Vec::with_capacity(l - 1);
    for t in 1..l {
        let pair = p.project(&[t - 1, t])?;
        let pi = p.project(&[t - 1])?;
        kernels.push(with_weights!(&pair, pr => {
            let pi_t: Vec<_> = match &pi { Weights::Exact(v) => v.iter().map(Scalar::from_rational).collect(), Weights::Float(v) => v.iter().map(|x| Scalar::from_f64(*x)).collect() };
            transition_rows(pr, &pi_t, m)
        }));
    }
    Ok(Some(kernels))
}

fn transition_rows<T: Scalar>(pair: &[T], pi: &[T], m: usize) -> Weights {
    let mut out = vec![T::zero(); m * m];
    for a in 0..m {
        for b in 0..m {
            out[a * m + b] = if pi[a].is_zero() {
                if a == b { T::one() } else { T::zero() }
            } else {
                pair[a + m * b].clone() / pi[a].clone()
            };
        }
    }
    T::into_weights(out)
}

/// Both sides of E[(f(Y) − f(Z))²] ≥ 2(1 − ρ²)·Var[f(Y)] for a double sample on one step.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeVarianceReport {
    pub lhs: Number,
    pub variance: Number,
    pub rho: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `f` is indexed by symbol of the full alphabet.
pub fn check_edge_variance(p: &StepDistribution, j: usize, f: &[Rational]) -> Result<EdgeVarianceReport> {
    if f.len() != p.alphabet().len() {
        return Err(Error::Invalid("f must have one value per symbol".into()));
    }
    let kernel = double_sample_kernel(p, j)?;
    let rho = rho(p)?;
    let (lhs, variance) = with_weights!(kernel.rows(), rows => {
        edge_sides(rows, kernel.stationary().probs(), kernel.states(), f)
    });
    let rhs = 2.0 * (1.0 - rho * rho) * variance.to_f64();
    Ok(EdgeVarianceReport {
        holds: lhs.to_f64() >= rhs - STRUCT_TOL,
        lhs,
        variance,
        rho,
        rhs,
    })
}

fn edge_sides<T: Scalar>(rows: &[T], pi: &Weights, states: &[usize], f: &[Rational]) -> (Number, Number) {
    let k = states.len();
    let pi: Vec<T> = match pi {
        Weights::Exact(v) => v.iter().map(T::from_rational).collect(),
        Weights::Float(v) => v.iter().map(|x| T::from_f64(*x)).collect(),
    };
    let fv: Vec<T> = states.iter().map(|&a| T::from_rational(&f[a])).collect();
    let mut lhs = T::zero();
    let mut mean = T::zero();
    let mut second = T::zero();
    for y in 0..k {
        mean = mean + pi[y].clone() * fv[y].clone();
        second = second + pi[y].clone() * fv[y].clone() * fv[y].clone();
        for z in 0..k {
            let d = fv[y].clone() - fv[z].clone();
            lhs = lhs + pi[y].clone() * rows[y * k + z].clone() * d.clone() * d;
        }
    }
    let var = second - mean.clone() * mean;
    (lhs.into_number(), var.into_number())
}
