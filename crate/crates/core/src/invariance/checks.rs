//! Numerical checks: hypercontractivity, invariance and smoothing gaps, Gaussian reverse
//! hypercontractivity and γ-decay profiles.

use serde::Serialize;

use super::counterpart::gaussian_counterpart;
use super::mc::{monte_carlo, Estimate};
use super::mollifier::{chi, phi_lambda_unchecked};
use super::poly::{EnsembleSequence, MultilinearPolynomial};
use super::quad::integrate;
use crate::dist_core::{rho, StepDistribution};
use crate::error::{Error, Result};
use crate::fourier::{build_basis, support_points, OrthonormalBasis};
use crate::linalg::{min_eigenvalue, psd_square_root};
use crate::{par, radix};

/// Default absolute constant for the invariance bounds.
pub const DEFAULT_INVARIANCE_C: f64 = 10.0;

/// Relative slack for inequalities whose two sides are computed in floating point.
const FLOAT_SLACK: f64 = 1e-12;

fn check_budget(needed: u128, budget: u128) -> Result<()> {
    if needed > budget {
        Err(Error::Budget { needed, budget })
    } else {
        Ok(())
    }
}

/// E_π[g(P(X), T P(X))] for a product measure on Ω^n, summed exactly over the table.
fn discrete_moment(basis: &OrthonormalBasis, n: usize, vals: &[Vec<f64>], g: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let probs = basis.probs();
    let m = probs.len();
    par::sum_ranges(vals[0].len(), |range| {
        let mut x = radix::decode(range.start, m, n);
        let mut buf = vec![0.0; vals.len()];
        let mut acc = 0.0;
        for idx in range {
            let w: f64 = x.iter().map(|&a| probs[a]).product();
            if w > 0.0 {
                buf.iter_mut().zip(vals).for_each(|(b, v)| *b = v[idx]);
                acc += w * g(&buf);
            }
            radix::increment(&mut x, m);
        }
        acc
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HypercontractivityReport {
    pub method: &'static str,
    pub alpha: f64,
    /// α^{1/6}/2.
    pub rho: f64,
    pub degree: usize,
    /// E[P²]: exact for discrete ensembles, from the coefficients for Gaussian ones.
    pub second_moment: f64,
    /// E[|T_ρP|³].
    pub noisy_third: Estimate,
    /// E[|P|³].
    pub third: Estimate,
    /// E[|T_ρP|³]^{1/3} ≤ E[P²]^{1/2}.
    pub noise_holds: bool,
    /// E[|P|³]^{1/3} ≤ (2/α^{1/6})^d·E[P²]^{1/2}.
    pub degree_holds: bool,
}

/// Both hypercontractive inequalities for `poly` on `ens`. Discrete ensembles are enumerated
/// exactly within `budget`; Gaussian ones use `samples` normals from `seed` and accept at 3σ.
pub fn hypercontractivity_check(
    poly: &MultilinearPolynomial,
    ens: &EnsembleSequence,
    alpha: f64,
    samples: usize,
    seed: u64,
    budget: u128,
) -> Result<HypercontractivityReport> {
    ens.check(poly)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Range(format!("α = {alpha} is outside (0, 1]")));
    }
    let rho = alpha.powf(1.0 / 6.0) / 2.0;
    let noisy = poly.t_rho(rho);
    let degree = poly.degree();
    let cube = |x: f64| x.abs().powi(3);
    let (method, second_moment, noisy_third, third) = match ens {
        EnsembleSequence::Discrete { basis, n } => {
            check_budget(support_points(basis.alphabet_len(), *n), budget)?;
            let vals = vec![poly.discrete_values(basis)?, noisy.discrete_values(basis)?];
            let second = discrete_moment(basis, *n, &vals, |v| v[0] * v[0]);
            let nt = discrete_moment(basis, *n, &vals, |v| cube(v[1]));
            let t = discrete_moment(basis, *n, &vals, |v| cube(v[0]));
            let exact = |mean| Estimate { mean, stderr: 0.0 };
            ("exact", second, exact(nt), exact(t))
        }
        EnsembleSequence::Gaussian { n, p } => {
            let (n, p) = (*n, *p);
            let r = monte_carlo(samples, seed, n * p, 2, |h, out| {
                let x = |i: usize, k: usize| h[i * p + k - 1];
                out[0] = cube(noisy.evaluate_with(x));
                out[1] = cube(poly.evaluate_with(x));
            });
            let mut est = r.estimates.into_iter();
            ("monte_carlo", poly.second_moment(), est.next().expect("two stats"), est.next().expect("two stats"))
        }
    };
    let rhs = second_moment.sqrt();
    let rhs_deg = (2.0 / alpha.powf(1.0 / 6.0)).powi(degree as i32) * rhs;
    let below = |e: &Estimate, bound: f64| e.mean - 3.0 * e.stderr <= bound.powi(3) * (1.0 + FLOAT_SLACK) + FLOAT_SLACK;
    Ok(HypercontractivityReport {
        method,
        alpha,
        rho,
        degree,
        second_moment,
        noise_holds: below(&noisy_third, rhs),
        degree_holds: below(&third, rhs_deg),
        noisy_third,
        third,
    })
}

/// The per-step bases, counterpart and consistency checks shared by the gap computations.
struct Setup {
    bases: Vec<OrthonormalBasis>,
    tables: Vec<Vec<f64>>,
    n: usize,
    m: usize,
}

fn setup(polys: &[MultilinearPolynomial], p: &StepDistribution, budget: u128) -> Result<Setup> {
    let ell = p.steps();
    if polys.len() != ell {
        return Err(Error::Invalid(format!("{} polynomials for {ell} steps", polys.len())));
    }
    let n = polys[0].n();
    if polys.iter().any(|q| q.n() != n) {
        return Err(Error::Invalid("polynomials disagree on n".into()));
    }
    let bases: Vec<OrthonormalBasis> = (0..ell).map(|j| p.marginal(j).map(|m| build_basis(&m))).collect::<Result<_>>()?;
    let m = p.alphabet().len();
    check_budget(support_points(p.support().len(), n), budget)?;
    check_budget(support_points(m, n), budget)?;
    let tables = polys.iter().zip(&bases).map(|(q, b)| q.discrete_values(b)).collect::<Result<_>>()?;
    Ok(Setup { bases, tables, n, m })
}

/// E over X̄ ~ P^{⊗n} of g(P⁽¹⁾(X⁽¹⁾), …, P⁽ˡ⁾(X⁽ˡ⁾)) for each table set, enumerating supp(P)^n.
fn discrete_joint(p: &StepDistribution, n: usize, m: usize, table_sets: &[&[Vec<f64>]], g: impl Fn(usize, &[f64]) -> f64 + Sync) -> Vec<f64> {
    let w = p.weights().to_f64_vec();
    let support = p.support();
    let s = support.len();
    let ell = p.steps();
    let tuples: Vec<Vec<usize>> = support.iter().map(|&i| p.tuple(i)).collect();
    let strides: Vec<usize> = (0..n).map(|i| radix::stride(m, i)).collect();
    let len = s.pow(n as u32);
    (0..table_sets.len())
        .map(|set| {
            par::sum_ranges(len, |range| {
                let mut pick = radix::decode(range.start, s, n);
                let mut buf = vec![0.0; ell];
                let mut acc = 0.0;
                for _ in range {
                    let mut weight = 1.0;
                    let mut idx = vec![0usize; ell];
                    for (i, &c) in pick.iter().enumerate() {
                        weight *= w[support[c]];
                        for (j, slot) in idx.iter_mut().enumerate() {
                            *slot += tuples[c][j] * strides[i];
                        }
                    }
                    for j in 0..ell {
                        buf[j] = table_sets[set][j][idx[j]];
                    }
                    acc += weight * g(set, &buf);
                    radix::increment(&mut pick, s);
                }
                acc
            })
        })
        .collect()
}

fn min_marginal_mass(bases: &[OrthonormalBasis]) -> f64 {
    bases
        .iter()
        .flat_map(|b| b.support().iter().map(move |&a| b.probs()[a]))
        .fold(1.0, f64::min)
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceGapReport {
    pub lambda: f64,
    pub steps: usize,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// E[χ_λ(P̄(X̄))], exact.
    pub discrete_smoothed: f64,
    /// E[χ_λ(P̄(Ḡ))], Monte Carlo.
    pub gaussian_smoothed: Estimate,
    pub gap: f64,
    /// Standard error of `gap`, inherited from the Gaussian estimate.
    pub gap_stderr: f64,
    /// The same comparison for the unsmoothed χ.
    pub discrete_raw: f64,
    pub gaussian_raw: Estimate,
    pub raw_gap: f64,
    pub raw_gap_stderr: f64,
    /// max_i Σ_j Inf_i(P⁽ʲ⁾).
    pub tau: f64,
    pub degree: usize,
    /// min over steps of the smallest positive marginal mass.
    pub alpha: f64,
    pub max_variance: f64,
    /// Degree ≤ d and Var ≤ 1 for every polynomial.
    pub hypotheses_hold: bool,
    pub c: f64,
    /// C·ℓ^{5/2}·τ^{1/8}/α^{4d}; consistency with some constant, not a verification.
    pub bound: f64,
    pub covariance_error: f64,
    /// gap ≤ bound + 3·stderr.
    pub holds: bool,
}

/// Compares E[χ_λ(P̄)] on the discrete ensembles (exactly) against the Gaussian counterpart
/// (by Monte Carlo) and reports the gap next to the invariance bound with constant `c`.
#[allow(clippy::too_many_arguments)]
pub fn invariance_gap(
    polys: &[MultilinearPolynomial],
    p: &StepDistribution,
    lambda: f64,
    samples: usize,
    seed: u64,
    c: f64,
    budget: u128,
) -> Result<InvarianceGapReport> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Range(format!("λ = {lambda} is outside (0, 1/2)")));
    }
    let st = setup(polys, p, budget)?;
    let cp = gaussian_counterpart(p)?;
    let ell = p.steps();
    for (j, q) in polys.iter().enumerate() {
        if q.ensemble_size() != cp.ensemble_size(j) {
            return Err(Error::Invalid(format!(
                "polynomial {j} has ensemble size {}, step {j} has {}",
                q.ensemble_size(),
                cp.ensemble_size(j)
            )));
        }
    }
    let smooth = |v: &[f64]| v.iter().map(|&x| phi_lambda_unchecked(lambda, x)).product::<f64>();
    let disc = discrete_joint(p, st.n, st.m, &[&st.tables], |_, v| smooth(v));
    let disc_raw = discrete_joint(p, st.n, st.m, &[&st.tables], |_, v| chi(v));
    let (n, dim) = (st.n, cp.base_dim);
    let r = monte_carlo(samples, seed, n * dim, 2, |h, out| {
        let mut g: Vec<Vec<Vec<f64>>> = (0..n).map(|_| (0..ell).map(|j| vec![0.0; cp.ensemble_size(j)]).collect()).collect();
        for (i, gi) in g.iter_mut().enumerate() {
            cp.apply(&h[i * dim..(i + 1) * dim], gi);
        }
        let vals: Vec<f64> = polys.iter().enumerate().map(|(j, q)| q.evaluate_with(|i, k| g[i][j][k - 1])).collect();
        out[0] = smooth(&vals);
        out[1] = chi(&vals);
    });
    let mut est = r.estimates.into_iter();
    let (gs, gr) = (est.next().expect("two stats"), est.next().expect("two stats"));
    let tau = (0..n).map(|i| polys.iter().map(|q| q.influence(i)).sum::<f64>()).fold(0.0, f64::max);
    let degree = polys.iter().map(MultilinearPolynomial::degree).max().unwrap_or(0);
    let alpha = min_marginal_mass(&st.bases);
    let max_variance = polys.iter().map(MultilinearPolynomial::variance).fold(0.0, f64::max);
    let bound = c * (ell as f64).powf(2.5) * tau.powf(0.125) / alpha.powi(4 * degree as i32);
    let gap = (disc[0] - gs.mean).abs();
    Ok(InvarianceGapReport {
        lambda,
        steps: ell,
        n,
        samples,
        seed,
        discrete_smoothed: disc[0],
        holds: gap <= bound + 3.0 * gs.stderr,
        gap,
        gap_stderr: gs.stderr,
        raw_gap: (disc_raw[0] - gr.mean).abs(),
        raw_gap_stderr: gr.stderr,
        gaussian_smoothed: gs,
        discrete_raw: disc_raw[0],
        gaussian_raw: gr,
        tau,
        degree,
        alpha,
        max_variance,
        hypotheses_hold: max_variance <= 1.0 + FLOAT_SLACK,
        c,
        bound,
        covariance_error: cp.covariance_error,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingGapReport {
    pub gamma: f64,
    pub eps: f64,
    pub rho: f64,
    /// (1 − ρ)ε/(ℓ·ln(ℓ/ε)).
    pub gamma_max: f64,
    pub in_range: bool,
    /// E[∏_j P⁽ʲ⁾(X⁽ʲ⁾)].
    pub product: f64,
    /// E[∏_j T_{1−γ}P⁽ʲ⁾(X⁽ʲ⁾)].
    pub smoothed_product: f64,
    pub gap: f64,
    /// gap ≤ ε.
    pub holds: bool,
}

/// |E[∏P⁽ʲ⁾] − E[∏T_{1−γ}P⁽ʲ⁾]| by exact enumeration, after checking every P⁽ʲ⁾ lies in [0, 1]
/// on the support of its step.
pub fn smoothing_gap(polys: &[MultilinearPolynomial], p: &StepDistribution, gamma: f64, eps: f64, budget: u128) -> Result<SmoothingGapReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Range(format!("γ = {gamma} is outside [0, 1]")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Range(format!("ε = {eps} is outside (0, 1/2]")));
    }
    let st = setup(polys, p, budget)?;
    for (j, (t, b)) in st.tables.iter().zip(&st.bases).enumerate() {
        let mut x = vec![0; st.n];
        for v in t {
            let on_support = x.iter().all(|&a| b.probs()[a] > 0.0);
            if on_support && !(-1e-9..=1.0 + 1e-9).contains(v) {
                return Err(Error::Range(format!("polynomial {j} takes the value {v} at {x:?}, outside [0, 1]")));
            }
            radix::increment(&mut x, st.m);
        }
    }
    let smoothed: Vec<Vec<f64>> = polys
        .iter()
        .zip(&st.bases)
        .map(|(q, b)| q.t_rho(1.0 - gamma).discrete_values(b))
        .collect::<Result<_>>()?;
    let ell = p.steps();
    let r = rho(p)?;
    let vals = discrete_joint(p, st.n, st.m, &[&st.tables, &smoothed], |_, v| v.iter().product());
    let gap = (vals[0] - vals[1]).abs();
    let l = ell as f64;
    let gamma_max = (1.0 - r) * eps / (l * (l / eps).ln());
    Ok(SmoothingGapReport {
        gamma,
        eps,
        rho: r,
        gamma_max,
        in_range: gamma <= gamma_max,
        product: vals[0],
        smoothed_product: vals[1],
        gap,
        holds: gap <= eps,
    })
}

/// f(x) = 1[⟨w, x⟩ > t] on one step's Gaussian vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdForm {
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl ThresholdForm {
    pub fn half_line(sign: f64) -> Self {
        ThresholdForm {
            weights: vec![sign],
            threshold: 0.0,
        }
    }

    pub fn indicator(&self, x: &[f64]) -> f64 {
        let s: f64 = self.weights.iter().zip(x).map(|(a, b)| a * b).sum();
        if s > self.threshold {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RhcReport {
    pub steps: usize,
    pub rho: f64,
    /// (1 − ρ²)/ℓ.
    pub p: f64,
    pub min_eigenvalue: f64,
    /// The covariance minus p·I is positive semidefinite.
    pub condition_holds: bool,
    /// Each step's block is the identity.
    pub standard_blocks: bool,
    pub samples: usize,
    pub seed: u64,
    pub product: Estimate,
    pub mus: Vec<Estimate>,
    /// ℓ/(1 − ρ²).
    pub exponent: f64,
    /// (∏ μ̂)^{ℓ/(1−ρ²)}.
    pub bound: f64,
    /// First-order propagation of the μ̂ standard errors into the bound.
    pub bound_stderr: f64,
    /// product + 3·stderr ≥ bound − 3·bound_stderr.
    pub holds: bool,
}

/// Monte Carlo check of E[∏f⁽ʲ⁾(G⁽ʲ⁾)] ≥ (∏μ⁽ʲ⁾)^{ℓ/(1−ρ²)} for a joint Gaussian with covariance
/// `cov` (row-major, ℓ·q square, step j occupying rows j·q..(j+1)·q).
pub fn gaussian_rhc_check(
    cov: &[f64],
    steps: usize,
    funcs: &[ThresholdForm],
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<RhcReport> {
    if steps == 0 || funcs.len() != steps {
        return Err(Error::Invalid(format!("{} functions for {steps} steps", funcs.len())));
    }
    let dim = (cov.len() as f64).sqrt().round() as usize;
    if dim * dim != cov.len() || dim % steps != 0 {
        return Err(Error::Invalid("covariance must be square with ℓ equal blocks".into()));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Range(format!("ρ = {rho} is outside [0, 1)")));
    }
    let q = dim / steps;
    if funcs.iter().any(|f| f.weights.len() != q) {
        return Err(Error::Invalid(format!("every threshold form needs {q} weights")));
    }
    let root = psd_square_root(cov, dim)
        .ok_or_else(|| Error::Invalid("covariance is not positive semidefinite".into()))?;
    let standard_blocks = (0..steps).all(|j| {
        (0..q).all(|a| (0..q).all(|b| {
            let want = if a == b { 1.0 } else { 0.0 };
            (cov[(j * q + a) * dim + j * q + b] - want).abs() < 1e-9
        }))
    });
    let p_param = (1.0 - rho * rho) / steps as f64;
    let min_eig = min_eigenvalue(cov, dim);
    let r = monte_carlo(samples, seed, dim, steps + 1, |h, out| {
        let g: Vec<f64> = (0..dim).map(|i| (0..dim).map(|k| root[i * dim + k] * h[k]).sum()).collect();
        let mut prod = 1.0;
        for (j, f) in funcs.iter().enumerate() {
            let v = f.indicator(&g[j * q..(j + 1) * q]);
            out[j + 1] = v;
            prod *= v;
        }
        out[0] = prod;
    });
    let mut est = r.estimates;
    let mus = est.split_off(1);
    let product = est.pop().expect("product stat");
    let exponent = steps as f64 / (1.0 - rho * rho);
    let prod_mu: f64 = mus.iter().map(|m| m.mean).product();
    let bound = prod_mu.powf(exponent);
    let rel: f64 = mus.iter().filter(|m| m.mean > 0.0).map(|m| m.stderr / m.mean).sum();
    let bound_stderr = exponent * bound * rel;
    Ok(RhcReport {
        steps,
        rho,
        p: p_param,
        min_eigenvalue: min_eig,
        condition_holds: min_eig >= p_param - 1e-12,
        standard_blocks,
        samples,
        seed,
        holds: product.mean + 3.0 * product.stderr >= bound - 3.0 * bound_stderr,
        product,
        mus,
        exponent,
        bound,
        bound_stderr,
    })
}

/// [[1, r], [r, 1]]: two standard normals with correlation r.
pub fn correlated_pair(r: f64) -> Vec<f64> {
    vec![1.0, r, r, 1.0]
}

/// Pr[X > 0, Y > 0] for standard normals with correlation r, by integrating the bivariate density
/// in polar coordinates: the radial integral is closed form, leaving
/// ∫_0^{π/2} √(1−r²)/(2π(1 − r·sin 2θ)) dθ.
pub fn orthant_probability(r: f64) -> Result<f64> {
    if !(r > -1.0 && r < 1.0) {
        return Err(Error::Range(format!("r = {r} is outside (−1, 1)")));
    }
    let s = (1.0 - r * r).sqrt();
    let f = |t: f64| s / (2.0 * std::f64::consts::PI * (1.0 - r * (2.0 * t).sin()));
    Ok(integrate(f, 0.0, std::f64::consts::FRAC_PI_2, 1e-13).value)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayPoint {
    pub d: usize,
    /// E[(P^{≥d})²].
    pub tail: f64,
    /// (1 − γ)^d.
    pub envelope: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaDecayReport {
    pub gamma: f64,
    pub profile: Vec<DecayPoint>,
    /// Largest D with tail(d) ≤ (1−γ)^d for every d ≤ D; None if it fails at d = 0.
    pub holds_up_to: Option<usize>,
    /// The envelope holds at every d (tails vanish past the degree).
    pub decaying: bool,
}

pub fn gamma_decay_check(poly: &MultilinearPolynomial, gamma: f64) -> Result<GammaDecayReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Range(format!("γ = {gamma} is outside [0, 1]")));
    }
    let profile: Vec<DecayPoint> = (0..=poly.degree() + 1)
        .map(|d| {
            let tail = poly.tail_mass(d);
            let envelope = (1.0 - gamma).powi(d as i32);
            DecayPoint {
                d,
                tail,
                envelope,
                ok: tail <= envelope * (1.0 + FLOAT_SLACK),
            }
        })
        .collect();
    let holds_up_to = profile.iter().take_while(|pt| pt.ok).last().map(|pt| pt.d);
    let decaying = profile.iter().all(|pt| pt.ok);
    Ok(GammaDecayReport {
        gamma,
        holds_up_to: if decaying { Some(usize::MAX) } else { holds_up_to },
        profile,
        decaying,
    })
}
