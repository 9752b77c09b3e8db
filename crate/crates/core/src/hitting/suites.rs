//! Counterexample families, the Markov reduction identity and an empirical hitting exponent.

use num::traits::Zero;
use serde::Serialize;

use super::expectation::{multi_set_expectation, same_set_expectation, HittingInstance};
use crate::dist_core::{catalog, is_markov_generated, Alphabet, StepDistribution};
use crate::error::{Error, Result};
use crate::fourier::{
    expectation, influences, integer_window, strictly_below, Clause, Engine, FunctionSpec, DEFAULT_BUDGET,
};
use crate::number::{rat, rat_int, Number, Rational, Scalar, Weights};
use crate::radix;

fn positive(x: &Number) -> bool {
    x.gt(&Number::Float(0.0))
}

/// Least-squares slope and intercept of `ys` against `xs`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// S₁ ∪ S₂ over {0,1}ⁿ: x₀ = 1 with weight near n/3, or x₀ = 0 with weight near 2n/3.
pub fn unequal_marginals_set(n: usize) -> Result<FunctionSpec> {
    let n_r = rat_int(n as i64);
    let slack = rat(n as i64, 100);
    let third = &n_r / rat_int(3);
    let (lo1, hi1) = integer_window(&(&third - &slack), &(&third + &slack));
    let two_thirds = &third * rat_int(2);
    let (lo2, hi2) = integer_window(&(&two_thirds - &slack), &(&two_thirds + &slack));
    FunctionSpec::anchored(
        Alphabet::numeric(2),
        n,
        vec![
            Clause::new(Some((0, 1))).window(1, lo1, hi1),
            Clause::new(Some((0, 0))).window(1, lo2, hi2),
        ],
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct UnequalMarginalsRow {
    pub n: usize,
    /// E[f(X⁽¹⁾)f(X⁽²⁾)].
    pub product: Number,
    /// The same product by brute force, for small n.
    pub enumerated: Option<Number>,
    pub mu1: Number,
    pub mu2: Number,
    /// E[1_{S₁}(X⁽¹⁾)].
    pub mu_s1: Number,
    /// product / min(μ₁, μ₂)².
    pub normalized: Number,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnequalMarginalsReport {
    pub rows: Vec<UnequalMarginalsRow>,
    pub strictly_decreasing: bool,
    /// Slope of ln(normalized) against n.
    pub decay_rate: Option<f64>,
}

/// P uniform on {00, 01, 11} with f = 1_{S₁ ∪ S₂}; the normalized product should fall with n.
pub fn counterexample_unequal_marginals(ns: &[usize]) -> Result<UnequalMarginalsReport> {
    let p = catalog::staircase();
    let (pi1, pi2) = (p.marginal(0)?, p.marginal(1)?);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        if n < 3 || n % 3 != 0 {
            return Err(Error::Precondition(format!("n = {n} must be a positive multiple of 3")));
        }
        let f = unequal_marginals_set(n)?;
        let product = same_set_expectation(&p, &f, Engine::Dp, DEFAULT_BUDGET)?;
        let enumerated = if n <= 9 {
            Some(same_set_expectation(&p, &f, Engine::Enumerate, DEFAULT_BUDGET)?)
        } else {
            None
        };
        let mu1 = expectation(&f, &pi1)?;
        let mu2 = expectation(&f, &pi2)?;
        let s1 = match f.kind() {
            crate::fourier::FunctionKind::AnchoredSymmetric(an) => {
                FunctionSpec::anchored(Alphabet::numeric(2), n, vec![an.clauses[0].clone()])?
            }
            _ => unreachable!("built as anchored"),
        };
        let mu_s1 = expectation(&s1, &pi1)?;
        let low = if mu2.gt(&mu1) { mu1.clone() } else { mu2.clone() };
        let normalized = if low.is_zero() { Number::Exact(Rational::zero()) } else { &product / &(&low * &low) };
        rows.push(UnequalMarginalsRow {
            n,
            product,
            enumerated,
            mu1,
            mu2,
            mu_s1,
            normalized,
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[0].normalized.gt(&w[1].normalized));
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| positive(&r.normalized))
        .map(|r| (r.n as f64, r.normalized.to_f64().ln()))
        .collect();
    let decay_rate = (pts.len() >= 2).then(|| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        fit_line(&xs, &ys).0
    });
    Ok(UnequalMarginalsReport {
        rows,
        strictly_decreasing,
        decay_rate,
    })
}

/// The three sets over Z₃ⁿ: fewer than n/3 twos, fewer than n/3 ones, fewer than n/3 zeros.
pub fn three_sets(n: usize) -> Result<[FunctionSpec; 3]> {
    let (lo, hi) = strictly_below(&rat(n as i64, 3));
    let set = |symbol: usize| FunctionSpec::anchored(Alphabet::numeric(3), n, vec![Clause::new(None).window(symbol, lo, hi)]);
    Ok([set(2)?, set(1)?, set(0)?])
}

#[derive(Clone, Debug, Serialize)]
pub struct ThreeSetsRow {
    pub n: usize,
    /// Pr[∀j: X⁽ʲ⁾ ∈ S⁽ʲ⁾] by the counting route.
    pub triple_product: Number,
    pub enumerated: Option<Number>,
    pub measures: Vec<Number>,
    pub max_influence: Vec<Number>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThreeSetsReport {
    pub rows: Vec<ThreeSetsRow>,
    /// Every triple product (and every enumerated one) is exactly 0.
    pub triple_zero: bool,
    /// For n ≥ 60: every measure is at least 0.45, at most 1/2 and nondecreasing in n.
    pub measures_ok: bool,
    /// The max influence of each indicator falls strictly from row to row.
    pub influence_decreasing: bool,
}

/// Runs the three-set family on the progressions distribution for each n, enumerating when n ≤ `enumerate_up_to`.
pub fn counterexample_three_sets(ns: &[usize], enumerate_up_to: usize) -> Result<ThreeSetsReport> {
    let p = catalog::progressions();
    let pi = p.marginal(0)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        if n == 0 {
            return Err(Error::Precondition("n must be at least 1".into()));
        }
        let sets = three_sets(n)?;
        let triple_product = multi_set_expectation(&p, &sets, Engine::Dp, DEFAULT_BUDGET)?;
        let enumerated = if n <= enumerate_up_to {
            Some(multi_set_expectation(&p, &sets, Engine::Enumerate, u128::MAX)?)
        } else {
            None
        };
        let measures = sets.iter().map(|f| expectation(f, &pi)).collect::<Result<Vec<_>>>()?;
        let max_influence = sets
            .iter()
            .map(|f| {
                Ok(influences(f, &pi)?
                    .into_iter()
                    .reduce(|a, b| if b.gt(&a) { b } else { a })
                    .expect("n ≥ 1"))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ThreeSetsRow {
            n,
            triple_product,
            enumerated,
            measures,
            max_influence,
        });
    }
    let triple_zero = rows
        .iter()
        .all(|r| r.triple_product.is_zero() && r.enumerated.as_ref().is_none_or(Number::is_zero));
    let large: Vec<&ThreeSetsRow> = rows.iter().filter(|r| r.n >= 60).collect();
    let half = Number::Exact(rat(1, 2));
    let floor = Number::Exact(rat(45, 100));
    let measures_ok = large
        .iter()
        .all(|r| r.measures.iter().all(|m| m.ge(&floor) && half.ge(m)))
        && large
            .windows(2)
            .all(|w| (0..3).all(|j| w[1].measures[j].ge(&w[0].measures[j])));
    let influence_decreasing = rows
        .windows(2)
        .all(|w| (0..3).all(|j| w[0].max_influence[j].gt(&w[1].max_influence[j])));
    Ok(ThreeSetsReport {
        rows,
        triple_zero,
        measures_ok,
        influence_decreasing,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovCheckReport {
    pub steps: usize,
    /// E[∏_{j<ℓ} f(X⁽ʲ⁾)].
    pub lhs: Number,
    /// E[(∏_{j<ℓ−2} f(X⁽ʲ⁾))·g(X⁽ˡ⁻²⁾)] over the first ℓ−1 steps.
    pub rhs: Number,
    pub identity_holds: bool,
    pub g_below_f: bool,
    pub g_mean: Number,
}

/// Applies the transition matrix `t` (row-major, m×m) to every coordinate of `vals`.
fn apply_kernel<T: Scalar>(vals: &[T], t: &[T], m: usize, n: usize) -> Vec<T> {
    let mut cur = vals.to_vec();
    for axis in 0..n {
        let stride = radix::stride(m, axis);
        let mut next = cur.clone();
        for (idx, out) in next.iter_mut().enumerate() {
            let a = (idx / stride) % m;
            let base = idx - a * stride;
            *out = (0..m).fold(T::zero(), |acc, b| acc + t[a * m + b].clone() * cur[base + b * stride].clone());
        }
        cur = next;
    }
    cur
}

/// Merges the last two steps: g(x) = f(x)·E[f(X⁽ˡ⁻¹⁾) | X⁽ˡ⁻²⁾ = x], then checks the identity
/// E[∏_j f] = E[(∏_{j<ℓ−2} f)·g] and g ≤ f.
pub fn markov_same_set_check(p: &StepDistribution, f: &FunctionSpec, budget: u128) -> Result<MarkovCheckReport> {
    let ell = p.steps();
    let Some(kernels) = is_markov_generated(p, 1e-12)? else {
        return Err(Error::Precondition("P is not generated by a Markov chain".into()));
    };
    if f.alphabet() != p.alphabet() {
        return Err(Error::Invalid("function and distribution use different alphabets".into()));
    }
    let (m, n) = (p.alphabet().len(), f.n());
    let f_vals = f.to_table()?;
    let last = &kernels[ell - 2];
    let (g, g_below_f) = match last {
        Weights::Exact(t) => {
            let h = apply_kernel(&f_vals, t, m, n);
            let g: Vec<Rational> = f_vals.iter().zip(&h).map(|(a, b)| a * b).collect();
            let below = g.iter().zip(&f_vals).all(|(a, b)| a <= b);
            (FunctionSpec::table(f.alphabet().clone(), n, g)?, below)
        }
        Weights::Float(t) => {
            let fv: Vec<f64> = f_vals.iter().map(Scalar::to_f64).collect();
            let h = apply_kernel(&fv, t, m, n);
            let g: Vec<f64> = fv.iter().zip(&h).map(|(a, b)| a * b).collect();
            let below = g.iter().zip(&fv).all(|(a, b)| *a <= b + 1e-12);
            let g = g.iter().map(|x| Scalar::from_f64(x.clamp(0.0, 1.0))).collect();
            (FunctionSpec::table(f.alphabet().clone(), n, g)?, below)
        }
    };
    let lhs = same_set_expectation(p, f, Engine::Auto, budget)?;
    let head: Vec<usize> = (0..ell - 1).collect();
    let q = StepDistribution::new(p.alphabet().clone(), ell - 1, p.project(&head)?)?;
    let mut fns = vec![f.clone(); ell - 2];
    fns.push(g.clone());
    let rhs = multi_set_expectation(&q, &fns, Engine::Auto, budget)?;
    let identity_holds = match (&lhs, &rhs) {
        (Number::Exact(a), Number::Exact(b)) => a == b,
        _ => (lhs.to_f64() - rhs.to_f64()).abs() <= 1e-10,
    };
    let g_mean = expectation(&g, &p.marginal(ell - 2)?)?;
    Ok(MarkovCheckReport {
        steps: ell,
        lhs,
        rhs,
        identity_holds,
        g_below_f,
        g_mean,
    })
}

/// Parameterized set families for the exponent fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SetFamily {
    /// {x : #{i : x_i = symbol} ≤ t} for t = 0..=n.
    Threshold { symbol: usize },
}

impl SetFamily {
    fn member(&self, alphabet: &Alphabet, n: usize, t: usize) -> Result<FunctionSpec> {
        match *self {
            SetFamily::Threshold { symbol } => {
                FunctionSpec::anchored(alphabet.clone(), n, vec![Clause::new(None).window(symbol, 0, t as i64)])
            }
        }
    }

    fn members(&self, n: usize) -> std::ops::RangeInclusive<usize> {
        match self {
            SetFamily::Threshold { .. } => 0..=n,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentPoint {
    pub target: f64,
    pub parameter: usize,
    pub mu: Number,
    pub delta: Number,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub n: usize,
    pub family: SetFamily,
    pub points: Vec<ExponentPoint>,
    /// Least-squares slope of ln δ against ln μ.
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

/// Fits ln δ(μ) ≈ C·ln μ + b with δ(μ) = E[f(X)f(Y)] at the family member closest to each target μ.
/// The slope is empirical evidence about polynomial hitting, nothing more.
pub fn estimate_hitting_exponent(p: &StepDistribution, n: usize, mu_grid: &[f64], family: SetFamily) -> Result<ExponentFit> {
    if p.steps() != 2 {
        return Err(Error::Precondition("the exponent fit needs a two-step distribution".into()));
    }
    if !p.is_symmetric(1e-12) {
        return Err(Error::Refused("P is not symmetric".into()));
    }
    if !positive(&p.alpha()) {
        return Err(Error::Precondition("α(P) = 0".into()));
    }
    let pi = p.marginal(0)?;
    let members: Vec<(usize, FunctionSpec, Number)> = family
        .members(n)
        .map(|t| {
            let f = family.member(p.alphabet(), n, t)?;
            let mu = expectation(&f, &pi)?;
            Ok((t, f, mu))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, _, mu)| positive(mu))
        .collect();
    if members.is_empty() {
        return Err(Error::Precondition("every family member has measure 0".into()));
    }
    let mut points: Vec<ExponentPoint> = Vec::new();
    for &target in mu_grid {
        let (t, f, mu) = members
            .iter()
            .min_by(|a, b| (a.2.to_f64() - target).abs().total_cmp(&(b.2.to_f64() - target).abs()))
            .expect("nonempty");
        if points.iter().any(|q| q.parameter == *t) {
            continue;
        }
        let delta = HittingInstance::same_set(p, f)?.expectation(Engine::Dp, DEFAULT_BUDGET)?;
        points.push(ExponentPoint {
            target,
            parameter: *t,
            mu: mu.clone(),
            delta,
        });
    }
    let usable: Vec<&ExponentPoint> = points.iter().filter(|q| positive(&q.delta)).collect();
    if usable.len() < 2 {
        return Err(Error::Precondition("the grid selects fewer than two distinct family members".into()));
    }
    let xs: Vec<f64> = usable.iter().map(|q| q.mu.to_f64().ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|q| q.delta.to_f64().ln()).collect();
    let (slope, intercept) = fit_line(&xs, &ys);
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    Ok(ExponentFit {
        n,
        family,
        points,
        slope,
        intercept,
        residuals,
    })
}

/// The Z₃ⁿ indicator of Σ x_i ≡ 0 (mod 3), the standard mod-linear example.
pub fn full_sum_zero(n: usize) -> Result<FunctionSpec> {
    FunctionSpec::mod_linear(Alphabet::numeric(3), 3, vec![1; n], 0)
}
