//! The two reduction loops: restrict until resilient, then trade influence for expectation.

use serde::Serialize;

use super::expectation::HittingInstance;
use crate::dist_core::{double_sample_kernel, rho, MarginalDistribution, StepDistribution};
use crate::error::{Error, Result};
use crate::fourier::{
    expectation, first_restriction_reaching, influences, is_resilient, max_operator, Engine, FunctionSpec,
    ResilienceReport, Restriction,
};
use crate::number::{Number, Rational};
use crate::radix;

/// Slack for comparisons whose right-hand side involves the floating ρ(P).
const RHO_SLACK: f64 = 1e-12;

fn one_like(x: &Number) -> Number {
    match x {
        Number::Exact(_) => Number::Exact(Rational::from_integer(1.into())),
        Number::Float(_) => Number::Float(1.0),
    }
}

/// E[∏_j f⁽ʲ⁾(X⁽ʲ⁾)] when the instance fits the budget.
fn product(p: &StepDistribution, fns: &[FunctionSpec], budget: u128) -> Result<Option<Number>> {
    let inst = HittingInstance::multi_set(p, fns.to_vec())?;
    match inst.evaluate(Engine::Auto, budget) {
        Ok(v) => Ok(Some(v.value)),
        Err(Error::Budget { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityStep {
    /// Restriction found in this round, of size at most k.
    pub restriction: Restriction,
    pub before: Number,
    pub after: Number,
}

/// E[∏f] ≥ factor·E[∏g], recomputed from both products.
#[derive(Clone, Debug, Serialize)]
pub struct ProductCertificate {
    pub before: Number,
    pub after: Number,
    pub factor: Number,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityIncrementLog {
    pub eps: Number,
    pub k: usize,
    pub alpha: Number,
    /// α(P)^k·ε, the per-round growth factor minus one.
    pub eps_prime: Number,
    pub mu: Number,
    pub final_mean: Number,
    pub iterations: usize,
    /// ⌈2 ln(1/μ)/ε'⌉.
    pub iteration_bound: u64,
    /// The composed restriction R with g = Rf.
    pub restriction: Restriction,
    pub steps: Vec<DensityStep>,
    /// Independent resilience check of g.
    pub resilience: ResilienceReport,
    /// ln c for c = exp(−2 ln(1/μ)/(α^{2k}ε)).
    pub ln_loss_bound: f64,
    /// E[∏f] ≥ α^{|R|}·E[∏g], when both products fit the budget.
    pub certificate: Option<ProductCertificate>,
}

/// Restricts `f` until it is ε-resilient up to size k, taking at each round the first
/// restriction (in search order) that lifts the mean by a factor 1 + α(P)^k·ε.
pub fn density_increment(
    p: &StepDistribution,
    f: &FunctionSpec,
    eps: &Number,
    k: usize,
    budget: u128,
) -> Result<(FunctionSpec, DensityIncrementLog)> {
    if f.alphabet() != p.alphabet() {
        return Err(Error::Invalid("function and distribution use different alphabets".into()));
    }
    let e = eps.to_f64();
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::Range(format!("ε = {eps} is outside (0, 1]")));
    }
    let alpha = p.alpha();
    if !alpha.gt(&Number::Float(0.0)) {
        return Err(Error::Precondition("α(P) = 0".into()));
    }
    let pi = p.marginal(0)?;
    let mu = expectation(f, &pi)?;
    if !mu.gt(&Number::Float(0.0)) {
        return Err(Error::Precondition("E[f] = 0".into()));
    }
    let eps_prime = &alpha.pow(k) * eps;
    let grow = &one_like(&eps_prime) + &eps_prime;
    let iteration_bound = (2.0 * (1.0 / mu.to_f64()).ln() / eps_prime.to_f64()).ceil().max(0.0) as u64;

    let mut g = f.clone();
    let mut mean = mu.clone();
    let mut total = Restriction::none(f.n());
    let mut steps = Vec::new();
    loop {
        let threshold = &grow * &mean;
        let (found, _) = first_restriction_reaching(&g, &pi, k, &threshold, budget)?;
        let Some(w) = found else { break };
        if steps.len() as u64 >= iteration_bound.max(1) {
            return Err(Error::Internal(format!(
                "density increment exceeded its bound of {iteration_bound} rounds"
            )));
        }
        g = w.restriction.apply(&g)?;
        total = total.then(&w.restriction);
        steps.push(DensityStep {
            restriction: w.restriction,
            before: mean,
            after: w.expectation.clone(),
        });
        mean = w.expectation;
    }
    let resilience = is_resilient(&g, &pi, eps, k, budget)?;
    if !resilience.resilient {
        return Err(Error::Internal("no restriction lifts the mean, yet g is not resilient".into()));
    }
    let ell = p.steps();
    let certificate = match (product(p, &vec![f.clone(); ell], budget)?, product(p, &vec![g.clone(); ell], budget)?) {
        (Some(before), Some(after)) => {
            let factor = alpha.pow(total.size());
            let holds = before.ge(&(&factor * &after));
            Some(ProductCertificate {
                before,
                after,
                factor,
                holds,
            })
        }
        _ => None,
    };
    let a = alpha.to_f64();
    let log = DensityIncrementLog {
        eps: eps.clone(),
        k,
        ln_loss_bound: -2.0 * (1.0 / mu.to_f64()).ln() / (a.powi(2 * k as i32) * e),
        alpha,
        eps_prime,
        mu,
        final_mean: mean,
        iterations: steps.len(),
        iteration_bound,
        restriction: total,
        steps,
        resilience,
        certificate,
    };
    Ok((g, log))
}

/// Both sides of E_{(Y,Z)}[E[M[i,Y,Z]f]] ≥ E[f] + Inf_i(f)·(1 − ρ(P)²) for the double sample on one step.
#[derive(Clone, Debug, Serialize)]
pub struct MaxGainReport {
    pub step: usize,
    pub coord: usize,
    pub mean: Number,
    /// Average over the double sample (Y, Z) of E[M[i,Y,Z]f].
    pub averaged: Number,
    pub gain: Number,
    pub influence: Number,
    pub rho: f64,
    /// Inf_i(f)·(1 − ρ²).
    pub bound: f64,
    pub holds: bool,
}

pub fn max_gain_check(p: &StepDistribution, step: usize, coord: usize, f: &FunctionSpec) -> Result<MaxGainReport> {
    let r = rho(p)?;
    max_gain_with(p, step, coord, f, r)
}

fn max_gain_with(p: &StepDistribution, step: usize, coord: usize, f: &FunctionSpec, r: f64) -> Result<MaxGainReport> {
    if coord >= f.n() {
        return Err(Error::Range(format!("coordinate {coord} outside 0..{}", f.n())));
    }
    let f = if f.table_values().is_some() { f.clone() } else { f.as_table()? };
    let pi = p.marginal(step)?;
    let kernel = double_sample_kernel(p, step)?;
    let states = kernel.states().to_vec();
    let stat = kernel.stationary().probs().numbers();
    let mean = expectation(&f, &pi)?;
    let mut averaged: Option<Number> = None;
    for (y, &sy) in states.iter().enumerate() {
        for (z, &sz) in states.iter().enumerate() {
            let w = &stat[y] * &kernel.entry(y, z);
            if w.is_zero() {
                continue;
            }
            let m = expectation(&max_operator(&f, coord, sy, sz)?, &pi)?;
            let term = &w * &m;
            averaged = Some(match averaged {
                None => term,
                Some(acc) => &acc + &term,
            });
        }
    }
    let averaged = averaged.unwrap_or_else(|| mean.clone());
    let influence = influences(&f, &pi)?.swap_remove(coord);
    let gain = &averaged - &mean;
    let bound = influence.to_f64() * (1.0 - r * r);
    Ok(MaxGainReport {
        step,
        coord,
        holds: gain.to_f64() >= bound - RHO_SLACK,
        mean,
        averaged,
        gain,
        influence,
        rho: r,
        bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InfluenceStep {
    pub step: usize,
    pub coord: usize,
    pub influence: Number,
    /// x̄ on the other steps, in step order with `step` left out.
    pub context: Vec<usize>,
    pub y: usize,
    pub z: usize,
    pub p_y: Number,
    pub p_z: Number,
    pub sum_before: Number,
    pub sum_after: Number,
    pub gain: Number,
    pub product_before: Option<Number>,
    pub product_after: Option<Number>,
    /// product_before / product_after when both are known and the latter is positive.
    pub ratio: Option<f64>,
    pub gain_ok: bool,
    pub ratio_ok: bool,
    pub max_gain: MaxGainReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct InfluenceReductionLog {
    pub tau: Number,
    pub rho: f64,
    pub steps_count: usize,
    pub alphabet_size: usize,
    /// τ(1 − ρ²)/2.
    pub gain_target: f64,
    /// τ(1 − ρ²)/(2ℓ|Ω|^{ℓ+1}).
    pub beta_hat: f64,
    /// ⌊2ℓ/(τ(1 − ρ²))⌋.
    pub iteration_bound: u64,
    pub iterations: usize,
    pub steps: Vec<InfluenceStep>,
    pub final_max_influence: Number,
    /// ln of the certified overall factor β̂^{iterations}.
    pub ln_beta: f64,
    pub certified: bool,
}

fn marginals(p: &StepDistribution) -> Result<Vec<MarginalDistribution>> {
    (0..p.steps()).map(|j| p.marginal(j)).collect()
}

/// Replaces functions until every influence is at most τ. Each round takes the coordinate of
/// largest influence and the first (x̄, y, z) meeting both the gain target and the probability floor.
pub fn influence_reduction(
    p: &StepDistribution,
    fns: &[FunctionSpec],
    tau: &Number,
    budget: u128,
) -> Result<(Vec<FunctionSpec>, InfluenceReductionLog)> {
    let ell = p.steps();
    if fns.len() != ell {
        return Err(Error::Invalid(format!("{} functions for {ell} steps", fns.len())));
    }
    if !tau.gt(&Number::Float(0.0)) {
        return Err(Error::Range("τ must be positive".into()));
    }
    let r = rho(p)?;
    if r >= 1.0 - 1e-9 {
        return Err(Error::Refused(format!(
            "ρ(P) = {r}: the influence reduction gives no guarantee when ρ = 1"
        )));
    }
    let mut gs: Vec<FunctionSpec> = fns
        .iter()
        .map(|f| if f.table_values().is_some() { Ok(f.clone()) } else { f.as_table() })
        .collect::<Result<_>>()?;
    HittingInstance::multi_set(p, gs.clone())?;
    let n = gs[0].n();
    let m = p.alphabet().len();
    let pis = marginals(p)?;
    let t = tau.to_f64();
    let gain_target = t * (1.0 - r * r) / 2.0;
    let beta_hat = t * (1.0 - r * r) / (2.0 * ell as f64 * (m as f64).powi(ell as i32 + 1));
    let iteration_bound = (2.0 * ell as f64 / (t * (1.0 - r * r))).floor() as u64;

    let mut steps = Vec::new();
    loop {
        let infl: Vec<Vec<Number>> = gs.iter().zip(&pis).map(|(g, pi)| influences(g, pi)).collect::<Result<_>>()?;
        let mut cands: Vec<(usize, usize)> = (0..ell)
            .flat_map(|j| (0..n).map(move |i| (j, i)))
            .filter(|&(j, i)| infl[j][i].gt(tau))
            .collect();
        if cands.is_empty() {
            let final_max_influence = infl
                .iter()
                .flatten()
                .cloned()
                .reduce(|a, b| if b.gt(&a) { b } else { a })
                .unwrap_or(Number::Float(0.0));
            let certified = steps.iter().all(|s: &InfluenceStep| s.gain_ok && s.ratio_ok && s.max_gain.holds);
            let log = InfluenceReductionLog {
                tau: tau.clone(),
                rho: r,
                steps_count: ell,
                alphabet_size: m,
                gain_target,
                beta_hat,
                iteration_bound,
                iterations: steps.len(),
                ln_beta: steps.len() as f64 * beta_hat.ln(),
                steps,
                final_max_influence,
                certified,
            };
            return Ok((gs, log));
        }
        if steps.len() as u64 >= iteration_bound {
            return Err(Error::Internal(format!(
                "influence reduction exceeded its bound of {iteration_bound} rounds"
            )));
        }
        cands.sort_by(|a, b| infl[b.0][b.1].cmp_value(&infl[a.0][a.1]));
        let means: Vec<Number> = gs.iter().zip(&pis).map(|(g, pi)| expectation(g, pi)).collect::<Result<_>>()?;
        let sum_before = means.iter().cloned().sum::<Number>();
        let mut chosen = None;
        for &(js, i) in &cands {
            if let Some(found) = find_triple(p, &gs, &pis, js, i, &sum_before, gain_target, beta_hat)? {
                chosen = Some((js, i, found));
                break;
            }
        }
        let Some((js, i, tr)) = chosen else {
            return Err(Error::Internal(
                "no (x̄, y, z) meets the gain target and the probability floor".into(),
            ));
        };
        let max_gain = max_gain_with(p, js, i, &gs[js], r)?;
        let next: Vec<FunctionSpec> = (0..ell)
            .map(|j| {
                if j == js {
                    max_operator(&gs[j], i, tr.y, tr.z)
                } else {
                    Ok(gs[j].restrict_coordinate(i, tr.full[j]))
                }
            })
            .collect::<Result<_>>()?;
        let product_before = product(p, &gs, budget)?;
        let product_after = product(p, &next, budget)?;
        let ratio = match (&product_before, &product_after) {
            (Some(b), Some(a)) if !a.is_zero() => Some(b.to_f64() / a.to_f64()),
            _ => None,
        };
        let ratio_ok = match (&product_before, &product_after) {
            (Some(b), Some(a)) => b.to_f64() >= beta_hat * a.to_f64() * (1.0 - RHO_SLACK),
            _ => true,
        };
        let context: Vec<usize> = (0..ell).filter(|&j| j != js).map(|j| tr.full[j]).collect();
        steps.push(InfluenceStep {
            step: js,
            coord: i,
            influence: infl[js][i].clone(),
            context,
            y: tr.y,
            z: tr.z,
            p_y: tr.p_y,
            p_z: tr.p_z,
            gain_ok: tr.gain.to_f64() >= gain_target - RHO_SLACK,
            sum_before: sum_before.clone(),
            sum_after: tr.sum_after,
            gain: tr.gain,
            product_before,
            product_after,
            ratio,
            ratio_ok,
            max_gain,
        });
        gs = next;
    }
}

struct Triple {
    /// Full step tuple with the chosen step set to y.
    full: Vec<usize>,
    y: usize,
    z: usize,
    p_y: Number,
    p_z: Number,
    sum_after: Number,
    gain: Number,
}

#[allow(clippy::too_many_arguments)]
fn find_triple(
    p: &StepDistribution,
    gs: &[FunctionSpec],
    pis: &[MarginalDistribution],
    js: usize,
    i: usize,
    sum_before: &Number,
    gain_target: f64,
    beta_hat: f64,
) -> Result<Option<Triple>> {
    let ell = p.steps();
    let m = p.alphabet().len();
    // E[R[i,a] g_j] for every step and symbol, and E[M[i,y,z] g_{j*}] for every pair.
    let restricted: Vec<Vec<Number>> = (0..ell)
        .map(|j| {
            (0..m)
                .map(|a| if j == js { Ok(Number::Float(0.0)) } else { expectation(&gs[j].restrict_coordinate(i, a), &pis[j]) })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let maxed: Vec<Number> = (0..m * m)
        .map(|c| expectation(&max_operator(&gs[js], i, c / m, c % m)?, &pis[js]))
        .collect::<Result<_>>()?;
    let mut ctx = vec![0; ell - 1];
    loop {
        let mut full = vec![0; ell];
        let mut it = ctx.iter();
        for (j, slot) in full.iter_mut().enumerate() {
            if j != js {
                *slot = *it.next().expect("context has ℓ−1 entries");
            }
        }
        let rest: Option<Number> = (0..ell).filter(|&j| j != js).map(|j| restricted[j][full[j]].clone()).reduce(|a, b| &a + &b);
        for y in 0..m {
            full[js] = y;
            let p_y = p.weight(&full);
            if p_y.to_f64() < beta_hat {
                continue;
            }
            for z in 0..m {
                full[js] = z;
                let p_z = p.weight(&full);
                if p_z.to_f64() < beta_hat {
                    continue;
                }
                let sum_after = match &rest {
                    Some(r) => r + &maxed[y * m + z],
                    None => maxed[y * m + z].clone(),
                };
                let gain = &sum_after - sum_before;
                if gain.to_f64() >= gain_target {
                    full[js] = y;
                    return Ok(Some(Triple {
                        full,
                        y,
                        z,
                        p_y,
                        p_z,
                        sum_after,
                        gain,
                    }));
                }
            }
        }
        if !radix::increment(&mut ctx, m) {
            return Ok(None);
        }
    }
}
