use serde::Serialize;
use serde_json::{json, Value};
use sethit::decompose::{convex_cycle_decomposition, decomposition_guarantees};
use sethit::dist_core::{check_edge_variance, is_markov_generated, rho_report, rho_via_svd, StepDistribution};
use sethit::fourier::{analyze, build_basis, influences, total_influence, variance, expectation_with, Engine};
use sethit::hitting::{
    counterexample_three_sets, counterexample_unequal_marginals, density_increment, estimate_hitting_exponent,
    influence_reduction, markov_same_set_check, multi_set_expectation, same_set_expectation, SetFamily,
};
use sethit::invariance::{
    correlated_pair, gamma_decay_check, gaussian_rhc_check, hypercontractivity_check, invariance_gap, mollifier_phi,
    phi, smoothing_gap, EnsembleSequence, ThresholdForm,
};
use sethit::number::{parse_number, rat_int, Exactness, Number};

use crate::args::{Command, EngineArg, Inputs, Invariance, Reduce, Suite, Verify};
use crate::inputs::Reader;
use crate::CliError;

/// What a command produced, before it is wrapped into a report.
pub struct Outcome {
    pub results: Value,
    pub holds: bool,
    pub exactness: Exactness,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

impl Outcome {
    fn new(results: impl Serialize, holds: bool, exactness: Exactness) -> Result<Self, CliError> {
        Ok(Outcome {
            results: serde_json::to_value(results).map_err(|e| CliError::Core(e.into()))?,
            holds,
            exactness,
            seed: None,
            samples: None,
        })
    }

    fn sampled(mut self, seed: u64, samples: usize) -> Self {
        self.seed = Some(seed);
        self.samples = Some(samples);
        self
    }
}

fn exactness_of(p: &StepDistribution) -> Exactness {
    if p.is_exact() {
        Exactness::Rational
    } else {
        Exactness::Float
    }
}

fn number(flag: &str, text: &str) -> Result<Number, CliError> {
    parse_number(text).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn engine(e: EngineArg) -> Engine {
    match e {
        EngineArg::Enumerate => Engine::Enumerate,
        EngineArg::Dp => Engine::Dp,
        EngineArg::Auto => Engine::Auto,
    }
}

pub fn run(cmd: &Command, budget: u128, rd: &mut Reader) -> Result<Outcome, CliError> {
    match cmd {
        Command::Inspect { dist } => inspect(&rd.dist(dist)?),
        Command::Decompose { dist } => decompose(&rd.dist(dist)?),
        Command::Fourier(a) => {
            let p = rd.dist(&a.inputs.dist)?;
            let f = single(rd, &a.inputs)?;
            let pi = p.marginal(a.step)?;
            let e = analyze(&f, &build_basis(&pi))?;
            let top: Vec<Value> = e.top(a.top, 1e-12).into_iter().map(|(s, c)| json!({"sigma": s, "coeff": c})).collect();
            let mean = expectation_with(&f, &pi, Engine::Auto, budget)?;
            let var = variance(&f, &pi)?;
            let second_moment = var.to_f64() + mean.to_f64().powi(2);
            let results = json!({
                "n": f.n(),
                "step": a.step,
                "mean": mean,
                "variance": var,
                "influences": influences(&f, &pi)?,
                "total_influence": total_influence(&f, &pi)?,
                "degree": e.degree(1e-12),
                "parseval_defect": (e.squared_norm() - second_moment).abs(),
                "top_coefficients": top,
            });
            Outcome::new(results, true, exactness_of(&p))
        }
        Command::Hit(a) => {
            let p = rd.dist(&a.inputs.dist)?;
            let fns = rd.functions(&a.inputs.fns, a.inputs.n)?;
            let eng = engine(a.engine);
            let value = match fns.len() {
                1 => same_set_expectation(&p, &fns[0], eng, budget)?,
                k if k == p.steps() => multi_set_expectation(&p, &fns, eng, budget)?,
                k => return Err(CliError::Usage(format!("{k} functions for {} steps", p.steps()))),
            };
            let ex = if value.is_exact() { Exactness::Rational } else { Exactness::Float };
            let results = json!({ "n": fns[0].n(), "steps": p.steps(), "engine": format!("{:?}", a.engine).to_lowercase(), "value": value });
            Outcome::new(results, true, ex)
        }
        Command::Reduce(r) => reduce(r, budget, rd),
        Command::Verify(v) => verify(v, budget, rd),
        Command::Invariance(i) => invariance(i, budget, rd),
    }
}

fn single(rd: &mut Reader, inputs: &Inputs) -> Result<sethit::fourier::FunctionSpec, CliError> {
    if inputs.fns.len() != 1 {
        return Err(CliError::Usage("this command takes exactly one --fn".into()));
    }
    rd.function(&inputs.fns[0], inputs.n)
}

fn inspect(p: &StepDistribution) -> Result<Outcome, CliError> {
    let marginals = (0..p.steps())
        .map(|j| {
            let m = p.marginal(j)?;
            Ok((0..p.alphabet().len()).map(|a| m.prob(a)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let markov = if p.steps() >= 2 { Some(is_markov_generated(p, 1e-12)?.is_some()) } else { None };
    let results = json!({
        "name": p.name(),
        "alphabet": p.alphabet().symbols(),
        "steps": p.steps(),
        "support_size": p.support().len(),
        "marginals": marginals,
        "equal_marginals": p.equal_marginals(1e-12),
        "symmetric": p.is_symmetric(1e-12),
        "alpha": p.alpha(),
        "beta": p.beta(),
        "rho": rho_report(p)?,
        "rho_svd": rho_via_svd(p)?,
        "markov_generated": markov,
    });
    Outcome::new(results, true, exactness_of(p))
}

fn decompose(p: &StepDistribution) -> Result<Outcome, CliError> {
    let dec = convex_cycle_decomposition(p)?;
    let g = decomposition_guarantees(&dec, p)?;
    let holds = g.all_pass;
    Outcome::new(g, holds, Exactness::Rational)
}

fn reduce(r: &Reduce, budget: u128, rd: &mut Reader) -> Result<Outcome, CliError> {
    match r {
        Reduce::Density { inputs, eps, k } => {
            let p = rd.dist(&inputs.dist)?;
            let f = single(rd, inputs)?;
            let (g, log) = density_increment(&p, &f, &number("eps", eps)?, *k, budget)?;
            let holds = log.resilience.resilient
                && (log.iterations as u64) <= log.iteration_bound
                && log.final_mean.ge(&log.mu)
                && log.certificate.as_ref().is_none_or(|c| c.holds);
            Outcome::new(json!({ "log": log, "function": g.to_json() }), holds, exactness_of(&p))
        }
        Reduce::Influence { inputs, tau } => {
            let p = rd.dist(&inputs.dist)?;
            let fns = rd.functions(&inputs.fns, inputs.n)?;
            let fns = if fns.len() == 1 { vec![fns[0].clone(); p.steps()] } else { fns };
            let (out, log) = influence_reduction(&p, &fns, &number("tau", tau)?, budget)?;
            let holds = log.certified;
            let functions: Vec<Value> = out.iter().map(|f| f.to_json()).collect();
            Outcome::new(json!({ "log": log, "functions": functions }), holds, exactness_of(&p))
        }
    }
}

fn verify(v: &Verify, budget: u128, rd: &mut Reader) -> Result<Outcome, CliError> {
    match v {
        Verify::EdgeVariance { dist } => {
            let p = rd.dist(dist)?;
            let m = p.alphabet().len();
            let mut rows = Vec::new();
            let mut holds = true;
            for j in 0..p.steps() {
                for a in 0..m {
                    let f: Vec<_> = (0..m).map(|b| rat_int(i64::from(a == b))).collect();
                    let r = check_edge_variance(&p, j, &f)?;
                    holds &= r.holds;
                    rows.push(json!({ "step": j, "symbol": p.alphabet().symbol(a), "report": r }));
                }
            }
            Outcome::new(json!({ "checks": rows }), holds, exactness_of(&p))
        }
        Verify::Decomposition { dist } => decompose(&rd.dist(dist)?),
        Verify::Counterexamples { n, suite } => {
            let mut results = serde_json::Map::new();
            let mut holds = true;
            if matches!(suite, Suite::Unequal | Suite::Both) {
                let r = counterexample_unequal_marginals(n)?;
                holds &= r.strictly_decreasing;
                results.insert("unequal_marginals".into(), serde_json::to_value(&r).map_err(|e| CliError::Core(e.into()))?);
            }
            if matches!(suite, Suite::Three | Suite::Both) {
                let r = counterexample_three_sets(n, 8)?;
                holds &= r.triple_zero && r.measures_ok && r.influence_decreasing;
                results.insert("three_sets".into(), serde_json::to_value(&r).map_err(|e| CliError::Core(e.into()))?);
            }
            Outcome::new(Value::Object(results), holds, Exactness::Rational)
        }
        Verify::Markov { inputs } => {
            let p = rd.dist(&inputs.dist)?;
            let f = single(rd, inputs)?;
            let r = markov_same_set_check(&p, &f, budget)?;
            let holds = r.identity_holds && r.g_below_f;
            Outcome::new(r, holds, exactness_of(&p))
        }
        Verify::Exponent { dist, n, symbol, grid, expect, tol } => {
            let p = rd.dist(dist)?;
            let fit = estimate_hitting_exponent(&p, *n, grid, SetFamily::Threshold { symbol: *symbol })?;
            let holds = expect.is_none_or(|s| (fit.slope - s).abs() <= *tol);
            Outcome::new(json!({ "fit": fit, "expected": expect, "tol": tol }), holds, Exactness::Float)
        }
    }
}

fn invariance(i: &Invariance, budget: u128, rd: &mut Reader) -> Result<Outcome, CliError> {
    match i {
        Invariance::Hyper { inputs, step, alpha, gaussian, sampling } => {
            let p = rd.dist(&inputs.dist)?;
            let polys = rd.polys(inputs, &p)?;
            let poly = polys.get(*step).ok_or_else(|| CliError::Usage(format!("step {step} is out of range")))?;
            let basis = build_basis(&p.marginal(*step)?);
            let min_mass = basis.support().iter().map(|&a| basis.probs()[a]).fold(1.0, f64::min);
            let ens = if *gaussian {
                EnsembleSequence::Gaussian { n: poly.n(), p: poly.ensemble_size() }
            } else {
                EnsembleSequence::Discrete { basis, n: poly.n() }
            };
            let r = hypercontractivity_check(poly, &ens, alpha.unwrap_or(min_mass), sampling.samples, sampling.seed, budget)?;
            let holds = r.noise_holds && r.degree_holds;
            let out = Outcome::new(json!({ "polynomial": poly, "report": r }), holds, if *gaussian { Exactness::MonteCarlo } else { Exactness::Float })?;
            Ok(if *gaussian { out.sampled(sampling.seed, sampling.samples) } else { out })
        }
        Invariance::Gap { inputs, lambda, c, sampling } => {
            let p = rd.dist(&inputs.dist)?;
            let polys = rd.polys(inputs, &p)?;
            let r = invariance_gap(&polys, &p, *lambda, sampling.samples, sampling.seed, *c, budget)?;
            let holds = r.holds;
            let note = "consistency with the configured constant C, not a verification of the asymptotic statement";
            Ok(Outcome::new(json!({ "report": r, "note": note }), holds, Exactness::MonteCarlo)?.sampled(sampling.seed, sampling.samples))
        }
        Invariance::Smooth { inputs, gamma, eps } => {
            let p = rd.dist(&inputs.dist)?;
            let polys = rd.polys(inputs, &p)?;
            let r = smoothing_gap(&polys, &p, *gamma, *eps, budget)?;
            let holds = r.holds || !r.in_range;
            Outcome::new(r, holds, Exactness::Float)
        }
        Invariance::Rhc { corr, signs, thresholds, rho, sampling } => {
            if signs.len() != 2 || thresholds.len() != 2 {
                return Err(CliError::Usage("--signs and --thresholds take two values".into()));
            }
            let funcs = signs
                .iter()
                .zip(thresholds)
                .map(|(s, &t)| match s.as_str() {
                    "+" => Ok(ThresholdForm { weights: vec![1.0], threshold: t }),
                    "-" => Ok(ThresholdForm { weights: vec![-1.0], threshold: t }),
                    other => Err(CliError::Usage(format!("sign {other:?} is not + or -"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let r = gaussian_rhc_check(&correlated_pair(*corr), 2, &funcs, rho.unwrap_or(corr.abs()), sampling.samples, sampling.seed)?;
            let holds = r.holds;
            Ok(Outcome::new(r, holds, Exactness::MonteCarlo)?.sampled(sampling.seed, sampling.samples))
        }
        Invariance::Mollifier { lambda, x } => {
            let rows = x
                .iter()
                .map(|&x| {
                    let v = mollifier_phi(*lambda, x)?;
                    Ok(json!({ "x": x, "phi": phi(x), "phi_lambda": v, "deviation": (v - phi(x)).abs() }))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let holds = rows.iter().all(|r| r["deviation"].as_f64().unwrap_or(f64::INFINITY) <= *lambda);
            Outcome::new(json!({ "lambda": lambda, "points": rows }), holds, Exactness::Float)
        }
        Invariance::Decay { inputs, step, gamma } => {
            let p = rd.dist(&inputs.dist)?;
            let polys = rd.polys(inputs, &p)?;
            let poly = polys.get(*step).ok_or_else(|| CliError::Usage(format!("step {step} is out of range")))?;
            let r = gamma_decay_check(poly, *gamma)?;
            Outcome::new(r, true, Exactness::Float)
        }
    }
}
