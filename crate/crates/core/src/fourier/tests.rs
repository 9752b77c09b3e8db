use num::traits::Zero;
use proptest::prelude::*;
use rand::RngExt;

use super::*;
use crate::dist_core::{Alphabet, MarginalDistribution};
use crate::gen::{self, random_anchored, random_mod_linear, random_table};
use crate::number::{rat, rat_int, Number, Rational, Weights};
use crate::radix;

fn uniform(m: usize) -> MarginalDistribution {
    MarginalDistribution::uniform(Alphabet::numeric(m))
}

fn exact(x: Number) -> Rational {
    x.as_exact().cloned().expect("exact result")
}

fn probs_of(pi: &MarginalDistribution) -> Vec<Rational> {
    pi.probs().to_rational_vec()
}

/// Σ_x f(x)·∏π(x_i) through `evaluate` alone.
fn brute_expectation(f: &FunctionSpec, p: &[Rational]) -> Rational {
    let m = p.len();
    let mut x = vec![0; f.n()];
    let mut acc = Rational::zero();
    loop {
        let w: Rational = x.iter().map(|&a| p[a].clone()).product();
        acc += w * f.evaluate(&x).unwrap();
        if !radix::increment(&mut x, m) {
            return acc;
        }
    }
}

/// E over x_{∖i} of the variance of a ↦ f(x with x_i = a), through `evaluate` alone.
fn brute_influence(f: &FunctionSpec, p: &[Rational], i: usize) -> Rational {
    let m = p.len();
    let mut x = vec![0; f.n()];
    let mut acc = Rational::zero();
    loop {
        if x[i] == 0 {
            let w: Rational = x.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &a)| p[a].clone()).product();
            let mut y = x.clone();
            let vals: Vec<Rational> = (0..m)
                .map(|a| {
                    y[i] = a;
                    f.evaluate(&y).unwrap()
                })
                .collect();
            let mean: Rational = vals.iter().zip(p).map(|(v, q)| v * q).sum();
            let sq: Rational = vals.iter().zip(p).map(|(v, q)| v * v * q).sum();
            acc += w * (sq - &mean * &mean);
        }
        if !radix::increment(&mut x, m) {
            return acc;
        }
    }
}

fn random_pi(rng: &mut gen::Rng, m: usize) -> MarginalDistribution {
    let counts: Vec<i64> = (0..m).map(|_| rng.random_range(1..=5)).collect();
    let total: i64 = counts.iter().sum();
    MarginalDistribution::new(Alphabet::numeric(m), Weights::Exact(counts.iter().map(|&c| rat(c, total)).collect())).unwrap()
}

fn dictator3(n: usize) -> FunctionSpec {
    FunctionSpec::dictator(Alphabet::numeric(3), n, 0, 0).unwrap()
}

fn expansion(f: &FunctionSpec, pi: &MarginalDistribution) -> FourierExpansion {
    analyze(f, &build_basis(pi)).unwrap()
}

fn table_f64(f: &FunctionSpec) -> Vec<f64> {
    f.to_table().unwrap().iter().map(crate::Scalar::to_f64).collect()
}

// Representations and evaluation.

#[test]
fn evaluate_examples() {
    let a3 = Alphabet::numeric(3);
    let junta = FunctionSpec::junta(a3.clone(), 3, vec![(0, 0)]).unwrap();
    assert_eq!(junta.evaluate(&[0, 2, 1]).unwrap(), rat_int(1));
    let lin = FunctionSpec::mod_linear(a3.clone(), 3, vec![1, 1], 0).unwrap();
    assert_eq!(lin.evaluate(&[1, 2]).unwrap(), rat_int(1));
    let few_twos = FunctionSpec::anchored(a3.clone(), 3, vec![Clause::new(None).window(2, 0, 0)]).unwrap();
    assert_eq!(strictly_below(&rat(3, 3)), (0, 0));
    assert_eq!(few_twos.evaluate(&[2, 2, 0]).unwrap(), rat_int(0));
    assert_eq!(few_twos.evaluate(&[1, 1, 0]).unwrap(), rat_int(1));
    assert!(junta.evaluate(&[0, 3, 1]).is_err());
    assert!(junta.evaluate(&[0, 1]).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    let a2 = Alphabet::numeric(2);
    assert!(FunctionSpec::table(a2.clone(), 2, vec![rat_int(0); 3]).is_err());
    assert!(FunctionSpec::table(a2.clone(), 1, vec![rat_int(0), rat(3, 2)]).is_err());
    assert!(FunctionSpec::anchored(a2.clone(), 2, vec![Clause::new(None).window(0, 0, 3)]).is_err());
    assert!(FunctionSpec::junta(a2.clone(), 2, vec![(2, 0)]).is_err());
    assert!(FunctionSpec::mod_linear(a2, 0, vec![1], 0).is_err());
}

#[test]
fn integer_windows_use_exact_thresholds() {
    assert_eq!(integer_window(&rat(291, 100), &rat(309, 100)), (3, 3));
    assert_eq!(integer_window(&rat(-1, 2), &rat(1, 2)), (0, 0));
    assert_eq!(strictly_below(&rat(20, 1)), (0, 19));
    assert_eq!(strictly_below(&rat(7, 3)), (0, 2));
}

#[test]
fn json_round_trip_for_every_kind() {
    let a3 = Alphabet::new(["a", "b", "c"]).unwrap();
    let specs = vec![
        FunctionSpec::table(a3.clone(), 1, vec![rat(1, 2), rat_int(0), rat_int(1)]).unwrap(),
        FunctionSpec::junta(a3.clone(), 3, vec![(0, 1), (2, 2)]).unwrap(),
        FunctionSpec::mod_linear(a3.clone(), 3, vec![1, 2, 0], 1).unwrap(),
        FunctionSpec::anchored(a3.clone(), 4, vec![Clause::new(Some((1, 2))).window(0, 1, 3), Clause::new(None).window(2, 0, 1)])
            .unwrap()
            .restrict_coordinate(3, 0),
        FunctionSpec::constant(a3, 2, rat(1, 3)).unwrap(),
    ];
    for f in specs {
        let text = f.to_json().to_string();
        assert_eq!(FunctionSpec::from_json(&text).unwrap(), f, "{text}");
    }
}

#[test]
fn json_accepts_single_clause_shorthand_and_numeric_tokens() {
    let text = r#"{"n": 3, "alphabet": [0, 1], "kind": "anchored_symmetric",
                   "anchor": {"coord": 0, "symbol": 1}, "windows": {"1": [1, 1]}}"#;
    let f = FunctionSpec::from_json(text).unwrap();
    assert_eq!(f.evaluate(&[1, 0, 0]).unwrap(), rat_int(1));
    assert_eq!(f.evaluate(&[1, 1, 0]).unwrap(), rat_int(0));
    assert_eq!(f.evaluate(&[0, 1, 0]).unwrap(), rat_int(0));
    assert!(FunctionSpec::from_json(r#"{"n": 1, "alphabet": ["0"], "kind": "nope"}"#).is_err());
    assert!(FunctionSpec::from_json("{").is_err());
}

// Expectations and variances.

#[test]
fn dictator_mean_and_variance() {
    let f = dictator3(3);
    assert_eq!(exact(expectation(&f, &uniform(3)).unwrap()), rat(1, 3));
    assert_eq!(exact(variance(&f, &uniform(3)).unwrap()), rat(2, 9));
}

#[test]
fn full_sum_indicator_has_mean_one_third() {
    let f = FunctionSpec::mod_linear(Alphabet::numeric(3), 3, vec![1; 5], 0).unwrap();
    assert_eq!(exact(expectation(&f, &uniform(3)).unwrap()), rat(1, 3));
    assert_eq!(exact(expectation_with(&f, &uniform(3), Engine::Enumerate, DEFAULT_BUDGET).unwrap()), rat(1, 3));
}

fn unequal_s1(n: usize) -> FunctionSpec {
    let (lo, hi) = integer_window(&(rat(n as i64, 3) - rat(n as i64, 100)), &(rat(n as i64, 3) + rat(n as i64, 100)));
    FunctionSpec::anchored(Alphabet::numeric(2), n, vec![Clause::new(Some((0, 1))).window(1, lo, hi)]).unwrap()
}

#[test]
fn anchored_routes_agree_on_the_weight_window_set() {
    let f = unequal_s1(9);
    let pi = MarginalDistribution::new(Alphabet::numeric(2), Weights::Exact(vec![rat(2, 3), rat(1, 3)])).unwrap();
    let dp = exact(expectation_with(&f, &pi, Engine::Dp, DEFAULT_BUDGET).unwrap());
    let en = exact(expectation_with(&f, &pi, Engine::Enumerate, DEFAULT_BUDGET).unwrap());
    assert_eq!(dp, en);
    // x_0 = 1 and exactly two more ones among the other eight coordinates.
    let oracle = rat(1, 3) * rat(28, 1) * rat(1, 9) * rat(64, 729);
    assert_eq!(dp, oracle);
}

#[test]
fn anchored_dp_scales_to_thousands_of_coordinates() {
    let n = 3000;
    let f = FunctionSpec::anchored(Alphabet::numeric(3), n, vec![Clause::new(None).window(2, 0, 999)]).unwrap();
    let e = expectation(&f, &uniform(3)).unwrap();
    assert!(e.is_exact());
    assert!((e.to_f64() - 0.493_133_316_393_175_9).abs() < 1e-12, "{e}");
}

#[test]
fn enumeration_respects_the_budget() {
    let f = dictator3(10);
    assert!(matches!(
        expectation_with(&f, &uniform(3), Engine::Enumerate, 1000),
        Err(crate::Error::Budget { .. })
    ));
}

#[test]
fn float_marginals_give_float_results() {
    let pi = MarginalDistribution::new(Alphabet::numeric(2), Weights::Float(vec![0.25, 0.75])).unwrap();
    let f = FunctionSpec::anchored(Alphabet::numeric(2), 4, vec![Clause::new(None).window(1, 2, 4)]).unwrap();
    let e = expectation(&f, &pi).unwrap();
    assert!(!e.is_exact());
    let oracle: f64 = (2..=4).map(|k| statrs_binomial(4, k) * 0.75f64.powi(k as i32) * 0.25f64.powi(4 - k as i32)).sum();
    assert!((e.to_f64() - oracle).abs() < 1e-14);
}

fn statrs_binomial(n: u64, k: u64) -> f64 {
    statrs::function::factorial::binomial(n, k)
}

// Basis and expansions.

#[test]
fn binary_basis_matches_sign_convention() {
    let b = build_basis(&uniform(2));
    assert_eq!(b.size(), 2);
    assert_eq!(b.function(0), &[1.0, 1.0]);
    assert!((b.value(1, 0) - 1.0).abs() < 1e-15 && (b.value(1, 1) + 1.0).abs() < 1e-15);
}

#[test]
fn ternary_basis_is_orthonormal() {
    for pi in [uniform(3), random_pi(&mut gen::rng(7), 3)] {
        let b = build_basis(&pi);
        let g = b.gram();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * 3 + j] - want).abs() < 1e-12);
            }
        }
        for k in 1..3 {
            let lead = b.function(k).iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*lead > 0.0);
        }
    }
}

#[test]
fn point_mass_basis_is_constant_only() {
    let pi = MarginalDistribution::new(Alphabet::numeric(3), Weights::Exact(vec![rat_int(0), rat_int(1), rat_int(0)])).unwrap();
    let b = build_basis(&pi);
    assert_eq!(b.size(), 1);
    assert_eq!(b.support(), &[1]);
}

#[test]
fn constant_and_dictator_expansions() {
    let c = FunctionSpec::constant(Alphabet::numeric(3), 2, rat(2, 5)).unwrap();
    let e = expansion(&c, &uniform(3));
    assert!((e.coefficient(&[0, 0]) - 0.4).abs() < 1e-12);
    assert!(e.coeffs.iter().skip(1).all(|x| x.abs() < 1e-12));

    let d = FunctionSpec::dictator(Alphabet::numeric(2), 1, 0, 1).unwrap();
    let e = expansion(&d, &uniform(2));
    assert!((e.coefficient(&[0]) - 0.5).abs() < 1e-12);
    assert!((e.coefficient(&[1]) + 0.5).abs() < 1e-12);
    assert!((low_degree_max_coefficient(&d, 1, &build_basis(&uniform(2))).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn low_degree_max_examples() {
    let b3 = build_basis(&uniform(3));
    let c = FunctionSpec::constant(Alphabet::numeric(3), 2, rat(1, 2)).unwrap();
    assert_eq!(low_degree_max_coefficient(&c, 2, &b3).unwrap(), 0.0);
    let lin = FunctionSpec::mod_linear(Alphabet::numeric(3), 3, vec![1, 1], 0).unwrap();
    assert!(low_degree_max_coefficient(&lin, 1, &b3).unwrap() < 1e-12);
    assert!(low_degree_max_coefficient(&lin, 2, &b3).unwrap() > 0.1);
}

#[test]
fn synthesize_inverts_analyze() {
    let f = random_table(&mut gen::rng(3), 3, 3);
    let e = expansion(&f, &random_pi(&mut gen::rng(4), 3));
    let back = synthesize(&e).unwrap();
    for (a, b) in table_f64(&f).iter().zip(table_f64(&back)) {
        assert!((a - b).abs() < 1e-10);
    }
}

// Influences.

#[test]
fn dictator_influences() {
    let f = dictator3(3);
    let inf: Vec<Rational> = influences(&f, &uniform(3)).unwrap().into_iter().map(exact).collect();
    assert_eq!(inf, vec![rat(2, 9), rat_int(0), rat_int(0)]);
    assert_eq!(exact(total_influence(&f, &uniform(3)).unwrap()), rat(2, 9));
}

#[test]
fn two_coordinate_sum_influences() {
    let f = FunctionSpec::mod_linear(Alphabet::numeric(3), 3, vec![1, 1], 0).unwrap();
    let p = probs_of(&uniform(3));
    for i in 0..2 {
        let got = exact(influence(&f, &uniform(3), i).unwrap());
        assert_eq!(got, brute_influence(&f, &p, i));
        assert_eq!(got, rat(2, 9));
    }
}

#[test]
fn constant_has_no_influence() {
    let c = FunctionSpec::constant(Alphabet::numeric(2), 3, rat(1, 2)).unwrap();
    assert!(influences(&c, &uniform(2)).unwrap().iter().all(Number::is_zero));
    assert!(influence(&c, &uniform(2), 3).is_err());
}

#[test]
fn symmetric_influence_decreases_with_n() {
    let infl = |n: usize| {
        let f = FunctionSpec::anchored(Alphabet::numeric(3), n, vec![Clause::new(None).window(2, 0, strictly_below(&rat(n as i64, 3)).1)]).unwrap();
        exact(influence(&f, &uniform(3), 0).unwrap())
    };
    let small = infl(6);
    assert_eq!(small, brute_influence(&FunctionSpec::anchored(Alphabet::numeric(3), 6, vec![Clause::new(None).window(2, 0, 1)]).unwrap(), &probs_of(&uniform(3)), 0));
    assert!(infl(12) < small && infl(24) < infl(12));
}

// Operators.

#[test]
fn noise_operator_examples() {
    let d = FunctionSpec::dictator(Alphabet::numeric(2), 1, 0, 1).unwrap();
    let half = noise_operator(&d, &Number::Exact(rat(1, 2)), &uniform(2)).unwrap();
    assert_eq!(half.table_values().unwrap(), &[rat(1, 4), rat(3, 4)]);
    let f = random_table(&mut gen::rng(5), 3, 2);
    let one = noise_operator(&f, &Number::Exact(rat_int(1)), &uniform(3)).unwrap();
    assert_eq!(one.table_values().unwrap(), f.table_values().unwrap());
    let zero = noise_operator(&f, &Number::Exact(rat_int(0)), &uniform(3)).unwrap();
    let mean = exact(expectation(&f, &uniform(3)).unwrap());
    assert!(zero.table_values().unwrap().iter().all(|v| *v == mean));
    assert!(noise_operator(&f, &Number::Float(1.5), &uniform(3)).is_err());
}

#[test]
fn projection_examples() {
    let f = dictator3(2);
    let pi = uniform(3);
    assert_eq!(projection_subset(&f, &[0, 1], &pi).unwrap().to_table().unwrap(), f.to_table().unwrap());
    let empty = projection_subset(&f, &[], &pi).unwrap();
    assert!(empty.table_values().unwrap().iter().all(|v| *v == rat(1, 3)));
    let other = projection_subset(&f, &[1], &pi).unwrap();
    assert!(other.table_values().unwrap().iter().all(|v| *v == rat(1, 3)));
    assert!(projection_subset(&f, &[2], &pi).is_err());
}

#[test]
fn max_operator_examples() {
    let f = dictator3(2).as_table().unwrap();
    let same = max_operator(&f, 0, 0, 0).unwrap();
    for idx in 0..9 {
        let x = radix::decode(idx, 3, 2);
        assert_eq!(same.evaluate(&x).unwrap(), f.evaluate(&[0, x[1]]).unwrap());
    }
    let m = max_operator(&f, 0, 0, 1).unwrap();
    assert_eq!(exact(expectation(&m, &uniform(3)).unwrap()), rat_int(1));
    let c = FunctionSpec::constant(Alphabet::numeric(3), 2, rat(1, 2)).unwrap().as_table().unwrap();
    assert_eq!(max_operator(&c, 1, 0, 2).unwrap(), c);
    assert!(max_operator(&dictator3(2), 0, 0, 1).is_err());
}

// Restrictions.

#[test]
fn restriction_examples() {
    let f = dictator3(3);
    assert_eq!(restrict(&f, &Restriction::none(3)).unwrap(), f);
    let fixed = restrict(&f, &Restriction::from_pairs(3, &[(0, 0)]).unwrap()).unwrap();
    assert_eq!(exact(expectation(&fixed, &uniform(3)).unwrap()), rat_int(1));
    let killed = restrict(&f, &Restriction::from_pairs(3, &[(0, 1)]).unwrap()).unwrap();
    assert!(killed.is_zero_function());

    let sum = FunctionSpec::mod_linear(Alphabet::numeric(3), 3, vec![1; 3], 0).unwrap();
    let r = restrict(&sum, &Restriction::from_pairs(3, &[(0, 2)]).unwrap()).unwrap();
    let FunctionKind::ModLinear(ml) = r.kind() else { panic!("kind changed") };
    assert_eq!((ml.residue, ml.coeffs.as_slice()), (1, &[0, 1, 1][..]));
    for idx in 0..27 {
        let x = radix::decode(idx, 3, 3);
        assert_eq!(r.evaluate(&x).unwrap(), sum.evaluate(&[2, x[1], x[2]]).unwrap());
    }
}

#[test]
fn anchored_restriction_kills_on_anchor_conflict() {
    let f = unequal_s1(6);
    assert!(f.restrict_coordinate(0, 0).is_zero_function());
    let g = f.restrict_coordinate(0, 1);
    assert!(!g.is_zero_function());
    assert_eq!(g.evaluate(&[0, 1, 0, 0, 0, 0]).unwrap(), rat_int(1));
}

#[test]
fn resilience_examples() {
    let pi = uniform(3);
    let sum = FunctionSpec::mod_linear(Alphabet::numeric(3), 3, vec![1; 4], 0).unwrap();
    let r = is_resilient(&sum, &pi, &Number::Exact(rat_int(0)), 3, DEFAULT_BUDGET).unwrap();
    assert!(r.resilient, "{r:?}");

    let d = dictator3(3);
    let r = is_resilient(&d, &pi, &Number::Float(0.5), 1, DEFAULT_BUDGET).unwrap();
    assert!(!r.resilient);
    let w = r.witness.unwrap();
    assert_eq!(w.restriction.pairs(), vec![(0, 0)]);
    assert_eq!(exact(w.expectation), rat_int(1));
    assert!(is_resilient(&d, &pi, &Number::Float(0.5), 4, DEFAULT_BUDGET).is_err());
    assert!(matches!(
        is_resilient(&d, &pi, &Number::Float(0.5), 3, 10),
        Err(crate::Error::Budget { .. })
    ));
}

#[test]
fn zero_function_is_vacuously_resilient() {
    let z = FunctionSpec::constant(Alphabet::numeric(2), 3, rat_int(0)).unwrap();
    assert!(is_resilient(&z, &uniform(2), &Number::Float(0.1), 2, DEFAULT_BUDGET).unwrap().resilient);
}

#[test]
fn local_variance_examples() {
    let pi = uniform(3);
    let c = FunctionSpec::constant(Alphabet::numeric(3), 3, rat(1, 2)).unwrap();
    for k in 0..=3 {
        assert!(resilience_from_local_variance(&c, &pi, &Number::Float(0.01), k).unwrap().passes);
    }
    let sum = FunctionSpec::mod_linear(Alphabet::numeric(3), 3, vec![1; 3], 0).unwrap();
    assert!(resilience_from_local_variance(&sum, &pi, &Number::Float(0.01), 2).unwrap().passes);
    let d = dictator3(3);
    let rep = resilience_from_local_variance(&d, &pi, &Number::Exact(rat(1, 10)), 1).unwrap();
    assert!(!rep.passes);
    assert_eq!(rep.worst_set, vec![0]);
    assert_eq!(exact(rep.worst_variance), rat(2, 9));
    assert_eq!(exact(rep.threshold), rat(1, 3) * rat(1, 30) * rat(1, 30));
}

#[test]
fn search_size_counts_restrictions() {
    assert_eq!(search_size(3, 1, 3), 1 + 9);
    assert_eq!(search_size(4, 2, 2), 1 + 8 + 24);
}

#[test]
fn compositions_are_complete() {
    let mut seen = Vec::new();
    for_each_composition(3, 2, |ks| seen.push(ks.to_vec()));
    assert_eq!(seen, vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
    let mut count = 0;
    for_each_composition(5, 3, |_| count += 1);
    assert_eq!(count, 21);
}

fn arb_table() -> impl Strategy<Value = (FunctionSpec, MarginalDistribution)> {
    (any::<u64>(), 2usize..=3, 1usize..=4).prop_map(|(seed, m, n)| {
        let mut rng = gen::rng(seed);
        (random_table(&mut rng, m, n), random_pi(&mut rng, m))
    })
}

#[test]
fn max_operator_can_lower_the_mean_for_a_fixed_pair() {
    // f = 1[x_0 = 2] loses all its mass when both substitutes avoid symbol 2.
    let f = FunctionSpec::dictator(Alphabet::numeric(3), 1, 0, 2).unwrap().as_table().unwrap();
    let g = max_operator(&f, 0, 0, 1).unwrap();
    assert_eq!(exact(expectation(&g, &uniform(3)).unwrap()), Rational::zero());
    assert_eq!(exact(expectation(&f, &uniform(3)).unwrap()), rat(1, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parseval((f, pi) in arb_table()) {
        let e = expansion(&f, &pi);
        let sq: Vec<Rational> = f.to_table().unwrap().iter().map(|v| v * v).collect();
        let second = brute_expectation(&FunctionSpec::table(f.alphabet().clone(), f.n(), sq).unwrap(), &probs_of(&pi));
        prop_assert!((e.squared_norm() - crate::Scalar::to_f64(&second)).abs() <= 1e-9);
    }

    #[test]
    fn influence_routes_agree((f, pi) in arb_table()) {
        let e = expansion(&f, &pi);
        for i in 0..f.n() {
            let direct = exact(influence(&f, &pi, i).unwrap());
            prop_assert_eq!(&direct, &brute_influence(&f, &probs_of(&pi), i));
            prop_assert!((crate::Scalar::to_f64(&direct) - e.influence(i)).abs() <= 1e-10);
        }
    }

    #[test]
    fn noise_routes_agree((f, pi) in arb_table(), r in 0u32..=10) {
        let rho = rat(r as i64, 10);
        let averaged = table_f64(&noise_operator(&f, &Number::Exact(rho.clone()), &pi).unwrap());
        let scaled = expansion(&f, &pi).noise(crate::Scalar::to_f64(&rho)).values();
        for (a, b) in averaged.iter().zip(&scaled) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn noise_is_a_semigroup((f, pi) in arb_table(), r in 0i64..=10, s in 0i64..=10) {
        let apply = |g: &FunctionSpec, x: Rational| noise_operator(g, &Number::Exact(x), &pi).unwrap();
        let twice = apply(&apply(&f, rat(r, 10)), rat(s, 10));
        let once = apply(&f, rat(r * s, 100));
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn total_influence_at_most_degree_times_variance((f, pi) in arb_table()) {
        let e = expansion(&f, &pi);
        prop_assert!(e.total_influence() <= e.degree(1e-12) as f64 * e.variance() + 1e-10);
    }

    #[test]
    fn projected_variance_matches_coefficients((f, pi) in arb_table(), mask in 0u32..16) {
        let set: Vec<usize> = (0..f.n()).filter(|i| mask >> i & 1 == 1).collect();
        let g = projection_subset(&f, &set, &pi).unwrap();
        let var = crate::Scalar::to_f64(&exact(variance(&g, &pi).unwrap()));
        prop_assert!((var - expansion(&f, &pi).projected_variance(&set)).abs() <= 1e-10);
    }

    #[test]
    fn round_trip((f, pi) in arb_table()) {
        let back = synthesize(&expansion(&f, &pi)).unwrap();
        for (a, b) in table_f64(&f).iter().zip(table_f64(&back)) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn max_operator_dominates_both_substitutions((f, pi) in arb_table(), i in 0usize..4, y in 0usize..3, z in 0usize..3) {
        let m = f.alphabet().len();
        let (i, y, z) = (i % f.n(), y % m, z % m);
        let g = max_operator(&f, i, y, z).unwrap();
        let ry = f.restrict_coordinate(i, y);
        let rz = f.restrict_coordinate(i, z);
        for idx in 0..m.pow(f.n() as u32) {
            let x = radix::decode(idx, m, f.n());
            let v = g.evaluate(&x).unwrap();
            prop_assert!(v >= ry.evaluate(&x).unwrap());
            prop_assert!(v >= rz.evaluate(&x).unwrap());
        }
        let _ = pi;
    }

    #[test]
    fn max_operator_averaged_over_a_double_sample_keeps_the_mean((f, pi) in arb_table(), i in 0usize..4) {
        let m = f.alphabet().len();
        let i = i % f.n();
        let p = probs_of(&pi);
        let mut avg = Rational::zero();
        for y in 0..m {
            for z in 0..m {
                let g = max_operator(&f, i, y, z).unwrap();
                avg += &p[y] * &p[z] * exact(expectation(&g, &pi).unwrap());
            }
        }
        prop_assert!(avg >= exact(expectation(&f, &pi).unwrap()));
    }

    #[test]
    fn structured_and_enumerated_routes_agree(seed in any::<u64>(), m in 2usize..=3, n in 1usize..=6) {
        let mut rng = gen::rng(seed);
        let pi = random_pi(&mut rng, m);
        let p = probs_of(&pi);
        for f in [random_anchored(&mut rng, m, n), random_mod_linear(&mut rng, m, n)] {
            let dp = exact(expectation_with(&f, &pi, Engine::Dp, DEFAULT_BUDGET).unwrap());
            let en = exact(expectation_with(&f, &pi, Engine::Enumerate, DEFAULT_BUDGET).unwrap());
            prop_assert_eq!(&dp, &en);
            prop_assert_eq!(&dp, &brute_expectation(&f, &p));
            let var = exact(variance(&f, &pi).unwrap());
            prop_assert_eq!(var, &dp - &dp * &dp);
        }
    }

    #[test]
    fn structured_influences_match_brute_force(seed in any::<u64>(), m in 2usize..=3, n in 1usize..=5) {
        let mut rng = gen::rng(seed);
        let pi = random_pi(&mut rng, m);
        let p = probs_of(&pi);
        let junta = {
            let cs = (0..rng.random_range(0..=3)).map(|_| (rng.random_range(0..n), rng.random_range(0..m))).collect();
            FunctionSpec::junta(Alphabet::numeric(m), n, cs).unwrap()
        };
        for f in [random_anchored(&mut rng, m, n), random_mod_linear(&mut rng, m, n), junta] {
            let all = influences(&f, &pi).unwrap();
            for (i, inf) in all.into_iter().enumerate() {
                prop_assert_eq!(exact(inf), brute_influence(&f, &p, i), "{:?}", f.to_json());
            }
        }
    }

    #[test]
    fn restriction_matches_substitution(seed in any::<u64>(), m in 2usize..=3, n in 1usize..=4) {
        let mut rng = gen::rng(seed);
        let fs = [
            random_anchored(&mut rng, m, n),
            random_mod_linear(&mut rng, m, n),
            random_table(&mut rng, m, n),
            FunctionSpec::junta(Alphabet::numeric(m), n, vec![(rng.random_range(0..n), rng.random_range(0..m))]).unwrap(),
        ];
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            if rng.random_bool(0.5) {
                pairs.push((i, rng.random_range(0..m)));
            }
        }
        let r = Restriction::from_pairs(n, &pairs).unwrap();
        for f in fs {
            let g = restrict(&f, &r).unwrap();
            let mut x = vec![0; n];
            loop {
                let mut y = x.clone();
                for &(i, a) in &pairs {
                    y[i] = a;
                }
                prop_assert_eq!(g.evaluate(&x).unwrap(), f.evaluate(&y).unwrap());
                if !radix::increment(&mut x, m) {
                    break;
                }
            }
        }
    }

    #[test]
    fn upper_resilience_implies_resilience((f, pi) in arb_table(), eps_tenths in 1i64..=5, k in 0usize..=2) {
        let k = k.min(f.n());
        let eps = rat(eps_tenths, 10);
        let up = is_upper_resilient(&f, &pi, &Number::Exact(eps.clone()), k, DEFAULT_BUDGET).unwrap();
        if up.resilient {
            let alpha = exact(pi.min_positive());
            let widened = eps / crate::Scalar::pow(&alpha, k);
            prop_assert!(is_resilient(&f, &pi, &Number::Exact(widened), k, DEFAULT_BUDGET).unwrap().resilient);
        }
    }

    #[test]
    fn local_variance_certificate_implies_resilience((f, pi) in arb_table(), eps_tenths in 1i64..=9, k in 0usize..=2) {
        let k = k.min(f.n());
        let eps = Number::Exact(rat(eps_tenths, 10));
        if resilience_from_local_variance(&f, &pi, &eps, k).unwrap().passes {
            prop_assert!(is_resilient(&f, &pi, &eps, k, DEFAULT_BUDGET).unwrap().resilient);
        }
    }
}
