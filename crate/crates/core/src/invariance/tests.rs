use proptest::prelude::*;
use rand::RngExt;

use super::*;
use crate::dist_core::{catalog, Alphabet, MarginalDistribution, StepDistribution};
use crate::error::Error;
use crate::fourier::{build_basis, Engine, FunctionSpec, OrthonormalBasis, DEFAULT_BUDGET};
use crate::gen::{self, random_poly, random_table};
use crate::hitting::multi_set_expectation;
use crate::number::{rat, Weights};
use crate::radix;

fn uniform_basis(m: usize) -> OrthonormalBasis {
    build_basis(&MarginalDistribution::uniform(Alphabet::numeric(m)))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// E_π[g(P(x))] over Ω^n by nested loops on `evaluate_discrete`.
fn brute_moment(poly: &MultilinearPolynomial, basis: &OrthonormalBasis, g: impl Fn(f64) -> f64) -> f64 {
    let m = basis.alphabet_len();
    let mut x = vec![0; poly.n()];
    let mut acc = 0.0;
    loop {
        let w: f64 = x.iter().map(|&a| basis.probs()[a]).product();
        acc += w * g(poly.evaluate_discrete(basis, &x));
        if !radix::increment(&mut x, m) {
            return acc;
        }
    }
}

/// Two ±1 variables with E[XY] = r, as a distribution on {0, 1}².
fn correlated_bits(r: f64) -> StepDistribution {
    let same = (1.0 + r) / 4.0;
    let diff = (1.0 - r) / 4.0;
    StepDistribution::new(Alphabet::numeric(2), 2, Weights::Float(vec![same, diff, diff, same])).unwrap()
}

/// Cov[X⁽ʲ¹⁾_{k1}, X⁽ʲ²⁾_{k2}] summed over the whole table, zero cells included.
fn table_covariance(p: &StepDistribution, bases: &[OrthonormalBasis], j1: usize, k1: usize, j2: usize, k2: usize) -> f64 {
    let w = p.weights().to_f64_vec();
    (0..p.table_len())
        .map(|idx| {
            let t = p.tuple(idx);
            w[idx] * bases[j1].value(k1, t[j1]) * bases[j2].value(k2, t[j2])
        })
        .sum()
}

// ---------------------------------------------------------------------------------------------
// Polynomials

#[test]
fn dictator_and_constant_expansions() {
    let b = uniform_basis(2);
    let f = FunctionSpec::dictator(Alphabet::numeric(2), 1, 0, 1).unwrap();
    let poly = poly_from_function(&f, &b).unwrap();
    assert!(close(poly.coefficient(&[0]), 0.5, 1e-15));
    assert!(close(poly.coefficient(&[1]), -0.5, 1e-15));
    assert_eq!(poly.terms().count(), 2);

    let b3 = uniform_basis(3);
    let c = FunctionSpec::constant(Alphabet::numeric(3), 2, rat(2, 7)).unwrap();
    let poly = poly_from_function(&c, &b3).unwrap();
    assert_eq!(poly.terms().count(), 1);
    assert!(close(poly.coefficient(&[0, 0]), 2.0 / 7.0, 1e-15));
    assert_eq!(poly.degree(), 0);
}

#[test]
fn random_tables_are_reproduced_pointwise() {
    let mut rng = gen::rng(3);
    for m in [2, 3] {
        let pi = gen::random_distribution(&mut rng, m, 1, 1.0).marginal(0).unwrap();
        let b = build_basis(&pi);
        for _ in 0..10 {
            let f = random_table(&mut rng, m, 3);
            let poly = poly_from_function(&f, &b).unwrap();
            let vals = poly.discrete_values(&b).unwrap();
            let table = f.table_values().unwrap();
            for (v, t) in vals.iter().zip(table) {
                assert!(close(*v, crate::number::Scalar::to_f64(t), 1e-10));
            }
        }
    }
}

#[test]
fn invalid_terms_are_rejected() {
    assert!(MultilinearPolynomial::new(2, 1, [(vec![0, 2], 1.0)]).is_err());
    assert!(MultilinearPolynomial::new(2, 1, [(vec![0], 1.0)]).is_err());
    assert!(MultilinearPolynomial::new(1, 1, [(vec![1], f64::NAN)]).is_err());
    let merged = MultilinearPolynomial::new(1, 1, [(vec![1], 0.5), (vec![1], -0.5), (vec![0], 1.0)]).unwrap();
    assert_eq!(merged.terms().count(), 1);
    let b = uniform_basis(3);
    assert!(merged.discrete_values(&b).is_err());
}

#[test]
fn noise_and_truncation_examples() {
    let mut rng = gen::rng(5);
    let poly = random_poly(&mut rng, 3, 2, 3);
    assert_eq!(poly.t_rho(1.0), poly);
    let low = poly.truncate(DegreeFilter::AtMost(1));
    let high = poly.truncate(DegreeFilter::Above(1));
    let back = low.add(&high).unwrap();
    for (s, c) in poly.terms() {
        assert!(close(back.coefficient(s), c, 1e-15));
    }
    assert_eq!(poly.truncate(DegreeFilter::AtLeast(2)), high);
    assert!(close(poly.tail_mass(2), high.second_moment(), 1e-15));
}

#[test]
fn formal_statistics_match_the_discrete_ensemble() {
    let mut rng = gen::rng(9);
    for _ in 0..10 {
        let pi = gen::random_distribution(&mut rng, 3, 1, 1.0).marginal(0).unwrap();
        let b = build_basis(&pi);
        let p = b.size() - 1;
        let poly = random_poly(&mut rng, 3, p, 3);
        let mean = brute_moment(&poly, &b, |v| v);
        let second = brute_moment(&poly, &b, |v| v * v);
        assert!(close(mean, poly.mean(), 1e-10));
        assert!(close(second, poly.second_moment(), 1e-10));
        assert!(close(second - mean * mean, poly.variance(), 1e-10));
        // Inf_i = E[Var over x_i of P], computed from the table.
        let vals = poly.discrete_values(&b).unwrap();
        let m = b.alphabet_len();
        for i in 0..3 {
            let stride = radix::stride(m, i);
            let mut inf = 0.0;
            for idx in (0..vals.len()).filter(|idx| (idx / stride) % m == 0) {
                let w_rest: f64 = radix::decode(idx, m, 3)
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| c != i)
                    .map(|(_, &a)| b.probs()[a])
                    .product();
                let (mut e1, mut e2) = (0.0, 0.0);
                for a in 0..m {
                    let v = vals[idx + a * stride];
                    e1 += b.probs()[a] * v;
                    e2 += b.probs()[a] * v * v;
                }
                inf += w_rest * (e2 - e1 * e1);
            }
            assert!(close(inf, poly.influence(i), 1e-10));
        }
    }
}

#[test]
fn orthogonal_decomposition_is_exact() {
    let mut rng = gen::rng(12);
    let b = uniform_basis(3);
    let poly = random_poly(&mut rng, 3, 2, 3);
    let parts: Vec<MultilinearPolynomial> = poly.active_sets().iter().map(|s| poly.part(s)).collect();
    let tables: Vec<Vec<f64>> = parts.iter().map(|q| q.discrete_values(&b).unwrap()).collect();
    let w = 1.0 / tables[0].len() as f64;
    for a in 0..parts.len() {
        for c in 0..parts.len() {
            let inner: f64 = tables[a].iter().zip(&tables[c]).map(|(x, y)| w * x * y).sum();
            if a != c {
                assert!(inner.abs() < 1e-12, "parts {a} and {c} have inner product {inner}");
            } else {
                assert!(close(inner, parts[a].second_moment(), 1e-12));
            }
        }
    }
    let total: f64 = parts.iter().map(MultilinearPolynomial::second_moment).sum();
    assert!(close(total, poly.second_moment(), 1e-12));
    let var: f64 = parts.iter().map(MultilinearPolynomial::variance).sum();
    assert!(close(var, poly.variance(), 1e-12));
}

#[test]
fn ensembles_are_orthonormal() {
    let mut rng = gen::rng(1);
    for m in 2..=4 {
        let pi = gen::random_distribution(&mut rng, m, 1, 1.0).marginal(0).unwrap();
        let ens = EnsembleSequence::Discrete { basis: build_basis(&pi), n: 2 };
        assert!(ens.orthonormality_defect() < 1e-12);
    }
    assert_eq!(EnsembleSequence::Gaussian { n: 3, p: 2 }.orthonormality_defect(), 0.0);
}

// ---------------------------------------------------------------------------------------------
// Gaussian counterparts

#[test]
fn correlated_bits_become_correlated_normals() {
    for r in [-0.5, 0.0, 0.3, 0.8] {
        let cp = gaussian_counterpart(&correlated_bits(r)).unwrap();
        assert_eq!(cp.ensemble_size(0), 1);
        assert!(close(cp.covariance(0, 1, 0, 1), 1.0, 1e-12));
        assert!(close(cp.covariance(1, 1, 1, 1), 1.0, 1e-12));
        // With the basis sign convention φ_1(0) > 0 on both steps, E[φ_1(X)φ_1(Y)] = r.
        assert!(close(cp.covariance(0, 1, 1, 1), r, 1e-12));
    }
}

#[test]
fn one_eighth_three_eighths_gives_minus_one_half() {
    let p = StepDistribution::from_entries(
        Alphabet::numeric(2),
        2,
        vec![
            (vec![0, 0], rat(1, 8).into()),
            (vec![1, 1], rat(1, 8).into()),
            (vec![0, 1], rat(3, 8).into()),
            (vec![1, 0], rat(3, 8).into()),
        ],
    )
    .unwrap();
    let cp = gaussian_counterpart(&p).unwrap();
    assert!(close(cp.covariance(0, 1, 1, 1), -0.5, 1e-12));
}

#[test]
fn independent_steps_have_independent_counterparts() {
    let pi = MarginalDistribution::new(Alphabet::numeric(3), Weights::Exact(vec![rat(1, 2), rat(1, 3), rat(1, 6)])).unwrap();
    let cp = gaussian_counterpart(&catalog::independent(&pi, 2)).unwrap();
    for k1 in 1..=2 {
        for k2 in 1..=2 {
            assert!(cp.covariance(0, k1, 1, k2).abs() < 1e-12);
            let want = if k1 == k2 { 1.0 } else { 0.0 };
            assert!(close(cp.covariance(0, k1, 0, k2), want, 1e-12));
        }
    }
}

#[test]
fn cyclic_shift_counterpart() {
    let p = catalog::cyclic_shift();
    let cp = gaussian_counterpart(&p).unwrap();
    assert_eq!((cp.ensemble_size(0), cp.ensemble_size(1)), (2, 2));
    assert_eq!(cp.base_dim, 5);
    assert!(cp.covariance_error < 1e-10);
    for j1 in 0..2 {
        for j2 in 0..2 {
            for k1 in 1..=2 {
                for k2 in 1..=2 {
                    let d = table_covariance(&p, &cp.bases, j1, k1, j2, k2);
                    assert!(close(d, cp.covariance(j1, k1, j2, k2), 1e-10));
                }
            }
        }
    }
}

#[test]
fn random_counterparts_match_covariances() {
    let mut rng = gen::rng(77);
    for case in 0..50 {
        let m = rng.random_range(2..=4);
        let steps = rng.random_range(2..=3);
        let p = gen::random_distribution(&mut rng, m, steps, 0.7);
        let cp = gaussian_counterpart(&p).unwrap();
        let mut worst = 0.0f64;
        for j1 in 0..steps {
            for j2 in 0..steps {
                for k1 in 1..=cp.ensemble_size(j1) {
                    for k2 in 1..=cp.ensemble_size(j2) {
                        let d = table_covariance(&p, &cp.bases, j1, k1, j2, k2);
                        worst = worst.max((d - cp.covariance(j1, k1, j2, k2)).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-10, "case {case}: covariance mismatch {worst}");
        assert!(cp.covariance_error < 1e-10);
    }
}

// ---------------------------------------------------------------------------------------------
// Hypercontractivity

#[test]
fn constant_polynomial_is_an_equality() {
    let b = uniform_basis(2);
    let poly = MultilinearPolynomial::constant(2, 1, -0.7);
    let ens = EnsembleSequence::Discrete { basis: b, n: 2 };
    let r = hypercontractivity_check(&poly, &ens, 0.5, 0, 0, DEFAULT_BUDGET).unwrap();
    assert!(close(r.noisy_third.mean.cbrt(), r.second_moment.sqrt(), 1e-12));
    assert!(close(r.third.mean.cbrt(), 0.7, 1e-12));
    assert!(r.noise_holds && r.degree_holds);
}

fn hyper_against_brute(m: usize, n: usize, degree: usize, seed: u64) {
    let b = uniform_basis(m);
    let alpha = 1.0 / m as f64;
    let mut rng = gen::rng(seed);
    for _ in 0..20 {
        let poly = random_poly(&mut rng, n, m - 1, degree);
        let ens = EnsembleSequence::Discrete { basis: b.clone(), n };
        let r = hypercontractivity_check(&poly, &ens, alpha, 0, 0, DEFAULT_BUDGET).unwrap();
        let rho = alpha.powf(1.0 / 6.0) / 2.0;
        let second = brute_moment(&poly, &b, |v| v * v);
        let noisy = brute_moment(&poly.t_rho(rho), &b, |v| v.abs().powi(3));
        let plain = brute_moment(&poly, &b, |v| v.abs().powi(3));
        assert!(close(r.rho, rho, 1e-15));
        assert!(close(r.second_moment, second, 1e-12));
        assert!(close(r.noisy_third.mean, noisy, 1e-12));
        assert!(close(r.third.mean, plain, 1e-12));
        assert!(noisy.cbrt() <= second.sqrt() + 1e-12);
        let d = poly.degree() as i32;
        assert!(plain.cbrt() <= (2.0 / alpha.powf(1.0 / 6.0)).powi(d) * second.sqrt() + 1e-12);
        assert!(r.noise_holds && r.degree_holds);
        assert_eq!(r.method, "exact");
    }
}

#[test]
fn degree_one_over_two_symbols() {
    hyper_against_brute(2, 2, 1, 21);
}

#[test]
fn degree_two_over_three_symbols() {
    hyper_against_brute(3, 3, 2, 22);
}

#[test]
fn gaussian_third_moment_of_a_linear_form() {
    // P = 0.6·G₁ − 0.8·G₂ is standard normal, so E|P|³ = 2·√(2/π).
    let poly = MultilinearPolynomial::new(2, 1, [(vec![1, 0], 0.6), (vec![0, 1], -0.8)]).unwrap();
    let ens = EnsembleSequence::Gaussian { n: 2, p: 1 };
    let r = hypercontractivity_check(&poly, &ens, 0.5, 400_000, 4, DEFAULT_BUDGET).unwrap();
    let want = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((r.third.mean - want).abs() < 4.0 * r.third.stderr);
    let rho = 0.5f64.powf(1.0 / 6.0) / 2.0;
    assert!((r.noisy_third.mean - want * rho.powi(3)).abs() < 4.0 * r.noisy_third.stderr);
    assert!(r.noise_holds && r.degree_holds);
    assert_eq!(r.method, "monte_carlo");
}

#[test]
fn hypercontractivity_errors() {
    let b = uniform_basis(2);
    let poly = MultilinearPolynomial::constant(20, 1, 1.0);
    let ens = EnsembleSequence::Discrete { basis: b.clone(), n: 20 };
    assert!(matches!(
        hypercontractivity_check(&poly, &ens, 0.5, 0, 0, 1000),
        Err(Error::Budget { needed: 1_048_576, budget: 1000 })
    ));
    let small = EnsembleSequence::Discrete { basis: b, n: 3 };
    assert!(hypercontractivity_check(&poly, &small, 0.5, 0, 0, DEFAULT_BUDGET).is_err());
    let fits = EnsembleSequence::Discrete { basis: uniform_basis(2), n: 20 };
    assert!(matches!(hypercontractivity_check(&poly, &fits, 0.0, 0, 0, DEFAULT_BUDGET), Err(Error::Range(_))));
}

// ---------------------------------------------------------------------------------------------
// Mollifier

#[test]
fn mollifier_is_monotone_and_close_to_phi() {
    let lambda = 0.05;
    let mut prev = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let x = -0.5 + 2.0 * i as f64 / 9_999.0;
        let v = mollifier_phi(lambda, x).unwrap();
        assert!(v >= prev - 1e-12, "not monotone at {x}");
        prev = v;
        worst = worst.max((v - phi(x)).abs());
        let in_collar = x.abs() < lambda || (x - 1.0).abs() < lambda;
        if !in_collar {
            assert_eq!(v, phi(x));
        }
    }
    assert!(worst <= lambda, "sup |φ_λ − φ| = {worst}");
    // The largest deviation sits at the kinks, where it equals λ·∫_0^1 u·ψ(u) du.
    let m1 = integrate(|u| u * psi(u), 0.0, 1.0, 1e-14).value;
    assert!(worst <= lambda * m1 + 1e-12);
}

// ---------------------------------------------------------------------------------------------
// Invariance gap

fn dictator_polys(p: &StepDistribution, n: usize) -> Vec<MultilinearPolynomial> {
    let f = FunctionSpec::dictator(p.alphabet().clone(), n, 0, 0).unwrap();
    (0..p.steps())
        .map(|j| poly_from_function(&f, &build_basis(&p.marginal(j).unwrap())).unwrap())
        .collect()
}

#[test]
fn constant_polynomials_have_no_gap() {
    let p = catalog::cyclic_shift();
    let polys = vec![MultilinearPolynomial::constant(2, 2, 0.4), MultilinearPolynomial::constant(2, 2, 0.02)];
    let r = invariance_gap(&polys, &p, 0.1, 10_000, 1, DEFAULT_INVARIANCE_C, DEFAULT_BUDGET).unwrap();
    assert!(r.gap < 1e-12);
    assert!(r.raw_gap < 1e-12);
    assert_eq!(r.tau, 0.0);
    assert!(r.holds && r.hypotheses_hold);
}

/// E[g(μ + σZ₁, μ + σ(rZ₁ + √(1−r²)Z₂))] by nested quadrature, with breakpoints where either
/// argument crosses 0 or 1.
fn bivariate_normal_expectation(mu: f64, sigma: f64, r: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let s = (1.0 - r * r).sqrt();
    let cut = |lo: f64, hi: f64, extra: &[f64]| {
        let mut pts = vec![lo, hi];
        pts.extend(extra.iter().copied().filter(|&z| z > lo && z < hi));
        pts.sort_by(f64::total_cmp);
        pts
    };
    let outer_pts = cut(-9.0, 9.0, &[(0.0 - mu) / sigma, (1.0 - mu) / sigma]);
    integrate_pieces(
        |z1| {
            let y1 = mu + sigma * z1;
            let inner_pts = cut(-9.0, 9.0, &[(-mu / sigma - r * z1) / s, ((1.0 - mu) / sigma - r * z1) / s]);
            let inner = integrate_pieces(|z2| density(z2) * g(y1, mu + sigma * (r * z1 + s * z2)), &inner_pts, 1e-12);
            density(z1) * inner.value
        },
        &outer_pts,
        1e-11,
    )
    .value
}

#[test]
fn dictator_on_the_cyclic_shift() {
    let p = catalog::cyclic_shift();
    let polys = dictator_polys(&p, 1);
    let lambda = 0.1;
    let r = invariance_gap(&polys, &p, lambda, 1_000_000, 2024, DEFAULT_INVARIANCE_C, DEFAULT_BUDGET).unwrap();
    // Discrete side: the tuples (a, a) and (a, a+1) put f = 1[x = 0] at (1,1) once, at (1,0) or
    // (0,1) twice and at (0,0) three times, each with mass 1/6.
    let (f0, f1) = (mollifier_phi(lambda, 0.0).unwrap(), mollifier_phi(lambda, 1.0).unwrap());
    let disc = (f1 * f1 + 2.0 * f0 * f1 + 3.0 * f0 * f0) / 6.0;
    assert!(close(r.discrete_smoothed, disc, 1e-12));
    assert!(close(r.discrete_raw, 1.0 / 6.0, 1e-12));
    // Gaussian side: both steps are N(1/3, 2/9) with covariance 1/6 − 1/9, so correlation 1/4.
    let raw = bivariate_normal_expectation(1.0 / 3.0, (2.0f64 / 9.0).sqrt(), 0.25, |a, b| phi(a) * phi(b));
    assert!((r.gaussian_raw.mean - raw).abs() < 4.0 * r.gaussian_raw.stderr, "{} vs {raw}", r.gaussian_raw.mean);
    assert!(close(r.tau, 4.0 / 9.0, 1e-12));
    assert_eq!(r.degree, 1);
    assert!(close(r.alpha, 1.0 / 3.0, 1e-12));
    assert!(r.hypotheses_hold);
    assert!(r.covariance_error < 1e-10);
    assert!(r.holds, "gap {} vs bound {}", r.gap, r.bound);
}

/// 1/2 + (c/√n)·Σ_i x_{i,1} on ±1 bits: the same variance for every n, spread evenly so τ ∝ 1/n.
fn spread_linear(n: usize, c: f64) -> MultilinearPolynomial {
    let terms = (0..n).map(|i| {
        let mut s = vec![0; n];
        s[i] = 1;
        (s, c / (n as f64).sqrt())
    });
    MultilinearPolynomial::new(n, 1, terms.chain([(vec![0; n], 0.5)])).unwrap()
}

#[test]
fn gap_shrinks_as_influences_spread() {
    // On the Gaussian side both polynomials are N(1/2, 1) with correlation 1/2 for every n, so
    // one quadrature value serves as the exact Gaussian expectation throughout.
    let p = correlated_bits(0.5);
    let lambda = 0.1;
    let smooth = |a: f64, b: f64| mollifier_phi(lambda, a).unwrap() * mollifier_phi(lambda, b).unwrap();
    let gaussian = bivariate_normal_expectation(0.5, 1.0, 0.5, smooth);
    let mut gaps = Vec::new();
    for n in [1, 2, 4, 8] {
        let polys = vec![spread_linear(n, 1.0), spread_linear(n, 1.0)];
        let r = invariance_gap(&polys, &p, lambda, 200_000, 99 + n as u64, DEFAULT_INVARIANCE_C, DEFAULT_BUDGET).unwrap();
        assert!(close(r.tau, 2.0 / n as f64, 1e-12));
        assert!(r.hypotheses_hold);
        assert!(r.holds);
        let z = (r.gaussian_smoothed.mean - gaussian) / r.gaussian_smoothed.stderr;
        assert!(z.abs() < 4.0, "n = {n}: Monte Carlo is {z} standard errors from quadrature");
        gaps.push((r.discrete_smoothed - gaussian).abs());
    }
    for w in gaps.windows(2) {
        assert!(w[1] < w[0], "gaps {gaps:?}");
    }
}

#[test]
fn gap_is_reproducible_across_thread_counts() {
    let p = catalog::cyclic_shift();
    let polys = dictator_polys(&p, 2);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| invariance_gap(&polys, &p, 0.2, 50_000, 8, DEFAULT_INVARIANCE_C, DEFAULT_BUDGET).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.gaussian_smoothed.mean.to_bits(), b.gaussian_smoothed.mean.to_bits());
    assert_eq!(a.discrete_smoothed.to_bits(), b.discrete_smoothed.to_bits());
    assert_eq!(a.gaussian_raw.stderr.to_bits(), b.gaussian_raw.stderr.to_bits());
}

#[test]
fn invariance_gap_errors() {
    let p = catalog::cyclic_shift();
    let polys = dictator_polys(&p, 1);
    assert!(matches!(invariance_gap(&polys, &p, 0.5, 10, 0, 10.0, DEFAULT_BUDGET), Err(Error::Range(_))));
    assert!(invariance_gap(&polys[..1], &p, 0.1, 10, 0, 10.0, DEFAULT_BUDGET).is_err());
    let mixed = vec![polys[0].clone(), MultilinearPolynomial::constant(2, 2, 0.5)];
    assert!(invariance_gap(&mixed, &p, 0.1, 10, 0, 10.0, DEFAULT_BUDGET).is_err());
    let wide = vec![MultilinearPolynomial::constant(12, 2, 0.5); 2];
    assert!(matches!(invariance_gap(&wide, &p, 0.1, 10, 0, 10.0, 1000), Err(Error::Budget { .. })));
}

// ---------------------------------------------------------------------------------------------
// Smoothing

fn indicator_polys(p: &StepDistribution, fns: &[FunctionSpec]) -> Vec<MultilinearPolynomial> {
    fns.iter()
        .enumerate()
        .map(|(j, f)| poly_from_function(f, &build_basis(&p.marginal(j).unwrap())).unwrap())
        .collect()
}

#[test]
fn smoothing_examples() {
    let p = catalog::cyclic_shift();
    let fns = vec![
        FunctionSpec::dictator(Alphabet::numeric(3), 3, 0, 0).unwrap(),
        FunctionSpec::junta(Alphabet::numeric(3), 3, vec![(1, 1), (2, 0)]).unwrap(),
    ];
    let polys = indicator_polys(&p, &fns);
    let exact = multi_set_expectation(&p, &fns, Engine::Enumerate, DEFAULT_BUDGET).unwrap().to_f64();

    let zero = smoothing_gap(&polys, &p, 0.0, 0.2, DEFAULT_BUDGET).unwrap();
    assert!(zero.gap < 1e-15);
    assert!(close(zero.product, exact, 1e-12));

    let r = smoothing_gap(&polys, &p, 0.01, 0.2, DEFAULT_BUDGET).unwrap();
    assert!(close(r.rho, 0.5, 1e-9));
    // (1 − 1/2)·0.2 / (2·ln 10)
    assert!(close(r.gamma_max, 0.05 / 10f64.ln(), 1e-9));
    assert!(r.in_range && r.holds);
    assert!(r.gap <= 0.2);

    let consts = vec![MultilinearPolynomial::constant(3, 2, 0.3); 2];
    let c = smoothing_gap(&consts, &p, 0.4, 0.1, DEFAULT_BUDGET).unwrap();
    assert!(c.gap < 1e-15);
    assert!(!c.in_range);
}

#[test]
fn smoothing_rejects_values_outside_the_unit_interval() {
    let p = catalog::cyclic_shift();
    let polys = vec![MultilinearPolynomial::constant(1, 2, 1.5), MultilinearPolynomial::constant(1, 2, 0.5)];
    assert!(matches!(smoothing_gap(&polys, &p, 0.01, 0.2, DEFAULT_BUDGET), Err(Error::Range(_))));
    let ok = vec![MultilinearPolynomial::constant(1, 2, 0.5); 2];
    assert!(matches!(smoothing_gap(&ok, &p, 1.5, 0.2, DEFAULT_BUDGET), Err(Error::Range(_))));
    assert!(matches!(smoothing_gap(&ok, &p, 0.1, 0.0, DEFAULT_BUDGET), Err(Error::Range(_))));
}

// ---------------------------------------------------------------------------------------------
// Gaussian reverse hypercontractivity

#[test]
fn orthant_quadrature_matches_the_arcsine_formula() {
    for r in [-0.9, -0.5, 0.0, 0.3, 0.5, 0.95] {
        let want = 0.25 + f64::asin(r) / (2.0 * std::f64::consts::PI);
        assert!(close(orthant_probability(r).unwrap(), want, 1e-12), "r = {r}");
    }
    assert!(orthant_probability(1.0).is_err());
}

#[test]
fn half_lines_at_one_half() {
    let funcs = [ThresholdForm::half_line(1.0), ThresholdForm::half_line(1.0)];
    let r = gaussian_rhc_check(&correlated_pair(0.5), 2, &funcs, 0.5, 1_000_000, 42).unwrap();
    let oracle = orthant_probability(0.5).unwrap();
    assert!(close(oracle, 1.0 / 3.0, 1e-12));
    assert!((r.product.mean - oracle).abs() <= 3.0 * r.product.stderr, "{} ± {}", r.product.mean, r.product.stderr);
    assert!(close(r.exponent, 8.0 / 3.0, 1e-12));
    assert!((r.bound - 0.25f64.powf(8.0 / 3.0)).abs() < 2e-3);
    assert!(r.product.mean > 10.0 * r.bound);
    assert!(r.holds && r.condition_holds && r.standard_blocks);
    assert!(close(r.min_eigenvalue, 0.5, 1e-12));
    assert!(close(r.p, 0.375, 1e-15));
}

#[test]
fn antipodal_half_lines_at_point_nine() {
    let funcs = [ThresholdForm::half_line(1.0), ThresholdForm::half_line(-1.0)];
    let r = gaussian_rhc_check(&correlated_pair(0.9), 2, &funcs, 0.9, 1_000_000, 43).unwrap();
    let oracle = 0.25 - f64::asin(0.9) / (2.0 * std::f64::consts::PI);
    assert!((r.product.mean - oracle).abs() <= 4.0 * r.product.stderr);
    assert!(r.product.mean > r.bound + 3.0 * r.bound_stderr);
    assert!(r.holds);
}

#[test]
fn independent_steps_hold_trivially() {
    let cov = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let funcs = [
        ThresholdForm { weights: vec![1.0], threshold: 0.5 },
        ThresholdForm { weights: vec![-1.0], threshold: 0.0 },
        ThresholdForm { weights: vec![1.0], threshold: -1.0 },
    ];
    let r = gaussian_rhc_check(&cov, 3, &funcs, 0.0, 200_000, 5).unwrap();
    let prod_mu: f64 = r.mus.iter().map(|m| m.mean).product();
    assert!((r.product.mean - prod_mu).abs() < 4.0 * r.product.stderr + 1e-3);
    assert!(r.bound <= prod_mu);
    assert!(r.holds && r.condition_holds);
}

#[test]
fn rhc_errors() {
    let funcs = [ThresholdForm::half_line(1.0), ThresholdForm::half_line(1.0)];
    assert!(gaussian_rhc_check(&[1.0, 2.0, 2.0, 1.0], 2, &funcs, 0.5, 10, 0).is_err());
    assert!(gaussian_rhc_check(&[1.0, 0.0, 0.0], 2, &funcs, 0.5, 10, 0).is_err());
    assert!(gaussian_rhc_check(&correlated_pair(0.5), 2, &funcs[..1], 0.5, 10, 0).is_err());
    assert!(gaussian_rhc_check(&correlated_pair(0.5), 2, &funcs, 1.0, 10, 0).is_err());
}

// ---------------------------------------------------------------------------------------------
// γ-decay

#[test]
fn decay_examples() {
    let c = gamma_decay_check(&MultilinearPolynomial::constant(3, 2, 0.9), 0.9).unwrap();
    assert!(c.decaying);

    let mut rng = gen::rng(31);
    let poly = random_poly(&mut rng, 3, 2, 3);
    let scale = poly.second_moment().sqrt();
    let unit = MultilinearPolynomial::new(3, 2, poly.terms().map(|(s, v)| (s.to_vec(), v / scale))).unwrap();
    for gamma in [0.1, 0.3, 0.7] {
        let smoothed = unit.t_rho(1.0 - gamma);
        let r = gamma_decay_check(&smoothed, gamma).unwrap();
        assert!(r.decaying);
        for pt in &r.profile {
            assert!(pt.tail <= (1.0 - gamma).powi(2 * pt.d as i32) + 1e-12);
        }
    }

    let r = gamma_decay_check(&poly, 0.3).unwrap();
    assert_eq!(r.profile.len(), poly.degree() + 2);
    for pt in &r.profile {
        let direct: f64 = poly.terms().filter(|(s, _)| s.iter().filter(|&&k| k != 0).count() >= pt.d).map(|(_, v)| v * v).sum();
        assert!(close(pt.tail, direct, 1e-15));
        assert!(close(pt.envelope, 0.7f64.powi(pt.d as i32), 1e-15));
    }
    if !r.decaying {
        let first_bad = r.profile.iter().position(|pt| !pt.ok).unwrap();
        assert_eq!(r.holds_up_to, first_bad.checked_sub(1));
    }
    assert!(gamma_decay_check(&poly, -0.1).is_err());
}

// ---------------------------------------------------------------------------------------------
// Properties

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noise_composes(seed in any::<u64>(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let mut rng = gen::rng(seed);
        let poly = random_poly(&mut rng, 3, 2, 3);
        let twice = poly.t_rho(a).t_rho(b);
        let once = poly.t_rho(a * b);
        for (s, c) in once.terms() {
            prop_assert!(close(twice.coefficient(s), c, 1e-14));
        }
        prop_assert_eq!(twice.terms().count(), once.terms().count());
    }

    #[test]
    fn truncations_partition(seed in any::<u64>(), d in 0usize..=3) {
        let mut rng = gen::rng(seed);
        let poly = random_poly(&mut rng, 3, 2, 3);
        let low = poly.truncate(DegreeFilter::AtMost(d));
        let high = poly.truncate(DegreeFilter::Above(d));
        prop_assert!(close(low.second_moment() + high.second_moment(), poly.second_moment(), 1e-12));
        prop_assert_eq!(low.add(&high).unwrap().terms().count(), poly.terms().count());
    }

    #[test]
    fn parts_are_orthogonal(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let pi = gen::random_distribution(&mut rng, 3, 1, 1.0).marginal(0).unwrap();
        let b = build_basis(&pi);
        let poly = random_poly(&mut rng, 2, b.size() - 1, 2);
        let sets = poly.active_sets();
        for (i, s) in sets.iter().enumerate() {
            for t in &sets[i + 1..] {
                let (ps, pt) = (poly.part(s), poly.part(t));
                let inner = brute_moment(&ps.add(&pt).unwrap(), &b, |v| v * v) - ps.second_moment() - pt.second_moment();
                prop_assert!(inner.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hypercontractivity_holds_on_random_polys(seed in any::<u64>(), m in 2usize..=3, n in 1usize..=3) {
        let mut rng = gen::rng(seed);
        let pi = gen::random_distribution(&mut rng, m, 1, 1.0).marginal(0).unwrap();
        let b = build_basis(&pi);
        let alpha = b.support().iter().map(|&a| b.probs()[a]).fold(1.0, f64::min);
        let poly = random_poly(&mut rng, n, b.size() - 1, 2);
        let ens = EnsembleSequence::Discrete { basis: b, n };
        let r = hypercontractivity_check(&poly, &ens, alpha, 0, 0, DEFAULT_BUDGET).unwrap();
        prop_assert!(r.noise_holds && r.degree_holds);
    }

    #[test]
    fn mollifier_stays_within_lambda(lambda in 0.001f64..0.499, x in -1.0f64..2.0) {
        let v = mollifier_phi(lambda, x).unwrap();
        prop_assert!((v - phi(x)).abs() <= lambda);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn smoothing_within_range_stays_below_eps(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = gen::rng(seed);
        let p = gen::random_equal_marginal(&mut rng, 3);
        let fns: Vec<FunctionSpec> = (0..2).map(|_| gen::random_junta(&mut rng, 3, n)).collect();
        let polys = indicator_polys(&p, &fns);
        let eps = 0.1;
        let probe = smoothing_gap(&polys, &p, 0.0, eps, DEFAULT_BUDGET).unwrap();
        let r = smoothing_gap(&polys, &p, probe.gamma_max.min(1.0), eps, DEFAULT_BUDGET).unwrap();
        prop_assert!(r.in_range);
        prop_assert!(r.holds, "gap {} at γ = {}", r.gap, r.gamma);
    }
}
