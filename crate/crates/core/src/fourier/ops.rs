//! Operators that map a function to a new dense table.

use num::traits::Zero;

use super::engine::{map_fibers, mean_of, table_as};
use super::function::FunctionSpec;
use crate::dist_core::{Alphabet, MarginalDistribution};
use crate::error::{Error, Result};
use crate::number::{Number, Rational, Scalar, Weights};
use crate::{radix, with_weights};

/// Sums out every coordinate not in `keep` (sorted ascending); the result is indexed by
/// the kept coordinates in ascending order, lowest least significant.
pub fn marginal_table<T: Scalar>(vals: &[T], probs: &[T], n: usize, keep: &[usize]) -> Vec<T> {
    let m = probs.len();
    let mut cur = vals.to_vec();
    for axis in (0..n).rev() {
        if keep.binary_search(&axis).is_ok() {
            continue;
        }
        let stride = radix::stride(m, axis);
        let outer = cur.len() / (stride * m);
        let mut next = Vec::with_capacity(stride * outer);
        for hi in 0..outer {
            for lo in 0..stride {
                let base = lo + stride * m * hi;
                next.push((0..m).fold(T::zero(), |acc, a| acc + probs[a].clone() * cur[base + a * stride].clone()));
            }
        }
        cur = next;
    }
    cur
}

/// f^{⊆S} evaluated on the full domain: E[f(x_S, X_{S̄})].
pub fn projection_values<T: Scalar>(vals: &[T], probs: &[T], n: usize, keep: &[usize]) -> Vec<T> {
    let m = probs.len();
    let mut cur = vals.to_vec();
    for axis in 0..n {
        if keep.binary_search(&axis).is_err() {
            cur = map_fibers(&cur, m, axis, |fib| vec![mean_of(fib, probs); m]);
        }
    }
    cur
}

/// T_ρ by per-coordinate averaging: each fiber v becomes ρ·v + (1−ρ)·E_π[v].
pub fn noise_values<T: Scalar>(vals: &[T], probs: &[T], n: usize, rho: &T) -> Vec<T> {
    let m = probs.len();
    let mut cur = vals.to_vec();
    for axis in 0..n {
        cur = map_fibers(&cur, m, axis, |fib| {
            let mean = mean_of(fib, probs);
            fib.iter()
                .map(|v| rho.clone() * v.clone() + (T::one() - rho.clone()) * mean.clone())
                .collect()
        });
    }
    cur
}

fn to_unit_rational<T: Scalar>(x: &T) -> Rational {
    if T::EXACT {
        return x.to_rational();
    }
    Rational::from_float(x.to_f64().clamp(0.0, 1.0)).unwrap_or_else(Rational::zero)
}

pub(crate) fn table_spec<T: Scalar>(f: &FunctionSpec, vals: &[T]) -> Result<FunctionSpec> {
    table_from(f.alphabet(), f.n(), vals)
}

/// A table function from scalar values; floats are clamped into [0, 1].
pub(crate) fn table_from<T: Scalar>(alphabet: &Alphabet, n: usize, vals: &[T]) -> Result<FunctionSpec> {
    FunctionSpec::table(alphabet.clone(), n, vals.iter().map(to_unit_rational).collect())
}

fn check_alphabet(f: &FunctionSpec, pi: &MarginalDistribution) -> Result<()> {
    if f.alphabet() != pi.alphabet() {
        return Err(Error::Invalid("function and distribution use different alphabets".into()));
    }
    Ok(())
}

fn sorted_set(n: usize, set: &[usize]) -> Result<Vec<usize>> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.last().is_some_and(|&i| i >= n) {
        return Err(Error::Range(format!("coordinate set {set:?} leaves 0..{n}")));
    }
    Ok(s)
}

/// f^{⊆S} as a table.
pub fn projection_subset(f: &FunctionSpec, set: &[usize], pi: &MarginalDistribution) -> Result<FunctionSpec> {
    check_alphabet(f, pi)?;
    let keep = sorted_set(f.n(), set)?;
    let table = f.to_table()?;
    with_weights!(pi.probs(), p => {
        let vals = projection_values(&table_as(&table), p, f.n(), &keep);
        table_spec(f, &vals)
    })
}

/// T_ρ f as a table. Exact when both π and ρ are rational.
pub fn noise_operator(f: &FunctionSpec, rho: &Number, pi: &MarginalDistribution) -> Result<FunctionSpec> {
    check_alphabet(f, pi)?;
    let r = rho.to_f64();
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Range(format!("ρ = {rho} is outside [0, 1]")));
    }
    let table = f.to_table()?;
    match (pi.probs(), rho) {
        (Weights::Exact(p), Number::Exact(r)) => table_spec(f, &noise_values(&table, p, f.n(), r)),
        _ => {
            let p = pi.probs().to_f64_vec();
            table_spec(f, &noise_values(&table_as::<f64>(&table), &p, f.n(), &r))
        }
    }
}

/// (M[i,y,z] f)(x) = max(f(x with x_i := y), f(x with x_i := z)).
pub fn max_operator(f: &FunctionSpec, i: usize, y: usize, z: usize) -> Result<FunctionSpec> {
    let Some(vals) = f.table_values() else {
        return Err(Error::Precondition("the max operator needs a table function".into()));
    };
    let m = f.alphabet().len();
    if i >= f.n() || y >= m || z >= m {
        return Err(Error::Range("max operator arguments outside the domain".into()));
    }
    let stride = radix::stride(m, i);
    let out = (0..vals.len())
        .map(|idx| {
            let base = idx - ((idx / stride) % m) * stride;
            let (a, b) = (&vals[base + y * stride], &vals[base + z * stride]);
            if a >= b { a.clone() } else { b.clone() }
        })
        .collect();
    FunctionSpec::table(f.alphabet().clone(), f.n(), out)
}
