//! Orthonormal product bases and Fourier expansions.

use serde::Serialize;

use super::engine::table_as;
use super::function::FunctionSpec;
use super::ops::table_from;
use crate::dist_core::{Alphabet, MarginalDistribution};
use crate::error::{Error, Result};
use crate::radix;

/// φ_0 ≡ 1, φ_1, …, φ_{k−1} orthonormal under π, each stored over the full alphabet
/// (zero outside the support).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthonormalBasis {
    #[serde(skip)]
    alphabet: Alphabet,
    probs: Vec<f64>,
    support: Vec<usize>,
    functions: Vec<Vec<f64>>,
}

/// Gram–Schmidt over symbol indicators in canonical order, seeded with the constant 1.
/// Each φ_k is scaled so its first nonzero entry is positive.
pub fn build_basis(pi: &MarginalDistribution) -> OrthonormalBasis {
    let probs = pi.probs().to_f64_vec();
    let support = pi.support();
    let m = probs.len();
    let dot = |u: &[f64], v: &[f64]| -> f64 { (0..m).map(|a| probs[a] * u[a] * v[a]).sum() };
    let on_support = |a: usize| if support.contains(&a) { 1.0 } else { 0.0 };
    let mut functions: Vec<Vec<f64>> = vec![(0..m).map(on_support).collect()];
    for &s in &support {
        if functions.len() == support.len() {
            break;
        }
        let mut v: Vec<f64> = (0..m).map(|a| if a == s { 1.0 } else { 0.0 }).collect();
        for _ in 0..2 {
            for u in &functions {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-9 {
            continue;
        }
        let lead = v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        functions.push(v.iter().map(|x| sign * x / norm).collect());
    }
    OrthonormalBasis {
        alphabet: pi.alphabet().clone(),
        probs,
        support,
        functions,
    }
}

impl OrthonormalBasis {
    /// Number of basis functions, |supp(π)|.
    pub fn size(&self) -> usize {
        self.functions.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn alphabet_len(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn function(&self, k: usize) -> &[f64] {
        &self.functions[k]
    }

    /// φ_k(a).
    pub fn value(&self, k: usize, a: usize) -> f64 {
        self.functions[k][a]
    }

    /// Gram matrix E_π[φ_j φ_k], row-major.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.size();
        let m = self.probs.len();
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                g[i * k + j] = (0..m).map(|a| self.probs[a] * self.functions[i][a] * self.functions[j][a]).sum();
            }
        }
        g
    }

    /// `rows × cols` matrix with entries A[s][a] = π(a)·φ_s(a).
    fn analysis_matrix(&self) -> Vec<f64> {
        self.functions
            .iter()
            .flat_map(|phi| phi.iter().zip(&self.probs).map(|(x, p)| x * p))
            .collect()
    }

    /// B[a][s] = φ_s(a).
    fn synthesis_matrix(&self) -> Vec<f64> {
        let m = self.probs.len();
        let k = self.size();
        (0..m * k).map(|e| self.functions[e % k][e / k]).collect()
    }
}

/// Applies `mat` (rows × dims[axis]) along one axis of a mixed-radix tensor.
pub(crate) fn mode_product(data: &[f64], dims: &[usize], axis: usize, mat: &[f64], rows: usize) -> (Vec<f64>, Vec<usize>) {
    let cols = dims[axis];
    let stride: usize = dims[..axis].iter().product();
    let outer: usize = dims[axis + 1..].iter().product();
    let mut out = vec![0.0; stride * rows * outer];
    for hi in 0..outer {
        for r in 0..rows {
            let row = &mat[r * cols..(r + 1) * cols];
            for lo in 0..stride {
                let mut acc = 0.0;
                for (c, w) in row.iter().enumerate() {
                    acc += w * data[lo + stride * (c + cols * hi)];
                }
                out[lo + stride * (r + rows * hi)] = acc;
            }
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[axis] = rows;
    (out, new_dims)
}

/// f = Σ_σ f̂(σ)·∏_i φ_{σ_i}(x_i) with σ stored densely in mixed radix over the basis size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierExpansion {
    pub basis: OrthonormalBasis,
    pub n: usize,
    pub coeffs: Vec<f64>,
}

/// f̂(σ) = E[f·φ_σ].
pub fn analyze(f: &FunctionSpec, basis: &OrthonormalBasis) -> Result<FourierExpansion> {
    if f.alphabet() != basis.alphabet() {
        return Err(Error::Invalid("basis and function use different alphabets".into()));
    }
    let table: Vec<f64> = table_as(&f.to_table()?);
    Ok(analyze_values(&table, f.n(), basis))
}

pub(crate) fn analyze_values(table: &[f64], n: usize, basis: &OrthonormalBasis) -> FourierExpansion {
    let mat = basis.analysis_matrix();
    let mut data = table.to_vec();
    let mut dims = vec![basis.alphabet_len(); n];
    for axis in 0..n {
        (data, dims) = mode_product(&data, &dims, axis, &mat, basis.size());
    }
    FourierExpansion {
        basis: basis.clone(),
        n,
        coeffs: data,
    }
}

impl FourierExpansion {
    pub fn size(&self) -> usize {
        self.basis.size()
    }

    pub fn sigma(&self, idx: usize) -> Vec<usize> {
        radix::decode(idx, self.size(), self.n)
    }

    pub fn coefficient(&self, sigma: &[usize]) -> f64 {
        self.coeffs[radix::encode(sigma, self.size())]
    }

    /// |σ|, the number of nonzero entries.
    pub fn degree_of(&self, idx: usize) -> usize {
        let k = self.size();
        let mut idx = idx;
        let mut d = 0;
        for _ in 0..self.n {
            d += usize::from(idx % k != 0);
            idx /= k;
        }
        d
    }

    /// Largest |σ| with a coefficient above `tol` in absolute value.
    pub fn degree(&self, tol: f64) -> usize {
        (0..self.coeffs.len())
            .filter(|&i| self.coeffs[i].abs() > tol)
            .map(|i| self.degree_of(i))
            .max()
            .unwrap_or(0)
    }

    fn touches(&self, idx: usize, i: usize) -> bool {
        (idx / self.size().pow(i as u32)) % self.size() != 0
    }

    pub fn mean(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Σ_σ f̂(σ)².
    pub fn squared_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn variance(&self) -> f64 {
        self.coeffs.iter().skip(1).map(|c| c * c).sum()
    }

    /// Σ_{σ_i ≠ 0} f̂(σ)².
    pub fn influence(&self, i: usize) -> f64 {
        (0..self.coeffs.len())
            .filter(|&idx| self.touches(idx, i))
            .map(|idx| self.coeffs[idx].powi(2))
            .sum()
    }

    pub fn total_influence(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|idx| self.degree_of(idx) as f64 * self.coeffs[idx].powi(2))
            .sum()
    }

    /// Σ over nonzero σ supported inside `set` of f̂(σ)².
    pub fn projected_variance(&self, set: &[usize]) -> f64 {
        (1..self.coeffs.len())
            .filter(|&idx| (0..self.n).all(|i| set.contains(&i) || !self.touches(idx, i)))
            .map(|idx| self.coeffs[idx].powi(2))
            .sum()
    }

    /// max |f̂(σ)| over 0 < |σ| ≤ k; zero when no such σ exists.
    pub fn low_degree_max(&self, k: usize) -> f64 {
        (1..self.coeffs.len())
            .filter(|&idx| self.degree_of(idx) <= k)
            .map(|idx| self.coeffs[idx].abs())
            .fold(0.0, f64::max)
    }

    /// Coefficients scaled by ρ^{|σ|}.
    pub fn noise(&self, rho: f64) -> FourierExpansion {
        let coeffs = (0..self.coeffs.len())
            .map(|idx| self.coeffs[idx] * rho.powi(self.degree_of(idx) as i32))
            .collect();
        FourierExpansion {
            basis: self.basis.clone(),
            n: self.n,
            coeffs,
        }
    }

    /// Values Σ_σ f̂(σ)φ_σ(x) on every point of Ω^n, without clamping.
    pub fn values(&self) -> Vec<f64> {
        let mat = self.basis.synthesis_matrix();
        let mut data = self.coeffs.clone();
        let mut dims = vec![self.size(); self.n];
        for axis in 0..self.n {
            (data, dims) = mode_product(&data, &dims, axis, &mat, self.basis.alphabet_len());
        }
        data
    }

    /// Nonzero coefficients sorted by decreasing magnitude, then by σ.
    pub fn top(&self, count: usize, tol: f64) -> Vec<(Vec<usize>, f64)> {
        let mut idx: Vec<usize> = (0..self.coeffs.len()).filter(|&i| self.coeffs[i].abs() > tol).collect();
        idx.sort_by(|&a, &b| self.coeffs[b].abs().total_cmp(&self.coeffs[a].abs()).then(a.cmp(&b)));
        idx.into_iter().take(count).map(|i| (self.sigma(i), self.coeffs[i])).collect()
    }
}

/// The table of an expansion, clamped into [0, 1].
pub fn synthesize(expansion: &FourierExpansion) -> Result<FunctionSpec> {
    table_from(expansion.basis.alphabet(), expansion.n, &expansion.values())
}

/// max |f̂(σ)| over 0 < |σ| ≤ k.
pub fn low_degree_max_coefficient(f: &FunctionSpec, k: usize, basis: &OrthonormalBasis) -> Result<f64> {
    Ok(analyze(f, basis)?.low_degree_max(k))
}
