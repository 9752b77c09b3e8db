//! Gaussian ensembles whose joint covariances across steps match a discrete step distribution.

use serde::Serialize;

use crate::dist_core::StepDistribution;
use crate::error::{Error, Result};
use crate::fourier::{build_basis, OrthonormalBasis};

/// Norm below which a Gram–Schmidt residual counts as linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// Per coordinate, G⁽ʲ⁾_k = Σ_r map[j][k−1][r]·H_r with H_1..H_{s−1} independent N(0, 1), where s is
/// the number of support tuples of P. Coordinates are independent copies.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianCounterpart {
    pub steps: usize,
    /// Number of base normals per coordinate.
    pub base_dim: usize,
    #[serde(skip)]
    pub bases: Vec<OrthonormalBasis>,
    /// `map[j][k][r]`: weight of H_{r+1} in G⁽ʲ⁾_{k+1}.
    pub map: Vec<Vec<Vec<f64>>>,
    /// max |Cov[G, G'] − Cov[X, X']| over all pairs of non-constant ensemble members.
    pub covariance_error: f64,
}

impl GaussianCounterpart {
    /// Ensemble size of step j.
    pub fn ensemble_size(&self, j: usize) -> usize {
        self.map[j].len()
    }

    /// Cov[G⁽ʲ¹⁾_{k1}, G⁽ʲ²⁾_{k2}] for k ≥ 1.
    pub fn covariance(&self, j1: usize, k1: usize, j2: usize, k2: usize) -> f64 {
        self.map[j1][k1 - 1].iter().zip(&self.map[j2][k2 - 1]).map(|(a, b)| a * b).sum()
    }

    /// Fills `out[j][k−1]` with G⁽ʲ⁾_k for one coordinate, given its base normals `h`.
    pub fn apply(&self, h: &[f64], out: &mut [Vec<f64>]) {
        for (row, rows) in out.iter_mut().zip(&self.map) {
            for (o, w) in row.iter_mut().zip(rows) {
                *o = w.iter().zip(h).map(|(a, b)| a * b).sum();
            }
        }
    }
}

/// Cov[X⁽ʲ¹⁾_{k1}, X⁽ʲ²⁾_{k2}] under P for the per-step bases.
pub fn discrete_covariance(p: &StepDistribution, bases: &[OrthonormalBasis], j1: usize, k1: usize, j2: usize, k2: usize) -> f64 {
    let w = p.weights().to_f64_vec();
    p.support()
        .into_iter()
        .map(|idx| {
            let t = p.tuple(idx);
            w[idx] * bases[j1].value(k1, t[j1]) * bases[j2].value(k2, t[j2])
        })
        .sum()
}

/// Builds an orthonormal basis Z of L²(X̄) by Gram–Schmidt over the support-tuple indicators in
/// mixed-radix order (seeded with 1), writes every X⁽ʲ⁾_k in it, and sends Z_r to H_r.
pub fn gaussian_counterpart(p: &StepDistribution) -> Result<GaussianCounterpart> {
    let ell = p.steps();
    let bases: Vec<OrthonormalBasis> = (0..ell).map(|j| p.marginal(j).map(|m| build_basis(&m))).collect::<Result<_>>()?;
    let w = p.weights().to_f64_vec();
    let support = p.support();
    let s = support.len();
    let tuples: Vec<Vec<usize>> = support.iter().map(|&i| p.tuple(i)).collect();
    let probs: Vec<f64> = support.iter().map(|&i| w[i]).collect();
    let dot = |u: &[f64], v: &[f64]| -> f64 { (0..s).map(|a| probs[a] * u[a] * v[a]).sum() };

    let mut z: Vec<Vec<f64>> = vec![vec![1.0; s]];
    for e in 0..s {
        if z.len() == s {
            break;
        }
        let mut v: Vec<f64> = (0..s).map(|a| if a == e { 1.0 } else { 0.0 }).collect();
        for _ in 0..2 {
            for u in &z {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < RANK_TOL {
            return Err(Error::Precondition(format!(
                "support tuple {e} is linearly dependent on the earlier ones (residual {norm:e})"
            )));
        }
        z.push(v.iter().map(|x| x / norm).collect());
    }

    let map: Vec<Vec<Vec<f64>>> = bases
        .iter()
        .enumerate()
        .map(|(j, b)| {
            (1..b.size())
                .map(|k| {
                    let xk: Vec<f64> = tuples.iter().map(|t| b.value(k, t[j])).collect();
                    z[1..].iter().map(|zr| dot(&xk, zr)).collect()
                })
                .collect()
        })
        .collect();

    let mut cp = GaussianCounterpart {
        steps: ell,
        base_dim: s - 1,
        bases,
        map,
        covariance_error: 0.0,
    };
    let mut err = 0.0f64;
    for j1 in 0..ell {
        for k1 in 1..cp.bases[j1].size() {
            for j2 in 0..ell {
                for k2 in 1..cp.bases[j2].size() {
                    let d = discrete_covariance(p, &cp.bases, j1, k1, j2, k2);
                    err = err.max((d - cp.covariance(j1, k1, j2, k2)).abs());
                }
            }
        }
    }
    cp.covariance_error = err;
    Ok(cp)
}
