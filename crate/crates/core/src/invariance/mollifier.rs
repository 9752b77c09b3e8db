//! The clipped identity φ, its smooth approximations φ_λ = φ ∗ ψ_λ, and the products χ, χ_λ.

use std::sync::OnceLock;

use super::quad::{integrate, integrate_pieces};
use crate::error::{Error, Result};

/// Tolerance for the normalizing integral of Ψ.
const NORM_TOL: f64 = 1e-14;
/// Absolute tolerance for each φ_λ evaluation.
const PHI_TOL: f64 = 1e-12;

/// Ψ(x) = exp(−1/(x+1)²)·exp(−1/(x−1)²) on (−1, 1) and 0 elsewhere.
pub fn bump(x: f64) -> f64 {
    if x <= -1.0 || x >= 1.0 {
        0.0
    } else {
        (-1.0 / ((x + 1.0) * (x + 1.0)) - 1.0 / ((x - 1.0) * (x - 1.0))).exp()
    }
}

/// c = ∫_{−1}^{1} Ψ, computed once.
pub fn bump_mass() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| integrate(bump, -1.0, 1.0, NORM_TOL).value)
}

/// ψ = Ψ/c: smooth, even, supported on [−1, 1], integrating to 1.
pub fn psi(x: f64) -> f64 {
    bump(x) / bump_mass()
}

/// ψ_λ(x) = ψ(x/λ)/λ.
pub fn psi_lambda(lambda: f64, x: f64) -> f64 {
    psi(x / lambda) / lambda
}

/// 0 below 0, x on (0, 1), 1 above 1.
pub fn phi(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// ∏_j φ(x_j).
pub fn chi(xs: &[f64]) -> f64 {
    xs.iter().map(|&x| phi(x)).product()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 0.5 {
        Ok(())
    } else {
        Err(Error::Range(format!("λ = {lambda} is outside (0, 1/2)")))
    }
}

/// φ_λ(x) = ∫_{−λ}^{λ} ψ_λ(y)·φ(x + y) dy.
///
/// Outside the collars [−λ, λ] and [1−λ, 1+λ] the value is φ(x) (ψ_λ is even with unit mass and
/// φ is affine on the window); inside, the integral is split at the kinks of φ.
pub fn mollifier_phi(lambda: f64, x: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(phi_lambda_unchecked(lambda, x))
}

pub(crate) fn phi_lambda_unchecked(lambda: f64, x: f64) -> f64 {
    let near = |k: f64| (x - k).abs() < lambda;
    if !near(0.0) && !near(1.0) {
        return phi(x);
    }
    let mut points = vec![-lambda, lambda];
    for kink in [-x, 1.0 - x] {
        if kink > -lambda && kink < lambda {
            points.push(kink);
        }
    }
    points.sort_by(f64::total_cmp);
    // The exact value lies in [0, 1]; clamping removes quadrature round-off at the ends.
    integrate_pieces(|y| psi_lambda(lambda, y) * phi(x + y), &points, PHI_TOL).value.clamp(0.0, 1.0)
}

/// χ_λ(x̄) = ∏_j φ_λ(x_j).
pub fn mollifier_chi(lambda: f64, xs: &[f64]) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(xs.iter().map(|&x| phi_lambda_unchecked(lambda, x)).product())
}
