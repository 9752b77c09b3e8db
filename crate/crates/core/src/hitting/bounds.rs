//! Closed-form bounds: the low-influence lower bound with its τ, and the triply exponential c(μ).

use serde::Serialize;

use crate::error::{Error, Result};

/// Default absolute constant in the τ formula.
pub const DEFAULT_C: f64 = 10.0;

#[derive(Clone, Debug, Serialize)]
pub struct LowInfluenceBound {
    /// (∏ μ⁽ʲ⁾)^{ℓ/(1−ρ²)} − ε.
    pub lower_bound: f64,
    /// ((1−ρ²)ε/ℓ^{5/2})^{C·ℓ·ln(ℓ/ε)·ln(1/α)/((1−ρ)ε)}; underflows to 0 for most inputs.
    pub tau: f64,
    pub ln_tau: f64,
    pub c: f64,
}

pub fn low_influence_bound(mus: &[f64], rho: f64, ell: usize, eps: f64, alpha: f64, c: f64) -> Result<LowInfluenceBound> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Range(format!("ρ = {rho} is outside [0, 1)")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Range(format!("ε = {eps} is outside (0, 1/2]")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Range(format!("α = {alpha} is outside (0, 1]")));
    }
    if ell == 0 || mus.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(Error::Invalid("need ℓ ≥ 1 and every μ in [0, 1]".into()));
    }
    let l = ell as f64;
    let prod: f64 = mus.iter().product();
    let lower_bound = prod.powf(l / (1.0 - rho * rho)) - eps;
    let base = (1.0 - rho * rho) * eps / l.powf(2.5);
    let exponent = c * l * (l / eps).ln() * (1.0 / alpha).ln() / ((1.0 - rho) * eps);
    let ln_tau = exponent * base.ln();
    Ok(LowInfluenceBound {
        lower_bound,
        tau: ln_tau.exp(),
        ln_tau,
        c,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplicitBound {
    /// 1/exp(exp(exp((1/μ)^D))).
    pub value: f64,
    /// ln c = −exp(exp((1/μ)^D)); finite well past the point where `value` underflows.
    pub ln_value: f64,
    /// ln ln(1/c) = exp((1/μ)^D); finite further still.
    pub ln_ln_inverse: f64,
}

/// The triply exponential hitting bound for μ ∈ (0, 0.99]. The exponent D is supplied by the caller.
pub fn explicit_c_bound(mu: f64, d: f64) -> Result<ExplicitBound> {
    if !(mu > 0.0 && mu <= 0.99) {
        return Err(Error::Range(format!("μ = {mu} is outside (0, 0.99]")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Range(format!("D = {d} must be positive")));
    }
    let ln_ln_inverse = (1.0 / mu).powf(d).exp();
    let ln_value = -ln_ln_inverse.exp();
    Ok(ExplicitBound {
        value: ln_value.exp(),
        ln_value,
        ln_ln_inverse,
    })
}
