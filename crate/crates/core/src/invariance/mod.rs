//! Low-degree multilinear polynomials on discrete and Gaussian ensembles: noise operators,
//! hypercontractivity, the smoothed product test χ_λ, and Gaussian counterparts of step
//! distributions.

mod checks;
mod counterpart;
mod mc;
mod mollifier;
mod poly;
mod quad;

pub use checks::{
    correlated_pair, gamma_decay_check, gaussian_rhc_check, hypercontractivity_check, invariance_gap,
    orthant_probability, smoothing_gap, DecayPoint, GammaDecayReport, HypercontractivityReport, InvarianceGapReport,
    RhcReport, SmoothingGapReport, ThresholdForm, DEFAULT_INVARIANCE_C,
};
pub use counterpart::{discrete_covariance, gaussian_counterpart, GaussianCounterpart};
pub use mc::{monte_carlo, Estimate, McResult, BLOCK};
pub use mollifier::{bump, bump_mass, chi, mollifier_chi, mollifier_phi, phi, psi, psi_lambda};
pub use poly::{poly_from_function, DegreeFilter, EnsembleSequence, MultilinearPolynomial};
pub use quad::{integrate, integrate_pieces, Integral};

#[cfg(test)]
mod tests;
