//! Finite ℓ-step distributions and their correlation quantities α, β and ρ.

pub mod catalog;
mod distribution;
mod format;
mod spectral;

pub use distribution::{Alphabet, MarginalDistribution, StepDistribution, MAX_TABLE};
pub use format::parse_distribution;
pub use spectral::{
    check_edge_variance, double_sample_kernel, is_markov_generated, kernel_second_eigenvalue,
    maximal_correlation, rho, rho_report, rho_via_svd, EdgeVarianceReport, MarkovKernel, RhoReport,
    STRUCT_TOL,
};
