//! Functions on Ω^n: representations, expectations, Fourier expansions, influences, the noise
//! operator, restrictions, resilience and the M[i,y,z] operator.

mod basis;
mod engine;
mod function;
mod ops;
mod resilience;

pub use basis::{analyze, build_basis, low_degree_max_coefficient, synthesize, FourierExpansion, OrthonormalBasis};
pub use engine::{
    expectation, expectation_with, for_each_composition, influence, influences, support_points, total_influence,
    variance, Engine, Multinomial, DEFAULT_BUDGET,
};
pub use function::{integer_window, strictly_below, Anchored, Clause, FunctionKind, FunctionSpec, ModLinear, TABLE_LIMIT};
pub use ops::{marginal_table, max_operator, noise_operator, projection_subset};
pub use resilience::{
    first_restriction_reaching, is_resilient, is_upper_resilient, resilience_from_local_variance, restrict,
    search_size, LocalVarianceReport, Restriction, ResilienceReport, Witness,
};

#[cfg(test)]
mod tests;
