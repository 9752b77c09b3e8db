//! Hitting probabilities E[∏_j f⁽ʲ⁾(X⁽ʲ⁾)] over ℓ-step product distributions, the reductions that
//! bound them from below, and the counterexample families that show where those bounds stop.

mod bounds;
mod expectation;
mod reduction;
mod suites;

pub use bounds::{explicit_c_bound, low_influence_bound, ExplicitBound, LowInfluenceBound, DEFAULT_C};
pub use expectation::{
    is_dp_compatible, multi_set_expectation, same_set_expectation, HittingInstance, HittingValue,
};
pub use reduction::{
    density_increment, influence_reduction, max_gain_check, DensityIncrementLog, DensityStep, InfluenceReductionLog,
    InfluenceStep, MaxGainReport, ProductCertificate,
};
pub use suites::{
    counterexample_three_sets, counterexample_unequal_marginals, estimate_hitting_exponent, full_sum_zero,
    markov_same_set_check, three_sets, unequal_marginals_set, ExponentFit, ExponentPoint, MarkovCheckReport,
    SetFamily, ThreeSetsReport, ThreeSetsRow, UnequalMarginalsReport, UnequalMarginalsRow,
};
