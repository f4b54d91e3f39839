//! Latent class models: cell probabilities, mixed moments and the coefficient
//! matrix linking them, conditional identifiability, non-identified model
//! pairs, and a repeated-sampling harness.

mod ident;
mod model;
mod moments;
mod simulate;

pub use ident::{
    check_conditional_identifiability, counterexample_pair, default_alpha, CounterexamplePair, IdentVerdict,
    PairCheck,
};
pub use model::LatentClassModel;
pub use moments::{
    coefficient_matrix, coefficient_matrix_inverse, moment_vector, reconstruct_cells, MomentVector, PatternMatrix,
    MAX_MATRIX_LISTS,
};
pub use simulate::{
    simulate_table, simulation_study, Estimand, LevelSummary, RepEstimate, RepRecord, StudyConfig, StudyResult,
    StudySummary,
};
