//! Multiple-systems (capture-recapture) population size estimation in which
//! the model for the observed cells is kept separate from an explicit
//! identifying assumption that fixes the unobserved cell.
//!
//! * [`contingency`]: incomplete `2^K` tables, proportions and margins.
//! * [`assumptions`]: NHOI and marginal NHOI maps with their `xi` sensitivity forms.
//! * [`freq`]: Horvitz-Thompson estimates and delta-method intervals.
//! * [`bayes`]: priors for `N`, Dirichlet draws and the rejection step.
//! * [`lcm`]: latent class models, identifiability checks and simulation.
//!
//! Probability-level math is generic over [`Real`] (`f32`, `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assumptions;
pub mod bayes;
pub mod contingency;
pub mod error;
pub mod fixtures;
pub mod freq;
pub mod lcm;
pub mod report;
pub mod scalar;

pub use assumptions::{AssumptionKind, AssumptionSpec, DomainReport};
pub use contingency::{InclusionPattern, MarginalView, ObservedTable};
pub use error::{MseError, Result};
pub use scalar::Real;

pub type ObservedProbs = contingency::CellProbs<f64>;
pub type ObservedProbs32 = contingency::CellProbs<f32>;
pub type IdentifyingAssumption = assumptions::IdentifyingAssumption<f64>;
pub type IdentifyingAssumption32 = assumptions::IdentifyingAssumption<f32>;
pub type PopEstimate = freq::PopEstimate<f64>;
pub type LatentClassModel = lcm::LatentClassModel<f64>;
pub type MomentVector = lcm::MomentVector<f64>;
