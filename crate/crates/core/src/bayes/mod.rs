//! Bayesian inference for `N`: the working posterior of `pi~` is mapped through an
//! identifying assumption, filtered by a rejection step that swaps the working
//! scale prior for any cataloged prior on `N`, and completed with exact draws of `N`.

mod dirichlet;
mod import;
mod posterior;
mod prior;
mod rejection;

pub use dirichlet::{dirichlet_cond_posterior, flat_alpha};
pub use import::{export_working_draws, import_working_draws, DrawFormat, ROW_SUM_TOLERANCE};
pub use posterior::{
    posterior_from_draws, posterior_n, quantile_sorted, run_dirichlet, sample_working_draws, summarize,
    CredibleInterval, PosteriorDraws, PosteriorSummary, SamplerConfig, DEFAULT_CHUNK, DEFAULT_DRAWS,
    DEFAULT_SEED,
};
pub use prior::{NPrior, TruncatedPrior};
pub use rejection::{rejection_filter, RejectionOutcome, LOW_ACCEPTANCE};
