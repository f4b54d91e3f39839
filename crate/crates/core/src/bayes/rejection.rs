use rand::Rng;

use super::prior::NPrior;
use crate::assumptions::IdentifyingAssumption;
use crate::contingency::CellProbs;
use crate::error::{MseError, Result};

/// Acceptance rates below this get a warning attached.
pub const LOW_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionOutcome {
    pub accepted: Vec<CellProbs<f64>>,
    /// `T(pi~)` for each accepted draw.
    pub pi0: Vec<f64>,
    pub tried: usize,
    pub in_domain: usize,
    /// Draws with a zero cell, which the assumption cannot map; always rejected.
    pub degenerate: usize,
    pub acceptance_rate: f64,
}

impl RejectionOutcome {
    pub fn warning(&self) -> Option<String> {
        low_acceptance_warning(self.acceptance_rate)
    }
}

pub(crate) fn low_acceptance_warning(rate: f64) -> Option<String> {
    (rate < LOW_ACCEPTANCE).then(|| {
        format!("acceptance rate {rate:.2e} is very low; posterior summaries rest on few draws")
    })
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Tally {
    pub in_domain: usize,
    pub degenerate: usize,
}

/// One accept/reject decision; `Some(pi0)` if the draw is kept.
pub(crate) fn screen<R: Rng + ?Sized>(
    draw: &CellProbs<f64>,
    a: &IdentifyingAssumption<f64>,
    prior: &NPrior,
    n: u64,
    log_max: f64,
    tally: &mut Tally,
    rng: &mut R,
) -> Result<Option<f64>> {
    let u: f64 = rng.random();
    let pi0 = match a.unobserved_prob(draw) {
        Ok(p) if p > 0.0 && p < 1.0 => p,
        Ok(_) => {
            tally.degenerate += 1;
            return Ok(None);
        }
        Err(MseError::OutsideDomain { .. }) => return Ok(None),
        Err(MseError::DegenerateCell(_)) => {
            tally.degenerate += 1;
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    tally.in_domain += 1;
    let ratio = prior.acceptance_ratio(pi0, log_max, n)?;
    Ok((u < ratio).then_some(pi0))
}

/// Keeps each draw with probability `p(n | T(pi~)) I(pi~ in domain) / max p(n | .)`.
pub fn rejection_filter<R: Rng + ?Sized>(
    draws: &[CellProbs<f64>],
    a: &IdentifyingAssumption<f64>,
    prior: &NPrior,
    n: u64,
    rng: &mut R,
) -> Result<RejectionOutcome> {
    let log_max = prior.log_evidence_max(n)?;
    let mut tally = Tally::default();
    let mut accepted = Vec::new();
    let mut pi0 = Vec::new();
    for d in draws {
        if let Some(p) = screen(d, a, prior, n, log_max, &mut tally, rng)? {
            accepted.push(d.clone());
            pi0.push(p);
        }
    }
    let tried = draws.len();
    let acceptance_rate = if tried == 0 { 0.0 } else { accepted.len() as f64 / tried as f64 };
    Ok(RejectionOutcome {
        accepted,
        pi0,
        tried,
        in_domain: tally.in_domain,
        degenerate: tally.degenerate,
        acceptance_rate,
    })
}
