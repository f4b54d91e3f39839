use serde::{Deserialize, Serialize};

use super::pattern::{check_k, observed_cells, InclusionPattern};
use super::table::ObservedTable;
use crate::error::{MseError, Result};
use crate::scalar::{compensated_sum, Real};

/// Cell probabilities over the nonzero patterns, conditional on being observed.
///
/// Entries are nonnegative and sum to one; `probs[i]` belongs to code `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct CellProbs<T> {
    k: usize,
    probs: Vec<T>,
}

impl<T: Real> CellProbs<T> {
    pub fn new(k: usize, probs: Vec<T>) -> Result<Self> {
        check_k(k)?;
        if probs.len() != observed_cells(k) {
            return Err(MseError::InvalidInput(format!(
                "expected {} probabilities for K={k}, got {}",
                observed_cells(k),
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < T::zero()) {
            return Err(MseError::InvalidInput(format!("invalid probability {bad}")));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - T::one()).abs() > T::simplex_tolerance() * T::lit(observed_cells(k) as f64) {
            return Err(MseError::InvalidInput(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { k, probs })
    }

    /// Divides nonnegative weights by their total.
    pub fn from_weights(k: usize, weights: Vec<T>) -> Result<Self> {
        let total = compensated_sum(weights.iter().copied());
        if !(total > T::zero()) || !total.is_finite() {
            return Err(MseError::InvalidInput("weights have no positive mass".into()));
        }
        Self::new(k, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }

    pub fn get(&self, p: InclusionPattern) -> T {
        debug_assert!(!p.is_zero() && p.k() == self.k);
        self.probs[p.code() as usize - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (InclusionPattern, T)> + '_ {
        InclusionPattern::observed(self.k).zip(self.probs.iter().copied())
    }

    /// First pattern whose probability is not strictly positive.
    pub fn first_nonpositive(&self) -> Option<InclusionPattern> {
        self.iter().find(|(_, p)| !(*p > T::zero())).map(|(h, _)| h)
    }

    pub fn require_positive(&self) -> Result<()> {
        match self.first_nonpositive() {
            Some(h) => Err(MseError::DegenerateCell(h.label())),
            None => Ok(()),
        }
    }

    /// Full-table probabilities over all `2^K` cells given the unobserved probability.
    /// Index is the pattern code; entry 0 is `pi0`.
    pub fn complete(&self, pi0: T) -> Vec<T> {
        let scale = T::one() - pi0;
        std::iter::once(pi0)
            .chain(self.probs.iter().map(|&p| p * scale))
            .collect()
    }

    pub fn cast<U: Real>(&self) -> CellProbs<U> {
        CellProbs {
            k: self.k,
            probs: self.probs.iter().map(|p| U::lit(p.as_f64())).collect(),
        }
    }
}

/// Sample proportions `n_h / n`.
pub fn observed_proportions<T: Real>(table: &ObservedTable) -> CellProbs<T> {
    let n = T::lit(table.n() as f64);
    CellProbs {
        k: table.k(),
        probs: table
            .counts()
            .iter()
            .map(|&c| T::lit(c as f64) / n)
            .collect(),
    }
}

/// Proportions after adding `c` to every observed cell.
pub fn smoothed_proportions<T: Real>(table: &ObservedTable, c: f64) -> Result<CellProbs<T>> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(MseError::InvalidInput(format!("invalid additive constant {c}")));
    }
    CellProbs::from_weights(
        table.k(),
        table
            .counts()
            .iter()
            .map(|&n| T::lit(n as f64 + c))
            .collect(),
    )
}
