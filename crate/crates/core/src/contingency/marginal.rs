use super::pattern::{observed_cells, InclusionPattern};
use super::probs::CellProbs;
use super::table::ObservedTable;
use crate::error::{MseError, Result};
use crate::scalar::Real;

/// Counts of a `K'`-list margin of an observed table.
///
/// Bit `j` of a marginal pattern refers to list `subset[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalView {
    pub subset: Vec<usize>,
    /// Counts over the nonzero marginal patterns in canonical order.
    pub marginal_counts: Vec<u64>,
    pub n_dagger: u64,
    /// Observed individuals absent from every list in the subset.
    pub zero_margin_count: u64,
}

/// Checks `1 < |subset| < k` with distinct, in-range indices.
pub fn validate_subset(subset: &[usize], k: usize) -> Result<()> {
    if subset.len() < 2 || subset.len() >= k {
        return Err(MseError::InvalidSubset(format!(
            "subset size must satisfy 1 < K' < K={k}, got {}",
            subset.len()
        )));
    }
    for (i, &s) in subset.iter().enumerate() {
        if s >= k {
            return Err(MseError::InvalidSubset(format!("list index {s} out of range")));
        }
        if subset[..i].contains(&s) {
            return Err(MseError::InvalidSubset(format!("list index {s} repeated")));
        }
    }
    Ok(())
}

pub fn marginalize(table: &ObservedTable, subset: &[usize]) -> Result<MarginalView> {
    validate_subset(subset, table.k())?;
    let mut marginal_counts = vec![0u64; observed_cells(subset.len())];
    let mut zero = 0u64;
    for (h, c) in table.cells() {
        let g = h.restrict(subset);
        if g.is_zero() {
            zero += c;
        } else {
            marginal_counts[g.code() as usize - 1] += c;
        }
    }
    Ok(MarginalView {
        subset: subset.to_vec(),
        n_dagger: table.n() - zero,
        marginal_counts,
        zero_margin_count: zero,
    })
}

impl MarginalView {
    pub fn cells(&self) -> impl Iterator<Item = (InclusionPattern, u64)> + '_ {
        InclusionPattern::observed(self.subset.len()).zip(self.marginal_counts.iter().copied())
    }

    /// The restricted `K'`-list data set as a table of its own.
    pub fn to_table(&self, parent: &ObservedTable) -> Result<ObservedTable> {
        let names = self
            .subset
            .iter()
            .map(|&i| parent.list_names()[i].clone())
            .collect();
        ObservedTable::new(names, self.marginal_counts.clone())
    }
}

/// Marginal probabilities `pi~_{g+}` over nonzero `g`, and `pi~_{0+}`.
pub fn marginal_probs<T: Real>(probs: &CellProbs<T>, subset: &[usize]) -> Result<(Vec<T>, T)> {
    validate_subset(subset, probs.k())?;
    let mut out = vec![T::zero(); observed_cells(subset.len())];
    let mut zero = T::zero();
    for (h, p) in probs.iter() {
        let g = h.restrict(subset);
        if g.is_zero() {
            zero = zero + p;
        } else {
            let slot = &mut out[g.code() as usize - 1];
            *slot = *slot + p;
        }
    }
    Ok((out, zero))
}
