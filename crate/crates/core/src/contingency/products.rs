use super::pattern::InclusionPattern;
use crate::error::{MseError, Result};
use crate::scalar::Real;

/// Sums of logarithms `(ln Pi_odd, ln Pi_even)` over the given cells.
pub fn log_odd_even<T: Real>(
    cells: impl IntoIterator<Item = (InclusionPattern, T)>,
) -> Result<(T, T)> {
    let mut odd = T::zero();
    let mut even = T::zero();
    for (h, p) in cells {
        if !(p > T::zero()) || !p.is_finite() {
            return Err(MseError::DegenerateCell(h.label()));
        }
        if h.is_odd() {
            odd = odd + p.ln();
        } else {
            even = even + p.ln();
        }
    }
    Ok((odd, even))
}

/// `(Pi_odd, Pi_even)`: products of odd-parity and even-parity cell probabilities.
pub fn odd_even_products<T: Real>(
    cells: impl IntoIterator<Item = (InclusionPattern, T)>,
) -> Result<(T, T)> {
    let (lo, le) = log_odd_even(cells)?;
    Ok((lo.exp(), le.exp()))
}

/// `Pi_odd / Pi_even`, formed in log space.
pub fn odd_even_ratio<T: Real>(
    cells: impl IntoIterator<Item = (InclusionPattern, T)>,
) -> Result<T> {
    let (lo, le) = log_odd_even(cells)?;
    Ok((lo - le).exp())
}
