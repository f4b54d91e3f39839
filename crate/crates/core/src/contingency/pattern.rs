use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MseError, Result};

/// Largest number of lists a table may have.
pub const MAX_LISTS: usize = 20;

/// Binary inclusion vector `h = (h_1, ..., h_K)`.
///
/// The canonical integer code is `sum_k h_k 2^(k-1)`, so list 1 is the least
/// significant bit. The all-zero pattern is representable and indexes the
/// unobserved cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InclusionPattern {
    code: u32,
    k: u8,
}

impl InclusionPattern {
    pub fn from_code(code: u32, k: usize) -> Result<Self> {
        check_k(k)?;
        if (code as u64) >= (1u64 << k) {
            return Err(MseError::InvalidInput(format!(
                "pattern code {code} out of range for K={k}"
            )));
        }
        Ok(Self { code, k: k as u8 })
    }

    /// Builds a pattern from flags in list order `(h_1, ..., h_K)`.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        check_k(bits.len())?;
        let code = bits
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
        Ok(Self {
            code,
            k: bits.len() as u8,
        })
    }

    pub(crate) fn from_code_unchecked(code: u32, k: usize) -> Self {
        debug_assert!((code as u64) < (1u64 << k));
        Self { code, k: k as u8 }
    }

    #[inline]
    pub fn code(&self) -> u32 {
        self.code
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k as usize
    }

    /// Flag for list `i` (0-based).
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.code >> i) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.k()).map(|i| self.bit(i)).collect()
    }

    #[inline]
    pub fn weight(&self) -> u32 {
        self.code.count_ones()
    }

    /// Odd number of lists; the all-zero pattern is even.
    #[inline]
    pub fn is_odd(&self) -> bool {
        self.weight() % 2 == 1
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.code == 0
    }

    /// Componentwise `self <= other`.
    #[inline]
    pub fn is_subset_of(&self, other: &InclusionPattern) -> bool {
        self.code & !other.code == 0
    }

    /// Restriction to the lists in `subset`; bit `j` of the result is list `subset[j]`.
    pub fn restrict(&self, subset: &[usize]) -> InclusionPattern {
        let code = subset
            .iter()
            .enumerate()
            .fold(0u32, |acc, (j, &i)| acc | ((self.bit(i) as u32) << j));
        InclusionPattern::from_code_unchecked(code, subset.len())
    }

    /// Binary numeral of the code, `K` digits, list 1 rightmost.
    pub fn label(&self) -> String {
        format!("{:0width$b}", self.code, width = self.k())
    }

    /// All nonzero patterns for `k` lists in canonical order.
    pub fn observed(k: usize) -> impl Iterator<Item = InclusionPattern> {
        (1u32..(1u32 << k)).map(move |c| InclusionPattern::from_code_unchecked(c, k))
    }

    /// All `2^k` patterns including the zero pattern.
    pub fn all(k: usize) -> impl Iterator<Item = InclusionPattern> {
        (0u32..(1u32 << k)).map(move |c| InclusionPattern::from_code_unchecked(c, k))
    }
}

impl fmt::Display for InclusionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if !(2..=MAX_LISTS).contains(&k) {
        return Err(MseError::InvalidInput(format!(
            "number of lists must be in 2..={MAX_LISTS}, got {k}"
        )));
    }
    Ok(())
}

/// Number of observed cells, `2^K - 1`.
#[inline]
pub fn observed_cells(k: usize) -> usize {
    (1usize << k) - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_is_little_endian_in_list_order() {
        let p = InclusionPattern::from_bits(&[true, false, true]).unwrap();
        assert_eq!(p.code(), 5);
        assert_eq!(p.label(), "101");
        assert!(!p.is_odd());
        assert_eq!(p.bits(), vec![true, false, true]);
    }

    #[test]
    fn zero_pattern_is_even() {
        let z = InclusionPattern::from_code(0, 4).unwrap();
        assert!(z.is_zero());
        assert!(!z.is_odd());
    }

    #[test]
    fn restriction_follows_subset_order() {
        let p = InclusionPattern::from_bits(&[true, false, false, true]).unwrap();
        assert_eq!(p.restrict(&[3, 1]).code(), 0b01);
        assert_eq!(p.restrict(&[1, 3]).code(), 0b10);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(InclusionPattern::from_bits(&[true]).is_err());
        assert!(InclusionPattern::from_code(4, 2).is_err());
    }

    #[test]
    fn subset_order() {
        let a = InclusionPattern::from_code(0b001, 3).unwrap();
        let b = InclusionPattern::from_code(0b101, 3).unwrap();
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
    }
}
