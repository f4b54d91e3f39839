use serde::{Deserialize, Serialize};

use super::model::LatentClassModel;
use crate::contingency::{observed_cells, InclusionPattern};
use crate::error::{MseError, Result};
use crate::scalar::{compensated_sum, Real};

pub const MAX_MATRIX_LISTS: usize = 12;

/// Mixed moments `m_h = E[prod_k q_k^h_k]` over the nonzero patterns; index is `code - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct MomentVector<T> {
    k: usize,
    m: Vec<T>,
}

impl<T: Real> MomentVector<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[T] {
        &self.m
    }

    pub fn get(&self, h: InclusionPattern) -> T {
        self.m[h.code() as usize - 1]
    }

    /// `max_h |self_h - scale * other_h|`.
    pub fn max_abs_diff(&self, other: &MomentVector<T>, scale: T) -> T {
        self.m
            .iter()
            .zip(&other.m)
            .map(|(&a, &b)| (a - scale * b).abs())
            .fold(T::zero(), T::max)
    }
}

pub fn moment_vector<T: Real>(lcm: &LatentClassModel<T>) -> MomentVector<T> {
    let k = lcm.k();
    let m = InclusionPattern::observed(k)
        .map(|h| {
            compensated_sum(lcm.nu().iter().zip(lcm.q()).map(|(&w, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(i, _)| h.bit(*i))
                    .fold(w, |acc, (_, &p)| acc * p)
            }))
        })
        .collect();
    MomentVector { k, m }
}

/// Dense integer matrix over the nonzero patterns in code order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternMatrix {
    k: usize,
    dim: usize,
    data: Vec<i8>,
}

impl PatternMatrix {
    fn build(k: usize, entry: impl Fn(InclusionPattern, InclusionPattern) -> i8) -> Result<Self> {
        if !(2..=MAX_MATRIX_LISTS).contains(&k) {
            return Err(MseError::SizeGuard(format!(
                "coefficient matrix supports 2 <= K <= {MAX_MATRIX_LISTS}, got {k}"
            )));
        }
        let dim = observed_cells(k);
        let mut data = Vec::with_capacity(dim * dim);
        for row in InclusionPattern::observed(k) {
            data.extend(InclusionPattern::observed(k).map(|col| entry(row, col)));
        }
        Ok(Self { k, dim, data })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn mul_vec<T: Real>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                compensated_sum(
                    self.row(r)
                        .iter()
                        .zip(v)
                        .filter(|(c, _)| **c != 0)
                        .map(|(&c, &x)| if c > 0 { x } else { -x }),
                )
            })
            .collect()
    }
}

/// `c_{h,h'} = (-1)^(|h'| - |h|) I(h <= h')`, mapping moments to observed cell probabilities.
pub fn coefficient_matrix(k: usize) -> Result<PatternMatrix> {
    PatternMatrix::build(k, |h, g| {
        if h.is_subset_of(&g) {
            if (g.weight() - h.weight()) % 2 == 0 { 1 } else { -1 }
        } else {
            0
        }
    })
}

/// Inverse of [`coefficient_matrix`]: `I(h <= h')`.
pub fn coefficient_matrix_inverse(k: usize) -> Result<PatternMatrix> {
    PatternMatrix::build(k, |h, g| i8::from(h.is_subset_of(&g)))
}

/// `C m`: the unconditional probabilities of the nonzero cells.
pub fn reconstruct_cells<T: Real>(m: &MomentVector<T>) -> Result<Vec<T>> {
    Ok(coefficient_matrix(m.k())?.mul_vec(m.as_slice()))
}
