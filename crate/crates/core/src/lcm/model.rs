use serde::{Deserialize, Serialize};

use crate::contingency::{observed_cells, CellProbs, InclusionPattern};
use crate::error::{MseError, Result};
use crate::scalar::{compensated_sum, Real};

/// Finite mixture of independent-list models: class `j` has weight `nu[j]`
/// and captures on list `k` with probability `q[j][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct LatentClassModel<T> {
    nu: Vec<T>,
    q: Vec<Vec<T>>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
struct Raw<T> {
    nu: Vec<T>,
    q: Vec<Vec<T>>,
}

impl<T: Real> LatentClassModel<T> {
    pub fn new(nu: Vec<T>, q: Vec<Vec<T>>) -> Result<Self> {
        let bad = |msg: String| Err(MseError::InvalidInput(msg));
        if nu.is_empty() || nu.len() != q.len() {
            return bad(format!("{} class weights for {} rows of q", nu.len(), q.len()));
        }
        let k = q[0].len();
        if !(2..=crate::contingency::MAX_LISTS).contains(&k) {
            return bad(format!("LCM needs between 2 and {} lists, got {k}", crate::contingency::MAX_LISTS));
        }
        if q.iter().any(|row| row.len() != k) {
            return bad("rows of q differ in length".into());
        }
        if nu.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return bad("class weights must be nonnegative".into());
        }
        let total = compensated_sum(nu.iter().copied());
        if (total - T::one()).abs() > T::simplex_tolerance() {
            return bad(format!("class weights sum to {total}"));
        }
        if q.iter().flatten().any(|p| !(*p > T::zero() && *p < T::one())) {
            return bad("capture probabilities must lie in (0,1)".into());
        }
        Ok(Self { nu, q })
    }

    /// Parses `{"nu": [...], "q": [[...], ...]}`.
    pub fn from_json(text: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let raw: Raw<T> = serde_json::from_str(text).map_err(|e| MseError::Parse(e.to_string()))?;
        Self::new(raw.nu, raw.q)
    }

    /// One class with the same capture probabilities.
    pub fn independent(q: Vec<T>) -> Result<Self> {
        Self::new(vec![T::one()], vec![q])
    }

    pub fn nu(&self) -> &[T] {
        &self.nu
    }

    pub fn q(&self) -> &[Vec<T>] {
        &self.q
    }

    pub fn j(&self) -> usize {
        self.nu.len()
    }

    pub fn k(&self) -> usize {
        self.q[0].len()
    }

    /// `pi_h` for every pattern of the complete table, indexed by code.
    pub fn full_probs(&self) -> Vec<T> {
        InclusionPattern::all(self.k())
            .map(|h| {
                let terms = self.nu.iter().zip(&self.q).map(|(&w, row)| {
                    row.iter().enumerate().fold(w, |acc, (i, &p)| {
                        acc * if h.bit(i) { p } else { T::one() - p }
                    })
                });
                compensated_sum(terms)
            })
            .collect()
    }

    /// `(pi~, pi0)`.
    pub fn cell_probs(&self) -> Result<(CellProbs<T>, T)> {
        let full = self.full_probs();
        let observed = full[1..].to_vec();
        debug_assert_eq!(observed.len(), observed_cells(self.k()));
        Ok((CellProbs::from_weights(self.k(), observed)?, full[0]))
    }

    pub fn cast<U: Real>(&self) -> LatentClassModel<U> {
        let c = |x: &T| U::lit(x.as_f64());
        LatentClassModel {
            nu: self.nu.iter().map(c).collect(),
            q: self.q.iter().map(|row| row.iter().map(c).collect()).collect(),
        }
    }
}
