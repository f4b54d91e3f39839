use serde::{Deserialize, Serialize};

use super::model::LatentClassModel;
use super::moments::{moment_vector, MomentVector};
use crate::error::{MseError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentVerdict {
    pub j: usize,
    pub k: usize,
    pub identifiable: bool,
    pub note: String,
}

/// Conditional identifiability of `J`-class latent class models on `K` lists.
pub fn check_conditional_identifiability(j: usize, k: usize) -> Result<IdentVerdict> {
    if j == 0 || k < 2 {
        return Err(MseError::InvalidInput(format!("need J >= 1 and K >= 2, got J={j}, K={k}")));
    }
    let identifiable = 2 * j <= k;
    let mut note = if identifiable {
        format!("conditionally identifiable (2J <= K: {} <= {k})", 2 * j)
    } else {
        format!("not conditionally identifiable (2J > K: {} > {k})", 2 * j)
    };
    let params = j as u128 * (k as u128 + 1) - 1;
    let cells = (1u128 << k.min(127)) - 2;
    if params > cells {
        note.push_str(&format!(
            "; the parameter count also fails: J(K+1) - 1 = {params} > 2^K - 2 = {cells}"
        ));
    }
    Ok(IdentVerdict { j, k, identifiable, note })
}

/// Two `J`-class models with the same observed-cell probabilities and different `pi0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct CounterexamplePair<T> {
    pub q_model: LatentClassModel<T>,
    pub r_model: LatentClassModel<T>,
    /// `m_Q = a * m_R`.
    pub a: T,
    pub alpha: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pi0_q: f64,
    pub pi0_r: f64,
    pub moment_gap: f64,
    pub observed_gap: f64,
    /// `(1 - pi0_Q) / (1 - pi0_R)`, which should equal `a`.
    pub observed_mass_ratio: f64,
}

pub fn default_alpha(j: usize) -> f64 {
    0.99 / (2.0 * j as f64)
}

fn binomial(n: u64, r: u64) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn counterexample_pair<T: Real>(j: usize, k: usize, alpha: Option<T>) -> Result<CounterexamplePair<T>> {
    if j == 0 || k < 2 || k >= 2 * j {
        return Err(MseError::InvalidConstruction(format!(
            "needs K < 2J with K >= 2, got J={j}, K={k}"
        )));
    }
    if j > 30 {
        return Err(MseError::InvalidConstruction(format!("J={j} is too large")));
    }
    let alpha = alpha.unwrap_or_else(|| T::lit(default_alpha(j)));
    let limit = T::one() / T::lit(2.0 * j as f64);
    if !(alpha > T::zero() && alpha < limit) {
        return Err(MseError::InvalidConstruction(format!("alpha must lie in (0, 1/(2J)), got {alpha}")));
    }
    let two_j = 2 * j as u64;
    let half = 2f64.powi(2 * j as i32 - 1);
    let mut nu_q = Vec::with_capacity(j);
    let mut nu_r = Vec::with_capacity(j);
    let mut q_rows = Vec::with_capacity(j);
    let mut r_rows = Vec::with_capacity(j);
    for c in 1..=j as u64 {
        nu_q.push(T::lit(binomial(two_j, 2 * c) / (half - 1.0)));
        nu_r.push(T::lit(binomial(two_j, 2 * c - 1) / half));
        q_rows.push(vec![alpha * T::lit(2.0 * c as f64); k]);
        r_rows.push(vec![alpha * T::lit(2.0 * c as f64 - 1.0); k]);
    }
    Ok(CounterexamplePair {
        q_model: LatentClassModel::new(nu_q, q_rows)?,
        r_model: LatentClassModel::new(nu_r, r_rows)?,
        a: T::lit(half / (half - 1.0)),
        alpha,
    })
}

impl<T: Real> CounterexamplePair<T> {
    pub fn moments(&self) -> (MomentVector<T>, MomentVector<T>) {
        (moment_vector(&self.q_model), moment_vector(&self.r_model))
    }

    pub fn check(&self) -> Result<PairCheck> {
        let (mq, mr) = self.moments();
        let (pq, pi0_q) = self.q_model.cell_probs()?;
        let (pr, pi0_r) = self.r_model.cell_probs()?;
        let observed_gap = pq
            .as_slice()
            .iter()
            .zip(pr.as_slice())
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max);
        Ok(PairCheck {
            pi0_q: pi0_q.as_f64(),
            pi0_r: pi0_r.as_f64(),
            moment_gap: mq.max_abs_diff(&mr, self.a).as_f64(),
            observed_gap: observed_gap.as_f64(),
            observed_mass_ratio: ((T::one() - pi0_q) / (T::one() - pi0_r)).as_f64(),
        })
    }
}
