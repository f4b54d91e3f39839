//! Conditional maximum likelihood, Horvitz-Thompson estimation of `N`, and
//! delta-method intervals, plus `xi` sweeps and inversion.
//!
//! Gradients and the multinomial covariance `diag(p) - p p'` are expressed in
//! free coordinates: the highest-code cell is dropped and recovered from the
//! simplex constraint. The quadratic forms do not depend on which cell is dropped.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::assumptions::{AssumptionKind, IdentifyingAssumption};
use crate::contingency::{
    marginalize, observed_proportions, CellProbs, ObservedTable,
};
use crate::error::{MseError, Result};
use crate::scalar::{compensated_sum, Real};

/// Maximum bisection steps in [`invert_xi`].
pub const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PopEstimate<T> {
    pub n: u64,
    pub n_hat_real: T,
    pub n_hat_floor: u64,
    pub pi0_hat: T,
    pub se_conditional: T,
    pub se_unconditional: T,
    pub ci_conditional: (T, T),
    pub ci_unconditional: (T, T),
    pub level: T,
    pub z: T,
    pub assumption: IdentifyingAssumption<T>,
}

impl<T: Real> PopEstimate<T> {
    /// Assembles an estimate from `pi0` and the delta-method quadratic form
    /// `grad' Sigma grad` (the same for `f` and `g`).
    pub fn from_components(
        n: u64,
        pi0: T,
        quad_form: T,
        level: T,
        assumption: IdentifyingAssumption<T>,
    ) -> Result<Self> {
        let (n_hat, n_hat_floor) = ht_estimate(n, pi0)?;
        let nf = T::lit(n as f64);
        let odds = pi0 / (T::one() - pi0);
        let z = z_quantile(level)?;
        let var_c = nf * quad_form;
        let var_u = n_hat * odds + var_c;
        let se_c = var_c.max(T::zero()).sqrt();
        let se_u = var_u.max(T::zero()).sqrt();
        let interval = |se: T| {
            let lo = (n_hat - z * se).max(nf);
            let hi = (n_hat + z * se).max(lo);
            (lo, hi)
        };
        Ok(Self {
            n,
            n_hat_real: n_hat,
            n_hat_floor,
            pi0_hat: pi0,
            se_conditional: se_c,
            se_unconditional: se_u,
            ci_conditional: interval(se_c),
            ci_unconditional: interval(se_u),
            level,
            z,
            assumption,
        })
    }

    /// The reported interval, which accounts for binomial variation in `n`.
    pub fn interval(&self) -> (T, T) {
        self.ci_unconditional
    }

    /// `"9691 [8074, 11308]"`: point and endpoints floored.
    pub fn display_row(&self) -> String {
        format_point_interval(self.n_hat_real.as_f64(), self.interval_f64())
    }

    fn interval_f64(&self) -> (f64, f64) {
        let (lo, hi) = self.interval();
        (lo.as_f64(), hi.as_f64())
    }
}

pub fn format_point_interval(point: f64, (lo, hi): (f64, f64)) -> String {
    format!("{} [{}, {}]", point.floor(), lo.floor(), hi.floor())
}

/// Two-sided normal quantile; exactly 1.96 at the 95% level.
pub fn z_quantile<T: Real>(level: T) -> Result<T> {
    let l = level.as_f64();
    if !(l > 0.0 && l < 1.0) {
        return Err(MseError::InvalidInput(format!("level must be in (0,1), got {l}")));
    }
    if (l - 0.95).abs() < 1e-12 {
        return Ok(T::lit(1.96));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(T::lit(normal.inverse_cdf(0.5 + l / 2.0)))
}

/// Sample proportions, provided they lie in the assumption's domain.
pub fn conditional_mle<T: Real>(
    table: &ObservedTable,
    assumption: &IdentifyingAssumption<T>,
) -> Result<CellProbs<T>> {
    let probs = observed_proportions::<T>(table);
    check_mle(&probs, assumption)?;
    Ok(probs)
}

fn check_mle<T: Real>(probs: &CellProbs<T>, assumption: &IdentifyingAssumption<T>) -> Result<()> {
    let report = assumption.in_domain(probs)?;
    if !report.in_domain {
        return Err(MseError::MleMayNotExist {
            margin: report.margin.as_f64(),
        });
    }
    Ok(())
}

/// `n / (1 - pi0)` and its floor.
pub fn ht_estimate<T: Real>(n: u64, pi0: T) -> Result<(T, u64)> {
    if !(pi0 >= T::zero() && pi0 < T::one()) {
        return Err(MseError::InvalidPi0(pi0.as_f64()));
    }
    let value = T::lit(n as f64) / (T::one() - pi0);
    let floor = value.floor().to_u64().unwrap_or(u64::MAX);
    Ok((value, floor.max(n)))
}

/// Gradients of `f = 1/(1-T)` and `g = T/(1-T)` in free coordinates.
/// They coincide because `f = 1 + g`.
pub fn grad_f_g<T: Real>(
    assumption: &IdentifyingAssumption<T>,
    probs: &CellProbs<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let dropped = probs.as_slice().len() - 1;
    let g = free_gradient(assumption, probs, dropped)?;
    Ok((g.clone(), g))
}

fn free_gradient<T: Real>(
    assumption: &IdentifyingAssumption<T>,
    probs: &CellProbs<T>,
    dropped: usize,
) -> Result<Vec<T>> {
    let (_, full) = assumption.odds_gradient_full(probs)?;
    let last = full[dropped];
    Ok(full
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != dropped)
        .map(|(_, &d)| d - last)
        .collect())
}

/// `grad' Sigma grad` with `Sigma = diag(x) - x x'` over the free coordinates
/// obtained by dropping cell index `dropped`.
pub fn delta_quadratic_form<T: Real>(
    assumption: &IdentifyingAssumption<T>,
    probs: &CellProbs<T>,
    dropped: usize,
) -> Result<T> {
    if dropped >= probs.as_slice().len() {
        return Err(MseError::InvalidInput(format!("no cell index {dropped}")));
    }
    let grad = free_gradient(assumption, probs, dropped)?;
    let x: Vec<T> = probs
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != dropped)
        .map(|(_, &p)| p)
        .collect();
    let sq = compensated_sum(x.iter().zip(&grad).map(|(&p, &d)| p * d * d));
    let lin = compensated_sum(x.iter().zip(&grad).map(|(&p, &d)| p * d));
    Ok((sq - lin * lin).max(T::zero()))
}

pub fn estimate<T: Real>(
    table: &ObservedTable,
    assumption: &IdentifyingAssumption<T>,
    level: T,
) -> Result<PopEstimate<T>> {
    let probs = conditional_mle(table, assumption)?;
    estimate_from_probs(table.n(), &probs, assumption, level)
}

/// Estimation from given observed-cell probabilities (e.g. smoothed proportions).
pub fn estimate_from_probs<T: Real>(
    n: u64,
    probs: &CellProbs<T>,
    assumption: &IdentifyingAssumption<T>,
    level: T,
) -> Result<PopEstimate<T>> {
    check_mle(probs, assumption)?;
    let pi0 = assumption.unobserved_prob(probs)?;
    let quad = delta_quadratic_form(assumption, probs, probs.as_slice().len() - 1)?;
    PopEstimate::from_components(n, pi0, quad, level, assumption.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry<T> {
    pub xi: T,
    pub result: Result<PopEstimate<T>>,
}

/// One estimate per `xi`; failures are kept per entry.
pub fn sensitivity_sweep<T: Real>(
    table: &ObservedTable,
    family: &AssumptionKind,
    xis: &[T],
    level: T,
) -> Vec<SweepEntry<T>> {
    xis.iter()
        .map(|&xi| SweepEntry {
            xi,
            result: family
                .with_xi(xi)
                .and_then(|a| estimate(table, &a, level)),
        })
        .collect()
}

fn point_at<T: Real>(table: &ObservedTable, probs: &CellProbs<T>, family: &AssumptionKind, xi: T) -> Result<T> {
    let a = family.with_xi(xi)?;
    let pi0 = a.unobserved_prob(probs)?;
    Ok(ht_estimate(table.n(), pi0)?.0)
}

/// Finds the `xi` whose point estimate equals `target` by bisection.
pub fn invert_xi<T: Real>(
    table: &ObservedTable,
    family: &AssumptionKind,
    target: T,
    bracket: (T, T),
) -> Result<T> {
    let (mut lo, mut hi) = bracket;
    if !(lo > T::zero() && hi > lo) {
        return Err(MseError::InvalidInput(format!(
            "bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    let probs = observed_proportions::<T>(table);
    let half = T::lit(0.5);
    let f_lo = point_at(table, &probs, family, lo)? - target;
    let f_hi = point_at(table, &probs, family, hi)? - target;
    if f_lo.abs() < half {
        return Ok(lo);
    }
    if f_hi.abs() < half {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(MseError::NotBracketed {
            target: target.as_f64(),
            lo_xi: lo.as_f64(),
            hi_xi: hi.as_f64(),
            lo_value: (f_lo + target).as_f64(),
            hi_value: (f_hi + target).as_f64(),
        });
    }
    let lo_sign = f_lo.signum();
    let mut mid = (lo + hi) * half;
    for _ in 0..MAX_BISECTION_STEPS {
        mid = (lo + hi) * half;
        let f_mid = point_at(table, &probs, family, mid)? - target;
        if f_mid.abs() < half || hi - lo < T::lit(1e-6) {
            break;
        }
        if f_mid.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Point estimates under the marginal NHOI assumption from the full table and
/// under NHOI from the restricted `K'`-list table. They agree whenever the
/// sample proportions are in the domain.
pub fn equivalence_check<T: Real>(table: &ObservedTable, subset: &[usize]) -> Result<(T, T)> {
    let probs = observed_proportions::<T>(table);
    let full = IdentifyingAssumption::marginal_nhoi(subset.to_vec(), T::one())?;
    let report = full.in_domain(&probs)?;
    if !report.in_domain {
        return Err(MseError::OutsideDomain {
            margin: report.margin.as_f64(),
        });
    }
    let n_full = ht_estimate(table.n(), full.unobserved_prob(&probs)?)?.0;

    let view = marginalize(table, subset)?;
    let restricted = view.to_table(table)?;
    let rprobs = observed_proportions::<T>(&restricted);
    let pi0 = IdentifyingAssumption::nhoi(T::one())?.unobserved_prob(&rprobs)?;
    let n_restricted = ht_estimate(restricted.n(), pi0)?.0;
    Ok((n_full, n_restricted))
}
