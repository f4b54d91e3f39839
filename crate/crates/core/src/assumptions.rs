//! Explicit identifying assumptions mapping observed cell probabilities to the
//! unobserved-cell probability `pi0`.
//!
//! Two families are provided, both indexed by a sensitivity parameter `xi > 0`:
//!
//! * **NHOI**: the K-way log-linear interaction is fixed, so that
//!   `Pi_odd / Pi_even = xi` over the full table. Solving for `pi0` gives
//!   `pi0 = r / (xi + r)` with `r = Pi~_odd / Pi~_even` over the observed cells.
//!   No restriction is placed on the observed cells.
//! * **Marginal NHOI**: the same constraint on the margin of a subset of
//!   `1 < K' < K` lists. With `r+` the odd/even ratio over the nonzero marginal
//!   cells and `p0+` the observed mass outside every subset list,
//!   `pi0 = (r+ - xi p0+) / (xi + r+ - xi p0+)`, defined only where
//!   `r+ / p0+ > xi`.
//!
//! `xi = exp((-1)^(K+1) lambda_1)` where `lambda_1` is the highest-order
//! interaction; `xi = 1` recovers the plain assumptions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contingency::{
    log_odd_even, marginal_probs, validate_subset, CellProbs, InclusionPattern, ObservedTable,
};
use crate::error::{MseError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssumptionKind {
    Nhoi,
    /// Sorted list indices of the margin.
    MarginalNhoi { subset: Vec<usize> },
}

impl AssumptionKind {
    pub fn marginal(mut subset: Vec<usize>) -> Self {
        subset.sort_unstable();
        AssumptionKind::MarginalNhoi { subset }
    }

    pub fn subset(&self) -> Option<&[usize]> {
        match self {
            AssumptionKind::Nhoi => None,
            AssumptionKind::MarginalNhoi { subset } => Some(subset),
        }
    }

    pub fn validate_for(&self, k: usize) -> Result<()> {
        match self {
            AssumptionKind::Nhoi => Ok(()),
            AssumptionKind::MarginalNhoi { subset } => validate_subset(subset, k),
        }
    }

    pub fn with_xi<T: Real>(&self, xi: T) -> Result<IdentifyingAssumption<T>> {
        IdentifyingAssumption::new(self.clone(), xi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct IdentifyingAssumption<T> {
    kind: AssumptionKind,
    xi: T,
}

/// Result of a domain check. `margin > 0` exactly when the input is in the domain;
/// NHOI reports `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainReport<T> {
    pub in_domain: bool,
    pub margin: T,
}

impl<T: Real> IdentifyingAssumption<T> {
    pub fn new(kind: AssumptionKind, xi: T) -> Result<Self> {
        if !(xi > T::zero()) || !xi.is_finite() {
            return Err(MseError::InvalidInput(format!("xi must be positive, got {xi}")));
        }
        let kind = match kind {
            AssumptionKind::MarginalNhoi { subset } => AssumptionKind::marginal(subset),
            k => k,
        };
        Ok(Self { kind, xi })
    }

    pub fn nhoi(xi: T) -> Result<Self> {
        Self::new(AssumptionKind::Nhoi, xi)
    }

    pub fn marginal_nhoi(subset: Vec<usize>, xi: T) -> Result<Self> {
        Self::new(AssumptionKind::marginal(subset), xi)
    }

    pub fn kind(&self) -> &AssumptionKind {
        &self.kind
    }

    pub fn xi(&self) -> T {
        self.xi
    }

    /// Highest-order interaction implied by `xi` for a table of `k` lists
    /// (`k` is `K'` for the marginal family).
    pub fn lambda1(&self, k: usize) -> T {
        let k = self.kind.subset().map_or(k, <[usize]>::len);
        if k % 2 == 1 {
            self.xi.ln()
        } else {
            -self.xi.ln()
        }
    }

    /// Odd/even ratio terms: `(ln r, p0+)`, with `p0+ = 0` for NHOI.
    fn log_ratio_terms(&self, probs: &CellProbs<T>) -> Result<(T, T)> {
        self.kind.validate_for(probs.k())?;
        match &self.kind {
            AssumptionKind::Nhoi => {
                let (lo, le) = log_odd_even(probs.iter())?;
                Ok((lo - le, T::zero()))
            }
            AssumptionKind::MarginalNhoi { subset } => {
                let (margin, zero) = marginal_probs(probs, subset)?;
                let cells = InclusionPattern::observed(subset.len()).zip(margin);
                let (lo, le) = log_odd_even(cells)?;
                Ok((lo - le, zero))
            }
        }
    }

    pub fn in_domain(&self, probs: &CellProbs<T>) -> Result<DomainReport<T>> {
        let (log_r, zero) = self.log_ratio_terms(probs)?;
        let margin = match self.kind {
            AssumptionKind::Nhoi => T::infinity(),
            AssumptionKind::MarginalNhoi { .. } => {
                if zero > T::zero() {
                    (log_r - zero.ln()).exp() - self.xi
                } else {
                    T::infinity()
                }
            }
        };
        Ok(DomainReport {
            in_domain: margin > T::zero(),
            margin,
        })
    }

    /// `T(pi~)`: the unobserved-cell probability implied by the assumption.
    pub fn unobserved_prob(&self, probs: &CellProbs<T>) -> Result<T> {
        let (log_r, zero) = self.log_ratio_terms(probs)?;
        match self.kind {
            AssumptionKind::Nhoi => {
                // r / (xi + r) as a logistic in log space
                let t = log_r - self.xi.ln();
                Ok(logistic(t))
            }
            AssumptionKind::MarginalNhoi { .. } => {
                let r = log_r.exp();
                let u = r - self.xi * zero;
                if !(u > T::zero()) {
                    let margin = if zero > T::zero() {
                        r / zero - self.xi
                    } else {
                        T::infinity()
                    };
                    return Err(MseError::OutsideDomain {
                        margin: margin.as_f64(),
                    });
                }
                Ok(u / (self.xi + u))
            }
        }
    }

    /// Gradient of `g = T / (1 - T)` with respect to every observed cell,
    /// treating the cells as unconstrained.
    pub(crate) fn odds_gradient_full(&self, probs: &CellProbs<T>) -> Result<(T, Vec<T>)> {
        let (log_r, zero) = self.log_ratio_terms(probs)?;
        match &self.kind {
            AssumptionKind::Nhoi => {
                let g = (log_r - self.xi.ln()).exp();
                let grad = probs
                    .iter()
                    .map(|(h, p)| if h.is_odd() { g / p } else { -g / p })
                    .collect();
                Ok((g, grad))
            }
            AssumptionKind::MarginalNhoi { subset } => {
                let r = log_r.exp();
                let u = r - self.xi * zero;
                if !(u > T::zero()) {
                    return Err(MseError::OutsideDomain {
                        margin: (r / zero - self.xi).as_f64(),
                    });
                }
                let (margin, _) = marginal_probs(probs, subset)?;
                let grad = probs
                    .iter()
                    .map(|(h, _)| {
                        let g = h.restrict(subset);
                        let du = if g.is_zero() {
                            -self.xi
                        } else {
                            let pg = margin[g.code() as usize - 1];
                            if g.is_odd() {
                                r / pg
                            } else {
                                -r / pg
                            }
                        };
                        du / self.xi
                    })
                    .collect();
                Ok((u / self.xi, grad))
            }
        }
    }
}

fn logistic<T: Real>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

/// The `xi` a complete distribution `(pi~, pi0)` actually carries under `kind`.
pub fn implied_xi<T: Real>(probs: &CellProbs<T>, pi0: T, kind: &AssumptionKind) -> Result<T> {
    if !(pi0 > T::zero() && pi0 < T::one()) {
        return Err(MseError::InvalidPi0(pi0.as_f64()));
    }
    kind.validate_for(probs.k())?;
    let full = probs.complete(pi0);
    let k = probs.k();
    match kind {
        AssumptionKind::Nhoi => {
            let (lo, le) = log_odd_even(InclusionPattern::all(k).zip(full))?;
            Ok((lo - le).exp())
        }
        AssumptionKind::MarginalNhoi { subset } => {
            let mut margin = vec![T::zero(); 1 << subset.len()];
            for (h, p) in InclusionPattern::all(k).zip(full) {
                let g = h.restrict(subset).code() as usize;
                margin[g] = margin[g] + p;
            }
            let (lo, le) = log_odd_even(InclusionPattern::all(subset.len()).zip(margin))?;
            Ok((lo - le).exp())
        }
    }
}

/// User-facing assumption description with lists named rather than indexed.
///
/// JSON: `{"kind":"nhoi","xi":1.0}` or
/// `{"kind":"marginal_nhoi","subset":["ABA","HRW"],"xi":0.8}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssumptionSpec {
    Nhoi {
        #[serde(default = "default_xi")]
        xi: f64,
    },
    MarginalNhoi {
        subset: Vec<String>,
        #[serde(default = "default_xi")]
        xi: f64,
    },
}

fn default_xi() -> f64 {
    1.0
}

impl AssumptionSpec {
    pub fn xi(&self) -> f64 {
        match self {
            AssumptionSpec::Nhoi { xi } | AssumptionSpec::MarginalNhoi { xi, .. } => *xi,
        }
    }

    pub fn set_xi(&mut self, value: f64) {
        match self {
            AssumptionSpec::Nhoi { xi } | AssumptionSpec::MarginalNhoi { xi, .. } => *xi = value,
        }
    }

    pub fn kind_for(&self, table: &ObservedTable) -> Result<AssumptionKind> {
        let kind = match self {
            AssumptionSpec::Nhoi { .. } => AssumptionKind::Nhoi,
            AssumptionSpec::MarginalNhoi { subset, .. } => {
                AssumptionKind::marginal(table.resolve_lists(subset)?)
            }
        };
        kind.validate_for(table.k())?;
        Ok(kind)
    }

    pub fn resolve<T: Real>(&self, table: &ObservedTable) -> Result<IdentifyingAssumption<T>> {
        IdentifyingAssumption::new(self.kind_for(table)?, T::lit(self.xi()))
    }

    pub fn from_kind(kind: &AssumptionKind, xi: f64, names: &[String]) -> Self {
        match kind {
            AssumptionKind::Nhoi => AssumptionSpec::Nhoi { xi },
            AssumptionKind::MarginalNhoi { subset } => AssumptionSpec::MarginalNhoi {
                subset: subset.iter().map(|&i| names[i].clone()).collect(),
                xi,
            },
        }
    }
}

impl fmt::Display for AssumptionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssumptionSpec::Nhoi { xi } => write!(f, "nhoi(xi={xi})"),
            AssumptionSpec::MarginalNhoi { subset, xi } => {
                write!(f, "marginal_nhoi({}; xi={xi})", subset.join(","))
            }
        }
    }
}

impl FromStr for AssumptionSpec {
    type Err = MseError;

    /// Accepts JSON, `nhoi`, `nhoi:xi=2`, `marginal_nhoi:ABA,HRW` or
    /// `marginal_nhoi:ABA,HRW:xi=0.8`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or("").trim().to_ascii_lowercase();
        let mut xi = 1.0;
        let mut lists: Option<Vec<String>> = None;
        for part in parts {
            let part = part.trim();
            if let Some(v) = part.strip_prefix("xi=") {
                xi = parse_ratio(v)?;
            } else if lists.is_none() {
                lists = Some(part.split(',').map(|x| x.trim().to_string()).collect());
            } else {
                return Err(MseError::Parse(format!("unexpected assumption field {part:?}")));
            }
        }
        match head.as_str() {
            "nhoi" if lists.is_none() => Ok(AssumptionSpec::Nhoi { xi }),
            "marginal_nhoi" | "marginal" => match lists {
                Some(subset) => Ok(AssumptionSpec::MarginalNhoi { subset, xi }),
                None => Err(MseError::Parse("marginal_nhoi requires a list subset".into())),
            },
            _ => Err(MseError::Parse(format!("unknown assumption {s:?}"))),
        }
    }
}

/// Parses `0.5`, `2/3` or `1 / 2`.
pub fn parse_ratio(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| MseError::Parse(format!("bad number {s:?}")))?;
            let b: f64 = b.trim().parse().map_err(|_| MseError::Parse(format!("bad number {s:?}")))?;
            a / b
        }
        None => s.parse().map_err(|_| MseError::Parse(format!("bad number {s:?}")))?,
    };
    if !value.is_finite() {
        return Err(MseError::Parse(format!("bad number {s:?}")));
    }
    Ok(value)
}
