//! Priors for the population size `N`.
//!
//! For each prior we need the evidence `p(n | pi0) = sum_N L1(N, pi0 | n) p(N)`
//! with `L1 = C(N, n) pi0^(N-n) (1-pi0)^n`, and exact draws from
//! `p(N | n, pi0)`:
//!
//! | prior | `p(N | n, pi0)` | `p(n | pi0)` |
//! |---|---|---|
//! | Poisson(M) | `n + Pois(pi0 M)` | `Pois((1-pi0) M)` |
//! | NB(M, a) | `n + NB(n+a, M pi0/(M+a))` | `NB(a, (1-pi0)M/((1-pi0)M+a))` |
//! | Bin(M, q) | `n + Bin(M-n, pi0 q/(pi0 q + 1 - q))` | `Bin(M, (1-pi0) q)` |
//! | `(N-l)!/N!` | `n + NB(n-l+1, pi0)` | `∝ (n-l)!/n! (1-pi0)^(l-1)` |
//!
//! `NB(r, p)` here always means the pmf `C(k+r-1, k) p^k (1-p)^r`, k = 0, 1, ...,
//! with mean `r p / (1-p)`; the prior `NB(M, a)` is `NB(a, M/(M+a))`, which has mean `M`.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{MseError, Result};

/// Lower and upper limits of the `pi0` search in [`NPrior::log_evidence_max`].
const PI0_EDGE: f64 = 1e-12;
const GOLDEN_TOL: f64 = 1e-10;
/// Multiplicative slack on the evidence maximum so acceptance ratios stay at or below 1.
const MAX_SAFETY: f64 = 1e-9;
const GRID_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NPrior {
    Poisson { mean: f64 },
    NegBinomial { mean: f64, a: f64 },
    Binomial { size: u64, q: f64 },
    /// `p(N) ∝ (N-l)!/N!`: `l = 0` is the improper uniform prior, `l = 1` the scale prior `1/N`.
    FienbergClass { ell: u64 },
    /// Arbitrary prior on `0..=N_max` given by (unnormalized) weights.
    Truncated(TruncatedPrior),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPrior {
    /// `weights[N]` for `N = 0..=N_max`.
    pub weights: Vec<f64>,
}

impl TruncatedPrior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MseError::InvalidInput("truncated prior needs finite nonnegative weights".into()));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(MseError::InvalidInput("truncated prior has no mass".into()));
        }
        Ok(Self { weights })
    }

    /// Beta-binomial(N_max, alpha, beta) prior.
    pub fn beta_binomial(n_max: u64, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(MseError::InvalidInput("beta-binomial needs alpha, beta > 0".into()));
        }
        let ln_beta = |a: f64, b: f64| ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
        let m = n_max as f64;
        let weights = (0..=n_max)
            .map(|k| {
                let k = k as f64;
                (ln_choose(m, k) + ln_beta(k + alpha, m - k + beta) - ln_beta(alpha, beta)).exp()
            })
            .collect();
        Self::new(weights)
    }

    pub fn n_max(&self) -> u64 {
        self.weights.len() as u64 - 1
    }

    /// Reads `N,weight` rows; `N` values not listed get weight zero.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut weights = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = || MseError::Parse(format!("row {}: expected N,weight", row + 1));
            if rec.len() != 2 {
                return Err(bad());
            }
            let big_n: usize = rec[0].parse().map_err(|_| bad())?;
            let w: f64 = rec[1].parse().map_err(|_| bad())?;
            if weights.len() <= big_n {
                weights.resize(big_n + 1, 0.0);
            }
            weights[big_n] = w;
        }
        Self::new(weights)
    }
}

fn ln_factorial(x: f64) -> f64 {
    ln_gamma(x + 1.0)
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn check_pi0(pi0: f64) -> Result<()> {
    if !(pi0 > 0.0 && pi0 < 1.0) {
        return Err(MseError::InvalidPi0(pi0));
    }
    Ok(())
}

impl NPrior {
    pub fn scale() -> Self {
        NPrior::FienbergClass { ell: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            NPrior::Poisson { mean } => *mean > 0.0 && mean.is_finite(),
            NPrior::NegBinomial { mean, a } => {
                *mean > 0.0 && *a > 0.0 && mean.is_finite() && a.is_finite()
            }
            NPrior::Binomial { q, .. } => *q > 0.0 && *q < 1.0,
            NPrior::FienbergClass { .. } | NPrior::Truncated(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(MseError::InvalidInput(format!("invalid prior parameters {self:?}")))
        }
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, NPrior::FienbergClass { .. })
    }

    fn check_feasible(&self, n: u64) -> Result<()> {
        match self {
            NPrior::Binomial { size, .. } if n > *size => Err(MseError::Infeasible(format!(
                "observed n={n} exceeds binomial size {size}"
            ))),
            NPrior::FienbergClass { ell } if *ell > n => Err(MseError::Infeasible(format!(
                "Fienberg-class prior with l={ell} needs n >= l, got n={n}"
            ))),
            NPrior::Truncated(t) if n > t.n_max() => Err(MseError::Infeasible(format!(
                "observed n={n} exceeds N_max={}",
                t.n_max()
            ))),
            _ => Ok(()),
        }
    }

    /// `ln p(n | pi0)`; for Fienberg-class priors, up to a constant not depending on `n` or `pi0`.
    pub fn log_evidence(&self, pi0: f64, n: u64) -> Result<f64> {
        check_pi0(pi0)?;
        self.validate()?;
        self.check_feasible(n)?;
        Ok(self.log_evidence_unchecked(pi0, n))
    }

    fn log_evidence_unchecked(&self, pi0: f64, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            NPrior::Poisson { mean } => {
                let lambda = (1.0 - pi0) * mean;
                nf * lambda.ln() - lambda - ln_factorial(nf)
            }
            NPrior::NegBinomial { mean, a } => {
                let scaled = (1.0 - pi0) * mean;
                let denom = scaled + a;
                ln_gamma(nf + a) - ln_gamma(*a) - ln_factorial(nf)
                    + nf * (scaled / denom).ln()
                    + a * (a / denom).ln()
            }
            NPrior::Binomial { size, q } => {
                let m = *size as f64;
                let p = (1.0 - pi0) * q;
                ln_choose(m, nf) + nf * p.ln() + (m - nf) * (-p).ln_1p()
            }
            NPrior::FienbergClass { ell } => {
                let l = *ell as f64;
                let constant = ln_factorial(nf - l) - ln_factorial(nf);
                if *ell == 1 {
                    constant
                } else {
                    constant + (l - 1.0) * (-pi0).ln_1p()
                }
            }
            NPrior::Truncated(t) => {
                let terms = (n..=t.n_max()).filter_map(|big| {
                    let w = t.weights[big as usize];
                    (w > 0.0).then(|| {
                        let bf = big as f64;
                        ln_choose(bf, nf) + (bf - nf) * pi0.ln() + nf * (-pi0).ln_1p() + w.ln()
                    })
                });
                log_sum_exp(terms)
            }
        }
    }

    pub fn evidence(&self, pi0: f64, n: u64) -> Result<f64> {
        Ok(self.log_evidence(pi0, n)?.exp())
    }

    /// `ln sup_{pi0} p(n | pi0)`, inflated by a tiny safety factor where it is found numerically.
    pub fn log_evidence_max(&self, n: u64) -> Result<f64> {
        self.validate()?;
        self.check_feasible(n)?;
        let nf = n as f64;
        match self {
            NPrior::Poisson { mean } => {
                let lambda = nf.min(*mean);
                Ok(nf * lambda.ln() - lambda - ln_factorial(nf))
            }
            NPrior::FienbergClass { ell: 0 } => Err(MseError::UnboundedEvidence),
            NPrior::FienbergClass { ell } => {
                // (1 - pi0)^(l-1) is largest as pi0 -> 0
                Ok(ln_factorial(nf - *ell as f64) - ln_factorial(nf))
            }
            _ => {
                let f = |pi0: f64| self.log_evidence_unchecked(pi0, n);
                Ok(maximize_on_unit(f) + MAX_SAFETY.ln_1p())
            }
        }
    }

    /// Acceptance probability `p(n | pi0) / max p(n | .)`, clamped to `[0, 1]`.
    pub fn acceptance_ratio(&self, pi0: f64, log_max: f64, n: u64) -> Result<f64> {
        let r = (self.log_evidence(pi0, n)? - log_max).exp();
        Ok(if r.is_nan() { 0.0 } else { r.clamp(0.0, 1.0) })
    }

    /// Exact draw from `p(N | n, pi0)`.
    pub fn draw_n<R: Rng + ?Sized>(&self, n: u64, pi0: f64, rng: &mut R) -> Result<u64> {
        check_pi0(pi0)?;
        self.validate()?;
        self.check_feasible(n)?;
        let nf = n as f64;
        let extra = match self {
            NPrior::Poisson { mean } => sample_poisson(pi0 * mean, rng),
            NPrior::NegBinomial { mean, a } => sample_neg_binomial(nf + a, mean * pi0 / (mean + a), rng),
            NPrior::Binomial { size, q } => {
                let p = pi0 * q / (pi0 * q + 1.0 - q);
                Binomial::new(size - n, p)
                    .map_err(|e| MseError::InvalidInput(e.to_string()))?
                    .sample(rng)
            }
            NPrior::FienbergClass { ell } => sample_neg_binomial((n - ell + 1) as f64, pi0, rng),
            NPrior::Truncated(t) => {
                let logs: Vec<f64> = (n..=t.n_max())
                    .map(|big| {
                        let w = t.weights[big as usize];
                        if w > 0.0 {
                            let bf = big as f64;
                            ln_choose(bf, nf) + (bf - nf) * pi0.ln() + w.ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
                let total: f64 = weights.iter().sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick as u64
            }
        };
        Ok(n + extra)
    }

    /// `ln p(N)` up to normalization, for proper priors.
    pub fn log_prior(&self, big_n: u64) -> f64 {
        let nf = big_n as f64;
        match self {
            NPrior::Poisson { mean } => nf * mean.ln() - mean - ln_factorial(nf),
            NPrior::NegBinomial { mean, a } => {
                ln_gamma(nf + a) - ln_gamma(*a) - ln_factorial(nf)
                    + nf * (mean / (mean + a)).ln()
                    + a * (a / (mean + a)).ln()
            }
            NPrior::Binomial { size, q } => {
                if big_n > *size {
                    f64::NEG_INFINITY
                } else {
                    let m = *size as f64;
                    ln_choose(m, nf) + nf * q.ln() + (m - nf) * (-q).ln_1p()
                }
            }
            NPrior::FienbergClass { ell } => {
                if big_n < *ell {
                    f64::NEG_INFINITY
                } else {
                    ln_factorial(nf - *ell as f64) - ln_factorial(nf)
                }
            }
            NPrior::Truncated(t) => {
                let total: f64 = t.weights.iter().sum();
                t.weights
                    .get(big_n as usize)
                    .map_or(f64::NEG_INFINITY, |w| (w / total).ln())
            }
        }
    }

    /// Smallest `N` whose prior CDF reaches `p`, by pmf summation. Proper priors only.
    pub fn prior_quantile(&self, p: f64) -> Result<u64> {
        self.validate()?;
        if !self.is_proper() {
            return Err(MseError::InvalidInput("quantiles need a proper prior".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(MseError::InvalidInput(format!("probability {p} not in (0,1)")));
        }
        let mut cdf = 0.0;
        let mut big_n = 0u64;
        loop {
            cdf += self.log_prior(big_n).exp();
            if cdf >= p {
                return Ok(big_n);
            }
            big_n += 1;
            if big_n > 1 << 40 {
                return Err(MseError::InvalidInput("quantile search did not converge".into()));
            }
        }
    }
}

impl fmt::Display for NPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NPrior::Poisson { mean } => write!(f, "poisson:{mean}"),
            NPrior::NegBinomial { mean, a } => write!(f, "nb:{mean},{a}"),
            NPrior::Binomial { size, q } => write!(f, "binomial:{size},{q}"),
            NPrior::FienbergClass { ell: 0 } => write!(f, "uniform"),
            NPrior::FienbergClass { ell: 1 } => write!(f, "scale"),
            NPrior::FienbergClass { ell } => write!(f, "fienberg:{ell}"),
            NPrior::Truncated(t) => write!(f, "truncated(N_max={})", t.n_max()),
        }
    }
}

impl FromStr for NPrior {
    type Err = MseError;

    /// `scale`, `uniform`, `fienberg:l`, `poisson:M`, `nb:M,a`, `binomial:M,q`,
    /// `beta_binomial:N_max,alpha,beta`, or the JSON form.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let p: NPrior = serde_json::from_str(s)?;
            p.validate()?;
            return Ok(p);
        }
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(',').map(str::trim).collect() };
        let bad = || MseError::Parse(format!("cannot parse prior {s:?}"));
        let num = |i: usize| -> Result<f64> { args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let int = |i: usize| -> Result<u64> { args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let arity = |k: usize| if args.len() == k { Ok(()) } else { Err(bad()) };
        let prior = match head.trim().to_ascii_lowercase().as_str() {
            "scale" => {
                arity(0)?;
                NPrior::scale()
            }
            "uniform" => {
                arity(0)?;
                NPrior::FienbergClass { ell: 0 }
            }
            "fienberg" => {
                arity(1)?;
                NPrior::FienbergClass { ell: int(0)? }
            }
            "poisson" => {
                arity(1)?;
                NPrior::Poisson { mean: num(0)? }
            }
            "nb" | "negbin" | "neg_binomial" | "negative_binomial" => {
                arity(2)?;
                NPrior::NegBinomial { mean: num(0)?, a: num(1)? }
            }
            "binomial" => {
                arity(2)?;
                NPrior::Binomial { size: int(0)?, q: num(1)? }
            }
            "beta_binomial" | "betabinomial" => {
                arity(3)?;
                NPrior::Truncated(TruncatedPrior::beta_binomial(int(0)?, num(1)?, num(2)?)?)
            }
            _ => return Err(bad()),
        };
        prior.validate().map_err(|e| MseError::Parse(e.to_string()))?;
        Ok(prior)
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Maximum of `f` over `pi0` in `(PI0_EDGE, 1 - PI0_EDGE)`: grid scan, then
/// golden-section refinement around the best grid point.
fn maximize_on_unit(f: impl Fn(f64) -> f64) -> f64 {
    let lo = PI0_EDGE;
    let hi = 1.0 - PI0_EDGE;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| lo + i as f64 * step).collect();
    let (best_i, mut best) = grid
        .iter()
        .map(|&x| f(x))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(GRID_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    for v in [fc, fd, f(a), f(b), f(lo), f(hi)] {
        if v > best {
            best = v;
        }
    }
    best
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    Poisson::new(lambda)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}

/// Draw from `C(k+r-1, k) p^k (1-p)^r` as a gamma-Poisson mixture.
pub(crate) fn sample_neg_binomial<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> u64 {
    if !(p > 0.0) {
        return 0;
    }
    let rate = Gamma::new(r, p / (1.0 - p))
        .expect("positive gamma parameters")
        .sample(rng);
    sample_poisson(rate, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poisson_evidence_value() {
        let p = NPrior::Poisson { mean: 10.0 };
        let e = p.evidence(0.5, 5).unwrap();
        // 5^5 e^-5 / 5!
        let exact = 5f64.powi(5) * (-5f64).exp() / 120.0;
        assert!((e - exact).abs() < 1e-12);
        assert!((e - 0.175467).abs() < 1e-6);
        assert!((p.log_evidence_max(5).unwrap() - exact.ln()).abs() < 1e-12);
    }

    #[test]
    fn scale_prior_evidence_is_flat() {
        let p = NPrior::scale();
        let a = p.log_evidence(0.1, 100).unwrap();
        let b = p.log_evidence(0.9, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(p.log_evidence_max(100).unwrap(), a);
        assert_eq!(p.acceptance_ratio(0.37, a, 100).unwrap(), 1.0);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let b = NPrior::Binomial { size: 4, q: 0.5 };
        assert!(matches!(b.evidence(0.5, 5), Err(MseError::Infeasible(_))));
        assert!(matches!(
            NPrior::FienbergClass { ell: 0 }.log_evidence_max(10),
            Err(MseError::UnboundedEvidence)
        ));
        assert!(matches!(
            NPrior::FienbergClass { ell: 12 }.draw_n(10, 0.5, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(MseError::Infeasible(_))
        ));
    }

    #[test]
    fn golden_section_matches_closed_form_nb_mode() {
        // NB evidence is maximized where p = n/(n+a)
        let (mean, a, n) = (10000.0, 1.6, 4400u64);
        let prior = NPrior::NegBinomial { mean, a };
        let p_star = n as f64 / (n as f64 + a);
        let pi0_star = 1.0 - a * p_star / ((1.0 - p_star) * mean);
        let exact = prior.log_evidence(pi0_star, n).unwrap();
        let found = prior.log_evidence_max(n).unwrap();
        assert!(found >= exact);
        assert!(found - exact < 1e-8);
    }

    #[test]
    fn ratios_never_exceed_one() {
        let prior = NPrior::Binomial { size: 50, q: 0.7 };
        let m = prior.log_evidence_max(20).unwrap();
        for i in 1..100 {
            let r = prior.acceptance_ratio(i as f64 / 100.0, m, 20).unwrap();
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn poisson_limit_puts_mass_at_n() {
        let prior = NPrior::Poisson { mean: 100.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(prior.draw_n(40, 1e-12, &mut rng).unwrap(), 40);
        }
    }

    #[test]
    fn parse_and_display() {
        for text in ["scale", "uniform", "fienberg:3", "poisson:500", "nb:10000,1.6", "binomial:100,0.5"] {
            let p: NPrior = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert!("nb:10000".parse::<NPrior>().is_err());
        assert!("poisson:-1".parse::<NPrior>().is_err());
        assert!(r#"{"family":"poisson","mean":5}"#.parse::<NPrior>().is_ok());
        let t = TruncatedPrior::from_csv("N,weight\n3,1\n5,2\n".as_bytes()).unwrap();
        assert_eq!(t.weights, vec![0.0, 0.0, 0.0, 1.0, 0.0, 2.0]);
    }

    #[test]
    fn beta_binomial_weights_sum_to_one() {
        let t = TruncatedPrior::beta_binomial(200, 2.0, 3.0).unwrap();
        let s: f64 = t.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-10);
    }
}
