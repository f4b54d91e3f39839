use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dirichlet::{draw_one, flat_alpha, posterior_shapes};
use super::prior::NPrior;
use super::rejection::{low_acceptance_warning, screen, Tally};
use crate::assumptions::IdentifyingAssumption;
use crate::contingency::{CellProbs, ObservedTable};
use crate::error::{MseError, Result};
use crate::scalar::compensated_sum;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_DRAWS: usize = 200_000;
pub const DEFAULT_CHUNK: usize = 8_192;
/// Stream offset separating the filtering substreams from the sampling ones.
const FILTER_STREAMS: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub n_draws: Vec<u64>,
    pub pi0_draws: Vec<f64>,
    pub acceptance_rate: f64,
    pub seed: u64,
    /// Working draws examined.
    pub t: usize,
    pub degenerate: usize,
}

impl PosteriorDraws {
    pub fn warning(&self) -> Option<String> {
        low_acceptance_warning(self.acceptance_rate)
    }

    pub fn summarize(&self, levels: &[f64]) -> Result<PosteriorSummary> {
        let values: Vec<f64> = self.n_draws.iter().map(|&n| n as f64).collect();
        summarize(&values, levels)
    }

    /// CSV of `t,N,pi0`, one row per accepted draw.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["t", "N", "pi0"])?;
        for (i, (n, p)) in self.n_draws.iter().zip(&self.pi0_draws).enumerate() {
            w.write_record([(i + 1).to_string(), n.to_string(), format!("{p:.12}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub median: f64,
    pub intervals: Vec<CredibleInterval>,
}

impl PosteriorSummary {
    pub fn interval(&self, level: f64) -> Option<&CredibleInterval> {
        self.intervals.iter().find(|c| (c.level - level).abs() < 1e-12)
    }
}

/// Quantile by linear interpolation between order statistics (`h = (n-1)p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64], levels: &[f64]) -> Result<PosteriorSummary> {
    if values.is_empty() {
        return Err(MseError::NoAcceptedDraws);
    }
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(MseError::InvalidInput(format!("interval level {l} not in (0,1)")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = compensated_sum(values.iter().copied()) / values.len() as f64;
    let intervals = levels
        .iter()
        .map(|&level| {
            let tail = (1.0 - level) / 2.0;
            CredibleInterval {
                level,
                lo: quantile_sorted(&sorted, tail),
                hi: quantile_sorted(&sorted, 1.0 - tail),
            }
        })
        .collect();
    Ok(PosteriorSummary {
        mean,
        median: quantile_sorted(&sorted, 0.5),
        intervals,
    })
}

/// One draw of `N` per accepted `pi~`, recomputing `T(pi~)`.
pub fn posterior_n<R: Rng + ?Sized>(
    accepted: &[CellProbs<f64>],
    a: &IdentifyingAssumption<f64>,
    prior: &NPrior,
    n: u64,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    if accepted.is_empty() {
        return Err(MseError::NoAcceptedDraws);
    }
    let mut n_draws = Vec::with_capacity(accepted.len());
    let mut pi0_draws = Vec::with_capacity(accepted.len());
    for d in accepted {
        let pi0 = a.unobserved_prob(d)?;
        n_draws.push(prior.draw_n(n, pi0, rng)?);
        pi0_draws.push(pi0);
    }
    Ok(PosteriorDraws {
        n_draws,
        pi0_draws,
        acceptance_rate: 1.0,
        seed: 0,
        t: accepted.len(),
        degenerate: 0,
    })
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub draws: usize,
    pub seed: u64,
    pub chunk_size: usize,
    /// Dirichlet prior weights; all ones when absent.
    pub alpha: Option<Vec<f64>>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            draws: DEFAULT_DRAWS,
            seed: DEFAULT_SEED,
            chunk_size: DEFAULT_CHUNK,
            alpha: None,
        }
    }
}

impl SamplerConfig {
    fn check(&self) -> Result<()> {
        if self.draws == 0 || self.chunk_size == 0 {
            return Err(MseError::InvalidInput("draws and chunk size must be positive".into()));
        }
        Ok(())
    }
}

/// Dirichlet working draws, generated in fixed-size chunks on independent
/// substreams so the result does not depend on the number of threads.
pub fn sample_working_draws(table: &ObservedTable, cfg: &SamplerConfig) -> Result<Vec<CellProbs<f64>>> {
    cfg.check()?;
    let alpha = cfg.alpha.clone().unwrap_or_else(|| flat_alpha(table.k()));
    let shapes = posterior_shapes(table, &alpha)?;
    let chunks = cfg.draws.div_ceil(cfg.chunk_size);
    let parts: Vec<Result<Vec<CellProbs<f64>>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(cfg.seed, c as u64);
            let len = cfg.chunk_size.min(cfg.draws - c * cfg.chunk_size);
            (0..len).map(|_| draw_one(table.k(), &shapes, &mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(cfg.draws);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Rejection step followed by one `N` draw per kept `pi~`, chunked like [`sample_working_draws`].
pub fn posterior_from_draws(
    draws: &[CellProbs<f64>],
    a: &IdentifyingAssumption<f64>,
    prior: &NPrior,
    n: u64,
    seed: u64,
    chunk_size: usize,
) -> Result<PosteriorDraws> {
    if chunk_size == 0 {
        return Err(MseError::InvalidInput("chunk size must be positive".into()));
    }
    let log_max = prior.log_evidence_max(n)?;
    let parts = draws
        .par_chunks(chunk_size)
        .enumerate()
        .map(|(c, chunk)| {
            let mut rng = chunk_rng(seed, FILTER_STREAMS + c as u64);
            let mut tally = Tally::default();
            let mut ns = Vec::new();
            let mut pis = Vec::new();
            for d in chunk {
                if let Some(pi0) = screen(d, a, prior, n, log_max, &mut tally, &mut rng)? {
                    ns.push(prior.draw_n(n, pi0, &mut rng)?);
                    pis.push(pi0);
                }
            }
            Ok((ns, pis, tally))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut n_draws = Vec::new();
    let mut pi0_draws = Vec::new();
    let mut degenerate = 0;
    for (ns, pis, tally) in parts {
        n_draws.extend(ns);
        pi0_draws.extend(pis);
        degenerate += tally.degenerate;
    }
    if n_draws.is_empty() {
        return Err(MseError::NoAcceptedDraws);
    }
    Ok(PosteriorDraws {
        acceptance_rate: n_draws.len() as f64 / draws.len() as f64,
        n_draws,
        pi0_draws,
        seed,
        t: draws.len(),
        degenerate,
    })
}

/// Flat-Dirichlet (or user-weighted) posterior for `N` under one assumption and prior.
pub fn run_dirichlet(
    table: &ObservedTable,
    a: &IdentifyingAssumption<f64>,
    prior: &NPrior,
    cfg: &SamplerConfig,
) -> Result<PosteriorDraws> {
    prior.log_evidence_max(table.n())?;
    let draws = sample_working_draws(table, cfg)?;
    posterior_from_draws(&draws, a, prior, table.n(), cfg.seed, cfg.chunk_size)
}
