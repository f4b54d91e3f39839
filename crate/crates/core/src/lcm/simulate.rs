use std::io::Write;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::LatentClassModel;
use crate::contingency::ObservedTable;
use crate::error::{MseError, Result};
use crate::scalar::{compensated_sum, Real};

/// Multinomial draw of the complete table by sequential binomial conditioning.
/// Returns the observed table and the realized unobserved count.
pub fn simulate_table<T: Real, R: Rng + ?Sized>(
    lcm: &LatentClassModel<T>,
    big_n: u64,
    rng: &mut R,
) -> Result<(ObservedTable, u64)> {
    if big_n == 0 {
        return Err(MseError::InvalidInput("population size must be at least 1".into()));
    }
    let probs: Vec<f64> = lcm.full_probs().into_iter().map(Real::as_f64).collect();
    let mut counts = vec![0u64; probs.len()];
    let mut left = big_n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i == probs.len() - 1 {
            counts[i] = left;
            break;
        }
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let draw = Binomial::new(left, cond)
            .map_err(|e| MseError::InvalidInput(e.to_string()))?
            .sample(rng);
        counts[i] = draw;
        left -= draw;
        mass -= p;
    }
    let n0 = counts[0];
    let table = ObservedTable::new(ObservedTable::default_names(lcm.k()), counts[1..].to_vec())
        .map_err(|_| MseError::InvalidInput(format!("no individual observed out of N={big_n}")))?;
    Ok((table, n0))
}

/// What the study scores the estimator against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    #[default]
    PopulationSize,
    /// `pi0`, obtained from estimates of `N` through `1 - n/N`.
    UnobservedProb,
}

impl FromStr for Estimand {
    type Err = MseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" | "population_size" => Ok(Estimand::PopulationSize),
            "pi0" | "unobserved_prob" => Ok(Estimand::UnobservedProb),
            other => Err(MseError::Parse(format!("unknown estimand {other:?}"))),
        }
    }
}

/// An estimator's answer on the `N` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepEstimate {
    pub point: f64,
    /// `(level, lo, hi)`, one entry per requested level.
    pub intervals: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub big_n: u64,
    pub reps: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub estimand: Estimand,
}

impl StudyConfig {
    pub fn new(big_n: u64, reps: usize, seed: u64) -> Self {
        Self {
            big_n,
            reps,
            seed,
            levels: vec![0.95, 0.5],
            estimand: Estimand::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub n: Option<u64>,
    pub true_n0: Option<u64>,
    pub error: Option<String>,
    /// On the estimand's scale.
    pub estimate: Option<RepEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub coverage: f64,
    pub mean_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub big_n: u64,
    pub estimand: Estimand,
    pub truth: f64,
    pub reps: usize,
    pub failures: usize,
    pub mean_point: f64,
    pub levels: Vec<LevelSummary>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub records: Vec<RepRecord>,
    pub summary: StudySummary,
}

fn to_estimand(x: f64, n: u64, estimand: Estimand) -> f64 {
    match estimand {
        Estimand::PopulationSize => x,
        Estimand::UnobservedProb => 1.0 - n as f64 / x,
    }
}

/// Repeated sampling from `lcm`; the estimator receives each simulated table and
/// a per-replication seed. Replications run in parallel on independent substreams.
pub fn simulation_study<T, F>(lcm: &LatentClassModel<T>, cfg: &StudyConfig, estimator: F) -> Result<StudyResult>
where
    T: Real,
    F: Fn(&ObservedTable, u64) -> Result<RepEstimate> + Sync,
{
    if cfg.reps == 0 {
        return Err(MseError::InvalidInput("need at least one replication".into()));
    }
    if let Some(l) = cfg.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(MseError::InvalidInput(format!("interval level {l} not in (0,1)")));
    }
    let truth = match cfg.estimand {
        Estimand::PopulationSize => cfg.big_n as f64,
        Estimand::UnobservedProb => lcm.full_probs()[0].as_f64(),
    };
    let records: Vec<RepRecord> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(rep as u64);
            let (table, n0) = match simulate_table(lcm, cfg.big_n, &mut rng) {
                Ok(v) => v,
                Err(e) => {
                    return RepRecord { rep, n: None, true_n0: None, error: Some(e.name().into()), estimate: None }
                }
            };
            let rep_seed = rng.next_u64();
            let n = table.n();
            let (estimate, error) = match estimator(&table, rep_seed) {
                Ok(est) => {
                    let conv = |x| to_estimand(x, n, cfg.estimand);
                    let intervals = cfg
                        .levels
                        .iter()
                        .map(|&level| {
                            est.intervals
                                .iter()
                                .find(|(l, _, _)| (l - level).abs() < 1e-12)
                                .map(|&(l, lo, hi)| (l, conv(lo), conv(hi)))
                                .ok_or(level)
                        })
                        .collect::<std::result::Result<Vec<_>, f64>>();
                    match intervals {
                        Ok(intervals) => (Some(RepEstimate { point: conv(est.point), intervals }), None),
                        Err(level) => (None, Some(format!("MissingInterval({level})"))),
                    }
                }
                Err(e) => (None, Some(e.name().to_string())),
            };
            RepRecord { rep, n: Some(n), true_n0: Some(n0), error, estimate }
        })
        .collect();

    let ok: Vec<&RepEstimate> = records.iter().filter_map(|r| r.estimate.as_ref()).collect();
    let count = ok.len() as f64;
    let mean = |xs: Vec<f64>| if xs.is_empty() { f64::NAN } else { compensated_sum(xs) / count };
    let levels = cfg
        .levels
        .iter()
        .enumerate()
        .map(|(i, &level)| LevelSummary {
            level,
            coverage: mean(
                ok.iter()
                    .map(|e| {
                        let (_, lo, hi) = e.intervals[i];
                        f64::from(u8::from(lo <= truth && truth <= hi))
                    })
                    .collect(),
            ),
            mean_width: mean(ok.iter().map(|e| e.intervals[i].2 - e.intervals[i].1).collect()),
        })
        .collect();
    let summary = StudySummary {
        big_n: cfg.big_n,
        estimand: cfg.estimand,
        truth,
        reps: cfg.reps,
        failures: cfg.reps - ok.len(),
        mean_point: mean(ok.iter().map(|e| e.point).collect()),
        levels,
        seed: cfg.seed,
    };
    Ok(StudyResult { records, summary })
}

fn level_tag(level: f64) -> String {
    format!("{}", (level * 100.0).round())
}

impl StudyResult {
    /// One row per replication.
    pub fn write_reps_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec!["rep".to_string(), "n".into(), "true_n0".into(), "point".into()];
        for l in &self.summary.levels {
            let tag = level_tag(l.level);
            header.push(format!("lo_{tag}"));
            header.push(format!("hi_{tag}"));
        }
        header.push("error".into());
        w.write_record(&header)?;
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let mut row = vec![r.rep.to_string(), opt(r.n), opt(r.true_n0)];
            match &r.estimate {
                Some(e) => {
                    row.push(format!("{}", e.point));
                    for (_, lo, hi) in &e.intervals {
                        row.push(format!("{lo}"));
                        row.push(format!("{hi}"));
                    }
                }
                None => row.extend(std::iter::repeat_n(String::new(), 1 + 2 * self.summary.levels.len())),
            }
            row.push(r.error.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Header plus one row: `N, mean point, coverage and mean width per level`.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let s = &self.summary;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec!["N".to_string(), "mean_point".into()];
        let mut row = vec![s.big_n.to_string(), format!("{}", s.mean_point)];
        for l in &s.levels {
            let tag = level_tag(l.level);
            header.push(format!("coverage_{tag}"));
            header.push(format!("mean_width_{tag}"));
            row.push(format!("{}", l.coverage));
            row.push(format!("{}", l.mean_width));
        }
        header.extend(["failures".to_string(), "seed".into()]);
        row.extend([s.failures.to_string(), s.seed.to_string()]);
        w.write_record(&header)?;
        w.write_record(&row)?;
        w.flush()?;
        Ok(())
    }
}
