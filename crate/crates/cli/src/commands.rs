use std::path::Path;

use idmse::assumptions::{parse_ratio, AssumptionKind};
use idmse::bayes::{
    import_working_draws, posterior_from_draws, run_dirichlet, sample_working_draws, DrawFormat, NPrior,
    PosteriorSummary, SamplerConfig, TruncatedPrior, DEFAULT_CHUNK, DEFAULT_DRAWS, DEFAULT_SEED,
};
use idmse::contingency::{load_table_path, observed_cells, observed_proportions, smoothed_proportions};
use idmse::freq::{estimate_from_probs, format_point_interval, invert_xi, SweepEntry};
use idmse::lcm::{
    check_conditional_identifiability, counterexample_pair, simulation_study, Estimand, RepEstimate, StudyConfig,
};
use idmse::report::{format_xi, histogram, series_from_sweep, write_histogram_csv, write_series_csv, SeriesPoint, TextTable};
use idmse::{AssumptionSpec, IdentifyingAssumption, LatentClassModel, ObservedProbs, ObservedTable, PopEstimate};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{csv_string, key_values, Report};

/// Prior used for the bundled Kosovo data when none is given.
pub const KOSOVO_DEFAULT_PRIOR: &str = "nb:10000,1.6";
pub const DEFAULT_REPS: usize = 200;
/// Working draws per replication for Bayesian simulation studies.
pub const DEFAULT_STUDY_DRAWS: usize = 20_000;

pub struct Dataset {
    table: ObservedTable,
    source: String,
}

impl Dataset {
    fn json(&self) -> Value {
        json!({
            "source": self.source,
            "lists": self.table.list_names(),
            "n": self.table.n(),
            "checksum": self.table.checksum(),
        })
    }

    fn describe(&self) -> String {
        format!("{} (n = {}, {} lists)", self.source, self.table.n(), self.table.k())
    }

    fn is_kosovo(&self) -> bool {
        self.source == "fixture:kosovo"
    }
}

fn load_data(d: &DataArgs) -> CliResult<Dataset> {
    match (&d.fixture, &d.data) {
        (Some(name), _) => Ok(Dataset {
            table: idmse::fixtures::by_name(name)?,
            source: format!("fixture:{}", name.to_ascii_lowercase()),
        }),
        (None, Some(path)) => Ok(Dataset {
            table: load_table_path(path, d.lists.as_deref(), d.count_column.as_deref().unwrap_or("count"))?,
            source: path.display().to_string(),
        }),
        (None, None) => Err(CliError::Config("provide --fixture or --data".into())),
    }
}

fn parse_assumption(text: Option<&str>, xi: Option<&str>) -> CliResult<AssumptionSpec> {
    let text = text.ok_or_else(|| CliError::Config("--assumption is required".into()))?;
    let mut spec: AssumptionSpec = text.parse()?;
    if let Some(x) = xi {
        spec.set_xi(parse_ratio(x)?);
    }
    Ok(spec)
}

fn parse_prior(text: &str) -> CliResult<NPrior> {
    if let Some(path) = text.strip_prefix("truncated:") {
        let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        return Ok(NPrior::Truncated(TruncatedPrior::from_csv(file)?));
    }
    Ok(text.parse()?)
}

fn resolve_prior(given: Option<&str>, kosovo: bool) -> CliResult<(NPrior, String)> {
    let text = given.unwrap_or(if kosovo { KOSOVO_DEFAULT_PRIOR } else { "scale" });
    let prior = parse_prior(text)?;
    let label = match prior {
        NPrior::Truncated(_) => text.to_string(),
        _ => prior.to_string(),
    };
    Ok((prior, label))
}

fn args_json<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("serializable arguments")
}

struct WorkingDraws {
    draws: Vec<ObservedProbs>,
    seed: u64,
    chunk_size: usize,
    source: Value,
}

fn working_draws(table: &ObservedTable, b: &BayesArgs, add_constant: Option<f64>) -> CliResult<WorkingDraws> {
    let seed = b.seed.unwrap_or(DEFAULT_SEED);
    let chunk_size = b.chunk_size.unwrap_or(DEFAULT_CHUNK);
    if let Some(path) = &b.draws_file {
        if add_constant.is_some() || b.dirichlet_alpha.is_some() {
            return Err(CliError::Config(
                "--add-constant and --dirichlet-alpha do not apply to imported draws".into(),
            ));
        }
        let format: DrawFormat = b.draws_format.as_deref().unwrap_or("observed_probs").parse()?;
        let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let draws = import_working_draws(file, format)?;
        if draws.is_empty() {
            return Err(CliError::Config(format!("{} contains no draws", path.display())));
        }
        if draws[0].k() != table.k() {
            return Err(CliError::Config(format!(
                "draws are for {} lists, the table has {}",
                draws[0].k(),
                table.k()
            )));
        }
        let source = json!({"kind": "file", "path": path.display().to_string(), "format": format, "count": draws.len()});
        return Ok(WorkingDraws { draws, seed, chunk_size, source });
    }
    let alpha = b.dirichlet_alpha.unwrap_or(1.0) + add_constant.unwrap_or(0.0);
    let count = b.draws.unwrap_or(DEFAULT_DRAWS);
    let cfg = SamplerConfig {
        draws: count,
        seed,
        chunk_size,
        alpha: Some(vec![alpha; observed_cells(table.k())]),
    };
    let draws = sample_working_draws(table, &cfg)?;
    let source = json!({"kind": "dirichlet", "alpha": alpha, "count": count});
    Ok(WorkingDraws { draws, seed, chunk_size, source })
}

fn interval_json(e: &PopEstimate) -> Value {
    let (lo, hi) = e.ci_unconditional;
    let (clo, chi) = e.ci_conditional;
    json!({
        "level": e.level,
        "lo": lo,
        "hi": hi,
        "se": e.se_unconditional,
        "lo_conditional": clo,
        "hi_conditional": chi,
        "se_conditional": e.se_conditional,
        "display": e.display_row(),
    })
}

fn level_label(level: f64) -> String {
    format!("{}%", format_xi(level * 100.0))
}

fn posterior_json(s: &PosteriorSummary) -> Value {
    let intervals: Vec<Value> = s
        .intervals
        .iter()
        .map(|c| json!({"level": c.level, "lo": c.lo, "hi": c.hi, "display": format_point_interval(s.mean, (c.lo, c.hi))}))
        .collect();
    json!({"mean": s.mean, "median": s.median, "intervals": intervals})
}

pub fn estimate(raw: EstimateArgs) -> CliResult<(Report, EstimateArgs)> {
    let args = merge_config(raw.clone(), raw.output.config.as_ref())?;
    let args = EstimateArgs { output: raw.output, ..args };
    let ds = load_data(&args.data)?;
    let spec = parse_assumption(args.assumption.as_deref(), args.xi.as_deref())?;
    let a: IdentifyingAssumption = spec.resolve(&ds.table)?;
    let levels = args.level.clone().unwrap_or_else(|| vec![0.95]);
    let seed = args.bayes.seed.unwrap_or(DEFAULT_SEED);
    let mut report = Report::new("estimate", seed, args_json(&args));
    let n = ds.table.n();
    match args.mode.unwrap_or(Mode::Freq) {
        Mode::Freq => {
            let probs = match args.data.add_constant {
                Some(c) => smoothed_proportions(&ds.table, c)?,
                None => observed_proportions(&ds.table),
            };
            let ests = levels
                .iter()
                .map(|&l| estimate_from_probs(n, &probs, &a, l))
                .collect::<Result<Vec<PopEstimate>, _>>()?;
            let first = &ests[0];
            report.json = json!({
                "command": "estimate",
                "mode": "freq",
                "data": ds.json(),
                "assumption": spec,
                "assumption_label": spec.to_string(),
                "add_constant": args.data.add_constant,
                "seed": seed,
                "n": n,
                "pi0": first.pi0_hat,
                "estimate": first.n_hat_real,
                "estimate_floor": first.n_hat_floor,
                "intervals": ests.iter().map(interval_json).collect::<Vec<_>>(),
            });
            let mut rows = vec![
                ("data", ds.describe()),
                ("assumption", spec.to_string()),
                ("pi0", format!("{:.6}", first.pi0_hat)),
            ];
            for e in &ests {
                rows.push(("N", format!("{}  ({} interval)", e.display_row(), level_label(e.level))));
                rows.push((
                    "N, n fixed",
                    format!(
                        "{}  ({} interval)",
                        format_point_interval(e.n_hat_real, e.ci_conditional),
                        level_label(e.level)
                    ),
                ));
            }
            if let Some(c) = args.data.add_constant {
                rows.push(("add-constant", c.to_string()));
            }
            rows.push(("seed", seed.to_string()));
            report.text = key_values(&rows);
            report.csv = csv_string(
                &["level", "point", "lo", "hi", "lo_conditional", "hi_conditional", "pi0", "seed"],
                &ests
                    .iter()
                    .map(|e| {
                        vec![
                            e.level.to_string(),
                            e.n_hat_real.to_string(),
                            e.ci_unconditional.0.to_string(),
                            e.ci_unconditional.1.to_string(),
                            e.ci_conditional.0.to_string(),
                            e.ci_conditional.1.to_string(),
                            e.pi0_hat.to_string(),
                            seed.to_string(),
                        ]
                    })
                    .collect::<Vec<_>>(),
            );
        }
        Mode::Bayes => {
            let (prior, prior_label) = resolve_prior(args.bayes.prior.as_deref(), ds.is_kosovo())?;
            let wd = working_draws(&ds.table, &args.bayes, args.data.add_constant)?;
            let post = posterior_from_draws(&wd.draws, &a, &prior, n, wd.seed, wd.chunk_size)?;
            let summary = post.summarize(&levels)?;
            report.warnings.extend(post.warning());
            let mut doc = json!({
                "command": "estimate",
                "mode": "bayes",
                "data": ds.json(),
                "assumption": spec,
                "assumption_label": spec.to_string(),
                "prior": prior_label,
                "working_draws": wd.source,
                "seed": wd.seed,
                "chunk_size": wd.chunk_size,
                "n": n,
                "acceptance_rate": post.acceptance_rate,
                "accepted": post.n_draws.len(),
                "degenerate": post.degenerate,
                "warning": post.warning(),
            });
            doc.as_object_mut()
                .expect("object")
                .extend(posterior_json(&summary).as_object().expect("object").clone());
            report.json = doc;
            let mut rows = vec![
                ("data", ds.describe()),
                ("assumption", spec.to_string()),
                ("prior", prior_label.clone()),
                (
                    "draws",
                    format!("{} (accepted {}, rate {:.4})", post.t, post.n_draws.len(), post.acceptance_rate),
                ),
            ];
            for c in &summary.intervals {
                rows.push((
                    "N",
                    format!(
                        "{}  (posterior mean, {} interval)",
                        format_point_interval(summary.mean, (c.lo, c.hi)),
                        level_label(c.level)
                    ),
                ));
            }
            rows.push(("median", format!("{}", summary.median.floor())));
            rows.push(("seed", wd.seed.to_string()));
            report.text = key_values(&rows);
            report.csv = csv_string(
                &["level", "mean", "median", "lo", "hi", "acceptance_rate", "seed"],
                &summary
                    .intervals
                    .iter()
                    .map(|c| {
                        vec![
                            c.level.to_string(),
                            summary.mean.to_string(),
                            summary.median.to_string(),
                            c.lo.to_string(),
                            c.hi.to_string(),
                            post.acceptance_rate.to_string(),
                            wd.seed.to_string(),
                        ]
                    })
                    .collect::<Vec<_>>(),
            );
            let mut posterior_csv = Vec::new();
            post.write_csv(&mut posterior_csv)?;
            let values: Vec<f64> = post.n_draws.iter().map(|&v| v as f64).collect();
            let mut hist_csv = Vec::new();
            write_histogram_csv(&mut hist_csv, &histogram(&values, args.bins.unwrap_or(DEFAULT_BINS))?)?;
            report.extra.push(("posterior.csv".into(), posterior_csv));
            report.extra.push(("histogram.csv".into(), hist_csv));
        }
        Mode::Both => return Err(CliError::Config("--mode both is only available for sensitivity".into())),
    }
    Ok((report, args))
}

fn default_bracket(table: &ObservedTable, kind: &AssumptionKind) -> CliResult<(f64, f64)> {
    let (lo, mut hi) = (0.05, 20.0);
    if let AssumptionKind::MarginalNhoi { .. } = kind {
        let probs = observed_proportions::<f64>(table);
        let margin = kind.with_xi(1.0)?.in_domain(&probs)?.margin;
        if margin.is_finite() {
            hi = f64::min(hi, 0.999 * (margin + 1.0));
        }
    }
    Ok((lo, hi))
}

pub fn sensitivity(raw: SensitivityArgs) -> CliResult<(Report, SensitivityArgs)> {
    let args = merge_config(raw.clone(), raw.output.config.as_ref())?;
    let args = SensitivityArgs { output: raw.output, ..args };
    let ds = load_data(&args.data)?;
    let spec = parse_assumption(args.assumption.as_deref(), None)?;
    let kind = spec.kind_for(&ds.table)?;
    let level = args.level.unwrap_or(0.95);
    let seed = args.bayes.seed.unwrap_or(DEFAULT_SEED);
    let mode = args.mode.unwrap_or(Mode::Freq);
    let n = ds.table.n();
    let mut report = Report::new("sensitivity", seed, args_json(&args));

    if let Some(target) = args.invert {
        if mode != Mode::Freq || args.data.add_constant.is_some() {
            return Err(CliError::Config("--invert works with --mode freq on unsmoothed data".into()));
        }
        let bracket = match args.bracket.as_deref() {
            Some([lo, hi]) => (*lo, *hi),
            Some(_) => return Err(CliError::Config("--bracket takes LO,HI".into())),
            None => default_bracket(&ds.table, &kind)?,
        };
        let xi = invert_xi::<f64>(&ds.table, &kind, target, bracket)?;
        let est = estimate_from_probs(n, &observed_proportions(&ds.table), &kind.with_xi(xi)?, level)?;
        let family = AssumptionSpec::from_kind(&kind, xi, ds.table.list_names());
        report.json = json!({
            "command": "sensitivity",
            "data": ds.json(),
            "assumption": family,
            "target": target,
            "bracket": [bracket.0, bracket.1],
            "xi": xi,
            "estimate": est.n_hat_real,
            "display": est.display_row(),
            "seed": seed,
        });
        report.text = key_values(&[
            ("data", ds.describe()),
            ("assumption", family.to_string()),
            ("target", target.to_string()),
            ("bracket", format!("[{}, {}]", format_xi(bracket.0), format_xi(bracket.1))),
            ("xi", format!("{xi:.4}")),
            ("N at xi", est.display_row()),
            ("seed", seed.to_string()),
        ]);
        report.csv = csv_string(
            &["target", "xi", "point", "lo", "hi", "seed"],
            &[vec![
                target.to_string(),
                xi.to_string(),
                est.n_hat_real.to_string(),
                est.ci_unconditional.0.to_string(),
                est.ci_unconditional.1.to_string(),
                seed.to_string(),
            ]],
        );
        return Ok((report, args));
    }

    let xis = args
        .xis
        .as_ref()
        .ok_or_else(|| CliError::Config("provide --xis or --invert".into()))?
        .iter()
        .map(|s| parse_ratio(s))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut table = TextTable::new("xi", xis.iter().map(|&x| format_xi(x)).collect());
    let mut series: Vec<SeriesPoint> = Vec::new();
    let mut doc = json!({
        "command": "sensitivity",
        "data": ds.json(),
        "family": AssumptionSpec::from_kind(&kind, 1.0, ds.table.list_names()),
        "level": level,
        "seed": seed,
    });
    if matches!(mode, Mode::Freq | Mode::Both) {
        let probs = match args.data.add_constant {
            Some(c) => smoothed_proportions(&ds.table, c)?,
            None => observed_proportions(&ds.table),
        };
        let entries: Vec<SweepEntry<f64>> = xis
            .iter()
            .map(|&xi| SweepEntry {
                xi,
                result: kind.with_xi(xi).and_then(|a| estimate_from_probs(n, &probs, &a, level)),
            })
            .collect();
        table.push_row("Frequentist", idmse::report::sweep_cells(&entries));
        let rows: Vec<Value> = entries
            .iter()
            .map(|e| match &e.result {
                Ok(est) => json!({"xi": e.xi, "estimate": est.n_hat_real, "lo": est.ci_unconditional.0,
                    "hi": est.ci_unconditional.1, "display": est.display_row(), "error": null}),
                Err(err) => json!({"xi": e.xi, "error": err.name(), "message": err.to_string()}),
            })
            .collect();
        doc["frequentist"] = Value::Array(rows);
        series.extend(series_from_sweep("freq", &entries));
    }
    if matches!(mode, Mode::Bayes | Mode::Both) {
        let (prior, prior_label) = resolve_prior(args.bayes.prior.as_deref(), ds.is_kosovo())?;
        prior.log_evidence_max(n)?;
        let wd = working_draws(&ds.table, &args.bayes, args.data.add_constant)?;
        let mut cells = Vec::new();
        let mut rows = Vec::new();
        for &xi in &xis {
            let run = kind.with_xi(xi).and_then(|a| {
                let post = posterior_from_draws(&wd.draws, &a, &prior, n, wd.seed, wd.chunk_size)?;
                Ok((post.summarize(&[level])?, post.acceptance_rate))
            });
            match run {
                Ok((s, rate)) => {
                    let c = &s.intervals[0];
                    cells.push(format_point_interval(s.mean, (c.lo, c.hi)));
                    rows.push(json!({"xi": xi, "mean": s.mean, "median": s.median, "lo": c.lo, "hi": c.hi,
                        "acceptance_rate": rate, "display": format_point_interval(s.mean, (c.lo, c.hi)), "error": null}));
                    series.push(SeriesPoint {
                        method: "bayes".into(),
                        xi,
                        point: Some(s.mean),
                        lo: Some(c.lo),
                        hi: Some(c.hi),
                        status: "ok".into(),
                    });
                }
                Err(err) => {
                    cells.push(format!("({})", err.name()));
                    rows.push(json!({"xi": xi, "error": err.name(), "message": err.to_string()}));
                    series.push(SeriesPoint {
                        method: "bayes".into(),
                        xi,
                        point: None,
                        lo: None,
                        hi: None,
                        status: err.name().into(),
                    });
                }
            }
        }
        table.push_row("Bayesian", cells);
        doc["bayesian"] = Value::Array(rows);
        doc["prior"] = json!(prior_label);
        doc["working_draws"] = wd.source;
    }
    report.text = table.render() + &format!("seed {seed}\n");
    let mut csv = Vec::new();
    write_series_csv(&mut csv, &series)?;
    report.csv = String::from_utf8(csv).expect("utf-8 csv");
    report.json = doc;
    Ok((report, args))
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("{flag} is required")))
}

pub fn check_ident(raw: IdentArgs) -> CliResult<(Report, IdentArgs)> {
    let args = merge_config(raw.clone(), raw.output.config.as_ref())?;
    let args = IdentArgs { output: raw.output, ..args };
    let (j, k) = (required(args.j, "--J")?, required(args.k, "--K")?);
    let v = check_conditional_identifiability(j, k)?;
    let mut report = Report::new("check-ident", DEFAULT_SEED, args_json(&args));
    report.json = json!({"command": "check-ident", "J": j, "K": k, "identifiable": v.identifiable,
        "note": v.note, "seed": DEFAULT_SEED});
    report.text = format!("J={j}, K={k}: {}\n", v.note);
    report.csv = csv_string(
        &["J", "K", "identifiable", "note"],
        &[vec![j.to_string(), k.to_string(), v.identifiable.to_string(), v.note.clone()]],
    );
    Ok((report, args))
}

fn model_json(m: &LatentClassModel) -> Value {
    json!({"nu": m.nu(), "q": m.q()})
}

pub fn counterexample(raw: CounterexampleArgs) -> CliResult<(Report, CounterexampleArgs)> {
    let args = merge_config(raw.clone(), raw.output.config.as_ref())?;
    let args = CounterexampleArgs { output: raw.output, ..args };
    let (j, k) = (required(args.j, "--J")?, required(args.k, "--K")?);
    let pair = counterexample_pair::<f64>(j, k, args.alpha)?;
    let check = pair.check()?;
    let mut report = Report::new("counterexample", DEFAULT_SEED, args_json(&args));
    report.json = json!({
        "command": "counterexample",
        "J": j,
        "K": k,
        "alpha": pair.alpha,
        "A": pair.a,
        "Q": model_json(&pair.q_model),
        "R": model_json(&pair.r_model),
        "check": check,
        "seed": DEFAULT_SEED,
    });
    let mut rows = vec![("J, K", format!("{j}, {k}")), ("alpha", pair.alpha.to_string())];
    let describe = |m: &LatentClassModel| {
        m.nu()
            .iter()
            .zip(m.q())
            .map(|(w, q)| format!("{w:.6} x q={:.6}", q[0]))
            .collect::<Vec<_>>()
            .join("; ")
    };
    rows.push(("Q classes", describe(&pair.q_model)));
    rows.push(("R classes", describe(&pair.r_model)));
    rows.push(("A", format!("{:.12}", pair.a)));
    rows.push(("pi0 Q, R", format!("{:.3}, {:.3}", check.pi0_q, check.pi0_r)));
    rows.push(("max |m_Q - A m_R|", format!("{:.3e}", check.moment_gap)));
    rows.push(("max |pi~_Q - pi~_R|", format!("{:.3e}", check.observed_gap)));
    rows.push(("(1-pi0_Q)/(1-pi0_R)", format!("{:.12}", check.observed_mass_ratio)));
    report.text = key_values(&rows);
    let mut csv_rows = Vec::new();
    for (name, m) in [("Q", &pair.q_model), ("R", &pair.r_model)] {
        for (c, (w, q)) in m.nu().iter().zip(m.q()).enumerate() {
            let mut row = vec![name.to_string(), (c + 1).to_string(), w.to_string()];
            row.extend(q.iter().map(|x| x.to_string()));
            csv_rows.push(row);
        }
    }
    let qcols: Vec<String> = (1..=k).map(|i| format!("q{i}")).collect();
    let mut header = vec!["model", "class", "nu"];
    header.extend(qcols.iter().map(String::as_str));
    report.csv = csv_string(&header, &csv_rows);
    for (name, m) in [("q_model.json", &pair.q_model), ("r_model.json", &pair.r_model)] {
        let text = serde_json::to_string_pretty(&model_json(m)).expect("serializable") + "\n";
        report.extra.push((name.into(), text.into_bytes()));
    }
    Ok((report, args))
}

fn read_lcm(path: &Path) -> CliResult<LatentClassModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(LatentClassModel::from_json(&text)?)
}

pub fn simulate(raw: SimulateArgs) -> CliResult<(Report, SimulateArgs)> {
    let args = merge_config(raw.clone(), raw.output.config.as_ref())?;
    let args = SimulateArgs { output: raw.output, ..args };
    let path = args.lcm.clone().ok_or_else(|| CliError::Config("--lcm is required".into()))?;
    let lcm = read_lcm(&path)?;
    let big_n = required(args.big_n, "--N")?;
    let estimand: Estimand = args.estimand.as_deref().unwrap_or("N").parse()?;
    let seed = args.bayes.seed.unwrap_or(DEFAULT_SEED);
    let cfg = StudyConfig {
        big_n,
        reps: args.reps.unwrap_or(DEFAULT_REPS),
        seed,
        levels: args.level.clone().unwrap_or_else(|| vec![0.95, 0.5]),
        estimand,
    };
    let spec = parse_assumption(Some(args.assumption.as_deref().unwrap_or("nhoi")), None)?;
    let names = ObservedTable::default_names(lcm.k());
    let placeholder = ObservedTable::new(names, vec![1; observed_cells(lcm.k())])?;
    let a: IdentifyingAssumption = spec.resolve(&placeholder)?;
    let levels = cfg.levels.clone();
    let estimator = args.estimator.unwrap_or(EstimatorChoice::Freq);
    let mut described = json!({"kind": estimator, "assumption": spec.to_string()});
    let result = match estimator {
        EstimatorChoice::Freq => simulation_study(&lcm, &cfg, |table, _| {
            let probs = observed_proportions(table);
            let ests = levels
                .iter()
                .map(|&l| estimate_from_probs(table.n(), &probs, &a, l))
                .collect::<Result<Vec<PopEstimate>, _>>()?;
            Ok(RepEstimate {
                point: ests[0].n_hat_real,
                intervals: ests
                    .iter()
                    .map(|e| (e.level, e.ci_unconditional.0, e.ci_unconditional.1))
                    .collect(),
            })
        })?,
        EstimatorChoice::Bayes => {
            let (prior, prior_label) = resolve_prior(args.bayes.prior.as_deref(), false)?;
            if args.bayes.draws_file.is_some() {
                return Err(CliError::Config("--draws-file does not apply to simulate".into()));
            }
            let draws = args.bayes.draws.unwrap_or(DEFAULT_STUDY_DRAWS);
            let chunk_size = args.bayes.chunk_size.unwrap_or(DEFAULT_CHUNK);
            let alpha = args.bayes.dirichlet_alpha.unwrap_or(1.0);
            described["prior"] = json!(prior_label);
            described["draws"] = json!(draws);
            simulation_study(&lcm, &cfg, |table, rep_seed| {
                let sc = SamplerConfig {
                    draws,
                    seed: rep_seed,
                    chunk_size,
                    alpha: Some(vec![alpha; observed_cells(table.k())]),
                };
                let post = run_dirichlet(table, &a, &prior, &sc)?;
                let s = post.summarize(&levels)?;
                Ok(RepEstimate {
                    point: s.median,
                    intervals: s.intervals.iter().map(|c| (c.level, c.lo, c.hi)).collect(),
                })
            })?
        }
    };
    let s = &result.summary;
    let mut report = Report::new("simulate", seed, args_json(&args));
    report.json = json!({
        "command": "simulate",
        "model": model_json(&lcm),
        "estimator": described,
        "summary": s,
        "seed": seed,
    });
    let mut header = vec!["N".to_string(), "mean point".into()];
    let mut cells = vec![format!("{:.4}", s.mean_point)];
    for l in &s.levels {
        header.push(format!("{} coverage", level_label(l.level)));
        header.push(format!("mean {} width", level_label(l.level)));
        cells.push(format!("{:.3}", l.coverage));
        cells.push(format!("{:.4}", l.mean_width));
    }
    let mut t = TextTable::new(header[0].clone(), header[1..].to_vec());
    t.push_row(s.big_n.to_string(), cells);
    report.text = t.render()
        + &format!(
            "estimand {}, truth {}, reps {}, failures {}, seed {seed}\n",
            match s.estimand {
                Estimand::PopulationSize => "N",
                Estimand::UnobservedProb => "pi0",
            },
            s.truth,
            s.reps,
            s.failures
        );
    let mut summary_csv = Vec::new();
    result.write_summary_csv(&mut summary_csv)?;
    report.csv = String::from_utf8(summary_csv).expect("utf-8 csv");
    let mut reps_csv = Vec::new();
    result.write_reps_csv(&mut reps_csv)?;
    report.extra.push(("reps.csv".into(), reps_csv));
    if s.failures > 0 {
        report.warnings.push(format!("{} of {} replications failed", s.failures, s.reps));
    }
    Ok((report, args))
}
