//! End-to-end acceptance checks against reference Kosovo results and the
//! library's invariants. Prints one line per criterion; exits nonzero on failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use idmse::assumptions::{AssumptionKind, IdentifyingAssumption};
use idmse::bayes::{dirichlet_cond_posterior, flat_alpha, run_dirichlet, NPrior, SamplerConfig, DEFAULT_SEED};
use idmse::contingency::{observed_cells, CellProbs, ObservedTable};
use idmse::freq::{equivalence_check, estimate, grad_f_g, invert_xi, sensitivity_sweep, PopEstimate};
use idmse::lcm::{counterexample_pair, moment_vector, reconstruct_cells, LatentClassModel};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Suite = fn(u32) -> Result<(), String>;
type Criterion = fn() -> Outcome;

fn kosovo() -> ObservedTable {
    idmse::fixtures::kosovo().expect("bundled fixture")
}

fn within(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol
}

fn freq_check(est: &PopEstimate<f64>, expected: (f64, f64, f64)) -> Result<(), String> {
    let (lo, hi) = est.interval();
    let got = (est.n_hat_real.floor(), lo.floor(), hi.floor());
    if within(got.0, expected.0, 1.0) && within(got.1, expected.1, 1.0) && within(got.2, expected.2, 1.0) {
        Ok(())
    } else {
        Err(format!("got {}, expected {} [{}, {}]", est.display_row(), expected.0, expected.1, expected.2))
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{detail}; took {took:.2?}, limit {limit:?}"));
    }
    Ok(format!("{detail} ({took:.2?})"))
}

fn marginal_point() -> Outcome {
    timed(Duration::from_secs(1), || {
        let a = IdentifyingAssumption::marginal_nhoi(vec![0, 2], 1.0).unwrap();
        let est = estimate(&kosovo(), &a, 0.95).map_err(|e| e.to_string())?;
        freq_check(&est, (9691.0, 8074.0, 11308.0))?;
        Ok(est.display_row())
    })
}

fn nhoi_point() -> Outcome {
    timed(Duration::from_secs(1), || {
        let est = estimate(&kosovo(), &IdentifyingAssumption::nhoi(1.0).unwrap(), 0.95).map_err(|e| e.to_string())?;
        freq_check(&est, (16941.0, 5304.0, 28579.0))?;
        Ok(est.display_row())
    })
}

fn sweeps() -> Outcome {
    timed(Duration::from_secs(1), || {
        let table = kosovo();
        let marginal = [
            (0.9, (10534.0, 8738.0, 12330.0)),
            (0.8, (11588.0, 9568.0, 13607.0)),
            (0.7, (12942.0, 10636.0, 15249.0)),
        ];
        let nhoi = [
            (0.5, (29483.0, 6210.0, 52757.0)),
            (2.0 / 3.0, (23212.0, 5757.0, 40668.0)),
            (1.0, (16941.0, 5304.0, 28579.0)),
            (1.5, (12761.0, 5002.0, 20520.0)),
            (2.0, (10670.0, 4851.0, 16490.0)),
        ];
        let mut rows = 0;
        for (kind, grid) in [(AssumptionKind::marginal(vec![0, 2]), &marginal[..]), (AssumptionKind::Nhoi, &nhoi[..])] {
            let xis: Vec<f64> = grid.iter().map(|g| g.0).collect();
            for (entry, (_, expected)) in sensitivity_sweep(&table, &kind, &xis, 0.95).iter().zip(grid) {
                let est = entry.result.as_ref().map_err(|e| format!("xi={}: {e}", entry.xi))?;
                freq_check(est, *expected).map_err(|e| format!("xi={}: {e}", entry.xi))?;
                rows += 1;
            }
        }
        Ok(format!("{rows} sweep rows match"))
    })
}

fn inversion() -> Outcome {
    timed(Duration::from_secs(1), || {
        let xi = invert_xi(&kosovo(), &AssumptionKind::marginal(vec![0, 2]), 16941.0, (0.05, 3.0))
            .map_err(|e| e.to_string())?;
        if within(xi, 0.51, 0.01) {
            Ok(format!("xi = {xi:.4}"))
        } else {
            Err(format!("xi = {xi:.4}, expected 0.51 +- 0.01"))
        }
    })
}

fn bayes_rows() -> Outcome {
    let table = kosovo();
    let nb = NPrior::NegBinomial { mean: 10_000.0, a: 1.6 };
    let marginal = IdentifyingAssumption::marginal_nhoi(vec![0, 2], 1.0).unwrap();
    let nhoi = IdentifyingAssumption::nhoi(1.0).unwrap();
    let rows = [
        ("marginal/scale", &marginal, NPrior::scale(), (9536.0, 8113.0, 11252.0), 0.015, 0.025),
        ("marginal/nb", &marginal, nb.clone(), (9540.0, 8123.0, 11247.0), 0.015, 0.025),
        ("nhoi/scale", &nhoi, NPrior::scale(), (18500.0, 9402.0, 35908.0), 0.03, 0.05),
        ("nhoi/nb", &nhoi, nb, (16051.0, 9098.0, 27679.0), 0.03, 0.05),
    ];
    let cfg = SamplerConfig { draws: 200_000, seed: DEFAULT_SEED, ..SamplerConfig::default() };
    let mut details = Vec::new();
    for (name, a, prior, (mean, lo, hi), tol_mean, tol_end) in rows {
        let start = Instant::now();
        let post = run_dirichlet(&table, a, &prior, &cfg).map_err(|e| format!("{name}: {e}"))?;
        let s = post.summarize(&[0.95]).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let ci = s.interval(0.95).unwrap();
        let row = format!("{name} {:.0} [{:.0}, {:.0}] in {took:.1?}", s.mean, ci.lo, ci.hi);
        let rel = |x: f64, y: f64| (x - y).abs() / y;
        if rel(s.mean, mean) > tol_mean || rel(ci.lo, lo) > tol_end || rel(ci.hi, hi) > tol_end {
            return Err(format!("{row}; expected {mean} [{lo}, {hi}]"));
        }
        if took > Duration::from_secs(60) {
            return Err(format!("{row}; over 60 s"));
        }
        details.push(row);
    }
    Ok(details.join("; "))
}

fn prior_quantiles() -> Outcome {
    let prior = NPrior::NegBinomial { mean: 10_000.0, a: 1.6 };
    let lo = prior.prior_quantile(0.025).map_err(|e| e.to_string())?;
    let hi = prior.prior_quantile(0.975).map_err(|e| e.to_string())?;
    if lo.abs_diff(818) <= 1 && hi.abs_diff(30371) <= 1 {
        Ok(format!("[{lo}, {hi}]"))
    } else {
        Err(format!("[{lo}, {hi}], expected [818, 30371]"))
    }
}

fn counterexample() -> Outcome {
    timed(Duration::from_millis(100), || {
        let pair = counterexample_pair(2, 2, Some(0.2475)).map_err(|e| e.to_string())?;
        let c = pair.check().map_err(|e| e.to_string())?;
        let shown = format!("{:.3}/{:.3}", c.pi0_r, c.pi0_q);
        if shown != "0.316/0.219" || c.moment_gap >= 1e-12 || c.observed_gap >= 1e-12 {
            return Err(format!("pi0 {shown}, moment gap {:e}, observed gap {:e}", c.moment_gap, c.observed_gap));
        }
        Ok(format!("pi0 {shown}, gaps {:.1e}/{:.1e}", c.moment_gap, c.observed_gap))
    })
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        rng_seed: RngSeed::Fixed(0xacce),
        failure_persistence: None,
        max_global_rejects: 100_000,
        ..Config::default()
    })
}

fn table_strategy(k: usize, lo: u64, hi: u64) -> impl Strategy<Value = ObservedTable> {
    prop::collection::vec(lo..=hi, observed_cells(k))
        .prop_map(move |c| ObservedTable::new(ObservedTable::default_names(k), c).unwrap())
}

fn probs_strategy(k: usize) -> impl Strategy<Value = CellProbs<f64>> {
    prop::collection::vec(0.05f64..1.0, observed_cells(k)).prop_map(move |w| CellProbs::from_weights(k, w).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn suite_equivalence(cases: u32) -> Result<(), String> {
    let subsets: [&[usize]; 10] = [&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3], &[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]];
    runner(cases)
        .run(&(table_strategy(4, 1, 1000), 0usize..10), |(table, pick)| {
            let res = equivalence_check::<f64>(&table, subsets[pick]);
            prop_assume!(res.is_ok());
            let (full, restricted) = res.unwrap();
            prop_assert!(rel(full, restricted) < 1e-9);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn suite_gradients(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(probs_strategy(4), any::<bool>(), 0.3f64..3.0), |(probs, marginal, xi)| {
            let a = if marginal {
                IdentifyingAssumption::marginal_nhoi(vec![0, 2], xi).unwrap()
            } else {
                IdentifyingAssumption::nhoi(xi).unwrap()
            };
            prop_assume!(a.in_domain(&probs).unwrap().margin > 0.05);
            let (_, grad) = grad_f_g(&a, &probs).unwrap();
            let odds = |p: &[f64]| {
                let t = a.unobserved_prob(&CellProbs::new(4, p.to_vec()).unwrap()).unwrap();
                t / (1.0 - t)
            };
            let base = probs.as_slice().to_vec();
            let last = base.len() - 1;
            let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            for i in 0..last {
                let h = 1e-6 * base[i].min(base[last]);
                let (mut up, mut down) = (base.clone(), base.clone());
                up[i] += h;
                up[last] -= h;
                down[i] -= h;
                down[last] += h;
                let fd = (odds(&up) - odds(&down)) / (2.0 * h);
                prop_assert!((fd - grad[i]).abs() <= 1e-5 * scale);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn lcm_strategy() -> impl Strategy<Value = LatentClassModel<f64>> {
    (1usize..=5, 2usize..=5).prop_flat_map(|(j, k)| {
        (prop::collection::vec(0.05f64..1.0, j), prop::collection::vec(prop::collection::vec(0.02f64..0.98, k), j))
            .prop_map(|(w, q)| {
                let total: f64 = w.iter().sum();
                let mut nu: Vec<f64> = w.iter().map(|x| x / total).collect();
                nu[0] = 1.0 - nu[1..].iter().sum::<f64>();
                LatentClassModel::new(nu, q).unwrap()
            })
    })
}

fn suite_moments(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&lcm_strategy(), |lcm| {
            let cells = reconstruct_cells(&moment_vector(&lcm)).unwrap();
            for (a, b) in cells.iter().zip(&lcm.full_probs()[1..]) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn suite_conjugacy(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(table_strategy(3, 0, 60), any::<u64>()), |(table, seed)| {
            prop_assume!(table.n() > 0);
            let t = 4000;
            let alpha = flat_alpha(3);
            let draws = dirichlet_cond_posterior(&table, &alpha, t, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let shape: Vec<f64> = alpha.iter().zip(table.counts()).map(|(a, &c)| a + c as f64).collect();
            let total: f64 = shape.iter().sum();
            for (i, s) in shape.iter().enumerate() {
                let m = s / total;
                let sd = (m * (1.0 - m) / (total + 1.0) / t as f64).sqrt();
                let emp = draws.iter().map(|d| d.as_slice()[i]).sum::<f64>() / t as f64;
                prop_assert!((emp - m).abs() < 4.0 * sd);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn suite_ht_mean(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(0.05f64..0.9, 20u64..2000, any::<u64>()), |(pi0, n, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let prior = NPrior::scale();
            let reps = 20_000;
            let draws: Vec<f64> = (0..reps).map(|_| prior.draw_n(n, pi0, &mut rng).unwrap() as f64).collect();
            let mean = draws.iter().sum::<f64>() / reps as f64;
            // N - n is negative binomial with r = n, success probability pi0
            let se = (n as f64 * pi0 / (1.0 - pi0).powi(2) / reps as f64).sqrt();
            prop_assert!((mean - n as f64 / (1.0 - pi0)).abs() < 3.0 * se);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn suite_monotone(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(probs_strategy(4), 0.2f64..2.0, 0.01f64..1.0), |(probs, xi, step)| {
            for kind in [AssumptionKind::Nhoi, AssumptionKind::marginal(vec![1, 3])] {
                let a = kind.with_xi(xi).unwrap().unobserved_prob(&probs);
                let b = kind.with_xi(xi + step).unwrap().unobserved_prob(&probs);
                if let (Ok(a), Ok(b)) = (a, b) {
                    prop_assert!(b < a);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn suite_petersen(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&table_strategy(2, 1, 100_000), |table| {
            let c = table.counts();
            let (n01, n10, n11) = (c[0] as f64, c[1] as f64, c[2] as f64);
            let petersen = (n10 + n11) * (n01 + n11) / n11;
            let est = estimate(&table, &IdentifyingAssumption::nhoi(1.0).unwrap(), 0.95).unwrap();
            prop_assert!(rel(est.n_hat_real, petersen) < 1e-9);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn properties() -> Outcome {
    let suites: [(&str, Suite, u32); 7] = [
        ("equivalence", suite_equivalence, 300),
        ("gradients", suite_gradients, 200),
        ("moment reconstruction", suite_moments, 200),
        ("dirichlet conjugacy", suite_conjugacy, 100),
        ("scale-prior mean", suite_ht_mean, 100),
        ("xi monotonicity", suite_monotone, 200),
        ("petersen", suite_petersen, 200),
    ];
    let mut passed = Vec::new();
    for (name, suite, cases) in suites {
        suite(cases).map_err(|e| format!("{name}: {e}"))?;
        passed.push(format!("{name} x{cases}"));
    }
    Ok(passed.join(", "))
}

fn run_cli(args: &[&str], out: &Path, threads: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_idmse"))
        .args(["--threads", threads])
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)));
    }
    Ok(())
}

fn dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let lcm = work.path().join("lcm.json");
    std::fs::write(&lcm, r#"{"nu":[0.5,0.5],"q":[[0.3,0.4,0.5],[0.7,0.6,0.8]]}"#).map_err(|e| e.to_string())?;
    let lcm = lcm.to_str().unwrap();
    let commands: [&[&str]; 2] = [
        &["estimate", "--fixture", "kosovo", "--assumption", "marginal_nhoi:ABA,HRW", "--mode", "bayes", "--draws", "50000"],
        &["simulate", "--lcm", lcm, "--N", "2000", "--reps", "20", "--estimator", "bayes", "--assumption", "nhoi", "--draws", "5000"],
    ];
    let mut files = 0;
    for (i, args) in commands.iter().enumerate() {
        let a = work.path().join(format!("a{i}"));
        let b = work.path().join(format!("b{i}"));
        run_cli(args, &a, "1")?;
        run_cli(args, &b, "4")?;
        let (fa, fb) = (dir_bytes(&a)?, dir_bytes(&b)?);
        if fa != fb {
            return Err(format!("{} outputs differ between runs", args[0]));
        }
        files += fa.len();
    }
    Ok(format!("{files} output files identical across runs with 1 and 4 threads"))
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("marginal NHOI estimate", marginal_point),
        ("NHOI estimate", nhoi_point),
        ("sensitivity sweeps", sweeps),
        ("xi inversion", inversion),
        ("Bayesian estimates", bayes_rows),
        ("prior quantiles", prior_quantiles),
        ("counterexample pair", counterexample),
        ("property suites", properties),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
