use idmse::assumptions::{implied_xi, AssumptionKind, IdentifyingAssumption};
use idmse::freq::estimate;
use idmse::lcm::{
    counterexample_pair, moment_vector, simulate_table, simulation_study, Estimand, LatentClassModel, RepEstimate,
    StudyConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn equal_weights() -> LatentClassModel<f64> {
    LatentClassModel::new(vec![0.5, 0.5], vec![vec![0.2475, 0.2475], vec![0.7425, 0.7425]]).unwrap()
}

fn skewed_weights() -> LatentClassModel<f64> {
    LatentClassModel::new(vec![6.0 / 7.0, 1.0 / 7.0], vec![vec![0.495, 0.495], vec![0.99, 0.99]]).unwrap()
}

fn rare_capture() -> LatentClassModel<f64> {
    LatentClassModel::new(
        vec![0.9, 0.1],
        vec![vec![0.033, 0.099, 0.132, 0.033], vec![0.825, 0.759, 0.990, 0.693]],
    )
    .unwrap()
}

/// `sum_j nu_j prod_k (1 - q_jk)`.
fn pi0_direct(nu: &[f64], q: &[Vec<f64>]) -> f64 {
    nu.iter().zip(q).map(|(v, row)| v * row.iter().map(|x| 1.0 - x).product::<f64>()).sum()
}

#[test]
fn reference_unobserved_probabilities() {
    let (_, a) = equal_weights().cell_probs().unwrap();
    let (_, b) = skewed_weights().cell_probs().unwrap();
    assert!((a - 0.316).abs() < 5e-4, "{a}");
    assert!((b - 0.219).abs() < 5e-4, "{b}");

    let (_, p4) = rare_capture().cell_probs().unwrap();
    assert!((p4 - 0.658).abs() < 5e-4, "{p4}");
    let three_lists = LatentClassModel::new(vec![0.9, 0.1], rare_capture().q().iter().map(|r| r[..3].to_vec()).collect()).unwrap();
    let (_, p3) = three_lists.cell_probs().unwrap();
    assert!((p3 - 0.681).abs() < 5e-4, "{p3}");
    assert!((p3 - pi0_direct(three_lists.nu(), three_lists.q())).abs() < 1e-15);
}

#[test]
fn two_list_pair_shares_observed_cells() {
    let (pa, _) = equal_weights().cell_probs().unwrap();
    let (pb, _) = skewed_weights().cell_probs().unwrap();
    for (x, y) in pa.as_slice().iter().zip(pb.as_slice()) {
        assert!((x - y).abs() < 1e-12);
    }
    let (ma, mb) = (moment_vector(&equal_weights()), moment_vector(&skewed_weights()));
    for (x, y) in ma.as_slice().iter().zip(mb.as_slice()) {
        assert!((y - 8.0 / 7.0 * x).abs() < 1e-12);
    }
}

#[test]
fn constructed_pair_matches_named_models() {
    let pair = counterexample_pair(2, 2, Some(0.2475)).unwrap();
    for (x, y) in pair.q_model.full_probs().iter().zip(skewed_weights().full_probs()) {
        assert!((x - y).abs() < 1e-12);
    }
    for (x, y) in pair.r_model.full_probs().iter().zip(equal_weights().full_probs()) {
        assert!((x - y).abs() < 1e-12);
    }
    let check = pair.check().unwrap();
    assert_eq!(format!("{:.3}/{:.3}", check.pi0_q, check.pi0_r), "0.219/0.316");
    assert!(check.moment_gap < 1e-12 && check.observed_gap < 1e-12);
}

#[test]
fn expected_unobserved_count() {
    let (_, pi0) = equal_weights().cell_probs().unwrap();
    assert_eq!((10_000.0 * pi0).round(), 3163.0);
}

#[test]
fn simulated_cells_are_unbiased() {
    let lcm = rare_capture();
    let big_n = 5_000u64;
    let probs = lcm.full_probs();
    let reps = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut sums = vec![0.0; probs.len()];
    let mut zero = 0.0;
    for _ in 0..reps {
        let (table, n0) = simulate_table(&lcm, big_n, &mut rng).unwrap();
        for (s, &c) in sums[1..].iter_mut().zip(table.counts()) {
            *s += c as f64;
        }
        zero += n0 as f64;
    }
    sums[0] = zero;
    for (h, (&s, &p)) in sums.iter().zip(&probs).enumerate() {
        let mean = s / reps as f64;
        let se = (big_n as f64 * p * (1.0 - p) / reps as f64).sqrt();
        assert!((mean - big_n as f64 * p).abs() < 4.0 * se + 1e-9, "cell {h}: {mean}");
    }
}

#[test]
fn correct_assumption_recovers_unobserved_probability() {
    let lcm = rare_capture();
    let (probs, pi0) = lcm.cell_probs().unwrap();
    let xi = implied_xi(&probs, pi0, &AssumptionKind::Nhoi).unwrap();
    let a = IdentifyingAssumption::nhoi(xi).unwrap();
    let mut cfg = StudyConfig::new(100_000, 200, 7);
    cfg.estimand = Estimand::UnobservedProb;
    cfg.levels = vec![0.95];
    let study = simulation_study(&lcm, &cfg, |table, _| {
        let est = estimate(table, &a, 0.95)?;
        let (lo, hi) = est.interval();
        Ok(RepEstimate { point: est.n_hat_real, intervals: vec![(0.95, lo, hi)] })
    })
    .unwrap();
    let s = &study.summary;
    assert_eq!(s.failures, 0);
    assert!((s.mean_point - pi0).abs() < 0.01, "{} vs {pi0}", s.mean_point);
    assert!(s.levels[0].coverage >= 0.85, "{}", s.levels[0].coverage);
}
