use idmse::assumptions::{AssumptionKind, IdentifyingAssumption};
use idmse::bayes::NPrior;
use idmse::contingency::{
    load_table, marginalize, observed_cells, observed_proportions, odd_even_products, CellProbs, InclusionPattern,
    ObservedTable,
};
use idmse::freq::{delta_quadratic_form, equivalence_check, estimate, grad_f_g};
use idmse::lcm::{coefficient_matrix, moment_vector, simulate_table, LatentClassModel};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn table_with(k: usize, lo: u64, hi: u64) -> impl Strategy<Value = ObservedTable> {
    prop::collection::vec(lo..=hi, observed_cells(k))
        .prop_map(move |counts| ObservedTable::new(ObservedTable::default_names(k), counts).unwrap())
}

fn positive_probs(k: usize) -> impl Strategy<Value = CellProbs<f64>> {
    prop::collection::vec(0.05f64..1.0, observed_cells(k)).prop_map(move |w| CellProbs::from_weights(k, w).unwrap())
}

fn lcm_strategy(max_j: usize, k_range: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = LatentClassModel<f64>> {
    (1..=max_j, k_range).prop_flat_map(|(j, k)| {
        (
            prop::collection::vec(0.05f64..1.0, j),
            prop::collection::vec(prop::collection::vec(0.02f64..0.98, k), j),
        )
            .prop_map(|(w, q)| {
                let total: f64 = w.iter().sum();
                let mut nu: Vec<f64> = w.iter().map(|x| x / total).collect();
                let rest: f64 = nu[1..].iter().sum();
                nu[0] = 1.0 - rest;
                LatentClassModel::new(nu, q).unwrap()
            })
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// NHOI(1) estimate from counts by direct cross-product, without the library's assumption code.
fn nhoi_from_counts(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let (mut odd, mut even) = (0.0, 0.0);
    for (i, &c) in counts.iter().enumerate() {
        let l = (c as f64 / n as f64).ln();
        if (i as u32 + 1).count_ones() % 2 == 1 {
            odd += l;
        } else {
            even += l;
        }
    }
    let r = (odd - even).exp();
    n as f64 * (1.0 + r)
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn marginal_nhoi_matches_nhoi_on_restricted_lists(
        table in table_with(4, 1, 1000),
        pick in 0usize..10,
    ) {
        let subsets: [&[usize]; 10] = [&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3], &[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]];
        let subset = subsets[pick];
        let res = equivalence_check::<f64>(&table, subset);
        prop_assume!(res.is_ok());
        let (full, restricted) = res.unwrap();
        {
            prop_assert!(rel(full, restricted) < 1e-9);
            let mut brute = vec![0u64; observed_cells(subset.len())];
            for (h, c) in table.cells() {
                let code: usize = subset.iter().enumerate().map(|(j, &l)| usize::from(h.bit(l)) << j).sum();
                if code > 0 {
                    brute[code - 1] += c;
                }
            }
            prop_assert!(rel(full, nhoi_from_counts(&brute)) < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn three_list_equivalence(table in table_with(3, 1, 500), pick in 0usize..3) {
        let subset: [&[usize]; 3] = [&[0, 1], &[0, 2], &[1, 2]];
        let res = equivalence_check::<f64>(&table, subset[pick]);
        prop_assume!(res.is_ok());
        let (full, restricted) = res.unwrap();
        prop_assert!(rel(full, restricted) < 1e-9);
    }

    #[test]
    fn gradients_match_finite_differences(probs in positive_probs(4), marginal in any::<bool>(), xi in 0.3f64..3.0) {
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
            let mut up = base.clone();
            let mut down = base.clone();
            up[i] += h;
            up[last] -= h;
            down[i] -= h;
            down[last] += h;
            let fd = (odds(&up) - odds(&down)) / (2.0 * h);
            prop_assert!((fd - grad[i]).abs() <= 1e-5 * scale, "cell {}: fd {} analytic {}", i, fd, grad[i]);
        }
    }

    #[test]
    fn quadratic_form_ignores_dropped_cell(probs in positive_probs(3), xi in 0.5f64..2.0) {
        let a = IdentifyingAssumption::nhoi(xi).unwrap();
        let reference = delta_quadratic_form(&a, &probs, 6).unwrap();
        for dropped in 0..6 {
            let q = delta_quadratic_form(&a, &probs, dropped).unwrap();
            prop_assert!(rel(q, reference) < 1e-9);
        }
    }

    #[test]
    fn moments_reconstruct_cells(lcm in lcm_strategy(5, 2..=5)) {
        let m = moment_vector(&lcm);
        let c = coefficient_matrix(lcm.k()).unwrap();
        let full = lcm.full_probs();
        for (row, direct) in full[1..].iter().enumerate() {
            let v: f64 = c.row(row).iter().zip(m.as_slice()).map(|(&ci, &mi)| f64::from(ci) * mi).sum();
            prop_assert!((v - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_decrease_along_subsets(lcm in lcm_strategy(4, 2..=5)) {
        let m = moment_vector(&lcm);
        for h in InclusionPattern::observed(lcm.k()) {
            for g in InclusionPattern::observed(lcm.k()) {
                if h.is_subset_of(&g) {
                    prop_assert!(m.get(g) <= m.get(h) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn unobserved_prob_decreases_in_xi(probs in positive_probs(4), xi in 0.2f64..2.0, step in 0.01f64..1.0) {
        for kind in [AssumptionKind::Nhoi, AssumptionKind::marginal(vec![1, 3])] {
            let lo = kind.with_xi(xi).unwrap();
            let hi = kind.with_xi(xi + step).unwrap();
            if let (Ok(a), Ok(b)) = (lo.unobserved_prob(&probs), hi.unobserved_prob(&probs)) {
                prop_assert!(b < a);
            }
        }
    }

    #[test]
    fn two_lists_give_petersen(table in table_with(2, 1, 100_000)) {
        let c = table.counts();
        let (n01, n10, n11) = (c[0] as f64, c[1] as f64, c[2] as f64);
        let petersen = (n10 + n11) * (n01 + n11) / n11;
        let a = IdentifyingAssumption::nhoi(1.0).unwrap();
        let est = estimate(&table, &a, 0.95).unwrap();
        prop_assert!(rel(est.n_hat_real, petersen) < 1e-9);
    }

    #[test]
    fn log_space_products_match_naive(k in 2usize..=5, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = (0..observed_cells(k)).map(|_| rng.random_range(1e-6..1.0)).collect();
        let cells: Vec<_> = InclusionPattern::observed(k).zip(p.iter().copied()).collect();
        let (odd, even) = odd_even_products(cells.iter().copied()).unwrap();
        let naive_odd: f64 = cells.iter().filter(|(h, _)| h.is_odd()).map(|(_, v)| v).product();
        let naive_even: f64 = cells.iter().filter(|(h, _)| !h.is_odd()).map(|(_, v)| v).product();
        prop_assert!(rel(odd, naive_odd) < 1e-10);
        prop_assert!(rel(even, naive_even) < 1e-10);
    }

    #[test]
    fn marginal_counts_match_brute_force(table in table_with(5, 0, 50), a in 0usize..5, b in 0usize..5) {
        prop_assume!(a != b);
        prop_assume!(table.n() > 0);
        let view = marginalize(&table, &[a, b]).unwrap();
        let mut brute = [0u64; 4];
        for code in 1..32u32 {
            let g = ((code >> a) & 1) | (((code >> b) & 1) << 1);
            brute[g as usize] += table.counts()[code as usize - 1];
        }
        prop_assert_eq!(view.zero_margin_count, brute[0]);
        prop_assert_eq!(&view.marginal_counts[..], &brute[1..]);
        prop_assert_eq!(view.n_dagger + view.zero_margin_count, table.n());
    }

    #[test]
    fn proportions_sum_to_one(table in table_with(4, 0, 1_000_000)) {
        prop_assume!(table.n() > 0);
        let s: f64 = observed_proportions::<f64>(&table).as_slice().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip(table in table_with(3, 0, 1_000_000)) {
        prop_assume!(table.n() > 0);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let back = load_table(buf.as_slice(), None, "count").unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn acceptance_ratios_are_probabilities(
        pi0 in 1e-9f64..(1.0 - 1e-9),
        n in 1u64..5000,
        mean in 1.0f64..50_000.0,
        a in 0.1f64..20.0,
        q in 0.01f64..0.99,
        ell in 1u64..5,
    ) {
        let priors = [
            NPrior::Poisson { mean },
            NPrior::NegBinomial { mean, a },
            NPrior::Binomial { size: n + mean as u64, q },
            NPrior::FienbergClass { ell: ell.min(n) },
        ];
        for p in priors {
            let max = p.log_evidence_max(n).unwrap();
            let r = p.acceptance_ratio(pi0, max, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&r), "{:?}: {}", p, r);
        }
    }

    #[test]
    fn simulation_conserves_population(lcm in lcm_strategy(3, 2..=4), big_n in 1u64..100_000, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Ok((table, n0)) = simulate_table(&lcm, big_n, &mut rng) {
            prop_assert_eq!(table.n() + n0, big_n);
        }
    }
}

#[test]
fn coefficient_matrix_is_unimodular() {
    for k in 2..=6 {
        let c = coefficient_matrix(k).unwrap();
        let d = c.dim();
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| f64::from(c.get(i, j)));
        assert!((m.determinant().abs() - 1.0).abs() < 1e-9, "K={k}");
        let inv = m.clone().try_inverse().unwrap();
        let zeta = idmse::lcm::coefficient_matrix_inverse(k).unwrap();
        let product = &m * &inv;
        for i in 0..d {
            for j in 0..d {
                assert!((product[(i, j)] - f64::from(u8::from(i == j))).abs() < 1e-12);
                assert!((inv[(i, j)] - f64::from(zeta.get(i, j))).abs() < 1e-9);
            }
        }
    }
}
