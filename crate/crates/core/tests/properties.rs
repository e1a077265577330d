use std::collections::HashSet;

use albatch::clustering::kmeans;
use albatch::dataset::{Dataset, LabelState, SampleId};
use albatch::linalg::Matrix;
use albatch::regression::{pearson_cc, ridge_fit};
use albatch::seed::RunSeeds;
use albatch::stats::{bh_fdr, dunn_pairwise, Direction};
use albatch::strategies::{ebmal_init, ebmal_select, run_strategy, select_random, select_top_k, StrategySpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn pool() -> impl Strategy<Value = Dataset> {
    (12usize..60, 1usize..5).prop_flat_map(|(n, d)| {
        (matrix(n, d), prop::collection::vec(0.0f64..1.0, n))
            .prop_map(|(x, y)| Dataset::with_sequential_ids(x, y).unwrap())
    })
}

const NAMES: [&str; 8] = ["bl", "qbc", "eqbc", "emcm", "eemcm", "eemcm1", "eemcm2", "eemcm3"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_keep_the_partition(ds in pool(), which in 0usize..8, k in 1usize..4, seed in any::<u64>()) {
        let mut spec: StrategySpec = NAMES[which].parse().unwrap();
        spec.k = k;
        let batches = (ds.len() / k).min(6);
        let trace = run_strategy(&ds, &spec, batches, &RunSeeds::new(seed, 0, 0)).unwrap();
        let state = &trace.state;
        prop_assert!(state.validate().is_ok());
        let seen: HashSet<usize> = state.labeled().iter().copied().collect();
        prop_assert_eq!(seen.len(), state.labeled().len());
        for sel in &trace.selections {
            for c in &sel.chosen {
                prop_assert!(!state.blacklisted().contains(c));
            }
        }
        prop_assert!(state.labeled().len() <= batches * k);
        prop_assert_eq!(trace.models.len(), batches);
    }

    #[test]
    fn label_state_rejects_reuse(n in 2usize..40, picks in prop::collection::vec(0usize..40, 1..10)) {
        let mut st = LabelState::new(n);
        for p in picks {
            let before = st.clone();
            let r = st.label_batch(&[p]);
            if p < n && before.unlabeled().contains(&p) {
                prop_assert!(r.is_ok());
            } else {
                prop_assert!(r.is_err());
            }
            prop_assert!(st.validate().is_ok());
        }
    }

    #[test]
    fn top_k_matches_a_sort(scores in prop::collection::vec(prop_oneof![Just(1.0f64), -3.0f64..3.0], 1..40), k in 1usize..10) {
        let n = scores.len();
        let cand: Vec<usize> = (0..n).collect();
        let ids: Vec<SampleId> = (0..n as u64).rev().map(SampleId).collect();
        let got = select_top_k(&cand, &scores, &ids, k).unwrap().chosen;
        let mut want = cand.clone();
        want.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(ids[a].cmp(&ids[b])));
        want.truncate(k);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn init_picks_are_distinct_survivors(x in matrix(40, 3), k in 1usize..6, gamma in 0.0f64..0.1, seed in any::<u64>()) {
        let ids: Vec<SampleId> = (0..40).map(SampleId).collect();
        let sel = ebmal_init(&x, &ids, k, gamma, seed).unwrap();
        prop_assert_eq!(sel.chosen.len(), k);
        let chosen: HashSet<usize> = sel.chosen.iter().copied().collect();
        prop_assert_eq!(chosen.len(), k);
        prop_assert!(sel.newly_blacklisted.iter().all(|b| !chosen.contains(b)));
        prop_assert!(40 - sel.newly_blacklisted.len() >= k);
    }

    #[test]
    fn diverse_picks_come_from_the_top(x in matrix(30, 2), scores in prop::collection::vec(0.0f64..1.0, 30), k in 1usize..6, seed in any::<u64>()) {
        let ids: Vec<SampleId> = (0..30).map(SampleId).collect();
        let cand: Vec<usize> = (0..30).collect();
        let sel = ebmal_select(&x, &ids, &cand, &scores, k, seed).unwrap();
        let top: HashSet<usize> = select_top_k(&cand, &scores, &ids, 2 * k).unwrap().chosen.into_iter().collect();
        prop_assert_eq!(sel.chosen.len(), k);
        prop_assert!(sel.chosen.iter().all(|c| top.contains(c)));
        // the overall best always survives: it tops whichever cluster it lands in
        let best = select_top_k(&cand, &scores, &ids, 1).unwrap().chosen[0];
        prop_assert!(sel.chosen.contains(&best));
    }

    #[test]
    fn kmeans_inertia_never_rises(x in matrix(50, 3), k in 1usize..8, seed in any::<u64>()) {
        let cl = kmeans(&x, k, seed).unwrap();
        for w in cl.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
        prop_assert_eq!(cl.sizes.iter().sum::<usize>(), 50);
        prop_assert!(cl.sizes.iter().all(|&s| s > 0));
    }

    #[test]
    fn pearson_is_affine_invariant(y in prop::collection::vec(-10.0f64..10.0, 3..50), a in 0.1f64..10.0, b in -5.0f64..5.0, sh in -3.0f64..3.0) {
        let yhat: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + (i as f64 * 0.7).sin()).collect();
        let base = pearson_cc(&y, &yhat).unwrap();
        prop_assume!(!base.degenerate);
        let moved: Vec<f64> = yhat.iter().map(|v| a * v + b).collect();
        let ys: Vec<f64> = y.iter().map(|v| v + sh).collect();
        let c = pearson_cc(&ys, &moved).unwrap();
        prop_assert!((c.value - base.value).abs() < 1e-9);
        let flipped: Vec<f64> = yhat.iter().map(|v| -a * v).collect();
        prop_assert!((pearson_cc(&y, &flipped).unwrap().value + base.value).abs() < 1e-9);
    }

    #[test]
    fn bh_is_monotone_and_bounded(p in prop::collection::vec(0.0f64..1.0, 1..30)) {
        let adj = bh_fdr(&p).unwrap();
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        for w in order.windows(2) {
            prop_assert!(adj[w[0]] <= adj[w[1]]);
        }
        for (a, r) in adj.iter().zip(&p) {
            prop_assert!(a >= r && *a <= 1.0);
        }
    }

    #[test]
    fn dunn_one_sided_is_antisymmetric(groups in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2..12), 3..5)) {
        let p = dunn_pairwise(&groups, &[(0, 1), (1, 0)], Direction::LowerBetter).unwrap();
        prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        let h = dunn_pairwise(&groups, &[(0, 1)], Direction::HigherBetter).unwrap();
        prop_assert!((h[0] - p[1]).abs() < 1e-12);
    }

    #[test]
    fn ridge_shrinks_with_sigma(x in matrix(20, 4), y in prop::collection::vec(-2.0f64..2.0, 20)) {
        let norm = |s: f64| {
            let m = ridge_fit(&x, &y, s).unwrap();
            m.weights.iter().map(|w| w * w).sum::<f64>() + m.bias * m.bias
        };
        let mut last = f64::INFINITY;
        for s in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let n = norm(s);
            prop_assert!(n <= last * (1.0 + 1e-9));
            last = n;
        }
    }
}

#[test]
fn random_batches_are_uniform() {
    let st = LabelState::new(10);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 10];
    let trials = 20_000;
    for _ in 0..trials {
        for c in select_random(&st, 3, &mut rng).unwrap().chosen {
            counts[c] += 1;
        }
    }
    // each position expected 6000 times; sd about 65
    for c in counts {
        assert!((c as f64 - 6000.0).abs() < 400.0, "{counts:?}");
    }
}
