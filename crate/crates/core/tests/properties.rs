//! Invariants checked on random inputs, with brute-force oracles written
//! independently of the library's enumeration code.

use proptest::prelude::*;
use rand::Rng;

use regretlab::algorithms::{kl_ball_minimizer, LambdaMode, TwoLevelState};
use regretlab::complexity::{
    covering_number, offset_expectation, seq_rademacher_exact, seq_rademacher_mc, CoverNorm,
    EstimationMode, FunctionTable, OffsetForm,
};
use regretlab::probtools::{
    maximal_bound, tail_validate, theta_multipliers, TailInstance, TailSpec,
};
use regretlab::tree::node_index;
use regretlab::{
    kl_divergence, normalize_log_weights, BinaryTree, Distribution, RadiusLadder, RngSpec,
};

/// Heap index of the node played in round `t` (0-based) after the signs in `code`.
fn heap_node(code: usize, t: usize) -> usize {
    let mut idx = 0;
    for s in 0..t {
        idx = 2 * idx + if (code >> s) & 1 == 1 { 2 } else { 1 };
    }
    idx
}

fn sign(code: usize, t: usize) -> f64 {
    if (code >> t) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `E_ε max_g Σ_t (ε_t g(node_t) − c · g(node_t)²)` by enumerating every sign path.
fn brute_offset(table: &FunctionTable, c: f64) -> f64 {
    let n = table.depth();
    let paths = 1usize << n;
    let total: f64 = (0..paths)
        .map(|code| {
            table
                .values()
                .iter()
                .map(|row| {
                    (0..n)
                        .map(|t| {
                            let v = row[heap_node(code, t)];
                            sign(code, t) * v - c * v * v
                        })
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / paths as f64
}

fn table_strategy(max_size: usize, max_depth: usize) -> impl Strategy<Value = FunctionTable> {
    (1..=max_size, 1..=max_depth, any::<u64>()).prop_map(|(size, depth, seed)| {
        let mut g = RngSpec::new(seed).stream(0).unwrap();
        FunctionTable::random(&mut g, size, depth, 1.0).unwrap()
    })
}

fn distribution_strategy(k: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|w| Distribution::from_unnormalized(w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_sums_to_one_and_preserves_ratios(logw in prop::collection::vec(-50.0f64..50.0, 1..12)) {
        let d = normalize_log_weights(&logw).unwrap();
        let w = d.weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|x| *x >= 0.0));
        let top = (0..logw.len()).max_by(|&a, &b| logw[a].total_cmp(&logw[b])).unwrap();
        for i in 0..logw.len() {
            let expected = (logw[i] - logw[top]).exp();
            prop_assert!((w[i] / w[top] - expected).abs() <= 1e-9 * expected.max(1e-300) + 1e-12);
        }
    }

    #[test]
    fn kl_matches_direct_sum_and_is_nonnegative(
        (f, pi) in (1usize..8).prop_flat_map(|k| (distribution_strategy(k), distribution_strategy(k)))
    ) {
        let kl = kl_divergence(&f, &pi).unwrap();
        let direct: f64 = f.weights().iter().zip(pi.weights()).map(|(a, b)| a * (a / b).ln()).sum();
        prop_assert!(kl >= 0.0);
        prop_assert!((kl - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        prop_assert!(kl_divergence(&f, &f).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn kl_ball_minimizer_beats_feasible_points(
        (pi, losses) in (1usize..6).prop_flat_map(|k| (distribution_strategy(k), prop::collection::vec(0.0f64..20.0, k))),
        radius in 0.01f64..4.0,
        seed in any::<u64>(),
    ) {
        let (f, value) = kl_ball_minimizer(&pi, radius, &losses).unwrap();
        prop_assert!(kl_divergence(&f, &pi).unwrap() <= radius + 1e-8);
        let own: f64 = f.weights().iter().zip(&losses).map(|(a, b)| a * b).sum();
        prop_assert!((own - value).abs() <= 1e-8 * (1.0 + value.abs()));
        let mut g = RngSpec::new(seed).stream(0).unwrap();
        for _ in 0..50 {
            let w: Vec<f64> = (0..pi.support_size()).map(|_| g.random_range(0.0..1.0)).collect();
            let cand = Distribution::from_unnormalized(w).unwrap();
            if kl_divergence(&cand, &pi).unwrap() <= radius {
                let v: f64 = cand.weights().iter().zip(&losses).map(|(a, b)| a * b).sum();
                prop_assert!(value <= v + 1e-9);
            }
        }
    }

    #[test]
    fn rademacher_matches_enumeration_and_grows_with_class(table in table_strategy(6, 8), seed in any::<u64>()) {
        let exact = seq_rademacher_exact(&table).unwrap();
        prop_assert!((exact - brute_offset(&table, 0.0)).abs() <= 1e-12);
        prop_assert!(exact >= -1e-12);
        let mut g = RngSpec::new(seed).stream(0).unwrap();
        let extra = FunctionTable::random(&mut g, 1, table.depth(), 1.0).unwrap().values()[0].clone();
        let bigger = table.with_row(extra).unwrap();
        prop_assert!(seq_rademacher_exact(&bigger).unwrap() >= exact - 1e-12);
    }

    #[test]
    fn quadratic_offset_matches_enumeration_and_decreases_in_alpha(
        table in table_strategy(5, 7),
        a in 0.01f64..2.0,
        b in 0.01f64..2.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at = |alpha: f64| {
            offset_expectation(&table, &OffsetForm::QuadraticAlpha { alpha }, &EstimationMode::Exact)
                .unwrap()
                .value
        };
        let (v_lo, v_hi) = (at(lo), at(hi));
        prop_assert!((v_lo - brute_offset(&table, 2.0 * lo)).abs() <= 1e-12);
        prop_assert!(v_hi <= v_lo + 1e-12);
    }

    #[test]
    fn sup_norm_covers_are_at_least_rms_covers(table in table_strategy(6, 6), alpha in 0.01f64..2.5) {
        let l2 = covering_number(&table, alpha, CoverNorm::L2).unwrap();
        let linf = covering_number(&table, alpha, CoverNorm::Linf).unwrap();
        prop_assert!(l2.exact && linf.exact);
        prop_assert!(linf.size >= l2.size);
        prop_assert!(l2.size >= 1 && linf.size <= table.size());
        let coarser = covering_number(&table, 2.0 * alpha, CoverNorm::L2).unwrap();
        prop_assert!(coarser.size <= l2.size);
    }

    #[test]
    fn theta_multipliers_are_at_least_one(
        n in 1usize..12,
        c1 in 0.0f64..3.0,
        c2 in 0.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let mut g = RngSpec::new(seed).stream(0).unwrap();
        let sigma_bar = g.random_range(0.1..2.0);
        let s_bar = g.random_range(0.1..2.0);
        let spec = TailSpec {
            c1,
            c2,
            b: (0..n).map(|_| g.random_range(0.1..5.0)).collect(),
            sigma: (0..n).map(|_| sigma_bar + g.random_range(0.0..3.0)).collect(),
            s: (0..n).map(|_| g.random_range(0.0..=s_bar)).collect(),
            sigma_bar,
            s_bar,
        };
        let thetas = theta_multipliers(&spec).unwrap();
        prop_assert_eq!(thetas.len(), n);
        prop_assert!(thetas.iter().all(|t| *t >= 1.0));
        let bound = maximal_bound(&spec).unwrap();
        prop_assert!((bound - (3.0 * c1 * sigma_bar + 2.0 * c2 / s_bar)).abs() <= 1e-12 * (1.0 + bound));
    }

    #[test]
    fn optimized_lambda_never_exceeds_fixed(k in 1usize..6, i_max in 1usize..12, n in 1usize..200) {
        let value = |mode| {
            TwoLevelState::new(Distribution::uniform(k).unwrap(), RadiusLadder::new(i_max).unwrap(), n, mode)
                .unwrap()
                .relaxation()
        };
        prop_assert!(value(LambdaMode::Optimized) <= value(LambdaMode::FixedInverseSqrtN) + 1e-9);
    }

    #[test]
    fn ladder_picks_smallest_covering_rung(i_max in 1usize..30, r in 0.0f64..1e9) {
        let ladder = RadiusLadder::new(i_max).unwrap();
        match ladder.rung_covering(r) {
            Some(i) => {
                prop_assert!(ladder.radius(i) >= r);
                prop_assert!(i == 1 || ladder.radius(i - 1) < r);
                prop_assert_eq!(ladder.radius(i), 2f64.powi(i as i32 - 1));
            }
            None => prop_assert!(ladder.radius(i_max) < r),
        }
    }

    #[test]
    fn node_index_follows_heap_order(depth in 1usize..12, code in any::<usize>(), t in 1usize..12) {
        prop_assume!(t <= depth);
        let path: Vec<i8> = (0..t - 1).map(|s| if (code >> s) & 1 == 1 { 1 } else { -1 }).collect();
        prop_assert_eq!(node_index(depth, t, &path).unwrap(), heap_node(code, t - 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monte_carlo_rademacher_within_four_stderr(table in table_strategy(5, 9), seed in any::<u64>()) {
        let exact = seq_rademacher_exact(&table).unwrap();
        let (mean, stderr) = seq_rademacher_mc(&table, 4000, &RngSpec::new(seed)).unwrap();
        prop_assert!((mean - exact).abs() <= 4.0 * stderr + 1e-12);
    }

    #[test]
    fn pinelis_empirical_tail_matches_enumeration(depth in 2usize..9, seed in any::<u64>(), tau in 0.5f64..4.0) {
        let mut g = RngSpec::new(seed).stream(0).unwrap();
        let tree = BinaryTree::from_fn(depth, |_, _| {
            let v: Vec<f64> = (0..3).map(|_| g.random_range(-1.0..=1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm.max(1.0)).collect()
        })
        .unwrap();
        prop_assume!(depth as f64 > tau / 4.0);
        let report = tail_validate(&TailInstance::Pinelis { tree: tree.clone() }, &[tau], &EstimationMode::Exact).unwrap();
        let paths = 1usize << depth;
        let hits = (0..paths)
            .filter(|&code| {
                let mut s = [0.0; 3];
                for t in 0..depth {
                    let z = &tree.nodes()[heap_node(code, t)];
                    for (a, b) in s.iter_mut().zip(z) {
                        *a += sign(code, t) * b;
                    }
                }
                s.iter().map(|x| x * x).sum::<f64>().sqrt() >= tau
            })
            .count();
        let p = &report.points[0];
        prop_assert!((p.empirical - hits as f64 / paths as f64).abs() <= 1e-15);
        prop_assert!(p.pass);
    }
}
