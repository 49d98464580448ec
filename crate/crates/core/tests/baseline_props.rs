mod common;

use num_traits::ToPrimitive;
use proptest::prelude::*;
use sep_core::baselines::{
    dual_agreement_select, hac_medoid_select, pass_at_k, pass_at_k_exact, token_similarity, Fingerprint,
    SimilarityMatrix, TestResult,
};
use sep_core::minilang::{print_function, Program};

fn nck() -> impl Strategy<Value = (u64, u64, u64)> {
    (1u64..=40).prop_flat_map(|n| (Just(n), 0..=n, 1..=n))
}

/// Symmetric matrix with entries on the grid k/16.
fn dyadic_matrix() -> impl Strategy<Value = SimilarityMatrix<f64>> {
    (2usize..9).prop_flat_map(|n| {
        prop::collection::vec(0u32..=16, n * (n - 1) / 2).prop_map(move |upper| {
            let mut it = upper.into_iter();
            let mut rows = vec![vec![1.0; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let v = f64::from(it.next().unwrap()) / 16.0;
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            SimilarityMatrix::new(rows).unwrap()
        })
    })
}

fn result() -> impl Strategy<Value = TestResult> {
    prop_oneof![Just(TestResult::Pass), Just(TestResult::Fail), Just(TestResult::Crash)]
}

/// Pools drawn from a few shared fingerprints so that groups form.
fn fingerprints() -> impl Strategy<Value = (Vec<Fingerprint>, Vec<usize>)> {
    (1usize..7).prop_flat_map(|t| {
        let patterns = prop::collection::vec(prop::collection::vec(result(), t), 1..4);
        (patterns, prop::collection::vec(0usize..4, 1..12), Just((0..t).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|(patterns, picks, perm)| {
                let fps = picks
                    .iter()
                    .map(|&k| Fingerprint {
                        results: patterns[k % patterns.len()].clone(),
                    })
                    .collect();
                (fps, perm)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pass_at_k_matches_exact_rational((n, c, k) in nck()) {
        let approx: f64 = pass_at_k(n, c, k).unwrap();
        let exact = pass_at_k_exact(n, c, k).unwrap().to_f64().unwrap();
        prop_assert!((approx - exact).abs() < 1e-12, "{} vs {}", approx, exact);
        prop_assert!((0.0..=1.0).contains(&approx));
    }

    #[test]
    fn pass_at_k_is_monotone((n, c, k) in nck()) {
        let v: f64 = pass_at_k(n, c, k).unwrap();
        if k < n {
            prop_assert!(pass_at_k::<f64>(n, c, k + 1).unwrap() >= v);
        }
        if c < n {
            prop_assert!(pass_at_k::<f64>(n, c + 1, k).unwrap() >= v);
        }
    }

    #[test]
    fn token_similarity_is_symmetric(f in common::program(), g in common::program()) {
        let p = Program::new("p", print_function(&f), 0).unwrap();
        let q = Program::new("q", print_function(&g), 1).unwrap();
        prop_assert_eq!(token_similarity::<f64>(&p, &q), token_similarity::<f64>(&q, &p));
        prop_assert_eq!(token_similarity::<f64>(&p, &p), 1.0);
        let s = token_similarity::<f64>(&p, &q);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn hac_selection_survives_affine_rescaling(
        m in dyadic_matrix(),
        tau_steps in 0u32..=16,
        shift in 1i32..=3,
    ) {
        // s -> 1 - a(1 - s) scales every distance by a; with a a power of two
        // the arithmetic stays exact, so the merge order cannot change.
        let a = 2f64.powi(-shift);
        let tau = f64::from(tau_steps) / 16.0;
        let mapped = SimilarityMatrix::from_fn(m.n(), |i, j| 1.0 - a * (1.0 - m.get(i, j)));
        prop_assert_eq!(hac_medoid_select(&m, tau), hac_medoid_select(&mapped, a * tau));
    }

    #[test]
    fn dual_agreement_ignores_test_order((fps, perm) in fingerprints()) {
        let permuted: Vec<Fingerprint> = fps
            .iter()
            .map(|f| Fingerprint {
                results: perm.iter().map(|&k| f.results[k]).collect(),
            })
            .collect();
        prop_assert_eq!(dual_agreement_select(&fps), dual_agreement_select(&permuted));
    }
}
