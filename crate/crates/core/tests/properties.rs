use proptest::prelude::*;
use semcode_core::{codec, lambert_w0, optimizer, PenaltyCase, PenaltyConfig, SourcePmf};

fn sorted_pmf(weights: Vec<f64>) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
    probs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    probs
}

fn case_strategy() -> impl Strategy<Value = PenaltyCase> {
    prop_oneof![
        Just(PenaltyCase::Edt),
        Just(PenaltyCase::Ldt),
        Just(PenaltyCase::Pdt),
    ]
}

proptest! {
    #[test]
    fn lambert_identity_holds(y in 1e-10f64..1e10) {
        let w = lambert_w0(y).unwrap();
        prop_assert!((w * w.exp() - y).abs() <= 1e-12 * y.max(1.0));
    }

    #[test]
    fn solver_output_is_feasible_and_stationary(
        weights in prop::collection::vec(0.05f64..1.0, 2..=10),
        case in case_strategy(),
        rho in 0.1f64..1.0,
        gamma in 0.2f64..5.0,
        w in 0.2f64..4.0,
    ) {
        let probs = sorted_pmf(weights);
        let cfg = PenaltyConfig::new(case, rho, 1, w, 1.0, 1.0).unwrap();
        let qf = cfg.quadratic_form(gamma).unwrap();
        let sol = optimizer::solve(&qf, &probs).unwrap();
        prop_assert!((sol.kraft_sum - 1.0).abs() <= 1e-9);
        prop_assert!(sol.lengths.iter().all(|&l| l >= 0.0));
        prop_assert!(sol.kkt_residual <= 1e-8, "residual {}", sol.kkt_residual);
        // lengths ordered against probabilities
        for pair in sol.lengths.windows(2) {
            prop_assert!(pair[0] <= pair[1] + 1e-9);
        }
    }

    #[test]
    fn rounded_solver_codes_roundtrip(
        weights in prop::collection::vec(0.05f64..1.0, 2..=10),
        gamma in 0.2f64..5.0,
        stream in prop::collection::vec(0usize..10, 0..200),
    ) {
        let probs = sorted_pmf(weights);
        let cfg = PenaltyConfig::new(PenaltyCase::Pdt, 0.5, 1, 1.0, 1.0, 1.0).unwrap();
        let qf = cfg.quadratic_form(gamma).unwrap();
        let sol = optimizer::solve(&qf, &probs).unwrap();
        let ints = codec::integer_lengths(&sol.lengths).unwrap();
        let kraft: f64 = ints.iter().map(|&l| (-(l as f64)).exp2()).sum();
        prop_assert!(kraft <= 1.0 + 1e-12);
        let book = codec::build_codebook(&ints).unwrap();
        let symbols: Vec<usize> = stream.into_iter().map(|s| s % probs.len()).collect();
        let bits = codec::encode(&book, &symbols).unwrap();
        prop_assert_eq!(codec::decode(&book, &bits).unwrap(), symbols);
    }

    #[test]
    fn truncation_mass_is_monotone(n in 2usize..60, s in 0.0f64..1.5) {
        let pmf = SourcePmf::zipf(n, s).unwrap();
        let mut prev = 0.0;
        for k in 1..=n {
            let t = pmf.truncate(k).unwrap();
            prop_assert!(t.q_k() > prev);
            let sum: f64 = t.cond_probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prev = t.q_k();
        }
    }
}
