use std::collections::HashMap;

use forgekit::fusion::{fitness, mean_fuse, pso_fit, refine_weights, weighted_fuse, EnsembleWeights, PsoConfig, ScoreMatrix};
use forgekit::metrics::Truth;
use forgekit::SeedContext;
use proptest::prelude::*;

fn matrix(m: usize) -> impl Strategy<Value = (ScoreMatrix, Vec<f64>)> {
    (4usize..30).prop_flat_map(move |n| {
        (
            prop::collection::vec(0.0f64..=1.0, n * m),
            prop::collection::vec(0.0f64..10.0, m),
        )
            .prop_map(move |(values, raw)| {
                let ids = (0..n).map(|i| format!("s{i}")).collect();
                let models = (0..m).map(|k| format!("m{k}")).collect();
                (ScoreMatrix::new(ids, models, values).unwrap(), raw)
            })
    })
}

fn labels(m: &ScoreMatrix) -> HashMap<String, Truth> {
    m.ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), if i % 2 == 0 { Truth::Fake } else { Truth::Real }))
        .collect()
}

proptest! {
    #[test]
    fn fused_scores_stay_within_row_range((m, raw) in matrix(3)) {
        let w = EnsembleWeights::project(&raw);
        let fused = weighted_fuse(&m, &w).unwrap();
        for (i, (_, s)) in fused.entries().iter().enumerate() {
            let row = m.row(i);
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= *s && *s <= hi);
        }
    }

    #[test]
    fn projection_lands_on_the_simplex(raw in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let w = EnsembleWeights::project(&raw);
        prop_assert!(w.as_slice().iter().all(|&x| x >= 0.0));
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(EnsembleWeights::new(w.as_slice().to_vec()).is_ok());
    }

    #[test]
    fn one_hot_reproduces_a_column((m, _) in matrix(4), k in 0usize..4) {
        prop_assert_eq!(weighted_fuse(&m, &EnsembleWeights::one_hot(4, k)).unwrap(), m.column(k));
    }

    #[test]
    fn mean_equals_uniform_weights((m, _) in matrix(3)) {
        prop_assert_eq!(mean_fuse(&m).unwrap(), weighted_fuse(&m, &EnsembleWeights::uniform(3)).unwrap());
    }

    #[test]
    fn refine_never_lowers_fitness((m, raw) in matrix(3), step in 0.01f64..0.5) {
        let labels = labels(&m);
        let start = EnsembleWeights::project(&raw);
        let before = fitness(&m, &labels, &start).unwrap();
        let r = refine_weights(&m, &labels, &start, step).unwrap();
        prop_assert!(r.fitness >= before);
        prop_assert!(EnsembleWeights::new(r.weights.as_slice().to_vec()).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pso_beats_every_vertex_and_never_regresses((m, _) in matrix(3), seed in 0u64..1000) {
        let labels = labels(&m);
        let config = PsoConfig { particles: 12, iterations: 15, seed: SeedContext::new(seed, "prop"), ..PsoConfig::default() };
        let r = pso_fit(&m, &labels, &config).unwrap();
        for k in 0..3 {
            prop_assert!(r.fitness >= fitness(&m, &labels, &EnsembleWeights::one_hot(3, k)).unwrap() - 1e-12);
        }
        prop_assert!(r.trace.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(fitness(&m, &labels, &r.weights).unwrap(), r.fitness);
        prop_assert_eq!(&r, &pso_fit(&m, &labels, &config).unwrap());
    }
}
