use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ckm_core::rounding::systematic_round;
use ckm_core::PointId;

fn fractional() -> impl Strategy<Value = (Vec<(PointId, f64)>, usize)> {
    (1usize..=5, prop::collection::vec(0.0f64..1.0, 1..12)).prop_map(|(k, raw)| {
        let total: f64 = raw.iter().sum();
        let scale = if total > k as f64 { k as f64 / total } else { 1.0 };
        (raw.iter().enumerate().map(|(i, &v)| (PointId::from(i), v * scale)).collect(), k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn opens_at_most_k_distinct_positive_candidates((y, k) in fractional(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: f64 = y.iter().map(|e| e.1).sum();
        for _ in 0..50 {
            let open = systematic_round(&y, k, &mut rng);
            prop_assert!(open.len() <= k);
            prop_assert!(open.len() as f64 <= total.ceil() + 1e-9);
            prop_assert!(open.windows(2).all(|w| w[0] < w[1]));
            for p in &open {
                prop_assert!(y.iter().any(|e| e.0 == *p && e.1 > 0.0));
            }
        }
    }

    #[test]
    fn marginals_match_openings((y, k) in fractional(), seed in any::<u64>()) {
        let draws = 4000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = vec![0usize; y.len()];
        for _ in 0..draws {
            for p in systematic_round(&y, k, &mut rng) {
                hits[p.idx()] += 1;
            }
        }
        for (i, &(_, v)) in y.iter().enumerate() {
            let f = hits[i] as f64 / draws as f64;
            // Binomial standard deviation is at most 0.008 here; 0.05 is > 6 sigma.
            prop_assert!((f - v).abs() < 0.05, "candidate {}: {} vs {}", i, f, v);
        }
    }
}
