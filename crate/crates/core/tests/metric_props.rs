mod common;

use proptest::prelude::*;

use ckm_core::metric::set_difference_count;
use ckm_core::PointId;

use common::instance_strategy;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_form_a_metric(s in instance_strategy(2..=20, 3)) {
        let m = s.build();
        let n = m.len();
        for a in m.ids() {
            prop_assert_eq!(m.dist(a, a), 0.0);
            for b in m.ids() {
                let d = m.dist(a, b);
                prop_assert!(d >= 0.0);
                prop_assert_eq!(d, m.dist(b, a));
                for c in (0..n).map(PointId::from) {
                    prop_assert!(d <= m.dist(a, c) + m.dist(c, b) + 1e-9 * (1.0 + d));
                }
            }
        }
    }

    #[test]
    fn normalization_and_aspect_ratio(s in instance_strategy(2..=20, 3)) {
        let m = s.build();
        let mut min = f64::INFINITY;
        let mut max: f64 = 0.0;
        for a in m.ids() {
            for b in m.ids() {
                let d = m.dist(a, b);
                if d > 0.0 {
                    min = min.min(d);
                    max = max.max(d);
                }
            }
        }
        if min.is_finite() {
            prop_assert!((min - 1.0).abs() < 1e-9);
            prop_assert!((m.delta() - max).abs() < 1e-6 * max);
        } else {
            prop_assert_eq!(m.delta(), 1.0);
        }
    }

    #[test]
    fn cached_distances_match(s in instance_strategy(2..=20, 3)) {
        let m = s.build();
        let mut c = m.clone();
        c.precompute_distances();
        for a in m.ids() {
            for b in m.ids() {
                prop_assert_eq!(m.dist(a, b), c.dist(a, b));
            }
        }
    }

    #[test]
    fn cost_is_weighted_nearest_distance(s in instance_strategy(1..=20, 5), pick in prop::collection::vec(any::<prop::sample::Index>(), 0..4)) {
        let m = s.build();
        let centers: Vec<PointId> = pick.iter().map(|i| PointId::from(i.index(m.len()))).collect();
        let pts = m.all_points();
        let mut want = 0.0;
        for p in &pts {
            let d = if centers.is_empty() {
                m.delta()
            } else {
                centers.iter().map(|&c| m.dist(p.id, c)).fold(f64::INFINITY, f64::min)
            };
            want += p.weight as f64 * d;
        }
        prop_assert!((m.cost(&centers, &pts) - want).abs() <= 1e-9 * (1.0 + want));
    }

    #[test]
    fn difference_count_is_set_difference(a in prop::collection::btree_set(0u32..30, 0..10), b in prop::collection::btree_set(0u32..30, 0..10)) {
        let av: Vec<PointId> = a.iter().map(|&i| PointId(i)).collect();
        let bv: Vec<PointId> = b.iter().map(|&i| PointId(i)).collect();
        prop_assert_eq!(set_difference_count(&av, &bv), a.difference(&b).count());
    }
}
