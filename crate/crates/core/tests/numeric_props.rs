use proptest::prelude::*;
use tfpaas_core::model::{evaluate, summarize, CriterionKind, PerformanceCriteria};
use tfpaas_core::stats;
use tfpaas_core::sumscore::{
    equal_weights, inv_norm_cdf, sum_score, z_completion, z_error_rate,
};
use tfpaas_testkit::arb;

proptest! {
    #[test]
    fn summary_throughput_matches_completed(m in arb::measurement()) {
        let s = summarize(&m).unwrap();
        let back = s.observed_tps * m.wall_time_s;
        prop_assert!((back - s.completed as f64).abs() <= 1e-9 * (s.completed as f64).max(1.0));
        prop_assert!(s.p50_ms <= s.p95_ms);
        prop_assert_eq!(s.errored, m.http_error_count + m.transport_error_count);
    }

    #[test]
    fn overall_is_conjunction(s in arb::summary(), c in arb::criteria()) {
        let v = evaluate(&s, &c);
        let all = CriterionKind::ALL.iter().all(|k| v.get(*k).pass);
        prop_assert_eq!(v.overall, all);
    }

    #[test]
    fn loosening_criteria_never_breaks_a_pass(s in arb::summary(), c in arb::criteria()) {
        let loose = PerformanceCriteria {
            response_ms: c.response_ms * 2.0,
            tps: c.tps / 2.0,
            bps: c.bps / 2.0,
        };
        if evaluate(&s, &c).overall {
            prop_assert!(evaluate(&s, &loose).overall);
        }
    }

    #[test]
    fn nearest_rank_picks_a_sample(mut xs in proptest::collection::vec(0.0f64..1e6, 1..200), p in 1u32..=100) {
        xs.sort_by(|a, b| a.total_cmp(b));
        let v = stats::nearest_rank(&xs, p).unwrap();
        let below = xs.iter().filter(|x| **x <= v).count();
        prop_assert!(below * 100 >= p as usize * xs.len());
    }

    #[test]
    fn quantile_is_antisymmetric(p in 1e-6f64..0.999999) {
        let a = inv_norm_cdf(p).unwrap();
        let b = inv_norm_cdf(1.0 - p).unwrap();
        prop_assert!((a + b).abs() < 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn quantile_is_increasing(p in 1e-6f64..0.99, dp in 1e-6f64..0.009) {
        prop_assert!(inv_norm_cdf(p).unwrap() < inv_norm_cdf(p + dp).unwrap());
    }

    #[test]
    fn error_and_completion_mirror(n in 1u64..500, e in 0u64..500) {
        let e = e.min(n);
        let ze: f64 = z_error_rate(e, n).unwrap();
        let zc: f64 = z_completion(n - e, n).unwrap();
        prop_assert!((ze + zc).abs() < 1e-9);
    }

    #[test]
    fn sum_is_linear(z in proptest::array::uniform4(-4.0f64..4.0), k in -3.0f64..3.0, i in 0usize..4) {
        let base = sum_score(z[0], z[1], z[2], z[3], equal_weights()).unwrap().sum;
        let mut shifted = z;
        shifted[i] += k;
        let s = sum_score(shifted[0], shifted[1], shifted[2], shifted[3], equal_weights()).unwrap().sum;
        prop_assert!((s - base - 0.25 * k).abs() < 1e-12);
    }
}
