use proptest::prelude::*;

use sausage_core::analytic::{annulus_hit_prob, corridor_centers, gaussian_disk_prob, theorem1_bounds, BoundParams};
use sausage_core::cli::config::{CorridorParams, Experiment, ExperimentConfig, NaiveParams};
use sausage_core::cli::output::fmt_f64;
use sausage_core::paths::sample_path;
use sausage_core::sausage::IntervalUnion;
use sausage_core::wos::{wos_estimate, WosConfig};
use sausage_core::{Point, StreamId};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn annulus_monotone_with_exact_endpoints(a in 1e-3f64..1.0, ratio in 1.01f64..100.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let b = a * ratio;
        prop_assert_eq!(annulus_hit_prob(a, a, b).unwrap(), 1.0);
        prop_assert_eq!(annulus_hit_prob(b, a, b).unwrap(), 0.0);
        let (lo, hi) = (s.min(t), s.max(t));
        let z1 = a + lo * (b - a);
        let z2 = a + hi * (b - a);
        prop_assert!(annulus_hit_prob(z1, a, b).unwrap() >= annulus_hit_prob(z2, a, b).unwrap());
    }

    #[test]
    fn disk_prob_monotone(d in 0.0f64..5.0, sigma in 0.1f64..3.0, r in 0.0f64..5.0, dr in 0.0f64..1.0, dd in 0.0f64..1.0) {
        let p = gaussian_disk_prob(d, sigma, r).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(gaussian_disk_prob(d, sigma, r + dr).unwrap() >= p - 1e-10);
        prop_assert!(gaussian_disk_prob(d + dd, sigma, r).unwrap() <= p + 1e-10);
    }

    #[test]
    fn bounds_are_probabilities(eps in 1e-6f64..0.36, theta in 0.01f64..1.0, c in 0.1f64..10.0) {
        let b = theorem1_bounds(eps, theta, &BoundParams::new(1.0, c, c, c).unwrap()).unwrap();
        for v in [b.upper, b.lower, b.upper_measure, b.lower_measure] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let tighter = theorem1_bounds(eps, (theta + 0.5).min(1.0), &BoundParams::new(1.0, c, c, c).unwrap()).unwrap();
        prop_assert!(tighter.upper_measure <= b.upper_measure);
        prop_assert!(tighter.lower_measure <= b.lower_measure);
    }

    #[test]
    fn float_format_is_lossless(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn interval_union_is_normalized(raw in prop::collection::vec((-0.5f64..1.5, 0.0f64..0.5), 0..12)) {
        let u = IntervalUnion::from_intervals(raw.iter().map(|&(l, w)| (l, l + w)));
        let iv = u.intervals();
        prop_assert!(iv.iter().all(|&(l, r)| 0.0 <= l && l < r && r <= 1.0));
        prop_assert!(iv.windows(2).all(|w| w[0].1 < w[1].0));
        let total: f64 = raw.iter().map(|&(_, w)| w).sum();
        prop_assert!(u.measure() <= total.min(1.0) + 1e-12);
    }

    #[test]
    fn naive_config_round_trips(
        eps in prop::collection::vec(1e-3f64..1.0, 1..4),
        theta in prop::collection::vec(0.0f64..=1.0, 1..4),
        n in 1u64..1_000_000,
        dt in prop::option::of(1e-6f64..1.0),
        seed in any::<u64>(),
        workers in prop::option::of(1usize..64),
    ) {
        let cfg = ExperimentConfig {
            experiment: Experiment::Naive(NaiveParams { epsilon: eps, theta, n, dt, refine_margin: 0.0 }),
            seed,
            workers,
            output_dir: "out/x".into(),
        };
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.content_hash(), cfg.content_hash());
    }

    #[test]
    fn corridor_config_round_trips(
        eps in prop::collection::vec(1e-3f64..0.5, 1..3),
        theta in prop::collection::vec(0.0f64..0.99, 1..3),
        gamma in prop::option::of(0.1f64..5.0),
        k_tune in prop::collection::vec(0.1f64..4.0, 1..3),
    ) {
        let cfg = ExperimentConfig {
            experiment: Experiment::Corridor(CorridorParams { epsilon: eps, theta, n: 10, gamma, k_tune, dt_fine: None }),
            seed: 3,
            workers: None,
            output_dir: "o".into(),
        };
        prop_assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wos_values_bounded(x in -3.0f64..3.0, y in -0.99f64..0.99, alpha in -2.0f64..2.0, seed in any::<u64>()) {
        let n = 64;
        let cfg = WosConfig::new(0.1, n);
        let e = wos_estimate(Point::new(x, y), alpha, &cfg, &mut StreamId::new(seed, 0, 0).stream()).unwrap().estimate;
        prop_assert!((0.0..=1.0).contains(&e.mean));
        prop_assert!(e.stderr <= 0.5 / (n as f64).sqrt() + 1e-12);
    }

    #[test]
    fn paths_depend_only_on_stream_id(seed in any::<u64>(), index in any::<u64>()) {
        let id = StreamId::new(seed, 1, index);
        let a = sample_path(0.01, 1.0, &mut id.stream()).unwrap();
        let b = sample_path(0.01, 1.0, &mut id.stream()).unwrap();
        prop_assert_eq!(a.points, b.points);
    }
}

#[test]
fn corridor_specs_valid_up_to_fifty() {
    for n in 1..=50 {
        corridor_centers(n).check_invariants().unwrap_or_else(|e| panic!("N = {n}: {e}"));
    }
}

#[test]
fn unordered_bound_parameters_are_flagged_not_fatal() {
    use sausage_core::cli::config::BoundsReportParams;
    use sausage_core::cli::output::Cell;
    for (c2, c4) in [(1.0, 1.0), (0.01, 1e-6)] {
        let exp = Experiment::BoundsReport(BoundsReportParams {
            epsilon: vec![0.3, 0.1, 0.05, 0.02, 0.01, 1e-3],
            theta: vec![0.1, 0.5, 0.9, 1.0],
            c1: 1.0,
            c2,
            c3: 1.0,
            c4,
        });
        let out = sausage_core::cli::execute(&exp, 0).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.table.rows.len(), 24);
        let params = BoundParams::new(1.0, c2, 1.0, c4).unwrap();
        let mut unordered = 0;
        for r in &out.table.rows {
            let (Cell::F(eps), Cell::F(theta)) = (&r[0], &r[1]) else { panic!("numeric columns") };
            let ordered = theorem1_bounds(*eps, *theta, &params).unwrap().is_ordered();
            assert_eq!(r[6], Cell::B(ordered));
            unordered += usize::from(!ordered);
        }
        if c4 < 1.0 {
            assert!(unordered > 0);
        }
    }
}
