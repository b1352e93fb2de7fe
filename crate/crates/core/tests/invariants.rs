use fcc::bootstrap::{resampling_p_value, wild_bootstrap_test, MultiplierLaw, NormalizationKind};
use fcc::estimate::estimate_from_responses;
use fcc::io::{parse_samples, write_samples};
use fcc::linalg::Matrix;
use fcc::metric::{distance, spd_from_log_cholesky, spd_log_cholesky_coords, MetricObject, Space, SpdMetric};
use fcc::partition::{Partition, PartitionConfig};
use fcc::special::{chi2_cdf, inv_normal_cdf, normal_cdf};
use fcc::{chatterjee_xi, pearson_r, ScalarPairSample};
use proptest::prelude::*;

fn euclid(rows: &[Vec<f64>]) -> Vec<MetricObject> {
    rows.iter().map(|r| MetricObject::Euclidean(r.clone())).collect()
}

fn paired(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    n.prop_flat_map(move |n| {
        (prop::collection::vec(-10.0..10.0f64, n), prop::collection::vec(prop::collection::vec(-5.0..5.0f64, d), n))
    })
}

fn sphere_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rho_hat_in_unit_interval((x, y) in paired(8..60, 2), h in 1usize..8, min_cell in 1usize..4) {
        let xs: Vec<MetricObject> = x.iter().map(|&v| MetricObject::Euclidean(vec![v])).collect();
        let ys = euclid(&y);
        let part = PartitionConfig::new(h, min_cell).build(&xs, &Space::euclidean(1)).unwrap();
        if let Ok(est) = estimate_from_responses(&ys, &Space::euclidean(2), &part) {
            prop_assert!((0.0..=1.0).contains(&est.rho_hat));
            let raw = 1.0 - est.within_variance() / est.v_f_hat;
            prop_assert!(raw > -1e-12 && raw < 1.0 + 1e-12);
        }
    }

    #[test]
    fn rho_hat_invariant_under_isometry((x, y) in paired(10..40, 2), angle in 0.0..6.28f64, shift in -3.0..3.0f64) {
        let xs: Vec<MetricObject> = x.iter().map(|&v| MetricObject::Euclidean(vec![v])).collect();
        let part = PartitionConfig::new(4, 2).build(&xs, &Space::euclidean(1)).unwrap();
        let (c, s) = (angle.cos(), angle.sin());
        let moved: Vec<Vec<f64>> = y.iter().map(|p| vec![c * p[0] - s * p[1] + shift, s * p[0] + c * p[1] - shift]).collect();
        let space = Space::euclidean(2);
        if let (Ok(a), Ok(b)) = (estimate_from_responses(&euclid(&y), &space, &part), estimate_from_responses(&euclid(&moved), &space, &part)) {
            prop_assert!((a.rho_hat - b.rho_hat).abs() < 1e-9);
        }
    }

    #[test]
    fn partition_covers_sample(x in prop::collection::vec(-10.0..10.0f64, 5..80), h in 1usize..12, min_cell in 1usize..5) {
        let xs: Vec<MetricObject> = x.iter().map(|&v| MetricObject::Euclidean(vec![v])).collect();
        let part = PartitionConfig::new(h, min_cell).build(&xs, &Space::euclidean(1)).unwrap();
        prop_assert_eq!(part.len(), x.len());
        prop_assert!(part.num_cells() >= 1 && part.num_cells() <= h);
        let sizes: usize = part.cell_members().iter().map(Vec::len).sum();
        prop_assert_eq!(sizes, x.len());
        if part.num_cells() > 1 {
            prop_assert!(part.min_cell_size() >= min_cell.min(x.len()));
        }
    }

    #[test]
    fn bootstrap_p_value_on_grid((x, y) in paired(10..40, 1), b in 1usize..40, seed in any::<u64>()) {
        let xs: Vec<MetricObject> = x.iter().map(|&v| MetricObject::Euclidean(vec![v])).collect();
        let part = PartitionConfig::new(3, 2).build(&xs, &Space::euclidean(1)).unwrap();
        if let Ok(r) = wild_bootstrap_test(&xs, &euclid(&y), &Space::euclidean(1), &part, b, MultiplierLaw::Rademacher, NormalizationKind::Identity, seed) {
            let k = r.p_value * (b + 1) as f64;
            prop_assert!((k - k.round()).abs() < 1e-9);
            prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
            prop_assert_eq!(r.replicates.len(), b);
        }
    }

    #[test]
    fn p_value_formula(obs in -5.0..5.0f64, reps in prop::collection::vec(-5.0..5.0f64, 0..50)) {
        let p = resampling_p_value(obs, &reps);
        let exceed = reps.iter().filter(|&&t| t >= obs).count();
        prop_assert_eq!(p, (1 + exceed) as f64 / (reps.len() + 1) as f64);
    }

    #[test]
    fn sphere_distance_is_metric(a in sphere_point(), b in sphere_point(), c in sphere_point()) {
        let space = Space::sphere(3);
        let (a, b, c) = (MetricObject::Sphere(a), MetricObject::Sphere(b), MetricObject::Sphere(c));
        let ab = distance(&space, &a, &b).unwrap();
        let ba = distance(&space, &b, &a).unwrap();
        let ac = distance(&space, &a, &c).unwrap();
        let cb = distance(&space, &c, &b).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!(ab <= 2.0 + 1e-12);
    }

    #[test]
    fn log_cholesky_round_trip(coords in prop::collection::vec(-2.0..2.0f64, 6)) {
        let m = spd_from_log_cholesky(3, &coords).unwrap();
        let back = spd_log_cholesky_coords(&m).unwrap();
        for (a, b) in back.iter().zip(&coords) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn spd_distances_symmetric(c1 in prop::collection::vec(-1.0..1.0f64, 3), c2 in prop::collection::vec(-1.0..1.0f64, 3)) {
        let a = MetricObject::Spd(spd_from_log_cholesky(2, &c1).unwrap());
        let b = MetricObject::Spd(spd_from_log_cholesky(2, &c2).unwrap());
        for metric in [SpdMetric::LogCholesky, SpdMetric::LogEuclidean] {
            let space = Space::spd(2, metric);
            let d = distance(&space, &a, &b).unwrap();
            prop_assert!((d - distance(&space, &b, &a).unwrap()).abs() < 1e-10);
            prop_assert!(distance(&space, &a, &a).unwrap() < 1e-10);
        }
    }

    #[test]
    fn sample_text_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6..1e6f64, 3), 1..20)) {
        let objs = euclid(&rows);
        let text = write_samples(&Space::euclidean(3), &objs);
        prop_assert_eq!(parse_samples(&text).unwrap().objects, objs);
    }

    #[test]
    fn baselines_bounded(x in prop::collection::vec(-5.0..5.0f64, 5..50), seed in any::<u64>()) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v.sin() + (seed.wrapping_add(i as u64) % 7) as f64).collect();
        let s = ScalarPairSample::new(x, y).unwrap();
        if let Ok(r) = pearson_r(&s) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
        prop_assert!(chatterjee_xi(&s) <= 1.0);
    }

    #[test]
    fn normal_quantile_inverts_cdf(u in 1e-10..(1.0 - 1e-10f64)) {
        let x = inv_normal_cdf(u).unwrap();
        prop_assert!((normal_cdf(x) - u).abs() < 1e-12 * u.min(1.0 - u).max(1e-3));
    }

    #[test]
    fn chi2_cdf_monotone(k in 1u32..30, a in 0.0..60.0f64, b in 0.0..60.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(chi2_cdf(lo, k) <= chi2_cdf(hi, k) + 1e-14);
    }
}

#[test]
fn cell_constant_response_gives_one() {
    let assign: Vec<usize> = (0..30).map(|i| i / 10).collect();
    let part = Partition::from_assignments(assign.clone(), 3).unwrap();
    let ys: Vec<MetricObject> = assign.iter().map(|&c| MetricObject::Euclidean(vec![c as f64 * 2.0, 1.0])).collect();
    let est = estimate_from_responses(&ys, &Space::euclidean(2), &part).unwrap();
    assert_eq!(est.rho_hat, 1.0);
}

#[test]
fn spd_identity_distance_zero() {
    let id = MetricObject::Spd(Matrix::identity(3));
    assert_eq!(distance(&Space::spd(3, SpdMetric::LogCholesky), &id, &id).unwrap(), 0.0);
}
