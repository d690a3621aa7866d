use kakeya_core::scalar::{inv_pow, ratio};
use kakeya_core::sticky::{enumerate_realizations, TableField};
use kakeya_core::tube::Tube;
use kakeya_core::{BigRational, Scalar, Vertex};
use kakeya_harness::measure::{interval_pair_sum, interval_union, maximal_norm_floor, measure_union_bound};
use kakeya_harness::moments::{exhaustive_moments, slab_bounds, slab_pair_sum, slab_pair_sum_exact};
use kakeya_harness::model::Realization;
use kakeya_harness::simulate::simulate;
use kakeya_harness::{moments, ExperimentConfig, HarnessError};
use num_traits::Zero;
use proptest::prelude::*;

fn small() -> ExperimentConfig {
    ExperimentConfig { n_min: 2, n_max: 3, samples: 6, quadrature: 64, ..Default::default() }
}

#[test]
fn replay_is_byte_identical_across_thread_counts() {
    let cfg = small();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (simulate(&cfg).unwrap().to_json().unwrap(), moments::slab_moments(&cfg).unwrap().to_json().unwrap()))
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(3));
}

#[test]
fn first_moment_matches_ray_enumeration() {
    let cfg = ExperimentConfig { n_min: 2, n_max: 2, ..Default::default() };
    let (dirs, params) = cfg.model(2).unwrap();
    let leaves: Vec<Vertex> = (0..params.leaves()).map(|i| Vertex::from_index(3, 2, i)).collect();
    for gap in 1..=2 {
        let (a, b) = slab_bounds::<BigRational>(3, gap);
        let mut oracle = BigRational::zero();
        for &t1 in &leaves {
            for &t2 in &leaves {
                if t1 == t2 {
                    continue;
                }
                for a1 in 0..4u64 {
                    for a2 in 0..4u64 {
                        let targets = [Vertex::from_index(2, 2, a1), Vertex::from_index(2, 2, a2)];
                        let p = enumerate_realizations(&[t1, t2], &targets).unwrap();
                        if p.is_zero() {
                            continue;
                        }
                        let x = Tube::<BigRational>::new(&params, t1, &dirs.points[a1 as usize]);
                        let y = Tube::<BigRational>::new(&params, t2, &dirs.points[a2 as usize]);
                        oracle += p * kakeya_core::tube::pair_measure(&x, &y, &a, &b);
                    }
                }
            }
        }
        let (mean, _) = exhaustive_moments(&cfg, 2, gap).unwrap();
        assert_eq!(mean, oracle, "gap {gap}");
    }
}

#[test]
fn swept_pair_sum_matches_exact_on_every_field() {
    let cfg = ExperimentConfig { n_min: 2, n_max: 2, ..Default::default() };
    let (dirs, params) = cfg.model(2).unwrap();
    let thr = params.necessary_threshold().as_f64();
    for gap in 1..=2 {
        let (a, b) = slab_bounds::<BigRational>(3, gap);
        let (af, bf) = slab_bounds::<f64>(3, gap);
        let (mut s1, mut s2) = (0.0, 0.0);
        for mask in 0..1u64 << TableField::edge_count(3, 2) {
            let real = Realization::from_field(&dirs, &params, &TableField::from_mask(3, 2, mask));
            let fast = slab_pair_sum(&real.tubes(), af, bf, thr);
            let exact_tubes: Vec<Tube<BigRational>> = real
                .addresses
                .iter()
                .enumerate()
                .map(|(i, &ad)| Tube::new(&params, Vertex::from_index(3, 2, i as u64), &dirs.points[ad as usize]))
                .collect();
            let exact = slab_pair_sum_exact(&exact_tubes, &a, &b).as_f64();
            assert!((fast - exact).abs() <= 1e-12, "mask {mask}: {fast} vs {exact}");
            s1 += fast;
            s2 += fast * fast;
        }
        let (e1, e2) = exhaustive_moments(&cfg, 2, gap).unwrap();
        assert!((s1 / 4096.0 - e1.as_f64()).abs() <= 1e-12);
        assert!((s2 / 4096.0 - e2.as_f64()).abs() <= 1e-12);
    }
}

#[test]
fn single_ray_probability() {
    for n in 1..=5 {
        let t = Vertex::from_index(3, n, 7 % 3u64.pow(n));
        for a in 0..1u64 << n {
            let p = enumerate_realizations(&[t], &[Vertex::from_index(2, n, a)]).unwrap();
            assert_eq!(p, inv_pow(2, n));
            assert!(p <= inv_pow(2, n - 1) * ratio(2, 1));
        }
    }
}

#[test]
fn norm_floor_examples() {
    assert_eq!(maximal_norm_floor(4.0, 2.0, 1.5).unwrap(), 3.0);
    assert_eq!(maximal_norm_floor(1.0, 7.0, 2.0).unwrap(), 2.0);
    assert!((maximal_norm_floor(8.0, 3.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
    assert!(matches!(maximal_norm_floor(0.5, 2.0, 1.0), Err(HarnessError::Config(_))));
    assert!(matches!(maximal_norm_floor(2.0, 0.5, 1.0), Err(HarnessError::Config(_))));
}

#[test]
fn union_bound_rejects_bad_input() {
    assert!(measure_union_bound::<BigRational>(&[], &ratio(1, 1)).is_err());
    assert!(measure_union_bound(&[ratio(1, 2), ratio(1, 3)], &ratio(1, 1)).is_err());
    assert!(measure_union_bound(&[ratio(1, 2)], &BigRational::zero()).is_err());
    assert!(measure_union_bound(&[0.5, 0.5 * (1.0 + 1e-12)], &1.0).is_ok());
}

#[test]
fn config_guards() {
    let cfg = ExperimentConfig { d: 2, n_min: 8, n_max: 8, ..Default::default() };
    assert!(matches!(cfg.validate(), Err(HarnessError::Resource(_))));
    let raised = ExperimentConfig { max_leaves: 1 << 26, ..cfg };
    assert!(raised.validate().is_ok());
    let text = serde_json::to_string(&ExperimentConfig::default()).unwrap().replace("\"seed\"", "\"sed\"");
    assert!(ExperimentConfig::from_json(&text).is_err());
}

fn family() -> impl Strategy<Value = (i64, Vec<i64>)> {
    (1i64..50, prop::collection::vec(0i64..200, 1..12))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn union_bound_below_union((len, starts) in family()) {
        let alpha = ratio(len, 100);
        let ivs: Vec<(BigRational, BigRational)> =
            starts.iter().map(|&s| (ratio(s, 100), ratio(s, 100) + alpha.clone())).collect();
        let l = interval_pair_sum(&ivs);
        let bound = measure_union_bound(&vec![alpha; ivs.len()], &l).unwrap();
        prop_assert!(bound <= interval_union(&ivs));
    }
}
