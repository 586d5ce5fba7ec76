use powerdiv::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn empirical_of_a_sample_sums_to_one(
        w in prop::collection::vec(0.0f64..1.0, 1..12),
        n in 1u64..5000,
        seed in any::<u64>(),
    ) {
        prop_assume!(w.iter().any(|&x| x > 0.0));
        let p = ProbVec::from_weights(w).unwrap();
        let c = sample_counts(&p, n, Seed::new(seed)).unwrap();
        prop_assert_eq!(c.n(), n);
        prop_assert_eq!(c.counts().iter().sum::<u64>(), n);
        for (x, pj) in c.counts().iter().zip(p.probs()) {
            if *pj == 0.0 {
                prop_assert_eq!(*x, 0);
            }
        }
        let s: f64 = c.empirical().unwrap().probs().iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn pearson_mean_under_the_hypothesis() {
    let q = ProbVec::uniform(5).unwrap();
    let n = 1000;
    let reps = 10_000;
    let d = simulate_statistics(&q, &q, Order::PEARSON, n, reps, Seed::new(20_240_501)).unwrap();
    let x2: Vec<f64> = d.iter().map(|v| 2.0 * n as f64 * v).collect();
    let mean = x2.iter().sum::<f64>() / reps as f64;
    let var = x2.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let se = (var / reps as f64).sqrt();
    assert!((mean - 4.0).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn null_mean_of_kl_statistic_is_small() {
    let q = ProbVec::uniform(4).unwrap();
    let d = simulate_statistics(&q, &q, Order::KL, 10_000, 1000, Seed::new(3)).unwrap();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    assert!(mean < 0.01, "{mean}");
    // E D₁ ≈ (k − 1)/(2n).
    assert!((mean - 1.5e-4).abs() < 5e-5, "{mean}");
}

#[test]
fn half_support_alternative_concentrates_at_ln_2() {
    let k = 10;
    let p = half_support_alternative(k).unwrap();
    let q = ProbVec::uniform(k).unwrap();
    let d = simulate_statistics(&p, &q, Order::KL, 100_000, 200, Seed::new(11)).unwrap();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    assert!((mean - std::f64::consts::LN_2).abs() < 0.02, "{mean}");
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let p = ProbVec::new(vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap();
    let q = ProbVec::uniform(5).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                simulate_statistics(&p, &q, Order::HELLINGER, 300, 2000, Seed::with_stream(9, 4))
                    .unwrap()
            })
    };
    let one = run(1);
    let many = run(4);
    assert_eq!(
        one.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        many.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn replicate_prefixes_are_stable() {
    let p = ProbVec::new(vec![0.5, 0.3, 0.2]).unwrap();
    let q = ProbVec::uniform(3).unwrap();
    let short = simulate_statistics(&p, &q, Order::KL, 50, 10, Seed::new(1)).unwrap();
    let long = simulate_statistics(&p, &q, Order::KL, 50, 100, Seed::new(1)).unwrap();
    assert_eq!(short[..], long[..10]);
}
