use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use varnorm_core::onsys::{
    finest_haar_level, omega_values, path_at, quadrature_estimate, rademacher_values, sample_points, trig_path,
    CoeffSeq, SampleMode, SamplePlan, SamplePoint, SystemKind, SystemSpec,
};
use varnorm_core::seed;
use varnorm_core::variation::{dyadic_upper_bound, sup_variation, variation_exact};

fn coeffs(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b)), 1..=max)
}

/// `sqrt(mean |S_N|²)` over the quadrature of `plan`.
fn l2_of_sum(system: &SystemSpec, c: &CoeffSeq, plan: &SamplePlan) -> f64 {
    quadrature_estimate(system, c, plan, |p| Ok(p.sums()[p.len()].norm())).unwrap().value
}

#[test]
fn trig_gram_is_identity() {
    for n in [1usize, 2, 7, 33, 100] {
        let m = 2 * n + 1;
        let ones = CoeffSeq::from_real(&vec![1.0; n]).unwrap();
        let rows: Vec<Vec<Complex64>> = (0..m)
            .map(|j| trig_path(&ones, j as f64 / m as f64).unwrap().increments().to_vec())
            .collect();
        for a in 0..n {
            for b in 0..n {
                let g: Complex64 = rows.iter().map(|r| r[a] * r[b].conj()).sum::<Complex64>() / m as f64;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((g - want).norm() < 1e-10, "n={n} ({a},{b}) {g}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_trig(a in coeffs(60)) {
        let c = CoeffSeq::new(a).unwrap();
        let sys = SystemSpec::new(SystemKind::Trig, c.len());
        let plan = SamplePlan::new(SampleMode::UniformGrid, 2 * c.len() + 1, 0);
        let l2 = l2_of_sum(&sys, &c, &plan);
        prop_assert!((l2 - c.l2_norm()).abs() <= 1e-9 * (1.0 + c.l2_norm()));
    }

    #[test]
    fn parseval_haar(a in coeffs(70)) {
        let c = CoeffSeq::new(a).unwrap();
        let sys = SystemSpec::new(SystemKind::Haar, c.len());
        let level = finest_haar_level(c.len()).map_or(0, |k| k + 1);
        let plan = SamplePlan::new(SampleMode::DyadicMidpoints, 1 << level, 0);
        let l2 = l2_of_sum(&sys, &c, &plan);
        prop_assert!((l2 - c.l2_norm()).abs() <= 1e-9 * (1.0 + c.l2_norm()));
    }

    #[test]
    fn parseval_rademacher(a in coeffs(12)) {
        let c = CoeffSeq::new(a).unwrap();
        let sys = SystemSpec::new(SystemKind::Rademacher, c.len());
        let plan = SamplePlan::new(SampleMode::DyadicMidpoints, 1 << c.len(), 0);
        let l2 = l2_of_sum(&sys, &c, &plan);
        prop_assert!((l2 - c.l2_norm()).abs() <= 1e-9 * (1.0 + c.l2_norm()));
    }

    #[test]
    fn pointwise_chain(a in coeffs(80), s in any::<u64>(), p in 1.0f64..4.0) {
        let c = CoeffSeq::new(a).unwrap();
        for (kind, mode) in [
            (SystemKind::Trig, SampleMode::RandomPoints),
            (SystemKind::Rademacher, SampleMode::CoinFlips),
            (SystemKind::GaussianCoeff, SampleMode::RandomPoints),
        ] {
            let sys = SystemSpec::new(kind, c.len());
            let quad = sample_points(kind, &SamplePlan::new(mode, 4, s)).unwrap();
            for &pt in &quad.points {
                let path = path_at(&sys, &c, pt).unwrap();
                let sup = sup_variation(&path).value;
                let v = variation_exact(&path, p).unwrap().value;
                let v2 = variation_exact(&path, 2.0).unwrap().value;
                prop_assert!(path.max_modulus() <= sup + 1e-12);
                prop_assert!(sup <= v + 1e-12);
                prop_assert!(v2 <= std::f64::consts::SQRT_2 * dyadic_upper_bound(&path) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn csv_round_trip(a in coeffs(40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let c = CoeffSeq::new(a).unwrap();
        c.write_csv(&path).unwrap();
        let back = CoeffSeq::read_csv(&path).unwrap();
        prop_assert_eq!(back.coeffs(), c.coeffs());
    }

    #[test]
    fn weights_sum_to_one(count in 2usize..200, levels in 0u32..12, s in any::<u64>()) {
        let plan = SamplePlan::new(SampleMode::RandomPoints, count, s).with_end_levels(levels);
        let q = sample_points(SystemKind::Trig, &plan).unwrap();
        prop_assert_eq!(q.len(), count + 2 * levels as usize);
        prop_assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for pt in &q.points {
            match pt {
                SamplePoint::X(x) => prop_assert!((0.0..=1.0).contains(x)),
                SamplePoint::Omega(_) => prop_assert!(false),
            }
        }
    }
}

/// Pearson statistic of `counts` against a uniform distribution.
fn chi_square(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// 99th percentile of chi-square with 255 degrees of freedom.
const CHI2_255_Q99: f64 = 310.457;

#[test]
fn rademacher_digits_are_uniform_signs() {
    let mut rng = seed::rng(2024);
    let mut counts = vec![0usize; 256];
    for _ in 0..256 * 100 {
        let x: f64 = rng.random();
        let r = rademacher_values(x, 8).unwrap();
        let idx = r.iter().fold(0usize, |acc, &s| 2 * acc + (s > 0.0) as usize);
        counts[idx] += 1;
    }
    let stat = chi_square(&counts);
    assert!(stat < CHI2_255_Q99, "{stat}");

    let sys = SystemSpec::new(SystemKind::Rademacher, 8);
    let mut counts = vec![0usize; 256];
    for w in 0..256 * 100u64 {
        let r = omega_values(&sys, seed::mix(99, &[w]), 8).unwrap();
        let idx = r.iter().fold(0usize, |acc, &s| 2 * acc + (s > 0.0) as usize);
        counts[idx] += 1;
    }
    let stat = chi_square(&counts);
    assert!(stat < CHI2_255_Q99, "{stat}");
}

#[test]
fn indep_bounded_moments() {
    let sys = SystemSpec::indep_bounded(64, 3.0);
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0.0);
    for w in 0..4000u64 {
        for v in omega_values(&sys, seed::mix(5, &[w]), 64).unwrap() {
            assert!(v.abs() <= 3.0);
            s1 += v;
            s2 += v * v;
            n += 1.0;
        }
    }
    assert!((s1 / n).abs() < 0.03, "{}", s1 / n);
    assert!((s2 / n - 1.0).abs() < 0.03, "{}", s2 / n);
}
