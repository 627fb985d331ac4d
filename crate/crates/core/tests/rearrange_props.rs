use std::collections::HashMap;

use num_complex::Complex64;
use proptest::prelude::*;

use varnorm_core::onsys::{l2_vp_norm, CoeffSeq, NormVariant, SampleMode, SamplePlan, SystemKind, SystemSpec};
use varnorm_core::rearrange::{
    apply_plan, block_moment_bound_check, dyadic_blocks, garsia_maxsum_moment, garsia_maxsum_moment_sampled,
    haar_counterexample_system, haar_ordering_coeffs, sample_plan, HaarFn, PlanMode, RearrangementPlan,
};
use varnorm_core::variation::{variation_exact, PartialSumPath};

const MODES: [PlanMode; 4] = [PlanMode::Identity, PlanMode::Uniform, PlanMode::Block, PlanMode::Signs];

fn coeffs(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
    let entry = prop_oneof![
        4 => (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b)),
        1 => (-12i32..2).prop_map(|e| Complex64::new(2f64.powi(e), 0.0)),
        1 => Just(Complex64::new(0.0, 0.0)),
    ];
    prop::collection::vec(entry, 1..=max).prop_filter("nonzero", |v| v.iter().any(|a| a.norm() > 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn plans_are_reproducible_bijections(a in coeffs(120), seed in any::<u64>()) {
        let c = CoeffSeq::new(a).unwrap();
        for mode in MODES {
            let plan = sample_plan(&c, mode, seed).unwrap();
            plan.validate().unwrap();
            prop_assert_eq!(&plan, &sample_plan(&c, mode, seed).unwrap());
            let mut seen = plan.permutation.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (1..=c.len()).collect::<Vec<_>>());

            let moved = apply_plan(&c, &plan).unwrap();
            prop_assert!((moved.total_mass() - c.total_mass()).abs() <= 1e-12 * c.total_mass());
            let back = apply_plan(&moved, &plan.inverse()).unwrap();
            prop_assert_eq!(back.coeffs(), c.coeffs());

            let json = plan.to_json().unwrap();
            let parsed = RearrangementPlan::from_json(&json).unwrap();
            prop_assert_eq!((parsed.mode, parsed.seed), (plan.mode, plan.seed));
            prop_assert_eq!(parsed.permutation, plan.permutation);
            prop_assert_eq!(parsed.signs, plan.signs);
        }
    }

    #[test]
    fn block_classes_occupy_intervals(a in coeffs(150), seed in any::<u64>()) {
        let c = CoeffSeq::new(a).unwrap();
        let parts = dyadic_blocks(&c).unwrap();
        let mut class_of = HashMap::new();
        for (&j, members) in &parts.classes {
            for &n in members {
                class_of.insert(n, Some(j));
            }
        }
        for &n in &parts.tail {
            class_of.insert(n, None);
        }
        prop_assert_eq!(class_of.len(), c.len());
        let plan = sample_plan(&c, PlanMode::Block, seed).unwrap();
        let labels: Vec<Option<u32>> = plan.permutation.iter().map(|n| class_of[n]).collect();
        let mut runs: Vec<Option<u32>> = labels.clone();
        runs.dedup();
        let mut distinct = runs.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(runs.len(), distinct.len(), "each class must be one run: {:?}", labels);
        if !parts.tail.is_empty() {
            prop_assert_eq!(labels.last().copied().flatten(), None);
            prop_assert!(labels[labels.len() - parts.tail.len()..].iter().all(Option::is_none));
        }
    }

    #[test]
    fn unimodular_scaling_invariance(a in coeffs(40), theta in 0.0f64..std::f64::consts::TAU, seed in any::<u64>()) {
        let c = CoeffSeq::new(a.clone()).unwrap();
        let u = Complex64::from_polar(1.0, theta);
        let rotated = CoeffSeq::new(a.iter().map(|x| x * u).collect()).unwrap();
        for mode in MODES {
            let pa = sample_plan(&c, mode, seed).unwrap();
            let pb = sample_plan(&rotated, mode, seed).unwrap();
            prop_assert_eq!(&pa.permutation, &pb.permutation);
            let va = variation_exact(&PartialSumPath::from_increments(apply_plan(&c, &pa).unwrap().coeffs()).unwrap(), 2.0).unwrap().value;
            let vb = variation_exact(&PartialSumPath::from_increments(apply_plan(&rotated, &pb).unwrap().coeffs()).unwrap(), 2.0).unwrap().value;
            prop_assert!((va - vb).abs() <= 1e-12 * (1.0 + va));
        }
    }

    #[test]
    fn disjoint_haar_system_has_no_variation_gain(a in prop::collection::vec(-3.0f64..3.0, 1..=10)) {
        let fns = haar_counterexample_system(a.len(), &vec![0; a.len()]).unwrap();
        for (i, f) in fns.iter().enumerate() {
            for g in &fns[i + 1..] {
                prop_assert!(f.disjoint(*g));
            }
        }
        let c = haar_ordering_coeffs(a.iter().map(|&x| Complex64::new(x, 0.0)).collect(), &fns).unwrap();
        let sys = SystemSpec::new(SystemKind::Haar, c.len());
        let plan = SamplePlan::new(SampleMode::DyadicMidpoints, 1 << (a.len() + 1), 0);
        let v = l2_vp_norm(&sys, &c, 2.0, &plan, NormVariant::Full).unwrap().value;
        prop_assert!((v - c.l2_norm()).abs() <= 1e-9 * (1.0 + c.l2_norm()));
    }

    #[test]
    fn exact_moment_agrees_with_sampling(xs in prop::collection::vec(-2.0f64..2.0, 2..=7), seed in any::<u64>()) {
        let exact = garsia_maxsum_moment(&xs, 0, 0).unwrap();
        prop_assert!(exact.exact);
        let mc = garsia_maxsum_moment_sampled(&xs, 4000, seed).unwrap();
        prop_assert!((mc.mean - exact.mean).abs() <= 5.0 * mc.stderr + 1e-12 * (1.0 + exact.mean));
    }

    #[test]
    fn block_moment_ratio_bounded(xs in prop::collection::vec(-2.0f64..2.0, 4..=8), l in 1usize..4) {
        let check = block_moment_bound_check(&xs, l, 0, 0).unwrap();
        prop_assert!(check.ratio <= 4.0, "{:?}", check);
    }
}

#[test]
fn block_on_flat_coefficients_is_uniform() {
    // Same seed, same permutation; and over many seeds every arrangement
    // of N <= 6 appears with the uniform frequency.
    for n in 1..=6usize {
        let c = CoeffSeq::from_real(&vec![1.0; n]).unwrap();
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let trials = 200 * (1..=n).product::<usize>();
        for s in 0..trials as u64 {
            let b = sample_plan(&c, PlanMode::Block, s).unwrap();
            assert_eq!(b.permutation, sample_plan(&c, PlanMode::Uniform, s).unwrap().permutation);
            *counts.entry(b.permutation).or_default() += 1;
        }
        let cells = (1..=n).product::<usize>();
        assert_eq!(counts.len(), cells);
        let e = trials as f64 / cells as f64;
        let chi: f64 = counts.values().map(|&k| (k as f64 - e).powi(2) / e).sum();
        // Generous 99.9% bound for up to 719 degrees of freedom.
        let df = (cells - 1) as f64;
        assert!(chi <= df + 4.0 * (2.0 * df).sqrt() + 10.0, "n={n} chi={chi}");
    }
}

#[test]
fn haar_fn_positions() {
    assert_eq!(HaarFn::from_position(1), HaarFn::Constant);
    assert_eq!(HaarFn::from_position(4), HaarFn::Kj { k: 1, j: 2 });
    assert_eq!(HaarFn::Kj { k: 3, j: 2 }.position(), Some(10));
}
