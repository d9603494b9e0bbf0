mod common;

use num_rational::Ratio;
use proptest::prelude::*;
use vide::problem::{builtin, Evaluator, KernelForm, ProblemSpec, Scope};
use vide::richardson::{
    build_tower, extrapolate, solve_tolerance, ErrorMode, ToleranceOptions, COEFFICIENTS,
};
use vide::solver::Solution;

type Q = Ratio<i64>;

#[test]
fn coefficient_rows_are_exact() {
    for (row, weights) in COEFFICIENTS.iter().enumerate() {
        let order = row + 2;
        assert_eq!(weights.len(), order);
        let c: Vec<Q> = weights.iter().map(|&(n, d)| Q::new(n, d)).collect();
        assert_eq!(c.iter().sum::<Q>(), Q::from_integer(1), "order {order}");
        for p in 1..order as u32 {
            // level k has stepsize h/2^k, so h^p picks up 2^(-kp)
            let moment: Q = c
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck * Q::new(1, 1 << (k as u32 * p)))
                .sum();
            assert_eq!(moment, Q::from_integer(0), "order {order}, h^{p}");
        }
    }
}

fn extrapolated_errors(id: usize, order: usize, ns: &[usize]) -> Vec<f64> {
    let spec = builtin(id).unwrap();
    ns.iter()
        .map(|&n| {
            let tower = build_tower(&spec, n).unwrap();
            let ex = extrapolate(&tower);
            let sol = Solution {
                grid: tower.base,
                values: ex.order(order).unwrap().clone(),
            };
            common::max_error(id, &sol)
        })
        .collect()
}

#[test]
fn extrapolants_raise_the_order() {
    let ns = [8, 16, 32, 64];
    let s2 = common::slope(&ns, &extrapolated_errors(8, 2, &ns));
    let s3 = common::slope(&ns, &extrapolated_errors(8, 3, &ns));
    assert!((s2 - 2.0).abs() <= 0.2, "Y2 slope {s2}");
    assert!((s3 - 3.0).abs() <= 0.3, "Y3 slope {s3}");
}

#[test]
fn higher_extrapolants_are_more_accurate() {
    let errs: Vec<f64> = (2..=5)
        .map(|p| extrapolated_errors(8, p, &[16])[0])
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tighter_tolerance_never_needs_fewer_steps(
        id in prop::sample::select(vec![5usize, 7, 8, 10, 14]),
        e1 in 4.0..11.0f64,
        gap in 0.0..2.0f64,
    ) {
        let spec = builtin(id).unwrap();
        let opts = ToleranceOptions::default();
        let loose = 10f64.powf(-e1);
        let tight = 10f64.powf(-(e1 + gap));
        let (_, a) = solve_tolerance(&spec, loose, ErrorMode::Absolute, &opts).unwrap();
        let (_, b) = solve_tolerance(&spec, tight, ErrorMode::Absolute, &opts).unwrap();
        prop_assert!(b.steps_selected >= a.steps_selected, "{} < {}", b.steps_selected, a.steps_selected);
    }
}

#[test]
fn tolerance_runs_are_deterministic() {
    let spec = builtin(13).unwrap();
    let opts = ToleranceOptions::default();
    let a = solve_tolerance(&spec, 1e-8, ErrorMode::Absolute, &opts).unwrap();
    let b = solve_tolerance(&spec, 1e-8, ErrorMode::Absolute, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn relative_mode_relaxes_large_solutions() {
    // y' = 1000·e^x scaled copy of example 8's growth, no kernel.
    let spec = ProblemSpec {
        order: 1,
        dim: 1,
        f: vec![Evaluator::parse("y", Scope::Rhs, 1).unwrap()],
        kernel: vec![KernelForm::zero()],
        interval: (0.0, 1.0),
        initial: vec![1000.0],
        exact: None,
    };
    let opts = ToleranceOptions::default();
    let (_, abs) = solve_tolerance(&spec, 1e-8, ErrorMode::Absolute, &opts).unwrap();
    let (sol, rel) = solve_tolerance(&spec, 1e-8, ErrorMode::Relative, &opts).unwrap();
    assert!(rel.steps_selected < abs.steps_selected);
    assert!(rel.error_estimate <= 1e-8);
    let end = sol.values[0][sol.grid.steps];
    assert!(((end - 1000.0 * 1f64.exp()) / end).abs() < 1e-8);
}

#[test]
fn unattainable_tolerance_is_reported() {
    let spec = builtin(3).unwrap();
    let opts = ToleranceOptions {
        max_level_steps: 4096,
        ..ToleranceOptions::default()
    };
    let err = solve_tolerance(&spec, 1e-12, ErrorMode::Absolute, &opts).unwrap_err();
    assert!(
        matches!(err, vide::richardson::ToleranceError::Unattainable { .. }),
        "{err}"
    );
}
