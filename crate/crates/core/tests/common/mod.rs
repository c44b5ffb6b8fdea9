//! Strategies and property bodies shared by the property tests and the
//! acceptance runner.
//!
//! Sequence values are multiples of 1/256 with small numerators, so sums,
//! differences and integer multiples are exact in `f64`.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use statconv::convergence::{
    extract_dense_convergent_indices, stat_convergence_test, stat_r_convergence_test, StageSchedule,
};
use statconv::density::{intersect, is_statistically_dense, union, IndexSet};
use statconv::fuzzy::{empirical_defect, fuzzy_limit_profile, r_limit_set};
use statconv::sequence::{combine, scale, CombineOp, RealSequence};

pub fn dyadic(max_abs: i64) -> impl Strategy<Value = f64> {
    (-max_abs..=max_abs).prop_map(|k| k as f64 / 256.0)
}

/// Mostly values near the origin with occasional far outliers.
pub fn dyadic_values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    let point = prop_oneof![
        8 => dyadic(256),
        1 => dyadic(1 << 16),
    ];
    prop::collection::vec(point, 1..max_len)
}

pub fn seq(values: Vec<f64>) -> RealSequence {
    RealSequence::from_values(values).expect("finite values")
}

pub fn alpha() -> impl Strategy<Value = f64> {
    (1u32..100).prop_map(|k| k as f64 / 100.0)
}

pub fn positive_dyadic() -> impl Strategy<Value = f64> {
    (1i64..=512).prop_map(|k| k as f64 / 256.0)
}

pub fn nonnegative_dyadic() -> impl Strategy<Value = f64> {
    (0i64..=1024).prop_map(|k| k as f64 / 256.0)
}

fn defect(l: &RealSequence, a: f64, alpha: f64) -> f64 {
    empirical_defect(l, a, alpha).expect("valid alpha").value
}

pub fn lipschitz_case() -> impl Strategy<Value = (Vec<f64>, f64, f64, f64)> {
    (
        dyadic_values(120),
        dyadic(1 << 12),
        dyadic(1 << 12),
        alpha(),
    )
}

pub fn check_lipschitz(
    (values, a, b, alpha): (Vec<f64>, f64, f64, f64),
) -> Result<(), TestCaseError> {
    let l = seq(values);
    let gap = (defect(&l, a, alpha) - defect(&l, b, alpha)).abs();
    prop_assert!(
        gap <= (a - b).abs(),
        "gap {} against |a - b| = {}",
        gap,
        (a - b).abs()
    );
    Ok(())
}

pub fn scaling_case() -> impl Strategy<Value = (Vec<f64>, f64, i32, f64)> {
    (
        dyadic_values(120),
        dyadic(1 << 12),
        (-64i32..=64).prop_filter("nonzero", |k| *k != 0),
        alpha(),
    )
}

pub fn check_scaling(
    (values, a, k, alpha): (Vec<f64>, f64, i32, f64),
) -> Result<(), TestCaseError> {
    let l = seq(values);
    let k = k as f64;
    let scaled = scale(&l, k).expect("finite factor");
    prop_assert_eq!(
        defect(&scaled, k * a, alpha),
        k.abs() * defect(&l, a, alpha)
    );
    Ok(())
}

pub fn monotone_case() -> impl Strategy<Value = (Vec<f64>, f64, f64, f64, f64, f64, f64)> {
    (
        dyadic_values(120),
        dyadic(512),
        nonnegative_dyadic(),
        nonnegative_dyadic(),
        positive_dyadic(),
        alpha(),
        dyadic(512),
    )
}

/// Monotonicity in r, translation of the centre and the r = 0 reduction.
pub fn check_r_monotone(
    (values, a, r, dr, eps, alpha, b): (Vec<f64>, f64, f64, f64, f64, f64, f64),
) -> Result<(), TestCaseError> {
    let l = seq(values);
    let at_r = stat_r_convergence_test(&l, a, r, eps, alpha).unwrap();
    let wider = stat_r_convergence_test(&l, a, r + dr, eps, alpha).unwrap();
    prop_assert!(!at_r.holds || wider.holds);
    let moved = stat_r_convergence_test(&l, b, r + (b - a).abs(), eps, alpha).unwrap();
    prop_assert!(!at_r.holds || moved.holds);
    let zero = stat_r_convergence_test(&l, a, 0.0, eps, alpha).unwrap();
    let stat = stat_convergence_test(&l, a, eps, alpha).unwrap();
    prop_assert_eq!(zero.holds, stat.holds);
    prop_assert_eq!(&zero.witness, &stat.witness);
    Ok(())
}

pub fn density_case() -> impl Strategy<Value = (Vec<bool>, Vec<bool>, f64)> {
    (1usize..300).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::bool::weighted(0.9), n),
            prop::collection::vec(prop::bool::weighted(0.9), n),
            (1u32..50).prop_map(|k| k as f64 / 100.0),
        )
    })
}

fn to_set(mask: &[bool]) -> IndexSet {
    IndexSet::from_predicate(mask.len(), |i| mask[i - 1])
}

/// Finite inclusion-exclusion, complement and subset inequalities at every
/// prefix length, in integer arithmetic.
pub fn check_density_inequalities(
    (m1, m2, alpha): (Vec<bool>, Vec<bool>, f64),
) -> Result<(), TestCaseError> {
    let n = m1.len();
    let (k1, k2) = (to_set(&m1), to_set(&m2));
    let (both, either) = (intersect(&k1, &k2), union(&k1, &k2));
    let (c1, c2) = (k1.complement(), k2.complement());
    for m in 1..=n {
        let (a, b) = (k1.count_upto(m), k2.count_upto(m));
        let (i, u) = (both.count_upto(m), either.count_upto(m));
        prop_assert_eq!(i + u, a + b);
        prop_assert!(i + m >= a + b);
        prop_assert!(u <= a + b && u <= m);
        prop_assert!(i <= a.min(b));
        prop_assert_eq!(c1.count_upto(m) + a, m);
        prop_assert_eq!(c2.count_upto(m) + b, m);
    }
    if is_statistically_dense(&k1, n, alpha).unwrap()
        && is_statistically_dense(&k2, n, alpha).unwrap()
    {
        prop_assert!(is_statistically_dense(&both, n, 2.0 * alpha).unwrap());
    }
    Ok(())
}

pub fn nesting_case() -> impl Strategy<Value = (Vec<f64>, f64, f64, f64, f64)> {
    (
        dyadic_values(80),
        nonnegative_dyadic(),
        nonnegative_dyadic(),
        (0i64..=64).prop_map(|k| k as f64 / 256.0),
        alpha(),
    )
}

pub fn check_nesting(
    (values, r, dq, tol, alpha): (Vec<f64>, f64, f64, f64, f64),
) -> Result<(), TestCaseError> {
    let l = seq(values);
    let profile = fuzzy_limit_profile(&l, -4.0, 4.0, 0.125, alpha).unwrap();
    let inner = r_limit_set(&profile, r, tol).unwrap();
    let outer = r_limit_set(&profile, r + dq, tol).unwrap();
    if let Some([lo, hi]) = inner.interval {
        let Some([olo, ohi]) = outer.interval else {
            return Err(TestCaseError::fail("outer interval missing"));
        };
        prop_assert!(olo <= lo && hi <= ohi);
    }
    Ok(())
}

pub fn subadditive_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64, f64)> {
    (1usize..120).prop_flat_map(|n| {
        let point = prop_oneof![8 => dyadic(256), 1 => dyadic(1 << 16)];
        (
            prop::collection::vec(point.clone(), n),
            prop::collection::vec(point, n),
            dyadic(1024),
            dyadic(1024),
            alpha(),
        )
    })
}

pub fn check_subadditive(
    (lv, hv, a, b, alpha): (Vec<f64>, Vec<f64>, f64, f64, f64),
) -> Result<(), TestCaseError> {
    let (l, h) = (seq(lv), seq(hv));
    let sum = combine(&l, &h, CombineOp::Add).unwrap();
    let lhs = defect(&sum, a + b, alpha);
    let rhs = defect(&l, a, alpha / 2.0) + defect(&h, b, alpha / 2.0);
    prop_assert!(lhs <= rhs, "{} > {}", lhs, rhs);
    Ok(())
}

pub fn extraction_case() -> impl Strategy<Value = (Vec<f64>, f64, f64, usize)> {
    (
        dyadic_values(200),
        dyadic(256),
        nonnegative_dyadic(),
        1usize..6,
    )
}

/// Every index of K past the first cut lies in its block's stage set.
pub fn check_extraction(
    (values, a, r, stages): (Vec<f64>, f64, f64, usize),
) -> Result<(), TestCaseError> {
    let l = seq(values);
    let schedule = StageSchedule::new(r, stages).unwrap();
    let ex = extract_dense_convergent_indices(&l, a, r, &schedule).unwrap();
    prop_assert!(ex.cut_points.windows(2).all(|w| w[0] < w[1]));
    prop_assert_eq!(ex.cut_points.len(), ex.achieved_stage);
    let Some(&first) = ex.cut_points.first() else {
        prop_assert!(ex.indices.is_empty());
        return Ok(());
    };
    for &i in ex.indices.indices() {
        if i <= first {
            continue;
        }
        let j = ex.cut_points.partition_point(|&c| c <= i);
        let dev = (l.values()[i - 1] - a).abs();
        prop_assert!(
            dev < schedule.tolerance(j),
            "index {} in block {} has deviation {}",
            i,
            j,
            dev
        );
    }
    prop_assert!((1..=first).all(|i| ex.indices.contains(i)));
    Ok(())
}
