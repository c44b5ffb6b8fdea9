//! Values computed by an independent brute-force implementation (direct
//! summation, full sorts) and frozen here.

use statconv::convergence::{
    classical_r_limit_test, stat_convergence_test, stat_r_convergence_test,
    stat_r_fundamental_test_with_anchors, Witness,
};
use statconv::density::{default_alpha, deviation_index_set};
use statconv::fuzzy::{empirical_defect, fuzzy_limit_profile, membership_of};
use statconv::sequence::{generate, GeneratorSpec, NoiseStream, RealSequence, SpikeSet};
use statconv::stats::partial_stats;

fn growing_spikes(n: usize) -> RealSequence {
    generate(&GeneratorSpec::SquareSpikeGrowing { spike: None }, n).unwrap()
}
fn alternating_spikes(n: usize) -> RealSequence {
    generate(&GeneratorSpec::SquareSpikeAlternating, n).unwrap()
}
fn alternating_sqrt(n: usize) -> RealSequence {
    generate(&GeneratorSpec::AlternatingSqrt, n).unwrap()
}
fn big_alternating(n: usize) -> RealSequence {
    generate(&GeneratorSpec::big_alternating(), n).unwrap()
}

fn density_violators(w: &Witness) -> usize {
    match w {
        Witness::Density { violators, .. } => *violators,
        other => panic!("unexpected witness {other:?}"),
    }
}

#[test]
fn growing_spike_violator_counts() {
    let v = stat_convergence_test(&growing_spikes(10_000), 0.0, 0.01, 0.5).unwrap();
    assert_eq!(density_violators(&v.witness), 190);
    let v = stat_convergence_test(&growing_spikes(1_000_000), 0.0, 0.01, 0.004).unwrap();
    assert_eq!(density_violators(&v.witness), 1090);
    assert!(v.holds);
}

#[test]
fn alternating_spike_counts_at_radius_one() {
    let v = stat_r_convergence_test(&alternating_spikes(10_000), 0.0, 1.0, 0.1, 0.02).unwrap();
    assert_eq!(density_violators(&v.witness), 99);
    let v = stat_r_convergence_test(&big_alternating(10_000), 0.0, 1.0, 0.1, 0.02).unwrap();
    assert_eq!(density_violators(&v.witness), 100);
}

#[test]
fn alternating_spike_defects() {
    let l = alternating_spikes(10_000);
    assert_eq!(empirical_defect(&l, 0.0, 0.02).unwrap().value, 1.0);
    assert_eq!(empirical_defect(&l, 1.0, 0.02).unwrap().value, 2.0);
}

#[test]
fn alternating_spike_memberships() {
    let l = alternating_spikes(10_000);
    for (a, d, mu) in [
        (-3.0, 4.0, 0.2),
        (-1.5, 2.5, 0.2857142857142857),
        (0.0, 1.0, 0.5),
        (0.5, 1.5, 0.4),
        (2.0, 3.0, 0.25),
        (3.0, 4.0, 0.2),
    ] {
        let got = empirical_defect(&l, a, 0.01).unwrap().value;
        assert_eq!(got, d, "a = {a}");
        assert!((membership_of(got) - mu).abs() < 1e-15);
    }
}

#[test]
fn alternating_sqrt_oracles() {
    let l = alternating_sqrt(10_000);
    let s = partial_stats(&l);
    assert!((s.mean(10_000) - 0.00496).abs() < 5e-6);
    let tail_max = s.means[8000..].iter().map(|m| m.abs()).fold(0.0, f64::max);
    assert!((tail_max - 0.0056).abs() < 1e-4, "{tail_max}");

    let min_defect = |alpha| {
        let p = fuzzy_limit_profile(&l, -10.0, 10.0, 0.1, alpha).unwrap();
        p.argmin().1
    };
    assert!((min_defect(0.02) - 98.99).abs() < 0.01);
    assert!((min_defect(default_alpha(10_000)) - 97.95832428716125).abs() < 1e-9);
}

#[test]
fn alternating_sqrt_best_fundamental_density() {
    let l = alternating_sqrt(10_000);
    let all: Vec<usize> = (1..=10_000).collect();
    let v = stat_r_fundamental_test_with_anchors(&l, 1.0, 0.1, 0.5, &all).unwrap();
    match v.witness {
        Witness::Anchor { density, .. } => assert!((density - 0.9782).abs() < 1e-4),
        other => panic!("unexpected witness {other:?}"),
    }
}

#[test]
fn alternating_spike_anchor_counts() {
    let l = alternating_spikes(10_000);
    for anchor in [5000, 6000, 7000, 8000, 9000] {
        assert_eq!(l.get(anchor), Some(1.0));
        let v = stat_r_fundamental_test_with_anchors(&l, 2.0, 0.1, 0.02, &[anchor]).unwrap();
        match v.witness {
            Witness::Anchor { violators, .. } => assert_eq!(violators, 99),
            other => panic!("unexpected witness {other:?}"),
        }
    }
}

#[test]
fn deviation_set_of_alternating_spikes() {
    let set = deviation_index_set(&alternating_spikes(100), 0.0, 1.5);
    assert_eq!(set.indices(), &[4, 9, 16, 25, 36, 49, 64, 81, 100]);
}

#[test]
fn classical_window_of_big_alternating() {
    let v = classical_r_limit_test(&big_alternating(10_000), 0.0, 1.0, 0.1, 0.5).unwrap();
    assert!(!v.holds);
    match v.witness {
        Witness::TailWindow {
            start,
            violations,
            first_violation,
            ..
        } => {
            assert_eq!(start, 5001);
            assert_eq!(first_violation, Some(5041));
            assert_eq!(violations, 30);
        }
        other => panic!("unexpected witness {other:?}"),
    }
}

#[test]
fn big_alternating_moments() {
    let s = partial_stats(&big_alternating(10_000));
    assert!(s.mean(10_000).abs() < 1e-12);
    assert!((s.variances[9_999] - 10000.99).abs() < 1e-9);
}

#[test]
fn bounded_growing_spike_mean() {
    let l = generate(
        &GeneratorSpec::SquareSpikeGrowing { spike: Some(5.0) },
        1_000_000,
    )
    .unwrap();
    let s = partial_stats(&l);
    assert!((s.mean(1_000_000) - 0.005012748792156353).abs() < 1e-12);
}

#[test]
fn noise_stream_matches_reference() {
    let mut s = NoiseStream::new(42);
    let got: Vec<f64> = (0..3).map(|_| s.next_unit()).collect();
    assert_eq!(
        got,
        vec![
            0.1364606532878152,
            -0.5490731421044974,
            -0.17432336234097634
        ]
    );

    let spec = GeneratorSpec::IidNoiseAround {
        center: 2.0,
        half_width: 0.5,
        spikes: SpikeSet::None,
        spike_value: 0.0,
        seed: 7,
    };
    let l = generate(&spec, 3).unwrap();
    assert_eq!(
        l.values(),
        &[1.9932122668392296, 2.455659538405286, 2.406575821992613]
    );
}
