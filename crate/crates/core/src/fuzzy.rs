//! Empirical defect, membership and the fuzzy-limit profile.
//!
//! The defect of a candidate limit `a` is the smallest radius `r` at which
//! `a` is a stat-r limit. On a prefix it collapses to an order statistic of
//! the deviations `|a_i - a|`: sort ascending and take rank
//! `N - floor(alpha * N)` (1-based, duplicates kept). That rank is exactly the
//! one for which "at most `floor(alpha N)` deviations reach `r + eps`" holds
//! for every `eps > 0`, so the defect and [`crate::convergence`] agree.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::density::allowed_count;
use crate::error::{check_alpha, check_finite, check_nonnegative, check_positive, Error, Result};
use crate::sequence::RealSequence;

/// Grid size used when the caller gives no range.
pub const DEFAULT_GRID_POINTS: usize = 601;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectEstimate {
    pub a: f64,
    pub alpha: f64,
    pub value: f64,
}

/// 1-based rank of the deviation order statistic used as the defect.
pub fn defect_rank(n: usize, alpha: f64) -> usize {
    n.saturating_sub(allowed_count(n, alpha)).max(1)
}

/// Order-statistic defect of `a`, computed by selection on the deviations.
pub fn empirical_defect(l: &RealSequence, a: f64, alpha: f64) -> Result<DefectEstimate> {
    check_alpha(alpha)?;
    check_finite("a", a)?;
    let mut deviations: Vec<f64> = l.values().iter().map(|v| (v - a).abs()).collect();
    let rank = defect_rank(deviations.len(), alpha);
    let (_, kth, _) = deviations.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(DefectEstimate {
        a,
        alpha,
        value: kth.max(0.0),
    })
}

/// `1 / (1 + defect)`.
pub fn membership(d: &DefectEstimate) -> f64 {
    membership_of(d.value)
}

pub fn membership_of(defect: f64) -> f64 {
    1.0 / (1.0 + defect)
}

/// Sorted copy of a sequence's values, for evaluating many candidates.
///
/// The `k` smallest deviations from `a` always sit on a run of `k`
/// consecutive sorted values, and the largest deviation on a run is at one of
/// its ends, so the k-th smallest deviation is
/// `min_j max(a - x_j, x_{j+k-1} - a)`. The first term falls and the second
/// rises in `j`, so the minimum is found by bisection.
#[derive(Debug, Clone)]
pub struct SortedSample {
    sorted: Vec<f64>,
}

impl SortedSample {
    pub fn new(l: &RealSequence) -> Self {
        let mut sorted = l.values().to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        SortedSample { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// k-th smallest `|x_i - a|`, `1 <= k <= N`.
    pub fn kth_deviation(&self, a: f64, k: usize) -> f64 {
        let x = &self.sorted;
        let windows = x.len() - k + 1;
        let lower = |j: usize| a - x[j];
        let upper = |j: usize| x[j + k - 1] - a;
        // first window where the upper end is at least as far as the lower
        let (mut lo, mut hi) = (0, windows);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if upper(mid) < lower(mid) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let cross = lo;
        [cross.checked_sub(1), (cross < windows).then_some(cross)]
            .into_iter()
            .flatten()
            .map(|j| lower(j).max(upper(j)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn defect(&self, a: f64, alpha: f64) -> f64 {
        self.kth_deviation(a, defect_rank(self.len(), alpha))
            .max(0.0)
    }

    /// Exact minimizer of the defect: the midpoint of the shortest run of
    /// `k` consecutive sorted values (leftmost on ties).
    pub fn defect_minimizer(&self, alpha: f64) -> f64 {
        let k = defect_rank(self.len(), alpha);
        let x = &self.sorted;
        let mut best = (f64::INFINITY, 0);
        for j in 0..=x.len() - k {
            let width = x[j + k - 1] - x[j];
            if width < best.0 {
                best = (width, j);
            }
        }
        let j = best.1;
        x[j] + (x[j + k - 1] - x[j]) / 2.0
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }
}

/// Candidate with the smallest empirical defect over all reals.
pub fn defect_minimizer(l: &RealSequence, alpha: f64) -> Result<DefectEstimate> {
    check_alpha(alpha)?;
    let sample = SortedSample::new(l);
    let a = sample.defect_minimizer(alpha);
    Ok(DefectEstimate {
        a,
        alpha,
        value: sample.defect(a, alpha),
    })
}

/// Defects and memberships of a sequence over an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyLimitProfile {
    pub grid: Vec<f64>,
    pub defects: Vec<f64>,
    pub memberships: Vec<f64>,
    pub alpha: f64,
    pub n: usize,
    /// Largest gap between consecutive grid points (0 for a single point).
    pub step: f64,
}

impl FuzzyLimitProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Grid point with the smallest defect (first on ties).
    pub fn argmin(&self) -> (f64, f64) {
        let g = self
            .defects
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(g, _)| g)
            .expect("profiles are nonempty");
        (self.grid[g], self.defects[g])
    }

    pub fn max_membership(&self) -> f64 {
        self.memberships.iter().copied().fold(0.0, f64::max)
    }

    /// Two-column TSV `a<TAB>membership`, with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("a\tmembership\n");
        for (a, m) in self.grid.iter().zip(&self.memberships) {
            out.push_str(&format!("{a}\t{m}\n"));
        }
        out
    }
}

/// `lo, lo + step, .., <= hi`. A single point when `lo == hi`.
pub fn step_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    check_finite("lo", lo)?;
    check_finite("hi", hi)?;
    check_positive("step", step)?;
    if lo > hi {
        return Err(Error::param("grid", format!("lo {lo} exceeds hi {hi}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 50_000_000 {
        return Err(Error::param("grid", format!("{count} points is too many")));
    }
    Ok((0..count).map(|g| lo + g as f64 * step).collect())
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let last = (points - 1) as f64;
            (0..points)
                .map(|g| lo + (hi - lo) * (g as f64 / last))
                .collect()
        }
    }
}

/// `[min - 1, max + 1]` with [`DEFAULT_GRID_POINTS`] points.
pub fn default_grid(l: &RealSequence) -> Vec<f64> {
    let (lo, hi) = l
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    linspace(lo - 1.0, hi + 1.0, DEFAULT_GRID_POINTS)
}

/// Profile over `lo..=hi` in steps of `step`.
pub fn fuzzy_limit_profile(
    l: &RealSequence,
    lo: f64,
    hi: f64,
    step: f64,
    alpha: f64,
) -> Result<FuzzyLimitProfile> {
    profile_on_grid(l, step_grid(lo, hi, step)?, alpha)
}

/// Profile over an arbitrary strictly increasing grid.
pub fn profile_on_grid(l: &RealSequence, grid: Vec<f64>, alpha: f64) -> Result<FuzzyLimitProfile> {
    check_alpha(alpha)?;
    if grid.is_empty() {
        return Err(Error::param("grid", "needs at least one point"));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::param("grid", "points must be finite"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("grid", "points must be strictly increasing"));
    }
    let sample = SortedSample::new(l);
    let defects: Vec<f64> = grid.iter().map(|&a| sample.defect(a, alpha)).collect();
    let memberships = defects.iter().map(|&d| membership_of(d)).collect();
    let step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(FuzzyLimitProfile {
        grid,
        defects,
        memberships,
        alpha,
        n: l.len(),
        step,
    })
}

/// Grid estimate of the set of stat-r limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RLimitSetEstimate {
    pub r: f64,
    pub tolerance: f64,
    /// `[lo, hi]`, absent when no grid point qualifies.
    pub interval: Option<[f64; 2]>,
    /// First grid point inside the interval whose defect exceeds
    /// `r + tolerance + step`.
    pub convexity_violation: Option<f64>,
}

impl RLimitSetEstimate {
    pub fn is_convex(&self) -> bool {
        self.convexity_violation.is_none()
    }
}

pub fn r_limit_set(
    profile: &FuzzyLimitProfile,
    r: f64,
    tolerance: f64,
) -> Result<RLimitSetEstimate> {
    check_nonnegative("r", r)?;
    check_nonnegative("tolerance", tolerance)?;
    if profile.is_empty() {
        return Err(Error::param("profile", "needs at least one grid point"));
    }
    let level = r + tolerance;
    let inside: Vec<usize> = (0..profile.len())
        .filter(|&g| profile.defects[g] <= level)
        .collect();
    let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
        return Ok(RLimitSetEstimate {
            r,
            tolerance,
            interval: None,
            convexity_violation: None,
        });
    };
    let convexity_violation = (first + 1..last)
        .find(|&g| profile.defects[g] > level + profile.step)
        .map(|g| profile.grid[g]);
    Ok(RLimitSetEstimate {
        r,
        tolerance,
        interval: Some([profile.grid[first], profile.grid[last]]),
        convexity_violation,
    })
}

/// `max membership >= 1 - tol`.
pub fn normality_check(profile: &FuzzyLimitProfile, tol: f64) -> bool {
    profile.max_membership() >= 1.0 - tol
}

/// Every triple `x < y < z` on the grid has
/// `mu(y) >= min(mu(x), mu(z)) - step / (1 + min defect)^2`.
///
/// Profiles with fewer than three points pass vacuously.
pub fn convexity_check(profile: &FuzzyLimitProfile) -> bool {
    first_convexity_violation(profile).is_none()
}

/// Grid index of the first point breaking [`convexity_check`].
pub fn first_convexity_violation(profile: &FuzzyLimitProfile) -> Option<usize> {
    let m = &profile.memberships;
    if m.len() < 3 {
        return None;
    }
    let min_defect = profile
        .defects
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let slack = profile.step / (1.0 + min_defect).powi(2);
    let mut suffix_max = vec![f64::NEG_INFINITY; m.len()];
    for g in (0..m.len() - 1).rev() {
        suffix_max[g] = suffix_max[g + 1].max(m[g + 1]);
    }
    let mut prefix_max = m[0];
    for y in 1..m.len() - 1 {
        let bound = prefix_max.min(suffix_max[y]);
        if m[y].partial_cmp(&(bound - slack)) == Some(Ordering::Less) {
            return Some(y);
        }
        prefix_max = prefix_max.max(m[y]);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{generate, GeneratorSpec};

    fn alternating_spikes(n: usize) -> RealSequence {
        generate(&GeneratorSpec::SquareSpikeAlternating, n).unwrap()
    }

    fn zero(n: usize) -> RealSequence {
        generate(&GeneratorSpec::Constant { c: 0.0 }, n).unwrap()
    }

    /// Sort-and-index oracle.
    fn sorted_defect(l: &RealSequence, a: f64, alpha: f64) -> f64 {
        let mut d: Vec<f64> = l.values().iter().map(|v| (v - a).abs()).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len();
        let k = n - (alpha * n as f64).floor() as usize;
        d[k.max(1) - 1]
    }

    #[test]
    fn defect_of_constant_is_zero() {
        let l = generate(&GeneratorSpec::Constant { c: 3.0 }, 40).unwrap();
        assert_eq!(empirical_defect(&l, 3.0, 0.1).unwrap().value, 0.0);
    }

    #[test]
    fn defects_of_alternating_spikes() {
        let l = alternating_spikes(10_000);
        assert_eq!(defect_rank(10_000, 0.02), 9800);
        assert_eq!(empirical_defect(&l, 0.0, 0.02).unwrap().value, 1.0);
        assert_eq!(empirical_defect(&l, 1.0, 0.02).unwrap().value, 2.0);
        assert_eq!(sorted_defect(&l, 1.0, 0.02), 2.0);
    }

    #[test]
    fn memberships() {
        let d = |value| DefectEstimate {
            a: 0.0,
            alpha: 0.1,
            value,
        };
        assert_eq!(membership(&d(0.0)), 1.0);
        assert_eq!(membership(&d(1.0)), 0.5);
        assert_eq!(membership(&d(2.0)), 1.0 / 3.0);
    }

    #[test]
    fn sorted_sample_matches_selection() {
        let l = generate(
            &GeneratorSpec::IidNoiseAround {
                center: 1.0,
                half_width: 3.0,
                spikes: crate::sequence::SpikeSet::Squares,
                spike_value: -40.0,
                seed: 11,
            },
            997,
        )
        .unwrap();
        let s = SortedSample::new(&l);
        for alpha in [0.001, 0.05, 0.3, 0.9] {
            for k in -60..=60 {
                let a = k as f64 * 0.37;
                assert_eq!(
                    s.defect(a, alpha),
                    empirical_defect(&l, a, alpha).unwrap().value,
                    "a={a} alpha={alpha}"
                );
            }
        }
    }

    #[test]
    fn minimizer_beats_grid() {
        let l = alternating_spikes(10_000);
        let best = defect_minimizer(&l, 0.02).unwrap();
        assert_eq!((best.a, best.value), (0.0, 1.0));
        let p = fuzzy_limit_profile(&l, -3.0, 3.0, 0.05, 0.02).unwrap();
        assert!(p.defects.iter().all(|&d| d >= best.value));
    }

    #[test]
    fn profile_of_zero() {
        let l = zero(30);
        let p = fuzzy_limit_profile(&l, -1.0, 1.0, 0.25, 0.1).unwrap();
        assert_eq!(p.len(), 9);
        for (a, m) in p.grid.iter().zip(&p.memberships) {
            assert_eq!(*m, 1.0 / (1.0 + a.abs()));
        }
        let single = fuzzy_limit_profile(&l, 0.0, 0.0, 0.1, 0.1).unwrap();
        assert_eq!(
            (
                single.grid.clone(),
                single.defects.clone(),
                single.memberships.clone()
            ),
            (vec![0.0], vec![0.0], vec![1.0])
        );
        assert!(fuzzy_limit_profile(&l, 1.0, 0.0, 0.1, 0.1).is_err());
        assert!(fuzzy_limit_profile(&l, 0.0, 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn r_limit_sets() {
        let p = fuzzy_limit_profile(&zero(10), -1.0, 1.0, 0.01, 0.1).unwrap();
        let s = r_limit_set(&p, 0.5, 0.0).unwrap();
        let [lo, hi] = s.interval.unwrap();
        assert!((lo + 0.5).abs() <= 0.01 && (hi - 0.5).abs() <= 0.01);
        assert!(s.is_convex());
        let none = r_limit_set(
            &fuzzy_limit_profile(&alternating_spikes(1000), 2.0, 3.0, 0.1, 0.05).unwrap(),
            0.5,
            0.0,
        )
        .unwrap();
        assert_eq!(none.interval, None);
    }

    #[test]
    fn r_limit_set_flags_gaps() {
        let mut p = fuzzy_limit_profile(&zero(10), -1.0, 1.0, 0.1, 0.1).unwrap();
        p.defects[10] = 5.0;
        let s = r_limit_set(&p, 0.5, 0.0).unwrap();
        assert!(!s.is_convex());
        assert_eq!(s.convexity_violation, Some(p.grid[10]));
    }

    #[test]
    fn normality_and_convexity() {
        let p = fuzzy_limit_profile(&zero(10), -1.0, 1.0, 0.1, 0.1).unwrap();
        assert!(normality_check(&p, 0.0));
        assert!(convexity_check(&p));

        let q = fuzzy_limit_profile(&alternating_spikes(10_000), -3.0, 3.0, 0.1, 0.02).unwrap();
        assert!(!normality_check(&q, 0.4));
        assert!(convexity_check(&q));

        let mut dip = p.clone();
        dip.memberships[10] = 0.1;
        assert!(!convexity_check(&dip));
        assert_eq!(first_convexity_violation(&dip), Some(10));
    }

    #[test]
    fn tsv_layout() {
        let p = fuzzy_limit_profile(&zero(3), 0.0, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(p.to_tsv(), "a\tmembership\n0\t1\n1\t0.5\n");
    }
}
