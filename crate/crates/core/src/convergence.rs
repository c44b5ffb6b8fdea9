//! Statistical convergence tests on a finite prefix.
//!
//! The limit definitions quantify over every `epsilon > 0` and ask for a
//! density-zero exceptional set. Here `epsilon` is a single given tolerance
//! and "density zero" is "empirical density at N at most `alpha`". Each
//! verdict records the parameters it was evaluated at.

use serde::{Deserialize, Serialize};

use crate::density::{
    deviation_count, empirical_density, is_statistically_dense, within_density, DensityEstimate,
    IndexSet,
};
use crate::error::{
    check_alpha, check_finite, check_nonnegative, check_positive, check_tail_fraction, Error,
    Result,
};
use crate::sequence::RealSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Stat,
    StatR,
    ClassicalR,
    StatRFundamental,
}

/// Diagnostic payload explaining a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// Violators `|a_i - a| >= r + epsilon` counted over the whole prefix.
    Density {
        n: usize,
        violators: usize,
        density: f64,
    },
    /// Classical test on the trailing window `[start, end]`.
    TailWindow {
        start: usize,
        end: usize,
        violations: usize,
        first_violation: Option<usize>,
        first_violation_value: Option<f64>,
    },
    /// Anchor search. `anchor` is the first anchor that passed, or the best
    /// one tried when none did.
    Anchor {
        anchor: usize,
        anchor_value: f64,
        violators: usize,
        density: f64,
        anchors_tried: Vec<usize>,
    },
    /// Restriction to an index set `K`; densities are measured against N.
    DenseSubsequence {
        subset_size: usize,
        subset_density: f64,
        subset_dense: bool,
        violators: usize,
        violator_density: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub kind: VerdictKind,
    pub holds: bool,
    pub a: Option<f64>,
    pub r: f64,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub witness: Witness,
}

fn density_verdict(
    kind: VerdictKind,
    l: &RealSequence,
    a: f64,
    r: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<ConvergenceVerdict> {
    check_finite("a", a)?;
    check_nonnegative("r", r)?;
    check_positive("epsilon", epsilon)?;
    check_alpha(alpha)?;
    let n = l.len();
    let violators = deviation_count(l, a, r + epsilon, n);
    Ok(ConvergenceVerdict {
        kind,
        holds: within_density(violators, n, alpha),
        a: Some(a),
        r,
        epsilon,
        alpha: Some(alpha),
        witness: Witness::Density {
            n,
            violators,
            density: DensityEstimate::new(violators, n).value,
        },
    })
}

/// `d_N({i : |a_i - a| >= epsilon}) <= alpha`.
pub fn stat_convergence_test(
    l: &RealSequence,
    a: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<ConvergenceVerdict> {
    density_verdict(VerdictKind::Stat, l, a, 0.0, epsilon, alpha)
}

/// `d_N({i : |a_i - a| >= r + epsilon}) <= alpha`.
pub fn stat_r_convergence_test(
    l: &RealSequence,
    a: f64,
    r: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<ConvergenceVerdict> {
    density_verdict(VerdictKind::StatR, l, a, r, epsilon, alpha)
}

/// First index of the trailing window holding the last `ceil(f * N)` terms.
pub fn tail_start(n: usize, tail_fraction: f64) -> usize {
    let width = ((tail_fraction * n as f64).ceil() as usize).clamp(1, n);
    n - width + 1
}

/// Every term in the trailing window satisfies `|a_i - a| < r + epsilon`.
pub fn classical_r_limit_test(
    l: &RealSequence,
    a: f64,
    r: f64,
    epsilon: f64,
    tail_fraction: f64,
) -> Result<ConvergenceVerdict> {
    check_finite("a", a)?;
    check_nonnegative("r", r)?;
    check_positive("epsilon", epsilon)?;
    check_tail_fraction(tail_fraction)?;
    let n = l.len();
    let start = tail_start(n, tail_fraction);
    let threshold = r + epsilon;
    let mut violations = 0;
    let mut first = None;
    for (i, v) in l.indexed().skip(start - 1) {
        if (v - a).abs() >= threshold {
            violations += 1;
            first.get_or_insert((i, v));
        }
    }
    Ok(ConvergenceVerdict {
        kind: VerdictKind::ClassicalR,
        holds: violations == 0,
        a: Some(a),
        r,
        epsilon,
        alpha: None,
        witness: Witness::TailWindow {
            start,
            end: n,
            violations,
            first_violation: first.map(|f| f.0),
            first_violation_value: first.map(|f| f.1),
        },
    })
}

/// Deterministic anchor sample: `ceil(q N)` for `q = 0.5, 0.6, .., 0.9`, then
/// the index holding the (lower) median value of the last half. Duplicates
/// are dropped, order is kept.
pub fn fundamental_anchors(l: &RealSequence) -> Vec<usize> {
    let n = l.len();
    let mut anchors: Vec<usize> = (5..=9).map(|k| ((k * n).div_ceil(10)).max(1)).collect();
    let half = n.div_ceil(2);
    let mut last_half: Vec<usize> = (n - half + 1..=n).collect();
    last_half.sort_by(|&i, &j| {
        l.values()[i - 1]
            .total_cmp(&l.values()[j - 1])
            .then(i.cmp(&j))
    });
    anchors.push(last_half[(last_half.len() - 1) / 2]);
    let mut seen = Vec::with_capacity(anchors.len());
    anchors.retain(|a| {
        if seen.contains(a) {
            false
        } else {
            seen.push(*a);
            true
        }
    });
    anchors
}

/// Some anchor `n0` from [`fundamental_anchors`] has
/// `d_N({i : |a_i - a_n0| >= r + epsilon}) <= alpha`.
pub fn stat_r_fundamental_test(
    l: &RealSequence,
    r: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<ConvergenceVerdict> {
    stat_r_fundamental_test_with_anchors(l, r, epsilon, alpha, &fundamental_anchors(l))
}

pub fn stat_r_fundamental_test_with_anchors(
    l: &RealSequence,
    r: f64,
    epsilon: f64,
    alpha: f64,
    anchors: &[usize],
) -> Result<ConvergenceVerdict> {
    check_nonnegative("r", r)?;
    check_positive("epsilon", epsilon)?;
    check_alpha(alpha)?;
    if anchors.is_empty() {
        return Err(Error::param("anchors", "need at least one anchor"));
    }
    let n = l.len();
    if let Some(&bad) = anchors.iter().find(|&&i| i == 0 || i > n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let threshold = r + epsilon;
    let mut best: Option<(usize, usize)> = None;
    let mut passed = None;
    for &anchor in anchors {
        let center = l.values()[anchor - 1];
        let violators = deviation_count(l, center, threshold, n);
        if best.is_none_or(|(_, v)| violators < v) {
            best = Some((anchor, violators));
        }
        if within_density(violators, n, alpha) {
            passed = Some((anchor, violators));
            break;
        }
    }
    let (anchor, violators) = passed.or(best).expect("anchors is nonempty");
    Ok(ConvergenceVerdict {
        kind: VerdictKind::StatRFundamental,
        holds: passed.is_some(),
        a: None,
        r,
        epsilon,
        alpha: Some(alpha),
        witness: Witness::Anchor {
            anchor,
            anchor_value: l.values()[anchor - 1],
            violators,
            density: DensityEstimate::new(violators, n).value,
            anchors_tried: anchors.to_vec(),
        },
    })
}

/// Stage tolerances `r + 1/j` for `j = 1..=stages`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    r: f64,
    stages: usize,
}

impl StageSchedule {
    pub fn new(r: f64, stages: usize) -> Result<Self> {
        check_nonnegative("r", r)?;
        if stages == 0 {
            return Err(Error::param("stages", "need at least one stage"));
        }
        Ok(StageSchedule { r, stages })
    }

    /// `ceil(log10 N)` stages, at least one.
    pub fn with_default_stages(r: f64, n: usize) -> Result<Self> {
        Self::new(r, default_stage_count(n))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    /// `r + 1/j`, 1-based `j`.
    pub fn tolerance(&self, j: usize) -> f64 {
        self.r + 1.0 / j as f64
    }
}

pub fn default_stage_count(n: usize) -> usize {
    let mut digits = 0;
    let mut p: u128 = 1;
    while p < n as u128 {
        p *= 10;
        digits += 1;
    }
    digits.max(1)
}

/// Result of the staged dense-subsequence construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub indices: IndexSet,
    /// `i_1 < i_2 < ..`, one per completed stage.
    pub cut_points: Vec<usize>,
    pub achieved_stage: usize,
    pub requested_stages: usize,
    pub density: DensityEstimate,
}

/// Builds `K = [1, i_1] ∪ ⋃_j {i in [i_j, i_{j+1}) : |a_i - a| < r + 1/j}`.
///
/// The cut `i_j` is the smallest index after `i_{j-1}` that lies in the
/// stage set and from which the stage set keeps density above `(j-1)/j` at
/// every prefix length up to N. If stage `j` has no cut, construction stops
/// at stage `j - 1`.
pub fn extract_dense_convergent_indices(
    l: &RealSequence,
    a: f64,
    r: f64,
    schedule: &StageSchedule,
) -> Result<Extraction> {
    check_finite("a", a)?;
    check_nonnegative("r", r)?;
    let n = l.len();
    let schedule = StageSchedule::new(r, schedule.stages())?;
    let deviations: Vec<f64> = l.values().iter().map(|v| (v - a).abs()).collect();

    let mut cuts: Vec<usize> = Vec::new();
    for j in 1..=schedule.stages() {
        let t = schedule.tolerance(j);
        let in_stage: Vec<bool> = deviations.iter().map(|&d| d < t).collect();
        let Some(from) = stage_density_start(&in_stage, j) else {
            break;
        };
        let after = cuts.last().map_or(1, |c| c + 1).max(from);
        match (after..=n).find(|&i| in_stage[i - 1]) {
            Some(cut) => cuts.push(cut),
            None => break,
        }
    }

    let indices = match cuts.first() {
        None => IndexSet::empty(n),
        Some(&first) => IndexSet::from_predicate(n, |i| {
            if i <= first {
                return true;
            }
            let block = cuts.partition_point(|&c| c <= i);
            deviations[i - 1] < schedule.tolerance(block)
        }),
    };
    let density = empirical_density(&indices, n)?;
    Ok(Extraction {
        indices,
        achieved_stage: cuts.len(),
        cut_points: cuts,
        requested_stages: schedule.stages(),
        density,
    })
}

/// Smallest `m` with `count(n) * j > (j - 1) * n` for every `n` in `[m, N]`.
fn stage_density_start(in_stage: &[bool], j: usize) -> Option<usize> {
    let n = in_stage.len();
    let mut prefix = Vec::with_capacity(n);
    let mut count: u64 = 0;
    for &s in in_stage {
        count += s as u64;
        prefix.push(count);
    }
    let (j, jm1) = (j as u64, (j - 1) as u64);
    let mut start = None;
    for m in (1..=n).rev() {
        if prefix[m - 1] * j > jm1 * m as u64 {
            start = Some(m);
        } else {
            break;
        }
    }
    start
}

/// Stat-r convergence restricted to `K`: `K` must be dense at `(N, alpha)`
/// and `|{i in K : |a_i - a| >= r + epsilon}| / N <= alpha`.
pub fn dense_subsequence_check(
    l: &RealSequence,
    k: &IndexSet,
    a: f64,
    r: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<ConvergenceVerdict> {
    check_finite("a", a)?;
    check_nonnegative("r", r)?;
    check_positive("epsilon", epsilon)?;
    check_alpha(alpha)?;
    let n = l.len();
    if let Some(&last) = k.indices().last() {
        if last > n {
            return Err(Error::IndexOutOfRange {
                index: last,
                len: n,
            });
        }
    }
    let dense = is_statistically_dense(k, n, alpha)?;
    let threshold = r + epsilon;
    let violators = k
        .indices()
        .iter()
        .filter(|&&i| (l.values()[i - 1] - a).abs() >= threshold)
        .count();
    Ok(ConvergenceVerdict {
        kind: VerdictKind::StatR,
        holds: dense && within_density(violators, n, alpha),
        a: Some(a),
        r,
        epsilon,
        alpha: Some(alpha),
        witness: Witness::DenseSubsequence {
            subset_size: k.len(),
            subset_density: DensityEstimate::new(k.count_upto(n), n).value,
            subset_dense: dense,
            violators,
            violator_density: DensityEstimate::new(violators, n).value,
        },
    })
}

/// Outcome of relating stat-r convergence to stat-r fundamentality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyBridge {
    pub a: f64,
    pub r: f64,
    pub epsilon: f64,
    pub alpha: f64,
    /// Stat-r holds at `(a, r, epsilon/2, alpha/2)`.
    pub convergence_premise: bool,
    /// First sampled anchor with `|a_n0 - a| < r + epsilon/2`.
    pub valid_anchor: Option<usize>,
    /// Fundamental at `(2r, epsilon, alpha)`; evaluated only when both
    /// premises hold.
    pub doubled_radius_holds: Option<bool>,
    /// Fundamental at `(r, epsilon, alpha)`; measured, never asserted.
    pub same_radius_holds: bool,
}

impl CauchyBridge {
    pub fn premises_hold(&self) -> bool {
        self.convergence_premise && self.valid_anchor.is_some()
    }

    /// False only when the premises hold and the doubled-radius test fails.
    pub fn passed(&self) -> bool {
        self.doubled_radius_holds != Some(false)
    }
}

/// The triangle inequality turns a stat-r limit plus a nearby anchor into
/// stat-(2r) fundamentality: `|a_i - a_n0| >= 2r + eps` forces
/// `|a_i - a| > r + eps/2`.
pub fn cauchy_bridge(
    l: &RealSequence,
    a: f64,
    r: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<CauchyBridge> {
    let premise = stat_r_convergence_test(l, a, r, epsilon / 2.0, alpha / 2.0)?;
    let anchors = fundamental_anchors(l);
    let valid_anchor = anchors
        .iter()
        .copied()
        .find(|&i| (l.values()[i - 1] - a).abs() < r + epsilon / 2.0);
    let doubled = if premise.holds && valid_anchor.is_some() {
        Some(stat_r_fundamental_test_with_anchors(l, 2.0 * r, epsilon, alpha, &anchors)?.holds)
    } else {
        None
    };
    let same = stat_r_fundamental_test_with_anchors(l, r, epsilon, alpha, &anchors)?.holds;
    Ok(CauchyBridge {
        a,
        r,
        epsilon,
        alpha,
        convergence_premise: premise.holds,
        valid_anchor,
        doubled_radius_holds: doubled,
        same_radius_holds: same,
    })
}
