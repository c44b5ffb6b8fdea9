//! Index sets and their empirical density `|K ∩ [1, n]| / n`.
//!
//! Densities are always an exact integer count divided once at the end.
//! Every "density at most alpha" decision in the crate goes through
//! [`within_density`] so that thresholds agree bit-for-bit between modules.

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};
use crate::sequence::RealSequence;

/// Strictly increasing positive indices, all at most `horizon`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawIndexSet")]
pub struct IndexSet {
    horizon: usize,
    indices: Vec<usize>,
}

#[derive(Deserialize)]
struct RawIndexSet {
    horizon: usize,
    indices: Vec<usize>,
}

impl TryFrom<RawIndexSet> for IndexSet {
    type Error = Error;

    fn try_from(raw: RawIndexSet) -> Result<Self> {
        IndexSet::new(raw.indices, raw.horizon)
    }
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if indices.first() == Some(&0) {
            return Err(Error::param("indices", "indices are 1-based"));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::param(
                "indices",
                format!("not strictly increasing at {} -> {}", w[0], w[1]),
            ));
        }
        if let Some(&last) = indices.last() {
            if last > horizon {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    len: horizon,
                });
            }
        }
        Ok(IndexSet { horizon, indices })
    }

    /// `{1..n}`.
    pub fn full(n: usize) -> Self {
        IndexSet {
            horizon: n.max(1),
            indices: (1..=n).collect(),
        }
    }

    pub fn empty(horizon: usize) -> Self {
        IndexSet {
            horizon: horizon.max(1),
            indices: Vec::new(),
        }
    }

    /// `{i in 1..=n : keep(i)}`.
    pub fn from_predicate(n: usize, mut keep: impl FnMut(usize) -> bool) -> Self {
        IndexSet {
            horizon: n.max(1),
            indices: (1..=n).filter(|&i| keep(i)).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// `|{k in K : k <= n}|`.
    pub fn count_upto(&self, n: usize) -> usize {
        self.indices.partition_point(|&k| k <= n)
    }

    /// `[1, horizon] \ K`.
    pub fn complement(&self) -> IndexSet {
        let mut out = Vec::with_capacity(self.horizon - self.len());
        let mut next = self.indices.iter().peekable();
        for i in 1..=self.horizon {
            if next.peek() == Some(&&i) {
                next.next();
            } else {
                out.push(i);
            }
        }
        IndexSet {
            horizon: self.horizon,
            indices: out,
        }
    }
}

/// `|K ∩ [1, at_n]| / at_n`, with the integer count kept alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub at_n: usize,
    pub count: usize,
    pub value: f64,
}

impl DensityEstimate {
    pub fn new(count: usize, at_n: usize) -> Self {
        DensityEstimate {
            at_n,
            count,
            value: count as f64 / at_n as f64,
        }
    }
}

/// `count / n <= alpha`, evaluated as `count <= alpha * n`.
pub fn within_density(count: usize, n: usize, alpha: f64) -> bool {
    count as f64 <= alpha * n as f64
}

/// Largest count that still passes [`within_density`], i.e. `floor(alpha * n)`.
pub fn allowed_count(n: usize, alpha: f64) -> usize {
    (alpha * n as f64).floor() as usize
}

/// Density cutoff used when the caller gives none: `max(0.01, 4 / sqrt(n))`,
/// capped below 1.
pub fn default_alpha(n: usize) -> f64 {
    let a = (4.0 / (n.max(1) as f64).sqrt()).max(0.01);
    a.min(0.5)
}

pub fn empirical_density(k: &IndexSet, n: usize) -> Result<DensityEstimate> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    Ok(DensityEstimate::new(k.count_upto(n), n))
}

/// Densities at every prefix length `1..=n`.
pub fn density_profile(k: &IndexSet, n: usize) -> Result<Vec<DensityEstimate>> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(n);
    let mut count = 0;
    let mut members = k.indices().iter().peekable();
    for at in 1..=n {
        if members.peek() == Some(&&at) {
            members.next();
            count += 1;
        }
        out.push(DensityEstimate::new(count, at));
    }
    Ok(out)
}

/// Finite stand-in for `d(K) = 1`: the complement within `[1, n]` has
/// density at most `alpha`.
pub fn is_statistically_dense(k: &IndexSet, n: usize, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    let est = empirical_density(k, n)?;
    Ok(within_density(n - est.count, n, alpha))
}

/// `{i <= N : |a_i - a| >= t}`. Ties are included.
pub fn deviation_index_set(l: &RealSequence, a: f64, t: f64) -> IndexSet {
    IndexSet {
        horizon: l.len(),
        indices: l
            .indexed()
            .filter(|&(_, v)| (v - a).abs() >= t)
            .map(|(i, _)| i)
            .collect(),
    }
}

/// `|{i <= n : |a_i - a| >= t}|` without materializing the set.
pub fn deviation_count(l: &RealSequence, a: f64, t: f64, n: usize) -> usize {
    l.values()[..n.min(l.len())]
        .iter()
        .filter(|&&v| (v - a).abs() >= t)
        .count()
}

pub fn intersect(k1: &IndexSet, k2: &IndexSet) -> IndexSet {
    let (a, b) = (k1.indices(), k2.indices());
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    IndexSet {
        horizon: k1.horizon.min(k2.horizon),
        indices: out,
    }
}

pub fn union(k1: &IndexSet, k2: &IndexSet) -> IndexSet {
    let (a, b) = (k1.indices(), k2.indices());
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(take);
    }
    IndexSet {
        horizon: k1.horizon.max(k2.horizon),
        indices: out,
    }
}
