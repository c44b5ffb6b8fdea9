//! Finite sequence prefixes and the generators that produce them.
//!
//! Indexing is 1-based throughout: `get(1)` is the first term. Values are
//! stored fully materialized and never mutated after construction.

use serde::{Deserialize, Serialize};

use crate::density::IndexSet;
use crate::error::{check_finite, Error, Result};

/// Multiplier of the noise generator's 64-bit linear congruential recurrence
/// `state <- state * LCG_MULTIPLIER + LCG_INCREMENT (mod 2^64)`.
pub const LCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
/// Increment of the noise generator's recurrence.
pub const LCG_INCREMENT: u64 = 1_442_695_040_888_963_407;

/// Where a sequence came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Origin {
    Generated { spec: GeneratorSpec, n: usize },
    File { path: String },
    Derived { description: String },
    Literal,
}

/// A finite prefix `a_1..a_N` of a real sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSequence {
    values: Vec<f64>,
    prefix_bound: f64,
    origin: Origin,
}

impl RealSequence {
    /// Builds a sequence; rejects empty input and non-finite values.
    pub fn new(values: Vec<f64>, origin: Origin) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("values", "a sequence needs at least one term"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(
                "values",
                format!("term {} is not finite ({})", pos + 1, values[pos]),
            ));
        }
        let prefix_bound = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(RealSequence {
            values,
            prefix_bound,
            origin,
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Origin::Literal)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Term `a_i` for `1 <= i <= N`.
    pub fn get(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|k| self.values.get(k).copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max |a_i|` over the stored prefix.
    pub fn prefix_bound(&self) -> f64 {
        self.prefix_bound
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    /// Iterates `(i, a_i)` with 1-based `i`.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(k, &v)| (k + 1, v))
    }
}

/// Which indices carry the planted spike value in the noise family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum SpikeSet {
    None,
    Squares,
    Multiples { step: usize },
}

impl SpikeSet {
    pub fn contains(&self, i: usize) -> bool {
        match self {
            SpikeSet::None => false,
            SpikeSet::Squares => is_perfect_square(i),
            SpikeSet::Multiples { step } => *step > 0 && i.is_multiple_of(*step),
        }
    }
}

/// Recipe for a deterministic sequence family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `a_i = i` on perfect squares (or `spike` when given), else `1/i`.
    SquareSpikeGrowing {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spike: Option<f64>,
    },
    /// `a_i = i` on perfect squares, else `(-1)^i`.
    SquareSpikeAlternating,
    /// `a_i = (-1)^i sqrt(i)`.
    AlternatingSqrt,
    /// `a_i = (-1)^i * spike` on perfect squares, else `(-1)^i`.
    SquareSpikeBigAlternating {
        spike: f64,
    },
    Constant {
        c: f64,
    },
    /// Seeded uniform noise in `[center - half_width, center + half_width]`,
    /// replaced by `spike_value` on the spike set.
    IidNoiseAround {
        center: f64,
        half_width: f64,
        spikes: SpikeSet,
        spike_value: f64,
        seed: u64,
    },
    /// Explicit values; `n` may not exceed the table length.
    CustomTable {
        values: Vec<f64>,
    },
}

impl GeneratorSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            GeneratorSpec::SquareSpikeGrowing { .. } => "square_spike_growing",
            GeneratorSpec::SquareSpikeAlternating => "square_spike_alternating",
            GeneratorSpec::AlternatingSqrt => "alternating_sqrt",
            GeneratorSpec::SquareSpikeBigAlternating { .. } => "square_spike_big_alternating",
            GeneratorSpec::Constant { .. } => "constant",
            GeneratorSpec::IidNoiseAround { .. } => "iid_noise_around",
            GeneratorSpec::CustomTable { .. } => "custom_table",
        }
    }

    /// The big alternating family with the classic spike height 1000.
    pub fn big_alternating() -> Self {
        GeneratorSpec::SquareSpikeBigAlternating { spike: 1000.0 }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            GeneratorSpec::SquareSpikeGrowing { spike: Some(s) } => check_finite("spike", *s),
            GeneratorSpec::SquareSpikeBigAlternating { spike } => check_finite("spike", *spike),
            GeneratorSpec::Constant { c } => check_finite("c", *c),
            GeneratorSpec::IidNoiseAround {
                center,
                half_width,
                spikes,
                spike_value,
                ..
            } => {
                check_finite("center", *center)?;
                check_finite("spike_value", *spike_value)?;
                if !(half_width.is_finite() && *half_width >= 0.0) {
                    return Err(Error::param(
                        "half_width",
                        format!("must be finite and nonnegative, got {half_width}"),
                    ));
                }
                if let SpikeSet::Multiples { step: 0 } = spikes {
                    return Err(Error::param("spikes", "multiples step must be positive"));
                }
                Ok(())
            }
            GeneratorSpec::CustomTable { values } => {
                if values.len() < n {
                    return Err(Error::param(
                        "values",
                        format!("table has {} entries, {} requested", values.len(), n),
                    ));
                }
                values.iter().try_for_each(|v| check_finite("values", *v))
            }
            _ => Ok(()),
        }
    }
}

pub fn is_perfect_square(i: usize) -> bool {
    let r = i.isqrt();
    r * r == i
}

fn alternating_sign(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Deterministic uniform stream on `[-1, 1)` driven by the documented LCG.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    state: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream { state: seed }
    }

    /// Advances the recurrence and maps the top 53 bits to `[-1, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        let u = (self.state >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0
    }
}

/// The first `n` terms of the family described by `spec`.
pub fn generate(spec: &GeneratorSpec, n: usize) -> Result<RealSequence> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    spec.validate(n)?;
    let values: Vec<f64> = match spec {
        GeneratorSpec::SquareSpikeGrowing { spike } => (1..=n)
            .map(|i| {
                if is_perfect_square(i) {
                    spike.unwrap_or(i as f64)
                } else {
                    1.0 / i as f64
                }
            })
            .collect(),
        GeneratorSpec::SquareSpikeAlternating => (1..=n)
            .map(|i| {
                if is_perfect_square(i) {
                    i as f64
                } else {
                    alternating_sign(i)
                }
            })
            .collect(),
        GeneratorSpec::AlternatingSqrt => (1..=n)
            .map(|i| alternating_sign(i) * (i as f64).sqrt())
            .collect(),
        GeneratorSpec::SquareSpikeBigAlternating { spike } => (1..=n)
            .map(|i| {
                let sign = alternating_sign(i);
                if is_perfect_square(i) {
                    sign * spike
                } else {
                    sign
                }
            })
            .collect(),
        GeneratorSpec::Constant { c } => vec![*c; n],
        GeneratorSpec::IidNoiseAround {
            center,
            half_width,
            spikes,
            spike_value,
            seed,
        } => {
            // one draw per index, spikes included, so the stream never shifts
            let mut stream = NoiseStream::new(*seed);
            (1..=n)
                .map(|i| {
                    let noise = center + half_width * stream.next_unit();
                    if spikes.contains(i) {
                        *spike_value
                    } else {
                        noise
                    }
                })
                .collect()
        }
        GeneratorSpec::CustomTable { values } => values[..n].to_vec(),
    };
    RealSequence::new(
        values,
        Origin::Generated {
            spec: spec.clone(),
            n,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    Add,
    Subtract,
}

/// Elementwise `l + h` or `l - h`.
pub fn combine(l: &RealSequence, h: &RealSequence, op: CombineOp) -> Result<RealSequence> {
    if l.len() != h.len() {
        return Err(Error::LengthMismatch {
            left: l.len(),
            right: h.len(),
        });
    }
    let values = l
        .values()
        .iter()
        .zip(h.values())
        .map(|(a, b)| match op {
            CombineOp::Add => a + b,
            CombineOp::Subtract => a - b,
        })
        .collect();
    let verb = match op {
        CombineOp::Add => "sum",
        CombineOp::Subtract => "difference",
    };
    RealSequence::new(
        values,
        Origin::Derived {
            description: format!("elementwise {verb}"),
        },
    )
}

/// Elementwise `k * a_i`.
pub fn scale(l: &RealSequence, k: f64) -> Result<RealSequence> {
    check_finite("k", k)?;
    let values = l.values().iter().map(|a| k * a).collect();
    RealSequence::new(
        values,
        Origin::Derived {
            description: format!("scaled by {k}"),
        },
    )
}

/// A subsequence together with the original indices it was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsequence {
    pub sequence: RealSequence,
    pub indices: IndexSet,
}

/// `l_K = (a_i : i in K)`, reindexed `1..|K|`.
pub fn subsequence(l: &RealSequence, k: &IndexSet) -> Result<Subsequence> {
    if let Some(&max) = k.indices().last() {
        if max > l.len() {
            return Err(Error::IndexOutOfRange {
                index: max,
                len: l.len(),
            });
        }
    }
    let values: Vec<f64> = k.indices().iter().map(|&i| l.values()[i - 1]).collect();
    let sequence = RealSequence::new(
        values,
        Origin::Derived {
            description: format!("subsequence on {} indices", k.len()),
        },
    )?;
    Ok(Subsequence {
        sequence,
        indices: k.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growing_spikes_first_terms() {
        let l = generate(&GeneratorSpec::SquareSpikeGrowing { spike: None }, 5).unwrap();
        assert_eq!(l.values(), &[1.0, 0.5, 1.0 / 3.0, 4.0, 0.2]);
    }

    #[test]
    fn alternating_spikes_first_terms() {
        let l = generate(&GeneratorSpec::SquareSpikeAlternating, 6).unwrap();
        // a_2 = (-1)^2 = 1
        assert_eq!(l.values(), &[1.0, 1.0, -1.0, 4.0, -1.0, 1.0]);
    }

    #[test]
    fn big_alternating_and_sqrt() {
        let l = generate(&GeneratorSpec::big_alternating(), 5).unwrap();
        assert_eq!(l.values(), &[-1000.0, 1.0, -1.0, 1000.0, -1.0]);
        let s = generate(&GeneratorSpec::AlternatingSqrt, 4).unwrap();
        assert_eq!(s.values(), &[-1.0, 2f64.sqrt(), -(3f64.sqrt()), 2.0]);
    }

    #[test]
    fn constant_and_bound() {
        let l = generate(&GeneratorSpec::Constant { c: 0.0 }, 3).unwrap();
        assert_eq!(l.values(), &[0.0, 0.0, 0.0]);
        assert_eq!(l.prefix_bound(), 0.0);
        let l = RealSequence::from_values(vec![1.0, -7.5, 3.0]).unwrap();
        assert_eq!(l.prefix_bound(), 7.5);
        assert_eq!(l.get(2), Some(-7.5));
        assert_eq!(l.get(0), None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RealSequence::from_values(vec![]).is_err());
        assert!(RealSequence::from_values(vec![1.0, f64::NAN]).is_err());
        assert!(generate(&GeneratorSpec::AlternatingSqrt, 0).is_err());
        let table = GeneratorSpec::CustomTable {
            values: vec![1.0, 2.0],
        };
        assert!(generate(&table, 3).is_err());
        let bad_noise = GeneratorSpec::IidNoiseAround {
            center: 0.0,
            half_width: -1.0,
            spikes: SpikeSet::None,
            spike_value: 0.0,
            seed: 1,
        };
        assert!(generate(&bad_noise, 3).is_err());
    }

    #[test]
    fn noise_is_seeded_and_bounded() {
        let spec = GeneratorSpec::IidNoiseAround {
            center: 2.0,
            half_width: 0.5,
            spikes: SpikeSet::Squares,
            spike_value: 50.0,
            seed: 7,
        };
        let a = generate(&spec, 1000).unwrap();
        let b = generate(&spec, 1000).unwrap();
        assert_eq!(a, b);
        for (i, v) in a.indexed() {
            if is_perfect_square(i) {
                assert_eq!(v, 50.0);
            } else {
                assert!((1.5..=2.5).contains(&v), "term {i} = {v}");
            }
        }
        // prefix of a longer run is the shorter run
        let c = generate(&spec, 10).unwrap();
        assert_eq!(c.values(), &a.values()[..10]);
    }

    #[test]
    fn lcg_first_draws() {
        let mut s = NoiseStream::new(0);
        let first = s.next_unit();
        let state = LCG_INCREMENT;
        let expected = 2.0 * ((state >> 11) as f64 / 9007199254740992.0) - 1.0;
        assert_eq!(first, expected);
    }

    #[test]
    fn combine_and_scale() {
        let l = RealSequence::from_values(vec![1.0, 2.0]).unwrap();
        let h = RealSequence::from_values(vec![3.0, 4.0]).unwrap();
        assert_eq!(
            combine(&l, &h, CombineOp::Add).unwrap().values(),
            &[4.0, 6.0]
        );
        let z = combine(&l, &l, CombineOp::Subtract).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        let short = RealSequence::from_values(vec![1.0]).unwrap();
        assert!(matches!(
            combine(&l, &short, CombineOp::Add),
            Err(Error::LengthMismatch { .. })
        ));
        let m = RealSequence::from_values(vec![1.0, -2.0]).unwrap();
        assert_eq!(scale(&m, -3.0).unwrap().values(), &[-3.0, 6.0]);
        assert_eq!(scale(&m, 1.0).unwrap().values(), m.values());
        assert!(scale(&m, f64::INFINITY).is_err());
    }

    #[test]
    fn subsequence_picks_squares() {
        let l = generate(&GeneratorSpec::SquareSpikeGrowing { spike: None }, 9).unwrap();
        let k = IndexSet::new(vec![1, 4, 9], 9).unwrap();
        let sub = subsequence(&l, &k).unwrap();
        assert_eq!(sub.sequence.values(), &[1.0, 4.0, 9.0]);
        assert_eq!(sub.indices.indices(), &[1, 4, 9]);

        let full = IndexSet::full(9);
        assert_eq!(
            subsequence(&l, &full).unwrap().sequence.values(),
            l.values()
        );

        let too_far = IndexSet::new(vec![10], 10).unwrap();
        assert!(matches!(
            subsequence(&l, &too_far),
            Err(Error::IndexOutOfRange { index: 10, .. })
        ));
    }

    #[test]
    fn subsequence_on_non_squares_is_reciprocal() {
        let l = generate(&GeneratorSpec::SquareSpikeGrowing { spike: None }, 100).unwrap();
        let k = IndexSet::from_predicate(100, |i| !is_perfect_square(i));
        let sub = subsequence(&l, &k).unwrap();
        assert_eq!(sub.sequence.len(), 90);
        for (j, &i) in k.indices().iter().enumerate() {
            assert_eq!(sub.sequence.values()[j], 1.0 / i as f64);
        }
    }
}
