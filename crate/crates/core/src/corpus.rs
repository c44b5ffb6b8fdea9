//! Built-in bounded corpus and the theorem suite that runs over it.

use serde::Serialize;

use crate::convergence::{
    cauchy_bridge, classical_r_limit_test, stat_convergence_test, stat_r_convergence_test,
    CauchyBridge,
};
use crate::error::Result;
use crate::sequence::{generate, GeneratorSpec, RealSequence, SpikeSet};
use crate::stats::{
    characterization_check, mean_limit_check, means_fundamental_check, one_sided_converse_check,
    std_limit_check, Side, TheoremCheckReport, DEFAULT_TAIL_FRACTION,
};

/// A bounded sequence together with parameters at which it has a known
/// stat-r limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusMember {
    pub name: String,
    pub spec: GeneratorSpec,
    pub n: usize,
    pub a: f64,
    pub r: f64,
    pub m: f64,
    pub epsilon: f64,
    pub alpha: f64,
}

impl CorpusMember {
    pub fn sequence(&self) -> Result<RealSequence> {
        generate(&self.spec, self.n)
    }
}

#[allow(clippy::too_many_arguments)]
fn member(
    name: &str,
    spec: GeneratorSpec,
    n: usize,
    a: f64,
    r: f64,
    m: f64,
    epsilon: f64,
    alpha: f64,
) -> CorpusMember {
    CorpusMember {
        name: name.to_string(),
        spec,
        n,
        a,
        r,
        m,
        epsilon,
        alpha,
    }
}

fn noise(
    center: f64,
    half_width: f64,
    spikes: SpikeSet,
    spike_value: f64,
    seed: u64,
) -> GeneratorSpec {
    GeneratorSpec::IidNoiseAround {
        center,
        half_width,
        spikes,
        spike_value,
        seed,
    }
}

/// The twenty built-in members.
pub fn builtin_corpus() -> Vec<CorpusMember> {
    let spiked = GeneratorSpec::SquareSpikeGrowing { spike: Some(5.0) };
    let big = GeneratorSpec::big_alternating();
    let c = |c: f64| GeneratorSpec::Constant { c };
    use SpikeSet::{Multiples, Squares};
    vec![
        member(
            "bounded_spikes_1e6",
            spiked.clone(),
            1_000_000,
            0.0,
            0.0,
            5.0,
            0.01,
            0.02,
        ),
        member(
            "bounded_spikes_1e4",
            spiked.clone(),
            10_000,
            0.0,
            0.0,
            5.0,
            0.01,
            0.04,
        ),
        member(
            "bounded_spikes_r",
            spiked,
            100_000,
            0.0,
            0.5,
            5.0,
            0.05,
            0.02,
        ),
        member(
            "big_alternating_1e6",
            big.clone(),
            1_000_000,
            0.0,
            1.0,
            1000.0,
            0.1,
            0.02,
        ),
        member(
            "big_alternating_1e4",
            big.clone(),
            10_000,
            0.0,
            1.0,
            1000.0,
            0.1,
            0.02,
        ),
        member(
            "big_alternating_shifted",
            big,
            100_000,
            0.5,
            1.5,
            1000.0,
            0.1,
            0.02,
        ),
        member("constant_zero", c(0.0), 1_000, 0.0, 0.0, 1.0, 0.01, 0.02),
        member(
            "constant_negative",
            c(-3.5),
            5_000,
            -3.5,
            0.0,
            3.5,
            0.01,
            0.02,
        ),
        member(
            "constant_large",
            c(1000.0),
            10_000,
            1000.0,
            0.0,
            1000.0,
            0.01,
            0.02,
        ),
        member("constant_tiny", c(1e-6), 100, 1e-6, 0.0, 1.0, 0.01, 0.05),
        member(
            "noise_narrow",
            noise(0.0, 0.005, Squares, 10.0, 1),
            100_000,
            0.0,
            0.0,
            10.0,
            0.01,
            0.02,
        ),
        member(
            "noise_offset",
            noise(2.0, 0.3, Squares, -20.0, 2),
            100_000,
            2.0,
            0.3,
            20.0,
            0.01,
            0.02,
        ),
        member(
            "noise_unit",
            noise(-1.0, 1.0, Squares, 50.0, 3),
            100_000,
            -1.0,
            1.0,
            50.0,
            0.01,
            0.02,
        ),
        member(
            "noise_periodic_spikes",
            noise(5.0, 0.05, Multiples { step: 500 }, 100.0, 4),
            100_000,
            5.0,
            0.05,
            100.0,
            0.01,
            0.02,
        ),
        member(
            "noise_wide_1e6",
            noise(0.0, 2.0, Squares, 30.0, 5),
            1_000_000,
            0.0,
            2.0,
            30.0,
            0.05,
            0.02,
        ),
        member(
            "noise_quiet",
            noise(10.0, 0.001, Squares, 0.0, 6),
            10_000,
            10.0,
            0.0,
            10.01,
            0.01,
            0.04,
        ),
        member(
            "noise_no_spikes",
            noise(-7.0, 0.5, SpikeSet::None, 0.0, 7),
            10_000,
            -7.0,
            0.5,
            7.5,
            0.01,
            0.02,
        ),
        member(
            "noise_negative_spikes",
            noise(0.25, 0.1, Squares, -100.0, 8),
            100_000,
            0.25,
            0.1,
            100.0,
            0.01,
            0.02,
        ),
        member(
            "noise_sparse_dip",
            noise(3.0, 0.02, Multiples { step: 1000 }, -3.0, 9),
            100_000,
            3.0,
            0.02,
            3.02,
            0.01,
            0.02,
        ),
        member(
            "noise_tall_spikes",
            noise(0.0, 0.5, Squares, 1000.0, 10),
            100_000,
            0.0,
            0.5,
            1000.0,
            0.05,
            0.02,
        ),
    ]
}

/// Every check run on one corpus member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberReport {
    pub member: CorpusMember,
    pub theorem_checks: Vec<TheoremCheckReport>,
    pub cauchy_bridge: CauchyBridge,
    pub invariants: Vec<InvariantCheck>,
}

impl MemberReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .theorem_checks
            .iter()
            .filter(|t| !t.passed())
            .map(|t| format!("{}: {:?}", self.member.name, t.theorem))
            .collect();
        if !self.cauchy_bridge.passed() {
            out.push(format!("{}: cauchy_bridge", self.member.name));
        }
        out.extend(
            self.invariants
                .iter()
                .filter(|i| !i.holds)
                .map(|i| format!("{}: {}", self.member.name, i.name)),
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub holds: bool,
}

fn invariant(name: &str, holds: bool) -> InvariantCheck {
    InvariantCheck {
        name: name.to_string(),
        holds,
    }
}

/// Implication `p => q` as a boolean.
fn implies(p: bool, q: bool) -> bool {
    !p || q
}

fn convergence_invariants(l: &RealSequence, m: &CorpusMember) -> Result<Vec<InvariantCheck>> {
    let (a, r, eps, alpha) = (m.a, m.r, m.epsilon, m.alpha);
    let at_r = stat_r_convergence_test(l, a, r, eps, alpha)?.holds;
    let wider = stat_r_convergence_test(l, a, r + 1.0, eps, alpha)?.holds;
    let stat = stat_convergence_test(l, a, eps, alpha)?.holds;
    let at_zero = stat_r_convergence_test(l, a, 0.0, eps, alpha)?.holds;
    let shift = 3.25;
    let shifted =
        crate::sequence::RealSequence::from_values(l.values().iter().map(|v| v + shift).collect())?;
    let shifted_verdict = stat_r_convergence_test(&shifted, a + shift, r, eps, alpha)?.holds;
    let classical = classical_r_limit_test(l, a, r, eps, 1.0)?.holds;
    Ok(vec![
        invariant("r_monotone", implies(at_r, wider)),
        invariant("r_zero_reduces_to_stat", stat == at_zero),
        invariant("translation", shifted_verdict == at_r),
        invariant("classical_implies_stat", implies(classical, at_r)),
        invariant("member_has_stated_limit", at_r),
    ])
}

/// Runs the theorem checks, the Cauchy bridge and the convergence invariants
/// on one member.
pub fn check_member(m: &CorpusMember) -> Result<MemberReport> {
    let l = m.sequence()?;
    let tail = DEFAULT_TAIL_FRACTION;
    let mut checks = Vec::new();
    for r in [0.0, m.r] {
        checks.push(mean_limit_check(&l, m.a, r, m.m, m.epsilon, m.alpha, tail)?);
        checks.push(std_limit_check(&l, m.a, r, m.m, m.epsilon, m.alpha, tail)?);
        if m.r == 0.0 {
            break;
        }
    }
    let ch = characterization_check(&l, m.m, m.epsilon, m.alpha)?;
    checks.push(ch.necessity);
    checks.push(ch.sufficiency);
    for side in [Side::Below, Side::Above] {
        checks.push(one_sided_converse_check(&l, side, m.epsilon, m.alpha)?);
    }
    checks.push(means_fundamental_check(
        &l,
        2.0 * m.r,
        m.m,
        m.epsilon,
        m.alpha,
        tail,
    )?);
    let bridge = cauchy_bridge(&l, m.a, m.r, m.epsilon, m.alpha)?;
    let invariants = convergence_invariants(&l, m)?;
    Ok(MemberReport {
        member: m.clone(),
        theorem_checks: checks,
        cauchy_bridge: bridge,
        invariants,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub members: Vec<MemberReport>,
    pub checks_run: usize,
    pub conclusions_evaluated: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_suite(corpus: &[CorpusMember]) -> Result<SuiteReport> {
    let members = corpus
        .iter()
        .map(check_member)
        .collect::<Result<Vec<_>>>()?;
    let checks_run = members.iter().map(|m| m.theorem_checks.len() + 1).sum();
    let conclusions_evaluated = members
        .iter()
        .map(|m| {
            m.theorem_checks
                .iter()
                .filter(|t| t.conclusion.is_some())
                .count()
                + usize::from(m.cauchy_bridge.doubled_radius_holds.is_some())
        })
        .sum();
    let failures = members.iter().flat_map(MemberReport::failures).collect();
    Ok(SuiteReport {
        members,
        checks_run,
        conclusions_evaluated,
        failures,
    })
}
