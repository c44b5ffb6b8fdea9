//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 input parse error,
//! 3 verification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::convergence::{
    dense_subsequence_check, extract_dense_convergent_indices, stat_convergence_test,
    stat_r_convergence_test, stat_r_fundamental_test, StageSchedule,
};
use crate::corpus::{builtin_corpus, run_suite};
use crate::density::default_alpha;
use crate::error::Error;
use crate::fuzzy::{
    convexity_check, default_grid, defect_minimizer, first_convexity_violation, membership_of,
    normality_check, profile_on_grid, r_limit_set, step_grid,
};
use crate::io::{read_sequence, to_csv, write_sequence};
use crate::sequence::{generate, GeneratorSpec, RealSequence, SpikeSet};
use crate::stats::{mean_limit_check, partial_stats, std_limit_check, StatsSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

const DEFAULT_EPSILON: f64 = 0.01;
const DEFAULT_TAIL: f64 = 0.2;

#[derive(Debug, Parser)]
#[command(
    name = "statconv",
    version,
    about = "Statistical and fuzzy convergence diagnostics for real sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated sequence as CSV (or JSONL for a .jsonl path).
    Generate {
        #[arg(long = "gen", value_name = "KIND")]
        kind: String,
        #[arg(long)]
        n: usize,
        /// Generator parameter, repeatable.
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Limit candidate, convergence verdicts, profile shape and means summary.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: Common,
        #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, value_name = "M", allow_negative_numbers = true)]
        bound: Option<f64>,
    },
    /// Membership profile over a grid.
    Profile {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: Common,
        #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Dense index set along which the sequence r-converges to `a`.
    ExtractDense {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: Common,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a: f64,
        #[arg(long)]
        stages: Option<usize>,
    },
    /// Partial means and standard deviations.
    Stats {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: Common,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a: f64,
        /// Runs the mean and std limit checks at `a`, `r` when given.
        #[arg(long, value_name = "M", allow_negative_numbers = true)]
        bound: Option<f64>,
    },
    /// Theorem suite over the built-in corpus.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Source {
    #[arg(long, conflicts_with = "kind", required_unless_present = "kind")]
    pub input: Option<PathBuf>,
    #[arg(long = "gen", value_name = "KIND", requires = "n")]
    pub kind: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Defaults to max(0.01, 4 / sqrt(N)), capped at 0.5.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tail: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Tsv,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Parse(String),
    Verify(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) => CliError::Parse(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Parse(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_PARSE
        }
        Err(CliError::Verify(m)) => {
            let _ = writeln!(stderr, "verification failed: {m}");
            EXIT_VERIFY
        }
    }
}

fn parse_params(params: &[String]) -> CliResult<Vec<(String, String)>> {
    params
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| usage(format!("--param expects k=v, got {p:?}")))
        })
        .collect()
}

struct Params {
    entries: Vec<(String, String)>,
    used: Vec<bool>,
}

impl Params {
    fn new(raw: &[String]) -> CliResult<Self> {
        let entries = parse_params(raw)?;
        let used = vec![false; entries.len()];
        Ok(Params { entries, used })
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        self.used[pos] = true;
        Some(self.entries[pos].1.clone())
    }

    fn f64(&mut self, key: &str) -> CliResult<Option<f64>> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| usage(format!("--param {key}: not a number: {v:?}")))
            })
            .transpose()
    }

    fn finish(self) -> CliResult<()> {
        match self.entries.iter().zip(&self.used).find(|(_, &u)| !u) {
            Some(((k, _), _)) => Err(usage(format!("--param {k}: not used by this generator"))),
            None => Ok(()),
        }
    }
}

fn parse_spikes(v: &str) -> CliResult<SpikeSet> {
    match v {
        "none" => Ok(SpikeSet::None),
        "squares" => Ok(SpikeSet::Squares),
        _ => v
            .strip_prefix("multiples:")
            .and_then(|s| s.parse().ok())
            .map(|step| SpikeSet::Multiples { step })
            .ok_or_else(|| {
                usage(format!(
                    "--param spikes: expected none, squares or multiples:K, got {v:?}"
                ))
            }),
    }
}

fn build_generator(kind: &str, raw: &[String]) -> CliResult<GeneratorSpec> {
    let mut p = Params::new(raw)?;
    let spec = match kind {
        "square_spike_growing" => GeneratorSpec::SquareSpikeGrowing {
            spike: p.f64("spike")?,
        },
        "square_spike_alternating" => GeneratorSpec::SquareSpikeAlternating,
        "alternating_sqrt" => GeneratorSpec::AlternatingSqrt,
        "square_spike_big_alternating" => GeneratorSpec::SquareSpikeBigAlternating {
            spike: p.f64("spike")?.unwrap_or(1000.0),
        },
        "constant" => GeneratorSpec::Constant {
            c: p.f64("c")?.unwrap_or(0.0),
        },
        "iid_noise_around" => GeneratorSpec::IidNoiseAround {
            center: p.f64("center")?.unwrap_or(0.0),
            half_width: p.f64("half_width")?.unwrap_or(1.0),
            spikes: p
                .raw("spikes")
                .map(|v| parse_spikes(&v))
                .transpose()?
                .unwrap_or(SpikeSet::None),
            spike_value: p.f64("spike_value")?.unwrap_or(0.0),
            seed: p
                .raw("seed")
                .map(|v| {
                    v.parse()
                        .map_err(|_| usage(format!("--param seed: not an integer: {v:?}")))
                })
                .transpose()?
                .unwrap_or(0),
        },
        "custom_table" => {
            let values = p
                .raw("values")
                .ok_or_else(|| usage("--param values=v1,v2,.. is required for custom_table"))?;
            let values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| usage(format!("--param values: not a number: {v:?}")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            GeneratorSpec::CustomTable { values }
        }
        other => return Err(usage(format!("--gen: unknown generator {other:?}"))),
    };
    p.finish()?;
    Ok(spec)
}

fn load(source: &Source) -> CliResult<RealSequence> {
    match (&source.input, &source.kind) {
        (Some(path), _) => {
            if !source.params.is_empty() {
                return Err(usage("--param only applies with --gen"));
            }
            read_sequence(path).map_err(|e| match e {
                Error::Io(io) => CliError::Parse(format!("{}: {io}", path.display())),
                other => other.into(),
            })
        }
        (None, Some(kind)) => {
            let n = source.n.ok_or_else(|| usage("--gen requires --n"))?;
            let spec = build_generator(kind, &source.params)?;
            Ok(generate(&spec, n)?)
        }
        (None, None) => Err(usage("one of --input or --gen is required")),
    }
}

fn parse_grid(s: &str) -> CliResult<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[lo, hi, step]) => Ok((lo, hi, step)),
        _ => Err(usage(format!("--grid expects LO:HI:STEP, got {s:?}"))),
    }
}

#[derive(Debug, Clone, Serialize)]
struct Resolved {
    epsilon: f64,
    alpha: f64,
    r: Option<f64>,
    tail_fraction: f64,
}

fn resolve(opts: &Common, n: usize) -> CliResult<Resolved> {
    let resolved = Resolved {
        epsilon: opts.epsilon.unwrap_or(DEFAULT_EPSILON),
        alpha: opts.alpha.unwrap_or_else(|| default_alpha(n)),
        r: opts.r,
        tail_fraction: opts.tail.unwrap_or(DEFAULT_TAIL),
    };
    let e = resolved.epsilon;
    if !(e.is_finite() && e > 0.0) {
        return Err(usage(format!("--epsilon must be positive, got {e}")));
    }
    let a = resolved.alpha;
    if !(a.is_finite() && a > 0.0 && a < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {a}")));
    }
    if let Some(r) = resolved.r {
        if !(r.is_finite() && r >= 0.0) {
            return Err(usage(format!("--r must be nonnegative, got {r}")));
        }
    }
    let t = resolved.tail_fraction;
    if !(t.is_finite() && t > 0.0 && t <= 1.0) {
        return Err(usage(format!("--tail must lie in (0, 1], got {t}")));
    }
    Ok(resolved)
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| usage(format!("--out {}: {e}", path.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| usage(format!("stdout: {e}"))),
    }
}

/// `{"report": .., "envelope": {"wall_clock_ms": ..}}`; only the envelope
/// varies between runs.
fn wrap(report: Value, started: Instant) -> String {
    let doc = json!({
        "report": report,
        "envelope": { "wall_clock_ms": started.elapsed().as_millis() as u64 },
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
    s.push('\n');
    s
}

fn header(command: &str, l: &RealSequence) -> Value {
    json!({
        "tool": "statconv",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "input": l.origin(),
        "n": l.len(),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn require_format(
    format: Option<OutputFormat>,
    default: OutputFormat,
    allowed: &[OutputFormat],
) -> CliResult<OutputFormat> {
    let f = format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(usage(format!(
            "--format {f:?} is not available for this command"
        )))
    }
}

fn tail_summary(stats: &StatsSeries, tail_fraction: f64) -> Value {
    let n = stats.n_max();
    let start = crate::convergence::tail_start(n, tail_fraction);
    let tail = &stats.means[start - 1..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let std_hi = stats.stds[start - 1..].iter().copied().fold(0.0, f64::max);
    json!({
        "tail_start": start,
        "mean_n": stats.mean(n),
        "std_n": stats.std(n),
        "tail_mean_min": lo,
        "tail_mean_max": hi,
        "tail_mean_spread": hi - lo,
        "tail_std_max": std_hi,
        "clamped_variances": stats.clamped,
    })
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    match command {
        Command::Generate {
            kind,
            n,
            params,
            out,
        } => {
            let spec = build_generator(&kind, &params)?;
            let l = generate(&spec, n)?;
            match out {
                Some(path) => write_sequence(&l, &path)
                    .map_err(|e| usage(format!("--out {}: {e}", path.display()))),
                None => emit(None, &to_csv(&l), stdout),
            }
        }
        Command::Analyze {
            source,
            opts,
            grid,
            bound,
        } => {
            let l = load(&source)?;
            require_format(opts.format, OutputFormat::Json, &[OutputFormat::Json])?;
            let report = analyze(&l, &opts, grid.as_deref(), bound)?;
            emit(opts.out.as_deref(), &wrap(report, started), stdout)
        }
        Command::Profile { source, opts, grid } => {
            let l = load(&source)?;
            let format = require_format(
                opts.format,
                OutputFormat::Tsv,
                &[OutputFormat::Tsv, OutputFormat::Json],
            )?;
            let cfg = resolve(&opts, l.len())?;
            let grid_points = match grid.as_deref() {
                Some(g) => {
                    let (lo, hi, step) = parse_grid(g)?;
                    step_grid(lo, hi, step)?
                }
                None => default_grid(&l),
            };
            let profile = profile_on_grid(&l, grid_points, cfg.alpha)?;
            let text = match format {
                OutputFormat::Tsv => profile.to_tsv(),
                OutputFormat::Json => {
                    let limit_set = cfg
                        .r
                        .map(|r| r_limit_set(&profile, r, cfg.epsilon))
                        .transpose()?;
                    let report = merge(
                        header("profile", &l),
                        json!({
                            "config": cfg,
                            "profile": profile,
                            "normal": normality_check(&profile, cfg.epsilon),
                            "convex": convexity_check(&profile),
                            "r_limit_set": limit_set,
                        }),
                    );
                    wrap(report, started)
                }
            };
            emit(opts.out.as_deref(), &text, stdout)
        }
        Command::ExtractDense {
            source,
            opts,
            a,
            stages,
        } => {
            let l = load(&source)?;
            require_format(opts.format, OutputFormat::Json, &[OutputFormat::Json])?;
            let cfg = resolve(&opts, l.len())?;
            let r = cfg.r.unwrap_or(0.0);
            let schedule = match stages {
                Some(j) => StageSchedule::new(r, j)?,
                None => StageSchedule::with_default_stages(r, l.len())?,
            };
            let extraction = extract_dense_convergent_indices(&l, a, r, &schedule)?;
            let check =
                dense_subsequence_check(&l, &extraction.indices, a, r, cfg.epsilon, cfg.alpha)?;
            let report = merge(
                header("extract-dense", &l),
                json!({
                    "config": cfg,
                    "a": a,
                    "stages": schedule.stages(),
                    "extraction": extraction,
                    "subsequence_check": check,
                }),
            );
            emit(opts.out.as_deref(), &wrap(report, started), stdout)
        }
        Command::Stats {
            source,
            opts,
            a,
            bound,
        } => {
            let l = load(&source)?;
            let format = require_format(
                opts.format,
                OutputFormat::Tsv,
                &[OutputFormat::Tsv, OutputFormat::Json],
            )?;
            let cfg = resolve(&opts, l.len())?;
            let stats = partial_stats(&l);
            let text = match format {
                OutputFormat::Tsv => stats.to_tsv(),
                OutputFormat::Json => {
                    let checks = match bound {
                        Some(m) => {
                            let r = cfg.r.unwrap_or(0.0);
                            json!([
                                mean_limit_check(
                                    &l,
                                    a,
                                    r,
                                    m,
                                    cfg.epsilon,
                                    cfg.alpha,
                                    cfg.tail_fraction
                                )?,
                                std_limit_check(
                                    &l,
                                    a,
                                    r,
                                    m,
                                    cfg.epsilon,
                                    cfg.alpha,
                                    cfg.tail_fraction
                                )?,
                            ])
                        }
                        None => json!([]),
                    };
                    let report = merge(
                        header("stats", &l),
                        json!({
                            "config": cfg,
                            "summary": tail_summary(&stats, cfg.tail_fraction),
                            "consistency": stats.consistency(&l),
                            "theorem_checks": checks,
                            "series": stats,
                        }),
                    );
                    wrap(report, started)
                }
            };
            emit(opts.out.as_deref(), &text, stdout)
        }
        Command::Verify { out } => {
            let suite = run_suite(&builtin_corpus())?;
            let report = json!({
                "tool": "statconv",
                "version": env!("CARGO_PKG_VERSION"),
                "command": "verify",
                "suite": suite,
            });
            emit(out.as_deref(), &wrap(report, started), stdout)?;
            let _ = writeln!(
                stderr,
                "{} members, {} checks, {} conclusions evaluated, {} failures",
                suite.members.len(),
                suite.checks_run,
                suite.conclusions_evaluated,
                suite.failures.len()
            );
            if suite.passed() {
                Ok(())
            } else {
                Err(CliError::Verify(suite.failures.join("; ")))
            }
        }
    }
}

fn analyze(
    l: &RealSequence,
    opts: &Common,
    grid: Option<&str>,
    bound: Option<f64>,
) -> CliResult<Value> {
    let cfg = resolve(opts, l.len())?;
    let (eps, alpha) = (cfg.epsilon, cfg.alpha);
    let best = defect_minimizer(l, alpha)?;
    let (grid_points, grid_desc) = match grid {
        Some(g) => {
            let (lo, hi, step) = parse_grid(g)?;
            (
                step_grid(lo, hi, step)?,
                json!({ "lo": lo, "hi": hi, "step": step }),
            )
        }
        None => {
            let mut points = default_grid(l);
            let pos = points.partition_point(|&g| g < best.a);
            if points.get(pos) != Some(&best.a) {
                points.insert(pos, best.a);
            }
            (points, json!("auto"))
        }
    };
    let profile = profile_on_grid(l, grid_points, alpha)?;
    let (grid_argmin, grid_min_defect) = profile.argmin();

    let stat = stat_convergence_test(l, best.a, eps, alpha)?;
    let r_used = cfg.r.unwrap_or(best.value + eps);
    let stat_r = stat_r_convergence_test(l, best.a, r_used, eps, alpha)?;
    let fundamental = stat_r_fundamental_test(l, r_used, eps, alpha)?;

    let stats = partial_stats(l);
    let summary = tail_summary(&stats, cfg.tail_fraction);
    let means_settle = summary["tail_mean_spread"]
        .as_f64()
        .unwrap_or(f64::INFINITY)
        <= 2.0 * eps;
    let mut flags = Vec::new();
    if means_settle && !stat.holds {
        flags.push("means converge but sequence statistically diverges");
    }
    let checks = match bound {
        Some(m) => json!([
            mean_limit_check(l, best.a, r_used, m, eps, alpha, cfg.tail_fraction)?,
            std_limit_check(l, best.a, r_used, m, eps, alpha, cfg.tail_fraction)?,
        ]),
        None => json!([]),
    };

    Ok(merge(
        header("analyze", l),
        json!({
            "config": merge(serde_json::to_value(&cfg).expect("config serializes"), json!({ "grid": grid_desc, "bound": bound })),
            "candidate": {
                "a_hat": best.a,
                "defect": best.value,
                "membership": membership_of(best.value),
            },
            "stat": stat,
            "stat_r": stat_r,
            "fundamental": fundamental,
            "profile": {
                "points": profile.len(),
                "max_gap": profile.step,
                "grid_argmin": grid_argmin,
                "grid_min_defect": grid_min_defect,
                "max_membership": profile.max_membership(),
                "normal": normality_check(&profile, eps),
                "convex": convexity_check(&profile),
                "first_convexity_violation": first_convexity_violation(&profile).map(|g| profile.grid[g]),
            },
            "stats": summary,
            "theorem_checks": checks,
            "flags": flags,
        }),
    ))
}
