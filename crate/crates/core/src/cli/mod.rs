//! The `covert` command-line front end.
//!
//! Every command resolves its inputs into a [`Job`] plus a [`SystemConfig`],
//! runs it, and writes the result behind a [`RunManifest`] header. `replay`
//! turns such a header back into the same job, so any output file can be
//! regenerated byte for byte.
//!
//! Exit codes: 0 success, 1 failed validation, 2 usage or configuration
//! error, 3 numeric failure.

mod manifest;
mod validate;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub use manifest::{RunManifest, TOOL_VERSION};
pub use validate::{Check, ValidationReport};

use crate::detector::ThresholdRule;
use crate::error::Error;
use crate::model::SystemConfig;
use crate::rate_opt::search::log_grid;
use crate::rate_opt::sweep::{format_sig12, write_figure1_csv, write_figure2_csv};
use crate::rate_opt::{optimize_power, sweep_figure1, sweep_figure2};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const DEFAULT_TRIALS: u64 = 100_000;

/// Default Figure 1 variants: `(L_max, ε)` pairs.
const DEFAULT_VARIANTS: [(u64, f64); 4] = [(100, 0.1), (100, 0.3), (1000, 0.1), (1000, 0.3)];

#[derive(Debug, Parser)]
#[command(name = "covert", version, about = "Covert throughput design under finite-blocklength constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON scenario file with fields M, lambda, L_max, delta, epsilon, gain_ab.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config field, e.g. `--set M=4` (repeatable).
    #[arg(long = "set", value_name = "FIELD=VALUE")]
    overrides: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; required by randomized commands, recorded by all.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trial count (randomized commands only).
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads for sweeps and trials (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal transmit power and blocklength for one scenario.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Covert blocklength cap L* against transmit power.
    Figure1 {
        #[command(flatten)]
        common: Common,
        /// Comma-separated `L_max:epsilon` pairs.
        #[arg(long)]
        variants: Option<String>,
        /// Log-spaced power grid `lo:hi:points`.
        #[arg(long, default_value = "1e-3:1e3:200")]
        grid: String,
    },
    /// Optimal covert throughput against the number of detector antennas.
    Figure2 {
        #[command(flatten)]
        common: Common,
        /// Antenna counts: `a:b` (inclusive), a comma list, or a single value.
        #[arg(long = "m-range", default_value = "1:32")]
        m_range: String,
        /// Comma-separated covertness levels; the config's epsilon when absent.
        #[arg(long)]
        epsilons: Option<String>,
        /// Also report throughput with the blocklength pinned to this value.
        #[arg(long = "fixed-l")]
        fixed_l: Option<u64>,
    },
    /// Analytic-versus-simulation cross-checks.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "p-a", default_value_t = 1.0)]
        p_a: f64,
        #[arg(long, default_value_t = 50)]
        l: u64,
        #[arg(long = "threshold-rule", value_enum, default_value_t = RuleArg::LikelihoodRatio)]
        rule: RuleArg,
        /// Test hook: scales the detector threshold.
        #[arg(long = "corrupt-threshold", hide = true, default_value_t = 1.0)]
        corrupt_threshold: f64,
    },
    /// Regenerate an output file from its embedded header.
    Replay {
        /// File previously written by this tool.
        file: PathBuf,
        /// Where to write; the recorded output path when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RuleArg {
    Printed,
    LikelihoodRatio,
}

impl From<RuleArg> for ThresholdRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Printed => ThresholdRule::Printed,
            RuleArg::LikelihoodRatio => ThresholdRule::LikelihoodRatio,
        }
    }
}

/// Fully resolved parameters of one run, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Job {
    Optimize,
    Figure1 {
        variants: Vec<(u64, f64)>,
        grid: (f64, f64, usize),
    },
    Figure2 {
        m_list: Vec<u32>,
        epsilons: Vec<f64>,
        fixed_l: Option<u64>,
    },
    Validate {
        trials: u64,
        p_a: f64,
        l: u64,
        rule: ThresholdRule,
        corrupt_threshold: f64,
    },
}

impl Job {
    fn name(&self) -> &'static str {
        match self {
            Job::Optimize => "optimize",
            Job::Figure1 { .. } => "figure1",
            Job::Figure2 { .. } => "figure2",
            Job::Validate { .. } => "validate",
        }
    }
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numeric_failure() { EXIT_NUMERIC } else { EXIT_USAGE },
            message: e.to_string(),
        }
    }
}

/// What a job produced: the file payload (written behind the manifest),
/// the console summary and the exit code.
struct Outcome {
    body: String,
    summary: String,
    code: i32,
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code. Nothing here panics on user input.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, argv, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, argv: Vec<String>, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let (common, job) = match command {
        Command::Replay { file, out, threads } => return replay(&file, out, threads, stdout),
        Command::Optimize { common } => (common, Job::Optimize),
        Command::Figure1 {
            common,
            variants,
            grid,
        } => {
            let variants = match variants {
                Some(text) => parse_variants(&text)?,
                None => DEFAULT_VARIANTS.to_vec(),
            };
            let job = Job::Figure1 {
                variants,
                grid: parse_grid(&grid)?,
            };
            (common, job)
        }
        Command::Figure2 {
            common,
            m_range,
            epsilons,
            fixed_l,
        } => {
            let m_list = parse_m_range(&m_range)?;
            let epsilons = epsilons.map(|e| parse_f64_list(&e, "--epsilons")).transpose()?;
            (common, Job::Figure2 {
                m_list,
                epsilons: epsilons.unwrap_or_default(),
                fixed_l,
            })
        }
        Command::Validate {
            common,
            p_a,
            l,
            rule,
            corrupt_threshold,
        } => {
            if common.seed.is_none() {
                return Err(Failure::usage("validate requires an explicit --seed"));
            }
            let job = Job::Validate {
                trials: common.trials.unwrap_or(DEFAULT_TRIALS),
                p_a,
                l,
                rule: rule.into(),
                corrupt_threshold,
            };
            (common, job)
        }
    };
    if common.trials.is_some() && !matches!(job, Job::Validate { .. }) {
        return Err(Failure::usage(format!("--trials has no effect on `{}`", job.name())));
    }
    let config = load_config(common.config.as_deref(), &common.overrides)?;
    // An absent epsilon list means "the config's epsilon"; resolve it now so
    // the manifest records the values actually used.
    let job = match job {
        Job::Figure2 {
            m_list,
            epsilons,
            fixed_l,
        } if epsilons.is_empty() => Job::Figure2 {
            m_list,
            epsilons: vec![config.epsilon.value()],
            fixed_l,
        },
        other => other,
    };
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        command: job.name().to_string(),
        argv,
        seed: common.seed,
        config,
        job,
        output_path: common.out.as_ref().map_or_else(|| "-".to_string(), |p| p.display().to_string()),
    };
    execute(&manifest, common.out, common.threads, stdout)
}

fn replay(file: &std::path::Path, out: Option<PathBuf>, threads: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::usage(format!("cannot read {}: {e}", file.display())))?;
    let manifest = RunManifest::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
    let target = out.or_else(|| (manifest.output_path != "-").then(|| PathBuf::from(&manifest.output_path)));
    execute(&manifest, target, threads, stdout)
}

fn execute(manifest: &RunManifest, out: Option<PathBuf>, threads: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let outcome = with_threads(threads, || run_job(manifest))??;
    let file = format!("{}{}", manifest.render(), outcome.body);
    let io = |e: std::io::Error| Failure::usage(format!("write failed: {e}"));
    match out {
        Some(path) => {
            std::fs::write(&path, file).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            stdout.write_all(outcome.summary.as_bytes()).map_err(io)?;
        }
        None => {
            if matches!(manifest.job, Job::Optimize) {
                stdout.write_all(outcome.summary.as_bytes()).map_err(io)?;
            } else {
                stdout.write_all(file.as_bytes()).map_err(io)?;
            }
        }
    }
    Ok(outcome.code)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    Ok(f())
}

fn run_job(manifest: &RunManifest) -> Result<Outcome, Failure> {
    let cfg = &manifest.config;
    match &manifest.job {
        Job::Optimize => {
            let result = optimize_power(cfg)?;
            let best = result.best;
            let mut summary = String::new();
            let _ = writeln!(summary, "P_a_star: {}", format_sig12(best.p_a));
            let _ = writeln!(summary, "L_star: {}", best.l);
            let _ = writeln!(summary, "rate: {}", format_sig12(best.rate));
            let _ = writeln!(summary, "throughput: {}", format_sig12(best.throughput));
            let _ = writeln!(summary, "covertness_binding: {}", result.covertness_binding);
            let _ = writeln!(summary, "feasible: {}", best.feasible);
            if !best.feasible {
                let _ = writeln!(summary, "note: no transmit power admits a nonnegative rate within the covertness budget; throughput is 0");
            }
            let mut body = String::from("P_a,throughput\n");
            for (p, t) in &result.power_grid_trace {
                let _ = writeln!(body, "{},{}", format_sig12(*p), format_sig12(*t));
            }
            Ok(Outcome {
                body,
                summary,
                code: EXIT_OK,
            })
        }
        Job::Figure1 { variants, grid } => {
            if variants.is_empty() {
                return Err(Failure::usage("figure1 needs at least one L_max:epsilon variant"));
            }
            let rows = sweep_figure1(cfg, &log_grid(grid.0, grid.1, grid.2), variants)?;
            let mut buf = Vec::new();
            write_figure1_csv(&mut buf, &rows).expect("writing to memory");
            Ok(Outcome {
                body: String::from_utf8(buf).expect("CSV is UTF-8"),
                summary: format!("figure1: {} rows\n", rows.len()),
                code: EXIT_OK,
            })
        }
        Job::Figure2 {
            m_list,
            epsilons,
            fixed_l,
        } => {
            if let Some(l) = fixed_l {
                if *l < 1 || *l > cfg.l_max {
                    return Err(Failure::usage(format!("--fixed-l {l} must lie in [1, L_max = {}]", cfg.l_max)));
                }
            }
            let rows = sweep_figure2(cfg, m_list, epsilons, *fixed_l)?;
            let mut buf = Vec::new();
            write_figure2_csv(&mut buf, &rows).expect("writing to memory");
            Ok(Outcome {
                body: String::from_utf8(buf).expect("CSV is UTF-8"),
                summary: format!("figure2: {} rows\n", rows.len()),
                code: EXIT_OK,
            })
        }
        Job::Validate {
            trials,
            p_a,
            l,
            rule,
            corrupt_threshold,
        } => {
            let seed = manifest.seed.ok_or_else(|| Failure::usage("validate requires --seed"))?;
            let report = validate::run_checks(cfg, seed, *trials, *p_a, *l, *rule, *corrupt_threshold)?;
            let body = report.render();
            let code = if report.passed() { EXIT_OK } else { EXIT_VALIDATION };
            let summary = format!("# seed: {seed}\n{body}");
            Ok(Outcome { body, summary, code })
        }
    }
}

/// Reads the config (or the baseline scenario when no file is given) and
/// applies `FIELD=VALUE` overrides before validation, so unknown fields are
/// rejected either way.
fn load_config(path: Option<&std::path::Path>, overrides: &[String]) -> Result<SystemConfig, Failure> {
    let mut value: serde_json::Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: malformed JSON: {e}", p.display())))?
        }
        None => serde_json::to_value(SystemConfig::baseline(1, 1000, 0.3)?).expect("config serializes"),
    };
    let object = value
        .as_object_mut()
        .ok_or_else(|| Failure::usage("config must be a JSON object"))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("override `{item}` is not FIELD=VALUE")))?;
        let parsed: serde_json::Value =
            serde_json::from_str(raw).map_err(|_| Failure::usage(format!("override `{item}`: value is not a number")))?;
        object.insert(key.to_string(), parsed);
    }
    Ok(SystemConfig::from_json(&value.to_string())?)
}

fn parse_f64(text: &str, what: &str) -> Result<f64, Failure> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Failure::usage(format!("{what}: `{text}` is not a number")))
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let values = split_list(text)
        .map(|t| parse_f64(t, what))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(Failure::usage(format!("{what}: empty list")));
    }
    Ok(values)
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn parse_variants(text: &str) -> Result<Vec<(u64, f64)>, Failure> {
    let variants = split_list(text)
        .map(|item| {
            let (l, e) = item
                .split_once(':')
                .ok_or_else(|| Failure::usage(format!("variant `{item}` is not L_max:epsilon")))?;
            let l_max = l
                .trim()
                .parse::<u64>()
                .map_err(|_| Failure::usage(format!("variant `{item}`: bad L_max")))?;
            Ok((l_max, parse_f64(e, "variant epsilon")?))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    if variants.is_empty() {
        return Err(Failure::usage("--variants: empty list"));
    }
    Ok(variants)
}

fn parse_grid(text: &str) -> Result<(f64, f64, usize), Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(Failure::usage(format!("--grid `{text}` is not lo:hi:points")));
    };
    let (lo, hi) = (parse_f64(lo, "--grid")?, parse_f64(hi, "--grid")?);
    let n = n
        .trim()
        .parse::<usize>()
        .map_err(|_| Failure::usage(format!("--grid `{text}`: bad point count")))?;
    if !(lo > 0.0 && hi.is_finite() && lo < hi && n >= 2) {
        return Err(Failure::usage(format!("--grid `{text}`: need 0 < lo < hi and at least 2 points")));
    }
    Ok((lo, hi, n))
}

fn parse_m_range(text: &str) -> Result<Vec<u32>, Failure> {
    let bad = || Failure::usage(format!("--m-range `{text}`: expected a:b, a list, or a single count"));
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let list = match text.split_once(':') {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        }
        None => split_list(text).map(parse).collect::<Result<Vec<_>, _>>()?,
    };
    if list.is_empty() || list.contains(&0) {
        return Err(bad());
    }
    Ok(list)
}
