//! Batch front end: config parsing, subcommand dispatch and deterministic
//! CSV/JSON output.
//!
//! Exit codes: 0 pass, 1 error, 2 a diagnostic gate failed.

mod config;
mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser};
use serde::Serialize;

pub use config::{parse_range, ExperimentConfig, LemmaOptions, Subcommand};
pub use output::{fmt_f64, fmt_opt, write_csv, write_json, Header, TOOL, VERSION};

use crate::chains::{simulate_path, ChainSpec};
use crate::clt_harness::{
    check_clt_conditions, run_clt_experiment, run_lemma_suite, CltConfig, ConditionSweep, LemmaSuiteConfig,
};
use crate::dependence::{check_eta_decay_condition, exact_profile, SlowlyVarying};
use crate::estimator::{
    bandwidth_regime_check, bias_second_order, centering_values, expected_kde, kde_evaluate, studentized_statistic,
    BandwidthSchedule, CenteringMode, RegimeMode,
};
use crate::kernels::Kernel;
use crate::numerics::RngStream;
use crate::{Error, Result};

use config::require;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_GATE_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "revkde",
    version,
    about = "Kernel density estimation for reversible Markov chains"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replicate fan-out.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Output directory (default: `output_dir` from the config, else `.`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Subcommand)]
pub enum Command {
    /// Simulate a stationary path; writes path.csv.
    Simulate {
        /// `ar1:<rho>`, `metropolis:<proposal sd>` or a JSON chain object.
        #[arg(long)]
        chain: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Estimate the density on one simulated path; writes kde.csv.
    Kde {
        #[arg(long)]
        chain: Option<String>,
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        /// Comma-separated evaluation points.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        points: Option<Vec<f64>>,
        #[arg(long, value_parser = parse_centering)]
        centering: Option<CenteringMode>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<RegimeMode>,
    },
    /// Exact dependence coefficients and the eta decay check; writes
    /// dependence.csv.
    Dependence {
        #[arg(long)]
        chain: Option<String>,
        /// `1..K` or `K`.
        #[arg(long)]
        lags: Option<String>,
        /// Slowly varying function: log | iterated_log | ramp.
        #[arg(long)]
        l: Option<String>,
    },
    /// Monte Carlo normality of the studentized estimator; writes
    /// clt_report.json and clt_samples.csv.
    Clt {
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Covariance relations on random reversible chains; writes
    /// lemma_report.json.
    LemmaCheck {
        #[arg(long)]
        chains: Option<usize>,
        /// `lo..hi` state counts.
        #[arg(long)]
        states: Option<String>,
        #[arg(long)]
        max_lag: Option<usize>,
        #[arg(long)]
        functions: Option<usize>,
    },
    /// Run the subcommand named in the config file.
    Run,
}

fn parse_centering(s: &str) -> std::result::Result<CenteringMode, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("{s:?}: expected exact_expectation | true_density | zero"))
}

fn parse_mode(s: &str) -> std::result::Result<RegimeMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("{s:?}: expected theorem1 | corollary"))
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Parse arguments, run, print the one-line summary to stderr and return the
/// exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(o) => {
            eprintln!("{}", o.summary);
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Merge flags over the config file and run.
pub fn run_cli(cli: &Cli) -> Result<Outcome> {
    let file = match &cli.global.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    let (sub, flags, schedule_parts) = flags_config(&cli.command, cli.global.seed)?;
    let sub = match (sub, file.subcommand) {
        (Some(s), Some(f)) if s != f => {
            return Err(Error::Config(format!(
                "config is for `{}` but `{}` was requested",
                f.name(),
                s.name()
            )))
        }
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => return Err(Error::Config("missing field `subcommand` (required by run)".into())),
    };
    let mut cfg = flags.or(file);
    cfg.subcommand = Some(sub);
    let (c, beta) = schedule_parts;
    if c.is_some() || beta.is_some() {
        let c = c.or(cfg.schedule.map(|s| s.c)).unwrap_or(1.0);
        let beta = beta
            .or(cfg.schedule.map(|s| s.beta))
            .ok_or_else(|| Error::Config("missing field `schedule.beta`".into()))?;
        cfg.schedule = Some(BandwidthSchedule { c, beta });
    }
    let out = cli
        .global
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    run_config(&cfg, cli.global.workers, &out)
}

type FlagParts = (Option<Subcommand>, ExperimentConfig, (Option<f64>, Option<f64>));

fn flags_config(cmd: &Command, seed: Option<u64>) -> Result<FlagParts> {
    let chain = |s: &Option<String>| s.as_deref().map(ChainSpec::parse_inline).transpose();
    let mut cfg = ExperimentConfig {
        seed,
        ..Default::default()
    };
    let mut schedule = (None, None);
    let sub = match cmd {
        Command::Simulate { chain: ch, n } => {
            cfg.chain = chain(ch)?;
            cfg.n = *n;
            Subcommand::Simulate
        }
        Command::Kde {
            chain: ch,
            kernel,
            n,
            beta,
            c,
            points,
            centering,
            mode,
        } => {
            cfg.chain = chain(ch)?;
            cfg.kernel = kernel.clone();
            cfg.n = *n;
            cfg.points = points.clone();
            cfg.centering = *centering;
            cfg.mode = *mode;
            schedule = (*c, *beta);
            Subcommand::Kde
        }
        Command::Dependence { chain: ch, lags, l } => {
            cfg.chain = chain(ch)?;
            cfg.lags = lags
                .as_deref()
                .map(|s| {
                    let (lo, hi) = parse_range(s, 1)?;
                    if lo != 1 {
                        return Err(Error::Config(format!("lags {s:?}: the range must start at 1")));
                    }
                    Ok(hi)
                })
                .transpose()?;
            cfg.slowly_varying = l.clone();
            Subcommand::Dependence
        }
        Command::Clt { replicates, n } => {
            cfg.replicates = *replicates;
            cfg.n = *n;
            Subcommand::Clt
        }
        Command::LemmaCheck {
            chains,
            states,
            max_lag,
            functions,
        } => {
            let (states_min, states_max) = match states.as_deref().map(|s| parse_range(s, 2)).transpose()? {
                Some((a, b)) => (Some(a), Some(b)),
                None => (None, None),
            };
            cfg.lemma = Some(LemmaOptions {
                chains: *chains,
                states_min,
                states_max,
                functions_per_chain: *functions,
                max_lag: *max_lag,
            });
            Subcommand::LemmaCheck
        }
        Command::Run => return Ok((None, cfg, schedule)),
    };
    Ok((Some(sub), cfg, schedule))
}

/// Validate `cfg` for its subcommand, run it and write outputs into `out`.
pub fn run_config(cfg: &ExperimentConfig, workers: usize, out: &Path) -> Result<Outcome> {
    let sub = cfg
        .subcommand
        .ok_or_else(|| Error::Config("missing field `subcommand`".into()))?;
    let mut cfg = cfg.clone();
    let seed = cfg.seed.unwrap_or(0);
    cfg.seed = Some(seed);
    std::fs::create_dir_all(out)?;
    match sub {
        Subcommand::Simulate => run_simulate(&cfg, seed, out),
        Subcommand::Kde => run_kde(&cfg, seed, out),
        Subcommand::Dependence => run_dependence(&cfg, seed, out),
        Subcommand::Clt => run_clt(&cfg, seed, workers, out),
        Subcommand::LemmaCheck => run_lemma(&cfg, seed, out),
    }
}

fn header(cfg: &ExperimentConfig, sub: Subcommand, seed: u64) -> (Header, serde_json::Value) {
    let echo = cfg.echo();
    (Header::new(sub.name(), seed, &echo), echo)
}

fn run_simulate(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome> {
    let sub = Subcommand::Simulate;
    let chain = require(&cfg.chain, "chain", sub)?.build()?;
    let n = require(&cfg.n, "n", sub)?;
    let path = simulate_path(&chain, n, RngStream::new(seed, 0))?;
    let (h, _) = header(cfg, sub, seed);
    let rows: Vec<Vec<String>> = path
        .iter()
        .enumerate()
        .map(|(t, x)| vec![(t + 1).to_string(), fmt_f64(*x)])
        .collect();
    let file = write_csv(&out.join("path.csv"), &h, &["t", "x"], &rows)?;
    Ok(Outcome {
        exit_code: EXIT_PASS,
        summary: format!("simulate: {} steps of {} -> {}", n, chain.describe(), file.display()),
        files: vec![file],
    })
}

fn regime_gate(schedule: BandwidthSchedule, mode: RegimeMode) -> Result<()> {
    let v = bandwidth_regime_check(schedule, mode);
    match v.violated {
        Some(h) => Err(Error::Regime(h)),
        None => Ok(()),
    }
}

fn run_kde(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome> {
    let sub = Subcommand::Kde;
    let chain = require(&cfg.chain, "chain", sub)?.build()?;
    let n = require(&cfg.n, "n", sub)?;
    let points = require(&cfg.points, "points", sub)?;
    let s = require(&cfg.schedule, "schedule", sub)?;
    let schedule = BandwidthSchedule::new(s.c, s.beta)?;
    regime_gate(schedule, cfg.mode.unwrap_or(RegimeMode::Theorem1))?;
    let kernel = Kernel::by_name(cfg.kernel.as_deref().unwrap_or("gaussian"))?;
    let centering_mode = cfg.centering.unwrap_or(CenteringMode::ExactExpectation);
    let marginal = chain.marginal();
    let b = schedule.bandwidth(n);
    let mu2 = kernel.second_moment()?;

    let path = simulate_path(&chain, n, RngStream::new(seed, 0))?;
    let est = kde_evaluate(&path, &kernel, b, &points)?;
    let centering = centering_values(&marginal, &kernel, b, &points, centering_mode)?;
    let stat = studentized_statistic(&est, &centering, centering_mode, &kernel)?;
    let mut rows = Vec::with_capacity(points.len());
    for (j, &x) in points.iter().enumerate() {
        let expected = expected_kde(&marginal, &kernel, b, x)?;
        let bias = marginal
            .density_second_derivative(x)
            .map(|d2| bias_second_order(d2, b) * mu2);
        rows.push(vec![
            fmt_f64(x),
            fmt_f64(est.values[j]),
            fmt_f64(expected),
            fmt_opt(bias),
            fmt_opt(stat.values[j].is_finite().then_some(stat.values[j])),
        ]);
    }
    let (h, _) = header(cfg, sub, seed);
    let file = write_csv(
        &out.join("kde.csv"),
        &h,
        &["point", "fhat", "expected", "bias_oracle", "studentized"],
        &rows,
    )?;
    let invalid = stat.invalid.iter().filter(|x| x.is_some()).count();
    Ok(Outcome {
        exit_code: EXIT_PASS,
        summary: format!(
            "kde: n={n} b={b:.6} at {} points ({invalid} invalid) -> {}",
            points.len(),
            file.display()
        ),
        files: vec![file],
    })
}

#[derive(Serialize)]
struct CltOutput<'a> {
    clt: &'a crate::clt_harness::CltReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditions: Option<ConditionSweep>,
}

fn run_clt(cfg: &ExperimentConfig, seed: u64, workers: usize, out: &Path) -> Result<Outcome> {
    let sub = Subcommand::Clt;
    let s = require(&cfg.schedule, "schedule", sub)?;
    let schedule = BandwidthSchedule::new(s.c, s.beta)?;
    if let Some(mode) = cfg.mode {
        regime_gate(schedule, mode)?;
    }
    let clt = CltConfig {
        chain: require(&cfg.chain, "chain", sub)?,
        kernel: cfg.kernel.clone().unwrap_or_else(|| "gaussian".into()),
        points: require(&cfg.points, "points", sub)?,
        n: require(&cfg.n, "n", sub)?,
        schedule,
        replicates: require(&cfg.replicates, "replicates", sub)?,
        seed,
        centering: cfg.centering.unwrap_or(CenteringMode::ExactExpectation),
        thresholds: cfg.thresholds.unwrap_or_default(),
    };
    let run = run_clt_experiment(&clt, workers)?;
    let conditions = match &cfg.n_grid {
        Some(grid) => {
            let chain = clt.chain.build()?;
            let kernel = Kernel::by_name(&clt.kernel)?;
            let pw: Vec<(f64, f64)> = clt.points.iter().map(|&x| (x, 1.0)).collect();
            Some(check_clt_conditions(&chain, &kernel, &pw, grid, schedule)?)
        }
        None => None,
    };
    let (h, echo) = header(cfg, sub, seed);
    let report_file = write_json(
        &out.join("clt_report.json"),
        &h,
        &echo,
        &CltOutput {
            clt: &run.report,
            conditions,
        },
    )?;
    let mut columns = vec!["replicate".to_string()];
    columns.extend((1..=clt.points.len()).map(|j| format!("t_{j}")));
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = run
        .samples
        .iter()
        .enumerate()
        .map(|(r, row)| {
            std::iter::once((r + 1).to_string())
                .chain(row.iter().map(|x| fmt_opt(x.is_finite().then_some(*x))))
                .collect()
        })
        .collect();
    let samples_file = write_csv(&out.join("clt_samples.csv"), &h, &columns, &rows)?;
    let d = &run.report.diagnostics;
    let pass = run.report.pass();
    Ok(Outcome {
        exit_code: if pass { EXIT_PASS } else { EXIT_GATE_FAIL },
        summary: format!(
            "clt: {} (mean {} variance {} ks {} correlation {}; R={} n={}) -> {}",
            if pass { "PASS" } else { "FAIL" },
            d.pass.mean,
            d.pass.variance,
            d.pass.ks,
            d.pass.correlation,
            clt.replicates,
            clt.n,
            out.display()
        ),
        files: vec![report_file, samples_file],
    })
}

fn run_dependence(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome> {
    let sub = Subcommand::Dependence;
    let chain = require(&cfg.chain, "chain", sub)?.build()?;
    let k = require(&cfg.lags, "lags", sub)?;
    if k == 0 {
        return Err(Error::Config("lags must be at least 1".into()));
    }
    let l = SlowlyVarying::by_name(cfg.slowly_varying.as_deref().unwrap_or("log"))?;
    let lags: Vec<usize> = (1..=k).collect();
    let profile = exact_profile(&chain, &lags)?;
    let verdict = check_eta_decay_condition(&profile, l);
    let rows: Vec<Vec<String>> = (0..profile.len())
        .map(|i| {
            vec![
                profile.lags[i].to_string(),
                fmt_f64(profile.eta[i]),
                fmt_f64(profile.alpha_bar[i]),
                fmt_opt(profile.alpha.as_ref().map(|a| a[i])),
                fmt_f64(verdict.bounds[i]),
                verdict.pass_per_lag[i].to_string(),
            ]
        })
        .collect();
    let (h, _) = header(cfg, sub, seed);
    let file = write_csv(
        &out.join("dependence.csv"),
        &h,
        &["lag", "eta", "alpha_bar", "alpha", "bound_1_over_k4l", "pass"],
        &rows,
    )?;
    let detail = match (verdict.first_violation, verdict.last_violation) {
        (Some(a), Some(b)) => format!("violated at lags {a}..={b}"),
        _ => "bound holds at every lag".into(),
    };
    Ok(Outcome {
        exit_code: if verdict.pass { EXIT_PASS } else { EXIT_GATE_FAIL },
        summary: format!(
            "dependence: {} ({detail}; lags 1..={k}) -> {}",
            if verdict.pass { "PASS" } else { "FAIL" },
            file.display()
        ),
        files: vec![file],
    })
}

fn run_lemma(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome> {
    let d = LemmaSuiteConfig::default();
    let o = cfg.lemma.clone().unwrap_or_default();
    let suite = LemmaSuiteConfig {
        chains: o.chains.unwrap_or(d.chains),
        states_min: o.states_min.unwrap_or(d.states_min),
        states_max: o.states_max.unwrap_or(d.states_max),
        functions_per_chain: o.functions_per_chain.unwrap_or(d.functions_per_chain),
        max_lag: o.max_lag.unwrap_or(d.max_lag),
        seed,
    };
    let report = run_lemma_suite(&suite)?;
    let (h, echo) = header(cfg, Subcommand::LemmaCheck, seed);
    let file = write_json(&out.join("lemma_report.json"), &h, &echo, &report)?;
    Ok(Outcome {
        exit_code: if report.pass() { EXIT_PASS } else { EXIT_GATE_FAIL },
        summary: format!(
            "lemma-check: {} ({} failures in {} cases) -> {}",
            if report.pass() { "PASS" } else { "FAIL" },
            report.failures,
            report.cases,
            file.display()
        ),
        files: vec![file],
    })
}
