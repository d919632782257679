//! The experiment runner behind the `lamperti` binary.
//!
//! Subcommands: `check` (assumption report), `absorption` (absorption-time
//! samples and moment targets), `marginals` (chain marginals against limit
//! marginals), `coupling` (the Poissonized-chain identity), `limit` (pure
//! limit-process simulation). Every subcommand reads a JSON config, accepts
//! `--seed/--replicas/--out/--threads` overrides, persists the resolved
//! config as `plan.json` next to its outputs, and writes `samples.csv` plus
//! `report.json`.
//!
//! Exit codes: 0 pass, 2 statistical fail / regime mismatch / all-censored,
//! 1 usage or config error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis;
use crate::config::{KernelSpec, RunConfig};
use crate::embedding;
use crate::error::{Error, Result};
use crate::levy::LevyTriplet;
use crate::montecarlo::{self, SampleSet};
use crate::stats;

/// Significance level for the pass/fail KS verdicts.
pub const KS_LEVEL: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(
    name = "lamperti",
    about = "Markov chains scaling to positive self-similar Markov processes: checkers and Monte Carlo experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Verify the convergence assumptions and classify the regime.
    Check(CommonOpts),
    /// Sample absorption times and compare moments to the limit targets.
    Absorption(CommonOpts),
    /// Compare rescaled chain marginals with limit-process marginals.
    Marginals(CommonOpts),
    /// Test the Poissonized-chain / time-changed-embedding identity.
    Coupling(CommonOpts),
    /// Simulate the limit process alone.
    Limit(CommonOpts),
}

#[derive(Args, Debug, Clone)]
pub struct CommonOpts {
    /// Path to the JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replica-count override.
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

type CommandRunner = fn(&RunConfig, &Path) -> Result<i32>;

/// Run a parsed command line, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (opts, runner): (&CommonOpts, CommandRunner) = match &cli.command {
        Command::Check(o) => (o, cmd_check),
        Command::Absorption(o) => (o, cmd_absorption),
        Command::Marginals(o) => (o, cmd_marginals),
        Command::Coupling(o) => (o, cmd_coupling),
        Command::Limit(o) => (o, cmd_limit),
    };
    match prepare_and_run(opts, runner) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::AllCensored { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn prepare_and_run(opts: &CommonOpts, runner: CommandRunner) -> Result<i32> {
    let mut config = RunConfig::from_path(&opts.config)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(replicas) = opts.replicas {
        config.experiment.replicas = replicas;
    }
    if let Some(out) = &opts.out {
        config.out = Some(out.clone());
    }
    if opts.threads > 0 {
        // Ignore the error when a global pool already exists (e.g. repeated
        // in-process invocations from tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build_global();
    }
    let out_dir = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("lamperti-out"));
    std::fs::create_dir_all(&out_dir)?;
    // Persist the resolved plan; re-running from it reproduces the outputs.
    write_json(&out_dir.join("plan.json"), &config)?;
    runner(&config, &out_dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    let kernel = config.kernel()?;
    let scaling = config.scaling()?;
    let acfg = config.analysis_config()?;
    let report = analysis::classify_regime(&kernel, &scaling, &acfg)?;

    println!("{:>10} {:>14} {:>14} {:>14}", "n", "a_n∫x", "a_n∫x²", "a_n∫x²(small)");
    for d in &report.diagnostics {
        println!(
            "{:>10} {:>14.6} {:>14.6} {:>14.6}",
            d.n, d.first_moment, d.second_moment, d.small_second_moment
        );
    }
    println!(
        "estimate: b = {:.6} (±{:.2e}), sigma² = {:.6} (±{:.2e})",
        report.estimate.b, report.estimate.b_band, report.estimate.sigma2, report.estimate.sigma2_band
    );
    for t in &report.estimate.tails {
        if t.mass.abs() > 1e-9 {
            println!("tail [{:>5.2}, {:>5.2}): mass = {:.6}", t.lo, t.hi, t.mass);
        }
    }
    println!(
        "flags: A1 {} A2 {} A3 {} A4 {} A5 {} | drift {:?} | regime {:?}",
        report.a1_consistent, report.a2_pass, report.a3_pass, report.a4_pass, report.a5_pass,
        report.drift, report.regime
    );
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(if report.all_pass() { 0 } else { 2 })
}

// ---------------------------------------------------------------------------
// absorption
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct AbsorptionStartSummary {
    start: u64,
    a_n: f64,
    replicas: usize,
    censored_fraction: f64,
    mean_ratio: f64,
    mean_ci_half_width: f64,
    /// `1/|Ψ(γ)|` when the configured triplet has Ψ(γ) < 0.
    target_mean: Option<f64>,
    moments: Vec<montecarlo::MomentSummary>,
    inverse_gamma_ks: Option<KsLine>,
}

#[derive(Debug, Serialize)]
struct KsLine {
    t: Option<f64>,
    d: f64,
    p_value: f64,
    critical_1pct: f64,
    pass: bool,
}

fn cmd_absorption(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    let plan = config.plan()?;
    let sets = montecarlo::run_absorption(&plan)?;

    let mut csv = String::from("start,replica,t_or_a,value,censored,seed\n");
    for set in &sets {
        for r in &set.records {
            let value = r.absorption.unwrap_or(r.cap);
            let _ = writeln!(
                csv,
                "{},{},A,{},{},{}",
                set.start, r.replica, value, r.censored, set.master_seed
            );
        }
    }
    write_text(&out_dir.join("samples.csv"), &csv)?;

    let target_mean = config.triplet().ok().and_then(|t| {
        let psi = t.laplace_exponent(t.gamma).ok()?;
        (psi < 0.0).then(|| 1.0 / psi.abs())
    });

    let mut summaries = Vec::new();
    let mut pass = true;
    for set in &sets {
        let mut moments = Vec::new();
        let mut orders = vec![1.0];
        orders.extend(config.experiment.moment_orders.iter().copied());
        for &q in &orders {
            match montecarlo::moment_summary(set, q, config.experiment.censor_bound) {
                Ok(m) => moments.push(m),
                Err(Error::CensoringBias { fraction, bound }) => {
                    eprintln!(
                        "start {}: censored fraction {fraction} exceeds bound {bound}; moment q={q} skipped",
                        set.start
                    );
                }
                Err(e) => return Err(e),
            }
        }
        let mean = moments.first().map(|m| (m.estimate, m.ci_half_width));
        let ks = inverse_gamma_ks(config, set);
        if let Some(line) = &ks {
            pass &= line.pass;
        }
        summaries.push(AbsorptionStartSummary {
            start: set.start,
            a_n: set.a_n,
            replicas: set.records.len(),
            censored_fraction: set.censored_fraction(),
            mean_ratio: mean.map_or(f64::NAN, |m| m.0),
            mean_ci_half_width: mean.map_or(f64::NAN, |m| m.1),
            target_mean,
            moments,
            inverse_gamma_ks: ks,
        });
    }
    for s in &summaries {
        println!(
            "start {}: mean A/a_n = {:.4} ± {:.4} (target {}), censored {:.2}%",
            s.start,
            s.mean_ratio,
            s.mean_ci_half_width,
            s.target_mean
                .map_or("n/a".into(), |t| format!("{t:.4}")),
            100.0 * s.censored_fraction
        );
        if let Some(ks) = &s.inverse_gamma_ks {
            println!(
                "start {}: inverse-gamma KS D = {:.4} (1% crit {:.4}) -> {}",
                s.start,
                ks.d,
                ks.critical_1pct,
                if ks.pass { "pass" } else { "FAIL" }
            );
        }
    }
    write_json(&out_dir.join("report.json"), &summaries)?;
    Ok(if pass { 0 } else { 2 })
}

/// KS of `A/a_n` against the inverse-gamma limit, available for Bessel
/// configs with `r = d > 1`.
fn inverse_gamma_ks(config: &RunConfig, set: &SampleSet) -> Option<KsLine> {
    let KernelSpec::Bessel { d } = config.kernel else {
        return None;
    };
    if d <= 1.0 {
        return None;
    }
    let ratios: Vec<f64> = set
        .absorption_ratios()
        .into_iter()
        .filter(|&x| x > 0.0)
        .collect();
    if ratios.len() < 10 {
        return None;
    }
    let n = ratios.len() as f64;
    let sample = stats::EmpiricalDistribution::new(ratios).ok()?;
    let (ks_d, p) = stats::ks_one_sample(&sample, |x| {
        stats::inverse_gamma_cdf(x, d, 1.0).unwrap_or(0.0)
    });
    let crit = stats::ks_critical_value(0.01, n);
    Some(KsLine {
        t: None,
        d: ks_d,
        p_value: p,
        critical_1pct: crit,
        pass: ks_d < crit,
    })
}

// ---------------------------------------------------------------------------
// marginals
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct MarginalsReport {
    start: u64,
    stopped: bool,
    ks: Vec<KsLine>,
}

fn cmd_marginals(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    let plan = config.plan()?;
    let stopped = config.experiment.stopped;
    let chain_sets = montecarlo::run_marginals(&plan, stopped)?;
    let triplet = config.triplet()?;
    let limit = montecarlo::run_limit_marginals(
        &triplet,
        &plan.t_list,
        plan.replicas,
        plan.master_seed,
        config.sim_params(),
    )?;

    let mut csv = String::from("start,t,replica,chain,limit\n");
    for set in &chain_sets {
        for (slot, &t) in set.t_list.iter().enumerate() {
            for (r, l) in set.records.iter().zip(&limit.records) {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    set.start, t, r.replica, r.marginals[slot], l.marginals[slot]
                );
            }
        }
    }
    write_text(&out_dir.join("samples.csv"), &csv)?;

    let mut reports = Vec::new();
    let mut pass = true;
    for set in &chain_sets {
        let mut ks_lines = Vec::new();
        for (slot, &t) in set.t_list.iter().enumerate() {
            let a = stats::EmpiricalDistribution::new(set.marginal_samples(slot))?;
            let b = stats::EmpiricalDistribution::new(limit.marginal_samples(slot))?;
            let (d, p) = stats::ks_two_sample(&a, &b);
            let n_eff = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
            let line = KsLine {
                t: Some(t),
                d,
                p_value: p,
                critical_1pct: stats::ks_critical_value(0.01, n_eff),
                pass: p > KS_LEVEL,
            };
            pass &= line.pass;
            println!(
                "start {} t = {}: KS D = {:.4}, p = {:.4e} -> {}",
                set.start,
                t,
                d,
                p,
                if line.pass { "pass" } else { "FAIL" }
            );
            ks_lines.push(line);
        }
        reports.push(MarginalsReport {
            start: set.start,
            stopped,
            ks: ks_lines,
        });
    }
    write_json(&out_dir.join("report.json"), &reports)?;
    Ok(if pass { 0 } else { 2 })
}

// ---------------------------------------------------------------------------
// coupling
// ---------------------------------------------------------------------------

fn cmd_coupling(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    let kernel = config.kernel()?;
    let scaling = config.scaling()?;
    let mut csv = String::from("start,t,replica,chain,embedded\n");
    let mut lines: Vec<(u64, KsLine)> = Vec::new();
    let mut pass = true;
    for &start in &config.experiment.starts {
        let samples = embedding::coupling_marginals(
            &kernel,
            &scaling,
            start,
            &config.experiment.t_list,
            config.experiment.replicas,
            config.seed,
        )?;
        for s in &samples {
            for (i, (&c, &e)) in s.chain.iter().zip(&s.embedded).enumerate() {
                let _ = writeln!(csv, "{},{},{},{},{}", start, s.t, i, c, e);
            }
            let a = stats::EmpiricalDistribution::new(s.chain.clone())?;
            let b = stats::EmpiricalDistribution::new(s.embedded.clone())?;
            let (d, p) = stats::ks_two_sample(&a, &b);
            let n_eff = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
            // Degenerate equal samples (e.g. t = 0) pass by construction.
            let degenerate = d == 0.0;
            let line = KsLine {
                t: Some(s.t),
                d,
                p_value: if degenerate { 1.0 } else { p },
                critical_1pct: stats::ks_critical_value(0.01, n_eff),
                pass: degenerate || p > KS_LEVEL,
            };
            pass &= line.pass;
            println!(
                "start {start} t = {}: coupling KS D = {:.4}, p = {:.4e} -> {}",
                s.t,
                d,
                line.p_value,
                if line.pass { "pass" } else { "FAIL" }
            );
            lines.push((start, line));
        }
    }
    write_text(&out_dir.join("samples.csv"), &csv)?;
    write_json(
        &out_dir.join("report.json"),
        &lines
            .into_iter()
            .map(|(start, l)| serde_json::json!({"start": start, "ks": l}))
            .collect::<Vec<_>>(),
    )?;
    Ok(if pass { 0 } else { 2 })
}

// ---------------------------------------------------------------------------
// limit
// ---------------------------------------------------------------------------

fn cmd_limit(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    let triplet: LevyTriplet = config.triplet()?;
    let set = montecarlo::run_limit_marginals(
        &triplet,
        &config.experiment.t_list,
        config.experiment.replicas,
        config.seed,
        config.sim_params(),
    )?;
    let mut csv = String::from("t,replica,y\n");
    for (slot, &t) in set.t_list.iter().enumerate() {
        for r in &set.records {
            let _ = writeln!(csv, "{},{},{}", t, r.replica, r.marginals[slot]);
        }
    }
    write_text(&out_dir.join("samples.csv"), &csv)?;
    let means: Vec<serde_json::Value> = set
        .t_list
        .iter()
        .enumerate()
        .map(|(slot, &t)| {
            let vals = set.marginal_samples(slot);
            let (mean, half) = stats::mean_ci(&vals, 0.99).unwrap_or((f64::NAN, f64::NAN));
            println!("t = {t}: mean Y(t) = {mean:.4} ± {half:.4}");
            serde_json::json!({"t": t, "mean": mean, "ci_half_width": half})
        })
        .collect();
    write_json(&out_dir.join("report.json"), &means)?;
    Ok(0)
}
