//! Replicated simulation of rescaled chains, absorption times and limit
//! marginals.
//!
//! Replicas are independent work items: each derives its own stream from
//! `(master seed, purpose, replica index)` and results are reduced in
//! replica order, so a plan re-run is bit-identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::ScalingSequence;
use crate::error::{Error, Result};
use crate::kernels::{KernelSampler, TransitionKernel};
use crate::levy::{self, LevyTriplet, PathSimulator};
use crate::rng::{replica_rng, Purpose};
use crate::stats;

/// A replicated experiment: which chain, which starts, how long, how many.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub kernel: TransitionKernel,
    pub scaling: ScalingSequence,
    pub starts: Vec<u64>,
    /// Stop set bound `K`.
    pub stop_bound: u64,
    pub t_list: Vec<f64>,
    pub replicas: usize,
    /// Step budget per replica, as a multiple of `a_n`.
    pub cap_multiple: f64,
    pub master_seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::invalid("replica count must be >= 1"));
        }
        if self.t_list.iter().any(|&t| t < 0.0) {
            return Err(Error::invalid("t_list must be nonnegative"));
        }
        if !(self.cap_multiple > 0.0) {
            return Err(Error::invalid("cap multiple must be positive"));
        }
        if self.starts.is_empty() {
            return Err(Error::invalid("at least one start state required"));
        }
        Ok(())
    }
}

/// One replica's outcome. Censored records carry the cap and the flag,
/// never a fabricated absorption step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub replica: u64,
    /// First step index in the stop set, when reached.
    pub absorption: Option<u64>,
    pub censored: bool,
    /// Step budget for absorption runs; the last evaluated step index for
    /// marginal runs.
    pub cap: u64,
    /// `X(⌊a_n t⌋)/n` per requested `t`, in `t_list` order.
    pub marginals: Vec<f64>,
}

/// Replicated samples for one start state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSet {
    pub start: u64,
    pub a_n: f64,
    pub t_list: Vec<f64>,
    pub master_seed: u64,
    pub records: Vec<ReplicaRecord>,
}

impl SampleSet {
    /// `A/a_n` over uncensored replicas.
    pub fn absorption_ratios(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.absorption)
            .map(|a| a as f64 / self.a_n)
            .collect()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.censored).count() as f64 / self.records.len() as f64
    }

    /// Marginal samples at `t_list[idx]` across replicas.
    pub fn marginal_samples(&self, idx: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.marginals[idx]).collect()
    }
}

/// Replicated absorption times `A_n^{(K)}`, censored at `cap_multiple · a_n`
/// steps. Fails with [`Error::AllCensored`] when no replica is absorbed.
pub fn run_absorption(plan: &ExperimentPlan) -> Result<Vec<SampleSet>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.starts.len());
    for (start_idx, &n) in plan.starts.iter().enumerate() {
        let a_n = plan.scaling.eval(n);
        let cap = (plan.cap_multiple * a_n).ceil().max(1.0) as u64;
        let records: Result<Vec<ReplicaRecord>> = (0..plan.replicas as u64)
            .into_par_iter()
            .map(|rep| {
                let stream_id = ((start_idx as u64) << 32) | rep;
                let mut rng = replica_rng(plan.master_seed, Purpose::Absorption, stream_id);
                let mut sampler = KernelSampler::new(&plan.kernel);
                let absorption = sampler.absorption_time(n, plan.stop_bound, cap, &mut rng)?;
                Ok(ReplicaRecord {
                    replica: rep,
                    absorption,
                    censored: absorption.is_none(),
                    cap,
                    marginals: Vec::new(),
                })
            })
            .collect();
        let records = records?;
        if records.iter().all(|r| r.censored) {
            return Err(Error::AllCensored {
                replicas: plan.replicas,
                cap,
            });
        }
        out.push(SampleSet {
            start: n,
            a_n,
            t_list: Vec::new(),
            master_seed: plan.master_seed,
            records,
        });
    }
    Ok(out)
}

/// Rescaled marginals `X(⌊a_n t⌋)/n` per `t` in the plan, with or without
/// stopping at the first visit to `{1, …, K}`.
pub fn run_marginals(plan: &ExperimentPlan, stopped: bool) -> Result<Vec<SampleSet>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.starts.len());
    for (start_idx, &n) in plan.starts.iter().enumerate() {
        let a_n = plan.scaling.eval(n);
        // (step index, slot) marks in increasing step order.
        let mut marks: Vec<(u64, usize)> = plan
            .t_list
            .iter()
            .enumerate()
            .map(|(slot, &t)| ((a_n * t).floor() as u64, slot))
            .collect();
        marks.sort_unstable();
        let max_step = marks.last().map_or(0, |&(s, _)| s);
        let records: Result<Vec<ReplicaRecord>> = (0..plan.replicas as u64)
            .into_par_iter()
            .map(|rep| {
                let stream_id = ((start_idx as u64) << 32) | rep;
                let mut rng = replica_rng(plan.master_seed, Purpose::Marginals, stream_id);
                let mut sampler = KernelSampler::new(&plan.kernel);
                let mut state = n;
                let mut frozen = stopped && state <= plan.stop_bound;
                let mut absorption = if frozen { Some(0) } else { None };
                let mut marginals = vec![0.0f64; plan.t_list.len()];
                let mut mark_iter = marks.iter().peekable();
                for step in 0..=max_step {
                    while let Some(&&(s, slot)) = mark_iter.peek() {
                        if s == step {
                            marginals[slot] = state as f64 / n as f64;
                            mark_iter.next();
                        } else {
                            break;
                        }
                    }
                    if step < max_step && !frozen {
                        state = sampler.step(state, &mut rng)?;
                        if state <= plan.stop_bound && absorption.is_none() {
                            absorption = Some(step + 1);
                            if stopped {
                                frozen = true;
                            }
                        }
                    }
                }
                Ok(ReplicaRecord {
                    replica: rep,
                    absorption,
                    censored: false,
                    cap: max_step,
                    marginals,
                })
            })
            .collect();
        out.push(SampleSet {
            start: n,
            a_n,
            t_list: plan.t_list.clone(),
            master_seed: plan.master_seed,
            records: records?,
        });
    }
    Ok(out)
}

/// Numerical controls of the limit-process simulation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LimitSimParams {
    pub dt: f64,
    /// Small-jump cutoff ε.
    pub epsilon: f64,
    /// Target bound on the unresolved tail of `∫ e^{γξ}`.
    pub tail_tol: f64,
    /// Initial simulation horizon; grows geometrically as needed.
    pub initial_horizon: f64,
    /// Exponent β₀ for tail bounds; defaults to γ when zero or negative.
    pub beta0: f64,
}

impl Default for LimitSimParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            epsilon: 1e-3,
            tail_tol: 1e-6,
            initial_horizon: 4.0,
            beta0: 0.0,
        }
    }
}

/// Independent draws of the limit marginal `Y(t)` per `t`, via path
/// simulation plus the Lamperti transform. The horizon doubles until either
/// all requested times are inside the resolved cumulative integral or the
/// tail bound of `I∞` falls below `tail_tol`.
pub fn run_limit_marginals(
    triplet: &LevyTriplet,
    t_list: &[f64],
    replicas: usize,
    master_seed: u64,
    params: LimitSimParams,
) -> Result<SampleSet> {
    if replicas < 1 {
        return Err(Error::invalid("replica count must be >= 1"));
    }
    let gamma = triplet.gamma;
    let beta0 = if params.beta0 > 0.0 { params.beta0 } else { gamma };
    let sim = PathSimulator::new(triplet.clone(), params.dt, params.epsilon)?;
    let records: Result<Vec<ReplicaRecord>> = (0..replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(master_seed, Purpose::LimitPath, rep);
            let mut horizon = params.initial_horizon;
            let mut path = sim.simulate(horizon, &mut rng)?;
            // Grid-point budget: refuse to grow a single path without bound.
            let max_points = 50_000_000usize;
            while path.values.len() <= max_points {
                match levy::lamperti_transform(&path, gamma, t_list, beta0) {
                    Ok(lp) => {
                        // Keep growing until the tail is resolved for
                        // absorption decisions, unless the triplet admits no
                        // tail bound (transient case: all t resolved already).
                        if lp.tail_bound.is_finite() && lp.tail_bound > params.tail_tol {
                            horizon *= 2.0;
                            sim.extend_to(&mut path, horizon, &mut rng);
                            continue;
                        }
                        return Ok(ReplicaRecord {
                            replica: rep,
                            absorption: None,
                            censored: false,
                            cap: 0,
                            marginals: lp.y,
                        });
                    }
                    Err(Error::HorizonTooShort { .. }) => {
                        horizon *= 2.0;
                        sim.extend_to(&mut path, horizon, &mut rng);
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(Error::HorizonTooShort {
                t: t_list.iter().cloned().fold(0.0, f64::max),
                resolved: horizon,
            })
        })
        .collect();
    Ok(SampleSet {
        start: 1,
        a_n: 1.0,
        t_list: t_list.to_vec(),
        master_seed,
        records: records?,
    })
}

/// Empirical `p`-th moment of `A/a_n` with a normal-approximation CI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSummary {
    pub order: f64,
    pub estimate: f64,
    pub ci_half_width: f64,
    pub censored_fraction: f64,
    /// Set when censored replicas contributed their cap as a lower bound;
    /// the true moment can only be larger.
    pub lower_bound_only: bool,
}

/// Summarize `E[(A/a_n)^p]`. Censored replicas contribute `(cap/a_n)^p` as a
/// lower bound and flag the summary; more than `censor_bound` censoring is
/// an error.
pub fn moment_summary(samples: &SampleSet, p: f64, censor_bound: f64) -> Result<MomentSummary> {
    if !(p >= 0.0) {
        return Err(Error::domain("moment order must be >= 0"));
    }
    let frac = samples.censored_fraction();
    if frac > censor_bound {
        return Err(Error::CensoringBias {
            fraction: frac,
            bound: censor_bound,
        });
    }
    let values: Vec<f64> = samples
        .records
        .iter()
        .map(|r| {
            let steps = r.absorption.unwrap_or(r.cap);
            (steps as f64 / samples.a_n).powf(p)
        })
        .collect();
    let (mean, half) = stats::mean_ci(&values, 0.99)?;
    Ok(MomentSummary {
        order: p,
        estimate: mean,
        ci_half_width: half,
        censored_fraction: frac,
        lower_bound_only: frac > 0.0,
    })
}
