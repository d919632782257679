//! The auxiliary continuous-time chain and its Lamperti-type time change.
//!
//! From a transition kernel and a scaling sequence `a_n`, the embedded chain
//! holds at integer state `j` for an `Exp(a_j)` time and then jumps per the
//! kernel row `p_{j,·}`. Writing `L_n(s) = ln(state(s)/n)`, the time change
//!
//! `τ_n(t) = inf{u : ∫₀^u a_{n·exp(L_n(s))}/a_n ds > t}`
//!
//! is computed exactly (the integrand is piecewise constant between events),
//! and `exp(L_n(τ_n(t)))` has the same law as `(1/n)·X_n(N_n(t))` where
//! `N_n` is an independent Poisson clock of rate `a_n`. That equality in law
//! is exposed as a distributional self-test by [`coupling_marginals`].
//!
//! Starts are lattice points, and lattice states stay closed under the
//! dynamics, so the off-lattice interpolation of the generator is never
//! exercised.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSampler, TransitionKernel};
use crate::rng::{replica_rng, Purpose};

/// Default cap on events per simulated path.
pub const DEFAULT_EVENT_BUDGET: u64 = 100_000_000;

/// The time normalization `a_n`, regularly varying of index `γ > 0`.
/// The built-in form is the pure power law `a_n = n^γ`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingSequence {
    pub gamma: f64,
    pub form: ScalingForm,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ScalingForm {
    PowerLaw,
}

impl ScalingSequence {
    pub fn power_law(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::invalid(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(Self {
            gamma,
            form: ScalingForm::PowerLaw,
        })
    }

    /// `a_n`.
    pub fn eval(&self, n: u64) -> f64 {
        match self.form {
            ScalingForm::PowerLaw => (n as f64).powf(self.gamma),
        }
    }
}

/// Event ledger of one embedded-chain trajectory: the chain sits at
/// `states[i]` on `[times[i], times[i+1])`, and at `states.last()` from the
/// final event on. `absorbed` marks entry into the zero-rate stop set.
#[derive(Debug, Clone)]
pub struct EmbeddedChainPath {
    pub times: Vec<f64>,
    pub states: Vec<u64>,
    pub start: u64,
    pub absorbed: bool,
}

impl EmbeddedChainPath {
    /// State at continuous time `s`.
    pub fn state_at(&self, s: f64) -> u64 {
        let idx = self.times.partition_point(|&t| t <= s);
        self.states[idx.saturating_sub(1).min(self.states.len() - 1)]
    }

    /// End of the simulated window.
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty ledger")
    }

    /// Event ledger as CSV: `time, state`.
    pub fn csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("time,state\n");
        for (&t, &j) in self.times.iter().zip(&self.states) {
            let _ = writeln!(out, "{t},{j}");
        }
        out
    }
}

/// Event-driven simulation of the embedded chain started at `n`, out to
/// `horizon`. With `stop_bound = Some(M)` the rates `a_j` are zeroed for
/// `j ≤ M`, so the path freezes on entering `{1, …, M}`.
pub fn simulate_embedded(
    kernel: &TransitionKernel,
    scaling: &ScalingSequence,
    n: u64,
    horizon: f64,
    stop_bound: Option<u64>,
    event_budget: u64,
    rng: &mut impl Rng,
) -> Result<EmbeddedChainPath> {
    if n < 1 {
        return Err(Error::domain("start state must be >= 1"));
    }
    let mut sampler = KernelSampler::new(kernel);
    let mut times = vec![0.0];
    let mut states = vec![n];
    let mut t = 0.0;
    let mut state = n;
    let mut events = 0u64;
    loop {
        if stop_bound.is_some_and(|m| state <= m) {
            return Ok(EmbeddedChainPath {
                times,
                states,
                start: n,
                absorbed: true,
            });
        }
        let rate = scaling.eval(state);
        let hold = Exp::new(rate)
            .map_err(|_| Error::invalid(format!("nonpositive rate a_{state} = {rate}")))?
            .sample(rng);
        t += hold;
        if t >= horizon {
            // Record the horizon as the final observation time.
            times.push(horizon);
            states.push(state);
            return Ok(EmbeddedChainPath {
                times,
                states,
                start: n,
                absorbed: false,
            });
        }
        state = sampler.step(state, rng)?;
        times.push(t);
        states.push(state);
        events += 1;
        if events >= event_budget {
            return Err(Error::EventBudgetExceeded {
                budget: event_budget,
                horizon,
            });
        }
    }
}

/// Event-driven simulation run until the time-change clock
/// `∫₀^u a_{state}/a_n ds` exceeds `t_target` (counted over completed
/// holds), so every `τ_n(t)` with `t ≤ t_target` is resolvable on the
/// returned path. With a stop bound, entering the stop set freezes the
/// clock and the path is returned absorbed.
pub fn simulate_embedded_to_clock(
    kernel: &TransitionKernel,
    scaling: &ScalingSequence,
    n: u64,
    t_target: f64,
    stop_bound: Option<u64>,
    event_budget: u64,
    rng: &mut impl Rng,
) -> Result<EmbeddedChainPath> {
    if n < 1 {
        return Err(Error::domain("start state must be >= 1"));
    }
    let a_n = scaling.eval(n);
    let mut sampler = KernelSampler::new(kernel);
    let mut times = vec![0.0];
    let mut states = vec![n];
    let mut t = 0.0;
    let mut acc = 0.0;
    let mut state = n;
    let mut events = 0u64;
    loop {
        if stop_bound.is_some_and(|m| state <= m) {
            return Ok(EmbeddedChainPath {
                times,
                states,
                start: n,
                absorbed: true,
            });
        }
        let rate = scaling.eval(state);
        let hold = Exp::new(rate)
            .map_err(|_| Error::invalid(format!("nonpositive rate a_{state} = {rate}")))?
            .sample(rng);
        t += hold;
        acc += rate / a_n * hold;
        state = sampler.step(state, rng)?;
        times.push(t);
        states.push(state);
        if acc > t_target {
            return Ok(EmbeddedChainPath {
                times,
                states,
                start: n,
                absorbed: false,
            });
        }
        events += 1;
        if events >= event_budget {
            return Err(Error::EventBudgetExceeded {
                budget: event_budget,
                horizon: t_target,
            });
        }
    }
}

/// The exact time change `τ_n(t)` of an embedded path: the integrand
/// `a_{state}/a_n` is constant between events, so the accumulated integral
/// is piecewise linear and inverted in closed form.
///
/// Returns `+∞` when the path is absorbed (zero rates) before accumulating
/// `t`; fails with `HorizonTooShort` when the simulated window ends first.
pub fn time_change_tau_n(
    path: &EmbeddedChainPath,
    scaling: &ScalingSequence,
    n: u64,
    t: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain("time must be nonnegative"));
    }
    let a_n = scaling.eval(n);
    let mut acc = 0.0;
    for i in 0..path.states.len() - 1 {
        let seg_start = path.times[i];
        let seg_end = path.times[i + 1];
        let rate = scaling.eval(path.states[i]) / a_n;
        let seg_mass = rate * (seg_end - seg_start);
        if acc + seg_mass > t {
            return Ok(seg_start + (t - acc) / rate);
        }
        acc += seg_mass;
    }
    if path.absorbed {
        // The final ledger entry is the absorption event: the rate is zero
        // from there on, so the integral never exceeds `acc`.
        Ok(f64::INFINITY)
    } else {
        // The final entry is only the horizon observation; the path carries
        // no information past it.
        Err(Error::HorizonTooShort { t, resolved: acc })
    }
}

/// Accumulated integral `∫₀^u a_{state}/a_n ds` at `u = horizon`, used by
/// tests of the exactness identity.
pub fn accumulated_integral(path: &EmbeddedChainPath, scaling: &ScalingSequence, n: u64) -> f64 {
    let a_n = scaling.eval(n);
    let mut acc = 0.0;
    for i in 0..path.states.len() - 1 {
        acc += scaling.eval(path.states[i]) / a_n * (path.times[i + 1] - path.times[i]);
    }
    acc
}

/// Paired independent samples of the two sides of the coupling identity at
/// each requested time: `(1/n)·X_n(N_n(t))` against `exp(L_n(τ_n(t)))`.
#[derive(Debug, Clone)]
pub struct CouplingSamples {
    pub t: f64,
    /// Poissonized discrete chain marginals.
    pub chain: Vec<f64>,
    /// Time-changed embedded chain marginals.
    pub embedded: Vec<f64>,
}

/// Draw `replicas` independent samples per side and per time point. The two
/// sides are equal in law; they are sampled from disjoint streams so a
/// two-sample test sees independent data.
pub fn coupling_marginals(
    kernel: &TransitionKernel,
    scaling: &ScalingSequence,
    n: u64,
    t_list: &[f64],
    replicas: usize,
    master_seed: u64,
) -> Result<Vec<CouplingSamples>> {
    if t_list.is_empty() {
        return Err(Error::invalid("t_list must be nonempty"));
    }
    let t_max = t_list.iter().cloned().fold(0.0f64, f64::max);
    let a_n = scaling.eval(n);
    let mut out: Vec<CouplingSamples> = t_list
        .iter()
        .map(|&t| CouplingSamples {
            t,
            chain: Vec::with_capacity(replicas),
            embedded: Vec::with_capacity(replicas),
        })
        .collect();

    for rep in 0..replicas {
        // Side A: Poisson clock composed with the discrete chain.
        let mut rng = replica_rng(master_seed, Purpose::CouplingChain, rep as u64);
        let mut sampler = KernelSampler::new(kernel);
        let mut counts: Vec<u64> = t_list
            .iter()
            .map(|&t| {
                let lam = a_n * t;
                if lam == 0.0 {
                    0
                } else {
                    Poisson::new(lam).expect("positive rate").sample(&mut rng) as u64
                }
            })
            .collect();
        // Evaluate the chain at all Poisson indices in one sweep.
        let max_count = counts.iter().copied().max().unwrap_or(0);
        let mut state = n;
        let mut marks: Vec<(u64, usize)> = counts.iter().copied().zip(0..).collect();
        marks.sort_unstable();
        let mut mark_iter = marks.iter().peekable();
        for step in 0..=max_count {
            while let Some(&&(c, slot)) = mark_iter.peek() {
                if c == step {
                    out[slot].chain.push(state as f64 / n as f64);
                    mark_iter.next();
                } else {
                    break;
                }
            }
            if step < max_count {
                state = sampler.step(state, &mut rng)?;
            }
        }
        counts.clear();

        // Side B: embedded chain simulated until the clock covers t_max,
        // evaluated at τ_n(t).
        let mut rng = replica_rng(master_seed, Purpose::CouplingEmbedded, rep as u64);
        let path = simulate_embedded_to_clock(
            kernel,
            scaling,
            n,
            t_max,
            None,
            DEFAULT_EVENT_BUDGET,
            &mut rng,
        )?;
        for (slot, &t) in t_list.iter().enumerate() {
            let tau = time_change_tau_n(&path, scaling, n, t)?;
            let state = if tau.is_infinite() {
                *path.states.last().expect("nonempty")
            } else {
                path.state_at(tau)
            };
            out[slot].embedded.push(state as f64 / n as f64);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::single_rng;
    use crate::stats;

    #[test]
    fn scaling_sequence_regular_variation() {
        let s = ScalingSequence::power_law(2.0).unwrap();
        let n = 1_000_000u64;
        for &x in &[0.1, 0.5, 1.0, 2.0, 7.5] {
            let ratio = s.eval((x * n as f64).floor() as u64) / s.eval(n);
            assert!(
                (ratio - x * x).abs() <= 0.01 * x * x,
                "a_[xn]/a_n = {ratio} vs {x}^2"
            );
        }
        assert!(ScalingSequence::power_law(0.0).is_err());
        assert!(ScalingSequence::power_law(-1.0).is_err());
    }

    #[test]
    fn down_walk_mean_hitting_time() {
        // States 3 → 2 → 1 with Exp(3), Exp(2) holds: mean 1/3 + 1/2.
        let kernel = TransitionKernel::down_walk();
        let scaling = ScalingSequence::power_law(1.0).unwrap();
        let mut rng = single_rng(30);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let path =
                simulate_embedded(&kernel, &scaling, 3, 1e9, Some(1), 1000, &mut rng).unwrap();
            assert!(path.absorbed);
            sum += path.horizon();
        }
        let mean = sum / n as f64;
        let expected = 1.0 / 3.0 + 1.0 / 2.0;
        assert!(
            (mean - expected).abs() < 0.03 * expected,
            "mean hit time {mean} vs {expected}"
        );
    }

    #[test]
    fn start_inside_stop_set_is_absorbed_immediately() {
        let kernel = TransitionKernel::bessel(3.0);
        let scaling = ScalingSequence::power_law(2.0).unwrap();
        let mut rng = single_rng(31);
        let path = simulate_embedded(&kernel, &scaling, 5, 10.0, Some(5), 100, &mut rng).unwrap();
        assert!(path.absorbed);
        assert_eq!(path.states, vec![5]);
        assert_eq!(path.times, vec![0.0]);
    }

    #[test]
    fn first_event_time_matches_exponential_rate() {
        // Bessel, a_n = n², start 50: first hold is Exp(2500).
        let kernel = TransitionKernel::bessel(3.0);
        let scaling = ScalingSequence::power_law(2.0).unwrap();
        let mut rng = single_rng(32);
        let n = 100_000;
        // P(first hold > horizon) = e^{-50}: truncation is negligible.
        let horizon = 50.0 / 2500.0;
        let mut sum = 0.0;
        for _ in 0..n {
            let path = simulate_embedded(
                &kernel,
                &scaling,
                50,
                horizon,
                None,
                DEFAULT_EVENT_BUDGET,
                &mut rng,
            )
            .unwrap();
            sum += path.times[1];
        }
        let mean = sum / n as f64;
        assert!(
            (mean - 1.0 / 2500.0).abs() < 0.05 / 2500.0,
            "mean first event {mean}"
        );
    }

    #[test]
    fn event_budget_is_enforced() {
        let kernel = TransitionKernel::bessel(3.0);
        let scaling = ScalingSequence::power_law(2.0).unwrap();
        let mut rng = single_rng(33);
        let res = simulate_embedded(&kernel, &scaling, 100, 1e9, Some(1), 10, &mut rng);
        assert!(matches!(res, Err(Error::EventBudgetExceeded { .. })));
    }

    #[test]
    fn tau_identity_on_constant_path() {
        // Path constant at state n: integrand ≡ 1 so τ_n(t) = t.
        let path = EmbeddedChainPath {
            times: vec![0.0],
            states: vec![7],
            start: 7,
            absorbed: true, // zero-rate freeze gives an infinite final segment
        };
        let scaling = ScalingSequence::power_law(1.0).unwrap();
        // Not absorbed variant: single infinite segment at the start state.
        let live = EmbeddedChainPath {
            times: vec![0.0, 1e12],
            states: vec![7, 7],
            start: 7,
            absorbed: false,
        };
        for t in [0.0, 0.3, 2.5, 100.0] {
            assert_eq!(time_change_tau_n(&live, &scaling, 7, t).unwrap(), t);
        }
        // The absorbed constant path accumulates nothing.
        assert!(time_change_tau_n(&path, &scaling, 7, 0.5)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn tau_piecewise_algebra() {
        // Rates ratio 1/2 on [0,1) then 1 afterwards: τ(t) = 2t for t ≤ 1/2.
        // With a_n = n (γ = 1), state n/2 then n gives those ratios.
        let scaling = ScalingSequence::power_law(1.0).unwrap();
        let path = EmbeddedChainPath {
            times: vec![0.0, 1.0, 1e12],
            states: vec![50, 100, 100],
            start: 100,
            absorbed: false,
        };
        for t in [0.1, 0.25, 0.5] {
            let tau = time_change_tau_n(&path, &scaling, 100, t).unwrap();
            assert!((tau - 2.0 * t).abs() < 1e-12, "τ({t}) = {tau}");
        }
        // Past the first segment: 1/2 accumulated by u = 1, then rate 1.
        let tau = time_change_tau_n(&path, &scaling, 100, 0.75).unwrap();
        assert!((tau - 1.25).abs() < 1e-12);
    }

    #[test]
    fn tau_exactness_identity_on_simulated_paths() {
        // ∫₀^{τ_n(t)} rate ds = t exactly for t below the accumulated total.
        let kernel = TransitionKernel::bessel(3.0);
        let scaling = ScalingSequence::power_law(2.0).unwrap();
        let mut rng = single_rng(34);
        for rep in 0..20 {
            let path = simulate_embedded(
                &kernel,
                &scaling,
                40 + rep,
                0.2,
                None,
                DEFAULT_EVENT_BUDGET,
                &mut rng,
            )
            .unwrap();
            let total = accumulated_integral(&path, &scaling, 40 + rep);
            let a_n = scaling.eval(40 + rep);
            for frac in [0.1, 0.47, 0.93] {
                let t = frac * total;
                let tau = time_change_tau_n(&path, &scaling, 40 + rep, t).unwrap();
                // Recompute the integral up to tau directly.
                let mut acc = 0.0;
                for i in 0..path.states.len() - 1 {
                    let lo = path.times[i];
                    let hi = path.times[i + 1].min(tau);
                    if hi <= lo {
                        break;
                    }
                    acc += scaling.eval(path.states[i]) / a_n * (hi - lo);
                }
                assert!(
                    (acc - t).abs() <= 1e-9 * t.max(1.0),
                    "identity broke: {acc} vs {t}"
                );
            }
        }
    }

    #[test]
    fn horizon_too_short_reported_for_live_paths() {
        let scaling = ScalingSequence::power_law(1.0).unwrap();
        let path = EmbeddedChainPath {
            times: vec![0.0, 1.0],
            states: vec![10, 10],
            start: 10,
            absorbed: false,
        };
        assert!(matches!(
            time_change_tau_n(&path, &scaling, 10, 5.0),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn jump_chain_frequencies_match_kernel() {
        // Embedded jump chain must have the discrete kernel's transition
        // frequencies: χ² on the row at a fixed state, 1e5 events.
        let kernel = TransitionKernel::bessel(3.0);
        let scaling = ScalingSequence::power_law(2.0).unwrap();
        let mut rng = single_rng(35);
        let mut up = 0u64;
        let mut total = 0u64;
        // Collect transitions leaving state 10 across many short windows;
        // rates near state 10 are ~100, so a unit horizon gives ~100 events.
        while total < 100_000 {
            let path = simulate_embedded(
                &kernel,
                &scaling,
                10,
                1.0,
                None,
                DEFAULT_EVENT_BUDGET,
                &mut rng,
            )
            .unwrap();
            // The final entry repeats the state at the horizon cut; skip it.
            let events = &path.states[..path.states.len() - 1];
            for w in events.windows(2) {
                if w[0] == 10 {
                    total += 1;
                    if w[1] == 11 {
                        up += 1;
                    }
                }
            }
        }
        let p_up = 0.5 * (1.0 - 3.0 / 20.0);
        let expected_up = p_up * total as f64;
        let expected_down = (1.0 - p_up) * total as f64;
        let observed_up = up as f64;
        let observed_down = (total - up) as f64;
        let stat = (observed_up - expected_up).powi(2) / expected_up
            + (observed_down - expected_down).powi(2) / expected_down;
        let p = stats::chi_square_pvalue(stat, 1.0).unwrap();
        assert!(p > 1e-3, "jump-chain χ² p = {p}");
    }

    #[test]
    fn holding_times_are_exponential() {
        // Normalized holds a_j · (T_{i+1} - T_i) pooled across events must
        // follow Exp(1): KS below the 1e-3 critical value.
        let kernel = TransitionKernel::bessel(3.0);
        let scaling = ScalingSequence::power_law(2.0).unwrap();
        let mut rng = single_rng(36);
        let mut holds = Vec::new();
        while holds.len() < 100_000 {
            let path = simulate_embedded(
                &kernel,
                &scaling,
                25,
                1.0,
                None,
                DEFAULT_EVENT_BUDGET,
                &mut rng,
            )
            .unwrap();
            // Drop the final segment: it is truncated by the horizon, not by
            // a jump.
            for i in 0..path.states.len().saturating_sub(2) {
                let hold = path.times[i + 1] - path.times[i];
                holds.push(scaling.eval(path.states[i]) * hold);
            }
        }
        holds.truncate(100_000);
        let n = holds.len() as f64;
        let sample = stats::EmpiricalDistribution::new(holds).unwrap();
        let (d, _) = stats::ks_one_sample(&sample, |x| -(-x.max(0.0)).exp_m1());
        let crit = stats::ks_critical_value(1e-3, n);
        assert!(d < crit, "holding-time KS D = {d} >= {crit}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Exact inversion on arbitrary synthetic ledgers: evaluating the
            // accumulated integral at τ_n(t) returns t.
            #[test]
            fn prop_tau_inverts_accumulated_integral(
                holds in proptest::collection::vec(1e-6f64..10.0, 1..40),
                states in proptest::collection::vec(1u64..5000, 1..40),
                n in 1u64..5000,
                frac in 0.0f64..0.999,
            ) {
                let len = holds.len().min(states.len());
                let mut times = vec![0.0];
                for h in &holds[..len] {
                    times.push(times.last().unwrap() + h);
                }
                let path = EmbeddedChainPath {
                    times,
                    states: states[..len].iter().copied().chain([1]).collect(),
                    start: n,
                    absorbed: false,
                };
                let scaling = ScalingSequence::power_law(1.5).unwrap();
                let total = accumulated_integral(&path, &scaling, n);
                let t = frac * total;
                let tau = time_change_tau_n(&path, &scaling, n, t).unwrap();
                let a_n = scaling.eval(n);
                let mut acc = 0.0;
                for i in 0..path.states.len() - 1 {
                    let hi = path.times[i + 1].min(tau);
                    if hi <= path.times[i] {
                        break;
                    }
                    acc += scaling.eval(path.states[i]) / a_n * (hi - path.times[i]);
                }
                prop_assert!((acc - t).abs() <= 1e-9 * t.max(1.0), "acc {} vs t {}", acc, t);
            }
        }
    }

    #[test]
    fn coupling_at_time_zero_is_degenerate() {
        let kernel = TransitionKernel::bessel(3.0);
        let scaling = ScalingSequence::power_law(2.0).unwrap();
        let samples = coupling_marginals(&kernel, &scaling, 50, &[0.0], 64, 99).unwrap();
        assert!(samples[0].chain.iter().all(|&v| v == 1.0));
        assert!(samples[0].embedded.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn coupling_down_walk_reaches_floor() {
        // Deterministic down-walk, large t: both sides end at 1/n.
        let kernel = TransitionKernel::down_walk();
        let scaling = ScalingSequence::power_law(1.0).unwrap();
        let n = 20u64;
        let samples = coupling_marginals(&kernel, &scaling, n, &[50.0], 32, 101).unwrap();
        let floor = 1.0 / n as f64;
        for (&c, &e) in samples[0].chain.iter().zip(&samples[0].embedded) {
            assert!((c - floor).abs() < 1e-12);
            assert!((e - floor).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_two_sample_ks_bessel() {
        // The two sides agree in law by construction of the time change.
        let kernel = TransitionKernel::bessel(3.0);
        let scaling = ScalingSequence::power_law(2.0).unwrap();
        let samples = coupling_marginals(&kernel, &scaling, 60, &[0.05], 800, 102).unwrap();
        let a = stats::EmpiricalDistribution::new(samples[0].chain.clone()).unwrap();
        let b = stats::EmpiricalDistribution::new(samples[0].embedded.clone()).unwrap();
        let (d, p) = stats::ks_two_sample(&a, &b);
        assert!(p > 1e-3, "coupling KS D = {d}, p = {p}");
    }
}
