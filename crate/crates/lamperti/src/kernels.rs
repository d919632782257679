//! Transition-kernel families on the positive integers and the log-step
//! measure `Π*_n`, the law of `ln(X_n(1)/n)` under one step from state `n`.
//!
//! Built-in families:
//!
//! * [`Family::Bessel`] — ±1 walk reflected at 1 with
//!   `p_{n,n+1} = ½(1 - d/(2n) + corr(n))`, the canonical asymptotically
//!   zero-drift chain (`a_n = n²`).
//! * [`Family::RareJumpDrift`] — non-increasing walk with
//!   `p_{n,n-1} = 1 - θ/n` and a rare macroscopic drop `p_{n,⌈ρn⌉} = θ/n`
//!   (`a_n = n`), realizing an atomic limit measure `θ·δ_{ln ρ}`.
//! * [`Family::FragCoag`] — block counts of a fragmentation-coagulation
//!   particle system: simple coagulations driven by a finite measure Λ on
//!   (0,1], splits driven by a finite split-size law μ on ℕ (`a_n = n`).
//! * [`Family::DownWalk`] — the deterministic step-down walk, useful as a
//!   closed-form test instance.
//!
//! Kernels are immutable after construction and safe to share across
//! threads; all randomness enters through caller-owned streams.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quad::integrate_gl64;
use crate::stats;

/// Row-truncation policy: enumeration must cover at least `1 - mass_tol`
/// probability using states no larger than `state_cap`.
#[derive(Debug, Clone, Copy)]
pub struct TruncationPolicy {
    pub mass_tol: f64,
    pub state_cap: u64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            mass_tol: 1e-12,
            state_cap: 100_000_000,
        }
    }
}

/// Optional `o(1/n)` correction to the Bessel up-probability. The default
/// family sets it to zero so that `n·E[Δ_n] = -d/2` holds without remainder.
pub type DriftCorrection = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// Bessel-type walk parameters. Derived constants follow
/// `c = -d/2`, `s² = 1`, `r = -2c/s² = d`, `ν = -(1+r)/2`, `δ = 1-r`.
#[derive(Clone)]
pub struct BesselWalkParams {
    pub d: f64,
    pub correction: Option<DriftCorrection>,
}

impl fmt::Debug for BesselWalkParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BesselWalkParams")
            .field("d", &self.d)
            .field("correction", &self.correction.is_some())
            .finish()
    }
}

impl BesselWalkParams {
    pub fn new(d: f64) -> Self {
        Self {
            d,
            correction: None,
        }
    }

    pub fn with_correction(d: f64, correction: DriftCorrection) -> Self {
        Self {
            d,
            correction: Some(correction),
        }
    }

    pub fn c(&self) -> f64 {
        -self.d / 2.0
    }

    pub fn s2(&self) -> f64 {
        1.0
    }

    pub fn r(&self) -> f64 {
        -2.0 * self.c() / self.s2()
    }

    pub fn nu(&self) -> f64 {
        -(1.0 + self.r()) / 2.0
    }

    pub fn delta(&self) -> f64 {
        1.0 - self.r()
    }

    /// Up-probability at state `n ≥ 2`, clamped to [0, 1].
    pub fn p_up(&self, n: u64) -> f64 {
        let corr = self.correction.as_ref().map_or(0.0, |c| c(n));
        (0.5 * (1.0 - self.d / (2.0 * n as f64) + corr)).clamp(0.0, 1.0)
    }
}

/// Rare-jump drift walk parameters: `θ > 0`, `ρ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct RareJumpDriftParams {
    pub theta: f64,
    pub rho: f64,
}

/// The coagulation measure Λ: either a finite list of atoms on (0, 1] or a
/// Beta(a, b) density with `a > 1` scaled to a total mass.
#[derive(Debug, Clone)]
pub enum LambdaMeasure {
    Atoms(Vec<(f64, f64)>),
    Beta { a: f64, b: f64, mass: f64 },
}

impl LambdaMeasure {
    fn validate(&self) -> Result<()> {
        match self {
            LambdaMeasure::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::invalid("Lambda needs at least one atom"));
                }
                for &(x, w) in atoms {
                    if !(x > 0.0 && x <= 1.0) || !(w > 0.0) {
                        return Err(Error::invalid(format!(
                            "Lambda atom ({x}, {w}) outside (0,1] x (0,inf)"
                        )));
                    }
                }
                Ok(())
            }
            LambdaMeasure::Beta { a, b, mass } => {
                // a > 1 makes x^{-1} integrable against the density.
                if !(*a > 1.0) || !(*b > 0.0) || !(*mass > 0.0) {
                    return Err(Error::invalid(format!(
                        "Beta Lambda needs a > 1, b > 0, mass > 0 (a = {a}, b = {b}, mass = {mass})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `∫ f(x) Λ(dx)` over (0, 1]; Beta densities use Gauss-Legendre order 64.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        match self {
            LambdaMeasure::Atoms(atoms) => atoms.iter().map(|&(x, w)| w * f(x)).sum(),
            LambdaMeasure::Beta { a, b, mass } => {
                let ln_beta = stats::log_gamma(*a).unwrap() + stats::log_gamma(*b).unwrap()
                    - stats::log_gamma(a + b).unwrap();
                integrate_gl64(0.0, 1.0, |x| {
                    let ln_dens = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta;
                    f(x) * mass * ln_dens.exp()
                })
            }
        }
    }
}

/// Fragmentation-coagulation parameters: Λ drives simple coagulations,
/// μ is the finitely supported split-size law (rate `μ(j)` of a particle
/// splitting into `j + 1` pieces, raising the count by `j`).
#[derive(Debug, Clone)]
pub struct FragCoagParams {
    pub lambda: LambdaMeasure,
    /// `(j, μ(j))` pairs with distinct `j ≥ 1`.
    pub mu: Vec<(u64, f64)>,
}

impl FragCoagParams {
    pub fn new(lambda: LambdaMeasure, mu: Vec<(u64, f64)>) -> Result<Self> {
        lambda.validate()?;
        if mu.is_empty() {
            return Err(Error::invalid(
                "split-size law must be nonzero: the jump-chain normalization a_n = n needs mu(N) > 0",
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for &(j, w) in &mu {
            if j == 0 || !(w > 0.0) {
                return Err(Error::invalid(format!(
                    "mu entry ({j}, {w}) must have j >= 1 and positive mass"
                )));
            }
            if !seen.insert(j) {
                return Err(Error::invalid(format!("duplicate mu support point {j}")));
            }
        }
        let mut mu = mu;
        mu.sort_by_key(|&(j, _)| j);
        Ok(Self { lambda, mu })
    }

    /// Total fragmentation mass `μ(ℕ)`.
    pub fn mu_mass(&self) -> f64 {
        self.mu.iter().map(|&(_, w)| w).sum()
    }

    /// Mean split size `m = Σ j μ(j)`.
    pub fn mu_mean(&self) -> f64 {
        self.mu.iter().map(|&(j, w)| j as f64 * w).sum()
    }

    /// Per-target coagulation rates `g_{n,k} = ∫ C(n, k-1) x^{n-k-1} (1-x)^{k-1} Λ(dx)`
    /// for `k = 1, …, n-1`, returned as a dense vector indexed by `k - 1`.
    pub fn coagulation_rates(&self, n: u64) -> Vec<f64> {
        if n < 2 {
            return Vec::new();
        }
        let kmax = (n - 1) as usize;
        let mut rates = vec![0.0; kmax];
        match &self.lambda {
            LambdaMeasure::Atoms(atoms) => {
                for &(x, w) in atoms {
                    accumulate_binomial_terms(n, x, w, &mut rates);
                }
            }
            LambdaMeasure::Beta { a, b, mass } => {
                let ln_beta = stats::log_gamma(*a).unwrap() + stats::log_gamma(*b).unwrap()
                    - stats::log_gamma(a + b).unwrap();
                let ln_gamma_n1 = stats::log_gamma(n as f64 + 1.0).unwrap();
                for (idx, slot) in rates.iter_mut().enumerate() {
                    let k = (idx + 1) as f64;
                    let ln_binom = ln_gamma_n1
                        - stats::log_gamma(k).unwrap()
                        - stats::log_gamma(n as f64 - k + 2.0).unwrap();
                    *slot = integrate_gl64(0.0, 1.0, |x| {
                        let ln_t = ln_binom
                            + (n as f64 - k - 1.0) * x.ln()
                            + (k - 1.0) * (-x).ln_1p()
                            + (a - 1.0) * x.ln()
                            + (b - 1.0) * (-x).ln_1p()
                            - ln_beta;
                        mass * ln_t.exp()
                    });
                }
            }
        }
        rates
    }

    /// Closed-form total coalescence rate
    /// `g_n = ∫ (1 - (1-x)^n - n x (1-x)^{n-1}) x^{-2} Λ(dx)`,
    /// the independent check on the row sum of `coagulation_rates`.
    pub fn total_coalescence_rate(&self, n: u64) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let nf = n as f64;
        self.lambda.integrate(|x| {
            let l1p = (-x).ln_1p();
            let pow_n = (nf * l1p).exp();
            let pow_n1 = ((nf - 1.0) * l1p).exp();
            (1.0 - pow_n - nf * x * pow_n1) / (x * x)
        })
    }
}

/// Accumulate `w · C(n, k-1) x^{n-k-1} (1-x)^{k-1}` into `rates[k-1]` for all
/// `k`, via a ratio recurrence in scaled arithmetic. Power-of-two rescaling
/// keeps intermediate terms representable without precision loss.
fn accumulate_binomial_terms(n: u64, x: f64, w: f64, rates: &mut [f64]) {
    let nf = n as f64;
    // t_1 = x^{n-2}, tracked as mantissa * 2^exp.
    let e = (nf - 2.0) * x.log2();
    let e_int = e.floor();
    let mut mant = (e - e_int).exp2();
    let mut exp2 = e_int as i32;

    let ratio = (1.0 - x) / x;
    for (idx, slot) in rates.iter_mut().enumerate() {
        let k = (idx + 1) as f64;
        *slot += w * ldexp(mant, exp2);
        // t_{k+1} = t_k * (n - k + 1)/k * (1-x)/x
        mant *= (nf - k + 1.0) / k * ratio;
        if mant != 0.0 {
            while mant.abs() > 1e150 {
                mant *= 2.0_f64.powi(-512);
                exp2 += 512;
            }
            while mant.abs() < 1e-150 {
                mant *= 2.0_f64.powi(512);
                exp2 -= 512;
            }
        }
    }
}

fn ldexp(m: f64, e: i32) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    if e.abs() <= 1023 {
        m * 2.0_f64.powi(e)
    } else if e > 0 {
        m * 2.0_f64.powi(1023) * 2.0_f64.powi(e - 1023)
    } else if e > -2046 {
        m * 2.0_f64.powi(-1023) * 2.0_f64.powi(e + 1023)
    } else {
        0.0
    }
}

/// Neumaier compensated summation.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// The concrete chain family.
#[derive(Debug, Clone)]
pub enum Family {
    Bessel(BesselWalkParams),
    RareJumpDrift(RareJumpDriftParams),
    FragCoag(FragCoagParams),
    DownWalk,
}

/// A transition kernel `{p_{n,k}}` with its truncation policy.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    family: Family,
    trunc: TruncationPolicy,
}

impl TransitionKernel {
    pub fn new(family: Family, trunc: TruncationPolicy) -> Result<Self> {
        match &family {
            Family::RareJumpDrift(p) => {
                if !(p.theta > 0.0) || !(p.rho > 0.0 && p.rho < 1.0) {
                    return Err(Error::invalid(format!(
                        "rare-jump drift needs theta > 0 and rho in (0,1) (theta = {}, rho = {})",
                        p.theta, p.rho
                    )));
                }
            }
            Family::FragCoag(p) => {
                p.lambda.validate()?;
                if p.mu.is_empty() {
                    return Err(Error::invalid("split-size law must be nonzero"));
                }
            }
            Family::Bessel(p) => {
                if !p.d.is_finite() {
                    return Err(Error::invalid("Bessel drift coefficient must be finite"));
                }
            }
            Family::DownWalk => {}
        }
        if !(trunc.mass_tol > 0.0 && trunc.mass_tol < 0.1) || trunc.state_cap < 2 {
            return Err(Error::invalid(
                "truncation policy needs mass_tol in (0, 0.1) and state_cap >= 2",
            ));
        }
        Ok(Self { family, trunc })
    }

    pub fn bessel(d: f64) -> Self {
        Self::new(
            Family::Bessel(BesselWalkParams::new(d)),
            TruncationPolicy::default(),
        )
        .expect("finite d")
    }

    pub fn rare_jump_drift(theta: f64, rho: f64) -> Result<Self> {
        Self::new(
            Family::RareJumpDrift(RareJumpDriftParams { theta, rho }),
            TruncationPolicy::default(),
        )
    }

    pub fn frag_coag(params: FragCoagParams) -> Self {
        Self::new(Family::FragCoag(params), TruncationPolicy::default()).expect("validated params")
    }

    pub fn down_walk() -> Self {
        Self::new(Family::DownWalk, TruncationPolicy::default()).expect("no params")
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn truncation(&self) -> TruncationPolicy {
        self.trunc
    }

    pub fn with_truncation(mut self, trunc: TruncationPolicy) -> Result<Self> {
        if !(trunc.mass_tol > 0.0 && trunc.mass_tol < 0.1) || trunc.state_cap < 2 {
            return Err(Error::invalid(
                "truncation policy needs mass_tol in (0, 0.1) and state_cap >= 2",
            ));
        }
        self.trunc = trunc;
        Ok(self)
    }

    /// The row `p_{n,·}` as `(k, p)` pairs sorted by `k`, covering at least
    /// `1 - mass_tol` probability. Deterministic for fixed kernel and `n`.
    pub fn transition_row(&self, n: u64) -> Result<Vec<(u64, f64)>> {
        if n < 1 {
            return Err(Error::domain("states are positive integers"));
        }
        let raw = self.raw_row(n);
        let mut row = Vec::with_capacity(raw.len());
        let mut dropped = 0.0;
        for (k, p) in raw {
            if p <= 0.0 {
                continue;
            }
            if k > self.trunc.state_cap {
                dropped += p;
            } else {
                row.push((k, p));
            }
        }
        if dropped > self.trunc.mass_tol {
            return Err(Error::TruncationFailure {
                state: n,
                covered: 1.0 - dropped,
                mass_tol: self.trunc.mass_tol,
            });
        }
        Ok(row)
    }

    /// Row before cap filtering. Entries are sorted by `k` and distinct.
    fn raw_row(&self, n: u64) -> Vec<(u64, f64)> {
        match &self.family {
            Family::Bessel(p) => {
                if n == 1 {
                    return vec![(2, 1.0)];
                }
                let up = p.p_up(n);
                let mut row = Vec::with_capacity(2);
                if up < 1.0 {
                    row.push((n - 1, 1.0 - up));
                }
                if up > 0.0 {
                    row.push((n + 1, up));
                }
                row
            }
            Family::RareJumpDrift(p) => {
                if n == 1 {
                    return vec![(1, 1.0)];
                }
                let q = p.theta / n as f64;
                if q >= 1.0 {
                    return vec![(n - 1, 1.0)];
                }
                let target = (p.rho * n as f64).ceil() as u64;
                let down = n - 1;
                if target == down {
                    vec![(down, 1.0)]
                } else if target < down {
                    vec![(target, q), (down, 1.0 - q)]
                } else {
                    // target == n is possible when rho*n > n-1: a self-loop atom.
                    vec![(down, 1.0 - q), (target, q)]
                }
            }
            Family::FragCoag(p) => {
                let rates = p.coagulation_rates(n);
                let gn = kahan_sum(rates.iter().copied());
                let denom = gn + n as f64 * p.mu_mass();
                let mut row = Vec::with_capacity(rates.len() + p.mu.len());
                for (idx, &g) in rates.iter().enumerate() {
                    if g > 0.0 {
                        row.push(((idx + 1) as u64, g / denom));
                    }
                }
                for &(j, w) in &p.mu {
                    row.push((n + j, n as f64 * w / denom));
                }
                row
            }
            Family::DownWalk => {
                if n == 1 {
                    vec![(1, 1.0)]
                } else {
                    vec![(n - 1, 1.0)]
                }
            }
        }
    }

    /// One step from state `n`. Residual truncated mass (below `mass_tol`)
    /// lands on the largest enumerated state. Hot loops should prefer
    /// [`KernelSampler`], which caches fragmentation-coagulation rows.
    pub fn sample_step(&self, n: u64, rng: &mut impl Rng) -> Result<u64> {
        match &self.family {
            Family::Bessel(p) => {
                if n == 1 {
                    Ok(2)
                } else if rng.gen::<f64>() < p.p_up(n) {
                    self.guard_cap(n, n + 1)
                } else {
                    Ok(n - 1)
                }
            }
            Family::RareJumpDrift(p) => {
                if n == 1 {
                    return Ok(1);
                }
                let q = p.theta / n as f64;
                if q >= 1.0 || rng.gen::<f64>() >= q {
                    Ok(n - 1)
                } else {
                    Ok((p.rho * n as f64).ceil() as u64)
                }
            }
            Family::DownWalk => Ok(n.max(2) - 1),
            Family::FragCoag(_) => {
                let row = self.transition_row(n)?;
                Ok(sample_row(&row, rng))
            }
        }
    }

    fn guard_cap(&self, from: u64, to: u64) -> Result<u64> {
        if to > self.trunc.state_cap {
            Err(Error::TruncationFailure {
                state: from,
                covered: 0.0,
                mass_tol: self.trunc.mass_tol,
            })
        } else {
            Ok(to)
        }
    }

    /// `∫ f dΠ*_n = Σ_k p_{n,k} f(ln(k/n))` over the truncated row.
    pub fn log_step_integral(&self, n: u64, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let row = self.transition_row(n)?;
        let nf = n as f64;
        Ok(kahan_sum(
            row.iter().map(|&(k, p)| p * f((k as f64 / nf).ln())),
        ))
    }

    /// Simulate the chain from `n0` for at most `max_steps` steps, optionally
    /// frozen at its first visit to `{1, …, K}`.
    pub fn simulate_chain(
        &self,
        n0: u64,
        max_steps: u64,
        stop_set_bound: Option<u64>,
        rng: &mut impl Rng,
    ) -> Result<DiscreteChainPath> {
        if n0 < 1 {
            return Err(Error::domain("start state must be >= 1"));
        }
        let mut sampler = KernelSampler::new(self);
        let mut states = vec![n0];
        let mut absorption = None;
        if stop_set_bound.is_some_and(|k| n0 <= k) {
            absorption = Some(0);
        } else {
            let mut current = n0;
            for i in 1..=max_steps {
                current = sampler.step(current, rng)?;
                states.push(current);
                if stop_set_bound.is_some_and(|k| current <= k) {
                    absorption = Some(i);
                    break;
                }
            }
        }
        let censored = stop_set_bound.is_some() && absorption.is_none();
        Ok(DiscreteChainPath {
            states,
            absorption,
            censored,
        })
    }
}

fn sample_row(row: &[(u64, f64)], rng: &mut impl Rng) -> u64 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(k, p) in row {
        acc += p;
        if u < acc {
            return k;
        }
    }
    row.last().expect("nonempty row").0
}

/// A discrete path, its absorption index `A` (first index in the stop set),
/// and a censoring flag when the step budget ran out first.
#[derive(Debug, Clone)]
pub struct DiscreteChainPath {
    pub states: Vec<u64>,
    pub absorption: Option<u64>,
    pub censored: bool,
}

impl DiscreteChainPath {
    /// State at step `i`, with the frozen value after absorption.
    pub fn state(&self, i: u64) -> u64 {
        let idx = (i as usize).min(self.states.len() - 1);
        self.states[idx]
    }
}

/// Stepping front-end that caches fragmentation-coagulation rows
/// (cumulative weights) per visited state. The other families sample in
/// O(1) without allocation.
pub struct KernelSampler<'a> {
    kernel: &'a TransitionKernel,
    rows: HashMap<u64, CachedRow>,
}

struct CachedRow {
    states: Vec<u64>,
    cumulative: Vec<f64>,
}

impl<'a> KernelSampler<'a> {
    pub fn new(kernel: &'a TransitionKernel) -> Self {
        Self {
            kernel,
            rows: HashMap::new(),
        }
    }

    pub fn kernel(&self) -> &TransitionKernel {
        self.kernel
    }

    pub fn step(&mut self, n: u64, rng: &mut impl Rng) -> Result<u64> {
        match self.kernel.family() {
            Family::FragCoag(_) => {
                if !self.rows.contains_key(&n) {
                    let row = self.kernel.transition_row(n)?;
                    let mut cumulative = Vec::with_capacity(row.len());
                    let mut acc = 0.0;
                    let states = row.iter().map(|&(k, _)| k).collect();
                    for &(_, p) in &row {
                        acc += p;
                        cumulative.push(acc);
                    }
                    self.rows.insert(n, CachedRow { states, cumulative });
                }
                let row = &self.rows[&n];
                let u: f64 = rng.gen();
                let idx = row.cumulative.partition_point(|&c| c <= u);
                Ok(row.states[idx.min(row.states.len() - 1)])
            }
            _ => self.kernel.sample_step(n, rng),
        }
    }

    /// Run until the chain enters `{1, …, K}` or `cap` steps elapse.
    /// Returns `Ok(Some(A))` or `Ok(None)` when censored.
    pub fn absorption_time(
        &mut self,
        n0: u64,
        stop_bound: u64,
        cap: u64,
        rng: &mut impl Rng,
    ) -> Result<Option<u64>> {
        if n0 <= stop_bound {
            return Ok(Some(0));
        }
        let mut current = n0;
        for i in 1..=cap {
            current = self.step(current, rng)?;
            if current <= stop_bound {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}
