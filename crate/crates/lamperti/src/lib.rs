//! Simulation and verification laboratory for integer-valued Markov chains
//! whose rescaled paths converge to positive self-similar Markov processes.
//!
//! The library is organized around the objects of that limit theory:
//!
//! * [`kernels`] — transition-kernel families on the positive integers
//!   (Bessel-type walks, rare-jump drift walks, fragmentation-coagulation
//!   block counts, deterministic down walks) together with the log-step
//!   measure `Π*_n`, the law of `ln(X_n(1)/n)`.
//! * [`levy`] — Lévy triplets `(σ², b, Π)`, the Laplace exponent `Ψ` and
//!   characteristic exponent `Φ`, path simulation with small-jump diffusion
//!   substitution, exponential functionals `∫ e^{γξ}`, and the Lamperti
//!   transform producing the limit process `Y`.
//! * [`embedding`] — the auxiliary continuous-time chain `L_n` with holding
//!   rates `a_j`, its exact Lamperti-type time change `τ_n`, and the coupling
//!   identity with the Poissonized discrete chain.
//! * [`analysis`] — numerical checkers for the convergence assumptions,
//!   limit-triplet estimation from a kernel family, Foster–Lyapounov drift
//!   diagnostics and regime classification.
//! * [`montecarlo`] — replicated, deterministically seeded simulation of
//!   rescaled chains, absorption times and limit marginals.
//! * [`stats`] — empirical distributions, Kolmogorov–Smirnov tests, the
//!   inverse-gamma reference law and gamma-function moment formulas.
//! * [`cli`] — the experiment runner behind the `lamperti` binary: JSON
//!   configs, CSV/JSON persistence, subcommands `check`, `absorption`,
//!   `marginals`, `coupling`, `limit`.
//!
//! Every stochastic entry point takes a caller-owned random stream; kernels,
//! triplets and scaling sequences are immutable after construction and safe
//! to share across threads. Replicated experiments derive one counter-mode
//! stream per replica from `(master seed, replica index)`, so results are
//! bit-identical regardless of worker count.
//!
//! The `examples/` directory contains one runnable program per major
//! capability; see the README for the map.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod embedding;
pub mod error;
pub mod kernels;
pub mod levy;
pub mod montecarlo;
pub mod stats;

mod quad;
pub mod rng;

pub use embedding::ScalingSequence;
pub use error::{Error, Result};
pub use kernels::TransitionKernel;
pub use levy::LevyTriplet;
pub use montecarlo::ExperimentPlan;
pub use stats::EmpiricalDistribution;
