use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the
/// individual modules so callers can match on what actually went wrong.
#[derive(Error, Debug)]
pub enum Error {
    /// Row enumeration hit the state cap before covering `1 - mass_tol`.
    #[error("row truncation failed at state {state}: covered mass {covered} < 1 - {mass_tol}")]
    TruncationFailure {
        state: u64,
        covered: f64,
        mass_tol: f64,
    },

    /// The exponential moment `∫ e^{λx} Π(dx)` is infinite at the requested λ.
    #[error("Laplace exponent diverges at lambda = {lambda}")]
    ExponentDiverges { lambda: f64 },

    /// `E[ξ₁]` cannot be classified because both tails of Π are infinite.
    #[error("mean of the Levy process is indeterminate (both tails infinite)")]
    Indeterminate,

    /// No β₀ with Ψ(β₀) < 0 is available, so the exponential-functional tail
    /// cannot be bounded.
    #[error("no exponential tail bound available: Psi({beta0}) = {psi} >= 0")]
    TailUnbounded { beta0: f64, psi: f64 },

    /// The simulated horizon is too short to resolve the requested time.
    #[error("horizon too short: requested t = {t}, resolved up to {resolved}")]
    HorizonTooShort { t: f64, resolved: f64 },

    /// Event-driven simulation exceeded its event budget before the horizon.
    #[error("event budget of {budget} events exceeded before horizon {horizon}")]
    EventBudgetExceeded { budget: u64, horizon: f64 },

    /// A limit estimate did not stabilize over the top half of the n-grid.
    #[error("estimate unstable: {what} = {value} with band {band}")]
    Unstable { what: String, value: f64, band: f64 },

    /// The Foster drift condition did not hold up to `n_max`.
    #[error("no drift threshold found below n_max = {n_max}")]
    NotFound { n_max: u64 },

    /// Every replica was censored; the regime or the cap is wrong.
    #[error("all {replicas} replicas censored at cap {cap}")]
    AllCensored { replicas: usize, cap: u64 },

    /// Too many censored replicas for a trustworthy moment estimate.
    #[error("censored fraction {fraction} exceeds bound {bound}")]
    CensoringBias { fraction: f64, bound: f64 },

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid construction parameters (measures, kernels, plans).
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
