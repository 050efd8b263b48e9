use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown lattice preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("degenerate k-path: direction vector is zero")]
    DegenerateKPath,
    #[error("negative bare mode frequency: omega_a = {omega_a}, omega_b = {omega_b}")]
    NegativeBareFrequency { omega_a: f64, omega_b: f64 },
    #[error("nonpositive epsilon: {0}")]
    NonpositiveEpsilon(f64),
    #[error("magnon instability: |Γ| ≥ 1 (|Γ| = {abs_gamma})")]
    MagnonInstability { abs_gamma: f64 },
    #[error("soft hybridized mode: omega_alpha = {omega_alpha}")]
    SoftHybridMode { omega_alpha: f64 },
    #[error("truncation cap exceeded: need more than {cap} Fock levels")]
    TruncationCapExceeded { cap: usize },
    #[error("excited recursion undefined at r=0: use Fock product state directly")]
    ExcitedAtZeroSqueezing,
    #[error("state under-truncated: norm deficit {deficit:e} exceeds tolerance {tolerance:e}")]
    UnderTruncated { deficit: f64, tolerance: f64 },
    #[error("increase n_trunc: truncation leakage {leakage:e} exceeds tolerance {tolerance:e}")]
    IncreaseTruncation { leakage: f64, tolerance: f64 },
    #[error("no oscillation: zero Rabi frequency")]
    NoOscillation,
    #[error("inconsistent frequency/detuning pair: (πf)² = {pi_f_sq}, detuning² = {detuning_sq}")]
    InconsistentFrequency { pi_f_sq: f64, detuning_sq: f64 },
    #[error("unknown coupling scale: lambda must be > 0")]
    UnknownCouplingScale,
    #[error("Nyquist violation: {samples_per_period:.2} samples per period (need at least 4)")]
    NyquistViolation { samples_per_period: f64 },
    #[error("invalid time series: {0}")]
    InvalidSeries(String),
    #[error("no oscillation detected")]
    NoOscillationDetected,
    #[error("frequency fit did not converge")]
    FitNotConverged,
}

pub type Result<T> = std::result::Result<T, Error>;
