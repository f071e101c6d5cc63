use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Closed forms only hold when oscillators A and C are resonant with the drive.
    #[error("closed form requires delta_a = delta_c = 0 (got delta_a = {delta_a}, delta_c = {delta_c})")]
    NotResonant { delta_a: f64, delta_c: f64 },

    #[error("no steady state: drive {omega} >= critical drive {omega_c}")]
    NoSteadyState { omega: f64, omega_c: f64 },

    #[error("no emission from oscillator B: steady-state population is zero")]
    NoEmission,

    #[error("second-moment nullspace has dimension {found}, only {expected} dark moments catalogued")]
    SingularBeyondDarkSector { found: usize, expected: usize },

    #[error("closed form is singular near an exceptional point ({0}); use the numeric path")]
    NearEpSingularity(String),

    #[error("correlation trace has not decayed below {threshold:e} (tail |g1| = {tail:e})")]
    InsufficientDecay { threshold: f64, tail: f64 },

    #[error("expected a doublet, found {0} peaks")]
    NotDoublet(usize),

    #[error("Fock cutoff saturated: mode {mode} top-level population {population:e}")]
    CutoffSaturation { mode: char, population: f64 },

    #[error("Fock space dimension {0} exceeds the limit of 10000")]
    HilbertTooLarge(usize),

    #[error("steady state not reached by t = {t_end} (relative drift {drift:e})")]
    NotConverged { t_end: f64, drift: f64 },

    #[error("eigensolver failed to converge")]
    EigenNonConvergence,

    #[error("singular linear system")]
    SingularSystem,

    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("exceptional-point refinement did not converge in [{lo}, {hi}]")]
    RefinementNonConvergence { lo: f64, hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}
