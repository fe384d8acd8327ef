use thiserror::Error;

/// Failures of the special functions and closed-form constants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("Gamma pole at {re}{im:+}i")]
    GammaPole { re: f64, im: f64 },
    #[error("sin(pi*{arg}) vanishes")]
    SinZero { arg: f64 },
}

/// Parameter validation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("balance violated: |m1 + m2 - l1 - l2| = {gap:e}")]
    BalanceViolation { gap: f64 },
    #[error("kappa = {kappa} is not generic: {reason}")]
    NonGenericKappa { kappa: f64, reason: String },
    #[error("module dimensions must be non-negative (m2 = {m2}, l2 = {l2})")]
    NegativeDimension { m2: i64, l2: i64 },
    #[error("index {index} is not admissible (range 0..={max})")]
    NotAdmissible { index: i64, max: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid contour geometry: {0}")]
    Invalid(String),
    #[error("loops {0} and {1} come within {2:e} of each other")]
    LoopsTooClose(usize, usize, f64),
}

/// Integrand evaluation and branch tracking failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrandError {
    #[error("a linear factor of the integrand vanishes: {0}")]
    FactorVanishes(String),
    #[error("argument jump {jump:.3} >= pi/2 during branch tracking")]
    StepTooLarge { jump: f64 },
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("no convergence: relative error estimate {error:e} above target {target:e}")]
    NoConvergence { error: f64, target: f64, value: Vec<num_complex::Complex64> },
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid quadrature configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("integration path passes within {0:e} of the singular point x = 0")]
    SingularPath(f64),
    #[error("step size underflow at s = {0}")]
    StepUnderflow(f64),
}

/// Crate-wide error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
