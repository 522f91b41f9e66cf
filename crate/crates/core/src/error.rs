use thiserror::Error;

use crate::steady::MeanFieldState;

/// Errors produced by the parameter model and the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration file could not be parsed or contained inconsistent values.
    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    /// Model parameters violate an invariant (sign, consistency, missing field).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation that needs a finite coupling received a degenerate value.
    #[error("degenerate coupling: {0}")]
    DegenerateCoupling(String),

    /// Newton iteration ran out of iterations; carries the last iterate as raw
    /// real coordinates so callers can inspect or restart.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    /// `classify` was handed a state whose residual is too large to be a root.
    #[error("state is not a steady-state root (residual {residual:.3e})")]
    NotARoot { residual: f64 },

    /// Multi-start root search found nothing at all.
    #[error("no steady-state roots found from {starts} starts")]
    NoRoots { starts: usize },

    /// Explicit integrator step underflow.
    #[error(
        "integrator step underflow at t = {t:.6e} (step {step:.3e}); \
         tighten tolerances or enable the implicit fallback"
    )]
    Stiffness { t: f64, step: f64 },

    /// A trajectory left the physically meaningful region and keeps growing
    /// (net-gain parameters without a balancing root do this).
    #[error("trajectory diverged at t = {t:.6e} (state norm {norm:.3e})")]
    Diverged { t: f64, norm: f64 },

    /// A trajectory failed to relax within the allowed horizon.
    #[error("no steady state within horizon {horizon:.3e} (flow norm {flow_norm:.3e})")]
    NoSettle {
        horizon: f64,
        flow_norm: f64,
        last: MeanFieldState,
    },

    /// Exponent-fit samples lie at or below the critical coupling.
    #[error("{count} exponent-fit samples lie below lambda_c = {lambda_c}")]
    WrongSideSamples { count: usize, lambda_c: f64 },

    /// Too few usable samples for an exponent fit after filtering.
    #[error("only {kept} usable exponent-fit samples (need at least {need})")]
    TooFewSamples { kept: usize, need: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
