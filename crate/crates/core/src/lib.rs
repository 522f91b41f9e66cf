//! Steady states, stability, and phase structure of a coherently driven
//! Tavis–Cummings model with cavity loss, cavity gain, and spin dissipation,
//! in the scaled mean-field variables ā = ⟨a⟩/√N, jm = ⟨J−⟩/(N/2),
//! jz = ⟨Jz⟩/(N/2).
//!
//! The crate is organised around one flow (`steady::flow`) and several ways
//! of interrogating it:
//!
//! * [`model`] — parameter set, drive matching, critical couplings, and a
//!   plain-text config format.
//! * [`analytic`] — closed-form order parameters for the balanced regimes
//!   and critical-exponent fitting.
//! * [`steady`] — damped-Newton root finding on the reduced spin system,
//!   multi-start enumeration, linear stability, and pseudo-arclength
//!   continuation across folds.
//! * [`dynamics`] — adaptive Dormand–Prince time integration with an
//!   implicit fallback, plus settling onto attractors.
//! * [`cumulant`] — second-order correlator corrections as a nine-real
//!   Newton system.
//! * [`sweep`] — containers for parameter sweeps and branch bookkeeping.
//!
//! # Example
//!
//! Locate both steady states of a gain-balanced model above threshold:
//!
//! ```
//! use tcqpt_core::model::gain_balance_rate;
//! use tcqpt_core::steady::{find_all, GridSpec};
//! use tcqpt_core::{ModelParams, Regime};
//! use num_complex::Complex64;
//!
//! let mut params = ModelParams {
//!     delta_c: 8.0,
//!     delta_s: 8.0,
//!     lambda: 2.0 * 65.0_f64.sqrt(),
//!     kappa_c: 1.0,
//!     gamma_perp: 1.0,
//!     gamma_par: 0.1,
//!     ..ModelParams::default()
//! };
//! params.kappa_g = gain_balance_rate(&params).unwrap();
//! let params = params
//!     .with_matched_drives(Regime::GainBalanced, Complex64::new(1.0, 0.0))
//!     .unwrap();
//!
//! let roots = find_all(&params, &GridSpec::default()).unwrap();
//! assert_eq!(roots.len(), 2);
//! assert!((roots[0].state.jz - (-1.0)).abs() < 1e-9); // normal
//! assert!((roots[1].state.jz - (-0.25)).abs() < 1e-9); // superradiant
//! ```

pub mod analytic;
pub mod cumulant;
mod error;
pub mod model;
pub mod steady;
pub mod sweep;

pub mod dynamics;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use analytic::{ExponentFit, OrderParameters};
pub use cumulant::{CumulantSolution, CumulantState};
pub use dynamics::{Controls, Trajectory};
pub use model::{EffectiveModel, ModelParams, Regime};
pub use steady::{GridSpec, MeanFieldState, SolveOptions, Stability, SteadySolution};
pub use sweep::{SweepMetadata, SweepRecord, SweepResult};
