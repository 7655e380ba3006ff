//! Numerical laboratory for a stochastic chemotherapy model read under the
//! Hänggi-Klimontovich (anti-Itô) calculus.
//!
//! Three independent routes to the long-run behaviour of
//! `dX = ((q - c) X - r X^{v+1}) dt + σ X ∘ dW`:
//!
//! * [`stationary`]: the closed-form stationary law,
//! * [`simulate`]: seeded Monte Carlo ensembles under any interpretation,
//! * [`fpe`]: a finite-volume Fokker-Planck solver,
//!
//! plus [`feller`] boundary classification and the deterministic analysis in
//! [`model`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod calculus;
pub mod convergence;
pub mod error;
pub mod exec;
pub mod feller;
pub mod fpe;
pub mod model;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod stationary;

pub use calculus::{
    effective_ito_drift, hk_to_ito, ChemoSde, Interpretation, ItoForm, Sde, SdeSpec,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use feller::{classify_boundary, Boundary, BoundaryVerdict, FellerClass, FunctionalValue};
pub use fpe::{fpe_evolve, fpe_step, BoundaryMode, DensityField, Grid};
pub use model::{
    classify_regime, critical_sigma_squared, fixed_points, stationary_mode, ModelParams,
    RegimeClass,
};
pub use simulate::{simulate_ensemble, EnsembleSummary, Scheme, SimulationConfig};
pub use stationary::StationaryDensity;
