use thiserror::Error;

use crate::feller::Boundary;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    /// σ² ≤ 2(c − q): the stationary law collapses onto a point mass at zero.
    #[error("stationary density is degenerate (sigma^2 = {sigma_sq} <= 2(c - q) = {critical}); mass concentrates at 0")]
    DegenerateDensity { sigma_sq: f64, critical: f64 },

    #[error("state became non-finite at t = {time}")]
    NumericalBlowup { time: f64 },

    #[error(
        "{failed} of {total} paths blew up (first at t = {first_time}); \
         reduce dt or change scheme"
    )]
    EnsembleBlowup {
        failed: usize,
        total: usize,
        first_time: f64,
    },

    #[error("{functional} functional at {boundary:?} inconclusive after {levels} ladder levels; extend the ladder")]
    Inconclusive {
        functional: &'static str,
        boundary: Boundary,
        levels: usize,
    },

    #[error("explicit step unstable: dt = {dt} exceeds the positivity bound {bound}")]
    Stability { dt: f64, bound: f64 },

    #[error("quadrature did not reach tolerance (estimate {estimate}, error {error})")]
    QuadratureFailed { estimate: f64, error: f64 },

    #[error("sample set is empty")]
    EmptySamples,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalBlowup { .. }
                | Error::EnsembleBlowup { .. }
                | Error::Inconclusive { .. }
                | Error::Stability { .. }
                | Error::QuadratureFailed { .. }
        )
    }
}
