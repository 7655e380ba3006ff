//! The generalized-logistic chemotherapy model and its deterministic analysis.
//!
//! Deterministic dynamics: `dx/dt = x (q - r x^v) - c x`. The noisy model adds
//! `σ x` multiplicative noise; how that noise is integrated is decided in
//! [`crate::calculus`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five model coefficients.
///
/// * `q` proliferation rate, `r` crowding coefficient, `v` logistic exponent,
/// * `c` drug kill rate, `sigma` noise intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub q: f64,
    pub r: f64,
    pub v: f64,
    pub c: f64,
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(q: f64, r: f64, v: f64, c: f64, sigma: f64) -> Result<Self> {
        let p = Self { q, r, v, c, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("q", self.q),
            ("r", self.r),
            ("v", self.v),
            ("c", self.c),
            ("sigma", self.sigma),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        for (name, value) in [("q", self.q), ("r", self.r), ("v", self.v)] {
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                });
            }
        }
        for (name, value) in [("c", self.c), ("sigma", self.sigma)] {
            if value < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be non-negative",
                });
            }
        }
        Ok(())
    }

    /// Validation for the stochastic operations, which need `sigma > 0`.
    pub fn validate_noisy(&self) -> Result<()> {
        self.validate()?;
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "stochastic operations require sigma > 0",
            });
        }
        Ok(())
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    /// Net growth rate `q - c`.
    pub fn net_growth(&self) -> f64 {
        self.q - self.c
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Deterministic right-hand side `(q - c) x - r x^(v+1)`.
    pub fn deterministic_rate(&self, x: f64) -> f64 {
        self.net_growth() * x - self.r * x * pow_v(x, self.v)
    }

    /// Interior equilibrium `((q - c) / r)^(1/v)`, if `q > c`.
    pub fn carrying_point(&self) -> Option<f64> {
        let g = self.net_growth();
        (g > 0.0).then(|| (g / self.r).powf(1.0 / self.v))
    }
}

/// `x^v` with the logistic case kept exact.
#[inline]
pub(crate) fn pow_v(x: f64, v: f64) -> f64 {
    if v == 1.0 {
        x
    } else if v == 2.0 {
        x * x
    } else {
        x.powf(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub location: f64,
    pub stability: Stability,
}

/// Equilibria of the noise-free dynamics, ordered by location.
pub fn fixed_points(params: &ModelParams) -> Result<Vec<FixedPoint>> {
    params.validate()?;
    Ok(match params.carrying_point() {
        Some(x) => vec![
            FixedPoint {
                location: 0.0,
                stability: Stability::Unstable,
            },
            FixedPoint {
                location: x,
                stability: Stability::Stable,
            },
        ],
        None => vec![FixedPoint {
            location: 0.0,
            stability: Stability::Stable,
        }],
    })
}

/// Shape class of the stationary law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeClass {
    /// `q > c`: interior mode at the carrying point for every σ.
    RobustInterior,
    /// `q ≤ c` and `σ² > 2(c - q)`: proper density, decreasing, mode at 0.
    DecreasingMode,
    /// `q ≤ c` and `σ² ≤ 2(c - q)`: all mass at 0.
    DegenerateAtZero,
}

/// Classification from `(q, c, σ²)` directly, so sweeps over σ² hit the
/// critical value exactly instead of through `sqrt(σ²)²`.
pub fn regime_for(q: f64, c: f64, sigma_sq: f64) -> RegimeClass {
    if q - c > 0.0 {
        RegimeClass::RobustInterior
    } else if sigma_sq > 2.0 * (c - q) {
        RegimeClass::DecreasingMode
    } else {
        RegimeClass::DegenerateAtZero
    }
}

pub fn classify_regime(params: &ModelParams) -> Result<RegimeClass> {
    params.validate_noisy()?;
    Ok(regime_for(params.q, params.c, params.sigma_sq()))
}

/// Critical noise level `2(c - q)` when `q ≤ c`; `None` when no transition exists.
pub fn critical_sigma_squared(params: &ModelParams) -> Option<f64> {
    (params.net_growth() <= 0.0).then_some(2.0 * (params.c - params.q))
}

/// Most probable value of the stationary law: the carrying point when `q > c`
/// (independent of σ), otherwise 0.
pub fn stationary_mode(params: &ModelParams) -> Result<f64> {
    params.validate_noisy()?;
    Ok(params.carrying_point().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(q: f64, c: f64, r: f64, v: f64, sigma: f64) -> ModelParams {
        ModelParams::new(q, r, v, c, sigma).unwrap()
    }

    fn rk4(params: &ModelParams, mut x: f64, dt: f64, steps: usize) -> f64 {
        let f = |x: f64| params.deterministic_rate(x);
        for _ in 0..steps {
            let k1 = f(x);
            let k2 = f(x + 0.5 * dt * k1);
            let k3 = f(x + 0.5 * dt * k2);
            let k4 = f(x + dt * k3);
            x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x
    }

    #[test]
    fn fixed_points_growth_regime() {
        let fp = fixed_points(&p(2.0, 1.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(fp.len(), 2);
        assert_eq!(fp[0].location, 0.0);
        assert_eq!(fp[0].stability, Stability::Unstable);
        assert_eq!(fp[1].location, 1.0);
        assert_eq!(fp[1].stability, Stability::Stable);
    }

    #[test]
    fn fixed_points_kill_regime() {
        let fp = fixed_points(&p(1.0, 2.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(
            fp,
            vec![FixedPoint {
                location: 0.0,
                stability: Stability::Stable
            }]
        );
    }

    #[test]
    fn fixed_points_match_rk4_attractor() {
        let params = p(3.0, 1.0, 2.0, 2.0, 0.0);
        let fp = fixed_points(&params).unwrap();
        assert!((fp[1].location - 1.0).abs() < 1e-15);
        for x0 in [0.1, 5.0] {
            let x = rk4(&params, x0, 1e-3, 20_000);
            assert!((x - 1.0).abs() < 1e-10, "x0 = {x0} -> {x}");
        }
        // the origin repels
        assert!(rk4(&params, 1e-6, 1e-3, 2_000) > 1e-6);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, -0.1, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN, 1.0, 1.0).is_err());
        let noiseless = p(2.0, 1.0, 1.0, 1.0, 0.0);
        assert!(fixed_points(&noiseless).is_ok());
        assert!(classify_regime(&noiseless).is_err());
    }

    #[test]
    fn modes() {
        assert_eq!(stationary_mode(&p(2.0, 1.0, 1.0, 1.0, 5.0)).unwrap(), 1.0);
        assert_eq!(stationary_mode(&p(2.0, 1.0, 1.0, 1.0, 0.1)).unwrap(), 1.0);
        assert_eq!(stationary_mode(&p(1.0, 2.0, 1.0, 1.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn regimes() {
        assert_eq!(
            classify_regime(&p(2.0, 1.0, 1.0, 1.0, 10.0)).unwrap(),
            RegimeClass::RobustInterior
        );
        assert_eq!(regime_for(1.0, 2.0, 3.0), RegimeClass::DecreasingMode);
        assert_eq!(regime_for(1.0, 2.0, 2.0), RegimeClass::DegenerateAtZero);
        assert_eq!(regime_for(1.0, 1.0, 1e-12), RegimeClass::DecreasingMode);
    }

    #[test]
    fn critical_levels() {
        assert_eq!(
            critical_sigma_squared(&p(1.0, 2.0, 1.0, 1.0, 1.0)),
            Some(2.0)
        );
        assert_eq!(critical_sigma_squared(&p(2.0, 1.0, 1.0, 1.0, 1.0)), None);
        assert_eq!(
            critical_sigma_squared(&p(1.0, 1.0, 1.0, 1.0, 1.0)),
            Some(0.0)
        );
    }
}
