//! Closed-form stationary law of the Hänggi-Klimontovich chemotherapy model.
//!
//! `p_s(x) = k0 · exp(-β x^v) · x^p` with `p = 2(q - c)/σ²` and
//! `β = 2r/(vσ²)`, normalizable iff `p > -1`. Everything is carried in log
//! space and exponentiated only on output.

use crate::error::{Error, Result};
use crate::model::{pow_v, regime_for, ModelParams, RegimeClass};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::special::{ln_gamma_unchecked, stirling_remainder};

/// Peak-relative level below which the density is treated as zero.
const TRUNCATION_LOG_RATIO: f64 = 36.841_361_487_904_734; // ln 1e16

/// Value of the density at a point. The integrable pole at the origin
/// (`-1 < p < 0`) is reported as [`PdfValue::Pole`] rather than `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdfValue {
    Finite(f64),
    Pole,
}

impl PdfValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            PdfValue::Finite(v) => Some(v),
            PdfValue::Pole => None,
        }
    }
}

/// `ln p_s` at the interior mode, where `β m^v = p/v`. With `b = p/v` and
/// `a = b + 1/v` the terms `b ln b - b - ln Γ(a)` are regrouped through
/// Stirling's formula so nothing of size `b` cancels.
fn ln_peak(p: f64, rate: f64, v: f64) -> f64 {
    let b = p / v;
    let a = b + 1.0 / v;
    v.ln() + rate.ln() / v - b * (1.0 / (v * b)).ln_1p() + (0.5 - 1.0 / v) * a.ln() + 1.0 / v
        - 0.5 * (2.0 * std::f64::consts::PI).ln()
        - stirling_remainder(a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryDensity {
    params: ModelParams,
    log_k0: f64,
    /// `ln p_s` at the interior mode; unused when the mode is 0.
    ln_peak: f64,
    exponent: f64,
    rate: f64,
    mode: f64,
    reference: f64,
    upper: f64,
}

impl StationaryDensity {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate_noisy()?;
        let sigma_sq = params.sigma_sq();
        if regime_for(params.q, params.c, sigma_sq) == RegimeClass::DegenerateAtZero {
            return Err(Error::DegenerateDensity {
                sigma_sq,
                critical: 2.0 * (params.c - params.q),
            });
        }
        let exponent = 2.0 * params.net_growth() / sigma_sq;
        let rate = 2.0 * params.r / (params.v * sigma_sq);
        let shape = (exponent + 1.0) / params.v;
        let log_k0 = params.v.ln() - ln_gamma_unchecked(shape) + shape * rate.ln();
        let mode = params.carrying_point().unwrap_or(0.0);
        let reference = if mode > 0.0 {
            mode
        } else {
            rate.powf(-1.0 / params.v)
        };
        let mut density = Self {
            params,
            log_k0,
            ln_peak: 0.0,
            exponent,
            rate,
            mode,
            reference,
            upper: f64::INFINITY,
        };
        if mode > 0.0 {
            density.ln_peak = ln_peak(exponent, rate, params.v);
        }
        density.upper = density.find_upper();
        Ok(density)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn log_k0(&self) -> f64 {
        self.log_k0
    }

    pub fn k0(&self) -> f64 {
        self.log_k0.exp()
    }

    /// Power of `x` in the density, `2(q - c)/σ²`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Coefficient of `x^v` in the exponential factor, `2r/(vσ²)`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    /// Point beyond which the density is below `1e-16` of its value at the
    /// mode (or at the scale point `β^(-1/v)` when the mode sits at 0).
    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// `ln p_s(x)` for `x > 0`. With an interior mode `m` this is written as
    /// `ln p_s(m) + p (ln t - (t^v - 1)/v)`, `t = x/m`, which stays accurate
    /// when `p` and `β` are huge (small σ) and the two plain terms cancel.
    fn ln_density(&self, x: f64) -> f64 {
        if self.mode > 0.0 {
            let lt = (x / self.mode).ln();
            let v = self.params.v;
            self.ln_peak + self.exponent * (lt - (v * lt).exp_m1() / v)
        } else {
            self.log_k0 + self.exponent * x.ln() - self.rate * pow_v(x, self.params.v)
        }
    }

    /// `ln p_s(x)`; `-∞` or `+∞` at the origin depending on the sign of `p`.
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain {
                what: "stationary density",
                value: x,
            });
        }
        if x == 0.0 {
            return Ok(if self.exponent > 0.0 {
                f64::NEG_INFINITY
            } else if self.exponent == 0.0 {
                self.log_k0
            } else {
                f64::INFINITY
            });
        }
        Ok(self.ln_density(x))
    }

    pub fn pdf(&self, x: f64) -> Result<PdfValue> {
        let ln = self.ln_pdf(x)?;
        Ok(if ln == f64::INFINITY {
            PdfValue::Pole
        } else {
            PdfValue::Finite(ln.exp())
        })
    }

    fn find_upper(&self) -> f64 {
        let target = self.ln_density(self.reference) - TRUNCATION_LOG_RATIO;
        let mut lo = self.reference;
        let mut hi = 2.0 * self.reference.max(f64::MIN_POSITIVE);
        while self.ln_density(hi) > target {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_density(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Curvature length of the peak, `1/sqrt(-d² ln p_s / dx²)` at the mode.
    fn peak_width(&self) -> f64 {
        let v = self.params.v;
        let m = self.mode;
        let curvature = self.exponent / (m * m) + self.rate * v * (v - 1.0) * pow_v(m, v) / (m * m);
        1.0 / curvature.sqrt()
    }

    /// `∫_a^b p_s`, with `0 ≤ a ≤ b`; the domain beyond [`Self::upper_bound`] is dropped.
    pub fn mass_between(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0) || !(b >= a) {
            return Err(Error::Domain {
                what: "stationary mass interval",
                value: if a >= 0.0 { b } else { a },
            });
        }
        let b = b.min(self.upper);
        if b <= a {
            return Ok(0.0);
        }
        // Quadrature nodes can resolve a peak only to about ε·mode/width.
        let resolution = if self.mode > 0.0 {
            (self.mode / self.peak_width()).max(1.0)
        } else {
            1.0
        };
        let tol = Tolerance {
            abs: 1e-14,
            rel: 1e-13 * resolution,
            max_intervals: 20_000,
        };
        let mut total = 0.0;
        let mut start = a;
        if a == 0.0 && self.exponent < 0.0 {
            // Integrable pole: substitute y = x^(p+1) on the first stretch.
            let head = b.min(self.reference);
            let lift = self.exponent + 1.0;
            let power = self.params.v / lift;
            let log_scale = self.log_k0 - lift.ln();
            let rate = self.rate;
            let g = move |y: f64| {
                if y <= 0.0 {
                    log_scale.exp()
                } else {
                    (log_scale - rate * (power * y.ln()).exp()).exp()
                }
            };
            let top = head.powf(lift);
            total += integrate_with_breaks(g, &[0.0, 0.5 * top, top], tol)?.value;
            start = head;
        }
        if b > start {
            let mut breaks = vec![start];
            if self.mode > 0.0 {
                let w = self.peak_width();
                for k in [-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0] {
                    let x = self.mode + k * w;
                    if x > start && x < b {
                        breaks.push(x);
                    }
                }
            }
            breaks.push(b);
            let f = |x: f64| {
                if x <= 0.0 {
                    if self.exponent == 0.0 {
                        self.log_k0.exp()
                    } else {
                        0.0
                    }
                } else {
                    self.ln_density(x).exp()
                }
            };
            total += integrate_with_breaks(f, &breaks, tol)?.value;
        }
        Ok(total)
    }

    /// `∫_0^x p_s`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain {
                what: "stationary cdf",
                value: x,
            });
        }
        self.mass_between(0.0, x)
    }

    /// CDF at ascending points, accumulated gap by gap so the result is
    /// monotone by construction.
    pub fn cdf_sorted(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(xs.len());
        let mut prev = 0.0;
        let mut acc = 0.0;
        for &x in xs {
            if !(x >= prev) {
                return Err(Error::Domain {
                    what: "cdf_sorted (points must be ascending and non-negative)",
                    value: x,
                });
            }
            if x > prev {
                acc += self.mass_between(prev, x)?;
                prev = x;
            }
            out.push(acc);
        }
        Ok(out)
    }
}
