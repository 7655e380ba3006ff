//! Stochastic-calculus interpretations of multiplicative noise.
//!
//! An SDE `dX = f dt + g ∘_α dW` evaluated at the point `α` of each partition
//! interval has the Itô equivalent `dX = (f + α g ∂ₓg) dt + g dW`. `α = 0` is
//! Itô, `α = ½` Stratonovich, `α = 1` Hänggi-Klimontovich (anti-Itô).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{pow_v, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpretation {
    Ito,
    Stratonovich,
    #[serde(alias = "anti_ito", alias = "hanggi_klimontovich")]
    Hk,
}

impl Interpretation {
    pub const ALL: [Interpretation; 3] = [
        Interpretation::Ito,
        Interpretation::Stratonovich,
        Interpretation::Hk,
    ];

    /// Evaluation point within each partition interval.
    pub fn alpha(self) -> f64 {
        match self {
            Interpretation::Ito => 0.0,
            Interpretation::Stratonovich => 0.5,
            Interpretation::Hk => 1.0,
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpretation::Ito => "ito",
            Interpretation::Stratonovich => "stratonovich",
            Interpretation::Hk => "hk",
        })
    }
}

impl FromStr for Interpretation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ito" => Ok(Interpretation::Ito),
            "stratonovich" => Ok(Interpretation::Stratonovich),
            "hk" | "anti_ito" | "anti-ito" | "hanggi_klimontovich" => Ok(Interpretation::Hk),
            other => Err(format!("unknown interpretation `{other}`")),
        }
    }
}

/// A scalar SDE given by drift `f(x, t)`, noise amplitude `g(x, t)` and the
/// analytic derivative `∂ₓg(x, t)`.
pub trait Sde: Sync {
    fn drift(&self, x: f64, t: f64) -> f64;
    fn diffusion(&self, x: f64, t: f64) -> f64;
    fn diffusion_dx(&self, x: f64, t: f64) -> f64;
}

impl<S: Sde + ?Sized> Sde for &S {
    fn drift(&self, x: f64, t: f64) -> f64 {
        (**self).drift(x, t)
    }
    fn diffusion(&self, x: f64, t: f64) -> f64 {
        (**self).diffusion(x, t)
    }
    fn diffusion_dx(&self, x: f64, t: f64) -> f64 {
        (**self).diffusion_dx(x, t)
    }
}

type CoeffFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// SDE assembled from closures.
#[derive(Clone)]
pub struct SdeSpec {
    drift: CoeffFn,
    diffusion: CoeffFn,
    diffusion_dx: CoeffFn,
}

impl SdeSpec {
    pub fn new<F, G, D>(drift: F, diffusion: G, diffusion_dx: D) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            diffusion_dx: Arc::new(diffusion_dx),
        }
    }
}

impl fmt::Debug for SdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeSpec").finish_non_exhaustive()
    }
}

impl Sde for SdeSpec {
    fn drift(&self, x: f64, t: f64) -> f64 {
        (self.drift)(x, t)
    }
    fn diffusion(&self, x: f64, t: f64) -> f64 {
        (self.diffusion)(x, t)
    }
    fn diffusion_dx(&self, x: f64, t: f64) -> f64 {
        (self.diffusion_dx)(x, t)
    }
}

/// The chemotherapy SDE: `f = (q - c) x - r x^(v+1)`, `g = σ x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChemoSde {
    pub params: ModelParams,
}

impl ChemoSde {
    pub fn new(params: ModelParams) -> Self {
        Self { params }
    }
}

impl Sde for ChemoSde {
    #[inline]
    fn drift(&self, x: f64, _t: f64) -> f64 {
        let p = &self.params;
        (p.q - p.c) * x - p.r * x * pow_v(x, p.v)
    }
    #[inline]
    fn diffusion(&self, x: f64, _t: f64) -> f64 {
        self.params.sigma * x
    }
    #[inline]
    fn diffusion_dx(&self, _x: f64, _t: f64) -> f64 {
        self.params.sigma
    }
}

/// Geometric Brownian motion `dx = a x dt + σ x dW` (the `r = 0` reduction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSde {
    pub a: f64,
    pub sigma: f64,
}

impl Sde for LinearSde {
    #[inline]
    fn drift(&self, x: f64, _t: f64) -> f64 {
        self.a * x
    }
    #[inline]
    fn diffusion(&self, x: f64, _t: f64) -> f64 {
        self.sigma * x
    }
    #[inline]
    fn diffusion_dx(&self, _x: f64, _t: f64) -> f64 {
        self.sigma
    }
}

/// Itô form of an SDE read under an `α`-point interpretation: drift
/// `f + α g ∂ₓg`, diffusion unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItoForm<S> {
    inner: S,
    alpha: f64,
}

impl<S: Sde> ItoForm<S> {
    pub fn new(inner: S, interp: Interpretation) -> Self {
        Self {
            inner,
            alpha: interp.alpha(),
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl<S: Sde> Sde for ItoForm<S> {
    #[inline]
    fn drift(&self, x: f64, t: f64) -> f64 {
        let f = self.inner.drift(x, t);
        if self.alpha == 0.0 {
            f
        } else {
            f + self.alpha * self.inner.diffusion(x, t) * self.inner.diffusion_dx(x, t)
        }
    }
    #[inline]
    fn diffusion(&self, x: f64, t: f64) -> f64 {
        self.inner.diffusion(x, t)
    }
    #[inline]
    fn diffusion_dx(&self, x: f64, t: f64) -> f64 {
        self.inner.diffusion_dx(x, t)
    }
}

/// Conversion rule: the Itô SDE whose solution solves the given HK-SDE.
pub fn hk_to_ito<S: Sde>(spec: S) -> ItoForm<S> {
    ItoForm::new(spec, Interpretation::Hk)
}

/// Drift of the Itô equivalent of `spec` read under `interp`.
pub fn effective_ito_drift<S: Sde>(
    spec: &S,
    interp: Interpretation,
) -> impl Fn(f64, f64) -> f64 + '_ {
    let form = ItoForm::new(spec, interp);
    move |x, t| form.drift(x, t)
}

/// Largest relative mismatch between `diffusion_dx` and a centered difference
/// of `diffusion` over the given points.
pub fn diffusion_derivative_mismatch<S: Sde>(spec: &S, points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .map(|&(x, t)| {
            let h = 1e-5 * x.abs().max(1.0);
            let fd = (spec.diffusion(x + h, t) - spec.diffusion(x - h, t)) / (2.0 * h);
            let exact = spec.diffusion_dx(x, t);
            (fd - exact).abs() / exact.abs().max(1e-12)
        })
        .fold(0.0, f64::max)
}
