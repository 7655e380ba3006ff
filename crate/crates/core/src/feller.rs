//! Feller boundary classification from the scale and speed densities.
//!
//! With `s` the scale density and `m` the speed density,
//! `Σ(b) = ∫₁ᵇ [M(ξ) - M(1)] dS(ξ)` and `N(b) = ∫₁ᵇ [S(η) - S(1)] dM(η)`
//! are evaluated on truncations marching towards `b`. Integration runs in
//! `u = ln x` and in log space throughout: inside each cell the log-densities
//! are replaced by their chords, which makes every cell integral closed-form
//! up to one smooth 16-point Gauss-Legendre evaluation. The discrete
//! functionals satisfy `Σ + N = S·M` exactly.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quad::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Zero,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalValue {
    Finite(f64),
    Diverges,
}

impl FunctionalValue {
    pub fn is_finite(self) -> bool {
        matches!(self, FunctionalValue::Finite(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FellerClass {
    Exit,
    Entrance,
    Natural,
    Regular,
}

impl FellerClass {
    pub fn from_functionals(sigma: FunctionalValue, n: FunctionalValue) -> Self {
        match (sigma.is_finite(), n.is_finite()) {
            (true, false) => FellerClass::Exit,
            (false, true) => FellerClass::Entrance,
            (false, false) => FellerClass::Natural,
            (true, true) => FellerClass::Regular,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVerdict {
    pub sigma_val: FunctionalValue,
    pub n_val: FunctionalValue,
    pub class: FellerClass,
}

impl BoundaryVerdict {
    pub fn new(sigma_val: FunctionalValue, n_val: FunctionalValue) -> Self {
        Self {
            sigma_val,
            n_val,
            class: FellerClass::from_functionals(sigma_val, n_val),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub zero: BoundaryVerdict,
    pub infinity: BoundaryVerdict,
    /// `q > c`: the regime in which the model's boundary claim is stated.
    pub within_guarantee: bool,
}

/// Thresholds for deciding convergence along a truncation ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderCriteria {
    /// Successive-value ratio that counts as growth.
    pub growth_ratio: f64,
    /// Number of trailing ladder values the growth and increment tests span.
    pub window: usize,
    /// Relative change below which a value counts as settled.
    pub settle_rel: f64,
    /// Increments that shrink by less than this fraction per level are taken
    /// as non-summable (catches logarithmic growth).
    pub increment_slack: f64,
    /// Cap on integration cells per walk.
    pub max_cells: usize,
}

impl Default for LadderCriteria {
    fn default() -> Self {
        Self {
            growth_ratio: 1.5,
            window: 3,
            settle_rel: 1e-4,
            increment_slack: 1e-3,
            max_cells: 2_000_000,
        }
    }
}

/// `2^{-k}` towards 0 or `2^k` towards ∞, `k = 1..=depth`.
pub fn dyadic_ladder(boundary: Boundary, depth: usize) -> Vec<f64> {
    (1..=depth as i32)
        .map(|k| match boundary {
            Boundary::Zero => 2f64.powi(-k),
            Boundary::Infinity => 2f64.powi(k),
        })
        .collect()
}

/// `depth` dyadic levels beyond walk distance `start = |ln x|`.
pub fn dyadic_ladder_from(boundary: Boundary, start: f64, depth: usize) -> Vec<f64> {
    (1..=depth)
        .map(|k| {
            let w = start + k as f64 * std::f64::consts::LN_2;
            match boundary {
                Boundary::Zero => (-w).exp(),
                Boundary::Infinity => w.exp(),
            }
        })
        .collect()
}

pub const DEFAULT_DEPTH: usize = 200;

/// A log-density with its first two derivatives in `u = ln x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Scale and speed densities of a one-dimensional diffusion on `(0, ∞)`,
/// normalized at `x = 1`, as functions of `u = ln x`.
pub trait ScaleSpeed {
    fn ln_scale(&self, u: f64) -> Jet;
    fn ln_speed(&self, u: f64) -> Jet;

    /// Distance `|ln x|` from `x = 1` beyond which the densities follow their
    /// asymptotics at `boundary`. Ladder verdicts are withheld before it, since
    /// a transient stretch of growing increments looks like divergence.
    fn onset(&self, _boundary: Boundary) -> f64 {
        0.0
    }
}

/// `dx = ((q - c + σ²) x - r x^{v+1}) dt + σ x dW`, the Itô form of the
/// chemotherapy model under the anti-Itô reading. `r = 0` is allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticDiffusion {
    q: f64,
    r: f64,
    v: f64,
    c: f64,
    sigma: f64,
}

impl LogisticDiffusion {
    pub fn new(q: f64, r: f64, v: f64, c: f64, sigma: f64) -> Result<Self> {
        for (name, value) in [("q", q), ("r", r), ("v", v), ("c", c), ("sigma", sigma)] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        if r < 0.0 || c < 0.0 {
            let (name, value) = if r < 0.0 { ("r", r) } else { ("c", c) };
            return Err(Error::InvalidParameter {
                name,
                value,
                reason: "must be non-negative",
            });
        }
        for (name, value) in [("v", v), ("sigma", sigma)] {
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                });
            }
        }
        Ok(Self { q, r, v, c, sigma })
    }

    pub fn from_params(p: &ModelParams) -> Result<Self> {
        p.validate_noisy()?;
        Self::new(p.q, p.r, p.v, p.c, p.sigma)
    }

    fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Power of `x` in the scale density, `2(q - c + σ²)/σ²`.
    fn power(&self) -> f64 {
        2.0 * (self.q - self.c + self.sigma_sq()) / self.sigma_sq()
    }

    fn crowding(&self) -> f64 {
        2.0 * self.r / (self.v * self.sigma_sq())
    }

    /// `∫₁^η (q - r z^v - c + σ²)/(σ² z) dz`.
    pub fn drift_ratio_integral(&self, eta: f64) -> f64 {
        let s2 = self.sigma_sq();
        (self.q - self.c + s2) / s2 * eta.ln() - self.r / (self.v * s2) * (eta.powf(self.v) - 1.0)
    }

    /// Integrand of [`Self::drift_ratio_integral`].
    pub fn drift_ratio(&self, z: f64) -> f64 {
        (self.q - self.r * z.powf(self.v) - self.c + self.sigma_sq()) / (self.sigma_sq() * z)
    }
}

impl ScaleSpeed for LogisticDiffusion {
    fn ln_scale(&self, u: f64) -> Jet {
        let a = self.power();
        let b = self.crowding();
        let e = (self.v * u).exp();
        Jet {
            value: -a * u + b * (e - 1.0),
            d1: -a + b * self.v * e,
            d2: b * self.v * self.v * e,
        }
    }

    /// Where the crowding term `b v e^{vu}` of the log-scale slope is 100
    /// times smaller (at 0) or larger (at ∞) than the power term.
    fn onset(&self, boundary: Boundary) -> f64 {
        let b = self.crowding();
        if b == 0.0 {
            return 0.0;
        }
        let a = self.power().abs().max(1.0);
        let ratio = match boundary {
            Boundary::Zero => -(0.01 * a / (b * self.v)).ln(),
            Boundary::Infinity => (100.0 * a / (b * self.v)).ln(),
        };
        (ratio / self.v).max(0.0)
    }

    fn ln_speed(&self, u: f64) -> Jet {
        let s = self.ln_scale(u);
        Jet {
            value: -self.sigma_sq().ln() - 2.0 * u - s.value,
            d1: -2.0 - s.d1,
            d2: -s.d2,
        }
    }
}

/// Driftless `dx = σ dW` on `(0, ∞)`: `s ≡ 1`, `m ≡ 1/σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianScaleSpeed {
    pub sigma: f64,
}

impl ScaleSpeed for BrownianScaleSpeed {
    fn ln_scale(&self, _u: f64) -> Jet {
        Jet {
            value: 0.0,
            d1: 0.0,
            d2: 0.0,
        }
    }

    fn ln_speed(&self, _u: f64) -> Jet {
        Jet {
            value: -2.0 * self.sigma.ln(),
            d1: 0.0,
            d2: 0.0,
        }
    }
}

fn check_positive(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value: x })
    }
}

/// `s(η) = η^{-2(q-c+σ²)/σ²} · exp{(2r/(vσ²))(η^v - 1)}`.
pub fn scale_density(params: &ModelParams, eta: f64) -> Result<f64> {
    check_positive("scale_density", eta)?;
    Ok(LogisticDiffusion::from_params(params)?
        .ln_scale(eta.ln())
        .value
        .exp())
}

/// `m(ξ) = 1/(σ² ξ² s(ξ))`.
pub fn speed_density(params: &ModelParams, xi: f64) -> Result<f64> {
    check_positive("speed_density", xi)?;
    Ok(LogisticDiffusion::from_params(params)?
        .ln_speed(xi.ln())
        .value
        .exp())
}

/// `S(ξ) = ∫₁^ξ s(η) dη` by adaptive quadrature (negative for `ξ < 1`).
pub fn scale_function(params: &ModelParams, xi: f64) -> Result<f64> {
    check_positive("scale_function", xi)?;
    let d = LogisticDiffusion::from_params(params)?;
    let est = integrate(
        |eta| d.ln_scale(eta.ln()).value.exp(),
        1.0,
        xi,
        Tolerance::default(),
    )?;
    Ok(est.value)
}

/// Log-values of the truncated functionals at each ladder level.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderTrace {
    pub levels: Vec<f64>,
    /// `ln |S(level) - S(1)|`
    pub ln_scale: Vec<f64>,
    /// `ln |M(level) - M(1)|`
    pub ln_speed: Vec<f64>,
    pub ln_sigma: Vec<f64>,
    pub ln_n: Vec<f64>,
}

/// Which functional a verdict is sought for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Want {
    Sigma,
    N,
    Both,
}

struct Walk<'a, P: ScaleSpeed> {
    process: &'a P,
    sign: f64,
    w: f64,
    a: Jet,
    b: Jet,
    ln_sc: f64,
    ln_mc: f64,
    ln_sigma: f64,
    ln_n: f64,
    /// Σ and N accumulated since [`Walk::start_tail`]; convergence is decided
    /// on these, which a large transient head would otherwise swamp.
    tail: Option<(f64, f64)>,
    cells: usize,
}

const H_MAX: f64 = 0.05;
/// `h ≤ CURVATURE_BUDGET / sqrt|A''|` bounds the chord error `A'' h²/8`
/// where a density is flat over the cell.
const CURVATURE_BUDGET: f64 = 3e-3;
/// `h ≤ STEEP_BUDGET |A'| / |A''|` bounds the relative error `A'' h / 2A'`
/// of the chord slope where a density is steep over the cell.
const STEEP_BUDGET: f64 = 2e-4;

impl<'a, P: ScaleSpeed> Walk<'a, P> {
    fn new(process: &'a P, boundary: Boundary) -> Self {
        let sign = match boundary {
            Boundary::Zero => -1.0,
            Boundary::Infinity => 1.0,
        };
        let mut walk = Self {
            process,
            sign,
            w: 0.0,
            a: Jet {
                value: 0.0,
                d1: 0.0,
                d2: 0.0,
            },
            b: Jet {
                value: 0.0,
                d1: 0.0,
                d2: 0.0,
            },
            ln_sc: f64::NEG_INFINITY,
            ln_mc: f64::NEG_INFINITY,
            ln_sigma: f64::NEG_INFINITY,
            ln_n: f64::NEG_INFINITY,
            tail: None,
            cells: 0,
        };
        (walk.a, walk.b) = walk.densities(0.0);
        walk
    }

    fn start_tail(&mut self) {
        self.tail = Some((f64::NEG_INFINITY, f64::NEG_INFINITY));
    }

    /// Log of `s·|dx/dw|` and `m·|dx/dw|` at walk distance `w`, with
    /// derivatives in `w`.
    fn densities(&self, w: f64) -> (Jet, Jet) {
        let u = self.sign * w;
        let orient = |j: Jet| Jet {
            value: j.value + u,
            d1: self.sign * (j.d1 + 1.0),
            d2: j.d2,
        };
        (
            orient(self.process.ln_scale(u)),
            orient(self.process.ln_speed(u)),
        )
    }

    fn cell_width(&self, remaining: f64) -> f64 {
        let mut h = H_MAX.min(remaining);
        for j in [self.a, self.b] {
            if j.d2 != 0.0 {
                let d2 = j.d2.abs();
                h = h.min((CURVATURE_BUDGET / d2.sqrt()).max(STEEP_BUDGET * j.d1.abs() / d2));
            }
        }
        h
    }

    /// Advances to walk distance `target`; false if the cell budget ran out.
    fn advance_to(&mut self, target: f64, max_cells: usize) -> bool {
        while self.w < target {
            if self.cells >= max_cells {
                return false;
            }
            let remaining = target - self.w;
            let mut h = self.cell_width(remaining);
            if remaining - h < 1e-12 * remaining.max(1.0) {
                h = remaining;
            }
            let (a1, b1) = self.densities(self.w + h);
            if ![a1.value, a1.d1, b1.value, b1.d1]
                .iter()
                .all(|v| v.is_finite())
            {
                return false;
            }
            let alpha = (a1.value - self.a.value) / h;
            let beta = (b1.value - self.b.value) / h;
            let ln_is = self.a.value + h.ln() + ln_exprel(alpha * h);
            let ln_im = self.b.value + h.ln() + ln_exprel(beta * h);
            let ln_cross = self.a.value + self.b.value;
            let d_sigma = log_add(self.ln_mc + ln_is, ln_cross + ln_g(alpha, beta, h));
            let d_n = log_add(self.ln_sc + ln_im, ln_cross + ln_g(beta, alpha, h));
            self.ln_sigma = log_add(self.ln_sigma, d_sigma);
            self.ln_n = log_add(self.ln_n, d_n);
            if let Some((ts, tn)) = &mut self.tail {
                *ts = log_add(*ts, d_sigma);
                *tn = log_add(*tn, d_n);
            }
            self.ln_sc = log_add(self.ln_sc, ln_is);
            self.ln_mc = log_add(self.ln_mc, ln_im);
            self.w = if h == remaining { target } else { self.w + h };
            self.a = a1;
            self.b = b1;
            self.cells += 1;
        }
        true
    }
}

fn log_add(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln((e^z - 1)/z)`, finite for every finite `z`.
fn ln_exprel(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        0.5 * z
    } else if z > 1.0 {
        z + (-(-z).exp()).ln_1p() - z.ln()
    } else if z < -1.0 {
        (-z.exp()).ln_1p() - (-z).ln()
    } else {
        (z.exp_m1() / z).ln()
    }
}

fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

/// Gauss-Legendre sum of `f` over `[lo, hi]`.
fn gl16<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let (nodes, weights) = gauss_legendre_16();
    let half = 0.5 * (hi - lo);
    let sum: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&z, &wt)| wt * f(lo + half * (1.0 + z)))
        .sum();
    half * sum
}

/// Exponent range a single 16-point panel integrates to near round-off.
const GL_RANGE: f64 = 20.0;

/// `ln ∫₀ʰ e^{αt} t exprel(βt) dt`.
///
/// With `a = αh`, `b = βh` this is `2 ln h + ln K`, `K = ∫₀¹ e^{as} s exprel(bs) ds`.
/// Small arguments use one Gauss-Legendre panel; otherwise `K = (E(a+b) - E(a))/b`
/// with `E = exprel` when `|b| ≥ 1`, or a windowed quadrature around the end
/// where `e^{as}` concentrates when only `a` is large.
fn ln_g(alpha: f64, beta: f64, h: f64) -> f64 {
    let (a, b) = (alpha * h, beta * h);
    let ln_k = if a.abs().max(b.abs()).max((a + b).abs()) <= GL_RANGE {
        gl16(|s| (a * s).exp() * s * exprel(b * s), 0.0, 1.0).ln()
    } else if b.abs() >= 1.0 {
        if a < -40.0 && a + b < -40.0 {
            // both exponentials negligible at s = 1
            -(a * (a + b)).ln()
        } else {
            let (e1, e0) = (ln_exprel(a + b), ln_exprel(a));
            if b > 0.0 {
                e1 + (-(e0 - e1).exp_m1()).ln() - b.ln()
            } else {
                e0 + (-(e1 - e0).exp_m1()).ln() - (-b).ln()
            }
        }
    } else {
        let width = (40.0 / a.abs()).min(1.0);
        let panels = 3;
        let step = width / panels as f64;
        if a > 0.0 {
            // s = 1 - τ, factor e^a out
            let f = |tau: f64| (-a * tau).exp() * (1.0 - tau) * exprel(b * (1.0 - tau));
            let sum: f64 = (0..panels)
                .map(|i| gl16(f, i as f64 * step, (i + 1) as f64 * step))
                .sum();
            a + sum.ln()
        } else {
            let f = |s: f64| (a * s).exp() * s * exprel(b * s);
            let sum: f64 = (0..panels)
                .map(|i| gl16(f, i as f64 * step, (i + 1) as f64 * step))
                .sum();
            sum.ln()
        }
    };
    2.0 * h.ln() + ln_k
}

fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static RULE: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 16;
        let mut nodes = [0.0; N];
        let mut weights = [0.0; N];
        for i in 0..N {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let k = k as f64;
                    (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

fn ladder_distances(boundary: Boundary, levels: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(levels.len());
    let mut prev = 0.0;
    for &level in levels {
        check_positive("truncation ladder", level)?;
        let w = match boundary {
            Boundary::Zero => -level.ln(),
            Boundary::Infinity => level.ln(),
        };
        if !(w > prev) {
            return Err(Error::InvalidConfig(format!(
                "ladder level {level} does not move towards the {boundary:?} boundary"
            )));
        }
        out.push(w);
        prev = w;
    }
    Ok(out)
}

/// Truncated functionals at every ladder level, without early stopping.
pub fn ladder_trace<P: ScaleSpeed>(
    process: &P,
    boundary: Boundary,
    levels: &[f64],
) -> Result<LadderTrace> {
    let distances = ladder_distances(boundary, levels)?;
    let mut walk = Walk::new(process, boundary);
    let mut trace = LadderTrace {
        levels: levels.to_vec(),
        ln_scale: Vec::new(),
        ln_speed: Vec::new(),
        ln_sigma: Vec::new(),
        ln_n: Vec::new(),
    };
    for &w in &distances {
        if !walk.advance_to(w, usize::MAX) {
            unreachable!();
        }
        trace.ln_scale.push(walk.ln_sc);
        trace.ln_speed.push(walk.ln_mc);
        trace.ln_sigma.push(walk.ln_sigma);
        trace.ln_n.push(walk.ln_n);
    }
    Ok(trace)
}

/// Verdict for one functional from its log-values so far, or `None` if the
/// ladder has not yet decided.
pub fn ladder_verdict(ln_values: &[f64], criteria: &LadderCriteria) -> Option<FunctionalValue> {
    let n = ln_values.len();
    let window = criteria.window.max(2);
    if n < window + 1 || ln_values[n - window - 1] == f64::NEG_INFINITY {
        return None;
    }
    let tail = &ln_values[n - window..];
    let ln_growth = criteria.growth_ratio.ln();
    if tail.windows(2).all(|p| p[1] - p[0] > ln_growth) {
        return Some(FunctionalValue::Diverges);
    }
    let last = ln_values[n - 1];
    let rel_change = -(ln_values[n - 2] - last).exp_m1();
    if rel_change < criteria.settle_rel {
        return Some(FunctionalValue::Finite(last.exp()));
    }
    // ln of the level-to-level increments over the window
    let increments: Vec<f64> = ln_values[n - window - 1..]
        .windows(2)
        .map(|p| p[1] + (-(p[0] - p[1]).exp_m1()).ln())
        .collect();
    let slack = (1.0 - criteria.increment_slack).ln();
    if increments.iter().all(|d| d.is_finite())
        && increments.windows(2).all(|p| p[1] >= p[0] + slack)
    {
        return Some(FunctionalValue::Diverges);
    }
    None
}

fn functionals_with<P: ScaleSpeed>(
    process: &P,
    boundary: Boundary,
    levels: &[f64],
    criteria: &LadderCriteria,
    want: Want,
) -> Result<(Option<FunctionalValue>, Option<FunctionalValue>)> {
    let distances = ladder_distances(boundary, levels)?;
    let onset = process.onset(boundary);
    let mut walk = Walk::new(process, boundary);
    let mut sig = Vec::new();
    let mut nn = Vec::new();
    let reached_onset = walk.advance_to(onset, criteria.max_cells);
    walk.start_tail();
    let (mut sigma_v, mut n_v) = (None, None);
    let done = |s: &Option<FunctionalValue>, n: &Option<FunctionalValue>| match want {
        Want::Sigma => s.is_some(),
        Want::N => n.is_some(),
        Want::Both => s.is_some() && n.is_some(),
    };
    // A finite verdict reports the whole functional, not just its tail.
    let whole = |v: Option<FunctionalValue>, ln_total: f64| match v {
        Some(FunctionalValue::Finite(_)) => Some(FunctionalValue::Finite(ln_total.exp())),
        other => other,
    };
    for &w in distances.iter().filter(|&&w| reached_onset && w > onset) {
        if !walk.advance_to(w, criteria.max_cells) {
            break;
        }
        let (tail_sigma, tail_n) = walk.tail.expect("tail started");
        sig.push(tail_sigma);
        nn.push(tail_n);
        if sigma_v.is_none() {
            sigma_v = whole(ladder_verdict(&sig, criteria), walk.ln_sigma);
        }
        if n_v.is_none() {
            n_v = whole(ladder_verdict(&nn, criteria), walk.ln_n);
        }
        if done(&sigma_v, &n_v) {
            break;
        }
    }
    let reached = sig.len();
    let missing = |functional| Error::Inconclusive {
        functional,
        boundary,
        levels: reached,
    };
    match want {
        Want::Sigma if sigma_v.is_none() => Err(missing("sigma")),
        Want::N if n_v.is_none() => Err(missing("N")),
        Want::Both if sigma_v.is_none() => Err(missing("sigma")),
        Want::Both if n_v.is_none() => Err(missing("N")),
        _ => Ok((sigma_v, n_v)),
    }
}

/// Σ verdict for a general scale/speed pair.
pub fn sigma_functional_of<P: ScaleSpeed>(
    process: &P,
    boundary: Boundary,
    levels: &[f64],
    criteria: &LadderCriteria,
) -> Result<FunctionalValue> {
    Ok(
        functionals_with(process, boundary, levels, criteria, Want::Sigma)?
            .0
            .unwrap(),
    )
}

/// N verdict for a general scale/speed pair.
pub fn n_functional_of<P: ScaleSpeed>(
    process: &P,
    boundary: Boundary,
    levels: &[f64],
    criteria: &LadderCriteria,
) -> Result<FunctionalValue> {
    Ok(
        functionals_with(process, boundary, levels, criteria, Want::N)?
            .1
            .unwrap(),
    )
}

pub fn boundary_verdict_of<P: ScaleSpeed>(
    process: &P,
    boundary: Boundary,
    levels: &[f64],
    criteria: &LadderCriteria,
) -> Result<BoundaryVerdict> {
    let (s, n) = functionals_with(process, boundary, levels, criteria, Want::Both)?;
    Ok(BoundaryVerdict::new(s.unwrap(), n.unwrap()))
}

pub fn sigma_functional(
    params: &ModelParams,
    boundary: Boundary,
    levels: &[f64],
) -> Result<FunctionalValue> {
    sigma_functional_of(
        &LogisticDiffusion::from_params(params)?,
        boundary,
        levels,
        &LadderCriteria::default(),
    )
}

pub fn n_functional(
    params: &ModelParams,
    boundary: Boundary,
    levels: &[f64],
) -> Result<FunctionalValue> {
    n_functional_of(
        &LogisticDiffusion::from_params(params)?,
        boundary,
        levels,
        &LadderCriteria::default(),
    )
}

/// Verdicts at both ends on the default dyadic ladders.
pub fn classify_boundary(params: &ModelParams) -> Result<Classification> {
    classify_boundary_with(params, DEFAULT_DEPTH, &LadderCriteria::default())
}

pub fn classify_boundary_with(
    params: &ModelParams,
    depth: usize,
    criteria: &LadderCriteria,
) -> Result<Classification> {
    let d = LogisticDiffusion::from_params(params)?;
    let verdict = |boundary| {
        let ladder = dyadic_ladder_from(boundary, d.onset(boundary), depth);
        boundary_verdict_of(&d, boundary, &ladder, criteria)
    };
    let zero = verdict(Boundary::Zero)?;
    let infinity = verdict(Boundary::Infinity)?;
    Ok(Classification {
        zero,
        infinity,
        within_guarantee: params.net_growth() > 0.0,
    })
}
