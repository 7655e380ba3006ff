//! Seeded Monte Carlo ensembles of the chemotherapy SDE.
//!
//! Every path owns a ChaCha8 stream keyed by `(seed, path index)`, and draws
//! exactly one standard normal per step, so an ensemble is bit-reproducible
//! for a fixed seed whatever the thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calculus::{ChemoSde, Interpretation, Sde};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::model::{pow_v, ModelParams};
use crate::stationary::StationaryDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler-Maruyama on the Itô-converted drift.
    EulerMaruyama,
    /// Euler-Maruyama plus `½ g ∂ₓg (ΔW² - Δt)`.
    Milstein,
    /// Euler-Maruyama on `ln x`; keeps the state strictly positive.
    LogTransform,
    /// Direct evaluation-point scheme on the unconverted drift: the noise
    /// amplitude is `(1-α) g(x) + α g(x̃)` with `x̃` an Euler predictor.
    AlphaPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub interp: Interpretation,
    pub x0: f64,
    /// Absorption threshold; `None` means `1e-8 · x0`.
    pub absorb_eps: Option<f64>,
    /// Fraction of the horizon skipped by the time-averaged mean.
    pub burn_in: f64,
    pub hist_bins: usize,
    /// Upper histogram edge; `None` uses the largest terminal sample.
    /// Samples above it land in the last bin.
    pub hist_max: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 50.0,
            n_paths: 10_000,
            seed: 0x5eed,
            scheme: Scheme::EulerMaruyama,
            interp: Interpretation::Hk,
            x0: 1.0,
            absorb_eps: None,
            burn_in: 0.5,
            hist_bins: 50,
            hist_max: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, value: f64, reason: &'static str| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt", self.dt, "must be positive and finite");
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return bad("t_final", self.t_final, "must be finite and at least dt");
        }
        if self.n_paths == 0 {
            return bad("n_paths", 0.0, "must be at least 1");
        }
        if !(self.x0 > 0.0) || !self.x0.is_finite() {
            return bad("x0", self.x0, "must be positive and finite");
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return bad("burn_in", self.burn_in, "must lie in [0, 1)");
        }
        if let Some(eps) = self.absorb_eps {
            if !(eps >= 0.0) {
                return bad("absorb_eps", eps, "must be non-negative");
            }
        }
        if self.hist_bins == 0 {
            return bad("hist_bins", 0.0, "must be at least 1");
        }
        if let Some(m) = self.hist_max {
            if !(m > 0.0) || !m.is_finite() {
                return bad("hist_max", m, "must be positive and finite");
            }
        }
        Ok(())
    }

    pub fn absorb_threshold(&self) -> f64 {
        self.absorb_eps.unwrap_or(1e-8 * self.x0)
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }
}

/// Step-size guidance for the superlinear drift:
/// `0.1 / (q + c + σ² + r x_cap^v)` with `x_cap` ten times the larger of the
/// carrying point and `x0`.
pub fn recommended_dt(params: &ModelParams, x0: f64) -> f64 {
    let scale = params.carrying_point().unwrap_or(0.0).max(x0);
    let x_cap = 10.0 * scale;
    0.1 / (params.q + params.c + params.sigma_sq() + params.r * pow_v(x_cap, params.v))
}

/// Independent normal stream for one path.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// One step of `scheme` from `x` at time `t` with Wiener increment `dw`.
///
/// `spec` is the SDE as written; `alpha` is the evaluation point of its noise.
/// Non-log schemes clamp negative results to 0.
#[inline]
pub fn advance<S: Sde>(
    scheme: Scheme,
    spec: &S,
    alpha: f64,
    x: f64,
    t: f64,
    dt: f64,
    dw: f64,
) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let next = match scheme {
        Scheme::EulerMaruyama | Scheme::Milstein => {
            let g = spec.diffusion(x, t);
            let gg = g * spec.diffusion_dx(x, t);
            let mut y = x + (spec.drift(x, t) + alpha * gg) * dt + g * dw;
            if scheme == Scheme::Milstein {
                y += 0.5 * gg * (dw * dw - dt);
            }
            y
        }
        Scheme::LogTransform => {
            let g = spec.diffusion(x, t);
            let drift = spec.drift(x, t) + alpha * g * spec.diffusion_dx(x, t);
            let rel = g / x;
            x * ((drift / x - 0.5 * rel * rel) * dt + rel * dw).exp()
        }
        Scheme::AlphaPoint => {
            let f = spec.drift(x, t);
            let g = spec.diffusion(x, t);
            let predicted = x + f * dt + g * dw;
            let g_eff = if alpha == 0.0 {
                g
            } else {
                (1.0 - alpha) * g + alpha * spec.diffusion(predicted, t + dt)
            };
            x + f * dt + g_eff * dw
        }
    };
    if next < 0.0 {
        0.0
    } else {
        next
    }
}

/// One step under `cfg`'s scheme and interpretation.
pub fn step<S: Sde>(x: f64, t: f64, dw: f64, cfg: &SimulationConfig, spec: &S) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::NumericalBlowup { time: t });
    }
    let y = advance(cfg.scheme, spec, cfg.interp.alpha(), x, t, cfg.dt, dw);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NumericalBlowup { time: t + cfg.dt })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub terminal: f64,
    /// Time average of the state over the post-burn-in window.
    pub tail_mean: f64,
    pub blowup_time: Option<f64>,
}

/// Runs path `index` of an ensemble.
pub fn simulate_path<S: Sde>(spec: &S, cfg: &SimulationConfig, index: u64) -> PathOutcome {
    let mut rng = path_rng(cfg.seed, index);
    let n = cfg.n_steps();
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let alpha = cfg.interp.alpha();
    let eps = cfg.absorb_threshold();
    let tail_start = (cfg.burn_in * n as f64).floor() as usize;
    let tail_len = (n - tail_start) as f64;
    let mut x = cfg.x0;
    let mut tail_sum = 0.0;
    for k in 0..n {
        let t = k as f64 * dt;
        let z: f64 = StandardNormal.sample(&mut rng);
        x = advance(cfg.scheme, spec, alpha, x, t, dt, sqrt_dt * z);
        if !x.is_finite() {
            return PathOutcome {
                terminal: f64::NAN,
                tail_mean: f64::NAN,
                blowup_time: Some(t + dt),
            };
        }
        if x <= eps {
            x = 0.0;
            break;
        }
        if k >= tail_start {
            tail_sum += x;
        }
    }
    PathOutcome {
        terminal: x,
        tail_mean: tail_sum / tail_len,
        blowup_time: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins on `[lo, hi]`; values outside are clamped into the
    /// first or last bin.
    pub fn from_samples(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Self {
        let bins = bins.max(1);
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &s in samples {
            let idx = ((s - lo) / width).floor();
            let idx = if idx.is_nan() || idx < 0.0 {
                0
            } else {
                (idx as usize).min(bins - 1)
            };
            counts[idx] += 1;
        }
        Self { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Probability mass per bin.
    pub fn masses(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub terminal_samples: Vec<f64>,
    pub extinct_fraction: f64,
    pub mean: f64,
    /// Mean over paths of the time-averaged state after burn-in.
    pub post_burn_in_mean: f64,
    pub histogram: Histogram,
    /// KS distance to the analytic stationary law (HK runs with a proper density).
    pub ks_vs_analytic: Option<f64>,
    /// Paths dropped after blowing up (at most 0.1% of the ensemble).
    pub blowups: usize,
}

pub fn simulate_ensemble(cfg: &SimulationConfig, params: &ModelParams) -> Result<EnsembleSummary> {
    simulate_ensemble_with(cfg, params, Execution::Parallel)
}

pub fn simulate_ensemble_with(
    cfg: &SimulationConfig,
    params: &ModelParams,
    exec: Execution,
) -> Result<EnsembleSummary> {
    params.validate()?;
    cfg.validate()?;
    let spec = ChemoSde::new(*params);
    let outcomes = run_paths(&spec, cfg, exec);
    let mut summary = summarize(cfg, &outcomes)?;
    if cfg.interp == Interpretation::Hk && params.sigma > 0.0 {
        if let Ok(density) = StationaryDensity::new(*params) {
            summary.ks_vs_analytic =
                Some(ks_distance_to_density(&summary.terminal_samples, &density)?);
        }
    }
    Ok(summary)
}

/// All paths of an ensemble for an arbitrary SDE, in path order.
pub fn run_paths<S: Sde>(spec: &S, cfg: &SimulationConfig, exec: Execution) -> Vec<PathOutcome> {
    map_indexed(cfg.n_paths, exec, |i| simulate_path(spec, cfg, i as u64))
}

fn summarize(cfg: &SimulationConfig, outcomes: &[PathOutcome]) -> Result<EnsembleSummary> {
    let failed: Vec<f64> = outcomes.iter().filter_map(|o| o.blowup_time).collect();
    if failed.len() * 1000 > outcomes.len() {
        return Err(Error::EnsembleBlowup {
            failed: failed.len(),
            total: outcomes.len(),
            first_time: failed.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    let kept: Vec<&PathOutcome> = outcomes
        .iter()
        .filter(|o| o.blowup_time.is_none())
        .collect();
    let samples: Vec<f64> = kept.iter().map(|o| o.terminal).collect();
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let post_burn_in_mean = kept.iter().map(|o| o.tail_mean).sum::<f64>() / n;
    let hi = cfg
        .hist_max
        .unwrap_or_else(|| samples.iter().copied().fold(0.0, f64::max))
        .max(f64::MIN_POSITIVE);
    let histogram = Histogram::from_samples(
        &samples,
        cfg.hist_bins,
        0.0,
        if hi > 0.0 { hi } else { 1.0 },
    );
    Ok(EnsembleSummary {
        extinct_fraction: extinction_fraction(&samples, cfg.absorb_threshold()),
        terminal_samples: samples,
        mean,
        post_burn_in_mean,
        histogram,
        ks_vs_analytic: None,
        blowups: failed.len(),
    })
}

/// Fraction of samples at or below `eps`.
pub fn extinction_fraction(samples: &[f64], eps: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&s| s <= eps).count() as f64 / samples.len() as f64
}

/// Kolmogorov-Smirnov sup distance between the empirical CDF of `samples`
/// and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values: Vec<f64> = sorted.iter().map(|&x| cdf(x)).collect();
    Ok(ks_from_sorted(&values))
}

/// KS distance against the analytic stationary law, integrating the CDF once
/// across the sorted samples.
pub fn ks_distance_to_density(samples: &[f64], density: &StationaryDensity) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values = density.cdf_sorted(&sorted)?;
    Ok(ks_from_sorted(&values))
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// KS statistic from model CDF values at ascending sample points.
pub fn ks_from_sorted(cdf_values: &[f64]) -> f64 {
    let n = cdf_values.len() as f64;
    cdf_values
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::hk_to_ito;

    fn canonical(sigma: f64) -> ModelParams {
        ModelParams::new(2.0, 1.0, 1.0, 1.0, sigma).unwrap()
    }

    fn cfg(scheme: Scheme, interp: Interpretation) -> SimulationConfig {
        SimulationConfig {
            dt: 0.01,
            scheme,
            interp,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn fixed_point_is_stationary_without_noise() {
        let spec = ChemoSde::new(canonical(0.0));
        let c = cfg(Scheme::EulerMaruyama, Interpretation::Ito);
        assert_eq!(step(1.0, 0.0, 0.0, &c, &spec).unwrap(), 1.0);
    }

    #[test]
    fn milstein_correction_with_zero_increment() {
        let spec = ChemoSde::new(canonical(1.0));
        let em = step(
            1.0,
            0.0,
            0.0,
            &cfg(Scheme::EulerMaruyama, Interpretation::Ito),
            &spec,
        )
        .unwrap();
        let mil = step(
            1.0,
            0.0,
            0.0,
            &cfg(Scheme::Milstein, Interpretation::Ito),
            &spec,
        )
        .unwrap();
        assert!((mil - (em - 0.005)).abs() < 1e-15);
    }

    #[test]
    fn hk_step_matches_converted_drift() {
        let raw = ChemoSde::new(canonical(1.0));
        let hk = step(
            1.0,
            0.0,
            0.0,
            &cfg(Scheme::EulerMaruyama, Interpretation::Hk),
            &raw,
        )
        .unwrap();
        assert!((hk - 1.01).abs() < 1e-15);
        let conv = hk_to_ito(raw);
        let ito = step(
            1.0,
            0.0,
            0.0,
            &cfg(Scheme::EulerMaruyama, Interpretation::Ito),
            &conv,
        )
        .unwrap();
        assert_eq!(hk, ito);
    }

    #[test]
    fn alpha_point_weak_drift_correction() {
        // With dW = ±√dt the predictor-corrector picks up α g g' dW², i.e. α σ² x dt.
        let raw = ChemoSde::new(canonical(1.0));
        let dt: f64 = 1e-4;
        let dw = dt.sqrt();
        let c = SimulationConfig {
            dt,
            scheme: Scheme::AlphaPoint,
            interp: Interpretation::Hk,
            ..SimulationConfig::default()
        };
        let up = step(1.0, 0.0, dw, &c, &raw).unwrap();
        let down = step(1.0, 0.0, -dw, &c, &raw).unwrap();
        let mean_increment = 0.5 * (up + down) - 1.0;
        assert!((mean_increment - (0.0 + 1.0) * dt).abs() < 1e-12);
    }

    #[test]
    fn clamps_negative_and_flags_nonfinite() {
        let spec = ChemoSde::new(canonical(1.0));
        let c = cfg(Scheme::EulerMaruyama, Interpretation::Ito);
        assert_eq!(step(1.0, 0.0, -10.0, &c, &spec).unwrap(), 0.0);
        assert!(matches!(
            step(f64::INFINITY, 2.0, 0.0, &c, &spec),
            Err(Error::NumericalBlowup { time }) if time == 2.0
        ));
        let huge = SimulationConfig { dt: 1.0, ..c };
        let blown = step(1e200, 0.0, 1e200, &huge, &spec);
        assert!(blown.is_err() || blown.unwrap() == 0.0);
    }

    #[test]
    fn log_transform_stays_positive() {
        let spec = ChemoSde::new(canonical(2.0));
        let c = cfg(Scheme::LogTransform, Interpretation::Ito);
        let mut x = 1.0;
        let mut rng = path_rng(3, 0);
        for k in 0..20_000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = step(x, k as f64 * c.dt, z * c.dt.sqrt(), &c, &spec).unwrap();
            assert!(x > 0.0);
        }
    }

    #[test]
    fn extinction_and_ks_trivia() {
        assert_eq!(extinction_fraction(&[0.0, 0.0, 0.0], 1e-8), 1.0);
        assert_eq!(extinction_fraction(&[0.5, 2.0], 1e-8), 0.0);
        assert!(matches!(ks_distance(&[], |x| x), Err(Error::EmptySamples)));
        let d = ks_distance(&[0.0; 10], |x: f64| 1.0 - (-x).exp()).unwrap();
        assert_eq!(d, 1.0);
        let n = 1000;
        let quantiles: Vec<f64> = (1..=n)
            .map(|i| -(1.0 - (i as f64 - 0.5) / n as f64).ln())
            .collect();
        let d = ks_distance(&quantiles, |x: f64| 1.0 - (-x).exp()).unwrap();
        assert!(d <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(
            ks_two_sample(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            0.0
        );
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0], &[1.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn histogram_counts_everything() {
        let h = Histogram::from_samples(&[0.0, 0.5, 1.0, 7.0, -1.0], 4, 0.0, 1.0);
        assert_eq!(h.total(), 5);
        assert_eq!(h.counts, vec![2, 0, 1, 2]);
    }

    #[test]
    fn config_validation() {
        let good = SimulationConfig::default();
        assert!(good.validate().is_ok());
        assert!(SimulationConfig {
            dt: 0.0,
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            t_final: 1e-4,
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            n_paths: 0,
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            x0: 0.0,
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            burn_in: 1.0,
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            absorb_eps: Some(-1.0),
            ..good
        }
        .validate()
        .is_err());
    }

    #[test]
    fn small_ensemble_is_reproducible() {
        let c = SimulationConfig {
            n_paths: 64,
            t_final: 2.0,
            dt: 1e-2,
            ..SimulationConfig::default()
        };
        let p = canonical(1.0);
        let a = simulate_ensemble_with(&c, &p, Execution::Sequential).unwrap();
        let b = simulate_ensemble_with(&c, &p, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.histogram.total(), 64);
        assert!(a.ks_vs_analytic.is_some());
    }

    #[test]
    fn blowups_excluded_up_to_threshold() {
        let c = SimulationConfig {
            n_paths: 2000,
            ..SimulationConfig::default()
        };
        let ok = PathOutcome {
            terminal: 1.0,
            tail_mean: 1.0,
            blowup_time: None,
        };
        let bad = PathOutcome {
            terminal: f64::NAN,
            tail_mean: f64::NAN,
            blowup_time: Some(3.5),
        };
        let mut outcomes = vec![ok; 1998];
        outcomes.extend([bad, bad]);
        let s = summarize(&c, &outcomes).unwrap();
        assert_eq!(s.blowups, 2);
        assert_eq!(s.terminal_samples.len(), 1998);
        assert_eq!(s.mean, 1.0);
        outcomes[0] = PathOutcome {
            blowup_time: Some(1.25),
            ..bad
        };
        let err = summarize(&c, &outcomes).unwrap_err();
        assert!(matches!(
            err,
            Error::EnsembleBlowup { failed: 3, total: 2000, first_time } if first_time == 1.25
        ));
    }

    #[test]
    fn dt_guidance() {
        let p = canonical(1.0);
        let dt = recommended_dt(&p, 1.0);
        assert!((dt - 0.1 / (2.0 + 1.0 + 1.0 + 10.0)).abs() < 1e-15);
    }
}
