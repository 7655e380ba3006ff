//! Empirical convergence orders of the time-stepping schemes on geometric
//! Brownian motion, where the exact solution is available path by path.
//!
//! Every path draws its Wiener increments once on the finest grid; coarser
//! levels sum consecutive blocks of them, so all step sizes see the same
//! Brownian path.

use rand_distr::{Distribution, StandardNormal};

use crate::calculus::LinearSde;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::simulate::{advance, path_rng, Scheme};

/// Nested step sizes `coarsest · 2^{-i}`, `i = 0..levels`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    pub coarsest: f64,
    pub levels: usize,
    pub t_final: f64,
}

impl Ladder {
    pub fn dts(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|i| self.coarsest * 0.5f64.powi(i as i32))
            .collect()
    }

    fn coarse_steps(&self) -> Result<usize> {
        if !(self.coarsest > 0.0) || !(self.t_final > 0.0) || self.levels < 2 {
            return Err(Error::InvalidConfig(
                "ladder needs coarsest > 0, t_final > 0 and at least two levels".into(),
            ));
        }
        let n = (self.t_final / self.coarsest).round();
        if (n * self.coarsest - self.t_final).abs() > 1e-9 * self.t_final || n < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "t_final = {} is not a multiple of the coarsest step {}",
                self.t_final, self.coarsest
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderStudy {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln dt`.
    pub order: f64,
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn increments(seed: u64, path: u64, n: usize, dt: f64) -> Vec<f64> {
    let mut rng = path_rng(seed, path);
    let s = dt.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s * z
        })
        .collect()
}

/// `scheme` over the whole interval with blocks of `stride` fine increments.
fn integrate(scheme: Scheme, sde: &LinearSde, x0: f64, dw: &[f64], stride: usize, dt: f64) -> f64 {
    let mut x = x0;
    for (k, block) in dw.chunks_exact(stride).enumerate() {
        x = advance(scheme, sde, 0.0, x, k as f64 * dt, dt, block.iter().sum());
    }
    x
}

fn reduce(per_path: Vec<Vec<f64>>, levels: usize) -> Vec<f64> {
    let n = per_path.len() as f64;
    let mut acc = vec![0.0; levels];
    for row in &per_path {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / n).collect()
}

/// Weak error `|E[X_dt(T)] - x0 e^{aT}|` of Euler-Maruyama at each ladder level.
///
/// The estimator averages `X_dt(T) - X(T)` against the exact solution on the
/// same path, which is unbiased because `E[X(T)] = x0 e^{aT}` and has far less
/// variance than the raw mean.
pub fn em_weak_order(
    sde: &LinearSde,
    x0: f64,
    ladder: &Ladder,
    n_paths: usize,
    seed: u64,
    exec: Execution,
) -> Result<OrderStudy> {
    let n_coarse = ladder.coarse_steps()?;
    let dts = ladder.dts();
    let fine = *dts.last().expect("at least two levels");
    let n_fine = n_coarse << (ladder.levels - 1);
    let drift = (sde.a - 0.5 * sde.sigma * sde.sigma) * ladder.t_final;
    let per_path = map_indexed(n_paths, exec, |i| {
        let dw = increments(seed, i as u64, n_fine, fine);
        let exact = x0 * (drift + sde.sigma * dw.iter().sum::<f64>()).exp();
        dts.iter()
            .enumerate()
            .map(|(l, &dt)| {
                let stride = 1 << (ladder.levels - 1 - l);
                integrate(Scheme::EulerMaruyama, sde, x0, &dw, stride, dt) - exact
            })
            .collect()
    });
    let errors: Vec<f64> = reduce(per_path, dts.len())
        .iter()
        .map(|e| e.abs())
        .collect();
    Ok(OrderStudy {
        order: fitted_order(&dts, &errors),
        dts,
        errors,
    })
}

/// Strong error `E|X_dt(T) - X_ref(T)|` of `scheme`, with the reference path
/// computed by the same scheme on a grid `refine` times finer than the
/// finest ladder level.
#[allow(clippy::too_many_arguments)]
pub fn strong_order(
    scheme: Scheme,
    sde: &LinearSde,
    x0: f64,
    ladder: &Ladder,
    refine: usize,
    n_paths: usize,
    seed: u64,
    exec: Execution,
) -> Result<OrderStudy> {
    let n_coarse = ladder.coarse_steps()?;
    if refine < 2 {
        return Err(Error::InvalidConfig(
            "reference grid must be finer than the ladder".into(),
        ));
    }
    let dts = ladder.dts();
    let finest_stride = refine;
    let n_ref = (n_coarse << (ladder.levels - 1)) * finest_stride;
    let dt_ref = dts.last().expect("at least two levels") / refine as f64;
    let per_path = map_indexed(n_paths, exec, |i| {
        let dw = increments(seed, i as u64, n_ref, dt_ref);
        let reference = integrate(scheme, sde, x0, &dw, 1, dt_ref);
        dts.iter()
            .enumerate()
            .map(|(l, &dt)| {
                let stride = finest_stride << (ladder.levels - 1 - l);
                (integrate(scheme, sde, x0, &dw, stride, dt) - reference).abs()
            })
            .collect()
    });
    let errors = reduce(per_path, dts.len());
    Ok(OrderStudy {
        order: fitted_order(&dts, &errors),
        dts,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((fitted_order(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn ladder_must_tile_interval() {
        let bad = Ladder {
            coarsest: 0.3,
            levels: 3,
            t_final: 1.0,
        };
        assert!(bad.coarse_steps().is_err());
        let good = Ladder {
            coarsest: 0.25,
            levels: 3,
            t_final: 1.0,
        };
        assert_eq!(good.coarse_steps().unwrap(), 4);
        assert_eq!(good.dts(), vec![0.25, 0.125, 0.0625]);
    }

    #[test]
    fn deterministic_sde_weak_error_is_exact() {
        // σ = 0: EM gives x0 (1 + a dt)^n, so the error is known in closed form.
        let sde = LinearSde { a: 1.0, sigma: 0.0 };
        let ladder = Ladder {
            coarsest: 0.125,
            levels: 3,
            t_final: 1.0,
        };
        let s = em_weak_order(&sde, 1.0, &ladder, 3, 1, Execution::Sequential).unwrap();
        for (dt, e) in s.dts.iter().zip(&s.errors) {
            let expect = 1f64.exp() - (1.0 + dt).powf(1.0 / dt);
            assert!((e - expect).abs() < 1e-12, "{e} vs {expect}");
        }
    }
}
