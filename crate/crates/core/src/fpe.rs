//! Finite-volume Fokker-Planck solver for the anti-Itô chemotherapy model.
//!
//! The equation is solved in conservation form `∂ₜp = -∂ₓJ` with
//! `J = u p - (σ²/2) ∂ₓ(x² p)` and `u = (q - c + σ²) x - r x^{v+1}`. The
//! advective part is upwinded by the sign of `u`, the diffusive part is a
//! centered difference of `x² p`, so each face flux reads
//! `J = A p_L + B p_R` with `A ≥ 0 ≥ B`.
//!
//! [`fpe_step`] is a forward-Euler step. [`fpe_evolve`] also uses forward
//! Euler when the requested step is small enough, and otherwise second-order
//! Runge-Kutta-Legendre super-steps: an explicit multistage scheme whose
//! stability interval grows like the square of the stage count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pow_v, ModelParams};
use crate::stationary::StationaryDensity;

/// Values below this are counted as positivity violations.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-14;

/// Upper limit on Runge-Kutta-Legendre stages per super-step.
const MAX_STAGES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min >= 0.0) || !x_min.is_finite() {
            return Err(Error::InvalidParameter {
                name: "x_min",
                value: x_min,
                reason: "must be finite and non-negative",
            });
        }
        if !(x_max > x_min) || !x_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "x_max",
                value: x_max,
                reason: "must be finite and exceed x_min",
            });
        }
        if n_cells < 16 {
            return Err(Error::InvalidParameter {
                name: "n_cells",
                value: n_cells as f64,
                reason: "must be at least 16",
            });
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            spacing: (x_max - x_min) / n_cells as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.spacing
    }

    /// Position of face `k`; face `k` separates cells `k - 1` and `k`.
    pub fn face(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.spacing
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn faces(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|k| self.face(k)).collect()
    }

    /// Smallest grid on `[0, x_max]` where the stationary law has decayed
    /// below `1e-12` of its peak, rounded out to one decimal.
    pub fn for_density(density: &StationaryDensity, n_cells: usize) -> Result<Self> {
        let peak = density.mode().max(density.upper_bound() * 1e-3);
        let ln_peak = density.ln_pdf(peak)?;
        let mut x = density.upper_bound().max(peak);
        while density.ln_pdf(x)? - ln_peak > (1e-12f64).ln() {
            x *= 1.25;
        }
        Self::new(0.0, (x * 10.0).ceil() / 10.0, n_cells)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// No flux through either end of the domain.
    #[default]
    ZeroFlux,
    /// The first cell is held at zero and whatever flows into it is removed.
    AbsorbingAtZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
    /// Mass taken out through the absorbing boundary so far.
    pub removed_mass: f64,
    /// Rounding-level negative values (above `-1e-14`) reset to zero.
    pub clip_events: usize,
    /// Super-steps retried with a shorter step after undershooting.
    pub rejected_steps: usize,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells {
            return Err(Error::InvalidConfig(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n_cells
            )));
        }
        Ok(Self {
            grid,
            values,
            time: 0.0,
            removed_mass: 0.0,
            clip_events: 0,
            rejected_steps: 0,
        })
    }

    /// Gaussian of standard deviation `width_cells · spacing` at `x0`,
    /// sampled at the cell centres and renormalized to unit mass.
    pub fn gaussian(grid: Grid, x0: f64, width_cells: f64) -> Result<Self> {
        if !(x0 >= grid.x_min && x0 <= grid.x_max) {
            return Err(Error::Domain {
                what: "initial position on the grid",
                value: x0,
            });
        }
        if !(width_cells > 0.0) {
            return Err(Error::InvalidParameter {
                name: "width_cells",
                value: width_cells,
                reason: "must be positive",
            });
        }
        let sd = width_cells * grid.spacing;
        let values: Vec<f64> = grid
            .centers()
            .into_iter()
            .map(|x| (-0.5 * ((x - x0) / sd).powi(2)).exp())
            .collect();
        let mut field = Self::new(grid, values)?;
        let mass = field.mass();
        field.values.iter_mut().for_each(|v| *v /= mass);
        Ok(field)
    }

    /// Cell averages of the analytic stationary law.
    pub fn from_density(grid: Grid, density: &StationaryDensity) -> Result<Self> {
        let cdf = density.cdf_sorted(&grid.faces())?;
        let values = cdf
            .windows(2)
            .map(|w| (w[1] - w[0]) / grid.spacing)
            .collect();
        Self::new(grid, values)
    }

    /// Point values of `f` at the cell centres.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        Self::new(grid, grid.centers().into_iter().map(f).collect())
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing
    }

    pub fn mean(&self) -> f64 {
        let h = self.grid.spacing;
        let first: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.center(i))
            .sum();
        first * h / self.mass()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ |p_i - q_i| h` against another field on the same grid.
    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidConfig(
                "fields live on different grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.spacing)
    }

    /// L¹ distance to the analytic law, including its mass beyond the grid.
    pub fn l1_to_density(&self, density: &StationaryDensity) -> Result<f64> {
        let exact = Self::from_density(self.grid, density)?;
        let outside = 1.0 - exact.mass();
        Ok(self.l1_distance(&exact)? + outside.abs())
    }
}

/// Face-flux coefficients `J_k = a_k p_{k-1} + b_k p_k`, plus the assembled
/// tridiagonal operator `dp/dt = L p`.
#[derive(Debug, Clone)]
struct Operator {
    a: Vec<f64>,
    b: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    absorbing: bool,
}

impl Operator {
    fn new(grid: &Grid, params: &ModelParams, mode: BoundaryMode) -> Self {
        let n = grid.n_cells;
        let h = grid.spacing;
        let half_s2 = 0.5 * params.sigma_sq();
        let diffusivity: Vec<f64> = (0..n)
            .map(|i| half_s2 * grid.center(i).powi(2) / h)
            .collect();
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        for k in 1..n {
            let u = face_velocity(params, grid.face(k));
            a[k] = u.max(0.0) + diffusivity[k - 1];
            b[k] = u.min(0.0) - diffusivity[k];
        }
        let absorbing = mode == BoundaryMode::AbsorbingAtZero;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            if absorbing && i == 0 {
                continue;
            }
            lower[i] = a[i] / h;
            diag[i] = (b[i] - a[i + 1]) / h;
            upper[i] = -b[i + 1] / h;
        }
        Self {
            a,
            b,
            lower,
            diag,
            upper,
            absorbing,
        }
    }

    /// Largest rate at which a cell loses mass; forward Euler keeps every
    /// value non-negative iff `dt` times this is at most 1.
    fn max_outflow(&self) -> f64 {
        self.diag.iter().map(|d| -d).fold(0.0, f64::max)
    }

    fn apply(&self, y: &[f64], out: &mut [f64]) {
        let n = y.len();
        out[0] = self.diag[0] * y[0] + self.upper[0] * y[1];
        for i in 1..n - 1 {
            out[i] = self.lower[i] * y[i - 1] + self.diag[i] * y[i] + self.upper[i] * y[i + 1];
        }
        out[n - 1] = self.lower[n - 1] * y[n - 2] + self.diag[n - 1] * y[n - 1];
    }

    fn flux(&self, y: &[f64], k: usize) -> f64 {
        if k == 0 || k == y.len() {
            return 0.0;
        }
        let left = if self.absorbing && k == 1 {
            0.0
        } else {
            y[k - 1]
        };
        self.a[k] * left + self.b[k] * y[k]
    }
}

/// Effective Itô velocity `(q - c + σ²) x - r x^{v+1}`.
fn face_velocity(params: &ModelParams, x: f64) -> f64 {
    (params.net_growth() + params.sigma_sq()) * x - params.r * x * pow_v(x, params.v)
}

/// Probability flux through the grid face at `x`. Faces on the domain ends
/// carry no flux.
pub fn flux_at(x: f64, field: &DensityField, params: &ModelParams) -> Result<f64> {
    flux_at_with(x, field, params, BoundaryMode::ZeroFlux)
}

pub fn flux_at_with(
    x: f64,
    field: &DensityField,
    params: &ModelParams,
    mode: BoundaryMode,
) -> Result<f64> {
    let g = &field.grid;
    let k = ((x - g.x_min) / g.spacing).round();
    if !(0.0..=g.n_cells as f64).contains(&k) || (g.face(k as usize) - x).abs() > 1e-9 * g.spacing {
        return Err(Error::Domain {
            what: "grid face position",
            value: x,
        });
    }
    let op = Operator::new(g, params, mode);
    Ok(op.flux(&field.values, k as usize))
}

/// Face fluxes at every face, both domain ends included.
pub fn fluxes(field: &DensityField, params: &ModelParams, mode: BoundaryMode) -> Vec<f64> {
    let op = Operator::new(&field.grid, params, mode);
    (0..=field.grid.n_cells)
        .map(|k| op.flux(&field.values, k))
        .collect()
}

/// Largest forward-Euler step that keeps every cell non-negative.
pub fn positivity_bound(grid: &Grid, params: &ModelParams) -> f64 {
    1.0 / Operator::new(grid, params, BoundaryMode::ZeroFlux).max_outflow()
}

/// Default explicit step: the diffusive limit `0.4 h² / (σ² x_max²)`, further
/// capped at 80% of the positivity bound so that advection-dominated
/// (small-σ) runs stay stable.
pub fn stable_dt(grid: &Grid, params: &ModelParams) -> f64 {
    let diffusive = 0.4 * grid.spacing.powi(2) / (params.sigma_sq() * grid.x_max.powi(2));
    diffusive.min(0.8 * positivity_bound(grid, params))
}

fn check_params(params: &ModelParams) -> Result<()> {
    params.validate_noisy()
}

/// One forward-Euler step of the conservative update.
pub fn fpe_step(field: &DensityField, params: &ModelParams, dt: f64) -> Result<DensityField> {
    fpe_step_with(field, params, dt, BoundaryMode::ZeroFlux)
}

pub fn fpe_step_with(
    field: &DensityField,
    params: &ModelParams,
    dt: f64,
    mode: BoundaryMode,
) -> Result<DensityField> {
    check_params(params)?;
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be finite and non-negative",
        });
    }
    let op = Operator::new(&field.grid, params, mode);
    let bound = 1.0 / op.max_outflow();
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Stability { dt, bound });
    }
    let mut next = field.clone();
    if dt == 0.0 {
        return Ok(next);
    }
    let mut work = Workspace::new(field.grid.n_cells);
    euler_step(&op, &mut next, dt, &mut work);
    finish_step(&mut next, field.mass(), mode)?;
    next.time = field.time + dt;
    Ok(next)
}

struct Workspace {
    l0: Vec<f64>,
    l: Vec<f64>,
    y_prev: Vec<f64>,
    y_prev2: Vec<f64>,
    y: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            l0: vec![0.0; n],
            l: vec![0.0; n],
            y_prev: vec![0.0; n],
            y_prev2: vec![0.0; n],
            y: vec![0.0; n],
        }
    }
}

fn euler_step(op: &Operator, field: &mut DensityField, dt: f64, work: &mut Workspace) {
    op.apply(&field.values, &mut work.l);
    for (v, l) in field.values.iter_mut().zip(&work.l) {
        *v += dt * l;
    }
}

/// Coefficients of the `s`-stage second-order Runge-Kutta-Legendre scheme.
struct RklCoefficients {
    mu: Vec<f64>,
    nu: Vec<f64>,
    mu_tilde: Vec<f64>,
    gamma_tilde: Vec<f64>,
}

impl RklCoefficients {
    fn new(s: usize) -> Self {
        let bj = |j: usize| {
            if j < 2 {
                1.0 / 3.0
            } else {
                let j = j as f64;
                (j * j + j - 2.0) / (2.0 * j * (j + 1.0))
            }
        };
        let sf = s as f64;
        let w1 = 4.0 / (sf * sf + sf - 2.0);
        let mut mu = vec![0.0; s + 1];
        let mut nu = vec![0.0; s + 1];
        let mut mu_tilde = vec![0.0; s + 1];
        let mut gamma_tilde = vec![0.0; s + 1];
        mu_tilde[1] = bj(1) * w1;
        for j in 2..=s {
            let jf = j as f64;
            mu[j] = (2.0 * jf - 1.0) / jf * bj(j) / bj(j - 1);
            nu[j] = -(jf - 1.0) / jf * bj(j) / bj(j - 2);
            mu_tilde[j] = mu[j] * w1;
            gamma_tilde[j] = -(1.0 - bj(j - 1)) * mu_tilde[j];
        }
        Self {
            mu,
            nu,
            mu_tilde,
            gamma_tilde,
        }
    }

    /// Stage count for a step of `tau` on an operator of spectral radius `rho`.
    fn stages_for(tau: f64, rho: f64) -> usize {
        let target = tau * rho / 0.9;
        let mut s = 2usize;
        while ((s * s + s - 2) as f64) / 2.0 < target {
            s += 1;
        }
        s
    }

    /// Longest step `s_max` stages can cover.
    fn max_tau(rho: f64) -> f64 {
        let s = MAX_STAGES as f64;
        0.9 * (s * s + s - 2.0) / 2.0 / rho
    }
}

fn rkl2_step(op: &Operator, values: &mut [f64], tau: f64, s: usize, work: &mut Workspace) {
    let c = RklCoefficients::new(s);
    let n = values.len();
    op.apply(values, &mut work.l0);
    work.y_prev2.copy_from_slice(values);
    for ((y, v), l) in work.y_prev.iter_mut().zip(values.iter()).zip(&work.l0) {
        *y = v + c.mu_tilde[1] * tau * l;
    }
    let last = n - 1;
    for j in 2..=s {
        let (mu, nu) = (c.mu[j], c.nu[j]);
        let rest = 1.0 - mu - nu;
        let (mt, gt) = (c.mu_tilde[j] * tau, c.gamma_tilde[j] * tau);
        let (yp, yp2, l0) = (&work.y_prev, &work.y_prev2, &work.l0);
        let y = &mut work.y;
        let stage =
            |i: usize, l: f64| mu * yp[i] + nu * yp2[i] + rest * values[i] + mt * l + gt * l0[i];
        y[0] = stage(0, op.diag[0] * yp[0] + op.upper[0] * yp[1]);
        for i in 1..last {
            let l = op.lower[i] * yp[i - 1] + op.diag[i] * yp[i] + op.upper[i] * yp[i + 1];
            y[i] = stage(i, l);
        }
        y[last] = stage(
            last,
            op.lower[last] * yp[last - 1] + op.diag[last] * yp[last],
        );
        std::mem::swap(&mut work.y_prev2, &mut work.y_prev);
        std::mem::swap(&mut work.y_prev, &mut work.y);
    }
    values.copy_from_slice(&work.y_prev);
}

/// Zeroes rounding-level negatives; fails on anything more negative.
fn finish_step(field: &mut DensityField, mass_before: f64, mode: BoundaryMode) -> Result<()> {
    for v in field.values.iter_mut() {
        if *v < 0.0 {
            if *v < -NEGATIVITY_TOLERANCE {
                return Err(Error::Stability {
                    dt: f64::NAN,
                    bound: f64::NAN,
                });
            }
            *v = 0.0;
            field.clip_events += 1;
        }
    }
    if mode == BoundaryMode::AbsorbingAtZero {
        field.removed_mass += mass_before - field.mass();
    }
    Ok(())
}

/// Evolves the mollified point mass at `x0` to `t_final`.
///
/// `dt` is the longest step taken. Steps within the forward-Euler positivity
/// bound are plain Euler steps; longer ones are Runge-Kutta-Legendre
/// super-steps, started at the Euler bound and doubled after each accepted
/// step so that the sharp initial transient is resolved.
pub fn fpe_evolve(
    params: &ModelParams,
    x0: f64,
    t_final: f64,
    grid: Grid,
    dt: f64,
    boundary_mode: BoundaryMode,
) -> Result<DensityField> {
    let mut out = fpe_evolve_snapshots(params, x0, &[t_final], grid, dt, boundary_mode)?;
    Ok(out.pop().expect("one snapshot per requested time"))
}

/// As [`fpe_evolve`], returning the field at each of the ascending `times`.
pub fn fpe_evolve_snapshots(
    params: &ModelParams,
    x0: f64,
    times: &[f64],
    grid: Grid,
    dt: f64,
    boundary_mode: BoundaryMode,
) -> Result<Vec<DensityField>> {
    let initial = initial_field(grid, x0, boundary_mode)?;
    evolve_field(initial, params, times, dt, boundary_mode)
}

/// The mollified initial condition, with the absorbing cell emptied.
pub fn initial_field(grid: Grid, x0: f64, boundary_mode: BoundaryMode) -> Result<DensityField> {
    let mut field = DensityField::gaussian(grid, x0, 3.0)?;
    if boundary_mode == BoundaryMode::AbsorbingAtZero {
        field.removed_mass = field.values[0] * grid.spacing;
        field.values[0] = 0.0;
    }
    Ok(field)
}

/// Advances an arbitrary field through the ascending `times`.
pub fn evolve_field(
    mut field: DensityField,
    params: &ModelParams,
    times: &[f64],
    dt: f64,
    boundary_mode: BoundaryMode,
) -> Result<Vec<DensityField>> {
    check_params(params)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be positive and finite",
        });
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= field.time))
        || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidConfig(
            "snapshot times must be finite, ascending and not in the past".into(),
        ));
    }
    let op = Operator::new(&field.grid, params, boundary_mode);
    let outflow = op.max_outflow();
    let euler_dt = 1.0 / outflow;
    let rho = 2.0 * outflow;
    let tau_max = dt.min(RklCoefficients::max_tau(rho));
    let mut tau_cap = euler_dt.min(tau_max);
    let mut work = Workspace::new(field.grid.n_cells);
    let mut snapshots = Vec::with_capacity(times.len());
    let mut backup = field.values.clone();
    for &target in times {
        while field.time < target {
            let remaining = target - field.time;
            let tau = tau_cap.min(remaining);
            let last = tau == remaining;
            let mass_before = field.mass();
            backup.copy_from_slice(&field.values);
            if tau <= euler_dt * (1.0 + 1e-12) {
                euler_step(&op, &mut field, tau, &mut work);
            } else {
                let s = RklCoefficients::stages_for(tau, rho);
                rkl2_step(&op, &mut field.values, tau, s, &mut work);
            }
            if finish_step(&mut field, mass_before, boundary_mode).is_err() {
                if tau <= euler_dt * (1.0 + 1e-12) {
                    return Err(Error::Stability {
                        dt: tau,
                        bound: euler_dt,
                    });
                }
                field.values.copy_from_slice(&backup);
                field.rejected_steps += 1;
                tau_cap = (tau / 4.0).max(euler_dt);
                continue;
            }
            field.time = if last { target } else { field.time + tau };
            tau_cap = (2.0 * tau_cap).min(tau_max);
        }
        snapshots.push(field.clone());
    }
    Ok(snapshots)
}

/// Exact steady state of the discrete zero-flux operator: every face flux
/// vanishes, which fixes `p_k / p_{k-1} = a_k / -b_k`. Built in log space and
/// normalized to unit mass.
pub fn fpe_steady_state(params: &ModelParams, grid: Grid) -> Result<DensityField> {
    check_params(params)?;
    let op = Operator::new(&grid, params, BoundaryMode::ZeroFlux);
    let n = grid.n_cells;
    let mut ln_p = vec![0.0; n];
    for k in 1..n {
        ln_p[k] = ln_p[k - 1] + op.a[k].ln() - (-op.b[k]).ln();
    }
    let peak = ln_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let values: Vec<f64> = ln_p.iter().map(|l| (l - peak).exp()).collect();
    let mut field = DensityField::new(grid, values)?;
    let mass = field.mass();
    field.values.iter_mut().for_each(|v| *v /= mass);
    Ok(field)
}
