//! The six experiment commands. Each turns an effective config into a report.

use antiito_core::feller::{classify_boundary, FunctionalValue};
use antiito_core::fpe::{fpe_evolve_snapshots, Grid};
use antiito_core::model::{regime_for, stationary_mode, RegimeClass};
use antiito_core::simulate::{ks_distance_to_density, simulate_ensemble};
use antiito_core::stationary::PdfValue;
use antiito_core::{Interpretation, StationaryDensity};

use crate::config::{Command, ExperimentConfig, SweepAxis};
use crate::report::{Cell, Report};
use crate::CliError;

/// Extinct fraction at or above which a run counts as eradication.
pub const ERADICATION_LEVEL: f64 = 0.99;

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match cfg.command.expect("resolved config carries its command") {
        Command::Simulate => run_simulate(cfg),
        Command::Stationary => run_stationary(cfg),
        Command::Sweep => run_sweep(cfg),
        Command::Classify => run_classify(cfg),
        Command::Fpe => run_fpe(cfg),
        Command::Compare => run_compare(cfg),
    }
}

fn regime_name(r: RegimeClass) -> &'static str {
    match r {
        RegimeClass::RobustInterior => "robust_interior",
        RegimeClass::DecreasingMode => "decreasing_mode",
        RegimeClass::DegenerateAtZero => "degenerate_at_zero",
    }
}

/// Terminal histogram of one ensemble, summary statistics in the header.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let sim = cfg.sim_or_default();
    let s = simulate_ensemble(&sim, &cfg.params)?;
    let mut r = Report::new(&["bin_lo", "bin_hi", "count"]);
    r.meta("interp", sim.interp.to_string());
    r.meta("n_paths", sim.n_paths);
    r.meta("extinct_fraction", s.extinct_fraction);
    r.meta("mean", s.mean);
    r.meta("post_burn_in_mean", s.post_burn_in_mean);
    r.meta("ks_vs_analytic", s.ks_vs_analytic);
    r.meta("blowups", s.blowups);
    let h = &s.histogram;
    for (i, &count) in h.counts.iter().enumerate() {
        r.row(vec![
            h.edges[i].into(),
            h.edges[i + 1].into(),
            Cell::Int(count),
        ]);
    }
    Ok(r)
}

/// Table of the analytic stationary density, or a degenerate sentinel.
pub fn run_stationary(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = &cfg.params;
    p.validate_noisy()?;
    let regime = regime_for(p.q, p.c, p.sigma_sq());
    if regime == RegimeClass::DegenerateAtZero {
        eprintln!(
            "warning: sigma^2 = {} <= 2(c - q) = {}; the stationary law is a point mass at 0",
            p.sigma_sq(),
            2.0 * (p.c - p.q)
        );
        let mut r = Report::new(&["degenerate"]);
        r.meta("regime", regime_name(regime));
        r.row(vec![Cell::Bool(true)]);
        return Ok(r);
    }
    let density = StationaryDensity::new(*p)?;
    let n = cfg.stationary.points.max(2);
    let x_max = cfg
        .stationary
        .x_max
        .unwrap_or_else(|| density.upper_bound());
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(CliError::Config(format!(
            "stationary.x_max = {x_max} must be positive"
        )));
    }
    let mut r = Report::new(&["x", "p"]);
    r.meta("regime", regime_name(regime));
    r.meta("k0", density.k0());
    r.meta("mode", density.mode());
    for i in 0..n {
        let x = x_max * i as f64 / (n - 1) as f64;
        let value = match density.pdf(x)? {
            PdfValue::Finite(v) => v,
            PdfValue::Pole => f64::INFINITY,
        };
        r.row(vec![x.into(), value.into()]);
    }
    Ok(r)
}

/// Regime, mode and (optionally) simulated extinction along one parameter axis.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let axis = SweepAxis::parse(&sweep.parameter)?;
    let sim = cfg.sim_or_default();
    let mut r = Report::new(&["value", "regime", "mode", "extinct_fraction"]);
    r.meta("parameter", sweep.parameter.as_str());
    if let Some(crit) = antiito_core::critical_sigma_squared(&cfg.params) {
        r.meta("critical_sigma_sq", crit);
    }
    for &value in &sweep.values {
        let p = axis.apply(&cfg.params, value);
        p.validate_noisy()?;
        let regime = regime_for(p.q, p.c, axis.sigma_sq(&p, value));
        let mode = stationary_mode(&p)?;
        let extinct = if sweep.simulate {
            Some(simulate_ensemble(&sim, &p)?.extinct_fraction)
        } else {
            None
        };
        r.row(vec![
            value.into(),
            regime_name(regime).into(),
            mode.into(),
            extinct.into(),
        ]);
    }
    Ok(r)
}

fn functional_cell(v: FunctionalValue) -> Cell {
    match v {
        FunctionalValue::Finite(x) => Cell::Num(x),
        FunctionalValue::Diverges => Cell::Text("diverges".into()),
    }
}

/// Feller verdicts at both ends of the state space.
pub fn run_classify(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = classify_boundary(&cfg.params)?;
    let mut r = Report::new(&["boundary", "sigma", "n", "class"]);
    r.meta("within_guarantee", c.within_guarantee);
    if !c.within_guarantee {
        eprintln!("note: q <= c lies outside the growth regime the boundary claim is made for");
    }
    for (name, v) in [("zero", c.zero), ("infinity", c.infinity)] {
        r.row(vec![
            name.into(),
            functional_cell(v.sigma_val),
            functional_cell(v.n_val),
            format!("{:?}", v.class).to_lowercase().into(),
        ]);
    }
    Ok(r)
}

/// Fokker-Planck snapshots as `(time, x, p)` rows.
pub fn run_fpe(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let f = &cfg.fpe;
    let p = &cfg.params;
    p.validate_noisy()?;
    let density = StationaryDensity::new(*p).ok();
    let x_max = match (f.x_max, &density) {
        (Some(x), _) => x,
        (None, Some(d)) => Grid::for_density(d, f.n_cells)?.x_max(),
        (None, None) => 8.0,
    };
    let grid = Grid::new(0.0, x_max, f.n_cells)?;
    let mut times: Vec<f64> = f
        .snapshots
        .iter()
        .copied()
        .filter(|&t| t < f.t_final)
        .collect();
    times.push(f.t_final);
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(CliError::Config("fpe.snapshots must be ascending".into()));
    }
    let snaps = fpe_evolve_snapshots(p, f.x0, &times, grid, f.dt, f.boundary)?;
    let last = snaps.last().expect("t_final is always requested");
    let mut r = Report::new(&["time", "x", "p"]);
    r.meta("boundary", format!("{:?}", f.boundary));
    r.meta("n_cells", f.n_cells);
    r.meta("x_max", x_max);
    r.meta("mass", last.mass());
    r.meta("removed_mass", last.removed_mass);
    r.meta("clip_events", last.clip_events);
    if let Some(d) = &density {
        r.meta("l1_to_stationary", last.l1_to_density(d)?);
    }
    for s in &snaps {
        for (i, v) in s.values.iter().enumerate() {
            r.row(vec![s.time.into(), grid.center(i).into(), (*v).into()]);
        }
    }
    Ok(r)
}

/// Matched Itô and anti-Itô ensembles with shared seeds.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = &cfg.params;
    if p.net_growth() <= 0.0 {
        return Err(CliError::Config(format!(
            "compare needs q > c (growth regime); got q = {}, c = {}",
            p.q, p.c
        )));
    }
    let base = cfg.sim_or_default();
    let density = StationaryDensity::new(*p).ok();
    let mut r = Report::new(&[
        "interp",
        "extinct_fraction",
        "mean",
        "ks_vs_stationary",
        "eradicated",
    ]);
    let mut eradicated = Vec::new();
    for interp in [Interpretation::Ito, Interpretation::Hk] {
        let sim = antiito_core::SimulationConfig {
            interp,
            ..base.clone()
        };
        let s = simulate_ensemble(&sim, p)?;
        let ks = match &density {
            Some(d) => Some(ks_distance_to_density(&s.terminal_samples, d)?),
            None => None,
        };
        let gone = s.extinct_fraction >= ERADICATION_LEVEL;
        if gone {
            eradicated.push(interp.to_string());
        }
        r.row(vec![
            interp.to_string().into(),
            s.extinct_fraction.into(),
            s.mean.into(),
            ks.into(),
            gone.into(),
        ]);
    }
    r.meta(
        "eradicated_by",
        if eradicated.is_empty() {
            "none".to_owned()
        } else {
            eradicated.join(" ")
        },
    );
    Ok(r)
}
