//! Experiment runners. Each one fills a [`Report`] and writes its tables into
//! the output directory.

mod dynamics;
mod equilibrium;
mod game;
mod structure;

use std::path::Path;

use anyhow::Result;
use clap::ValueEnum;
use mflab_core::dynamics::{product_state, FlowOptions};
use mflab_core::game::Branch;
use mflab_core::interaction::local_hamiltonian;
use mflab_core::{c64, models, FockContext, SolverOptions, ThermalState, ThermoGame};

use serde::{Deserialize, Serialize};

use crate::config::{Experiment, InitialState};
use crate::report::{fmt_f64, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Pressure of the long-range model and its variational identity.
    Pressure,
    /// Gap-equation solutions, conservative set and min-max pressure.
    Gap,
    /// Brute-force grid of the game value against the fixed-point solver.
    GameSurface,
    /// KMS and Bogoliubov residuals of gap-solution Gibbs states.
    Kms,
    /// Tomita-Takesaki data of the Gibbs state and the modular flow check.
    Modular,
    /// Self-consistent mean-field flow from the configured initial state.
    Flow,
    /// Stationarity of the gap-solution state under both dynamics.
    Stationarity,
    /// Exact versus mean-field dynamics over the configured windows.
    LimitTrend,
    /// Space-average fluctuations of the configured initial state.
    Ergodicity,
    /// Gauge-twisted product states on one site with four spins.
    DemoGaugeTwist,
    /// Grid over inverse temperatures and coupling factors.
    Sweep,
    /// Builds the model and echoes it without computing anything.
    Validate,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

pub fn run(command: Command, exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    match command {
        Command::Pressure => equilibrium::pressure(exp, report, out),
        Command::Kms => equilibrium::kms(exp, report, out),
        Command::Modular => equilibrium::modular(exp, report, out),
        Command::Gap => game::gap(exp, report, out),
        Command::GameSurface => game::surface(exp, report, out),
        Command::Sweep => game::sweep(exp, report, out),
        Command::Flow => dynamics::flow(exp, report, out),
        Command::Stationarity => dynamics::stationarity(exp, report, out),
        Command::LimitTrend => dynamics::limit_trend(exp, report, out),
        Command::Ergodicity => structure::ergodicity(exp, report, out),
        Command::DemoGaugeTwist => structure::gauge_twist(exp, report),
        Command::Validate => structure::validate(exp, report),
    }
}

/// Label of one (window, β) cell in check names and logs.
fn tag(ctx: &FockContext, beta: f64) -> String {
    format!("L={} beta={beta}", ctx.half_width())
}

fn cx(z: c64) -> [f64; 2] {
    [z.re, z.im]
}

fn cxs(zs: &[c64]) -> Vec<[f64; 2]> {
    zs.iter().map(|z| cx(*z)).collect()
}

fn branch(b: Branch) -> &'static str {
    match b {
        Branch::Trivial => "trivial",
        Branch::Normal => "normal",
        Branch::Ordered => "ordered",
    }
}

fn num(x: f64) -> String {
    fmt_f64(x)
}

/// Largest increase between consecutive entries; `≤ 0` means non-increasing.
fn max_increase(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

fn flow_options(exp: &Experiment) -> FlowOptions {
    let f = exp.config.run.flow;
    FlowOptions {
        dt: f.dt,
        t_end: f.t_end,
        record_interval: f.record_interval,
        step_tol: f.step_tol,
        ..FlowOptions::default()
    }
}

/// Full coefficient vector of the first conservative-set member.
fn conservative_minimizer(game: &ThermoGame, opts: &SolverOptions) -> Result<Vec<c64>> {
    let set = game.conservative_set(opts)?;
    Ok(set.members.first().map(|m| m.d.clone()).unwrap_or_default())
}

/// Whether the configured initial state depends on `β`.
fn initial_uses_beta(exp: &Experiment) -> bool {
    !matches!(exp.config.run.initial, InitialState::Product { .. })
}

fn initial_state(exp: &Experiment, ctx: &FockContext, beta: f64) -> Result<ThermalState> {
    Ok(match exp.config.run.initial {
        InitialState::Gap => {
            let game = ThermoGame::new(exp.model.clone(), ctx.clone(), beta)?;
            let d = conservative_minimizer(&game, &exp.solver(exp.seed()?))?;
            game.gibbs(&d)?
        }
        InitialState::Gibbs => ThermalState::gibbs(local_hamiltonian(exp.model.base(), ctx)?.matrix(), beta)?,
        InitialState::Product { theta, mix } => product_state(ctx, &models::paired_site_density(theta, mix))?,
    })
}
