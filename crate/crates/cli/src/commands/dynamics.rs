//! Mean-field flow, stationarity and limit-trend runners.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::Result;
use mflab_core::dynamics::{limit_agreement, selfconsistent_flow, stationarity_check, StateRecipe};
use mflab_core::game::approximating_interaction;
use mflab_core::interaction::energy_per_site_element;
use mflab_core::linalg::Csr;
use mflab_core::{models, ThermoGame};
use serde_json::json;

use super::{conservative_minimizer, cxs, flow_options, initial_state, initial_uses_beta, max_increase, num, tag};
use crate::config::{Experiment, InitialState};
use crate::report::Report;

pub fn flow(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let tol = exp.tolerances();
    let opts = flow_options(exp);
    let label = exp.observable.label.as_deref().unwrap_or("observable").to_string();
    let mut cells = Vec::new();
    for ctx in &exp.contexts {
        let betas = if initial_uses_beta(exp) { exp.betas.clone() } else { exp.betas[..1].to_vec() };
        for (bi, &beta) in betas.iter().enumerate() {
            let name = tag(ctx, beta);
            let game = ThermoGame::new(exp.model.clone(), ctx.clone(), beta)?;
            let rho = initial_state(exp, ctx, beta)?;
            let a = Csr::from_dense(energy_per_site_element(&exp.observable, ctx)?.matrix());
            let traj = selfconsistent_flow(game.sparse(), rho.density(), &opts, &[(label.clone(), a)])?;
            let file = format!("flow_L{}_b{bi}.csv", ctx.half_width());
            traj.write_csv(BufWriter::new(File::create(out.join(&file))?))?;
            report.artifact(&file);
            report.at_most(format!("{name}: energy drift"), traj.energy_drift(), tol.energy_drift);
            report.at_most(format!("{name}: trace drift"), traj.trace_drift(), tol.trace_drift);
            let pure = (traj.purity[0] - 1.0).abs() <= tol.purity_drift;
            if pure {
                report.at_most(format!("{name}: purity drift"), traj.purity_drift(), tol.purity_drift);
            }
            log::info!("{name}: {} steps, energy drift {:e}", traj.info.steps, traj.energy_drift());
            cells.push(json!({
                "L": ctx.half_width(), "beta": beta, "trajectory": file, "pure_initial_state": pure,
                "energy_drift": traj.energy_drift(), "trace_drift": traj.trace_drift(),
                "purity_drift": traj.purity_drift(), "coefficient_drift": traj.coefficient_drift(),
                "min_eigenvalue": traj.min_eigenvalue.iter().copied().fold(f64::INFINITY, f64::min),
                "initial_coefficients": cxs(&traj.coefficients[0]),
                "final_coefficients": cxs(traj.coefficients.last().expect("recorded rows")),
                "integrator": traj.info,
            }));
        }
    }
    report.result("cells", cells)
}

pub fn stationarity(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let opts = exp.solver(exp.seed()?);
    let flow = flow_options(exp);
    let times = &exp.config.run.times;
    let tol = exp.tolerances().stationarity;
    let (mut rows, mut cells) = (Vec::new(), Vec::new());
    for &beta in &exp.betas {
        // exact deviations per time, one entry per window
        let mut trend: Vec<Vec<f64>> = vec![Vec::new(); times.len()];
        for ctx in &exp.contexts {
            let name = tag(ctx, beta);
            let game = ThermoGame::new(exp.model.clone(), ctx.clone(), beta)?;
            let d = conservative_minimizer(&game, &opts)?;
            let r = stationarity_check(&game, &d, &flow, times)?;
            report.at_most(format!("{name}: self-consistent coefficient drift"), r.selfconsistent, tol);
            for (i, &(t, dev)) in r.exact.iter().enumerate() {
                trend[i].push(dev);
                rows.push(vec![ctx.half_width().to_string(), num(beta), num(t), num(dev), num(r.selfconsistent)]);
            }
            log::info!("{name}: flow drift {:e}", r.selfconsistent);
            cells.push(json!({ "L": ctx.half_width(), "beta": beta, "coefficients": cxs(&d), "report": r }));
        }
        if exp.contexts.len() > 1 {
            for (t, devs) in times.iter().zip(&trend) {
                report.at_most(format!("beta={beta} t={t}: exact deviation increase over L"), max_increase(devs), 0.0);
            }
        }
    }
    report.result("cells", cells)?;
    let header = ["L", "beta", "t", "exact_deviation", "selfconsistent_drift"];
    report.table(out, "stationarity.csv", &header, &rows)
}

pub fn limit_trend(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let opts = flow_options(exp);
    let times = &exp.config.run.times;
    let betas = if initial_uses_beta(exp) { exp.betas.clone() } else { exp.betas[..1].to_vec() };
    let (mut rows, mut cells) = (Vec::new(), Vec::new());
    for &beta in &betas {
        let recipe = match exp.config.run.initial {
            InitialState::Product { theta, mix } => StateRecipe::Product(models::paired_site_density(theta, mix)),
            InitialState::Gibbs => StateRecipe::Gibbs { phi: exp.model.base().clone(), beta },
            InitialState::Gap => {
                // the gap solution of the smallest window fixes one approximating interaction for all windows
                let game = ThermoGame::new(exp.model.clone(), exp.contexts[0].clone(), beta)?;
                let d = conservative_minimizer(&game, &exp.solver(exp.seed()?))?;
                StateRecipe::Gibbs { phi: approximating_interaction(&exp.model, &d)?, beta }
            }
        };
        for &t in times {
            let table = limit_agreement(&exp.model, &exp.contexts, &recipe, &exp.observable, t, &opts)?;
            let devs: Vec<f64> = table.iter().map(|r| r.deviation).collect();
            if devs.len() > 1 {
                report.at_most(format!("beta={beta} t={t}: deviation increase over L"), max_increase(&devs), 0.0);
            }
            for r in &table {
                rows.push(vec![
                    r.half_width.to_string(),
                    r.volume.to_string(),
                    num(beta),
                    num(t),
                    num(r.exact.re),
                    num(r.mean_field.re),
                    num(r.deviation),
                ]);
            }
            log::info!("beta={beta} t={t}: deviations {devs:?}");
            cells.push(json!({ "beta": beta, "t": t, "rows": table }));
        }
    }
    report.result("cells", cells)?;
    let header = ["L", "volume", "beta", "t", "exact", "mean_field", "deviation"];
    report.table(out, "limit_trend.csv", &header, &rows)
}
