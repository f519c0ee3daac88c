//! Pressure, KMS and modular runners.

use std::path::Path;

use anyhow::Result;
use mflab_core::interaction::local_hamiltonian;
use mflab_core::longrange::{lr_free_energy, pressure_lr};
use mflab_core::rng::stream;
use mflab_core::thermo::{self, modular_data, random_even, variational_check_of};
use mflab_core::{FockContext, Matrix, ThermalState, ThermoGame};
use serde_json::json;

use super::{branch, num, tag};
use crate::config::Experiment;
use crate::report::Report;

/// Dense `U_L^m`, or `U_L^Φ` when there are no mean-field terms.
fn hamiltonian(exp: &Experiment, ctx: &FockContext) -> Result<Matrix> {
    Ok(if exp.model.is_empty() {
        local_hamiltonian(exp.model.base(), ctx)?.into_matrix()
    } else {
        exp.model.operators(ctx)?.hamiltonian()
    })
}

pub fn pressure(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let tol = exp.tolerances();
    let samples = exp.config.run.samples;
    let seed = if samples > 0 { Some(exp.seed()?) } else { None };
    let (mut rows, mut cells) = (Vec::new(), Vec::new());
    for (ci, ctx) in exp.contexts.iter().enumerate() {
        let h = hamiltonian(exp, ctx)?;
        for (bi, &beta) in exp.betas.iter().enumerate() {
            let name = tag(ctx, beta);
            let p = pressure_lr(&exp.model, beta, ctx)?;
            let base = thermo::pressure(exp.model.base(), beta, ctx)?;
            let rho = ThermalState::gibbs(&h, beta)?;
            let f = lr_free_energy(&exp.model, &rho, beta, ctx.half_width(), ctx)?;
            let identity = (f + p).abs();
            report.at_most(format!("{name}: |f(Gibbs) + P|"), identity, tol.variational);
            let mut cell = json!({
                "L": ctx.half_width(), "volume": ctx.volume(), "beta": beta,
                "pressure": p, "base_pressure": base, "gibbs_free_energy": f, "identity_residual": identity,
            });
            if let Some(seed) = seed {
                let mut rng = stream(seed, (ci * exp.betas.len() + bi) as u64);
                let v = variational_check_of(&h, beta, ctx.volume(), samples, &mut rng)?;
                report.at_most(format!("{name}: random states below Gibbs"), v.violations as f64, 0.0);
                cell["min_excess"] = json!(v.min_excess);
                cell["samples"] = json!(v.samples);
            }
            log::info!("{name}: pressure {p}");
            rows.push(vec![
                ctx.half_width().to_string(),
                ctx.volume().to_string(),
                num(beta),
                num(p),
                num(base),
                num(f),
                num(identity),
            ]);
            cells.push(cell);
        }
    }
    report.result("cells", cells)?;
    let header = ["L", "volume", "beta", "pressure", "base_pressure", "gibbs_free_energy", "identity_residual"];
    report.table(out, "pressure.csv", &header, &rows)
}

pub fn kms(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let seed = exp.seed()?;
    let opts = exp.solver(seed);
    let tol = exp.tolerances();
    let pairs = exp.config.run.pairs;
    let (mut rows, mut cells) = (Vec::new(), Vec::new());
    for ctx in &exp.contexts {
        for &beta in &exp.betas {
            let name = tag(ctx, beta);
            let game = ThermoGame::new(exp.model.clone(), ctx.clone(), beta)?;
            let solutions = game.gap_fixed_point(&opts)?;
            let set = game.conservative_set(&opts)?;
            let mut states = Vec::new();
            let mut best_bogoliubov = f64::INFINITY;
            for (i, s) in solutions.iter().enumerate() {
                let rho = game.gibbs(&s.d.c)?;
                let panel = game.selfconsistent_kms_check(&rho, pairs, seed)?;
                let bogoliubov = game.bogoliubov_residual(&rho, &set);
                best_bogoliubov = best_bogoliubov.min(bogoliubov);
                report.at_most(format!("{name} solution {i}: KMS boundary"), panel.max_boundary, tol.kms_boundary);
                report.at_most(format!("{name} solution {i}: KMS smeared"), panel.max_smeared, tol.kms_smeared);
                rows.push(vec![
                    ctx.half_width().to_string(),
                    num(beta),
                    i.to_string(),
                    branch(s.branch).to_string(),
                    num(panel.max_boundary),
                    num(panel.max_smeared),
                    num(bogoliubov),
                ]);
                states.push(json!({ "solution": i, "branch": s.branch, "kms": panel, "bogoliubov": bogoliubov }));
            }
            report.at_most(format!("{name}: best Bogoliubov residual"), best_bogoliubov, tol.bogoliubov);
            let tracial = game.selfconsistent_kms_check(&ThermalState::tracial(ctx.fock_dim()), pairs, seed)?;
            log::info!("{name}: {} states, tracial control {:e}", states.len(), tracial.max_boundary);
            cells.push(json!({
                "L": ctx.half_width(), "beta": beta, "states": states,
                "tracial_control": tracial, "conservative_set": set,
            }));
        }
    }
    report.result("cells", cells)?;
    let header = ["L", "beta", "solution", "branch", "kms_boundary", "kms_smeared", "bogoliubov"];
    report.table(out, "kms.csv", &header, &rows)
}

pub fn modular(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let seed = exp.seed()?;
    let tol = exp.tolerances().modular;
    let times = &exp.config.run.times;
    let (mut rows, mut cells) = (Vec::new(), Vec::new());
    for (ci, ctx) in exp.contexts.iter().enumerate() {
        let h = hamiltonian(exp, ctx)?;
        for (bi, &beta) in exp.betas.iter().enumerate() {
            let name = tag(ctx, beta);
            let rho = ThermalState::gibbs(&h, beta)?;
            let data = modular_data(&rho)?;
            let mut rng = stream(seed, (ci * exp.betas.len() + bi) as u64);
            let dim = ctx.fock_dim();
            let (mut flow, mut commutant) = (0.0f64, 0.0f64);
            for _ in 0..exp.config.run.pairs {
                let a = random_even(dim, &mut rng);
                let b = random_even(dim, &mut rng);
                for &t in times {
                    flow = flow.max(data.flow_residual(&h, beta, &a, t)?);
                }
                commutant = commutant.max(data.commutant_residual(&a, &b));
            }
            let (delta, jdj, involution) = (data.delta_residual(), data.jdj_residual(), data.involution_residual());
            let margin = data.separating_margin();
            report.at_most(format!("{name}: modular flow vs dynamics"), flow, tol);
            report.at_most(format!("{name}: Delta = D (x) D^-1"), delta, tol);
            report.at_most(format!("{name}: J Delta J = Delta^-1"), jdj, tol);
            report.at_most(format!("{name}: J^2 = 1"), involution, tol);
            report.at_most(format!("{name}: J pi(A) J commutes with pi(B)"), commutant, tol);
            report.above(format!("{name}: separating margin"), margin, 0.0);
            rows.push(vec![
                ctx.half_width().to_string(),
                num(beta),
                num(flow),
                num(delta),
                num(jdj),
                num(involution),
                num(commutant),
                num(margin),
            ]);
            cells.push(json!({
                "L": ctx.half_width(), "beta": beta, "times": times, "flow_residual": flow,
                "delta_residual": delta, "jdj_residual": jdj, "involution_residual": involution,
                "commutant_residual": commutant, "separating_margin": margin, "min_eigenvalue": rho.min_eigenvalue(),
            }));
        }
    }
    report.result("cells", cells)?;
    let header = ["L", "beta", "flow", "delta", "jdj", "involution", "commutant", "separating_margin"];
    report.table(out, "modular.csv", &header, &rows)
}
