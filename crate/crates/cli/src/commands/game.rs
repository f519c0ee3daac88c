//! Gap equation, oracle surface and parameter sweep runners.

use std::path::Path;

use anyhow::Result;
use mflab_core::longrange::pressure_lr;
use mflab_core::{FockContext, ThermoGame};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{branch, cxs, num, tag};
use crate::config::{ConfigError, Experiment, SweepConfig};
use crate::report::Report;

pub fn gap(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let opts = exp.solver(exp.seed()?);
    let k = exp.model.len();
    let (mut rows, mut cells) = (Vec::new(), Vec::new());
    for ctx in &exp.contexts {
        for &beta in &exp.betas {
            let name = tag(ctx, beta);
            let game = ThermoGame::new(exp.model.clone(), ctx.clone(), beta)?;
            let solutions = game.gap_fixed_point(&opts)?;
            let set = game.conservative_set(&opts)?;
            let direct = pressure_lr(&exp.model, beta, ctx)?;
            let residual = (direct - set.game_pressure()).abs();
            report.above(format!("{name}: gap solutions found"), solutions.len() as f64, 0.0);
            for (i, s) in solutions.iter().enumerate() {
                report.at_most(format!("{name} solution {i}: gap residual"), s.residual, opts.tol);
                let mut row = vec![
                    ctx.half_width().to_string(),
                    ctx.volume().to_string(),
                    num(beta),
                    i.to_string(),
                    branch(s.branch).to_string(),
                    num(s.value),
                    num(s.pressure),
                    num(s.residual),
                ];
                for c in &s.d.c {
                    row.extend([num(c.norm()), num(c.re), num(c.im)]);
                }
                rows.push(row);
            }
            log::info!("{name}: {} solutions, min-max residual {residual:e}", solutions.len());
            cells.push(json!({
                "L": ctx.half_width(), "volume": ctx.volume(), "beta": beta,
                "solutions": solutions, "conservative_set": set,
                "game_pressure": set.game_pressure(), "direct_pressure": direct, "minmax_residual": residual,
            }));
        }
    }
    report.result("cells", cells)?;
    let mut header: Vec<String> =
        ["L", "volume", "beta", "solution", "branch", "value", "pressure", "residual"].map(String::from).to_vec();
    for j in 0..k {
        header.extend([format!("abs_c{j}"), format!("re_c{j}"), format!("im_c{j}")]);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    report.table(out, "gap.csv", &header, &rows)
}

pub fn surface(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let opts = exp.solver(exp.seed()?);
    let grid = exp.grid();
    let tol = exp.tolerances().oracle_value;
    let mut cells = Vec::new();
    for ctx in &exp.contexts {
        for (bi, &beta) in exp.betas.iter().enumerate() {
            let name = tag(ctx, beta);
            let game = ThermoGame::new(exp.model.clone(), ctx.clone(), beta)?;
            let oracle = game.brute_force_oracle(&grid)?;
            let set = game.conservative_set(&opts)?;
            let solutions = game.gap_fixed_point(&opts)?;
            let gap = (set.min_value - oracle.minmax_value).abs();
            report.at_most(format!("{name}: |solver min-max - oracle min-max|"), gap, tol);

            let file = format!("surface_L{}_b{bi}.csv", ctx.half_width());
            let mut header = vec!["cell".to_string()];
            for j in 0..oracle.amplitudes.len() {
                header.extend([format!("re_a{j}"), format!("im_a{j}")]);
            }
            header.push("value".into());
            let rows: Vec<Vec<String>> = oracle
                .values
                .iter()
                .enumerate()
                .map(|(cell, v)| {
                    let mut row = vec![cell.to_string()];
                    for (a, i) in oracle.amplitudes.iter().zip(oracle.cell_indices(cell)) {
                        row.extend([num(a.values[i].re), num(a.values[i].im)]);
                    }
                    row.push(num(*v));
                    row
                })
                .collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            report.table(out, &file, &header, &rows)?;
            log::info!("{name}: oracle min-max {}, solver {}", oracle.minmax_value, set.min_value);
            cells.push(json!({
                "L": ctx.half_width(), "beta": beta, "surface": file,
                "oracle_minmax": oracle.minmax_value, "oracle_maxmin": oracle.maxmin_value,
                "oracle_argminmax": cxs(&oracle.argminmax), "oracle_stationary_radii": oracle.stationary_radii(),
                "solver_minmax": set.min_value, "difference": gap, "step": oracle.step,
                "fixed_point_radii": solutions.iter().map(|s| s.d.c.first().map_or(0.0, |c| c.norm())).collect::<Vec<_>>(),
                "amplitudes": oracle.amplitudes.iter().map(|a| json!({
                    "term": a.term, "partner": a.partner, "attractive": a.attractive, "points": a.values.len(),
                })).collect::<Vec<_>>(),
            }));
        }
    }
    report.result("cells", cells)
}

/// One sweep cell, computed independently of the others.
struct SweepCell<'a> {
    ctx: &'a FockContext,
    beta: f64,
    coupling: usize,
}

pub fn sweep(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let cfg = exp.config.sweep.clone().unwrap_or_default();
    let SweepConfig { beta, coupling, max_cells } = cfg;
    let betas = beta.unwrap_or_else(|| exp.betas.clone());
    let count = exp.contexts.len() * betas.len() * coupling.len();
    if count > max_cells {
        return Err(
            ConfigError::new("sweep", "grid_too_large", format!("grid has {count} cells, cap is {max_cells}")).into()
        );
    }
    let seed = exp.seed()?;
    let opts = exp.solver(seed);
    let models = coupling.iter().map(|&g| exp.scaled_model(g)).collect::<Result<Vec<_>, _>>()?;
    let mut cells = Vec::with_capacity(count);
    for ctx in &exp.contexts {
        for &beta in &betas {
            for ci in 0..coupling.len() {
                cells.push(SweepCell { ctx, beta, coupling: ci });
            }
        }
    }
    let results: Vec<Result<(Vec<String>, Value)>> = cells
        .par_iter()
        .map(|cell| {
            let model = &models[cell.coupling];
            let game = ThermoGame::new(model.clone(), cell.ctx.clone(), cell.beta)?;
            let set = game.conservative_set(&opts)?;
            let direct = pressure_lr(model, cell.beta, cell.ctx)?;
            let residual = (direct - set.game_pressure()).abs();
            let d = set.members.first().map(|m| m.d.clone()).unwrap_or_default();
            let g = coupling[cell.coupling];
            let mut row = vec![
                cell.ctx.half_width().to_string(),
                num(cell.beta),
                num(g),
                num(direct),
                num(set.game_pressure()),
                num(residual),
                set.members.len().to_string(),
            ];
            row.extend(d.iter().map(|c| num(c.norm())));
            let value = json!({
                "L": cell.ctx.half_width(), "beta": cell.beta, "coupling": g,
                "direct_pressure": direct, "game_pressure": set.game_pressure(), "minmax_residual": residual,
                "members": set.members.len(), "minimizer": cxs(&d),
            });
            Ok((row, value))
        })
        .collect();
    let (mut rows, mut values) = (Vec::with_capacity(count), Vec::with_capacity(count));
    for r in results {
        let (row, value) = r?;
        rows.push(row);
        values.push(value);
    }
    report.result("cells", values)?;
    let mut header: Vec<String> =
        ["L", "beta", "coupling", "direct_pressure", "game_pressure", "minmax_residual", "members"]
            .map(String::from)
            .to_vec();
    header.extend((0..exp.model.len()).map(|j| format!("abs_c{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    report.table(out, "sweep.csv", &header, &rows)
}
