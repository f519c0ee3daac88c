//! Ergodicity, gauge-twist and validation runners.

use std::path::Path;

use anyhow::Result;
use mflab_core::car::{ergodicity_gap, gauge_twist_demo};
use mflab_core::interaction::energy_per_site_element;
use mflab_core::{c64, FockContext};
use serde_json::json;

use super::{cx, initial_state, initial_uses_beta, max_increase, num};
use crate::config::Experiment;
use crate::report::Report;

pub fn ergodicity(exp: &Experiment, report: &mut Report, out: &Path) -> Result<()> {
    let betas = if initial_uses_beta(exp) { exp.betas.clone() } else { exp.betas[..1].to_vec() };
    let (mut rows, mut cells) = (Vec::new(), Vec::new());
    for ctx in &exp.contexts {
        let ells = exp.config.run.ell.clone().unwrap_or_else(|| (0..=ctx.half_width()).collect());
        let a = energy_per_site_element(&exp.observable, ctx)?;
        for &beta in &betas {
            let rho = initial_state(exp, ctx, beta)?;
            let gaps =
                ells.iter().map(|&l| ergodicity_gap(ctx, &rho, &a, l)).collect::<mflab_core::Result<Vec<_>>>()?;
            let name = format!("L={}", ctx.half_width());
            if gaps.len() > 1 {
                report.at_most(format!("{name} beta={beta}: gap increase over ell"), max_increase(&gaps), 1e-12);
            }
            for (l, g) in ells.iter().zip(&gaps) {
                rows.push(vec![ctx.half_width().to_string(), num(beta), l.to_string(), num(*g)]);
            }
            let ratio = match (gaps.first(), gaps.last()) {
                (Some(&g0), Some(&g1)) if g0 > 0.0 => Some(g1 / g0),
                _ => None,
            };
            cells.push(json!({ "L": ctx.half_width(), "beta": beta, "ell": ells, "gaps": gaps, "ratio": ratio }));
        }
    }
    report.result("cells", cells)?;
    report.table(out, "ergodicity.csv", &["L", "beta", "ell", "gap"], &rows)
}

pub fn gauge_twist(exp: &Experiment, report: &mut Report) -> Result<()> {
    let l = &exp.config.lattice;
    let spins: Vec<&str> = l.spins.iter().map(String::as_str).collect();
    let ctx = FockContext::new(l.d, 0, &spins)?;
    let demo = gauge_twist_demo(&ctx)?;
    let tol = exp.tolerances().twist;
    let quartic = demo.table[0].1;
    let (r1, r2) = demo.pair_ratios;
    report.above("|rho0(A)| for the quartic monomial", quartic.norm(), tol);
    report.at_most("rho0(A) + rho_j(A) for both twists", demo.sign_residual, tol);
    report.at_most("pair ratio of twist 1 minus i", (r1 - c64::new(0.0, 1.0)).norm(), tol);
    report.at_most("pair ratio of twist 2 plus i", (r2 + c64::new(0.0, 1.0)).norm(), tol);
    report.above("twists differ on the pair monomial", (r1 - r2).norm(), tol);
    let table: Vec<_> = demo
        .table
        .iter()
        .map(|(label, a, b, c)| json!({ "observable": label, "rho0": cx(*a), "rho1": cx(*b), "rho2": cx(*c) }))
        .collect();
    report.result("theta", [demo.theta1, demo.theta2])?;
    report.result("table", table)?;
    report.result("sign_residual", demo.sign_residual)?;
    report.result("pair_ratios", [cx(r1), cx(r2)])?;
    report.result("pair_phases_over_pi", [r1.arg() / std::f64::consts::PI, r2.arg() / std::f64::consts::PI])?;
    Ok(())
}

pub fn validate(exp: &Experiment, report: &mut Report) -> Result<()> {
    let m = &exp.model;
    let split = m.hahn_split();
    let terms: Vec<_> = m
        .terms()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            json!({
                "label": t.psi.label, "weight": t.gamma, "partner": m.partner(k),
                "norm": t.psi.norm(&exp.decay), "psi": t.psi.to_specs(),
            })
        })
        .collect();
    let range = m.terms().iter().map(|t| t.psi.range()).chain([m.base().range()]).max().unwrap_or(0);
    let l1 = exp.decay.l1_norm(exp.config.lattice.d, range);
    let windows: Vec<_> = exp
        .contexts
        .iter()
        .map(|c| json!({ "L": c.half_width(), "volume": c.volume(), "modes": c.modes(), "fock_dim": c.fock_dim() }))
        .collect();
    report.result("base", m.base().to_specs())?;
    report.result("base_norm", m.base().norm(&exp.decay))?;
    report.result("terms", terms)?;
    report.result("attractive", &split.attractive)?;
    report.result("repulsive", &split.repulsive)?;
    report.result("model_norm", m.norm())?;
    report.result("charges", m.charges())?;
    report.result("decay_l1", json!({ "value": l1.value, "radius": l1.radius, "tail_bound": l1.tail_bound }))?;
    report.result("windows", windows)?;
    Ok(())
}
