//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mflab_core::car::{annihilation, annihilation_mode, creation, ergodicity_gap, gauge_twist_demo};
use mflab_core::dynamics::{
    exact_stationarity_deviation, limit_agreement, product_state, selfconsistent_flow, stationarity_check, FlowOptions,
    StateRecipe,
};
use mflab_core::game::{Branch, GridSpec};
use mflab_core::interaction::local_hamiltonian;
use mflab_core::longrange::{lr_free_energy, pressure_lr};
use mflab_core::rng::stream;
use mflab_core::thermo::{
    free_energy_density, gibbs_variational_check, kms_boundary_residual, kms_smeared_residual, modular_data, pressure,
    variational_check_of,
};
use mflab_core::{
    c64, linalg, models, FockContext, Interaction, LocalOperator, LongRangeModel, Matrix, SolverOptions, ThermalState,
    ThermoGame,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn spinful(l: usize) -> FockContext {
    FockContext::new(1, l, &["up", "dn"]).unwrap()
}

fn random_even(ctx: &FockContext, rng: &mut impl Rng) -> LocalOperator {
    let d = ctx.fock_dim();
    let m = Matrix::from_fn(d, d, |i, j| {
        if (i.count_ones() + j.count_ones()) % 2 == 0 {
            c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            c64::new(0.0, 0.0)
        }
    });
    LocalOperator::from_matrix(ctx, m).unwrap()
}

fn hubbard_model() -> Interaction {
    let spins = ["up", "dn"];
    models::hopping(1, 1.0, &spins)
        .add(&models::hubbard(1, 2.0, "up", "dn"))
        .add(&models::chemical_potential(1, 0.3, &spins))
}

fn bcs() -> LongRangeModel {
    models::bcs(1, 0.2, 1.0, "up", "dn")
}

const BETA: f64 = 4.0;

fn sci(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", "))
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn car_suite() -> Outcome {
    let start = Instant::now();
    let ctx = spinful(1);
    let ops: Vec<LocalOperator> = (0..ctx.modes()).map(|m| annihilation_mode(&ctx, m)).collect();
    let id = linalg::identity(ctx.fock_dim());
    let mut worst = 0.0f64;
    for (i, ai) in ops.iter().enumerate() {
        for (j, aj) in ops.iter().enumerate() {
            worst = worst.max(linalg::op_norm(ai.anticommutator(aj).matrix()));
            let mut r = ai.anticommutator(&aj.adjoint()).into_matrix();
            if i == j {
                r -= &id;
            }
            worst = worst.max(linalg::op_norm(&r));
        }
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max anticommutator residual {worst:.2e}, {elapsed:.2?}"),
    )
}

fn free_pressure() -> Outcome {
    let mut worst = 0.0f64;
    for l in 0..=2 {
        let ctx = spinful(l);
        for beta in [0.5, 1.0, 2.0] {
            let expected = 2.0 * 2f64.ln() / beta;
            let p = pressure(&Interaction::zero(1), beta, &ctx).map_err(|e| e.to_string())?;
            let m = LongRangeModel::short_range(Interaction::zero(1)).unwrap();
            let q = pressure_lr(&m, beta, &ctx).map_err(|e| e.to_string())?;
            worst = worst.max((p - expected).abs()).max((q - expected).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max |P - |S| ln2/β| = {worst:.2e}"))
}

fn kms_exactness() -> Outcome {
    let ctx = spinful(1);
    let h = local_hamiltonian(&hubbard_model(), &ctx).unwrap();
    let rho = ThermalState::gibbs(h.matrix(), 1.0).unwrap();
    let tracial = ThermalState::tracial(ctx.fock_dim());
    let mut rng = stream(2024, 3);
    let (mut boundary, mut smeared, mut control) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let a = random_even(&ctx, &mut rng);
        let b = random_even(&ctx, &mut rng);
        boundary = boundary.max(kms_boundary_residual(&rho, &h, 1.0, &a, &b).unwrap().residual);
        smeared = smeared.max(kms_smeared_residual(&rho, &h, 1.0, &a, &b, 1.0).unwrap().residual);
        control = control.max(kms_boundary_residual(&tracial, &h, 1.0, &a, &b).unwrap().residual);
    }
    ensure(
        boundary <= 1e-10 && smeared <= 1e-9 && control > 1e-2,
        format!("boundary {boundary:.2e}, smeared {smeared:.2e}, tracial control {control:.2e}"),
    )
}

fn modular_corollary() -> Outcome {
    let start = Instant::now();
    let ctx = spinful(1);
    let beta = 1.0;
    let h = local_hamiltonian(&hubbard_model(), &ctx).unwrap();
    let rho = ThermalState::gibbs(h.matrix(), beta).unwrap();
    let data = modular_data(&rho).map_err(|e| e.to_string())?;
    let mut rng = stream(2024, 4);
    let mut flow = 0.0f64;
    let mut commutant = 0.0f64;
    for _ in 0..3 {
        let a = random_even(&ctx, &mut rng);
        let b = random_even(&ctx, &mut rng);
        for t in [0.1, 1.0] {
            flow = flow.max(data.flow_residual(h.matrix(), beta, a.matrix(), t).map_err(|e| e.to_string())?);
        }
        commutant = commutant.max(data.commutant_residual(a.matrix(), b.matrix()));
    }
    let jdj = data.jdj_residual();
    let elapsed = start.elapsed();
    ensure(
        flow <= 1e-8 && jdj <= 1e-8 && commutant <= 1e-8 && elapsed < Duration::from_secs(30),
        format!("flow {flow:.2e}, JΔJ-Δ⁻¹ {jdj:.2e}, commutant {commutant:.2e}, {elapsed:.2?}"),
    )
}

fn variational_principle() -> Outcome {
    let ctx = spinful(1);
    let mut rng = stream(2024, 5);
    let short = gibbs_variational_check(&hubbard_model(), 1.0, &ctx, 50, &mut rng).map_err(|e| e.to_string())?;
    let h = bcs().operators(&ctx).unwrap().hamiltonian();
    let long = variational_check_of(&h, BETA, ctx.volume(), 50, &mut rng).map_err(|e| e.to_string())?;
    ensure(
        short.passed() && long.passed(),
        format!(
            "short-range: identity {:.2e}, min excess {:.2e}; long-range: identity {:.2e}, min excess {:.2e}",
            short.identity_residual, short.min_excess, long.identity_residual, long.min_excess
        ),
    )
}

fn gap_oracle() -> Outcome {
    let start = Instant::now();
    let grid = GridSpec { radius: 2.0, step: 1e-2, phases: 8, max_cells: 200_000 };
    let mut lines = Vec::new();
    let mut ok = true;
    for l in [1, 2] {
        let game = ThermoGame::new(bcs(), spinful(l), BETA).unwrap();
        let opts = SolverOptions::default();
        let sols = game.gap_fixed_point(&opts).map_err(|e| e.to_string())?;
        let set = game.conservative_set(&opts).map_err(|e| e.to_string())?;
        let oracle = game.brute_force_oracle(&grid).map_err(|e| e.to_string())?;
        let radii = oracle.stationary_radii();
        let branches: Vec<f64> = sols.iter().map(|s| s.d.c[0].norm()).collect();
        let near = |r: f64, set: &[f64]| set.iter().any(|x| (x - r).abs() <= grid.step);
        let matched = branches.iter().all(|&b| near(b, &radii)) && radii.iter().all(|&r| near(r, &branches));
        let value_gap = (set.min_value - oracle.minmax_value).abs();
        ok &= matched && value_gap <= 1e-3;
        lines.push(format!("L={l}: branches {branches:.4?} vs oracle {radii:.4?}, |Δminmax| {value_gap:.2e}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    ensure(ok, format!("{}; {elapsed:.2?}", lines.join("; ")))
}

fn minmax_trend() -> Outcome {
    let mut residuals = Vec::new();
    for l in 0..=2 {
        let game = ThermoGame::new(bcs(), spinful(l), BETA).unwrap();
        let report = game.minmax_pressure(&SolverOptions::default()).map_err(|e| e.to_string())?;
        residuals.push((report.residual, report.residual * report.volume as f64));
    }
    let decreasing = residuals.windows(2).all(|w| w[1].0 < w[0].0);
    let scaled: Vec<f64> = residuals.iter().map(|r| r.1).collect();
    let spread = scaled.iter().copied().fold(0.0, f64::max) / scaled.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(
        decreasing && spread <= 3.0,
        format!(
            "residuals {}, residual·|Λ| {} (spread {spread:.2})",
            sci(&residuals.iter().map(|r| r.0).collect::<Vec<_>>()),
            sci(&scaled)
        ),
    )
}

fn paired_branch(game: &ThermoGame) -> Result<Vec<c64>, String> {
    let sols = game.gap_fixed_point(&SolverOptions::default()).map_err(|e| e.to_string())?;
    sols.into_iter().find(|s| s.branch == Branch::Ordered).map(|s| s.d.c).ok_or_else(|| "no paired branch".into())
}

fn stationarity() -> Outcome {
    let game1 = ThermoGame::new(bcs(), spinful(1), BETA).unwrap();
    let d1 = paired_branch(&game1)?;
    let report = stationarity_check(&game1, &d1, &FlowOptions::default(), &[1.0]).map_err(|e| e.to_string())?;
    let game2 = ThermoGame::new(bcs(), spinful(2), BETA).unwrap();
    let d2 = paired_branch(&game2)?;
    let exact2 = exact_stationarity_deviation(&game2, &d2, &[1.0]).map_err(|e| e.to_string())?;
    let (e1, e2) = (report.exact[0].1, exact2[0].1);
    ensure(
        report.selfconsistent <= 1e-6 && e2 < e1,
        format!("flow drift {:.2e}; exact deviation at t=1: L=1 {e1:.4e}, L=2 {e2:.4e}", report.selfconsistent),
    )
}

fn flow_conservation() -> Outcome {
    let ctx = spinful(1);
    let ops = bcs().operators(&ctx).unwrap().sparse();
    let rho = product_state(&ctx, &models::paired_site_density(0.6, 0.2)).unwrap();
    let opts = FlowOptions { dt: 1e-3, t_end: 10.0, ..FlowOptions::default() };
    let flow = selfconsistent_flow(&ops, rho.density(), &opts, &[]).map_err(|e| e.to_string())?;
    let (energy, trace) = (flow.energy_drift(), flow.trace_drift());
    ensure(
        energy <= 1e-8 && trace <= 1e-10,
        format!(
            "energy drift {energy:.2e}, trace drift {trace:.2e}, coefficient excursion {:.3}",
            flow.coefficient_drift()
        ),
    )
}

fn limit_trend() -> Outcome {
    let contexts: Vec<FockContext> = (0..=2).map(spinful).collect();
    let recipe = StateRecipe::Product(models::paired_site_density(0.6, 0.2));
    let observable = models::pair_annihilation(1, "up", "dn");
    let opts = FlowOptions { dt: 1e-2, step_tol: 1e-9, ..FlowOptions::default() };
    let rows = limit_agreement(&bcs(), &contexts, &recipe, &observable, 1.0, &opts).map_err(|e| e.to_string())?;
    let devs: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    ensure(devs.windows(2).all(|w| w[1] <= w[0]), format!("deviations at t=1 over L=0,1,2: {}", sci(&devs)))
}

fn degenerate_structures() -> Outcome {
    let opts = SolverOptions::default();
    let ctx = spinful(1);
    let repulsive = ThermoGame::new(models::density_repulsion(1, 0.2, 1.0, "up", "dn"), ctx.clone(), BETA).unwrap();
    let set = repulsive.conservative_set(&opts).map_err(|e| e.to_string())?;
    let rep_ok = set.members.len() == 1 && set.members[0].d_minus.is_empty();

    let attractive = ThermoGame::new(bcs(), ctx.clone(), BETA).unwrap();
    let rule = attractive.decision_rule(&[c64::new(0.3, 0.0), c64::new(0.3, 0.0)], &opts).map_err(|e| e.to_string())?;
    let att_ok = rule.c_plus.is_empty();

    let phi = hubbard_model();
    let m = LongRangeModel::short_range(phi.clone()).unwrap();
    let game = ThermoGame::new(m.clone(), ctx.clone(), 1.0).unwrap();
    let direct = pressure(&phi, 1.0, &ctx).unwrap();
    let minmax = game.minmax_pressure(&opts).map_err(|e| e.to_string())?;
    let sols = game.gap_fixed_point(&opts).map_err(|e| e.to_string())?;
    let rho = ThermalState::gibbs(local_hamiltonian(&phi, &ctx).unwrap().matrix(), 1.0).unwrap();
    let f_short = free_energy_density(&rho, &phi, 1.0, &ctx).unwrap();
    let f_long = lr_free_energy(&m, &rho, 1.0, 1, &ctx).unwrap();
    let cset = game.conservative_set(&opts).unwrap();
    let k0_ok = pressure_lr(&m, 1.0, &ctx).unwrap() == direct
        && minmax.minmax == direct
        && minmax.direct == direct
        && sols.len() == 1
        && sols[0].pressure == direct
        && sols[0].branch == Branch::Trivial
        && f_short == f_long
        && game.bogoliubov_residual(&rho, &cset) == 0.0;
    ensure(
        rep_ok && att_ok && k0_ok,
        format!("repulsive C_m = {{0}}: {rep_ok}; attractive r₊ empty: {att_ok}; K=0 bit-identical: {k0_ok}"),
    )
}

fn ergodicity_trend() -> Outcome {
    let ctx = spinful(2);
    let rho = product_state(&ctx, &models::paired_site_density(0.6, 0.2)).unwrap();
    let n = &creation(&ctx, &[0], "up").unwrap() * &annihilation(&ctx, &[0], "up").unwrap();
    let g0 = ergodicity_gap(&ctx, &rho, &n, 0).map_err(|e| e.to_string())?;
    let g2 = ergodicity_gap(&ctx, &rho, &n, 2).map_err(|e| e.to_string())?;
    ensure(g2 <= g0 / 2.0, format!("gap ℓ=0 {g0:.4e}, ℓ=2 {g2:.4e}, ratio {:.4}", g2 / g0))
}

fn gauge_twist() -> Outcome {
    let ctx = FockContext::new(1, 0, &["s1", "s2", "s3", "s4"]).unwrap();
    let demo = gauge_twist_demo(&ctx).map_err(|e| e.to_string())?;
    let q = demo.table[0].1;
    let (r1, r2) = demo.pair_ratios;
    let phases_ok = (r1 - c64::new(0.0, 1.0)).norm() <= 1e-12 && (r2 - c64::new(0.0, -1.0)).norm() <= 1e-12;
    ensure(
        q.norm() > 1e-3 && demo.sign_residual <= 1e-12 && phases_ok,
        format!(
            "ρ̂₀(A) = {q:.4}, sign residual {:.2e}, pair phases {:.4}π / {:.4}π",
            demo.sign_residual,
            r1.arg() / std::f64::consts::PI,
            r2.arg() / std::f64::consts::PI
        ),
    )
}

fn kms_bogoliubov() -> Outcome {
    let game = ThermoGame::new(bcs(), spinful(1), BETA).unwrap();
    let opts = SolverOptions::default();
    let sols = game.gap_fixed_point(&opts).map_err(|e| e.to_string())?;
    let set = game.conservative_set(&opts).map_err(|e| e.to_string())?;
    let paired = sols.iter().find(|s| s.branch == Branch::Ordered).ok_or("no paired branch")?;
    let normal = sols.iter().find(|s| s.branch == Branch::Normal).ok_or("no normal branch")?;

    let rho = game.gibbs(&paired.d.c).unwrap();
    let kms = game.selfconsistent_kms_check(&rho, 20, 7).unwrap().max_boundary;
    let bog = game.bogoliubov_residual(&rho, &set);
    let good = kms <= 1e-9 && bog <= 1e-9;

    let rho_n = game.gibbs(&normal.d.c).unwrap();
    let kms_n = game.selfconsistent_kms_check(&rho_n, 20, 7).unwrap().max_boundary;
    let bog_n = game.bogoliubov_residual(&rho_n, &set);
    let k_not_b = kms_n <= 1e-9 && bog_n > 1e-6;

    let tracial = ThermalState::tracial(game.ctx().fock_dim());
    let kms_t = game.selfconsistent_kms_check(&tracial, 20, 7).unwrap().max_boundary;
    let not_k = kms_t > 1e-6;
    ensure(
        good && k_not_b && not_k,
        format!(
            "gap state KMS {kms:.2e} / Bogoliubov {bog:.2e}; normal branch KMS {kms_n:.2e} / Bogoliubov {bog_n:.3}; tracial KMS {kms_t:.3}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 14] = [
        ("CAR suite", car_suite),
        ("free pressure", free_pressure),
        ("KMS exactness", kms_exactness),
        ("modular corollary", modular_corollary),
        ("Gibbs variational principle", variational_principle),
        ("gap-oracle equivalence", gap_oracle),
        ("min-max vs direct pressure", minmax_trend),
        ("stationarity", stationarity),
        ("flow conservation", flow_conservation),
        ("limit agreement", limit_trend),
        ("degenerate structures", degenerate_structures),
        ("ergodicity trend", ergodicity_trend),
        ("gauge-twist demo", gauge_twist),
        ("self-consistent KMS and Bogoliubov", kms_bogoliubov),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{elapsed:.1?}]", i + 1),
            Err(msg) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{elapsed:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
