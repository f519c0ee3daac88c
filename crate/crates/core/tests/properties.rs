//! Randomized invariants across the algebra, interaction, state, game and
//! dynamics layers.

use mflab_core::car::{gauge_automorphism, space_average, translate};
use mflab_core::dynamics::{
    heisenberg_lr, nonautonomous_propagator, product_state, selfconsistent_flow, FlowOptions, LongRangeDynamics,
    PropagatorOptions,
};
use mflab_core::game::value_gradient;
use mflab_core::interaction::{derivation, local_hamiltonian};
use mflab_core::linalg;
use mflab_core::longrange::{long_range_hamiltonian, space_avg_terms};
use mflab_core::rng::stream;
use mflab_core::thermo::random_state;
use mflab_core::{
    c64, models, AnchorTerm, DecayFunction, FockContext, Interaction, LocalOperator, LongRangeModel, LongRangeTerm,
    Matrix, Parity, SolverOptions, ThermalState, ThermoGame,
};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::TAU;

fn spinful(l: usize) -> FockContext {
    FockContext::new(1, l, &["up", "dn"]).unwrap()
}

fn random_matrix(dim: usize, rng: &mut impl Rng, even_only: bool) -> Matrix {
    Matrix::from_fn(dim, dim, |i, j| {
        if even_only && (i.count_ones() + j.count_ones()) % 2 == 1 {
            c64::new(0.0, 0.0)
        } else {
            c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }
    })
}

fn random_op(ctx: &FockContext, seed: u64, index: u64) -> LocalOperator {
    let mut rng = stream(seed, index);
    LocalOperator::from_matrix(ctx, random_matrix(ctx.fock_dim(), &mut rng, false)).unwrap()
}

fn dist(a: &Matrix, b: &Matrix) -> f64 {
    linalg::max_abs(&(a - b))
}

/// Random hermitian interaction of range at most `range` on a spinless chain.
fn random_interaction(seed: u64, range: i32) -> Interaction {
    let mut rng = stream(seed, 7);
    let mut terms = Vec::new();
    let mu: f64 = rng.gen_range(-1.0..1.0);
    terms.push(AnchorTerm::parse(vec![vec![0]], "adag(0;s) a(0;s)", c64::new(mu, 0.0)).unwrap());
    for r in 1..=range {
        let t = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let hop = AnchorTerm::parse(vec![vec![0], vec![r]], &format!("adag(0;s) a({r};s)"), t).unwrap();
        terms.push(hop.adjoint());
        terms.push(hop);
        let v: f64 = rng.gen_range(-1.0..1.0);
        let op = format!("adag(0;s) a(0;s) adag({r};s) a({r};s)");
        terms.push(AnchorTerm::parse(vec![vec![0], vec![r]], &op, c64::new(v, 0.0)).unwrap());
    }
    Interaction::new(1, terms).unwrap()
}

fn conj_pair(z: c64) -> Vec<c64> {
    vec![z, z.conj()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_automorphism_laws(seed in any::<u64>(), theta in -TAU..TAU, lambda in -2.0f64..2.0) {
        let ctx = spinful(1);
        let (a, b) = (random_op(&ctx, seed, 0), random_op(&ctx, seed, 1));
        let g = |x: &LocalOperator| gauge_automorphism(theta, x);
        let s = c64::new(lambda, 0.5);
        prop_assert!(dist(g(&(&a + &b)).matrix(), (&g(&a) + &g(&b)).matrix()) <= 1e-11);
        prop_assert!(dist(g(&a.scale(s)).matrix(), g(&a).scale(s).matrix()) <= 1e-11);
        prop_assert!(dist(g(&(&a * &b)).matrix(), (&g(&a) * &g(&b)).matrix()) <= 1e-11);
        prop_assert!(dist(g(&a.adjoint()).matrix(), g(&a).adjoint().matrix()) <= 1e-11);
        prop_assert!(dist(gauge_automorphism(theta + TAU, &a).matrix(), g(&a).matrix()) <= 1e-11);
    }

    #[test]
    fn translation_automorphism_laws(seed in any::<u64>(), x in -3i32..=3) {
        let ctx = spinful(1);
        let (a, b) = (random_op(&ctx, seed, 0), random_op(&ctx, seed, 1));
        let t = |op: &LocalOperator| translate(&ctx, op, &[x]);
        prop_assert!(dist(t(&(&a + &b)).matrix(), (&t(&a) + &t(&b)).matrix()) <= 1e-11);
        prop_assert!(dist(t(&(&a * &b)).matrix(), (&t(&a) * &t(&b)).matrix()) <= 1e-11);
        prop_assert!(dist(t(&a.adjoint()).matrix(), t(&a).adjoint().matrix()) <= 1e-11);
        let period = ctx.period();
        prop_assert!(dist(translate(&ctx, &a, &[x + period]).matrix(), t(&a).matrix()) <= 1e-11);
    }

    #[test]
    fn parity_algebra(seed in any::<u64>()) {
        let ctx = spinful(1);
        let mut rng = stream(seed, 3);
        let even = LocalOperator::from_matrix(&ctx, random_matrix(ctx.fock_dim(), &mut rng, true)).unwrap();
        let odd_matrix = Matrix::from_fn(ctx.fock_dim(), ctx.fock_dim(), |i, j| {
            if (i.count_ones() + j.count_ones()) % 2 == 1 {
                c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let odd = LocalOperator::from_matrix(&ctx, odd_matrix).unwrap();
        prop_assert_eq!(even.parity(), Parity::Even);
        prop_assert_eq!(odd.parity(), Parity::Odd);
        prop_assert_eq!((&even * &even).parity(), Parity::Even);
        prop_assert_eq!((&odd * &odd).parity(), Parity::Even);
        prop_assert_eq!((&even * &odd).parity(), Parity::Odd);
        let recomputed = LocalOperator::from_matrix(&ctx, (&even * &odd).into_matrix()).unwrap();
        prop_assert_eq!(recomputed.parity(), Parity::Odd);
    }

    #[test]
    fn space_average_contracts(seed in any::<u64>(), ell in 0usize..=1) {
        let ctx = spinful(1);
        let a = random_op(&ctx, seed, 0);
        let avg = space_average(&ctx, &a, ell).unwrap();
        prop_assert!(avg.norm() <= a.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn derivation_leibniz(seed in any::<u64>()) {
        let ctx = spinful(1);
        let phi = models::hopping(1, 1.0, &["up", "dn"]).add(&models::hubbard(1, 2.0, "up", "dn"));
        let (a, b) = (random_op(&ctx, seed, 0), random_op(&ctx, seed, 1));
        let lhs = derivation(&phi, &ctx, &(&a * &b)).unwrap();
        let da = derivation(&phi, &ctx, &a).unwrap();
        let db = derivation(&phi, &ctx, &b).unwrap();
        let rhs = &(&da * &b) + &(&a * &db);
        prop_assert!(dist(lhs.matrix(), rhs.matrix()) <= 1e-11 * (1.0 + lhs.norm()));
    }

    #[test]
    fn interaction_norm_is_a_norm(s1 in any::<u64>(), s2 in any::<u64>(), lambda in -3.0f64..3.0) {
        let f = DecayFunction::default();
        let (a, b) = (random_interaction(s1, 2), random_interaction(s2, 1));
        let (na, nb) = (a.norm(&f), b.norm(&f));
        prop_assert!(a.add(&b).norm(&f) <= (na + nb) * (1.0 + 1e-12));
        let scaled = a.scale(c64::new(lambda, 0.0)).norm(&f);
        prop_assert!((scaled - lambda.abs() * na).abs() <= 1e-12 * (1.0 + na));
    }

    #[test]
    fn hamiltonian_translation_covariant(seed in any::<u64>(), x in -2i32..=2) {
        let ctx = FockContext::new(1, 2, &["s"]).unwrap();
        let h = local_hamiltonian(&random_interaction(seed, 2), &ctx).unwrap();
        prop_assert!(dist(translate(&ctx, &h, &[x]).matrix(), h.matrix()) <= 1e-12);
    }

    #[test]
    fn entropy_within_bounds(seed in any::<u64>()) {
        let ctx = spinful(1);
        let rho = random_state(ctx.fock_dim(), &mut stream(seed, 0));
        let s = rho.entropy();
        prop_assert!(s >= -1e-12);
        prop_assert!(s <= ctx.modes() as f64 * std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn gibbs_state_is_stationary_and_faithful(seed in any::<u64>(), beta in 0.1f64..5.0) {
        let ctx = spinful(1);
        let phi = models::hopping(1, 1.0, &["up", "dn"]).add(&models::hubbard(1, 2.0, "up", "dn"));
        let h = local_hamiltonian(&phi, &ctx).unwrap().into_matrix();
        let rho = ThermalState::gibbs(&h, beta).unwrap();
        prop_assert!(rho.min_eigenvalue() > 0.0);
        let dynamics = LongRangeDynamics::from_hamiltonian(&h).unwrap();
        let a = random_op(&ctx, seed, 0);
        let base = rho.expect_matrix(a.matrix());
        for t in [0.1, 1.0, 10.0] {
            let moved = rho.expect_matrix(&dynamics.observable(a.matrix(), t));
            prop_assert!((moved - base).norm() <= 1e-10);
        }
    }

    #[test]
    fn space_average_terms_nonnegative(seed in any::<u64>()) {
        let ctx = spinful(1);
        let m = models::bcs_with_repulsion(1, 0.2, 1.0, 0.5, "up", "dn");
        let rho = random_state(ctx.fock_dim(), &mut stream(seed, 0));
        for ell in 0..=1 {
            for term in space_avg_terms(&m, &rho, ell, &ctx).unwrap() {
                prop_assert!(term.value >= -1e-12);
                prop_assert!(term.value <= term.upper + 1e-12);
            }
        }
    }

    #[test]
    fn mean_field_part_additive(g1 in 0.1f64..2.0, g2 in 0.1f64..2.0) {
        let ctx = spinful(1);
        let density = models::density(1, "up");
        let build = |gamma: f64| {
            let terms = vec![LongRangeTerm { psi: density.clone(), gamma }];
            LongRangeModel::new(Interaction::zero(1), terms, DecayFunction::default()).unwrap()
        };
        let h = |gamma: f64| long_range_hamiltonian(&build(gamma), &ctx).unwrap().into_matrix();
        let sum = h(g1) + h(g2);
        let joint = h(g1 + g2);
        prop_assert!(dist(&joint, &sum) <= 1e-12 * (1.0 + linalg::max_abs(&joint)));
        prop_assert!(linalg::hermiticity_residual(&joint) <= 1e-12);
    }

    #[test]
    fn heisenberg_group_law(seed in any::<u64>(), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let ctx = spinful(1);
        let m = models::bcs(1, 0.2, 1.0, "up", "dn");
        let (a, b) = (random_op(&ctx, seed, 0), random_op(&ctx, seed, 1));
        let ts = heisenberg_lr(&m, &ctx, &a, s).unwrap();
        let composed = heisenberg_lr(&m, &ctx, &ts, t).unwrap();
        let direct = heisenberg_lr(&m, &ctx, &a, s + t).unwrap();
        prop_assert!(dist(composed.matrix(), direct.matrix()) <= 1e-10);
        let ab = heisenberg_lr(&m, &ctx, &(&a * &b), t).unwrap();
        let tb = heisenberg_lr(&m, &ctx, &b, t).unwrap();
        let product = &heisenberg_lr(&m, &ctx, &a, t).unwrap() * &tb;
        prop_assert!(dist(ab.matrix(), product.matrix()) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn local_hamiltonian_norm_bound(seed in any::<u64>(), range in 1i32..=2) {
        let ctx = FockContext::new(1, 2, &["s"]).unwrap();
        let f = DecayFunction::default();
        let phi = random_interaction(seed, range);
        let h = local_hamiltonian(&phi, &ctx).unwrap();
        let bound = ctx.volume() as f64 * f.l1_norm(1, phi.range()).value * phi.norm(&f);
        prop_assert!(linalg::op_norm(h.matrix()) <= bound * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn game_value_gauge_invariant(r in 0.0f64..1.5, phase in 0.0..TAU, theta in 0.0..TAU) {
        let game = ThermoGame::new(models::bcs(1, 0.2, 1.0, "up", "dn"), spinful(1), 4.0).unwrap();
        let charges = game.model().charges().unwrap();
        let c = conj_pair(c64::from_polar(r, phase));
        let rotated: Vec<c64> = c.iter().zip(&charges).map(|(z, &q)| z * c64::cis(q as f64 * theta)).collect();
        let (v0, v1) = (game.value(&c).unwrap(), game.value(&rotated).unwrap());
        prop_assert!((v0 - v1).abs() <= 1e-10);
    }

    #[test]
    fn decision_rule_is_optimal(r in 0.0f64..1.0, phase in 0.0..TAU, seed in any::<u64>()) {
        let model = models::bcs_with_repulsion(1, 0.2, 1.0, 0.5, "up", "dn");
        let game = ThermoGame::new(model, spinful(1), 4.0).unwrap();
        let c_minus = conj_pair(c64::from_polar(r, phase));
        let opts = SolverOptions::default();
        let best = game.decision_rule(&c_minus, &opts).unwrap();
        let v_best = game.game_value(&c_minus, &best.c_plus).unwrap();
        let mut rng = stream(seed, 0);
        for _ in 0..20 {
            let c_plus = vec![c64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-0.5..0.5))];
            prop_assert!(v_best >= game.game_value(&c_minus, &c_plus).unwrap() - 1e-10);
        }
    }

    #[test]
    fn approx_pressure_convex_on_lines(a in -1.0f64..1.0, b in -1.0f64..1.0, t in 0.0f64..1.0) {
        let game = ThermoGame::new(models::bcs(1, 0.2, 1.0, "up", "dn"), spinful(1), 4.0).unwrap();
        let p = |x: f64| game.approx_pressure(&conj_pair(c64::new(x, 0.0))).unwrap();
        let mid = t * a + (1.0 - t) * b;
        prop_assert!(p(mid) <= t * p(a) + (1.0 - t) * p(b) + 1e-12);
    }
}

#[test]
fn gap_solutions_are_stationary() {
    for model in [models::bcs(1, 0.2, 1.0, "up", "dn"), models::bcs_with_repulsion(1, 0.2, 1.0, 0.5, "up", "dn")] {
        let game = ThermoGame::new(model, spinful(1), 4.0).unwrap();
        let solutions = game.gap_fixed_point(&SolverOptions::default()).unwrap();
        assert!(!solutions.is_empty());
        for s in &solutions {
            let grad = value_gradient(&game, &s.d.c, 1e-5).unwrap();
            let worst = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            assert!(worst <= 1e-5, "gradient {worst:e} at {:?}", s.d.c);
        }
    }
}

#[test]
fn purely_attractive_inner_stage_is_noop() {
    let game = ThermoGame::new(models::bcs(1, 0.2, 1.0, "up", "dn"), spinful(1), 4.0).unwrap();
    assert!(game.split().is_purely_attractive());
    let c_minus = conj_pair(c64::new(0.3, 0.1));
    let outcome = game.decision_rule(&c_minus, &SolverOptions::default()).unwrap();
    assert!(outcome.c_plus.is_empty());
    assert_eq!(outcome.iterations, 0);
    assert_eq!(game.game_value(&c_minus, &[]).unwrap(), game.value(&c_minus).unwrap());
}

#[test]
fn propagator_cocycle_and_unitarity() {
    let ctx = spinful(1);
    let path = |t: f64| {
        models::hopping(1, 1.0 + 0.5 * t.sin(), &["up", "dn"]).add(&models::hubbard(1, 2.0 * t.cos(), "up", "dn"))
    };
    let opts = PropagatorOptions::default();
    let u01 = nonautonomous_propagator(path, &ctx, 0.0, 1.0, &opts).unwrap();
    let u0h = nonautonomous_propagator(path, &ctx, 0.0, 0.5, &opts).unwrap();
    let uh1 = nonautonomous_propagator(path, &ctx, 0.5, 1.0, &opts).unwrap();
    assert!(dist(&u01.unitary, &(&uh1.unitary * &u0h.unitary)) <= 1e-8);
    for u in [&u01, &u0h, &uh1] {
        assert!(u.unitarity_residual() <= 1e-8);
    }
}

fn flow_options() -> FlowOptions {
    FlowOptions { dt: 1e-2, t_end: 1.0, record_interval: 0.5, ..FlowOptions::default() }
}

#[test]
fn flow_conserves_purity_of_pure_states() {
    let ctx = spinful(1);
    let game = ThermoGame::new(models::bcs(1, 0.2, 1.0, "up", "dn"), ctx.clone(), 4.0).unwrap();
    let rho = product_state(&ctx, &models::paired_site_density(0.6, 0.0)).unwrap();
    let traj = selfconsistent_flow(game.sparse(), rho.density(), &flow_options(), &[]).unwrap();
    assert!((traj.purity[0] - 1.0).abs() <= 1e-10);
    assert!(traj.purity_drift() <= 1e-8, "purity drift {:e}", traj.purity_drift());
    assert!(traj.trace_drift() <= 1e-8);
    assert!(traj.energy_drift() <= 1e-8);
}

#[test]
fn flow_is_gauge_covariant() {
    let ctx = spinful(1);
    let game = ThermoGame::new(models::bcs(1, 0.2, 1.0, "up", "dn"), ctx.clone(), 4.0).unwrap();
    let rho = product_state(&ctx, &models::paired_site_density(0.6, 0.3)).unwrap();
    let theta = 0.7;
    let rotate =
        |d: &Matrix| gauge_automorphism(theta, &LocalOperator::from_matrix(&ctx, d.clone()).unwrap()).into_matrix();
    let opts = flow_options();
    let plain = selfconsistent_flow(game.sparse(), rho.density(), &opts, &[]).unwrap();
    let turned = selfconsistent_flow(game.sparse(), &rotate(rho.density()), &opts, &[]).unwrap();
    assert!(dist(&turned.final_state, &rotate(&plain.final_state)) <= 1e-7);
}
