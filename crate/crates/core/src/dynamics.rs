//! Finite-volume dynamics of long-range models.
//!
//! Three evolutions are provided: the exact Heisenberg dynamics generated by
//! `U_L^m`, propagators of time-dependent short-range Hamiltonians, and the
//! self-consistent mean-field flow `Ḋ = -i[U_L^{Φ_m(c(D))}, D]` with
//! `c_k(D) = Tr(D U_L^{Ψ_k})/|Λ_L|`.

use std::io::Write;

use serde::Serialize;

use crate::car::{FockContext, LocalOperator};
use crate::error::{Error, Result};
use crate::game::ThermoGame;
use crate::interaction::{energy_per_site_element, local_hamiltonian, Interaction};
use crate::linalg::{self, c64, serde_complex, Csr, Matrix, Spectrum, I, ZERO};
use crate::longrange::{LongRangeModel, SparseOperators};
use crate::thermo::ThermalState;

/// The exact dynamics `τ_t^{(L,m)}` of a long-range model on one window.
#[derive(Debug, Clone)]
pub struct LongRangeDynamics {
    spectrum: Spectrum,
}

impl LongRangeDynamics {
    pub fn new(m: &LongRangeModel, ctx: &FockContext) -> Result<Self> {
        Ok(Self { spectrum: Spectrum::new(&m.operators(ctx)?.hamiltonian())? })
    }

    /// Dynamics generated by an arbitrary Hermitian matrix.
    pub fn from_hamiltonian(h: &Matrix) -> Result<Self> {
        Ok(Self { spectrum: Spectrum::new(h)? })
    }

    /// `e^{itH} A e^{-itH}`.
    pub fn observable(&self, a: &Matrix, t: f64) -> Matrix {
        self.spectrum.heisenberg(a, t)
    }

    /// `e^{-itH} D e^{itH}`, so that `Tr(D_t A) = Tr(D τ_t(A))`.
    pub fn state(&self, d: &Matrix, t: f64) -> Matrix {
        self.spectrum.heisenberg(d, -t)
    }
}

/// `τ_t^{(L,m)}(A) = e^{itU_L^m} A e^{-itU_L^m}`.
pub fn heisenberg_lr(m: &LongRangeModel, ctx: &FockContext, a: &LocalOperator, t: f64) -> Result<LocalOperator> {
    if a.dim() != ctx.fock_dim() {
        return Err(Error::ShapeMismatch { left: a.dim(), right: ctx.fock_dim() });
    }
    let dynamics = LongRangeDynamics::new(m, ctx)?;
    LocalOperator::from_matrix(ctx, dynamics.observable(a.matrix(), t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions {
    pub dt: f64,
    /// Largest `max|W*W - 1|` accepted before re-unitarization.
    pub unitarity_tol: f64,
    pub max_halvings: usize,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self { dt: 1e-2, unitarity_tol: 1e-8, max_halvings: 12 }
    }
}

/// The unitary `W(t,s)` with `∂_t W = -iH(t)W`, `W(s,s) = 1`, so that
/// `τ_{t,s}(A) = W* A W` solves `∂_t τ_{t,s} = τ_{t,s} ∘ δ^{H(t)}`.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub unitary: Matrix,
    pub s: f64,
    pub t: f64,
    pub steps: usize,
    pub halvings: usize,
    /// Largest unitarity defect seen before re-unitarization.
    pub max_defect: f64,
}

impl Propagator {
    /// `τ_{t,s}(A) = W* A W`.
    pub fn apply(&self, a: &Matrix) -> Matrix {
        self.unitary.adjoint() * a * &self.unitary
    }

    /// `‖W*W - 1‖` entrywise.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.unitary.nrows();
        linalg::max_abs(&(self.unitary.adjoint() * &self.unitary - linalg::identity(n)))
    }
}

/// RK4 on `Ẇ = -iH(t)W` with re-unitarization after every step. A step whose
/// unitarity defect exceeds the tolerance is retried with half the step.
pub fn propagate(
    h: impl Fn(f64) -> Result<Matrix>,
    dim: usize,
    s: f64,
    t: f64,
    opts: &PropagatorOptions,
) -> Result<Propagator> {
    if opts.dt.is_nan() || opts.dt <= 0.0 {
        return Err(Error::InvalidParameter(format!("time step {} must be positive", opts.dt)));
    }
    let mut w = linalg::identity(dim);
    let span = t - s;
    let n_steps = (span.abs() / opts.dt).ceil() as usize;
    let (mut steps, mut halvings, mut max_defect) = (0, 0, 0.0f64);
    let rhs = |time: f64, x: &Matrix| -> Result<Matrix> { Ok(linalg::scale(&(h(time)? * x), -I)) };
    for step in 0..n_steps {
        let t0 = s + span * step as f64 / n_steps as f64;
        let t1 = s + span * (step + 1) as f64 / n_steps as f64;
        let mut level = 0;
        loop {
            let sub = 1usize << level;
            let dt = (t1 - t0) / sub as f64;
            let mut x = w.clone();
            for j in 0..sub {
                x = rk4_step(&rhs, t0 + j as f64 * dt, dt, &x)?;
            }
            let defect = linalg::max_abs(&(x.adjoint() * &x - linalg::identity(dim)));
            if defect <= opts.unitarity_tol {
                max_defect = max_defect.max(defect);
                w = unitarize(&x)?;
                steps += sub;
                halvings = halvings.max(level);
                break;
            }
            if level == opts.max_halvings {
                return Err(Error::StepTooLarge { drift: defect, halvings: level });
            }
            level += 1;
        }
    }
    Ok(Propagator { unitary: w, s, t, steps, halvings, max_defect })
}

/// Propagator of a time-dependent interaction path `Ψ(t)` on one window.
pub fn nonautonomous_propagator(
    path: impl Fn(f64) -> Interaction,
    ctx: &FockContext,
    s: f64,
    t: f64,
    opts: &PropagatorOptions,
) -> Result<Propagator> {
    propagate(|time| Ok(local_hamiltonian(&path(time), ctx)?.into_matrix()), ctx.fock_dim(), s, t, opts)
}

fn rk4_step(f: &impl Fn(f64, &Matrix) -> Result<Matrix>, t: f64, dt: f64, x: &Matrix) -> Result<Matrix> {
    let half = c64::new(dt / 2.0, 0.0);
    let k1 = f(t, x)?;
    let k2 = f(t + dt / 2.0, &(x + linalg::scale(&k1, half)))?;
    let k3 = f(t + dt / 2.0, &(x + linalg::scale(&k2, half)))?;
    let k4 = f(t + dt, &(x + linalg::scale(&k3, c64::new(dt, 0.0))))?;
    let sum = k1 + linalg::scale(&(k2 + k3), c64::new(2.0, 0.0)) + k4;
    Ok(x + linalg::scale(&sum, c64::new(dt / 6.0, 0.0)))
}

/// `W (W*W)^{-1/2}`, the closest unitary.
fn unitarize(w: &Matrix) -> Result<Matrix> {
    let gram = linalg::hermitian_part(&(w.adjoint() * w));
    let inv_sqrt = Spectrum::new(&gram)?.apply(|x| c64::new(x.max(f64::MIN_POSITIVE).powf(-0.5), 0.0));
    Ok(w * inv_sqrt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Rows of the trajectory are recorded at multiples of this interval.
    pub record_interval: f64,
    /// Times at which full density matrices are stored.
    pub snapshot_times: Vec<f64>,
    /// Largest change of the mean-field energy accepted in one step before
    /// the step is subdivided.
    pub step_tol: f64,
    pub max_halvings: usize,
    /// Eigenvalues below this are clipped to zero and the state renormalized.
    pub positivity_floor: f64,
    /// Eigenvalues below this abort the flow.
    pub positivity_fail: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 10.0,
            record_interval: 0.1,
            snapshot_times: Vec::new(),
            step_tol: 1e-12,
            max_halvings: 8,
            positivity_floor: -1e-10,
            positivity_fail: -1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorInfo {
    pub method: &'static str,
    pub order: usize,
    pub dt: f64,
    pub step_tol: f64,
    pub steps: usize,
    /// Deepest subdivision used by any step.
    pub halvings: usize,
    /// Number of positivity repairs.
    pub clips: usize,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub coefficients: Vec<Vec<c64>>,
    pub energy: Vec<f64>,
    pub trace: Vec<f64>,
    pub purity: Vec<f64>,
    pub entropy: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    /// Expectations of the requested observables, one column per observable.
    pub observables: Vec<(String, Vec<c64>)>,
    pub snapshots: Vec<(f64, Matrix)>,
    pub final_state: Matrix,
    pub info: IntegratorInfo,
}

impl FlowTrajectory {
    /// `max_t ‖c(t) - c(0)‖`.
    pub fn coefficient_drift(&self) -> f64 {
        let c0 = &self.coefficients[0];
        self.coefficients.iter().map(|c| euclid(c, c0)).fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        self.energy.iter().map(|e| (e - self.energy[0]).abs()).fold(0.0, f64::max)
    }

    pub fn trace_drift(&self) -> f64 {
        self.trace.iter().map(|t| (t - self.trace[0]).abs()).fold(0.0, f64::max)
    }

    pub fn purity_drift(&self) -> f64 {
        self.purity.iter().map(|p| (p - self.purity[0]).abs()).fold(0.0, f64::max)
    }

    /// Columns `t, Re c_k, Im c_k, energy, entropy` followed by the real and
    /// imaginary part of each observable.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let k = self.coefficients.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        for j in 0..k {
            header.push(format!("re_c{j}"));
            header.push(format!("im_c{j}"));
        }
        header.extend(["energy".to_string(), "entropy".to_string()]);
        for (name, _) in &self.observables {
            header.push(format!("re_{name}"));
            header.push(format!("im_{name}"));
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            for c in &self.coefficients[i] {
                row.push(format!("{:.16e}", c.re));
                row.push(format!("{:.16e}", c.im));
            }
            row.push(format!("{:.16e}", self.energy[i]));
            row.push(format!("{:.16e}", self.entropy[i]));
            for (_, col) in &self.observables {
                row.push(format!("{:.16e}", col[i].re));
                row.push(format!("{:.16e}", col[i].im));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn euclid(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// `-i[H(c(D)), D]`, using `DH = (HD)*` for Hermitian `D`.
fn flow_rhs(ops: &SparseOperators, d: &Matrix) -> Matrix {
    let h = ops.hamiltonian(&ops.energies(d));
    let hd = h.mul_dense(d);
    linalg::combine(-I, &hd, I, &hd.adjoint().to_owned())
}

fn flow_step(ops: &SparseOperators, d: &Matrix, dt: f64) -> Matrix {
    let f = |x: &Matrix| flow_rhs(ops, x);
    let half = c64::new(dt / 2.0, 0.0);
    let k1 = f(d);
    let k2 = f(&(d + linalg::scale(&k1, half)));
    let k3 = f(&(d + linalg::scale(&k2, half)));
    let k4 = f(&(d + linalg::scale(&k3, c64::new(dt, 0.0))));
    let sum = k1 + linalg::scale(&(k2 + k3), c64::new(2.0, 0.0)) + k4;
    d + linalg::scale(&sum, c64::new(dt / 6.0, 0.0))
}

/// Integrates the self-consistent mean-field flow from `ρ₀`.
pub fn selfconsistent_flow(
    ops: &SparseOperators,
    rho0: &Matrix,
    opts: &FlowOptions,
    observables: &[(String, Csr)],
) -> Result<FlowTrajectory> {
    let nonpositive = |x: f64| x.is_nan() || x <= 0.0;
    if nonpositive(opts.dt) || nonpositive(opts.record_interval) || opts.t_end.is_nan() || opts.t_end < 0.0 {
        return Err(Error::InvalidParameter("flow times must be positive".into()));
    }
    if rho0.nrows() != ops.phi().dim() || rho0.ncols() != ops.phi().dim() {
        return Err(Error::ShapeMismatch { left: rho0.nrows(), right: ops.phi().dim() });
    }
    let n_steps = (opts.t_end / opts.dt).round() as usize;
    let record_every = ((opts.record_interval / opts.dt).round() as usize).max(1);
    let snapshot_steps: Vec<usize> = opts.snapshot_times.iter().map(|t| (t / opts.dt).round() as usize).collect();
    let mut traj = FlowTrajectory {
        times: Vec::new(),
        coefficients: Vec::new(),
        energy: Vec::new(),
        trace: Vec::new(),
        purity: Vec::new(),
        entropy: Vec::new(),
        min_eigenvalue: Vec::new(),
        observables: observables.iter().map(|(name, _)| (name.clone(), Vec::new())).collect(),
        snapshots: Vec::new(),
        final_state: rho0.clone(),
        info: IntegratorInfo {
            method: "rk4",
            order: 4,
            dt: opts.dt,
            step_tol: opts.step_tol,
            steps: 0,
            halvings: 0,
            clips: 0,
        },
    };
    let mut d = linalg::hermitian_part(rho0);
    record(&mut traj, ops, &mut d, 0.0, opts, observables)?;
    for step in 1..=n_steps {
        let e0 = ops.mean_field_energy(&d);
        let mut level = 0;
        loop {
            let sub = 1usize << level;
            let dt = opts.dt / sub as f64;
            let mut x = d.clone();
            for _ in 0..sub {
                x = flow_step(ops, &x, dt);
            }
            let drift = (ops.mean_field_energy(&x) - e0).abs();
            if drift <= opts.step_tol {
                d = x;
                traj.info.steps += sub;
                traj.info.halvings = traj.info.halvings.max(level);
                break;
            }
            if level == opts.max_halvings {
                return Err(Error::StepTooLarge { drift, halvings: level });
            }
            level += 1;
        }
        let t = step as f64 * opts.dt;
        if step % record_every == 0 || step == n_steps {
            record(&mut traj, ops, &mut d, t, opts, observables)?;
        }
        if snapshot_steps.contains(&step) {
            traj.snapshots.push((t, d.clone()));
        }
    }
    if snapshot_steps.contains(&0) {
        traj.snapshots.insert(0, (0.0, linalg::hermitian_part(rho0)));
    }
    traj.final_state = d;
    Ok(traj)
}

fn record(
    traj: &mut FlowTrajectory,
    ops: &SparseOperators,
    d: &mut Matrix,
    t: f64,
    opts: &FlowOptions,
    observables: &[(String, Csr)],
) -> Result<()> {
    let spectrum = Spectrum::new(d)?;
    let min = spectrum.min();
    if min < opts.positivity_fail {
        return Err(Error::NonPhysicalState { min_eigenvalue: min });
    }
    let mut values = spectrum.values().to_vec();
    if min < opts.positivity_floor {
        let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
        values.iter_mut().for_each(|v| *v = v.max(0.0) / total);
        let mut diag = linalg::zeros(d.nrows());
        for (k, v) in values.iter().enumerate() {
            diag[(k, k)] = c64::new(*v, 0.0);
        }
        *d = linalg::hermitian_part(&spectrum.from_eigenbasis(&diag));
        traj.info.clips += 1;
    }
    traj.times.push(t);
    traj.coefficients.push(ops.energies(d));
    traj.energy.push(ops.mean_field_energy(d));
    traj.trace.push(linalg::trace(d).re);
    traj.purity.push(linalg::frobenius(d).powi(2));
    traj.entropy.push(-values.iter().map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 }).sum::<f64>());
    traj.min_eigenvalue.push(values.iter().copied().fold(f64::INFINITY, f64::min));
    for ((_, col), (_, a)) in traj.observables.iter_mut().zip(observables) {
        col.push(a.trace_with(d));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    /// `max_t ‖c(t) - c(0)‖` along the self-consistent flow.
    pub selfconsistent: f64,
    pub energy_drift: f64,
    pub trace_drift: f64,
    /// `(t, max_k |e_k(ω∘τ_t^{(L,m)}) - e_k(ω)|)` under the exact dynamics.
    pub exact: Vec<(f64, f64)>,
}

/// `max_k |e_k(ω∘τ_t^{(L,m)}) - e_k(ω)|` for `ω` the Gibbs state at `d`.
pub fn exact_stationarity_deviation(game: &ThermoGame, d: &[c64], times: &[f64]) -> Result<Vec<(f64, f64)>> {
    let rho = game.gibbs(d)?;
    let dynamics = LongRangeDynamics::new(game.model(), game.ctx())?;
    let ops = game.sparse();
    let e0 = ops.energies(rho.density());
    Ok(times
        .iter()
        .map(|&t| {
            let e = ops.energies(&dynamics.state(rho.density(), t));
            (t, e.iter().zip(&e0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        })
        .collect())
}

/// Evolves the Gibbs state at a gap solution `d` under both the
/// self-consistent flow and the exact long-range dynamics.
pub fn stationarity_check(
    game: &ThermoGame,
    d: &[c64],
    opts: &FlowOptions,
    exact_times: &[f64],
) -> Result<StationarityReport> {
    let rho = game.gibbs(d)?;
    let flow = selfconsistent_flow(game.sparse(), rho.density(), opts, &[])?;
    Ok(StationarityReport {
        selfconsistent: flow.coefficient_drift(),
        energy_drift: flow.energy_drift(),
        trace_drift: flow.trace_drift(),
        exact: exact_stationarity_deviation(game, d, exact_times)?,
    })
}

/// Translation-invariant initial states for [`limit_agreement`].
#[derive(Debug, Clone)]
pub enum StateRecipe {
    /// `⊗_x σ` for an even density `σ` on the modes of one site.
    Product(Matrix),
    /// Gibbs state of a short-range interaction.
    Gibbs { phi: Interaction, beta: f64 },
}

impl StateRecipe {
    pub fn build(&self, ctx: &FockContext) -> Result<ThermalState> {
        match self {
            StateRecipe::Product(sigma) => product_state(ctx, sigma),
            StateRecipe::Gibbs { phi, beta } => ThermalState::gibbs(local_hamiltonian(phi, ctx)?.matrix(), *beta),
        }
    }
}

/// `⊗_x σ` for an even single-site density `σ`, whose basis index has bit `s`
/// set when spin `s` is occupied.
pub fn product_state(ctx: &FockContext, sigma: &Matrix) -> Result<ThermalState> {
    let s = ctx.spins().len();
    let local = 1usize << s;
    if sigma.nrows() != local || sigma.ncols() != local {
        return Err(Error::ShapeMismatch { left: sigma.nrows(), right: local });
    }
    for i in 0..local {
        for j in 0..local {
            if (i ^ j).count_ones() % 2 == 1 && sigma[(i, j)] != ZERO {
                return Err(Error::NotEven("single-site density mixes parities".into()));
            }
        }
    }
    let dim = ctx.fock_dim();
    let mask = local - 1;
    let density = faer::Mat::from_fn(dim, dim, |i, j| {
        let mut z = c64::new(1.0, 0.0);
        for x in 0..ctx.volume() {
            z *= sigma[((i >> (x * s)) & mask, (j >> (x * s)) & mask)];
            if z == ZERO {
                break;
            }
        }
        z
    });
    ThermalState::from_density(density)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub half_width: usize,
    pub volume: usize,
    /// `ρ_L(τ_t^{(L,m)}(A))`.
    #[serde(with = "serde_complex")]
    pub exact: c64,
    /// `ϖ_L(t; ρ_L)(A)`.
    #[serde(with = "serde_complex")]
    pub mean_field: c64,
    pub deviation: f64,
}

/// `|ρ_L∘τ_t^{(L,m)}(A) - ϖ_L(t;ρ_L)(A)|` per window, where `A` is the
/// per-site element of `observable`.
pub fn limit_agreement(
    m: &LongRangeModel,
    contexts: &[FockContext],
    recipe: &StateRecipe,
    observable: &Interaction,
    t: f64,
    opts: &FlowOptions,
) -> Result<Vec<LimitRow>> {
    let mut rows = Vec::with_capacity(contexts.len());
    for ctx in contexts {
        if ctx.period() <= 2 * observable.range() {
            return Err(Error::WindowTooSmall { requested: observable.range() as usize, available: ctx.half_width() });
        }
        let rho = recipe.build(ctx)?;
        let a = energy_per_site_element(observable, ctx)?.into_matrix();
        let dynamics = LongRangeDynamics::new(m, ctx)?;
        let exact = linalg::trace_product(&dynamics.state(rho.density(), t), &a);
        let ops = m.operators(ctx)?.sparse();
        let flow_opts = FlowOptions { t_end: t, record_interval: t.max(opts.dt), ..opts.clone() };
        let flow = selfconsistent_flow(&ops, rho.density(), &flow_opts, &[])?;
        let mean_field = linalg::trace_product(&flow.final_state, &a);
        rows.push(LimitRow {
            half_width: ctx.half_width(),
            volume: ctx.volume(),
            exact,
            mean_field,
            deviation: (exact - mean_field).norm(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::SolverOptions;
    use crate::models;

    #[test]
    fn heisenberg_at_zero_is_identity_and_conserves_energy() {
        let ctx = FockContext::new(1, 0, &["up", "dn"]).unwrap();
        let m = models::bcs(1, 0.3, 1.0, "up", "dn");
        let a = crate::car::annihilation(&ctx, &[0], "up").unwrap();
        assert!(heisenberg_lr(&m, &ctx, &a, 0.0).unwrap().distance(&a) < 1e-12);
        let h = LocalOperator::from_matrix(&ctx, m.operators(&ctx).unwrap().hamiltonian()).unwrap();
        assert!(heisenberg_lr(&m, &ctx, &h, 2.3).unwrap().distance(&h) < 1e-12);
    }

    #[test]
    fn constant_path_matches_heisenberg() {
        let ctx = FockContext::new(1, 1, &["up"]).unwrap();
        let phi = models::hopping(1, 1.0, &["up"]).add(&models::chemical_potential(1, 0.4, &["up"]));
        let u = nonautonomous_propagator(|_| phi.clone(), &ctx, 0.0, 1.0, &PropagatorOptions::default()).unwrap();
        let a = crate::car::annihilation(&ctx, &[0], "up").unwrap();
        let exact = LongRangeDynamics::from_hamiltonian(local_hamiltonian(&phi, &ctx).unwrap().matrix())
            .unwrap()
            .observable(a.matrix(), 1.0);
        assert!(linalg::max_abs(&(u.apply(a.matrix()) - exact)) < 1e-8);
        assert!(u.unitarity_residual() < 1e-12);
    }

    #[test]
    fn product_state_of_tracial_site_is_tracial() {
        let ctx = FockContext::new(1, 1, &["up", "dn"]).unwrap();
        let sigma = linalg::scale(&linalg::identity(4), c64::new(0.25, 0.0));
        let rho = product_state(&ctx, &sigma).unwrap();
        let tracial = ThermalState::tracial(64);
        assert!(linalg::max_abs(&(rho.density() - tracial.density())) < 1e-15);
    }

    #[test]
    fn gap_solution_is_stationary_under_flow() {
        let ctx = FockContext::new(1, 0, &["up", "dn"]).unwrap();
        let game = ThermoGame::new(models::bcs(1, 0.2, 1.0, "up", "dn"), ctx, 4.0).unwrap();
        let sols = game.gap_fixed_point(&SolverOptions::default()).unwrap();
        let opts = FlowOptions { t_end: 1.0, dt: 1e-2, ..FlowOptions::default() };
        let report = stationarity_check(&game, &sols[0].d.c, &opts, &[1.0]).unwrap();
        assert!(report.selfconsistent < 1e-8, "{report:?}");
    }
}
