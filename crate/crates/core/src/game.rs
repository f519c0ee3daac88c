//! The Bogoliubov approximation and the thermodynamic game.
//!
//! For coefficients `c ∈ C^K` the approximating Hamiltonian is
//! `H(c) = U_L^Φ + Σ_k γ_k (c̄_k U_L^{Ψ_k} + c_k U_L^{Ψ_k}*)`, and the game value
//! is `𝔣(c) = Σ_{γ<0} |γ||c|² - Σ_{γ>0} γ|c|² - P(c)` with `P(c)` the pressure of
//! `H(c)`. Stationary points satisfy the gap equation `c = e(ω_c)` with
//! `e_k(ω) = ω(U_L^{Ψ_k})/|Λ_L|`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::car::FockContext;
use crate::error::{Error, Result};
use crate::interaction::Interaction;
use crate::linalg::{c64, serde_complex, Csr, Matrix, Spectrum, ZERO};
use crate::longrange::{
    approximating_hamiltonian, pressure_lr, HahnSplit, LongRangeModel, LongRangeOperators, SparseOperators,
};
use crate::rng::stream;
use crate::thermo::{log_trace_exp, random_even, KmsProbe, ThermalState};

/// `Φ + Σ_k γ_k (c̄_k Ψ_k + c_k Ψ_k*)`, anchor-wise.
pub fn approximating_interaction(m: &LongRangeModel, c: &[c64]) -> Result<Interaction> {
    if c.len() != m.len() {
        return Err(Error::LengthMismatch { expected: m.len(), got: c.len() });
    }
    let mut phi = m.base().clone();
    for (t, ck) in m.terms().iter().zip(c) {
        if *ck == ZERO {
            continue;
        }
        phi = phi.add(&t.psi.scale(ck.conj() * t.gamma)).add(&t.psi.adjoint().scale(*ck * t.gamma));
    }
    Ok(phi)
}

/// Coefficient vector with the weights that define its split and norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapVector {
    #[serde(with = "serde_complex::vec")]
    pub c: Vec<c64>,
    pub gammas: Vec<f64>,
}

impl GapVector {
    pub fn new(c: Vec<c64>, gammas: Vec<f64>) -> Result<Self> {
        if c.len() != gammas.len() {
            return Err(Error::LengthMismatch { expected: gammas.len(), got: c.len() });
        }
        Ok(Self { c, gammas })
    }

    /// Coordinates with `γ_k < 0`.
    pub fn minus(&self) -> Vec<c64> {
        self.c.iter().zip(&self.gammas).filter(|(_, g)| **g < 0.0).map(|(c, _)| *c).collect()
    }

    /// Coordinates with `γ_k > 0`.
    pub fn plus(&self) -> Vec<c64> {
        self.c.iter().zip(&self.gammas).filter(|(_, g)| **g > 0.0).map(|(c, _)| *c).collect()
    }

    /// `‖c₋‖² = Σ_{γ<0} |γ||c|²`.
    pub fn norm_minus_sq(&self) -> f64 {
        self.c.iter().zip(&self.gammas).filter(|(_, g)| **g < 0.0).map(|(c, g)| -g * c.norm_sqr()).sum()
    }

    /// `‖c₊‖² = Σ_{γ>0} γ|c|²`.
    pub fn norm_plus_sq(&self) -> f64 {
        self.c.iter().zip(&self.gammas).filter(|(_, g)| **g > 0.0).map(|(c, g)| g * c.norm_sqr()).sum()
    }

    /// `max_k |c_{k*} - c̄_k|`.
    pub fn conjugation_residual(&self, m: &LongRangeModel) -> f64 {
        (0..self.c.len()).map(|k| (self.c[m.partner(k)] - self.c[k].conj()).norm()).fold(0.0, f64::max)
    }
}

/// Which part of the phase diagram a gap solution lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// No long-range terms.
    Trivial,
    /// All gauge-charged coordinates vanish.
    Normal,
    /// Some gauge-charged coordinate is nonzero, or the model has no gauge symmetry.
    Ordered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    pub restart: usize,
    pub seed: u64,
    pub damping: f64,
    pub iterations: usize,
    #[serde(with = "serde_complex::vec")]
    pub start: Vec<c64>,
    /// `‖c - e(ω_c)‖` after every iteration.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSolution {
    pub d: GapVector,
    /// Pressure of the approximating Hamiltonian at `d`.
    pub pressure: f64,
    /// Game value `𝔣(d)`.
    pub value: f64,
    pub residual: f64,
    pub branch: Branch,
    pub trace: SolverTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub damping: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub tol: f64,
    /// Distance below which two fixed points are the same solution.
    pub cluster_tol: f64,
    /// Coarse-grid points per real coordinate in the conservative-set search.
    pub grid_points: usize,
    /// Random perturbations used to confirm inner maximality.
    pub perturbations: usize,
    pub perturbation_size: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iter: 500,
            restarts: 8,
            tol: 1e-10,
            cluster_tol: 1e-6,
            grid_points: 3,
            perturbations: 8,
            perturbation_size: 1e-3,
            seed: 0,
        }
    }
}

/// Pressure, game value and `e(ω_c)` at one point, from a single diagonalization.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub c: Vec<c64>,
    pub pressure: f64,
    pub value: f64,
    pub energies: Vec<c64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    /// `r₊(c₋)`, one entry per repulsive term.
    pub c_plus: Vec<c64>,
    pub iterations: usize,
    pub residual: f64,
    /// Largest increase of `𝔣` seen under random perturbations of `c₊`.
    pub max_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservativeMember {
    /// The attractive coordinates `d₋`.
    #[serde(with = "serde_complex::vec")]
    pub d_minus: Vec<c64>,
    /// `d₋ + r₊(d₋)` as a full coefficient vector.
    #[serde(with = "serde_complex::vec")]
    pub d: Vec<c64>,
    /// `sup_{c₊} 𝔣(d₋, c₊)`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservativeSet {
    pub members: Vec<ConservativeMember>,
    /// `min_{d₋} sup_{c₊} 𝔣`.
    pub min_value: f64,
    pub candidates: usize,
    /// The enumeration only covers branches reachable from the restart budget.
    pub exhaustive: bool,
}

impl ConservativeSet {
    /// `-min sup 𝔣`, the game pressure.
    pub fn game_pressure(&self) -> f64 {
        -self.min_value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinMaxReport {
    pub minmax: f64,
    pub direct: f64,
    pub residual: f64,
    pub volume: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmsPanelReport {
    pub max_boundary: f64,
    pub max_smeared: f64,
    #[serde(with = "serde_complex::vec")]
    pub c: Vec<c64>,
    pub generator_mismatch: f64,
    pub pairs: usize,
}

/// Grid of the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub radius: f64,
    pub step: f64,
    pub phases: usize,
    pub max_cells: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { radius: 2.0, step: 1e-2, phases: 8, max_cells: 200_000 }
    }
}

/// One independent coordinate of the oracle: a complex amplitude shared by an
/// adjoint pair `(k, k*)` with `c_{k*} = c̄_k`, or a real one for `Ψ_k = Ψ_k*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Amplitude {
    pub term: usize,
    pub partner: usize,
    pub attractive: bool,
    #[serde(with = "serde_complex::vec")]
    pub values: Vec<c64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSurface {
    pub amplitudes: Vec<Amplitude>,
    /// Game value per cell, cells enumerated with the first amplitude fastest.
    pub values: Vec<f64>,
    /// `min` over attractive amplitudes of the `max` over repulsive ones.
    pub minmax_value: f64,
    #[serde(with = "serde_complex::vec")]
    pub argminmax: Vec<c64>,
    /// The reversed order, `max_{c₊} min_{c₋}`, which may differ on mixed models.
    pub maxmin_value: f64,
    pub step: f64,
}

impl OracleSurface {
    /// Amplitude indices of a cell.
    pub fn cell_indices(&self, cell: usize) -> Vec<usize> {
        let mut rest = cell;
        self.amplitudes
            .iter()
            .map(|a| {
                let i = rest % a.values.len();
                rest /= a.values.len();
                i
            })
            .collect()
    }

    /// Radii of the discrete stationary points of `r ↦ 𝔣(r)` along the
    /// zero-phase ray of a single complex amplitude.
    pub fn stationary_radii(&self) -> Vec<f64> {
        let profile = self.radial_profile();
        let n = profile.len();
        let mut out = Vec::new();
        for i in 0..n {
            // 𝔣 is even in r, so r = 0 compares against its mirror image.
            let left = if i == 0 { profile.get(1).map(|p| p.1) } else { Some(profile[i - 1].1) };
            let right = profile.get(i + 1).map(|p| p.1);
            if let (Some(l), Some(r)) = (left, right) {
                let v = profile[i].1;
                if (v <= l && v <= r) || (v >= l && v >= r) {
                    out.push(profile[i].0);
                }
            }
        }
        out
    }

    /// `(r, 𝔣)` along the zero-phase ray of the first amplitude.
    pub fn radial_profile(&self) -> Vec<(f64, f64)> {
        if self.amplitudes.len() != 1 {
            return Vec::new();
        }
        let a = &self.amplitudes[0];
        a.values.iter().zip(&self.values).filter(|(c, _)| c.im == 0.0 && c.re >= 0.0).map(|(c, v)| (c.re, *v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimpleFlag {
    pub simple: bool,
    pub epsilon: f64,
    /// Distance between the branches selected by `+ε` and `-ε`.
    pub spread: f64,
    #[serde(with = "serde_complex::vec")]
    pub plus: Vec<c64>,
    #[serde(with = "serde_complex::vec")]
    pub minus: Vec<c64>,
}

/// A long-range model at fixed `β` on one window, with its operators cached.
#[derive(Debug, Clone)]
pub struct ThermoGame {
    model: LongRangeModel,
    ctx: FockContext,
    beta: f64,
    ops: LongRangeOperators,
    split: HahnSplit,
    charges: Option<Vec<i32>>,
    sparse: SparseOperators,
}

impl ThermoGame {
    pub fn new(model: LongRangeModel, ctx: FockContext, beta: f64) -> Result<Self> {
        let ops = model.operators(&ctx)?;
        let split = model.hahn_split();
        let charges = model.charges();
        let sparse = ops.sparse();
        Ok(Self { model, ctx, beta, ops, split, charges, sparse })
    }

    pub fn model(&self) -> &LongRangeModel {
        &self.model
    }

    pub fn ctx(&self) -> &FockContext {
        &self.ctx
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn operators(&self) -> &LongRangeOperators {
        &self.ops
    }

    pub fn sparse(&self) -> &SparseOperators {
        &self.sparse
    }

    pub fn split(&self) -> &HahnSplit {
        &self.split
    }

    pub fn len(&self) -> usize {
        self.model.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model.is_empty()
    }

    pub fn gap_vector(&self, c: Vec<c64>) -> Result<GapVector> {
        GapVector::new(c, self.model.gammas())
    }

    /// `U_L^{Φ_m(c)}`.
    pub fn hamiltonian(&self, c: &[c64]) -> Result<Matrix> {
        approximating_hamiltonian(&self.ops, c)
    }

    pub fn gibbs(&self, c: &[c64]) -> Result<ThermalState> {
        ThermalState::gibbs(&self.hamiltonian(c)?, self.beta)
    }

    /// `e(ω) = ω(U_L^{Ψ_k})/|Λ_L|`.
    pub fn energies(&self, rho: &ThermalState) -> Vec<c64> {
        self.ops.energies(rho)
    }

    fn quadratic(&self, c: &[c64]) -> f64 {
        c.iter().zip(&self.ops.gammas).map(|(c, g)| -g * c.norm_sqr()).sum()
    }

    fn spectrum(&self, c: &[c64]) -> Result<Spectrum> {
        if c.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: c.len() });
        }
        Spectrum::from_csr(&self.sparse.hamiltonian(c))
    }

    pub fn evaluate(&self, c: &[c64]) -> Result<Evaluation> {
        let spectrum = self.spectrum(c)?;
        let n = self.ctx.volume() as f64;
        let log_z = log_trace_exp(&spectrum, self.beta);
        let pressure = log_z / (self.beta * n);
        let weights: Vec<f64> = spectrum.values().iter().map(|e| (-self.beta * e - log_z).exp()).collect();
        let psi: Vec<&Csr> = self.sparse.psi().iter().collect();
        let energies = spectrum.weighted_traces(&weights, &psi).into_iter().map(|t| t / n).collect();
        Ok(Evaluation { c: c.to_vec(), pressure, value: self.quadratic(c) - pressure, energies })
    }

    pub fn approx_pressure(&self, c: &[c64]) -> Result<f64> {
        let spectrum = self.spectrum(c)?;
        Ok(log_trace_exp(&spectrum, self.beta) / (self.beta * self.ctx.volume() as f64))
    }

    /// `𝔣(c)`, with `c = c₋ + c₊` given as one full vector.
    pub fn value(&self, c: &[c64]) -> Result<f64> {
        Ok(self.quadratic(c) - self.approx_pressure(c)?)
    }

    /// Full vector from attractive and repulsive parts.
    pub fn combine(&self, c_minus: &[c64], c_plus: &[c64]) -> Result<Vec<c64>> {
        if c_minus.len() != self.split.attractive.len() {
            return Err(Error::LengthMismatch { expected: self.split.attractive.len(), got: c_minus.len() });
        }
        if c_plus.len() != self.split.repulsive.len() {
            return Err(Error::LengthMismatch { expected: self.split.repulsive.len(), got: c_plus.len() });
        }
        let mut c = vec![ZERO; self.len()];
        for (&k, v) in self.split.attractive.iter().zip(c_minus) {
            c[k] = *v;
        }
        for (&k, v) in self.split.repulsive.iter().zip(c_plus) {
            c[k] = *v;
        }
        Ok(c)
    }

    pub fn game_value(&self, c_minus: &[c64], c_plus: &[c64]) -> Result<f64> {
        self.value(&self.combine(c_minus, c_plus)?)
    }

    /// Conjugation-symmetric random point in the disc of radius `radius`, on
    /// the given index set.
    fn random_symmetric(&self, rng: &mut ChaCha8Rng, radius: f64, indices: &[usize]) -> Vec<c64> {
        let mut c = vec![ZERO; self.len()];
        for &k in indices {
            let p = self.model.partner(k);
            if p < k && indices.contains(&p) {
                continue;
            }
            let r = radius * rng.gen::<f64>().sqrt();
            let z = if p == k {
                c64::new(r * if rng.gen() { 1.0 } else { -1.0 }, 0.0)
            } else {
                c64::from_polar(r, TAU * rng.gen::<f64>())
            };
            c[k] = z;
            c[p] = z.conj();
        }
        c
    }

    /// The inner maximizer `r₊(c₋)` by damped iteration `c₊ ← e₊(ω_{c₋+c₊})`.
    pub fn decision_rule(&self, c_minus: &[c64], opts: &SolverOptions) -> Result<DecisionOutcome> {
        let rep = &self.split.repulsive;
        if rep.is_empty() {
            self.combine(c_minus, &[])?;
            return Ok(DecisionOutcome { c_plus: Vec::new(), iterations: 0, residual: 0.0, max_gain: 0.0 });
        }
        let mut c = self.combine(c_minus, &vec![ZERO; rep.len()])?;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < opts.max_iter {
            iterations += 1;
            let ev = self.evaluate(&c)?;
            residual = rep.iter().map(|&k| (ev.energies[k] - c[k]).norm_sqr()).sum::<f64>().sqrt();
            for &k in rep {
                c[k] = c[k] * (1.0 - opts.damping) + ev.energies[k] * opts.damping;
            }
            if residual <= opts.tol {
                break;
            }
        }
        if residual > opts.tol {
            return Err(Error::NoConvergence { iterations, residual });
        }
        let base = self.value(&c)?;
        let mut rng = stream(opts.seed, 0x5eed);
        let mut max_gain = f64::NEG_INFINITY;
        for _ in 0..opts.perturbations {
            let delta = self.random_symmetric(&mut rng, opts.perturbation_size, rep);
            let probe: Vec<c64> = c.iter().zip(&delta).map(|(a, b)| a + b).collect();
            max_gain = max_gain.max(self.value(&probe)? - base);
        }
        if max_gain > 1e-12 {
            return Err(Error::MaximalityCheckFailed { gain: max_gain });
        }
        let c_plus = rep.iter().map(|&k| c[k]).collect();
        Ok(DecisionOutcome { c_plus, iterations, residual, max_gain })
    }

    /// Rotates the gauge phase so the first nonzero charged coordinate is real
    /// and positive. Models without a gauge symmetry are returned unchanged.
    pub fn canonical_gauge(&self, c: &[c64]) -> Vec<c64> {
        let Some(q) = &self.charges else { return c.to_vec() };
        let Some(k) = (0..c.len()).find(|&k| q[k] != 0 && c[k].norm() > 1e-9) else { return c.to_vec() };
        let theta = c[k].arg() / q[k] as f64;
        c.iter().zip(q).map(|(z, &qk)| z * c64::cis(-theta * qk as f64)).collect()
    }

    fn branch(&self, c: &[c64]) -> Branch {
        if c.is_empty() {
            return Branch::Trivial;
        }
        match &self.charges {
            Some(q) if c.iter().zip(q).all(|(z, &qk)| qk == 0 || z.norm() <= 1e-6) => Branch::Normal,
            _ => Branch::Ordered,
        }
    }

    fn iterate(&self, start: Vec<c64>, restart: usize, opts: &SolverOptions) -> Result<GapSolution> {
        let mut c = start.clone();
        let mut residuals = Vec::new();
        let mut ev = self.evaluate(&c)?;
        loop {
            let residual = c.iter().zip(&ev.energies).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            residuals.push(residual);
            if residual <= opts.tol {
                break;
            }
            if residuals.len() > opts.max_iter {
                return Err(Error::NoConvergence { iterations: opts.max_iter, residual });
            }
            for (ck, ek) in c.iter_mut().zip(&ev.energies) {
                *ck = *ck * (1.0 - opts.damping) + ek * opts.damping;
            }
            ev = self.evaluate(&c)?;
        }
        let c = self.canonical_gauge(&c);
        let ev = self.evaluate(&c)?;
        let residual = c.iter().zip(&ev.energies).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        Ok(GapSolution {
            branch: self.branch(&c),
            d: self.gap_vector(c)?,
            pressure: ev.pressure,
            value: ev.value,
            residual,
            trace: SolverTrace {
                restart,
                seed: opts.seed,
                damping: opts.damping,
                iterations: residuals.len() - 1,
                start,
                residuals,
            },
        })
    }

    /// Distinct solutions of `c = e(ω_c)` reached from the origin and from
    /// `restarts - 1` random conjugation-symmetric starts, sorted by game value.
    pub fn gap_fixed_point(&self, opts: &SolverOptions) -> Result<Vec<GapSolution>> {
        let k = self.len();
        let all: Vec<usize> = (0..k).collect();
        let radius = self.model.norm();
        let starts: Vec<Vec<c64>> = (0..opts.restarts.max(1))
            .map(|r| {
                if r == 0 {
                    vec![ZERO; k]
                } else {
                    self.random_symmetric(&mut stream(opts.seed, r as u64), radius, &all)
                }
            })
            .collect();
        let results: Vec<Result<GapSolution>> =
            starts.into_par_iter().enumerate().map(|(r, s)| self.iterate(s, r, opts)).collect();
        let mut found = Vec::new();
        for (r, res) in results.into_iter().enumerate() {
            match res {
                Ok(sol) => found.push(sol),
                Err(e @ Error::NoConvergence { .. }) => log::warn!("gap restart {r}: {e}"),
                Err(e) => return Err(e),
            }
        }
        Ok(cluster(found, opts.cluster_tol))
    }

    /// Attractive independent coordinates, as `(term, partner)` pairs.
    fn orbits(&self, indices: &[usize]) -> Vec<(usize, usize)> {
        indices.iter().filter(|&&k| self.model.partner(k) >= k).map(|&k| (k, self.model.partner(k))).collect()
    }

    /// Conservative strategies: minimizers of `d₋ ↦ sup_{c₊} 𝔣(d₋, c₊)` among
    /// the attractive parts of gap solutions and a coarse grid.
    pub fn conservative_set(&self, opts: &SolverOptions) -> Result<ConservativeSet> {
        let att = &self.split.attractive;
        let mut candidates: Vec<Vec<c64>> = Vec::new();
        if att.is_empty() {
            candidates.push(Vec::new());
        } else {
            for sol in self.gap_fixed_point(opts)? {
                candidates.push(att.iter().map(|&k| sol.d.c[k]).collect());
            }
            let orbits = self.orbits(att);
            let radius = self.model.norm();
            let n = opts.grid_points.max(1);
            let axis: Vec<f64> =
                (0..n).map(|i| if n == 1 { 0.0 } else { -radius + 2.0 * radius * i as f64 / (n - 1) as f64 }).collect();
            let dims: usize = orbits.iter().map(|(k, p)| if k == p { 1 } else { 2 }).sum();
            let cells = n.checked_pow(dims as u32).unwrap_or(usize::MAX);
            if cells > 1_000_000 {
                return Err(Error::GridTooLarge { cells, cap: 1_000_000 });
            }
            for mut cell in 0..cells {
                let mut full = vec![ZERO; self.len()];
                for &(k, p) in &orbits {
                    let re = axis[cell % n];
                    cell /= n;
                    let im = if k == p {
                        0.0
                    } else {
                        let v = axis[cell % n];
                        cell /= n;
                        v
                    };
                    full[k] = c64::new(re, im);
                    full[p] = c64::new(re, -im);
                }
                candidates.push(att.iter().map(|&k| full[k]).collect());
            }
        }
        let evaluated: Vec<Result<ConservativeMember>> = candidates
            .par_iter()
            .map(|dm| {
                let rule = self.decision_rule(dm, opts)?;
                let d = self.combine(dm, &rule.c_plus)?;
                let d = self.canonical_gauge(&d);
                let d_minus = att.iter().map(|&k| d[k]).collect();
                Ok(ConservativeMember { value: self.value(&d)?, d, d_minus })
            })
            .collect();
        let mut members = evaluated.into_iter().collect::<Result<Vec<_>>>()?;
        let count = members.len();
        let min_value = members.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
        members.retain(|m| m.value <= min_value + 1e-6);
        members.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lex_cmp(&a.d, &b.d)));
        let mut unique: Vec<ConservativeMember> = Vec::new();
        for m in members {
            if !unique.iter().any(|u| distance(&u.d, &m.d) <= opts.cluster_tol) {
                unique.push(m);
            }
        }
        Ok(ConservativeSet { members: unique, min_value, candidates: count, exhaustive: false })
    }

    /// `-min_{d₋} sup_{c₊} 𝔣` against the direct pressure of `U_L^m`.
    pub fn minmax_pressure(&self, opts: &SolverOptions) -> Result<MinMaxReport> {
        let set = self.conservative_set(opts)?;
        let direct = pressure_lr(&self.model, self.beta, &self.ctx)?;
        let minmax = set.game_pressure();
        Ok(MinMaxReport { minmax, direct, residual: (minmax - direct).abs(), volume: self.ctx.volume() })
    }

    /// `min_{d₋ ∈ C_m} ‖e(ρ) - (d₋ + r₊(d₋))‖`, zero when there are no long-range terms.
    pub fn bogoliubov_residual(&self, rho: &ThermalState, set: &ConservativeSet) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.canonical_gauge(&self.energies(rho));
        set.members.iter().map(|m| distance(&m.d, &e)).fold(f64::INFINITY, f64::min)
    }

    /// KMS residuals of `ρ` for the dynamics of `U_L^{Φ_m(e(ρ))}` over a panel
    /// of random even pairs.
    pub fn selfconsistent_kms_check(&self, rho: &ThermalState, pairs: usize, seed: u64) -> Result<KmsPanelReport> {
        let c = self.energies(rho);
        let h = self.hamiltonian(&c)?;
        let probe = KmsProbe::new(rho, &h, self.beta)?;
        let mut rng = stream(seed, 0x6b6d73);
        let dim = self.ctx.fock_dim();
        let (mut max_boundary, mut max_smeared) = (0.0f64, 0.0f64);
        for _ in 0..pairs {
            let a = random_even(dim, &mut rng);
            let b = random_even(dim, &mut rng);
            max_boundary = max_boundary.max(probe.boundary(&a, &b).residual);
            max_smeared = max_smeared.max(probe.smeared(&a, &b, 1.0).residual);
        }
        Ok(KmsPanelReport { max_boundary, max_smeared, c, generator_mismatch: probe.generator_mismatch(), pairs })
    }

    /// Exhaustive grid over at most two independent amplitudes.
    pub fn brute_force_oracle(&self, grid: &GridSpec) -> Result<OracleSurface> {
        let orbits = self.orbits(&(0..self.len()).collect::<Vec<_>>());
        let radial = (grid.radius / grid.step).round() as usize;
        let mut amplitudes = Vec::new();
        for &(k, p) in &orbits {
            let mut values = Vec::new();
            if k == p {
                for i in 0..=2 * radial {
                    values.push(c64::new(-grid.radius + i as f64 * grid.step, 0.0));
                }
            } else {
                values.push(ZERO);
                for i in 1..=radial {
                    for j in 0..grid.phases.max(1) {
                        values.push(c64::from_polar(i as f64 * grid.step, TAU * j as f64 / grid.phases.max(1) as f64));
                    }
                }
            }
            amplitudes.push(Amplitude { term: k, partner: p, attractive: self.model.terms()[k].gamma < 0.0, values });
        }
        let cells = amplitudes.iter().map(|a| a.values.len()).product::<usize>();
        if amplitudes.len() > 2 || cells > grid.max_cells {
            return Err(Error::GridTooLarge { cells, cap: grid.max_cells });
        }
        let values = (0..cells)
            .into_par_iter()
            .map(|i| self.value(&oracle_point(self.len(), &amplitudes, i)))
            .collect::<Result<Vec<f64>>>()?;
        let surface = OracleSurface {
            amplitudes,
            values,
            minmax_value: 0.0,
            argminmax: Vec::new(),
            maxmin_value: 0.0,
            step: grid.step,
        };
        let (minmax_value, cell) = nested_extremum(&surface, true);
        let (maxmin_value, _) = nested_extremum(&surface, false);
        let argminmax = oracle_point(self.len(), &surface.amplitudes, cell);
        Ok(OracleSurface { minmax_value, argminmax, maxmin_value, ..surface })
    }

    /// Heuristic test of whether the model is simple: solve the gap equation
    /// under the symmetry-breaking fields `±ε Σ_k (Ψ_k + Ψ_k*)` and compare the
    /// preferred branches. A unique branch makes them merge as `ε → 0`.
    pub fn simple_model_flag(&self, epsilon: f64, threshold: f64, opts: &SolverOptions) -> Result<SimpleFlag> {
        if self.is_empty() {
            return Ok(SimpleFlag { simple: true, epsilon, spread: 0.0, plus: Vec::new(), minus: Vec::new() });
        }
        let mut field = Interaction::zero(self.model.base().lattice_dim());
        for t in self.model.terms() {
            field = field.add(&t.psi).add(&t.psi.adjoint());
        }
        let mut branches = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let base = self.model.base().add(&field.scale(c64::new(sign * epsilon, 0.0)));
            let model = LongRangeModel::new(base, self.model.terms().to_vec(), *self.model.decay())?;
            let game = ThermoGame::new(model, self.ctx.clone(), self.beta)?;
            let sols = game.gap_fixed_point(opts)?;
            let best = sols
                .into_iter()
                .next()
                .ok_or(Error::NoConvergence { iterations: opts.max_iter, residual: f64::NAN })?;
            branches.push(best.d.c);
        }
        let minus = branches.pop().expect("two branches");
        let plus = branches.pop().expect("two branches");
        let spread = distance(&plus, &minus);
        Ok(SimpleFlag { simple: spread <= threshold, epsilon, spread, plus, minus })
    }
}

/// `min_{c₋} max_{c₊}` when `minmax`, else `max_{c₊} min_{c₋}`, with the cell
/// attaining it.
fn nested_extremum(surface: &OracleSurface, minmax: bool) -> (f64, usize) {
    let mut groups: std::collections::BTreeMap<Vec<usize>, (f64, usize)> = Default::default();
    for cell in 0..surface.values.len() {
        let key: Vec<usize> = surface
            .cell_indices(cell)
            .into_iter()
            .zip(&surface.amplitudes)
            .map(|(i, a)| if a.attractive == minmax { i } else { usize::MAX })
            .collect();
        let v = surface.values[cell];
        let e = groups.entry(key).or_insert((if minmax { f64::NEG_INFINITY } else { f64::INFINITY }, cell));
        if (minmax && v > e.0) || (!minmax && v < e.0) {
            *e = (v, cell);
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for (v, cell) in groups.into_values() {
        if best.is_none_or(|(b, _)| if minmax { v < b } else { v > b }) {
            best = Some((v, cell));
        }
    }
    best.expect("at least one cell")
}

fn oracle_point(len: usize, amplitudes: &[Amplitude], cell: usize) -> Vec<c64> {
    let mut c = vec![ZERO; len];
    let mut rest = cell;
    for a in amplitudes {
        let z = a.values[rest % a.values.len()];
        rest /= a.values.len();
        c[a.term] = z;
        c[a.partner] = z.conj();
    }
    c
}

fn distance(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn lex_cmp(a: &[c64], b: &[c64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then_with(|| x.im.total_cmp(&y.im));
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Sorts by `(value, c)` and merges solutions closer than `tol`.
fn cluster(mut found: Vec<GapSolution>, tol: f64) -> Vec<GapSolution> {
    found.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lex_cmp(&a.d.c, &b.d.c)));
    let mut out: Vec<GapSolution> = Vec::new();
    for s in found {
        if !out.iter().any(|o| distance(&o.d.c, &s.d.c) <= tol) {
            out.push(s);
        }
    }
    out
}

/// Finite-difference gradient of `𝔣` in all `2K` real coordinates.
pub fn value_gradient(game: &ThermoGame, c: &[c64], h: f64) -> Result<Vec<f64>> {
    let mut grad = Vec::with_capacity(2 * c.len());
    for k in 0..c.len() {
        for dir in [c64::new(1.0, 0.0), c64::new(0.0, 1.0)] {
            let mut p = c.to_vec();
            let mut m = c.to_vec();
            p[k] += dir * h;
            m[k] -= dir * h;
            grad.push((game.value(&p)? - game.value(&m)?) / (2.0 * h));
        }
    }
    Ok(grad)
}

/// `‖r₊(c₋ + δ) - r₊(c₋)‖ / ‖δ‖` for a random conjugation-symmetric `δ`.
pub fn decision_rule_lipschitz(game: &ThermoGame, c_minus: &[c64], size: f64, opts: &SolverOptions) -> Result<f64> {
    let base = game.decision_rule(c_minus, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x11b);
    let delta_full = game.random_symmetric(&mut rng, size, &game.split.attractive);
    let delta: Vec<c64> = game.split.attractive.iter().map(|&k| delta_full[k]).collect();
    let moved: Vec<c64> = c_minus.iter().zip(&delta).map(|(a, b)| a + b).collect();
    let next = game.decision_rule(&moved, opts)?;
    let dn = delta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if dn == 0.0 {
        return Ok(0.0);
    }
    Ok(distance(&next.c_plus, &base.c_plus) / dn)
}
