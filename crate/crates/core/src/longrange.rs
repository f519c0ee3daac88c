//! Long-range (mean-field) models `m = (Φ, a)` with a finitely supported
//! self-adjoint measure `a = Σ_k γ_k δ_{Ψ_k}` on unit-norm interactions.

use rayon::prelude::*;

use crate::car::{partial_trace, space_average, FockContext, LocalOperator, Parity};
use crate::error::{Error, Result};
use crate::interaction::{energy_per_site_element, local_hamiltonian, DecayFunction, Interaction};
use crate::linalg::{self, c64, Csr, CsrPattern, Matrix, Spectrum};
use crate::thermo::{self, ThermalState};

/// Tolerance for `‖Ψ‖_W = 1` and for matching adjoint pairs.
const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LongRangeTerm {
    pub psi: Interaction,
    /// Nonzero weight; negative weights are attractive.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongRangeModel {
    base: Interaction,
    terms: Vec<LongRangeTerm>,
    /// Index of the term carrying `Ψ_k*`.
    partner: Vec<usize>,
    decay: DecayFunction,
    warnings: Vec<String>,
}

/// Index sets of the Hahn decomposition `a = a₊ - a₋`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HahnSplit {
    /// Terms with `γ_k > 0`.
    pub repulsive: Vec<usize>,
    /// Terms with `γ_k < 0`.
    pub attractive: Vec<usize>,
}

impl HahnSplit {
    pub fn is_purely_attractive(&self) -> bool {
        self.repulsive.is_empty()
    }

    pub fn is_purely_repulsive(&self) -> bool {
        self.attractive.is_empty()
    }
}

impl LongRangeModel {
    /// Validates the model and closes the term list under `Ψ ↦ Ψ*`, appending
    /// missing adjoints with the same weight and recording a warning.
    pub fn new(base: Interaction, terms: Vec<LongRangeTerm>, decay: DecayFunction) -> Result<Self> {
        let residual = base.sub(&base.adjoint()).norm(&decay);
        if residual > 1e-12 {
            return Err(Error::NonHermitian { residual });
        }
        for (k, t) in terms.iter().enumerate() {
            if t.gamma == 0.0 || !t.gamma.is_finite() {
                return Err(Error::ZeroWeight { index: k });
            }
            let norm = t.psi.norm(&decay);
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::NotUnitNorm { index: k, norm });
            }
            if t.psi.lattice_dim() != base.lattice_dim() && !base.is_empty() {
                return Err(Error::InvalidParameter(format!("term {k} has a different lattice dimension")));
            }
        }
        let mut terms = terms;
        let mut partner = vec![usize::MAX; terms.len()];
        let mut warnings = Vec::new();
        let mut k = 0;
        while k < terms.len() {
            if partner[k] != usize::MAX {
                k += 1;
                continue;
            }
            let adj = terms[k].psi.adjoint();
            let found =
                (k..terms.len()).find(|&j| partner[j] == usize::MAX && terms[j].psi.sub(&adj).norm(&decay) <= NORM_TOL);
            match found {
                Some(j) if terms[j].gamma != terms[k].gamma => {
                    return Err(Error::InvalidParameter(format!(
                        "terms {k} and {j} are adjoint to each other but carry different weights"
                    )));
                }
                Some(j) => {
                    partner[k] = j;
                    partner[j] = k;
                }
                None => {
                    let j = terms.len();
                    warnings.push(format!(
                        "term {k} has no adjoint partner; appended its adjoint as term {j} with weight {}",
                        terms[k].gamma
                    ));
                    terms.push(LongRangeTerm { psi: adj, gamma: terms[k].gamma });
                    partner[k] = j;
                    partner.push(k);
                }
            }
            k += 1;
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Self { base, terms, partner, decay, warnings })
    }

    /// The model `(Φ, 0)`.
    pub fn short_range(base: Interaction) -> Result<Self> {
        Self::new(base, Vec::new(), DecayFunction::default())
    }

    pub fn base(&self) -> &Interaction {
        &self.base
    }

    pub fn terms(&self) -> &[LongRangeTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.gamma).collect()
    }

    /// Index of the term carrying the adjoint of term `k`.
    pub fn partner(&self, k: usize) -> usize {
        self.partner[k]
    }

    pub fn decay(&self) -> &DecayFunction {
        &self.decay
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `‖m‖ = ‖Φ‖_W + Σ_k |γ_k|`.
    pub fn norm(&self) -> f64 {
        self.base.norm(&self.decay) + self.terms.iter().map(|t| t.gamma.abs()).sum::<f64>()
    }

    pub fn hahn_split(&self) -> HahnSplit {
        let (mut repulsive, mut attractive) = (Vec::new(), Vec::new());
        for (k, t) in self.terms.iter().enumerate() {
            if t.gamma > 0.0 {
                repulsive.push(k);
            } else {
                attractive.push(k);
            }
        }
        HahnSplit { repulsive, attractive }
    }

    /// `(‖a₊‖, ‖a₋‖)`, the total repulsive and attractive weights.
    pub fn weight_split(&self) -> (f64, f64) {
        let plus = self.terms.iter().filter(|t| t.gamma > 0.0).map(|t| t.gamma).sum();
        let minus = self.terms.iter().filter(|t| t.gamma < 0.0).map(|t| -t.gamma).sum();
        (plus, minus)
    }

    /// Gauge charge `#a* - #a` of every term, if every term has a definite
    /// charge and the base interaction is gauge invariant.
    pub fn charges(&self) -> Option<Vec<i32>> {
        let charge = |phi: &Interaction| -> Option<i32> {
            let mut q = None;
            for t in phi.terms() {
                let c = t.ops().0.iter().map(|o| if o.dagger { 1 } else { -1 }).sum::<i32>();
                match q {
                    None => q = Some(c),
                    Some(p) if p != c => return None,
                    _ => {}
                }
            }
            Some(q.unwrap_or(0))
        };
        if charge(&self.base)? != 0 {
            return None;
        }
        self.terms.iter().map(|t| charge(&t.psi)).collect()
    }

    pub fn operators(&self, ctx: &FockContext) -> Result<LongRangeOperators> {
        let phi = local_hamiltonian(&self.base, ctx)?.into_matrix();
        let psi = self
            .terms
            .iter()
            .map(|t| local_hamiltonian(&t.psi, ctx).map(LocalOperator::into_matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(LongRangeOperators { volume: ctx.volume(), gammas: self.gammas(), phi, psi })
    }
}

/// `U_L^Φ` and the `U_L^{Ψ_k}` of a model on one window.
#[derive(Debug, Clone)]
pub struct LongRangeOperators {
    pub volume: usize,
    pub gammas: Vec<f64>,
    pub phi: Matrix,
    pub psi: Vec<Matrix>,
}

impl LongRangeOperators {
    /// `U_L^m = U_L^Φ + |Λ_L|^{-1} Σ_k γ_k (U_L^{Ψ_k})* U_L^{Ψ_k}`.
    pub fn hamiltonian(&self) -> Matrix {
        let mut h = self.phi.clone();
        let n = self.volume as f64;
        for (g, p) in self.gammas.iter().zip(&self.psi) {
            let sq = p.adjoint() * p;
            linalg::add_scaled(&mut h, &sq, c64::new(g / n, 0.0));
        }
        h
    }

    /// `e_k(ρ) = ρ(U_L^{Ψ_k}) / |Λ_L|`.
    pub fn energies(&self, rho: &ThermalState) -> Vec<c64> {
        self.psi.iter().map(|p| rho.expect_matrix(p) / self.volume as f64).collect()
    }

    pub fn sparse(&self) -> SparseOperators {
        SparseOperators::new(self)
    }
}

/// `U_L^Φ`, `U_L^{Ψ_k}` and `U_L^{Ψ_k}*` on one shared sparsity pattern, so
/// that `U_L^{Φ_m(c)}` can be assembled in `O(nnz)` for every `c`.
#[derive(Debug, Clone)]
pub struct SparseOperators {
    volume: usize,
    gammas: Vec<f64>,
    pattern: CsrPattern,
    phi: Vec<c64>,
    psi: Vec<Vec<c64>>,
    psi_adj: Vec<Vec<c64>>,
    phi_csr: Csr,
    psi_csr: Vec<Csr>,
}

impl SparseOperators {
    fn new(ops: &LongRangeOperators) -> Self {
        let adjoints: Vec<Matrix> = ops.psi.iter().map(|p| p.adjoint().to_owned()).collect();
        let mut all: Vec<&Matrix> = vec![&ops.phi];
        all.extend(&ops.psi);
        all.extend(&adjoints);
        let (pattern, mut vals) = Csr::with_pattern_of(&all);
        let k = ops.psi.len();
        let psi_adj = vals.split_off(1 + k);
        let psi = vals.split_off(1);
        let phi = vals.pop().expect("base values");
        Self {
            volume: ops.volume,
            gammas: ops.gammas.clone(),
            pattern,
            phi,
            psi,
            psi_adj,
            phi_csr: Csr::from_dense(&ops.phi),
            psi_csr: ops.psi.iter().map(Csr::from_dense).collect(),
        }
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn phi(&self) -> &Csr {
        &self.phi_csr
    }

    pub fn psi(&self) -> &[Csr] {
        &self.psi_csr
    }

    /// `U_L^{Φ_m(c)}`; the caller guarantees `c.len() == K`.
    pub fn hamiltonian(&self, c: &[c64]) -> Csr {
        let mut vals = self.phi.clone();
        for (k, (g, ck)) in self.gammas.iter().zip(c).enumerate() {
            if *ck == c64::new(0.0, 0.0) {
                continue;
            }
            let (a, b) = (ck.conj() * *g, *ck * *g);
            for ((v, p), q) in vals.iter_mut().zip(&self.psi[k]).zip(&self.psi_adj[k]) {
                *v += a * p + b * q;
            }
        }
        self.pattern.with_values(vals)
    }

    /// `e_k = Tr(D U_L^{Ψ_k}) / |Λ_L|` for a density matrix `D`.
    pub fn energies(&self, d: &Matrix) -> Vec<c64> {
        self.psi_csr.iter().map(|p| p.trace_with(d) / self.volume as f64).collect()
    }

    /// `Tr(D U_L^Φ)/|Λ_L| + Σ_k γ_k |e_k|²`.
    pub fn mean_field_energy(&self, d: &Matrix) -> f64 {
        let e = self.energies(d);
        self.phi_csr.trace_with(d).re / self.volume as f64
            + self.gammas.iter().zip(&e).map(|(g, c)| g * c.norm_sqr()).sum::<f64>()
    }
}

pub fn long_range_hamiltonian(m: &LongRangeModel, ctx: &FockContext) -> Result<LocalOperator> {
    let h = m.operators(ctx)?.hamiltonian();
    Ok(LocalOperator::from_parts(h, (0..ctx.volume()).collect(), Parity::Even))
}

/// Per-term values `ρ(|(𝔢_{Ψ_k})_ℓ|²)` together with the bounds
/// `|ρ(𝔢_{Ψ_k})|²` and `‖𝔢_{Ψ_k}‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceAverageTerm {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn space_avg_terms(
    m: &LongRangeModel,
    rho: &ThermalState,
    ell: usize,
    ctx: &FockContext,
) -> Result<Vec<SpaceAverageTerm>> {
    m.terms
        .iter()
        .map(|t| {
            let e = energy_per_site_element(&t.psi, ctx)?;
            let avg = space_average(ctx, &e, ell)?;
            Ok(SpaceAverageTerm {
                value: rho.expect(&avg.abs_squared()).re,
                lower: rho.expect(&e).norm_sqr(),
                upper: e.norm().powi(2),
            })
        })
        .collect()
}

/// `Δ_{a,ℓ}(ρ) = Σ_k γ_k ρ(|(𝔢_{Ψ_k})_ℓ|²)`.
pub fn space_avg_functional(m: &LongRangeModel, rho: &ThermalState, ell: usize, ctx: &FockContext) -> Result<f64> {
    let terms = space_avg_terms(m, rho, ell, ctx)?;
    Ok(m.terms.iter().zip(&terms).map(|(t, s)| t.gamma * s.value).sum())
}

/// `(β|Λ_L|)^{-1} ln Tr e^{-βU_L^m}`.
pub fn pressure_lr(m: &LongRangeModel, beta: f64, ctx: &FockContext) -> Result<f64> {
    let h = m.operators(ctx)?.hamiltonian();
    thermo::pressure_of(&h, beta, ctx.volume())
}

/// `Δ_{a,ℓ}(ρ) + ρ(U_L^Φ)/|Λ_L| - s(ρ)/β`.
pub fn lr_free_energy(m: &LongRangeModel, rho: &ThermalState, beta: f64, ell: usize, ctx: &FockContext) -> Result<f64> {
    let delta = space_avg_functional(m, rho, ell, ctx)?;
    let phi = local_hamiltonian(&m.base, ctx)?;
    Ok(delta + thermo::free_energy_of(rho, phi.matrix(), beta, ctx.volume()))
}

/// Reduced Gibbs states of `U_L^m` on a common sub-window, one per `L`.
#[derive(Debug, Clone)]
pub struct WindowTrace {
    pub half_widths: Vec<usize>,
    pub reduced: Vec<Matrix>,
    /// Trace-norm distances between every pair of reduced states.
    pub distances: Vec<Vec<f64>>,
}

impl WindowTrace {
    /// Distances between consecutive entries of the `L` list.
    pub fn consecutive(&self) -> Vec<f64> {
        (1..self.reduced.len()).map(|k| self.distances[k - 1][k]).collect()
    }
}

pub fn gibbs_window_trace(
    m: &LongRangeModel,
    beta: f64,
    lattice_dim: usize,
    spins: &[&str],
    half_widths: &[usize],
    ell: usize,
) -> Result<WindowTrace> {
    let smallest = half_widths.iter().copied().min().unwrap_or(0);
    if ell > smallest {
        return Err(Error::WindowTooSmall { requested: ell, available: smallest });
    }
    let reduced = half_widths
        .par_iter()
        .map(|&l| {
            let ctx = FockContext::new(lattice_dim, l, spins)?;
            let h = m.operators(&ctx)?.hamiltonian();
            let rho = ThermalState::gibbs(&h, beta)?;
            partial_trace(&ctx, rho.density(), &ctx.subwindow(ell)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = reduced.len();
    let mut distances = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = trace_distance(&reduced[i], &reduced[j])?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    Ok(WindowTrace { half_widths: half_widths.to_vec(), reduced, distances })
}

/// `‖A - B‖_1` for Hermitian `A`, `B`.
pub fn trace_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    let d = linalg::hermitian_part(&(a - b));
    Ok(Spectrum::new(&d)?.values().iter().map(|v| v.abs()).sum())
}

/// Approximating Hamiltonian `U_L^Φ + Σ_k γ_k (c̄_k U_L^{Ψ_k} + c_k U_L^{Ψ_k}*)`.
pub fn approximating_hamiltonian(ops: &LongRangeOperators, c: &[c64]) -> Result<Matrix> {
    if c.len() != ops.psi.len() {
        return Err(Error::LengthMismatch { expected: ops.psi.len(), got: c.len() });
    }
    let mut h = ops.phi.clone();
    for ((g, p), ck) in ops.gammas.iter().zip(&ops.psi).zip(c) {
        if *ck == c64::new(0.0, 0.0) {
            continue;
        }
        linalg::add_scaled(&mut h, p, ck.conj() * *g);
        let adj = p.adjoint().to_owned();
        linalg::add_scaled(&mut h, &adj, *ck * *g);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn empty_model_reduces_to_short_range() {
        let ctx = FockContext::new(1, 1, &["up", "dn"]).unwrap();
        let phi = models::hopping(1, 1.0, &["up", "dn"]).add(&models::chemical_potential(1, 0.3, &["up", "dn"]));
        let m = LongRangeModel::short_range(phi.clone()).unwrap();
        let h = long_range_hamiltonian(&m, &ctx).unwrap();
        let h0 = local_hamiltonian(&phi, &ctx).unwrap();
        assert_eq!(h.matrix(), h0.matrix());
        let p = pressure_lr(&m, 1.0, &ctx).unwrap();
        assert_eq!(p, thermo::pressure(&phi, 1.0, &ctx).unwrap());
        let free = LongRangeModel::short_range(Interaction::zero(1)).unwrap();
        assert!((pressure_lr(&free, 1.0, &ctx).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn auto_symmetrization_appends_adjoint() {
        let psi = models::pair_annihilation(1, "up", "dn");
        let m = LongRangeModel::new(
            Interaction::zero(1),
            vec![LongRangeTerm { psi: psi.clone(), gamma: -1.0 }],
            DecayFunction::default(),
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.partner(0), 1);
        assert_eq!(m.terms()[1].psi, psi.adjoint());
        assert_eq!(m.warnings().len(), 1);
    }

    #[test]
    fn validation_errors() {
        let psi = models::pair_annihilation(1, "up", "dn");
        let zero = LongRangeModel::new(
            Interaction::zero(1),
            vec![LongRangeTerm { psi: psi.clone(), gamma: 0.0 }],
            DecayFunction::default(),
        );
        assert!(matches!(zero, Err(Error::ZeroWeight { index: 0 })));
        let big = LongRangeModel::new(
            Interaction::zero(1),
            vec![LongRangeTerm { psi: psi.scale(c64::new(2.0, 0.0)), gamma: -1.0 }],
            DecayFunction::default(),
        );
        assert!(matches!(big, Err(Error::NotUnitNorm { index: 0, .. })));
    }

    #[test]
    fn bcs_hamiltonian_is_hermitian_and_single_site_reduces() {
        let m = models::bcs(1, 0.5, 1.0, "up", "dn");
        let ctx = FockContext::new(1, 1, &["up", "dn"]).unwrap();
        let h = long_range_hamiltonian(&m, &ctx).unwrap();
        assert!(h.hermiticity_residual() <= 1e-13);
        assert!(m.hahn_split().is_purely_attractive());

        let ctx0 = FockContext::new(1, 0, &["up", "dn"]).unwrap();
        let h0 = long_range_hamiltonian(&m, &ctx0).unwrap();
        let ops = m.operators(&ctx0).unwrap();
        let mut expected = ops.phi.clone();
        for (t, p) in m.terms().iter().zip(&ops.psi) {
            linalg::add_scaled(&mut expected, &(p.adjoint() * p), c64::new(t.gamma, 0.0));
        }
        assert!(linalg::frobenius(&(h0.matrix() - &expected)) < 1e-15);
    }

    #[test]
    fn lr_free_energy_at_full_window_matches_hamiltonian_form() {
        let m = models::bcs(1, 0.5, 1.0, "up", "dn");
        let ctx = FockContext::new(1, 1, &["up", "dn"]).unwrap();
        let h = long_range_hamiltonian(&m, &ctx).unwrap();
        let rho = ThermalState::gibbs(h.matrix(), 2.0).unwrap();
        let f = lr_free_energy(&m, &rho, 2.0, 1, &ctx).unwrap();
        let direct = thermo::free_energy_of(&rho, h.matrix(), 2.0, ctx.volume());
        assert!((f - direct).abs() < 1e-10);
        assert!((f + pressure_lr(&m, 2.0, &ctx).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn space_average_terms_respect_bounds() {
        let m = models::bcs(1, 0.5, 1.0, "up", "dn");
        let ctx = FockContext::new(1, 1, &["up", "dn"]).unwrap();
        let rho = ThermalState::tracial(ctx.fock_dim());
        for ell in 0..=1 {
            for t in space_avg_terms(&m, &rho, ell, &ctx).unwrap() {
                assert!(t.value >= t.lower - 1e-10 && t.value <= t.upper + 1e-10);
            }
        }
        let flipped = LongRangeModel::new(
            m.base().clone(),
            m.terms().iter().map(|t| LongRangeTerm { psi: t.psi.clone(), gamma: -t.gamma }).collect(),
            *m.decay(),
        )
        .unwrap();
        let a = space_avg_functional(&m, &rho, 1, &ctx).unwrap();
        let b = space_avg_functional(&flipped, &rho, 1, &ctx).unwrap();
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn window_trace_of_on_site_model_is_constant() {
        let m = LongRangeModel::short_range(models::chemical_potential(1, 0.4, &["up", "dn"])).unwrap();
        let wt = gibbs_window_trace(&m, 1.0, 1, &["up", "dn"], &[0, 1, 2], 0).unwrap();
        for d in wt.consecutive() {
            assert!(d <= 1e-12);
        }
        assert!(matches!(gibbs_window_trace(&m, 1.0, 1, &["up", "dn"], &[0, 1], 1), Err(Error::WindowTooSmall { .. })));
    }
}
