//! States on a finite window: Gibbs states, entropy, free energy and pressure.
//!
//! Every `e^{-βH}` is evaluated in the eigenbasis of `H` after shifting by the
//! ground energy, so partition functions never overflow.

mod kms;
mod modular;

pub use kms::{kms_boundary_residual, kms_smeared_residual, KmsProbe, KmsReport};
pub use modular::{modular_data, ModularData, Monomial};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::car::{FockContext, LocalOperator};
use crate::error::{Error, Result};
use crate::interaction::{local_hamiltonian, Interaction};
use crate::linalg::{self, c64, Matrix, Spectrum};

/// Largest inverse temperature accepted by [`ThermalState::gibbs`].
pub const MAX_BETA: f64 = 200.0;

/// Eigenvalues below this are treated as zero when testing faithfulness.
pub const FAITHFUL_TOL: f64 = 1e-14;

/// Generator data kept for states built as `e^{-βH}/Z`.
#[derive(Debug, Clone)]
pub struct GibbsData {
    pub beta: f64,
    pub spectrum: Spectrum,
    /// `ln p_n` in the eigenbasis order of `spectrum`.
    pub log_weights: Vec<f64>,
    /// `ln Tr e^{-βH}`.
    pub log_partition: f64,
}

/// A density matrix on the Fock space of a window.
#[derive(Debug, Clone)]
pub struct ThermalState {
    density: Matrix,
    /// Eigenvalues of the density matrix, unordered.
    eigenvalues: Vec<f64>,
    gibbs: Option<GibbsData>,
}

impl ThermalState {
    /// Gibbs state `e^{-βH}/Z` of a Hermitian `H`.
    pub fn gibbs(h: &Matrix, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let spectrum = Spectrum::new(h)?;
        Ok(Self::gibbs_from_spectrum(spectrum, beta))
    }

    pub fn gibbs_from_spectrum(spectrum: Spectrum, beta: f64) -> Self {
        let log_partition = log_trace_exp(&spectrum, beta);
        let log_weights: Vec<f64> = spectrum.values().iter().map(|e| -beta * e - log_partition).collect();
        let weights: Vec<f64> = log_weights.iter().map(|l| l.exp()).collect();
        let density = spectrum_weighted(&spectrum, &weights);
        Self { density, eigenvalues: weights, gibbs: Some(GibbsData { beta, spectrum, log_weights, log_partition }) }
    }

    /// Normalized trace `1/dim`.
    pub fn tracial(dim: usize) -> Self {
        let p = 1.0 / dim as f64;
        Self {
            density: linalg::scale(&linalg::identity(dim), c64::new(p, 0.0)),
            eigenvalues: vec![p; dim],
            gibbs: None,
        }
    }

    /// Validates a density matrix: Hermitian, unit trace, positive.
    pub fn from_density(density: Matrix) -> Result<Self> {
        let spectrum = Spectrum::new(&density)?;
        let tr = linalg::trace(&density);
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix has trace {tr}")));
        }
        let min = spectrum.min();
        if min < -1e-10 {
            return Err(Error::NonPhysicalState { min_eigenvalue: min });
        }
        Ok(Self { density: linalg::hermitian_part(&density), eigenvalues: spectrum.values().to_vec(), gibbs: None })
    }

    pub fn density(&self) -> &Matrix {
        &self.density
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_faithful(&self) -> bool {
        self.min_eigenvalue() > FAITHFUL_TOL
    }

    pub fn gibbs_data(&self) -> Option<&GibbsData> {
        self.gibbs.as_ref()
    }

    pub fn beta(&self) -> Option<f64> {
        self.gibbs.as_ref().map(|g| g.beta)
    }

    /// `ρ(A) = Tr(D A)`.
    pub fn expect(&self, a: &LocalOperator) -> c64 {
        linalg::trace_product(&self.density, a.matrix())
    }

    pub fn expect_matrix(&self, a: &Matrix) -> c64 {
        linalg::trace_product(&self.density, a)
    }

    /// Von Neumann entropy `-Tr D ln D`, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        if let Some(g) = &self.gibbs {
            return -g.log_weights.iter().map(|l| if l.is_finite() { l.exp() * l } else { 0.0 }).sum::<f64>();
        }
        -self.eigenvalues.iter().map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 }).sum::<f64>()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0 && beta <= MAX_BETA) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must lie in (0, {MAX_BETA}]")));
    }
    Ok(())
}

/// `Σ_n w_n |n⟩⟨n|` in the original basis.
fn spectrum_weighted(spectrum: &Spectrum, weights: &[f64]) -> Matrix {
    let n = spectrum.dim();
    let mut diag = linalg::zeros(n);
    for (k, w) in weights.iter().enumerate() {
        diag[(k, k)] = c64::new(*w, 0.0);
    }
    linalg::hermitian_part(&spectrum.from_eigenbasis(&diag))
}

/// `ln Tr e^{-βH}` with the ground energy factored out.
pub fn log_trace_exp(spectrum: &Spectrum, beta: f64) -> f64 {
    let e0 = spectrum.min();
    let sum: f64 = spectrum.values().iter().map(|e| (-beta * (e - e0)).exp()).sum();
    -beta * e0 + sum.ln()
}

/// Entropy per site.
pub fn entropy_density(rho: &ThermalState, ctx: &FockContext) -> f64 {
    rho.entropy() / ctx.volume() as f64
}

/// `f = ρ(U_L^Φ)/|Λ_L| - s/β` for a short-range interaction.
pub fn free_energy_density(rho: &ThermalState, phi: &Interaction, beta: f64, ctx: &FockContext) -> Result<f64> {
    let h = local_hamiltonian(phi, ctx)?;
    Ok(free_energy_of(rho, h.matrix(), beta, ctx.volume()))
}

/// Free energy density of `ρ` for an explicit Hamiltonian on `volume` sites.
pub fn free_energy_of(rho: &ThermalState, h: &Matrix, beta: f64, volume: usize) -> f64 {
    let n = volume as f64;
    rho.expect_matrix(h).re / n - rho.entropy() / (beta * n)
}

/// `(β|Λ_L|)^{-1} ln Tr e^{-βU_L^Φ}`.
pub fn pressure(phi: &Interaction, beta: f64, ctx: &FockContext) -> Result<f64> {
    let h = local_hamiltonian(phi, ctx)?;
    pressure_of(h.matrix(), beta, ctx.volume())
}

pub fn pressure_of(h: &Matrix, beta: f64, volume: usize) -> Result<f64> {
    check_beta(beta)?;
    let spectrum = Spectrum::new(h)?;
    Ok(log_trace_exp(&spectrum, beta) / (beta * volume as f64))
}

/// Random even matrix with entries uniform in the unit square.
pub fn random_even<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    faer::Mat::from_fn(dim, dim, |i, j| {
        let z = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if (i.count_ones() + j.count_ones()) % 2 == 0 {
            z
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Haar-random pure state mixed with the tracial state at a uniform weight.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ThermalState {
    let psi: Vec<c64> = (0..dim).map(|_| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let w: f64 = rng.gen();
    let density = faer::Mat::from_fn(dim, dim, |i, j| {
        let pure = psi[i] * psi[j].conj() / (norm * norm);
        let mix = if i == j { (1.0 - w) / dim as f64 } else { 0.0 };
        pure * w + mix
    });
    ThermalState::from_density(density).expect("convex mixture of states is a state")
}

/// Outcome of the sampled Gibbs variational principle.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReport {
    pub pressure: f64,
    pub gibbs_free_energy: f64,
    /// `|f(Gibbs) + P|`.
    pub identity_residual: f64,
    /// `min_k f(ρ_k) - f(Gibbs)` over the samples.
    pub min_excess: f64,
    /// Samples with `f(ρ_k) < f(Gibbs) - 1e-12`.
    pub violations: usize,
    pub samples: usize,
}

impl VariationalReport {
    pub fn passed(&self) -> bool {
        self.identity_residual <= 1e-10 && self.violations == 0
    }
}

/// Gibbs variational check for a short-range interaction.
pub fn gibbs_variational_check<R: Rng + ?Sized>(
    phi: &Interaction,
    beta: f64,
    ctx: &FockContext,
    n_samples: usize,
    rng: &mut R,
) -> Result<VariationalReport> {
    let h = local_hamiltonian(phi, ctx)?;
    variational_check_of(h.matrix(), beta, ctx.volume(), n_samples, rng)
}

/// Gibbs variational check for an explicit Hamiltonian.
pub fn variational_check_of<R: Rng + ?Sized>(
    h: &Matrix,
    beta: f64,
    volume: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<VariationalReport> {
    let gibbs = ThermalState::gibbs(h, beta)?;
    let p = log_trace_exp(&gibbs.gibbs_data().expect("gibbs").spectrum, beta) / (beta * volume as f64);
    let fg = free_energy_of(&gibbs, h, beta, volume);
    let mut min_excess = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..n_samples {
        let rho = random_state(h.nrows(), rng);
        let excess = free_energy_of(&rho, h, beta, volume) - fg;
        min_excess = min_excess.min(excess);
        if excess < -1e-12 {
            violations += 1;
        }
    }
    Ok(VariationalReport {
        pressure: p,
        gibbs_free_energy: fg,
        identity_residual: (fg + p).abs(),
        min_excess,
        violations,
        samples: n_samples,
    })
}
