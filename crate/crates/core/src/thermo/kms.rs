//! Finite-volume KMS checks in the eigenbasis of the generator.
//!
//! The boundary form compares `ω(A τ_{iβ}(B))` with `ω(BA)`. The smeared form
//! compares `∫ f(t - iβ) ω(A τ_t(B)) dt` with `∫ f(t) ω(τ_t(B) A) dt` for the
//! Gaussian `f(t) = exp(-t²/2σ²)`, whose transforms are closed-form.

use std::f64::consts::PI;

use super::{check_beta, log_trace_exp, ThermalState};
use crate::car::LocalOperator;
use crate::error::Result;
use crate::linalg::{self, c64, Matrix, Spectrum, ZERO};

/// Frobenius distance below which a state counts as the Gibbs state of `H`.
const GENERATOR_TOL: f64 = 1e-9;

/// Largest exponent fed to `exp` in the non-Gibbs branch.
const EXP_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmsReport {
    pub residual: f64,
    pub lhs: c64,
    pub rhs: c64,
    /// `‖ρ - e^{-βH}/Z‖_F`.
    pub generator_mismatch: f64,
    /// False when the state is not the Gibbs state of the tested generator.
    pub gibbs_of_h: bool,
}

/// Cached eigendata for evaluating many KMS pairs against one `(ρ, H, β)`.
#[derive(Debug, Clone)]
pub struct KmsProbe {
    spectrum: Spectrum,
    beta: f64,
    /// Density in the eigenbasis of `H`.
    rho: Matrix,
    /// `ln p_n` of `e^{-βH}/Z`.
    log_weights: Vec<f64>,
    mismatch: f64,
}

impl KmsProbe {
    pub fn new(rho: &ThermalState, h: &Matrix, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let spectrum = Spectrum::new(h)?;
        let log_z = log_trace_exp(&spectrum, beta);
        let log_weights: Vec<f64> = spectrum.values().iter().map(|e| -beta * e - log_z).collect();
        let rho_eig = spectrum.to_eigenbasis(rho.density());
        let mut diff = rho_eig.clone();
        for (k, l) in log_weights.iter().enumerate() {
            diff[(k, k)] -= c64::new(l.exp(), 0.0);
        }
        let mismatch = linalg::frobenius(&diff);
        Ok(Self { spectrum, beta, rho: rho_eig, log_weights, mismatch })
    }

    pub fn is_gibbs(&self) -> bool {
        self.mismatch <= GENERATOR_TOL
    }

    pub fn generator_mismatch(&self) -> f64 {
        self.mismatch
    }

    /// `|ω(A τ_{iβ}(B)) - ω(BA)|`.
    pub fn boundary(&self, a: &Matrix, b: &Matrix) -> KmsReport {
        let e = self.spectrum.values();
        let beta = self.beta;
        self.evaluate(a, b, |m, k| (-beta * (e[m] - e[k]), 0.0), |_, _| 1.0)
    }

    /// Gaussian-smeared KMS residual with width `sigma`.
    pub fn smeared(&self, a: &Matrix, b: &Matrix, sigma: f64) -> KmsReport {
        let e = self.spectrum.values();
        let beta = self.beta;
        let norm = (2.0 * PI).sqrt() * sigma;
        let gauss = |w: f64| -0.5 * sigma * sigma * w * w;
        self.evaluate(
            a,
            b,
            |m, k| {
                let w = e[m] - e[k];
                (-beta * w, gauss(w) + norm.ln())
            },
            |n, m| norm * gauss(e[n] - e[m]).exp(),
        )
    }

    /// `lhs = Σ_{k,m} (ρA)_{km} B_{mk} exp(x + y)` with `(x, y) = lhs_exp(m, k)`,
    /// where `x` carries the imaginary-time shift, and
    /// `rhs = Σ_{n,m} B_{nm} (Aρ)_{mn} rhs_weight(n, m)`.
    fn evaluate(
        &self,
        a: &Matrix,
        b: &Matrix,
        lhs_exp: impl Fn(usize, usize) -> (f64, f64),
        rhs_weight: impl Fn(usize, usize) -> f64,
    ) -> KmsReport {
        let ap = self.spectrum.to_eigenbasis(a);
        let bp = self.spectrum.to_eigenbasis(b);
        let n = ap.nrows();
        let gibbs = self.is_gibbs();
        let mut lhs = ZERO;
        let mut rhs = ZERO;
        if gibbs {
            // ρ is diagonal with weights p_k; fold ln p_k into the exponent.
            for k in 0..n {
                let lk = self.log_weights[k];
                for m in 0..n {
                    let (x, y) = lhs_exp(m, k);
                    lhs += ap[(k, m)] * bp[(m, k)] * (lk + x + y).exp();
                    rhs += bp[(k, m)] * ap[(m, k)] * rhs_weight(k, m) * lk.exp();
                }
            }
        } else {
            let ra = &self.rho * &ap;
            let ar = &ap * &self.rho;
            for k in 0..n {
                for m in 0..n {
                    let (x, y) = lhs_exp(m, k);
                    lhs += ra[(k, m)] * bp[(m, k)] * (x + y).min(EXP_CAP).exp();
                    rhs += bp[(k, m)] * ar[(m, k)] * rhs_weight(k, m);
                }
            }
        }
        KmsReport { residual: (lhs - rhs).norm(), lhs, rhs, generator_mismatch: self.mismatch, gibbs_of_h: gibbs }
    }
}

/// `|ω(A τ_{iβ}(B)) - ω(BA)|` for `ω = ρ` and `τ` generated by `H`.
pub fn kms_boundary_residual(
    rho: &ThermalState,
    h: &LocalOperator,
    beta: f64,
    a: &LocalOperator,
    b: &LocalOperator,
) -> Result<KmsReport> {
    Ok(KmsProbe::new(rho, h.matrix(), beta)?.boundary(a.matrix(), b.matrix()))
}

/// Gaussian-smeared form of the KMS condition.
pub fn kms_smeared_residual(
    rho: &ThermalState,
    h: &LocalOperator,
    beta: f64,
    a: &LocalOperator,
    b: &LocalOperator,
    sigma: f64,
) -> Result<KmsReport> {
    Ok(KmsProbe::new(rho, h.matrix(), beta)?.smeared(a.matrix(), b.matrix(), sigma))
}
