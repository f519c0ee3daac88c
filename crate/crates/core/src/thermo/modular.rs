//! Tomita-Takesaki data of a faithful state, in the Hilbert-Schmidt picture.
//!
//! The purification `Ω = ρ^{1/2}` lives in the space of `D×D` matrices, where
//! `π(A)X = AX`. In the matrix units `E_ij` of the eigenbasis of `ρ` the Tomita
//! operator is a weighted permutation composed with complex conjugation,
//! `S E_ij = (p_i/p_j)^{1/2} E_ji`, so `Δ`, `J` and their products are
//! [`Monomial`] operators with one nonzero entry per column. Index `(i, j)` of
//! the doubled space is stored at `i + j·D`.

use super::{ThermalState, FAITHFUL_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, Matrix, Spectrum, ZERO};

/// Linear operator with exactly one nonzero entry per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    /// Row of the nonzero entry of each column.
    pub target: Vec<usize>,
    pub weight: Vec<c64>,
}

impl Monomial {
    pub fn diagonal(weight: Vec<c64>) -> Self {
        Self { target: (0..weight.len()).collect(), weight }
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    /// `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let target = other.target.iter().map(|&t| self.target[t]).collect();
        let weight = other.target.iter().zip(&other.weight).map(|(&t, &w)| self.weight[t] * w).collect();
        Self { target, weight }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut target = vec![0; n];
        let mut weight = vec![ZERO; n];
        for (c, (&r, w)) in self.target.iter().zip(&self.weight).enumerate() {
            target[r] = c;
            weight[r] = w.conj();
        }
        Self { target, weight }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self { target: self.target.clone(), weight: self.weight.iter().map(|w| w.conj()).collect() }
    }

    pub fn is_diagonal(&self) -> bool {
        self.target.iter().enumerate().all(|(c, &r)| c == r)
    }

    /// Operator norm of `self - other`; infinite if the patterns differ.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.target != other.target {
            return f64::INFINITY;
        }
        self.weight.iter().zip(&other.weight).fold(0.0, |a, (x, y)| a.max((x - y).norm()))
    }
}

#[derive(Debug, Clone)]
pub struct ModularData {
    dim: usize,
    basis: Spectrum,
    log_p: Vec<f64>,
    /// Linear part `M` of `S = M K`.
    tomita: Monomial,
    /// `Δ = S*S`.
    delta: Monomial,
    /// Linear part of `J = S Δ^{-1/2}`.
    conjugation: Monomial,
}

/// Builds `Ω`, `S`, `Δ = S*S` and `J` for a faithful state.
pub fn modular_data(rho: &ThermalState) -> Result<ModularData> {
    let min = rho.min_eigenvalue();
    if min <= FAITHFUL_TOL {
        return Err(Error::StateNotFaithful { min_eigenvalue: min });
    }
    let (basis, log_p) = match rho.gibbs_data() {
        Some(g) => (g.spectrum.clone(), g.log_weights.clone()),
        None => {
            let s = Spectrum::new(rho.density())?;
            let l = s.values().iter().map(|p| p.ln()).collect();
            (s, l)
        }
    };
    let d = rho.dim();
    let idx = |i: usize, j: usize| i + j * d;
    let mut target = vec![0; d * d];
    let mut weight = vec![ZERO; d * d];
    for j in 0..d {
        for i in 0..d {
            target[idx(i, j)] = idx(j, i);
            weight[idx(i, j)] = c64::new((0.5 * (log_p[i] - log_p[j])).exp(), 0.0);
        }
    }
    let tomita = Monomial { target, weight };
    // S = M K is antilinear, so S*S = K M* M K = conj(M* M).
    let delta = tomita.adjoint().mul(&tomita).conj();
    if !delta.is_diagonal() {
        return Err(Error::Eigen("modular operator is not diagonal in the matrix-unit basis".into()));
    }
    // J = M K Δ^{-1/2} = M conj(Δ^{-1/2}) K.
    let inv_sqrt = Monomial::diagonal(delta.weight.iter().map(|w| c64::new(w.re.powf(-0.5), 0.0)).collect());
    let conjugation = tomita.mul(&inv_sqrt.conj());
    Ok(ModularData { dim: d, basis, log_p, tomita, delta, conjugation })
}

impl ModularData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tomita(&self) -> &Monomial {
        &self.tomita
    }

    pub fn modular_operator(&self) -> &Monomial {
        &self.delta
    }

    pub fn conjugation(&self) -> &Monomial {
        &self.conjugation
    }

    /// The purification vector `Ω = ρ^{1/2}` as a matrix in the original basis.
    pub fn purification(&self) -> Matrix {
        let mut diag = linalg::zeros(self.dim);
        for (k, l) in self.log_p.iter().enumerate() {
            diag[(k, k)] = c64::new((0.5 * l).exp(), 0.0);
        }
        self.basis.from_eigenbasis(&diag)
    }

    /// Smallest singular value of `Ω`; positive iff `Ω` is cyclic and separating.
    pub fn separating_margin(&self) -> f64 {
        self.log_p.iter().map(|l| (0.5 * l).exp()).fold(f64::INFINITY, f64::min)
    }

    /// `‖Δ - D ⊗ D̄^{-1}‖`.
    pub fn delta_residual(&self) -> f64 {
        let d = self.dim;
        let p: Vec<f64> = self.log_p.iter().map(|l| l.exp()).collect();
        let kron = Monomial::diagonal((0..d * d).map(|r| c64::new(p[r % d] / p[r / d], 0.0)).collect());
        self.delta.distance(&kron)
    }

    /// `‖JΔJ - Δ^{-1}‖`.
    pub fn jdj_residual(&self) -> f64 {
        // J X J = J_lin conj(X) conj(J_lin) for linear X.
        let jdj = self.conjugation.mul(&self.delta.conj()).mul(&self.conjugation.conj());
        let inv = Monomial::diagonal(self.delta.weight.iter().map(|w| w.inv()).collect());
        jdj.distance(&inv)
    }

    /// `‖J² - 1‖`.
    pub fn involution_residual(&self) -> f64 {
        let jj = self.conjugation.mul(&self.conjugation.conj());
        jj.distance(&Monomial::diagonal(vec![c64::new(1.0, 0.0); self.dim * self.dim]))
    }

    /// `‖σ_{-t/β}(π(A)) - π(τ_t(A))‖`, with `σ_s(X) = Δ^{is} X Δ^{-is}` and
    /// `τ_t` generated by `h`.
    pub fn flow_residual(&self, h: &Matrix, beta: f64, a: &Matrix, t: f64) -> Result<f64> {
        let d = self.dim;
        let s = -t / beta;
        let evolved = Spectrum::new(h)?.heisenberg(a, t);
        let ap = self.basis.to_eigenbasis(a);
        let tp = self.basis.to_eigenbasis(&evolved);
        let phase: Vec<c64> = self.delta.weight.iter().map(|w| c64::cis(s * w.re.ln())).collect();
        let mut worst = 0.0f64;
        // π(A) = A ⊗ 1 is block diagonal with one D×D block per j.
        for j in 0..d {
            let block =
                faer::Mat::from_fn(d, d, |i, k| phase[i + j * d] * ap[(i, k)] * phase[k + j * d].conj() - tp[(i, k)]);
            worst = worst.max(linalg::op_norm(&block));
        }
        Ok(worst)
    }

    /// Frobenius norm (an upper bound on the operator norm) of `[Jπ(A)J, π(B)]`.
    pub fn commutant_residual(&self, a: &Matrix, b: &Matrix) -> f64 {
        let d = self.dim;
        let ap = self.basis.to_eigenbasis(a);
        let bp = self.basis.to_eigenbasis(b);
        let j = &self.conjugation;
        let jbar = j.conj();
        // Jπ(A)J = J_lin (Ā ⊗ 1) conj(J_lin).
        let apply_c = |v: &[(usize, c64)], out: &mut Vec<(usize, c64)>| {
            for &(r, z) in v {
                let r1 = jbar.target[r];
                let z1 = jbar.weight[r] * z;
                let (l, k) = (r1 % d, r1 / d);
                for i in 0..d {
                    let r2 = i + k * d;
                    out.push((j.target[r2], j.weight[r2] * ap[(i, l)].conj() * z1));
                }
            }
        };
        let apply_b = |v: &[(usize, c64)], out: &mut Vec<(usize, c64)>| {
            for &(r, z) in v {
                let (k, col) = (r % d, r / d);
                for i in 0..d {
                    out.push((i + col * d, bp[(i, k)] * z));
                }
            }
        };
        let mut acc = vec![ZERO; d * d];
        let mut total = 0.0;
        let (mut t1, mut t2, mut t3) = (Vec::new(), Vec::new(), Vec::new());
        for c in 0..d * d {
            let e = [(c, c64::new(1.0, 0.0))];
            t1.clear();
            t2.clear();
            t3.clear();
            apply_b(&e, &mut t1);
            apply_c(&t1, &mut t2);
            for &(r, z) in &t2 {
                acc[r] += z;
            }
            t1.clear();
            apply_c(&e, &mut t1);
            apply_b(&t1, &mut t3);
            for &(r, z) in &t3 {
                acc[r] -= z;
            }
            for z in acc.iter_mut() {
                total += z.norm_sqr();
                *z = ZERO;
            }
        }
        total.sqrt()
    }
}
