//! CAR algebra of a finite periodic window, realized on fermionic Fock space.
//!
//! Modes are ordered lexicographically by (site, spin). Basis state `n` has
//! mode `i` occupied iff bit `i` of `n` is set, and generators carry the usual
//! Jordan-Wigner string over lower modes. Mode permutations (translations,
//! spin relabelings) are implemented by their second-quantized unitaries, so
//! they act as exact automorphisms with no boundary-string bookkeeping.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, Matrix, ONE, ZERO};
use crate::thermo::ThermalState;

pub type Site = Vec<i32>;

pub const DEFAULT_MODE_CAP: usize = 14;

/// Finite window `Λ_L = {x : |x_i| ≤ L}` of `Z^d` with periodic identification.
#[derive(Debug, Clone, PartialEq)]
pub struct FockContext {
    lattice_dim: usize,
    half_width: usize,
    spins: Vec<String>,
    sites: Vec<Site>,
}

impl FockContext {
    pub fn new(lattice_dim: usize, half_width: usize, spins: &[&str]) -> Result<Self> {
        Self::with_cap(lattice_dim, half_width, spins, DEFAULT_MODE_CAP)
    }

    pub fn with_cap(lattice_dim: usize, half_width: usize, spins: &[&str], cap: usize) -> Result<Self> {
        if lattice_dim == 0 {
            return Err(Error::InvalidParameter("lattice dimension must be positive".into()));
        }
        if spins.is_empty() {
            return Err(Error::SpinSetTooSmall { have: 0, need: 1 });
        }
        let unique: BTreeSet<&str> = spins.iter().copied().collect();
        if unique.len() != spins.len() {
            return Err(Error::InvalidParameter("spin labels must be distinct".into()));
        }
        let period = (2 * half_width + 1) as u64;
        let n_sites = period.checked_pow(lattice_dim as u32).unwrap_or(u64::MAX);
        let modes = n_sites.saturating_mul(spins.len() as u64);
        if modes > cap as u64 {
            return Err(Error::ModeCapExceeded { modes: modes.min(usize::MAX as u64) as usize, cap });
        }
        let l = half_width as i32;
        let mut sites: Vec<Site> = vec![vec![]];
        for _ in 0..lattice_dim {
            sites = sites
                .into_iter()
                .flat_map(|s| {
                    (-l..=l).map(move |c| {
                        let mut t = s.clone();
                        t.push(c);
                        t
                    })
                })
                .collect();
        }
        Ok(Self { lattice_dim, half_width, spins: spins.iter().map(|s| s.to_string()).collect(), sites })
    }

    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Torus period `2L + 1` along each axis.
    pub fn period(&self) -> i32 {
        2 * self.half_width as i32 + 1
    }

    pub fn spins(&self) -> &[String] {
        &self.spins
    }

    /// Sites of the window in lexicographic order.
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn volume(&self) -> usize {
        self.sites.len()
    }

    pub fn modes(&self) -> usize {
        self.sites.len() * self.spins.len()
    }

    pub fn fock_dim(&self) -> usize {
        1usize << self.modes()
    }

    pub fn spin_index(&self, label: &str) -> Result<usize> {
        self.spins.iter().position(|s| s == label).ok_or_else(|| Error::UnknownSpin(label.to_string()))
    }

    /// Representative of `site` in the window, coordinates reduced mod `2L+1`.
    pub fn wrap(&self, site: &[i32]) -> Site {
        let p = self.period();
        let l = self.half_width as i32;
        site.iter().map(|c| (c + l).rem_euclid(p) - l).collect()
    }

    pub fn site_index(&self, site: &[i32]) -> Result<usize> {
        if site.len() != self.lattice_dim {
            return Err(Error::DimensionMismatch { site: site.to_vec(), expected: self.lattice_dim, got: site.len() });
        }
        let l = self.half_width as i32;
        if site.iter().any(|c| c.abs() > l) {
            return Err(Error::ModeOutOfRange { site: site.to_vec(), spin: String::new() });
        }
        let p = self.period() as usize;
        Ok(site.iter().fold(0usize, |acc, c| acc * p + (c + l) as usize))
    }

    /// Index of the mode at a wrapped site.
    pub fn wrapped_mode(&self, site: &[i32], spin: usize) -> Result<usize> {
        if spin >= self.spins.len() {
            return Err(Error::ModeOutOfRange { site: site.to_vec(), spin: spin.to_string() });
        }
        let w = self.wrap(site);
        Ok(self.site_index(&w)? * self.spins.len() + spin)
    }

    pub fn mode_index(&self, site: &[i32], spin: &str) -> Result<usize> {
        let s =
            self.spin_index(spin).map_err(|_| Error::ModeOutOfRange { site: site.to_vec(), spin: spin.to_string() })?;
        let idx = self.site_index(site).map_err(|e| match e {
            Error::ModeOutOfRange { site, .. } => Error::ModeOutOfRange { site, spin: spin.to_string() },
            other => other,
        })?;
        Ok(idx * self.spins.len() + s)
    }

    pub fn mode_site(&self, mode: usize) -> usize {
        mode / self.spins.len()
    }

    /// Mode permutation induced by the translation `y -> y + x` on the torus.
    pub fn translation_permutation(&self, x: &[i32]) -> Vec<usize> {
        let ns = self.spins.len();
        let mut perm = vec![0; self.modes()];
        for (si, site) in self.sites.iter().enumerate() {
            let shifted: Site = site.iter().zip(x).map(|(a, b)| a + b).collect();
            let target = self.site_index(&self.wrap(&shifted)).expect("wrapped site is in window");
            for s in 0..ns {
                perm[si * ns + s] = target * ns + s;
            }
        }
        perm
    }

    /// Sites of the sub-window `Λ_ℓ`.
    pub fn subwindow(&self, ell: usize) -> Result<Vec<Site>> {
        if ell > self.half_width {
            return Err(Error::WindowTooSmall { requested: ell, available: self.half_width });
        }
        let l = ell as i32;
        Ok(self.sites.iter().filter(|s| s.iter().all(|c| c.abs() <= l)).cloned().collect())
    }

    pub fn number_operator(&self) -> LocalOperator {
        let d = self.fock_dim();
        let mut m = linalg::zeros(d);
        for n in 0..d {
            m[(n, n)] = c64::new(n.count_ones() as f64, 0.0);
        }
        LocalOperator::from_parts(m, (0..self.volume()).collect(), Parity::Even)
    }

    pub fn identity(&self) -> LocalOperator {
        LocalOperator::from_parts(linalg::identity(self.fock_dim()), BTreeSet::new(), Parity::Even)
    }

    pub fn zero(&self) -> LocalOperator {
        LocalOperator::from_parts(linalg::zeros(self.fock_dim()), BTreeSet::new(), Parity::Even)
    }
}

/// One factor of a fermionic monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

/// Matrix of `coeff * op_1 op_2 ... op_k` on the Fock space of `modes` modes.
pub fn monomial_matrix(modes: usize, ops: &[Ladder], coeff: c64) -> Matrix {
    let d = 1usize << modes;
    let mut m = linalg::zeros(d);
    accumulate_monomial(&mut m, ops, coeff);
    m
}

pub(crate) fn accumulate_monomial(m: &mut Matrix, ops: &[Ladder], coeff: c64) {
    let d = m.nrows();
    'basis: for n in 0..d {
        let mut state = n;
        let mut negative = false;
        for op in ops.iter().rev() {
            let bit = 1usize << op.mode;
            let occupied = state & bit != 0;
            if occupied != !op.dagger {
                continue 'basis;
            }
            if (state & (bit - 1)).count_ones() % 2 == 1 {
                negative = !negative;
            }
            state ^= bit;
        }
        m[(state, n)] += if negative { -coeff } else { coeff };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    fn combine_product(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Mixed, _) | (_, Parity::Mixed) => Parity::Mixed,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    fn combine_sum(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::Mixed
        }
    }
}

/// Dense operator on the window's Fock space with support and parity metadata.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    matrix: Matrix,
    /// Site indices of the window the operator acts on.
    support: BTreeSet<usize>,
    parity: Parity,
}

impl LocalOperator {
    /// Wraps a matrix; parity is determined by conjugation with `(-1)^N`.
    pub fn new(matrix: Matrix, support: BTreeSet<usize>) -> Self {
        let parity = classify_parity(&matrix);
        Self { matrix, support, parity }
    }

    /// Wraps a matrix acting on the whole window.
    pub fn from_matrix(ctx: &FockContext, matrix: Matrix) -> Result<Self> {
        if matrix.nrows() != ctx.fock_dim() || matrix.ncols() != ctx.fock_dim() {
            return Err(Error::ShapeMismatch { left: matrix.nrows(), right: ctx.fock_dim() });
        }
        Ok(Self::new(matrix, (0..ctx.volume()).collect()))
    }

    pub(crate) fn from_parts(matrix: Matrix, support: BTreeSet<usize>, parity: Parity) -> Self {
        Self { matrix, support, parity }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(linalg::adjoint(&self.matrix), self.support.clone(), self.parity)
    }

    pub fn scale(&self, s: c64) -> Self {
        Self::from_parts(linalg::scale(&self.matrix, s), self.support.clone(), self.parity)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// `|A|^2 = A* A`.
    pub fn abs_squared(&self) -> Self {
        &self.adjoint() * self
    }

    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.matrix)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::op_norm(&(&self.matrix - &other.matrix))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.matrix)
    }
}

impl Add for &LocalOperator {
    type Output = LocalOperator;
    fn add(self, rhs: &LocalOperator) -> LocalOperator {
        LocalOperator::from_parts(
            &self.matrix + &rhs.matrix,
            self.support.union(&rhs.support).copied().collect(),
            self.parity.combine_sum(rhs.parity),
        )
    }
}

impl Sub for &LocalOperator {
    type Output = LocalOperator;
    fn sub(self, rhs: &LocalOperator) -> LocalOperator {
        LocalOperator::from_parts(
            &self.matrix - &rhs.matrix,
            self.support.union(&rhs.support).copied().collect(),
            self.parity.combine_sum(rhs.parity),
        )
    }
}

impl Mul for &LocalOperator {
    type Output = LocalOperator;
    fn mul(self, rhs: &LocalOperator) -> LocalOperator {
        LocalOperator::from_parts(
            &self.matrix * &rhs.matrix,
            self.support.union(&rhs.support).copied().collect(),
            self.parity.combine_product(rhs.parity),
        )
    }
}

fn classify_parity(m: &Matrix) -> Parity {
    let mut even = 0.0f64;
    let mut odd = 0.0f64;
    for j in 0..m.ncols() {
        let pj = j.count_ones() % 2;
        for (i, z) in m.col_as_slice(j).iter().enumerate() {
            if (i.count_ones() % 2) == pj {
                even = even.max(z.norm());
            } else {
                odd = odd.max(z.norm());
            }
        }
    }
    let tol = 1e-12 * even.max(odd).max(1.0);
    if odd <= tol {
        Parity::Even
    } else if even <= tol {
        Parity::Odd
    } else {
        Parity::Mixed
    }
}

pub fn annihilation(ctx: &FockContext, site: &[i32], spin: &str) -> Result<LocalOperator> {
    ladder(ctx, site, spin, false)
}

pub fn creation(ctx: &FockContext, site: &[i32], spin: &str) -> Result<LocalOperator> {
    ladder(ctx, site, spin, true)
}

fn ladder(ctx: &FockContext, site: &[i32], spin: &str, dagger: bool) -> Result<LocalOperator> {
    let mode = ctx.mode_index(site, spin)?;
    let m = monomial_matrix(ctx.modes(), &[Ladder { mode, dagger }], ONE);
    let support = BTreeSet::from([ctx.mode_site(mode)]);
    Ok(LocalOperator::from_parts(m, support, Parity::Odd))
}

/// Annihilation operator by mode index.
pub fn annihilation_mode(ctx: &FockContext, mode: usize) -> LocalOperator {
    let m = monomial_matrix(ctx.modes(), &[Ladder { mode, dagger: false }], ONE);
    LocalOperator::from_parts(m, BTreeSet::from([ctx.mode_site(mode)]), Parity::Odd)
}

/// `g_θ(A) = e^{iθN} A e^{-iθN}`, so that `g_θ(a) = e^{-iθ} a`.
pub fn gauge_automorphism(theta: f64, a: &LocalOperator) -> LocalOperator {
    let m = a.matrix();
    let out = faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let dn = i.count_ones() as f64 - j.count_ones() as f64;
        m[(i, j)] * c64::cis(theta * dn)
    });
    LocalOperator::from_parts(out, a.support.clone(), a.parity)
}

/// Conjugation by the second-quantized unitary of a mode permutation.
pub fn permute_modes(perm: &[usize], a: &LocalOperator) -> LocalOperator {
    let (targets, signs) = basis_permutation(perm);
    let m = a.matrix();
    let d = m.nrows();
    let mut out = linalg::zeros(d);
    for j in 0..d {
        let col = m.col_as_slice(j);
        let tj = targets[j];
        let sj = signs[j];
        for (i, z) in col.iter().enumerate() {
            if *z != ZERO {
                out[(targets[i], tj)] = *z * (signs[i] * sj);
            }
        }
    }
    LocalOperator::from_parts(out, a.support.clone(), a.parity)
}

/// Image of each basis state under a mode permutation, with the reordering sign.
fn basis_permutation(perm: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let modes = perm.len();
    let d = 1usize << modes;
    let mut targets = vec![0usize; d];
    let mut signs = vec![1.0f64; d];
    let mut buf = Vec::with_capacity(modes);
    for n in 0..d {
        buf.clear();
        let mut t = 0usize;
        for (i, &p) in perm.iter().enumerate() {
            if n >> i & 1 == 1 {
                buf.push(p);
                t |= 1 << p;
            }
        }
        let mut inversions = 0usize;
        for a in 0..buf.len() {
            for b in (a + 1)..buf.len() {
                if buf[a] > buf[b] {
                    inversions += 1;
                }
            }
        }
        targets[n] = t;
        signs[n] = if inversions.is_multiple_of(2) { 1.0 } else { -1.0 };
    }
    (targets, signs)
}

/// Torus translation `α_x`.
pub fn translate(ctx: &FockContext, a: &LocalOperator, x: &[i32]) -> LocalOperator {
    let perm = ctx.translation_permutation(x);
    let mut out = permute_modes(&perm, a);
    let ns = ctx.spins().len();
    out.support = a.support.iter().map(|&s| perm[s * ns] / ns).collect();
    out
}

/// Space average `A_ℓ = |Λ_ℓ|^{-1} Σ_{x∈Λ_ℓ} α_x(A)`.
pub fn space_average(ctx: &FockContext, a: &LocalOperator, ell: usize) -> Result<LocalOperator> {
    let shifts = ctx.subwindow(ell)?;
    let mut acc = ctx.zero();
    acc.parity = a.parity;
    for x in &shifts {
        let t = translate(ctx, a, x);
        linalg::add_scaled(&mut acc.matrix, &t.matrix, ONE);
        acc.support.extend(t.support);
    }
    acc.matrix = linalg::scale(&acc.matrix, c64::new(1.0 / shifts.len() as f64, 0.0));
    Ok(acc)
}

/// `ρ(|A_ℓ|²) − |ρ(A)|²`; vanishes in the limit for ergodic states.
pub fn ergodicity_gap(ctx: &FockContext, rho: &ThermalState, a: &LocalOperator, ell: usize) -> Result<f64> {
    let avg = space_average(ctx, a, ell)?;
    let second = rho.expect(&avg.abs_squared()).re;
    let first = rho.expect(a).norm_sqr();
    Ok(second - first)
}

/// Reduced matrix of `m` on the modes of `sites` (partial trace over the rest).
///
/// The kept modes are first moved to the lowest positions by a mode
/// permutation, preserving their lexicographic order; the result is exact for
/// every operator on the kept modes.
pub fn partial_trace(ctx: &FockContext, m: &Matrix, sites: &[Site]) -> Result<Matrix> {
    let ns = ctx.spins().len();
    let mut keep_sites: Vec<usize> = sites.iter().map(|s| ctx.site_index(s)).collect::<Result<_>>()?;
    keep_sites.sort_unstable();
    keep_sites.dedup();
    let keep: Vec<usize> = keep_sites.iter().flat_map(|&s| (0..ns).map(move |k| s * ns + k)).collect();
    let mut perm = vec![usize::MAX; ctx.modes()];
    for (new, &old) in keep.iter().enumerate() {
        perm[old] = new;
    }
    let mut next = keep.len();
    for p in perm.iter_mut() {
        if *p == usize::MAX {
            *p = next;
            next += 1;
        }
    }
    let op = LocalOperator::from_parts(m.clone(), BTreeSet::new(), Parity::Mixed);
    let moved = permute_modes(&perm, &op).into_matrix();
    let k = keep.len();
    let small = 1usize << k;
    let rest = 1usize << (ctx.modes() - k);
    let mut out = linalg::zeros(small);
    for hi in 0..rest {
        for j in 0..small {
            for i in 0..small {
                out[(i, j)] += moved[(hi * small + i, hi * small + j)];
            }
        }
    }
    Ok(out)
}

/// States and values produced by [`gauge_twist_demo`].
#[derive(Debug, Clone)]
pub struct GaugeTwist {
    pub rho0: ThermalState,
    pub rho1: ThermalState,
    pub rho2: ThermalState,
    pub theta1: f64,
    pub theta2: f64,
    /// Rows of (observable label, ρ̂₀, ρ̂₁, ρ̂₂).
    pub table: Vec<(String, c64, c64, c64)>,
    /// `max(|ρ̂₀(A) + ρ̂₁(A)|, |ρ̂₀(A) + ρ̂₂(A)|)` for the quartic monomial.
    pub sign_residual: f64,
    /// `ρ̂₁(B)/ρ̂₀(B)` and `ρ̂₂(B)/ρ̂₀(B)` for the pair monomial `B`.
    pub pair_ratios: (c64, c64),
}

/// Product state with a nonzero quartic moment `a₁a₂a₃a₄` and its two gauge twists.
pub fn gauge_twist_demo(ctx: &FockContext) -> Result<GaugeTwist> {
    let spins = ctx.spins();
    if spins.len() < 4 {
        return Err(Error::SpinSetTooSmall { have: spins.len(), need: 4 });
    }
    let origin = vec![0; ctx.lattice_dim()];
    let s: Vec<&str> = spins[..4].iter().map(String::as_str).collect();

    // ψ = Π_x (1 + a*_{x,s2} a*_{x,s1})(1 + a*_{x,s4} a*_{x,s3}) |0⟩ / 2^{|Λ|}
    let d = ctx.fock_dim();
    let mut psi = faer::Mat::<c64>::zeros(d, 1);
    psi[(0, 0)] = ONE;
    for site in ctx.sites() {
        for pair in [[1usize, 0usize], [3, 2]] {
            let a = creation(ctx, site, s[pair[0]])?;
            let b = creation(ctx, site, s[pair[1]])?;
            let creator = &(&a * &b) + &ctx.identity();
            psi = creator.matrix() * &psi;
        }
    }
    let norm = psi.norm_l2();
    let psi = linalg::scale(&psi, c64::new(1.0 / norm, 0.0));
    let dens = &psi * psi.adjoint();
    let rho0 = ThermalState::from_density(dens.clone())?;

    let theta1 = -FRAC_PI_4;
    let theta2 = FRAC_PI_4;
    let op0 = LocalOperator::from_parts(dens, BTreeSet::new(), Parity::Even);
    // ρ∘g_θ has density g_{-θ}(D).
    let rho1 = ThermalState::from_density(gauge_automorphism(-theta1, &op0).into_matrix())?;
    let rho2 = ThermalState::from_density(gauge_automorphism(-theta2, &op0).into_matrix())?;

    let a: Vec<LocalOperator> = s.iter().map(|sp| annihilation(ctx, &origin, sp)).collect::<Result<_>>()?;
    let quartic = &(&(&a[0] * &a[1]) * &a[2]) * &a[3];
    let pair = &a[0] * &a[1];
    let mut table = Vec::new();
    for (label, op) in [("a1 a2 a3 a4", &quartic), ("a1 a2", &pair), ("a3 a4", &(&a[2] * &a[3]))] {
        table.push((label.to_string(), rho0.expect(op), rho1.expect(op), rho2.expect(op)));
    }
    let q = &table[0];
    let sign_residual = (q.1 + q.2).norm().max((q.1 + q.3).norm());
    let p = &table[1];
    Ok(GaugeTwist { rho0, rho1, rho2, theta1, theta2, sign_residual, pair_ratios: (p.2 / p.1, p.3 / p.1), table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spinful(l: usize) -> FockContext {
        FockContext::new(1, l, &["up", "dn"]).unwrap()
    }

    #[test]
    fn context_dimensions_and_cap() {
        assert_eq!(spinful(0).fock_dim(), 4);
        assert_eq!(spinful(1).fock_dim(), 64);
        assert!(matches!(FockContext::new(1, 7, &["up", "dn"]), Err(Error::ModeCapExceeded { .. })));
    }

    #[test]
    fn single_mode_relations() {
        let ctx = FockContext::new(1, 0, &["up"]).unwrap();
        let a = annihilation(&ctx, &[0], "up").unwrap();
        let ad = a.adjoint();
        assert!(linalg::max_abs(&(a.anticommutator(&ad).into_matrix() - linalg::identity(2))) < 1e-15);
        assert!(linalg::max_abs((&a * &a).matrix()) == 0.0);
        assert_eq!(a.parity(), Parity::Odd);
    }

    #[test]
    fn car_holds_for_all_mode_pairs() {
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
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn gauge_examples() {
        let ctx = FockContext::new(1, 0, &["s1", "s2", "s3", "s4"]).unwrap();
        let a: Vec<LocalOperator> =
            ["s1", "s2", "s3", "s4"].iter().map(|s| annihilation(&ctx, &[0], s).unwrap()).collect();
        assert!(gauge_automorphism(PI, &a[0]).distance(&a[0].scale(c64::new(-1.0, 0.0))) < 1e-14);
        let n = &a[0].adjoint() * &a[0];
        assert!(gauge_automorphism(0.7, &n).distance(&n) < 1e-14);
        let quartic = &(&(&a[0] * &a[1]) * &a[2]) * &a[3];
        assert!(gauge_automorphism(-PI / 4.0, &quartic).distance(&quartic.scale(c64::new(-1.0, 0.0))) < 1e-14);
        let z = gauge_automorphism(0.3, &a[1]);
        assert!(gauge_automorphism(0.3 + 2.0 * PI, &a[1]).distance(&z) < 1e-13);
    }

    #[test]
    fn translation_wraps_and_inverts() {
        let ctx = spinful(1);
        let a = annihilation(&ctx, &[1], "up").unwrap();
        let expected = annihilation(&ctx, &[-1], "up").unwrap();
        assert!(translate(&ctx, &a, &[1]).distance(&expected) < 1e-14);
        assert!(translate(&ctx, &a, &[0]).distance(&a) < 1e-14);
        let b = &(&creation(&ctx, &[0], "dn").unwrap() * &a) + &annihilation(&ctx, &[-1], "dn").unwrap();
        let back = translate(&ctx, &translate(&ctx, &b, &[1]), &[-1]);
        assert!(back.distance(&b) < 1e-12);
    }

    #[test]
    fn parity_metadata_follows_products() {
        let ctx = spinful(0);
        let a = annihilation(&ctx, &[0], "up").unwrap();
        let b = creation(&ctx, &[0], "dn").unwrap();
        let even = &a * &b;
        assert_eq!(even.parity(), Parity::Even);
        let odd = &even * &a.adjoint();
        assert_eq!(odd.parity(), Parity::Odd);
        assert_eq!((&even + &a).parity(), Parity::Mixed);
        let check = LocalOperator::new(odd.into_matrix(), BTreeSet::new());
        assert_eq!(check.parity(), Parity::Odd);
    }

    #[test]
    fn space_average_examples() {
        let ctx = spinful(1);
        let a = &creation(&ctx, &[0], "up").unwrap() * &annihilation(&ctx, &[1], "up").unwrap();
        assert!(space_average(&ctx, &a, 0).unwrap().distance(&a) < 1e-15);
        let one = ctx.identity();
        assert!(space_average(&ctx, &one, 1).unwrap().distance(&one) < 1e-14);
        assert!(space_average(&ctx, &a, 1).unwrap().norm() <= a.norm() + 1e-12);
        assert!(space_average(&ctx, &a, 2).is_err());
    }

    #[test]
    fn ergodicity_gap_of_tracial_density() {
        let ctx = spinful(1);
        let rho = ThermalState::tracial(ctx.fock_dim());
        let n = &creation(&ctx, &[0], "up").unwrap() * &annihilation(&ctx, &[0], "up").unwrap();
        // ρ(n²) - ρ(n)² = 1/2 - 1/4 for a tracial state
        assert!((ergodicity_gap(&ctx, &rho, &n, 0).unwrap() - 0.25).abs() < 1e-14);
        let double = &n * &(&creation(&ctx, &[0], "dn").unwrap() * &annihilation(&ctx, &[0], "dn").unwrap());
        assert!((ergodicity_gap(&ctx, &rho, &double, 0).unwrap() - 3.0 / 16.0).abs() < 1e-14);
        assert!(ergodicity_gap(&ctx, &rho, &ctx.identity(), 1).unwrap().abs() < 1e-14);
        // independent sites: the gap scales as 1/|Λ_ℓ|
        let ratio = ergodicity_gap(&ctx, &rho, &n, 1).unwrap() / ergodicity_gap(&ctx, &rho, &n, 0).unwrap();
        assert!((ratio - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gauge_twist_signs() {
        let ctx = FockContext::new(1, 0, &["s1", "s2", "s3", "s4"]).unwrap();
        let demo = gauge_twist_demo(&ctx).unwrap();
        assert!(demo.table[0].1.norm() > 0.1);
        assert!(demo.sign_residual <= 1e-12);
        assert!((demo.pair_ratios.0 - c64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((demo.pair_ratios.1 - c64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(matches!(gauge_twist_demo(&spinful(0)), Err(Error::SpinSetTooSmall { .. })));
    }
}
