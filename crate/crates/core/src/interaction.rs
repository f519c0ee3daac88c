//! Translation-invariant finite-range interactions.
//!
//! An interaction is a list of anchor terms. Each term is a monomial in
//! creation and annihilation operators placed at offsets inside a finite
//! anchor set `Z`; the interaction assigns `Φ_{Z+x} = α_x(Φ_Z)` to every
//! translate. Anchor sets are stored normalized so that their lexicographically
//! smallest site is the origin.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::car::{accumulate_monomial, FockContext, Ladder, LocalOperator, Parity, Site};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, Matrix, I, ONE};

/// A single `a` or `a*` at an offset inside the anchor set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LadderSpec {
    pub dagger: bool,
    pub site: Site,
    pub spin: String,
}

impl fmt::Display for LadderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords: Vec<String> = self.site.iter().map(i32::to_string).collect();
        let name = if self.dagger { "adag" } else { "a" };
        write!(f, "{name}({};{})", coords.join(","), self.spin)
    }
}

/// Product of ladder operators, written left to right; `1` is the empty product.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MonomialString(pub Vec<LadderSpec>);

impl fmt::Display for MonomialString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(LadderSpec::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for MonomialString {
    type Err = Error;

    /// Parses e.g. `adag(0;up) a(1;up)` or, in two dimensions, `a(0,1;dn)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" || s.is_empty() {
            return Ok(Self(Vec::new()));
        }
        let mut ops = Vec::new();
        for token in s.split_whitespace() {
            let bad = || Error::Parse(format!("malformed ladder operator `{token}`"));
            let open = token.find('(').ok_or_else(bad)?;
            let body = token[open + 1..].strip_suffix(')').ok_or_else(bad)?;
            let dagger = match &token[..open] {
                "a" => false,
                "adag" => true,
                _ => return Err(bad()),
            };
            let (coords, spin) = body.split_once(';').ok_or_else(bad)?;
            let site =
                coords.split(',').map(|c| c.trim().parse::<i32>().map_err(|_| bad())).collect::<Result<Site>>()?;
            let spin = spin.trim();
            if spin.is_empty() {
                return Err(bad());
            }
            ops.push(LadderSpec { dagger, site, spin: spin.to_string() });
        }
        Ok(Self(ops))
    }
}

/// Complex coefficient, written as a number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Coefficient> for c64 {
    fn from(c: Coefficient) -> Self {
        match c {
            Coefficient::Real(x) => c64::new(x, 0.0),
            Coefficient::Complex([re, im]) => c64::new(re, im),
        }
    }
}

impl From<c64> for Coefficient {
    fn from(z: c64) -> Self {
        if z.im == 0.0 {
            Coefficient::Real(z.re)
        } else {
            Coefficient::Complex([z.re, z.im])
        }
    }
}

/// Serialized form of an anchor term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    /// Anchor set `Z` as offset lists.
    pub sites: Vec<Site>,
    /// Monomial string, see [`MonomialString`].
    pub op: String,
    pub coeff: Coefficient,
}

/// `coeff · ops` placed on the anchor set `sites`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorTerm {
    sites: Vec<Site>,
    ops: MonomialString,
    coeff: c64,
}

impl AnchorTerm {
    pub fn new(sites: Vec<Site>, ops: MonomialString, coeff: c64) -> Result<Self> {
        if !ops.0.len().is_multiple_of(2) {
            return Err(Error::NotEven(ops.to_string()));
        }
        let mut sites = sites;
        for op in &ops.0 {
            if !sites.contains(&op.site) {
                return Err(Error::SiteOutsideAnchor { site: op.site.clone() });
            }
        }
        if sites.is_empty() {
            return Err(Error::InvalidParameter("anchor set is empty".into()));
        }
        sites.sort();
        sites.dedup();
        let shift = sites[0].clone();
        let sub = |s: &Site| s.iter().zip(&shift).map(|(a, b)| a - b).collect::<Site>();
        let sites = sites.iter().map(sub).collect();
        let ops = MonomialString(ops.0.into_iter().map(|o| LadderSpec { site: sub(&o.site), ..o }).collect());
        Ok(Self { sites, ops, coeff })
    }

    pub fn parse(sites: Vec<Site>, op: &str, coeff: c64) -> Result<Self> {
        Self::new(sites, op.parse()?, coeff)
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn ops(&self) -> &MonomialString {
        &self.ops
    }

    pub fn coeff(&self) -> c64 {
        self.coeff
    }

    pub fn adjoint(&self) -> Self {
        let ops = self.ops.0.iter().rev().map(|o| LadderSpec { dagger: !o.dagger, ..o.clone() }).collect();
        Self { sites: self.sites.clone(), ops: MonomialString(ops), coeff: self.coeff.conj() }
    }

    pub fn to_spec(&self) -> TermSpec {
        TermSpec { sites: self.sites.clone(), op: self.ops.to_string(), coeff: self.coeff.into() }
    }

    fn extent(&self) -> i32 {
        let d = self.sites[0].len();
        (0..d)
            .map(|i| {
                let lo = self.sites.iter().map(|s| s[i]).min().unwrap_or(0);
                let hi = self.sites.iter().map(|s| s[i]).max().unwrap_or(0);
                hi - lo
            })
            .max()
            .unwrap_or(0)
    }
}

/// Translation-invariant finite-range interaction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Interaction {
    lattice_dim: usize,
    terms: Vec<AnchorTerm>,
    pub label: Option<String>,
}

impl Interaction {
    pub fn new(lattice_dim: usize, terms: Vec<AnchorTerm>) -> Result<Self> {
        for t in &terms {
            for s in &t.sites {
                if s.len() != lattice_dim {
                    return Err(Error::DimensionMismatch { site: s.clone(), expected: lattice_dim, got: s.len() });
                }
            }
        }
        Ok(Self { lattice_dim, terms, label: None })
    }

    pub fn zero(lattice_dim: usize) -> Self {
        Self { lattice_dim, terms: Vec::new(), label: None }
    }

    pub fn from_specs(lattice_dim: usize, specs: &[TermSpec]) -> Result<Self> {
        let terms =
            specs.iter().map(|s| AnchorTerm::parse(s.sites.clone(), &s.op, s.coeff.into())).collect::<Result<_>>()?;
        Self::new(lattice_dim, terms)
    }

    pub fn to_specs(&self) -> Vec<TermSpec> {
        self.terms.iter().map(AnchorTerm::to_spec).collect()
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    pub fn terms(&self) -> &[AnchorTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coordinate extent of any anchor set.
    pub fn range(&self) -> i32 {
        self.terms.iter().map(AnchorTerm::extent).max().unwrap_or(0)
    }

    /// Anchor-wise adjoint `Φ*`.
    pub fn adjoint(&self) -> Self {
        Self {
            lattice_dim: self.lattice_dim,
            terms: self.terms.iter().map(AnchorTerm::adjoint).collect(),
            label: self.label.clone(),
        }
    }

    pub fn scale(&self, s: c64) -> Self {
        let terms = self.terms.iter().map(|t| AnchorTerm { coeff: t.coeff * s, ..t.clone() }).collect();
        Self { lattice_dim: self.lattice_dim, terms, label: None }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { lattice_dim: self.lattice_dim, terms, label: None }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// Terms grouped by anchor set, i.e. the operators `Φ_Z`.
    pub fn anchors(&self) -> BTreeMap<Vec<Site>, Vec<&AnchorTerm>> {
        let mut map: BTreeMap<Vec<Site>, Vec<&AnchorTerm>> = BTreeMap::new();
        for t in &self.terms {
            map.entry(t.sites.clone()).or_default().push(t);
        }
        map
    }

    /// `‖Φ_Z‖` for every anchor set.
    pub fn anchor_norms(&self) -> Vec<(Vec<Site>, f64)> {
        self.anchors()
            .into_iter()
            .map(|(z, terms)| {
                let norm = linalg::op_norm(&anchor_matrix(&terms));
                (z, norm)
            })
            .collect()
    }

    /// `‖Φ - Φ*‖_W == 0` up to rounding.
    pub fn is_self_adjoint(&self) -> bool {
        self.sub(&self.adjoint()).norm(&DecayFunction::default()) <= 1e-12
    }

    /// The interaction norm `‖Φ‖_W`.
    pub fn norm(&self, f: &DecayFunction) -> f64 {
        interaction_norm(self, f)
    }
}

/// Dense matrix of `Σ_terms` on the modes the terms touch, in a local Fock space.
fn anchor_matrix(terms: &[&AnchorTerm]) -> Matrix {
    let modes: BTreeSet<(Site, String)> =
        terms.iter().flat_map(|t| t.ops.0.iter().map(|o| (o.site.clone(), o.spin.clone()))).collect();
    let modes: Vec<(Site, String)> = modes.into_iter().collect();
    let dim = 1usize << modes.len();
    let mut m = linalg::zeros(dim);
    for t in terms {
        let ladders: Vec<Ladder> = t
            .ops
            .0
            .iter()
            .map(|o| Ladder {
                mode: modes.iter().position(|(s, sp)| *s == o.site && *sp == o.spin).expect("mode listed"),
                dagger: o.dagger,
            })
            .collect();
        accumulate_monomial(&mut m, &ladders, t.coeff);
    }
    m
}

/// `F(x, y) = e^{-ς|x-y|} (1 + |x-y|)^{-(d+ε)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFunction {
    pub varsigma: f64,
    pub epsilon: f64,
}

impl Default for DecayFunction {
    fn default() -> Self {
        Self { varsigma: 0.0, epsilon: 1.0 }
    }
}

/// Truncated `‖F‖_1` and a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayNorm {
    pub value: f64,
    pub radius: i32,
    pub tail_bound: f64,
}

impl DecayFunction {
    pub fn new(varsigma: f64, epsilon: f64) -> Result<Self> {
        if !(varsigma >= 0.0 && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("decay parameters ς={varsigma}, ε={epsilon}")));
        }
        Ok(Self { varsigma, epsilon })
    }

    /// `F` at Euclidean distance `r` in dimension `d`.
    pub fn at_distance(&self, d: usize, r: f64) -> f64 {
        (-self.varsigma * r).exp() * (1.0 + r).powf(-(d as f64 + self.epsilon))
    }

    pub fn eval(&self, x: &[i32], y: &[i32]) -> f64 {
        let r = x.iter().zip(y).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>().sqrt();
        self.at_distance(x.len(), r)
    }

    /// `Σ_{|x|_∞ ≤ R} F(0, x)` with `R = 10·max(range, 1)`.
    pub fn l1_norm(&self, d: usize, range: i32) -> DecayNorm {
        let radius = 10 * range.max(1);
        let side = (2 * radius + 1) as usize;
        let mut value = 0.0;
        let mut x = vec![0i32; d];
        for mut k in 0..side.pow(d as u32) {
            for c in x.iter_mut() {
                *c = (k % side) as i32 - radius;
                k /= side;
            }
            let r = x.iter().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt();
            value += self.at_distance(d, r);
        }
        // shells |x|_∞ = r hold at most 2d·3^{d-1} r^{d-1} points and |x| ≥ |x|_∞
        let tail_bound =
            2.0 * d as f64 * 3f64.powi(d as i32 - 1) * (1.0 + radius as f64).powf(-self.epsilon) / self.epsilon;
        DecayNorm { value, radius, tail_bound }
    }
}

/// `sup_{x,y} Σ_{Λ ∋ x,y} ‖Φ_Λ‖ / F(x,y)`, reduced by translation invariance to
/// `max_y Σ_Z ‖Φ_Z‖ · #{(z1, z2) ∈ Z² : z2 - z1 = y} / F(0, y)`.
pub fn interaction_norm(phi: &Interaction, f: &DecayFunction) -> f64 {
    let mut per_offset: BTreeMap<Site, f64> = BTreeMap::new();
    for (z, norm) in phi.anchor_norms() {
        if norm == 0.0 {
            continue;
        }
        for z1 in &z {
            for z2 in &z {
                let y: Site = z2.iter().zip(z1).map(|(a, b)| a - b).collect();
                *per_offset.entry(y).or_insert(0.0) += norm;
            }
        }
    }
    let origin = vec![0; phi.lattice_dim];
    per_offset.iter().map(|(y, s)| s / f.eval(&origin, y)).fold(0.0, f64::max)
}

fn check_fits(phi: &Interaction, ctx: &FockContext) -> Result<()> {
    if phi.lattice_dim != ctx.lattice_dim() && !phi.terms.is_empty() {
        return Err(Error::DimensionMismatch {
            site: phi.terms[0].sites[0].clone(),
            expected: ctx.lattice_dim(),
            got: phi.lattice_dim,
        });
    }
    let range = phi.range();
    if range > ctx.period() {
        return Err(Error::RangeExceedsWindow { range, period: ctx.period() });
    }
    Ok(())
}

/// Adds `Σ_terms coeff·α_x(term)` to `m`, with `scale` multiplying every coefficient.
fn accumulate_translate(ctx: &FockContext, m: &mut Matrix, t: &AnchorTerm, x: &[i32], scale: c64) -> Result<()> {
    let ladders = t
        .ops
        .0
        .iter()
        .map(|o| {
            let site: Site = o.site.iter().zip(x).map(|(a, b)| a + b).collect();
            Ok(Ladder { mode: ctx.wrapped_mode(&site, ctx.spin_index(&o.spin)?)?, dagger: o.dagger })
        })
        .collect::<Result<Vec<_>>>()?;
    accumulate_monomial(m, &ladders, t.coeff * scale);
    Ok(())
}

/// `U_L^Φ`: every anchor term translated once by each site of the torus window.
pub fn local_hamiltonian(phi: &Interaction, ctx: &FockContext) -> Result<LocalOperator> {
    check_fits(phi, ctx)?;
    let mut m = linalg::zeros(ctx.fock_dim());
    for t in &phi.terms {
        for x in ctx.sites() {
            accumulate_translate(ctx, &mut m, t, x, ONE)?;
        }
    }
    let support = (0..ctx.volume()).collect();
    Ok(LocalOperator::from_parts(m, support, Parity::Even))
}

/// `𝔢_Φ = Σ_{Z ∋ 0} Φ_Z / |Z|`.
pub fn energy_per_site_element(phi: &Interaction, ctx: &FockContext) -> Result<LocalOperator> {
    check_fits(phi, ctx)?;
    let mut m = linalg::zeros(ctx.fock_dim());
    let mut support = BTreeSet::new();
    for t in &phi.terms {
        let w = c64::new(1.0 / t.sites.len() as f64, 0.0);
        for z in &t.sites {
            let shift: Site = z.iter().map(|c| -c).collect();
            accumulate_translate(ctx, &mut m, t, &shift, w)?;
            for s in &t.sites {
                let site: Site = s.iter().zip(&shift).map(|(a, b)| a + b).collect();
                support.insert(ctx.site_index(&ctx.wrap(&site))?);
            }
        }
    }
    Ok(LocalOperator::from_parts(m, support, Parity::Even))
}

/// `δ_L^Φ(A) = i[U_L^Φ, A]`.
pub fn derivation(phi: &Interaction, ctx: &FockContext, a: &LocalOperator) -> Result<LocalOperator> {
    let h = local_hamiltonian(phi, ctx)?;
    Ok(h.commutator(a).scale(I))
}

pub fn adjoint_interaction(phi: &Interaction) -> Interaction {
    phi.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::car::{annihilation, creation};
    use crate::thermo::ThermalState;

    fn hopping(t: f64) -> Interaction {
        let mut terms = Vec::new();
        for s in ["up", "dn"] {
            let z = vec![vec![0], vec![1]];
            terms.push(AnchorTerm::parse(z.clone(), &format!("adag(0;{s}) a(1;{s})"), c64::new(-t, 0.0)).unwrap());
            terms.push(AnchorTerm::parse(z, &format!("adag(1;{s}) a(0;{s})"), c64::new(-t, 0.0)).unwrap());
        }
        Interaction::new(1, terms).unwrap()
    }

    fn number_up() -> Interaction {
        Interaction::new(1, vec![AnchorTerm::parse(vec![vec![0]], "adag(0;up) a(0;up)", ONE).unwrap()]).unwrap()
    }

    #[test]
    fn monomial_strings_round_trip() {
        for s in ["adag(0;up) a(1;up)", "1", "a(0,1;dn) adag(-2,3;s4)"] {
            let m: MonomialString = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("b(0;up)".parse::<MonomialString>().is_err());
        assert!("a(0up)".parse::<MonomialString>().is_err());
    }

    #[test]
    fn rejects_odd_and_misplaced_terms() {
        assert!(matches!(AnchorTerm::parse(vec![vec![0]], "a(0;up)", ONE), Err(Error::NotEven(_))));
        assert!(matches!(
            AnchorTerm::parse(vec![vec![0]], "adag(0;up) a(1;up)", ONE),
            Err(Error::SiteOutsideAnchor { .. })
        ));
    }

    #[test]
    fn anchor_sets_are_normalized() {
        let t = AnchorTerm::parse(vec![vec![3], vec![2]], "adag(2;up) a(3;up)", ONE).unwrap();
        assert_eq!(t.sites(), &[vec![0], vec![1]]);
        assert_eq!(t.ops().to_string(), "adag(0;up) a(1;up)");
    }

    #[test]
    fn norm_of_on_site_and_zero() {
        let f = DecayFunction::default();
        assert!((number_up().norm(&f) - 1.0).abs() < 1e-14);
        assert_eq!(Interaction::zero(1).norm(&f), 0.0);
    }

    #[test]
    fn norm_of_spinful_hopping() {
        // ‖Φ_{0,1}‖ = 2; offset 0 counts |Z| = 2 pairs, offset ±1 one pair at F = 1/4.
        let f = DecayFunction::default();
        assert!((hopping(1.0).norm(&f) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn decay_norm_matches_closed_form() {
        let f = DecayFunction::default();
        let n = f.l1_norm(1, 1);
        let exact = std::f64::consts::PI.powi(2) / 3.0 - 1.0;
        assert!(n.value <= exact && exact - n.value <= n.tail_bound);
        let wider = f.l1_norm(1, 2);
        assert!(wider.value >= n.value);
    }

    #[test]
    fn on_site_number_hamiltonian() {
        let ctx = FockContext::new(1, 1, &["up", "dn"]).unwrap();
        let h = local_hamiltonian(&number_up(), &ctx).unwrap();
        let mut expected = linalg::zeros(ctx.fock_dim());
        for x in [-1, 0, 1] {
            let n = &creation(&ctx, &[x], "up").unwrap() * &annihilation(&ctx, &[x], "up").unwrap();
            linalg::add_scaled(&mut expected, n.matrix(), ONE);
        }
        assert!(linalg::frobenius(&(h.matrix() - &expected)) < 1e-14);
    }

    #[test]
    fn hopping_is_self_adjoint_and_number_conserving() {
        let ctx = FockContext::new(1, 1, &["up", "dn"]).unwrap();
        let phi = hopping(1.0);
        assert!(phi.is_self_adjoint());
        let h = local_hamiltonian(&phi, &ctx).unwrap();
        assert!(h.hermiticity_residual() <= 1e-13);
        let dn = derivation(&phi, &ctx, &ctx.number_operator()).unwrap();
        assert!(dn.norm() < 1e-12);
    }

    #[test]
    fn adjoint_of_pairing_anchor() {
        let lam = c64::new(0.3, 0.4);
        let phi = Interaction::new(1, vec![AnchorTerm::parse(vec![vec![0]], "a(0;up) a(0;dn)", lam).unwrap()]).unwrap();
        let adj = phi.adjoint();
        assert_eq!(adj.terms()[0].ops().to_string(), "adag(0;dn) adag(0;up)");
        assert_eq!(adj.terms()[0].coeff(), lam.conj());
        assert_eq!(adj.adjoint(), phi);
    }

    #[test]
    fn per_site_element_matches_volume_average_for_tracial_state() {
        let ctx = FockContext::new(1, 1, &["up", "dn"]).unwrap();
        let phi = hopping(1.0).add(&number_up().scale(c64::new(0.7, 0.0)));
        let e = energy_per_site_element(&phi, &ctx).unwrap();
        let h = local_hamiltonian(&phi, &ctx).unwrap();
        let rho = ThermalState::tracial(ctx.fock_dim());
        let lhs = rho.expect(&e);
        let rhs = rho.expect(&h) / ctx.volume() as f64;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn range_guard() {
        let ctx = FockContext::new(1, 0, &["up", "dn"]).unwrap();
        assert!(local_hamiltonian(&hopping(1.0), &ctx).is_ok());
        let far =
            Interaction::new(1, vec![AnchorTerm::parse(vec![vec![0], vec![2]], "adag(0;up) a(2;up)", ONE).unwrap()])
                .unwrap();
        assert!(matches!(local_hamiltonian(&far, &ctx), Err(Error::RangeExceedsWindow { .. })));
    }
}
