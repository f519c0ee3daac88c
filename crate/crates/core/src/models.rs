//! Ready-made interactions and long-range models used by tests, benches and configs.

use crate::interaction::{AnchorTerm, DecayFunction, Interaction};
use crate::linalg::{self, c64, Matrix};
use crate::longrange::{LongRangeModel, LongRangeTerm};

fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Nearest-neighbour hopping `-t Σ_{<x,y>,s} (a*_{x,s} a_{y,s} + h.c.)`.
pub fn hopping(d: usize, t: f64, spins: &[&str]) -> Interaction {
    let mut terms = Vec::new();
    for axis in 0..d {
        let origin = vec![0; d];
        let mut next = vec![0; d];
        next[axis] = 1;
        let coords = |s: &[i32]| s.iter().map(i32::to_string).collect::<Vec<_>>().join(",");
        let (o, n) = (coords(&origin), coords(&next));
        for s in spins {
            let z = vec![origin.clone(), next.clone()];
            terms
                .push(AnchorTerm::parse(z.clone(), &format!("adag({o};{s}) a({n};{s})"), real(-t)).expect("even term"));
            terms.push(AnchorTerm::parse(z, &format!("adag({n};{s}) a({o};{s})"), real(-t)).expect("even term"));
        }
    }
    Interaction::new(d, terms).expect("consistent dimension").with_label("hopping")
}

/// On-site chemical potential `-μ Σ_{x,s} n_{x,s}`.
pub fn chemical_potential(d: usize, mu: f64, spins: &[&str]) -> Interaction {
    let o = vec!["0"; d].join(",");
    let terms = spins
        .iter()
        .map(|s| {
            AnchorTerm::parse(vec![vec![0; d]], &format!("adag({o};{s}) a({o};{s})"), real(-mu)).expect("even term")
        })
        .collect();
    Interaction::new(d, terms).expect("consistent dimension").with_label("chemical potential")
}

/// On-site interaction `u Σ_x n_{x,up} n_{x,dn}`.
pub fn hubbard(d: usize, u: f64, up: &str, dn: &str) -> Interaction {
    let o = vec!["0"; d].join(",");
    let op = format!("adag({o};{up}) a({o};{up}) adag({o};{dn}) a({o};{dn})");
    let term = AnchorTerm::parse(vec![vec![0; d]], &op, real(u)).expect("even term");
    Interaction::new(d, vec![term]).expect("consistent dimension").with_label("hubbard")
}

/// On-site pair annihilation `a_{x,dn} a_{x,up}`; its interaction norm is 1.
pub fn pair_annihilation(d: usize, up: &str, dn: &str) -> Interaction {
    let o = vec!["0"; d].join(",");
    let term = AnchorTerm::parse(vec![vec![0; d]], &format!("a({o};{dn}) a({o};{up})"), real(1.0)).expect("even term");
    Interaction::new(d, vec![term]).expect("consistent dimension").with_label("pair")
}

/// On-site density `n_{x,s}`; self-adjoint with interaction norm 1.
pub fn density(d: usize, spin: &str) -> Interaction {
    let o = vec!["0"; d].join(",");
    let term =
        AnchorTerm::parse(vec![vec![0; d]], &format!("adag({o};{spin}) a({o};{spin})"), real(1.0)).expect("even term");
    Interaction::new(d, vec![term]).expect("consistent dimension").with_label("density")
}

/// Strong-coupling BCS model: `Φ = -μ N` and the pair `(Ψ, Ψ*)` with weight `-g`.
pub fn bcs(d: usize, mu: f64, g: f64, up: &str, dn: &str) -> LongRangeModel {
    let psi = pair_annihilation(d, up, dn);
    let terms = vec![LongRangeTerm { psi: psi.clone(), gamma: -g }, LongRangeTerm { psi: psi.adjoint(), gamma: -g }];
    LongRangeModel::new(chemical_potential(d, mu, &[up, dn]), terms, DecayFunction::default()).expect("valid BCS model")
}

/// Mean-field density repulsion `γ |U^{n_s}|² / |Λ|` on top of `-μ N`.
pub fn density_repulsion(d: usize, mu: f64, gamma: f64, up: &str, dn: &str) -> LongRangeModel {
    let terms = vec![LongRangeTerm { psi: density(d, up), gamma }];
    LongRangeModel::new(chemical_potential(d, mu, &[up, dn]), terms, DecayFunction::default()).expect("valid model")
}

/// BCS pairing together with a repulsive mean-field density term.
pub fn bcs_with_repulsion(d: usize, mu: f64, g: f64, gamma: f64, up: &str, dn: &str) -> LongRangeModel {
    let psi = pair_annihilation(d, up, dn);
    let terms = vec![
        LongRangeTerm { psi: psi.clone(), gamma: -g },
        LongRangeTerm { psi: psi.adjoint(), gamma: -g },
        LongRangeTerm { psi: density(d, up), gamma },
    ];
    LongRangeModel::new(chemical_potential(d, mu, &[up, dn]), terms, DecayFunction::default()).expect("valid model")
}

/// Even density on one spin-½ site, `(1-w)|φ⟩⟨φ| + w/4` with
/// `φ = cos θ |0⟩ + sin θ |↑↓⟩`. Bit 0 of the basis index is the first spin.
pub fn paired_site_density(theta: f64, mix: f64) -> Matrix {
    let mut sigma = linalg::scale(&linalg::identity(4), real(mix / 4.0));
    let (c, s) = (theta.cos(), theta.sin());
    let w = 1.0 - mix;
    sigma[(0, 0)] += real(w * c * c);
    sigma[(3, 3)] += real(w * s * s);
    sigma[(0, 3)] += real(w * c * s);
    sigma[(3, 0)] += real(w * c * s);
    sigma
}
