//! Dense complex matrix helpers and a sector-aware Hermitian eigensolver.
//!
//! Every Hamiltonian built in this crate is even, and most of them conserve
//! more than parity. [`Spectrum`] exploits this by splitting the matrix into
//! the connected components of its nonzero pattern before diagonalizing, which
//! is exact (no entry is dropped) and turns the 1024-dimensional BCS windows
//! into a few hundred tiny blocks.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub use faer::c64;

pub type Matrix = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn zeros(n: usize) -> Matrix {
    Mat::zeros(n, n)
}

pub fn identity(n: usize) -> Matrix {
    Mat::identity(n, n)
}

pub fn adjoint(m: &Matrix) -> Matrix {
    m.adjoint().to_owned()
}

pub fn scale(m: &Matrix, s: c64) -> Matrix {
    let mut out = m.clone();
    for j in 0..out.ncols() {
        out.col_as_slice_mut(j).iter_mut().for_each(|x| *x *= s);
    }
    out
}

/// `a·x + b·y`, column by column.
pub fn combine(a: c64, x: &Matrix, b: c64, y: &Matrix) -> Matrix {
    let mut out = x.clone();
    for j in 0..out.ncols() {
        for (o, v) in out.col_as_slice_mut(j).iter_mut().zip(y.col_as_slice(j)) {
            *o = a * *o + b * *v;
        }
    }
    out
}

pub fn add_scaled(acc: &mut Matrix, m: &Matrix, s: c64) {
    for j in 0..m.ncols() {
        let src = m.col_as_slice(j);
        let dst = acc.col_as_slice_mut(j);
        for (d, x) in dst.iter_mut().zip(src) {
            *d += *x * s;
        }
    }
}

pub fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    a * b - b * a
}

pub fn anticommutator(a: &Matrix, b: &Matrix) -> Matrix {
    a * b + b * a
}

pub fn trace(m: &Matrix) -> c64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// `Trace(a b)` without forming the product.
pub fn trace_product(a: &Matrix, b: &Matrix) -> c64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for j in 0..n {
        let bj = b.col_as_slice(j);
        for (i, bij) in bj.iter().enumerate() {
            acc += a[(j, i)] * *bij;
        }
    }
    acc
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.norm_l2()
}

pub fn max_abs(m: &Matrix) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for z in m.col_as_slice(j) {
            best = best.max(z.norm());
        }
    }
    best
}

pub fn hermiticity_residual(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn hermitian_part(m: &Matrix) -> Matrix {
    let half = c64::new(0.5, 0.0);
    combine(half, m, half, &m.adjoint().to_owned())
}

/// Operator norm (largest singular value).
pub fn op_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if hermiticity_residual(m) == 0.0 {
        let spec = Spectrum::new_unchecked(m.as_ref());
        return spec.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    }
    let gram = m.adjoint() * m;
    let spec = Spectrum::new_unchecked(hermitian_part(&gram).as_ref());
    spec.values().iter().fold(0.0f64, |a, v| a.max(*v)).max(0.0).sqrt()
}

/// Eigendecomposition of a Hermitian matrix, block by block.
#[derive(Debug, Clone)]
pub struct Spectrum {
    dim: usize,
    blocks: Vec<Block>,
    /// `(block, position in block)` of every basis index.
    locate: Vec<(usize, usize)>,
    /// Eigenvalues in concatenated block order.
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Block {
    /// Basis indices spanned by the block.
    indices: Vec<usize>,
    /// Offset of the block in the concatenated eigenvalue list.
    offset: usize,
    vectors: Matrix,
}

impl Spectrum {
    /// Diagonalizes `h`, which must be Hermitian to within `1e-10` (Frobenius).
    pub fn new(h: &Matrix) -> Result<Self> {
        let residual = hermiticity_residual(h);
        if residual > 1e-10 {
            return Err(Error::NonHermitian { residual });
        }
        Ok(Self::new_unchecked(hermitian_part(h).as_ref()))
    }

    fn new_unchecked(h: MatRef<'_, c64>) -> Self {
        let n = h.nrows();
        let components = connected_components(h);
        let mut blocks = Vec::with_capacity(components.len());
        let mut values = Vec::with_capacity(n);
        for indices in components {
            let offset = values.len();
            let b = indices.len();
            if b == 1 {
                let k = indices[0];
                values.push(h[(k, k)].re);
                blocks.push(Block { indices, offset, vectors: identity(1) });
                continue;
            }
            let sub = Mat::from_fn(b, b, |i, j| h[(indices[i], indices[j])]);
            let (vals, vecs) = dense_eigh(&sub);
            values.extend(vals);
            blocks.push(Block { indices, offset, vectors: vecs });
        }
        Self::assemble(n, blocks, values)
    }

    fn assemble(dim: usize, blocks: Vec<Block>, values: Vec<f64>) -> Self {
        let mut locate = vec![(0, 0); dim];
        for (b, blk) in blocks.iter().enumerate() {
            for (ii, &i) in blk.indices.iter().enumerate() {
                locate[i] = (b, ii);
            }
        }
        Self { dim, blocks, locate, values }
    }

    /// Diagonalizes a sparse Hermitian matrix without forming it densely.
    pub fn from_csr(h: &Csr) -> Result<Self> {
        let n = h.n;
        let mut parent: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for p in h.row_ptr[i]..h.row_ptr[i + 1] {
                let j = h.cols[p];
                if j != i && h.vals[p] != ZERO {
                    union(&mut parent, i, j);
                }
            }
        }
        let components = groups(&mut parent);
        let mut local = vec![0usize; n];
        let mut blocks = Vec::with_capacity(components.len());
        let mut values = Vec::with_capacity(n);
        let mut residual_sq = 0.0;
        for indices in components {
            for (ii, &i) in indices.iter().enumerate() {
                local[i] = ii;
            }
            let b = indices.len();
            let mut sub = zeros(b);
            for (ii, &i) in indices.iter().enumerate() {
                for p in h.row_ptr[i]..h.row_ptr[i + 1] {
                    if h.vals[p] != ZERO {
                        sub[(ii, local[h.cols[p]])] = h.vals[p];
                    }
                }
            }
            residual_sq += (0..b)
                .flat_map(|i| (0..b).map(move |j| (i, j)))
                .map(|(i, j)| (sub[(i, j)] - sub[(j, i)].conj()).norm_sqr())
                .sum::<f64>();
            let offset = values.len();
            if b == 1 {
                values.push(sub[(0, 0)].re);
                blocks.push(Block { indices, offset, vectors: identity(1) });
                continue;
            }
            let (vals, vecs) = dense_eigh(&hermitian_part(&sub));
            values.extend(vals);
            blocks.push(Block { indices, offset, vectors: vecs });
        }
        if residual_sq.sqrt() > 1e-10 {
            return Err(Error::NonHermitian { residual: residual_sq.sqrt() });
        }
        Ok(Self::assemble(n, blocks, values))
    }

    /// `Tr(ρ X)` for each `X`, where `ρ = Σ_k w_k |v_k⟩⟨v_k|` with weights in
    /// eigenvalue order. Only entries of `X` inside a block contribute.
    pub fn weighted_traces(&self, weights: &[f64], xs: &[&Csr]) -> Vec<c64> {
        let rhos: Vec<Matrix> = self
            .blocks
            .iter()
            .map(|blk| {
                let b = blk.indices.len();
                let w = &weights[blk.offset..blk.offset + b];
                Mat::from_fn(b, b, |i, j| (0..b).map(|k| blk.vectors[(i, k)] * w[k] * blk.vectors[(j, k)].conj()).sum())
            })
            .collect();
        xs.iter()
            .map(|x| {
                let mut acc = ZERO;
                for i in 0..x.n {
                    let (bi, ii) = self.locate[i];
                    for p in x.row_ptr[i]..x.row_ptr[i + 1] {
                        let (bj, jj) = self.locate[x.cols[p]];
                        if bi == bj {
                            acc += rhos[bi][(jj, ii)] * x.vals[p];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues in the internal (block-concatenated) order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// `f(H)` as a dense matrix, for a real-argument function.
    pub fn apply(&self, f: impl Fn(f64) -> c64) -> Matrix {
        let mut out = zeros(self.dim);
        for blk in &self.blocks {
            let b = blk.indices.len();
            let fv: Vec<c64> = (0..b).map(|k| f(self.values[blk.offset + k])).collect();
            for (jj, &j) in blk.indices.iter().enumerate() {
                for (ii, &i) in blk.indices.iter().enumerate() {
                    let mut acc = ZERO;
                    for (k, f) in fv.iter().enumerate().take(b) {
                        acc += blk.vectors[(ii, k)] * *f * blk.vectors[(jj, k)].conj();
                    }
                    out[(i, j)] = acc;
                }
            }
        }
        out
    }

    /// `V* X V`, the matrix of `X` in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &Matrix) -> Matrix {
        let n = self.dim;
        // T = X V
        let mut t = zeros(n);
        for blk in &self.blocks {
            let b = blk.indices.len();
            let xs = Mat::from_fn(n, b, |i, jj| x[(i, blk.indices[jj])]);
            let prod = &xs * &blk.vectors;
            for k in 0..b {
                t.col_as_slice_mut(blk.offset + k).copy_from_slice(prod.col_as_slice(k));
            }
        }
        // Y = V* T
        let mut y = zeros(n);
        for blk in &self.blocks {
            let b = blk.indices.len();
            let ts = Mat::from_fn(b, n, |ii, j| t[(blk.indices[ii], j)]);
            let prod = blk.vectors.adjoint() * &ts;
            for k in 0..b {
                for j in 0..n {
                    y[(blk.offset + k, j)] = prod[(k, j)];
                }
            }
        }
        y
    }

    /// `V Y V*`, inverse of [`Spectrum::to_eigenbasis`].
    pub fn from_eigenbasis(&self, y: &Matrix) -> Matrix {
        let n = self.dim;
        // T = V Y
        let mut t = zeros(n);
        for blk in &self.blocks {
            let b = blk.indices.len();
            let ys = Mat::from_fn(b, n, |k, j| y[(blk.offset + k, j)]);
            let prod = &blk.vectors * &ys;
            for (ii, &i) in blk.indices.iter().enumerate() {
                for j in 0..n {
                    t[(i, j)] = prod[(ii, j)];
                }
            }
        }
        // X = T V*
        let mut x = zeros(n);
        for blk in &self.blocks {
            let b = blk.indices.len();
            let ts = Mat::from_fn(n, b, |i, k| t[(i, blk.offset + k)]);
            let prod = &ts * blk.vectors.adjoint();
            for (jj, &j) in blk.indices.iter().enumerate() {
                x.col_as_slice_mut(j).copy_from_slice(prod.col_as_slice(jj));
            }
        }
        x
    }

    /// `e^{itH} X e^{-itH}`.
    pub fn heisenberg(&self, x: &Matrix, t: f64) -> Matrix {
        let mut y = self.to_eigenbasis(x);
        let n = self.dim;
        let phases: Vec<c64> = self.values.iter().map(|e| c64::cis(t * e)).collect();
        for j in 0..n {
            let pj = phases[j].conj();
            let col = y.col_as_slice_mut(j);
            for (i, z) in col.iter_mut().enumerate() {
                *z *= phases[i] * pj;
            }
        }
        self.from_eigenbasis(&y)
    }
}

fn dense_eigh(h: &Matrix) -> (Vec<f64>, Matrix) {
    match h.self_adjoint_eigen(Side::Lower) {
        Ok(evd) => {
            let s = evd.S();
            let vals = (0..h.nrows()).map(|k| s[k].re).collect();
            (vals, evd.U().to_owned())
        }
        // faer only fails on non-finite input; propagate as NaNs so callers see it.
        Err(_) => (vec![f64::NAN; h.nrows()], identity(h.nrows())),
    }
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

fn union(p: &mut [usize], i: usize, j: usize) {
    let (a, b) = (find(p, i), find(p, j));
    if a != b {
        p[a.max(b)] = a.min(b);
    }
}

fn groups(parent: &mut [usize]) -> Vec<Vec<usize>> {
    let n = parent.len();
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(parent, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(i);
    }
    out
}

fn connected_components(h: MatRef<'_, c64>) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for j in 0..n {
        for i in (j + 1)..n {
            let z = h[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                union(&mut parent, i, j);
            }
        }
    }
    groups(&mut parent)
}

/// Compressed sparse row matrix, used for the many products in time stepping.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<c64>,
}

impl Csr {
    pub fn from_dense(m: &Matrix) -> Self {
        let (pattern, mut vals) = Self::with_pattern_of(&[m]);
        pattern.with_values(vals.remove(0))
    }

    /// Shared sparsity pattern of several matrices with per-matrix values.
    pub fn with_pattern_of(ms: &[&Matrix]) -> (CsrPattern, Vec<Vec<c64>>) {
        let n = ms[0].nrows();
        let mut row_ptr = vec![0usize];
        let mut cols = Vec::new();
        let mut vals: Vec<Vec<c64>> = vec![Vec::new(); ms.len()];
        for i in 0..n {
            for j in 0..n {
                if ms.iter().any(|m| m[(i, j)] != ZERO) {
                    cols.push(j);
                    for (v, m) in vals.iter_mut().zip(ms) {
                        v.push(m[(i, j)]);
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        (CsrPattern { n, row_ptr, cols }, vals)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Tr(self · m)`.
    pub fn trace_with(&self, m: &Matrix) -> c64 {
        let mut acc = ZERO;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * m[(self.cols[p], i)];
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = zeros(self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] = self.vals[p];
            }
        }
        m
    }

    /// `self * x` for dense `x`.
    pub fn mul_dense(&self, x: &Matrix) -> Matrix {
        let n = self.n;
        let mut y = Mat::zeros(n, x.ncols());
        for j in 0..x.ncols() {
            let xc = x.col_as_slice(j);
            let yc = y.col_as_slice_mut(j);
            for (i, y) in yc.iter_mut().enumerate() {
                let r = self.row_ptr[i]..self.row_ptr[i + 1];
                *y = self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&k, v)| *v * xc[k]).sum();
            }
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct CsrPattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl CsrPattern {
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn with_values(&self, vals: Vec<c64>) -> Csr {
        assert_eq!(vals.len(), self.cols.len());
        Csr { n: self.n, row_ptr: self.row_ptr.clone(), cols: self.cols.clone(), vals }
    }
}


/// Serializes complex numbers as `[re, im]` pairs.
pub mod serde_complex {
    use super::c64;
    use serde::ser::{SerializeSeq, Serializer};

    pub fn serialize<S: Serializer>(z: &c64, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&[z.re, z.im], s)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[c64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for z in v {
                seq.serialize_element(&[z.re, z.im])?;
            }
            seq.end()
        }
    }
}
