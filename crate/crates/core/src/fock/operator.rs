use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::state::{check_cutoff, strides, MultiModeState};
use crate::error::{Error, Result};

/// Hermiticity tolerance for generators handed to the exponential.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Linear operator on one mode, or on the tensor product of two modes.
///
/// Semantically this is always a dense `D x D` complex matrix. Storage is
/// structured so that two-mode operators at large cutoffs stay small:
/// ladder-built generators are kept sparse, exponentials of decoupled
/// generators are kept block-diagonal, and `exp(i s A (x) B)` is kept in
/// factored spectral form.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    dims: Vec<usize>,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Dense(DMatrix<C64>),
    /// Sorted, duplicate-free `(row, col, value)` triplets.
    Sparse(Vec<(usize, usize, C64)>),
    /// Block-diagonal after a permutation; the blocks cover every index.
    Blocks(Vec<Block>),
    /// `(L (x) R) diag(phases) (L (x) R)^H`, phases stored as a `dl x dr` matrix.
    Product {
        left: DMatrix<C64>,
        right: DMatrix<C64>,
        phases: DMatrix<C64>,
    },
}

#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    matrix: DMatrix<C64>,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 2 {
        return Err(Error::InvalidParameter(format!(
            "operators act on one or two modes, got {}",
            dims.len()
        )));
    }
    dims.iter().try_for_each(|&d| check_cutoff(d))
}

impl ModeOperator {
    pub fn from_matrix(dims: &[usize], matrix: DMatrix<C64>) -> Result<Self> {
        check_dims(dims)?;
        let dim: usize = dims.iter().product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: vec![dim, dim],
                found: vec![matrix.nrows(), matrix.ncols()],
            });
        }
        Ok(Self {
            dims: dims.to_vec(),
            repr: Repr::Dense(matrix),
        })
    }

    fn sparse(dims: &[usize], entries: BTreeMap<(usize, usize), C64>) -> Self {
        Self {
            dims: dims.to_vec(),
            repr: Repr::Sparse(
                entries
                    .into_iter()
                    .filter(|(_, v)| *v != ZERO)
                    .map(|((r, c), v)| (r, c, v))
                    .collect(),
            ),
        }
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let dim: usize = dims.iter().product();
        Ok(Self::sparse(dims, (0..dim).map(|i| ((i, i), ONE)).collect()))
    }

    /// Ladder operator with `a|n> = sqrt(n)|n-1>`.
    pub fn annihilation(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        Ok(Self::sparse(
            &[cutoff],
            (1..cutoff)
                .map(|n| ((n - 1, n), C64::new((n as f64).sqrt(), 0.0)))
                .collect(),
        ))
    }

    pub fn creation(cutoff: usize) -> Result<Self> {
        Ok(Self::annihilation(cutoff)?.adjoint())
    }

    pub fn number(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        Ok(Self::sparse(
            &[cutoff],
            (0..cutoff).map(|n| ((n, n), C64::new(n as f64, 0.0))).collect(),
        ))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn entries(&self) -> BTreeMap<(usize, usize), C64> {
        match &self.repr {
            Repr::Sparse(e) => e.iter().map(|&(r, c, v)| ((r, c), v)).collect(),
            _ => {
                let m = self.matrix();
                let mut out = BTreeMap::new();
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        if m[(r, c)] != ZERO {
                            out.insert((r, c), m[(r, c)]);
                        }
                    }
                }
                out
            }
        }
    }

    fn is_sparse(&self) -> bool {
        matches!(self.repr, Repr::Sparse(_))
    }

    /// Dense matrix of the operator.
    pub fn matrix(&self) -> DMatrix<C64> {
        let dim = self.dim();
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Sparse(entries) => {
                let mut m = DMatrix::zeros(dim, dim);
                for &(r, c, v) in entries {
                    m[(r, c)] = v;
                }
                m
            }
            Repr::Blocks(blocks) => {
                let mut m = DMatrix::zeros(dim, dim);
                for b in blocks {
                    for (i, &r) in b.indices.iter().enumerate() {
                        for (j, &c) in b.indices.iter().enumerate() {
                            m[(r, c)] = b.matrix[(i, j)];
                        }
                    }
                }
                m
            }
            Repr::Product { .. } => {
                let mut m = DMatrix::zeros(dim, dim);
                let mut e = vec![ZERO; dim];
                for c in 0..dim {
                    e.iter_mut().for_each(|x| *x = ZERO);
                    e[c] = ONE;
                    let col = self.apply_vec(&e);
                    for (r, v) in col.into_iter().enumerate() {
                        m[(r, c)] = v;
                    }
                }
                m
            }
        }
    }

    /// Single matrix element `<row|O|col>`.
    pub fn element(&self, row: usize, col: usize) -> C64 {
        match &self.repr {
            Repr::Dense(m) => m[(row, col)],
            Repr::Sparse(e) => e
                .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
                .map(|i| e[i].2)
                .unwrap_or(ZERO),
            Repr::Blocks(blocks) => {
                for b in blocks {
                    if let Some(i) = b.indices.iter().position(|&x| x == row) {
                        return b
                            .indices
                            .iter()
                            .position(|&x| x == col)
                            .map(|j| b.matrix[(i, j)])
                            .unwrap_or(ZERO);
                    }
                }
                ZERO
            }
            Repr::Product {
                left,
                right,
                phases,
            } => {
                let dr = right.nrows();
                let (m, n) = (row / dr, row % dr);
                let (mp, np) = (col / dr, col % dr);
                let mut acc = ZERO;
                for k in 0..left.ncols() {
                    let lk = left[(m, k)] * left[(mp, k)].conj();
                    for l in 0..right.ncols() {
                        acc += lk * right[(n, l)] * right[(np, l)].conj() * phases[(k, l)];
                    }
                }
                acc
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m.adjoint()),
            Repr::Sparse(e) => {
                let mut t: Vec<_> = e.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
                t.sort_by_key(|&(r, c, _)| (r, c));
                Repr::Sparse(t)
            }
            Repr::Blocks(blocks) => Repr::Blocks(
                blocks
                    .iter()
                    .map(|b| Block {
                        indices: b.indices.clone(),
                        matrix: b.matrix.adjoint(),
                    })
                    .collect(),
            ),
            Repr::Product {
                left,
                right,
                phases,
            } => Repr::Product {
                left: left.clone(),
                right: right.clone(),
                phases: phases.map(|p| p.conj()),
            },
        };
        Self {
            dims: self.dims.clone(),
            repr,
        }
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(())
    }

    /// Operator product `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dims(rhs)?;
        if self.is_sparse() && rhs.is_sparse() {
            let (a, b) = (self.entries(), rhs.entries());
            let mut by_row: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
            for (&(r, c), &v) in &b {
                by_row.entry(r).or_default().push((c, v));
            }
            let mut out: BTreeMap<(usize, usize), C64> = BTreeMap::new();
            for (&(r, k), &v) in &a {
                if let Some(row) = by_row.get(&k) {
                    for &(c, w) in row {
                        *out.entry((r, c)).or_insert(ZERO) += v * w;
                    }
                }
            }
            return Ok(Self::sparse(&self.dims, out));
        }
        Self::from_matrix(&self.dims, self.matrix() * rhs.matrix())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dims(rhs)?;
        if self.is_sparse() && rhs.is_sparse() {
            let mut out = self.entries();
            for (k, v) in rhs.entries() {
                *out.entry(k).or_insert(ZERO) += v;
            }
            return Ok(Self::sparse(&self.dims, out));
        }
        Self::from_matrix(&self.dims, self.matrix() + rhs.matrix())
    }

    pub fn scale(&self, factor: C64) -> Self {
        match &self.repr {
            Repr::Sparse(e) => Self {
                dims: self.dims.clone(),
                repr: Repr::Sparse(
                    e.iter()
                        .map(|&(r, c, v)| (r, c, v * factor))
                        .filter(|t| t.2 != ZERO)
                        .collect(),
                ),
            },
            _ => Self {
                dims: self.dims.clone(),
                repr: Repr::Dense(self.matrix() * factor),
            },
        }
    }

    pub fn powi(&self, exponent: u32) -> Result<Self> {
        let mut out = Self::identity(&self.dims)?;
        for _ in 0..exponent {
            out = out.compose(self)?;
        }
        Ok(out)
    }

    /// Two-mode operator `self (x) rhs` from two single-mode operators.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        if self.arity() != 1 || rhs.arity() != 1 {
            return Err(Error::InvalidParameter(
                "kron takes two single-mode operators".into(),
            ));
        }
        let (da, db) = (self.dims[0], rhs.dims[0]);
        let (a, b) = (self.entries(), rhs.entries());
        let mut out = BTreeMap::new();
        for (&(ra, ca), &va) in &a {
            for (&(rb, cb), &vb) in &b {
                out.insert((ra * db + rb, ca * db + cb), va * vb);
            }
        }
        let op = Self::sparse(&[da, db], out);
        if self.is_sparse() && rhs.is_sparse() {
            Ok(op)
        } else {
            Self::from_matrix(&[da, db], op.matrix())
        }
    }

    /// Largest entry of `|O - O^H|`.
    pub fn hermiticity_error(&self) -> f64 {
        let e = self.entries();
        e.iter()
            .map(|(&(r, c), v)| {
                let t = e.get(&(c, r)).copied().unwrap_or(ZERO);
                (v - t.conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|U^H U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let m = self.matrix();
        let p = m.adjoint() * &m;
        let mut worst: f64 = 0.0;
        for c in 0..p.ncols() {
            for r in 0..p.nrows() {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((p[(r, c)] - target).norm());
            }
        }
        worst
    }

    /// Applies the operator to a vector in its own `D`-dimensional space.
    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.dim());
        match &self.repr {
            Repr::Dense(m) => {
                let n = x.len();
                let mut y = vec![ZERO; n];
                for (c, &xc) in x.iter().enumerate() {
                    if xc == ZERO {
                        continue;
                    }
                    let col = m.column(c);
                    for (yr, mr) in y.iter_mut().zip(col.iter()) {
                        *yr += mr * xc;
                    }
                }
                y
            }
            Repr::Sparse(e) => {
                let mut y = vec![ZERO; x.len()];
                for &(r, c, v) in e {
                    y[r] += v * x[c];
                }
                y
            }
            Repr::Blocks(blocks) => {
                let mut y = vec![ZERO; x.len()];
                for b in blocks {
                    let k = b.indices.len();
                    for (i, &r) in b.indices.iter().enumerate() {
                        let mut acc = ZERO;
                        for j in 0..k {
                            acc += b.matrix[(i, j)] * x[b.indices[j]];
                        }
                        y[r] = acc;
                    }
                }
                y
            }
            Repr::Product {
                left,
                right,
                phases,
            } => {
                let (dl, dr) = (left.nrows(), right.nrows());
                let xm = DMatrix::from_row_slice(dl, dr, x);
                let mut t = left.adjoint() * xm * right.conjugate();
                t.component_mul_assign(phases);
                let ym = left * t * right.transpose();
                let mut y = Vec::with_capacity(dl * dr);
                for r in 0..dl {
                    for c in 0..dr {
                        y.push(ym[(r, c)]);
                    }
                }
                y
            }
        }
    }

    /// Largest entry of `|self - other|` restricted to the leading
    /// `block x block` corner (pass `self.dim()` for the full matrix).
    pub fn max_abs_diff(&self, other: &Self, block: usize) -> Result<f64> {
        self.check_same_dims(other)?;
        let (a, b) = (self.matrix(), other.matrix());
        let k = block.min(self.dim());
        let mut worst: f64 = 0.0;
        for c in 0..k {
            for r in 0..k {
                worst = worst.max((a[(r, c)] - b[(r, c)]).norm());
            }
        }
        Ok(worst)
    }

    /// As [`max_abs_diff`](Self::max_abs_diff) but after removing the best
    /// global phase of `other` relative to `self`.
    pub fn max_abs_diff_up_to_phase(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        let (a, b) = (self.matrix(), other.matrix());
        let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        Ok(a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y * phase).norm())
            .fold(0.0, f64::max))
    }
}

/// Ladder matrix for a single mode, `M[n-1, n] = sqrt(n)`.
pub fn annihilation_matrix(cutoff: usize) -> Result<ModeOperator> {
    ModeOperator::annihilation(cutoff)
}

/// Position and momentum quadratures, `q = (a + a^H)/sqrt(2)` and
/// `p = -i (a - a^H)/sqrt(2)` (hbar = 1).
pub fn quadrature_operators(cutoff: usize) -> Result<(ModeOperator, ModeOperator)> {
    let a = ModeOperator::annihilation(cutoff)?;
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = a.add(&ad)?.scale(C64::new(s, 0.0));
    let p = a.add(&ad.scale(C64::new(-1.0, 0.0)))?.scale(C64::new(0.0, -s));
    Ok((q, p))
}

fn eigh(m: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn spectral_exp(m: DMatrix<C64>, scale: f64) -> DMatrix<C64> {
    let (values, vectors) = eigh(m);
    let mut scaled = vectors.clone();
    for (k, lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, scale * lambda);
        scaled.column_mut(k).iter_mut().for_each(|x| *x *= phase);
    }
    scaled * vectors.adjoint()
}

/// Connected components of the nonzero pattern.
fn components(dim: usize, entries: &BTreeMap<(usize, usize), C64>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(r, c) in entries.keys() {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..dim {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// `exp(i * scale * G)` for a Hermitian generator `G`, via eigendecomposition.
///
/// Decoupled index sets of `G` are exponentiated independently, so
/// number-conserving two-mode generators never form a dense matrix.
pub fn hermitian_exponential(generator: &ModeOperator, scale: f64) -> Result<ModeOperator> {
    let deviation = generator.hermiticity_error();
    if deviation >= HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    if !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite scale {scale}")));
    }
    let dim = generator.dim();
    let entries = generator.entries();
    let groups = components(dim, &entries);
    if groups.len() == 1 {
        return ModeOperator::from_matrix(&generator.dims, spectral_exp(generator.matrix(), scale));
    }
    let mut position = vec![0usize; dim];
    for g in &groups {
        for (i, &x) in g.iter().enumerate() {
            position[x] = i;
        }
    }
    let mut sub: Vec<DMatrix<C64>> = groups
        .iter()
        .map(|g| DMatrix::zeros(g.len(), g.len()))
        .collect();
    let mut group_of = vec![0usize; dim];
    for (k, g) in groups.iter().enumerate() {
        for &x in g {
            group_of[x] = k;
        }
    }
    for (&(r, c), &v) in &entries {
        sub[group_of[r]][(position[r], position[c])] = v;
    }
    let blocks = groups
        .into_iter()
        .zip(sub)
        .map(|(indices, m)| Block {
            indices,
            matrix: spectral_exp(m, scale),
        })
        .collect();
    Ok(ModeOperator {
        dims: generator.dims.clone(),
        repr: Repr::Blocks(blocks),
    })
}

/// `exp(i * scale * A (x) B)` for single-mode Hermitian `A`, `B`, kept in
/// factored spectral form.
pub fn hermitian_product_exponential(
    left: &ModeOperator,
    right: &ModeOperator,
    scale: f64,
) -> Result<ModeOperator> {
    if left.arity() != 1 || right.arity() != 1 {
        return Err(Error::InvalidParameter(
            "product exponential takes two single-mode generators".into(),
        ));
    }
    for g in [left, right] {
        let deviation = g.hermiticity_error();
        if deviation >= HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
    }
    let (lv, lvec) = eigh(left.matrix());
    let (rv, rvec) = eigh(right.matrix());
    let phases = DMatrix::from_fn(lv.len(), rv.len(), |k, l| {
        C64::from_polar(1.0, scale * lv[k] * rv[l])
    });
    Ok(ModeOperator {
        dims: vec![left.dims[0], right.dims[0]],
        repr: Repr::Product {
            left: lvec,
            right: rvec,
            phases,
        },
    })
}

fn check_modes(state: &MultiModeState, op: &ModeOperator, modes: &[usize]) -> Result<()> {
    if modes.len() != op.arity() {
        return Err(Error::DimensionMismatch {
            expected: vec![op.arity()],
            found: vec![modes.len()],
        });
    }
    for &m in modes {
        state.check_mode(m)?;
    }
    if modes.len() == 2 && modes[0] == modes[1] {
        return Err(Error::InvalidParameter("two-mode operator needs distinct modes".into()));
    }
    let found: Vec<usize> = modes.iter().map(|&m| state.cutoffs()[m]).collect();
    if found != op.dims {
        return Err(Error::DimensionMismatch {
            expected: op.dims.clone(),
            found,
        });
    }
    Ok(())
}

/// Applies `op` to the given mode (or ordered mode pair) of `state`.
pub fn apply(state: &MultiModeState, op: &ModeOperator, modes: &[usize]) -> Result<MultiModeState> {
    check_modes(state, op, modes)?;
    let cutoffs = state.cutoffs();
    let st = strides(cutoffs);
    // flat offsets of the operator's basis vectors relative to a base index
    let offsets: Vec<usize> = match modes {
        [m] => (0..op.dims[0]).map(|n| n * st[*m]).collect(),
        [i, j] => {
            let (di, dj) = (op.dims[0], op.dims[1]);
            (0..di * dj)
                .map(|t| (t / dj) * st[*i] + (t % dj) * st[*j])
                .collect()
        }
        _ => unreachable!(),
    };
    let amps = state.amplitudes();
    let mut out = vec![ZERO; amps.len()];
    let mut buf = vec![ZERO; offsets.len()];
    for base in 0..amps.len() {
        if modes.iter().any(|&m| !(base / st[m]).is_multiple_of(cutoffs[m])) {
            continue;
        }
        for (b, off) in buf.iter_mut().zip(&offsets) {
            *b = amps[base + off];
        }
        if buf.iter().all(|x| *x == ZERO) {
            continue;
        }
        let y = op.apply_vec(&buf);
        for (v, off) in y.into_iter().zip(&offsets) {
            out[base + off] = v;
        }
    }
    MultiModeState::new(cutoffs.to_vec(), out)
}

/// `<psi|O|psi>` on the given modes.
pub fn expectation(state: &MultiModeState, op: &ModeOperator, modes: &[usize]) -> Result<C64> {
    let image = apply(state, op, modes)?;
    state.inner(&image)
}

/// `|<s1|s2>|^2` for normalized states.
pub fn fidelity(s1: &MultiModeState, s2: &MultiModeState) -> Result<f64> {
    s1.require_normalized()?;
    s2.require_normalized()?;
    Ok(s1.inner(s2)?.norm_sqr().min(1.0))
}
