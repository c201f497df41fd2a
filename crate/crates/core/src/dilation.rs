//! Linear dilation of sums of products `sum_i prod_l (a_il P + b_il Q)` to a single
//! operator `aP + bQ` with `D x D` coefficients, `D = N (k (r+1) + 1)`.
//!
//! Block index layout of the dilated system: the first `kN(r+1)` indices are grouped
//! in `r+1` block rows of `k` blocks of size `N`; index `((l k) + i) N + p` is row `p`
//! of block `i` in block row `l`. The last `N` indices carry the original space.

use crate::circle_engine::{apply_section, margin_vectors, FourierTruncation, OpExpr};
use crate::symbols::{MatrixSymbol, PCSymbol};
use crate::{Error, Result, C64};
use serde::Serialize;

/// One factor `aP + bQ` with `N x N` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub a: MatrixSymbol,
    pub b: MatrixSymbol,
}

impl Factor {
    pub fn identity(n: usize) -> Self {
        Self { a: MatrixSymbol::identity(n), b: MatrixSymbol::identity(n) }
    }

    pub fn to_expr(&self) -> OpExpr {
        OpExpr::pair(&self.a, &self.b)
    }
}

/// `sum_{i<k} prod_{l<r} A_il`, products padded on the right with identity factors.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    n: usize,
    terms: Vec<Vec<Factor>>,
}

impl AlgebraElement {
    pub fn new(n: usize, mut terms: Vec<Vec<Factor>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("coefficient size must be at least 1".into()));
        }
        if terms.is_empty() || terms.iter().any(Vec::is_empty) {
            return Err(Error::Domain("an algebra element needs k >= 1 products of r >= 1 factors".into()));
        }
        for f in terms.iter().flatten() {
            for m in [&f.a, &f.b] {
                if m.size() != n {
                    return Err(Error::SizeMismatch { expected: n, found: m.size() });
                }
            }
        }
        let r = terms.iter().map(Vec::len).max().unwrap_or(1);
        for t in terms.iter_mut() {
            t.resize(r, Factor::identity(n));
        }
        Ok(Self { n, terms })
    }

    /// Single factor `aP + bQ`.
    pub fn pair(a: MatrixSymbol, b: MatrixSymbol) -> Result<Self> {
        let n = a.size();
        Self::new(n, vec![vec![Factor { a, b }]])
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn r(&self) -> usize {
        self.terms[0].len()
    }

    pub fn terms(&self) -> &[Vec<Factor>] {
        &self.terms
    }

    pub fn factor(&self, i: usize, l: usize) -> &Factor {
        &self.terms[i][l]
    }

    pub fn dilated_size(&self) -> usize {
        self.n * (self.k() * (self.r() + 1) + 1)
    }

    pub fn to_expr(&self) -> OpExpr {
        OpExpr::Sum(self.terms.iter().map(|t| OpExpr::Product(t.iter().map(Factor::to_expr).collect())).collect())
    }

    /// `(sum_i prod_l a_il, sum_i prod_l b_il)`.
    pub fn symbol_pair(&self, max_degree: usize) -> Result<(MatrixSymbol, MatrixSymbol)> {
        let reduce = |pick: fn(&Factor) -> &MatrixSymbol| -> Result<MatrixSymbol> {
            let mut total = MatrixSymbol::zeros(self.n);
            for t in &self.terms {
                let mut prod = pick(&t[0]).clone();
                for f in &t[1..] {
                    prod = prod.multiply(pick(f), max_degree)?.0;
                }
                total = total.add(&prod)?;
            }
            Ok(total)
        };
        Ok((reduce(|f| &f.a)?, reduce(|f| &f.b)?))
    }

    /// Largest trigonometric degree over all coefficients, if all are trigonometric polynomials.
    pub fn trig_degree(&self) -> Option<usize> {
        self.terms
            .iter()
            .flatten()
            .map(|f| Some(f.a.trig_degree()?.max(f.b.trig_degree()?)))
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }

    /// Coefficients replaced by their Fourier truncations of degree `degree`.
    pub fn fourier_truncated(&self, degree: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                t.iter()
                    .map(|f| Factor { a: f.a.fourier_truncated(degree), b: f.b.fourier_truncated(degree) })
                    .collect()
            })
            .collect();
        Self { n: self.n, terms }
    }
}

/// Scalar operator `alpha P + beta Q + gamma I`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOp {
    pub alpha: PCSymbol,
    pub beta: PCSymbol,
    pub gamma: PCSymbol,
}

impl AffineOp {
    pub fn constant(c: f64) -> Self {
        Self { alpha: PCSymbol::real(0.0), beta: PCSymbol::real(0.0), gamma: PCSymbol::real(c) }
    }

    pub fn pair(a: PCSymbol, b: PCSymbol) -> Self {
        Self { alpha: a, beta: b, gamma: PCSymbol::real(0.0) }
    }

    pub fn neg(&self) -> Self {
        let m = C64::new(-1.0, 0.0);
        Self { alpha: self.alpha.scale(m), beta: self.beta.scale(m), gamma: self.gamma.scale(m) }
    }

    pub fn to_expr(&self) -> OpExpr {
        let mul = |s: &PCSymbol| OpExpr::mul(MatrixSymbol::scalar(s.clone()));
        OpExpr::Sum(vec![mul(&self.alpha).then(OpExpr::P), mul(&self.beta).then(OpExpr::Q), mul(&self.gamma)])
    }
}

/// Scalar-acting operator: a sum of products of affine operators (empty sum is zero).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorEntry {
    /// Each product lists its factors left to right.
    pub terms: Vec<Vec<AffineOp>>,
}

impl OperatorEntry {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn affine(op: AffineOp) -> Self {
        Self { terms: vec![vec![op]] }
    }

    pub fn constant(c: f64) -> Self {
        Self::affine(AffineOp::constant(c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_expr(&self) -> OpExpr {
        if self.terms.is_empty() {
            return OpExpr::Zero;
        }
        OpExpr::Sum(self.terms.iter().map(|t| OpExpr::Product(t.iter().map(AffineOp::to_expr).collect())).collect())
    }
}

/// Square grid of operator entries.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorGrid {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<OperatorEntry>,
}

impl OperatorGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![OperatorEntry::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            g.set(i, i, OperatorEntry::constant(1.0));
        }
        g
    }

    pub fn get(&self, i: usize, j: usize) -> &OperatorEntry {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: OperatorEntry) {
        self.entries[i * self.cols + j] = e;
    }

    /// Copies `block` into position `(r0, c0)`.
    fn place(&mut self, r0: usize, c0: usize, block: &OperatorGrid) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(r0 + i, c0 + j, block.get(i, j).clone());
            }
        }
    }

    pub fn to_expr(&self) -> Result<OpExpr> {
        if self.rows != self.cols {
            return Err(Error::SizeMismatch { expected: self.rows, found: self.cols });
        }
        Ok(OpExpr::Block { n: self.rows, entries: self.entries.iter().map(OperatorEntry::to_expr).collect() })
    }
}

/// `N x N` grid of the factor `aP + bQ`.
fn factor_grid(f: &Factor, sign: f64) -> OperatorGrid {
    let n = f.a.size();
    let mut g = OperatorGrid::zeros(n, n);
    let s = C64::new(sign, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (f.a.entry(i, j), f.b.entry(i, j));
            if a.is_structurally_zero() && b.is_structurally_zero() {
                continue;
            }
            g.set(i, j, OperatorEntry::affine(AffineOp::pair(a.scale(s), b.scale(s))));
        }
    }
    g
}

/// Grid product; entries multiply as operator products (left factor first).
fn grid_product(x: &OperatorGrid, y: &OperatorGrid) -> Result<OperatorGrid> {
    if x.cols != y.rows {
        return Err(Error::SizeMismatch { expected: x.cols, found: y.rows });
    }
    let mut out = OperatorGrid::zeros(x.rows, y.cols);
    for i in 0..x.rows {
        for j in 0..y.cols {
            let mut terms = Vec::new();
            for m in 0..x.cols {
                for s in &x.get(i, m).terms {
                    for t in &y.get(m, j).terms {
                        terms.push(s.iter().chain(t).cloned().collect());
                    }
                }
            }
            out.set(i, j, OperatorEntry { terms });
        }
    }
    Ok(out)
}

/// Row/column ranges of the dilated system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    /// `Z` occupies indices `0..z_size` in both directions.
    pub z_size: usize,
    /// `X` is the column block `0..z_size x z_size..d`, `Y` the row block `z_size..d x 0..z_size`.
    pub d: usize,
}

impl BlockLayout {
    fn of(e: &AlgebraElement) -> Self {
        let (n, k, r) = (e.size(), e.k(), e.r());
        Self { n, k, r, z_size: k * n * (r + 1), d: e.dilated_size() }
    }

    /// Index of row `p` of block `i` in block row `l`.
    pub fn index(&self, l: usize, i: usize, p: usize) -> usize {
        (l * self.k + i) * self.n + p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationBlocks {
    pub layout: BlockLayout,
    /// `kN(r+1)` square: identity diagonal, `-B_l` on the block superdiagonal.
    pub z: OperatorGrid,
    /// `kN(r+1) x N`.
    pub x: OperatorGrid,
    /// `N x kN(r+1)`.
    pub y: OperatorGrid,
    /// `N x kN(r+1)`: `(M_0, ..., M_r)`.
    pub w: OperatorGrid,
}

pub fn build_blocks(e: &AlgebraElement) -> Result<DilationBlocks> {
    let lay = BlockLayout::of(e);
    let (n, k, r) = (lay.n, lay.k, lay.r);
    let mut z = OperatorGrid::identity(lay.z_size);
    for l in 1..=r {
        for i in 0..k {
            z.place(lay.index(l - 1, i, 0), lay.index(l, i, 0), &factor_grid(e.factor(i, l - 1), -1.0));
        }
    }
    let mut x = OperatorGrid::zeros(lay.z_size, n);
    let mut y = OperatorGrid::zeros(n, lay.z_size);
    for i in 0..k {
        for p in 0..n {
            x.set(lay.index(r, i, p), p, OperatorEntry::constant(-1.0));
            y.set(p, lay.index(0, i, p), OperatorEntry::constant(1.0));
        }
    }
    let mut w = OperatorGrid::zeros(n, lay.z_size);
    for i in 0..k {
        let mut m = OperatorGrid::identity(n);
        w.place(0, lay.index(0, i, 0), &m);
        for l in 1..=r {
            m = grid_product(&m, &factor_grid(e.factor(i, l - 1), 1.0))?;
            w.place(0, lay.index(l, i, 0), &m);
        }
    }
    Ok(DilationBlocks { layout: lay, z, x, y, w })
}

/// Coefficients `(a, b)` of a grid whose entries are affine in `P`, `Q`, `I`.
pub fn flatten(grid: &OperatorGrid) -> Result<(MatrixSymbol, MatrixSymbol)> {
    if grid.rows != grid.cols {
        return Err(Error::SizeMismatch { expected: grid.rows, found: grid.cols });
    }
    let mut a = Vec::with_capacity(grid.entries.len());
    let mut b = Vec::with_capacity(grid.entries.len());
    for (idx, e) in grid.entries.iter().enumerate() {
        let (mut ea, mut eb) = (PCSymbol::real(0.0), PCSymbol::real(0.0));
        for t in &e.terms {
            match t.as_slice() {
                [op] => {
                    ea = ea.add(&op.alpha.add(&op.gamma));
                    eb = eb.add(&op.beta.add(&op.gamma));
                }
                _ => {
                    return Err(Error::UnsupportedEntry(format!(
                        "entry ({}, {}) is a product of {} operators, not affine in P, Q, I",
                        idx / grid.cols,
                        idx % grid.cols,
                        t.len()
                    )))
                }
            }
        }
        a.push(ea);
        b.push(eb);
    }
    Ok((MatrixSymbol::new(grid.rows, a)?, MatrixSymbol::new(grid.rows, b)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationResult {
    pub a: MatrixSymbol,
    pub b: MatrixSymbol,
    pub d: usize,
    pub layout: BlockLayout,
}

/// `[[Z, X], [Y, 0]]` assembled and flattened to `aP + bQ`.
pub fn dilate(e: &AlgebraElement) -> Result<DilationResult> {
    let blocks = build_blocks(e)?;
    let grid = dilated_grid(&blocks);
    let (a, b) = flatten(&grid)?;
    Ok(DilationResult { a, b, d: blocks.layout.d, layout: blocks.layout })
}

fn dilated_grid(blocks: &DilationBlocks) -> OperatorGrid {
    let lay = blocks.layout;
    let mut g = OperatorGrid::zeros(lay.d, lay.d);
    g.place(0, 0, &blocks.z);
    g.place(0, lay.z_size, &blocks.x);
    g.place(lay.z_size, 0, &blocks.y);
    g
}

/// Left-hand factors `[[I, 0], [W, I]]`, `diag(I, A)`, `[[Z, X], [0, I]]`.
fn outer_factors(e: &AlgebraElement, blocks: &DilationBlocks) -> Result<(OperatorGrid, OperatorGrid, OperatorGrid)> {
    let lay = blocks.layout;
    let mut left = OperatorGrid::identity(lay.d);
    left.place(lay.z_size, 0, &blocks.w);
    let mut middle = OperatorGrid::identity(lay.d);
    let mut a = OperatorGrid::zeros(lay.n, lay.n);
    for t in e.terms() {
        let mut prod = OperatorGrid::identity(lay.n);
        for f in t {
            prod = grid_product(&prod, &factor_grid(f, 1.0))?;
        }
        for (dst, src) in a.entries.iter_mut().zip(prod.entries) {
            dst.terms.extend(src.terms);
        }
    }
    middle.place(lay.z_size, lay.z_size, &a);
    let mut right = OperatorGrid::identity(lay.d);
    right.place(0, 0, &blocks.z);
    right.place(0, lay.z_size, &blocks.x);
    Ok((left, middle, right))
}

fn margin(e: &AlgebraElement, n: usize) -> Result<(usize, usize)> {
    let d = e
        .trig_degree()
        .ok_or_else(|| Error::Domain("identity verification needs trigonometric polynomial coefficients".into()))?;
    let r = e.r();
    let required = (4 * d * (r + 1)).max(crate::circle_engine::MIN_TRUNCATION);
    if n < required {
        return Err(Error::InsufficientTruncation { n, required });
    }
    Ok((d, n - 2 * d * (r + 1)))
}

fn max_discrepancy(lhs: &OpExpr, rhs: &OpExpr, xs: &[crate::circle_engine::ModeVec], n: usize, cap: usize) -> Result<f64> {
    xs.iter().try_fold(0.0f64, |acc, x| {
        let l = apply_section(lhs, x, n, cap)?;
        let r = apply_section(rhs, x, n, cap)?;
        Ok(acc.max(l.max_abs_diff(&r)))
    })
}

/// Largest discrepancy between the two sides of the dilation identity, applied as
/// products of finite sections to vectors supported on `|m| <= n - 2d(r+1)`.
pub fn verify_dilation_identity(e: &AlgebraElement, n: usize, seed: u64) -> Result<f64> {
    let (d, half) = margin(e, n)?;
    let trunc = FourierTruncation::new(n, e.dilated_size())?;
    let blocks = build_blocks(e)?;
    let (left, middle, right) = outer_factors(e, &blocks)?;
    let lhs = OpExpr::Product(vec![left.to_expr()?, middle.to_expr()?, right.to_expr()?]);
    let dil = dilate(e)?;
    let rhs = OpExpr::pair(&dil.a, &dil.b);
    let xs = margin_vectors(trunc.block(), half, 6, seed);
    max_discrepancy(&lhs, &rhs, &xs, n, d.max(1))
}

/// Checks the explicit inverses of the outer factors: `[[I, 0], [-W, I]]` and
/// `[[Z^{-1}, -Z^{-1} X], [0, I]]` with `Z^{-1} = sum_j (I - Z)^j`.
pub fn verify_outer_inverses(e: &AlgebraElement, n: usize, seed: u64) -> Result<f64> {
    let (d, half) = margin(e, n)?;
    let blocks = build_blocks(e)?;
    let lay = blocks.layout;
    let (left, _, right) = outer_factors(e, &blocks)?;
    let neg = |g: &OperatorGrid| OperatorGrid {
        rows: g.rows,
        cols: g.cols,
        entries: g
            .entries
            .iter()
            .map(|x| OperatorEntry {
                terms: x
                    .terms
                    .iter()
                    .map(|t| {
                        let mut t = t.clone();
                        t[0] = t[0].neg();
                        t
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut left_inv = OperatorGrid::identity(lay.d);
    left_inv.place(lay.z_size, 0, &neg(&blocks.w));
    // nilpotent part I - Z carries +B_l on the superdiagonal
    let mut nil = OperatorGrid::zeros(lay.z_size, lay.z_size);
    for l in 1..=lay.r {
        for i in 0..lay.k {
            nil.place(lay.index(l - 1, i, 0), lay.index(l, i, 0), &factor_grid(e.factor(i, l - 1), 1.0));
        }
    }
    let mut z_inv = OperatorGrid::identity(lay.z_size);
    let mut power = OperatorGrid::identity(lay.z_size);
    for _ in 0..lay.r {
        power = grid_product(&power, &nil)?;
        for (dst, src) in z_inv.entries.iter_mut().zip(&power.entries) {
            dst.terms.extend(src.terms.iter().cloned());
        }
    }
    let mut right_inv = OperatorGrid::identity(lay.d);
    right_inv.place(0, 0, &z_inv);
    right_inv.place(0, lay.z_size, &neg(&grid_product(&z_inv, &blocks.x)?));
    let id = OpExpr::Identity;
    let xs = margin_vectors(lay.d, half, 4, seed);
    let cap = d.max(1);
    let l = OpExpr::Product(vec![left_inv.to_expr()?, left.to_expr()?]);
    let r = OpExpr::Product(vec![right_inv.to_expr()?, right.to_expr()?]);
    Ok(max_discrepancy(&l, &id, &xs, n, cap)?.max(max_discrepancy(&r, &id, &xs, n, cap)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Laurent;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn scalar_pair(a: PCSymbol, b: PCSymbol) -> Factor {
        Factor { a: MatrixSymbol::scalar(a), b: MatrixSymbol::scalar(b) }
    }

    fn element(n: usize, k: usize, r: usize) -> AlgebraElement {
        let f = Factor { a: MatrixSymbol::identity(n), b: MatrixSymbol::identity(n) };
        AlgebraElement::new(n, vec![vec![f; r]; k]).unwrap()
    }

    #[test]
    fn dilated_size_formula() {
        assert_eq!(element(1, 1, 1).dilated_size(), 3);
        assert_eq!(element(1, 2, 1).dilated_size(), 5);
        assert_eq!(element(1, 1, 2).dilated_size(), 4);
        assert_eq!(element(1, 2, 2).dilated_size(), 7);
        assert_eq!(element(2, 1, 3).dilated_size(), 10);
    }

    #[test]
    fn short_products_are_padded_with_identities() {
        let tau = scalar_pair(PCSymbol::power(1), PCSymbol::real(1.0));
        let e = AlgebraElement::new(1, vec![vec![tau.clone()], vec![tau.clone(), tau]]).unwrap();
        assert_eq!((e.k(), e.r()), (2, 2));
        assert_eq!(e.factor(0, 1), &Factor::identity(1));
    }

    #[test]
    fn blocks_for_a_single_factor() {
        let (a, b) = (PCSymbol::power(1), PCSymbol::real(2.0));
        let e = AlgebraElement::new(1, vec![vec![scalar_pair(a.clone(), b.clone())]]).unwrap();
        let bl = build_blocks(&e).unwrap();
        assert_eq!(bl.z.rows, 2);
        assert_eq!(bl.z.get(0, 0), &OperatorEntry::constant(1.0));
        assert_eq!(bl.z.get(1, 0), &OperatorEntry::zero());
        let (za, zb) = flatten(&OperatorGrid { rows: 1, cols: 1, entries: vec![bl.z.get(0, 1).clone()] }).unwrap();
        assert_eq!(za.entry(0, 0).eval(0.1), -a.eval(0.1));
        assert_eq!(zb.entry(0, 0).eval(0.1), c(-2.0));
        assert_eq!(bl.x.get(1, 0), &OperatorEntry::constant(-1.0));
        assert_eq!(bl.x.get(0, 0), &OperatorEntry::zero());
        assert_eq!(bl.y.get(0, 0), &OperatorEntry::constant(1.0));
        assert_eq!(bl.w.get(0, 0), &OperatorEntry::constant(1.0));
        assert_eq!(bl.w.get(0, 1).terms.len(), 1);
    }

    #[test]
    fn dilation_of_a_single_pair() {
        let (a, b) = (PCSymbol::power(1), PCSymbol::real(3.0));
        let e = AlgebraElement::new(1, vec![vec![scalar_pair(a.clone(), b)]]).unwrap();
        let d = dilate(&e).unwrap();
        assert_eq!(d.d, 3);
        let s = 0.3;
        let av = d.a.eval(s);
        let expect = [[c(1.0), -a.eval(s), c(0.0)], [c(0.0), c(1.0), c(-1.0)], [c(1.0), c(0.0), c(0.0)]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((av[(i, j)] - expect[i][j]).norm() < 1e-15);
            }
        }
        assert!((d.b.eval(s)[(0, 1)] - c(-3.0)).norm() < 1e-15);
        assert_eq!(d.b.eval(s)[(1, 2)], c(-1.0));
    }

    #[test]
    fn flatten_fixtures() {
        let one = OperatorGrid::identity(1);
        let (a, b) = flatten(&one).unwrap();
        assert_eq!((a.eval(0.2)[(0, 0)], b.eval(0.2)[(0, 0)]), (c(1.0), c(1.0)));
        let minus = OperatorGrid { rows: 1, cols: 1, entries: vec![OperatorEntry::constant(-1.0)] };
        let (a, b) = flatten(&minus).unwrap();
        assert_eq!((a.eval(0.2)[(0, 0)], b.eval(0.2)[(0, 0)]), (c(-1.0), c(-1.0)));
        let prod = OperatorEntry { terms: vec![vec![AffineOp::constant(1.0), AffineOp::constant(2.0)]] };
        let g = OperatorGrid { rows: 1, cols: 1, entries: vec![prod] };
        assert!(matches!(flatten(&g), Err(Error::UnsupportedEntry(_))));
    }

    #[test]
    fn identity_element_verifies_exactly() {
        let e = element(1, 1, 1);
        assert_eq!(verify_dilation_identity(&e, 16, 1).unwrap(), 0.0);
        let d = dilate(&e).unwrap();
        assert!(d.a.is_trig_polynomial() && d.a.trig_degree() == Some(0));
    }

    fn trig(terms: &[(i64, f64, f64)]) -> PCSymbol {
        PCSymbol::laurent(Laurent::from_terms(&terms.iter().map(|&(k, re, im)| (k, C64::new(re, im))).collect::<Vec<_>>()))
    }

    #[test]
    fn margin_violation_is_reported() {
        let f = scalar_pair(trig(&[(8, 0.1, 0.0), (0, 1.0, 0.0)]), PCSymbol::real(1.0));
        let e = AlgebraElement::new(1, vec![vec![f]]).unwrap();
        assert!(matches!(verify_dilation_identity(&e, 16, 0), Err(Error::InsufficientTruncation { .. })));
        assert!(verify_dilation_identity(&e, 64, 0).unwrap() <= 1e-12);
    }

    #[test]
    fn piecewise_constant_truncated_fixture() {
        let sign = scalar_pair(PCSymbol::sign(), PCSymbol::real(1.0));
        let e = AlgebraElement::new(1, vec![vec![sign]]).unwrap().fourier_truncated(8);
        assert!(verify_dilation_identity(&e, 64, 3).unwrap() <= 1e-12);
    }

    fn arb_trig(deg: i64) -> impl Strategy<Value = PCSymbol> {
        prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), (2 * deg + 1) as usize).prop_map(move |cs| {
            let terms: Vec<(i64, f64, f64)> =
                cs.iter().enumerate().map(|(j, &(re, im))| (j as i64 - deg, re, im)).collect();
            trig(&terms)
        })
    }

    fn arb_element() -> impl Strategy<Value = AlgebraElement> {
        (1usize..=2, 1usize..=3, 1usize..=2).prop_flat_map(|(n, k, r)| {
            prop::collection::vec(prop::collection::vec(arb_trig(2), 2 * n * n), k * r).prop_map(move |cs| {
                let terms = (0..k)
                    .map(|i| {
                        (0..r)
                            .map(|l| {
                                let s = &cs[i * r + l];
                                Factor {
                                    a: MatrixSymbol::new(n, s[..n * n].to_vec()).unwrap(),
                                    b: MatrixSymbol::new(n, s[n * n..].to_vec()).unwrap(),
                                }
                            })
                            .collect()
                    })
                    .collect();
                AlgebraElement::new(n, terms).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn dilation_identity_and_inverses_hold(e in arb_element()) {
            prop_assert_eq!(dilate(&e).unwrap().d, e.size() * (e.k() * (e.r() + 1) + 1));
            prop_assert!(verify_dilation_identity(&e, 24, 5).unwrap() <= 1e-12);
            prop_assert!(verify_outer_inverses(&e, 24, 6).unwrap() <= 1e-12);
        }

        #[test]
        fn flatten_round_trip(e in arb_element()) {
            let d = dilate(&e).unwrap();
            let grid = OperatorGrid {
                rows: d.d,
                cols: d.d,
                entries: d.a.entries().iter().zip(d.b.entries())
                    .map(|(a, b)| OperatorEntry::affine(AffineOp::pair(a.clone(), b.clone())))
                    .collect(),
            };
            let (a2, b2) = flatten(&grid).unwrap();
            for s in [0.0, 0.17, 0.5, 0.83] {
                prop_assert!((a2.eval(s) - d.a.eval(s)).norm() < 1e-14);
                prop_assert!((b2.eval(s) - d.b.eval(s)).norm() < 1e-14);
            }
        }
    }
}
