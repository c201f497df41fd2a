//! Piecewise-continuous scalar and matrix symbols on a closed curve.
//!
//! A symbol is given over parameter arcs `[b_i, b_{i+1})` by closed-form pieces,
//! so one-sided limits at breakpoints are evaluated exactly. Pieces are Laurent
//! polynomials in `z = e^{2 pi i s}` or expression trees built from them by the
//! symbol algebra (products, inverses, conjugation, matrix solves).

use crate::numeric::{composite_gauss, unit};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Tolerance for deciding that two one-sided limits differ.
pub const JUMP_TOL: f64 = 1e-12;
/// Default lower bound on `|det|` for nonsingularity.
pub const TOL_DET: f64 = 1e-10;
/// Default lower bound on `|det|` for essential invertibility.
pub const TOL_ESSENTIAL: f64 = 1e-8;
/// Default cap on the degree of products of trigonometric pieces.
pub const DEFAULT_MAX_DEGREE: usize = 256;

const GRID_PER_ARC: usize = 64;
const GRID_GLOBAL: usize = 256;

/// Laurent polynomial `sum_j coeffs[j] z^(lo + j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Laurent {
    lo: i64,
    coeffs: Vec<C64>,
}

impl Laurent {
    pub fn zero() -> Self {
        Self { lo: 0, coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: C64, k: i64) -> Self {
        Self { lo: k, coeffs: vec![c] }.trimmed()
    }

    /// From `(power, coefficient)` pairs; repeated powers are summed.
    pub fn from_terms(terms: &[(i64, C64)]) -> Self {
        if terms.is_empty() {
            return Self::zero();
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (k, c) in terms {
            coeffs[(k - lo) as usize] += c;
        }
        Self { lo, coeffs }.trimmed()
    }

    pub fn from_dense(lo: i64, coeffs: Vec<C64>) -> Self {
        Self { lo, coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| **c == C64::new(0.0, 0.0)).count();
        if lead == self.coeffs.len() {
            return Self::zero();
        }
        self.coeffs.drain(..lead);
        self.lo += lead as i64;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest and highest powers present.
    pub fn span(&self) -> Option<(i64, i64)> {
        (!self.is_zero()).then(|| (self.lo, self.lo + self.coeffs.len() as i64 - 1))
    }

    /// `max(|lowest power|, |highest power|)`.
    pub fn degree(&self) -> usize {
        self.span().map_or(0, |(a, b)| a.unsigned_abs().max(b.unsigned_abs()) as usize)
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let j = k - self.lo;
        if j < 0 || j as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[j as usize]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != C64::new(0.0, 0.0))
            .map(move |(j, c)| (self.lo + j as i64, *c))
    }

    pub fn as_constant(&self) -> Option<C64> {
        match self.span() {
            None => Some(C64::new(0.0, 0.0)),
            Some((0, 0)) => Some(self.coeffs[0]),
            _ => None,
        }
    }

    pub fn as_monomial(&self) -> Option<(C64, i64)> {
        (self.coeffs.len() == 1).then(|| (self.coeffs[0], self.lo))
    }

    pub fn eval_z(&self, z: C64) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.lo as i32)
    }

    pub fn eval(&self, s: f64) -> C64 {
        if let Some(c) = self.as_constant() {
            return c;
        }
        self.eval_z(unit(s))
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(other.lo);
        let hi = (self.lo + self.coeffs.len() as i64).max(other.lo + other.coeffs.len() as i64);
        let coeffs = (lo..hi).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Laurent { lo, coeffs }.trimmed()
    }

    pub fn scale(&self, c: C64) -> Laurent {
        Laurent { lo: self.lo, coeffs: self.coeffs.iter().map(|x| x * c).collect() }.trimmed()
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        if self.is_zero() || other.is_zero() {
            return Laurent::zero();
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Laurent { lo: self.lo + other.lo, coeffs }.trimmed()
    }

    /// Complex conjugate as a function on the unit circle: `z^k -> z^-k`.
    pub fn conj_on_circle(&self) -> Laurent {
        let terms: Vec<(i64, C64)> = self.terms().map(|(k, c)| (-k, c.conj())).collect();
        Laurent::from_terms(&terms)
    }

    /// Drops powers with `|k| > max_degree`; returns the dropped l1 mass.
    pub fn truncate(&self, max_degree: usize) -> (Laurent, f64) {
        let m = max_degree as i64;
        let mut dropped = 0.0;
        let mut kept = Vec::new();
        for (k, c) in self.terms() {
            if k.abs() > m {
                dropped += c.norm();
            } else {
                kept.push((k, c));
            }
        }
        (Laurent::from_terms(&kept), dropped)
    }

    /// Sup over the circle bounded by the l1 norm of the coefficients.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

/// Closed-form piece of a symbol.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Poly(Laurent),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Inv(Arc<Expr>),
    Conj(Arc<Expr>),
    /// Entry `(i, j)` of `m^{-1}` where `m` is `n x n`, row-major.
    InverseEntry { m: Arc<Vec<Expr>>, n: usize, i: usize, j: usize },
    Det { m: Arc<Vec<Expr>>, n: usize },
}

impl Expr {
    pub fn constant(c: C64) -> Self {
        Expr::Poly(Laurent::constant(c))
    }

    pub fn real(x: f64) -> Self {
        Self::constant(C64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        Expr::Poly(Laurent::zero())
    }

    pub fn as_poly(&self) -> Option<&Laurent> {
        match self {
            Expr::Poly(p) => Some(p),
            _ => None,
        }
    }

    /// True only for the structural zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Poly(p) if p.is_zero())
    }

    pub fn eval(&self, s: f64) -> C64 {
        match self {
            Expr::Poly(p) => p.eval(s),
            Expr::Sum(xs) => xs.iter().map(|x| x.eval(s)).sum(),
            Expr::Prod(xs) => xs.iter().map(|x| x.eval(s)).product(),
            Expr::Inv(x) => 1.0 / x.eval(s),
            Expr::Conj(x) => x.eval(s).conj(),
            Expr::InverseEntry { m, n, i, j } => {
                let mat = eval_square(m, *n, s);
                let mut rhs = nalgebra::DVector::<C64>::zeros(*n);
                rhs[*j] = C64::new(1.0, 0.0);
                match mat.lu().solve(&rhs) {
                    Some(x) => x[*i],
                    None => C64::new(f64::NAN, f64::NAN),
                }
            }
            Expr::Det { m, n } => eval_square(m, *n, s).determinant(),
        }
    }

    /// Sum with structural simplification.
    pub fn add(&self, other: &Expr) -> Expr {
        match (self, other) {
            (Expr::Poly(a), Expr::Poly(b)) => Expr::Poly(a.add(b)),
            (a, b) if a.is_zero() => b.clone(),
            (a, b) if b.is_zero() => a.clone(),
            (Expr::Sum(xs), b) => {
                let mut v = xs.clone();
                v.push(b.clone());
                Expr::Sum(v)
            }
            (a, b) => Expr::Sum(vec![a.clone(), b.clone()]),
        }
    }

    pub fn neg(&self) -> Expr {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> Expr {
        match self {
            Expr::Poly(p) => Expr::Poly(p.scale(c)),
            other => {
                if c == C64::new(1.0, 0.0) {
                    other.clone()
                } else if c == C64::new(0.0, 0.0) {
                    Expr::zero()
                } else {
                    Expr::Prod(vec![Expr::constant(c), other.clone()])
                }
            }
        }
    }

    /// Product; Laurent factors are multiplied out and truncated to `max_degree`.
    pub fn mul(&self, other: &Expr, max_degree: usize) -> (Expr, f64) {
        match (self, other) {
            (Expr::Poly(a), Expr::Poly(b)) => {
                let (p, lost) = a.mul(b).truncate(max_degree);
                (Expr::Poly(p), lost)
            }
            (a, b) if a.is_zero() || b.is_zero() => (Expr::zero(), 0.0),
            (Expr::Poly(a), b) if a.as_constant().is_some() => (b.scale(a.as_constant().unwrap()), 0.0),
            (a, Expr::Poly(b)) if b.as_constant().is_some() => (a.scale(b.as_constant().unwrap()), 0.0),
            (a, b) => (Expr::Prod(vec![a.clone(), b.clone()]), 0.0),
        }
    }

    pub fn inv(&self) -> Expr {
        match self {
            Expr::Poly(p) => match p.as_monomial() {
                Some((c, k)) => Expr::Poly(Laurent::monomial(1.0 / c, -k)),
                None => Expr::Inv(Arc::new(self.clone())),
            },
            Expr::Inv(x) => (**x).clone(),
            other => Expr::Inv(Arc::new(other.clone())),
        }
    }

    /// Pointwise complex conjugate on the unit circle.
    pub fn conj(&self) -> Expr {
        match self {
            Expr::Poly(p) => Expr::Poly(p.conj_on_circle()),
            Expr::Conj(x) => (**x).clone(),
            other => Expr::Conj(Arc::new(other.clone())),
        }
    }
}

fn eval_square(m: &[Expr], n: usize, s: f64) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |i, j| m[i * n + j].eval(s))
}

fn wrap01(s: f64) -> f64 {
    let r = s.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Piecewise-continuous scalar symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PCSymbol {
    breaks: Vec<f64>,
    pieces: Vec<Expr>,
    left_continuous: bool,
}

impl PCSymbol {
    /// Continuous symbol given by one global expression.
    pub fn global(e: Expr) -> Self {
        Self { breaks: Vec::new(), pieces: vec![e], left_continuous: false }
    }

    pub fn constant(c: C64) -> Self {
        Self::global(Expr::constant(c))
    }

    pub fn real(x: f64) -> Self {
        Self::constant(C64::new(x, 0.0))
    }

    pub fn laurent(p: Laurent) -> Self {
        Self::global(Expr::Poly(p))
    }

    /// `z^k` on the unit circle.
    pub fn power(k: i64) -> Self {
        Self::laurent(Laurent::monomial(C64::new(1.0, 0.0), k))
    }

    /// Piece `i` lives on `[breaks[i], breaks[i+1])`, the last one wrapping around.
    pub fn piecewise(breaks: Vec<f64>, pieces: Vec<Expr>) -> Result<Self> {
        if breaks.len() != pieces.len() {
            return Err(Error::SizeMismatch { expected: breaks.len(), found: pieces.len() });
        }
        if breaks.is_empty() {
            return Err(Error::Domain("piecewise symbol needs at least one arc".into()));
        }
        if breaks.iter().any(|b| !(0.0..1.0).contains(b)) {
            return Err(Error::Domain("breakpoints must lie in [0,1)".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breaks, pieces, left_continuous: false })
    }

    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        Self::piecewise(breaks, values.into_iter().map(Expr::constant).collect())
    }

    /// `1` on `[0, 1/2)` (upper half circle), `-1` on `[1/2, 1)`.
    pub fn sign() -> Self {
        Self::piecewise_constant(vec![0.0, 0.5], vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Expr] {
        &self.pieces
    }

    pub fn is_left_continuous(&self) -> bool {
        self.left_continuous
    }

    /// Normalizes so that the value at a breakpoint is the limit from before it.
    pub fn left_normalized(&self) -> Self {
        Self { left_continuous: true, ..self.clone() }
    }

    /// The global Laurent polynomial if the symbol is a single trigonometric polynomial.
    pub fn global_laurent(&self) -> Option<&Laurent> {
        if self.breaks.is_empty() {
            self.pieces[0].as_poly()
        } else {
            None
        }
    }

    /// Arc `[a, b)` of piece `i` with `b` possibly exceeding 1 for the wrapping arc.
    pub fn arc(&self, i: usize) -> (f64, f64) {
        if self.breaks.is_empty() {
            return (0.0, 1.0);
        }
        let a = self.breaks[i];
        let b = if i + 1 < self.breaks.len() { self.breaks[i + 1] } else { self.breaks[0] + 1.0 };
        (a, b)
    }

    fn locate(&self, s: f64) -> usize {
        if self.breaks.is_empty() {
            return 0;
        }
        let s = wrap01(s);
        let k = self.breaks.partition_point(|b| *b <= s);
        if k == 0 {
            self.breaks.len() - 1
        } else {
            k - 1
        }
    }

    fn break_index(&self, s: f64) -> Option<usize> {
        let s = wrap01(s);
        self.breaks
            .iter()
            .position(|b| (b - s).abs() < 1e-14 || (b - s).abs() > 1.0 - 1e-14)
    }

    pub fn eval(&self, s: f64) -> C64 {
        if self.left_continuous && self.break_index(s).is_some() {
            return self.one_sided_limits(s).0;
        }
        self.pieces[self.locate(s)].eval(s)
    }

    /// `(a(t-0), a(t+0))` at parameter `s`, following the counter-clockwise orientation.
    pub fn one_sided_limits(&self, s: f64) -> (C64, C64) {
        match self.break_index(s) {
            Some(i) => {
                let prev = if i == 0 { self.breaks.len() - 1 } else { i - 1 };
                let b = self.breaks[i];
                (self.pieces[prev].eval(b), self.pieces[i].eval(b))
            }
            None => {
                let v = self.pieces[self.locate(s)].eval(s);
                (v, v)
            }
        }
    }

    pub fn jump_set(&self) -> Vec<f64> {
        self.breaks
            .iter()
            .copied()
            .filter(|&b| {
                let (l, r) = self.one_sided_limits(b);
                (l - r).norm() > JUMP_TOL
            })
            .collect()
    }

    /// Same symbol over a finer breakpoint list (must contain the current breakpoints).
    pub fn refined(&self, breaks: &[f64]) -> Self {
        if breaks.is_empty() {
            return self.clone();
        }
        let pieces = breaks.iter().map(|&b| self.pieces[self.locate(b)].clone()).collect();
        Self { breaks: breaks.to_vec(), pieces, left_continuous: self.left_continuous }
    }

    /// Interior sample parameters of every arc plus tags for the arc index.
    pub fn sample_params(&self) -> Vec<f64> {
        sample_grid(&self.breaks)
    }

    /// Fourier coefficients `c_m`, `m in lo..=hi`, of the symbol on the unit circle.
    pub fn fourier_coefficients(&self, lo: i64, hi: i64) -> Vec<C64> {
        let len = (hi - lo + 1).max(0) as usize;
        if let Some(p) = self.global_laurent() {
            return (lo..=hi).map(|m| p.coeff(m)).collect();
        }
        let mut out = vec![C64::new(0.0, 0.0); len];
        let mmax = lo.unsigned_abs().max(hi.unsigned_abs()) as f64;
        for i in 0..self.pieces.len() {
            let (a, b) = self.arc(i);
            match &self.pieces[i] {
                Expr::Poly(p) => {
                    for (k, pk) in p.terms() {
                        for (idx, m) in (lo..=hi).enumerate() {
                            let d = k - m;
                            out[idx] += pk * if d == 0 {
                                C64::new(b - a, 0.0)
                            } else {
                                (unit(d as f64 * b) - unit(d as f64 * a)) / C64::new(0.0, 2.0 * PI * d as f64)
                            };
                        }
                    }
                }
                e => {
                    let panels = (((b - a) * (mmax + 8.0)) / 2.0).ceil() as usize + 4;
                    for (s, w) in composite_gauss(a, b, panels, 16) {
                        let v = e.eval(s) * w;
                        let step = unit(-s);
                        let mut ph = unit(-(lo as f64) * s);
                        for o in out.iter_mut() {
                            *o += v * ph;
                            ph *= step;
                        }
                    }
                }
            }
        }
        out
    }

    /// Global trigonometric polynomial with the Fourier coefficients `|m| <= degree`.
    pub fn fourier_truncated(&self, degree: usize) -> PCSymbol {
        let d = degree as i64;
        let c = self.fourier_coefficients(-d, d);
        PCSymbol::laurent(Laurent::from_dense(-d, c))
    }

    /// Sup-norm bound estimate over the sampling grid and one-sided limits.
    pub fn sup_estimate(&self) -> f64 {
        let mut m: f64 = self.sample_params().iter().map(|&s| self.eval(s).norm()).fold(0.0, f64::max);
        for &b in &self.breaks {
            let (l, r) = self.one_sided_limits(b);
            m = m.max(l.norm()).max(r.norm());
        }
        m
    }

    fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        Self { breaks: self.breaks.clone(), pieces: self.pieces.iter().map(f).collect(), left_continuous: self.left_continuous }
    }

    pub fn conj(&self) -> Self {
        self.map(Expr::conj)
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|e| e.scale(c))
    }

    pub fn inv(&self) -> Self {
        self.map(Expr::inv)
    }

    pub fn add(&self, other: &PCSymbol) -> PCSymbol {
        let breaks = union_breaks(&[&self.breaks, &other.breaks]);
        let (a, b) = (self.refined(&breaks), other.refined(&breaks));
        let pieces = a.pieces.iter().zip(&b.pieces).map(|(x, y)| x.add(y)).collect();
        PCSymbol { breaks, pieces, left_continuous: self.left_continuous }
    }

    pub fn mul(&self, other: &PCSymbol, max_degree: usize) -> (PCSymbol, f64) {
        let breaks = union_breaks(&[&self.breaks, &other.breaks]);
        let (a, b) = (self.refined(&breaks), other.refined(&breaks));
        let mut lost = 0.0f64;
        let pieces = a
            .pieces
            .iter()
            .zip(&b.pieces)
            .map(|(x, y)| {
                let (p, l) = x.mul(y, max_degree);
                lost = lost.max(l);
                p
            })
            .collect();
        (PCSymbol { breaks, pieces, left_continuous: self.left_continuous }, lost)
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.pieces.iter().all(Expr::is_zero)
    }
}

fn union_breaks(lists: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    all
}

fn sample_grid(breaks: &[f64]) -> Vec<f64> {
    if breaks.is_empty() {
        return (0..GRID_GLOBAL).map(|j| j as f64 / GRID_GLOBAL as f64).collect();
    }
    let mut out = Vec::with_capacity(breaks.len() * GRID_PER_ARC);
    for i in 0..breaks.len() {
        let a = breaks[i];
        let b = if i + 1 < breaks.len() { breaks[i + 1] } else { breaks[0] + 1.0 };
        for j in 0..GRID_PER_ARC {
            out.push(wrap01(a + (b - a) * (j as f64 + 0.5) / GRID_PER_ARC as f64));
        }
    }
    out
}

/// Where a nonsingularity witness was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub param: f64,
    pub side: Side,
    pub abs_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonsingularReport {
    pub passes: bool,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvertibilityReport {
    pub passes: bool,
    pub min_abs_det: f64,
    pub at: f64,
}

/// `N x N` matrix of PC symbols sharing one breakpoint list.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSymbol {
    n: usize,
    entries: Vec<PCSymbol>,
}

impl MatrixSymbol {
    /// Row-major entries; breakpoints are union-refined.
    pub fn new(n: usize, entries: Vec<PCSymbol>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("matrix symbol size must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::SizeMismatch { expected: n * n, found: entries.len() });
        }
        let lists: Vec<&[f64]> = entries.iter().map(|e| e.breakpoints()).collect();
        let breaks = union_breaks(&lists);
        let entries = entries.iter().map(|e| e.refined(&breaks)).collect();
        Ok(Self { n, entries })
    }

    pub fn scalar(a: PCSymbol) -> Self {
        Self { n: 1, entries: vec![a] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal((0..n).map(|_| PCSymbol::real(1.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, entries: (0..n * n).map(|_| PCSymbol::real(0.0)).collect() }
    }

    pub fn diagonal(d: Vec<PCSymbol>) -> Self {
        let n = d.len();
        let mut entries: Vec<PCSymbol> = (0..n * n).map(|_| PCSymbol::real(0.0)).collect();
        for (i, x) in d.into_iter().enumerate() {
            entries[i * n + i] = x;
        }
        Self::new(n, entries).expect("diagonal symbol is well formed")
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &PCSymbol {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[PCSymbol] {
        &self.entries
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.entries[0].breakpoints()
    }

    fn arc_count(&self) -> usize {
        self.entries[0].pieces().len()
    }

    fn piece(&self, arc: usize, i: usize, j: usize) -> &Expr {
        &self.entry(i, j).pieces()[arc]
    }

    fn from_arc_pieces(&self, n: usize, pieces: Vec<Vec<Expr>>) -> MatrixSymbol {
        // pieces[arc][i*n+j]
        let breaks = self.breakpoints().to_vec();
        let left = self.entries[0].is_left_continuous();
        let entries = (0..n * n)
            .map(|k| PCSymbol {
                breaks: breaks.clone(),
                pieces: pieces.iter().map(|arc| arc[k].clone()).collect(),
                left_continuous: left,
            })
            .collect();
        MatrixSymbol { n, entries }
    }

    pub fn eval(&self, s: f64) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j).eval(s))
    }

    pub fn one_sided_limits(&self, s: f64) -> (DMatrix<C64>, DMatrix<C64>) {
        let lim: Vec<(C64, C64)> = self.entries.iter().map(|e| e.one_sided_limits(s)).collect();
        let n = self.n;
        (
            DMatrix::from_fn(n, n, |i, j| lim[i * n + j].0),
            DMatrix::from_fn(n, n, |i, j| lim[i * n + j].1),
        )
    }

    pub fn jump_set(&self) -> Vec<f64> {
        self.breakpoints()
            .iter()
            .copied()
            .filter(|&b| {
                let (l, r) = self.one_sided_limits(b);
                (l - r).iter().any(|d| d.norm() > JUMP_TOL)
            })
            .collect()
    }

    /// `|det|` at all breakpoint sides and on the sampling grid.
    fn det_samples(&self) -> Vec<(f64, Side, f64)> {
        let mut out = Vec::new();
        for &b in self.breakpoints() {
            let (l, r) = self.one_sided_limits(b);
            out.push((b, Side::Left, l.determinant().norm()));
            out.push((b, Side::Right, r.determinant().norm()));
        }
        let grid = sample_grid(self.breakpoints());
        let dets: Vec<f64> = grid.iter().map(|&s| self.eval(s).determinant().norm()).collect();
        for (&s, &d) in grid.iter().zip(&dets) {
            out.push((s, Side::Interior, d));
        }
        // refine around the smallest grid value so zeros between grid points are not missed
        if let Some((k, _)) = dets.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
            let h = if self.breakpoints().is_empty() { 1.0 / GRID_GLOBAL as f64 } else { grid[(k + 1) % grid.len()] - grid[k] };
            let h = if h > 0.0 { h } else { 1.0 / GRID_GLOBAL as f64 };
            let arc = self.entries[0].locate(grid[k]);
            let (a, b) = self.entries[0].arc(arc);
            let lo = (grid[k] - h).max(a + 1e-13);
            let hi = (grid[k] + h).min(b - 1e-13);
            let f = |s: f64| self.eval(s).determinant().norm();
            let s = golden_min(f, lo, hi);
            out.push((wrap01(s), Side::Interior, f(s)));
        }
        out
    }

    pub fn is_nonsingular(&self) -> NonsingularReport {
        self.is_nonsingular_with(TOL_DET)
    }

    pub fn is_nonsingular_with(&self, tol_det: f64) -> NonsingularReport {
        let witnesses: Vec<Witness> = self
            .det_samples()
            .into_iter()
            .filter(|(_, _, d)| !(*d > tol_det))
            .map(|(param, side, abs_det)| Witness { param, side, abs_det })
            .collect();
        NonsingularReport { passes: witnesses.is_empty(), witnesses }
    }

    pub fn essential_invertibility(&self, tol: f64) -> InvertibilityReport {
        let (min, at) = self
            .det_samples()
            .into_iter()
            .map(|(s, _, d)| (if d.is_nan() { 0.0 } else { d }, s))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
        InvertibilityReport { passes: min > tol, min_abs_det: min, at }
    }

    pub fn transpose(&self) -> MatrixSymbol {
        let n = self.n;
        let entries = (0..n * n).map(|k| self.entries[(k % n) * n + k / n].clone()).collect();
        MatrixSymbol { n, entries }
    }

    /// Pointwise conjugate transpose.
    pub fn adjoint(&self) -> MatrixSymbol {
        let t = self.transpose();
        MatrixSymbol { n: t.n, entries: t.entries.iter().map(PCSymbol::conj).collect() }
    }

    pub fn scale(&self, c: C64) -> MatrixSymbol {
        MatrixSymbol { n: self.n, entries: self.entries.iter().map(|e| e.scale(c)).collect() }
    }

    pub fn add(&self, other: &MatrixSymbol) -> Result<MatrixSymbol> {
        self.check_size(other)?;
        MatrixSymbol::new(self.n, self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect())
    }

    fn check_size(&self, other: &MatrixSymbol) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    fn aligned(&self, other: &MatrixSymbol) -> (MatrixSymbol, MatrixSymbol) {
        let breaks = union_breaks(&[self.breakpoints(), other.breakpoints()]);
        let r = |m: &MatrixSymbol| MatrixSymbol { n: m.n, entries: m.entries.iter().map(|e| e.refined(&breaks)).collect() };
        (r(self), r(other))
    }

    /// Matrix product; returns the largest l1 mass dropped by degree truncation.
    pub fn multiply(&self, other: &MatrixSymbol, max_degree: usize) -> Result<(MatrixSymbol, f64)> {
        self.check_size(other)?;
        let (a, b) = self.aligned(other);
        let n = self.n;
        let mut lost = 0.0f64;
        let pieces = (0..a.arc_count())
            .map(|arc| {
                (0..n * n)
                    .map(|k| {
                        let (i, j) = (k / n, k % n);
                        let mut acc = Expr::zero();
                        for l in 0..n {
                            let (p, lo) = a.piece(arc, i, l).mul(b.piece(arc, l, j), max_degree);
                            lost = lost.max(lo);
                            acc = acc.add(&p);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok((a.from_arc_pieces(n, pieces), lost))
    }

    /// Pointwise inverse; requires nonsingularity.
    pub fn inverse(&self) -> Result<MatrixSymbol> {
        let rep = self.is_nonsingular();
        if let Some(w) = rep.witnesses.first() {
            return Err(Error::DegenerateSymbol {
                param: w.param,
                detail: format!("singular symbol, |det| = {:e}", w.abs_det),
            });
        }
        let n = self.n;
        let pieces = (0..self.arc_count())
            .map(|arc| {
                let diagonal = (0..n * n).all(|k| k / n == k % n || self.piece(arc, k / n, k % n).is_zero());
                if diagonal {
                    (0..n * n)
                        .map(|k| if k / n == k % n { self.piece(arc, k / n, k / n).inv() } else { Expr::zero() })
                        .collect()
                } else {
                    let m = Arc::new((0..n * n).map(|k| self.piece(arc, k / n, k % n).clone()).collect::<Vec<_>>());
                    (0..n * n).map(|k| Expr::InverseEntry { m: m.clone(), n, i: k / n, j: k % n }).collect()
                }
            })
            .collect();
        Ok(self.from_arc_pieces(n, pieces))
    }

    pub fn determinant(&self) -> PCSymbol {
        let n = self.n;
        let pieces: Vec<Expr> = (0..self.arc_count())
            .map(|arc| {
                let m: Vec<Expr> = (0..n * n).map(|k| self.piece(arc, k / n, k % n).clone()).collect();
                symbolic_det(&m, n)
            })
            .collect();
        PCSymbol { breaks: self.breakpoints().to_vec(), pieces, left_continuous: self.entries[0].is_left_continuous() }
    }

    /// Entrywise truncation to a global trigonometric polynomial of the given degree.
    pub fn fourier_truncated(&self, degree: usize) -> MatrixSymbol {
        MatrixSymbol { n: self.n, entries: self.entries.iter().map(|e| e.fourier_truncated(degree)).collect() }
    }

    /// True when every entry is a single global Laurent polynomial.
    pub fn is_trig_polynomial(&self) -> bool {
        self.entries.iter().all(|e| e.global_laurent().is_some())
    }

    /// Max Laurent degree over entries, if all are global trigonometric polynomials.
    pub fn trig_degree(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.global_laurent().map(Laurent::degree)).try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }

    pub fn left_normalized(&self) -> MatrixSymbol {
        MatrixSymbol { n: self.n, entries: self.entries.iter().map(PCSymbol::left_normalized).collect() }
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd { c } else { d }
}

fn symbolic_det(m: &[Expr], n: usize) -> Expr {
    let all_poly = m.iter().all(|e| e.as_poly().is_some());
    match n {
        1 => m[0].clone(),
        2 if all_poly => {
            let p = |k: usize| m[k].as_poly().unwrap();
            Expr::Poly(p(0).mul(p(3)).add(&p(1).mul(p(2)).scale(C64::new(-1.0, 0.0))))
        }
        _ => Expr::Det { m: Arc::new(m.to_vec()), n },
    }
}
