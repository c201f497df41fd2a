use super::modes::ModeVec;
use crate::symbols::MatrixSymbol;
use crate::{Error, Result, C64};
use std::sync::Arc;

/// Operator expression over `P`, `Q`, `I`, `H` and multiplication operators.
///
/// Atoms act componentwise; `Mul` with an `N x N` symbol mixes components;
/// `Block` is an operator matrix whose entries act on single components.
#[derive(Debug, Clone, PartialEq)]
pub enum OpExpr {
    Zero,
    Identity,
    P,
    Q,
    /// The antilinear involution on the unit circle.
    Flip,
    Mul(Arc<MatrixSymbol>),
    Scale(C64, Box<OpExpr>),
    Sum(Vec<OpExpr>),
    /// `Product([A, B, C])` is `A B C` (rightmost applied first).
    Product(Vec<OpExpr>),
    /// Row-major `n x n` operator matrix of scalar-acting entries.
    Block { n: usize, entries: Vec<OpExpr> },
}

impl OpExpr {
    pub fn mul(a: MatrixSymbol) -> OpExpr {
        OpExpr::Mul(Arc::new(a))
    }

    pub fn s() -> OpExpr {
        OpExpr::Sum(vec![OpExpr::P, OpExpr::Scale(C64::new(-1.0, 0.0), Box::new(OpExpr::Q))])
    }

    /// `aP + bQ`.
    pub fn pair(a: &MatrixSymbol, b: &MatrixSymbol) -> OpExpr {
        OpExpr::Sum(vec![
            OpExpr::Product(vec![OpExpr::mul(a.clone()), OpExpr::P]),
            OpExpr::Product(vec![OpExpr::mul(b.clone()), OpExpr::Q]),
        ])
    }

    pub fn then(self, rhs: OpExpr) -> OpExpr {
        OpExpr::Product(vec![self, rhs])
    }

    pub fn plus(self, rhs: OpExpr) -> OpExpr {
        OpExpr::Sum(vec![self, rhs])
    }

    pub fn minus(self, rhs: OpExpr) -> OpExpr {
        OpExpr::Sum(vec![self, OpExpr::Scale(C64::new(-1.0, 0.0), Box::new(rhs))])
    }

    pub fn scaled(self, c: C64) -> OpExpr {
        OpExpr::Scale(c, Box::new(self))
    }

    /// Number of components the expression acts on, if it fixes one.
    pub fn block_size(&self) -> Option<usize> {
        match self {
            OpExpr::Mul(a) => Some(a.size()),
            OpExpr::Block { n, .. } => Some(*n),
            OpExpr::Scale(_, e) => e.block_size(),
            OpExpr::Sum(xs) | OpExpr::Product(xs) => xs.iter().find_map(OpExpr::block_size),
            _ => None,
        }
    }

    pub fn contains_flip(&self) -> bool {
        match self {
            OpExpr::Flip => true,
            OpExpr::Scale(_, e) => e.contains_flip(),
            OpExpr::Sum(xs) | OpExpr::Product(xs) => xs.iter().any(OpExpr::contains_flip),
            OpExpr::Block { entries, .. } => entries.iter().any(OpExpr::contains_flip),
            _ => false,
        }
    }

    /// Symbols referenced by multiplication atoms.
    pub fn symbols(&self) -> Vec<Arc<MatrixSymbol>> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut Vec<Arc<MatrixSymbol>>) {
        match self {
            OpExpr::Mul(a) => out.push(a.clone()),
            OpExpr::Scale(_, e) => e.collect_symbols(out),
            OpExpr::Sum(xs) | OpExpr::Product(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            OpExpr::Block { entries, .. } => entries.iter().for_each(|x| x.collect_symbols(out)),
            _ => {}
        }
    }

    /// Hilbert-space adjoint on `L^2` of the unit circle.
    pub fn adjoint(&self) -> Result<OpExpr> {
        Ok(match self {
            OpExpr::Zero | OpExpr::Identity | OpExpr::P | OpExpr::Q => self.clone(),
            OpExpr::Flip => return Err(Error::UnsupportedEntry("the antilinear involution has no linear adjoint".into())),
            OpExpr::Mul(a) => OpExpr::mul(a.adjoint()),
            OpExpr::Scale(c, e) => OpExpr::Scale(c.conj(), Box::new(e.adjoint()?)),
            OpExpr::Sum(xs) => OpExpr::Sum(xs.iter().map(OpExpr::adjoint).collect::<Result<_>>()?),
            OpExpr::Product(xs) => OpExpr::Product(xs.iter().rev().map(OpExpr::adjoint).collect::<Result<_>>()?),
            OpExpr::Block { n, entries } => OpExpr::Block {
                n: *n,
                entries: (0..n * n).map(|k| entries[(k % n) * n + k / n].adjoint()).collect::<Result<_>>()?,
            },
        })
    }

    /// Largest trigonometric degree a single application can add to a vector's support,
    /// or `None` when some symbol is not a global trigonometric polynomial.
    pub fn degree_growth(&self) -> Option<usize> {
        match self {
            OpExpr::Zero | OpExpr::Identity | OpExpr::P | OpExpr::Q => Some(0),
            OpExpr::Flip => Some(1),
            OpExpr::Mul(a) => a.trig_degree(),
            OpExpr::Scale(_, e) => e.degree_growth(),
            OpExpr::Sum(xs) => xs.iter().map(OpExpr::degree_growth).try_fold(0, |acc, d| d.map(|d| acc.max(d))),
            OpExpr::Product(xs) => xs.iter().map(OpExpr::degree_growth).try_fold(0, |acc, d| d.map(|d| acc + d)),
            OpExpr::Block { entries, .. } => {
                entries.iter().map(OpExpr::degree_growth).try_fold(0, |acc, d| d.map(|d| acc.max(d)))
            }
        }
    }
}

/// Coefficient series `c_m`, `m = lo..lo+len`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Series {
    pub lo: i64,
    pub c: Vec<C64>,
}

/// Expression with Fourier coefficients resolved for a given degree cap.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Zero,
    Identity,
    P,
    Q,
    Flip,
    Mul { n: usize, series: Vec<Series> },
    Scale(C64, Box<Compiled>),
    Sum(Vec<Compiled>),
    Product(Vec<Compiled>),
    Block { n: usize, entries: Vec<Compiled> },
}

pub(crate) fn compile(e: &OpExpr, degree_cap: usize) -> Compiled {
    match e {
        OpExpr::Zero => Compiled::Zero,
        OpExpr::Identity => Compiled::Identity,
        OpExpr::P => Compiled::P,
        OpExpr::Q => Compiled::Q,
        OpExpr::Flip => Compiled::Flip,
        OpExpr::Mul(a) => {
            let series = a
                .entries()
                .iter()
                .map(|s| match s.global_laurent() {
                    Some(p) => match p.span() {
                        Some((lo, hi)) => Series { lo, c: (lo..=hi).map(|k| p.coeff(k)).collect() },
                        None => Series { lo: 0, c: Vec::new() },
                    },
                    None => {
                        let d = degree_cap as i64;
                        Series { lo: -d, c: s.fourier_coefficients(-d, d) }
                    }
                })
                .collect();
            Compiled::Mul { n: a.size(), series }
        }
        OpExpr::Scale(c, x) => Compiled::Scale(*c, Box::new(compile(x, degree_cap))),
        OpExpr::Sum(xs) => Compiled::Sum(xs.iter().map(|x| compile(x, degree_cap)).collect()),
        OpExpr::Product(xs) => Compiled::Product(xs.iter().map(|x| compile(x, degree_cap)).collect()),
        OpExpr::Block { n, entries } => {
            Compiled::Block { n: *n, entries: entries.iter().map(|x| compile(x, degree_cap)).collect() }
        }
    }
}

impl Compiled {
    /// Applies the operator; with `clip = Some(n)` every multiplication and flip is
    /// followed by restriction to modes `-n..=n` (product of finite sections).
    pub fn apply(&self, x: &ModeVec, clip: Option<i64>) -> Result<ModeVec> {
        let clipped = |v: ModeVec| match clip {
            Some(n) => v.clip(n),
            None => v,
        };
        Ok(match self {
            Compiled::Zero => ModeVec::zeros(x.comps(), 0, -1),
            Compiled::Identity => x.clone(),
            Compiled::P => x.analytic_part(),
            Compiled::Q => x.coanalytic_part(),
            Compiled::Flip => clipped(x.flip()),
            Compiled::Mul { n, series } => {
                if x.comps() != *n {
                    return Err(Error::SizeMismatch { expected: *n, found: x.comps() });
                }
                let parts = (0..*n)
                    .map(|i| {
                        (0..*n).fold(ModeVec::zeros(1, 0, -1), |acc, j| {
                            let s = &series[i * n + j];
                            acc.add(&x.convolve_component(j, s.lo, &s.c))
                        })
                    })
                    .collect();
                clipped(ModeVec::from_components(parts))
            }
            Compiled::Scale(c, e) => e.apply(x, clip)?.scale(*c),
            Compiled::Sum(xs) => {
                let mut acc = ModeVec::zeros(x.comps(), 0, -1);
                for e in xs {
                    acc = acc.add(&e.apply(x, clip)?);
                }
                acc
            }
            Compiled::Product(xs) => {
                let mut v = x.clone();
                for e in xs.iter().rev() {
                    v = e.apply(&v, clip)?;
                }
                v
            }
            Compiled::Block { n, entries } => {
                if x.comps() != *n {
                    return Err(Error::SizeMismatch { expected: *n, found: x.comps() });
                }
                let cols: Vec<ModeVec> = (0..*n).map(|j| x.component_vec(j)).collect();
                let mut parts = Vec::with_capacity(*n);
                for i in 0..*n {
                    let mut acc = ModeVec::zeros(1, 0, -1);
                    for (j, col) in cols.iter().enumerate() {
                        let e = &entries[i * n + j];
                        if matches!(e, Compiled::Zero) {
                            continue;
                        }
                        acc = acc.add(&e.apply(col, clip)?);
                    }
                    parts.push(acc);
                }
                ModeVec::from_components(parts)
            }
        })
    }
}

/// Applies `e` to `x` with finite-section semantics on the window `-n..=n`.
pub fn apply_section(e: &OpExpr, x: &ModeVec, n: usize, degree_cap: usize) -> Result<ModeVec> {
    compile(e, degree_cap).apply(&x.clip(n as i64), Some(n as i64))
}

/// Applies `e` to `x` without truncating intermediate results.
pub fn apply_exact(e: &OpExpr, x: &ModeVec, degree_cap: usize) -> Result<ModeVec> {
    compile(e, degree_cap).apply(x, None)
}
