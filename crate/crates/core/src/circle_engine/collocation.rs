use super::modes::ModeVec;
use super::{FourierTruncation, OpExpr};
use crate::numeric::unit;
use crate::symbols::MatrixSymbol;
use crate::{Error, Result, C64};
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::sync::Arc;

/// Cyclic model of `L^2` on the circle: functions are values on `M` equispaced nodes,
/// multiplication acts pointwise and `P` keeps the DFT modes `0..M/2`.
///
/// `P`, `Q = I - P` and pointwise multiplication form an exact algebra here, so purely
/// algebraic operator identities hold up to rounding even when symbols are not
/// trigonometric polynomials.
pub struct CollocationModel {
    grid: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub residual: f64,
    pub vectors: usize,
    pub grid: usize,
}

type Values = Vec<Vec<C64>>;

impl CollocationModel {
    /// Grid of `next_pow2(4 (2n+1))` nodes for the window `-n..=n`.
    pub fn for_truncation(trunc: &FourierTruncation) -> Self {
        Self::with_grid((4 * (2 * trunc.n() + 1)).next_power_of_two())
    }

    pub fn with_grid(grid: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { grid, forward: planner.plan_fft_forward(grid), inverse: planner.plan_fft_inverse(grid) }
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    fn half(&self) -> i64 {
        (self.grid / 2) as i64
    }

    /// Nodal values of a coefficient vector; modes must satisfy `-M/2 <= m < M/2`.
    pub fn values(&self, x: &ModeVec) -> Result<Values> {
        let (lo, hi) = x.window();
        if !x.is_window_empty() && (lo < -self.half() || hi >= self.half()) {
            return Err(Error::InsufficientTruncation { n: self.grid, required: 2 * lo.abs().max(hi + 1) as usize });
        }
        Ok((0..x.comps())
            .map(|c| {
                let mut buf = vec![C64::new(0.0, 0.0); self.grid];
                for m in lo..=hi {
                    buf[m.rem_euclid(self.grid as i64) as usize] = x.get(c, m);
                }
                self.inverse.process(&mut buf);
                buf
            })
            .collect())
    }

    /// Coefficients of nodal values on the cyclic window `-M/2..M/2`.
    pub fn coefficients(&self, v: &Values) -> ModeVec {
        let spectra: Vec<Vec<C64>> = v.iter().map(|c| self.spectrum(c)).collect();
        let h = self.half();
        ModeVec::from_fn(v.len(), -h, h - 1, |c, m| spectra[c][m.rem_euclid(self.grid as i64) as usize])
    }

    fn spectrum(&self, values: &[C64]) -> Vec<C64> {
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let inv = 1.0 / self.grid as f64;
        buf.iter_mut().for_each(|x| *x *= inv);
        buf
    }

    fn synthesize(&self, mut spectrum: Vec<C64>) -> Vec<C64> {
        self.inverse.process(&mut spectrum);
        spectrum
    }

    fn project(&self, v: &Values, keep_nonnegative: bool) -> Values {
        let h = self.grid / 2;
        v.iter()
            .map(|c| {
                let mut s = self.spectrum(c);
                let range = if keep_nonnegative { h..self.grid } else { 0..h };
                s[range].iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
                self.synthesize(s)
            })
            .collect()
    }

    fn multiply(&self, a: &MatrixSymbol, v: &Values) -> Result<Values> {
        let n = a.size();
        if v.len() != n {
            return Err(Error::SizeMismatch { expected: n, found: v.len() });
        }
        let mut out = vec![vec![C64::new(0.0, 0.0); self.grid]; n];
        for j in 0..self.grid {
            let s = j as f64 / self.grid as f64;
            for r in 0..n {
                out[r][j] = (0..n).map(|k| a.entry(r, k).eval(s) * v[k][j]).sum();
            }
        }
        Ok(out)
    }

    fn flip(&self, v: &Values) -> Values {
        let minus_i = C64::new(0.0, -1.0);
        v.iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(j, x)| minus_i * unit(j as f64 / self.grid as f64).conj() * x.conj())
                    .collect()
            })
            .collect()
    }

    /// Applies `e` to nodal values.
    pub fn apply(&self, e: &OpExpr, v: &Values) -> Result<Values> {
        Ok(match e {
            OpExpr::Zero => vec![vec![C64::new(0.0, 0.0); self.grid]; v.len()],
            OpExpr::Identity => v.clone(),
            OpExpr::P => self.project(v, true),
            OpExpr::Q => self.project(v, false),
            OpExpr::Flip => self.flip(v),
            OpExpr::Mul(a) => self.multiply(a, v)?,
            OpExpr::Scale(c, x) => self.apply(x, v)?.into_iter().map(|r| r.into_iter().map(|y| y * c).collect()).collect(),
            OpExpr::Sum(xs) => {
                let mut acc = self.apply(&OpExpr::Zero, v)?;
                for x in xs {
                    for (a, b) in acc.iter_mut().zip(self.apply(x, v)?) {
                        a.iter_mut().zip(b).for_each(|(p, q)| *p += q);
                    }
                }
                acc
            }
            OpExpr::Product(xs) => {
                let mut cur = v.clone();
                for x in xs.iter().rev() {
                    cur = self.apply(x, &cur)?;
                }
                cur
            }
            OpExpr::Block { n, entries } => {
                if v.len() != *n {
                    return Err(Error::SizeMismatch { expected: *n, found: v.len() });
                }
                let mut out = vec![vec![C64::new(0.0, 0.0); self.grid]; *n];
                for (i, row) in out.iter_mut().enumerate() {
                    for j in 0..*n {
                        let e = &entries[i * n + j];
                        if matches!(e, OpExpr::Zero) {
                            continue;
                        }
                        let part = self.apply(e, &vec![v[j].clone()])?;
                        row.iter_mut().zip(&part[0]).for_each(|(p, q)| *p += q);
                    }
                }
                out
            }
        })
    }
}

/// Largest coefficient discrepancy between `lhs x` and `rhs x` over `vectors`, evaluated
/// in the collocation model sized for `trunc`.
pub fn identity_residual(
    lhs: &OpExpr,
    rhs: &OpExpr,
    trunc: &FourierTruncation,
    vectors: &[ModeVec],
) -> Result<IdentityResidual> {
    for e in [lhs, rhs] {
        if let Some(b) = e.block_size() {
            if b != trunc.block() {
                return Err(Error::SizeMismatch { expected: trunc.block(), found: b });
            }
        }
    }
    let n = trunc.n() as i64;
    let model = CollocationModel::for_truncation(trunc);
    let mut residual = 0.0f64;
    for x in vectors {
        if x.comps() != trunc.block() {
            return Err(Error::SizeMismatch { expected: trunc.block(), found: x.comps() });
        }
        if let Some((lo, hi)) = x.support() {
            if lo < -n || hi > n {
                return Err(Error::InsufficientTruncation { n: trunc.n(), required: lo.unsigned_abs().max(hi.unsigned_abs()) as usize });
            }
        }
        let v = model.values(&x.clip(n))?;
        let l = model.coefficients(&model.apply(lhs, &v)?);
        let r = model.coefficients(&model.apply(rhs, &v)?);
        residual = residual.max(l.max_abs_diff(&r));
    }
    Ok(IdentityResidual { residual, vectors: vectors.len(), grid: model.grid() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_engine::{apply_exact, modes::margin_vectors};
    use crate::symbols::{Laurent, PCSymbol};

    fn trunc(n: usize) -> FourierTruncation {
        FourierTruncation::new(n, 1).unwrap()
    }

    #[test]
    fn round_trip_is_exact_to_rounding() {
        let m = CollocationModel::for_truncation(&trunc(16));
        assert_eq!(m.grid(), 256);
        for x in margin_vectors(2, 16, 3, 1) {
            let back = m.coefficients(&m.values(&x).unwrap());
            assert!(back.max_abs_diff(&x) < 1e-14);
        }
    }

    #[test]
    fn trivial_identity_has_zero_residual() {
        let xs = margin_vectors(1, 8, 4, 2);
        let r = identity_residual(&OpExpr::P, &OpExpr::P, &trunc(16), &xs).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn agrees_with_the_window_model_on_margin_vectors() {
        let a = MatrixSymbol::scalar(PCSymbol::laurent(Laurent::from_terms(&[
            (-2, C64::new(0.5, 0.1)),
            (0, C64::new(2.0, 0.0)),
            (3, C64::new(-0.3, 0.7)),
        ])));
        let e = OpExpr::pair(&a, &MatrixSymbol::identity(1)).then(OpExpr::Flip).then(OpExpr::mul(a.clone()));
        let m = CollocationModel::for_truncation(&trunc(32));
        for x in margin_vectors(1, 10, 4, 5) {
            let exact = apply_exact(&e, &x, 0).unwrap();
            let col = m.coefficients(&m.apply(&e, &m.values(&x).unwrap()).unwrap());
            assert!(exact.max_abs_diff(&col) < 1e-12);
        }
    }

    #[test]
    fn projection_and_involution_are_exact() {
        let m = CollocationModel::with_grid(64);
        let v = m.values(&margin_vectors(1, 20, 1, 3)[0]).unwrap();
        let pp = m.apply(&OpExpr::P.then(OpExpr::P), &v).unwrap();
        let p = m.apply(&OpExpr::P, &v).unwrap();
        assert!(m.coefficients(&pp).max_abs_diff(&m.coefficients(&p)) < 1e-14);
        let hh = m.apply(&OpExpr::Flip.then(OpExpr::Flip), &v).unwrap();
        assert!(m.coefficients(&hh).max_abs_diff(&m.coefficients(&v)) < 1e-14);
    }

    #[test]
    fn vectors_outside_the_window_are_rejected() {
        let xs = margin_vectors(1, 20, 1, 4);
        assert!(identity_residual(&OpExpr::P, &OpExpr::P, &trunc(16), &xs).is_err());
    }
}
