//! Finite-section engine on the unit circle in Fourier coordinates.
//!
//! Vectors are Fourier coefficient windows; `P` keeps modes `>= 0`, `Q` the rest.
//! Finite sections come in two shapes: square sections `P_n A P_n` on the window
//! `-n..=n`, and exact-image sections mapping the window onto the full support of
//! its image. Defect numbers are read from the latter.

mod cauchy;
mod collocation;
mod expr;
mod modes;
mod spectral;

pub use cauchy::{adjoint_residual, cauchy_pv, h_involution_apply};
pub use collocation::{identity_residual, CollocationModel, IdentityResidual};
pub use expr::{apply_exact, apply_section, OpExpr};
pub use modes::{margin_vectors, ModeVec};
pub use spectral::{
    compactness_profile, numeric_classify, spectral_report, spectral_report_pair, winding_number,
    CompactnessReport, Evidence, SpectralReport, SweepEntry,
};

use crate::symbols::MatrixSymbol;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest admissible half-bandwidth.
pub const MIN_TRUNCATION: usize = 8;

/// Mode window `-n..=n` for `block` components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FourierTruncation {
    n: usize,
    block: usize,
}

impl FourierTruncation {
    pub fn new(n: usize, block: usize) -> Result<Self> {
        if n < MIN_TRUNCATION {
            return Err(Error::InsufficientTruncation { n, required: MIN_TRUNCATION });
        }
        if block == 0 {
            return Err(Error::Domain("block size must be at least 1".into()));
        }
        Ok(Self { n, block })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn dim(&self) -> usize {
        (2 * self.n + 1) * self.block
    }
}

/// Numerical thresholds of the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub sweep: Vec<usize>,
    pub rank_tol: f64,
    pub gap_tol: f64,
    /// Non-polynomial symbols are replaced by Fourier truncations of degree `factor * n`.
    pub degree_factor: usize,
    /// Attach a spectral report to exact (symbolic) matrix verdicts when the space is `L^2`.
    pub attach_certificate: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { sweep: vec![64, 128, 256], rank_tol: 1e-8, gap_tol: 1e-3, degree_factor: 4, attach_certificate: true }
    }
}

/// Dense finite section with its mode windows.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub data: DMatrix<C64>,
    pub block: usize,
    /// Inclusive mode window of the rows.
    pub rows: (i64, i64),
    /// Inclusive mode window of the columns.
    pub cols: (i64, i64),
    pub provenance: String,
}

impl OperatorMatrix {
    fn index(window: (i64, i64), comp: usize, m: i64) -> usize {
        comp * (window.1 - window.0 + 1) as usize + (m - window.0) as usize
    }

    pub fn entry(&self, row_comp: usize, row_mode: i64, col_comp: usize, col_mode: i64) -> C64 {
        self.data[(Self::index(self.rows, row_comp, row_mode), Self::index(self.cols, col_comp, col_mode))]
    }

    /// Matrix product; windows must match.
    pub fn compose(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.cols != rhs.rows || self.block != rhs.block {
            return Err(Error::SizeMismatch { expected: self.data.ncols(), found: rhs.data.nrows() });
        }
        Ok(OperatorMatrix {
            data: &self.data * &rhs.data,
            block: self.block,
            rows: self.rows,
            cols: rhs.cols,
            provenance: format!("({})({})", self.provenance, rhs.provenance),
        })
    }

    /// Singular values in descending order (QR first for tall matrices).
    pub fn singular_values(&self) -> Vec<f64> {
        let (r, c) = self.data.shape();
        let sv = if r > c + c / 4 {
            self.data.clone().qr().r().singular_values()
        } else {
            self.data.clone().singular_values()
        };
        let mut v: Vec<f64> = sv.iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn apply(&self, x: &ModeVec) -> ModeVec {
        let v = nalgebra::DVector::from_fn(self.data.ncols(), |k, _| {
            let w = (self.cols.1 - self.cols.0 + 1) as usize;
            x.get(k / w, self.cols.0 + (k % w) as i64)
        });
        let y = &self.data * v;
        let w = (self.rows.1 - self.rows.0 + 1) as usize;
        ModeVec::from_fn(self.block, self.rows.0, self.rows.1, |c, m| y[c * w + (m - self.rows.0) as usize])
    }
}

fn degree_cap(trunc: &FourierTruncation, cfg_factor: usize) -> usize {
    cfg_factor * trunc.n()
}

fn check_block(e: &OpExpr, trunc: &FourierTruncation) -> Result<()> {
    match e.block_size() {
        Some(b) if b != trunc.block() => Err(Error::SizeMismatch { expected: trunc.block(), found: b }),
        _ => Ok(()),
    }
}

fn columns(e: &OpExpr, trunc: &FourierTruncation, degree_factor: usize, clip: bool) -> Result<Vec<ModeVec>> {
    check_block(e, trunc)?;
    let compiled = expr::compile(e, degree_cap(trunc, degree_factor));
    let n = trunc.n() as i64;
    let block = trunc.block();
    (0..trunc.dim())
        .into_par_iter()
        .map(|k| {
            let (comp, m) = (k / (2 * trunc.n() + 1), -n + (k % (2 * trunc.n() + 1)) as i64);
            compiled.apply(&ModeVec::basis(block, comp, m), clip.then_some(n))
        })
        .collect()
}

fn assemble_matrix(cols: &[ModeVec], rows: (i64, i64), trunc: &FourierTruncation, provenance: String) -> OperatorMatrix {
    let n = trunc.n() as i64;
    let w = (rows.1 - rows.0 + 1) as usize;
    let data = DMatrix::from_fn(w * trunc.block(), cols.len(), |r, k| cols[k].get(r / w, rows.0 + (r % w) as i64));
    OperatorMatrix { data, block: trunc.block(), rows, cols: (-n, n), provenance }
}

/// Square finite section `P_n A P_n`, intermediate products truncated.
pub fn square_section(e: &OpExpr, trunc: &FourierTruncation, degree_factor: usize) -> Result<OperatorMatrix> {
    let cols = columns(e, trunc, degree_factor, true)?;
    let n = trunc.n() as i64;
    Ok(assemble_matrix(&cols, (-n, n), trunc, format!("square section n={}", trunc.n())))
}

/// Exact image of the window `-n..=n` under `A`, rows spanning the full image support.
pub fn image_section(e: &OpExpr, trunc: &FourierTruncation, degree_factor: usize) -> Result<OperatorMatrix> {
    let cols = columns(e, trunc, degree_factor, false)?;
    let n = trunc.n() as i64;
    let (lo, hi) = cols
        .iter()
        .filter_map(ModeVec::support)
        .fold((-n, n), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
    Ok(assemble_matrix(&cols, (lo, hi), trunc, format!("image section n={}", trunc.n())))
}

/// `(P_n, Q_n, S_n)` as diagonal matrices.
pub fn riesz_matrices(trunc: &FourierTruncation) -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    let n = trunc.n() as i64;
    let w = 2 * trunc.n() + 1;
    let diag = |f: &dyn Fn(i64) -> f64, name: &str| {
        let d = nalgebra::DVector::from_fn(trunc.dim(), |k, _| C64::new(f(-n + (k % w) as i64), 0.0));
        OperatorMatrix {
            data: DMatrix::from_diagonal(&d),
            block: trunc.block(),
            rows: (-n, n),
            cols: (-n, n),
            provenance: format!("{name} n={}", trunc.n()),
        }
    };
    (
        diag(&|m| if m >= 0 { 1.0 } else { 0.0 }, "P"),
        diag(&|m| if m >= 0 { 0.0 } else { 1.0 }, "Q"),
        diag(&|m| if m >= 0 { 1.0 } else { -1.0 }, "S"),
    )
}

/// Square section of the multiplication operator `aI`.
pub fn multiplication_matrix(a: &MatrixSymbol, trunc: &FourierTruncation) -> Result<OperatorMatrix> {
    let mut m = square_section(&OpExpr::mul(a.clone()), trunc, EngineConfig::default().degree_factor)?;
    m.provenance = format!("multiplication n={}", trunc.n());
    Ok(m)
}

/// `M_n(a) P_n + M_n(b) Q_n`.
pub fn assemble(a: &MatrixSymbol, b: &MatrixSymbol, trunc: &FourierTruncation) -> Result<OperatorMatrix> {
    if a.size() != b.size() {
        return Err(Error::SizeMismatch { expected: a.size(), found: b.size() });
    }
    let mut m = square_section(&OpExpr::pair(a, b), trunc, EngineConfig::default().degree_factor)?;
    m.provenance = format!("aP+bQ n={}", trunc.n());
    Ok(m)
}
