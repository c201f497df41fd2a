use super::expr::OpExpr;
use super::{image_section, EngineConfig, FourierTruncation};
use crate::numeric::principal_arg;
use crate::symbols::{MatrixSymbol, PCSymbol};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Decay factor per doubling regarded as steep.
const STEEP_FACTOR: f64 = 10.0;
/// Ratio of consecutive log-decay factors above which decay counts as accelerating.
const ACCELERATION: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Fredholm,
    NotFredholm,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub kernel: usize,
    pub cokernel: usize,
    pub sigma_max: f64,
    /// `sigma_min / sigma_max` of the exact-image section.
    pub sigma_min_ratio: f64,
    /// Smallest singular value above the rank threshold over `sigma_max`, for `A` and `A*`.
    pub sigma_gap: f64,
    pub singular_values: Vec<f64>,
    pub adjoint_singular_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub entries: Vec<SweepEntry>,
    pub rank_tol: f64,
    pub gap_tol: f64,
    pub stabilized: bool,
    pub kernel_estimate: usize,
    pub cokernel_estimate: usize,
    pub index_estimate: i64,
    /// `gap(n_i) / gap(n_{i+1})` for consecutive sweep sizes.
    pub decay_factors: Vec<f64>,
    pub evidence: Evidence,
    pub winding_estimate: Option<i64>,
    pub notes: Vec<String>,
}

fn count_below(sv: &[f64], rank_tol: f64) -> (usize, f64, f64) {
    let smax = sv.first().copied().unwrap_or(0.0);
    let thr = rank_tol * smax;
    let kernel = sv.iter().filter(|&&s| s <= thr).count();
    let retained = sv.iter().copied().filter(|&s| s > thr).fold(f64::INFINITY, f64::min);
    let gap = if smax > 0.0 && retained.is_finite() { retained / smax } else { 0.0 };
    (kernel, smax, gap)
}

fn entry(e: &OpExpr, adj: &OpExpr, n: usize, block: usize, cfg: &EngineConfig) -> Result<SweepEntry> {
    let trunc = FourierTruncation::new(n, block)?;
    let (a, b) = rayon::join(
        || image_section(e, &trunc, cfg.degree_factor),
        || image_section(adj, &trunc, cfg.degree_factor),
    );
    let (a, b) = (a?, b?);
    let (sa, sb) = rayon::join(|| a.singular_values(), || b.singular_values());
    let (rows, cols) = a.data.shape();
    let (ka, smax, ga) = count_below(&sa, cfg.rank_tol);
    let (kb, _, gb) = count_below(&sb, cfg.rank_tol);
    let smin = sa.last().copied().unwrap_or(0.0);
    Ok(SweepEntry {
        n,
        rows,
        cols,
        kernel: ka + cols.saturating_sub(rows),
        cokernel: kb + b.data.ncols().saturating_sub(b.data.nrows()),
        sigma_max: smax,
        sigma_min_ratio: if smax > 0.0 { smin / smax } else { 0.0 },
        sigma_gap: ga.min(gb),
        singular_values: sa,
        adjoint_singular_values: sb,
    })
}

/// Defect-number estimates for `e` across the configured truncation sweep.
pub fn spectral_report(e: &OpExpr, block: usize, cfg: &EngineConfig) -> Result<SpectralReport> {
    let mut sweep = cfg.sweep.clone();
    sweep.sort_unstable();
    sweep.dedup();
    if sweep.len() < 3 {
        return Err(Error::Domain(format!("a truncation sweep needs at least 3 sizes, got {}", sweep.len())));
    }
    let adj = e.adjoint()?;
    let entries = sweep
        .par_iter()
        .map(|&n| entry(e, &adj, n, block, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(entries, cfg))
}

fn summarize(entries: Vec<SweepEntry>, cfg: &EngineConfig) -> SpectralReport {
    let k = entries.len();
    let last = &entries[k - 1];
    let prev = &entries[k - 2];
    let stabilized = last.kernel == prev.kernel && last.cokernel == prev.cokernel;
    let decay_factors: Vec<f64> = entries
        .windows(2)
        .map(|w| if w[1].sigma_gap > 0.0 { w[0].sigma_gap / w[1].sigma_gap } else { f64::INFINITY })
        .collect();
    let mut notes = Vec::new();
    let steep = decay_factors.iter().any(|&f| f >= STEEP_FACTOR);
    let evidence = if !stabilized {
        notes.push("defect counts differ between the two largest truncations".into());
        Evidence::Inconclusive
    } else if steep {
        let all_steep = decay_factors.iter().all(|&f| f >= STEEP_FACTOR);
        let accelerating = decay_factors.windows(2).any(|w| w[1].ln() > ACCELERATION * w[0].ln());
        if all_steep && !accelerating {
            notes.push("smallest retained singular value decays algebraically across the sweep".into());
            Evidence::NotFredholm
        } else {
            notes.push("accelerating singular value decay: a kernel element is not yet resolved".into());
            Evidence::Inconclusive
        }
    } else if entries.iter().all(|e| e.sigma_gap >= cfg.gap_tol) {
        Evidence::Fredholm
    } else {
        notes.push(format!("singular value gap below {} without steady decay", cfg.gap_tol));
        Evidence::Inconclusive
    };
    SpectralReport {
        rank_tol: cfg.rank_tol,
        gap_tol: cfg.gap_tol,
        stabilized,
        kernel_estimate: last.kernel,
        cokernel_estimate: last.cokernel,
        index_estimate: last.kernel as i64 - last.cokernel as i64,
        decay_factors,
        evidence,
        winding_estimate: None,
        notes,
        entries,
    }
}

/// Report for `aP + bQ`, with a winding estimate of `b^{-1} a` for continuous scalar symbols.
pub fn spectral_report_pair(a: &MatrixSymbol, b: &MatrixSymbol, cfg: &EngineConfig) -> Result<SpectralReport> {
    if a.size() != b.size() {
        return Err(Error::SizeMismatch { expected: a.size(), found: b.size() });
    }
    let mut report = spectral_report(&OpExpr::pair(a, b), a.size(), cfg)?;
    if a.size() == 1 {
        if let (Ok(wa), Ok(wb)) = (winding_number(a.entry(0, 0), 4096), winding_number(b.entry(0, 0), 4096)) {
            report.winding_estimate = Some(wa - wb);
        }
    }
    Ok(report)
}

/// Evidence-only view of [`spectral_report`].
pub fn numeric_classify(e: &OpExpr, block: usize, cfg: &EngineConfig) -> Result<(Evidence, SpectralReport)> {
    let r = spectral_report(e, block, cfg)?;
    Ok((r.evidence, r))
}

/// Winding number of a continuous nonvanishing scalar symbol about 0.
pub fn winding_number(c: &PCSymbol, samples: usize) -> Result<i64> {
    if let Some(&s) = c.jump_set().first() {
        return Err(Error::DegenerateSymbol { param: s, detail: "winding number of a discontinuous symbol".into() });
    }
    let vals: Vec<_> = (0..samples).map(|j| c.eval(j as f64 / samples as f64)).collect();
    let top = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if let Some(j) = vals.iter().position(|v| !(v.norm() > 1e-8 * top.max(1e-300))) {
        return Err(Error::DegenerateSymbol { param: j as f64 / samples as f64, detail: "symbol nearly vanishes".into() });
    }
    let mut total = 0.0;
    for j in 0..samples {
        let step = principal_arg(vals[(j + 1) % samples] / vals[j]);
        if step.abs() > PI / 2.0 {
            return Err(Error::NumericFailure(format!("winding resolution too coarse near s = {}", j as f64 / samples as f64)));
        }
        total += step;
    }
    let w = total / (2.0 * PI);
    if (w - w.round()).abs() > 1e-6 {
        return Err(Error::NumericFailure(format!("accumulated argument {w} is not an integer")));
    }
    Ok(w.round() as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessReport {
    pub n: usize,
    /// Leading singular values (descending).
    pub singular_values: Vec<f64>,
    /// `sigma_20 / sigma_1`, zero when fewer than 20 values are nonzero.
    pub ratio_20_1: f64,
}

/// Singular-value decay profile of the exact-image section of `e`.
pub fn compactness_profile(e: &OpExpr, trunc: &FourierTruncation, cfg: &EngineConfig) -> Result<CompactnessReport> {
    let m = image_section(e, trunc, cfg.degree_factor)?;
    let sv = m.singular_values();
    let s1 = sv.first().copied().unwrap_or(0.0);
    let s20 = sv.get(19).copied().unwrap_or(0.0);
    Ok(CompactnessReport {
        n: trunc.n(),
        ratio_20_1: if s1 > 0.0 { s20 / s1 } else { 0.0 },
        singular_values: sv.into_iter().take(40).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Laurent;
    use crate::C64;

    fn small() -> EngineConfig {
        EngineConfig { sweep: vec![16, 32, 64], ..EngineConfig::default() }
    }

    #[test]
    fn winding_fixtures() {
        assert_eq!(winding_number(&PCSymbol::power(1), 512).unwrap(), 1);
        assert_eq!(winding_number(&PCSymbol::real(5.0), 512).unwrap(), 0);
        assert_eq!(winding_number(&PCSymbol::power(-2), 512).unwrap(), -2);
        assert!(winding_number(&PCSymbol::sign(), 512).is_err());
        let vanishing = PCSymbol::laurent(Laurent::from_terms(&[(0, C64::new(1.0, 0.0)), (1, C64::new(-1.0, 0.0))]));
        assert!(matches!(winding_number(&vanishing, 512), Err(Error::DegenerateSymbol { .. })));
    }

    #[test]
    fn toeplitz_index_of_tau() {
        let r = spectral_report_pair(&MatrixSymbol::scalar(PCSymbol::power(1)), &MatrixSymbol::identity(1), &small())
            .unwrap();
        assert_eq!((r.kernel_estimate, r.cokernel_estimate, r.index_estimate), (0, 1, -1));
        assert!(r.stabilized);
        assert_eq!(r.evidence, Evidence::Fredholm);
        assert_eq!(r.winding_estimate, Some(1));
    }

    #[test]
    fn identity_has_no_defects() {
        let i = MatrixSymbol::identity(1);
        let r = spectral_report_pair(&i, &i, &small()).unwrap();
        assert_eq!((r.kernel_estimate, r.cokernel_estimate, r.index_estimate), (0, 0, 0));
        assert_eq!(r.evidence, Evidence::Fredholm);
    }

    #[test]
    fn kernel_counts_are_monotone_in_threshold() {
        let c = MatrixSymbol::scalar(PCSymbol::power(-2));
        let e = OpExpr::pair(&c, &MatrixSymbol::identity(1));
        let mut last = 0;
        for tol in [1e-14, 1e-10, 1e-6, 1e-2, 0.5] {
            let cfg = EngineConfig { rank_tol: tol, ..small() };
            let r = spectral_report(&e, 1, &cfg).unwrap();
            assert!(r.kernel_estimate >= last);
            last = r.kernel_estimate;
        }
    }

    #[test]
    fn unresolved_kernel_is_inconclusive() {
        // tau^-1 - 0.8: kernel element with geometric decay 0.8^m, not window supported
        let c = PCSymbol::laurent(Laurent::from_terms(&[(-1, C64::new(1.0, 0.0)), (0, C64::new(-0.8, 0.0))]));
        let cfg = EngineConfig { sweep: vec![32, 64, 128], ..EngineConfig::default() };
        let r = spectral_report_pair(&MatrixSymbol::scalar(c), &MatrixSymbol::identity(1), &cfg).unwrap();
        assert_eq!(r.evidence, Evidence::Inconclusive, "{:?}", r.decay_factors);
    }

    #[test]
    fn short_sweep_is_rejected() {
        let cfg = EngineConfig { sweep: vec![16, 32], ..EngineConfig::default() };
        assert!(spectral_report(&OpExpr::Identity, 1, &cfg).is_err());
    }
}
