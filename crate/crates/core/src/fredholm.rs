//! Fredholm classification of `aP + bQ` and of algebra elements.

use crate::circle_engine::{spectral_report, spectral_report_pair, EngineConfig, Evidence, SpectralReport};
use crate::dilation::{dilate, AlgebraElement};
use crate::geometry::{s_boundedness, SpaceContext};
use crate::numeric::{dist_to_integers, principal_arg};
use crate::symbols::{MatrixSymbol, PCSymbol, DEFAULT_MAX_DEGREE, TOL_ESSENTIAL};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

/// Criterion values closer than this to an integer are treated as lying on the boundary.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
/// Relative size below which an entry of `b^{-1} a` counts as structurally zero.
const PATTERN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionValue {
    pub param: f64,
    pub point: C64,
    /// Diagonal position when the value comes from a triangular matrix symbol.
    pub component: Option<usize>,
    /// `a(t-0) / a(t+0)`.
    pub zeta: C64,
    pub exponent: f64,
    pub lambda: f64,
    pub delta: f64,
    pub value: f64,
    pub distance_to_integers: f64,
}

impl CriterionValue {
    pub fn is_boundary(&self) -> bool {
        self.distance_to_integers <= BOUNDARY_MARGIN
    }
}

/// `-arg(zeta)/(2 pi) + delta log|zeta| / (2 pi) + 1/p + lambda`, principal branch.
pub fn criterion_value_from_ratio(zeta: C64, delta: f64, exponent: f64, lambda: f64) -> Result<f64> {
    if !(zeta.norm() > 0.0) || !zeta.is_finite() {
        return Err(Error::Domain(format!("jump ratio must be finite and nonzero, got {zeta}")));
    }
    Ok(-principal_arg(zeta) / (2.0 * PI) + delta * zeta.norm().ln() / (2.0 * PI) + 1.0 / exponent + lambda)
}

/// Criterion value of `a` at the curve point `t`.
pub fn criterion_value(a: &PCSymbol, t: C64, ctx: &SpaceContext) -> Result<CriterionValue> {
    criterion_value_at(a, ctx.curve.require_param(t)?, ctx)
}

pub fn criterion_value_at(a: &PCSymbol, param: f64, ctx: &SpaceContext) -> Result<CriterionValue> {
    let (left, right) = a.one_sided_limits(param);
    for (v, side) in [(left, "left"), (right, "right")] {
        if !(v.norm() > TOL_ESSENTIAL) {
            return Err(Error::DegenerateSymbol { param, detail: format!("{side} limit {v} vanishes") });
        }
    }
    let zeta = left / right;
    let exponent = ctx.exponent.eval(param);
    let lambda = ctx.lambda_at_param(param);
    let delta = ctx.whirl_at_param(param);
    let value = criterion_value_from_ratio(zeta, delta, exponent, lambda)?;
    Ok(CriterionValue {
        param,
        point: ctx.curve.point(param),
        component: None,
        zeta,
        exponent,
        lambda,
        delta,
        value,
        distance_to_integers: dist_to_integers(value),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fredholm,
    NotSemiFredholm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reason {
    SymbolDegenerate { param: f64, detail: String },
    CriterionInteger { param: f64, value: f64, distance: f64 },
    NumericCertificate { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Scalar,
    /// `b^{-1} a` is triangular after the listed permutation.
    Triangular { order: Vec<usize> },
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub method: Method,
    pub reasons: Vec<Reason>,
    pub criteria: Vec<CriterionValue>,
    pub evidence: Option<SpectralReport>,
    pub warnings: Vec<String>,
}

impl Classification {
    fn degenerate(method: Method, param: f64, detail: String) -> Self {
        Self {
            verdict: Verdict::NotSemiFredholm,
            method,
            reasons: vec![Reason::SymbolDegenerate { param, detail }],
            criteria: Vec::new(),
            evidence: None,
            warnings: Vec::new(),
        }
    }

    pub fn is_fredholm(&self) -> bool {
        self.verdict == Verdict::Fredholm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    /// Constant in the Dini-Lipschitz condition.
    pub dini_constant: f64,
    pub engine: EngineConfig,
    /// Degree cap for symbolic products of Laurent polynomials.
    pub max_degree: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { dini_constant: 1.0, engine: EngineConfig::default(), max_degree: DEFAULT_MAX_DEGREE }
    }
}

fn require_bounded(ctx: &SpaceContext, opts: &ClassifyOptions) -> Result<()> {
    let b = s_boundedness(ctx, opts.dini_constant)?;
    if !b.bounded {
        let pts: Vec<String> = b.failing.iter().map(|i| format!("t_{i}")).collect();
        return Err(Error::HypothesisViolated(format!(
            "the singular integral operator is unbounded: weight condition fails at {}",
            pts.join(", ")
        )));
    }
    Ok(())
}

/// Jump points of `a` and weight points with nonzero exponent, sorted by parameter.
fn critical_params(a: &PCSymbol, ctx: &SpaceContext) -> Vec<f64> {
    let mut pts = a.jump_set();
    pts.extend(
        ctx.weight_params()
            .iter()
            .zip(ctx.weight.marked())
            .filter(|(_, (_, l))| *l != 0.0)
            .map(|(s, _)| *s),
    );
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    pts
}

fn scalar_core(a: &PCSymbol, ctx: &SpaceContext, component: Option<usize>) -> Classification {
    let rep = MatrixSymbol::scalar(a.clone()).essential_invertibility(TOL_ESSENTIAL);
    if !rep.passes {
        return Classification::degenerate(
            Method::Scalar,
            rep.at,
            format!("symbol is not essentially invertible (min |a| = {:e})", rep.min_abs_det),
        );
    }
    let mut criteria = Vec::new();
    for s in critical_params(a, ctx) {
        match criterion_value_at(a, s, ctx) {
            Ok(mut v) => {
                v.component = component;
                criteria.push(v);
            }
            Err(Error::DegenerateSymbol { param, detail }) => {
                return Classification::degenerate(Method::Scalar, param, detail)
            }
            Err(e) => return Classification::degenerate(Method::Scalar, s, e.to_string()),
        }
    }
    let mut reasons = Vec::new();
    let mut warnings = Vec::new();
    for v in criteria.iter().filter(|v| v.is_boundary()) {
        if v.distance_to_integers > 0.0 {
            warnings.push(format!(
                "criterion value {} at s = {} is within {BOUNDARY_MARGIN:e} of an integer; treated as boundary",
                v.value, v.param
            ));
        }
        reasons.push(Reason::CriterionInteger { param: v.param, value: v.value, distance: v.distance_to_integers });
    }
    Classification {
        verdict: if reasons.is_empty() { Verdict::Fredholm } else { Verdict::NotSemiFredholm },
        method: Method::Scalar,
        reasons,
        criteria,
        evidence: None,
        warnings,
    }
}

/// Classifies `aP + Q` for a scalar symbol.
pub fn classify_scalar(a: &PCSymbol, ctx: &SpaceContext, opts: &ClassifyOptions) -> Result<Classification> {
    require_bounded(ctx, opts)?;
    Ok(scalar_core(a, ctx, None))
}

/// Closed-range test for `aP + Q`, evaluated directly over all breakpoints and weight points.
pub fn closed_range_scalar(a: &PCSymbol, ctx: &SpaceContext) -> Result<bool> {
    const PROBES: usize = 1024;
    for j in 0..PROBES {
        let s = j as f64 / PROBES as f64;
        if !(a.eval(s).norm() > TOL_ESSENTIAL) {
            return Err(Error::DegenerateSymbol { param: s, detail: "symbol vanishes".into() });
        }
    }
    let mut params: Vec<f64> = a.breakpoints().to_vec();
    params.extend_from_slice(ctx.weight_params());
    for s in params {
        let (l, r) = a.one_sided_limits(s);
        if !(l.norm() > TOL_ESSENTIAL && r.norm() > TOL_ESSENTIAL) {
            return Err(Error::DegenerateSymbol { param: s, detail: "one-sided limit vanishes".into() });
        }
        let ratio = l / r;
        let arg = ratio.im.atan2(ratio.re);
        let v = (-arg + ctx.whirl_at_param(s) * ratio.norm().ln()) / (2.0 * PI)
            + 1.0 / ctx.exponent.eval(s)
            + ctx.lambda_at_param(s);
        let dist = (v - v.round()).abs();
        if dist <= BOUNDARY_MARGIN {
            return Ok(false);
        }
    }
    Ok(true)
}

fn attach_certificate(
    mut c: Classification,
    a: &MatrixSymbol,
    b: &MatrixSymbol,
    ctx: &SpaceContext,
    opts: &ClassifyOptions,
) -> Result<Classification> {
    if !(opts.engine.attach_certificate && ctx.is_l2_circle()) {
        return Ok(c);
    }
    let report = spectral_report_pair(a, b, &opts.engine)?;
    let clash = matches!(
        (c.verdict, report.evidence),
        (Verdict::Fredholm, Evidence::NotFredholm) | (Verdict::NotSemiFredholm, Evidence::Fredholm)
    );
    if clash {
        c.warnings.push(format!("finite-section evidence {:?} disagrees with the exact verdict", report.evidence));
    }
    c.evidence = Some(report);
    Ok(c)
}

/// Permutation under which `b^{-1} a` is lower triangular, judged from samples.
fn triangular_order(a: &MatrixSymbol, b: &MatrixSymbol) -> Option<Vec<usize>> {
    let n = a.size();
    let mut samples: Vec<(DMatrix<C64>, DMatrix<C64>)> =
        (0..256).map(|j| j as f64 / 256.0).map(|s| (a.eval(s), b.eval(s))).collect();
    let mut breaks = a.breakpoints().to_vec();
    breaks.extend_from_slice(b.breakpoints());
    for s in breaks {
        let ((al, ar), (bl, br)) = (a.one_sided_limits(s), b.one_sided_limits(s));
        samples.push((al, bl));
        samples.push((ar, br));
    }
    let mut size = DMatrix::<f64>::zeros(n, n);
    for (av, bv) in samples {
        let c = bv.lu().solve(&av)?;
        for (dst, x) in size.iter_mut().zip(c.iter()) {
            *dst = dst.max(x.norm());
        }
    }
    let scale = size.max();
    let edge = |i: usize, j: usize| i != j && size[(i, j)] > PATTERN_TOL * scale;
    // Kahn's algorithm: entry (i, j) != 0 requires j before i
    let mut indegree: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| edge(i, j)).count()).collect();
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    while let Some(j) = ready.pop() {
        order.push(j);
        for i in 0..n {
            if edge(i, j) {
                indegree[i] -= 1;
                if indegree[i] == 0 {
                    ready.push(i);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

fn numeric_verdict(report: SpectralReport) -> Result<Classification> {
    let verdict = match report.evidence {
        Evidence::Fredholm => Verdict::Fredholm,
        Evidence::NotFredholm => Verdict::NotSemiFredholm,
        Evidence::Inconclusive => {
            let tail = report
                .entries
                .last()
                .map(|e| format!("; kernel {}, cokernel {} at n = {}", e.kernel, e.cokernel, e.n))
                .unwrap_or_default();
            return Err(Error::Inconclusive(format!(
                "{}{tail}; decay factors {:?}",
                report.notes.join("; "),
                report.decay_factors
            )));
        }
    };
    let reasons = match verdict {
        Verdict::Fredholm => Vec::new(),
        Verdict::NotSemiFredholm => {
            vec![Reason::NumericCertificate { detail: report.notes.join("; ") }]
        }
    };
    Ok(Classification { verdict, method: Method::Numeric, reasons, criteria: Vec::new(), evidence: Some(report), warnings: Vec::new() })
}

fn require_numeric_space(ctx: &SpaceContext) -> Result<()> {
    if ctx.is_l2_circle() {
        Ok(())
    } else {
        Err(Error::Inconclusive(
            "no exact criterion applies and the finite-section certificate is only available on L^2 of the unit circle".into(),
        ))
    }
}

/// Classifies `aP + bQ`.
pub fn classify_pair(a: &MatrixSymbol, b: &MatrixSymbol, ctx: &SpaceContext, opts: &ClassifyOptions) -> Result<Classification> {
    if a.size() != b.size() {
        return Err(Error::SizeMismatch { expected: a.size(), found: b.size() });
    }
    require_bounded(ctx, opts)?;
    let n = a.size();
    for (m, name) in [(a, "a"), (b, "b")] {
        let rep = m.essential_invertibility(TOL_ESSENTIAL);
        if !rep.passes {
            let method = if n == 1 { Method::Scalar } else { Method::Numeric };
            return Ok(Classification::degenerate(
                method,
                rep.at,
                format!("coefficient {name} is not essentially invertible (min |det| = {:e})", rep.min_abs_det),
            ));
        }
    }
    if n == 1 {
        let (c, lost) = b.entry(0, 0).inv().mul(a.entry(0, 0), opts.max_degree);
        let mut out = scalar_core(&c, ctx, None);
        if lost > 0.0 {
            out.warnings.push(format!("symbol product truncated at degree {} (dropped l1 mass {lost:e})", opts.max_degree));
        }
        return attach_certificate(out, a, b, ctx, opts);
    }
    if let Some(order) = triangular_order(a, b) {
        let (c, lost) = b.inverse()?.multiply(a, opts.max_degree)?;
        let mut out = Classification {
            verdict: Verdict::Fredholm,
            method: Method::Triangular { order: order.clone() },
            reasons: Vec::new(),
            criteria: Vec::new(),
            evidence: None,
            warnings: Vec::new(),
        };
        if lost > 0.0 {
            out.warnings.push(format!("symbol product truncated at degree {} (dropped l1 mass {lost:e})", opts.max_degree));
        }
        for &i in &order {
            let part = scalar_core(c.entry(i, i), ctx, Some(i));
            if part.verdict == Verdict::NotSemiFredholm {
                out.verdict = Verdict::NotSemiFredholm;
            }
            out.reasons.extend(part.reasons);
            out.criteria.extend(part.criteria);
            out.warnings.extend(part.warnings);
        }
        return attach_certificate(out, a, b, ctx, opts);
    }
    require_numeric_space(ctx)?;
    numeric_verdict(spectral_report_pair(a, b, &opts.engine)?)
}

/// Classifies an algebra element through its dilation.
pub fn classify_algebra_element(e: &AlgebraElement, ctx: &SpaceContext, opts: &ClassifyOptions) -> Result<Classification> {
    let d = dilate(e)?;
    let mut c = classify_pair(&d.a, &d.b, ctx, opts)?;
    c.warnings.push(format!("classified through a dilation of size {}", d.d));
    Ok(c)
}

/// Classifies an algebra element directly: symbol-pair invertibility, then the
/// finite-section certificate of the element itself.
pub fn classify_algebra_element_numeric(
    e: &AlgebraElement,
    ctx: &SpaceContext,
    opts: &ClassifyOptions,
) -> Result<Classification> {
    require_bounded(ctx, opts)?;
    let (a, b) = e.symbol_pair(opts.max_degree)?;
    for (m, name) in [(&a, "P"), (&b, "Q")] {
        let rep = m.essential_invertibility(TOL_ESSENTIAL);
        if !rep.passes {
            return Ok(Classification::degenerate(
                Method::Numeric,
                rep.at,
                format!("{name}-part of the symbol is not essentially invertible (min |det| = {:e})", rep.min_abs_det),
            ));
        }
    }
    require_numeric_space(ctx)?;
    numeric_verdict(spectral_report(&e.to_expr(), e.size(), &opts.engine)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::Factor;
    use crate::geometry::{CurveModel, ExponentArc, ExponentPiece, KhvedelidzeWeight, VariableExponent, WhirlPoint};
    use crate::numeric::unit;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn quick() -> ClassifyOptions {
        ClassifyOptions {
            engine: EngineConfig { sweep: vec![16, 32, 64], attach_certificate: false, ..EngineConfig::default() },
            ..ClassifyOptions::default()
        }
    }

    fn ctx_p(p: f64) -> SpaceContext {
        SpaceContext::new(CurveModel::unit_circle(), VariableExponent::constant(p).unwrap(), KhvedelidzeWeight::none())
            .unwrap()
    }

    #[test]
    fn ratio_fixtures() {
        assert!(criterion_value_from_ratio(c(-1.0, 0.0), 0.0, 2.0, 0.0).unwrap().abs() < 1e-15);
        let v = criterion_value_from_ratio(c(0.0, 1.0), 0.0, 2.0, 0.0).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let v = criterion_value_from_ratio(c(PI.exp(), 0.0), 1.0, 2.0, 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(criterion_value_from_ratio(c(0.0, 0.0), 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn sign_symbol_at_p2_is_on_the_boundary() {
        let ctx = SpaceContext::l2_circle();
        let cv = criterion_value(&PCSymbol::sign(), unit(0.5), &ctx).unwrap();
        assert_eq!(cv.zeta, c(-1.0, 0.0));
        assert!(cv.is_boundary());
        let r = classify_scalar(&PCSymbol::sign(), &ctx, &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::NotSemiFredholm);
        assert_eq!(r.criteria.len(), 2);
        assert!(!closed_range_scalar(&PCSymbol::sign(), &ctx).unwrap());
    }

    #[test]
    fn sign_symbol_at_p3_is_fredholm() {
        let ctx = ctx_p(3.0);
        let r = classify_scalar(&PCSymbol::sign(), &ctx, &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::Fredholm);
        assert!((r.criteria[0].value + 1.0 / 6.0).abs() < 1e-12);
        assert!(closed_range_scalar(&PCSymbol::sign(), &ctx).unwrap());
    }

    #[test]
    fn constants_and_degenerate_symbols() {
        let ctx = SpaceContext::l2_circle();
        assert!(classify_scalar(&PCSymbol::real(3.0), &ctx, &quick()).unwrap().is_fredholm());
        let z = classify_scalar(&PCSymbol::real(0.0), &ctx, &quick()).unwrap();
        assert!(matches!(z.reasons[0], Reason::SymbolDegenerate { .. }));
        assert!(closed_range_scalar(&PCSymbol::real(1.0), &ctx).unwrap());
        assert!(criterion_value(&PCSymbol::real(0.0), unit(0.0), &ctx).is_err());
    }

    #[test]
    fn unbounded_space_is_a_hypothesis_violation() {
        let w = KhvedelidzeWeight::new(vec![(c(1.0, 0.0), 0.6)]).unwrap();
        let ctx = SpaceContext::new(CurveModel::unit_circle(), VariableExponent::constant(2.0).unwrap(), w).unwrap();
        assert!(matches!(classify_scalar(&PCSymbol::real(1.0), &ctx, &quick()), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn weight_points_enter_the_criterion() {
        // p = 2, lambda = -1/2 at a continuity point: v = 0
        let w = KhvedelidzeWeight::new(vec![(unit(0.25), -0.49)]).unwrap();
        let ctx = SpaceContext::new(CurveModel::unit_circle(), VariableExponent::constant(2.0).unwrap(), w).unwrap();
        let r = classify_scalar(&PCSymbol::real(1.0), &ctx, &quick()).unwrap();
        assert_eq!(r.criteria.len(), 1);
        assert!((r.criteria[0].value - 0.01).abs() < 1e-12);
        assert!(r.is_fredholm());
    }

    #[test]
    fn whirl_enters_through_log_modulus() {
        let curve = CurveModel::spiral_marked(c(0.0, 0.0), 1.0, vec![WhirlPoint { param: 0.0, delta: 1.0 }]).unwrap();
        let ctx = SpaceContext::new(curve, VariableExponent::constant(2.0).unwrap(), KhvedelidzeWeight::none()).unwrap();
        let a = PCSymbol::piecewise_constant(vec![0.0, 0.5], vec![c(PI.exp(), 0.0), c(1.0, 0.0)]).unwrap();
        let cv = criterion_value_at(&a, 0.5, &ctx).unwrap();
        assert!((cv.value - 0.5).abs() < 1e-12, "no whirl at 0.5");
        let cv0 = criterion_value_at(&a, 0.0, &ctx).unwrap();
        // zeta = 1 / e^pi, delta = 1: v = -1/2 + 1/2 = 0
        assert!(cv0.is_boundary());
    }

    #[test]
    fn pair_fixtures() {
        let ctx = SpaceContext::l2_circle();
        let id = MatrixSymbol::identity(1);
        let tau = MatrixSymbol::scalar(PCSymbol::power(1));
        assert!(classify_pair(&tau, &id, &ctx, &quick()).unwrap().is_fredholm());
        let zero = MatrixSymbol::zeros(1);
        let z = classify_pair(&zero, &id, &ctx, &quick()).unwrap();
        assert_eq!(z.verdict, Verdict::NotSemiFredholm);
        let d = MatrixSymbol::diagonal(vec![PCSymbol::sign(), PCSymbol::real(1.0)]);
        let r = classify_pair(&d, &MatrixSymbol::identity(2), &ctx, &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::NotSemiFredholm);
        assert!(matches!(r.method, Method::Triangular { .. }));
    }

    #[test]
    fn certificate_is_attached_on_l2() {
        let ctx = SpaceContext::l2_circle();
        let mut opts = quick();
        opts.engine.attach_certificate = true;
        let tau = MatrixSymbol::scalar(PCSymbol::power(1));
        let r = classify_pair(&tau, &MatrixSymbol::identity(1), &ctx, &opts).unwrap();
        let ev = r.evidence.unwrap();
        assert_eq!(ev.index_estimate, -1);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn non_triangular_matrix_uses_the_certificate() {
        let ctx = SpaceContext::l2_circle();
        // U diag(tau, 2) U^{-1} with U = [[1, 1], [1, -1]]
        let h = |x: f64| PCSymbol::real(x);
        let tau = PCSymbol::power(1);
        let half = C64::new(0.5, 0.0);
        let s = tau.add(&h(2.0)).scale(half);
        let d = tau.add(&h(-2.0)).scale(half);
        let a = MatrixSymbol::new(2, vec![s.clone(), d.clone(), d, s]).unwrap();
        let r = classify_pair(&a, &MatrixSymbol::identity(2), &ctx, &quick()).unwrap();
        assert_eq!(r.method, Method::Numeric);
        assert!(r.is_fredholm());
        assert_eq!(r.evidence.unwrap().index_estimate, -1);
        let off = classify_pair(&a, &MatrixSymbol::identity(2), &ctx_p(3.0), &quick());
        assert!(matches!(off, Err(Error::Inconclusive(_))));
    }

    #[test]
    fn algebra_element_paths_agree() {
        let ctx = SpaceContext::l2_circle();
        let tau = Factor { a: MatrixSymbol::scalar(PCSymbol::power(1)), b: MatrixSymbol::identity(1) };
        let e = AlgebraElement::new(1, vec![vec![tau.clone(), tau]]).unwrap();
        let via = classify_algebra_element(&e, &ctx, &quick()).unwrap();
        let direct = classify_algebra_element_numeric(&e, &ctx, &quick()).unwrap();
        assert!(via.is_fredholm() && direct.is_fredholm());
        let sign = AlgebraElement::pair(MatrixSymbol::scalar(PCSymbol::sign()), MatrixSymbol::identity(1)).unwrap();
        let via = classify_algebra_element(&sign, &ctx, &quick()).unwrap();
        let scalar = classify_scalar(&PCSymbol::sign(), &ctx, &quick()).unwrap();
        assert_eq!(via.verdict, scalar.verdict);
    }

    #[test]
    fn discontinuous_exponent_is_rejected() {
        let p = VariableExponent::new(
            vec![
                ExponentArc { start: 0.0, piece: ExponentPiece::Constant { value: 2.0 } },
                ExponentArc { start: 0.5, piece: ExponentPiece::Constant { value: 3.0 } },
            ],
            1.0,
        )
        .unwrap();
        let ctx = SpaceContext::new(CurveModel::unit_circle(), p, KhvedelidzeWeight::none()).unwrap();
        assert!(matches!(classify_scalar(&PCSymbol::sign(), &ctx, &quick()), Err(Error::HypothesisViolated(_))));
    }

    fn jump_fixture() -> impl Strategy<Value = (PCSymbol, f64, f64)> {
        (
            prop::collection::vec((0.2f64..3.0, -PI..PI), 1..5),
            1.2f64..6.0,
            -0.1f64..0.1,
        )
            .prop_map(|(vals, p, lam)| {
                let k = vals.len();
                let breaks: Vec<f64> = (0..k).map(|i| i as f64 / k as f64).collect();
                let values: Vec<C64> = vals.iter().map(|&(r, t)| C64::from_polar(r, t)).collect();
                (PCSymbol::piecewise_constant(breaks, values).unwrap(), p, lam)
            })
    }

    fn weighted(p: f64, lam: f64) -> SpaceContext {
        let w = KhvedelidzeWeight::new(vec![(unit(0.0), lam)]).unwrap();
        SpaceContext::new(CurveModel::unit_circle(), VariableExponent::constant(p).unwrap(), w).unwrap()
    }

    proptest! {
        #[test]
        fn branch_shift_keeps_the_predicate(zeta_arg in -PI..PI, r in 0.1f64..10.0, p in 1.1f64..8.0) {
            let z = C64::from_polar(r, zeta_arg);
            let v = criterion_value_from_ratio(z, 0.3, p, 0.0).unwrap();
            let shifted = v - 1.0;
            prop_assert_eq!(dist_to_integers(v) > BOUNDARY_MARGIN, dist_to_integers(shifted) > BOUNDARY_MARGIN);
        }

        #[test]
        fn dual_criterion_values_sum_to_integers((a, p, lam) in jump_fixture()) {
            let ctx = weighted(p, lam);
            let dual = ctx.dual();
            let inv = a.inv();
            let s = 0.0;
            let v = criterion_value_at(&a, s, &ctx).unwrap().value;
            let w = criterion_value_at(&inv, s, &dual).unwrap().value;
            prop_assert!(dist_to_integers(v + w) < 1e-10);
        }

        #[test]
        fn closed_range_coincides_with_classification((a, p, lam) in jump_fixture()) {
            let ctx = weighted(p, lam);
            let f = classify_scalar(&a, &ctx, &quick()).unwrap().is_fredholm();
            prop_assert_eq!(f, closed_range_scalar(&a, &ctx).unwrap());
        }
    }
}
