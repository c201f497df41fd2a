//! Modulars and Luxemburg norms on weighted variable-exponent Lebesgue spaces.

use crate::geometry::{check_khvedelidze, CurveModel, KhvedelidzeWeight, SpaceContext};
use crate::numeric::pairwise_sum;
use crate::symbols::PCSymbol;
use crate::{Error, Result, C64};
use serde::Serialize;

/// Bisection iteration cap for the Luxemburg norm.
pub const MAX_ITERATIONS: usize = 200;
const MIN_NODES: usize = 16;

/// Function sampled at quadrature nodes on a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    params: Vec<f64>,
    points: Vec<C64>,
    weights: Vec<f64>,
    components: usize,
    /// Node-major: `values[j * components + c]`.
    values: Vec<C64>,
}

impl SampledFunction {
    /// Midpoint rule on uniform arclength cells, with a cell boundary at every breakpoint.
    pub fn on_curve(
        curve: &CurveModel,
        count: usize,
        breaks: &[f64],
        components: usize,
        f: impl Fn(f64, C64) -> Vec<C64>,
    ) -> Result<Self> {
        if count < MIN_NODES {
            return Err(Error::Domain(format!("need at least {MIN_NODES} nodes, got {count}")));
        }
        let mut cuts: Vec<f64> = breaks.iter().map(|b| b.rem_euclid(1.0)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        if cuts.is_empty() {
            cuts.push(0.0);
        }
        if count < cuts.len() {
            return Err(Error::Domain("fewer nodes than arcs".into()));
        }
        let arcs: Vec<(f64, f64)> = (0..cuts.len())
            .map(|i| (cuts[i], if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + 1.0 }))
            .collect();
        // largest-remainder apportionment, at least one node per arc
        let spare = count - arcs.len();
        let mut alloc: Vec<usize> = arcs.iter().map(|(a, b)| 1 + ((b - a) * spare as f64).floor() as usize).collect();
        let mut rest = count - alloc.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..arcs.len()).collect();
        order.sort_by(|&i, &j| {
            let fi = (arcs[i].1 - arcs[i].0) * spare as f64;
            let fj = (arcs[j].1 - arcs[j].0) * spare as f64;
            (fj - fj.floor()).total_cmp(&(fi - fi.floor())).then(i.cmp(&j))
        });
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            alloc[i] += 1;
            rest -= 1;
        }
        let len = curve.length();
        let mut out = Self { params: Vec::new(), points: Vec::new(), weights: Vec::new(), components, values: Vec::new() };
        for ((a, b), m) in arcs.iter().zip(alloc) {
            let h = (b - a) / m as f64;
            for k in 0..m {
                let s = (a + h * (k as f64 + 0.5)).rem_euclid(1.0);
                let t = curve.point(s);
                let v = f(s, t);
                if v.len() != components {
                    return Err(Error::SizeMismatch { expected: components, found: v.len() });
                }
                out.params.push(s);
                out.points.push(t);
                out.weights.push(h * len);
                out.values.extend(v);
            }
        }
        Ok(out)
    }

    pub fn scalar(curve: &CurveModel, count: usize, breaks: &[f64], f: impl Fn(f64, C64) -> C64) -> Result<Self> {
        Self::on_curve(curve, count, breaks, 1, |s, t| vec![f(s, t)])
    }

    /// Samples a scalar symbol with cells aligned to its breakpoints.
    pub fn from_symbol(curve: &CurveModel, count: usize, a: &PCSymbol) -> Result<Self> {
        Self::scalar(curve, count, a.breakpoints(), |s, _| a.eval(s))
    }

    /// Same nodes, new values.
    pub fn with_values(&self, components: usize, f: impl Fn(f64, C64) -> Vec<C64>) -> Result<Self> {
        let mut values = Vec::with_capacity(self.params.len() * components);
        for (s, t) in self.params.iter().zip(&self.points) {
            let v = f(*s, *t);
            if v.len() != components {
                return Err(Error::SizeMismatch { expected: components, found: v.len() });
            }
            values.extend(v);
        }
        Ok(Self { values, components, ..self.clone() })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value(&self, node: usize, component: usize) -> C64 {
        self.values[node * self.components + component]
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        Ok(Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(), ..self.clone() })
    }

    fn check_aligned(&self, other: &Self) -> Result<()> {
        if self.params != other.params || self.weights != other.weights {
            return Err(Error::Alignment("functions are sampled on different node sets".into()));
        }
        if self.components != other.components {
            return Err(Error::Alignment(format!(
                "component counts differ ({} vs {})",
                self.components, other.components
            )));
        }
        Ok(())
    }

    fn component(&self, c: usize) -> Self {
        Self {
            values: (0..self.len()).map(|j| self.value(j, c)).collect(),
            components: 1,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModularReport {
    pub lambda: f64,
    pub modular: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of a traced norm computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormOutcome {
    pub norm: f64,
    /// One report per scalar component.
    pub reports: Vec<ModularReport>,
    /// `(lambda, modular)` pairs visited by the bracketing and bisection.
    pub trace: Vec<(f64, f64)>,
}

fn magnitudes(f: &SampledFunction, ctx: &SpaceContext) -> (Vec<f64>, Vec<f64>) {
    let amp = (0..f.len())
        .map(|j| f.value(j, 0).norm() * ctx.weight.weight_value(f.points[j]))
        .collect();
    let p = f.params.iter().map(|&s| ctx.exponent.eval(s)).collect();
    (amp, p)
}

fn modular_raw(amp: &[f64], p: &[f64], w: &[f64], lambda: f64) -> f64 {
    let terms: Vec<f64> = amp
        .iter()
        .zip(p)
        .zip(w)
        .map(|((a, p), w)| if *a == 0.0 { 0.0 } else { w * (a / lambda).powf(*p) })
        .collect();
    pairwise_sum(&terms)
}

/// `sum_j w_j |f_j rho(t_j) / lambda|^{p(t_j)}` for a scalar function.
pub fn modular(f: &SampledFunction, lambda: f64, ctx: &SpaceContext) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if f.components != 1 {
        return Err(Error::Domain("the modular is defined for scalar functions".into()));
    }
    let (amp, p) = magnitudes(f, ctx);
    Ok(modular_raw(&amp, &p, &f.weights, lambda))
}

fn scalar_norm(f: &SampledFunction, ctx: &SpaceContext, tol: f64, trace: &mut Vec<(f64, f64)>) -> Result<(f64, ModularReport)> {
    let (amp, p) = magnitudes(f, ctx);
    let top = amp.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok((0.0, ModularReport { lambda: 0.0, modular: 0.0, iterations: 0, converged: true }));
    }
    let m = |l: f64| modular_raw(&amp, &p, &f.weights, l);
    let mut lo = 1e-12 * top;
    let mut hi = top;
    let mut m_hi = m(hi);
    trace.push((hi, m_hi));
    let mut iterations = 0;
    while m_hi > 1.0 {
        lo = hi;
        hi *= 2.0;
        m_hi = m(hi);
        trace.push((hi, m_hi));
        iterations += 1;
        if iterations > MAX_ITERATIONS || !hi.is_finite() {
            return Err(Error::NumericFailure(format!("could not bracket the Luxemburg norm (lambda = {hi})")));
        }
    }
    let mut m_lo = m(lo);
    while iterations < MAX_ITERATIONS && (hi - lo) > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        let mm = m(mid);
        trace.push((mid, mm));
        iterations += 1;
        if mm > 1.0 {
            lo = mid;
            m_lo = mm;
        } else {
            hi = mid;
            m_hi = mm;
        }
    }
    let (lambda, modular) = if (m_lo - 1.0).abs() < (m_hi - 1.0).abs() { (lo, m_lo) } else { (hi, m_hi) };
    let converged = (modular - 1.0).abs() <= tol;
    let report = ModularReport { lambda, modular, iterations, converged };
    if !converged {
        return Err(Error::NumericFailure(format!(
            "Luxemburg bisection stopped at lambda = {lambda} with modular {modular} after {iterations} iterations"
        )));
    }
    Ok((lambda, report))
}

/// Luxemburg norm; vector-valued functions combine component norms in l2.
pub fn luxemburg_norm(f: &SampledFunction, ctx: &SpaceContext, tol: f64) -> Result<f64> {
    luxemburg_norm_traced(f, ctx, tol).map(|o| o.norm)
}

pub fn luxemburg_norm_traced(f: &SampledFunction, ctx: &SpaceContext, tol: f64) -> Result<NormOutcome> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut trace = Vec::new();
    let mut reports = Vec::with_capacity(f.components);
    let mut sq = 0.0;
    for c in 0..f.components {
        let (n, r) = scalar_norm(&f.component(c), ctx, tol, &mut trace)?;
        sq += n * n;
        reports.push(r);
    }
    let norm = if f.components == 1 { reports[0].lambda } else { sq.sqrt() };
    Ok(NormOutcome { norm, reports, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoelderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Unweighted Hoelder inequality with constant `1 + 1/p_min - 1/p_max`.
pub fn hoelder_check(f: &SampledFunction, g: &SampledFunction, ctx: &SpaceContext) -> Result<HoelderCheck> {
    f.check_aligned(g)?;
    let plain = SpaceContext::new(ctx.curve.clone(), ctx.exponent.clone(), KhvedelidzeWeight::none())?;
    let terms: Vec<f64> = (0..f.len())
        .map(|j| {
            let prod: f64 = (0..f.components).map(|c| (f.value(j, c) * g.value(j, c)).norm()).sum();
            f.weights[j] * prod
        })
        .collect();
    let lhs = pairwise_sum(&terms);
    let factor = 1.0 + 1.0 / ctx.exponent.p_min() - 1.0 / ctx.exponent.p_max();
    let dual = SpaceContext::new(ctx.curve.clone(), ctx.exponent.conjugate(), KhvedelidzeWeight::none())?;
    let rhs = factor * luxemburg_norm(f, &plain, 1e-12)? * luxemburg_norm(g, &dual, 1e-12)?;
    Ok(HoelderCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-8) })
}

/// Largest dyadic `eps` keeping `(1/p(t_k)+lambda_k)(1+eps) < 1` and `1+eps < p_min`.
pub fn embedding_epsilon(ctx: &SpaceContext) -> Result<f64> {
    let entries = check_khvedelidze(ctx);
    if let Some(bad) = entries.iter().find(|e| !e.passes) {
        return Err(Error::HypothesisViolated(format!(
            "weight condition fails at marked point {} (1/p + lambda = {})",
            bad.index, bad.value
        )));
    }
    (1..=20)
        .map(|k| 0.5f64.powi(k))
        .find(|eps| {
            1.0 + eps < ctx.exponent.p_min()
                && entries.iter().all(|e| {
                    let v = e.value * (1.0 + eps);
                    v > 0.0 && v < 1.0
                })
        })
        .ok_or_else(|| Error::NumericFailure("no dyadic epsilon down to 2^-20 satisfies the embedding condition".into()))
}

/// `sum_j w_j <f_j, g_j>` with `g` conjugated.
pub fn duality_pairing(f: &SampledFunction, g: &SampledFunction) -> Result<C64> {
    f.check_aligned(g)?;
    let terms: Vec<C64> = (0..f.len())
        .map(|j| (0..f.components).map(|c| f.value(j, c) * g.value(j, c).conj()).sum::<C64>() * f.weights[j])
        .collect();
    let re: Vec<f64> = terms.iter().map(|z| z.re).collect();
    let im: Vec<f64> = terms.iter().map(|z| z.im).collect();
    Ok(C64::new(pairwise_sum(&re), pairwise_sum(&im)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ExponentArc, ExponentPiece, VariableExponent};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn one(_: f64, _: C64) -> C64 {
        C64::new(1.0, 0.0)
    }

    fn circle_fn(count: usize, f: impl Fn(f64, C64) -> C64) -> SampledFunction {
        SampledFunction::scalar(&CurveModel::unit_circle(), count, &[], f).unwrap()
    }

    fn two_piece_ctx() -> SpaceContext {
        let p = VariableExponent::new(
            vec![
                ExponentArc { start: 0.0, piece: ExponentPiece::Constant { value: 2.0 } },
                ExponentArc { start: 0.5, piece: ExponentPiece::Constant { value: 4.0 } },
            ],
            2.0 * PI,
        )
        .unwrap();
        SpaceContext::new(CurveModel::unit_circle(), p, KhvedelidzeWeight::none()).unwrap()
    }

    #[test]
    fn weights_sum_to_length() {
        let f = SampledFunction::scalar(&CurveModel::circle(C64::new(1.0, 1.0), 3.0).unwrap(), 101, &[0.1, 0.7], one)
            .unwrap();
        let total: f64 = f.weights().iter().sum();
        assert!((total - 6.0 * PI).abs() < 1e-9 * 6.0 * PI);
        assert_eq!(f.len(), 101);
    }

    #[test]
    fn modular_fixtures() {
        let ctx = SpaceContext::l2_circle();
        let f = circle_fn(256, one);
        assert!((modular(&f, 1.0, &ctx).unwrap() - 2.0 * PI).abs() < 1e-10);
        assert!((modular(&f, (2.0 * PI).sqrt(), &ctx).unwrap() - 1.0).abs() < 1e-10);
        let z = circle_fn(256, |_, _| C64::new(0.0, 0.0));
        assert_eq!(modular(&z, 0.7, &ctx).unwrap(), 0.0);
        assert!(matches!(modular(&f, 0.0, &ctx), Err(Error::Domain(_))));
    }

    #[test]
    fn norm_of_constant_function() {
        let ctx = SpaceContext::l2_circle();
        let n = luxemburg_norm(&circle_fn(512, one), &ctx, 1e-12).unwrap();
        assert!((n - (2.0 * PI).sqrt()).abs() < 1e-10);
        assert_eq!(luxemburg_norm(&circle_fn(64, |_, _| C64::new(0.0, 0.0)), &ctx, 1e-12).unwrap(), 0.0);
    }

    fn root_oracle() -> f64 {
        // pi x^2 + pi x - 1 = 0 with x = lambda^-2, solved by Newton from x = 1
        let mut x = 1.0f64;
        for _ in 0..60 {
            x -= (PI * x * x + PI * x - 1.0) / (2.0 * PI * x + PI);
        }
        1.0 / x.sqrt()
    }

    #[test]
    fn norm_with_two_piece_exponent() {
        let ctx = two_piece_ctx();
        let f = SampledFunction::scalar(&ctx.curve, 1024, &[0.0, 0.5], one).unwrap();
        let n = luxemburg_norm(&f, &ctx, 1e-12).unwrap();
        let oracle = root_oracle();
        assert!((oracle - 1.9847).abs() < 1e-4);
        assert!((n - oracle).abs() < 1e-6, "{n} vs {oracle}");
    }

    #[test]
    fn conjugate_exponent_fixtures() {
        let p2 = VariableExponent::constant(2.0).unwrap().conjugate();
        assert_eq!(p2.eval(0.3), 2.0);
        let p = VariableExponent::constant(1.5).unwrap().conjugate();
        assert!((p.eval(0.1) - 3.0).abs() < 1e-12);
        let q = two_piece_ctx().exponent.conjugate();
        assert!((q.eval(0.25) - 2.0).abs() < 1e-12 && (q.eval(0.75) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hoelder_equality_case_and_zero() {
        let ctx = SpaceContext::l2_circle();
        let f = circle_fn(256, one);
        let h = hoelder_check(&f, &f, &ctx).unwrap();
        assert!((h.lhs - 2.0 * PI).abs() < 1e-10 && (h.rhs - 2.0 * PI).abs() < 1e-9 && h.holds);
        let z = circle_fn(256, |_, _| C64::new(0.0, 0.0));
        let h = hoelder_check(&z, &f, &ctx).unwrap();
        assert_eq!(h.lhs, 0.0);
        assert!(h.holds);
    }

    #[test]
    fn misaligned_nodes_are_rejected() {
        let a = circle_fn(64, one);
        let b = circle_fn(65, one);
        assert!(matches!(hoelder_check(&a, &b, &SpaceContext::l2_circle()), Err(Error::Alignment(_))));
        assert!(matches!(duality_pairing(&a, &b), Err(Error::Alignment(_))));
    }

    #[test]
    fn embedding_epsilon_fixtures() {
        assert_eq!(embedding_epsilon(&SpaceContext::l2_circle()).unwrap(), 0.5);
        let ctx = |l: f64| {
            SpaceContext::new(
                CurveModel::unit_circle(),
                VariableExponent::constant(2.0).unwrap(),
                KhvedelidzeWeight::new(vec![(C64::new(1.0, 0.0), l)]).unwrap(),
            )
            .unwrap()
        };
        assert_eq!(embedding_epsilon(&ctx(0.4)).unwrap(), 0.0625);
        let near = embedding_epsilon(&ctx(0.999 * 0.5)).unwrap();
        // grid oracle: largest 2^-k with (0.5 + 0.4995)(1 + 2^-k) < 1
        let oracle = (1..=20).map(|k| 0.5f64.powi(k)).find(|e| 0.9995 * (1.0 + e) < 1.0).unwrap();
        assert_eq!(near, oracle);
        assert!(matches!(embedding_epsilon(&ctx(0.6)), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn duality_pairing_fixtures() {
        let f = circle_fn(256, one);
        assert!((duality_pairing(&f, &f).unwrap() - C64::new(2.0 * PI, 0.0)).norm() < 1e-12);
        let tau = circle_fn(256, |_, t| t);
        assert!((duality_pairing(&tau, &tau).unwrap() - C64::new(2.0 * PI, 0.0)).norm() < 1e-12);
        assert!(duality_pairing(&tau, &f).unwrap().norm() < 1e-10);
    }

    #[test]
    fn vector_norm_combines_components() {
        let ctx = SpaceContext::l2_circle();
        let f = SampledFunction::on_curve(&ctx.curve, 128, &[], 2, |_, _| vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)])
            .unwrap();
        let n = luxemburg_norm(&f, &ctx, 1e-12).unwrap();
        assert!((n - (5.0 * 2.0 * PI).sqrt()).abs() < 1e-10);
    }

    fn random_fn(coeffs: &[(f64, f64)]) -> SampledFunction {
        let cs = coeffs.to_vec();
        circle_fn(256, move |s, _| {
            cs.iter()
                .enumerate()
                .map(|(k, (a, b))| C64::new(*a, *b) * crate::numeric::unit((k as f64 - 2.0) * s))
                .sum()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn modular_strictly_decreasing(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5)) {
            let f = random_fn(&coeffs);
            let ctx = two_piece_ctx();
            prop_assume!(modular(&f, 1.0, &ctx).unwrap() > 0.0);
            let vals: Vec<f64> = [0.3, 0.7, 1.0, 2.0, 5.0].iter().map(|&l| modular(&f, l, &ctx).unwrap()).collect();
            prop_assert!(vals.windows(2).all(|w| w[1] < w[0]));
        }

        #[test]
        fn norm_triangle_inequality_and_homogeneity(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        ) {
            let ctx = two_piece_ctx();
            let (f, g) = (random_fn(&a), random_fn(&b));
            let tol = 1e-12;
            let nf = luxemburg_norm(&f, &ctx, tol).unwrap();
            let ng = luxemburg_norm(&g, &ctx, tol).unwrap();
            let ns = luxemburg_norm(&f.add(&g).unwrap(), &ctx, tol).unwrap();
            prop_assert!(ns <= (nf + ng) * (1.0 + 1e-6));
            let n2 = luxemburg_norm(&f.scale(C64::new(2.0, 0.0)), &ctx, tol).unwrap();
            prop_assert!((n2 - 2.0 * nf).abs() <= 2.0 * tol * nf.max(1.0));
        }

        #[test]
        fn conjugate_is_an_involution(c0 in 2.0f64..4.0, a in -0.5f64..0.5, b in -0.5f64..0.5) {
            let p = VariableExponent::new(
                vec![ExponentArc { start: 0.0, piece: ExponentPiece::Trig { c0, cos: vec![a], sin: vec![b] } }],
                2.0 * PI,
            ).unwrap();
            let q = p.conjugate();
            let back = q.conjugate();
            for k in 0..64 {
                let s = k as f64 / 64.0;
                prop_assert!((back.eval(s) - p.eval(s)).abs() < 1e-12);
                prop_assert!((1.0 / p.eval(s) + 1.0 / q.eval(s) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn hoelder_holds_at_constant_exponent(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        ) {
            let h = hoelder_check(&random_fn(&a), &random_fn(&b), &SpaceContext::l2_circle()).unwrap();
            prop_assert!(h.holds);
        }

        #[test]
        fn pairing_is_conjugate_symmetric(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        ) {
            let (f, g) = (random_fn(&a), random_fn(&b));
            let fg = duality_pairing(&f, &g).unwrap();
            let gf = duality_pairing(&g, &f).unwrap();
            prop_assert!((fg - gf.conj()).norm() < 1e-12);
        }
    }
}
