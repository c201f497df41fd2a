//! Curves, variable exponents, power weights, and the boundedness hypotheses
//! for the Cauchy singular integral operator.

use crate::numeric::{dist_to_integers, unit};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative tolerance for matching a point to the curve.
pub const ON_CURVE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFamily {
    UnitCircle,
    SpiralMarked,
    Sampled,
}

/// A marked point with a stored whirl exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhirlPoint {
    pub param: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Circle { center: C64, radius: f64 },
    /// Closed polyline; `cum[j]` is the arclength from vertex 0 to vertex j.
    Polyline { vertices: Vec<C64>, cum: Vec<f64> },
}

/// A closed Jordan curve parametrized by normalized arclength `s in [0, 1)`,
/// counter-clockwise for the circle families.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveModel {
    shape: Shape,
    family: CurveFamily,
    whirl_points: Vec<WhirlPoint>,
    length: f64,
}

fn wrap01(s: f64) -> f64 {
    let r = s.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl CurveModel {
    pub fn unit_circle() -> Self {
        Self::circle(C64::new(0.0, 0.0), 1.0).expect("unit circle is valid")
    }

    pub fn circle(center: C64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidCurve(format!("radius must be positive, got {radius}")));
        }
        Ok(Self {
            shape: Shape::Circle { center, radius },
            family: CurveFamily::UnitCircle,
            whirl_points: Vec::new(),
            length: 2.0 * PI * radius,
        })
    }

    /// Circle geometry carrying stored whirl exponents at marked parameters.
    pub fn spiral_marked(center: C64, radius: f64, whirl_points: Vec<WhirlPoint>) -> Result<Self> {
        let mut curve = Self::circle(center, radius)?;
        let mut pts: Vec<WhirlPoint> = whirl_points
            .into_iter()
            .map(|w| WhirlPoint { param: wrap01(w.param), delta: w.delta })
            .collect();
        pts.sort_by(|a, b| a.param.total_cmp(&b.param));
        for w in pts.windows(2) {
            if (w[1].param - w[0].param).abs() < ON_CURVE_RTOL {
                return Err(Error::InvalidCurve("whirl points must be pairwise distinct".into()));
            }
        }
        curve.family = CurveFamily::SpiralMarked;
        curve.whirl_points = pts;
        Ok(curve)
    }

    /// Closed polyline through `vertices` (the closing segment is implicit).
    pub fn sampled(vertices: Vec<C64>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidCurve("a sampled curve needs at least 3 vertices".into()));
        }
        let n = vertices.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for j in 0..n {
            let d = (vertices[(j + 1) % n] - vertices[j]).norm();
            cum.push(cum[j] + d);
        }
        let length = cum[n];
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidCurve("curve has zero length".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vertices[a].re.total_cmp(&vertices[b].re));
        let tol = 1e-14 * length;
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                if vertices[b].re - vertices[a].re > tol {
                    break;
                }
                if (vertices[a] - vertices[b]).norm() <= tol {
                    return Err(Error::InvalidCurve(format!("vertices {a} and {b} coincide")));
                }
            }
        }
        Ok(Self {
            shape: Shape::Polyline { vertices, cum },
            family: CurveFamily::Sampled,
            whirl_points: Vec::new(),
            length,
        })
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn whirl_points(&self) -> &[WhirlPoint] {
        &self.whirl_points
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.shape, Shape::Circle { .. })
    }

    /// True for the unit circle centred at the origin (the finite-section engine's home).
    pub fn is_unit_circle(&self) -> bool {
        match self.shape {
            Shape::Circle { center, radius } => center.norm() < 1e-12 && (radius - 1.0).abs() < 1e-12,
            Shape::Polyline { .. } => false,
        }
    }

    pub fn on_curve_tolerance(&self) -> f64 {
        ON_CURVE_RTOL * self.length
    }

    pub fn point(&self, s: f64) -> C64 {
        let s = wrap01(s);
        match &self.shape {
            Shape::Circle { center, radius } => center + unit(s) * *radius,
            Shape::Polyline { vertices, cum } => {
                let target = s * self.length;
                let j = match cum.binary_search_by(|c| c.total_cmp(&target)) {
                    Ok(j) => j.min(vertices.len() - 1),
                    Err(j) => j - 1,
                };
                let seg = cum[j + 1] - cum[j];
                let u = if seg > 0.0 { (target - cum[j]) / seg } else { 0.0 };
                let a = vertices[j];
                let b = vertices[(j + 1) % vertices.len()];
                a + (b - a) * u
            }
        }
    }

    /// Tangent angle (radians) at parameter `s`.
    pub fn tangent_angle(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Circle { .. } => 2.0 * PI * wrap01(s) + PI / 2.0,
            Shape::Polyline { vertices, cum } => {
                let target = wrap01(s) * self.length;
                let j = match cum.binary_search_by(|c| c.total_cmp(&target)) {
                    Ok(j) => j.min(vertices.len() - 1),
                    Err(j) => j - 1,
                };
                let d = vertices[(j + 1) % vertices.len()] - vertices[j];
                d.im.atan2(d.re)
            }
        }
    }

    /// Parameter of the curve point nearest to `t`, if within the on-curve tolerance.
    pub fn param_of(&self, t: C64) -> Option<f64> {
        let tol = self.on_curve_tolerance();
        match &self.shape {
            Shape::Circle { center, radius } => {
                let d = t - center;
                if (d.norm() - radius).abs() > tol {
                    return None;
                }
                Some(wrap01(d.im.atan2(d.re) / (2.0 * PI)))
            }
            Shape::Polyline { vertices, cum } => {
                let n = vertices.len();
                let mut best = (f64::INFINITY, 0.0);
                for j in 0..n {
                    let a = vertices[j];
                    let b = vertices[(j + 1) % n];
                    let ab = b - a;
                    let len2 = ab.norm_sqr();
                    let u = if len2 > 0.0 { (((t - a) * ab.conj()).re / len2).clamp(0.0, 1.0) } else { 0.0 };
                    let dist = (a + ab * u - t).norm();
                    if dist < best.0 {
                        best = (dist, (cum[j] + u * (cum[j + 1] - cum[j])) / self.length);
                    }
                }
                (best.0 <= tol).then(|| wrap01(best.1))
            }
        }
    }

    pub fn require_param(&self, t: C64) -> Result<f64> {
        self.param_of(t).ok_or(Error::PointOffCurve { re: t.re, im: t.im })
    }

    /// `resolution` points at uniform parameter spacing.
    pub fn sample(&self, resolution: usize) -> Vec<C64> {
        (0..resolution).map(|j| self.point(j as f64 / resolution as f64)).collect()
    }

    /// Whirl exponent at the curve point `t`.
    pub fn whirl_exponent(&self, t: C64) -> Result<f64> {
        let s = self.require_param(t)?;
        match &self.shape {
            Shape::Circle { .. } => Ok(self.stored_whirl(s)),
            Shape::Polyline { vertices, .. } => Ok(regress_whirl(vertices, t, self.on_curve_tolerance())),
        }
    }

    /// Stored whirl exponent at parameter `s` (0 away from marked points).
    pub fn stored_whirl(&self, s: f64) -> f64 {
        self.whirl_points
            .iter()
            .find(|w| dist_to_integers(w.param - s) <= ON_CURVE_RTOL)
            .map_or(0.0, |w| w.delta)
    }
}

/// Number of nearest samples used by the whirl regression, and how many of
/// the very nearest are skipped.
const WHIRL_SAMPLES: usize = 256;
const WHIRL_SKIP: usize = 4;

fn regress_whirl(vertices: &[C64], t: C64, tol: f64) -> f64 {
    let n = vertices.len();
    let mut by_dist: Vec<(f64, usize)> = vertices
        .iter()
        .enumerate()
        .map(|(j, v)| ((v - t).norm(), j))
        .filter(|(d, _)| *d > tol)
        .collect();
    by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let anchor = vertices
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).norm().total_cmp(&(b.1 - t).norm()))
        .map_or(0, |(j, _)| j);
    let chosen: Vec<(f64, usize)> = by_dist.into_iter().skip(WHIRL_SKIP).take(WHIRL_SAMPLES).collect();

    // Split into the two arms meeting at t by cyclic index offset from the anchor.
    let mut arms: [Vec<(i64, f64, usize)>; 2] = [Vec::new(), Vec::new()];
    for (d, j) in chosen {
        let mut off = j as i64 - anchor as i64;
        let half = n as i64 / 2;
        if off > half {
            off -= n as i64;
        } else if off < -half {
            off += n as i64;
        }
        arms[usize::from(off < 0)].push((off.abs(), d, j));
    }
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for arm in arms.iter_mut() {
        if arm.len() < 3 {
            continue;
        }
        arm.sort_by_key(|a| a.0);
        let mut xs = Vec::with_capacity(arm.len());
        let mut ys = Vec::with_capacity(arm.len());
        let mut prev: Option<f64> = None;
        for &(_, d, j) in arm.iter() {
            let z = vertices[j] - t;
            let raw = z.im.atan2(z.re);
            let y = match prev {
                None => raw,
                Some(p) => p + (raw - p + PI).rem_euclid(2.0 * PI) - PI,
            };
            prev = Some(y);
            xs.push(-d.ln());
            ys.push(y);
        }
        let m = xs.len() as f64;
        let xbar = xs.iter().sum::<f64>() / m;
        let ybar = ys.iter().sum::<f64>() / m;
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - xbar) * (y - ybar);
            sxx += (x - xbar) * (x - xbar);
        }
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Estimate of `sup |Gamma(t,R)| / R` over sampled centres and radii.
pub fn carleson_constant(curve: &CurveModel, resolution: usize) -> Result<f64> {
    if resolution < 64 {
        return Err(Error::Domain(format!("resolution must be at least 64, got {resolution}")));
    }
    if curve.length() <= 0.0 {
        return Err(Error::InvalidCurve("curve has zero length".into()));
    }
    let pts = curve.sample(resolution);
    let segs: Vec<(C64, C64)> = (0..resolution).map(|j| (pts[j], pts[(j + 1) % resolution])).collect();
    let diam = pts
        .par_iter()
        .map(|a| pts.iter().map(|b| (a - b).norm()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    const RADII: usize = 64;
    let r_lo = curve.length() * 1e-4;
    let mut radii: Vec<f64> = (0..RADII)
        .map(|k| r_lo * (diam / r_lo).powf(k as f64 / (RADII - 1) as f64))
        .collect();
    radii[RADII - 1] = diam;
    let best = pts
        .par_iter()
        .map(|&c| {
            let near: Vec<(f64, f64, &(C64, C64))> = segs
                .iter()
                .map(|s| {
                    let (dmin, dmax) = segment_distance_range(c, s.0, s.1);
                    (dmin, dmax, s)
                })
                .collect();
            radii
                .iter()
                .map(|&r| {
                    let inside: f64 = near
                        .iter()
                        .map(|&(dmin, dmax, s)| {
                            if dmin >= r {
                                0.0
                            } else if dmax <= r {
                                (s.1 - s.0).norm()
                            } else {
                                segment_length_in_disk(c, r, s.0, s.1)
                            }
                        })
                        .sum();
                    inside / r
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

fn segment_distance_range(c: C64, a: C64, b: C64) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    let u = if len2 > 0.0 { (((c - a) * ab.conj()).re / len2).clamp(0.0, 1.0) } else { 0.0 };
    let dmin = (a + ab * u - c).norm();
    let dmax = (a - c).norm().max((b - c).norm());
    (dmin, dmax)
}

fn segment_length_in_disk(c: C64, r: f64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let f = a - c;
    let qa = d.norm_sqr();
    if qa == 0.0 {
        return 0.0;
    }
    let qb = 2.0 * (f * d.conj()).re;
    let qc = f.norm_sqr() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let u1 = ((-qb - sq) / (2.0 * qa)).clamp(0.0, 1.0);
    let u2 = ((-qb + sq) / (2.0 * qa)).clamp(0.0, 1.0);
    (u2 - u1) * qa.sqrt()
}

/// A smooth piece of a variable exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentPiece {
    Constant { value: f64 },
    /// `start + slope * (arclength measured from the arc start)`.
    Affine { start: f64, slope: f64 },
    /// `c0 + sum_k cos[k-1] cos(2 pi k s) + sin[k-1] sin(2 pi k s)` in the global parameter.
    Trig { c0: f64, cos: Vec<f64>, sin: Vec<f64> },
    /// Pointwise conjugate `q / (q - 1)` of the inner piece.
    Conjugate { inner: Box<ExponentPiece> },
}

impl ExponentPiece {
    fn eval(&self, s: f64, arc_start: f64, length: f64) -> f64 {
        match self {
            ExponentPiece::Constant { value } => *value,
            ExponentPiece::Affine { start, slope } => start + slope * (s - arc_start) * length,
            ExponentPiece::Trig { c0, cos, sin } => {
                let mut v = *c0;
                for (k, c) in cos.iter().enumerate() {
                    v += c * (2.0 * PI * (k + 1) as f64 * s).cos();
                }
                for (k, c) in sin.iter().enumerate() {
                    v += c * (2.0 * PI * (k + 1) as f64 * s).sin();
                }
                v
            }
            ExponentPiece::Conjugate { inner } => {
                let q = inner.eval(s, arc_start, length);
                q / (q - 1.0)
            }
        }
    }

    fn conjugate(&self) -> ExponentPiece {
        match self {
            ExponentPiece::Conjugate { inner } => (**inner).clone(),
            ExponentPiece::Constant { value } => ExponentPiece::Constant { value: value / (value - 1.0) },
            other => ExponentPiece::Conjugate { inner: Box::new(other.clone()) },
        }
    }
}

/// An exponent arc starting at parameter `start` and running to the next arc's start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentArc {
    pub start: f64,
    pub piece: ExponentPiece,
}

/// Variable exponent `p: Gamma -> (1, inf)` given piecewise over parameter arcs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableExponent {
    arcs: Vec<ExponentArc>,
    length: f64,
    p_min: f64,
    p_max: f64,
}

const EXTREMA_SAMPLES: usize = 256;

impl VariableExponent {
    pub fn constant(p: f64) -> Result<Self> {
        Self::new(vec![ExponentArc { start: 0.0, piece: ExponentPiece::Constant { value: p } }], 1.0)
    }

    /// Arcs must have distinct starts in `[0,1)`; `length` converts arclength slopes.
    pub fn new(mut arcs: Vec<ExponentArc>, length: f64) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::Domain("exponent needs at least one arc".into()));
        }
        for a in &mut arcs {
            if !(0.0..1.0).contains(&a.start) {
                return Err(Error::Domain(format!("arc start {} outside [0,1)", a.start)));
            }
        }
        arcs.sort_by(|a, b| a.start.total_cmp(&b.start));
        if arcs.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::Domain("exponent arcs must have distinct starts".into()));
        }
        let mut out = Self { arcs, length, p_min: f64::INFINITY, p_max: f64::NEG_INFINITY };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..out.arcs.len() {
            let (a, b) = out.arc_bounds(i);
            for j in 0..=EXTREMA_SAMPLES {
                let s = a + (b - a) * j as f64 / EXTREMA_SAMPLES as f64;
                let v = out.arcs[i].piece.eval(s, a, length);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !(lo > 1.0 && hi.is_finite()) {
            return Err(Error::Domain(format!("exponent must satisfy 1 < p < inf, sampled range [{lo}, {hi}]")));
        }
        out.p_min = lo;
        out.p_max = hi;
        Ok(out)
    }

    fn arc_bounds(&self, i: usize) -> (f64, f64) {
        let a = self.arcs[i].start;
        let b = if i + 1 < self.arcs.len() { self.arcs[i + 1].start } else { self.arcs[0].start + 1.0 };
        (a, b)
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let s = wrap01(s);
        let k = self.arcs.partition_point(|a| a.start <= s);
        if k == 0 {
            // before the first start: belongs to the last (wrapping) arc
            (self.arcs.len() - 1, s + 1.0)
        } else {
            (k - 1, s)
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let (i, s) = self.locate(s);
        let (a, _) = self.arc_bounds(i);
        self.arcs[i].piece.eval(s, a, self.length)
    }

    /// Limit from before `s` (following the orientation).
    pub fn eval_left(&self, s: f64) -> f64 {
        let (i, ss) = self.locate(s);
        let (a, _) = self.arc_bounds(i);
        if (ss - a).abs() < 1e-15 {
            let j = if i == 0 { self.arcs.len() - 1 } else { i - 1 };
            let (aj, bj) = self.arc_bounds(j);
            self.arcs[j].piece.eval(bj, aj, self.length)
        } else {
            self.arcs[i].piece.eval(ss, a, self.length)
        }
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn arcs(&self) -> &[ExponentArc] {
        &self.arcs
    }

    /// Arc start parameters where adjacent pieces meet.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.arcs.len() == 1 {
            match self.arcs[0].piece {
                ExponentPiece::Constant { .. } | ExponentPiece::Trig { .. } => Vec::new(),
                _ => vec![self.arcs[0].start],
            }
        } else {
            self.arcs.iter().map(|a| a.start).collect()
        }
    }

    /// Largest one-sided mismatch over the piece boundaries.
    pub fn max_jump(&self) -> (f64, Option<f64>) {
        self.breakpoints()
            .into_iter()
            .map(|s| ((self.eval_left(s) - self.eval(s)).abs(), Some(s)))
            .fold((0.0, None), |acc, x| if x.0 > acc.0 { x } else { acc })
    }

    pub fn is_continuous(&self) -> bool {
        self.max_jump().0 <= 1e-12
    }

    pub fn conjugate(&self) -> VariableExponent {
        let arcs = self
            .arcs
            .iter()
            .map(|a| ExponentArc { start: a.start, piece: a.piece.conjugate() })
            .collect();
        VariableExponent::new(arcs, self.length).expect("conjugate of a valid exponent is valid")
    }
}

/// Khvedelidze weight `prod_k |t - t_k|^{lambda_k}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct KhvedelidzeWeight {
    marked: Vec<(C64, f64)>,
}

impl KhvedelidzeWeight {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(marked: Vec<(C64, f64)>) -> Result<Self> {
        for (i, a) in marked.iter().enumerate() {
            for b in &marked[i + 1..] {
                if (a.0 - b.0).norm() < 1e-12 {
                    return Err(Error::Domain("weight points must be pairwise distinct".into()));
                }
            }
            if !a.1.is_finite() {
                return Err(Error::Domain("weight exponents must be finite".into()));
            }
        }
        Ok(Self { marked })
    }

    pub fn marked(&self) -> &[(C64, f64)] {
        &self.marked
    }

    pub fn weight_value(&self, t: C64) -> f64 {
        self.marked.iter().map(|(tk, l)| (t - tk).norm().powf(*l)).product()
    }

    /// `lambda_k` when `t` is within `tol` of `t_k`, else 0.
    pub fn lambda_at(&self, t: C64, tol: f64) -> f64 {
        self.marked
            .iter()
            .find(|(tk, _)| (t - tk).norm() <= tol)
            .map_or(0.0, |(_, l)| *l)
    }

    /// Reciprocal weight (all exponents negated).
    pub fn reciprocal(&self) -> Self {
        Self { marked: self.marked.iter().map(|(t, l)| (*t, -l)).collect() }
    }
}

/// The triple (curve, exponent, weight) defining a weighted variable-exponent space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceContext {
    pub curve: CurveModel,
    pub exponent: VariableExponent,
    pub weight: KhvedelidzeWeight,
    weight_params: Vec<f64>,
}

impl SpaceContext {
    pub fn new(curve: CurveModel, exponent: VariableExponent, weight: KhvedelidzeWeight) -> Result<Self> {
        let weight_params = weight
            .marked()
            .iter()
            .map(|(t, _)| curve.require_param(*t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { curve, exponent, weight, weight_params })
    }

    /// Unit circle, `p = 2`, no weight.
    pub fn l2_circle() -> Self {
        Self::new(CurveModel::unit_circle(), VariableExponent::constant(2.0).unwrap(), KhvedelidzeWeight::none())
            .unwrap()
    }

    pub fn tol(&self) -> f64 {
        self.curve.on_curve_tolerance()
    }

    pub fn weight_params(&self) -> &[f64] {
        &self.weight_params
    }

    pub fn lambda_at(&self, t: C64) -> f64 {
        self.weight.lambda_at(t, self.tol())
    }

    pub fn lambda_at_param(&self, s: f64) -> f64 {
        self.lambda_at(self.curve.point(s))
    }

    pub fn exponent_at(&self, t: C64) -> Result<f64> {
        Ok(self.exponent.eval(self.curve.require_param(t)?))
    }

    pub fn whirl_at_param(&self, s: f64) -> f64 {
        match self.curve.family() {
            CurveFamily::Sampled => self.curve.whirl_exponent(self.curve.point(s)).unwrap_or(0.0),
            _ => self.curve.stored_whirl(s),
        }
    }

    /// Space with conjugate exponent and reciprocal weight.
    pub fn dual(&self) -> Self {
        Self {
            curve: self.curve.clone(),
            exponent: self.exponent.conjugate(),
            weight: self.weight.reciprocal(),
            weight_params: self.weight_params.clone(),
        }
    }

    /// True when the space is plain `L^2` on the unit circle.
    pub fn is_l2_circle(&self) -> bool {
        self.curve.is_unit_circle()
            && self.curve.whirl_points().iter().all(|w| w.delta == 0.0)
            && (self.exponent.p_min() - 2.0).abs() < 1e-12
            && (self.exponent.p_max() - 2.0).abs() < 1e-12
            && self.weight.marked().iter().all(|(_, l)| *l == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiniLipschitzReport {
    pub passes: bool,
    pub constant: f64,
    /// Largest `|p(tau)-p(t)| * (-log|tau-t|)` observed; infinite across a jump.
    pub max_ratio: f64,
    /// Parameters of the worst pair.
    pub worst_pair: Option<(f64, f64)>,
    pub continuous: bool,
}

/// Sample count used for the pairwise Dini-Lipschitz scan.
pub const DINI_RESOLUTION: usize = 512;

pub fn check_dini_lipschitz(exponent: &VariableExponent, curve: &CurveModel, constant: f64) -> DiniLipschitzReport {
    let (jump, at) = exponent.max_jump();
    if jump > 1e-12 {
        let s = at.unwrap_or(0.0);
        return DiniLipschitzReport {
            passes: false,
            constant,
            max_ratio: f64::INFINITY,
            worst_pair: Some((s, s)),
            continuous: false,
        };
    }
    let n = DINI_RESOLUTION;
    let params: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let pts: Vec<C64> = params.iter().map(|&s| curve.point(s)).collect();
    let vals: Vec<f64> = params.iter().map(|&s| exponent.eval(s)).collect();
    let (max_ratio, worst) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0, None);
            for j in i + 1..n {
                let d = (pts[i] - pts[j]).norm();
                if d > 0.5 || d == 0.0 {
                    continue;
                }
                let r = (vals[i] - vals[j]).abs() * (-d.ln());
                if r > best.0 {
                    best = (r, Some((params[i], params[j])));
                }
            }
            best
        })
        .reduce(|| (0.0, None), |a, b| if b.0 > a.0 { b } else { a });
    DiniLipschitzReport { passes: max_ratio <= constant, constant, max_ratio, worst_pair: worst, continuous: true }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KhvedelidzeEntry {
    pub index: usize,
    pub param: f64,
    pub exponent: f64,
    pub lambda: f64,
    /// `1/p(t_k) + lambda_k`.
    pub value: f64,
    pub passes: bool,
}

pub fn check_khvedelidze(ctx: &SpaceContext) -> Vec<KhvedelidzeEntry> {
    ctx.weight
        .marked()
        .iter()
        .zip(ctx.weight_params())
        .enumerate()
        .map(|(index, ((_, lambda), &param))| {
            let exponent = ctx.exponent.eval(param);
            let value = 1.0 / exponent + lambda;
            KhvedelidzeEntry { index, param, exponent, lambda: *lambda, value, passes: value > 0.0 && value < 1.0 }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Boundedness {
    pub bounded: bool,
    /// Indices of marked points violating the weight condition.
    pub failing: Vec<usize>,
    pub entries: Vec<KhvedelidzeEntry>,
    pub dini: DiniLipschitzReport,
}

/// Decides boundedness of the Cauchy singular integral on the space.
pub fn s_boundedness(ctx: &SpaceContext, dini_constant: f64) -> Result<Boundedness> {
    let dini = check_dini_lipschitz(&ctx.exponent, &ctx.curve, dini_constant);
    if !dini.passes {
        return Err(Error::HypothesisViolated(format!(
            "exponent fails the Dini-Lipschitz condition with A = {dini_constant} (max ratio {})",
            dini.max_ratio
        )));
    }
    let entries = check_khvedelidze(ctx);
    let failing: Vec<usize> = entries.iter().filter(|e| !e.passes).map(|e| e.index).collect();
    Ok(Boundedness { bounded: failing.is_empty(), failing, entries, dini })
}
