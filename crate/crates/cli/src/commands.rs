//! Command implementations. Each returns an [`Outcome`]; only `main` touches the filesystem.

use serde::Serialize;
use serde_json::{json, Value};
use sio_core::circle_engine::{
    adjoint_residual, compactness_profile, identity_residual, margin_vectors, riesz_matrices, FourierTruncation,
    OpExpr, OperatorMatrix, SpectralReport,
};
use sio_core::dilation::{dilate, verify_dilation_identity, verify_outer_inverses, AlgebraElement};
use sio_core::fredholm::{classify_algebra_element, classify_pair, classify_scalar, Classification, ClassifyOptions};
use sio_core::geometry::{check_dini_lipschitz, check_khvedelidze, s_boundedness};
use sio_core::symbols::{MatrixSymbol, PCSymbol, DEFAULT_MAX_DEGREE};
use sio_core::vlebesgue::{luxemburg_norm_traced, SampledFunction};
use sio_core::{Error, C64};
use std::collections::BTreeMap;

use crate::scene::{matrix_to_spec, PairSpec, Scene, SCENE_VERSION};
use crate::CliError;

/// One CSV row: sweep size, singular value index, value.
pub type CsvRow = (usize, usize, f64);

#[derive(Debug)]
pub struct Outcome {
    pub verdict: &'static str,
    pub exit_code: i32,
    pub payload: Value,
    pub csv: Vec<CsvRow>,
    /// Scene produced by `dilate`.
    pub emitted: Option<Scene>,
}

impl Outcome {
    fn new(verdict: &'static str, exit_code: i32, payload: Value) -> Self {
        Self { verdict, exit_code, payload, csv: Vec::new(), emitted: None }
    }

    /// Maps a core error raised after the scene was validated.
    fn from_error(e: Error) -> Self {
        let (verdict, code) = match &e {
            Error::HypothesisViolated(_) | Error::Unbounded(_) => ("hypothesis_violated", 3),
            Error::Inconclusive(_) | Error::NumericFailure(_) => ("inconclusive", 4),
            _ => ("error", 1),
        };
        Outcome::new(verdict, code, json!({ "error": e.to_string() }))
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report payloads serialize")
}

pub fn space_check(scene: &Scene) -> Result<Outcome, CliError> {
    let ctx = scene.context()?;
    let a = scene.engine.dini_constant;
    let dini = check_dini_lipschitz(&ctx.exponent, &ctx.curve, a);
    let weight = check_khvedelidze(&ctx);
    let base = json!({ "dini_lipschitz": dini, "khvedelidze": weight });
    Ok(match s_boundedness(&ctx, a) {
        Ok(b) => {
            let mut payload = base;
            payload["boundedness"] = to_value(&b);
            if b.bounded {
                Outcome::new("bounded", 0, payload)
            } else {
                Outcome::new("unbounded", 2, payload)
            }
        }
        Err(e) => {
            let mut out = Outcome::from_error(e);
            out.payload["dini_lipschitz"] = base["dini_lipschitz"].clone();
            out.payload["khvedelidze"] = base["khvedelidze"].clone();
            out
        }
    })
}

enum Target {
    Symbol(PCSymbol),
    Pair(MatrixSymbol, MatrixSymbol),
    Element(AlgebraElement),
}

fn resolve_target(scene: &Scene, name: &str) -> Result<Target, CliError> {
    let found: Vec<&str> = [
        ("symbols", scene.symbols.contains_key(name)),
        ("pairs", scene.pairs.contains_key(name)),
        ("elements", scene.elements.contains_key(name)),
    ]
    .into_iter()
    .filter_map(|(section, hit)| hit.then_some(section))
    .collect();
    match found.as_slice() {
        ["symbols"] => Ok(Target::Symbol(scene.symbol(&crate::scene::SymbolSpec::Name(name.into()), "target")?)),
        ["pairs"] => scene.pair(name).map(|(a, b)| Target::Pair(a, b)),
        ["elements"] => scene.element(name).map(Target::Element),
        [] => Err(CliError::Scene { path: "target".into(), message: format!("no symbol, pair or element named \"{name}\"") }),
        many => Err(CliError::Scene {
            path: "target".into(),
            message: format!("\"{name}\" is ambiguous: defined in {}", many.join(", ")),
        }),
    }
}

fn options(scene: &Scene) -> ClassifyOptions {
    ClassifyOptions {
        dini_constant: scene.engine.dini_constant,
        engine: scene.engine.config(),
        max_degree: DEFAULT_MAX_DEGREE,
    }
}

fn sweep_rows(report: &SpectralReport) -> Vec<CsvRow> {
    report
        .entries
        .iter()
        .flat_map(|e| e.singular_values.iter().enumerate().map(move |(i, s)| (e.n, i, *s)))
        .collect()
}

pub fn classify(scene: &Scene, target: &str) -> Result<Outcome, CliError> {
    let ctx = scene.context()?;
    let opts = options(scene);
    let (kind, result) = match resolve_target(scene, target)? {
        Target::Symbol(a) => ("symbol", classify_scalar(&a, &ctx, &opts)),
        Target::Pair(a, b) => ("pair", classify_pair(&a, &b, &ctx, &opts)),
        Target::Element(e) => ("element", classify_algebra_element(&e, &ctx, &opts)),
    };
    Ok(match result {
        Ok(c) => classification_outcome(kind, &c),
        Err(e) => {
            let mut out = Outcome::from_error(e);
            out.payload["kind"] = json!(kind);
            out
        }
    })
}

fn classification_outcome(kind: &str, c: &Classification) -> Outcome {
    let payload = json!({ "kind": kind, "classification": c });
    let mut out = if c.is_fredholm() {
        Outcome::new("fredholm", 0, payload)
    } else {
        Outcome::new("not_semi_fredholm", 2, payload)
    };
    out.csv = c.evidence.as_ref().map(sweep_rows).unwrap_or_default();
    out
}

pub fn dilate_element(scene: &Scene, target: &str) -> Result<Outcome, CliError> {
    let e = scene.element(target)?;
    let res = match dilate(&e) {
        Ok(r) => r,
        Err(err) => return Ok(Outcome::from_error(err)),
    };
    let pair = PairSpec { a: matrix_to_spec(&res.a, "dilated.a")?, b: matrix_to_spec(&res.b, "dilated.b")? };
    let emitted = Scene {
        version: SCENE_VERSION.to_string(),
        curve: scene.curve.clone(),
        exponent: scene.exponent.clone(),
        weight: scene.weight.clone(),
        symbols: BTreeMap::new(),
        pairs: BTreeMap::from([(target.to_string(), pair)]),
        elements: BTreeMap::new(),
        factorizations: BTreeMap::new(),
        functions: BTreeMap::new(),
        engine: scene.engine.clone(),
    };
    let payload = json!({
        "element": target,
        "N": e.size(),
        "k": e.k(),
        "r": e.r(),
        "D": res.d,
        "layout": res.layout,
        "scene": emitted,
    });
    let mut out = Outcome::new("dilated", 0, payload);
    out.emitted = Some(emitted);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Projections,
    Adjoint,
    Duality,
    Factorization,
    Dilation,
    Commutator,
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    n: usize,
    residual: f64,
    tol: f64,
    passes: bool,
}

impl Check {
    fn new(name: impl Into<String>, n: usize, residual: f64, tol: f64) -> Self {
        Self { name: name.into(), n, residual, tol, passes: residual <= tol }
    }
}

fn max_deviation(m: &OperatorMatrix, identity: bool) -> f64 {
    let rows = m.data.nrows();
    m.data
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let diag = identity && k % rows == k / rows;
            (z - if diag { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm()
        })
        .fold(0.0, f64::max)
}

fn difference(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    a.data.iter().zip(b.data.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Scalar or matrix symbols named by `target`, or every symbol and pair coefficient in the scene.
fn coefficient_targets(scene: &Scene, target: Option<&str>) -> Result<Vec<(String, MatrixSymbol)>, CliError> {
    let mut out = Vec::new();
    let named = |name: &str| -> Result<Vec<(String, MatrixSymbol)>, CliError> {
        Ok(match resolve_target(scene, name)? {
            Target::Symbol(a) => vec![(name.to_string(), MatrixSymbol::scalar(a))],
            Target::Pair(a, _) => vec![(format!("{name}.a"), a)],
            Target::Element(_) => {
                return Err(CliError::Scene {
                    path: "target".into(),
                    message: format!("\"{name}\" is an element; this suite needs a symbol or pair"),
                })
            }
        })
    };
    match target {
        Some(name) => out.extend(named(name)?),
        None => {
            for name in scene.symbols.keys().chain(scene.pairs.keys()) {
                out.extend(named(name)?);
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Scene { path: "symbols".into(), message: "suite needs at least one symbol or pair".into() });
    }
    Ok(out)
}

fn truncation(n: usize, block: usize) -> Result<FourierTruncation, CliError> {
    FourierTruncation::new(n, block).map_err(|e| CliError::Scene { path: "engine.sweep".into(), message: e.to_string() })
}

fn mul(a: &MatrixSymbol) -> OpExpr {
    OpExpr::mul(a.clone())
}

/// `(P + Q a, (I + P a^{-1} Q)(a^{-1} P + Q)(I - Q a^{-1} P) a)`.
fn scalar_duality_sides(a: &MatrixSymbol, a_inv: &MatrixSymbol) -> (OpExpr, OpExpr) {
    let lhs = OpExpr::P.plus(OpExpr::Q.then(mul(a)));
    let rhs = OpExpr::Product(vec![
        OpExpr::Identity.plus(OpExpr::Product(vec![OpExpr::P, mul(a_inv), OpExpr::Q])),
        OpExpr::pair(a_inv, &MatrixSymbol::identity(a.size())),
        OpExpr::Identity.minus(OpExpr::Product(vec![OpExpr::Q, mul(a_inv), OpExpr::P])),
        mul(a),
    ]);
    (lhs, rhs)
}

/// `(P a^T + Q, (I + P a^T Q)(a^T P + Q)(I - Q a^T P))`.
fn transpose_duality_sides(a: &MatrixSymbol) -> (OpExpr, OpExpr) {
    let t = a.transpose();
    let lhs = OpExpr::P.then(mul(&t)).plus(OpExpr::Q);
    let rhs = OpExpr::Product(vec![
        OpExpr::Identity.plus(OpExpr::Product(vec![OpExpr::P, mul(&t), OpExpr::Q])),
        OpExpr::pair(&t, &MatrixSymbol::identity(a.size())),
        OpExpr::Identity.minus(OpExpr::Product(vec![OpExpr::Q, mul(&t), OpExpr::P])),
    ]);
    (lhs, rhs)
}

/// `b c1 [(gP + Q)(P c2 + Q c1^{-1}) + g(c2 P - P c2) + (c1^{-1} Q - Q c1^{-1})]`.
fn factorization_rhs(b: &MatrixSymbol, c1: &MatrixSymbol, g: &MatrixSymbol, c2: &MatrixSymbol, c1_inv: &MatrixSymbol) -> OpExpr {
    let bracket = OpExpr::Sum(vec![
        OpExpr::Product(vec![
            OpExpr::pair(g, &MatrixSymbol::identity(g.size())),
            OpExpr::P.then(mul(c2)).plus(OpExpr::Q.then(mul(c1_inv))),
        ]),
        mul(g).then(mul(c2).then(OpExpr::P).minus(OpExpr::P.then(mul(c2)))),
        mul(c1_inv).then(OpExpr::Q).minus(OpExpr::Q.then(mul(c1_inv))),
    ]);
    OpExpr::Product(vec![mul(b), mul(c1), bracket])
}

const IDENTITY_VECTORS: usize = 8;

fn residual_check(name: String, lhs: &OpExpr, rhs: &OpExpr, trunc: &FourierTruncation, seed: u64, tol: f64) -> Result<Check, Error> {
    let xs = margin_vectors(trunc.block(), trunc.n() / 2, IDENTITY_VECTORS, seed);
    let r = identity_residual(lhs, rhs, trunc, &xs)?;
    Ok(Check::new(name, trunc.n(), r.residual, tol))
}

pub fn verify(scene: &Scene, suite: Suite, target: Option<&str>) -> Result<Outcome, CliError> {
    let eng = &scene.engine;
    let tol = eng.residual_tol;
    let seed = eng.seed;
    let mut checks = Vec::new();
    let mut csv = Vec::new();
    let run = |checks: &mut Vec<Check>, csv: &mut Vec<CsvRow>| -> Result<(), CliError> {
        let core = |e: Error| -> CliError { CliError::Core(e) };
        match suite {
            Suite::Projections => {
                for &n in &eng.sweep {
                    let (p, q, s) = riesz_matrices(&truncation(n, 1)?);
                    let pp = p.compose(&p).map_err(core)?;
                    let qq = q.compose(&q).map_err(core)?;
                    checks.push(Check::new("P^2 = P", n, difference(&pp, &p), tol));
                    checks.push(Check::new("Q^2 = Q", n, difference(&qq, &q), tol));
                    checks.push(Check::new("PQ = 0", n, max_deviation(&p.compose(&q).map_err(core)?, false), tol));
                    checks.push(Check::new("S^2 = I", n, max_deviation(&s.compose(&s).map_err(core)?, true), tol));
                }
            }
            Suite::Adjoint => {
                for &n in &eng.sweep {
                    let r = adjoint_residual(&truncation(n, 1)?, seed).map_err(core)?;
                    checks.push(Check::new("S* = -H S H", n, r, tol));
                }
            }
            Suite::Duality => {
                for (name, a) in coefficient_targets(scene, target)? {
                    let a_inv = a.inverse().map_err(core)?;
                    let scalar = scalar_duality_sides(&a, &a_inv);
                    let transposed = transpose_duality_sides(&a);
                    for &n in &eng.sweep {
                        let trunc = truncation(n, a.size())?;
                        let (l, r) = &scalar;
                        checks.push(residual_check(format!("{name}: P + Q a"), l, r, &trunc, seed, tol).map_err(core)?);
                        let (l, r) = &transposed;
                        checks.push(residual_check(format!("{name}: P a^T + Q"), l, r, &trunc, seed, tol).map_err(core)?);
                    }
                }
            }
            Suite::Factorization => {
                let names: Vec<String> = match target {
                    Some(t) => vec![t.to_string()],
                    None => scene.factorizations.keys().cloned().collect(),
                };
                if names.is_empty() {
                    return Err(CliError::Scene { path: "factorizations".into(), message: "suite needs at least one factorization".into() });
                }
                for name in names {
                    let [b, c1, g, c2] = scene.factorization(&name)?;
                    let (bc1, _) = b.multiply(&c1, DEFAULT_MAX_DEGREE).map_err(core)?;
                    let (bc1g, _) = bc1.multiply(&g, DEFAULT_MAX_DEGREE).map_err(core)?;
                    let (a, _) = bc1g.multiply(&c2, DEFAULT_MAX_DEGREE).map_err(core)?;
                    let c1_inv = c1.inverse().map_err(core)?;
                    let lhs = OpExpr::pair(&a, &b);
                    let rhs = factorization_rhs(&b, &c1, &g, &c2, &c1_inv);
                    for &n in &eng.sweep {
                        let trunc = truncation(n, b.size())?;
                        checks.push(residual_check(format!("{name}: aP + bQ"), &lhs, &rhs, &trunc, seed, tol).map_err(core)?);
                    }
                }
            }
            Suite::Dilation => {
                let names: Vec<String> = match target {
                    Some(t) => vec![t.to_string()],
                    None => scene.elements.keys().cloned().collect(),
                };
                if names.is_empty() {
                    return Err(CliError::Scene { path: "elements".into(), message: "suite needs at least one element".into() });
                }
                let n = *eng.sweep.iter().max().expect("sweep is validated non-empty");
                for name in names {
                    let e = scene.element(&name)?;
                    let r = verify_dilation_identity(&e, n, seed).map_err(core)?;
                    checks.push(Check::new(format!("{name}: dilation identity"), n, r, tol));
                    let r = verify_outer_inverses(&e, n, seed).map_err(core)?;
                    checks.push(Check::new(format!("{name}: outer factor inverses"), n, r, tol));
                }
            }
            Suite::Commutator => {
                let n = *eng.sweep.iter().max().expect("sweep is validated non-empty");
                for (name, c) in coefficient_targets(scene, target)? {
                    let e = mul(&c).then(OpExpr::P).minus(OpExpr::P.then(mul(&c)));
                    let profile = compactness_profile(&e, &truncation(n, c.size())?, &eng.config()).map_err(core)?;
                    csv.extend(profile.singular_values.iter().enumerate().map(|(i, s)| (n, i, *s)));
                    checks.push(Check::new(format!("{name}: sigma_20 / sigma_1 of cP - PcI"), n, profile.ratio_20_1, eng.compact_tol));
                }
            }
        }
        Ok(())
    };
    match run(&mut checks, &mut csv) {
        Ok(()) => {}
        Err(CliError::Core(e)) => {
            let mut out = Outcome::from_error(e);
            out.payload["suite"] = to_value(&suite);
            return Ok(out);
        }
        Err(e) => return Err(e),
    }
    let passes = checks.iter().all(|c| c.passes);
    let worst = checks.iter().map(|c| c.residual).fold(0.0, f64::max);
    let payload = json!({ "suite": suite, "passes": passes, "max_residual": worst, "checks": checks });
    let mut out = if passes { Outcome::new("pass", 0, payload) } else { Outcome::new("fail", 2, payload) };
    out.csv = csv;
    Ok(out)
}

pub fn norm(scene: &Scene, target: &str) -> Result<Outcome, CliError> {
    let ctx = scene.context()?;
    let (spec, sym) = scene.function(target)?;
    let result = SampledFunction::from_symbol(&ctx.curve, spec.samples, &sym)
        .and_then(|f| luxemburg_norm_traced(&f, &ctx, scene.engine.norm_tol));
    Ok(match result {
        Ok(o) => Outcome::new("ok", 0, json!({ "function": target, "samples": spec.samples, "norm": o.norm, "outcome": o })),
        Err(e) => Outcome::from_error(e),
    })
}
