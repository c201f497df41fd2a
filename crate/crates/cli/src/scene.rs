//! Scene documents (`sio-scene/1`) and their resolution into core types.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sio_core::circle_engine::EngineConfig;
use sio_core::dilation::{AlgebraElement, Factor};
use sio_core::geometry::{CurveModel, ExponentArc, KhvedelidzeWeight, SpaceContext, VariableExponent, WhirlPoint};
use sio_core::symbols::{Expr, Laurent, MatrixSymbol, PCSymbol};
use std::collections::BTreeMap;

use crate::CliError;

pub const SCENE_VERSION: &str = "sio-scene/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub version: String,
    #[serde(default)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub exponent: ExponentSpec,
    #[serde(default)]
    pub weight: Vec<WeightSpec>,
    #[serde(default)]
    pub symbols: BTreeMap<String, SymbolSpec>,
    #[serde(default)]
    pub pairs: BTreeMap<String, PairSpec>,
    #[serde(default)]
    pub elements: BTreeMap<String, ElementSpec>,
    #[serde(default)]
    pub factorizations: BTreeMap<String, FactorizationSpec>,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionSpec>,
    #[serde(default)]
    pub engine: EngineSpec,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    #[default]
    UnitCircle,
    Circle {
        center: C64,
        radius: f64,
    },
    SpiralMarked {
        center: C64,
        radius: f64,
        whirl: Vec<WhirlPoint>,
    },
    Sampled {
        vertices: Vec<C64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentSpec {
    Constant(f64),
    Arcs { arcs: Vec<ExponentArc> },
}

impl Default for ExponentSpec {
    fn default() -> Self {
        ExponentSpec::Constant(2.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub point: C64,
    pub lambda: f64,
}

/// Scalar symbol: a name from `symbols`, a real or complex constant, or a tagged form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSpec {
    Name(String),
    Real(f64),
    Complex([f64; 2]),
    Tagged(TaggedSymbol),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaggedSymbol {
    /// `tau^k`.
    Power { k: i64 },
    /// `1` on the upper half circle, `-1` on the lower.
    Sign,
    /// Global Laurent polynomial as `[k, [re, im]]` terms.
    Laurent { terms: Vec<(i64, C64)> },
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<C64> },
    /// Laurent polynomial pieces on the arcs starting at `breaks`.
    Piecewise { breaks: Vec<f64>, pieces: Vec<Vec<(i64, C64)>> },
    /// Fourier truncation of `inner` to degree `degree`.
    Truncated { inner: Box<SymbolSpec>, degree: usize },
}

/// Matrix symbol: a scalar symbol (1 x 1), a full matrix, a diagonal, or the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Full { matrix: Vec<Vec<SymbolSpec>> },
    Diagonal { diag: Vec<SymbolSpec> },
    Identity { identity: usize },
    Scalar(SymbolSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub a: MatrixSpec,
    pub b: MatrixSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub terms: Vec<Vec<PairSpec>>,
}

/// `a = b c1 g c2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationSpec {
    pub b: MatrixSpec,
    pub c1: MatrixSpec,
    pub g: MatrixSpec,
    pub c2: MatrixSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub symbol: SymbolSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    4096
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSpec {
    pub sweep: Vec<usize>,
    pub rank_tol: f64,
    pub gap_tol: f64,
    pub degree_factor: usize,
    pub attach_certificate: bool,
    /// Constant in the Dini-Lipschitz condition.
    pub dini_constant: f64,
    /// Tolerance for identity residuals.
    pub residual_tol: f64,
    /// Bound on `sigma_20 / sigma_1` for the commutator suite.
    pub compact_tol: f64,
    pub norm_tol: f64,
    pub seed: u64,
}

impl Default for EngineSpec {
    fn default() -> Self {
        let e = EngineConfig::default();
        Self {
            sweep: e.sweep,
            rank_tol: e.rank_tol,
            gap_tol: e.gap_tol,
            degree_factor: e.degree_factor,
            attach_certificate: e.attach_certificate,
            dini_constant: 1.0,
            residual_tol: 1e-12,
            compact_tol: 1e-6,
            norm_tol: 1e-12,
            seed: 0,
        }
    }
}

impl EngineSpec {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            sweep: self.sweep.clone(),
            rank_tol: self.rank_tol,
            gap_tol: self.gap_tol,
            degree_factor: self.degree_factor,
            attach_certificate: self.attach_certificate,
        }
    }
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Scene { path: path.to_string(), message: msg.to_string() }
}

fn core_at(path: &str) -> impl Fn(sio_core::Error) -> CliError + '_ {
    move |e| invalid(path, e)
}

impl Scene {
    pub fn parse(text: &str) -> Result<Scene, CliError> {
        let scene: Scene = serde_json::from_str(text).map_err(|e| invalid("$", e))?;
        if scene.version != SCENE_VERSION {
            return Err(invalid("version", format!("expected \"{SCENE_VERSION}\", found \"{}\"", scene.version)));
        }
        Ok(scene)
    }

    pub fn curve(&self) -> Result<CurveModel, CliError> {
        let at = core_at("curve");
        match &self.curve {
            CurveSpec::UnitCircle => Ok(CurveModel::unit_circle()),
            CurveSpec::Circle { center, radius } => CurveModel::circle(*center, *radius).map_err(at),
            CurveSpec::SpiralMarked { center, radius, whirl } => {
                CurveModel::spiral_marked(*center, *radius, whirl.clone()).map_err(at)
            }
            CurveSpec::Sampled { vertices } => CurveModel::sampled(vertices.clone()).map_err(at),
        }
    }

    pub fn context(&self) -> Result<SpaceContext, CliError> {
        let curve = self.curve()?;
        let exponent = match &self.exponent {
            ExponentSpec::Constant(p) => VariableExponent::constant(*p),
            ExponentSpec::Arcs { arcs } => VariableExponent::new(arcs.clone(), curve.length()),
        }
        .map_err(core_at("exponent"))?;
        let weight = KhvedelidzeWeight::new(self.weight.iter().map(|w| (w.point, w.lambda)).collect())
            .map_err(core_at("weight"))?;
        for (i, w) in self.weight.iter().enumerate() {
            curve.require_param(w.point).map_err(|e| invalid(&format!("weight[{i}].point"), e))?;
        }
        SpaceContext::new(curve, exponent, weight).map_err(core_at("weight"))
    }

    pub fn symbol(&self, spec: &SymbolSpec, path: &str) -> Result<PCSymbol, CliError> {
        self.symbol_depth(spec, path, 0)
    }

    fn symbol_depth(&self, spec: &SymbolSpec, path: &str, depth: usize) -> Result<PCSymbol, CliError> {
        if depth > 32 {
            return Err(invalid(path, "symbol references nest too deeply (cycle?)"));
        }
        let at = core_at(path);
        Ok(match spec {
            SymbolSpec::Name(name) => {
                let inner = self
                    .symbols
                    .get(name)
                    .ok_or_else(|| invalid(path, format!("unknown symbol \"{name}\"")))?;
                self.symbol_depth(inner, &format!("symbols.{name}"), depth + 1)?
            }
            SymbolSpec::Real(x) => PCSymbol::real(*x),
            SymbolSpec::Complex([re, im]) => PCSymbol::constant(C64::new(*re, *im)),
            SymbolSpec::Tagged(t) => match t {
                TaggedSymbol::Power { k } => PCSymbol::power(*k),
                TaggedSymbol::Sign => PCSymbol::sign(),
                TaggedSymbol::Laurent { terms } => PCSymbol::laurent(Laurent::from_terms(terms)),
                TaggedSymbol::PiecewiseConstant { breaks, values } => {
                    PCSymbol::piecewise_constant(breaks.clone(), values.clone()).map_err(at)?
                }
                TaggedSymbol::Piecewise { breaks, pieces } => PCSymbol::piecewise(
                    breaks.clone(),
                    pieces.iter().map(|p| Expr::Poly(Laurent::from_terms(p))).collect(),
                )
                .map_err(at)?,
                TaggedSymbol::Truncated { inner, degree } => {
                    self.symbol_depth(inner, &format!("{path}.inner"), depth + 1)?.fourier_truncated(*degree)
                }
            },
        })
    }

    pub fn matrix(&self, spec: &MatrixSpec, path: &str) -> Result<MatrixSymbol, CliError> {
        Ok(match spec {
            MatrixSpec::Scalar(s) => MatrixSymbol::scalar(self.symbol(s, path)?),
            MatrixSpec::Identity { identity } => {
                if *identity == 0 {
                    return Err(invalid(path, "identity size must be at least 1"));
                }
                MatrixSymbol::identity(*identity)
            }
            MatrixSpec::Diagonal { diag } => {
                if diag.is_empty() {
                    return Err(invalid(path, "empty diagonal"));
                }
                MatrixSymbol::diagonal(
                    diag.iter()
                        .enumerate()
                        .map(|(i, s)| self.symbol(s, &format!("{path}.diag[{i}]")))
                        .collect::<Result<_, _>>()?,
                )
            }
            MatrixSpec::Full { matrix } => {
                let n = matrix.len();
                if n == 0 {
                    return Err(invalid(path, "empty matrix"));
                }
                let mut entries = Vec::with_capacity(n * n);
                for (i, row) in matrix.iter().enumerate() {
                    if row.len() != n {
                        return Err(invalid(&format!("{path}.matrix[{i}]"), format!("expected {n} entries, found {}", row.len())));
                    }
                    for (j, s) in row.iter().enumerate() {
                        entries.push(self.symbol(s, &format!("{path}.matrix[{i}][{j}]"))?);
                    }
                }
                MatrixSymbol::new(n, entries).map_err(core_at(path))?
            }
        })
    }

    pub fn pair(&self, name: &str) -> Result<(MatrixSymbol, MatrixSymbol), CliError> {
        let spec = self.pairs.get(name).ok_or_else(|| invalid("pairs", format!("unknown pair \"{name}\"")))?;
        self.pair_spec(spec, &format!("pairs.{name}"))
    }

    fn pair_spec(&self, spec: &PairSpec, path: &str) -> Result<(MatrixSymbol, MatrixSymbol), CliError> {
        let a = self.matrix(&spec.a, &format!("{path}.a"))?;
        let b = self.matrix(&spec.b, &format!("{path}.b"))?;
        if a.size() != b.size() {
            return Err(invalid(path, format!("a is {0}x{0} but b is {1}x{1}", a.size(), b.size())));
        }
        Ok((a, b))
    }

    pub fn element(&self, name: &str) -> Result<AlgebraElement, CliError> {
        let spec = self.elements.get(name).ok_or_else(|| invalid("elements", format!("unknown element \"{name}\"")))?;
        let path = format!("elements.{name}");
        let mut terms = Vec::with_capacity(spec.terms.len());
        for (i, t) in spec.terms.iter().enumerate() {
            let mut factors = Vec::with_capacity(t.len());
            for (l, f) in t.iter().enumerate() {
                let fp = format!("{path}.terms[{i}][{l}]");
                let (a, b) = self.pair_spec(f, &fp)?;
                if a.size() != spec.n {
                    return Err(invalid(&fp, format!("coefficients are {0}x{0}, element declares N = {1}", a.size(), spec.n)));
                }
                factors.push(Factor { a, b });
            }
            terms.push(factors);
        }
        AlgebraElement::new(spec.n, terms).map_err(core_at(&path))
    }

    pub fn factorization(&self, name: &str) -> Result<[MatrixSymbol; 4], CliError> {
        let spec = self
            .factorizations
            .get(name)
            .ok_or_else(|| invalid("factorizations", format!("unknown factorization \"{name}\"")))?;
        let path = format!("factorizations.{name}");
        let parts = [
            self.matrix(&spec.b, &format!("{path}.b"))?,
            self.matrix(&spec.c1, &format!("{path}.c1"))?,
            self.matrix(&spec.g, &format!("{path}.g"))?,
            self.matrix(&spec.c2, &format!("{path}.c2"))?,
        ];
        let n = parts[0].size();
        if parts.iter().any(|m| m.size() != n) {
            return Err(invalid(&path, "all factors must have the same size"));
        }
        Ok(parts)
    }

    pub fn function(&self, name: &str) -> Result<(&FunctionSpec, PCSymbol), CliError> {
        let spec = self.functions.get(name).ok_or_else(|| invalid("functions", format!("unknown function \"{name}\"")))?;
        let sym = self.symbol(&spec.symbol, &format!("functions.{name}.symbol"))?;
        Ok((spec, sym))
    }
}

/// Scene entry reproducing `a`; only Laurent-polynomial pieces can be written out.
pub fn symbol_to_spec(a: &PCSymbol, path: &str) -> Result<SymbolSpec, CliError> {
    let terms = |e: &Expr| -> Result<Vec<(i64, C64)>, CliError> {
        e.as_poly()
            .map(|p| p.terms().collect())
            .ok_or_else(|| invalid(path, "symbol piece is not a Laurent polynomial and cannot be written to a scene"))
    };
    if let Some(p) = a.global_laurent() {
        return Ok(match p.as_constant() {
            Some(c) if c.im == 0.0 => SymbolSpec::Real(c.re),
            Some(c) => SymbolSpec::Complex([c.re, c.im]),
            None => SymbolSpec::Tagged(TaggedSymbol::Laurent { terms: p.terms().collect() }),
        });
    }
    let pieces = a.pieces().iter().map(terms).collect::<Result<Vec<_>, _>>()?;
    Ok(SymbolSpec::Tagged(TaggedSymbol::Piecewise { breaks: a.breakpoints().to_vec(), pieces }))
}

pub fn matrix_to_spec(m: &MatrixSymbol, path: &str) -> Result<MatrixSpec, CliError> {
    let n = m.size();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let row = (0..n)
            .map(|j| symbol_to_spec(m.entry(i, j), &format!("{path}[{i}][{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(MatrixSpec::Full { matrix: rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scene_uses_defaults() {
        let s = Scene::parse(r#"{"version": "sio-scene/1"}"#).unwrap();
        let ctx = s.context().unwrap();
        assert!(ctx.is_l2_circle());
    }

    #[test]
    fn wrong_version_is_rejected() {
        let e = Scene::parse(r#"{"version": "sio-scene/2"}"#).unwrap_err();
        assert!(e.to_string().contains("version"));
    }

    #[test]
    fn symbols_resolve_by_name_and_form() {
        let s = Scene::parse(
            r#"{"version": "sio-scene/1",
                "symbols": {"s": {"kind": "sign"}, "t": {"kind": "power", "k": 2}, "c": [0, 1], "r": "s"},
                "pairs": {"p": {"a": {"diag": ["s", 1.0]}, "b": {"identity": 2}}}}"#,
        )
        .unwrap();
        assert_eq!(s.symbol(&SymbolSpec::Name("r".into()), "x").unwrap(), PCSymbol::sign());
        assert_eq!(s.symbol(&SymbolSpec::Name("c".into()), "x").unwrap(), PCSymbol::constant(C64::new(0.0, 1.0)));
        let (a, b) = s.pair("p").unwrap();
        assert_eq!((a.size(), b.size()), (2, 2));
    }

    #[test]
    fn errors_carry_the_path() {
        let s = Scene::parse(
            r#"{"version": "sio-scene/1", "pairs": {"p": {"a": {"matrix": [["nope"]]}, "b": 1}}}"#,
        )
        .unwrap();
        let e = s.pair("p").unwrap_err().to_string();
        assert!(e.contains("pairs.p.a.matrix[0][0]"), "{e}");
    }

    #[test]
    fn symbols_round_trip_through_specs() {
        let s = Scene::parse(r#"{"version": "sio-scene/1"}"#).unwrap();
        let a = PCSymbol::piecewise(
            vec![0.0, 0.3],
            vec![Expr::Poly(Laurent::from_terms(&[(1, C64::new(2.0, 0.0))])), Expr::constant(C64::new(0.0, -1.0))],
        )
        .unwrap();
        let spec = symbol_to_spec(&a, "x").unwrap();
        assert_eq!(s.symbol(&spec, "x").unwrap(), a);
    }
}
