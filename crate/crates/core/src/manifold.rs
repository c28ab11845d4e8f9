//! Declarative accR manifold definitions.
//!
//! A manifold is one chart with expression-valued components for the metric
//! g, the (1,1) tensor φ, the Reeb field ξ and the contact form η. Files are
//! UTF-8 JSON:
//!
//! ```json
//! {"n": 1, "coordinates": ["t","u","v"], "domain": {"t": [0.5, 5], ...},
//!  "constants": ["c"], "g": [[...]], "phi": [[...]], "xi": [...], "eta": [...]}
//! ```
//!
//! `phi` rows are the output index: φ(∂ⱼ) = Σᵢ phi[i][j] ∂ᵢ.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{BinOp, ConstantBindings, EvalError, Expression, Node, ParseError};
use crate::jets::{Func, Jet2, MAX_DIM};
use crate::tensor::{signature, MetricAtPoint, PointTensor, TensorError, Variance};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("malformed manifold file: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("in {field}: {error}")]
    Syntax { field: String, error: ParseError },
    #[error("in {field}: unknown identifier `{name}`")]
    UnknownIdentifier { field: String, name: String },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("metric is not symmetric: g[{0}][{1}] differs from g[{1}][{0}]")]
    Asymmetric(usize, usize),
    #[error("unknown builtin manifold `{0}`")]
    UnknownName(String),
    #[error("constant `{0}` is used but not bound")]
    UnboundConstant(String),
    #[error("point {0:?} is not strictly inside the domain box")]
    OutsideDomain(Vec<f64>),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("potential is not vertical: {0}")]
    NotVertical(String),
    #[error("potential vanishes at {0:?}")]
    PotentialVanishes(Vec<f64>),
}

/// Which of the two B-metrics a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricTag {
    #[serde(rename = "g")]
    G,
    #[serde(rename = "gtilde")]
    GTilde,
}

impl fmt::Display for MetricTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricTag::G => "g",
            MetricTag::GTilde => "gtilde",
        })
    }
}

impl std::str::FromStr for MetricTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "g" => Ok(MetricTag::G),
            "gtilde" | "g-tilde" => Ok(MetricTag::GTilde),
            other => Err(format!("unknown metric `{other}` (expected g or gtilde)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub n: usize,
    pub coordinates: Vec<String>,
    /// Open interval per coordinate.
    pub domain: Vec<(f64, f64)>,
    /// Declared constant names.
    pub constants: Vec<String>,
    pub bindings: ConstantBindings,
}

impl Chart {
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(&self.domain)
                .all(|(x, (lo, hi))| x.is_finite() && lo < x && x < hi)
    }

    /// Deterministic Latin-hypercube samples strictly inside the domain box.
    pub fn latin_hypercube(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let mut points = vec![vec![0.0; d]; count];
        for (axis, (lo, hi)) in self.domain.iter().enumerate() {
            let mut strata: Vec<usize> = (0..count).collect();
            strata.shuffle(&mut rng);
            for (p, s) in points.iter_mut().zip(strata) {
                let u: f64 = rng.sample(rand::distributions::Open01);
                p[axis] = lo + (hi - lo) * (s as f64 + u) / count as f64;
            }
        }
        // Guard against rounding onto a boundary.
        for p in &mut points {
            for (x, (lo, hi)) in p.iter_mut().zip(&self.domain) {
                *x = x.clamp(lo + (hi - lo) * 1e-12, hi - (hi - lo) * 1e-12);
            }
        }
        points
    }

    /// Parses an expression in this chart's coordinates and constants.
    pub fn parse(&self, source: &str) -> Result<Expression, ParseError> {
        self.parse_with(source, &[])
    }

    /// Parses allowing additional constant names besides the declared ones.
    pub fn parse_with(&self, source: &str, extra_constants: &[String]) -> Result<Expression, ParseError> {
        let mut constants = self.constants.clone();
        constants.extend(extra_constants.iter().cloned());
        Expression::parse(source, &self.coordinates, &constants)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldFile {
    #[serde(default)]
    name: Option<String>,
    n: usize,
    coordinates: Vec<String>,
    domain: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    constants: Vec<String>,
    g: Vec<Vec<String>>,
    phi: Vec<Vec<String>>,
    xi: Vec<String>,
    eta: Vec<String>,
}

/// Numeric values of the structure at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureValues {
    /// (0,2)
    pub g: PointTensor,
    /// (1,1), `phi.get(&[i, j]) = φ^i_j`
    pub phi: PointTensor,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl StructureValues {
    pub fn apply_phi(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        (0..d)
            .map(|i| (0..d).map(|j| self.phi.get(&[i, j]) * x[j]).sum())
            .collect()
    }

    pub fn eta_of(&self, x: &[f64]) -> f64 {
        self.eta.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = x.len();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += x[i] * self.g.get(&[i, j]) * y[j];
            }
        }
        s
    }
}

/// Second-order jets of every structure component at a point.
#[derive(Debug, Clone)]
pub struct StructureJets {
    pub dim: usize,
    /// Row-major d×d.
    pub g: Vec<Jet2>,
    /// Row-major d×d, `phi[i*d + j] = φ^i_j`.
    pub phi: Vec<Jet2>,
    pub xi: Vec<Jet2>,
    pub eta: Vec<Jet2>,
}

impl StructureJets {
    /// Replaces g by the associated metric g̃(x,y) = g(x,φy) + η(x)η(y),
    /// assembled with jet product rules.
    pub fn with_associated_metric(mut self) -> Self {
        self.g = associated_metric_jets(&self.g, &self.phi, &self.eta, self.dim);
        self
    }
}

fn associated_metric_jets(g: &[Jet2], phi: &[Jet2], eta: &[Jet2], d: usize) -> Vec<Jet2> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = eta[i] * eta[j];
            for k in 0..d {
                acc = acc + g[i * d + k] * phi[k * d + j];
            }
            out.push(acc);
        }
    }
    out
}

/// An almost contact B-metric structure on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct AccRStructure {
    pub name: String,
    pub chart: Chart,
    pub g: Vec<Expression>,
    pub phi: Vec<Expression>,
    pub xi: Vec<Expression>,
    pub eta: Vec<Expression>,
}

pub const BUILTIN_NAMES: [&str; 2] = ["cone-flat-fiber", "flat-cosymplectic"];

const CONE_FLAT_FIBER: &str = include_str!("../manifolds/cone-flat-fiber.json");
const FLAT_COSYMPLECTIC: &str = include_str!("../manifolds/flat-cosymplectic.json");

/// Loads one of the shipped manifolds.
pub fn builtin(name: &str) -> Result<AccRStructure, ManifoldError> {
    let source = match name {
        "cone-flat-fiber" => CONE_FLAT_FIBER,
        "flat-cosymplectic" => FLAT_COSYMPLECTIC,
        other => return Err(ManifoldError::UnknownName(other.to_string())),
    };
    let mut s = load_manifold(source.as_bytes())?;
    s.name = name.to_string();
    Ok(s)
}

/// Raw JSON of a shipped manifold.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    match name {
        "cone-flat-fiber" => Some(CONE_FLAT_FIBER),
        "flat-cosymplectic" => Some(FLAT_COSYMPLECTIC),
        _ => None,
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn load_manifold(bytes: &[u8]) -> Result<AccRStructure, ManifoldError> {
    let file: ManifoldFile = serde_json::from_slice(bytes).map_err(|e| ManifoldError::Parse(e.to_string()))?;
    if file.n == 0 {
        return Err(ManifoldError::DimensionMismatch("n must be at least 1".into()));
    }
    let d = file.coordinates.len();
    if d.is_multiple_of(2) {
        return Err(ManifoldError::DimensionMismatch(format!(
            "{d} coordinates: dimension must be odd"
        )));
    }
    if d != 2 * file.n + 1 {
        return Err(ManifoldError::DimensionMismatch(format!(
            "{d} coordinates but n = {} requires {}",
            file.n,
            2 * file.n + 1
        )));
    }
    if d > MAX_DIM {
        return Err(ManifoldError::DimensionMismatch(format!(
            "dimension {d} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let mut names: Vec<&String> = file.coordinates.iter().chain(&file.constants).collect();
    for name in &names {
        if !is_identifier(name) || Func::from_name(name).is_some() {
            return Err(ManifoldError::InvalidChart(format!("`{name}` is not a usable name")));
        }
    }
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(ManifoldError::InvalidChart(
            "coordinate and constant names must be distinct".into(),
        ));
    }
    let mut domain = Vec::with_capacity(d);
    for c in &file.coordinates {
        let [lo, hi] = *file
            .domain
            .get(c)
            .ok_or_else(|| ManifoldError::InvalidChart(format!("no domain for coordinate `{c}`")))?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ManifoldError::InvalidChart(format!("empty interval for `{c}`")));
        }
        domain.push((lo, hi));
    }
    if let Some(extra) = file.domain.keys().find(|k| !file.coordinates.contains(k)) {
        return Err(ManifoldError::InvalidChart(format!(
            "domain names unknown coordinate `{extra}`"
        )));
    }
    let chart = Chart {
        n: file.n,
        coordinates: file.coordinates,
        domain,
        constants: file.constants,
        bindings: ConstantBindings::new(),
    };

    let parse_field = |field: String, src: &str| -> Result<Expression, ManifoldError> {
        chart.parse(src).map_err(|error| match error {
            ParseError::UnknownIdentifier { name, .. } => ManifoldError::UnknownIdentifier { field, name },
            error => ManifoldError::Syntax { field, error },
        })
    };
    let parse_matrix = |label: &str, rows: &[Vec<String>]| -> Result<Vec<Expression>, ManifoldError> {
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(ManifoldError::DimensionMismatch(format!("`{label}` must be {d}×{d}")));
        }
        let mut out = Vec::with_capacity(d * d);
        for (i, row) in rows.iter().enumerate() {
            for (j, src) in row.iter().enumerate() {
                out.push(parse_field(format!("{label}[{i}][{j}]"), src)?);
            }
        }
        Ok(out)
    };
    let parse_vector = |label: &str, items: &[String]| -> Result<Vec<Expression>, ManifoldError> {
        if items.len() != d {
            return Err(ManifoldError::DimensionMismatch(format!(
                "`{label}` must have {d} entries"
            )));
        }
        items
            .iter()
            .enumerate()
            .map(|(i, src)| parse_field(format!("{label}[{i}]"), src))
            .collect()
    };

    let g = parse_matrix("g", &file.g)?;
    for i in 0..d {
        for j in (i + 1)..d {
            if g[i * d + j].node() != g[j * d + i].node() {
                return Err(ManifoldError::Asymmetric(i, j));
            }
        }
    }
    let phi = parse_matrix("phi", &file.phi)?;
    let xi = parse_vector("xi", &file.xi)?;
    let eta = parse_vector("eta", &file.eta)?;
    Ok(AccRStructure {
        name: file.name.unwrap_or_else(|| "file".into()),
        chart,
        g,
        phi,
        xi,
        eta,
    })
}

/// Per-identity maximum residuals of the structure equations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub residuals: Vec<IdentityResidual>,
    pub signature_ok: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub formula: &'static str,
    pub max_residual: f64,
    pub per_sample: Vec<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.signature_ok && self.residuals.iter().all(|r| r.max_residual <= self.tolerance)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.max_residual)
    }
}

impl AccRStructure {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn n(&self) -> usize {
        self.chart.n
    }

    fn expressions(&self) -> impl Iterator<Item = &Expression> {
        self.g.iter().chain(&self.phi).chain(&self.xi).chain(&self.eta)
    }

    /// Constants referenced by any component expression.
    pub fn used_constants(&self) -> Vec<String> {
        let mut all: Vec<String> = self.expressions().flat_map(|e| e.constants()).collect();
        all.sort();
        all.dedup();
        all
    }

    /// Attaches constant values; every constant used by a component must be bound.
    pub fn bind(mut self, bindings: &ConstantBindings) -> Result<Self, ManifoldError> {
        self.chart.bindings = self.chart.bindings.merged(bindings);
        if let Some(missing) = self
            .used_constants()
            .into_iter()
            .find(|c| !self.chart.bindings.contains(c))
        {
            return Err(ManifoldError::UnboundConstant(missing));
        }
        Ok(self)
    }

    pub fn bindings(&self) -> &ConstantBindings {
        &self.chart.bindings
    }

    /// Fails unless the point lies strictly inside the open domain box.
    pub fn check_point(&self, point: &[f64]) -> Result<(), ManifoldError> {
        if self.chart.contains(point) {
            Ok(())
        } else {
            Err(ManifoldError::OutsideDomain(point.to_vec()))
        }
    }

    pub fn values_at(&self, point: &[f64]) -> Result<StructureValues, ManifoldError> {
        self.check_point(point)?;
        self.values_unchecked(point)
    }

    /// Like [`AccRStructure::values_at`] without the domain-box check, for
    /// finite-difference stencils that may step just outside the box.
    pub fn values_unchecked(&self, point: &[f64]) -> Result<StructureValues, ManifoldError> {
        let d = self.dim();
        let b = &self.chart.bindings;
        let eval =
            |es: &[Expression]| -> Result<Vec<f64>, EvalError> { es.iter().map(|e| e.eval_number(point, b)).collect() };
        Ok(StructureValues {
            g: PointTensor::from_components(d, vec![Variance::Lower, Variance::Lower], eval(&self.g)?)?,
            phi: PointTensor::from_components(d, vec![Variance::Upper, Variance::Lower], eval(&self.phi)?)?,
            xi: eval(&self.xi)?,
            eta: eval(&self.eta)?,
        })
    }

    pub fn jets_at(&self, point: &[f64]) -> Result<StructureJets, ManifoldError> {
        self.check_point(point)?;
        let b = &self.chart.bindings;
        let eval =
            |es: &[Expression]| -> Result<Vec<Jet2>, EvalError> { es.iter().map(|e| e.eval_jet(point, b)).collect() };
        Ok(StructureJets {
            dim: self.dim(),
            g: eval(&self.g)?,
            phi: eval(&self.phi)?,
            xi: eval(&self.xi)?,
            eta: eval(&self.eta)?,
        })
    }

    /// Structure jets with the metric selected by `tag`.
    pub fn metric_jets_at(&self, point: &[f64], tag: MetricTag) -> Result<StructureJets, ManifoldError> {
        let jets = self.jets_at(point)?;
        Ok(match tag {
            MetricTag::G => jets,
            MetricTag::GTilde => jets.with_associated_metric(),
        })
    }

    /// The metric selected by `tag` at a point, with inverse and signature.
    pub fn metric_at(&self, point: &[f64], tag: MetricTag) -> Result<MetricAtPoint, ManifoldError> {
        let v = self.values_at(point)?;
        let g = match tag {
            MetricTag::G => v.g,
            MetricTag::GTilde => associated_metric_values(&v),
        };
        Ok(MetricAtPoint::new(g)?)
    }

    pub fn associated_metric(&self) -> AssociatedMetric<'_> {
        AssociatedMetric { structure: self }
    }

    /// Residuals of φξ = 0, φ² = −ι + η⊗ξ, η∘φ = 0, η(ξ) = 1,
    /// g(φx,φy) = −g(x,y) + η(x)η(y), g(x,ξ) = η(x), g(ξ,ξ) = 1 and the
    /// signature (n+1, n) at every sample point.
    pub fn validate_structure(&self, samples: &[Vec<f64>]) -> Result<ValidationReport, ManifoldError> {
        self.validate_with_tolerance(samples, tolerance::DIFFERENTIAL)
    }

    pub fn validate_with_tolerance(&self, samples: &[Vec<f64>], tol: f64) -> Result<ValidationReport, ManifoldError> {
        let expected = (self.n() + 1, self.n());
        let mut per_identity: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); IDENTITIES.len()];
        let mut signature_ok = true;
        for p in samples {
            let v = self.values_at(p)?;
            for (k, r) in structure_residuals(&v).into_iter().enumerate() {
                per_identity[k].push(r);
            }
            signature_ok &= signature(&v.g) == expected;
        }
        let residuals = IDENTITIES
            .iter()
            .zip(per_identity)
            .map(|((name, formula), per_sample)| IdentityResidual {
                name,
                formula,
                max_residual: per_sample.iter().fold(0.0, |m: f64, r| m.max(*r)),
                per_sample,
            })
            .collect();
        Ok(ValidationReport {
            residuals,
            signature_ok,
            tolerance: tol,
        })
    }
}

pub const IDENTITIES: [(&str, &str); 8] = [
    ("phi_xi", "phi xi = 0"),
    ("phi_squared", "phi^2 = -id + eta (x) xi"),
    ("eta_phi", "eta o phi = 0"),
    ("eta_xi", "eta(xi) = 1"),
    ("metric_compatibility", "g(phi x, phi y) = -g(x,y) + eta(x) eta(y)"),
    ("g_xi_eta", "g(x, xi) = eta(x)"),
    ("g_xi_xi", "g(xi, xi) = 1"),
    ("phi_self_adjoint", "g(phi x, y) = g(x, phi y)"),
];

/// Residuals in the order of [`IDENTITIES`], componentwise max in coordinates.
pub fn structure_residuals(v: &StructureValues) -> [f64; 8] {
    let d = v.xi.len();
    let phi = |i: usize, j: usize| v.phi.get(&[i, j]);
    let g = |i: usize, j: usize| v.g.get(&[i, j]);
    let mut r = [0.0f64; 8];
    for i in 0..d {
        let phi_xi: f64 = (0..d).map(|j| phi(i, j) * v.xi[j]).sum();
        r[0] = r[0].max(phi_xi.abs());
        let eta_phi: f64 = (0..d).map(|k| v.eta[k] * phi(k, i)).sum();
        r[2] = r[2].max(eta_phi.abs());
        let g_xi: f64 = (0..d).map(|j| g(i, j) * v.xi[j]).sum();
        r[5] = r[5].max((g_xi - v.eta[i]).abs());
        for j in 0..d {
            let sq: f64 = (0..d).map(|k| phi(i, k) * phi(k, j)).sum();
            let delta = if i == j { 1.0 } else { 0.0 };
            r[1] = r[1].max((sq + delta - v.xi[i] * v.eta[j]).abs());
            let mut gpp = 0.0;
            for a in 0..d {
                for b in 0..d {
                    gpp += phi(a, i) * g(a, b) * phi(b, j);
                }
            }
            r[4] = r[4].max((gpp + g(i, j) - v.eta[i] * v.eta[j]).abs());
            let lhs: f64 = (0..d).map(|a| phi(a, i) * g(a, j)).sum();
            let rhs: f64 = (0..d).map(|a| g(i, a) * phi(a, j)).sum();
            r[7] = r[7].max((lhs - rhs).abs());
        }
    }
    r[3] = (v.eta_of(&v.xi) - 1.0).abs();
    r[6] = (v.inner(&v.xi, &v.xi) - 1.0).abs();
    r
}

/// g̃(x,y) = g(x,φy) + η(x)η(y) from numeric values.
pub fn associated_metric_values(v: &StructureValues) -> PointTensor {
    let d = v.xi.len();
    PointTensor::from_fn(d, vec![Variance::Lower, Variance::Lower], |ij| {
        let (i, j) = (ij[0], ij[1]);
        (0..d).map(|k| v.g.get(&[i, k]) * v.phi.get(&[k, j])).sum::<f64>() + v.eta[i] * v.eta[j]
    })
}

/// Evaluator for the associated metric g̃.
pub struct AssociatedMetric<'a> {
    structure: &'a AccRStructure,
}

impl AssociatedMetric<'_> {
    pub fn at(&self, point: &[f64]) -> Result<PointTensor, ManifoldError> {
        Ok(associated_metric_values(&self.structure.values_at(point)?))
    }

    pub fn jets(&self, point: &[f64]) -> Result<Vec<Jet2>, ManifoldError> {
        Ok(self.structure.jets_at(point)?.with_associated_metric().g)
    }
}

/// A soliton potential as supplied by the user.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// ϑ = kξ
    Vertical(Expression),
    /// Arbitrary vector field components ϑ^i.
    Field(Vec<Expression>),
}

impl Potential {
    /// Coordinate components of ϑ as jets.
    pub fn jets_at(&self, s: &AccRStructure, point: &[f64]) -> Result<Vec<Jet2>, ManifoldError> {
        let b = s.bindings();
        match self {
            Potential::Vertical(k) => {
                let k = k.eval_jet(point, b)?;
                s.xi.iter()
                    .map(|x| Ok(k * x.eval_jet(point, b)?))
                    .collect::<Result<Vec<_>, EvalError>>()
                    .map_err(Into::into)
            }
            Potential::Field(components) => components
                .iter()
                .map(|c| c.eval_jet(point, b))
                .collect::<Result<Vec<_>, _>>()
                .map_err(Into::into),
        }
    }

    /// Checks that ϑ is collinear with ξ and nowhere zero on the samples,
    /// returning ϑ = kξ with k = η(ϑ).
    pub fn into_vertical(
        self,
        s: &AccRStructure,
        target: MetricTag,
        samples: &[Vec<f64>],
    ) -> Result<VerticalPotential, ManifoldError> {
        let k = match self {
            Potential::Vertical(k) => k,
            Potential::Field(components) => {
                for p in samples {
                    let v = s.values_at(p)?;
                    let theta: Vec<f64> = components
                        .iter()
                        .map(|c| c.eval_number(p, s.bindings()))
                        .collect::<Result<_, _>>()?;
                    let k = v.eta_of(&theta);
                    let off = theta
                        .iter()
                        .zip(&v.xi)
                        .fold(0.0f64, |m, (a, x)| m.max((a - k * x).abs()));
                    if off > tolerance::DIFFERENTIAL {
                        return Err(ManifoldError::NotVertical(format!(
                            "component off the ξ direction of size {off:.3e} at {p:?}"
                        )));
                    }
                }
                eta_contraction(s, &components)
            }
        };
        let potential = VerticalPotential { k, target };
        potential.check_nonvanishing(s, samples)?;
        Ok(potential)
    }
}

/// Expression for η(ϑ) = Σ ηᵢ ϑ^i, dropping literal-zero terms.
fn eta_contraction(s: &AccRStructure, components: &[Expression]) -> Expression {
    let mut acc: Option<Node> = None;
    for (eta, theta) in s.eta.iter().zip(components) {
        if eta.is_zero_literal() || theta.is_zero_literal() {
            continue;
        }
        let term = Node::bin(BinOp::Mul, eta.node().clone(), theta.node().clone());
        acc = Some(match acc {
            None => term,
            Some(prev) => Node::bin(BinOp::Add, prev, term),
        });
    }
    Expression::from_node(acc.unwrap_or(Node::Num(0.0)), s.chart.coordinates.clone())
}

/// ϑ = kξ with nowhere-vanishing k, targeted at one of the two metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalPotential {
    pub k: Expression,
    pub target: MetricTag,
}

impl VerticalPotential {
    pub fn new(k: Expression, target: MetricTag) -> Self {
        Self { k, target }
    }

    pub fn check_nonvanishing(&self, s: &AccRStructure, samples: &[Vec<f64>]) -> Result<(), ManifoldError> {
        for p in samples {
            s.check_point(p)?;
            if self.k.eval_number(p, s.bindings())?.abs() <= tolerance::NONZERO_POTENTIAL {
                return Err(ManifoldError::PotentialVanishes(p.clone()));
            }
        }
        Ok(())
    }

    pub fn as_potential(&self) -> Potential {
        Potential::Vertical(self.k.clone())
    }
}
