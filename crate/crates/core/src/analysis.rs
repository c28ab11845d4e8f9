//! Class membership, torse-forming potentials, Yamabe almost solitons and
//! the golden-number suite of the cone example.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::expr::{BinOp, Expression, Node};
use crate::geometry::{
    christoffel_finite_difference, covariant_derivative_of, f_tilde_from, lie_derivative_at, nabla_tilde_f5_from,
    nabla_tilde_from, potential_components, sasaki_like_residual, PointGeometry,
};
use crate::manifold::{AccRStructure, ManifoldError, MetricTag, Potential, ValidationReport, IDENTITIES};
use crate::report::{CheckRecord, Verdict};
use crate::tensor::{MetricAtPoint, TensorError};
use crate::tolerance::{self, relative_error, Tolerances};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error("potential vanishes at {0:?}")]
    ZeroPotential(Vec<f64>),
    #[error("no coordinate named `{0}`")]
    MissingCoordinate(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m: f64, x| {
        if x.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(x.abs())
        }
    })
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
}

/// Geometry of both metrics at every sample point.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub g: Vec<PointGeometry>,
    pub gt: Vec<PointGeometry>,
}

impl SampleSet {
    pub fn compute(s: &AccRStructure, points: &[Vec<f64>], exec: Execution) -> Result<Self, ManifoldError> {
        let pairs = exec.try_map(points, |p| {
            Ok::<_, ManifoldError>((
                PointGeometry::new(s, MetricTag::G, p)?,
                PointGeometry::new(s, MetricTag::GTilde, p)?,
            ))
        })?;
        let (g, gt) = pairs.into_iter().unzip();
        Ok(Self {
            points: points.to_vec(),
            g,
            gt,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tagged(&self, tag: MetricTag) -> &[PointGeometry] {
        match tag {
            MetricTag::G => &self.g,
            MetricTag::GTilde => &self.gt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Holds,
    Fails,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassFlag {
    pub status: Membership,
    pub residual: f64,
}

impl ClassFlag {
    fn from_residual(residual: f64, tol: f64) -> Self {
        Self {
            status: if residual <= tol {
                Membership::Holds
            } else {
                Membership::Fails
            },
            residual,
        }
    }

    pub fn holds(&self) -> bool {
        self.status == Membership::Holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMembership {
    pub sasaki_like: ClassFlag,
    pub f5: ClassFlag,
    pub f5_0: ClassFlag,
    pub f0: ClassFlag,
    pub samples: usize,
    /// Consequences checked only when the Sasaki-like condition holds.
    pub sasaki_consequences: Option<Vec<(String, f64)>>,
}

/// Residuals of the identities every Sasaki-like manifold satisfies:
/// ∇ₓξ = −φx, (∇ₓη)y = −g(x,φy), R(x,y)ξ = η(y)x − η(x)y, ρ(x,ξ) = 2nη(x),
/// R(ξ,y)z = g(y,z)ξ − η(z)y, ρ(ξ,ξ) = 2n, ∇̃ₓξ = −φx.
pub fn sasaki_like_consequences(g: &PointGeometry, gt: &PointGeometry) -> Vec<(String, f64)> {
    let d = g.dim;
    let n = g.n as f64;
    let xi = g.xi().to_vec();
    let eta = g.structure.eta.clone();
    let r = &g.curvature.r13;
    let rho = &g.curvature.rho;
    let mut nxi = 0.0f64;
    let mut tnxi = 0.0f64;
    let mut neta = 0.0f64;
    let mut rxy = 0.0f64;
    let mut rxi = 0.0f64;
    let mut rho_x = 0.0f64;
    for i in 0..d {
        let x = unit(d, i);
        let px = g.phi(&x);
        let a = g.nabla_xi_along(&x);
        let b = gt.nabla_xi_along(&x);
        for l in 0..d {
            nxi = nxi.max((a[l] + px[l]).abs());
            tnxi = tnxi.max((b[l] + px[l]).abs());
        }
        for j in 0..d {
            let y = unit(d, j);
            neta = neta.max((g.nabla_eta[i * d + j] + g.inner(&x, &g.phi(&y))).abs());
            for l in 0..d {
                let lhs: f64 = (0..d).map(|k| r.get(&[i, j, k, l]) * xi[k]).sum();
                rxy = rxy.max((lhs - (eta[j] * x[l] - eta[i] * y[l])).abs());
                // R(ξ, ∂i)∂j
                let lhs: f64 = (0..d).map(|a| xi[a] * r.get(&[a, i, j, l])).sum();
                rxi = rxi.max((lhs - (g.inner(&x, &y) * xi[l] - eta[j] * x[l])).abs());
            }
        }
        let rx: f64 = (0..d).map(|k| rho.get(&[i, k]) * xi[k]).sum();
        rho_x = rho_x.max((rx - 2.0 * n * eta[i]).abs());
    }
    let rxx: f64 = (0..d)
        .flat_map(|i| (0..d).map(move |k| (i, k)))
        .map(|(i, k)| xi[i] * rho.get(&[i, k]) * xi[k])
        .sum();
    vec![
        ("nabla_xi = -phi x".into(), nxi),
        ("(nabla_x eta)y = -g(x, phi y)".into(), neta),
        ("R(x,y)xi = eta(y)x - eta(x)y".into(), rxy),
        ("rho(x,xi) = 2n eta(x)".into(), rho_x),
        ("R(xi,y)z = g(y,z)xi - eta(z)y".into(), rxi),
        ("rho(xi,xi) = 2n".into(), (rxx - 2.0 * n).abs()),
        ("nabla~_x xi = -phi x".into(), tnxi),
    ]
}

/// Sasaki-like membership with the consequence suite when it holds.
pub fn check_sasaki_like(set: &SampleSet, tol: &Tolerances) -> (ClassFlag, Option<Vec<(String, f64)>>) {
    let residual = max_of(set.g.iter().map(PointGeometry::sasaki_like_residual));
    let flag = ClassFlag::from_residual(residual, tol.differential);
    let suite = flag.holds().then(|| {
        let mut acc: Vec<(String, f64)> = Vec::new();
        for (g, gt) in set.g.iter().zip(&set.gt) {
            for (k, (name, r)) in sasaki_like_consequences(g, gt).into_iter().enumerate() {
                match acc.get_mut(k) {
                    Some(slot) => slot.1 = slot.1.max(r),
                    None => acc.push((name, r)),
                }
            }
        }
        acc
    });
    (flag, suite)
}

/// Membership test on raw F components at a point (no differentiation).
pub fn sasaki_like_pointwise(
    f: &[f64],
    metric: &MetricAtPoint,
    structure: &crate::manifold::StructureValues,
    tol: f64,
) -> ClassFlag {
    ClassFlag::from_residual(sasaki_like_residual(metric.dim(), f, metric, structure), tol)
}

/// F₅, F₅⁰ and F₀ flags.
pub fn check_f5(set: &SampleSet, tol: &Tolerances) -> (ClassFlag, ClassFlag, ClassFlag) {
    let f_norm = max_of(set.g.iter().map(PointGeometry::f_norm));
    let f0 = ClassFlag::from_residual(f_norm, tol.algebraic);
    if f0.holds() {
        let degenerate = ClassFlag {
            status: Membership::Degenerate,
            residual: f_norm,
        };
        return (degenerate, degenerate, f0);
    }
    let f5 = ClassFlag::from_residual(max_of(set.g.iter().map(PointGeometry::f5_residual)), tol.differential);
    let closed = max_of(set.g.iter().map(|g| g.f50_residual().max(g.lee_form_closedness())));
    let f5_0 = if f5.holds() {
        ClassFlag::from_residual(closed, tol.differential)
    } else {
        ClassFlag {
            status: Membership::Fails,
            residual: f5.residual.max(closed),
        }
    };
    (f5, f5_0, f0)
}

pub fn classify(set: &SampleSet, tol: &Tolerances) -> ClassMembership {
    let (sasaki_like, sasaki_consequences) = check_sasaki_like(set, tol);
    let (f5, f5_0, f0) = check_f5(set, tol);
    ClassMembership {
        sasaki_like,
        f5,
        f5_0,
        f0,
        samples: set.len(),
        sasaki_consequences,
    }
}

/// Which special kinds of torse-forming field a potential is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Taxonomy {
    pub torse_forming: bool,
    pub torqued: bool,
    pub concircular: bool,
    pub concurrent: bool,
    pub recurrent: bool,
    pub parallel: bool,
}

impl Taxonomy {
    /// Flags from fitted (f, γ, γ(ϑ)) maxima over the samples.
    pub fn from_fit(
        fit_residual: f64,
        max_f_minus_1: f64,
        max_f: f64,
        max_gamma: f64,
        max_gamma_theta: f64,
        tol: f64,
    ) -> Self {
        if fit_residual.is_nan() || fit_residual > tol {
            return Self::default();
        }
        let concircular = max_gamma <= tol;
        let recurrent = max_f <= tol;
        Self {
            torse_forming: true,
            // γ = 0 forces γ(ϑ) = 0 even when the two maxima straddle tol.
            torqued: concircular || max_gamma_theta <= tol,
            concircular,
            concurrent: concircular && max_f_minus_1 <= tol,
            recurrent,
            parallel: recurrent && concircular,
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        let all = [
            (self.torse_forming, "torse-forming"),
            (self.torqued, "torqued"),
            (self.concircular, "concircular"),
            (self.concurrent, "concurrent"),
            (self.recurrent, "recurrent"),
            (self.parallel, "parallel"),
        ];
        all.iter().filter(|(b, _)| *b).map(|(_, n)| *n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorseFormingSample {
    pub f: f64,
    pub gamma: Vec<f64>,
    /// γ(ϑ)
    pub gamma_theta: f64,
    pub residual: f64,
    pub condition_number: f64,
    /// k = η(ϑ) and h = f/k for vertical potentials.
    pub k: Option<f64>,
    pub h: Option<f64>,
    /// Residuals of γ = (dk − fη)/k, ∇ₓϑ = −fφ²x + dk(x)ξ and f = dk(ξ).
    pub vertical: Option<[f64; 3]>,
    pub dk_xi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorseFormingResult {
    pub tag: MetricTag,
    pub samples: Vec<TorseFormingSample>,
    pub residual: f64,
    pub taxonomy: Taxonomy,
}

impl TorseFormingResult {
    pub fn max_gamma(&self) -> f64 {
        max_of(self.samples.iter().flat_map(|s| s.gamma.iter().copied()))
    }
}

/// Least-squares fit of ∇ⱼϑ^i = f δ^i_j + ϑ^i γⱼ at one point.
/// Returns (f, γ, residual, condition number).
pub fn fit_torse_forming(nabla_theta: &[f64], theta: &[f64]) -> (f64, Vec<f64>, f64, f64) {
    let d = theta.len();
    let mut a = DMatrix::<f64>::zeros(d * d, d + 1);
    let mut b = DVector::<f64>::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            let row = i * d + j;
            if i == j {
                a[(row, 0)] = 1.0;
            }
            a[(row, 1 + j)] = theta[i];
            b[row] = nabla_theta[j * d + i];
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let x = svd.solve(&b, 1e-14 * smax).expect("u and v were computed");
    let residual = (&a * &x - &b).amax();
    (x[0], x.iter().skip(1).copied().collect(), residual, smax / smin)
}

/// Fits (f, γ) at every sample and derives the taxonomy.
pub fn torse_forming_extract(
    s: &AccRStructure,
    geoms: &[PointGeometry],
    potential: &Potential,
    tol: &Tolerances,
) -> Result<TorseFormingResult, AnalysisError> {
    let tag = geoms.first().map(|g| g.tag).unwrap_or(MetricTag::G);
    let mut samples = Vec::with_capacity(geoms.len());
    for geom in geoms {
        let d = geom.dim;
        let (theta, dtheta) = potential_components(s, potential, &geom.point)?;
        if theta.iter().all(|x| x.abs() <= tolerance::ZERO_TENSOR) {
            return Err(AnalysisError::ZeroPotential(geom.point.clone()));
        }
        let nt = covariant_derivative_of(geom, &theta, &dtheta);
        let (f, gamma, residual, condition_number) = fit_torse_forming(&nt, &theta);
        let gamma_theta: f64 = gamma.iter().zip(&theta).map(|(a, b)| a * b).sum();
        let (mut k, mut h, mut vertical, mut dk_xi) = (None, None, None, None);
        if let Potential::Vertical(kexpr) = potential {
            let kj = kexpr.eval_jet(&geom.point, s.bindings()).map_err(ManifoldError::from)?;
            let kv = kj.value();
            let dk = kj.gradient();
            let eta = &geom.structure.eta;
            let xi = geom.xi();
            let gm = max_of((0..d).map(|j| gamma[j] - (dk[j] - f * eta[j]) / kv));
            let mut v3 = 0.0f64;
            for i in 0..d {
                let p2 = geom.phi(&geom.phi(&unit(d, i)));
                for a in 0..d {
                    v3 = v3.max((nt[i * d + a] - (-f * p2[a] + dk[i] * xi[a])).abs());
                }
            }
            let dkx: f64 = dk.iter().zip(xi).map(|(a, b)| a * b).sum();
            k = Some(kv);
            h = Some(f / kv);
            vertical = Some([gm, v3, (f - dkx).abs()]);
            dk_xi = Some(dkx);
        }
        samples.push(TorseFormingSample {
            f,
            gamma,
            gamma_theta,
            residual,
            condition_number,
            k,
            h,
            vertical,
            dk_xi,
        });
    }
    let residual = max_of(samples.iter().map(|s| s.residual));
    let taxonomy = Taxonomy::from_fit(
        residual,
        max_of(samples.iter().map(|s| s.f - 1.0)),
        max_of(samples.iter().map(|s| s.f)),
        max_of(samples.iter().flat_map(|s| s.gamma.iter().copied())),
        max_of(samples.iter().map(|s| s.gamma_theta)),
        tol.differential,
    );
    Ok(TorseFormingResult {
        tag,
        samples,
        residual,
        taxonomy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolitonVerdict {
    Soliton,
    NotSoliton,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonSample {
    pub mu: f64,
    /// τ of the tagged metric.
    pub tau: f64,
    pub lambda: f64,
    pub residual: f64,
    pub f: Option<f64>,
    pub k: Option<f64>,
    pub dk_xi: Option<f64>,
    /// |τ − f − λ|
    pub tau_eq_f_plus_lambda: Option<f64>,
    /// |f − dk(ξ)|
    pub f_eq_dk_xi: Option<f64>,
    /// |dk(ξ) + 2nf − (2n+1)(τ − λ)|
    pub trace_identity: Option<f64>,
    /// |dk(ξ) − (τ − λ)|
    pub xi_xi_identity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremChecks {
    pub tau_eq_f_plus_lambda: Option<f64>,
    pub f_eq_dk_xi: Option<f64>,
    pub fk_ratio_match: Option<f64>,
    pub trace_identity: Option<f64>,
    pub xi_xi_identity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonSolveResult {
    pub tag: MetricTag,
    pub verdict: SolitonVerdict,
    pub residual: f64,
    pub samples: Vec<SolitonSample>,
    pub theorems: TheoremChecks,
    pub torse_forming: Option<TorseFormingResult>,
    /// Disagreement between the Lie-derivative evaluation routes.
    pub lie_route_mismatch: f64,
}

/// μ = trace_metric(A)/dim and max |A − μ·metric| for a symmetric (0,2) A.
pub fn proportionality(a: &[f64], metric: &MetricAtPoint) -> (f64, f64) {
    let d = metric.dim();
    let g = metric.g.components();
    let ginv = metric.g_inv.components();
    let trace: f64 = (0..d * d).map(|q| ginv[q] * a[q]).sum();
    let mu = trace / d as f64;
    let residual = max_of((0..d * d).map(|q| a[q] - mu * g[q]));
    (mu, residual)
}

fn opt_max(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.collect();
    v.filter(|v| !v.is_empty()).map(max_of)
}

/// Solves ½L_ϑ(metric) = (τ − λ)·metric pointwise for λ.
pub fn yamabe_soliton_solve(
    s: &AccRStructure,
    geoms: &[PointGeometry],
    potential: &Potential,
    tol: &Tolerances,
) -> Result<SolitonSolveResult, AnalysisError> {
    let tag = geoms.first().map(|g| g.tag).unwrap_or(MetricTag::G);
    let n = s.n() as f64;
    let tf = match torse_forming_extract(s, geoms, potential, tol) {
        Ok(r) => Some(r),
        Err(AnalysisError::ZeroPotential(_)) => None,
        Err(e) => return Err(e),
    };
    let mut samples = Vec::with_capacity(geoms.len());
    let mut lie_route_mismatch = 0.0f64;
    for (idx, geom) in geoms.iter().enumerate() {
        let lie = lie_derivative_at(geom, s, potential)?;
        lie_route_mismatch = lie_route_mismatch.max(lie.route_mismatch());
        let a: Vec<f64> = lie.covariant.components().iter().map(|x| 0.5 * x).collect();
        let (mu, residual) = proportionality(&a, &geom.metric);
        let tau = geom.curvature.tau;
        let lambda = tau - mu;
        let tf_sample = tf
            .as_ref()
            .filter(|r| r.taxonomy.torse_forming)
            .map(|r| &r.samples[idx]);
        let f = tf_sample.map(|t| t.f);
        let k = tf_sample.and_then(|t| t.k);
        let dk_xi = tf_sample.and_then(|t| t.dk_xi);
        samples.push(SolitonSample {
            mu,
            tau,
            lambda,
            residual,
            f,
            k,
            dk_xi,
            tau_eq_f_plus_lambda: f.map(|f| (tau - f - lambda).abs()),
            f_eq_dk_xi: f.zip(dk_xi).map(|(f, dk)| (f - dk).abs()),
            trace_identity: f
                .zip(dk_xi)
                .map(|(f, dk)| (dk + 2.0 * n * f - (2.0 * n + 1.0) * (tau - lambda)).abs()),
            xi_xi_identity: dk_xi.map(|dk| (dk - (tau - lambda)).abs()),
        });
    }
    let residual = max_of(samples.iter().map(|s| s.residual));
    let verdict = if residual <= tol.differential {
        SolitonVerdict::Soliton
    } else {
        SolitonVerdict::NotSoliton
    };
    let soliton = verdict == SolitonVerdict::Soliton;
    let theorems = TheoremChecks {
        tau_eq_f_plus_lambda: soliton
            .then(|| opt_max(samples.iter().map(|s| s.tau_eq_f_plus_lambda)))
            .flatten(),
        f_eq_dk_xi: soliton.then(|| opt_max(samples.iter().map(|s| s.f_eq_dk_xi))).flatten(),
        fk_ratio_match: None,
        trace_identity: soliton
            .then(|| opt_max(samples.iter().map(|s| s.trace_identity)))
            .flatten(),
        xi_xi_identity: soliton
            .then(|| opt_max(samples.iter().map(|s| s.xi_xi_identity)))
            .flatten(),
    };
    Ok(SolitonSolveResult {
        tag,
        verdict,
        residual,
        samples,
        theorems,
        torse_forming: tf,
        lie_route_mismatch,
    })
}

/// Per-sample |f/k − f̃/k̃| for a pair of vertical torse-forming solutions.
pub fn fk_ratio_residuals(a: &SolitonSolveResult, b: &SolitonSolveResult) -> Option<Vec<f64>> {
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| Some((x.f? / x.k? - y.f? / y.k?).abs()))
        .collect()
}

/// Records the ratio check in both results when it applies.
pub fn attach_fk_ratio(a: &mut SolitonSolveResult, b: &mut SolitonSolveResult, classes: &ClassMembership) {
    if !classes.f5.holds() {
        return;
    }
    if let Some(r) = fk_ratio_residuals(a, b) {
        let m = max_of(r);
        a.theorems.fk_ratio_match = Some(m);
        b.theorems.fk_ratio_match = Some(m);
    }
}

/// No Sasaki-like manifold carries a Yamabe almost soliton with vertical
/// potential. True unless both premises hold and the solver found one.
pub fn nonexistence_consistent(classes: &ClassMembership, result: &SolitonSolveResult, vertical: bool) -> bool {
    !(classes.sasaki_like.holds() && vertical && result.verdict == SolitonVerdict::Soliton)
}

/// One record per structure identity plus the signature.
pub fn validation_records(report: &ValidationReport) -> Vec<CheckRecord> {
    let mut out: Vec<CheckRecord> = report
        .residuals
        .iter()
        .zip(IDENTITIES.iter())
        .map(|(r, (_, formula))| {
            CheckRecord::from_residuals(
                &format!("structure.{}", r.name),
                formula,
                r.per_sample.clone(),
                report.tolerance,
            )
        })
        .collect();
    let sig = CheckRecord::from_residuals("structure.signature", "signature of g is (n+1, n)", vec![], 0.0)
        .with_verdict(if report.signature_ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        });
    out.push(sig);
    out
}

/// Membership records. Verdicts carry the membership, not a pass/fail judgement.
pub fn membership_records(m: &ClassMembership, tol: &Tolerances) -> Vec<CheckRecord> {
    let rec = |name: &str, anchor: &str, flag: &ClassFlag, t: f64| {
        let verdict = match flag.status {
            Membership::Holds => Verdict::Pass,
            Membership::Fails => Verdict::Fail,
            Membership::Degenerate => Verdict::Degenerate,
        };
        CheckRecord::from_residuals(name, anchor, vec![flag.residual], t).with_verdict(verdict)
    };
    let mut out = vec![
        rec(
            "class.sasaki_like",
            "F(x,y,z) = g(phi x, phi y)eta(z) + g(phi x, phi z)eta(y)",
            &m.sasaki_like,
            tol.differential,
        ),
        rec(
            "class.F5",
            "F(x,y,z) = -(theta*(xi)/2n){g(x, phi y)eta(z) + g(x, phi z)eta(y)}",
            &m.f5,
            tol.differential,
        ),
        rec(
            "class.F5_0",
            "F5 and d(theta*(xi)) = xi(theta*(xi)) eta",
            &m.f5_0,
            tol.differential,
        ),
        rec("class.F0", "F = 0", &m.f0, tol.algebraic),
    ];
    if let Some(suite) = &m.sasaki_consequences {
        for (name, r) in suite {
            out.push(CheckRecord::from_residuals(
                &format!("sasaki_like.{name}"),
                name,
                vec![*r],
                tol.differential,
            ));
        }
    }
    out
}

fn per_sample<T>(xs: &[T], f: impl Fn(&T) -> f64) -> Vec<f64> {
    xs.iter().map(f).collect()
}

/// Identity checks and scalar invariants of both connections.
pub fn geometry_records(
    s: &AccRStructure,
    set: &SampleSet,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>, AnalysisError> {
    let dt = tol.differential;
    let mut out = Vec::new();
    for (label, geoms) in [("g", &set.g), ("gtilde", &set.gt)] {
        out.push(CheckRecord::from_residuals(
            &format!("{label}.metric_compatibility"),
            "d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il = 0",
            per_sample(geoms, PointGeometry::metric_compatibility_residual),
            dt,
        ));
        out.push(CheckRecord::from_residuals(
            &format!("{label}.curvature_symmetries"),
            "R(x,y,z,w) = -R(y,x,z,w) = -R(x,y,w,z) = R(z,w,x,y); first Bianchi",
            per_sample(geoms, |g| g.curvature_symmetry_residuals().max()),
            dt,
        ));
        out.push(CheckRecord::from_residuals(
            &format!("{label}.F_symmetries"),
            "F(x,y,z) = F(x,z,y) = F(x,phi y,phi z) + eta(y)F(x,xi,z) + eta(z)F(x,y,xi)",
            per_sample(geoms, PointGeometry::f_prop1_residual),
            dt,
        ));
        out.push(CheckRecord::from_residuals(
            &format!("{label}.F_xi"),
            "F(x,phi y,xi) = (nabla_x eta)y = g(nabla_x xi, y)",
            per_sample(geoms, PointGeometry::f_prop2_residual),
            dt,
        ));
        out.push(CheckRecord::from_residuals(
            &format!("{label}.eta_nabla_xi"),
            "eta(nabla_x xi) = 0",
            per_sample(geoms, PointGeometry::eta_nabla_xi_residual),
            dt,
        ));
        let fd: Vec<f64> = geoms
            .iter()
            .map(|g| {
                let oracle = christoffel_finite_difference(s, g.tag, &g.point, tolerance::FD_STEP)?;
                Ok(max_of(
                    g.gamma.iter().zip(&oracle.gamma).map(|(a, b)| relative_error(*a, *b)),
                ))
            })
            .collect::<Result<_, AnalysisError>>()?;
        out.push(CheckRecord::from_residuals(
            &format!("{label}.christoffel_vs_finite_difference"),
            "Gamma^k_ij = 1/2 g^kl(d_i g_jl + d_j g_il - d_l g_ij), central differences",
            fd,
            tol.finite_difference,
        ));
    }
    out.push(CheckRecord::from_residuals(
        "cross.nabla_tilde",
        "2g(nabla~_x y,z) from nabla, F and omega",
        set.g
            .iter()
            .zip(&set.gt)
            .map(|(g, gt)| nabla_tilde_from(g).max_abs_diff(&gt.connection()))
            .collect(),
        dt,
    ));
    out.push(CheckRecord::from_residuals(
        "cross.F_tilde",
        "2F~(x,y,z) from F, phi, xi, eta",
        set.g
            .iter()
            .zip(&set.gt)
            .map(|(g, gt)| {
                f_tilde_from(g)
                    .max_abs_diff(&gt.fundamental().f)
                    .unwrap_or(f64::INFINITY)
            })
            .collect(),
        dt,
    ));
    out.push(CheckRecord::informational(
        "g.tau",
        "tau = g^jk rho_jk",
        per_sample(&set.g, |g| g.curvature.tau),
    ));
    out.push(CheckRecord::informational(
        "g.tau_star",
        "tau* = g^ij rho_is phi^s_j",
        per_sample(&set.g, |g| g.curvature.tau_star),
    ));
    out.push(CheckRecord::informational(
        "g.theta_star_xi",
        "theta*(xi), theta*(z) = g^ij F(e_i, phi e_j, z)",
        per_sample(&set.g, |g| g.theta_xi),
    ));
    out.push(CheckRecord::informational(
        "gtilde.tau",
        "tau~ = g~^jk rho~_jk",
        per_sample(&set.gt, |g| g.curvature.tau),
    ));
    let omega: Vec<f64> = per_sample(&set.g, |g| max_of(g.omega.iter().copied()));
    let sensitive = omega.iter().any(|w| *w > tolerance::ZERO_TENSOR);
    out.push(CheckRecord::informational(
        if sensitive {
            "omega.convention_sensitive"
        } else {
            "omega"
        },
        "omega(z) = F(xi, xi, z); nabla~ relation depends on this convention when omega != 0",
        omega,
    ));
    Ok(out)
}

pub fn omega_convention_sensitive(set: &SampleSet) -> bool {
    set.g
        .iter()
        .any(|g| max_of(g.omega.iter().copied()) > tolerance::ZERO_TENSOR)
}

/// Records for one soliton solve.
pub fn soliton_records(r: &SolitonSolveResult, tol: &Tolerances) -> Vec<CheckRecord> {
    let p = match r.tag {
        MetricTag::G => "soliton.g",
        MetricTag::GTilde => "soliton.gtilde",
    };
    let dt = tol.differential;
    let mut out = vec![
        CheckRecord::from_residuals(
            &format!("{p}.proportionality"),
            "1/2 L_theta(metric) = (tau - lambda) metric",
            r.samples.iter().map(|s| s.residual).collect(),
            dt,
        ),
        CheckRecord::informational(&format!("{p}.lambda"), "lambda = tau - trace(1/2 L_theta metric)/(2n+1)", r.samples.iter().map(|s| s.lambda).collect()),
        CheckRecord::informational(&format!("{p}.mu"), "mu = trace(1/2 L_theta metric)/(2n+1)", r.samples.iter().map(|s| s.mu).collect()),
        CheckRecord::from_residuals(
            &format!("{p}.lie_routes"),
            "L_theta g via coordinates, via nabla, and dk(x)eta(y) + dk(y)eta(x) + k{g(nabla_x xi,y) + g(x,nabla_y xi)}",
            vec![r.lie_route_mismatch],
            dt,
        ),
    ];
    let theorem = |name: &str, anchor: &str, sel: &dyn Fn(&SolitonSample) -> Option<f64>| {
        let v: Option<Vec<f64>> = r.samples.iter().map(sel).collect();
        match v {
            Some(v) if r.verdict == SolitonVerdict::Soliton => {
                CheckRecord::from_residuals(&format!("{p}.{name}"), anchor, v, dt)
            }
            _ => CheckRecord::from_residuals(&format!("{p}.{name}"), anchor, vec![], dt)
                .with_verdict(Verdict::NotApplicable),
        }
    };
    out.push(theorem("tau_eq_f_plus_lambda", "tau = f + lambda", &|s| {
        s.tau_eq_f_plus_lambda
    }));
    out.push(theorem("f_eq_dk_xi", "f = dk(xi)", &|s| s.f_eq_dk_xi));
    out.push(theorem(
        "trace_identity",
        "dk(xi) + 2n f = (2n+1)(tau - lambda)",
        &|s| s.trace_identity,
    ));
    out.push(theorem("xi_xi_identity", "dk(xi) = tau - lambda", &|s| {
        s.xi_xi_identity
    }));
    if let Some(m) = r.theorems.fk_ratio_match {
        out.push(CheckRecord::from_residuals(
            &format!("{p}.fk_ratio"),
            "f/k = f~/k~",
            vec![m],
            dt,
        ));
    }
    if let Some(tf) = &r.torse_forming {
        out.push(
            CheckRecord::from_residuals(
                &format!("{p}.torse_forming_fit"),
                "nabla_x theta = f x + gamma(x) theta",
                tf.samples.iter().map(|s| s.residual).collect(),
                dt,
            )
            .with_verdict(Verdict::NotApplicable),
        );
        out.push(CheckRecord::informational(
            &format!("{p}.f"),
            "conformal scalar f",
            tf.samples.iter().map(|s| s.f).collect(),
        ));
    }
    out
}

/// Constants of the cone example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeConstants {
    pub c: f64,
    pub c_tilde: f64,
    pub k_prime: f64,
}

impl Default for ConeConstants {
    fn default() -> Self {
        Self {
            c: 1.0,
            c_tilde: 1.0,
            k_prime: 0.0,
        }
    }
}

fn linear_potential(s: &AccRStructure, c: f64, t_index: usize) -> Potential {
    Potential::Vertical(Expression::from_node(
        Node::bin(BinOp::Mul, Node::Num(c), Node::Coord(t_index)),
        s.chart.coordinates.clone(),
    ))
}

/// Every number of the cone example at every sample, plus the identity
/// suites and cross-route checks.
pub fn verify_cone_suite(
    s: &AccRStructure,
    consts: ConeConstants,
    points: &[Vec<f64>],
    exec: Execution,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>, AnalysisError> {
    let ti = s
        .chart
        .coordinates
        .iter()
        .position(|c| c == "t")
        .ok_or_else(|| AnalysisError::MissingCoordinate("t".into()))?;
    let set = SampleSet::compute(s, points, exec)?;
    let (dt, at) = (tol.differential, tol.algebraic);
    let n = s.n() as f64;
    let kp = consts.k_prime;
    let ts: Vec<f64> = points.iter().map(|p| p[ti]).collect();
    let closed = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { ts.iter().map(|&t| f(t)).collect() };
    let mut out = Vec::new();

    out.extend(validation_records(&s.validate_with_tolerance(points, dt)?));

    let frames = set.g.iter().map(|g| g.phi_frame()).collect::<Result<Vec<_>, _>>()?;
    let frame_metric = set
        .g
        .iter()
        .zip(&frames)
        .map(|(g, f)| {
            let m = g.structure.g.to_frame(f)?;
            let target = [1.0, -1.0, 1.0];
            let d = g.dim;
            Ok(max_of((0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(
                |(i, j)| {
                    let e = if i != j {
                        0.0
                    } else if i == d - 1 {
                        1.0
                    } else if i < g.n {
                        target[0]
                    } else {
                        target[1]
                    };
                    m.get(&[i, j]) - e
                },
            )))
        })
        .collect::<Result<Vec<f64>, TensorError>>()?;
    out.push(CheckRecord::from_residuals(
        "frame.metric",
        "g(e_1,e_1) = -g(e_2,e_2) = g(e_3,e_3) = 1 in the frame phi e_1 = e_2, e_3 = xi",
        frame_metric,
        at,
    ));
    let in_frame = |sel: &dyn Fn(&PointGeometry, &crate::tensor::Frame) -> Result<f64, TensorError>| {
        set.g
            .iter()
            .zip(&frames)
            .map(|(g, f)| sel(g, f))
            .collect::<Result<Vec<f64>, TensorError>>()
    };
    out.push(CheckRecord::from_values(
        "curvature.R1212",
        "R_1212 = (k'-1)/t^2",
        in_frame(&|g, f| Ok(g.curvature.r04.to_frame(f)?.get(&[0, 1, 0, 1])))?,
        closed(&|t| (kp - 1.0) / (t * t)),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "curvature.rho11",
        "rho_11 = (k'-1)/t^2",
        in_frame(&|g, f| Ok(g.curvature.rho.to_frame(f)?.get(&[0, 0])))?,
        closed(&|t| (kp - 1.0) / (t * t)),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "curvature.rho22",
        "rho_22 = -(k'-1)/t^2",
        in_frame(&|g, f| Ok(g.curvature.rho.to_frame(f)?.get(&[1, 1])))?,
        closed(&|t| -(kp - 1.0) / (t * t)),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "curvature.tau",
        "tau = 2(k'-1)/t^2",
        per_sample(&set.g, |g| g.curvature.tau),
        closed(&|t| 2.0 * (kp - 1.0) / (t * t)),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "curvature.tau_star",
        "tau* = 0",
        per_sample(&set.g, |g| g.curvature.tau_star),
        closed(&|_| 0.0),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "lee.theta_star_xi",
        "theta*(xi) = 2/t",
        per_sample(&set.g, |g| g.theta_xi),
        closed(&|t| 2.0 / t),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "lee.theta_star_xi_times_t",
        "t theta*(xi) = 2",
        set.g.iter().zip(&ts).map(|(g, t)| g.theta_xi * t).collect(),
        closed(&|_| 2.0),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "curvature.tau_tilde",
        "tau~ = -2/t^2",
        per_sample(&set.gt, |g| g.curvature.tau),
        closed(&|t| -2.0 / (t * t)),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "curvature.tau_tilde_times_t2",
        "t^2 tau~ = -2",
        set.gt.iter().zip(&ts).map(|(g, t)| g.curvature.tau * t * t).collect(),
        closed(&|_| -2.0),
        dt,
    ));
    out.push(CheckRecord::from_residuals(
        "connection.nabla_xi",
        "nabla_x xi = -(1/t) phi^2 x",
        set.g.iter().zip(&ts).map(|(g, t)| g.tf_nxi_residual(1.0 / t)).collect(),
        dt,
    ));
    out.push(CheckRecord::from_residuals(
        "connection.nabla_tilde_xi",
        "nabla~_x xi = -(1/t) phi^2 x",
        set.gt
            .iter()
            .zip(&ts)
            .map(|(g, t)| g.tf_nxi_residual(1.0 / t))
            .collect(),
        dt,
    ));
    out.push(CheckRecord::from_residuals(
        "connection.nabla_tilde_xi_eq_nabla_xi",
        "nabla~_x xi = nabla_x xi",
        set.g
            .iter()
            .zip(&set.gt)
            .map(|(g, gt)| max_of(g.nabla_xi.iter().zip(&gt.nabla_xi).map(|(a, b)| a - b)))
            .collect(),
        dt,
    ));

    out.extend(
        geometry_records(s, &set, tol)?
            .into_iter()
            .filter(|r| r.verdict != Verdict::NotApplicable),
    );
    out.push(CheckRecord::from_residuals(
        "cross.nabla_tilde_F5",
        "nabla~_x y = nabla_x y - (theta*(xi)/2n){g(x,phi y) + g(phi x,phi y)}xi",
        set.g
            .iter()
            .zip(&set.gt)
            .map(|(g, gt)| nabla_tilde_f5_from(g).max_abs_diff(&gt.connection()))
            .collect(),
        dt,
    ));

    let classes = classify(&set, tol);
    let flag_record = |name: &str, anchor: &str, flag: &ClassFlag, want: Membership| {
        CheckRecord::from_residuals(name, anchor, vec![flag.residual], dt).with_verdict(if flag.status == want {
            Verdict::Pass
        } else {
            Verdict::Fail
        })
    };
    out.push(flag_record("class.F5_holds", "F in F5", &classes.f5, Membership::Holds));
    out.push(flag_record(
        "class.F5_0_holds",
        "F in F5 with closed Lee form",
        &classes.f5_0,
        Membership::Holds,
    ));
    out.push(flag_record(
        "class.sasaki_like_fails",
        "F is not of Sasaki-like shape",
        &classes.sasaki_like,
        Membership::Fails,
    ));
    out.push(flag_record("class.F0_fails", "F != 0", &classes.f0, Membership::Fails));

    out.push(CheckRecord::from_residuals(
        "F.xi_shape",
        "F(x,y,xi) = -h g(x, phi y), h = 1/t",
        set.g.iter().zip(&ts).map(|(g, t)| g.tf_fxi_residual(1.0 / t)).collect(),
        dt,
    ));
    out.push(CheckRecord::from_residuals(
        "F.vertical",
        "F(xi,y,z) = 0, omega = 0",
        per_sample(&set.g, |g| {
            let (a, b) = g.f5_vertical_residuals();
            a.max(b)
        }),
        dt,
    ));
    out.push(CheckRecord::from_residuals(
        "lee.closed",
        "d(theta*(xi)) = xi(theta*(xi)) eta",
        per_sample(&set.g, PointGeometry::f50_residual),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "lee.d_theta_star_xi",
        "d(theta*(xi))(d_t) = -2/t^2",
        per_sample(&set.g, |g| g.d_theta_xi[ti]),
        closed(&|t| -2.0 / (t * t)),
        dt,
    ));
    let hs: Vec<(f64, Vec<f64>)> = ts
        .iter()
        .map(|&t| {
            let mut dh = vec![0.0; s.dim()];
            dh[ti] = -1.0 / (t * t);
            (1.0 / t, dh)
        })
        .collect();
    out.push(CheckRecord::from_residuals(
        "curvature.R_xy_xi",
        "R(x,y)xi = -{dh(x) + h^2 eta(x)}phi^2 y + {dh(y) + h^2 eta(y)}phi^2 x",
        set.g
            .iter()
            .zip(&hs)
            .map(|(g, (h, dh))| g.r_tf_residual(*h, dh))
            .collect(),
        dt,
    ));
    let rho_tf: Vec<[f64; 3]> = set
        .g
        .iter()
        .zip(&hs)
        .map(|(g, (h, dh))| g.rho_tf_residuals(*h, dh))
        .collect();
    for (k, (name, anchor)) in [
        (
            "curvature.R_xi_y_z",
            "R(xi,y)z = g(phi y,phi z) grad h - dh(z)phi^2 y + h^2{eta(z)y - g(y,z)xi}",
        ),
        (
            "curvature.rho_y_xi",
            "rho(y,xi) = -(2n-1)dh(y) - {dh(xi) + 2n h^2}eta(y)",
        ),
        ("curvature.rho_xi_xi", "rho(xi,xi) = -2n{dh(xi) + h^2}"),
    ]
    .into_iter()
    .enumerate()
    {
        out.push(CheckRecord::from_residuals(
            name,
            anchor,
            rho_tf.iter().map(|r| r[k]).collect(),
            dt,
        ));
    }
    let tt_rhs: Vec<f64> = per_sample(&set.g, |g| {
        -g.curvature.tau_star - (2.0 * n + 1.0) / (2.0 * n) * g.theta_xi * g.theta_xi - 2.0 * g.xi_theta_xi()
    });
    out.push(CheckRecord::from_values(
        "curvature.tau_tilde_from_lee",
        "tau~ = -tau* - ((2n+1)/2n)theta*(xi)^2 - 2 xi(theta*(xi))",
        per_sample(&set.gt, |g| g.curvature.tau),
        tt_rhs.clone(),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "curvature.tau_tilde_from_lee_closed_form",
        "-tau* - ((2n+1)/2n)theta*(xi)^2 - 2 xi(theta*(xi)) = -2/t^2",
        tt_rhs,
        closed(&|t| -2.0 / (t * t)),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "curvature.tau_tilde_from_h",
        "tau~ = -tau* - 2n(2n+1)h^2 - 4n dh(xi)",
        per_sample(&set.gt, |g| g.curvature.tau),
        set.g
            .iter()
            .zip(&hs)
            .map(|(g, (h, dh))| {
                let dh_xi: f64 = dh.iter().zip(g.xi()).map(|(a, b)| a * b).sum();
                -g.curvature.tau_star - 2.0 * n * (2.0 * n + 1.0) * h * h - 4.0 * n * dh_xi
            })
            .collect(),
        dt,
    ));
    out.push(CheckRecord::from_values(
        "connection.h_fit",
        "h = 1/t from nabla_x xi = -h phi^2 x",
        per_sample(&set.g, |g| g.h),
        closed(&|t| 1.0 / t),
        dt,
    ));

    let mut solutions = Vec::new();
    for (tag, c, label, cname) in [
        (MetricTag::G, consts.c, "g", "c"),
        (MetricTag::GTilde, consts.c_tilde, "gtilde", "c~"),
    ] {
        let geoms = set.tagged(tag);
        let potential = linear_potential(s, c, ti);
        let lie: Vec<f64> = geoms
            .iter()
            .map(|g| {
                let l = lie_derivative_at(g, s, &potential)?;
                Ok(max_of(
                    l.covariant
                        .components()
                        .iter()
                        .zip(g.metric_components())
                        .map(|(a, m)| a - 2.0 * c * m),
                ))
            })
            .collect::<Result<_, AnalysisError>>()?;
        out.push(CheckRecord::from_residuals(
            &format!("lie.{label}"),
            &format!("L_theta {label} = 2{cname} {label}, theta = {cname} t xi"),
            lie,
            dt,
        ));
        let sol = yamabe_soliton_solve(s, geoms, &potential, tol)?;
        out.push(CheckRecord::from_residuals(
            &format!("soliton.{label}.verdict"),
            "1/2 L_theta(metric) = (tau - lambda) metric",
            sol.samples.iter().map(|x| x.residual).collect(),
            dt,
        ));
        let lambda_expected = match tag {
            MetricTag::G => closed(&|t| 2.0 * (kp - 1.0) / (t * t) - c),
            MetricTag::GTilde => closed(&|t| -2.0 / (t * t) - c),
        };
        out.push(CheckRecord::from_values(
            &format!("soliton.{label}.lambda"),
            match tag {
                MetricTag::G => "lambda = 2(k'-1)/t^2 - c",
                MetricTag::GTilde => "lambda~ = -2/t^2 - c~",
            },
            sol.samples.iter().map(|x| x.lambda).collect(),
            lambda_expected,
            dt,
        ));
        let tf = sol.torse_forming.clone();
        let theorem = |name: &str, anchor: &str, sel: &dyn Fn(&SolitonSample) -> Option<f64>| {
            let v: Vec<f64> = sol.samples.iter().map(|x| sel(x).unwrap_or(f64::NAN)).collect();
            CheckRecord::from_residuals(&format!("soliton.{label}.{name}"), anchor, v, dt)
        };
        out.push(theorem("tau_eq_f_plus_lambda", "tau = f + lambda", &|x| {
            x.tau_eq_f_plus_lambda
        }));
        out.push(theorem("f_eq_dk_xi", "f = dk(xi)", &|x| x.f_eq_dk_xi));
        out.push(theorem(
            "trace_identity",
            "dk(xi) + 2n f = (2n+1)(tau - lambda)",
            &|x| x.trace_identity,
        ));
        out.push(theorem("xi_xi_identity", "dk(xi) = tau - lambda", &|x| {
            x.xi_xi_identity
        }));
        out.push(CheckRecord::from_residuals(
            &format!("soliton.{label}.k_linear"),
            "t dk(xi) - k = 0 for k = c t",
            sol.samples
                .iter()
                .zip(&ts)
                .map(|(x, t)| match (x.dk_xi, x.k) {
                    (Some(dk), Some(k)) => (t * dk - k).abs(),
                    _ => f64::NAN,
                })
                .collect(),
            dt,
        ));
        out.push(CheckRecord::from_values(
            &format!("soliton.{label}.f_over_k"),
            "f/k = 1/t",
            sol.samples
                .iter()
                .map(|x| x.f.zip(x.k).map(|(f, k)| f / k).unwrap_or(f64::NAN))
                .collect(),
            closed(&|t| 1.0 / t),
            dt,
        ));
        match &tf {
            Some(tf) => {
                out.push(CheckRecord::from_values(
                    &format!("torse_forming.{label}.f"),
                    "nabla_x theta = c x: f = c",
                    tf.samples.iter().map(|x| x.f).collect(),
                    closed(&|_| c),
                    dt,
                ));
                out.push(CheckRecord::from_residuals(
                    &format!("torse_forming.{label}.gamma"),
                    "generating form gamma = 0",
                    tf.samples.iter().map(|x| max_of(x.gamma.iter().copied())).collect(),
                    tolerance::GENERATING_FORM_ZERO.max(tol.algebraic),
                ));
                let want_concurrent = (c - 1.0).abs() <= dt;
                let tx = tf.taxonomy;
                let ok = tx.torse_forming && tx.torqued && tx.concircular && tx.concurrent == want_concurrent;
                out.push(
                    CheckRecord::from_residuals(
                        &format!("torse_forming.{label}.taxonomy"),
                        "concircular, hence torqued; concurrent exactly when c = 1",
                        vec![tf.residual],
                        dt,
                    )
                    .with_verdict(if ok { Verdict::Pass } else { Verdict::Fail }),
                );
                out.push(CheckRecord::from_residuals(
                    &format!("torse_forming.{label}.vertical_identities"),
                    "gamma = (dk - f eta)/k; nabla_x theta = -f phi^2 x + dk(x)xi; f = dk(xi)",
                    tf.samples
                        .iter()
                        .map(|x| x.vertical.map(max_of).unwrap_or(f64::NAN))
                        .collect(),
                    dt,
                ));
            }
            None => out.push(
                CheckRecord::from_residuals(
                    &format!("torse_forming.{label}.f"),
                    "torse-forming potential",
                    vec![],
                    dt,
                )
                .with_verdict(Verdict::Fail),
            ),
        }
        solutions.push(sol);
    }
    let ratio = fk_ratio_residuals(&solutions[0], &solutions[1]).unwrap_or_else(|| vec![f64::NAN; points.len()]);
    out.push(CheckRecord::from_residuals(
        "soliton.fk_ratio",
        "f/k = f~/k~",
        ratio,
        dt,
    ));
    let consistent = solutions.iter().all(|sol| nonexistence_consistent(&classes, sol, true));
    out.push(
        CheckRecord::from_residuals(
            "soliton.sasaki_like_nonexistence",
            "Sasaki-like with vertical potential admits no Yamabe almost soliton",
            vec![],
            dt,
        )
        .with_verdict(if consistent { Verdict::Pass } else { Verdict::Fail }),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ConstantBindings;
    use crate::manifold::builtin;

    fn cone() -> AccRStructure {
        builtin("cone-flat-fiber").unwrap()
    }

    fn set_at(s: &AccRStructure, points: &[Vec<f64>]) -> SampleSet {
        SampleSet::compute(s, points, Execution::Sequential).unwrap()
    }

    #[test]
    fn cone_classification() {
        let s = cone();
        let set = set_at(&s, &s.chart.latin_hypercube(16, 42));
        let m = classify(&set, &Tolerances::default());
        assert_eq!(m.f5.status, Membership::Holds);
        assert_eq!(m.f5_0.status, Membership::Holds);
        assert_eq!(m.sasaki_like.status, Membership::Fails);
        assert_eq!(m.f0.status, Membership::Fails);
        assert!(m.sasaki_consequences.is_none());
    }

    #[test]
    fn flat_classification() {
        let s = builtin("flat-cosymplectic").unwrap();
        let set = set_at(&s, &s.chart.latin_hypercube(8, 1));
        let m = classify(&set, &Tolerances::default());
        assert_eq!(m.f0.status, Membership::Holds);
        assert_eq!(m.f5.status, Membership::Degenerate);
        assert_eq!(m.sasaki_like.status, Membership::Fails);
    }

    #[test]
    fn synthetic_sasaki_like_data_holds() {
        let s = cone();
        let g = PointGeometry::new(&s, MetricTag::G, &[2.0, 0.0, 0.0]).unwrap();
        let f = crate::geometry::sasaki_like_shape(3, &g.metric, &g.structure);
        let flag = sasaki_like_pointwise(&f, &g.metric, &g.structure, 1e-9);
        assert!(flag.holds());
        assert_eq!(flag.residual, 0.0);
        assert!(!sasaki_like_pointwise(&g.f, &g.metric, &g.structure, 1e-9).holds());
    }

    #[test]
    fn perturbed_cone_is_not_f5() {
        let mut v: serde_json::Value =
            serde_json::from_str(crate::manifold::builtin_source("cone-flat-fiber").unwrap()).unwrap();
        v["g"][0][1] = "0.01*t".into();
        v["g"][1][0] = "0.01*t".into();
        let s = crate::manifold::load_manifold(v.to_string().as_bytes()).unwrap();
        let set = set_at(&s, &[vec![2.0, 0.1, 0.2], vec![1.0, -0.3, 0.5]]);
        let (f5, _, _) = check_f5(&set, &Tolerances::default());
        assert_eq!(f5.status, Membership::Fails);
        assert!(f5.residual > 1e-9);
    }

    #[test]
    fn cone_torse_forming_taxonomy() {
        let s = cone();
        let set = set_at(&s, &s.chart.latin_hypercube(8, 3));
        for (c, concurrent) in [(1.0, true), (2.0, false)] {
            let p = linear_potential(&s, c, 0);
            for tag in [MetricTag::G, MetricTag::GTilde] {
                let r = torse_forming_extract(&s, set.tagged(tag), &p, &Tolerances::default()).unwrap();
                for x in &r.samples {
                    assert!((x.f - c).abs() < 1e-12);
                    assert!(max_of(x.gamma.iter().copied()) < 1e-10);
                }
                assert!(r.taxonomy.concircular && r.taxonomy.torqued);
                assert_eq!(r.taxonomy.concurrent, concurrent);
                assert!(!r.taxonomy.recurrent);
            }
        }
    }

    #[test]
    fn horizontal_field_is_not_torse_forming() {
        let s = cone();
        let set = set_at(&s, &s.chart.latin_hypercube(8, 3));
        let p = Potential::Field(vec![
            s.chart.parse("0").unwrap(),
            s.chart.parse("t^2").unwrap(),
            s.chart.parse("0").unwrap(),
        ]);
        let r = torse_forming_extract(&s, &set.g, &p, &Tolerances::default()).unwrap();
        assert!(r.residual > 1e-6);
        assert!(!r.taxonomy.torse_forming);
    }

    #[test]
    fn zero_potential_is_an_error() {
        let s = cone();
        let set = set_at(&s, &[vec![2.0, 0.0, 0.0]]);
        let p = Potential::Vertical(s.chart.parse("0").unwrap());
        assert!(matches!(
            torse_forming_extract(&s, &set.g, &p, &Tolerances::default()),
            Err(AnalysisError::ZeroPotential(_))
        ));
    }

    #[test]
    fn soliton_lambda_on_cone() {
        let s = cone();
        let set = set_at(&s, &[vec![2.0, 0.0, 0.0], vec![1.0, 0.5, 0.5]]);
        let tol = Tolerances::default();
        let p = linear_potential(&s, 1.0, 0);
        let r = yamabe_soliton_solve(&s, &set.g, &p, &tol).unwrap();
        assert_eq!(r.verdict, SolitonVerdict::Soliton);
        assert!((r.samples[0].lambda + 1.5).abs() < 1e-12);
        assert!((r.samples[0].mu - 1.0).abs() < 1e-12);
        assert!((r.samples[1].lambda + 3.0).abs() < 1e-12);
        assert!(r.theorems.tau_eq_f_plus_lambda.unwrap() < 1e-12);
        let rt = yamabe_soliton_solve(&s, &set.gt, &p, &tol).unwrap();
        assert!((rt.samples[0].lambda + 1.5).abs() < 1e-12);
    }

    #[test]
    fn t_squared_potential_is_not_soliton() {
        let s = cone();
        let set = set_at(&s, &s.chart.latin_hypercube(4, 9));
        let p = Potential::Vertical(s.chart.parse("t^2").unwrap());
        let r = yamabe_soliton_solve(&s, &set.g, &p, &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, SolitonVerdict::NotSoliton);
        assert!(r.theorems.tau_eq_f_plus_lambda.is_none());
    }

    #[test]
    fn proportionality_recovers_mu() {
        let s = cone();
        let m = s.metric_at(&[2.0, 0.0, 0.0], MetricTag::G).unwrap();
        let a: Vec<f64> = m.g.components().iter().map(|x| 0.75 * x).collect();
        let (mu, r) = proportionality(&a, &m);
        assert!((mu - 0.75).abs() < 1e-12);
        assert!(r < 1e-12);
    }

    #[test]
    fn cone_suite_passes_by_default() {
        let s = cone();
        let points = s.chart.latin_hypercube(8, 42);
        let recs = verify_cone_suite(
            &s,
            ConeConstants::default(),
            &points,
            Execution::Parallel,
            &Tolerances::default(),
        )
        .unwrap();
        let failed: Vec<_> = recs
            .iter()
            .filter(|r| r.failed())
            .map(|r| (&r.name, r.residual))
            .collect();
        assert!(failed.is_empty(), "{failed:?}");
        assert!(recs.len() >= 40, "{}", recs.len());
    }

    #[test]
    fn cone_suite_detects_wrong_fiber_curvature() {
        let s = cone();
        let points = s.chart.latin_hypercube(4, 42);
        let consts = ConeConstants {
            k_prime: 0.5,
            ..Default::default()
        };
        let recs = verify_cone_suite(&s, consts, &points, Execution::Sequential, &Tolerances::default()).unwrap();
        assert!(recs.iter().find(|r| r.name == "curvature.R1212").unwrap().failed());
    }

    #[test]
    fn bound_constants_flow_into_potentials() {
        let s = cone().bind(&ConstantBindings::new().with("c", 2.0)).unwrap();
        let set = set_at(&s, &[vec![1.0, 0.0, 0.0]]);
        let p = Potential::Vertical(s.chart.parse("c*t").unwrap());
        let r = yamabe_soliton_solve(&s, &set.g, &p, &Tolerances::default()).unwrap();
        assert!((r.samples[0].lambda + 4.0).abs() < 1e-12);
    }
}
