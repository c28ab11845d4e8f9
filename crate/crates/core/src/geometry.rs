//! Connections, curvature, fundamental tensors and Lie derivatives at a point.
//!
//! Everything is computed in the coordinate basis. The core pipeline
//! (Γ, ∇φ, F, θ*, ω, ∇ξ, ∇η) is generic over [`Scalar`] and is run once over
//! [`Dual`] numbers seeded from the structure jets, which yields every
//! derived field together with its first derivatives: ∂Γ for curvature and
//! d(θ*(ξ)), dθ* for the Lee-form conditions. No third-order jets are needed.
//!
//! Index layout (row-major, `d` = dimension):
//! - `gamma[(k*d + i)*d + j]` = Γ^k_ij
//! - `f[(i*d + j)*d + k]` = F(∂ᵢ, ∂ⱼ, ∂ₖ)
//! - `nabla_xi[i*d + a]` = (∇ᵢξ)^a
//! - R13 `[i][j][k][l]` = R^l_kij where R(∂ᵢ,∂ⱼ)∂ₖ = R^l_kij ∂ₗ

use serde::Serialize;

use crate::jets::{Dual, Jet2, Scalar};
use crate::manifold::{AccRStructure, ManifoldError, MetricTag, Potential, StructureJets, StructureValues};
use crate::tensor::{invert_matrix, Frame, MetricAtPoint, PointTensor, TensorError, Variance};

use Variance::{Lower, Upper};

struct Input<S> {
    d: usize,
    g: Vec<S>,
    /// `dg[(i*d + j)*d + k]` = ∂ᵢ g_jk
    dg: Vec<S>,
    phi: Vec<S>,
    /// `dphi[(i*d + a)*d + j]` = ∂ᵢ φ^a_j
    dphi: Vec<S>,
    xi: Vec<S>,
    dxi: Vec<S>,
    eta: Vec<S>,
    deta: Vec<S>,
}

impl<S: Scalar> Input<S> {
    fn from_jets(j: &StructureJets, value: impl Fn(&Jet2) -> S, partial: impl Fn(&Jet2, usize) -> S) -> Self {
        let d = j.dim;
        let derivs = |c: &[Jet2]| -> Vec<S> {
            (0..d)
                .flat_map(|i| c.iter().map(|x| partial(x, i)).collect::<Vec<_>>())
                .collect()
        };
        Input {
            d,
            g: j.g.iter().map(&value).collect(),
            dg: derivs(&j.g),
            phi: j.phi.iter().map(&value).collect(),
            dphi: derivs(&j.phi),
            xi: j.xi.iter().map(&value).collect(),
            dxi: derivs(&j.xi),
            eta: j.eta.iter().map(&value).collect(),
            deta: derivs(&j.eta),
        }
    }
}

struct Fields<S> {
    ginv: Vec<S>,
    gamma: Vec<S>,
    f: Vec<S>,
    theta: Vec<S>,
    omega: Vec<S>,
    nabla_xi: Vec<S>,
    nabla_eta: Vec<S>,
}

fn sum<S: Scalar>(iter: impl Iterator<Item = S>) -> S {
    iter.fold(S::zero(), |a, b| a + b)
}

fn pipeline<S: Scalar>(inp: &Input<S>) -> Result<Fields<S>, TensorError> {
    let d = inp.d;
    let ginv = invert_matrix(&inp.g, d)?;
    let mut gamma = vec![S::zero(); d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in i..d {
                let v = sum((0..d).map(|l| {
                    ginv[k * d + l]
                        * (inp.dg[(i * d + j) * d + l] + inp.dg[(j * d + i) * d + l] - inp.dg[(l * d + i) * d + j])
                }))
                .scale(0.5);
                gamma[(k * d + i) * d + j] = v;
                gamma[(k * d + j) * d + i] = v;
            }
        }
    }
    let mut nabla_phi = vec![S::zero(); d * d * d];
    for i in 0..d {
        for a in 0..d {
            for j in 0..d {
                nabla_phi[(i * d + a) * d + j] = inp.dphi[(i * d + a) * d + j]
                    + sum((0..d).map(|c| gamma[(a * d + i) * d + c] * inp.phi[c * d + j]))
                    - sum((0..d).map(|c| gamma[(c * d + i) * d + j] * inp.phi[a * d + c]));
            }
        }
    }
    let mut f = vec![S::zero(); d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                f[(i * d + j) * d + k] = sum((0..d).map(|a| inp.g[a * d + k] * nabla_phi[(i * d + a) * d + j]));
            }
        }
    }
    let theta = (0..d)
        .map(|z| {
            sum((0..d).flat_map(|i| {
                let (ginv, f, phi) = (&ginv, &f, &inp.phi);
                (0..d).flat_map(move |j| (0..d).map(move |b| ginv[i * d + j] * phi[b * d + j] * f[(i * d + b) * d + z]))
            }))
        })
        .collect();
    let omega = (0..d)
        .map(|z| {
            sum((0..d).flat_map(|a| {
                let (xi, f) = (&inp.xi, &f);
                (0..d).map(move |b| xi[a] * xi[b] * f[(a * d + b) * d + z])
            }))
        })
        .collect();
    let mut nabla_xi = vec![S::zero(); d * d];
    let mut nabla_eta = vec![S::zero(); d * d];
    for i in 0..d {
        for a in 0..d {
            nabla_xi[i * d + a] = inp.dxi[i * d + a] + sum((0..d).map(|c| gamma[(a * d + i) * d + c] * inp.xi[c]));
            nabla_eta[i * d + a] = inp.deta[i * d + a] - sum((0..d).map(|c| gamma[(c * d + i) * d + a] * inp.eta[c]));
        }
    }
    Ok(Fields {
        ginv,
        gamma,
        f,
        theta,
        omega,
        nabla_xi,
        nabla_eta,
    })
}

/// Trilinear form with coordinate components `c[(a*d + b)*d + e]`.
#[derive(Clone, Copy)]
struct Trilinear<'a> {
    d: usize,
    c: &'a [f64],
}

impl Trilinear<'_> {
    fn eval(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let d = self.d;
        let mut s = 0.0;
        for a in 0..d {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..d {
                if y[b] == 0.0 {
                    continue;
                }
                let xy = x[a] * y[b];
                for e in 0..d {
                    s += xy * self.c[(a * d + b) * d + e] * z[e];
                }
            }
        }
        s
    }
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
}

fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    max_abs(a.iter().zip(b).map(|(x, y)| x - y))
}

/// Levi-Civita connection coefficients at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionAtPoint {
    pub tag: MetricTag,
    pub point: Vec<f64>,
    pub dim: usize,
    /// `gamma[(k*d + i)*d + j]` = Γ^k_ij
    pub gamma: Vec<f64>,
}

impl ConnectionAtPoint {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let d = self.dim;
        self.gamma[(k * d + i) * d + j]
    }

    pub fn max_abs_diff(&self, other: &ConnectionAtPoint) -> f64 {
        max_abs_diff(&self.gamma, &other.gamma)
    }

    /// max |Γ^k_ij − Γ^k_ji|
    pub fn torsion(&self) -> f64 {
        let d = self.dim;
        let mut m = 0.0f64;
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    m = m.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        m
    }

    /// Components ∇ₓy for coordinate-component vectors.
    pub fn covariant(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += self.get(k, i, j) * x[i] * y[j];
                    }
                }
                s
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureAtPoint {
    /// Variance (L, L, L, U): `[i][j][k][l]` = R^l_kij.
    pub r13: PointTensor,
    /// `[i][j][k][w]` = R(∂ᵢ, ∂ⱼ, ∂ₖ, ∂_w) = g(R(∂ᵢ,∂ⱼ)∂ₖ, ∂_w).
    pub r04: PointTensor,
    pub rho: PointTensor,
    pub tau: f64,
    pub tau_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FundamentalTensorAtPoint {
    pub tag: MetricTag,
    pub f: PointTensor,
    pub theta_star: Vec<f64>,
    pub omega: Vec<f64>,
}

/// Every pointwise differential quantity of one metric of the pair.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub tag: MetricTag,
    pub point: Vec<f64>,
    pub n: usize,
    pub dim: usize,
    /// g, φ, ξ, η (always the first metric g, whatever the tag).
    pub structure: StructureValues,
    /// The tagged metric with its inverse.
    pub metric: MetricAtPoint,
    /// `dg[(i*d + j)*d + k]` = ∂ᵢ (metric)_jk
    pub dg: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `dgamma[m*d³ + (k*d + i)*d + j]` = ∂ₘ Γ^k_ij
    pub dgamma: Vec<f64>,
    pub curvature: CurvatureAtPoint,
    pub f: Vec<f64>,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub theta_xi: f64,
    /// d(θ*(ξ))
    pub d_theta_xi: Vec<f64>,
    /// dθ*, `[i*d + j]` = ∂ᵢθ*ⱼ − ∂ⱼθ*ᵢ
    pub d_theta: Vec<f64>,
    pub nabla_xi: Vec<f64>,
    pub nabla_eta: Vec<f64>,
    /// Best h with ∇ₓξ = −h φ²x, its differential and the fit residual.
    pub h: f64,
    pub dh: Vec<f64>,
    pub h_residual: f64,
}

impl PointGeometry {
    pub fn new(s: &AccRStructure, tag: MetricTag, point: &[f64]) -> Result<Self, ManifoldError> {
        let structure = s.values_at(point)?;
        let jets = s.metric_jets_at(point, tag)?;
        let d = jets.dim;
        let inp: Input<Dual> = Input::from_jets(&jets, Jet2::to_dual, Jet2::partial_dual);
        let fields = pipeline(&inp)?;
        let g: Vec<f64> = inp.g.iter().map(|x| x.value).collect();
        let ginv: Vec<f64> = fields.ginv.iter().map(|x| x.value).collect();
        let g_t = PointTensor::from_components(d, vec![Lower, Lower], g.clone())?;
        let metric = MetricAtPoint {
            signature: crate::tensor::signature(&g_t),
            g: g_t,
            g_inv: PointTensor::from_components(d, vec![Upper, Upper], ginv)?,
        };
        let values = |v: &[Dual]| -> Vec<f64> { v.iter().map(|x| x.value).collect() };
        let gamma = values(&fields.gamma);
        let mut dgamma = vec![0.0; d * d * d * d];
        for m in 0..d {
            for (q, gm) in fields.gamma.iter().enumerate() {
                dgamma[m * d * d * d + q] = gm.grad[m];
            }
        }
        let theta_xi_dual = sum((0..d).map(|z| fields.theta[z] * inp.xi[z]));
        let mut d_theta = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                d_theta[i * d + j] = fields.theta[j].grad[i] - fields.theta[i].grad[j];
            }
        }

        // h from ∇ₓξ = −h φ²x by least squares over components.
        let mut num = Dual::constant(0.0);
        let mut den = Dual::constant(0.0);
        for i in 0..d {
            for a in 0..d {
                let phi2 = sum((0..d).map(|c| inp.phi[a * d + c] * inp.phi[c * d + i]));
                num = num + fields.nabla_xi[i * d + a] * phi2;
                den = den + phi2 * phi2;
            }
        }
        let h_dual = -(num / den);
        let nabla_xi = values(&fields.nabla_xi);
        let mut h_residual = 0.0f64;
        for i in 0..d {
            for a in 0..d {
                let phi2: f64 = (0..d)
                    .map(|c| structure.phi.get(&[a, c]) * structure.phi.get(&[c, i]))
                    .sum();
                h_residual = h_residual.max((nabla_xi[i * d + a] + h_dual.value * phi2).abs());
            }
        }

        let phi_vals: Vec<f64> = values(&inp.phi);
        let curvature = curvature_from(d, &metric, &gamma, &dgamma, &phi_vals)?;
        Ok(PointGeometry {
            tag,
            point: point.to_vec(),
            n: s.n(),
            dim: d,
            structure,
            metric,
            dg: values(&inp.dg),
            gamma,
            dgamma,
            curvature,
            f: values(&fields.f),
            theta: values(&fields.theta),
            omega: values(&fields.omega),
            theta_xi: theta_xi_dual.value,
            d_theta_xi: theta_xi_dual.gradient(d).to_vec(),
            d_theta,
            nabla_xi,
            nabla_eta: values(&fields.nabla_eta),
            h: h_dual.value,
            dh: h_dual.gradient(d).to_vec(),
            h_residual,
        })
    }

    fn g(&self, i: usize, j: usize) -> f64 {
        self.metric.g.components()[i * self.dim + j]
    }

    fn ginv(&self, i: usize, j: usize) -> f64 {
        self.metric.g_inv.components()[i * self.dim + j]
    }

    fn f_form(&self) -> Trilinear<'_> {
        Trilinear {
            d: self.dim,
            c: &self.f,
        }
    }

    pub fn phi(&self, x: &[f64]) -> Vec<f64> {
        self.structure.apply_phi(x)
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        self.structure.eta_of(x)
    }

    pub fn xi(&self) -> &[f64] {
        &self.structure.xi
    }

    /// The tagged metric applied to two vectors.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.metric.inner(x, y)
    }

    pub fn connection(&self) -> ConnectionAtPoint {
        ConnectionAtPoint {
            tag: self.tag,
            point: self.point.clone(),
            dim: self.dim,
            gamma: self.gamma.clone(),
        }
    }

    pub fn fundamental(&self) -> FundamentalTensorAtPoint {
        FundamentalTensorAtPoint {
            tag: self.tag,
            f: PointTensor::from_components(self.dim, vec![Lower, Lower, Lower], self.f.clone())
                .expect("F has d³ components"),
            theta_star: self.theta.clone(),
            omega: self.omega.clone(),
        }
    }

    /// The (1,1) tensor x ↦ ∇ₓξ, `get(&[a, i])` = (∇ᵢξ)^a.
    pub fn nabla_xi_tensor(&self) -> PointTensor {
        let d = self.dim;
        PointTensor::from_fn(d, vec![Upper, Lower], |ai| self.nabla_xi[ai[1] * d + ai[0]])
    }

    pub fn nabla_xi_along(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|a| (0..d).map(|i| x[i] * self.nabla_xi[i * d + a]).sum())
            .collect()
    }

    /// The φ-adapted frame {e₁…eₙ, φe₁…φeₙ, ξ} of the first metric g.
    pub fn phi_frame(&self) -> Result<Frame, TensorError> {
        let g = MetricAtPoint::new(self.structure.g.clone())?;
        Frame::phi_adapted(&g, &self.structure.phi, &self.structure.xi, &self.structure.eta)
    }

    /// ξ(θ*(ξ))
    pub fn xi_theta_xi(&self) -> f64 {
        self.d_theta_xi.iter().zip(self.xi()).map(|(a, b)| a * b).sum()
    }

    /// dh(ξ)
    pub fn dh_xi(&self) -> f64 {
        self.dh.iter().zip(self.xi()).map(|(a, b)| a * b).sum()
    }

    /// max |∂ₖg_ij − Γ^l_ki g_lj − Γ^l_kj g_il|
    pub fn metric_compatibility_residual(&self) -> f64 {
        let d = self.dim;
        let mut m = 0.0f64;
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut r = self.dg[(k * d + i) * d + j];
                    for l in 0..d {
                        r -= self.gamma[(l * d + k) * d + i] * self.g(l, j)
                            + self.gamma[(l * d + k) * d + j] * self.g(i, l);
                    }
                    m = m.max(r.abs());
                }
            }
        }
        m
    }

    /// max |η(∇ₓξ)| over coordinate vectors x.
    pub fn eta_nabla_xi_residual(&self) -> f64 {
        let d = self.dim;
        max_abs((0..d).map(|i| self.eta(&self.nabla_xi[i * d..(i + 1) * d])))
    }

    /// Antisymmetry in both pairs, pair symmetry and the first Bianchi identity.
    pub fn curvature_symmetry_residuals(&self) -> CurvatureSymmetry {
        let r = &self.curvature.r04;
        let d = self.dim;
        let mut bianchi = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for w in 0..d {
                        let b = r.get(&[i, j, k, w]) + r.get(&[j, k, i, w]) + r.get(&[k, i, j, w]);
                        bianchi = bianchi.max(b.abs());
                    }
                }
            }
        }
        CurvatureSymmetry {
            first_pair: r.symmetry_violation(&[1, 0, 2, 3], -1.0).unwrap_or(f64::INFINITY),
            second_pair: r.symmetry_violation(&[0, 1, 3, 2], -1.0).unwrap_or(f64::INFINITY),
            pair_exchange: r.symmetry_violation(&[2, 3, 0, 1], 1.0).unwrap_or(f64::INFINITY),
            bianchi,
            ricci_symmetry: self
                .curvature
                .rho
                .symmetry_violation(&[1, 0], 1.0)
                .unwrap_or(f64::INFINITY),
        }
    }

    /// F(x,y,z) = F(x,z,y) and
    /// F(x,y,z) = F(x,φy,φz) + η(y)F(x,ξ,z) + η(z)F(x,y,ξ).
    pub fn f_prop1_residual(&self) -> f64 {
        let d = self.dim;
        let f = self.f_form();
        let xi = self.xi();
        let mut m = 0.0f64;
        for i in 0..d {
            let x = unit(d, i);
            for j in 0..d {
                let y = unit(d, j);
                let py = self.phi(&y);
                for k in 0..d {
                    let z = unit(d, k);
                    let pz = self.phi(&z);
                    let v = f.eval(&x, &y, &z);
                    m = m.max((v - f.eval(&x, &z, &y)).abs());
                    let rhs =
                        f.eval(&x, &py, &pz) + self.eta(&y) * f.eval(&x, xi, &z) + self.eta(&z) * f.eval(&x, &y, xi);
                    m = m.max((v - rhs).abs());
                }
            }
        }
        m
    }

    /// F(x,φy,ξ) = (∇ₓη)y = g(∇ₓξ,y), with g and ∇ of the tagged metric.
    pub fn f_prop2_residual(&self) -> f64 {
        let d = self.dim;
        let f = self.f_form();
        let mut m = 0.0f64;
        for i in 0..d {
            let x = unit(d, i);
            let nx = self.nabla_xi_along(&x);
            for j in 0..d {
                let y = unit(d, j);
                let a = f.eval(&x, &self.phi(&y), self.xi());
                let b = self.nabla_eta[i * d + j];
                let c = self.inner(&nx, &y);
                m = m.max((a - b).abs()).max((a - c).abs());
            }
        }
        m
    }

    /// d(θ*(ξ)) − ξ(θ*(ξ))η
    pub fn f50_residual(&self) -> f64 {
        let s = self.xi_theta_xi();
        max_abs(self.d_theta_xi.iter().zip(&self.structure.eta).map(|(a, e)| a - s * e))
    }

    /// max |dθ*|
    pub fn lee_form_closedness(&self) -> f64 {
        max_abs(self.d_theta.iter().copied())
    }

    /// Residual of ∇ₓξ = −h φ²x for the supplied h (not the fitted one).
    pub fn tf_nxi_residual(&self, h: f64) -> f64 {
        let d = self.dim;
        let mut m = 0.0f64;
        for i in 0..d {
            let x = unit(d, i);
            let p2 = self.phi(&self.phi(&x));
            let nx = self.nabla_xi_along(&x);
            m = m.max(max_abs(nx.iter().zip(&p2).map(|(a, b)| a + h * b)));
        }
        m
    }

    /// R(x,y)ξ against −{dh(x)+h²η(x)}φ²y + {dh(y)+h²η(y)}φ²x.
    pub fn r_tf_residual(&self, h: f64, dh: &[f64]) -> f64 {
        let d = self.dim;
        let r = &self.curvature.r13;
        let xi = self.xi();
        let eta = &self.structure.eta;
        let mut m = 0.0f64;
        for i in 0..d {
            let p2x = self.phi(&self.phi(&unit(d, i)));
            for j in 0..d {
                let p2y = self.phi(&self.phi(&unit(d, j)));
                let ax = dh[i] + h * h * eta[i];
                let ay = dh[j] + h * h * eta[j];
                for l in 0..d {
                    let lhs: f64 = (0..d).map(|k| r.get(&[i, j, k, l]) * xi[k]).sum();
                    let rhs = -ax * p2y[l] + ay * p2x[l];
                    m = m.max((lhs - rhs).abs());
                }
            }
        }
        m
    }

    /// The three consequences of the torse-forming curvature identity:
    /// R(ξ,y)z, ρ(y,ξ) and ρ(ξ,ξ).
    pub fn rho_tf_residuals(&self, h: f64, dh: &[f64]) -> [f64; 3] {
        let d = self.dim;
        let n = self.n as f64;
        let xi = self.xi().to_vec();
        let eta = self.structure.eta.clone();
        let r = &self.curvature.r13;
        let grad_h: Vec<f64> = (0..d).map(|l| (0..d).map(|m| self.ginv(l, m) * dh[m]).sum()).collect();
        let dh_xi: f64 = dh.iter().zip(&xi).map(|(a, b)| a * b).sum();
        let mut r_xi = 0.0f64;
        for j in 0..d {
            let y = unit(d, j);
            let py = self.phi(&y);
            let p2y = self.phi(&py);
            for k in 0..d {
                let z = unit(d, k);
                let pz = self.phi(&z);
                let gpp = self.inner(&py, &pz);
                let gyz = self.g(j, k);
                for l in 0..d {
                    let lhs: f64 = (0..d).map(|i| xi[i] * r.get(&[i, j, k, l])).sum();
                    let rhs = gpp * grad_h[l] - dh[k] * p2y[l] + h * h * (eta[k] * y[l] - gyz * xi[l]);
                    r_xi = r_xi.max((lhs - rhs).abs());
                }
            }
        }
        let rho = &self.curvature.rho;
        let rho_xi = |j: usize| -> f64 { (0..d).map(|k| rho.get(&[j, k]) * xi[k]).sum() };
        let rho_y_xi =
            max_abs((0..d).map(|j| rho_xi(j) + (2.0 * n - 1.0) * dh[j] + (dh_xi + 2.0 * n * h * h) * eta[j]));
        let rho_xx: f64 = (0..d).map(|j| xi[j] * rho_xi(j)).sum();
        let rho_xi_xi = (rho_xx + 2.0 * n * (dh_xi + h * h)).abs();
        [r_xi, rho_y_xi, rho_xi_xi]
    }

    /// Residual of F(x,y,ξ) = −h g(x,φy).
    pub fn tf_fxi_residual(&self, h: f64) -> f64 {
        let d = self.dim;
        let f = self.f_form();
        let mut m = 0.0f64;
        for i in 0..d {
            let x = unit(d, i);
            for j in 0..d {
                let y = unit(d, j);
                let v = f.eval(&x, &y, self.xi()) + h * self.inner(&x, &self.phi(&y));
                m = m.max(v.abs());
            }
        }
        m
    }

    /// Residual of F(ξ,y,z) = 0 and of ω = 0.
    pub fn f5_vertical_residuals(&self) -> (f64, f64) {
        let d = self.dim;
        let f = self.f_form();
        let mut m = 0.0f64;
        for j in 0..d {
            for k in 0..d {
                m = m.max(f.eval(self.xi(), &unit(d, j), &unit(d, k)).abs());
            }
        }
        (m, max_abs(self.omega.iter().copied()))
    }

    /// max |F|
    pub fn f_norm(&self) -> f64 {
        max_abs(self.f.iter().copied())
    }

    /// Residual of the F₅ shape
    /// F(x,y,z) = −(θ*(ξ)/2n){g(x,φy)η(z) + g(x,φz)η(y)}.
    pub fn f5_residual(&self) -> f64 {
        let d = self.dim;
        let f = self.f_form();
        let c = self.theta_xi / (2.0 * self.n as f64);
        let mut m = 0.0f64;
        for i in 0..d {
            let x = unit(d, i);
            for j in 0..d {
                let y = unit(d, j);
                let gxpy = self.inner(&x, &self.phi(&y));
                for k in 0..d {
                    let z = unit(d, k);
                    let gxpz = self.inner(&x, &self.phi(&z));
                    let rhs = -c * (gxpy * self.eta(&z) + gxpz * self.eta(&y));
                    m = m.max((f.eval(&x, &y, &z) - rhs).abs());
                }
            }
        }
        m
    }

    /// Residual of F(x,y,z) = g(φx,φy)η(z) + g(φx,φz)η(y).
    pub fn sasaki_like_residual(&self) -> f64 {
        sasaki_like_residual(self.dim, &self.f, &self.metric, &self.structure)
    }

    /// (∇ₓη)y = g(∇ₓξ, y) as a (0,2) tensor `[i][j]`.
    pub fn nabla_eta_tensor(&self) -> PointTensor {
        PointTensor::from_components(self.dim, vec![Lower, Lower], self.nabla_eta.clone()).expect("d² components")
    }

    /// Metric (g or g̃) as a flat row-major slice.
    pub fn metric_components(&self) -> &[f64] {
        self.metric.g.components()
    }
}

/// Residuals of the curvature tensor symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSymmetry {
    pub first_pair: f64,
    pub second_pair: f64,
    pub pair_exchange: f64,
    pub bianchi: f64,
    pub ricci_symmetry: f64,
}

impl CurvatureSymmetry {
    pub fn max(&self) -> f64 {
        self.first_pair
            .max(self.second_pair)
            .max(self.pair_exchange)
            .max(self.bianchi)
            .max(self.ricci_symmetry)
    }
}

/// Pointwise distance of F from the Sasaki-like shape; usable on synthetic data.
pub fn sasaki_like_residual(d: usize, f: &[f64], metric: &MetricAtPoint, s: &StructureValues) -> f64 {
    let form = Trilinear { d, c: f };
    let mut m = 0.0f64;
    for i in 0..d {
        let x = unit(d, i);
        let px = s.apply_phi(&x);
        for j in 0..d {
            let y = unit(d, j);
            let py = s.apply_phi(&y);
            for k in 0..d {
                let z = unit(d, k);
                let pz = s.apply_phi(&z);
                let rhs = metric.inner(&px, &py) * s.eta_of(&z) + metric.inner(&px, &pz) * s.eta_of(&y);
                m = m.max((form.eval(&x, &y, &z) - rhs).abs());
            }
        }
    }
    m
}

/// The F tensor components that exactly satisfy the Sasaki-like shape.
pub fn sasaki_like_shape(d: usize, metric: &MetricAtPoint, s: &StructureValues) -> Vec<f64> {
    let mut out = vec![0.0; d * d * d];
    for i in 0..d {
        let px = s.apply_phi(&unit(d, i));
        for j in 0..d {
            let y = unit(d, j);
            let py = s.apply_phi(&y);
            for k in 0..d {
                let z = unit(d, k);
                let pz = s.apply_phi(&z);
                out[(i * d + j) * d + k] =
                    metric.inner(&px, &py) * s.eta_of(&z) + metric.inner(&px, &pz) * s.eta_of(&y);
            }
        }
    }
    out
}

fn curvature_from(
    d: usize,
    metric: &MetricAtPoint,
    gamma: &[f64],
    dgamma: &[f64],
    phi: &[f64],
) -> Result<CurvatureAtPoint, TensorError> {
    let d3 = d * d * d;
    let gm = |l: usize, i: usize, j: usize| gamma[(l * d + i) * d + j];
    let dgm = |m: usize, l: usize, i: usize, j: usize| dgamma[m * d3 + (l * d + i) * d + j];
    let mut r13 = PointTensor::zeros(d, vec![Lower, Lower, Lower, Upper]);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut v = dgm(i, l, j, k) - dgm(j, l, i, k);
                    for m in 0..d {
                        v += gm(l, i, m) * gm(m, j, k) - gm(l, j, m) * gm(m, i, k);
                    }
                    r13.set(&[i, j, k, l], v);
                }
            }
        }
    }
    let r04 = r13.raise_lower(3, metric)?;
    let rho = r13.contract(0, 3)?;
    let g_inv = metric.g_inv.components();
    let mut tau = 0.0;
    let mut tau_star = 0.0;
    for i in 0..d {
        for j in 0..d {
            tau += g_inv[i * d + j] * rho.get(&[i, j]);
            for s in 0..d {
                tau_star += g_inv[i * d + j] * rho.get(&[i, s]) * phi[s * d + j];
            }
        }
    }
    Ok(CurvatureAtPoint {
        r13,
        r04,
        rho,
        tau,
        tau_star,
    })
}

pub fn christoffel(s: &AccRStructure, tag: MetricTag, point: &[f64]) -> Result<ConnectionAtPoint, ManifoldError> {
    Ok(PointGeometry::new(s, tag, point)?.connection())
}

pub fn nabla_xi(s: &AccRStructure, tag: MetricTag, point: &[f64]) -> Result<PointTensor, ManifoldError> {
    Ok(PointGeometry::new(s, tag, point)?.nabla_xi_tensor())
}

pub fn curvature(s: &AccRStructure, tag: MetricTag, point: &[f64]) -> Result<CurvatureAtPoint, ManifoldError> {
    Ok(PointGeometry::new(s, tag, point)?.curvature)
}

pub fn fundamental_tensor(
    s: &AccRStructure,
    tag: MetricTag,
    point: &[f64],
) -> Result<FundamentalTensorAtPoint, ManifoldError> {
    Ok(PointGeometry::new(s, tag, point)?.fundamental())
}

/// Γ from central finite differences of metric values, independent of jets.
pub fn christoffel_finite_difference(
    s: &AccRStructure,
    tag: MetricTag,
    point: &[f64],
    step: f64,
) -> Result<ConnectionAtPoint, ManifoldError> {
    let d = s.dim();
    let metric_at = |p: &[f64]| -> Result<Vec<f64>, ManifoldError> {
        let v = s.values_unchecked(p)?;
        Ok(match tag {
            MetricTag::G => v.g.components().to_vec(),
            MetricTag::GTilde => crate::manifold::associated_metric_values(&v).components().to_vec(),
        })
    };
    s.check_point(point)?;
    let g0 = metric_at(point)?;
    let mut dg = vec![0.0; d * d * d];
    for i in 0..d {
        let mut plus = point.to_vec();
        let mut minus = point.to_vec();
        plus[i] += step;
        minus[i] -= step;
        let gp = metric_at(&plus)?;
        let gm = metric_at(&minus)?;
        for q in 0..d * d {
            dg[i * d * d + q] = (gp[q] - gm[q]) / (2.0 * step);
        }
    }
    let ginv = invert_matrix(&g0, d)?;
    let mut gamma = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                gamma[(k * d + i) * d + j] = 0.5
                    * (0..d)
                        .map(|l| {
                            ginv[k * d + l]
                                * (dg[(i * d + j) * d + l] + dg[(j * d + i) * d + l] - dg[(l * d + i) * d + j])
                        })
                        .sum::<f64>();
            }
        }
    }
    Ok(ConnectionAtPoint {
        tag,
        point: point.to_vec(),
        dim: d,
        gamma,
    })
}

/// F̃ assembled from F of the first metric g:
///
/// 2F̃(x,y,z) = F(φy,z,x) − F(y,φz,x) + F(φz,y,x) − F(z,φy,x)
///   + {F(x,y,ξ) + F(φy,φx,ξ) + F(x,φy,ξ)}η(z)
///   + {F(x,z,ξ) + F(φz,φx,ξ) + F(x,φz,ξ)}η(y)
///   + {F(y,z,ξ) + F(φz,φy,ξ) + F(z,y,ξ) + F(φy,φz,ξ)}η(x)
pub fn f_tilde_from(g_geom: &PointGeometry) -> PointTensor {
    assert_eq!(g_geom.tag, MetricTag::G, "relation takes F of the first metric");
    f_tilde_from_components(g_geom.dim, &g_geom.f, &g_geom.structure)
}

/// Same relation for arbitrary F components (used for sensitivity checks).
pub fn f_tilde_from_components(d: usize, f: &[f64], s: &StructureValues) -> PointTensor {
    let f = Trilinear { d, c: f };
    let xi = &s.xi;
    let e: Vec<Vec<f64>> = (0..d).map(|i| unit(d, i)).collect();
    let pe: Vec<Vec<f64>> = e.iter().map(|x| s.apply_phi(x)).collect();
    PointTensor::from_fn(d, vec![Lower, Lower, Lower], |ijk| {
        let (i, j, k) = (ijk[0], ijk[1], ijk[2]);
        let (x, y, z) = (&e[i], &e[j], &e[k]);
        let (px, py, pz) = (&pe[i], &pe[j], &pe[k]);
        let mut v = f.eval(py, z, x) - f.eval(y, pz, x) + f.eval(pz, y, x) - f.eval(z, py, x);
        v += (f.eval(x, y, xi) + f.eval(py, px, xi) + f.eval(x, py, xi)) * s.eta_of(z);
        v += (f.eval(x, z, xi) + f.eval(pz, px, xi) + f.eval(x, pz, xi)) * s.eta_of(y);
        v += (f.eval(y, z, xi) + f.eval(pz, py, xi) + f.eval(z, y, xi) + f.eval(py, pz, xi)) * s.eta_of(x);
        0.5 * v
    })
}

pub fn f_tilde_via_relation(s: &AccRStructure, point: &[f64]) -> Result<PointTensor, ManifoldError> {
    Ok(f_tilde_from(&PointGeometry::new(s, MetricTag::G, point)?))
}

/// ∇̃ from ∇, F and ω of the first metric:
///
/// ```text
/// 2g(∇̃ₓy,z) = 2g(∇ₓy,z) − F(x,y,φz) − F(y,x,φz) + F(φz,x,y)
///   + {F(y,z,ξ) + F(φz,φy,ξ) − ω(φy)η(z)}η(x)
///   + {F(x,z,ξ) + F(φz,φx,ξ) − ω(φx)η(z)}η(y)
///   − {F(ξ,x,y) − F(y,x,ξ) − F(x,φy,ξ) − F(x,y,ξ) − F(y,φx,ξ)}η(z)
/// ```
pub fn nabla_tilde_from(g_geom: &PointGeometry) -> ConnectionAtPoint {
    assert_eq!(g_geom.tag, MetricTag::G, "relation takes ∇ of the first metric");
    let d = g_geom.dim;
    let f = g_geom.f_form();
    let s = &g_geom.structure;
    let xi = &s.xi;
    let omega = |v: &[f64]| -> f64 { g_geom.omega.iter().zip(v).map(|(a, b)| a * b).sum() };
    let e: Vec<Vec<f64>> = (0..d).map(|i| unit(d, i)).collect();
    let pe: Vec<Vec<f64>> = e.iter().map(|x| s.apply_phi(x)).collect();
    // b[(i*d + j)*d + l] = 2g(∇̃_∂i ∂j, ∂l)
    let mut b = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for l in 0..d {
                let (x, y, z) = (&e[i], &e[j], &e[l]);
                let (px, py, pz) = (&pe[i], &pe[j], &pe[l]);
                let lowered: f64 = (0..d).map(|k| g_geom.gamma[(k * d + i) * d + j] * g_geom.g(k, l)).sum();
                let mut v = 2.0 * lowered - f.eval(x, y, pz) - f.eval(y, x, pz) + f.eval(pz, x, y);
                v += (f.eval(y, z, xi) + f.eval(pz, py, xi) - omega(py) * s.eta_of(z)) * s.eta_of(x);
                v += (f.eval(x, z, xi) + f.eval(pz, px, xi) - omega(px) * s.eta_of(z)) * s.eta_of(y);
                v -= (f.eval(xi, x, y) - f.eval(y, x, xi) - f.eval(x, py, xi) - f.eval(x, y, xi) - f.eval(y, px, xi))
                    * s.eta_of(z);
                b[(i * d + j) * d + l] = v;
            }
        }
    }
    let mut gamma = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                gamma[(k * d + i) * d + j] =
                    0.5 * (0..d).map(|l| g_geom.ginv(k, l) * b[(i * d + j) * d + l]).sum::<f64>();
            }
        }
    }
    ConnectionAtPoint {
        tag: MetricTag::GTilde,
        point: g_geom.point.clone(),
        dim: d,
        gamma,
    }
}

pub fn nabla_tilde_via_relation(s: &AccRStructure, point: &[f64]) -> Result<ConnectionAtPoint, ManifoldError> {
    Ok(nabla_tilde_from(&PointGeometry::new(s, MetricTag::G, point)?))
}

/// The F₅-only relation ∇̃ₓy = ∇ₓy − (θ*(ξ)/2n){g(x,φy) + g(φx,φy)}ξ.
pub fn nabla_tilde_f5_from(g_geom: &PointGeometry) -> ConnectionAtPoint {
    assert_eq!(g_geom.tag, MetricTag::G, "relation takes ∇ of the first metric");
    let d = g_geom.dim;
    let s = &g_geom.structure;
    let c = g_geom.theta_xi / (2.0 * g_geom.n as f64);
    let mut gamma = g_geom.gamma.clone();
    for i in 0..d {
        let x = unit(d, i);
        let px = s.apply_phi(&x);
        for j in 0..d {
            let py = s.apply_phi(&unit(d, j));
            let w = c * (s.inner(&x, &py) + s.inner(&px, &py));
            for k in 0..d {
                gamma[(k * d + i) * d + j] -= w * s.xi[k];
            }
        }
    }
    ConnectionAtPoint {
        tag: MetricTag::GTilde,
        point: g_geom.point.clone(),
        dim: d,
        gamma,
    }
}

/// The three evaluations of L_ϑ(metric) at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LieDerivative {
    /// ϑ^k∂ₖg_ij + g_kj∂ᵢϑ^k + g_ik∂ⱼϑ^k
    pub coordinate: PointTensor,
    /// g(∇ᵢϑ, ∂ⱼ) + g(∂ᵢ, ∇ⱼϑ)
    pub covariant: PointTensor,
    /// dk⊗η + η⊗dk + k{g(∇ξ,·) + g(·,∇ξ)}, only for ϑ = kξ.
    pub expanded: Option<PointTensor>,
}

impl LieDerivative {
    /// Largest disagreement between the available routes.
    pub fn route_mismatch(&self) -> f64 {
        let mut m = self.coordinate.max_abs_diff(&self.covariant).unwrap_or(f64::INFINITY);
        if let Some(e) = &self.expanded {
            m = m.max(e.max_abs_diff(&self.covariant).unwrap_or(f64::INFINITY));
        }
        m
    }
}

/// Value and gradient of each potential component.
pub fn potential_components(
    s: &AccRStructure,
    potential: &Potential,
    point: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ManifoldError> {
    let jets = potential.jets_at(s, point)?;
    Ok((
        jets.iter().map(Jet2::value).collect(),
        jets.iter().map(|j| j.gradient().to_vec()).collect(),
    ))
}

/// (∇ᵢϑ)^a as `[i*d + a]`.
pub fn covariant_derivative_of(geom: &PointGeometry, theta: &[f64], dtheta: &[Vec<f64>]) -> Vec<f64> {
    let d = geom.dim;
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for a in 0..d {
            out[i * d + a] = dtheta[a][i] + (0..d).map(|c| geom.gamma[(a * d + i) * d + c] * theta[c]).sum::<f64>();
        }
    }
    out
}

pub fn lie_derivative_at(
    geom: &PointGeometry,
    s: &AccRStructure,
    potential: &Potential,
) -> Result<LieDerivative, ManifoldError> {
    let d = geom.dim;
    let point = &geom.point;
    let (theta, dtheta) = potential_components(s, potential, point)?;
    let g = |i: usize, j: usize| geom.g(i, j);
    let coordinate = PointTensor::from_fn(d, vec![Lower, Lower], |ij| {
        let (i, j) = (ij[0], ij[1]);
        (0..d)
            .map(|k| theta[k] * geom.dg[(k * d + i) * d + j] + g(k, j) * dtheta[k][i] + g(i, k) * dtheta[k][j])
            .sum()
    });
    let nt = covariant_derivative_of(geom, &theta, &dtheta);
    let covariant = PointTensor::from_fn(d, vec![Lower, Lower], |ij| {
        let (i, j) = (ij[0], ij[1]);
        (0..d).map(|a| nt[i * d + a] * g(a, j) + g(i, a) * nt[j * d + a]).sum()
    });
    let expanded = match potential {
        Potential::Vertical(k) => {
            let kj = k.eval_jet(point, s.bindings())?;
            let eta = &geom.structure.eta;
            let nx = &geom.nabla_xi;
            Some(PointTensor::from_fn(d, vec![Lower, Lower], |ij| {
                let (i, j) = (ij[0], ij[1]);
                let sym: f64 = (0..d).map(|a| nx[i * d + a] * g(a, j) + g(i, a) * nx[j * d + a]).sum();
                kj.partial(i) * eta[j] + kj.partial(j) * eta[i] + kj.value() * sym
            }))
        }
        Potential::Field(_) => None,
    };
    Ok(LieDerivative {
        coordinate,
        covariant,
        expanded,
    })
}

pub fn lie_derivative_metric(
    s: &AccRStructure,
    tag: MetricTag,
    potential: &Potential,
    point: &[f64],
) -> Result<LieDerivative, ManifoldError> {
    lie_derivative_at(&PointGeometry::new(s, tag, point)?, s, potential)
}

/// A differential form field known at a point to first order.
#[derive(Debug, Clone)]
pub enum FormField {
    Scalar(Dual),
    OneForm(Vec<Dual>),
}

/// d of a scalar (its gradient) or of a 1-form (`[i][j]` = ∂ᵢωⱼ − ∂ⱼωᵢ).
pub fn exterior_derivative(form: &FormField, dim: usize) -> PointTensor {
    match form {
        FormField::Scalar(f) => PointTensor::from_fn(dim, vec![Lower], |i| f.grad[i[0]]),
        FormField::OneForm(w) => PointTensor::from_fn(dim, vec![Lower, Lower], |ij| {
            w[ij[1]].grad[ij[0]] - w[ij[0]].grad[ij[1]]
        }),
    }
}

impl PointGeometry {
    /// θ*(ξ) as a form field.
    pub fn theta_xi_field(&self) -> FormField {
        let mut v = Dual::constant(self.theta_xi);
        v.grad[..self.dim].copy_from_slice(&self.d_theta_xi);
        FormField::Scalar(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ConstantBindings;
    use crate::manifold::builtin;
    use crate::tolerance;

    fn cone() -> AccRStructure {
        builtin("cone-flat-fiber").unwrap()
    }

    const T: usize = 0;
    const U: usize = 1;
    const V: usize = 2;

    #[test]
    fn cone_christoffel_at_t2() {
        let c = christoffel(&cone(), MetricTag::G, &[2.0, 0.1, -0.2]).unwrap();
        let mut expected = vec![0.0; 27];
        let idx = |k: usize, i: usize, j: usize| (k * 3 + i) * 3 + j;
        expected[idx(T, U, U)] = -2.0;
        expected[idx(T, V, V)] = 2.0;
        for (k, a) in [(U, U), (V, V)] {
            expected[idx(k, T, a)] = 0.5;
            expected[idx(k, a, T)] = 0.5;
        }
        assert!(max_abs_diff(&c.gamma, &expected) < 1e-14, "{:?}", c.gamma);
        assert_eq!(c.torsion(), 0.0);
    }

    #[test]
    fn flat_example_vanishes() {
        let s = builtin("flat-cosymplectic").unwrap();
        let geo = PointGeometry::new(&s, MetricTag::G, &[0.1, 0.2, -0.3]).unwrap();
        assert_eq!(max_abs(geo.gamma.iter().copied()), 0.0);
        assert_eq!(geo.curvature.tau, 0.0);
        assert_eq!(geo.f_norm(), 0.0);
        assert_eq!(max_abs(geo.nabla_xi.iter().copied()), 0.0);
        let via = nabla_tilde_from(&geo);
        assert_eq!(max_abs(via.gamma.iter().copied()), 0.0);
        assert_eq!(f_tilde_from(&geo).max_abs(), 0.0);
    }

    #[test]
    fn cone_curvature_in_frame() {
        for t in [0.7, 2.0, 4.5] {
            let geo = PointGeometry::new(&cone(), MetricTag::G, &[t, 0.3, 0.4]).unwrap();
            let frame = geo.phi_frame().unwrap();
            let r = geo.curvature.r04.to_frame(&frame).unwrap();
            assert!((r.get(&[0, 1, 0, 1]) + 1.0 / (t * t)).abs() < 1e-12);
            let rho = geo.curvature.rho.to_frame(&frame).unwrap();
            assert!((rho.get(&[0, 0]) + 1.0 / (t * t)).abs() < 1e-12);
            assert!((rho.get(&[1, 1]) - 1.0 / (t * t)).abs() < 1e-12);
            assert!((geo.curvature.tau + 2.0 / (t * t)).abs() < 1e-12);
            assert!(geo.curvature.tau_star.abs() < 1e-12);
            assert!((geo.theta_xi - 2.0 / t).abs() < 1e-12);
            assert!(geo.curvature_symmetry_residuals().max() < 1e-12);
        }
    }

    #[test]
    fn cone_nabla_xi_both_metrics() {
        for tag in [MetricTag::G, MetricTag::GTilde] {
            let n = nabla_xi(&cone(), tag, &[2.0, 0.0, 0.0]).unwrap();
            let expected = [0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5];
            assert!(
                max_abs_diff(n.components(), &expected) < 1e-14,
                "{tag}: {:?}",
                n.components()
            );
        }
    }

    #[test]
    fn cone_f_shape_and_lee_forms() {
        let geo = PointGeometry::new(&cone(), MetricTag::G, &[2.0, 0.0, 0.0]).unwrap();
        assert!(geo.tf_fxi_residual(0.5) < 1e-14);
        assert!(geo.f5_residual() < 1e-14);
        let (fxi, omega) = geo.f5_vertical_residuals();
        assert!(fxi < 1e-14 && omega < 1e-14);
        assert!(geo.f_prop1_residual() < 1e-14);
        assert!(geo.f_prop2_residual() < 1e-14);
        assert!((geo.h - 0.5).abs() < 1e-14 && geo.h_residual < 1e-14);
        assert!((geo.dh[0] + 0.25).abs() < 1e-14);
        let d = exterior_derivative(&geo.theta_xi_field(), 3);
        assert!(max_abs_diff(d.components(), &[-0.5, 0.0, 0.0]) < 1e-14);
        assert!(geo.f50_residual() < 1e-14);
        assert!(geo.lee_form_closedness() < 1e-14);
    }

    #[test]
    fn cone_cross_routes() {
        let s = cone();
        for p in s.chart.latin_hypercube(8, 5) {
            let g = PointGeometry::new(&s, MetricTag::G, &p).unwrap();
            let gt = PointGeometry::new(&s, MetricTag::GTilde, &p).unwrap();
            assert!(nabla_tilde_from(&g).max_abs_diff(&gt.connection()) < 1e-12);
            assert!(nabla_tilde_f5_from(&g).max_abs_diff(&gt.connection()) < 1e-12);
            let ft = f_tilde_from(&g);
            assert!(ft.max_abs_diff(&gt.fundamental().f).unwrap() < 1e-12);
            let t = p[0];
            assert!((gt.curvature.tau + 2.0 / (t * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_f_is_detected_by_relation() {
        let s = cone();
        let g = PointGeometry::new(&s, MetricTag::G, &[2.0, 0.0, 0.0]).unwrap();
        let gt = PointGeometry::new(&s, MetricTag::GTilde, &[2.0, 0.0, 0.0]).unwrap();
        let mut f = g.f.clone();
        f[(U * 3 + V) * 3 + T] += 1e-3;
        let ft = f_tilde_from_components(3, &f, &g.structure);
        assert!(ft.max_abs_diff(&gt.fundamental().f).unwrap() > 1e-4);
    }

    #[test]
    fn cone_lie_derivatives() {
        let s = cone().bind(&ConstantBindings::new().with("c", 1.0)).unwrap();
        let k = s.chart.parse("c*t").unwrap();
        for tag in [MetricTag::G, MetricTag::GTilde] {
            let l = lie_derivative_metric(&s, tag, &Potential::Vertical(k.clone()), &[2.0, 0.1, 0.2]).unwrap();
            assert!(l.route_mismatch() < 1e-13);
            let geo = PointGeometry::new(&s, tag, &[2.0, 0.1, 0.2]).unwrap();
            let twice = geo.metric.g.scaled(2.0);
            assert!(l.covariant.max_abs_diff(&twice).unwrap() < 1e-13);
        }
        let zero = Potential::Vertical(s.chart.parse("0").unwrap());
        let l = lie_derivative_metric(&s, MetricTag::G, &zero, &[2.0, 0.1, 0.2]).unwrap();
        assert_eq!(l.coordinate.max_abs(), 0.0);
    }

    #[test]
    fn cone_torse_forming_curvature() {
        let geo = PointGeometry::new(&cone(), MetricTag::G, &[1.5, 0.0, 0.0]).unwrap();
        let h = 1.0 / 1.5;
        let dh = [-h * h, 0.0, 0.0];
        assert!(geo.r_tf_residual(h, &dh) < 1e-12);
        for r in geo.rho_tf_residuals(h, &dh) {
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn exterior_derivative_of_exact_form_vanishes() {
        let s = cone();
        let e = s.chart.parse("sin(t)*u + v^2*t").unwrap();
        let j = e.eval_jet(&[1.0, 0.5, 0.2], s.bindings()).unwrap();
        let w: Vec<Dual> = (0..3).map(|i| j.partial_dual(i)).collect();
        let d = exterior_derivative(&FormField::OneForm(w), 3);
        assert!(d.max_abs() < 1e-15);
        let c = exterior_derivative(&FormField::Scalar(Dual::constant(3.0)), 3);
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn finite_difference_christoffel_agrees() {
        let s = cone();
        for tag in [MetricTag::G, MetricTag::GTilde] {
            let p = [1.3, 0.2, -0.1];
            let ad = christoffel(&s, tag, &p).unwrap();
            let fd = christoffel_finite_difference(&s, tag, &p, tolerance::FD_STEP).unwrap();
            assert!(ad.max_abs_diff(&fd) < 1e-8);
        }
    }
}
