//! Pointwise dense tensors.
//!
//! Components are stored row-major; slot 0 is the slowest index. Only ranks
//! up to 4 occur (the curvature tensor is the largest object).

use serde::Serialize;
use thiserror::Error;

use crate::jets::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("metric is singular")]
    SingularMetric,
    #[error("frame is singular")]
    SingularFrame,
    #[error("slots {0} and {1} do not have opposite variance")]
    VarianceMismatch(usize, usize),
    #[error("slot {slot} out of range for rank {rank}")]
    BadSlot { slot: usize, rank: usize },
    #[error("basis tags differ")]
    BasisMismatch,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("could not build a φ-adapted frame: {0}")]
    Frame(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Upper,
    Lower,
}

impl Variance {
    fn flipped(self) -> Self {
        match self {
            Variance::Upper => Variance::Lower,
            Variance::Lower => Variance::Upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Coordinate,
    PhiFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointTensor {
    dim: usize,
    variance: Vec<Variance>,
    components: Vec<f64>,
    basis: Basis,
}

impl PointTensor {
    pub fn zeros(dim: usize, variance: Vec<Variance>) -> Self {
        let len = dim.pow(variance.len() as u32);
        Self {
            dim,
            variance,
            components: vec![0.0; len],
            basis: Basis::Coordinate,
        }
    }

    pub fn from_components(dim: usize, variance: Vec<Variance>, components: Vec<f64>) -> Result<Self, TensorError> {
        let len = dim.pow(variance.len() as u32);
        if components.len() != len {
            return Err(TensorError::Shape(format!(
                "{} components for dimension {dim} and rank {}",
                components.len(),
                variance.len()
            )));
        }
        Ok(Self {
            dim,
            variance,
            components,
            basis: Basis::Coordinate,
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(dim: usize, variance: Vec<Variance>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dim, variance);
        let rank = t.rank();
        let mut idx = vec![0usize; rank];
        for flat in 0..t.components.len() {
            unflatten(flat, dim, &mut idx);
            t.components[flat] = f(&idx);
        }
        t
    }

    pub fn scalar(value: f64, dim: usize) -> Self {
        Self {
            dim,
            variance: vec![],
            components: vec![value],
            basis: Basis::Coordinate,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, vec![Variance::Upper, Variance::Lower], |i| {
            if i[0] == i[1] {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.components[o] = value;
    }

    /// Value of a rank-0 tensor.
    pub fn value(&self) -> f64 {
        self.components[0]
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest componentwise difference; tensors must share shape and basis.
    pub fn max_abs_diff(&self, other: &PointTensor) -> Result<f64, TensorError> {
        self.check_same_shape(other)?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn sub(&self, other: &PointTensor) -> Result<PointTensor, TensorError> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> PointTensor {
        let mut out = self.clone();
        out.components.iter_mut().for_each(|c| *c *= s);
        out
    }

    fn check_same_shape(&self, other: &PointTensor) -> Result<(), TensorError> {
        if self.basis != other.basis {
            return Err(TensorError::BasisMismatch);
        }
        if self.dim != other.dim || self.variance != other.variance {
            return Err(TensorError::Shape(format!(
                "{:?}/{} vs {:?}/{}",
                self.variance, self.dim, other.variance, other.dim
            )));
        }
        Ok(())
    }

    /// Tensor product `self ⊗ other`.
    pub fn outer(&self, other: &PointTensor) -> Result<PointTensor, TensorError> {
        if self.basis != other.basis {
            return Err(TensorError::BasisMismatch);
        }
        if self.dim != other.dim {
            return Err(TensorError::Shape("dimension mismatch".into()));
        }
        let mut variance = self.variance.clone();
        variance.extend_from_slice(&other.variance);
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for a in &self.components {
            for b in &other.components {
                components.push(a * b);
            }
        }
        Ok(PointTensor {
            dim: self.dim,
            variance,
            components,
            basis: self.basis,
        })
    }

    /// Einstein summation over two slots of opposite variance.
    pub fn contract(&self, slot_a: usize, slot_b: usize) -> Result<PointTensor, TensorError> {
        let rank = self.rank();
        for s in [slot_a, slot_b] {
            if s >= rank {
                return Err(TensorError::BadSlot { slot: s, rank });
            }
        }
        if slot_a == slot_b || self.variance[slot_a] == self.variance[slot_b] {
            return Err(TensorError::VarianceMismatch(slot_a, slot_b));
        }
        let variance: Vec<Variance> = self
            .variance
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != slot_a && *i != slot_b)
            .map(|(_, v)| *v)
            .collect();
        let mut out = PointTensor::zeros(self.dim, variance).with_basis(self.basis);
        let mut full = vec![0usize; rank];
        let mut rest = vec![0usize; rank - 2];
        for flat in 0..out.components.len() {
            unflatten(flat, self.dim, &mut rest);
            let mut it = rest.iter();
            for (i, slot) in full.iter_mut().enumerate() {
                if i != slot_a && i != slot_b {
                    *slot = *it.next().unwrap();
                }
            }
            let mut sum = 0.0;
            for k in 0..self.dim {
                full[slot_a] = k;
                full[slot_b] = k;
                sum += self.get(&full);
            }
            out.components[flat] = sum;
        }
        Ok(out)
    }

    /// Flips the variance of `slot` using the metric (lowering) or its inverse (raising).
    pub fn raise_lower(&self, slot: usize, metric: &MetricAtPoint) -> Result<PointTensor, TensorError> {
        let rank = self.rank();
        if slot >= rank {
            return Err(TensorError::BadSlot { slot, rank });
        }
        if metric.g.basis != self.basis {
            return Err(TensorError::BasisMismatch);
        }
        let m = match self.variance[slot] {
            Variance::Upper => &metric.g,
            Variance::Lower => &metric.g_inv,
        };
        let mut variance = self.variance.clone();
        variance[slot] = variance[slot].flipped();
        let d = self.dim;
        let mut src = vec![0usize; rank];
        let mut out = PointTensor::from_fn(d, variance, |idx| {
            src.copy_from_slice(idx);
            let mut sum = 0.0;
            for k in 0..d {
                src[slot] = k;
                sum += m.get(&[idx[slot], k]) * self.get(&src);
            }
            sum
        });
        out.basis = self.basis;
        Ok(out)
    }

    /// Re-expresses components in the given frame.
    ///
    /// `frame.vectors()[a]` holds the coordinate components of the a-th frame
    /// vector. Lower slots transform with the frame matrix, upper slots with
    /// its inverse.
    pub fn to_frame(&self, frame: &Frame) -> Result<PointTensor, TensorError> {
        if self.basis != Basis::Coordinate {
            return Err(TensorError::BasisMismatch);
        }
        if frame.dim() != self.dim {
            return Err(TensorError::Shape("frame dimension mismatch".into()));
        }
        let d = self.dim;
        let rank = self.rank();
        let mut current = self.components.clone();
        let mut idx = vec![0usize; rank];
        for slot in 0..rank {
            let mut next = vec![0.0; current.len()];
            for (flat, slot_value) in next.iter_mut().enumerate() {
                unflatten(flat, d, &mut idx);
                let a = idx[slot];
                let mut sum = 0.0;
                for k in 0..d {
                    let coef = match self.variance[slot] {
                        Variance::Lower => frame.matrix[k][a],
                        Variance::Upper => frame.inverse[a][k],
                    };
                    if coef != 0.0 {
                        idx[slot] = k;
                        sum += coef * current[idx.iter().fold(0, |acc, &i| acc * d + i)];
                    }
                }
                *slot_value = sum;
            }
            current = next;
        }
        Ok(PointTensor {
            dim: d,
            variance: self.variance.clone(),
            components: current,
            basis: Basis::PhiFrame,
        })
    }

    /// Max |t − sign·(t with slots permuted)| over all indices.
    ///
    /// `permutation[i]` names the source slot placed at position i.
    pub fn symmetry_violation(&self, permutation: &[usize], sign: f64) -> Result<f64, TensorError> {
        let rank = self.rank();
        if permutation.len() != rank {
            return Err(TensorError::Shape(format!(
                "permutation of length {} for rank {rank}",
                permutation.len()
            )));
        }
        let mut seen = vec![false; rank];
        for &p in permutation {
            if p >= rank || std::mem::replace(&mut seen[p], true) {
                return Err(TensorError::Shape(format!("{permutation:?} is not a permutation")));
            }
        }
        let mut idx = vec![0usize; rank];
        let mut permuted = vec![0usize; rank];
        let mut worst: f64 = 0.0;
        for flat in 0..self.components.len() {
            unflatten(flat, self.dim, &mut idx);
            for i in 0..rank {
                permuted[i] = idx[permutation[i]];
            }
            worst = worst.max((self.components[flat] - sign * self.get(&permuted)).abs());
        }
        Ok(worst)
    }

    /// Square matrix view of a rank-2 tensor.
    pub fn as_matrix(&self) -> Vec<Vec<f64>> {
        assert_eq!(self.rank(), 2, "matrix view needs rank 2");
        self.components.chunks(self.dim).map(|r| r.to_vec()).collect()
    }
}

fn unflatten(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// Inverse of a square matrix by Gauss–Jordan elimination with partial pivoting.
///
/// Works over any [`Scalar`]; pivots are chosen by value. A pivot below
/// `1e-12 · max|entry|` is treated as singular.
pub fn invert_matrix<S: Scalar>(m: &[S], dim: usize) -> Result<Vec<S>, TensorError> {
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.value().abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(TensorError::SingularMetric);
    }
    let threshold = 1e-12 * scale;
    let mut a = m.to_vec();
    let mut inv = vec![S::zero(); dim * dim];
    for i in 0..dim {
        inv[i * dim + i] = S::from_f64(1.0);
    }
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r, &s| {
                a[r * dim + col]
                    .value()
                    .abs()
                    .total_cmp(&a[s * dim + col].value().abs())
            })
            .unwrap();
        if a[pivot_row * dim + col].value().abs() <= threshold {
            return Err(TensorError::SingularMetric);
        }
        if pivot_row != col {
            for k in 0..dim {
                a.swap(pivot_row * dim + k, col * dim + k);
                inv.swap(pivot_row * dim + k, col * dim + k);
            }
        }
        let p = a[col * dim + col];
        for k in 0..dim {
            a[col * dim + k] = a[col * dim + k] / p;
            inv[col * dim + k] = inv[col * dim + k] / p;
        }
        for r in 0..dim {
            if r == col {
                continue;
            }
            let factor = a[r * dim + col];
            for k in 0..dim {
                a[r * dim + k] = a[r * dim + k] - factor * a[col * dim + k];
                inv[r * dim + k] = inv[r * dim + k] - factor * inv[col * dim + k];
            }
        }
    }
    Ok(inv)
}

/// A metric at a point with its inverse and signature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricAtPoint {
    pub g: PointTensor,
    pub g_inv: PointTensor,
    /// (positive, negative) eigenvalue counts.
    pub signature: (usize, usize),
}

impl MetricAtPoint {
    pub fn new(g: PointTensor) -> Result<Self, TensorError> {
        let g_inv = metric_invert(&g)?;
        let signature = signature(&g);
        Ok(Self { g, g_inv, signature })
    }

    pub fn dim(&self) -> usize {
        self.g.dim
    }

    /// g(x, y) for coordinate-component vectors.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += x[i] * self.g.components[i * d + j] * y[j];
            }
        }
        s
    }
}

/// Inverse of a symmetric (0,2) metric as a (2,0) tensor.
pub fn metric_invert(g: &PointTensor) -> Result<PointTensor, TensorError> {
    if g.variance() != [Variance::Lower, Variance::Lower] {
        return Err(TensorError::Shape("metric must be a (0,2) tensor".into()));
    }
    let inv = invert_matrix(g.components(), g.dim())?;
    Ok(PointTensor {
        dim: g.dim,
        variance: vec![Variance::Upper, Variance::Upper],
        components: inv,
        basis: g.basis,
    })
}

/// Eigenvalue sign counts of a symmetric rank-2 tensor, threshold 1e−10.
pub fn signature(g: &PointTensor) -> (usize, usize) {
    let d = g.dim();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| 0.5 * (g.get(&[i, j]) + g.get(&[j, i])));
    let eig = m.symmetric_eigenvalues();
    let pos = eig.iter().filter(|&&e| e > 1e-10).count();
    let neg = eig.iter().filter(|&&e| e < -1e-10).count();
    (pos, neg)
}

/// An ordered basis of a tangent space, in coordinate components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    /// matrix[i][a]: i-th coordinate component of frame vector a.
    matrix: Vec<Vec<f64>>,
    #[serde(skip)]
    inverse: Vec<Vec<f64>>,
}

impl Frame {
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self, TensorError> {
        let d = vectors.len();
        if vectors.iter().any(|v| v.len() != d) {
            return Err(TensorError::Shape("frame vectors must have frame-size length".into()));
        }
        let matrix: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|a| vectors[a][i]).collect()).collect();
        let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
        let inv = invert_matrix(&flat, d).map_err(|_| TensorError::SingularFrame)?;
        Ok(Self {
            matrix,
            inverse: inv.chunks(d).map(|r| r.to_vec()).collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let vectors: Vec<Vec<f64>> = (0..dim)
            .map(|a| (0..dim).map(|i| if i == a { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_vectors(&vectors).expect("identity frame")
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn vector(&self, a: usize) -> Vec<f64> {
        self.matrix.iter().map(|row| row[a]).collect()
    }

    /// Builds a φ-adapted frame {e₁…eₙ, φe₁…φeₙ, ξ} with
    /// g(eᵢ,eⱼ) = δᵢⱼ, g(φeᵢ,φeⱼ) = −δᵢⱼ, g(eᵢ,φeⱼ) = 0.
    ///
    /// `phi` is the (1,1) tensor with `phi.get(&[i, j]) = φ^i_j`.
    pub fn phi_adapted(
        metric: &MetricAtPoint,
        phi: &PointTensor,
        xi: &[f64],
        eta: &[f64],
    ) -> Result<Self, TensorError> {
        let d = metric.dim();
        if d.is_multiple_of(2) {
            return Err(TensorError::Frame("dimension must be odd".into()));
        }
        let n = d / 2;
        let apply_phi =
            |x: &[f64]| -> Vec<f64> { (0..d).map(|i| (0..d).map(|j| phi.get(&[i, j]) * x[j]).sum()).collect() };
        let horizontal = |x: &[f64]| -> Vec<f64> {
            let e: f64 = (0..d).map(|i| eta[i] * x[i]).sum();
            (0..d).map(|i| x[i] - e * xi[i]).collect()
        };
        let mut es: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut phi_es: Vec<Vec<f64>> = Vec::with_capacity(n);
        for _ in 0..n {
            // Best candidate among projected coordinate vectors.
            let mut best: Option<(f64, Vec<f64>)> = None;
            for k in 0..d {
                let mut x: Vec<f64> = (0..d).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
                x = horizontal(&x);
                for (e, pe) in es.iter().zip(&phi_es) {
                    // span{e, φe} is nondegenerate with g(e,e)=1, g(φe,φe)=−1, g(e,φe)=0.
                    let ce = metric.inner(&x, e);
                    let cpe = -metric.inner(&x, pe);
                    for i in 0..d {
                        x[i] -= ce * e[i] + cpe * pe[i];
                    }
                }
                let px = apply_phi(&x);
                let a = metric.inner(&x, &x);
                let b = metric.inner(&x, &px);
                let r = a.hypot(b);
                if best.as_ref().is_none_or(|(s, _)| r > *s) {
                    best = Some((r, x));
                }
            }
            let (r, x) = best.ok_or_else(|| TensorError::Frame("no candidate".into()))?;
            if r <= 1e-12 {
                return Err(TensorError::Frame("horizontal space is degenerate".into()));
            }
            // Rotate within span{x, φx} so that g(e, φe) = 0 and g(e, e) > 0.
            let px = apply_phi(&x);
            let a = metric.inner(&x, &x);
            let b = metric.inner(&x, &px);
            let theta = 0.5 * b.atan2(a);
            let (s, c) = theta.sin_cos();
            let mut e: Vec<f64> = (0..d).map(|i| c * x[i] + s * px[i]).collect();
            let norm = metric.inner(&e, &e);
            if norm <= 0.0 {
                return Err(TensorError::Frame(
                    "could not find a spacelike horizontal vector".into(),
                ));
            }
            let scale = 1.0 / norm.sqrt();
            e.iter_mut().for_each(|v| *v *= scale);
            let pe = apply_phi(&e);
            es.push(e);
            phi_es.push(pe);
        }
        let mut vectors = es;
        vectors.extend(phi_es);
        vectors.push(xi.to_vec());
        Self::from_vectors(&vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Variance::{Lower, Upper};

    fn diag(v: &[f64]) -> PointTensor {
        let d = v.len();
        PointTensor::from_fn(d, vec![Lower, Lower], |i| if i[0] == i[1] { v[i[0]] } else { 0.0 })
    }

    #[test]
    fn invert_diagonal_metric() {
        let inv = metric_invert(&diag(&[1.0, 4.0, -4.0])).unwrap();
        assert_eq!(inv.variance(), &[Upper, Upper]);
        assert_eq!(
            inv.as_matrix(),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.25, 0.0], vec![0.0, 0.0, -0.25]]
        );
        let id = metric_invert(&diag(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(id.components(), diag(&[1.0, 1.0, 1.0]).components());
        assert_eq!(
            metric_invert(&diag(&[1.0, 0.0, -1.0])),
            Err(TensorError::SingularMetric)
        );
    }

    #[test]
    fn invert_needs_pivoting() {
        // Zero diagonal, indefinite: Cholesky-style elimination would fail.
        let g = PointTensor::from_components(
            3,
            vec![Lower, Lower],
            vec![1.0, 0.0, 0.0, 0.0, 0.0, -4.0, 0.0, -4.0, 0.0],
        )
        .unwrap();
        let inv = metric_invert(&g).unwrap();
        assert_eq!(inv.get(&[1, 2]), -0.25);
        assert_eq!(inv.get(&[1, 1]), 0.0);
    }

    #[test]
    fn contract_identity_gives_dimension() {
        let c = PointTensor::identity(3).contract(0, 1).unwrap();
        assert_eq!(c.rank(), 0);
        assert_eq!(c.value(), 3.0);
    }

    #[test]
    fn contract_metric_with_inverse() {
        let g = diag(&[1.0, 4.0, -4.0]);
        let m = MetricAtPoint::new(g.clone()).unwrap();
        let prod = g.outer(&m.g_inv).unwrap();
        let mixed = prod.contract(1, 2).unwrap();
        assert_eq!(mixed.variance(), &[Lower, Upper]);
        assert_eq!(mixed.contract(0, 1).unwrap().value(), 3.0);
    }

    #[test]
    fn contract_rejects_same_variance() {
        let g = diag(&[1.0, 1.0]);
        assert_eq!(g.contract(0, 1), Err(TensorError::VarianceMismatch(0, 1)));
        assert!(matches!(g.contract(0, 2), Err(TensorError::BadSlot { .. })));
    }

    #[test]
    fn lower_reeb_field_on_cone() {
        let m = MetricAtPoint::new(diag(&[1.0, 4.0, -4.0])).unwrap();
        let xi = PointTensor::from_components(3, vec![Upper], vec![1.0, 0.0, 0.0]).unwrap();
        let eta = xi.raise_lower(0, &m).unwrap();
        assert_eq!(eta.variance(), &[Lower]);
        assert_eq!(eta.components(), &[1.0, 0.0, 0.0]);
        let back = eta.raise_lower(0, &m).unwrap();
        assert_eq!(back, xi);
    }

    #[test]
    fn lower_phi_on_cone_is_symmetric() {
        // φ∂u = ∂v, φ∂v = −∂u; g = diag(1, t², −t²) at t = 2.
        let m = MetricAtPoint::new(diag(&[1.0, 4.0, -4.0])).unwrap();
        let mut phi = PointTensor::zeros(3, vec![Upper, Lower]);
        phi.set(&[2, 1], 1.0);
        phi.set(&[1, 2], -1.0);
        let lowered = phi.raise_lower(0, &m).unwrap();
        // g(φ∂u, ∂v) = g(∂v, ∂v) = −4 and g(φ∂v, ∂u) = −g(∂u, ∂u) = −4.
        assert_eq!(lowered.get(&[2, 1]), -4.0);
        assert_eq!(lowered.get(&[1, 2]), -4.0);
        assert_eq!(lowered.symmetry_violation(&[1, 0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cone_metric_in_phi_frame() {
        let t = 2.0;
        let m = MetricAtPoint::new(diag(&[1.0, t * t, -t * t])).unwrap();
        let frame =
            Frame::from_vectors(&[vec![0.0, 1.0 / t, 0.0], vec![0.0, 0.0, 1.0 / t], vec![1.0, 0.0, 0.0]]).unwrap();
        let gf = m.g.to_frame(&frame).unwrap();
        assert_eq!(gf.basis(), Basis::PhiFrame);
        assert_eq!(gf.components(), diag(&[1.0, -1.0, 1.0]).components());
        let same = m.g.to_frame(&Frame::identity(3)).unwrap();
        assert_eq!(same.components(), m.g.components());
    }

    #[test]
    fn phi_adapted_frame_on_cone() {
        let t = 2.0;
        let m = MetricAtPoint::new(diag(&[1.0, t * t, -t * t])).unwrap();
        let mut phi = PointTensor::zeros(3, vec![Upper, Lower]);
        phi.set(&[2, 1], 1.0);
        phi.set(&[1, 2], -1.0);
        let frame = Frame::phi_adapted(&m, &phi, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(frame.vector(0), vec![0.0, 0.5, 0.0]);
        assert_eq!(frame.vector(1), vec![0.0, 0.0, 0.5]);
        assert_eq!(frame.vector(2), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn singular_frame_rejected() {
        let r = Frame::from_vectors(&[vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(r, Err(TensorError::SingularFrame));
    }

    #[test]
    fn symmetry_violation_detects_perturbation() {
        let mut t = diag(&[1.0, 2.0, 3.0]);
        assert_eq!(t.symmetry_violation(&[1, 0], 1.0).unwrap(), 0.0);
        t.set(&[0, 1], 0.5);
        assert_eq!(t.symmetry_violation(&[1, 0], 1.0).unwrap(), 0.5);
        assert!(t.symmetry_violation(&[0, 0], 1.0).is_err());
    }

    #[test]
    fn signature_of_cone_metric() {
        assert_eq!(signature(&diag(&[1.0, 4.0, -4.0])), (2, 1));
        let g = PointTensor::from_components(
            3,
            vec![Lower, Lower],
            vec![1.0, 0.0, 0.0, 0.0, 0.0, -4.0, 0.0, -4.0, 0.0],
        )
        .unwrap();
        assert_eq!(signature(&g), (2, 1));
    }
}
