//! Forward-mode automatic differentiation.
//!
//! [`Jet2`] carries a value together with its gradient and symmetric Hessian
//! with respect to the chart coordinates. It is what expression evaluation
//! produces, and it is the only place where second derivatives of the
//! structure fields (g, φ, ξ, η) come from.
//!
//! [`Dual`] is a first-order jet. The geometry pipeline runs over `Dual`
//! scalars whose seeds are built from `Jet2` data (value + gradient for a
//! field, gradient + Hessian row for its partial derivatives), which yields
//! first derivatives of derived fields such as Γ or θ*(ξ) without third-order
//! jets.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

/// Largest supported chart dimension (2n + 1 with n ≤ 3).
pub const MAX_DIM: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("jet dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Elementary functions understood by expressions and jets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Rejects arguments outside the C² domain of the function.
    pub fn check_domain(self, x: f64) -> Result<(), JetError> {
        let bad = match self {
            Func::Ln => x <= 0.0,
            Func::Sqrt => x <= 0.0,
            Func::Abs => x == 0.0,
            Func::Tan => x.cos() == 0.0,
            _ => false,
        };
        if bad || !x.is_finite() {
            Err(JetError::Domain(format!("{}({x})", self.name())))
        } else {
            Ok(())
        }
    }

    /// Returns (f(x), f'(x), f''(x)). Caller must have checked the domain.
    pub fn derivatives(self, x: f64) -> (f64, f64, f64) {
        match self {
            Func::Sin => (x.sin(), x.cos(), -x.sin()),
            Func::Cos => (x.cos(), -x.sin(), -x.cos()),
            Func::Tan => {
                let t = x.tan();
                let sec2 = 1.0 + t * t;
                (t, sec2, 2.0 * t * sec2)
            }
            Func::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            Func::Ln => (x.ln(), 1.0 / x, -1.0 / (x * x)),
            Func::Sqrt => {
                let s = x.sqrt();
                (s, 0.5 / s, -0.25 / (s * x))
            }
            Func::Abs => (x.abs(), x.signum(), 0.0),
            Func::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                (t, s, -2.0 * t * s)
            }
        }
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Binary arithmetic selector for [`Jet2::arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Second-order jet: value, gradient and symmetric Hessian.
///
/// Storage is fixed-size; entries beyond `dim` stay zero.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet2 {
    dim: usize,
    value: f64,
    grad: [f64; MAX_DIM],
    hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("gradient", &self.gradient())
            .field("hessian", &self.hessian())
            .finish()
    }
}

impl Jet2 {
    pub fn constant(value: f64, dim: usize) -> Result<Self, JetError> {
        if dim > MAX_DIM {
            return Err(JetError::DimensionTooLarge(dim));
        }
        Ok(Self {
            dim,
            value,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
        })
    }

    /// Independent variable `index` at `value`.
    pub fn seed(index: usize, value: f64, dim: usize) -> Result<Self, JetError> {
        if index >= dim {
            return Err(JetError::IndexOutOfRange { index, dim });
        }
        let mut jet = Self::constant(value, dim)?;
        jet.grad[index] = 1.0;
        Ok(jet)
    }

    /// Builds a jet from explicit parts, symmetrising the Hessian.
    pub fn from_parts(value: f64, gradient: &[f64], hessian: &[Vec<f64>]) -> Result<Self, JetError> {
        let dim = gradient.len();
        let mut jet = Self::constant(value, dim)?;
        if hessian.len() != dim {
            return Err(JetError::DimensionMismatch(dim, hessian.len()));
        }
        for i in 0..dim {
            jet.grad[i] = gradient[i];
            if hessian[i].len() != dim {
                return Err(JetError::DimensionMismatch(dim, hessian[i].len()));
            }
            for j in i..dim {
                let h = 0.5 * (hessian[i][j] + hessian[j][i]);
                jet.hess[i][j] = h;
                jet.hess[j][i] = h;
            }
        }
        Ok(jet)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad[..self.dim]
    }

    pub fn partial(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn second_partial(&self, i: usize, j: usize) -> f64 {
        self.hess[i][j]
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.hess[i][..self.dim].to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().flatten().all(|h| h.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.value *= s;
        for i in 0..self.dim {
            out.grad[i] *= s;
            for j in 0..self.dim {
                out.hess[i][j] *= s;
            }
        }
        out
    }

    /// Applies f with f' and f'' given at `self.value`:
    /// grad = f'·∇a, hess = f''·∇a∇aᵀ + f'·Ha.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = *self;
        out.value = f0;
        let d = self.dim;
        for i in 0..d {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                let h = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i][j];
                out.hess[i][j] = h;
                out.hess[j][i] = h;
            }
        }
        out
    }

    pub fn apply(&self, func: Func) -> Result<Self, JetError> {
        func.check_domain(self.value)?;
        let (f0, f1, f2) = func.derivatives(self.value);
        Ok(self.chain(f0, f1, f2))
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        let x = self.value;
        if x == 0.0 {
            return Err(JetError::Domain("division by zero".into()));
        }
        Ok(self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, JetError> {
        self.check_dim(rhs)?;
        Ok(*self * rhs.recip()?)
    }

    /// Integer power by repeated squaring; exact jets, no logarithm.
    pub fn powi(&self, exponent: i64) -> Result<Self, JetError> {
        let mut result = Self::constant(1.0, self.dim)?;
        let mut base = *self;
        let mut e = exponent.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        if exponent < 0 {
            result.recip()
        } else {
            Ok(result)
        }
    }

    /// Checked binary arithmetic.
    pub fn arith(op: ArithOp, a: &Jet2, b: &Jet2) -> Result<Jet2, JetError> {
        a.check_dim(b)?;
        Ok(match op {
            ArithOp::Add => *a + *b,
            ArithOp::Sub => *a - *b,
            ArithOp::Mul => *a * *b,
            ArithOp::Div => a.checked_div(b)?,
        })
    }

    fn check_dim(&self, other: &Self) -> Result<(), JetError> {
        if self.dim != other.dim {
            Err(JetError::DimensionMismatch(self.dim, other.dim))
        } else {
            Ok(())
        }
    }

    /// The jet as a first-order dual (value and gradient).
    pub fn to_dual(&self) -> Dual {
        Dual {
            value: self.value,
            grad: self.grad,
        }
    }

    /// ∂ᵢ of the jet as a first-order dual (∂ᵢf and its gradient).
    pub fn partial_dual(&self, i: usize) -> Dual {
        Dual {
            value: self.grad[i],
            grad: self.hess[i],
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        out.value += rhs.value;
        for i in 0..self.dim {
            out.grad[i] += rhs.grad[i];
            for j in 0..self.dim {
                out.hess[i][j] += rhs.hess[i][j];
            }
        }
        out
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        self + (-rhs)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        debug_assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = self;
        out.value = self.value * rhs.value;
        for i in 0..d {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                let h = self.hess[i][j] * rhs.value
                    + self.value * rhs.hess[i][j]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
                out.hess[i][j] = h;
                out.hess[j][i] = h;
            }
        }
        out
    }
}

/// Arithmetic needed by the generic geometry pipeline.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn value(&self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn scale(self, s: f64) -> Self {
        self * Self::from_f64(s)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
}

/// First-order jet: value and gradient with respect to chart coordinates.
#[derive(Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub grad: [f64; MAX_DIM],
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dual({}, {:?})", self.value, self.grad)
    }
}

impl Dual {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; MAX_DIM],
        }
    }

    pub fn gradient(&self, dim: usize) -> &[f64] {
        &self.grad[..dim]
    }

    /// Directional derivative along `v`.
    pub fn along(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.grad).map(|(a, b)| a * b).sum()
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(mut self, rhs: Dual) -> Dual {
        self.value += rhs.value;
        for (a, b) in self.grad.iter_mut().zip(rhs.grad) {
            *a += b;
        }
        self
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(mut self, rhs: Dual) -> Dual {
        self.value -= rhs.value;
        for (a, b) in self.grad.iter_mut().zip(rhs.grad) {
            *a -= b;
        }
        self
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(mut self) -> Dual {
        self.value = -self.value;
        for a in self.grad.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        let mut out = Dual::constant(self.value * rhs.value);
        for i in 0..MAX_DIM {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
        }
        out
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let q = self.value / rhs.value;
        let mut out = Dual::constant(q);
        for i in 0..MAX_DIM {
            out.grad[i] = (self.grad[i] - q * rhs.grad[i]) / rhs.value;
        }
        out
    }
}

impl Scalar for Dual {
    fn from_f64(x: f64) -> Self {
        Dual::constant(x)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn scale(mut self, s: f64) -> Self {
        self.value *= s;
        for a in self.grad.iter_mut() {
            *a *= s;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn seed_examples() {
        let j = Jet2::seed(0, 2.0, 3).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.gradient(), &[1.0, 0.0, 0.0]);
        assert!(j.hessian().iter().flatten().all(|h| *h == 0.0));

        let j = Jet2::seed(2, -1.5, 3).unwrap();
        assert_eq!(j.value(), -1.5);
        assert_eq!(j.gradient(), &[0.0, 0.0, 1.0]);

        assert_eq!(
            Jet2::seed(3, 0.0, 3),
            Err(JetError::IndexOutOfRange { index: 3, dim: 3 })
        );
        assert!(matches!(Jet2::constant(1.0, 8), Err(JetError::DimensionTooLarge(8))));
    }

    #[test]
    fn product_of_seeds_is_square() {
        let t = Jet2::seed(0, 2.0, 3).unwrap();
        let sq = Jet2::arith(ArithOp::Mul, &t, &t).unwrap();
        assert_eq!(sq.value(), 4.0);
        assert_eq!(sq.gradient(), &[4.0, 0.0, 0.0]);
        let h = sq.hessian();
        assert_eq!(h[0][0], 2.0);
        assert_eq!(h[0][1] + h[1][1] + h[2][2] + h[1][2], 0.0);
    }

    #[test]
    fn reciprocal_of_seed() {
        let one = Jet2::constant(1.0, 3).unwrap();
        let t = Jet2::seed(0, 2.0, 3).unwrap();
        let r = Jet2::arith(ArithOp::Div, &one, &t).unwrap();
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.partial(0), -0.25);
        assert_eq!(r.second_partial(0, 0), 0.25);
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        let one = Jet2::constant(1.0, 2).unwrap();
        let z = Jet2::seed(1, 0.0, 2).unwrap();
        assert!(matches!(Jet2::arith(ArithOp::Div, &one, &z), Err(JetError::Domain(_))));
    }

    #[test]
    fn add_negation_is_zero() {
        let t = Jet2::seed(0, 2.0, 3).unwrap();
        let a = (t * t).apply(Func::Sin).unwrap();
        let z = Jet2::arith(ArithOp::Add, &a, &(-a)).unwrap();
        assert_eq!(z, Jet2::constant(0.0, 3).unwrap());
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let a = Jet2::seed(0, 1.0, 2).unwrap();
        let b = Jet2::seed(0, 1.0, 3).unwrap();
        assert_eq!(
            Jet2::arith(ArithOp::Add, &a, &b),
            Err(JetError::DimensionMismatch(2, 3))
        );
    }

    #[test]
    fn function_examples() {
        let s = Jet2::seed(1, 0.0, 3).unwrap().apply(Func::Sin).unwrap();
        assert_eq!(s.value(), 0.0);
        assert_eq!(s.gradient(), &[0.0, 1.0, 0.0]);
        assert!(s.hessian().iter().flatten().all(|h| *h == 0.0));

        let e = Jet2::constant(0.0, 3).unwrap().apply(Func::Exp).unwrap();
        assert_eq!(e.value(), 1.0);
        assert!(e.gradient().iter().all(|g| *g == 0.0));

        let l = Jet2::seed(0, 2.0, 3).unwrap().apply(Func::Ln).unwrap();
        assert!(close(l.value(), 2f64.ln()));
        assert_eq!(l.partial(0), 0.5);
        assert_eq!(l.second_partial(0, 0), -0.25);
    }

    #[test]
    fn function_domain_errors() {
        let z = Jet2::seed(0, 0.0, 1).unwrap();
        assert!(z.apply(Func::Abs).is_err());
        assert!(z.apply(Func::Ln).is_err());
        assert!(z.apply(Func::Sqrt).is_err());
        assert!((-Jet2::seed(0, 1.0, 1).unwrap()).apply(Func::Ln).is_err());
        assert!(Jet2::seed(0, -1.0, 1).unwrap().apply(Func::Abs).is_ok());
    }

    #[test]
    fn integer_powers() {
        let t = Jet2::seed(0, 2.0, 1).unwrap();
        let p = t.powi(3).unwrap();
        assert_eq!((p.value(), p.partial(0), p.second_partial(0, 0)), (8.0, 12.0, 12.0));
        let p = t.powi(-2).unwrap();
        assert!(close(p.value(), 0.25));
        assert!(close(p.partial(0), -0.25));
        assert!(close(p.second_partial(0, 0), 6.0 / 16.0));
        assert_eq!(t.powi(0).unwrap(), Jet2::constant(1.0, 1).unwrap());
    }

    #[test]
    fn jet_to_dual_partials() {
        let t = Jet2::seed(0, 2.0, 2).unwrap();
        let u = Jet2::seed(1, 3.0, 2).unwrap();
        let f = t * t * u;
        let d = f.partial_dual(0);
        assert_eq!(d.value, 12.0);
        assert_eq!(&d.grad[..2], &[6.0, 4.0]);
    }

    #[test]
    fn dual_quotient_rule() {
        let mut a = Dual::constant(3.0);
        a.grad[0] = 1.0;
        let mut b = Dual::constant(2.0);
        b.grad[1] = 1.0;
        let q = a / b;
        assert_eq!(q.value, 1.5);
        assert_eq!(q.grad[0], 0.5);
        assert_eq!(q.grad[1], -0.75);
    }
}
