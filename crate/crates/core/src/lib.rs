//! Tensor calculus on almost contact B-metric manifolds given in one chart.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod exec;
pub mod expr;
pub mod geometry;
pub mod jets;
pub mod manifold;
pub mod report;
pub mod tensor;
pub mod tolerance;

pub use exec::Execution;
pub use expr::{ConstantBindings, Expression};
pub use jets::{Dual, Jet2};
pub use manifold::{builtin, load_manifold, AccRStructure, MetricTag, Potential, VerticalPotential};
pub use tensor::PointTensor;
