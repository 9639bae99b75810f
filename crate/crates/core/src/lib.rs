//! Solving fixed-endpoint variational problems in one dimension with trained,
//! boundary-conforming approximators.
//!
//! A candidate function is built as `y(x) = y_net(x) * bound(x) + g(x)`, where
//! `y_net` is one of five parametric families (Padé rational, MLP, Gaussian
//! RBF, Legendre series, power polynomial), `bound` vanishes at both endpoints
//! and `g` is the line through them. The functional `J[y] = ∫ F(x, y, y') dx`
//! is discretized on a midpoint grid and minimized with gradient descent or
//! Adam using exact analytic gradients.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases fix the scalar to `f64`.

// Validation uses `!(a > b)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximators;
pub mod benchmarks;
pub mod boundary;
pub mod error;
pub mod integrand;
pub mod loss;
pub mod optimizer;
pub mod scalar;

pub use approximators::{parse_structure, Activation, FamilySpec, Interval, Jet, Layer, ParamVector};
pub use benchmarks::{builtin_case, builtin_cases, relative_error, run_matrix, BenchmarkCase, MatrixOptions, MatrixReport};
pub use boundary::{boundary_factor_jet, compose_final, BoundaryCondition, BoundaryExponents};
pub use error::{Error, Result};
pub use integrand::{parse_integrand, IntegrandEval, IntegrandExpr};
pub use loss::{functional_value, loss_and_grad, sample_grid, GridMode, Problem, SampleGrid};
pub use optimizer::{adam_step, sgd_step, train, AdamConfig, AdamState, Algorithm, GridSampling, TrainConfig, TrainReport, TrainStatus};
pub use scalar::Scalar;

pub type Jet64 = Jet<f64>;
pub type ParamVector64 = ParamVector<f64>;
pub type BoundaryCondition64 = BoundaryCondition<f64>;
pub type BoundaryExponents64 = BoundaryExponents<f64>;
pub type Problem64 = Problem<f64>;
pub type SampleGrid64 = SampleGrid<f64>;
pub type TrainReport64 = TrainReport<f64>;
pub type BenchmarkCase64 = BenchmarkCase<f64>;
pub type MatrixReport64 = MatrixReport<f64>;

pub type Jet32 = Jet<f32>;
pub type Problem32 = Problem<f32>;
