//! Fisher-Rao loss for classification under label noise.
//!
//! * [`simplex`]: Fisher-Rao and Hellinger distances on the probability simplex.
//! * [`loss`]: MSE, MAE, CE, q-CE, Fisher-Rao and Hellinger losses with
//!   analytic score gradients.
//! * [`noise`]: uniform label noise.
//! * [`bounds`]: closed-form risk-gap bounds `A(K, eta)`, `B(K, eta)`.
//! * [`data`]: synthetic clusters, MNIST IDX files, CSV.
//! * [`mlp`]: ReLU MLP trained with mini-batch SGD.
//! * [`experiment`]: multi-seed sweeps, CSV outputs and SVG plots behind the CLI.
//!
//! Data-parallel loops go through [`exec::Execution`]; the `parallel` feature
//! (on by default) backs them with rayon.

pub mod bounds;
pub mod data;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod loss;
pub mod mlp;
pub mod noise;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
pub use exec::Execution;
pub use loss::LossKind;
pub use simplex::{ProbVec, ScoreVec};
