//! STEADE: surrogate-assisted differential evolution for low-budget
//! black-box minimization.
//!
//! The optimizer estimates the objective landscape with a stochastic
//! cubic-RBF surrogate, then switches to a Gaussian-process batch
//! Bayesian-optimization model whose suggestions seed a differential
//! evolution mutation. Everything runs through a strict suggest/observe
//! batch protocol, so the caller owns the objective function.
//!
//! # Quick start
//!
//! ```
//! use steade::optimizer::{Optimizer, OptimizerConfig, OptimizerKind};
//! use steade::space::ParamSpace;
//!
//! let space = ParamSpace::real_box(&[(-5.12, 5.12); 3]).unwrap();
//! let config = OptimizerConfig { max_iterations: 4, ..OptimizerConfig::with_seed(7) };
//! let mut opt = Optimizer::new(OptimizerKind::Steade, space, config).unwrap();
//!
//! for _ in 0..4 {
//!     let batch = opt.suggest().unwrap();
//!     let values: Vec<f64> = batch
//!         .iter()
//!         .map(|x| x.iter().map(|v| v * v).sum())
//!         .collect();
//!     opt.observe(&batch, &values).unwrap();
//! }
//! let (_best_point, best_value) = opt.best().unwrap();
//! assert!(best_value.is_finite());
//! ```

pub mod bench;
pub mod de;
pub mod design;
pub mod error;
pub mod gp;
pub mod optimizer;
pub mod rbf;
pub mod space;

pub use error::{Error, Result};
