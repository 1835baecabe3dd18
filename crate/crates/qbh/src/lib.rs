//! Numerical geometry engine for Lagrangian surface immersions into the
//! Lorentzian complex space forms C^2_1, CP^2_1(4) and CH^2_1(-4).
//!
//! The engine represents a surface by a bivariate Taylor-jet evaluator (the
//! immersion itself in the flat case, a horizontal lift into S^5_2(1) or
//! H^5_3(-1) otherwise), computes first and second fundamental forms, mean
//! curvature, Gauss curvature and the bitension field by several independent
//! routes, and classifies points as minimal / marginally trapped /
//! biharmonic / quasi-biharmonic by residual checks.

pub mod error;
pub mod families;
pub mod fd;
pub mod frame;
pub mod geometry;
pub mod jet;
pub mod lightcone;
pub mod linalg;
pub mod report;

pub use error::{QbhError, Result};
