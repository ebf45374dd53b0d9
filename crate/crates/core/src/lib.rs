//! Method of reflections for rigid particles in a Stokes strain flow, together
//! with the homogenized (effective-viscosity) side: mobility tensors, stresslet
//! kernels, particle clouds, reflection iteration, grid fields, negative
//! Sobolev norms and the Einstein work functional.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod config;
pub mod effective;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod kernels;
pub mod quadrature;
pub mod reflections;
pub mod sym3;

pub use cloud::{Aabb, CloudStats, ParticleCloud};
pub use error::{Error, Result};
pub use reflections::{ReflectionOptions, ReflectionState, StressletSolution, Summation};
pub use sym3::{Mobility, SymTraceFree3};

/// Three-vectors used for positions and velocities.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Dense 3×3 matrices (velocity gradients, Oseen tensor values).
pub type Mat3 = nalgebra::Matrix3<f64>;
