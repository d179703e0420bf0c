//! Numerical toolkit for quasi-periodic Schrödinger cocycles and their
//! radial tree extensions under weak random disorder.
//!
//! - [`torus`]: torus points, the irrational shift and trigonometric potentials
//! - [`cocycle`]: transfer matrices, Lyapunov exponent, IDS, AC classification
//! - [`riccati`]: Möbius cocycle, half-line Green functions, covariant states
//! - [`bloch_floquet`]: Wronskian, reducibility and resonance diagnostics
//! - [`tree`]: Monte-Carlo root Green functions on the disordered tree
//! - [`oracle`]: truncated-matrix eigenvalue references
//! - [`grid`], [`stats`], [`rng`]: θ-grids, estimators and counter-based streams

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch_floquet;
pub mod cocycle;
pub mod grid;
pub mod oracle;
pub mod riccati;
pub mod rng;
pub mod stats;
pub mod torus;
pub mod tree;

pub use num_complex::Complex64;
