//! Numerical laboratory for elliptic homogenization with a periodic
//! diffusion matrix and a random potential.
//!
//! The crate is organised bottom-up: grids and operators, solvers and cell
//! problems, random potentials, Monte Carlo sweeps, and limit-law sampling.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod corrector;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod fft;
pub mod fields;
pub mod grid;
pub mod limit_law;
pub mod operator;
pub mod sobolev;
pub mod solver;
pub mod stats;
pub mod torus;

pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::{Grid, GridFunction};
pub use operator::{assemble_oscillatory, homogenized_operator, DirichletOperator, LinearOperator, PeriodicOperator};
pub use solver::{greens_column, solve_dirichlet, SolverOptions};
pub use torus::{Pattern, TorusField};
pub use corrector::{effective_matrix, solve_corrector, EffectiveModel};
pub use sobolev::{h_neg_projection_norm, sobolev_norm};
