//! Sparse signal recovery from compressed linear measurements using
//! Bregman's row-action D-projection method.
//!
//! The solver minimizes a separable convex potential subject to the
//! measurement equations `theta . s = y` by cycling through the rows and
//! D-projecting the current estimate onto one hyperplane at a time. Three
//! potentials are available (see [`FunctionalKind`]); the shifted entropy
//! potential is a smooth, everywhere-defined surrogate for the l1 norm and
//! is the one used for sparse recovery.
//!
//! ```
//! use bregman_cs::{solve, FunctionalKind, Hyperplane, SolverConfig};
//!
//! let rows = vec![
//!     Hyperplane::new(vec![1.0, 1.0, 0.0], 2.0).unwrap(),
//!     Hyperplane::new(vec![0.0, 1.0, 1.0], 1.0).unwrap(),
//! ];
//! let config = SolverConfig::new(FunctionalKind::ShiftedEntropy);
//! let (s, trace) = solve(&rows, &config).unwrap();
//! assert!(trace.final_residual().unwrap() <= config.feas_tol);
//! assert!((s[0] + s[1] - 2.0).abs() < 1e-6);
//! ```

pub mod baselines;
mod error;
pub mod functional;
pub mod matrix;
pub mod projection;
pub mod rng;
pub mod signal;
pub mod solver;

pub use baselines::{evaluate, l0_oracle, pseudo_inverse_solve, ReconReport};
pub use error::{Error, Result};
pub use functional::FunctionalKind;
pub use matrix::Matrix;
pub use projection::{
    hyperplanes_from, project, project_euclidean, project_positive_entropy, project_shifted_entropy,
    solve_multiplier, Hyperplane, MultiplierSolution, ProjectionResult,
};
pub use signal::{
    dct_forward, dct_inverse, dct_matrix, make_cusp, make_cusp_scaled, make_gaussian_ensemble, make_random_sparse,
    measure, SensingEnsemble, SparseSignalSpec, Transform,
};
pub use solver::{
    solve, InitialPoint, OnlineSolver, SolverConfig, SolverTrace, SweepStats, Termination,
};
