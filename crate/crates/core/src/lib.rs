//! Multi-class feature selection by row-sparse least squares.
//!
//! The core problem is
//!
//! ```text
//! min_W  ½‖WᵀX̃ − Ỹ‖²_F + λ‖W‖_{2,0}
//! ```
//!
//! on centered data, where `‖W‖_{2,0}` counts the nonzero rows of the `d x C`
//! weight matrix. Each nonzero row is a selected feature. The problem is solved
//! along a decreasing sequence of `λ` by homotopy iterative hard thresholding
//! ([`solver::hiht_solve`]) or its one-update-per-`λ` variant
//! ([`solver::ahiht_solve`]).

pub mod baseline;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod objective;
pub mod solver;
pub mod thresholding;

pub use data::{center, one_hot_encode, stratified_split, CenteredData, Dataset, LabelMatrix};
pub use error::{Error, Result};
pub use objective::WeightMatrix;
pub use solver::{
    ahiht_solve, hiht_solve, resolve_config, select_by_count, Algorithm, PathPoint,
    RegularizationPath, ResolvedConfig, SolverConfig,
};
