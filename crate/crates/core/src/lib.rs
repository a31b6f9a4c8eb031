//! Matrix-free first-order linear programming.
//!
//! Solves LPs of the form
//!
//! ```text
//! min cᵀx   s.t.  Ax = b,  Gx ≥ h,  l ≤ x ≤ u
//! ```
//!
//! through their primal-dual saddle form with two algorithms: restarted
//! average PDHG and reflected restarted Halpern PDHG. Every iteration costs
//! two matrix-vector products; the full pipeline adds diagonal
//! preconditioning (Ruiz + Pock-Chambolle), adaptive restarts, an adaptive
//! step size, a primal weight, infeasibility detection from iterate
//! differences, and optional feasibility polishing.
//!
//! On top of the batch solver sits a decision-focused learning layer: the
//! SPO+ surrogate loss, its subgradient, and normalized regret.
//!
//! ```
//! use folp_core::{solve, LpProblem, ConstraintMatrix, SolverOptions, SolveStatus, Storage};
//!
//! // min 2x₁ + x₂  s.t. x₁ + x₂ ≥ 1, 0 ≤ x ≤ 1
//! let problem = LpProblem::new(
//!     vec![2.0, 1.0],
//!     ConstraintMatrix::empty(Storage::Dense, 2),
//!     vec![],
//!     ConstraintMatrix::dense_from_rows(&[vec![1.0, 1.0]]).unwrap(),
//!     vec![1.0],
//!     vec![0.0, 0.0],
//!     vec![1.0, 1.0],
//! );
//! let result = solve(&problem, &SolverOptions::default(), None).unwrap();
//! assert_eq!(result.status, SolveStatus::Optimal);
//! assert!((result.objective - 1.0).abs() < 1e-3);
//! ```

// Kernel loops index several arrays at once; explicit indices keep them
// readable next to the update formulas.
#![allow(clippy::needless_range_loop)]

pub mod diffopt;
pub mod driver;
pub mod linalg;
pub mod pdhg;
pub mod problem;
pub mod scaling;

mod error;
mod scalar;

pub use error::{Error, Result, Violation};
pub use scalar::Real;

pub use driver::{
    batch_solve, check_termination, compute_kkt_residuals, detect_infeasibility,
    feasibility_polish, should_restart, solve, Algorithm, InfeasibilityCertificate, KktResiduals,
    KktSummary, PolishResult, Precision, SolveResult, SolveStatus, SolverOptions, WarmStart,
};
pub use linalg::{ConstraintMatrix, SpectralEstimate, Storage};
pub use pdhg::Iterate;
pub use problem::{build_saddle_form, validate_problem, LpProblem, SaddleForm};
pub use scaling::ScalingInfo;
