//! Dense primal active-set solver for small strictly convex quadratic
//! programs with inequality constraints.
//!
//! The solver iterates on a working set of constraints treated as
//! equalities. Each iteration solves the equality-constrained subproblem
//! through a block elimination against the Hessian factor, falling back to
//! a pivoted orthogonal factorization when the working-set rows are
//! linearly dependent — in that case the redundant rows receive exactly
//! zero multipliers instead of derailing the factorization. Warm starts
//! reuse the previous active set, which is the usual situation in receding
//! horizon control where consecutive problems differ only slightly.
//!
//! Problems can be serialized to a plain-text dump format for offline
//! replay of solver issues.

mod dump;
mod error;
mod kkt;
mod problem;
mod qr;
mod solve;

pub use dump::{dump, parse, read_dump, write_dump};
pub use error::QpError;
pub use kkt::{kkt_step, step_length};
pub use problem::QPProblem;
pub use solve::{solve, QPSolution, SolveStatus, WorkingSet};
