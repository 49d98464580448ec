//! Selecting one program from a pool of candidates by partitioning the pool
//! into classes of programs that no solver query can tell apart.

pub mod baselines;
pub mod domain;
pub mod equiv;
pub mod minilang;
pub mod partition;
pub mod solver;
pub mod symcore;
pub mod term;

pub use baselines::{SimilarityMatrixF32, SimilarityMatrixF64};
pub use domain::{ProblemSpec, Signature, TestCase};
pub use equiv::{EquivChecker, EquivOptions, EquivVerdict};
pub use minilang::{ExecutionOutcome, Program, Value};
pub use partition::{sep_select, PartitionSet, SelectionReport};
pub use solver::{Backend, Solver, SolverVerdict};
pub use symcore::Budget;
