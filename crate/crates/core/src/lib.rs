//! Convex relaxations for aligning two correlated symmetric matrices, with
//! the random model, rounding, a dual-certificate checker and an experiment
//! harness.

pub mod assignment;
pub mod certificate;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod permutation;
pub mod random;
pub mod relax;

pub use assignment::{greedy_round, hungarian_max, overlap_fraction, AssignmentResult};
pub use eigen::{sym_eigen, EigenDecomposition};
pub use error::{Error, Result};
pub use linalg::{Matrix, SymMatrix};
pub use permutation::Permutation;
pub use random::{sample_wigner_pair, Plant, WignerPair};
pub use relax::{
    solve_birkhoff, solve_grampa, solve_simplex, DoublyStochastic, SolverMethod, SolverOptions,
    SolverReport,
};
