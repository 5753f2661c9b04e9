//! Convex relaxations of `min_Π ‖AΠ − ΠB‖_F²`.
//!
//! * [`solve_birkhoff`]: doubly stochastic matrices, by ADMM or by
//!   Frank-Wolfe with a linear-assignment oracle.
//! * [`solve_simplex`]: nonnegative matrices with total mass `n`,
//!   Frank-Wolfe over the scaled simplex.
//! * [`solve_grampa`]: ridge-regularised relaxation with only `1ᵀX1 = n`,
//!   solved in closed form in the eigenbases of `A` and `B`.
//! * [`population_optimum`]: minimiser of the expected objective.

mod admm;
mod birkhoff;
mod grampa;
mod population;
mod simplex;

pub use birkhoff::solve_birkhoff;
pub use grampa::{grampa_coefficients, solve_grampa, GrampaCoefficients, DEFAULT_ETA};
pub use population::{
    population_distance, population_mixing_weight, population_objective, population_optimum,
};
pub use simplex::solve_simplex;

use std::time::Duration;

use crate::error::{Error, Result};
use crate::linalg::{commutator_residual, Matrix, SymMatrix};

/// Entrywise tolerance for nonnegativity.
pub const NONNEG_TOL: f64 = 1e-9;
/// Tolerance on row and column sums.
pub const MARGINAL_TOL: f64 = 1e-8;

/// An `n × n` nonnegative matrix with unit row and column sums.
#[derive(Clone, Debug, PartialEq)]
pub struct DoublyStochastic(Matrix);

impl DoublyStochastic {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("doubly stochastic matrix must be square"));
        }
        if let Some(v) = m.as_slice().iter().find(|&&v| !(v >= -NONNEG_TOL)) {
            return Err(Error::invalid(format!("negative or non-finite entry {v}")));
        }
        for (kind, sums) in [("row", m.row_sums()), ("column", m.col_sums())] {
            if let Some((k, s)) = sums
                .iter()
                .enumerate()
                .find(|(_, s)| (**s - 1.0).abs() > MARGINAL_TOL)
            {
                return Err(Error::invalid(format!("{kind} {k} sums to {s}")));
            }
        }
        Ok(DoublyStochastic(m))
    }

    /// `J / n`.
    pub fn barycenter(n: usize) -> Self {
        DoublyStochastic(Matrix::filled(n, n, 1.0 / n as f64))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Options shared by the Frank-Wolfe solvers.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Stop once `fw_gap ≤ tol_gap · max(1, objective)`.
    pub tol_gap: f64,
    /// Iteration cap; `None` selects the solver default (`20n` Birkhoff, `50n` simplex).
    pub max_iters: Option<usize>,
    /// Starting point; `None` is the barycenter `J/n`.
    pub init: Option<Matrix>,
    /// Away steps for Birkhoff Frank-Wolfe, pairwise steps for the simplex solver.
    pub away_steps: bool,
    /// Optional wall-clock limit; reaching it ends the solve unconverged.
    pub time_limit: Option<Duration>,
    /// Algorithm for the Birkhoff relaxation.
    pub method: SolverMethod,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Frank-Wolfe with a linear-assignment oracle.
    FrankWolfe,
    /// ADMM splitting the marginal constraints from nonnegativity.
    #[default]
    Admm,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "admm" => Ok(SolverMethod::Admm),
            "frank-wolfe" | "fw" => Ok(SolverMethod::FrankWolfe),
            _ => Err(Error::invalid(format!("unknown method '{s}'"))),
        }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_gap: 1e-6,
            max_iters: None,
            init: None,
            away_steps: false,
            time_limit: None,
            method: SolverMethod::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverReport {
    pub x: Matrix,
    /// `‖AX − XB‖_F²`, plus `η‖X‖_F²` for GRAMPA.
    pub objective: f64,
    /// Final Frank-Wolfe gap; 0 for closed-form solvers.
    pub fw_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_seconds: f64,
}

/// `‖AX − XB‖_F²`.
pub fn objective(a: &SymMatrix, x: &Matrix, b: &SymMatrix) -> Result<f64> {
    Ok(commutator_residual(a, x, b)?.frob_norm_sq())
}

/// `∇_X ‖AX − XB‖_F² = 2(A·R − R·B)` with `R = AX − XB`.
pub fn gradient(a: &SymMatrix, x: &Matrix, b: &SymMatrix) -> Result<Matrix> {
    let r = commutator_residual(a, x, b)?;
    let mut g = commutator_residual(a, &r, b)?;
    g.scale_in_place(2.0);
    Ok(g)
}

pub(crate) fn check_pair(a: &SymMatrix, b: &SymMatrix) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::invalid(format!(
            "A is {0}x{0} but B is {1}x{1}",
            a.n(),
            b.n()
        )));
    }
    Ok(a.n())
}
