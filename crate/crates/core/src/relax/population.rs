//! Minimiser of the expected objective over the Birkhoff polytope.
//!
//! For `B = A + σZ` with independent GOE `A`, `Z` and an identity plant,
//! `E‖AX − XB‖_F² = (1/n)[(2+σ²)(n+1)‖X‖_F² − 2Tr(X)² − 2⟨X, Xᵀ⟩]`.
//! Its minimiser over doubly stochastic matrices is `εI + (1−ε)J/n` with
//! `ε = 2/(2 + σ²(n+1))`.

use super::DoublyStochastic;
use crate::linalg::Matrix;

/// Weight `ε` on the identity in the population optimum.
pub fn population_mixing_weight(n: usize, sigma: f64) -> f64 {
    2.0 / (2.0 + sigma * sigma * (n as f64 + 1.0))
}

/// `εI + (1−ε)J/n`.
pub fn population_optimum(n: usize, sigma: f64) -> DoublyStochastic {
    let eps = population_mixing_weight(n, sigma);
    let off = (1.0 - eps) / n as f64;
    let m = Matrix::from_fn(n, n, |i, j| if i == j { eps + off } else { off });
    DoublyStochastic::new(m).expect("convex combination of I and J/n")
}

/// `‖I − X̄‖_F = (1−ε)√(n−1)`.
pub fn population_distance(n: usize, sigma: f64) -> f64 {
    (1.0 - population_mixing_weight(n, sigma)) * ((n as f64) - 1.0).sqrt()
}

/// `(2+σ²)(n+1)‖X‖_F² − 2Tr(X)² − 2⟨X, Xᵀ⟩`, the expected objective up to
/// the factor `1/n`.
pub fn population_objective(x: &Matrix, sigma: f64) -> f64 {
    let n = x.rows() as f64;
    let tr = x.trace();
    let xxt = x.dot(&x.transpose());
    (2.0 + sigma * sigma) * (n + 1.0) * x.frob_norm_sq() - 2.0 * tr * tr - 2.0 * xxt
}
