//! ADMM for the Birkhoff and simplex relaxations.
//!
//! Splits `min f(X) s.t. X1 = 1, Xᵀ1 = 1, X ≥ 0` into an equality-constrained
//! quadratic step in `X` and a clipping step in `Y ≥ 0`, with `X = Y`. The
//! simplex relaxation replaces the marginals by `1ᵀX1 = n`.
//!
//! The `X` step minimises `‖AX − XB‖² + (ρ/2)‖X − V‖²` subject to the
//! marginals. In the eigenbases (`A = UΛUᵀ`, `B = QMQᵀ`, `a = Uᵀ1`,
//! `b = Qᵀ1`) stationarity reads
//! `x̂_ij = k_ij (ρ v̂_ij − α̂_i b_j − a_i β̂_j)` with `k_ij = 1/(2(λ_i − μ_j)² + ρ)`,
//! and the marginal constraints become the `2n × 2n` system
//! `[diag(s) G; Gᵀ diag(t)] [α̂; β̂] = [r₁; r₂]` with `G_ij = k_ij a_i b_j`,
//! `s = K(b∘b)`, `t = Kᵀ(a∘a)`. Eliminating `α̂` leaves the Schur complement
//! `diag(t) − Gᵀ diag(1/s) G`, which is singular along `b` (shifting the
//! multipliers by `(c·1, −c·1)` leaves `X` unchanged); adding a multiple of
//! `bbᵀ` picks the solution orthogonal to `b`.
//!
//! With the single constraint `1ᵀX1 = n` the multiplier is a scalar:
//! `x̂_ij = k_ij (ρ v̂_ij + ν a_i b_j)` and `ν` follows from the constraint.
//!
//! The returned matrix is `Y` moved onto the feasible set by [`repair`],
//! and convergence is judged by its Frank-Wolfe gap.

use std::time::Instant;

use super::{SolverOptions, SolverReport};
use crate::assignment::lap_min;
use crate::eigen::{sym_eigen, EigenDecomposition};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, gemm_into, Matrix, SymMatrix};

/// Feasible set of the relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Feasible {
    /// Doubly stochastic matrices.
    Birkhoff,
    /// Nonnegative matrices with entries summing to `n`.
    Simplex,
}

const OVER_RELAXATION: f64 = 1.6;
const CHECK_EVERY: usize = 10;
const ADAPT_EVERY: usize = 20;
const INITIAL_RHO: f64 = 0.1;

pub(super) fn solve_admm(
    a: &SymMatrix,
    b: &SymMatrix,
    x0: Matrix,
    opts: &SolverOptions,
    max_iters: usize,
    set: Feasible,
) -> Result<SolverReport> {
    let start = Instant::now();
    let n = a.n();
    let eig_a = sym_eigen(a)?;
    let eig_b = sym_eigen(b)?;
    let mut rho = INITIAL_RHO;
    let mut step = XStep::new(&eig_a, &eig_b, rho, set)?;

    let u = &eig_a.vectors;
    let q = &eig_b.vectors;
    let mut y = x0.clone();
    let mut w = Matrix::zeros(n, n);
    let mut best = x0;
    let mut report = gap_report(a, b, &best, set);

    let mut iterations = 0;
    let mut converged = report.gap <= opts.tol_gap * report.f.max(1.0);
    while !converged && iterations < max_iters {
        if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            break;
        }
        // X = argmin f + (ρ/2)‖X − (Y − W)‖² on the affine set
        let v = y.sub(&w);
        let vhat = u.t_matmul(&v).matmul(q);
        let xhat = step.solve(&vhat);
        let x = u.matmul(&xhat).matmul_t(q);

        let mut x_rel = x.scaled(OVER_RELAXATION);
        x_rel.axpy(1.0 - OVER_RELAXATION, &y);
        let mut y_new = x_rel.add(&w);
        y_new
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = v.max(0.0));
        w.axpy(1.0, &x_rel);
        w.axpy(-1.0, &y_new);

        let primal = x.sub(&y_new).frob_norm();
        let dual = rho * y_new.sub(&y).frob_norm();
        y = y_new;
        iterations += 1;

        if iterations % CHECK_EVERY == 0 || iterations == max_iters {
            if !y.all_finite() {
                return Err(Error::numerical("non-finite iterate in ADMM"));
            }
            let candidate = repair(&y, set);
            let rep = gap_report(a, b, &candidate, set);
            if rep.f < report.f || rep.gap <= opts.tol_gap * rep.f.max(1.0) {
                best = candidate;
                report = rep;
            }
            converged = report.gap <= opts.tol_gap * report.f.max(1.0);

            // Keep the two residuals within a factor of 5 of each other.
            let scale = if primal > 5.0 * dual {
                2.0
            } else if dual > 5.0 * primal {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 && iterations % ADAPT_EVERY == 0 {
                rho *= scale;
                w.scale_in_place(1.0 / scale);
                step = XStep::new(&eig_a, &eig_b, rho, set)?;
            }
        }
    }

    Ok(SolverReport {
        x: best,
        objective: report.f,
        fw_gap: report.gap,
        iterations,
        converged,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

struct GapReport {
    f: f64,
    gap: f64,
}

fn gap_report(a: &SymMatrix, b: &SymMatrix, x: &Matrix, set: Feasible) -> GapReport {
    let (am, bm) = (a.as_matrix(), b.as_matrix());
    let mut r = am.matmul(x);
    gemm_into(-1.0, x, bm, 1.0, &mut r);
    let mut h = am.matmul(&r);
    gemm_into(-1.0, &r, bm, 1.0, &mut h);
    // Smallest value of the linear function ⟨H, S⟩ over the vertices.
    let hp = match set {
        Feasible::Birkhoff => {
            let p = lap_min(&h);
            (0..p.len()).map(|i| h[(i, p.apply(i))]).sum()
        }
        Feasible::Simplex => {
            let min = h.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
            x.rows() as f64 * min
        }
    };
    GapReport {
        f: r.frob_norm_sq(),
        gap: 2.0 * (h.dot(x) - hp),
    }
}

/// Birkhoff: nearest point on the affine set `{X1 = 1, Xᵀ1 = 1}`, then the
/// smallest pull towards `J/n` that makes every entry nonnegative. Both
/// operations preserve the marginals, so the result is doubly stochastic.
///
/// Simplex: `Y` is already nonnegative and only needs rescaling to mass `n`.
fn repair(y: &Matrix, set: Feasible) -> Matrix {
    let n = y.rows();
    let nf = n as f64;
    if set == Feasible::Simplex {
        let total = y.sum();
        return if total > 0.0 {
            y.scaled(nf / total)
        } else {
            Matrix::filled(n, n, 1.0 / nf)
        };
    }
    let rs = y.row_sums();
    let cs = y.col_sums();
    let total: f64 = rs.iter().sum();
    let shift = (total - nf) / (nf * nf);
    let mut x = Matrix::from_fn(n, n, |i, j| {
        y[(i, j)] + (1.0 - rs[i]) / nf + (1.0 - cs[j]) / nf + shift
    });
    let min = x.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        let theta = -min / (-min + 1.0 / nf);
        x.scale_in_place(1.0 - theta);
        x.as_mut_slice().iter_mut().for_each(|v| *v += theta / nf);
    }
    x
}

struct XStep {
    rho: f64,
    a1: Vec<f64>,
    b1: Vec<f64>,
    k: Matrix,
    g: Matrix,
    s: Vec<f64>,
    /// Factor of the Schur complement; `None` for the simplex constraint.
    chol: Option<Matrix>,
    /// `Σ k_ij a_i² b_j²`.
    mass_norm: f64,
}

impl XStep {
    fn new(
        eig_a: &EigenDecomposition,
        eig_b: &EigenDecomposition,
        rho: f64,
        set: Feasible,
    ) -> Result<Self> {
        let n = eig_a.n();
        let a1 = eig_a.ones_overlaps();
        let b1 = eig_b.ones_overlaps();
        let k = Matrix::from_fn(n, n, |i, j| {
            let d = eig_a.values[i] - eig_b.values[j];
            1.0 / (2.0 * d * d + rho)
        });
        let g = Matrix::from_fn(n, n, |i, j| k[(i, j)] * a1[i] * b1[j]);
        let b2: Vec<f64> = b1.iter().map(|v| v * v).collect();
        let s: Vec<f64> = (0..n).map(|i| dot(k.row(i), &b2)).collect();
        let mass_norm = s.iter().zip(&a1).map(|(si, ai)| si * ai * ai).sum();
        if set == Feasible::Simplex {
            return Ok(XStep {
                rho,
                a1,
                b1,
                k,
                g,
                s,
                chol: None,
                mass_norm,
            });
        }
        let mut t = vec![0.0; n];
        for i in 0..n {
            let a2 = a1[i] * a1[i];
            for (tj, kij) in t.iter_mut().zip(k.row(i)) {
                *tj += kij * a2;
            }
        }
        let gs = Matrix::from_fn(n, n, |i, j| g[(i, j)] / s[i].sqrt());
        let mut schur = gs.t_matmul(&gs).scaled(-1.0);
        for (j, tj) in t.iter().enumerate() {
            schur[(j, j)] += tj;
        }
        let bb = dot(&b1, &b1);
        let c = schur.trace() / n as f64 / bb;
        for i in 0..n {
            for j in 0..n {
                schur[(i, j)] += c * b1[i] * b1[j];
            }
        }
        let chol = Some(cholesky(&schur)?);
        Ok(XStep {
            rho,
            a1,
            b1,
            k,
            g,
            s,
            chol,
            mass_norm,
        })
    }

    fn solve(&self, vhat: &Matrix) -> Matrix {
        let n = vhat.rows();
        let rho = self.rho;
        let mut kv = vhat.clone();
        for (x, k) in kv.as_mut_slice().iter_mut().zip(self.k.as_slice()) {
            *x *= rho * k;
        }
        let Some(chol) = &self.chol else {
            // Σ x̂_ij a_i b_j = n fixes the scalar multiplier.
            let mass: f64 = (0..n).map(|i| self.a1[i] * dot(kv.row(i), &self.b1)).sum();
            let nu = (n as f64 - mass) / self.mass_norm;
            for i in 0..n {
                let row = kv.row_mut(i);
                let grow = self.g.row(i);
                for j in 0..n {
                    row[j] += nu * grow[j];
                }
            }
            return kv;
        };
        let r1: Vec<f64> = (0..n)
            .map(|i| dot(kv.row(i), &self.b1) - self.a1[i])
            .collect();
        let mut r2: Vec<f64> = self.b1.iter().map(|v| -v).collect();
        for i in 0..n {
            let ai = self.a1[i];
            for (r, v) in r2.iter_mut().zip(kv.row(i)) {
                *r += v * ai;
            }
        }
        // β̂ from the Schur complement, then α̂ = (r₁ − Gβ̂)/s
        let r1s: Vec<f64> = r1.iter().zip(&self.s).map(|(r, s)| r / s).collect();
        let mut rhs = r2;
        for i in 0..n {
            for (r, gij) in rhs.iter_mut().zip(self.g.row(i)) {
                *r -= gij * r1s[i];
            }
        }
        let beta = cholesky_solve(chol, &rhs);
        let alpha: Vec<f64> = (0..n)
            .map(|i| (r1[i] - dot(self.g.row(i), &beta)) / self.s[i])
            .collect();
        for i in 0..n {
            let row = kv.row_mut(i);
            let krow = self.k.row(i);
            for j in 0..n {
                row[j] -= krow[j] * (alpha[i] * self.b1[j] + self.a1[i] * beta[j]);
            }
        }
        kv
    }
}
