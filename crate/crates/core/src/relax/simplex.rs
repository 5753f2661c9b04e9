//! Frank-Wolfe over `{X ≥ 0, 1ᵀX1 = n}`. The default method hands off to
//! the ADMM solver instead.
//!
//! Vertices are `n·E_kl`. For such a vertex `AV − VB` touches only column `l`
//! and row `k`, and `A(AV − VB) − (AV − VB)B` is a rank-one correction plus a
//! column and a row, so each step is `O(n²)` with no dense products.
//!
//! With `away_steps` the solver takes pairwise steps instead, moving mass
//! from the support entry with the largest gradient to the Frank-Wolfe
//! vertex. Plain steps only shrink mass geometrically, so they crawl when the
//! optimum sits on a low-dimensional face (a permutation at `σ = 0`).

use std::time::Instant;

use super::birkhoff::line_search;
use super::{check_pair, SolverMethod, SolverOptions, SolverReport, NONNEG_TOL};
use crate::error::{Error, Result};
use crate::linalg::{commutator_residual, gemm_into, Matrix, SymMatrix};

const REFRESH_EVERY: usize = 200;

/// Minimise `‖AX − XB‖_F²` over nonnegative `X` with entries summing to `n`.
pub fn solve_simplex(a: &SymMatrix, b: &SymMatrix, opts: &SolverOptions) -> Result<SolverReport> {
    let start = Instant::now();
    let n = check_pair(a, b)?;
    let nf = n as f64;
    let mut x = match &opts.init {
        Some(init) => {
            if init.rows() != n || init.cols() != n {
                return Err(Error::invalid("init has the wrong dimension"));
            }
            if init.as_slice().iter().any(|&v| !(v >= -NONNEG_TOL))
                || (init.sum() - nf).abs() > 1e-8 * nf
            {
                return Err(Error::invalid("init is not in the scaled simplex"));
            }
            init.clone()
        }
        None => Matrix::filled(n, n, 1.0 / nf),
    };
    let max_iters = opts.max_iters.unwrap_or(50 * n);
    if opts.method == SolverMethod::Admm {
        return super::admm::solve_admm(a, b, x, opts, max_iters, super::admm::Feasible::Simplex);
    }
    let am = a.as_matrix();
    let bm = b.as_matrix();
    let a2 = a.square().into_matrix();
    let b2 = b.square().into_matrix();

    let refresh = |x: &Matrix| -> (Matrix, Matrix) {
        let mut r = am.matmul(x);
        gemm_into(-1.0, x, bm, 1.0, &mut r);
        let mut h = am.matmul(&r);
        gemm_into(-1.0, &r, bm, 1.0, &mut h);
        (r, h)
    };
    let (mut r, mut h) = refresh(&x);

    let mut iterations = 0;
    let mut converged = false;
    let mut gap;
    loop {
        if !h.all_finite() {
            return Err(Error::numerical("non-finite gradient in simplex solver"));
        }
        let (k, l) = argmin_entry(&h);
        // S = n·V − R with V = A E_kl − E_kl B
        let mut s = r.scaled(-1.0);
        for i in 0..n {
            s[(i, l)] += nf * am[(i, k)];
        }
        for j in 0..n {
            s[(k, j)] -= nf * bm[(l, j)];
        }
        gap = -2.0 * r.dot(&s);
        let f = r.frob_norm_sq();
        if gap <= opts.tol_gap * f.max(1.0) {
            converged = true;
            break;
        }
        if iterations >= max_iters || opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            break;
        }

        let away = if opts.away_steps {
            argmax_support(&h, &x)
        } else {
            None
        };
        match away.filter(|&pq| pq != (k, l)) {
            Some((p, q)) => {
                // Direction n(E_kl − E_pq); S gains −n(A E_pq − E_pq B) on top of R's removal.
                s.axpy(1.0, &r);
                for i in 0..n {
                    s[(i, q)] -= nf * am[(i, p)];
                }
                for j in 0..n {
                    s[(p, j)] += nf * bm[(q, j)];
                }
                let gamma_max = x[(p, q)] / nf;
                let gamma = line_search(&r, &s, gamma_max);
                if gamma > 0.0 {
                    let c = gamma * nf;
                    x[(k, l)] += c;
                    if gamma == gamma_max {
                        x[(p, q)] = 0.0;
                    } else {
                        x[(p, q)] -= c;
                    }
                    r.axpy(gamma, &s);
                    add_vertex_curvature(&mut h, am, bm, &a2, &b2, k, l, c);
                    add_vertex_curvature(&mut h, am, bm, &a2, &b2, p, q, -c);
                }
            }
            None => {
                let gamma = line_search(&r, &s, 1.0);
                if gamma > 0.0 {
                    x.scale_in_place(1.0 - gamma);
                    x[(k, l)] += gamma * nf;
                    r.axpy(gamma, &s);
                    h.scale_in_place(1.0 - gamma);
                    add_vertex_curvature(&mut h, am, bm, &a2, &b2, k, l, gamma * nf);
                }
            }
        }
        iterations += 1;
        if iterations % REFRESH_EVERY == 0 {
            (r, h) = refresh(&x);
        }
    }

    let objective = commutator_residual(a, &x, b)?.frob_norm_sq();
    Ok(SolverReport {
        x,
        objective,
        fw_gap: gap,
        iterations,
        converged,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// `H += c(A²E_kl − 2 a_k b_lᵀ + E_kl B²)`, the change in `A R − R B` when
/// `X` gains `c` at `(k, l)`.
#[allow(clippy::too_many_arguments)]
fn add_vertex_curvature(
    h: &mut Matrix,
    am: &Matrix,
    bm: &Matrix,
    a2: &Matrix,
    b2: &Matrix,
    k: usize,
    l: usize,
    c: f64,
) {
    let b_row_l = bm.row(l);
    for i in 0..h.rows() {
        let aik = am[(i, k)];
        let hrow = h.row_mut(i);
        for (hj, bj) in hrow.iter_mut().zip(b_row_l) {
            *hj -= 2.0 * c * aik * bj;
        }
        hrow[l] += c * a2[(i, k)];
    }
    for (hj, bj) in h.row_mut(k).iter_mut().zip(b2.row(l)) {
        *hj += c * bj;
    }
}

/// Largest gradient entry among the positive entries of `x`.
fn argmax_support(h: &Matrix, x: &Matrix) -> Option<(usize, usize)> {
    let cols = h.cols();
    h.as_slice()
        .iter()
        .zip(x.as_slice())
        .enumerate()
        .filter(|(_, (_, &xv))| xv > 0.0)
        .max_by(|(_, (a, _)), (_, (b, _))| a.total_cmp(b))
        .map(|(idx, _)| (idx / cols, idx % cols))
}

/// Position of the smallest entry; the lowest `(row, col)` wins ties.
pub(crate) fn argmin_entry(m: &Matrix) -> (usize, usize) {
    let mut best = 0;
    let data = m.as_slice();
    for (idx, &v) in data.iter().enumerate() {
        if v < data[best] {
            best = idx;
        }
    }
    (best / m.cols(), best % m.cols())
}
