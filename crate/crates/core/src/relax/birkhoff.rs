//! Frank-Wolfe over the Birkhoff polytope.
//!
//! The linear minimisation oracle is a linear assignment problem, so every
//! iterate is a convex combination of permutation matrices. The residual
//! `R = AX − XB` and `H = AR − RB` (half the gradient) are carried along and
//! updated in `O(n²)` plus one matrix product per step: for a permutation
//! matrix `P`, `AP` and `PB` are re-indexings of `A` and `B`, and the only
//! dense product needed is `A·(PB)`. Both are recomputed from `X` every
//! [`REFRESH_EVERY`] steps to stop round-off from accumulating.

use std::collections::HashMap;
use std::time::Instant;

use super::{check_pair, DoublyStochastic, SolverMethod, SolverOptions, SolverReport};
use crate::assignment::lap_min;
use crate::error::{Error, Result};
use crate::linalg::{commutator_residual, gemm_into, Matrix, SymMatrix};
use crate::permutation::Permutation;

const REFRESH_EVERY: usize = 50;

/// Minimise `‖AX − XB‖_F²` over doubly stochastic `X`.
///
/// `converged` is set once the Frank-Wolfe gap, which bounds
/// `objective(X) − min`, drops to `tol_gap · max(1, objective)`. Running out
/// of iterations is not an error.
pub fn solve_birkhoff(a: &SymMatrix, b: &SymMatrix, opts: &SolverOptions) -> Result<SolverReport> {
    let start = Instant::now();
    let n = check_pair(a, b)?;
    let x = match &opts.init {
        Some(init) => {
            if init.rows() != n {
                return Err(Error::invalid("init has the wrong dimension"));
            }
            DoublyStochastic::new(init.clone())?.into_matrix()
        }
        None => DoublyStochastic::barycenter(n).into_matrix(),
    };
    let max_iters = opts.max_iters.unwrap_or(20 * n);
    if opts.method == SolverMethod::Admm {
        return super::admm::solve_admm(a, b, x, opts, max_iters, super::admm::Feasible::Birkhoff);
    }

    let ops = Operators::new(a, b);
    let mut state = State::new(&ops, x)?;
    // Away steps need the iterate as an explicit vertex combination, which is
    // only known for the barycenter start (mean of the n cyclic shifts).
    let mut active = if opts.away_steps && opts.init.is_none() {
        Some(ActiveSet::barycenter(n))
    } else {
        None
    };

    let mut iterations = 0;
    let mut converged = false;
    let mut gap;
    loop {
        if !state.h.all_finite() {
            return Err(Error::numerical("non-finite gradient in Birkhoff solver"));
        }
        let fw_vertex = lap_min(&state.h);
        let fw_inv = fw_vertex.inverse();
        let mut s_fw = ops.vertex_residual(&fw_vertex, &fw_inv);
        s_fw.axpy(-1.0, &state.r);
        gap = -2.0 * state.r.dot(&s_fw);

        let f = state.r.frob_norm_sq();
        if gap <= opts.tol_gap * f.max(1.0) {
            converged = true;
            break;
        }
        if iterations >= max_iters || opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            break;
        }

        match active.as_mut() {
            None => {
                let gamma = line_search(&state.r, &s_fw, 1.0);
                state.step_towards(&ops, &fw_vertex, &fw_inv, &s_fw, gamma);
            }
            Some(set) => {
                let hx = state.h.dot(&state.x);
                let (away_idx, away_score) = set.away_vertex(&state.h);
                let away_gap = 2.0 * (away_score - hx);
                if gap >= away_gap || set.len() == 1 {
                    let gamma = line_search(&state.r, &s_fw, 1.0);
                    state.step_towards(&ops, &fw_vertex, &fw_inv, &s_fw, gamma);
                    set.record_fw_step(fw_vertex, gamma);
                } else {
                    let (v, alpha) = set.get(away_idx);
                    let v = v.clone();
                    let v_inv = v.inverse();
                    let gamma_max = alpha / (1.0 - alpha);
                    // S_away = AD − DB for D = X − V
                    let mut s_away = state.r.clone();
                    s_away.axpy(-1.0, &ops.vertex_residual(&v, &v_inv));
                    let gamma = line_search(&state.r, &s_away, gamma_max);
                    state.step_away(&ops, &v, &v_inv, &s_away, gamma);
                    set.record_away_step(away_idx, gamma, gamma >= gamma_max);
                }
            }
        }
        iterations += 1;
        if iterations % REFRESH_EVERY == 0 {
            state.refresh(&ops)?;
        }
    }

    let objective = commutator_residual(a, &state.x, b)?.frob_norm_sq();
    Ok(SolverReport {
        x: state.x,
        objective,
        fw_gap: gap,
        iterations,
        converged,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Exact minimiser of `γ ↦ ‖R + γS‖²` on `[0, γ_max]`.
pub(super) fn line_search(r: &Matrix, s: &Matrix, gamma_max: f64) -> f64 {
    let ss = s.frob_norm_sq();
    if ss <= 0.0 {
        return 0.0;
    }
    (-r.dot(s) / ss).clamp(0.0, gamma_max)
}

struct Operators<'a> {
    a: &'a Matrix,
    b: &'a Matrix,
    a2: Matrix,
    b2: Matrix,
}

impl<'a> Operators<'a> {
    fn new(a: &'a SymMatrix, b: &'a SymMatrix) -> Self {
        Operators {
            a: a.as_matrix(),
            b: b.as_matrix(),
            a2: a.square().into_matrix(),
            b2: b.square().into_matrix(),
        }
    }

    fn n(&self) -> usize {
        self.a.rows()
    }

    /// `AP − PB`, where `(AP)_ij = A_{i,π⁻¹(j)}` and `(PB)_ij = B_{π(i),j}`.
    fn vertex_residual(&self, p: &Permutation, p_inv: &Permutation) -> Matrix {
        let n = self.n();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            let arow = self.a.row(i);
            let brow = self.b.row(p.apply(i));
            let orow = out.row_mut(i);
            for j in 0..n {
                orow[j] = arow[p_inv.apply(j)] - brow[j];
            }
        }
        out
    }

    /// `A(AP − PB) − (AP − PB)B = A²P − 2·A·PB + PB²`.
    fn vertex_second(&self, p: &Permutation, p_inv: &Permutation) -> Matrix {
        let n = self.n();
        let mut pb = Matrix::zeros(n, n);
        for i in 0..n {
            pb.row_mut(i).copy_from_slice(self.b.row(p.apply(i)));
        }
        let mut out = Matrix::zeros(n, n);
        gemm_into(-2.0, self.a, &pb, 0.0, &mut out);
        for i in 0..n {
            let a2row = self.a2.row(i);
            let b2row = self.b2.row(p.apply(i));
            let orow = out.row_mut(i);
            for j in 0..n {
                orow[j] += a2row[p_inv.apply(j)] + b2row[j];
            }
        }
        out
    }
}

struct State {
    x: Matrix,
    r: Matrix,
    h: Matrix,
}

impl State {
    fn new(ops: &Operators<'_>, x: Matrix) -> Result<Self> {
        let mut s = State {
            r: Matrix::zeros(0, 0),
            h: Matrix::zeros(0, 0),
            x,
        };
        s.refresh(ops)?;
        Ok(s)
    }

    fn refresh(&mut self, ops: &Operators<'_>) -> Result<()> {
        let n = ops.n();
        let mut r = ops.a.matmul(&self.x);
        gemm_into(-1.0, &self.x, ops.b, 1.0, &mut r);
        let mut h = ops.a.matmul(&r);
        gemm_into(-1.0, &r, ops.b, 1.0, &mut h);
        debug_assert_eq!(r.rows(), n);
        self.r = r;
        self.h = h;
        Ok(())
    }

    /// `X ← X + γ(P − X)` with `s = AD − DB` for `D = P − X`.
    fn step_towards(
        &mut self,
        ops: &Operators<'_>,
        p: &Permutation,
        p_inv: &Permutation,
        s: &Matrix,
        gamma: f64,
    ) {
        if gamma <= 0.0 {
            return;
        }
        // T = A S − S B = (A²P − 2APB + PB²) − H
        let t = ops.vertex_second(p, p_inv);
        self.x.scale_in_place(1.0 - gamma);
        for i in 0..p.len() {
            self.x[(i, p.apply(i))] += gamma;
        }
        self.r.axpy(gamma, s);
        self.h.scale_in_place(1.0 - gamma);
        self.h.axpy(gamma, &t);
    }

    /// `X ← X + γ(X − V)` with `s = AD − DB` for `D = X − V`.
    fn step_away(
        &mut self,
        ops: &Operators<'_>,
        v: &Permutation,
        v_inv: &Permutation,
        s: &Matrix,
        gamma: f64,
    ) {
        if gamma <= 0.0 {
            return;
        }
        let t = ops.vertex_second(v, v_inv);
        self.x.scale_in_place(1.0 + gamma);
        for i in 0..v.len() {
            self.x[(i, v.apply(i))] -= gamma;
        }
        self.r.axpy(gamma, s);
        self.h.scale_in_place(1.0 + gamma);
        self.h.axpy(-gamma, &t);
    }
}

/// Vertices of the current iterate with their convex weights.
struct ActiveSet {
    vertices: Vec<Permutation>,
    weights: Vec<f64>,
    index: HashMap<Permutation, usize>,
}

impl ActiveSet {
    fn barycenter(n: usize) -> Self {
        let vertices: Vec<Permutation> = (0..n).map(|k| Permutation::cyclic_shift(n, k)).collect();
        let index = vertices
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        ActiveSet {
            weights: vec![1.0 / n as f64; n],
            vertices,
            index,
        }
    }

    fn len(&self) -> usize {
        self.vertices.len()
    }

    fn get(&self, idx: usize) -> (&Permutation, f64) {
        (&self.vertices[idx], self.weights[idx])
    }

    /// Active vertex maximising `⟨H, V⟩`; lowest position on ties.
    fn away_vertex(&self, h: &Matrix) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, v) in self.vertices.iter().enumerate() {
            let score: f64 = (0..v.len()).map(|i| h[(i, v.apply(i))]).sum();
            if score > best.1 {
                best = (k, score);
            }
        }
        best
    }

    fn record_fw_step(&mut self, p: Permutation, gamma: f64) {
        if gamma <= 0.0 {
            return;
        }
        if gamma >= 1.0 {
            self.vertices.clear();
            self.weights.clear();
            self.index.clear();
        } else {
            self.weights.iter_mut().for_each(|w| *w *= 1.0 - gamma);
        }
        match self.index.get(&p) {
            Some(&k) => self.weights[k] += gamma,
            None => {
                self.index.insert(p.clone(), self.vertices.len());
                self.vertices.push(p);
                self.weights.push(gamma);
            }
        }
    }

    fn record_away_step(&mut self, idx: usize, gamma: f64, drop: bool) {
        if gamma <= 0.0 {
            return;
        }
        self.weights.iter_mut().for_each(|w| *w *= 1.0 + gamma);
        self.weights[idx] -= gamma;
        if drop {
            let removed = self.vertices.swap_remove(idx);
            self.weights.swap_remove(idx);
            self.index.remove(&removed);
            if idx < self.vertices.len() {
                self.index.insert(self.vertices[idx].clone(), idx);
            }
        }
    }
}
