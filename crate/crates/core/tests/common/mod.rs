//! Independent reference solvers for small instances. They use plain nested
//! vectors and textbook algorithms so they share no code with the library.
#![allow(dead_code)]

use birkhoff_core::{Matrix, SymMatrix};

pub type Dense = Vec<Vec<f64>>;

pub fn dense(m: &Matrix) -> Dense {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn dense_sym(m: &SymMatrix) -> Dense {
    dense(m.as_matrix())
}

pub fn to_matrix(d: &Dense) -> Matrix {
    Matrix::from_fn(d.len(), d[0].len(), |i, j| d[i][j])
}

fn mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for t in 0..k {
            for j in 0..m {
                c[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    c
}

fn sub(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

fn frob_sq(a: &Dense) -> f64 {
    a.iter().flatten().map(|x| x * x).sum()
}

fn inner(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| x * y)
        .sum()
}

/// Every permutation of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in all_permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|v| if v >= first { v + 1 } else { v }));
            out.push(p);
        }
    }
    out
}

/// Exhaustive maximum-weight assignment: `(π, Σ_i W[i][π(i)])`.
pub fn exhaustive_lap_max(w: &Dense) -> (Vec<usize>, f64) {
    all_permutations(w.len())
        .into_iter()
        .map(|p| {
            let v = p.iter().enumerate().map(|(i, &j)| w[i][j]).sum::<f64>();
            (p, v)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n >= 1")
}

/// `‖AX − XB‖_F²` by triple loops.
pub fn qap_value(a: &Dense, x: &Dense, b: &Dense) -> f64 {
    frob_sq(&sub(&mul(a, x), &mul(x, b)))
}

fn perm_matrix(p: &[usize]) -> Dense {
    let n = p.len();
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(p[i] == j))).collect())
        .collect()
}

/// Smallest `‖AP − PB‖_F²` over all permutation matrices.
pub fn brute_force_qap_min(a: &Dense, b: &Dense) -> f64 {
    all_permutations(a.len())
        .iter()
        .map(|p| qap_value(a, &perm_matrix(p), b))
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean projection onto `{X ≥ 0, X1 = 1, Xᵀ1 = 1}` by Dykstra's
/// alternating projections between the affine set and the orthant.
pub fn project_birkhoff(y: &Dense, sweeps: usize) -> Dense {
    let n = y.len();
    let nf = n as f64;
    let mut x = y.clone();
    let mut p = vec![vec![0.0; n]; n];
    let mut q = vec![vec![0.0; n]; n];
    for _ in 0..sweeps {
        // Affine step: closed-form projection of x + p.
        let z: Dense = (0..n)
            .map(|i| (0..n).map(|j| x[i][j] + p[i][j]).collect())
            .collect();
        let rows: Vec<f64> = z.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<f64> = (0..n).map(|j| z.iter().map(|r| r[j]).sum()).collect();
        let total: f64 = rows.iter().sum();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = z[i][j]
                    + (1.0 - rows[i]) / nf
                    + (1.0 - cols[j]) / nf
                    + (total - nf) / (nf * nf);
                p[i][j] = z[i][j] - a[i][j];
            }
        }
        // Orthant step.
        for i in 0..n {
            for j in 0..n {
                let w = a[i][j] + q[i][j];
                x[i][j] = w.max(0.0);
                q[i][j] = w - x[i][j];
            }
        }
    }
    x
}

pub struct BirkhoffOracle {
    pub x: Dense,
    pub objective: f64,
    /// Frank-Wolfe gap at `x` from an exhaustive linear oracle; bounds the
    /// suboptimality of `objective`.
    pub gap: f64,
}

/// Accelerated projected gradient for `min ‖AX − XB‖_F²` over doubly
/// stochastic `X`. Exhaustive linear oracle, so only for tiny `n`.
pub fn birkhoff_oracle(a: &Dense, b: &Dense, iters: usize) -> BirkhoffOracle {
    let n = a.len();
    let norm = |m: &Dense| frob_sq(m).sqrt();
    let lip = 2.0 * (norm(a) + norm(b)).powi(2);
    let grad = |x: &Dense| {
        let r = sub(&mul(a, x), &mul(x, b));
        let g = sub(&mul(a, &r), &mul(&r, b));
        g.into_iter()
            .map(|row| row.into_iter().map(|v| 2.0 * v).collect())
            .collect::<Dense>()
    };
    let mut x = vec![vec![1.0 / n as f64; n]; n];
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let g = grad(&y);
        let step: Dense = (0..n)
            .map(|i| (0..n).map(|j| y[i][j] - g[i][j] / lip).collect())
            .collect();
        let next = project_birkhoff(&step, 200);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| next[i][j] + beta * (next[i][j] - x[i][j]))
                    .collect()
            })
            .collect();
        x = next;
        t = t_next;
    }
    // Clean up projection residue before scoring.
    let x = project_birkhoff(&x, 2000);
    let g = grad(&x);
    let neg: Dense = g.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let (_, best) = exhaustive_lap_max(&neg);
    let gap = inner(&g, &x) + best;
    BirkhoffOracle {
        objective: qap_value(a, &x, b),
        x,
        gap,
    }
}

/// Projected gradient with constant momentum on
/// `(2+σ²)(n+1)‖X‖² − 2Tr(X)² − 2⟨X, Xᵀ⟩` over doubly stochastic `X`.
///
/// The Hessian is `2(2+σ²)(n+1)·Id − 4·vec(I)vec(I)ᵀ − 4·T` with `T` the
/// transpose map, so its spectrum lies in `[2σ²(n+1), 2(2+σ²)(n+1) + 4]`.
pub fn population_oracle(n: usize, sigma: f64, iters: usize) -> Dense {
    let nf = n as f64;
    let c = (2.0 + sigma * sigma) * (nf + 1.0);
    let lip = 2.0 * c + 4.0;
    let mu = 2.0 * sigma * sigma * (nf + 1.0);
    let beta = (lip.sqrt() - mu.sqrt()) / (lip.sqrt() + mu.sqrt());
    let grad = |x: &Dense| -> Dense {
        let tr: f64 = (0..n).map(|i| x[i][i]).sum();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let id = if i == j { 4.0 * tr } else { 0.0 };
                        2.0 * c * x[i][j] - id - 4.0 * x[j][i]
                    })
                    .collect()
            })
            .collect()
    };
    let mut x = vec![vec![1.0 / nf; n]; n];
    let mut y = x.clone();
    for _ in 0..iters {
        let g = grad(&y);
        let step: Dense = (0..n)
            .map(|i| (0..n).map(|j| y[i][j] - g[i][j] / lip).collect())
            .collect();
        let next = project_birkhoff(&step, 20);
        y = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| next[i][j] + beta * (next[i][j] - x[i][j]))
                    .collect()
            })
            .collect();
        x = next;
    }
    x
}

/// Solve `Kv = r` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut k: Dense, mut r: Vec<f64>) -> Vec<f64> {
    let m = r.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&p, &q| k[p][col].abs().total_cmp(&k[q][col].abs()))
            .unwrap();
        k.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..m {
            let f = k[row][col] / k[col][col];
            if f != 0.0 {
                for c in col..m {
                    k[row][c] -= f * k[col][c];
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut v = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|c| k[row][c] * v[c]).sum();
        v[row] = (r[row] - s) / k[row][row];
    }
    v
}

/// `argmin ‖AX − XB‖_F² + η‖X‖_F²` subject to `1ᵀX1 = n`, from the dense
/// KKT system over `vec(X)`.
pub fn grampa_kkt(a: &Dense, b: &Dense, eta: f64) -> Dense {
    let n = a.len();
    let m = n * n;
    let idx = |i: usize, j: usize| i * n + j;
    // Linear map L: X -> AX - XB as an m x m matrix.
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..n {
        for j in 0..n {
            for t in 0..n {
                l[idx(i, j)][idx(t, j)] += a[i][t];
                l[idx(i, j)][idx(i, t)] -= b[t][j];
            }
        }
    }
    let mut kkt = vec![vec![0.0; m + 1]; m + 1];
    for p in 0..m {
        for q in 0..m {
            let v: f64 = (0..m).map(|r| l[r][p] * l[r][q]).sum();
            kkt[p][q] = 2.0 * v + if p == q { 2.0 * eta } else { 0.0 };
        }
        kkt[p][m] = 1.0;
        kkt[m][p] = 1.0;
    }
    let mut rhs = vec![0.0; m + 1];
    rhs[m] = n as f64;
    let v = gauss_solve(kkt, rhs);
    (0..n)
        .map(|i| (0..n).map(|j| v[idx(i, j)]).collect())
        .collect()
}

pub fn frob_dist(a: &Dense, b: &Dense) -> f64 {
    frob_sq(&sub(a, b)).sqrt()
}
