//! Linear assignment, rounding of relaxed solutions, and an exhaustive QAP
//! oracle for small instances.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::permutation::Permutation;

/// Largest `n` accepted by [`brute_force_qap`].
pub const BRUTE_FORCE_MAX_N: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentResult {
    pub permutation: Permutation,
    /// `Σ_i W[i][π(i)]`.
    pub value: f64,
}

/// Maximum-weight perfect matching on a square weight matrix.
pub fn hungarian_max(w: &Matrix) -> Result<AssignmentResult> {
    if !w.is_square() {
        return Err(Error::invalid(
            "hungarian_max: weight matrix must be square",
        ));
    }
    if !w.all_finite() {
        return Err(Error::invalid("hungarian_max: non-finite weights"));
    }
    let permutation = solve_lap(w, -1.0);
    let value = assignment_value(w, &permutation);
    Ok(AssignmentResult { permutation, value })
}

/// Minimum-cost assignment; used as the Birkhoff linear minimisation oracle.
pub(crate) fn lap_min(cost: &Matrix) -> Permutation {
    solve_lap(cost, 1.0)
}

pub fn assignment_value(w: &Matrix, p: &Permutation) -> f64 {
    (0..p.len()).map(|i| w[(i, p.apply(i))]).sum()
}

/// Shortest augmenting path assignment (Jonker–Volgenant style, dual
/// potentials `u`, `v`) minimising `Σ_i sign · c[i][π(i)]`.
///
/// Rows are inserted in increasing order and the first column reaching the
/// minimal reduced cost is taken, so ties resolve towards low indices.
fn solve_lap(c: &Matrix, sign: f64) -> Permutation {
    let n = c.rows();
    if n == 0 {
        return Permutation::identity(0);
    }
    let data = c.as_slice();
    // 1-based potentials with a virtual column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|f| *f = false);

        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let crow = &data[(i0 - 1) * n..i0 * n];
            let ui0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = sign * crow[j - 1] - ui0 - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut map = vec![0usize; n];
    for j in 1..=n {
        map[col_owner[j] - 1] = j - 1;
    }
    Permutation::from_vec_unchecked(map)
}

/// Per-row argmax `π̂(i) = argmax_j X_ij`, lowest column on ties. The result
/// need not be a bijection.
pub fn greedy_round(x: &Matrix) -> Vec<usize> {
    (0..x.rows())
        .map(|i| {
            let row = x.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Fraction of indices with `π̂(i) = π⋆(i)`.
pub fn overlap_fraction(pi_hat: &[usize], pi_star: &Permutation) -> Result<f64> {
    if pi_hat.len() != pi_star.len() {
        return Err(Error::invalid(format!(
            "overlap_fraction: length {} vs {}",
            pi_hat.len(),
            pi_star.len()
        )));
    }
    if pi_hat.is_empty() {
        return Ok(1.0);
    }
    let hits = pi_hat
        .iter()
        .zip(pi_star.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / pi_hat.len() as f64)
}

/// `‖AΠ − ΠB‖_F²` for the permutation matrix of `pi`, evaluated by indexing:
/// `Σ_{i,k} (A_ik − B_{π(i)π(k)})²`.
pub fn qap_objective(a: &SymMatrix, b: &SymMatrix, pi: &Permutation) -> f64 {
    let n = a.n();
    let mut s = 0.0;
    for i in 0..n {
        let bi = b.as_matrix().row(pi.apply(i));
        for (k, &aik) in a.as_matrix().row(i).iter().enumerate() {
            let d = aik - bi[pi.apply(k)];
            s += d * d;
        }
    }
    s
}

/// Exhaustive QAP minimiser; the lexicographically smallest optimum wins.
pub fn brute_force_qap(a: &SymMatrix, b: &SymMatrix) -> Result<(Permutation, f64)> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::invalid("brute_force_qap: dimension mismatch"));
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::invalid(format!(
            "brute_force_qap: n = {n} exceeds {BRUTE_FORCE_MAX_N}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_val = f64::INFINITY;
    loop {
        let p = Permutation::from_vec_unchecked(perm.clone());
        let val = qap_objective(a, b, &p);
        if val < best_val {
            best_val = val;
            best.clone_from(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok((Permutation::from_vec_unchecked(best), best_val))
}

/// Lexicographic successor in place; false once the last permutation is reached.
pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
