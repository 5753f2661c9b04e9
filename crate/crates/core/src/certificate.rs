//! Dual certificate for the Birkhoff relaxation at small noise, built in the
//! eigenbasis of `A`, together with numerical checks of the high-probability
//! bounds the construction relies on.
//!
//! With `a_i = ⟨u_i, 1⟩`, `big = {i : |a_i| ≥ n^{−ε/16}}` and `small` its
//! complement, the certificate is
//!
//! * `R = J − I = Σ w_ij u_i u_jᵀ`, `w_ij = a_i a_j − 1{i=j}`;
//! * `μ = Σ w_i u_i`, `w_i = a_i + (C − 1)/a_i · 1{i ∈ big}`, `C = 1 − n/#big`;
//! * `M = Σ_{i≠j} w̃_ij/(λ_i − λ_j) u_i u_jᵀ`, `w̃_ij = a_i a_j − a_i w_j`;
//! * `μ̃ = 0`.
//!
//! Then `D = R − (AM − MA) − 1μᵀ = −Σ_small u_i u_iᵀ − C Σ_big u_i u_iᵀ`, and
//! for every doubly stochastic `X`, `Σ_{i≠j} X_ij = ⟨M, AX − XA⟩ + ⟨X, D⟩`.

use serde::Serialize;

use crate::eigen::EigenDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{commutator_residual, Matrix, SymMatrix};
use crate::relax::DoublyStochastic;

#[derive(Clone, Debug)]
pub struct CertificateBundle {
    pub epsilon: f64,
    /// `n^{−ε/16}`.
    pub threshold: f64,
    /// `J − I`.
    pub r: Matrix,
    /// Coefficients `w_ij` of `R` in the eigenbasis.
    pub w: Matrix,
    pub mu: Vec<f64>,
    /// Always zero.
    pub mu_tilde: Vec<f64>,
    /// `1 − n/#big`.
    pub c: f64,
    /// `1 − n/(n − #small)`; equal to `c` by construction.
    pub c_alt: f64,
    pub w_i: Vec<f64>,
    pub w_tilde: Matrix,
    pub m: Matrix,
    /// `D` from its spectral form.
    pub d: Matrix,
    pub big_set_size: usize,
    pub small_set_size: usize,
    /// Max-entry difference between `D` and `R − (AM − MA) − 1μᵀ`.
    pub identity_residual: f64,
}

impl CertificateBundle {
    pub fn n(&self) -> usize {
        self.r.rows()
    }

    /// `⟨μ, 1⟩`.
    pub fn mu_dot_one(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// `‖D‖_F² = #small + C²·#big`.
    pub fn d_frob_sq_spectral(&self) -> f64 {
        self.small_set_size as f64 + self.c * self.c * self.big_set_size as f64
    }
}

/// Outcome of one high-probability bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(value: f64, bound: f64) -> Self {
        BoundCheck {
            value,
            bound,
            pass: value <= bound,
        }
    }
}

/// Summary of a certificate built from one draw of `A`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub n: usize,
    pub epsilon: f64,
    pub d_frob: f64,
    /// `2n^{1/2−ε/32}`.
    pub d_frob_bound: f64,
    pub eigsep_sum: f64,
    /// `n^{3+3ε/2}`.
    pub eigsep_bound: f64,
    pub small_overlap_count: usize,
    /// `3n^{1−ε/16}`.
    pub small_overlap_bound: f64,
    pub c: f64,
    pub mu_dot_one: f64,
    pub identity_residual: f64,
    pub d_frob_pass: bool,
    pub eigsep_pass: bool,
    pub small_overlap_pass: bool,
    /// `−5n^{−ε/16} ≤ C ≤ 0`.
    pub c_in_range: bool,
}

impl CertificateReport {
    pub fn new(bundle: &CertificateBundle, eig: &EigenDecomposition) -> Self {
        let n = bundle.n();
        let nf = n as f64;
        let eps = bundle.epsilon;
        let d_frob = bundle.d.frob_norm();
        let d_frob_bound = 2.0 * nf.powf(0.5 - eps / 32.0);
        let claim7 = check_claim7(eig, eps);
        let claim8 = check_claim8(eig, eps);
        CertificateReport {
            n,
            epsilon: eps,
            d_frob,
            d_frob_bound,
            eigsep_sum: claim8.value,
            eigsep_bound: claim8.bound,
            small_overlap_count: claim7.value as usize,
            small_overlap_bound: claim7.bound,
            c: bundle.c,
            mu_dot_one: bundle.mu_dot_one(),
            identity_residual: bundle.identity_residual,
            d_frob_pass: d_frob <= d_frob_bound,
            eigsep_pass: claim8.pass,
            small_overlap_pass: claim7.pass,
            c_in_range: bundle.c <= 0.0 && bundle.c >= -5.0 * bundle.threshold,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )))
    }
}

fn overlap_threshold(n: usize, epsilon: f64) -> f64 {
    (n as f64).powf(-epsilon / 16.0)
}

/// Construct the certificate from the eigendecomposition of `A`.
pub fn build_certificate(eig: &EigenDecomposition, epsilon: f64) -> Result<CertificateBundle> {
    check_epsilon(epsilon)?;
    let n = eig.n();
    let nf = n as f64;
    let lambda = &eig.values;
    for k in 1..n {
        if lambda[k] == lambda[k - 1] {
            return Err(Error::numerical(format!(
                "repeated eigenvalue {} at positions {} and {k}",
                lambda[k],
                k - 1
            )));
        }
    }
    let ov = eig.ones_overlaps();
    let threshold = overlap_threshold(n, epsilon);
    let big: Vec<bool> = ov.iter().map(|a| a.abs() >= threshold).collect();
    let big_set_size = big.iter().filter(|&&b| b).count();
    let small_set_size = n - big_set_size;
    if big_set_size == 0 {
        return Err(Error::DegenerateCertificate(format!(
            "no eigenvector has |<u, 1>| >= {threshold}"
        )));
    }
    let c = 1.0 - nf / big_set_size as f64;
    let c_alt = 1.0 - nf / (nf - small_set_size as f64);
    if c != c_alt {
        return Err(Error::numerical(format!("C = {c} but C' = {c_alt}")));
    }

    let w = Matrix::from_fn(n, n, |i, j| ov[i] * ov[j] - if i == j { 1.0 } else { 0.0 });
    let w_i: Vec<f64> = (0..n)
        .map(|i| {
            if big[i] {
                ov[i] + (c - 1.0) / ov[i]
            } else {
                ov[i]
            }
        })
        .collect();
    let w_tilde = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            ov[i] * ov[j] - ov[i] * w_i[j]
        }
    });
    let m_hat = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            w_tilde[(i, j)] / (lambda[i] - lambda[j])
        }
    });
    let u = &eig.vectors;
    let m = u.matmul(&m_hat).matmul_t(u);
    let mu = u.matvec(&w_i);
    let d_diag: Vec<f64> = big.iter().map(|&b| if b { -c } else { -1.0 }).collect();
    let d = u.matmul(&Matrix::diag(&d_diag)).matmul_t(u);

    let r = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
    let a = eig.reconstruct();
    let mut lhs = r.sub(&a.matmul(&m).sub(&m.matmul(&a)));
    for i in 0..n {
        for (x, mj) in lhs.row_mut(i).iter_mut().zip(&mu) {
            *x -= mj;
        }
    }
    let identity_residual = lhs.sub(&d).max_abs();

    Ok(CertificateBundle {
        epsilon,
        threshold,
        r,
        w,
        mu,
        mu_tilde: vec![0.0; n],
        c,
        c_alt,
        w_i,
        w_tilde,
        m,
        d,
        big_set_size,
        small_set_size,
        identity_residual,
    })
}

/// `(1/n²)‖AJ − JB‖_F² ≤ 9n^ε`.
pub fn check_claim5(a: &SymMatrix, b: &SymMatrix, epsilon: f64) -> Result<BoundCheck> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::invalid("A and B differ in size"));
    }
    // (AJ − JB)_ij = rowsum_i(A) − colsum_j(B)
    let ra = a.as_matrix().row_sums();
    let cb = b.as_matrix().col_sums();
    let mut s = 0.0;
    for r in &ra {
        for c in &cb {
            s += (r - c) * (r - c);
        }
    }
    let nf = n as f64;
    Ok(BoundCheck::new(s / (nf * nf), 9.0 * nf.powf(epsilon)))
}

/// `max_{i≠j} |(AZ − ZA)_ij| ≤ 8n^{ε/2−1/2}`.
pub fn check_claim6(a: &SymMatrix, z: &SymMatrix, epsilon: f64) -> Result<BoundCheck> {
    let comm = commutator_residual(a, z.as_matrix(), a)?;
    let n = a.n();
    let mut max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max = max.max(comm[(i, j)].abs());
            }
        }
    }
    Ok(BoundCheck::new(
        max,
        8.0 * (n as f64).powf(epsilon / 2.0 - 0.5),
    ))
}

/// `#{i : |⟨u_i, 1⟩| < n^{−ε/16}} ≤ 3n^{1−ε/16}`. The count uses the strict
/// complement of the set that enters `C`.
pub fn check_claim7(eig: &EigenDecomposition, epsilon: f64) -> BoundCheck {
    let n = eig.n();
    let threshold = overlap_threshold(n, epsilon);
    let count = eig
        .ones_overlaps()
        .iter()
        .filter(|a| !(a.abs() >= threshold))
        .count();
    BoundCheck::new(count as f64, 3.0 * (n as f64).powf(1.0 - epsilon / 16.0))
}

/// `Σ_{i≠j} (|λ_i − λ_j| + n^{−1−ε})^{−2} ≤ n^{3+3ε/2}`.
pub fn check_claim8(eig: &EigenDecomposition, epsilon: f64) -> BoundCheck {
    let n = eig.n();
    let nf = n as f64;
    BoundCheck::new(
        eigsep_sum(&eig.values, nf.powf(-1.0 - epsilon)),
        nf.powf(3.0 + 1.5 * epsilon),
    )
}

/// Sum over unordered pairs, doubled.
fn eigsep_sum(values: &[f64], floor: f64) -> f64 {
    let mut s = 0.0;
    for (i, li) in values.iter().enumerate() {
        for lj in &values[i + 1..] {
            let g = (li - lj).abs() + floor;
            s += 1.0 / (g * g);
        }
    }
    2.0 * s
}

/// `Σ_{i≠j} X_ij ≤ 2n^{3/2+7ε/8}‖AX − XA‖_F + 4n^{1−ε/32}` for doubly
/// stochastic `X`.
pub fn lemma4_bound(x: &Matrix, a: &SymMatrix, epsilon: f64) -> Result<BoundCheck> {
    check_epsilon(epsilon)?;
    if x.rows() != a.n() {
        return Err(Error::invalid("X and A differ in size"));
    }
    let x = DoublyStochastic::new(x.clone())?;
    let x = x.as_matrix();
    let nf = a.n() as f64;
    let comm = commutator_residual(a, x, a)?.frob_norm();
    let rhs = 2.0 * nf.powf(1.5 + 7.0 * epsilon / 8.0) * comm + 4.0 * nf.powf(1.0 - epsilon / 32.0);
    Ok(BoundCheck::new(x.off_diagonal_sum(), rhs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma5Check {
    /// `‖AX − XA‖_F`.
    pub lhs: f64,
    /// `‖AX − XB‖_F`.
    pub residual: f64,
    /// `lhs / (σ√n)`, or `lhs / √n` when `σ = 0`.
    pub ratio: f64,
    pub sigma_zero: bool,
}

/// Ratio of `‖AX − XA‖_F` to the `σ√n` scale.
pub fn lemma5_bound(a: &SymMatrix, b: &SymMatrix, x: &Matrix, sigma: f64) -> Result<Lemma5Check> {
    if !(sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    let lhs = commutator_residual(a, x, a)?.frob_norm();
    let residual = commutator_residual(a, x, b)?.frob_norm();
    let sqrt_n = (a.n() as f64).sqrt();
    let sigma_zero = sigma == 0.0;
    let ratio = if sigma_zero {
        lhs / sqrt_n
    } else {
        lhs / (sigma * sqrt_n)
    };
    Ok(Lemma5Check {
        lhs,
        residual,
        ratio,
        sigma_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::sym_eigen;
    use crate::permutation::Permutation;
    use crate::random::{
        rng_from_seed, sample_goe, sample_permutation, sample_wigner_pair_with_noise, Plant,
    };
    use crate::relax::{solve_birkhoff, SolverOptions};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn goe_eig(n: usize, seed: u64) -> (SymMatrix, EigenDecomposition) {
        let a = sample_goe(n, &mut rng_from_seed(seed)).unwrap();
        let e = sym_eigen(&a).unwrap();
        (a, e)
    }

    fn random_doubly_stochastic(n: usize, seed: u64) -> Matrix {
        let mut rng = rng_from_seed(seed);
        let mut x = Matrix::zeros(n, n);
        let k = 7;
        let mut weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        for w in weights {
            let p = sample_permutation(n, &mut rng);
            for i in 0..n {
                x[(i, p.apply(i))] += w;
            }
        }
        x
    }

    #[test]
    fn identity_residual_and_mu_orthogonal_to_ones() {
        for (n, seed) in [(40, 1), (200, 2)] {
            let (_, e) = goe_eig(n, seed);
            let c = build_certificate(&e, 0.5).unwrap();
            let nf = n as f64;
            assert!(c.identity_residual <= 1e-7 * nf, "{}", c.identity_residual);
            assert!(c.mu_dot_one().abs() <= 1e-8 * nf);
            assert_eq!(c.c, c.c_alt);
            assert!(c.mu_tilde.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn r_is_j_minus_i_in_both_forms() {
        let (_, e) = goe_eig(25, 3);
        let c = build_certificate(&e, 0.5).unwrap();
        for i in 0..25 {
            for j in 0..25 {
                assert_eq!(c.r[(i, j)], if i == j { 0.0 } else { 1.0 });
            }
        }
        let rebuilt = e.vectors.matmul(&c.w).matmul_t(&e.vectors);
        assert!(rebuilt.sub(&c.r).max_abs() < 1e-10);
    }

    #[test]
    fn d_norm_agrees_with_spectral_count() {
        for seed in 0..5 {
            let (_, e) = goe_eig(60, 10 + seed);
            let c = build_certificate(&e, 0.5).unwrap();
            let direct = c.d.frob_norm_sq();
            let spectral = c.d_frob_sq_spectral();
            assert!((direct - spectral).abs() <= 1e-9 * spectral.max(1.0));
        }
    }

    #[test]
    fn d_spectrum_is_minus_one_and_minus_c() {
        let (_, e) = goe_eig(30, 4);
        // ε = 1 raises the threshold enough that both sets are non-empty
        let c = build_certificate(&e, 1.0).unwrap();
        assert!(c.small_set_size > 0 && c.big_set_size > 0);
        let mut d = c.d.clone();
        let dt = d.transpose();
        d.axpy(1.0, &dt);
        d.scale_in_place(0.5);
        let spec = sym_eigen(&SymMatrix::new(d).unwrap()).unwrap();
        let mut at_minus_one = 0;
        for v in &spec.values {
            let near_one = (v + 1.0).abs() < 1e-8;
            let near_c = (v + c.c).abs() < 1e-8;
            assert!(near_one || near_c, "eigenvalue {v}");
            if near_one {
                at_minus_one += 1;
            }
        }
        assert_eq!(at_minus_one, c.small_set_size);
    }

    #[test]
    fn off_diagonal_mass_identity() {
        let n = 50;
        let (a, e) = goe_eig(n, 5);
        let c = build_certificate(&e, 0.5).unwrap();
        for seed in 0..4 {
            let x = random_doubly_stochastic(n, 100 + seed);
            let lhs = x.off_diagonal_sum();
            let comm = commutator_residual(&a, &x, &a).unwrap();
            let rhs = c.m.dot(&comm) + x.dot(&c.d);
            assert!((lhs - rhs).abs() <= 1e-7 * n as f64, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn c_within_claimed_range() {
        for seed in 0..5 {
            let (_, e) = goe_eig(100, 20 + seed);
            let c = build_certificate(&e, 0.5).unwrap();
            let rep = CertificateReport::new(&c, &e);
            if rep.small_overlap_pass {
                assert!(rep.c_in_range, "C = {}", c.c);
            }
            assert!(rep.d_frob_bound > 0.0 && rep.eigsep_bound > 0.0);
            assert!(rep.identity_residual >= 0.0);
        }
    }

    #[test]
    fn repeated_eigenvalue_is_numerical_failure() {
        let e = sym_eigen(&SymMatrix::identity(4)).unwrap();
        assert!(matches!(
            build_certificate(&e, 0.5),
            Err(Error::NumericalFailure(_))
        ));
    }

    #[test]
    fn empty_big_set_is_degenerate() {
        // Not reachable with an orthonormal basis (Σ a_i² = n), so hand-build one.
        let e = EigenDecomposition {
            values: vec![-1.0, 0.0, 1.0],
            vectors: Matrix::filled(3, 3, 1e-3),
        };
        assert!(matches!(
            build_certificate(&e, 0.5),
            Err(Error::DegenerateCertificate(_))
        ));
    }

    #[test]
    fn rejects_bad_epsilon() {
        let (_, e) = goe_eig(5, 6);
        for eps in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                build_certificate(&e, eps),
                Err(Error::InvalidInput(_))
            ));
        }
    }

    #[test]
    fn claim5_values() {
        let z = SymMatrix::zeros(6);
        assert_eq!(check_claim5(&z, &z, 0.5).unwrap().value, 0.0);

        let (a, _) = goe_eig(30, 7);
        let j = Matrix::ones(30);
        let dense = a
            .as_matrix()
            .matmul(&j)
            .sub(&j.matmul(a.as_matrix()))
            .frob_norm_sq()
            / 900.0;
        let chk = check_claim5(&a, &a, 0.5).unwrap();
        assert!((chk.value - dense).abs() <= 1e-12 * dense);

        // (1/n²)‖AJ − JA‖² = 2(‖A1‖²/n − (1ᵀA1)²/n²) is O(1) for GOE
        let (a, _) = goe_eig(300, 8);
        let chk = check_claim5(&a, &a, 0.5).unwrap();
        assert!(chk.value < 10.0 && chk.pass);
        assert!(chk.bound > 150.0);
    }

    #[test]
    fn claim6_commuting_inputs() {
        let (a, _) = goe_eig(20, 9);
        assert_eq!(check_claim6(&a, &a, 0.5).unwrap().value, 0.0);
        let two = SymMatrix::diag(&[2.0; 20]).unwrap();
        assert_eq!(check_claim6(&a, &two, 0.5).unwrap().value, 0.0);
        let (z, _) = goe_eig(20, 10);
        let chk = check_claim6(&a, &z, 0.5).unwrap();
        assert!(chk.value > 0.0);
        assert!((chk.bound - 8.0 * 20f64.powf(-0.25)).abs() < 1e-12);
    }

    #[test]
    fn claim7_tiny_epsilon_still_passes() {
        let (_, e) = goe_eig(100, 11);
        let chk = check_claim7(&e, 1e-6);
        assert!(chk.bound > 2.99 * 100.0);
        assert!(chk.pass);
    }

    #[test]
    fn claim7_matches_gaussian_surrogate() {
        // Eigenvectors of a GOE matrix are Haar distributed, so each ⟨u_i, 1⟩
        // is distributed as √n·z₁/‖z‖ for a standard Gaussian vector z.
        let n = 100;
        let eps = 0.5;
        let thr = overlap_threshold(n, eps);
        let seeds = 20;
        let mut empirical = 0.0;
        for seed in 0..seeds {
            let (_, e) = goe_eig(n, 200 + seed);
            empirical += check_claim7(&e, eps).value;
        }
        empirical /= seeds as f64;

        let mut rng = rng_from_seed(99);
        let trials = 4000;
        let mut hits = 0usize;
        for _ in 0..trials {
            let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if ((n as f64).sqrt() * z[0] / norm).abs() < thr {
                hits += 1;
            }
        }
        let surrogate = n as f64 * hits as f64 / trials as f64;
        assert!(
            (empirical - surrogate).abs() <= 0.08 * surrogate,
            "{empirical} vs {surrogate}"
        );
    }

    #[test]
    fn claim8_floor_and_naive_loop() {
        let n = 50;
        let eps = 0.5;
        let (_, e) = goe_eig(n, 12);
        let floor = (n as f64).powf(-1.0 - eps);
        let mut naive = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    naive += 1.0 / ((e.values[i] - e.values[j]).abs() + floor).powi(2);
                }
            }
        }
        let chk = check_claim8(&e, eps);
        assert!((chk.value - naive).abs() <= 1e-10 * naive);

        let tied = eigsep_sum(&[0.3, 0.3], floor);
        let per_term = (n as f64).powf(2.0 + 2.0 * eps);
        assert!((tied - 2.0 * per_term).abs() <= 1e-9 * per_term);
    }

    #[test]
    fn lemma4_cases() {
        let (a, _) = goe_eig(40, 13);
        let chk = lemma4_bound(&Matrix::identity(40), &a, 0.5).unwrap();
        assert_eq!(chk.value, 0.0);
        assert!(chk.pass);

        let bary = lemma4_bound(&Matrix::filled(40, 40, 1.0 / 40.0), &a, 0.5).unwrap();
        assert!((bary.value - 39.0).abs() < 1e-9);
        assert!(bary.bound.is_finite() && bary.bound > 0.0);

        let p = Permutation::cyclic_shift(40, 1).to_matrix();
        assert!(lemma4_bound(&p, &a, 0.5).unwrap().value == 40.0);

        assert!(matches!(
            lemma4_bound(&Matrix::ones(40), &a, 0.5),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn lemma5_noiseless_and_feasibility_of_identity() {
        let n = 30;
        let (p, _) = sample_wigner_pair_with_noise(n, 0.0, Plant::Identity, 14).unwrap();
        let opts = SolverOptions {
            tol_gap: 1e-10,
            max_iters: Some(20_000),
            ..Default::default()
        };
        let rep = solve_birkhoff(&p.a, &p.b, &opts).unwrap();
        let chk = lemma5_bound(&p.a, &p.b, &rep.x, 0.0).unwrap();
        assert!(chk.sigma_zero);
        assert!(chk.lhs <= 1e-4, "{}", chk.lhs);

        let sigma = 0.1;
        let (p, z) = sample_wigner_pair_with_noise(n, sigma, Plant::Identity, 15).unwrap();
        let rep = solve_birkhoff(&p.a, &p.b, &opts).unwrap();
        let chk = lemma5_bound(&p.a, &p.b, &rep.x, sigma).unwrap();
        assert!(!chk.sigma_zero);
        assert!(chk.residual <= sigma * z.as_matrix().frob_norm() + 1e-9);
        assert!(chk.ratio <= 4.0);
    }
}
