use serde::{Deserialize, Serialize};

use crate::certificate::{
    build_certificate, check_claim5, check_claim6, lemma4_bound, lemma5_bound, CertificateReport,
};
use crate::eigen::sym_eigen;
use crate::error::{Error, Result};
use crate::random::{derive_seed, sample_wigner_pair, sample_wigner_pair_with_noise, Plant};
use crate::relax::{solve_birkhoff, SolverOptions};

#[derive(Clone, Debug)]
pub struct CertificateSuiteConfig {
    pub n: usize,
    pub epsilon: f64,
    pub seeds: usize,
    pub base_seed: u64,
    /// Noise level for the commutator-ratio check.
    pub lemma5_sigma: f64,
    /// Solve the Birkhoff relaxation for the two solution-based checks.
    pub solve: bool,
    pub tol_gap: f64,
}

impl Default for CertificateSuiteConfig {
    fn default() -> Self {
        CertificateSuiteConfig {
            n: 300,
            epsilon: 0.5,
            seeds: 10,
            base_seed: 0,
            lemma5_sigma: 0.1,
            solve: true,
            tol_gap: 1e-6,
        }
    }
}

/// Certificate columns first, then the per-claim checks. Solution-based
/// columns are empty when solving is switched off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub d_frob: f64,
    pub d_frob_bound: f64,
    pub eigsep_sum: f64,
    pub eigsep_bound: f64,
    pub small_count: usize,
    pub small_bound: f64,
    pub identity_residual: f64,
    pub d_frob_pass: bool,
    pub eigsep_pass: bool,
    pub small_overlap_pass: bool,
    pub c_in_range: bool,
    pub c: f64,
    pub mu_dot_one: f64,
    /// Row/column-sum mismatch at `σ = n^{−1/2+ε}`.
    pub claim5_value: f64,
    pub claim5_bound: f64,
    pub claim5_pass: bool,
    pub claim6_value: f64,
    pub claim6_bound: f64,
    pub claim6_pass: bool,
    /// Off-diagonal mass of the Birkhoff solution at `σ = n^{−1−ε}`.
    pub lemma4_lhs: Option<f64>,
    pub lemma4_rhs: Option<f64>,
    pub lemma4_pass: Option<bool>,
    pub lemma5_sigma: f64,
    pub lemma5_ratio: Option<f64>,
    pub lemma5_residual: Option<f64>,
}

/// One row per seed. Each seed fixes `A` and `Z`; the noisy partners at the
/// various `σ` share them because `A` and `Z` are drawn before the plant.
pub fn run_certificate_suite(cfg: &CertificateSuiteConfig) -> Result<Vec<CertificateRow>> {
    if cfg.n < 2 || cfg.seeds == 0 {
        return Err(Error::invalid(
            "certificate suite needs n >= 2 and at least one seed",
        ));
    }
    let nf = cfg.n as f64;
    let eps = cfg.epsilon;
    let opts = SolverOptions {
        tol_gap: cfg.tol_gap,
        ..Default::default()
    };
    (0..cfg.seeds)
        .map(|k| {
            let seed = derive_seed(cfg.base_seed, cfg.n, 0, k);
            let ctx = |e: Error| e.context(format_args!("n={} seed={seed}", cfg.n));
            let claim5_sigma = nf.powf(-0.5 + eps);
            let (pair, z) =
                sample_wigner_pair_with_noise(cfg.n, claim5_sigma, Plant::Identity, seed)
                    .map_err(ctx)?;
            let eig = sym_eigen(&pair.a).map_err(ctx)?;
            let bundle = build_certificate(&eig, eps).map_err(ctx)?;
            let report = CertificateReport::new(&bundle, &eig);
            let claim5 = check_claim5(&pair.a, &pair.b, eps)?;
            let claim6 = check_claim6(&pair.a, &z, eps)?;

            let (mut lemma4, mut lemma5) = (None, None);
            if cfg.solve {
                let near = sample_wigner_pair(cfg.n, nf.powf(-1.0 - eps), Plant::Identity, seed)?;
                let sol = solve_birkhoff(&near.a, &near.b, &opts).map_err(ctx)?;
                lemma4 = Some(lemma4_bound(&sol.x, &near.a, eps)?);
                let noisy = sample_wigner_pair(cfg.n, cfg.lemma5_sigma, Plant::Identity, seed)?;
                let sol = solve_birkhoff(&noisy.a, &noisy.b, &opts).map_err(ctx)?;
                lemma5 = Some(lemma5_bound(&noisy.a, &noisy.b, &sol.x, cfg.lemma5_sigma)?);
            }
            Ok(CertificateRow {
                n: cfg.n,
                epsilon: eps,
                seed,
                d_frob: report.d_frob,
                d_frob_bound: report.d_frob_bound,
                eigsep_sum: report.eigsep_sum,
                eigsep_bound: report.eigsep_bound,
                small_count: report.small_overlap_count,
                small_bound: report.small_overlap_bound,
                identity_residual: report.identity_residual,
                d_frob_pass: report.d_frob_pass,
                eigsep_pass: report.eigsep_pass,
                small_overlap_pass: report.small_overlap_pass,
                c_in_range: report.c_in_range,
                c: report.c,
                mu_dot_one: report.mu_dot_one,
                claim5_value: claim5.value,
                claim5_bound: claim5.bound,
                claim5_pass: claim5.pass,
                claim6_value: claim6.value,
                claim6_bound: claim6.bound,
                claim6_pass: claim6.pass,
                lemma4_lhs: lemma4.map(|c| c.value),
                lemma4_rhs: lemma4.map(|c| c.bound),
                lemma4_pass: lemma4.map(|c| c.pass),
                lemma5_sigma: cfg.lemma5_sigma,
                lemma5_ratio: lemma5.map(|c| c.ratio),
                lemma5_residual: lemma5.map(|c| c.residual),
            })
        })
        .collect()
}
