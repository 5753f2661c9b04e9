mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use birkhoff_core::experiments::{
    plot_data, read_csv, run_certificate_suite, run_sweep, run_trial, summary_path,
    threshold_regression, write_csv, write_csv_to, write_threshold_csv, CertificateSuiteConfig,
    Rounding, Solver, SweepConfig, TrialConfig, TrialRecord,
};
use birkhoff_core::relax::DEFAULT_ETA;
use birkhoff_core::{Error, Plant, SolverMethod};
use clap::{Args, Parser, Subcommand};

use config::{parse_sigmas, parse_usizes, ConfigFile};

/// Run graph-alignment relaxation experiments and write CSV results.
#[derive(Parser)]
#[command(name = "birkhoff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one seeded instance and print its CSV row.
    Trial(TrialArgs),
    /// Run every (n, sigma, rep) cell and write rows plus a summary.
    Sweep(SweepArgs),
    /// Build dual certificates and check the high-probability bounds.
    Certificate(CertificateArgs),
    /// Fit the recovery threshold against n from sweep CSVs.
    Threshold(ThresholdArgs),
    /// Merge sweep CSVs into one per-cell table for plotting.
    Plotdata(PlotdataArgs),
}

/// Options shared by `trial` and `sweep`.
#[derive(Args)]
struct SolveArgs {
    /// birkhoff, simplex or grampa.
    #[arg(long)]
    solver: Option<Solver>,
    /// Birkhoff algorithm: admm or frank-wolfe.
    #[arg(long)]
    method: Option<SolverMethod>,
    /// GRAMPA regulariser.
    #[arg(long)]
    eta: Option<f64>,
    /// greedy, hungarian or both.
    #[arg(long)]
    rounding: Option<Rounding>,
    /// identity or uniform-random.
    #[arg(long)]
    plant: Option<Plant>,
    /// Relative Frank-Wolfe gap at which a solve stops.
    #[arg(long)]
    tol_gap: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Fill the wall_time_seconds column (output is then not reproducible).
    #[arg(long)]
    timing: bool,
    /// key = value file with defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

const SOLVE_KEYS: &[&str] = &[
    "solver",
    "method",
    "eta",
    "rounding",
    "plant",
    "tol-gap",
    "max-iters",
    "timing",
];

impl SolveArgs {
    fn trial_config(&self, file: &ConfigFile) -> Result<TrialConfig, Error> {
        let d = TrialConfig::default();
        let cfg = TrialConfig {
            solver: file.pick_or("solver", self.solver, d.solver)?,
            method: file.pick_or("method", self.method, d.method)?,
            eta: file.pick_or("eta", self.eta, DEFAULT_ETA)?,
            rounding: file.pick_or("rounding", self.rounding, d.rounding)?,
            tol_gap: file.pick_or("tol-gap", self.tol_gap, d.tol_gap)?,
            max_iters: file.pick("max-iters", self.max_iters)?,
            plant: file.pick_or("plant", self.plant, d.plant)?,
            record_timing: file.switch("timing", self.timing)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Instance seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Repetition index recorded in the row.
    #[arg(long)]
    rep: Option<usize>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Dimensions; repeat the flag or separate with commas.
    #[arg(long, value_delimiter = ',')]
    n: Vec<String>,
    /// Noise levels; each item is a value or an inclusive lo:hi:step range.
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<String>,
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed from which every trial seed is derived.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Seconds after which no new trials start; the CSV is then marked partial.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Keep rows already in --out and run only the missing cells.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct CertificateArgs {
    /// Dimensions; repeat the flag or separate with commas.
    #[arg(long, value_delimiter = ',')]
    n: Vec<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of seeds per n.
    #[arg(long)]
    seeds: Option<usize>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Noise level for the commutator ratio check.
    #[arg(long)]
    lemma5_sigma: Option<f64>,
    /// Skip the two checks that need a Birkhoff solve.
    #[arg(long)]
    no_solve: bool,
    #[arg(long)]
    tol_gap: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Sweep CSVs; repeat for several files.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Level of frob_dist_scaled that defines the threshold.
    #[arg(long, default_value_t = 0.5)]
    level: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Sweep CSVs; repeat for several files.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Trial(a) => trial(a),
        Command::Sweep(a) => sweep(a),
        Command::Certificate(a) => certificate(a),
        Command::Threshold(a) => threshold(a),
        Command::Plotdata(a) => plotdata(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) => 2,
        Error::NumericalFailure(_)
        | Error::DegenerateCertificate(_)
        | Error::MissingCrossing(_) => 3,
        Error::Io(_) | Error::Csv(_) => 4,
    }
}

fn emit<T: serde::Serialize>(rows: &[T], out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => write_csv(p, rows, None),
        None => write_csv_to(std::io::stdout().lock(), rows, None),
    }
}

fn trial(a: TrialArgs) -> Result<(), Error> {
    let file = ConfigFile::load(a.solve.config.as_deref())?;
    file.check_keys(&[SOLVE_KEYS, &["n", "sigma", "seed", "rep", "out"]].concat())?;
    let cfg = a.solve.trial_config(&file)?;
    let n = file
        .pick("n", a.n)?
        .ok_or_else(|| Error::InvalidInput("trial needs --n".into()))?;
    let sigma = file.pick_or("sigma", a.sigma, 0.0)?;
    let seed = file.pick_or("seed", a.seed, 0)?;
    let rep = file.pick_or("rep", a.rep, 0)?;
    let out: Option<PathBuf> = file.pick("out", a.out)?;
    let rec = run_trial(n, sigma, rep, seed, &cfg)?;
    emit(&[rec], out.as_deref())
}

fn sweep(a: SweepArgs) -> Result<(), Error> {
    let file = ConfigFile::load(a.solve.config.as_deref())?;
    file.check_keys(
        &[
            SOLVE_KEYS,
            &[
                "n",
                "sigma",
                "reps",
                "seed",
                "workers",
                "time-budget",
                "resume",
                "out",
            ],
        ]
        .concat(),
    )?;
    let d = SweepConfig::default();
    let budget: Option<f64> = file.pick("time-budget", a.time_budget)?;
    let budget = budget
        .map(|s| {
            Duration::try_from_secs_f64(s)
                .map_err(|_| Error::InvalidInput(format!("bad time budget {s}")))
        })
        .transpose()?;
    let cfg = SweepConfig {
        n_list: parse_usizes("n", &file.list("n", &a.n))?,
        sigma_list: parse_sigmas(&file.list("sigma", &a.sigma))?,
        reps: file.pick_or("reps", a.reps, d.reps)?,
        base_seed: file.pick_or("seed", a.seed, d.base_seed)?,
        trial: a.solve.trial_config(&file)?,
        workers: file.pick_or("workers", a.workers, d.workers)?,
        time_budget: budget,
        resume: file.switch("resume", a.resume)?,
    };
    let out: PathBuf = file
        .pick("out", a.out)?
        .ok_or_else(|| Error::InvalidInput("sweep needs --out".into()))?;
    let res = run_sweep(&cfg, &out)?;
    eprintln!(
        "wrote {} of {} rows to {} (summary {})",
        res.records.len(),
        res.total,
        out.display(),
        summary_path(&out).display()
    );
    if res.partial {
        eprintln!("time budget reached; rerun with --resume to finish");
    }
    Ok(())
}

fn certificate(a: CertificateArgs) -> Result<(), Error> {
    let file = ConfigFile::load(a.config.as_deref())?;
    file.check_keys(&[
        "n",
        "epsilon",
        "seeds",
        "seed",
        "lemma5-sigma",
        "no-solve",
        "tol-gap",
        "out",
    ])?;
    let d = CertificateSuiteConfig::default();
    let mut ns = parse_usizes("n", &file.list("n", &a.n))?;
    if ns.is_empty() {
        ns.push(d.n);
    }
    let mut rows = Vec::new();
    for n in ns {
        let cfg = CertificateSuiteConfig {
            n,
            epsilon: file.pick_or("epsilon", a.epsilon, d.epsilon)?,
            seeds: file.pick_or("seeds", a.seeds, d.seeds)?,
            base_seed: file.pick_or("seed", a.seed, d.base_seed)?,
            lemma5_sigma: file.pick_or("lemma5-sigma", a.lemma5_sigma, d.lemma5_sigma)?,
            solve: !file.switch("no-solve", a.no_solve)?,
            tol_gap: file.pick_or("tol-gap", a.tol_gap, d.tol_gap)?,
        };
        rows.extend(run_certificate_suite(&cfg)?);
    }
    let out: Option<PathBuf> = file.pick("out", a.out)?;
    emit(&rows, out.as_deref())
}

fn threshold(a: ThresholdArgs) -> Result<(), Error> {
    let mut records: Vec<TrialRecord> = Vec::new();
    for p in &a.input {
        records.extend(read_csv::<TrialRecord>(p)?);
    }
    let fit = threshold_regression(&records, a.level)?;
    match &a.out {
        Some(p) => write_threshold_csv(p, &fit)?,
        None => write_csv_to(std::io::stdout().lock(), &fit.rows, None)?,
    }
    let mut err = std::io::stderr().lock();
    writeln!(err, "slope {:.6} intercept {:.6}", fit.slope, fit.intercept)?;
    Ok(())
}

fn plotdata(a: PlotdataArgs) -> Result<(), Error> {
    let inputs: Vec<&Path> = a.input.iter().map(PathBuf::as_path).collect();
    let cells = plot_data(&inputs, &a.out)?;
    eprintln!("wrote {} cells to {}", cells.len(), a.out.display());
    Ok(())
}
