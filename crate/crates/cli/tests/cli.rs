use std::path::Path;
use std::process::{Command, Output};

fn birkhoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_birkhoff"))
        .args(args)
        .output()
        .expect("run birkhoff")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

const HEADER: &str = "n,sigma,rep,seed,solver,objective,fw_gap,iterations,frac_matched_greedy,\
frac_matched_hungarian,frob_dist_scaled,commutator_ratio,wall_time_seconds";

#[test]
fn trial_prints_one_row() {
    let o = birkhoff(&["trial", "--n", "20", "--sigma", "0", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert_eq!(lines[1], HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("20,0.0,0,3,birkhoff,"));
    // Noiseless: both rounding columns report full recovery.
    assert!(lines[2].contains(",1.0,1.0,"));
}

#[test]
fn invalid_values_exit_2() {
    for args in [
        &["trial", "--n", "10", "--solver", "sdp"][..],
        &["trial", "--n", "10", "--sigma", "-0.5"],
        &["trial", "--n", "10", "--eta", "0"],
        &["sweep", "--n", "10", "--sigma", "0:1", "--out", "x.csv"],
        &[
            "sweep", "--n", "10", "--sigma", "0.1", "--reps", "0", "--out", "x.csv",
        ],
        &["trial"],
    ] {
        let o = birkhoff(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn missing_input_exits_4() {
    let o = birkhoff(&["threshold", "--input", "/nonexistent/sweep.csv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.conf");
    let out = dir.path().join("runs").join("s.csv");
    std::fs::write(
        &cfg,
        format!(
            "# small sweep\nn = 10,12\nsigma = 0:0.2:0.1\nreps = 3\nseed = 5\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = birkhoff(&["sweep", "--config", path_str(&cfg), "--reps", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    // 2 sizes × 3 noise levels × 2 reps, plus schema and header lines.
    assert_eq!(text.lines().count(), 2 + 12);
    let summary = std::fs::read_to_string(dir.path().join("runs").join("s.summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2 + 6);

    std::fs::write(&cfg, "reps = 2\ncolour = blue\n").unwrap();
    let o = birkhoff(&[
        "sweep",
        "--config",
        path_str(&cfg),
        "--n",
        "5",
        "--sigma",
        "0",
        "--out",
        "y.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_reruns_and_worker_counts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = birkhoff(&[
            "sweep",
            "--n",
            "10",
            "--n",
            "14",
            "--sigma",
            "0,0.3",
            "--reps",
            "2",
            "--seed",
            "9",
            "--workers",
            workers,
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let first = run("a.csv", "1");
    assert_eq!(first, run("b.csv", "1"));
    assert_eq!(first, run("c.csv", "3"));
}

#[test]
fn time_budget_then_resume() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let args = [
        "sweep",
        "--n",
        "10",
        "--sigma",
        "0,0.5",
        "--reps",
        "2",
        "--out",
        path_str(&out),
    ];
    let o = birkhoff(&[&args[..], &["--time-budget", "0"]].concat());
    assert!(o.status.success());
    let partial = std::fs::read_to_string(&out).unwrap();
    assert!(partial
        .lines()
        .last()
        .unwrap()
        .starts_with("# partial completed=0 total=4"));
    let o = birkhoff(&[&args[..], &["--resume"]].concat());
    assert!(o.status.success());
    let done = std::fs::read_to_string(&out).unwrap();
    assert_eq!(done.lines().count(), 2 + 4);
    assert!(!done.contains("# partial"));
}

fn synthetic_sweep(path: &Path, ns: &[usize], threshold: impl Fn(usize) -> f64) {
    let mut text = format!("# schema=1\n{HEADER}\n");
    for &n in ns {
        for k in 0..=20 {
            let s = k as f64 * 0.05;
            let d = (0.5 * s / threshold(n)).min(1.0);
            text.push_str(&format!("{n},{s},0,0,birkhoff,0,0,0,,,{d},0,\n"));
        }
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn threshold_fits_planted_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sweep.csv");
    synthetic_sweep(&input, &[16, 64, 256], |n| 2.0 / (n as f64).sqrt());
    let out = dir.path().join("thr.csv");
    let o = birkhoff(&[
        "threshold",
        "--input",
        path_str(&input),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "n,sigma_threshold,log_n,log_sigma_threshold,slope,intercept"
    );
    assert_eq!(text.lines().count(), 2 + 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("slope -0.5000"));
}

#[test]
fn threshold_without_crossing_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sweep.csv");
    synthetic_sweep(&input, &[16, 64], |n| if n == 64 { 5.0 } else { 0.3 });
    let o = birkhoff(&["threshold", "--input", path_str(&input)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[64]"));
}

#[test]
fn unversioned_csv_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("old.csv");
    std::fs::write(&input, format!("{HEADER}\n")).unwrap();
    let o = birkhoff(&["threshold", "--input", path_str(&input)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plotdata_merges_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, solver) in [(&a, "birkhoff"), (&b, "grampa")] {
        let o = birkhoff(&[
            "sweep",
            "--n",
            "8",
            "--sigma",
            "0,0.2",
            "--reps",
            "2",
            "--solver",
            solver,
            "--out",
            path_str(out),
        ]);
        assert!(o.status.success());
    }
    let out = dir.path().join("plot.csv");
    let o = birkhoff(&[
        "plotdata",
        "--input",
        path_str(&a),
        "--input",
        path_str(&b),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2 + 4);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("solver,n,sigma,count,mean_objective"));
}

#[test]
fn certificate_rows_lead_with_fixed_columns() {
    let o = birkhoff(&["certificate", "--n", "30", "--seeds", "2", "--no-solve"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let header = text.lines().nth(1).unwrap();
    assert!(header.starts_with(
        "n,epsilon,seed,d_frob,d_frob_bound,eigsep_sum,eigsep_bound,small_count,small_bound,identity_residual,"
    ));
    assert_eq!(text.lines().count(), 2 + 2);
}
