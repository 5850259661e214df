use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fraccap(mode: &str, config: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fraccap"));
    cmd.arg(mode);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn summary(dir: &Path) -> Vec<(String, String)> {
    fs::read_to_string(dir.join("summary.txt"))
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn field(summary: &[(String, String)], key: &str) -> String {
    summary
        .iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("missing `{key}`"))
        .1
        .clone()
}

fn floats(s: &str) -> Vec<f64> {
    s.split(',').map(|x| x.trim().parse().unwrap()).collect()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const RANDOM_PIPELINE: &str = "\
# random singularities, short capture window then a long run
orders = 0.5
exponents = 0.0172230402514543, 0.219372179828199, 0.190779228546504
capture_dt = 0.3333333333333333
capture_steps = 3
tol_gradient = 1e-13
dt = 0.1
final_time = 10
baseline_sigma = 0.1, 0.2, 0.3, 0.4
";

#[test]
fn pipeline_captures_two_terms_and_beats_baseline() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.cfg", RANDOM_PIPELINE);
    let out_dir = dir.path().join("out");
    let out = fraccap("pipeline", Some(&cfg), &["--out", out_dir.to_str().unwrap()]);
    assert_success(&out);
    let s = summary(&out_dir);
    assert_eq!(field(&s, "M"), "2");
    assert!(field(&s, "E").parse::<f64>().unwrap() < 1e-12);
    assert_eq!(field(&s, "beats_baseline_every_node"), "true");
    assert!(field(&s, "wall_time_s").parse::<f64>().unwrap() >= 0.0);
    for name in [
        "trace_m1.csv",
        "trace_m2.csv",
        "solution.csv",
        "solution_baseline.csv",
        "observed.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let solution = fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    assert_eq!(solution.lines().next().unwrap(), "n,t,u_numeric,u_exact,abs_error");
    assert_eq!(solution.lines().count(), 102);
}

#[test]
fn capture_round_trips_data_written_by_solve() {
    let dir = TempDir::new().unwrap();
    let solve_dir = dir.path().join("solve");
    let out = fraccap(
        "solve",
        None,
        &[
            "--orders",
            "0.6",
            "--u0",
            "1.5",
            "--exponents",
            "0.2, 0.45",
            "--sigma",
            "0.2, 0.45",
            "--dt",
            "0.05",
            "--steps",
            "40",
            "--out",
            solve_dir.to_str().unwrap(),
        ],
    );
    assert_success(&out);

    let data = solve_dir.join("observed.csv");
    let capture_dir = dir.path().join("capture");
    let out = fraccap(
        "capture",
        None,
        &[
            "--orders",
            "0.6",
            "--data-file",
            data.to_str().unwrap(),
            "--capture-steps",
            "10",
            "--sigma",
            "0.3, 0.6",
            "--tol-error",
            "1e-20",
            "--out",
            capture_dir.to_str().unwrap(),
        ],
    );
    assert_success(&out);
    let s = summary(&capture_dir);
    let mut sigma = floats(&field(&s, "sigma"));
    sigma.sort_by(f64::total_cmp);
    assert!(
        (sigma[0] - 0.2).abs() < 1e-6 && (sigma[1] - 0.45).abs() < 1e-6,
        "{sigma:?}"
    );
    assert_eq!(field(&s, "capture_steps"), "10");
}

#[test]
fn convergence_mode_reports_order_three_minus_alpha() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "osc.cfg",
        "\
orders = 0.5
solution = oscillatory
exponents = 0.2426481954401539
frequency = 31.41592653589793
capture_dt = 0.0033333333333333335
capture_steps = 3
tol_error = 1e-11
max_terms = 2
second_guess = 1.0
dt = 0.015625
final_time = 1
convergence_steps = 64, 128, 256, 512, 1024, 2048
baseline_sigma = 0.1, 0.2, 0.3, 0.4
",
    );
    let out_dir = dir.path().join("out");
    assert_success(&fraccap(
        "convergence",
        Some(&cfg),
        &["--out", out_dir.to_str().unwrap()],
    ));
    let fit = fs::read_to_string(out_dir.join("convergence_fit.csv")).unwrap();
    let slope: f64 = fit.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((slope - 2.5).abs() <= 0.15, "slope {slope}");
    let table = fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    assert_eq!(
        table.lines().next().unwrap(),
        "steps,dt,l2_error_captured,l2_error_baseline"
    );
    for line in table.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[3] >= 10.0 * v[2], "{line}");
    }
}

#[test]
fn identical_seed_gives_identical_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "rand.cfg",
        "random_terms = 2\nrandom_upper = 0.5\ncapture_dt = 0.25\ncapture_steps = 4\ndt = 0.25\nsteps = 12\n",
    );
    let run = |name: &str, seed: &str| {
        let d = dir.path().join(name);
        assert_success(&fraccap(
            "pipeline",
            Some(&cfg),
            &["--out", d.to_str().unwrap(), "--seed", seed],
        ));
        d
    };
    let (a, b, c) = (run("a", "7"), run("b", "7"), run("c", "8"));
    let mut csvs: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    csvs.sort();
    assert!(csvs.len() >= 3);
    for name in &csvs {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name:?}"
        );
    }
    assert_ne!(
        fs::read(a.join("observed.csv")).unwrap(),
        fs::read(c.join("observed.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let out_arg = out_dir.to_str().unwrap();
    let bad = write_config(&dir, "bad.cfg", "dt = 0.1\nnot_a_key = 3\n");
    let missing = dir.path().join("missing.cfg");
    let both = write_config(&dir, "both.cfg", "exponents = 0.1\ndata_file = x.csv\n");
    for (mode, cfg, extra) in [
        ("solve", Some(bad.as_path()), vec![]),
        ("solve", Some(missing.as_path()), vec![]),
        ("capture", Some(both.as_path()), vec![]),
        ("solve", None, vec!["--dt=-1"]),
        ("solve", None, vec![]),
        ("repro", None, vec![]),
        ("repro", None, vec!["--study", "f99"]),
    ] {
        let mut args = vec!["--out", out_arg];
        args.extend(extra);
        let out = fraccap(mode, cfg, &args);
        assert_eq!(out.status.code(), Some(2), "{mode} {cfg:?} {args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));
    }
    let unknown_flag = fraccap("solve", None, &["--bogus", "1"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let out = fraccap(
        "solve",
        None,
        &[
            "--exponents",
            "0.5",
            "--sigma",
            "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0,1.1,1.2",
            "--dt",
            "0.1",
            "--steps",
            "20",
            "--out",
            dir.path().to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[numerical]"));
}

#[test]
fn repro_study_writes_csv_and_passes() {
    let dir = TempDir::new().unwrap();
    let out = fraccap(
        "repro",
        None,
        &["--study", "f1, cond", "--out", dir.path().to_str().unwrap()],
    );
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("f1 PASS") && stdout.contains("cond PASS"), "{stdout}");
    let index = fs::read_to_string(dir.path().join("repro.csv")).unwrap();
    assert_eq!(index.lines().next().unwrap(), "study,result,detail");
    let newton = fs::read_to_string(dir.path().join("f1_newton.csv")).unwrap();
    assert_eq!(newton.lines().next().unwrap(), "guess,k,sigma,E");
    let cond = fs::read_to_string(dir.path().join("cond_condition.csv")).unwrap();
    assert_eq!(cond.lines().count(), 19);
}

#[test]
fn weights_mode_writes_weights_and_condition_tables() {
    let dir = TempDir::new().unwrap();
    let out = fraccap(
        "weights",
        None,
        &[
            "--orders",
            "0.5",
            "--sigma",
            "0.9",
            "--dt",
            "0.01",
            "--steps",
            "10",
            "--max-m",
            "5",
            "--out",
            dir.path().to_str().unwrap(),
        ],
    );
    assert_success(&out);
    let w = fs::read_to_string(dir.path().join("weights.csv")).unwrap();
    let rows: Vec<Vec<f64>> = w
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(w.lines().next().unwrap(), "n,t,W_1");
    assert_eq!(rows.len(), 10);
    assert!(rows[0][2].abs() >= rows[9][2].abs());
    let c = fs::read_to_string(dir.path().join("condition.csv")).unwrap();
    assert_eq!(c.lines().count(), 11);
}
