use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrupt-recover"))
        .args(args)
        .current_dir(dir)
        .env_remove("CORRUPT_RECOVER_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

#[test]
fn gen_reports_rounded_sizes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen",
        "--n",
        "251",
        "--theta-m",
        "0.9",
        "--theta-f",
        "0.05",
        "--seed",
        "1",
        "--out",
        "a.txt",
    ];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    // m = round(225.9) = 226; |s_x| = round(50.2 / ln 50.2) = round(12.84) = 13
    assert!(stdout(&o).contains("m=226 sx=13 sf=11"), "{}", stdout(&o));
    assert!(header(&dir.path().join("a.txt")).contains("n=251 m=226"));
    let first = fs::read(dir.path().join("a.txt")).unwrap();
    let mut again = args;
    again[10] = "b.txt";
    assert_eq!(run(dir.path(), &again).status.code(), Some(0));
    assert_eq!(first, fs::read(dir.path().join("b.txt")).unwrap());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.txt.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "gen");
    assert_eq!(manifest["config"]["theta_m"], "0.9");
    assert_eq!(manifest["m"], 226);
}

#[test]
fn zero_corruption_rate_gives_zero_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gen", "--n", "31", "--theta-f", "0", "--out", "z.txt"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("sf=0"));
    let text = fs::read_to_string(dir.path().join("z.txt")).unwrap();
    assert!(text.contains("[s_f] 0"));
    let f0: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("[f0]"))
        .skip(1)
        .take_while(|l| !l.starts_with('['))
        .collect();
    assert!(!f0.is_empty());
    assert!(f0.iter().all(|l| *l == "0.0,0.0"));
}

#[test]
fn solve_exit_codes_follow_convergence() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            dir.path(),
            &[
                "gen",
                "--n",
                "67",
                "--theta-m",
                "1",
                "--theta-f",
                "0",
                "--out",
                "full.txt"
            ]
        )
        .status
        .code(),
        Some(0)
    );
    let o = run(dir.path(), &["solve", "full.txt", "--out", "sol.txt"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().find(|l| l.starts_with("rre=")).unwrap().to_owned();
    let rre: f64 = line["rre=".len()..].parse().unwrap();
    assert!(rre < 1e-10, "{line}");
    assert!(dir.path().join("sol.txt").exists());

    let o = run(
        dir.path(),
        &["solve", "full.txt", "--max-iter", "1", "--out", "short.txt"],
    );
    assert_eq!(o.status.code(), Some(2));

    fs::write(dir.path().join("bad.txt"), "garbage\n").unwrap();
    assert_eq!(run(dir.path(), &["solve", "bad.txt"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["gen", "--no-such-flag", "1"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["gen", "--corpus", "x"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["gen", "--n", "abc"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["gen", "--theta-m", "1.5"]).status.code(), Some(1));
    let o = run(dir.path(), &["image-exp", "--corpus", "missing-dir"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing-dir"));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_merged_and_unknown_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "n = 31\ntheta-m = 0.8\nseed = 4\nout = cfg.txt\n",
    )
    .unwrap();
    let o = run(dir.path(), &["gen", "--config", "run.cfg", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("m=25"));
    assert!(header(&dir.path().join("cfg.txt")).contains("seed=9"));

    fs::write(dir.path().join("bad.cfg"), "n = 31\nwhatever = 2\n").unwrap();
    let o = run(dir.path(), &["gen", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("whatever"));
}

#[test]
fn certify_passes_on_uncorrupted_full_sampling() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            dir.path(),
            &["gen", "--n", "17", "--theta-m", "1", "--theta-f", "0", "--out", "u.txt"]
        )
        .status
        .code(),
        Some(0)
    );
    let o = run(dir.path(), &["certify", "u.txt", "--out", "u.cert"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = fs::read_to_string(dir.path().join("u.cert")).unwrap();
    assert!(report.contains("certified = true"));
    assert!(report.contains("condition.b_full_rank = "));
}

#[test]
fn certify_lists_failed_cardinality_and_reports_xi_k() {
    let dir = tempfile::tempdir().unwrap();
    // n = 17, m = 14, |s_f| = round(0.45 * 14) = 6 oversized for the guarantee
    assert_eq!(
        run(
            dir.path(),
            &[
                "gen",
                "--n",
                "17",
                "--theta-m",
                "0.8",
                "--theta-f",
                "0.45",
                "--out",
                "o.txt"
            ]
        )
        .status
        .code(),
        Some(0)
    );
    let o = run(dir.path(), &["certify", "o.txt", "--out", "o.cert"]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)));
    let report = fs::read_to_string(dir.path().join("o.cert")).unwrap();
    assert!(report.contains("condition.corruption_cardinality = ") && report.contains(" fail"));
    assert!(stdout(&o).contains("corruption_cardinality"));
    // d = 8 + 14 = 22, k = 8 - 3 = 5: within the enumeration guard
    let xi_line = report.lines().find(|l| l.starts_with("xi_k = ")).unwrap();
    let xi: f64 = xi_line["xi_k = ".len()..].parse().unwrap();
    assert!(xi > 0.0 && xi <= 1.0 + 1e-12);

    assert_eq!(
        run(dir.path(), &["certify", "o.txt", "--epsilon", "0.5"]).status.code(),
        Some(1)
    );
}

#[test]
fn certify_checks_a_solution_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            dir.path(),
            &[
                "gen",
                "--n",
                "17",
                "--theta-m",
                "0.8",
                "--theta-f",
                "0.1",
                "--seed",
                "3",
                "--out",
                "t.txt"
            ]
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        run(dir.path(), &["solve", "t.txt", "--out", "t.sol"]).status.code(),
        Some(0)
    );
    let o = run(
        dir.path(),
        &["certify", "t.txt", "--solution", "t.sol", "--out", "t.cert"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = fs::read_to_string(dir.path().join("t.cert")).unwrap();
    assert!(report.contains("solution.certified = true"));
}

#[test]
fn phase_map_smoke_grid_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "phase-map",
        "--n",
        "31",
        "--theta-m",
        "0.9",
        "--theta-f",
        "0.05",
        "--runs",
        "3",
        "--threads",
        "2",
        "--out",
        "pm",
    ];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("pm/phase_map.csv")).unwrap();
    assert!(csv.starts_with("theta_m,theta_f,value,runs,skipped\n"));
    assert_eq!(csv.lines().count(), 2);
    let svg = fs::read_to_string(dir.path().join("pm/phase_map.svg")).unwrap();
    assert_eq!(svg.matches("<rect").count(), 1);
    assert!(dir.path().join("pm/manifest.json").exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta_m=0.9"));

    let mut again = args;
    again[12] = "pm2";
    assert_eq!(run(dir.path(), &again).status.code(), Some(0));
    assert_eq!(csv, fs::read_to_string(dir.path().join("pm2/phase_map.csv")).unwrap());
}

#[test]
fn phase_map_draws_nonprime_dimensions_from_the_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "phase-map",
            "--n-mode",
            "nonprimes",
            "--n-range",
            "30:40",
            "--n-count",
            "2",
            "--theta-m",
            "0.9",
            "--theta-f",
            "0.05",
            "--runs",
            "1",
            "--out",
            "np",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("np/manifest.json")).unwrap()).unwrap();
    let ns: Vec<u64> = manifest["n_values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(ns.len(), 2);
    assert!(ns.iter().all(|&n| (30..=40).contains(&n) && ![31, 37].contains(&n)));
}

#[test]
fn sparsity_curve_without_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["sparsity-curve", "--n", "64", "--runs", "5", "--out", "sc"],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("sc/sparsity_curve.csv")).unwrap();
    assert!(csv.starts_with("k,k_over_n,gaussian,synthetic_sparse\n"));
    assert_eq!(csv.lines().count(), 66);
}
