use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cini");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn builtin_text(name: &str) -> String {
    std::fs::read_to_string(configs().join(format!("{name}.json"))).unwrap()
}

/// Column `col` of a CSV written by the runner.
fn column(path: &Path, col: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == col).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

fn floats(path: &Path, col: &str) -> Vec<f64> {
    column(path, col).iter().map(|s| s.parse().unwrap()).collect()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    let o = run(&["simulate", "--config", "/nonexistent.json", "--out", "/tmp/x"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn malformed_config_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write_config(dir.path(), "bad.json", "{ \"label\": ");
    assert_eq!(code(&run(&["simulate", "--config", &bad, "--out", out.to_str().unwrap()])), 1);

    let one_step = builtin_text("uncoupled").replace("\"steps\": 5000", "\"steps\": 1");
    let cfg = write_config(dir.path(), "steps.json", &one_step);
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("grid.steps"), "{}", stderr(&o));

    let unknown = builtin_text("uncoupled").replace("\"grid\"", "\"colour\": 3, \"grid\"");
    let cfg = write_config(dir.path(), "unknown.json", &unknown);
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn singularity_exit_2() {
    // phi = -pi/2 drives lambda from 0.1 down through the pole at t = 0.1.
    let dir = tempfile::tempdir().unwrap();
    let text = builtin_text("special_case").replace("-1.5707963267948966", "1.5707963267948966");
    let cfg = write_config(dir.path(), "pole.json", &text);
    let o = run(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("sin lambda"));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("special_case.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert!(names.contains(&"aux_k0.csv".to_string()));
    assert!(names.contains(&"decoherence_k0_l1_special_case.csv".to_string()));
    assert!(names.contains(&"reduced_coherence.csv".to_string()));
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
    let meta = std::fs::read_to_string(a.join("metadata.json")).unwrap();
    assert!(meta.contains("\"timestamp\""));
    for n in &names {
        let first = std::fs::read_to_string(a.join(n)).unwrap();
        assert!(first.starts_with('t') || first.starts_with("level") || first.starts_with('k'), "{n}");
    }

    let fid = floats(&a.join("summary.csv"), "min_fidelity");
    assert!(fid.iter().all(|&f| f >= 1.0 - 1e-6));
    assert_eq!(column(&a.join("aux_k0.csv"), "lambda")[0], "1.0000000000000001e-1");
}

#[test]
fn uncoupled_branch_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("uncoupled.json");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let fid = floats(&dir.path().join("summary.csv"), "min_fidelity");
    assert!(fid.iter().all(|&f| f >= 1.0 - 1e-9), "{fid:?}");
    assert_eq!(column(&dir.path().join("summary.csv"), "degenerate"), vec!["true", "true"]);
}

#[test]
fn decohere_same_level_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("sinusoidal_drive.json");
    let o = run(&[
        "decohere",
        "--config",
        cfg.to_str().unwrap(),
        "--k",
        "1",
        "--l",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let mags = floats(&dir.path().join("decoherence_k1_l1_direct.csv"), "abs_F");
    assert!(mags.iter().all(|m| (m - 1.0).abs() < 1e-12));
    assert!(stdout(&o).contains("max |direct - closed|"));
    let bad = run(&[
        "decohere",
        "--config",
        cfg.to_str().unwrap(),
        "--k",
        "0",
        "--l",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn decohere_special_case_follows_cos_law() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("special_case.json");
    let o = run(&[
        "decohere",
        "--config",
        cfg.to_str().unwrap(),
        "--k",
        "0",
        "--l",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let direct = floats(&dir.path().join("decoherence_k0_l1_direct.csv"), "re_F");
    let special = floats(&dir.path().join("decoherence_k0_l1_special_case.csv"), "re_F");
    let t = floats(&dir.path().join("decoherence_k0_l1_special_case.csv"), "t");
    for ((d, s), t) in direct.iter().zip(&special).zip(&t) {
        assert!((d - s).abs() < 1e-10);
        // c_0 = 1, c_1 = 2, j = 1: cos^2(t/2).
        assert!((s - (0.5 * t).cos().powi(2)).abs() < 1e-10);
    }
}

#[test]
fn j_sweep_reproduces_cos_powers() {
    let dir = tempfile::tempdir().unwrap();
    let text = builtin_text("collapse").replace("1.2853981633974483", "1.5471975511965976");
    let cfg = write_config(dir.path(), "third.json", &text);
    let out = dir.path().join("sweep");
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "j",
        "--values",
        "0.5,1,2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let f = floats(&out.join("sweep.csv"), "terminal_abs_F");
    for (got, want) in f.iter().zip([0.5, 0.25, 0.0625]) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    assert_eq!(column(&out.join("sweep.csv"), "two_j"), vec!["1", "2", "4"]);
    assert!(stdout(&o).contains("monotone_decreasing = true"));

    let empty =
        run(&["sweep", "--config", &cfg, "--axis", "j", "--values", "", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&empty), 1);
    let bad_axis = run(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "colour",
        "--values",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&bad_axis), 1);
}

#[test]
fn single_value_sweep_matches_decohere() {
    let dir = tempfile::tempdir().unwrap();
    // Label (2, 0) is what the two_j axis produces for 2j = 2.
    let cfg = configs().join("special_case.json");
    let cfg = cfg.to_str().unwrap();
    let (s, d) = (dir.path().join("s"), dir.path().join("d"));
    assert_eq!(
        code(&run(&[
            "sweep",
            "--config",
            cfg,
            "--axis",
            "two_j",
            "--values",
            "2",
            "--out",
            s.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(
        code(&run(&["decohere", "--config", cfg, "--k", "0", "--l", "1", "--out", d.to_str().unwrap()])),
        0
    );
    assert_eq!(
        column(&s.join("sweep.csv"), "terminal_abs_F"),
        column(&d.join("decohere_summary_k0_l1.csv"), "terminal_abs_F")
    );
}

#[test]
fn pointer_sweep_changes_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("special_case.json");
    let out = dir.path().join("p");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--axis",
        "/levels/1/coupling/amplitude/constant",
        "--values",
        "0.5,0.6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let f = floats(&out.join("sweep.csv"), "terminal_abs_F");
    // Equal couplings never decohere; at 0.6, j = 1, alpha(10) = -1: cos^2(1).
    assert!((f[0] - 1.0).abs() < 1e-12);
    assert!((f[1] - 1f64.cos().powi(2)).abs() < 1e-9, "{}", f[1]);
    let missing = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--axis",
        "/levels/7/energy",
        "--values",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&missing), 1);
}
