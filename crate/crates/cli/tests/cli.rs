use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_jfts-am");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("JFTS_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sweep_emits_one_row_per_policy_and_point() {
    let o = run(&[
        "sweep",
        "--scenario",
        "same-room",
        "--policy",
        "all",
        "--tber",
        "1e-3",
        "--snr",
        "0:40:1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], jfts_core_header());
    assert_eq!(lines.len(), 1 + 4 * 41);
    assert!(text.starts_with("# jfts-am "));
    for l in &lines[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), 9);
        assert!(
            cols[5..].iter().all(|c| c.is_empty()),
            "MC columns filled without --mc-samples: {l}"
        );
        let ase: f64 = cols[4].parse().unwrap();
        assert!((0.0..=8.0).contains(&ase));
    }
}

fn jfts_core_header() -> &'static str {
    "policy,scenario,tber,gamma_bar_db,ase_analytic,ase_mc,ase_mc_stderr,mean_power,mean_ber"
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}.csv"))).collect();
    for p in &paths {
        let o = run(&[
            "sweep",
            "--scenario",
            "two-walls",
            "--tber",
            "1e-3,1e-6",
            "--snr",
            "0:30:10",
            "--mc-samples",
            "20000",
            "--seed",
            "42",
            "--output",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("seed=42"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4 * 2 * 4);
    let row = text.lines().find(|l| l.starts_with("arate-apow-iber")).unwrap();
    assert!(row.split(',').all(|c| !c.is_empty()));
}

#[test]
fn seed_comes_from_environment() {
    let a = Command::new(BIN)
        .args(["sample", "--count", "5"])
        .env("JFTS_SEED", "7")
        .output()
        .unwrap();
    let b = run(&["sample", "--count", "5", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["sample", "--count", "5"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn plan_document_has_small_residuals() {
    let o = run(&[
        "plan",
        "--scenario",
        "fig3-same-room",
        "--policy",
        "arate-apow-iber",
        "--tber",
        "1e-3",
        "--snr",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let json: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["kind"], "arate-apow-iber");
    let res = doc["diagnostics"]["residuals"].as_object().unwrap();
    assert!(!res.is_empty());
    for (k, v) in res {
        assert!(v.as_f64().unwrap() <= 1e-3, "{k} = {v}");
    }
}

#[test]
fn argument_errors_exit_2_with_valid_names() {
    let o = run(&["plan", "--policy", "greedy"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("arate-cpow-aber"));
    let o = run(&["sweep", "--scenario", "attic"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("three-walls"));
    assert_eq!(run(&["sweep", "--snr", "10:0:1"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["pdf", "--k-db", "3"]).status.code(), Some(2));
    assert_eq!(
        run(&["pdf", "--k-db", "3", "--sh-db", "1", "--delta", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn preset_file_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rooms.toml");
    std::fs::write(&file, "[hall]\nK_dB = 8.0\nSh_dB = 2.0\ndelta = 0.4\n").unwrap();
    let f = file.to_str().unwrap();
    let o = run(&["pdf", "--preset-file", f, "--scenario", "hall", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("scenario=hall K_dB=8 Sh_dB=2 delta=0.4"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    let o = run(&[
        "sweep",
        "--preset-file",
        f,
        "--scenario",
        "hall,one-wall",
        "--policy",
        "crate-apow-iber",
        "--snr",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('#')).count(), 3);
    std::fs::write(&file, "[hall]\nK_dB = 8.0\n").unwrap();
    assert_eq!(
        run(&["pdf", "--preset-file", f, "--scenario", "hall"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["pdf", "--preset-file", "/nonexistent/x.toml"]).status.code(),
        Some(2)
    );
}

#[test]
fn pdf_cdf_columns_are_consistent() {
    let o = run(&["pdf", "--scenario", "three-walls", "--snr", "15", "--points", "50"]);
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("gamma"))
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2] && w[1][0] > w[0][0]));
    assert!(rows.iter().all(|r| r[1] >= 0.0));
}
