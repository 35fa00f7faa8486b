use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn multitime(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multitime"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(out: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{name}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn check_names(m: &Value) -> Vec<String> {
    m["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect()
}

#[test]
fn zerorange_all_checks_pass_at_right_angle() {
    let dir = tempfile::tempdir().unwrap();
    let o = multitime(dir.path(), &["zerorange", "--theta", "1.5707963", "--check", "all", "--grid-dz", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let m = manifest(dir.path(), "zerorange");
    let names = check_names(&m);
    for key in ["unitarity", "current", "covariance"] {
        assert_eq!(names.iter().filter(|n| n.starts_with(key)).count(), 1, "{names:?}");
    }
    assert_eq!(names.len(), 6);
    assert_eq!(m["passed"], Value::Bool(true));
}

#[test]
fn empty_check_list_passes_with_no_entries() {
    let dir = tempfile::tempdir().unwrap();
    let o = multitime(dir.path(), &["qft", "--check", "none"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(check_names(&manifest(dir.path(), "qft")).is_empty());

    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "[zerorange]\ncheck = []\n").unwrap();
    let o = multitime(dir.path(), &["--config", cfg.to_str().unwrap(), "zerorange"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(check_names(&manifest(dir.path(), "zerorange")).is_empty());
}

#[test]
fn oversized_fock_space_is_a_budget_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = multitime(dir.path(), &["qft", "--nmax", "9", "--sites", "32"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("budget"), "{err}");
    assert!(!dir.path().join("qft.manifest.json").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[born]\nepsilon = 0.1\n").unwrap();
    let o = multitime(dir.path(), &["--config", cfg.to_str().unwrap(), "born"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 4\n[born]\neps = 0.1\nrefinements = 1\n").unwrap();
    let o = multitime(dir.path(), &["--config", cfg.to_str().unwrap(), "born", "--eps", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("born.csv")).unwrap();
    let lines: Vec<&str> = csv.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines[0], "eps,tv_distance,total_probability");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.05,"));
    let m = manifest(dir.path(), "born");
    assert_eq!(m["config"]["seed"], 4);
    assert_eq!(m["config"]["born"]["refinements"], 1);
}

#[test]
fn failing_check_gives_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // a single coarse level cannot meet the strict TV bound
    let o = multitime(dir.path(), &["--tolerance-profile", "strict", "born", "--refinements", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(dir.path(), "born");
    assert_eq!(m["passed"], Value::Bool(false));
    assert!(dir.path().join("born.csv").exists());
}

#[test]
fn same_seed_gives_identical_csv() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = multitime(dir.path(), &["--seed", seed, "qft", "--configs", "random:4", "--check", "equations,splitting"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join("qft.csv")).unwrap()
    };
    let a = run("11");
    assert_eq!(a, run("11"));
    assert_ne!(a, run("12"));

    let born = || {
        let dir = tempfile::tempdir().unwrap();
        multitime(dir.path(), &["born", "--dynamics", "bloch2", "--refinements", "2"]);
        std::fs::read(dir.path().join("born.csv")).unwrap()
    };
    assert_eq!(born(), born());
}

#[test]
fn manifest_keys_are_in_a_stable_order() {
    let dir = tempfile::tempdir().unwrap();
    multitime(dir.path(), &["consistency", "--model", "free"]);
    let text = std::fs::read_to_string(dir.path().join("consistency.manifest.json")).unwrap();
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap_or_else(|| panic!("missing {k}"));
    assert!(pos("tool") < pos("version"));
    assert!(pos("version") < pos("config"));
    assert!(pos("config") < pos("wall_clock_seconds"));
    assert!(pos("passed") < pos("checks"));
    // the config echo is sorted
    assert!(pos("out") < pos("report") && pos("report") < pos("seed"));
}

#[test]
fn explicit_report_path_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("nested/pair.csv");
    let o = multitime(dir.path(), &["consistency", "--model", "pair-potential", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(report).unwrap();
    assert!(csv.starts_with("base_config,h,residual\r\n"));
}

#[test]
fn ts_comparison_refines_at_first_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = multitime(dir.path(), &["ts", "--compare-multitime"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("ts.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(check_names(&manifest(dir.path(), "ts")), ["ts.deviation-refinement-ratio"]);
}

#[test]
fn explicit_qft_configurations_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let configs = r#"[{"x":[[0.5,0,0]],"y":[[0.5,4,1]]}]"#;
    let o = multitime(dir.path(), &["qft", "--configs", configs, "--check", "splitting"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path(), "qft");
    assert_eq!(m["config"]["qft"]["configs"].as_array().unwrap().len(), 1);

    let o = multitime(dir.path(), &["qft", "--configs", r#"[{"z":[]}]"#]);
    assert_eq!(o.status.code(), Some(2));
}
