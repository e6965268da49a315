use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use satsec_cli::config;

const HEADER: &str = "sweep_var,sweep_value,method,metric,value,ci_halfwidth,n_trials,seed";

const SMALL: &str = r#"
[[layers]]
count = 10
altitude_km = 600

[sweep]
variable = "a_e"
grid = [400, 900]
methods = ["exact", "approx", "asymptotic", "mc"]
metrics = ["c_erg", "p_out", "c_out", "case_probs", "effective_count", "c_erg_no_eav"]
beam_modes = ["fixed", "steerable"]
mc_trials = 20000
seed = 11
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_satsec"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_to_string(cfg: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(out).unwrap()
}

fn expect_failure(cfg_text: &str, needle: &str) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", cfg_text);
    let out = dir.path().join("out.csv");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success(), "expected failure for config:\n{cfg_text}");
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(needle), "stderr `{err}` lacks `{needle}`");
    assert!(!out.exists(), "no output file on failure");
}

#[test]
fn csv_schema_and_analytic_rows_have_empty_ci() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let text = run_to_string(&cfg, &dir.path().join("a.csv"), &[]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let mut methods = std::collections::BTreeSet::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 8, "{line}");
        assert_eq!(f[0], "a_e");
        let v: f64 = f[4].parse().unwrap();
        assert!(v.is_finite(), "{line}");
        methods.insert(f[2].to_string());
        if f[2] == "mc" {
            assert_eq!(f[6], "20000");
            assert_eq!(f[7], "11");
        } else {
            assert_eq!(&f[5..], ["", "", ""], "{line}");
        }
        assert!(f[3].ends_with("@beam=fixed") || f[3].ends_with("@beam=steerable"), "{line}");
    }
    assert_eq!(methods.into_iter().collect::<Vec<_>>(), ["approx", "asymptotic", "exact", "mc"]);
}

#[test]
fn byte_identical_across_reruns_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let a = run_to_string(&cfg, &dir.path().join("a.csv"), &["--workers", "1"]);
    let b = run_to_string(&cfg, &dir.path().join("b.csv"), &["--workers", "1"]);
    let c = run_to_string(&cfg, &dir.path().join("c.csv"), &["--workers", "4"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = run_to_string(&cfg, &dir.path().join("d.csv"), &["--workers", "4", "--seed", "12"]);
    assert_ne!(a, d, "a different seed changes the simulated rows");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let text = run_to_string(
        &cfg,
        &dir.path().join("a.csv"),
        &["--method", "approx,mc", "--trials", "500", "--set", "sweep.metrics=[\"c_erg\"]", "--set", "layers.0.count=3"],
    );
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows.iter().all(|r| r.contains(",c_erg@")));
    assert!(rows.iter().filter(|r| r.contains(",mc,")).all(|r| r.ends_with(",500,11")));
}

#[test]
fn stdout_when_no_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let o = run(&["--config", cfg.to_str().unwrap(), "--method", "approx", "--set", "sweep.beam_modes=[\"fixed\"]"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with(HEADER));
    assert!(text.contains("a_e,900,approx,c_erg,"));
}

#[test]
fn empty_grid_is_rejected() {
    expect_failure(&SMALL.replace("grid = [400, 900]", "grid = []"), "empty");
}

#[test]
fn unknown_keys_are_rejected() {
    expect_failure(&format!("{SMALL}\n[fading]\nmm = 3\n"), "unknown field");
    expect_failure(&SMALL.replace("seed = 11", "seed = 11\nsede = 2"), "unknown field");
    expect_failure(&format!("[system]\nbeam_half_angle_rad = 0.7\n{SMALL}"), "unknown field");
}

#[test]
fn exact_refuses_multiple_layers() {
    let text = SMALL.replace("variable = \"a_e\"\ngrid = [400, 900]", "variable = \"a_s\"\ngrid = [400, 900]")
        + "\n[[layers]]\ncount = 5\naltitude_km = 1000\n";
    expect_failure(&text, "single eavesdropper layer");
}

#[test]
fn exact_refuses_counts_above_cap() {
    expect_failure(&SMALL.replace("count = 10", "count = 501"), "limited to N <= 500");
}

#[test]
fn invalid_ranges_are_rejected() {
    expect_failure(&format!("[serving]\nelevation_deg = 95\n{SMALL}"), "elevation");
    expect_failure(&format!("[fading]\nm = -1\n{SMALL}"), "error");
    expect_failure(&SMALL.replace("variable = \"a_e\"", "variable = \"altitude\""), "unknown variant");
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names = Vec::new();
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = config::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            names.push(path.file_stem().unwrap().to_string_lossy().into_owned());
        }
    }
    names.sort();
    let expected: Vec<String> = (3..=11).map(|i| format!("fig{i:02}")).collect();
    assert_eq!(names, expected);
}
