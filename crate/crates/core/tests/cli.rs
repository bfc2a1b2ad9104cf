use std::path::Path;
use std::process::{Command, Output};

use ris_secrecy::config::{emit_config, load_config, LoadedConfig};

fn cli(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ris-secrecy"));
    cmd.args(args).env_remove("RIS_PLS_THREADS");
    if let Some(t) = threads {
        cmd.env("RIS_PLS_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SWEEP: &str = r#"
[sweep]
parameter = "l"
values = [4, 16]
metric = "op"
methods = ["approx", "mc"]

[system]
scenario = "ris"

[mc]
trials = 20000
seed = 5
"#;

#[test]
fn eval_prints_one_row_per_method() {
    let out = cli(
        &["eval", "--metric", "op", "--method", "approx,asymptotic"],
        None,
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "swept_value,metric,method,value,stderr,wall_ms,flags"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with(",op,approx,0."));
    assert!(lines[2].starts_with(",op,asymptotic,"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[system]\nk = 2\nm = 2\n");
    let out = cli(&["--config", &bad, "eval", "--metric", "op"], None);
    assert_eq!(out.status.code(), Some(2));
    let typo = write(dir.path(), "typo.toml", "[system]\npowr_db = 3\n");
    let out = cli(&["--config", &typo, "eval", "--metric", "op"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = cli(&["eval", "--metric", "capacity"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unavailable_method_is_reported_as_na() {
    let dir = tempfile::tempdir().unwrap();
    let ris = write(dir.path(), "ris.toml", "[system]\nscenario = \"ris\"\n");
    let out = cli(
        &[
            "--config", &ris, "eval", "--metric", "op", "--method", "exact",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",NA,"), "{text}");
    let out = cli(
        &[
            "--config",
            &ris,
            "eval",
            "--metric",
            "op",
            "--method",
            "exact,approx",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_output_ignores_the_worker_cap() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.toml", SWEEP);
    let one = cli(&["sweep", &spec], Some("1"));
    let many = cli(&["sweep", &spec], None);
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("trials=20000"));
}

#[test]
fn sweep_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.toml", SWEEP);
    let csv = dir.path().join("out.csv");
    let out = cli(
        &[
            "--out",
            csv.to_str().unwrap(),
            "--svg",
            "--timing",
            "sweep",
            &spec,
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let wall: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap())
        .collect();
    assert!(wall.iter().all(|w| w.parse::<f64>().is_ok()), "{wall:?}");
    let svg = std::fs::read_to_string(dir.path().join("out.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("approx") && svg.contains("mc"));
}

#[test]
fn svg_without_out_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.toml", SWEEP);
    assert_eq!(cli(&["--svg", "sweep", &spec], None).status.code(), Some(2));
}

#[test]
fn seed_flag_changes_only_monte_carlo_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.toml", SWEEP);
    let a = String::from_utf8(cli(&["--seed", "1", "sweep", &spec], None).stdout).unwrap();
    let b = String::from_utf8(cli(&["--seed", "2", "sweep", &spec], None).stdout).unwrap();
    for (x, y) in a.lines().zip(b.lines()) {
        if x.contains(",mc,") {
            assert_ne!(x, y);
        } else {
            assert_eq!(x, y);
        }
    }
}

#[test]
fn emitted_configuration_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut original = LoadedConfig::default();
    original.scenario.l = 36;
    original.scenario.p_un = 316.0;
    original.secrecy = original.secrecy.with_r_t(2.0).unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, emit_config(&original)).unwrap();
    let loaded = load_config(&path).unwrap();
    assert_eq!(loaded.scenario.l, 36);
    assert!((loaded.scenario.p_un / 316.0 - 1.0).abs() < 1e-12);
    assert_eq!(loaded.secrecy.r_t, 2.0);
    assert_eq!(emit_config(&loaded), emit_config(&original));
}
