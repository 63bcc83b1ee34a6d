use std::path::Path;
use std::process::{Command, Output};

use propchaos::cli::csv::extract_config;

fn propchaos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_propchaos")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CHAOS: &str = r#"
model = "kac_elastic"
dim = 3
master_seed = 5
t_end = 0.5
n_values = [16, 32, 64, 128]
observables = ["tanh:0,1*tanh:1,1"]
estimator = "u_statistic"
replicas = 40
oracle_n = 2048
oracle_replicas = 4
bootstrap = 30
[init]
law = "sphere_shell"
"#;

#[test]
fn chaos_curve_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", CHAOS);
    let one = propchaos(&["chaos-curve", "--config", &cfg, "--workers", "1"]);
    let three = propchaos(&["chaos-curve", "--config", &cfg, "--workers", "3"]);
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, three.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert!(text.contains("\"tanh:0,1*tanh:1,1\",16,40,"));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", CHAOS);
    let first = String::from_utf8(propchaos(&["chaos-curve", "--config", &cfg]).stdout).unwrap();
    let echoed = extract_config(&first).expect("config block");
    let again = write(dir.path(), "echo.toml", &echoed);
    let second = String::from_utf8(propchaos(&["chaos-curve", "--config", &again]).stdout).unwrap();
    assert_eq!(first, second);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "dim = 2\nn = 50\nt_end = 1.0\nmaster_seed = 1\n");
    let a = propchaos(&["simulate", "--config", &cfg]);
    let b = propchaos(&["simulate", "--config", &cfg, "--seed", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert!(String::from_utf8(b.stdout).unwrap().contains("master_seed = 2"));
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", "dim = 1\nn = 64\nt_end = 0.5\nmetrics = [\"w1\", \"w2\"]\n[compare]\nlaw = \"uniform_box\"\n");
    let out = dir.path().join("m.csv");
    let r = propchaos(&["metric", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(r.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("time,metric,value,std_error")));
}

#[test]
fn check_passes() {
    let r = propchaos(&["check"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stdout));
    assert!(!String::from_utf8(r.stdout).unwrap().contains(",false,"));
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "dim = 3\nalpha = 1.5\nmodel = \"inelastic_thermostat\"\n");
    let r = propchaos(&["simulate", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("alpha"));

    let cfg = write(dir.path(), "typo.toml", "dimension = 3\n");
    let r = propchaos(&["simulate", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let r = propchaos(&["simulate", "--config", "/nonexistent/x.toml"]);
    assert_eq!(r.status.code(), Some(4));
}
