use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

use sqg_sphere::cli::run;

const SMALL: &str = r#"
[sim]
L = 8
t_end = 0.6
dt = 0.01
snapshot_every = 1
ic = "random"
seed = 11

[diag]
x0 = { colat = 1.1, lon = 0.5 }
h0 = 0.3
levels = 2
t0 = 0.2
kmax = 3
n_z = 4

[barrier]
h_list = [0.2]
r = [0.4]
r1 = [0.1]
n_rho = 16
n_z = 16
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("sqg-sphere").chain(args.iter().copied()))
}

fn command(sub: &str, config: &Path, out: &Path) -> i32 {
    cli(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sqg-sphere"))
        .args(args)
        .env_remove("SQG_SPHERE_OUT")
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn all_finite(rows: &[Vec<String>]) -> bool {
    rows.iter()
        .flatten()
        .filter(|c| !c.is_empty())
        .all(|c| c.parse::<f64>().is_ok_and(f64::is_finite))
}

fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn zero_length_run_writes_one_snapshot() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &SMALL.replace("t_end = 0.6", "t_end = 0.0"));
    let out = tmp.path().join("run");
    assert_eq!(command("simulate", &cfg, &out), 0);
    assert_eq!(fs::read_dir(out.join("snapshots")).unwrap().count(), 1);
    let (header, rows) = read_csv(&out.join("ledger.csv"));
    assert_eq!(header, ["t", "l2_energy", "dissipation_integral", "linf"]);
    assert_eq!(rows.len(), 1);
}

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(command("simulate", &cfg, &a), 0);
    assert_eq!(command("simulate", &cfg, &b), 0);
    assert_eq!(tree_bytes(&a), tree_bytes(&b));

    let c = tmp.path().join("c");
    let code = cli(&["simulate", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap(), "--seed", "12"]);
    assert_eq!(code, 0);
    assert_ne!(fs::read(a.join("ledger.csv")).unwrap(), fs::read(c.join("ledger.csv")).unwrap());
}

#[test]
fn simulate_and_diagnose_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("run");
    assert_eq!(command("simulate", &cfg, &out), 0);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["snapshots"].as_array().unwrap().len(), 61);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);

    assert_eq!(command("diagnose", &cfg, &out), 0);
    let expect = [
        ("energies.csv", vec!["k", "level", "T_k", "E_k", "ratio"]),
        (
            "oscillation.csv",
            vec![
                "h",
                "osc",
                "power_amplitude",
                "power_exponent",
                "power_residual",
                "log_amplitude",
                "log_exponent",
                "log_residual",
            ],
        ),
        ("sets.csv", vec!["t", "A", "B", "C", "K", "ratio"]),
        ("ledger.csv", vec!["t", "l2_energy", "dissipation_integral", "linf"]),
    ];
    for (name, cols) in expect {
        let (header, rows) = read_csv(&out.join(name));
        assert_eq!(header, cols, "{name}");
        assert!(!rows.is_empty() && all_finite(&rows), "{name}");
    }
    let (_, energies) = read_csv(&out.join("energies.csv"));
    assert_eq!(energies.len(), 4);
    for name in ["recurrence.json", "local_energy.json", "drift_check.json"] {
        let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join(name)).unwrap()).unwrap();
        assert!(v.is_object(), "{name}");
    }
    let local: serde_json::Value = serde_json::from_slice(&fs::read(out.join("local_energy.json")).unwrap()).unwrap();
    assert_eq!(local["reports"].as_array().unwrap().len(), 4);
}

#[test]
fn pure_diffusion_energies_vanish_above_the_sup() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL
        .replace("seed = 11", "seed = 11\ndynamics = \"pure_diffusion\"")
        .replace("kmax = 3", "kmax = 3\ntrunc_C = 10.0");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("run");
    assert_eq!(command("simulate", &cfg, &out), 0);
    assert_eq!(command("diagnose", &cfg, &out), 0);
    let (_, rows) = read_csv(&out.join("energies.csv"));
    for row in &rows[1..] {
        assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn barriers_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("bar");
    assert_eq!(command("barriers", &cfg, &out), 0);
    let delta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("delta.json")).unwrap()).unwrap();
    let d = delta["delta"].as_f64().unwrap();
    assert!(d > 0.0 && d < 1.0);
    assert_eq!(delta["refined_resolution"], 32);
    let (header, rows) = read_csv(&out.join("b1_sweep.csv"));
    assert_eq!(header[..4], ["h", "sup", "excess", "residual"]);
    assert_eq!(rows.len(), 1);
    assert!(all_finite(&rows));
    let (header, rows) = read_csv(&out.join("b2_sweep.csv"));
    assert_eq!(header, ["r", "h", "r1", "sup", "min", "max", "shape", "ratio"]);
    assert_eq!(rows.len(), 1);
    assert!(all_finite(&rows));
}

#[test]
fn input_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");

    let missing = write_config(tmp.path(), "m.toml", &SMALL.replace("snapshot_every = 1\n", ""));
    let o = binary(&["simulate", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("snapshot_every"));

    let r1 = write_config(tmp.path(), "r.toml", &SMALL.replace("r1 = [0.1]", "r1 = [0.4]"));
    assert_eq!(command("barriers", &r1, &out), 1);

    let good = write_config(tmp.path(), "c.toml", SMALL);
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(command("diagnose", &good, &empty), 1);

    assert_eq!(command("simulate", &tmp.path().join("absent.toml"), &out), 1);
    let o = binary(&["simulate", "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(binary(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(binary(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &SMALL.replace("t_end = 0.6", "t_end = 0.0"));
    let out = tmp.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_sqg-sphere"))
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("SQG_SPHERE_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn diagnose_rejects_a_window_past_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("run");
    assert_eq!(command("simulate", &cfg, &out), 0);
    let late = write_config(tmp.path(), "late.toml", &SMALL.replace("t0 = 0.2", "t0 = 0.5"));
    assert_eq!(command("diagnose", &late, &out), 1);
}
