use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bclab")).args(args).output().expect("binary runs")
}

fn config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().into_string().unwrap()).collect(),
        Err(_) => Vec::new(),
    };
    names.sort();
    names
}

fn run(dir: &TempDir, command: &str, cfg: &str, out: &str, extra: &[&str]) -> Output {
    let out = dir.path().join(out);
    let mut args = vec![command, "--config", cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bclab(&args)
}

const SMALL: &str = "grid.n = 128\nsandwich.levels = 4\nsqueeze.levels = 3\nmixing.t_max = 10\n";

#[test]
fn malformed_config_exits_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in ["grid.n = 100\n", "grid.n\n", "grid.n = 128\ngrid.n = 256\n", "colour = blue\n"].iter().enumerate() {
        let cfg = config(&dir, &format!("bad{i}.conf"), text);
        let out = run(&dir, "tail", &cfg, "out", &[]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
        assert!(listing(&dir.path().join("out")).is_empty());
    }
    let missing = dir.path().join("absent.conf");
    assert_eq!(run(&dir, "tail", missing.to_str().unwrap(), "out", &[]).status.code(), Some(2));
    let cfg = config(&dir, "ok.conf", SMALL);
    assert_eq!(bclab(&["plot", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(run(&dir, "tail", &cfg, "out", &["--workers", "0"]).status.code(), Some(2));
}

#[test]
fn tail_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "tail.conf", SMALL);
    let out = run(&dir, "tail", &cfg, "out", &["--seed", "99"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let files = listing(&dir.path().join("out"));
    assert_eq!(files, ["dl_certificate.txt", "provenance.json", "tail.csv", "verdict.txt"]);
    let tail = fs::read_to_string(dir.path().join("out/tail.csv")).unwrap();
    let phi: Vec<f64> = tail.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(phi.windows(2).all(|w| w[1] <= w[0]));
    let prov: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["seed"], 99);
    assert_eq!(prov["grid_n"], 128);
    assert_eq!(prov["config_sha256"].as_str().unwrap().len(), 64);
    assert!(prov["certificates"]["dl"]["c"].as_f64().unwrap() > 0.0);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SMALL}bc.ratio_horizons = 200,2000\nbc.ratio_samples = 20\nbc.hit_horizon = 2000\nbc.hit_samples = 10\nbc.min_coverage = 0.01\nbc.level = 1.5\n"
    );
    let cfg = config(&dir, "bc.conf", &text);
    for command in ["bc", "mixing"] {
        let a = run(&dir, command, &cfg, &format!("{command}_a"), &["--seed", "5", "--workers", "1"]);
        let b = run(&dir, command, &cfg, &format!("{command}_b"), &["--seed", "5", "--workers", "4"]);
        assert!(a.status.code().is_some_and(|c| c == 0 || c == 4), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.status.code(), b.status.code());
        assert_eq!(a.stdout, b.stdout);
        let files = listing(&dir.path().join(format!("{command}_a")));
        assert_eq!(files, listing(&dir.path().join(format!("{command}_b"))));
        for f in files.iter().filter(|f| *f != "provenance.json") {
            let x = fs::read(dir.path().join(format!("{command}_a")).join(f)).unwrap();
            let y = fs::read(dir.path().join(format!("{command}_b")).join(f)).unwrap();
            assert_eq!(x, y, "{command}/{f}");
        }
    }
    let c = run(&dir, "bc", &cfg, "bc_c", &["--seed", "6"]);
    assert!(c.status.code().is_some_and(|c| c == 0 || c == 4));
    let x = fs::read(dir.path().join("bc_a/ratio.csv")).unwrap();
    let y = fs::read(dir.path().join("bc_c/ratio.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn numeric_guards_exit_3_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let coarse = config(&dir, "coarse.conf", &format!("{SMALL}sandwich.epsilon = 0.05\n"));
    let out = run(&dir, "sandwich", &coarse, "coarse", &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(listing(&dir.path().join("coarse")).is_empty());

    let rotation = config(&dir, "rotation.conf", "system.kind = rotation\n");
    let out = run(&dir, "mixing", &rotation, "rotation", &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not mixing"));
    assert!(listing(&dir.path().join("rotation")).is_empty());

    let doubling = config(&dir, "doubling.conf", "grid.dim = 1\ngrid.n = 256\ndelta.center = 0.5\nsystem.kind = doubling\nsp.n_max = 16\n");
    let out = run(&dir, "sp", &doubling, "doubling", &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oversized_epsilon_exits_4_and_names_the_inclusion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "big.conf", "grid.n = 256\nsandwich.levels = 3\nsqueeze.levels = 3\nsqueeze.epsilon = 0.1\n");
    let out = run(&dir, "sandwich", &cfg, "out", &[]);
    assert_eq!(out.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL set inclusions"), "{stdout}");
    assert!(stdout.contains("A(z+delta) in A'(z,eps)") || stdout.contains("A''(z,eps) in A(z-delta)"));
    let files = listing(&dir.path().join("out"));
    assert_eq!(files, ["provenance.json", "sandwich.csv", "squeeze.txt", "verdict.txt"]);
    assert!(fs::read_to_string(dir.path().join("out/verdict.txt")).unwrap().contains("FAIL set inclusions"));
}

#[test]
fn sandwich_at_default_epsilon_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "s.conf", &format!("{SMALL}sandwich.z_max = 2\n"));
    let out = run(&dir, "sandwich", &cfg, "out", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("out/sandwich.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "z,phi,l1_lo,l1_hi,sobolev_lo,sobolev_hi,ratio_new_lo,ratio_old_lo,C");
    assert_eq!(csv.lines().count(), 5);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS uniform C"));
}

#[test]
fn no_temporaries_are_left_behind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "t.conf", SMALL);
    for _ in 0..2 {
        assert_eq!(run(&dir, "tail", &cfg, "out", &[]).status.code(), Some(0));
    }
    assert!(listing(&dir.path().join("out")).iter().all(|f| !f.starts_with('.')));
}
