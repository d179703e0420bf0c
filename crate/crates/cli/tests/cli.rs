use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qpspectra"));
    c.env_remove("QPSPECTRA_WORKERS");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Runs `qpspectra run` and returns the run directory.
fn run(cmd: &mut Command, config: &Path, out: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let o = cmd.arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap();
    let stdout = String::from_utf8_lossy(&o.stdout);
    let dir = PathBuf::from(stdout.lines().next().unwrap_or_default());
    (o, dir)
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

const TREE: &str = r#"kind = "tree_width"
seed = 11
[potential]
coupling = 1.0
[params]
energy = 0.3
eta = 0.05
lambdas = [0.4, 0.2, 0.1]
n_samples = 300
depth = 300
pool_size = 400
"#;

#[test]
fn validate_lists_every_error() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = "kind = \"ids_sweep\"\n[potential]\ncoupling = 1.0\n[torus]\nalpha = [0.5]\n[energy]\nmin = -1.0\nmax = 1.0\nstep = 0.0\n";
    let o = bin().arg("validate").arg(write(tmp.path(), "bad.toml", doc)).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("step must be positive"), "{err}");
    assert!(err.contains("m = [2]"), "{err}");

    let o = bin().arg("validate").arg(write(tmp.path(), "ok.toml", TREE)).output().unwrap();
    assert!(o.status.success());
}

#[test]
fn free_ac_spectrum_is_the_band() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = "kind = \"ac_classify\"\n[potential]\ncoupling = 0.0\n[energy]\nmin = -3.0\nmax = 3.0\nstep = 0.01\n[params]\nphases = 1\n";
    let (o, dir) = run(&mut bin(), &write(tmp.path(), "ac.toml", doc), tmp.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let iv = csv_rows(&dir.join("intervals.csv"));
    assert_eq!(iv.len(), 1);
    assert!((iv[0][0] + 2.0).abs() <= 0.01 && (iv[0][1] - 2.0).abs() <= 0.01, "{iv:?}");
    let text = fs::read_to_string(dir.join("grid.csv")).unwrap();
    assert!(text.starts_with("energy,lyapunov,") && !text.contains('\r'));
}

#[test]
fn zero_disorder_width_row() {
    let tmp = tempfile::tempdir().unwrap();
    let doc =
        "kind = \"tree_width\"\n[potential]\ncoupling = 0.0\n[params]\nlambdas = [0.0]\nn_samples = 50\ndepth = 500\n";
    let (o, dir) = run(&mut bin(), &write(tmp.path(), "w.toml", doc), tmp.path(), &[]);
    assert!(o.status.success());
    let rows = csv_rows(&dir.join("width.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..4], [0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn gap_labels_for_subcritical_mathieu() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = "kind = \"gap_labels\"\n[potential]\ncoupling = 1.0\n[energy]\nmin = -3.0\nmax = 3.0\nstep = 0.01\n";
    let (o, dir) = run(&mut bin(), &write(tmp.path(), "g.toml", doc), tmp.path(), &[]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.join("gaps.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    for r in rows {
        let m: i64 = r[4].parse().unwrap();
        let d: f64 = r[5].parse().unwrap();
        assert!(m.abs() <= 50 && d < 1e-2, "{r:?}");
    }
}

#[test]
fn outputs_are_reproducible_across_workers_and_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "tree.toml", TREE);
    let (o1, d1) = run(bin().env("QPSPECTRA_WORKERS", "1"), &cfg, &tmp.path().join("one"), &[]);
    let (o3, d3) = run(bin().env("QPSPECTRA_WORKERS", "3"), &cfg, &tmp.path().join("three"), &[]);
    assert!(o1.status.success() && o3.status.success());
    let csv = |d: &Path| fs::read(d.join("width.csv")).unwrap();
    assert_eq!(csv(&d1), csv(&d3));
    let (o, again) = run(&mut bin(), &d1.join("config.toml"), &tmp.path().join("again"), &[]);
    assert!(o.status.success());
    assert_eq!(csv(&d1), csv(&again));
    let (_, reseeded) = run(&mut bin(), &cfg, &tmp.path().join("seed"), &["--seed", "12"]);
    assert_ne!(csv(&d1), csv(&reseeded));
    assert!(fs::read_to_string(reseeded.join("config.toml")).unwrap().contains("seed = 12"));
}

#[test]
fn failed_rows_give_nonzero_exit_with_partial_results() {
    let tmp = tempfile::tempdir().unwrap();
    // Depth 50 converges outside the band but not at η = 10⁻³ inside it.
    let doc = "kind = \"green_probe\"\n[potential]\ncoupling = 0.0\n[energy]\nmin = 5.0\nmax = 5.5\nstep = 0.5\n[params]\neta = 0.001\ndepth = 50\n";
    let (o, dir) = run(&mut bin(), &write(tmp.path(), "p.toml", doc), tmp.path(), &[]);
    assert!(o.status.success(), "outside the band the recursion contracts");
    let rows = csv_rows(&dir.join("green.csv"));
    assert_eq!(rows.len(), 2);

    let doc =
        doc.replace("min = 5.0", "min = 0.0").replace("max = 5.5", "max = 5.0").replace("step = 0.5", "step = 5.0");
    let (o, dir) = run(&mut bin(), &write(tmp.path(), "q.toml", &doc), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(csv_rows(&dir.join("green.csv")).len(), 1);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["errors"].as_array().unwrap().len(), 1);
    assert_eq!(report["errors"][0]["at"], 0.0);
}

#[test]
fn oracles() {
    let o = bin().args(["oracle", "free-green"]).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).ends_with("# agree\n"));
    assert!(!bin().args(["oracle", "nonsense"]).output().unwrap().status.success());
}
