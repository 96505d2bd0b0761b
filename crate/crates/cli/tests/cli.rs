use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn insulate(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_insulate"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn csv_column(path: &Path, column: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == column).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn slab_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = insulate(&["solve-reduced"], &config("slab.toml"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let total = csv_column(&dir.path().join("reduced_energy.csv"), "total")[0];
    assert!((total + 0.125).abs() < 2e-3, "{total}");
    let u = csv_column(&dir.path().join("reduced_boundary.csv"), "u");
    assert!(u.iter().all(|v| (v - 1.0 / 3.0).abs() < 2e-3));
}

#[test]
fn missing_insulated_label_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "[[domain.loop]]\nvertices = [[0, 0], [1, 0], [1, 1], [0, 1]]\nlabels = [\"neumann\", \"neumann\", \"neumann\", \"dirichlet\"]\n",
    )
    .unwrap();
    let o = insulate(&["solve-reduced"], &path, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("labels"));
}

#[test]
fn zero_data_optimization_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.toml");
    std::fs::write(
        &path,
        "[[domain.loop]]\nvertices = [[0, 0], [1, 0], [1, 1], [0, 1]]\nlabels = [\"neumann\", \"insulated\", \"neumann\", \"dirichlet\"]\n",
    )
    .unwrap();
    let o = insulate(&["optimize"], &path, dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn reflex_layer_reports_the_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let o = insulate(&["gamma-sweep"], &config("reflex.toml"), dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon = 0.5"));
    // The header survives the failure.
    assert!(dir.path().join("gamma_sweep.csv").exists());
}

#[test]
fn slab_sweep_gaps_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let o = insulate(&["gamma-sweep"], &config("slab_family.toml"), dir.path());
    assert!(o.status.success());
    let gaps = csv_column(&dir.path().join("gamma_sweep.csv"), "gap");
    assert_eq!(gaps.len(), 4);
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn optimize_writes_monotone_history() {
    let dir = tempfile::tempdir().unwrap();
    let o = insulate(&["optimize"], &config("optimize.toml"), dir.path());
    assert!(o.status.success());
    let e = csv_column(&dir.path().join("optimize_iterations.csv"), "energy");
    assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    let res = csv_column(&dir.path().join("optimize_iterations.csv"), "mass_residual");
    assert!(res.iter().all(|r| *r <= 1e-10));
    assert!(String::from_utf8_lossy(&o.stdout).contains("net heat input"));
}

#[test]
fn verify_passes_on_square() {
    let dir = tempfile::tempdir().unwrap();
    let o = insulate(&["verify"], &config("square.toml"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(text.starts_with("check,status,value,threshold\n"));
    assert!(!text.contains(",fail,"));
}

#[test]
fn outputs_are_deterministic() {
    let cases = [
        ("solve-reduced", "slab_family.toml"),
        ("solve-thick", "square.toml"),
        ("optimize", "optimize.toml"),
        ("gamma-sweep", "slab_family.toml"),
        ("verify", "square.toml"),
        ("mesh-info", "annulus.toml"),
    ];
    for (cmd, cfg) in cases {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for d in [&a, &b] {
            let o = insulate(&[cmd, "--threads", "1"], &config(cfg), d.path());
            assert!(o.status.success(), "{cmd}");
        }
        let mut files: Vec<_> = std::fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        files.sort();
        assert!(!files.is_empty());
        for f in files {
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap();
            assert_eq!(x, y, "{cmd}: {f:?}");
        }
    }
}
