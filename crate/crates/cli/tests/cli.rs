use std::path::Path;
use std::process::{Command, Output};

use mswave_core::diagnostics::mass;
use mswave_shell::sinks::{header, list_snapshots, read_csv};
use mswave_shell::snapshot;

fn mswave(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mswave"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MSWAVE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small, fast run settings.
const SMALL: [&str; 10] = [
    "--set",
    "grid.n=16",
    "--set",
    "integrator.dt=2e-3",
    "--set",
    "integrator.t_end=0.04",
    "--set",
    "output.snapshot_every=10",
    "--set",
    "initial.a0.preset=\"solenoidal-bump\"",
];

fn run_small(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--set"];
    let out_set = format!("output.out_dir=\"{out}\"");
    args.push(&out_set);
    args.extend_from_slice(&SMALL);
    args.extend_from_slice(extra);
    mswave(&args, dir)
}

#[test]
fn malformed_config_exits_2_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[grid]\nn = 31\n[output]\nout_dir = \"out\"\n").unwrap();
    let o = mswave(&["run", "-c", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());

    std::fs::write(&cfg, "[grid\nn = 16\n").unwrap();
    let o = mswave(&["run", "-c", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = mswave(&["run", "--set", "physics.gamma=5", "--set", "output.out_dir=\"out\""], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn zero_duration_writes_the_initial_snapshot_only() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_small(tmp.path(), "out", &["--set", "integrator.t_end=0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let snaps = list_snapshots(&tmp.path().join("out")).unwrap();
    assert_eq!(snaps.len(), 1);
    assert!(snaps[0].ends_with("snap_00000000.bin"));
}

#[test]
fn run_writes_documented_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_small(tmp.path(), "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("out");
    let (head, rows) = read_csv(&dir.join("diagnostics.csv")).unwrap();
    assert_eq!(head.join(","), header());
    assert_eq!(head[..7], ["t", "mass", "energy", "energy_reg", "divA", "gauss", "divB"]);
    assert_eq!(rows.len(), 21);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    let m0 = rows[0][1];
    assert!(rows.iter().all(|r| (r[1] - m0).abs() <= 1e-8 * m0));
    assert!(dir.join("columns.txt").exists());
    assert!(dir.join("config.toml").exists());
    let names: Vec<String> = list_snapshots(&dir)
        .unwrap()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["snap_00000000.bin", "snap_00000010.bin", "snap_00000020.bin"]);

    // Every snapshot re-reads to the same state.
    for p in list_snapshots(&dir).unwrap() {
        let s = snapshot::read(&p).unwrap();
        let again = snapshot::decode(&snapshot::encode(&s)).unwrap();
        assert_eq!(mass(&again), mass(&s));
    }
}

#[test]
fn out_dir_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[grid]\nn = 16\n[integrator]\nt_end = 0\n[output]\nout_dir = \"from-file\"\n").unwrap();
    let c = cfg.to_str().unwrap();
    let env_run = |extra: &[&str]| {
        let mut args = vec!["run", "-c", c];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_mswave"))
            .args(&args)
            .current_dir(tmp.path())
            .env("MSWAVE_OUT_DIR", "from-env")
            .output()
            .unwrap()
    };
    assert!(env_run(&[]).status.success());
    assert!(tmp.path().join("from-env/snap_00000000.bin").exists());
    assert!(!tmp.path().join("from-file").exists());
    assert!(env_run(&["--set", "output.out_dir=\"from-flag\""]).status.success());
    assert!(tmp.path().join("from-flag/snap_00000000.bin").exists());
}

#[test]
fn resume_reproduces_the_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_small(tmp.path(), "full", &[]).status.success());
    let snap = tmp.path().join("full/snap_00000010.bin");
    let o = mswave(&["resume", snap.to_str().unwrap(), "--set", "output.out_dir=\"resumed\""], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));

    let (_, full) = read_csv(&tmp.path().join("full/diagnostics.csv")).unwrap();
    let (_, resumed) = read_csv(&tmp.path().join("resumed/diagnostics.csv")).unwrap();
    let t1 = snapshot::read(&snap).unwrap().t;
    let tail: Vec<&Vec<f64>> = full.iter().filter(|r| r[0] >= t1).collect();
    assert_eq!(tail.len(), resumed.len());
    for (a, b) in tail.iter().zip(&resumed) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }
    assert!(tmp.path().join("resumed/snap_00000020.bin").exists());
    assert!(!tmp.path().join("resumed/snap_00000000.bin").exists());
}

#[test]
fn resume_rejects_mismatched_grid() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_small(tmp.path(), "full", &["--set", "integrator.t_end=0"]).status.success());
    let snap = tmp.path().join("full/snap_00000000.bin");
    let o = mswave(&["resume", snap.to_str().unwrap(), "--set", "grid.n=32"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extract_qmhd_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_small(tmp.path(), "out", &["--set", "output.snapshot_every=1"]).status.success());
    let o = mswave(&["extract-qmhd", "out", "--tests", "2"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("out/qmhd.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,mass,momentum_x,momentum_y,momentum_z,qmhd_energy,energy,stress_tensor,stress_trace"
    );
    assert_eq!(lines.count(), 21);
    let weak = std::fs::read_to_string(tmp.path().join("out/weak_residuals.csv")).unwrap();
    assert_eq!(weak.lines().count(), 3);
}

#[test]
fn probe_estimates_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mswave(&["probe-estimates", "--n", "16", "--samples", "3", "--out", "p"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("p/probes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("p/probes.json")).unwrap()).unwrap();
    assert_eq!(json["reports"].as_array().unwrap().len(), 11);
}

#[test]
fn convergence_study_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mswave(
        &[
            "convergence-study",
            "--values",
            "4e-3,2e-3",
            "--set",
            "grid.n=16",
            "--set",
            "integrator.t_end=0.04",
            "--set",
            "output.out_dir=\"s\"",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("s/convergence_dt.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn unknown_subcommand_fails() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(!mswave(&["frobnicate"], tmp.path()).status.success());
}
