use std::path::Path;
use std::process::{Command, Output};

use tubal::io;
use tubal::Tensor3;

fn tubal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubal"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn tubal")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tnn_of_identity_tensor() {
    let dir = tempfile::tempdir().unwrap();
    // 4×4×3 identity: first frontal slice is I, the rest zero
    let x = Tensor3::from_fn(4, 4, 3, |i, j, k| if k == 0 && i == j { 1.0 } else { 0.0 });
    io::write_tensor(&x, dir.path().join("id.tlt")).unwrap();
    let o = tubal(&["tnn", "--in", "id.tlt"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 12.0).abs() < 1e-12, "{v}");
}

#[test]
fn metrics_of_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let x = Tensor3::from_fn(3, 4, 2, |i, j, k| (i + 2 * j + 5 * k) as f64 * 0.1);
    io::write_tensor(&x, dir.path().join("a.tlt")).unwrap();
    let o = tubal(
        &["metrics", "--in", "a.tlt", "--ref", "a.tlt", "--metrics-csv", "m.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("psnr=inf"), "{out}");
    assert!(out.contains("rse=0"), "{out}");

    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,solver,psnr_db,rse,f_measure,cluster_accuracy,iterations,wall_time_s,converged"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 9);
    assert_eq!(row[2], "inf");
    assert_eq!(row[3], "0");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tubal(&["bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(tubal(&["svt", "--in", "x.tlt"], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tubal(&["tnn", "--in", "nope.tlt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn synth_and_complete_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let run = |args: &[&str]| {
        let o = tubal(args, p);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["synth", "low_tubal_rank", "--dims", "20,20,6", "--rank", "2", "--seed", "3", "--out", "x.tlt"]);
    run(&["synth", "missing_mask", "--dims", "20,20,6", "--observed", "0.5", "--seed", "4", "--out", "m.tlt"]);
    run(&[
        "complete", "--in", "x.tlt", "--mask", "m.tlt", "--out", "r.tlt", "--ref", "x.tlt",
        "--metrics-csv", "m.csv", "--experiment", "lrtc-20",
    ]);
    let x = io::read_tensor(p.join("x.tlt")).unwrap();
    let r = io::read_tensor(p.join("r.tlt")).unwrap();
    assert_eq!(x.dims(), r.dims());
    let err = tubal::metrics::rse(&r, &x).unwrap();
    assert!(err < 1e-3, "rse {err}");

    let csv = std::fs::read_to_string(p.join("m.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..2], &["lrtc-20", "lrtc"]);
    assert_eq!(row[8], "true");
}

#[test]
fn tprod_svt_and_tsvd_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let a = Tensor3::from_fn(3, 4, 2, |i, j, k| ((i * 7 + j * 3 + k) % 5) as f64 - 2.0);
    let b = Tensor3::from_fn(4, 2, 2, |i, j, k| (i + j + k) as f64 * 0.5);
    io::write_tensor(&a, p.join("a.tlt")).unwrap();
    io::write_tensor(&b, p.join("b.tlt")).unwrap();
    assert!(tubal(&["tprod", "--in", "a.tlt", "--in2", "b.tlt", "--out", "c.tlt"], p).status.success());
    let c = io::read_tensor(p.join("c.tlt")).unwrap();
    let want = tubal::t_product(&a, &b).unwrap();
    assert_eq!(c, want);

    assert!(tubal(&["svt", "--in", "a.tlt", "--tau", "0", "--out", "s.tlt"], p).status.success());
    let s = io::read_tensor(p.join("s.tlt")).unwrap();
    assert!(tubal::metrics::rse(&s, &a).unwrap() < 1e-12);

    let o = tubal(&["tsvd", "--in", "a.tlt", "--out", "u.tlt", "--out2", "s.tlt", "--out3", "v.tlt"], p);
    assert!(o.status.success());
    assert_eq!(io::read_tensor(p.join("u.tlt")).unwrap().dims(), (3, 3, 2));
}

#[test]
fn cluster_reports_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(tubal(&["synth", "submodule_images", "--seed", "1", "--out", "i.tlt", "--out2", "t.txt"], p)
        .status
        .success());
    let o = tubal(&["cluster", "--in", "i.tlt", "--clusters", "3", "--truth", "t.txt", "--out", "l.txt"], p);
    assert!(o.status.success());
    assert!(stdout(&o).contains("accuracy=1"), "{}", stdout(&o));
    let labels = std::fs::read_to_string(p.join("l.txt")).unwrap();
    assert_eq!(labels.lines().count(), 45);
}
