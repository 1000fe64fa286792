use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fracmesh::mesh::{make_initial_mesh, Domain, MeshFile};

const HEADER: &str =
    "m,solved,totcost,cumcost,total_dofs,union_dofs,eta_triangle,eta_union,error_ref,theta_eff,wall_ms";

fn fracmesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmesh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn rows(dir: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(dir.join("log.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn small_run(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--s",
        "0.5",
        "--domain",
        "unit-square",
        "--f",
        "testII",
        "--initial-cells",
        "32",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    fracmesh(&args)
}

#[test]
fn seed_check_prints_problem_counts() {
    let o = fracmesh(&["run", "--seed-check", "--kappa", "0.26"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for (s, n) in [
        ("0.1", 408),
        ("0.3", 176),
        ("0.5", 149),
        ("0.7", 176),
        ("0.9", 408),
    ] {
        assert!(out.contains(&format!("N({s}) = {n}")), "{out}");
    }
}

#[test]
fn uniform_run_records_every_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmesh(&[
        "run",
        "--s",
        "0.3",
        "--mode",
        "uniform",
        "--max-iter",
        "5",
        "--initial-cells",
        "32",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = rows(dir.path());
    assert_eq!(rows.len(), 5);
    // a 4x4 grid of squares, halved in each direction per step
    let n: usize = rows[0][1].parse().unwrap();
    for (k, r) in rows.iter().enumerate() {
        let side = (4usize << k) - 1;
        assert_eq!(r[4], (n * side * side).to_string(), "m = {k}");
        assert_eq!(r[1], n.to_string());
    }
    for m in 0..5 {
        assert!(dir.path().join(format!("mesh_m{m:04}.txt")).exists());
    }
}

#[test]
fn tolerance_stop_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["--tol", "1e3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("stop = tolerance reached"));
    let echo = fs::read_to_string(dir.path().join("config.echo")).unwrap();
    for key in [
        "s = 0.5",
        "domain = unit-square",
        "f = testII",
        "theta = 0.5",
        "k = 1",
        "kappa = 0.26",
        "mode = multimesh",
        "max_iter = 60",
        "N = 149",
    ] {
        assert!(echo.lines().any(|l| l == key), "missing '{key}' in\n{echo}");
    }
    assert_eq!(rows(dir.path()).len(), 1);
    let sol = fs::read_to_string(dir.path().join("solution.txt")).unwrap();
    assert_eq!(sol.lines().next(), Some("nodes 25"));
}

#[test]
fn identical_flags_reproduce_the_log() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = small_run(d.path(), &["--tol", "1e-9", "--max-iter", "4"]);
        assert_eq!(o.status.code(), Some(2));
    }
    let strip = |rows: Vec<Vec<String>>| -> Vec<Vec<String>> {
        rows.into_iter()
            .map(|mut r| {
                r.pop();
                r
            })
            .collect()
    };
    let (ra, rb) = (strip(rows(a.path())), strip(rows(b.path())));
    assert_eq!(ra.len(), 4);
    assert_eq!(ra, rb);
    // every row is a checkpoint with k = 1; reference columns are filled
    assert!(ra
        .iter()
        .all(|r| !r[7].is_empty() && !r[8].is_empty() && !r[9].is_empty()));
}

#[test]
fn checkpoint_columns_follow_k() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["--tol", "1e-9", "--max-iter", "5", "--k", "2"]);
    assert_eq!(o.status.code(), Some(2));
    for r in rows(dir.path()) {
        let m: usize = r[0].parse().unwrap();
        assert_eq!(!r[7].is_empty(), m % 2 == 0);
        assert_eq!(!r[5].is_empty(), m % 2 == 0);
    }
}

#[test]
fn lshape_has_no_reference_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmesh(&[
        "run",
        "--s",
        "0.5",
        "--domain",
        "lshape",
        "--initial-cells",
        "24",
        "--max-iter",
        "2",
        "--tol",
        "1e-9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    for r in rows(dir.path()) {
        assert!(r[8].is_empty() && r[9].is_empty());
        assert!(!r[7].is_empty());
    }
}

#[test]
fn export_round_trips_and_matches_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["--tol", "1e-9", "--max-iter", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let d = dir.path().to_str().unwrap();

    let zero = dir.path().join("zero.txt");
    let o = fracmesh(&["export-mesh", d, "--m", "0", "--out", zero.to_str().unwrap()]);
    assert!(o.status.success());
    let initial = MeshFile::from(&make_initial_mesh(Domain::UnitSquare, 32).unwrap()).to_text();
    assert_eq!(fs::read_to_string(&zero).unwrap(), initial);

    let first = fracmesh(&["export-mesh", d, "--m", "3"]);
    assert!(first.status.success());
    let stored = fs::read(dir.path().join("mesh_m0003.txt")).unwrap();
    assert_eq!(first.stdout, stored);
    // re-import the export and export again
    let copy = tempfile::tempdir().unwrap();
    fs::write(copy.path().join("mesh_m0003.txt"), &first.stdout).unwrap();
    let second = fracmesh(&["export-mesh", copy.path().to_str().unwrap(), "--m", "3"]);
    assert_eq!(second.stdout, first.stdout);

    let mesh = MeshFile::read(first.stdout.as_slice()).unwrap();
    let interior = mesh
        .vertices
        .iter()
        .filter(|p| p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0)
        .count();
    let rows = rows(dir.path());
    assert_eq!(rows[3][5], interior.to_string());
    assert!(fracmesh(&["export-mesh", d, "--m", "99"]).status.code() == Some(1));
}

#[test]
fn rates_need_fifteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let mut text = format!("{HEADER}\n");
    for m in 0..20 {
        let dofs = 100 * (m + 1) * (m + 1);
        let union = 10 * (m + 1);
        let eta = (dofs as f64).powf(-0.9);
        text += &format!(
            "{m},1,{dofs},{dofs},{dofs},{union},{:.16e},{eta:.16e},,,1.0\n",
            2.0 * eta
        );
    }
    fs::write(&log, &text).unwrap();
    let o = fracmesh(&["rates", log.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("rate eta_union = 1.8000"), "{out}");
    assert!(out.contains("rate eta_triangle = 1.8000"), "{out}");
    let o = fracmesh(&["rates", log.to_str().unwrap(), "--dofs", "total"]);
    let out = stdout(&o);
    assert!(out.contains("rate eta_union = 0.9000"), "{out}");
    assert!(out.contains("rate eta_triangle = 0.9000"), "{out}");

    let short: String = text.lines().take(15).map(|l| format!("{l}\n")).collect();
    fs::write(&log, short).unwrap();
    let o = fracmesh(&["rates", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window needs 15"));
}

#[test]
fn invalid_flags_fail() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["--theta", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fracmesh(&[
        "run",
        "--s",
        "0.5",
        "--f",
        "nope",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
