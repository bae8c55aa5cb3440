//! End-to-end tests of the command-line surface: exit codes, file
//! schemas, sweep behavior, and the degenerate-thickness path.

use floquet_bilayer::assembler::find_det_zero_in_b;
use floquet_bilayer::DimensionlessParams;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_floquet-bilayer")
}

struct Workdir(PathBuf);

impl Workdir {
    fn new(tag: &str) -> Workdir {
        let dir = std::env::temp_dir().join(format!("floquet-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Workdir(dir)
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let path = self.0.join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        std::fs::remove_dir_all(&self.0).ok();
    }
}

fn run(args: &[&str], paths: &[&Path]) -> Output {
    let mut cmd = Command::new(bin());
    let mut path_iter = paths.iter();
    for a in args {
        if *a == "{}" {
            cmd.arg(path_iter.next().unwrap());
        } else {
            cmd.arg(a);
        }
    }
    cmd.output().unwrap()
}

const P0_BODY: &str = r#"{
    "omega": 1.0, "J1": 0.5, "Omega": 2.0, "U0": 1.0,
    "alpha_kx": 0.3, "beta_ky": 0.4, "b": 1.0,
    "m_base": 0, "n_len": 1,
    "free_coeffs": [[1, 0], [0, 0]],
    "fd": {"z_samples": 4, "t_samples": 3}
}"#;

#[test]
fn verify_passes_on_reference_config() {
    let dir = Workdir::new("verify");
    let cfg = dir.file("p0.json", P0_BODY);
    let report_path = dir.path("report.json");
    let out = run(
        &["verify", "--config", "{}", "--out", "{}"],
        &[&cfg, &report_path],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report["residual_algebraic"].as_f64().unwrap() <= 1e-12);
    assert!(report["residual_fd"]["max"].as_f64().unwrap() < 1e-4);
    let order = report["residual_fd"]["order"].as_f64().unwrap();
    assert!(order > 1.8 && order < 2.2);
    assert!(report["continuity"]["value"].as_f64().unwrap() <= 1e-10);
    assert!(report["boundary"].as_f64().unwrap() <= 1e-10);
    assert!(report["oracle_delta"].as_f64().unwrap() <= 1e-9);
    assert_eq!(
        report["feasibility"]["restricted"]["nullspace_dimension"],
        0
    );
    assert_eq!(
        report["feasibility"]["unconstrained"]["nullspace_dimension"],
        2
    );
    assert!(report["verdicts"]
        .as_object()
        .unwrap()
        .values()
        .all(|v| v.as_bool().unwrap()));
}

#[test]
fn verify_on_degenerate_thickness_passes_with_rank3_note() {
    let p = DimensionlessParams {
        omega: 1.0,
        j1: 0.5,
        eps_xy: 0.0,
        quasi_energy: 2.0,
        u0: 1.0,
        alpha_kx: 0.3,
        beta_ky: 0.4,
        b: 1.0,
        m_base: 0,
        n_len: 1,
    };
    let bstar = find_det_zero_in_b(&p, 1, 0.5, 12.0, 1e-12).unwrap();
    let dir = Workdir::new("degenerate");
    let cfg = dir.file(
        "deg.json",
        &format!(
            r#"{{
                "omega": 1.0, "J1": 0.5, "Omega": 2.0, "U0": 1.0,
                "alpha_kx": 0.3, "beta_ky": 0.4, "b": {bstar:.17e},
                "m_base": 0, "n_len": 1,
                "fd": {{"z_samples": 4, "t_samples": 3}}
            }}"#
        ),
    );
    let report_path = dir.path("report.json");
    let out = run(
        &["verify", "--config", "{}", "--out", "{}"],
        &[&cfg, &report_path],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let notes = report["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("rank-3")));
    assert!(report["oracle_delta"].is_null());
}

#[test]
fn sample_csv_boundary_rows_and_zero_solution() {
    let dir = Workdir::new("sample");
    let cfg = dir.file(
        "grid.json",
        r#"{
            "omega": 1.0, "J1": 0.5, "Omega": 2.0, "U0": 1.0,
            "alpha_kx": 0.3, "beta_ky": 0.4, "b": 1.0, "n_len": 1,
            "grid": {"z_min": -1.0, "z_count": 9, "t_count": 4}
        }"#,
    );
    let csv_path = dir.path("sample.csv");
    let out = run(
        &["sample", "--config", "{}", "--out", "{}"],
        &[&cfg, &csv_path],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 9 * 4);
    // last z row sits on the wall: field columns vanish
    for line in lines.iter().rev().take(4) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[6], "R");
        for c in &cols[2..6] {
            let v: f64 = c.parse().unwrap();
            assert!(v.abs() <= 1e-9, "wall row {line}");
        }
    }

    let cfg0 = dir.file(
        "zero.json",
        r#"{
            "omega": 1.0, "J1": 0.5, "Omega": 2.0, "U0": 1.0,
            "alpha_kx": 0.3, "beta_ky": 0.4, "b": 1.0, "n_len": 1,
            "free_coeffs": [[0, 0], [0, 0]],
            "grid": {"z_min": -1.0, "z_count": 3, "t_count": 2}
        }"#,
    );
    let csv0 = dir.path("zero.csv");
    let out = run(
        &["sample", "--config", "{}", "--out", "{}"],
        &[&cfg0, &csv0],
    );
    assert_eq!(out.status.code(), Some(0));
    for line in std::fs::read_to_string(&csv0).unwrap().lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        for c in &cols[2..6] {
            assert_eq!(*c, "0");
        }
    }
}

#[test]
fn sweep_rows_ordering_and_rejection() {
    let dir = Workdir::new("sweep");
    let cfg = dir.file("p0.json", P0_BODY);
    let csv_path = dir.path("sweep.csv");
    let out = run(
        &[
            "sweep",
            "--config",
            "{}",
            "--out",
            "{}",
            "--param",
            "b",
            "--range",
            "0.5:1.5:11",
        ],
        &[&cfg, &csv_path],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    let values: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]), "monotone values");
    assert!((values[0] - 0.5).abs() < 1e-12 && (values[10] - 1.5).abs() < 1e-12);

    // sweeping Omega down drives sidebands evanescent: rejected rows keep
    // the value and flag but leave the residual columns empty
    let csv2 = dir.path("sweep_omega.csv");
    let out = run(
        &[
            "sweep",
            "--config",
            "{}",
            "--out",
            "{}",
            "--param",
            "Omega",
            "--range",
            "0.2:3.0:8",
        ],
        &[&cfg, &csv2],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv2).unwrap();
    let rejected: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<&str>>())
        .filter(|cols| cols[1] == "false")
        .collect();
    assert!(!rejected.is_empty());
    for cols in rejected {
        assert!(cols[2].is_empty() && cols[3].is_empty());
    }

    // a sweep across a determinant zero shows a sign change in the
    // oscillatory factor column
    let csv3 = dir.path("sweep_det.csv");
    let out = run(
        &[
            "sweep",
            "--config",
            "{}",
            "--out",
            "{}",
            "--param",
            "b",
            "--range",
            "6.5:7.5:21",
        ],
        &[&cfg, &csv3],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv3).unwrap();
    let dets: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    assert!(
        dets.windows(2).any(|w| w[0] * w[1] < 0.0),
        "determinant factor must change sign across the zero: {dets:?}"
    );

    let out = run(
        &[
            "sweep", "--config", "{}", "--param", "nonsense", "--range", "0:1:2",
        ],
        &[&cfg],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_name_the_problem() {
    let dir = Workdir::new("badcfg");
    let bad = dir.file("bad.json", "{ \"omega\": 1.0, \n  \"oops\": 3 }");
    let out = run(&["solve", "--config", "{}"], &[&bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("oops") && err.contains("line"), "{err}");

    let missing = dir.path("absent.json");
    let out = run(&["solve", "--config", "{}"], &[&missing]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_prints_one_line_summary() {
    let dir = Workdir::new("summary");
    let cfg = dir.file("p0.json", P0_BODY);
    let out_path = dir.path("c.json");
    let out = run(
        &["solve", "--config", "{}", "--out", "{}"],
        &[&cfg, &out_path],
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].contains("scale") && lines[0].contains("free constants"));
}
