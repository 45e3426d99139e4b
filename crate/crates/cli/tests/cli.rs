use std::path::Path;
use std::process::Command;

use mrof_core::io::{field_from_json, field_to_json};
use mrof_core::verify::StudyReport;
use mrof_core::{Field, Grid64, Manifold64, SolveReport};

fn mrof() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mrof"));
    c.env_remove("MROF_THREADS");
    c
}

fn sphere_input(dir: &Path) -> std::path::PathBuf {
    let m = Manifold64::sphere(2);
    let g = Grid64::interval(64).unwrap();
    let f = Field::new(
        (0..64)
            .map(|i| {
                let th: f64 = if i < 32 { 0.6 } else { 1.0 } + 0.03 * ((i * 7 % 11) as f64 - 5.0) / 5.0;
                let ph = 0.3 + 0.005 * i as f64;
                mrof_core::Point::new(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()])
            })
            .collect(),
    );
    let path = dir.join("f.json");
    std::fs::write(&path, field_to_json(&m, &g, &f).unwrap()).unwrap();
    path
}

#[test]
fn denoise_writes_readable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = sphere_input(dir.path());
    let out = dir.path().join("u.json");
    let status = mrof()
        .args(["denoise", "--manifold", "sphere:2", "--grid", "interval:64", "--lambda", "4", "--schedule", "default"])
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let (m, g, u) = field_from_json::<f64>(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(m, Manifold64::sphere(2));
    assert_eq!(g.len(), 64);
    assert_eq!(u.len(), 64);
    let reports: Vec<SolveReport<f64>> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("u.report.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), 6);
    assert!(reports.last().unwrap().flags.converged);
    let trace = std::fs::read_to_string(dir.path().join("u.trace.csv")).unwrap();
    assert!(trace.starts_with("iter,tv,fidelity,dirichlet,total\n"));
    let rows = reports.iter().map(|r| r.energy_trace.len()).sum::<usize>();
    assert_eq!(trace.lines().count(), rows + 1);
}

#[test]
fn denoise_with_schedule_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = sphere_input(dir.path());
    let sched = dir.path().join("s.json");
    std::fs::write(&sched, r#"[{"eps":0.1,"sigma":0.05},{"eps":0.01}]"#).unwrap();
    let out = dir.path().join("u.json");
    let status = mrof()
        .args(["denoise", "--lambda", "4"])
        .arg("--input")
        .arg(&input)
        .arg("--schedule")
        .arg(&sched)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let reports: Vec<SolveReport<f64>> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("u.report.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), 2);
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = sphere_input(dir.path());
    let out = dir.path().join("u.json");
    let cases: Vec<Vec<String>> = vec![
        vec!["verify".into(), "nonsense".into()],
        vec!["verify".into(), "convexity".into(), "--manifold".into(), "sphere:2".into()],
        vec!["verify".into(), "roundtrip".into(), "--manifold".into(), "torus:2".into()],
        vec!["denoise".into(), "--lambda".into(), "1".into()],
        vec!["frobnicate".into()],
        vec![
            "denoise".into(),
            "--manifold".into(),
            "hyperbolic:2".into(),
            "--input".into(),
            input.display().to_string(),
            "--out".into(),
            out.display().to_string(),
            "--lambda".into(),
            "1".into(),
        ],
        vec![
            "denoise".into(),
            "--input".into(),
            input.display().to_string(),
            "--out".into(),
            out.display().to_string(),
            "--lambda".into(),
            "1".into(),
            "--eps".into(),
            "0".into(),
        ],
    ];
    for args in cases {
        let o = mrof().args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!err.trim().is_empty());
    }
}

#[test]
fn verify_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("radii.json");
    let o = mrof().args(["verify", "radii", "--out"]).arg(&out).output().unwrap();
    assert!(o.status.success());
    let r: StudyReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.passed);
    let csv = std::fs::read_to_string(dir.path().join("radii.csv")).unwrap();
    assert!(csv.starts_with("case,margin,threshold,pass\n"));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("radii: PASS"));
}

#[test]
fn spec_examples() {
    let o = mrof()
        .args([
            "verify",
            "convexity",
            "--manifold",
            "hyperbolic:2",
            "--grid",
            "circle:16",
            "--trials",
            "100",
            "--seed",
            "7",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = mrof().args(["oracle-compare", "--grid", "interval:64", "--lambda", "8", "--seed", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let gap: f64 = stdout.lines().find_map(|l| l.strip_prefix("max gap ")).unwrap().parse().unwrap();
    assert!(gap <= 1e-3);
}

#[test]
fn threads_come_from_environment() {
    let o = mrof().env("MROF_THREADS", "0").args(["verify", "radii"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = mrof().env("MROF_THREADS", "3").args(["verify", "radii"]).output().unwrap();
    assert!(o.status.success());
}
