use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn narrowgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_narrowgap"))
        .args(args)
        .env_remove("NARROWGAP_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = narrowgap(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn result(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

fn legend(svg: &Path, which: &str) -> f64 {
    let text = fs::read_to_string(svg).unwrap();
    let tag = format!("id=\"legend-{which}\"");
    let line = text
        .lines()
        .find(|l| l.contains(&tag))
        .expect("legend entry");
    let start = line.find(&format!(">{which} ")).unwrap() + which.len() + 2;
    let end = line[start..].find('<').unwrap() + start;
    line[start..end].parse().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn flat_solve_reports_every_flux_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flat");
    ok(&["solve", "--scene", "flat", "--out", p(&out)]);
    let r = result(&out);
    for key in [
        "a11", "a12", "a21", "a22", "b1", "b2", "f1", "f2", "C1", "C2", "alpha",
    ] {
        assert!(r[key].is_f64(), "{key}");
    }
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["mode"], "two_inclusion");
    for f in [
        "vertices.csv",
        "triangles.csv",
        "field_u.csv",
        "field_v3.csv",
        "grad_u.csv",
        "profile.csv",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn zero_data_gives_zero_potentials() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("zero.json");
    let out = dir.path().join("zero");
    ok(&["solve", "--scene", "strict", "--out", p(&out)]);
    let mut cfg: Value =
        serde_json::from_str(&fs::read_to_string(out.join("scene.json")).unwrap()).unwrap();
    cfg["boundary_data"] = serde_json::json!({"phi": "zero"});
    fs::write(&scene, cfg.to_string()).unwrap();
    ok(&["solve", "--scene", p(&scene), "--out", p(&out)]);
    let r = result(&out);
    assert_eq!(r["C1"].as_f64(), Some(0.0));
    assert_eq!(r["C2"].as_f64(), Some(0.0));
}

#[test]
fn invalid_scene_exits_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("bad.json");
    fs::write(
        &scene,
        r#"{"schema_version":1,"profile":{"flat_halfwidth":0.5,"neck_halfwidth":1.0,"growth_order":2,"coeff_upper":0.0,"coeff_lower":0.0},"epsilon":0.01,"closure_height":1.5,"outer_radius":6.0}"#,
    )
    .unwrap();
    let out = dir.path().join("bad");
    let o = narrowgap(&["solve", "--scene", p(&scene), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    fs::write(&scene, r#"{"schema_version": 7}"#).unwrap();
    let o = narrowgap(&["solve", "--scene", p(&scene), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = narrowgap(&["solve", "--scene", "no_such_preset", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = narrowgap(&[
        "solve",
        "--scene",
        "strict",
        "--tol",
        "1e-300",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn worker_count_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_narrowgap"))
        .args(["solve", "--scene", "strict", "--out", p(dir.path())])
        .env("NARROWGAP_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rerun_reproduces_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&[
        "solve",
        "--scene",
        "quartic",
        "--workers",
        "1",
        "--out",
        p(&a),
    ]);
    let scene = a.join("scene.json");
    ok(&[
        "solve",
        "--scene",
        p(&scene),
        "--workers",
        "1",
        "--out",
        p(&b),
    ]);
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in names {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn gradient_plot_legend_matches_result() {
    let dir = tempfile::tempdir().unwrap();
    for preset in ["strict", "flat"] {
        let out = dir.path().join(preset);
        ok(&[
            "solve",
            "--scene",
            preset,
            "--eps",
            "0.005",
            "--out",
            p(&out),
        ]);
        let svg = out.join("gap.svg");
        ok(&[
            "plot",
            "--out",
            p(&out),
            "--field",
            "grad_u",
            "--region",
            "gap",
            "--svg",
            p(&svg),
        ]);
        let want = result(&out)["grad_max_gap"].as_f64().unwrap();
        let got = legend(&svg, "max");
        assert!(
            (got - want).abs() <= 1e-3 * want,
            "{preset}: {got} vs {want}"
        );
        let text = fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
        assert!(text.matches("<polygon").count() > 100);
    }
}

#[test]
fn potential_plot_stays_in_unit_interval_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    ok(&["solve", "--scene", "strict", "--out", p(&out)]);
    let (a, b) = (out.join("a.svg"), out.join("b.svg"));
    ok(&["plot", "--out", p(&out), "--field", "v1", "--svg", p(&a)]);
    ok(&["plot", "--out", p(&out), "--field", "v1", "--svg", p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (lo, hi) = (legend(&a, "min"), legend(&a, "max"));
    assert!(lo >= 0.0 && hi <= 1.0 && hi > lo);
}

#[test]
fn plot_without_stored_fields_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = narrowgap(&["plot", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let out = dir.path().join("s");
    ok(&["solve", "--scene", "strict_boundary", "--out", p(&out)]);
    let o = narrowgap(&["plot", "--out", p(&out), "--field", "v3"]);
    assert_eq!(o.status.code(), Some(2));
    ok(&["plot", "--out", p(&out), "--field", "v0"]);
}

#[test]
fn sweep_writes_rows_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    let stdout = ok(&[
        "sweep",
        "--scene",
        "strict",
        "--eps-grid",
        "0.04,0.02,0.01,0.005",
        "--out",
        p(&out),
    ]);
    assert!(stdout.contains("neg_a11"));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let fits: Value =
        serde_json::from_str(&fs::read_to_string(out.join("fits.json")).unwrap()).unwrap();
    assert_eq!(fits["completed"], 4);
    let slope = fits["fits"]["neg_a11"]["slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() < 0.1, "{slope}");

    let o = narrowgap(&[
        "sweep",
        "--scene",
        "strict",
        "--eps-grid",
        "0.01,0.02,0.005,0.001",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_prints_the_closed_form() {
    let stdout = ok(&[
        "oracle",
        "--n",
        "2",
        "--m",
        "2",
        "--r0",
        "0.5",
        "--r1",
        "1",
        "--eps-grid",
        "1e-2,1e-4",
    ]);
    let doc: Value = serde_json::from_str(&stdout).unwrap();
    for row in doc["rows"].as_array().unwrap() {
        let eps = row["epsilon"].as_f64().unwrap();
        let exact = 2.0 * (0.5 / eps.sqrt()).atan() / eps.sqrt();
        let got = row["off_sigma"].as_f64().unwrap();
        assert!((got - exact).abs() <= 1e-8 * exact);
    }
    let o = narrowgap(&["oracle", "--eps-grid", "2.0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["verify", "--out", p(dir.path())]);
    assert!(!stdout.contains("FAIL"));
    let doc: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == true));
}
