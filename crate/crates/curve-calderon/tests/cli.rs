use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curve-calderon"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("curve-calderon-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn unknown_curve_preset_exits_2_without_output() {
    let dir = scratch("bad-curve");
    let cfg = dir.join("bad.toml");
    let out = dir.join("out");
    write(&cfg, "[curve]\npreset = \"no-such-curve\"\n");
    let st = bin().args(["run", "--quiet", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(2), "{}", String::from_utf8_lossy(&st.stderr));
    assert!(String::from_utf8_lossy(&st.stderr).contains("unknown curve preset"));
    assert!(!out.exists());
}

#[test]
fn unsorted_resolutions_are_a_config_error() {
    let dir = scratch("unsorted");
    let cfg = dir.join("s.json");
    write(&cfg, r#"{"resolutions": [0.04, 0.08, 0.02]}"#);
    let st = bin().args(["mesh", "--quiet", "--config"]).arg(&cfg).arg("--out").arg(dir.join("out")).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn mesh_subcommand_writes_the_ladder() {
    let dir = scratch("mesh");
    let out = dir.join("out");
    let st = bin().args(["mesh", "--quiet", "--resolution", "0.08", "--out"]).arg(&out).output().unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let csv = std::fs::read_to_string(out.join("h0.08").join("mesh.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("node_id,patch_id"), "{header}");
    assert!(csv.lines().count() > 100);
}

#[test]
fn forward_at_one_lambda_reports_the_solver() {
    let dir = scratch("forward");
    let out = dir.join("out");
    let st = bin()
        .args(["forward", "--quiet", "--resolution", "0.08", "--lambda", "3.0,-1.0", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let point = out.join("h0.08").join("lambda0");
    for f in ["mu.csv", "q_true.csv", "solver_report.json"] {
        assert!(point.join(f).exists(), "missing {f}");
    }
    assert!(!point.join("boundary_data.json").exists());
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(point.join("solver_report.json")).unwrap()).unwrap();
    assert_eq!(rep["lambda"][0].as_f64(), Some(3.0));
    assert_eq!(rep["lambda"][1].as_f64(), Some(-1.0));
}
