use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expint-bench"))
}

#[test]
fn order_conditions_exit_zero_and_write_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("oc.csv");
    let st = bench().args(["order-conditions", "--samples", "3", "--out"]).arg(&out).status().unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("scheme,cond1"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn converge_writes_csv_and_respects_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    std::fs::write(&cfg, "problem = manufactured\nschemes = rb_euler\ndts = 0.2, 0.1, 0.05, 0.025\ntol = 1e-6\n").unwrap();
    let out = dir.path().join("nested/conv.csv");
    let o = bench().args(["converge", "--tol", "1e-10", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rb_euler: order"));
}

#[test]
fn check_jacobian_passes_on_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("swe.cfg");
    std::fs::write(&cfg, "problem = swe_planar\nnx = 8\nny = 8\n").unwrap();
    let o = bench().args(["check-jacobian", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 41);
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "problem = manufactured\nno_such_key = 1\ndts = 0.1\n").unwrap();
    let o = bench().args(["converge", "--config"]).arg(&cfg).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_key"));
    let o = bench().args(["run", "--config", "/nonexistent/file"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/file"));
}
