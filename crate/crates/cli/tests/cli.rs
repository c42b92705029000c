use std::process::Command;

use serde_json::Value;

fn qdl(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qdl"))
        .args(args)
        .output()
        .expect("run qdl");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn report(stdout: &str) -> Value {
    let v: Value = serde_json::from_str(stdout).expect("JSON output");
    assert_eq!(v["schema_version"], 1);
    v["report"].clone()
}

#[test]
fn count_example() {
    let (code, out, _) = qdl(&["count", "--form", "1,1,-1,-1", "--bound", "1"]);
    assert_eq!(code, 0);
    let r = report(&out);
    assert_eq!(r["count"], 33);
    assert_eq!(r["B"], 1);
    let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["form", "B", "region", "primitive", "count", "method", "seconds"]);
}

#[test]
fn count_methods_agree() {
    let mut counts = Vec::new();
    for m in ["brute", "mitm"] {
        let (code, out, _) = qdl(&["count", "--form", "1,2,-3,1", "--bound", "7", "--method", m]);
        assert_eq!(code, 0);
        counts.push(report(&out)["count"].as_u64().unwrap());
    }
    assert_eq!(counts[0], counts[1]);
}

#[test]
fn expsum_example() {
    let (code, out, _) = qdl(&["expsum", "--form", "1,1,1,-1", "--q", "3", "--c", "0,0,0,0"]);
    assert_eq!(code, 0);
    let r = report(&out);
    assert_eq!(r["rounded"], -18);
    let (_, mult, _) = qdl(&["expsum", "--form", "1,1,1,-1", "--q", "12", "--method", "mult"]);
    let (_, direct, _) = qdl(&["expsum", "--form", "1,1,1,-1", "--q", "12"]);
    assert_eq!(report(&mult)["rounded"], report(&direct)["rounded"]);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qdl(&[]).0, 2);
    assert_eq!(qdl(&["count", "--form", "1,1,-1,-1"]).0, 2);
    assert_eq!(qdl(&["count", "--form", "1,x", "--bound", "1"]).0, 2);
    assert_eq!(qdl(&["expsum", "--form", "1,1,1,-1", "--q", "3", "--c", "1,0"]).0, 2);
    assert_eq!(qdl(&["frobnicate"]).0, 2);
}

#[test]
fn computation_failure_exits_one() {
    // Square discriminant for n = 4.
    let (code, _, err) = qdl(&["density", "--form", "1,1,-1,-1", "--series"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn sweep_writes_csv_and_json() {
    let dir = std::env::temp_dir().join(format!("qdl-sweep-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"corpus": {"seed": 5, "n_values": [4, 5], "coeff_range": [1, 5], "count": 3,
            "constraints": {"nonsquare_disc": true}},
           "b_values": [4, 8], "densities": false, "majorant": false}"#,
    )
    .unwrap();
    let csv = dir.join("rows.csv");
    let json = dir.join("report.json");
    let run = || {
        let (code, _, err) = qdl(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
            "--json",
            json.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        (std::fs::read(&csv).unwrap(), std::fs::read(&json).unwrap())
    };
    let first = run();
    assert_eq!(first, run());
    let text = String::from_utf8(first.0).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    assert!(text.starts_with("form,n,b,count,"));
    let doc: Value = serde_json::from_slice(&first.1).unwrap();
    assert_eq!(doc["kind"], "sweep");
    assert_eq!(doc["report"]["rows"].as_array().unwrap().len(), 6);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn selftest_subset() {
    let (code, out, err) = qdl(&["selftest", "--only", "4,7"]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("PASS [ 4]"));
    let r = report(&out);
    assert_eq!(r.as_array().unwrap().len(), 2);
}
