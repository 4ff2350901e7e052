use std::process::{Command, Output};

fn ffavg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffavg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gauss_magnitude() {
    let out = ffavg(&["gauss", "--q", "7"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["q"], 7);
    assert!((v["magnitude_over_sqrt_q"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    // q = 7 is 3 mod 4, so G = i sqrt(7).
    assert!(v["re"].as_f64().unwrap().abs() < 1e-9);
    assert!((v["im"].as_f64().unwrap() - 7f64.sqrt()).abs() < 1e-9);
}

#[test]
fn fourier_check_passes() {
    let out = ffavg(&["fourier", "check", "--q", "3", "--d", "2", "--trials", "5"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["passed"], true);
}

#[test]
fn variety_info_fields() {
    let out = ffavg(&["variety", "--kind", "cone", "--q", "3", "--d", "3", "info"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["size"], 9);
    for key in ["size_ratio", "max_decay", "decay_ratio", "branch_histogram"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn norm_reports_an_estimate() {
    let out = ffavg(&[
        "norm", "--variety", "circle", "--q", "3", "--d", "2", "--p", "1", "--r", "inf",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["method"], "endpoint-exact");
    assert!((v["lower_bound"].as_f64().unwrap() - 2.25).abs() < 1e-12);
}

#[test]
fn region_lists_vertices_and_markers() {
    let out = ffavg(&["region", "--theorem", "main2", "--d", "4", "--grid", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("marker-P1,3/4,1/2,excluded-restricted"));
    assert!(text.contains("vertex,3/5,1/5,"));
    assert_eq!(text.lines().filter(|l| l.starts_with("cell,")).count(), 25);
    let necessary = ffavg(&["region", "--theorem", "necessary", "--d", "4", "--alpha", "2", "--grid", "4"]);
    assert!(necessary.status.success());
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("run{k}.json"));
        let out = ffavg(&[
            "sweep", "--variety", "circle", "--d", "2", "--point", "3/4,1/2", "--primes", "3,5,7",
            "--method", "search", "--budget", "32", "--seed", "5", "--format", "json", "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let v: serde_json::Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_csv_to_stdout() {
    let out = ffavg(&["sweep", "--variety", "circle", "--d", "2", "--point", "1,1/2", "--primes", "3,5,7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn exit_codes() {
    let cap = ffavg(&["sweep", "--variety", "cone", "--d", "6", "--point", "1/2,1/2", "--primes", "5,13,17"]);
    assert_eq!(cap.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&cap.stderr).contains("4826809"));
    let bad = ffavg(&["gauss", "--q", "9"]);
    assert_eq!(bad.status.code(), Some(1));
    let few = ffavg(&["sweep", "--variety", "circle", "--d", "2", "--point", "1/2,1/2", "--primes", "3,5"]);
    assert_eq!(few.status.code(), Some(1));
    let usage = ffavg(&["nonsense"]);
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn scan_emits_one_row_per_cell() {
    let out = ffavg(&[
        "scan", "--variety", "circle", "--d", "2", "--grid", "1", "--primes", "3,5,7", "--budget", "8",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
}
