use std::process::Command;

fn sgbk(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sgbk")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn exit_codes() {
    assert_eq!(sgbk(&["hierarchy", "--order", "3"]).0, 0);
    assert_eq!(sgbk(&["conservation"]).0, 1);
    assert_eq!(sgbk(&["conservation", "--allow-paper-diff"]).0, 0);
    assert_eq!(sgbk(&["nonlinearize", "--check", "bogus"]).0, 2);
}

#[test]
fn simulate_json_and_csv() {
    let dir = std::env::temp_dir().join(format!("sgbk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("traj.csv");
    let args = [
        "simulate", "--N", "1", "--span", "0:0.1", "--dt", "0.01", "--seed", "5", "--json",
        "--trajectory", csv.to_str().unwrap(), "--stride", "5",
    ];
    let (code, a) = sgbk(&args);
    let (_, b) = sgbk(&args);
    assert_eq!(a, b);
    let report: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["config"]["K"], 4);
    assert_eq!(report["data"]["steps"], 10);
    // printed f_1 drifts; everything else is within tolerance
    assert_eq!(code, 1);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 3);
    assert_eq!(lines[0].split(',').count(), 1 + 8 * 16);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn latex_output() {
    let (code, out) = sgbk(&["hierarchy", "--order", "1", "--latex"]);
    assert_eq!(code, 0);
    assert!(out.contains("b_{1} &= -k_0 \\\\\n"), "{out}");
    assert!(out.contains("\\rho_{1} &= -\\alpha k_0"), "{out}");
}
