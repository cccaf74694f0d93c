use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_carnot-kit"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn liouville(args: &[&str]) -> Output {
    bin().arg("check-liouville").args(args).output().unwrap()
}

#[test]
fn liouville_exit_codes() {
    let fails = liouville(&["--Q", "10", "--p", "2", "--q", "2", "--a", "5", "--b", "5"]);
    assert_eq!(code(&fails), 3);
    let v: serde_json::Value = serde_json::from_slice(&fails.stdout).unwrap();
    assert_eq!(v["condition_holds"], false);

    let holds = liouville(&["--Q", "3", "--p1", "2", "--p2", "2", "--a", "7", "--b", "2"]);
    assert_eq!(code(&holds), 0);
    let v: serde_json::Value = serde_json::from_slice(&holds.stdout).unwrap();
    assert_eq!(v["condition_holds"], true);
    assert_eq!(v["inputs"]["exact"], true);

    let parabolic = liouville(&["--Q", "2", "--p", "2", "--q", "3", "--a", "1", "--b", "1"]);
    assert_eq!(code(&parabolic), 0);
    let v: serde_json::Value = serde_json::from_slice(&parabolic.stdout).unwrap();
    assert_eq!(v["route"], "parabolic");
    assert_eq!(v["conclusion"], "constant_components");

    let bad = liouville(&["--Q", "3", "--p", "1", "--q", "2", "--a", "1", "--b", "1"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn minimal_run_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, jobs: &str| {
        let out = dir.path().join(sub);
        let o = bin()
            .args(["run", "--config"])
            .arg(config("minimal.toml"))
            .args(["--jobs", jobs, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out.join("report.json")).unwrap(), std::fs::read_to_string(out.join("estimates.csv")).unwrap())
    };
    let (j1, c1) = run("a", "1");
    let (j2, c2) = run("b", "1");
    let (j3, c3) = run("c", "2");
    // The config echo carries the output directory and job count; every
    // computed number must agree byte for byte.
    let checks = |j: &[u8]| {
        let v: serde_json::Value = serde_json::from_slice(j).unwrap();
        serde_json::to_string(&v["checks"]).unwrap()
    };
    assert_eq!(checks(&j1), checks(&j2));
    assert_eq!(checks(&j1), checks(&j3));
    assert_eq!(c1, c2);
    assert_eq!(c1, c3);
    assert_eq!(c1.lines().next().unwrap(), "check_id,R,lhs,rhs,margin,stderr,samples,seed");
    let v: serde_json::Value = serde_json::from_slice(&j1).unwrap();
    assert_eq!(v["exit_code"], 0);
    assert!(v["checks"][0]["anchor"].as_str().unwrap().starts_with("weak solution"));
}

#[test]
fn csv_format_skips_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["verify-estimates", "--config"])
        .arg(config("minimal.toml"))
        .args(["--samples", "2000", "--format", "csv", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(!dir.path().join("report.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(6) == Some("2000")), "{csv}");
}

#[test]
fn tampered_constants_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", "--config"])
        .arg(config("tampered_c1.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("c1"));
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("minimal.toml")).unwrap();
    for (i, broken) in [
        text.replace("\"caccioppoli\"", "\"no_such_check\""),
        text.replace("seed = 1", ""),
        text.replace("name = \"zero\"", "name = \"unknown_source\""),
        text.replace("dim = 3", "dim = 3\nextra = true"),
    ]
    .iter()
    .enumerate()
    {
        let p = dir.path().join(format!("bad{i}.toml"));
        std::fs::write(&p, broken).unwrap();
        let o = bin().args(["run", "--config"]).arg(&p).output().unwrap();
        assert_eq!(code(&o), 2, "case {i}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = bin().arg("run").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn cosine_example_classifies_through_the_power_condition() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", "--config"])
        .arg(config("cosine_example.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let find = |name: &str| {
        let all = v["checks"].as_array().unwrap();
        all.iter().find(|c| c["check"] == name).unwrap()["detail"].clone()
    };
    let classify = find("classify");
    assert_eq!(classify["route"], "power_condition");
    assert_eq!(classify["conclusion"], "no_nonconstant_weak_solutions");
    assert_eq!(find("liouville")["condition_holds"], true);
}
