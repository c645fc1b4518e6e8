use std::process::Command;

use serde_json::Value;

fn erw(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_erw"))
        .args(args)
        .env_remove("ERW_SEED")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("not JSON ({e}): {s}"))
}

fn result<'a>(v: &'a Value, name: &str) -> &'a Value {
    v["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == name)
        .unwrap_or_else(|| panic!("no result {name}"))
}

#[test]
fn certify_nine_and_five() {
    let (code, out, _) = erw(&["certify", "--d", "9", "--tol", "1e-4"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["verdict"], "monotone-all-beta");
    assert!(result(&v, "total")["value"].as_f64().unwrap() < 1.0);
    assert!(v["meta"]["timestamp"].is_u64());

    let (code, out, _) = erw(&["certify", "--d", "5", "--no-timestamp"]);
    assert_eq!(code, 3);
    let v = json(&out);
    assert_eq!(v["verdict"], "divergent");
    assert!(result(&v, "total")["value"].is_null());

    let (code, out, _) = erw(&["certify", "--d", "8"]);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["verdict"], "monotone-small-beta");
}

#[test]
fn crosscheck_passes() {
    let (code, out, _) = erw(&["crosscheck", "--d", "2", "--beta", "0.5", "--mmax", "5"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["verdict"], "pass");
    assert_eq!(result(&v, "mismatched orders")["value"], 0.0);
}

#[test]
fn every_result_is_self_describing() {
    for args in [
        vec!["greens", "--d", "8", "--n", "2", "--tol", "1e-5", "--series-terms", "10"],
        vec!["constants", "--d", "7"],
        vec!["bounds", "--d", "9", "--beta", "1/2", "--levels", "3"],
        vec!["expansion", "--d", "3", "--beta", "1/2", "--mmax", "4"],
        vec!["simulate", "--d", "3", "--beta", "0.5", "--steps", "50", "--replicas", "20"],
        vec!["scan", "--d", "3", "--betas", "0,0.5,1", "--steps", "50", "--replicas", "20", "--estimator", "both"],
    ] {
        let (code, out, err) = erw(&args);
        assert_eq!(code, 0, "{args:?}: {err}");
        let v = json(&out);
        assert_eq!(v["meta"]["command"], args[0]);
        assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
        assert!(v["meta"]["config"].is_object());
        for r in v["results"].as_array().unwrap() {
            for key in ["name", "value", "error", "units", "paper_anchor"] {
                assert!(r.get(key).is_some(), "{args:?}: {r} lacks {key}");
            }
            assert!(!r["paper_anchor"].as_str().unwrap().is_empty());
        }
    }
}

#[test]
fn expansion_reports_exact_values() {
    let (code, out, _) = erw(&["expansion", "--d", "1", "--beta", "1", "--mmax", "3"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(result(&v, "drift[1]")["exact"], "1");
    let (code, _, err) = erw(&["expansion", "--d", "3", "--beta", "0.5", "--tail-d", "4"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn usage_and_resource_errors() {
    assert_eq!(erw(&[]).0, 2);
    assert_eq!(erw(&["certify"]).0, 2);
    assert_eq!(erw(&["simulate", "--d", "2", "--beta", "1.5"]).0, 2);
    assert_eq!(erw(&["simulate", "--d", "2", "--beta", "0.5", "--steps", "10", "--window", "20"]).0, 2);
    assert_eq!(erw(&["scan", "--d", "2", "--betas", "1,0.5"]).0, 2);
    assert_eq!(erw(&["certify", "--d", "9", "--threads", "0"]).0, 2);
    let (code, _, err) = erw(&["greens", "--d", "4", "--n", "2"]);
    assert_eq!(code, 3);
    assert!(err.contains("diverges"), "{err}");
    let (code, _, err) = erw(&["crosscheck", "--d", "9", "--beta", "1", "--mmax", "9"]);
    assert_eq!(code, 3);
    assert!(err.contains("budget"), "{err}");
    assert_eq!(erw(&["--help"]).0, 0);
}

#[test]
fn seed_flag_beats_environment() {
    let base = ["simulate", "--d", "2", "--beta", "0.5", "--steps", "30", "--replicas", "10", "--no-timestamp"];
    let with_env = |seed: &str, extra: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_erw"))
            .args(base)
            .args(extra)
            .env("ERW_SEED", seed)
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    let env7 = with_env("7", &[]);
    assert_eq!(json(&env7)["meta"]["seed"], 7);
    let flag9 = with_env("7", &["--seed", "9"]);
    assert_eq!(json(&flag9)["meta"]["seed"], 9);
    let mut args = base.to_vec();
    args.extend(["--seed", "9"]);
    assert_eq!(erw(&args).1, flag9);
    assert_eq!(json(&erw(&base).1)["meta"]["seed"], 1);
}

#[test]
fn reports_are_byte_identical_across_thread_counts() {
    for args in [
        vec!["scan", "--d", "4", "--steps", "100", "--replicas", "64", "--seed", "5", "--no-timestamp"],
        vec!["simulate", "--d", "4", "--beta", "0.3", "--steps", "100", "--replicas", "64", "--no-timestamp"],
        vec!["certify", "--d", "10", "--no-timestamp"],
    ] {
        let runs: Vec<String> = ["1", "2", "5"]
            .iter()
            .map(|t| {
                let mut a = args.clone();
                a.extend(["--threads", t]);
                erw(&a).1
            })
            .collect();
        assert!(!runs[0].is_empty());
        assert!(runs.iter().all(|r| *r == runs[0]), "{args:?}");
    }
}

#[test]
fn scan_csv_columns_and_output_file() {
    let dir = std::env::temp_dir().join(format!("erw-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scan.csv");
    let (code, out, _) = erw(&[
        "scan", "--d", "1", "--betas", "0,1", "--steps", "20", "--replicas", "4", "--format", "csv", "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["beta,mean,stderr,diff,diff_stderr", "0,0,0,,", "1,1,0,1,0"]);
    std::fs::remove_dir_all(&dir).unwrap();

    let (_, out, _) = erw(&["constants", "--d", "9", "--format", "csv"]);
    assert!(out.starts_with("name,value,error,units,paper_anchor,exact\n"));
}
