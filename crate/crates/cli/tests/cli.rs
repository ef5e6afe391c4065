use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hecke-expsum"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hecke-expsum-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn tau_prints_first_values() {
    let o = run(&["tau", "--limit", "7", "--out", "-"]);
    assert!(o.status.success());
    let taus: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(
        taus,
        ["1", "-24", "252", "-1472", "4830", "-6048", "-16744"]
    );
}

#[test]
fn tau_cache_round_trip() {
    let cache = scratch("tau.bin");
    let _ = std::fs::remove_file(&cache);
    let c = cache.to_str().unwrap();
    let a = run(&["tau", "--limit", "50", "--tau-cache", c]);
    assert!(a.status.success() && cache.exists());
    let b = run(&["tau", "--limit", "30", "--tau-cache", c, "--out", "json"]);
    assert!(b.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&b)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 30);
    assert_eq!(v[11]["tau"], "-370944");
}

#[test]
fn verify_quick_passes_and_ignores_thread_count() {
    let one = bin()
        .args(["verify", "--quick"])
        .env("EXPSUM_THREADS", "1")
        .output()
        .unwrap();
    let four = bin()
        .args(["--threads", "4", "verify", "--quick"])
        .env_remove("EXPSUM_THREADS")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(four.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert!(!stdout(&one).contains("FAIL"));
}

#[test]
fn expsum_breakdown_sums_to_total() {
    let o = run(&[
        "expsum",
        "--gamma",
        "0.97",
        "--coeffs",
        "b",
        "--range",
        "10000:20000",
        "--Q",
        "40",
        "--breakdown",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let arcs = v["arcs"].as_array().unwrap();
    assert!(!arcs.is_empty());
    let (re, im) = arcs.iter().fold((0.0, 0.0), |(r, i), a| {
        (
            r + a["value"]["re"].as_f64().unwrap(),
            i + a["value"]["im"].as_f64().unwrap(),
        )
    });
    assert!((re - v["value"]["re"].as_f64().unwrap()).abs() < 1e-9);
    assert!((im - v["value"]["im"].as_f64().unwrap()).abs() < 1e-9);
    let terms: u64 = arcs.iter().map(|a| a["terms"].as_u64().unwrap()).sum();
    assert_eq!(terms, 10_000);
}

#[test]
fn expsum_is_reproducible_with_seeded_conditions() {
    let args = [
        "--seed",
        "11",
        "expsum",
        "--gamma",
        "0.97",
        "--range",
        "1000:2000",
        "--check-conditions",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["conditions"]["monotone"], true);
}

#[test]
fn psprimes_and_chars_csv() {
    let o = run(&["psprimes", "--c", "1.02", "--N", "1000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,c,count,prediction,ratio_count,sum_lambda_sq,ratio_sum,sign_changes"
    );
    assert!(lines.next().unwrap().starts_with("1000,1.02,"));

    let path = scratch("chars.csv");
    let o = run(&["chars", "--q", "5", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("index,residue,re,im\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 5);
}

#[test]
fn farey_csv_header() {
    let o = run(&[
        "farey",
        "--gamma",
        "0.97",
        "--range",
        "10000:20000",
        "--Q",
        "20",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("q,l,arc_lo,arc_hi,x_lo,x_hi,x0\n"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["tau"]).status.code(), Some(2));
    assert_eq!(
        run(&["psprimes", "--c", "1.0", "--N", "100"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["expsum", "--gamma", "0.9", "--range", "100:500"])
            .status
            .code(),
        Some(2)
    );
}
