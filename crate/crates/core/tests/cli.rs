use std::io::Write;
use std::process::{Command, Output};

fn gausslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gausslab"))
        .args(args)
        .env_remove("GAUSSLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
}

#[test]
fn sum_examples() {
    let o = gausslab(&["sum", "--q", "5", "--k", "2", "--a", "1", "--m", "0", "--n", "5"]);
    assert!(o.status.success());
    let abs: f64 = value(&stdout(&o), "abs").parse().unwrap();
    assert!((abs - 2.236_068_0).abs() < 1e-7);

    let o = gausslab(&["sum", "--q", "101", "--k", "3", "--a", "1", "--m", "0", "--n", "0"]);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "abs"), "0");
}

#[test]
fn composite_modulus_is_a_usage_error() {
    let o = gausslab(&["sum", "--q", "4", "--k", "2", "--a", "1", "--m", "0", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q must be prime"));
    assert_eq!(gausslab(&["sum", "--q", "5"]).status.code(), Some(2));
    assert_eq!(gausslab(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn count_examples() {
    let o = gausslab(&["count", "jr", "--r", "2", "--k", "2", "--v", "10"]);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "count"), "190");

    let o = gausslab(&["count", "mult", "--q", "101", "--n", "10", "--u", "1"]);
    assert_eq!(value(&stdout(&o), "count"), "10");

    // brute force over all 15^4 tuples of (n, u) ∈ [1,5] × [1,3]
    let pts: Vec<(u64, u64)> = (1..=5).flat_map(|n| (1..=3).map(move |u| (n, u))).collect();
    let f = |(n, u): (u64, u64), j: u32| n.pow(j) * u.pow(4 - j) % 31;
    let mut brute = 0;
    for &a in &pts {
        for &b in &pts {
            for &c in &pts {
                for &d in &pts {
                    if (0..4).all(|j| (f(a, j) + f(b, j)) % 31 == (f(c, j) + f(d, j)) % 31) {
                        brute += 1;
                    }
                }
            }
        }
    }
    let o = gausslab(&["count", "ikl", "--k", "4", "--ell", "2", "--q", "31", "--n", "5", "--u", "3", "--oracle"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(value(&text, "count"), brute.to_string());
    assert_eq!(value(&text, "oracle"), brute.to_string());
}

#[test]
fn caps_exit_with_one() {
    let o = gausslab(&["count", "jr", "--r", "3", "--k", "3", "--v", "100", "--backend", "mitm", "--max-table", "1000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("memory cap"));
}

#[test]
fn generic_spec_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "modulus = 7\nn = 1..5\npairs = 1\nequation = n\nequation = n^2").unwrap();
    let path = f.path().to_str().unwrap();
    let o = gausslab(&["count", "generic", "--spec", path, "--collect"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(value(&text, "count"), "5");
    assert_eq!(text.lines().filter(|l| l.starts_with("solution = ")).count(), 5);

    let o = gausslab(&["--json", "count", "generic", "--spec", path]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["count"], 5);

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "modulus = 7\nwidth = 3").unwrap();
    let o = gausslab(&["count", "generic", "--spec", bad.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn verify_examples() {
    for args in [
        &["verify", "--suite", "weil", "--qmax", "199", "--kmax", "8"][..],
        &["verify", "--suite", "backend-equiv", "--cases", "100", "--seed", "7"],
        &["verify", "--suite", "params", "--kmax", "50"],
    ] {
        let o = gausslab(args);
        assert!(o.status.success(), "{args:?}: {}", stdout(&o));
        assert!(stdout(&o).contains("status=pass"));
    }
}

#[test]
fn verify_output_is_deterministic() {
    let a = gausslab(&["--threads", "1", "verify", "--suite", "lemma1", "--seed", "3"]);
    let b = gausslab(&["--threads", "4", "verify", "--suite", "lemma1", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        format!(
            "primes = 101, 103\ndegrees = 3..5\nexponents = 0.5, 1.0\nscan = max\noutput = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = gausslab(&["--threads", "2", "sweep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read_to_string(&out).unwrap();
    assert_eq!(first.lines().count(), 1 + 2 * 3 * 2);
    assert!(first.starts_with("q,k,a,M,N,re,im,abs,err,thm1,thm1_valid,weyl,weyl_valid,weil,best,ratio_thm1\n"));

    let o = gausslab(&["--threads", "1", "sweep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);

    std::fs::write(&cfg, "primes = 101\ndegrees = 3\nlengths = 5\ncolour = blue\n").unwrap();
    assert_eq!(gausslab(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_flags_and_json() {
    let o = gausslab(&["--json", "sweep", "--primes", "101", "--degrees", "3", "--lengths", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1);
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["N"], 50);
    assert!(v["abs"].as_f64().unwrap() <= 50.0);
    assert_eq!(gausslab(&["sweep", "--primes", "100", "--degrees", "3", "--lengths", "5"]).status.code(), Some(2));
}

#[test]
fn thread_count_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_gausslab"))
        .args(["bounds", "--q", "101", "--k", "3", "--n", "50"])
        .env("GAUSSLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_gausslab"))
        .args(["bounds", "--q", "101", "--k", "3", "--n", "50"])
        .env("GAUSSLAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("best = weyl"));
}
