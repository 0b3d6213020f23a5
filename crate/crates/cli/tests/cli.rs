use std::process::{Command, Output};

fn kedlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kedlab"))
        .args(args)
        .env_remove("KEDLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV body without the `#` header lines.
fn rows(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_owned)
        .collect()
}

#[test]
fn validate_three_dimensions_finds_order_four() {
    let o = kedlab(&["validate", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("m_measured=4 m_predicted=4"), "{text}");
    assert!(text.contains("n_failures=0"));
}

#[test]
fn validate_json_carries_config_and_summary() {
    let o = kedlab(&["validate", "--dim", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["command"], "validate");
    assert_eq!(v["config"]["max_order"], 4);
    assert_eq!(v["result"]["summary"]["m_measured"], 2);
    assert!(v["result"]["cells"].as_array().unwrap().len() > 4);
}

#[test]
fn check_reports_marginal_class() {
    let o = kedlab(&["check", "--dim", "1", "--term", "0,0,1"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&o);
    assert_eq!(r.len(), 1);
    assert!(r[0].contains("PeriodicMarginal"), "{}", r[0]);
    assert!(r[0].ends_with("false,true"), "{}", r[0]);
}

#[test]
fn enumerate_lists_seven_terms_in_two_dimensions() {
    let o = kedlab(&["enumerate", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&o).len(), 7);
    let periodic = kedlab(&["enumerate", "--dim", "2", "--periodic"]);
    assert_eq!(rows(&periodic).len(), 12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["probe", "--term", "0,1", "--term", "3", "--profile", "hydrogenic", "--profile", "gauss:a=1,D=3"];
    let a = kedlab(&args);
    let b = kedlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let a = kedlab(&["validate", "--dim", "2", "--format", "json"]);
    let b = kedlab(&["validate", "--dim", "2", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_kedlab"))
            .args(["validate", "--dim", "3"])
            .env("KEDLAB_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.status.code(), Some(0));
    let strip = |o: &Output| rows(o).join("\n");
    assert_eq!(strip(&one), strip(&four));
}

#[test]
fn bad_term_is_a_usage_error_with_grammar() {
    let o = kedlab(&["check", "--dim", "3", "--term", "1,0"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n1,n2,...,nm"), "{err}");
}

#[test]
fn bad_profile_lists_known_ids() {
    let o = kedlab(&["probe", "--term", "2", "--profile", "lorentz:w=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hydrogenic | ho1d"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(kedlab(&["enumerate"]).status.code(), Some(1));
    assert_eq!(kedlab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(kedlab(&["--help"]).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_kedlab"))
        .args(["enumerate", "--dim", "1"])
        .env("KEDLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn disagreement_exits_with_two() {
    // a tolerance this tight cannot be met by a finite window on hydrogen
    let o = kedlab(&["probe", "--term", "0,1", "--profile", "hydrogenic", "--tol", "1e-9"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn fit_recovers_von_weizsacker() {
    let o = kedlab(&["fit", "--profile", "exp:b=1.5,D=3", "--reference", "vw", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let a: Vec<f64> = v["result"]["a"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(a[0].abs() < 1e-8 && (a[1] - 1.0).abs() < 1e-8 && a[2].abs() < 1e-8, "{a:?}");
}

#[test]
fn output_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("kedlab-cli-{}.csv", std::process::id()));
    let o = kedlab(&["enumerate", "--dim", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.starts_with("# kedlab "));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 12);
}
