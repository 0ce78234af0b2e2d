use assert_cmd::Command;
use predicates::prelude::*;
use std::io::Write;

fn msrlab() -> Command {
    Command::cargo_bin("msrlab").unwrap()
}

fn scenario(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn classify_distinct_payoffs_is_case_3() {
    msrlab()
        .args(["classify", "--payoffs", "0,1,2,3"])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"case\":3"));
}

#[test]
fn classify_case_table() {
    for (payoffs, case) in [
        ("5,5,5,5", 0),
        ("0,1,1,1", 1),
        ("0,1,1,2", 1),
        ("0,1,0,1", 2),
        ("0,1,2,3", 3),
    ] {
        msrlab()
            .args(["classify", "--payoffs", payoffs])
            .assert()
            .success()
            .stdout(predicate::str::contains(format!("\"case\":{case}")));
    }
}

#[test]
fn classify_rejects_too_few_states() {
    msrlab()
        .args(["classify", "--payoffs", "0,1,2"])
        .assert()
        .code(2);
}

#[test]
fn classify_case_2_emits_adversarial_structure() {
    msrlab()
        .args(["classify", "--payoffs", "0,1,0,1", "--mass", "1/4"])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"witness_prior\":[\"1/4\",\"1/4\",\"1/4\",\"1/4\"]"))
        .stdout(predicate::str::contains("\"witness_value\":\"1/2\""));
}

#[test]
fn check_separable_example1_returns_the_known_witness() {
    msrlab()
        .args(["check-separable", &scenario("example1.json")])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"verdict\":\"non_separable\""))
        .stdout(predicate::str::contains("\"value\":\"3/2\""))
        .stdout(predicate::str::contains("\"w2\":\"3/8\""));
}

#[test]
fn check_kappa_example2_is_non_separable() {
    msrlab()
        .args(["check-kappa", &scenario("example2.json")])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"verdict\":\"non_separable\""));
}

#[test]
fn simulate_z_signal_scenario_reproduces_the_known_trace() {
    // rational_mode in the file forces exact branch enumeration
    msrlab()
        .args(["simulate", &scenario("example1_zsignal.json"), "--state", "w1"])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"announcement\":\"6/5\""))
        .stdout(predicate::str::contains("{\"type\":\"converged\",\"value\":\"0\"}"));
}

#[test]
fn simulate_without_menu_stalls_at_the_common_value() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let text = std::fs::read_to_string(scenario("example1.json"))
        .unwrap()
        .replace("\"menu\": { \"family\": { \"event\": [\"w1\", \"w2\"] } }", "\"menu\": {}");
    f.write_all(text.as_bytes()).unwrap();
    let out = msrlab()
        .args(["simulate", f.path().to_str().unwrap(), "--exact"])
        .assert()
        .success()
        .stdout(predicate::str::contains("{\"type\":\"stalled\",\"value\":\"3/2\"}"));
    let stdout = String::from_utf8(out.get_output().stdout.clone()).unwrap();
    assert_eq!(stdout.lines().count(), 4); // one branch per true state
}

#[test]
fn sweep_cost_shows_the_jump() {
    let out = msrlab()
        .args(["sweep-cost", &scenario("example1.json"), "--c-grid", "6:1:3"])
        .assert()
        .success()
        .stdout(predicate::str::starts_with("c,a_market,a_poll,jumped\n"));
    let stdout = String::from_utf8(out.get_output().stdout.clone()).unwrap();
    let jumped: Vec<bool> = stdout
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.ends_with(",1"))
        .collect();
    assert_eq!(jumped, vec![false, false, true, true]);
    assert!(stdout.contains("# threshold,4"));
}

#[test]
fn sweep_cost_rejects_bad_grid() {
    msrlab()
        .args(["sweep-cost", &scenario("example1.json"), "--c-grid", "1:1:6"])
        .assert()
        .code(2);
}

#[test]
fn value_is_zero_for_the_non_separable_scenario() {
    msrlab()
        .args(["value", &scenario("example2.json"), "--denominator", "8"])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"value\":0.0"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let run = || {
        let out = msrlab()
            .args(["simulate", &scenario("example1.json"), "--seed", "42"])
            .assert()
            .success();
        out.get_output().stdout.clone()
    };
    assert_eq!(run(), run());
    let sweep = || {
        let out = msrlab()
            .args(["sweep-cost", &scenario("example1.json"), "--c-grid", "6:1:3"])
            .assert()
            .success();
        out.get_output().stdout.clone()
    };
    assert_eq!(sweep(), sweep());
}

#[test]
fn bundled_scenarios_all_load_and_run() {
    for name in [
        "example1.json",
        "example2.json",
        "adversarial_4state.json",
        "example1_zsignal.json",
    ] {
        msrlab()
            .args(["check-separable", &scenario(name)])
            .assert()
            .success();
        msrlab()
            .args(["poll", &scenario(name), "--exact"])
            .assert()
            .success();
    }
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cls.json");
    msrlab()
        .args(["classify", "--payoffs", "0,1,2,3", "--out", path.to_str().unwrap()])
        .assert()
        .success()
        .stdout(predicate::str::is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"case\":3"));
}

#[test]
fn malformed_scenario_exits_2() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(b"{\"states\": [\"w1\"]}").unwrap();
    msrlab()
        .args(["check-separable", f.path().to_str().unwrap()])
        .assert()
        .code(2);
    msrlab()
        .args(["check-separable", "/nonexistent/path.json"])
        .assert()
        .code(2);
}

#[test]
fn unknown_verb_exits_2() {
    msrlab().arg("frobnicate").assert().code(2);
}

#[test]
fn unknown_state_exits_2() {
    msrlab()
        .args(["simulate", &scenario("example1.json"), "--state", "w9"])
        .assert()
        .code(2);
}
