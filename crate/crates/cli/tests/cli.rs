use std::process::{Command, Output};

use qpc_sim::{run_session, SessionConfig};
use qpc_sim_cli::{execute, parse_args, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn qpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpc-sim"))
        .args(args)
        .env_remove("QPC_SIM_SEED")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

/// Asserts `v` has exactly `expected` keys, appearing in that order in the
/// pretty-printed `raw` at nesting `depth`.
fn assert_keys(raw: &str, depth: usize, v: &Value, expected: &[&str]) {
    let mut got: Vec<_> = v.as_object().unwrap().keys().map(String::as_str).collect();
    let mut want = expected.to_vec();
    got.sort_unstable();
    want.sort_unstable();
    assert_eq!(got, want);
    let positions: Vec<_> = expected
        .iter()
        .map(|k| {
            raw.find(&format!("\n{}\"{k}\":", "  ".repeat(depth)))
                .unwrap()
        })
        .collect();
    assert!(
        positions.windows(2).all(|w| w[0] < w[1]),
        "field order {expected:?}"
    );
}

#[test]
fn run_json_schema_is_pinned() {
    let out = qpc(&[
        "run", "--users", "2", "--bits", "4", "--secret", "5", "--secret", "5", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = json_of(&out);
    let raw = String::from_utf8(out.stdout.clone()).unwrap();
    assert_keys(
        &raw,
        1,
        &v,
        &[
            "schema_version",
            "config",
            "mode",
            "secrets",
            "matrix",
            "metrics",
            "aggregate",
            "transcript_digest",
        ],
    );
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["mode"], "e");
    assert_keys(
        &raw[raw.find("\"config\":").unwrap()..],
        2,
        &v["config"],
        &[
            "users",
            "bits",
            "decoys",
            "adversary",
            "seed",
            "trials",
            "secrets",
        ],
    );
    assert_keys(
        &raw[raw.find("\"metrics\":").unwrap()..],
        2,
        &v["metrics"],
        &[
            "compared_bits",
            "consumed_particles",
            "decoy_particles",
            "qubit_efficiency",
            "qubit_efficiency_gross",
            "aborted",
            "detection_rate",
            "zero_coverage",
            "decoys_checked",
            "mismatches",
            "verdicts",
        ],
    );
    assert_keys(
        &raw[raw.find("\"aggregate\":").unwrap()..],
        2,
        &v["aggregate"],
        &[
            "trials",
            "aborts",
            "detection_rate",
            "expected_detection_rate",
            "oracle_disagreements",
            "tapped_decoys_checked",
            "tapped_mismatches",
            "tapped_mismatch_rate",
        ],
    );
    let matrix: Value = serde_json::from_str(r#"[["self","equal"],["equal","self"]]"#).unwrap();
    assert_eq!(v["matrix"], matrix);
    assert_eq!(v["secrets"], serde_json::json!(["0b0101", "0b0101"]));
    assert_eq!(v["metrics"]["qubit_efficiency"], "1/4");
    assert_eq!(v["transcript_digest"].as_str().unwrap().len(), 64);
    assert!(v.get("transcript").is_none());
}

#[test]
fn json_round_trips_config() {
    for argv in [
        "qpc-sim run --users 3 --bits 8 --seed 42 --format json",
        "qpc-sim run --users 4 --bits 5 --decoys 2 --adversary dishonest-user:2 --basis x --tap all --trials 3 --format json",
        "qpc-sim run --users 2 --bits 3 --secret 0b101 --secret 0x2 --adversary measure-resend --tap 2 --format json",
    ] {
        let spec = parse_args(argv.split_whitespace()).unwrap();
        let exec = execute(&spec).unwrap();
        let v: Value = serde_json::from_str(&exec.text).unwrap();
        let back: SessionConfig = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(&back, spec.config().unwrap(), "{argv}");
    }
}

#[test]
fn transcript_dump_matches_digest() {
    let out = qpc(&[
        "run",
        "--users",
        "3",
        "--bits",
        "4",
        "--seed",
        "7",
        "--format",
        "json",
        "--dump-transcript",
    ]);
    let v = json_of(&out);
    let mut c = SessionConfig::new(3, 4);
    c.seed = 7;
    let session = run_session(&c).unwrap();
    assert_eq!(v["transcript_digest"], session.transcript.digest());
    let dumped: Value = serde_json::from_str(&session.transcript.to_json()).unwrap();
    assert_eq!(v["transcript"], dumped);
}

#[test]
fn exit_codes() {
    assert_eq!(
        qpc(&["run", "--users", "1"]).status.code(),
        Some(EXIT_USAGE)
    );
    assert_eq!(
        qpc(&["run", "--secret", "0b102"]).status.code(),
        Some(EXIT_USAGE)
    );
    assert_eq!(qpc(&["run", "--bogus"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(qpc(&["sweep"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(qpc(&["run"]).status.code(), Some(EXIT_OK));
    assert_eq!(qpc(&["verify"]).status.code(), Some(EXIT_OK));
    // expected adversarial aborts are not failures
    let attacked = qpc(&[
        "run",
        "--adversary",
        "intercept-resend",
        "--decoys",
        "20",
        "--trials",
        "20",
    ]);
    assert_eq!(attacked.status.code(), Some(EXIT_OK));
    let unwritable = qpc(&[
        "run",
        "--output",
        "/nonexistent-dir/out.json",
        "--format",
        "json",
    ]);
    assert_eq!(unwritable.status.code(), Some(EXIT_FAILURE));
    assert!(String::from_utf8_lossy(&unwritable.stderr).contains("cannot write"));
}

#[test]
fn zero_decoys_warns() {
    let out = qpc(&["run", "--decoys", "0"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero decoys"));
}

#[test]
fn sweep_csv_arity() {
    let out = qpc(&[
        "sweep",
        "--adversary",
        "intercept-resend",
        "--decoys",
        "1,5,10,20",
        "--trials",
        "25",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(
        lines[0],
        "users,bits,decoys,trial,i,j,verdict,aborted,detection"
    );
    assert_eq!(lines.len(), 1 + 25 * 4);
    assert!(lines.iter().all(|l| l.split(',').count() == 9));
}

#[test]
fn run_csv_has_one_row_per_trial_and_pair() {
    let out = qpc(&["run", "--users", "3", "--trials", "4", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "trial,i,j,verdict,aborted,detection");
    assert_eq!(lines.len(), 1 + 4 * 3);
    assert_eq!(
        lines[1].split(',').take(3).collect::<Vec<_>>(),
        ["0", "1", "2"]
    );
}

#[test]
fn table_names_the_mode() {
    let out = qpc(&["run", "--users", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mode: (e) scattered preparation, one-way convergent"));
    let out = qpc(&["sweep", "--users", "2,3"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("mode: (e)"));
}

#[test]
fn verify_reports_each_invariant() {
    let out = qpc(&["verify"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().all(|l| l.starts_with("[PASS]")));
    let v = json_of(&qpc(&["verify", "--format", "json"]));
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"][0]["cases"], 4);
}

#[test]
fn seed_env_override_and_output_file() {
    let from_flag = qpc(&["run", "--seed", "123", "--format", "json"]);
    let from_env = Command::new(env!("CARGO_BIN_EXE_qpc-sim"))
        .args(["run", "--format", "json"])
        .env("QPC_SIM_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(from_flag.stdout, from_env.stdout);
    let path = std::env::temp_dir().join(format!("qpc-sim-test-{}.json", std::process::id()));
    let to_file = qpc(&[
        "run",
        "--seed",
        "123",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(to_file.status.code(), Some(EXIT_OK));
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), from_flag.stdout);
    let _ = std::fs::remove_file(path);
}

#[test]
fn help_exits_zero() {
    assert_eq!(qpc(&["--help"]).status.code(), Some(EXIT_OK));
}
