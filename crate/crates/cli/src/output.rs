//! JSON, CSV and table renderings of run, sweep and verify results.

use std::fmt::Write as _;

use qpc_sim::channel::{AdversaryKind, BasisPolicy, Taps};
use qpc_sim::session::modes::executed_mode;
use qpc_sim::session::{
    Cell, ComparisonMatrix, SessionMetrics, SessionOutcome, TrialRecord, TrialsSummary,
};
use qpc_sim::stats::intercept_detection_probability;
use qpc_sim::transcript::Transcript;
use qpc_sim::{Secret, SessionConfig};
use serde::{Deserialize, Serialize};

use crate::verify::CheckResult;

pub const SCHEMA_VERSION: u32 = 1;

/// Statistics over all trials of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: u64,
    pub aborts: u64,
    pub detection_rate: f64,
    /// `1 - (3/4)^(tapped links * d)` for an active adversary
    pub expected_detection_rate: Option<f64>,
    pub oracle_disagreements: u64,
    pub tapped_decoys_checked: u64,
    pub tapped_mismatches: u64,
    pub tapped_mismatch_rate: Option<f64>,
}

impl Aggregate {
    pub fn new(config: &SessionConfig, summary: &TrialsSummary) -> Self {
        let adversary = config.adversary;
        let tapped = config
            .user_ids()
            .filter(|&u| adversary.taps_link(u))
            .count();
        let exposed = (tapped * config.decoys) as u32;
        Self {
            trials: summary.trials,
            aborts: summary.aborts,
            detection_rate: summary.detection_rate,
            expected_detection_rate: adversary
                .is_active()
                .then(|| intercept_detection_probability(exposed)),
            oracle_disagreements: summary.oracle_disagreements,
            tapped_decoys_checked: summary.tapped_decoys_checked,
            tapped_mismatches: summary.tapped_mismatches,
            tapped_mismatch_rate: summary.tapped_mismatch_rate(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub schema_version: u32,
    pub config: &'a SessionConfig,
    pub mode: String,
    /// secrets used in trial 0
    pub secrets: &'a [Secret],
    pub matrix: &'a ComparisonMatrix,
    pub metrics: &'a SessionMetrics,
    pub aggregate: Aggregate,
    pub transcript_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<&'a Transcript>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint<'a> {
    pub config: &'a SessionConfig,
    pub aggregate: Aggregate,
}

#[derive(Debug, Serialize)]
pub struct SweepReport<'a> {
    pub schema_version: u32,
    pub points: Vec<SweepPoint<'a>>,
}

pub fn cell_str(c: Cell) -> &'static str {
    match c {
        Cell::SelfCell => "self",
        Cell::Equal => "equal",
        Cell::Unequal => "unequal",
        Cell::Aborted => "aborted",
    }
}

pub fn describe_adversary(config: &SessionConfig) -> String {
    let a = config.adversary;
    let kind = match a.kind {
        AdversaryKind::None => return "none".to_string(),
        AdversaryKind::InterceptResend => "intercept-resend".to_string(),
        AdversaryKind::MeasureResend => "measure-resend".to_string(),
        AdversaryKind::DishonestUser { actor } => format!("dishonest-user:{}", actor.0),
    };
    let basis = match a.basis_policy {
        BasisPolicy::RandomZOrX => "random",
        BasisPolicy::AlwaysZ => "z",
        BasisPolicy::AlwaysX => "x",
    };
    let taps = match a.taps {
        Taps::Link(u) => format!("{u}"),
        Taps::AllLinks => "all".to_string(),
    };
    format!("{kind} (basis {basis}, taps {taps})")
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn csv_rows(out: &mut String, prefix: &str, records: &[TrialRecord]) {
    for r in records {
        for p in &r.pairs {
            let _ = writeln!(
                out,
                "{prefix}{},{},{},{},{},{}",
                r.trial,
                p.i.0,
                p.j.0,
                cell_str(p.cell),
                r.aborted as u8,
                r.detected as u8
            );
        }
    }
}

const CSV_HEADER: &str = "trial,i,j,verdict,aborted,detection";

pub fn run_json(
    config: &SessionConfig,
    outcome: &SessionOutcome,
    summary: &TrialsSummary,
    dump_transcript: bool,
) -> String {
    let mode = executed_mode();
    json(&RunReport {
        schema_version: SCHEMA_VERSION,
        config,
        mode: mode.id.to_string(),
        secrets: &outcome.secrets,
        matrix: &outcome.matrix,
        metrics: &outcome.metrics,
        aggregate: Aggregate::new(config, summary),
        transcript_digest: outcome.transcript.digest(),
        transcript: dump_transcript.then_some(&outcome.transcript),
    })
}

pub fn run_csv(summary: &TrialsSummary) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    csv_rows(&mut out, "", &summary.records);
    out
}

fn mode_line() -> String {
    let mode = executed_mode();
    format!("mode: ({}) {}", mode.id, mode.name)
}

fn matrix_table(out: &mut String, matrix: &ComparisonMatrix) {
    let _ = write!(out, "{:>6}", "");
    for j in 1..=matrix.users() {
        let _ = write!(out, " {:>8}", format!("P{j}"));
    }
    out.push('\n');
    for (i, row) in matrix.rows().iter().enumerate() {
        let _ = write!(out, "{:>6}", format!("P{}", i + 1));
        for &c in row {
            let _ = write!(out, " {:>8}", cell_str(c));
        }
        out.push('\n');
    }
}

fn opt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

pub fn run_table(
    config: &SessionConfig,
    outcome: &SessionOutcome,
    summary: &TrialsSummary,
) -> String {
    let m = &outcome.metrics;
    let agg = Aggregate::new(config, summary);
    let mut out = String::new();
    let _ = writeln!(out, "{}", mode_line());
    let _ = writeln!(
        out,
        "users {}  bits {}  decoys {}  seed {}  trials {}",
        config.users, config.bits, config.decoys, config.seed, config.trials
    );
    let _ = writeln!(out, "adversary: {}", describe_adversary(config));
    out.push_str("secrets (trial 0):\n");
    for (i, s) in outcome.secrets.iter().enumerate() {
        let _ = writeln!(out, "  P{} {s}", i + 1);
    }
    out.push_str("comparison matrix (trial 0):\n");
    matrix_table(&mut out, &outcome.matrix);
    out.push_str("metrics (trial 0):\n");
    let rows: [(&str, String); 9] = [
        ("aborted", m.aborted.to_string()),
        ("compared bits", m.compared_bits.to_string()),
        ("consumed particles", m.consumed_particles.to_string()),
        ("decoy particles", m.decoy_particles.to_string()),
        ("qubit efficiency", m.qubit_efficiency.to_string()),
        (
            "qubit efficiency with decoys",
            m.qubit_efficiency_gross.to_string(),
        ),
        ("decoys checked", m.decoys_checked.to_string()),
        ("decoy mismatches", m.mismatches.to_string()),
        ("zero decoy coverage", m.zero_coverage.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "  {k:<30} {v}");
    }
    if summary.trials > 1 || config.adversary.is_active() {
        let _ = writeln!(out, "aggregate over {} trials:", agg.trials);
        let rows: [(&str, String); 5] = [
            ("aborts", agg.aborts.to_string()),
            ("detection rate", format!("{:.4}", agg.detection_rate)),
            (
                "expected detection rate",
                opt_rate(agg.expected_detection_rate),
            ),
            (
                "tapped-link mismatch rate",
                opt_rate(agg.tapped_mismatch_rate),
            ),
            ("oracle disagreements", agg.oracle_disagreements.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "  {k:<30} {v}");
        }
    }
    let _ = writeln!(out, "transcript digest: {}", outcome.transcript.digest());
    out
}

pub fn sweep_json(points: &[(SessionConfig, TrialsSummary)]) -> String {
    json(&SweepReport {
        schema_version: SCHEMA_VERSION,
        points: points
            .iter()
            .map(|(c, s)| SweepPoint {
                config: c,
                aggregate: Aggregate::new(c, s),
            })
            .collect(),
    })
}

pub fn sweep_csv(points: &[(SessionConfig, TrialsSummary)]) -> String {
    let mut out = format!("users,bits,decoys,{CSV_HEADER}\n");
    for (c, s) in points {
        csv_rows(
            &mut out,
            &format!("{},{},{},", c.users, c.bits, c.decoys),
            &s.records,
        );
    }
    out
}

pub fn sweep_table(points: &[(SessionConfig, TrialsSummary)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", mode_line());
    if let Some((c, _)) = points.first() {
        let _ = writeln!(out, "adversary: {}  seed {}", describe_adversary(c), c.seed);
    }
    let _ = writeln!(
        out,
        "{:>5} {:>5} {:>6} {:>7} {:>7} {:>9} {:>9} {:>9} {:>8}",
        "users", "bits", "decoys", "trials", "aborts", "detect", "expected", "mismatch", "oracle_x"
    );
    for (c, s) in points {
        let a = Aggregate::new(c, s);
        let _ = writeln!(
            out,
            "{:>5} {:>5} {:>6} {:>7} {:>7} {:>9.4} {:>9} {:>9} {:>8}",
            c.users,
            c.bits,
            c.decoys,
            a.trials,
            a.aborts,
            a.detection_rate,
            opt_rate(a.expected_detection_rate),
            opt_rate(a.tapped_mismatch_rate),
            a.oracle_disagreements
        );
    }
    out
}

pub fn verify_json(checks: &[CheckResult]) -> String {
    #[derive(Serialize)]
    struct VerifyReport<'a> {
        schema_version: u32,
        passed: bool,
        checks: &'a [CheckResult],
    }
    json(&VerifyReport {
        schema_version: SCHEMA_VERSION,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

pub fn verify_csv(checks: &[CheckResult]) -> String {
    let mut out = String::from("check,cases,failures,passed\n");
    for c in checks {
        let _ = writeln!(
            out,
            "\"{}\",{},{},{}",
            c.name.replace('"', "\"\""),
            c.cases,
            c.failures,
            c.passed
        );
    }
    out
}

pub fn verify_table(checks: &[CheckResult]) -> String {
    let mut out = String::new();
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "[{tag}] {} ({} cases, {} failures)",
            c.name, c.cases, c.failures
        );
    }
    out
}
