//! Monte-Carlo harness over many isolated trials.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_trial, Cell, ComparisonMatrix, SessionConfig, SessionError};
use crate::protocol::UserId;
use crate::transcript::Event;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairRecord {
    pub i: UserId,
    pub j: UserId,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub aborted: bool,
    pub detected: bool,
    pub oracle_agrees: bool,
    pub pairs: Vec<PairRecord>,
    pub tapped_decoys_checked: usize,
    pub tapped_mismatches: usize,
    pub transcript_digest: String,
}

/// Number of published report bits equal to 1 at one `(from, about, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReportBitFrequency {
    pub from: UserId,
    pub about: UserId,
    pub k: usize,
    pub ones: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialsSummary {
    pub trials: u64,
    pub aborts: u64,
    pub detection_rate: f64,
    /// non-aborted trials whose matrix differs from classical equality
    pub oracle_disagreements: u64,
    pub tapped_decoys_checked: u64,
    pub tapped_mismatches: u64,
    pub report_bits: Vec<ReportBitFrequency>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl TrialsSummary {
    /// Per-decoy mismatch rate on tapped links.
    pub fn tapped_mismatch_rate(&self) -> Option<f64> {
        (self.tapped_decoys_checked > 0)
            .then(|| self.tapped_mismatches as f64 / self.tapped_decoys_checked as f64)
    }
}

struct TrialResult {
    record: TrialRecord,
    reports: Vec<(UserId, UserId, Vec<bool>)>,
}

fn evaluate(config: &SessionConfig, trial: u64) -> Result<TrialResult, SessionError> {
    let out = run_trial(config, trial)?;
    let aborted = out.aborted();
    let oracle_agrees = aborted || out.matrix == ComparisonMatrix::oracle(&out.secrets);
    let reports = out
        .transcript
        .entries()
        .iter()
        .filter_map(|e| match &e.event {
            Event::ReportPublished { from, about, bits } => Some((*from, *about, bits.clone())),
            _ => None,
        })
        .collect();
    let tapped = out.links.iter().filter(|c| c.tapped);
    let record = TrialRecord {
        trial,
        aborted,
        detected: aborted && config.adversary.is_active(),
        oracle_agrees,
        pairs: out
            .matrix
            .pairs()
            .map(|(i, j, cell)| PairRecord { i, j, cell })
            .collect(),
        tapped_decoys_checked: tapped.clone().map(|c| c.check.decoys_checked).sum(),
        tapped_mismatches: tapped.map(|c| c.check.mismatches).sum(),
        transcript_digest: out.transcript.digest(),
    };
    Ok(TrialResult { record, reports })
}

/// Runs `config.trials` trials in parallel and folds them in trial order.
pub fn run_trials(config: &SessionConfig) -> Result<TrialsSummary, SessionError> {
    config.validate()?;
    let results: Vec<TrialResult> = (0..config.trials)
        .into_par_iter()
        .map(|t| evaluate(config, t))
        .collect::<Result<_, _>>()?;

    let mut aborts = 0;
    let mut detections = 0;
    let mut disagreements = 0;
    let mut checked = 0;
    let mut mismatches = 0;
    let mut bit_table: BTreeMap<(UserId, UserId, usize), (u64, u64)> = BTreeMap::new();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        aborts += r.record.aborted as u64;
        detections += r.record.detected as u64;
        disagreements += !r.record.oracle_agrees as u64;
        checked += r.record.tapped_decoys_checked as u64;
        mismatches += r.record.tapped_mismatches as u64;
        for (from, about, bits) in r.reports {
            for (k, bit) in bits.into_iter().enumerate() {
                let slot = bit_table.entry((from, about, k + 1)).or_default();
                slot.0 += bit as u64;
                slot.1 += 1;
            }
        }
        records.push(r.record);
    }
    Ok(TrialsSummary {
        trials: config.trials,
        aborts,
        detection_rate: detections as f64 / config.trials as f64,
        oracle_disagreements: disagreements,
        tapped_decoys_checked: checked,
        tapped_mismatches: mismatches,
        report_bits: bit_table
            .into_iter()
            .map(|((from, about, k), (ones, total))| ReportBitFrequency {
                from,
                about,
                k,
                ones,
                total,
            })
            .collect(),
        records,
    })
}
