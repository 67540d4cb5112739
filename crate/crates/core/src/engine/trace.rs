//! Execution traces: ordered move records with enough detail to replay a
//! run exactly and to audit per-rule move counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::state::{Configuration, ProcState, WriteSet};
use crate::topology::ProcId;

/// Rule identifier, 1-based to match the algorithm listings.
pub type RuleId = u8;

/// One applied move: which process moved, by which rule, which neighbor the
/// guard's existential bound (if any), and the records it wrote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub step: usize,
    pub proc: ProcId,
    pub rule: RuleId,
    pub witness: Option<ProcId>,
    pub writes: BTreeMap<ProcId, ProcState>,
}

impl MoveRecord {
    pub fn write_set(&self) -> WriteSet {
        WriteSet::new(self.writes.iter().map(|(&i, &s)| (i, s)).collect())
    }
}

/// A complete serial run: initial configuration, every move in order, the
/// final configuration, and whether the move budget ran out first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub initial: Configuration,
    pub moves: Vec<MoveRecord>,
    pub final_config: Configuration,
    /// True when the run stopped because it hit the move budget while some
    /// process was still enabled.
    pub budget_exhausted: bool,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Moves per `(process, rule)`, for auditing move-count caps.
    pub fn move_counts(&self) -> BTreeMap<(ProcId, RuleId), usize> {
        let mut counts = BTreeMap::new();
        for m in &self.moves {
            *counts.entry((m.proc, m.rule)).or_insert(0) += 1;
        }
        counts
    }

    /// Reapplies the recorded writes from the initial configuration and
    /// returns the resulting configuration sequence (length `moves + 1`).
    pub fn replay(&self) -> Vec<Configuration> {
        let mut seq = Vec::with_capacity(self.moves.len() + 1);
        seq.push(self.initial.clone());
        for m in &self.moves {
            let next = seq.last().unwrap().with_writes(&m.write_set());
            seq.push(next);
        }
        seq
    }

    /// One JSON object per line, one line per move.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for m in &self.moves {
            out.push_str(&serde_json::to_string(m).expect("move serialization cannot fail"));
            out.push('\n');
        }
        out
    }

    /// Parses the format produced by [`Trace::to_jsonl`] back into records.
    pub fn moves_from_jsonl(text: &str) -> Result<Vec<MoveRecord>, serde_json::Error> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }
}
