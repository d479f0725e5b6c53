//! Execution traces: one record per resolved choice or REAL comparison.
//!
//! Records are appended in resolution order. Guard attempts that run out of
//! their local step cap are rolled back, so a trace contains only the events
//! of computations that actually decided the run. Refinements served from a
//! value's cache do not re-execute and therefore do not re-appear.
//!
//! Rendered format (one record per line, then a final result line):
//!
//! ```text
//! CHOOSE site=<file>:<line> states=<T|F|U...> picked=<i>
//! CMP site=<file>:<line> result=<0|1>
//! RESULT <value>
//! ```

use exact_core::BranchStatus;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Site {
    pub file: String,
    pub line: u32,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceRecord {
    Choose {
        site: Site,
        states: Vec<BranchStatus>,
        picked: usize,
    },
    Cmp {
        site: Site,
        result: bool,
    },
}

impl TraceRecord {
    /// Site and picked index for choice records; comparison records are None.
    pub fn pick(&self) -> Option<(&Site, usize)> {
        match self {
            TraceRecord::Choose { site, picked, .. } => Some((site, *picked)),
            TraceRecord::Cmp { .. } => None,
        }
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceRecord::Choose { site, states, picked } => {
                let states: String = states
                    .iter()
                    .map(|s| s.letter().to_string())
                    .collect::<Vec<_>>()
                    .join("|");
                write!(f, "CHOOSE site={site} states={states} picked={picked}")
            }
            TraceRecord::Cmp { site, result } => {
                write!(f, "CMP site={site} result={}", u8::from(*result))
            }
        }
    }
}

/// Append-only trace with rollback marks for abandoned guard attempts.
#[derive(Default)]
pub struct TraceBuf {
    records: Vec<TraceRecord>,
    marks: Vec<usize>,
}

impl TraceBuf {
    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn mark(&mut self) {
        self.marks.push(self.records.len());
    }

    /// Keeps everything recorded since the innermost mark.
    pub fn commit(&mut self) {
        self.marks.pop().expect("commit without mark");
    }

    /// Discards everything recorded since the innermost mark.
    pub fn rollback(&mut self) {
        let at = self.marks.pop().expect("rollback without mark");
        self.records.truncate(at);
    }

    /// Removes and returns everything recorded since the innermost mark.
    /// Used to park a decided guard's events until the choice that polled
    /// it knows whether that branch was picked.
    pub fn extract(&mut self) -> Vec<TraceRecord> {
        let at = self.marks.pop().expect("extract without mark");
        self.records.split_off(at)
    }

    pub fn extend(&mut self, records: Vec<TraceRecord>) {
        self.records.extend(records);
    }

    pub fn take(&mut self) -> Vec<TraceRecord> {
        assert!(self.marks.is_empty(), "trace taken during an attempt");
        std::mem::take(&mut self.records)
    }

    pub fn snapshot(&self) -> Vec<TraceRecord> {
        self.records.clone()
    }
}
