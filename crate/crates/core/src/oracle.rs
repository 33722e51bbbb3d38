//! The simulated speaker and its penalty bookkeeping.
//!
//! The oracle knows every gold form. Each query names one cell and may carry
//! the linguist's predicted form. Answering without a suggestion costs one
//! penalty point, a wrong suggestion costs one point, and a correct
//! suggestion costs nothing.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{CellId, Lexicon};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("cell {lemma_index}:{tags} was already answered")]
    AlreadyAnswered { lemma_index: usize, tags: String },
    #[error("cell {lemma_index}:{tags} is not in the lexicon")]
    UnknownCell { lemma_index: usize, tags: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleQuery {
    pub cell: CellId,
    pub suggestion: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    NoSuggestion,
    CorrectSuggestion,
    IncorrectSuggestion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResponse {
    pub gold: String,
    pub outcome: Outcome,
}

/// A perfect speaker over a gold lexicon.
#[derive(Debug)]
pub struct Oracle<'a> {
    lexicon: &'a Lexicon,
    answered: HashSet<CellId>,
}

impl<'a> Oracle<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Self {
            lexicon,
            answered: HashSet::new(),
        }
    }

    pub fn answer(&mut self, query: &OracleQuery) -> Result<OracleResponse, ProtocolError> {
        let cell = &query.cell;
        let gold = self
            .lexicon
            .gold(cell)
            .ok_or_else(|| ProtocolError::UnknownCell {
                lemma_index: cell.lemma_index,
                tags: cell.tags.to_string(),
            })?;
        if !self.answered.insert(cell.clone()) {
            return Err(ProtocolError::AlreadyAnswered {
                lemma_index: cell.lemma_index,
                tags: cell.tags.to_string(),
            });
        }
        let outcome = match &query.suggestion {
            None => Outcome::NoSuggestion,
            Some(s) if s.nfc().eq(gold.chars()) => Outcome::CorrectSuggestion,
            Some(_) => Outcome::IncorrectSuggestion,
        };
        Ok(OracleResponse {
            gold: gold.to_string(),
            outcome,
        })
    }

    pub fn answered(&self) -> usize {
        self.answered.len()
    }
}

/// Outcome counts for a single cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CycleCounts {
    pub cycle: usize,
    pub p1: u64,
    pub p2: u64,
    pub correct_suggestions: u64,
}

impl CycleCounts {
    pub fn queries(&self) -> u64 {
        self.p1 + self.p2 + self.correct_suggestions
    }
}

/// Running penalty totals: `p1` unsuggested answers, `p2` wrongly suggested
/// answers, `p3` final-test errors (set once at the end of a run).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PenaltyLedger {
    pub p1: u64,
    pub p2: u64,
    pub correct_suggestions: u64,
    pub per_cycle: Vec<CycleCounts>,
    pub p3: Option<u64>,
}

impl PenaltyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one answered query in `cycle` (1-based).
    pub fn record(&mut self, cycle: usize, outcome: Outcome) {
        assert!(cycle >= 1, "cycles are 1-based");
        let pos = match self.per_cycle.iter().position(|c| c.cycle == cycle) {
            Some(p) => p,
            None => {
                self.per_cycle.push(CycleCounts {
                    cycle,
                    ..Default::default()
                });
                self.per_cycle.len() - 1
            }
        };
        let bucket = &mut self.per_cycle[pos];
        match outcome {
            Outcome::NoSuggestion => {
                self.p1 += 1;
                bucket.p1 += 1;
            }
            Outcome::IncorrectSuggestion => {
                self.p2 += 1;
                bucket.p2 += 1;
            }
            Outcome::CorrectSuggestion => {
                self.correct_suggestions += 1;
                bucket.correct_suggestions += 1;
            }
        }
    }

    pub fn total_queries(&self) -> u64 {
        self.p1 + self.p2 + self.correct_suggestions
    }

    pub fn cycle(&self, cycle: usize) -> Option<&CycleCounts> {
        self.per_cycle.iter().find(|c| c.cycle == cycle)
    }

    /// `cycle,p1,p2,correct_suggestions` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,p1,p2,correct_suggestions\n");
        for c in &self.per_cycle {
            let _ = writeln!(out, "{},{},{},{}", c.cycle, c.p1, c.p2, c.correct_suggestions);
        }
        out
    }
}
