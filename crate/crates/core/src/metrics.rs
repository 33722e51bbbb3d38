//! Accuracy, the Normalised Efficiency Score and the suggestion breakdown.
//!
//! `nes = 1 - (p1 + p2 + p3) / n` where `p1` counts forms elicited without a
//! suggestion, `p2` forms elicited with a wrong suggestion, `p3` wrong final
//! predictions, and `n` is the total number of forms in the dataset.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::PenaltyLedger;
use crate::scalar::{ratio, Scalar};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("total must be at least 1")]
    ZeroTotal,
    #[error("correct count {correct} exceeds total {total}")]
    CorrectExceedsTotal { correct: u64, total: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NesInputs {
    pub p1: u64,
    pub p2: u64,
    pub p3: u64,
    pub n: u64,
}

impl NesInputs {
    pub fn nes<T: Scalar>(&self) -> Result<T, MetricsError> {
        nes(self.p1, self.p2, self.p3, self.n)
    }
}

pub fn nes<T: Scalar>(p1: u64, p2: u64, p3: u64, n: u64) -> Result<T, MetricsError> {
    if n == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    Ok(T::one() - ratio::<T>(p1 + p2 + p3, n))
}

pub fn accuracy<T: Scalar>(correct: u64, total: u64) -> Result<T, MetricsError> {
    if total == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    if correct > total {
        return Err(MetricsError::CorrectExceedsTotal { correct, total });
    }
    Ok(ratio(correct, total))
}

/// Percentage with one decimal, halves rounded up.
pub fn percent(x: f64) -> String {
    format!("{:.1}", (x * 1000.0 + 0.5).floor() / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub cycle: usize,
    pub no_suggestion: u64,
    pub correct_suggestion: u64,
    pub incorrect_suggestion: u64,
}

impl BreakdownRow {
    pub fn queries(&self) -> u64 {
        self.no_suggestion + self.correct_suggestion + self.incorrect_suggestion
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuggestionBreakdown {
    pub cycles: Vec<BreakdownRow>,
    pub total: BreakdownRow,
}

pub fn suggestion_breakdown(ledger: &PenaltyLedger) -> SuggestionBreakdown {
    let cycles: Vec<BreakdownRow> = ledger
        .per_cycle
        .iter()
        .map(|c| BreakdownRow {
            cycle: c.cycle,
            no_suggestion: c.p1,
            correct_suggestion: c.correct_suggestions,
            incorrect_suggestion: c.p2,
        })
        .collect();
    let total = cycles.iter().fold(BreakdownRow::default(), |acc, r| BreakdownRow {
        cycle: 0,
        no_suggestion: acc.no_suggestion + r.no_suggestion,
        correct_suggestion: acc.correct_suggestion + r.correct_suggestion,
        incorrect_suggestion: acc.incorrect_suggestion + r.incorrect_suggestion,
    });
    SuggestionBreakdown { cycles, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Outcome;
    use num_rational::Ratio;
    use proptest::prelude::*;

    #[test]
    fn nes_reference_values() {
        let tur: f64 = nes(2000, 0, 1409, 80264).unwrap();
        assert!((tur - 0.9575).abs() < 5e-5, "{tur}");
        let mwf: f64 = nes(500, 0, 122, 1110).unwrap();
        assert!((mwf - 0.4396).abs() < 5e-5, "{mwf}");
        assert_eq!(nes::<f64>(0, 0, 0, 17).unwrap(), 1.0);
        assert_eq!(nes::<f64>(1, 0, 0, 0), Err(MetricsError::ZeroTotal));
    }

    #[test]
    fn nes_exact() {
        let r: Ratio<i64> = nes(500, 0, 122, 1110).unwrap();
        assert_eq!(r, Ratio::new(488, 1110));
    }

    #[test]
    fn accuracy_values() {
        let eng: f64 = accuracy(3120 - 337, 3120).unwrap();
        assert!((eng - 0.8920).abs() < 5e-5);
        assert_eq!(accuracy::<f64>(0, 5).unwrap(), 0.0);
        assert_eq!(accuracy::<f64>(5, 5).unwrap(), 1.0);
        assert_eq!(accuracy::<f64>(0, 0), Err(MetricsError::ZeroTotal));
        assert!(accuracy::<f64>(6, 5).is_err());
        assert_eq!(accuracy::<Ratio<i64>>(488, 610).unwrap(), Ratio::new(4, 5));
    }

    #[test]
    fn percent_rounding() {
        assert_eq!(percent(0.95753), "95.8");
        assert_eq!(percent(0.54355), "54.4");
        assert_eq!(percent(0.43964), "44.0");
        assert_eq!(percent(1.0), "100.0");
    }

    #[test]
    fn breakdown() {
        let mut l = PenaltyLedger::new();
        for _ in 0..400 {
            l.record(1, Outcome::NoSuggestion);
        }
        for (n, o) in [(120, Outcome::NoSuggestion), (250, Outcome::CorrectSuggestion), (30, Outcome::IncorrectSuggestion)] {
            for _ in 0..n {
                l.record(2, o);
            }
        }
        let b = suggestion_breakdown(&l);
        assert_eq!(b.cycles[0], BreakdownRow { cycle: 1, no_suggestion: 400, correct_suggestion: 0, incorrect_suggestion: 0 });
        assert_eq!(b.cycles[1], BreakdownRow { cycle: 2, no_suggestion: 120, correct_suggestion: 250, incorrect_suggestion: 30 });
        assert_eq!(b.total.queries(), l.total_queries());
        assert_eq!(suggestion_breakdown(&PenaltyLedger::new()), SuggestionBreakdown::default());
    }

    proptest! {
        #[test]
        fn nes_strictly_decreasing(p1 in 0u64..1000, p2 in 0u64..1000, p3 in 0u64..1000, extra in 1000u64..10_000) {
            let n = p1 + p2 + p3 + extra;
            let base: Ratio<i64> = nes(p1, p2, p3, n).unwrap();
            prop_assert!(nes::<Ratio<i64>>(p1 + 1, p2, p3, n).unwrap() < base);
            prop_assert!(nes::<Ratio<i64>>(p1, p2 + 1, p3, n).unwrap() < base);
            prop_assert!(nes::<Ratio<i64>>(p1, p2, p3 + 1, n).unwrap() < base);
            let f: f64 = nes(p1, p2, p3, n).unwrap();
            prop_assert!((f - base.to_f64()).abs() < 1e-12);
        }

        #[test]
        fn nes_bounded_for_run_inputs(queries in 0u64..5000, wrong_share in 0.0f64..=1.0, rest in 0u64..5000, p3_share in 0.0f64..=1.0) {
            let n = queries + rest;
            prop_assume!(n > 0);
            let p2 = (queries as f64 * wrong_share) as u64;
            let p1 = queries - p2;
            let p3 = (rest as f64 * p3_share) as u64;
            let v: f64 = nes(p1, p2, p3, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
