//! The elicitation loop: select, query, retrain from scratch, evaluate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{init_pool, CellId, Lexicon, ParadigmTable, Pool, TagSet};
use crate::learner::{Example, Learner, LearnerConfig, LearnerError, Predictor};
use crate::metrics::{self, SuggestionBreakdown};
use crate::oracle::{Oracle, OracleQuery, PenaltyLedger, ProtocolError};
use crate::predictability::{self, PredictabilityAnalysis, PredictabilityError};
use crate::strategies::{cell_query, paradigm_first_batch, paradigms_for_budget, SelectionContext, StrategyConfig, StrategyError, StrategyKind};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Strategy(StrategyError),
    #[error("nothing left in the pool to evaluate")]
    EmptyPool,
    #[error(transparent)]
    Predictability(#[from] PredictabilityError),
    #[error("budget needs {needed} complete paradigms but the data has {available}")]
    InsufficientParadigms { needed: usize, available: usize },
}

fn default_cycles() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub language: String,
    pub strategy: StrategyConfig,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    #[serde(default)]
    pub learner: LearnerConfig,
}

impl ExperimentConfig {
    pub fn new(language: impl Into<String>, kind: StrategyKind, batch_size: usize, seed: u64) -> Self {
        Self {
            language: language.into(),
            strategy: StrategyConfig::new(kind, batch_size, seed),
            cycles: default_cycles(),
            learner: LearnerConfig::default(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.strategy.seed
    }

    pub fn batch_size(&self) -> usize {
        self.strategy.batch_size
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.cycles == 0 {
            return Err(RunError::Config("cycles must be at least 1".into()));
        }
        if self.strategy.batch_size == 0 {
            return Err(RunError::Config("batch size must be at least 1".into()));
        }
        let f = self.strategy.ranked_suggest_fraction;
        if !(0.0..=1.0).contains(&f) {
            return Err(RunError::Config(format!("ranked fraction {f} outside [0, 1]")));
        }
        if self.learner.alphas.is_empty() || self.learner.alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(RunError::Config("alphas must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub queried: u64,
    pub p1: u64,
    pub p2: u64,
    pub correct_suggestions: u64,
    /// Labelled cells after this cycle.
    pub labeled: usize,
    /// Pool size after this cycle's removals.
    pub pool: usize,
    /// Accuracy of this cycle's model on the remaining pool; `None` once empty.
    pub pool_accuracy: Option<f64>,
}

/// Exact-match scores of a model over the pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolEvaluation {
    pub accuracy: f64,
    pub errors: u64,
    pub total: u64,
    pub per_tagset: BTreeMap<TagSet, f64>,
}

pub fn evaluate_on_pool<P: Predictor>(model: &P, pool: &Pool, lexicon: &Lexicon) -> Result<PoolEvaluation, RunError> {
    if pool.is_empty() {
        return Err(RunError::EmptyPool);
    }
    let mut tally: BTreeMap<TagSet, (u64, u64)> = BTreeMap::new();
    let mut errors = 0;
    for cell in pool.iter() {
        let gold = lexicon.gold(cell).ok_or_else(|| ProtocolError::UnknownCell {
            lemma_index: cell.lemma_index,
            tags: cell.tags.to_string(),
        })?;
        let ok = model.predict(&cell_query(lexicon, cell)).form == gold;
        let entry = tally.entry(cell.tags.clone()).or_default();
        entry.1 += 1;
        if ok {
            entry.0 += 1;
        } else {
            errors += 1;
        }
    }
    let total = pool.len() as u64;
    let per_tagset = tally
        .into_iter()
        .map(|(t, (c, n))| (t, c as f64 / n as f64))
        .collect();
    Ok(PoolEvaluation {
        accuracy: metrics::accuracy(total - errors, total).expect("total > 0"),
        errors,
        total,
        per_tagset,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub experiment: u8,
    pub cycles: Vec<CycleRecord>,
    /// `None` when the pool was drained before the final evaluation.
    pub final_accuracy: Option<f64>,
    pub final_test_size: u64,
    pub p1: u64,
    pub p2: u64,
    pub p3: u64,
    pub n: u64,
    pub nes: f64,
    pub total_queries: u64,
    pub breakdown: SuggestionBreakdown,
    pub queries_by_tagset: BTreeMap<TagSet, u64>,
    /// Stopped before the configured number of cycles.
    pub exhausted: bool,
    /// Inter-predictability analysis behind the weighted selection.
    pub predictability: Option<PredictabilityAnalysis<f64>>,
    /// Why the analysis could not be computed, when it could not.
    pub predictability_error: Option<String>,
    #[serde(skip)]
    pub ledger: PenaltyLedger,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `cycle,queried,p1,p2,correct_suggestions,pool_accuracy`
    pub fn cycles_csv(&self) -> String {
        let mut out = String::from("cycle,queried,p1,p2,correct_suggestions,pool_accuracy\n");
        for c in &self.cycles {
            let acc = c.pool_accuracy.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{}", c.cycle, c.queried, c.p1, c.p2, c.correct_suggestions, acc);
        }
        out
    }

    pub fn summary_row(&self) -> String {
        let acc = self.final_accuracy.map(|a| a.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.config.language, self.experiment, acc, self.nes, self.p1, self.p2, self.p3, self.n
        )
    }
}

pub const SUMMARY_HEADER: &str = "language,experiment,accuracy,nes,p1,p2,p3,n";

pub fn summary_csv<'a>(reports: impl IntoIterator<Item = &'a Report>) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in reports {
        out.push_str(&r.summary_row());
        out.push('\n');
    }
    out
}

/// Shuffles the labelled set and holds out a tenth for development.
fn split_90_10(labeled: &[(CellId, String)], lexicon: &Lexicon, seed: u64) -> (Vec<Example>, Vec<Example>) {
    let mut examples: Vec<Example> = labeled
        .iter()
        .map(|(cell, gold)| Example::new(cell_query(lexicon, cell), gold.clone()))
        .collect();
    examples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let dev = examples.split_off(examples.len() - examples.len() / 10);
    (examples, dev)
}

fn complete_paradigms(labeled: &[(CellId, String)], lexicon: &Lexicon) -> Vec<ParadigmTable> {
    let mut by_lemma: BTreeMap<usize, ParadigmTable> = BTreeMap::new();
    for (cell, gold) in labeled {
        by_lemma
            .entry(cell.lemma_index)
            .or_insert_with(|| ParadigmTable::new(lexicon.lemma(cell.lemma_index)))
            .cells
            .insert(cell.tags.clone(), gold.clone());
    }
    by_lemma
        .into_iter()
        .filter(|(i, t)| lexicon.table(*i).is_some_and(|full| full.len() == t.len()))
        .map(|(_, t)| t)
        .collect()
}

/// The weighted strategy's cold start on its own: one batch of whole
/// paradigms under `budget`, then the inter-predictability analysis, with
/// the same seeding as a full run.
pub fn cold_start_analysis<L: Learner>(
    lexicon: &Lexicon,
    budget: usize,
    seed: u64,
    learner: &L,
) -> Result<PredictabilityAnalysis<f64>, RunError> {
    if budget == 0 {
        return Err(RunError::Config("budget must be at least 1".into()));
    }
    let needed = paradigms_for_budget(lexicon, budget);
    let available = lexicon.tables().iter().filter(|t| !t.is_empty()).count();
    if available < needed {
        return Err(RunError::InsufficientParadigms { needed, available });
    }
    let pool = init_pool(lexicon);
    let batch = paradigm_first_batch(lexicon, &pool, budget, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(RunError::Strategy)?;
    let labeled: Vec<(CellId, String)> = batch
        .items
        .into_iter()
        .map(|i| {
            let gold = lexicon.gold(&i.cell).expect("selected from the lexicon").to_string();
            (i.cell, gold)
        })
        .collect();
    let paradigms = complete_paradigms(&labeled, lexicon);
    Ok(predictability::analyze(learner, &paradigms, &mut ChaCha8Rng::seed_from_u64(seed))?)
}

/// Runs one experiment to completion. Identical inputs give identical reports.
pub fn run_experiment<L: Learner>(config: &ExperimentConfig, lexicon: &Lexicon, learner: &L) -> Result<Report, RunError> {
    config.validate()?;
    let seed = config.seed();
    let kind = config.strategy.kind;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = init_pool(lexicon);
    let mut oracle = Oracle::new(lexicon);
    let mut ledger = PenaltyLedger::new();
    let mut labeled: Vec<(CellId, String)> = Vec::new();
    let mut queries_by_tagset: BTreeMap<TagSet, u64> = BTreeMap::new();
    let mut model: Option<L::Model> = None;
    let mut weights: Option<BTreeMap<TagSet, f64>> = None;
    let mut analysis = None;
    let mut analysis_error = None;
    let mut records = Vec::new();
    let mut exhausted = false;

    for cycle in 1..=config.cycles {
        let ctx = SelectionContext {
            lexicon,
            pool: &pool,
            model: model.as_ref(),
            weights: weights.as_ref(),
            cycle,
        };
        let batch = match config.strategy.select(&ctx, &mut rng) {
            Ok(b) => b,
            Err(StrategyError::Exhausted) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(RunError::Strategy(e)),
        };

        for item in batch.items {
            let suggestion = if cycle == 1 { None } else { item.suggestion.map(|p| p.form) };
            let response = oracle.answer(&OracleQuery {
                cell: item.cell.clone(),
                suggestion,
            })?;
            ledger.record(cycle, response.outcome);
            *queries_by_tagset.entry(item.cell.tags.clone()).or_default() += 1;
            pool.remove(&item.cell);
            labeled.push((item.cell, response.gold));
        }

        let (train, dev) = split_90_10(&labeled, lexicon, seed ^ cycle as u64);
        let fresh = learner.train(&train, &dev)?;

        if cycle == 1 && kind == StrategyKind::ParadigmFirstWeighted {
            let paradigms = complete_paradigms(&labeled, lexicon);
            let mut prng = ChaCha8Rng::seed_from_u64(seed);
            match predictability::analyze::<f64, _, _>(learner, &paradigms, &mut prng) {
                Ok(a) => {
                    weights = Some(a.weights.sampling_weights());
                    analysis = Some(a);
                }
                Err(e) => analysis_error = Some(e.to_string()),
            }
        }

        let counts = ledger.cycle(cycle).copied().unwrap_or_default();
        let pool_accuracy = match evaluate_on_pool(&fresh, &pool, lexicon) {
            Ok(e) => Some(e.accuracy),
            Err(RunError::EmptyPool) => None,
            Err(e) => return Err(e),
        };
        records.push(CycleRecord {
            cycle,
            queried: counts.queries(),
            p1: counts.p1,
            p2: counts.p2,
            correct_suggestions: counts.correct_suggestions,
            labeled: labeled.len(),
            pool: pool.len(),
            pool_accuracy,
        });
        model = Some(fresh);
    }

    let (final_accuracy, p3, final_test_size) = match &model {
        Some(m) if !pool.is_empty() => {
            let e = evaluate_on_pool(m, &pool, lexicon)?;
            (Some(e.accuracy), e.errors, e.total)
        }
        Some(_) => (None, 0, 0),
        None => return Err(RunError::EmptyPool),
    };
    ledger.p3 = Some(p3);

    let n = lexicon.stats().num_forms;
    let nes = metrics::nes::<f64>(ledger.p1, ledger.p2, p3, n).expect("lexicon is nonempty");
    Ok(Report {
        config: config.clone(),
        experiment: kind.experiment(),
        cycles: records,
        final_accuracy,
        final_test_size,
        p1: ledger.p1,
        p2: ledger.p2,
        p3,
        n,
        nes,
        total_queries: ledger.total_queries(),
        breakdown: metrics::suggestion_breakdown(&ledger),
        queries_by_tagset,
        exhausted,
        predictability: analysis,
        predictability_error: analysis_error,
        ledger,
    })
}
