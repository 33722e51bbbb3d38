//! Batch selection and suggestion policies.
//!
//! | kind | cycle 1 | later cycles |
//! |------|---------|--------------|
//! | `Uniform` | uniform | uniform, never suggests |
//! | `ConfidenceGated` | uniform | uniform, suggests above mean pool confidence |
//! | `ConfidenceRanked` | uniform | most confident with suggestions, least confident without |
//! | `ParadigmFirstWeighted` | whole paradigms | tagset-weighted, suggests above mean pool confidence |

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CellId, Lexicon, Pool, TagSet};
use crate::learner::{InflectionQuery, Prediction, Predictor};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("pool exhausted")]
    Exhausted,
    #[error("strategy {0:?} needs a trained model after the first cycle")]
    MissingModel(StrategyKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Uniform,
    ConfidenceGated,
    ConfidenceRanked,
    ParadigmFirstWeighted,
}

impl StrategyKind {
    /// Experiment number 1-4.
    pub fn experiment(self) -> u8 {
        match self {
            StrategyKind::Uniform => 1,
            StrategyKind::ConfidenceGated => 2,
            StrategyKind::ConfidenceRanked => 3,
            StrategyKind::ParadigmFirstWeighted => 4,
        }
    }

    pub fn from_experiment(n: u8) -> Option<Self> {
        match n {
            1 => Some(StrategyKind::Uniform),
            2 => Some(StrategyKind::ConfidenceGated),
            3 => Some(StrategyKind::ConfidenceRanked),
            4 => Some(StrategyKind::ParadigmFirstWeighted),
            _ => None,
        }
    }
}

fn default_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub batch_size: usize,
    /// Share of a ranked batch sent with suggestions.
    #[serde(default = "default_fraction")]
    pub ranked_suggest_fraction: f64,
    pub seed: u64,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind, batch_size: usize, seed: u64) -> Self {
        Self {
            kind,
            batch_size,
            ranked_suggest_fraction: default_fraction(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchItem {
    pub cell: CellId,
    pub suggestion: Option<Prediction>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Batch {
    pub items: Vec<BatchItem>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn suggested(&self) -> usize {
        self.items.iter().filter(|i| i.suggestion.is_some()).count()
    }

    fn unsuggested(cells: impl IntoIterator<Item = CellId>) -> Self {
        Self {
            items: cells
                .into_iter()
                .map(|cell| BatchItem {
                    cell,
                    suggestion: None,
                })
                .collect(),
        }
    }
}

/// Everything a strategy may look at when choosing a batch.
pub struct SelectionContext<'a, P> {
    pub lexicon: &'a Lexicon,
    pub pool: &'a Pool,
    /// Model trained on everything collected so far; `None` in cycle 1.
    pub model: Option<&'a P>,
    /// Per-tagset sampling masses for weighted selection.
    pub weights: Option<&'a BTreeMap<TagSet, f64>>,
    pub cycle: usize,
}

impl StrategyConfig {
    /// Chooses the next batch. Cycle 1 never carries suggestions.
    pub fn select<P: Predictor, R: Rng + ?Sized>(
        &self,
        ctx: &SelectionContext<'_, P>,
        rng: &mut R,
    ) -> Result<Batch, StrategyError> {
        let k = self.batch_size;
        if ctx.cycle <= 1 {
            return match self.kind {
                StrategyKind::ParadigmFirstWeighted => {
                    paradigm_first_batch(ctx.lexicon, ctx.pool, k, rng)
                }
                _ => uniform_sample(ctx.pool, k, rng),
            };
        }
        let model = || ctx.model.ok_or(StrategyError::MissingModel(self.kind));
        match self.kind {
            StrategyKind::Uniform => uniform_sample(ctx.pool, k, rng),
            StrategyKind::ConfidenceGated => gated_batch(ctx.lexicon, ctx.pool, k, model()?, rng),
            StrategyKind::ConfidenceRanked => ranked_batch(
                ctx.lexicon,
                ctx.pool,
                k,
                model()?,
                self.ranked_suggest_fraction,
            ),
            StrategyKind::ParadigmFirstWeighted => {
                let empty = BTreeMap::new();
                weighted_batch(
                    ctx.lexicon,
                    ctx.pool,
                    k,
                    ctx.weights.unwrap_or(&empty),
                    model()?,
                    rng,
                )
            }
        }
    }
}

pub fn cell_query(lexicon: &Lexicon, cell: &CellId) -> InflectionQuery {
    InflectionQuery::inflect(lexicon.lemma(cell.lemma_index), cell.tags.clone())
}

fn predict_pool<P: Predictor>(lexicon: &Lexicon, cells: &[&CellId], model: &P) -> Vec<Prediction> {
    cells
        .iter()
        .map(|c| model.predict(&cell_query(lexicon, c)))
        .collect()
}

fn mean(predictions: &[Prediction]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    predictions.iter().map(|p| p.confidence).sum::<f64>() / predictions.len() as f64
}

/// `min(k, |pool|)` distinct cells drawn uniformly without replacement.
pub fn uniform_sample<R: Rng + ?Sized>(pool: &Pool, k: usize, rng: &mut R) -> Result<Batch, StrategyError> {
    if pool.is_empty() {
        return Err(StrategyError::Exhausted);
    }
    let cells: Vec<&CellId> = pool.iter().collect();
    let picked = index::sample(rng, cells.len(), k.min(cells.len()));
    Ok(Batch::unsuggested(picked.into_iter().map(|i| cells[i].clone())))
}

/// Mean predicted confidence over every pool cell.
pub fn mean_confidence<P: Predictor>(lexicon: &Lexicon, pool: &Pool, model: &P) -> f64 {
    let cells: Vec<&CellId> = pool.iter().collect();
    mean(&predict_pool(lexicon, &cells, model))
}

fn attach_above_threshold(
    picked: impl IntoIterator<Item = usize>,
    cells: &[&CellId],
    predictions: &[Prediction],
    threshold: f64,
) -> Batch {
    Batch {
        items: picked
            .into_iter()
            .map(|i| BatchItem {
                cell: cells[i].clone(),
                suggestion: (predictions[i].confidence > threshold).then(|| predictions[i].clone()),
            })
            .collect(),
    }
}

/// Uniform selection; a cell carries its prediction iff its confidence is
/// strictly above the pool mean.
pub fn gated_batch<P: Predictor, R: Rng + ?Sized>(
    lexicon: &Lexicon,
    pool: &Pool,
    k: usize,
    model: &P,
    rng: &mut R,
) -> Result<Batch, StrategyError> {
    if pool.is_empty() {
        return Err(StrategyError::Exhausted);
    }
    let cells: Vec<&CellId> = pool.iter().collect();
    let predictions = predict_pool(lexicon, &cells, model);
    let threshold = mean(&predictions);
    let picked = index::sample(rng, cells.len(), k.min(cells.len()));
    Ok(attach_above_threshold(picked, &cells, &predictions, threshold))
}

/// Ranks the pool by `(confidence desc, lemma asc, tags asc)` and takes the
/// top `ceil(k * fraction)` with suggestions and the bottom remainder
/// without. When the pool is smaller than `k` the top slice wins overlaps.
pub fn ranked_batch<P: Predictor>(
    lexicon: &Lexicon,
    pool: &Pool,
    k: usize,
    model: &P,
    suggest_fraction: f64,
) -> Result<Batch, StrategyError> {
    if pool.is_empty() {
        return Err(StrategyError::Exhausted);
    }
    let cells: Vec<&CellId> = pool.iter().collect();
    let predictions = predict_pool(lexicon, &cells, model);
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| {
        predictions[b]
            .confidence
            .total_cmp(&predictions[a].confidence)
            .then_with(|| lexicon.lemma(cells[a].lemma_index).cmp(lexicon.lemma(cells[b].lemma_index)))
            .then_with(|| cells[a].tags.cmp(&cells[b].tags))
    });

    let fraction = suggest_fraction.clamp(0.0, 1.0);
    let want_top = ((k as f64) * fraction).ceil() as usize;
    let want_top = want_top.min(k);
    let n = cells.len();
    let n_top = want_top.min(n);
    let n_bottom = (k - want_top).min(n - n_top);

    let mut items = Vec::with_capacity(n_top + n_bottom);
    for &i in &order[..n_top] {
        items.push(BatchItem {
            cell: cells[i].clone(),
            suggestion: Some(predictions[i].clone()),
        });
    }
    for &i in &order[n - n_bottom..] {
        items.push(BatchItem {
            cell: cells[i].clone(),
            suggestion: None,
        });
    }
    Ok(Batch { items })
}

/// Number of whole paradigms that fit a query budget: `ceil(budget / APS)`.
pub fn paradigms_for_budget(lexicon: &Lexicon, budget: usize) -> usize {
    let stats = lexicon.stats();
    let num = budget as u64 * stats.num_lemmas;
    num.div_ceil(stats.num_forms) as usize
}

/// Cold start that elicits complete paradigms of randomly chosen lemmas.
///
/// Picks up to `ceil(budget / APS)` lemmas whose paradigms are still fully
/// in the pool, stopping early once the budget is reached, so the batch
/// exceeds `budget` by less than one paradigm.
pub fn paradigm_first_batch<R: Rng + ?Sized>(
    lexicon: &Lexicon,
    pool: &Pool,
    budget: usize,
    rng: &mut R,
) -> Result<Batch, StrategyError> {
    if pool.is_empty() {
        return Err(StrategyError::Exhausted);
    }
    let n = paradigms_for_budget(lexicon, budget);
    let mut eligible: Vec<usize> = (0..lexicon.tables().len())
        .filter(|&i| !lexicon.tables()[i].is_empty() && pool.holds_full_paradigm(lexicon, i))
        .collect();
    eligible.shuffle(rng);

    let mut cells = Vec::new();
    for lemma_index in eligible.into_iter().take(n) {
        if cells.len() >= budget {
            break;
        }
        cells.extend(
            lexicon.tables()[lemma_index]
                .cells
                .keys()
                .map(|tags| CellId::new(lemma_index, tags.clone())),
        );
    }
    if cells.is_empty() {
        return uniform_sample(pool, budget, rng);
    }
    Ok(Batch::unsuggested(cells))
}

/// Resolves a sampling mass for every pool cell. Tagsets without a weight
/// get the smallest positive weight given; `None` means fall back to uniform.
fn cell_weights(cells: &[&CellId], weights: &BTreeMap<TagSet, f64>) -> Option<Vec<f64>> {
    let floor = weights
        .values()
        .copied()
        .filter(|w| w.is_finite() && *w > 0.0)
        .min_by(f64::total_cmp)?;
    Some(
        cells
            .iter()
            .map(|c| match weights.get(&c.tags) {
                Some(&w) if w.is_finite() && w > 0.0 => w,
                Some(_) => 0.0,
                None => floor,
            })
            .collect(),
    )
}

/// Draws `k` distinct cells with probability proportional to the weight of
/// their tagset; zero-weight cells are only drawn once every positive-weight
/// cell is taken. Suggestions are gated as in [`gated_batch`].
pub fn weighted_batch<P: Predictor, R: Rng + ?Sized>(
    lexicon: &Lexicon,
    pool: &Pool,
    k: usize,
    weights: &BTreeMap<TagSet, f64>,
    model: &P,
    rng: &mut R,
) -> Result<Batch, StrategyError> {
    if pool.is_empty() {
        return Err(StrategyError::Exhausted);
    }
    let cells: Vec<&CellId> = pool.iter().collect();
    let predictions = predict_pool(lexicon, &cells, model);
    let threshold = mean(&predictions);
    let picked = weighted_indices(&cells, weights, k, rng);
    Ok(attach_above_threshold(picked, &cells, &predictions, threshold))
}

fn weighted_indices<R: Rng + ?Sized>(
    cells: &[&CellId],
    weights: &BTreeMap<TagSet, f64>,
    k: usize,
    rng: &mut R,
) -> Vec<usize> {
    let k = k.min(cells.len());
    let Some(masses) = cell_weights(cells, weights) else {
        return index::sample(rng, cells.len(), k).into_vec();
    };
    let (positive, zero): (Vec<usize>, Vec<usize>) = (0..cells.len()).partition(|&i| masses[i] > 0.0);
    let take = k.min(positive.len());
    let mut picked: Vec<usize> = index::sample_weighted(rng, positive.len(), |i| masses[positive[i]], take)
        .expect("weights are finite and positive")
        .into_iter()
        .map(|i| positive[i])
        .collect();
    if picked.len() < k {
        let rest = index::sample(rng, zero.len(), k - picked.len());
        picked.extend(rest.into_iter().map(|i| zero[i]));
    }
    picked
}

/// Selects cells by tagset weight only, without predictions attached.
pub fn weighted_sample<R: Rng + ?Sized>(
    pool: &Pool,
    k: usize,
    weights: &BTreeMap<TagSet, f64>,
    rng: &mut R,
) -> Result<Batch, StrategyError> {
    if pool.is_empty() {
        return Err(StrategyError::Exhausted);
    }
    let cells: Vec<&CellId> = pool.iter().collect();
    let picked = weighted_indices(&cells, weights, k, rng);
    Ok(Batch::unsuggested(picked.into_iter().map(|i| cells[i].clone())))
}
