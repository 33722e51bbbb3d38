//! Cell inter-predictability from complete paradigms.
//!
//! Every ordered pair of distinct cells of a paradigm (the citation form
//! included, under [`TagSet::lemma`]) becomes a re-inflection example. One
//! re-inflection model is trained on a 45% split, calibrated on another 45%,
//! and scored on the last 10%, grouped by `(source, target)`. A source
//! tagset's predictive power is the mean of its row.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{ParadigmTable, TagSet};
use crate::learner::{Example, InflectionQuery, Learner, LearnerError, Predictor};
use crate::scalar::{ratio, Scalar};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredictabilityError {
    #[error("need at least 10 re-inflection examples to split, got {0}")]
    TooFewExamples(usize),
    #[error("empty test split")]
    EmptyTest,
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReinflectionExample {
    pub lemma: String,
    pub source_form: String,
    pub source_tags: TagSet,
    pub target_tags: TagSet,
    pub target_form: String,
}

impl ReinflectionExample {
    pub fn query(&self) -> InflectionQuery {
        InflectionQuery::reinflect(
            self.lemma.clone(),
            self.source_form.clone(),
            self.source_tags.clone(),
            self.target_tags.clone(),
        )
    }

    pub fn to_example(&self) -> Example {
        Example::new(self.query(), self.target_form.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReinflectionDataset {
    pub examples: Vec<ReinflectionExample>,
    /// Paradigms with fewer than two cells, which yield no pairs.
    pub skipped: usize,
}

/// All ordered pairs of distinct cells per paradigm: `m * (m - 1)` examples
/// for a paradigm of `m` cells counting the citation form.
pub fn build_reinflection_dataset(paradigms: &[ParadigmTable]) -> ReinflectionDataset {
    let mut out = ReinflectionDataset::default();
    for table in paradigms {
        let mut cells: Vec<(TagSet, &str)> = vec![(TagSet::lemma(), table.lemma.as_str())];
        cells.extend(table.cells.iter().map(|(t, f)| (t.clone(), f.as_str())));
        if cells.len() < 2 {
            out.skipped += 1;
            continue;
        }
        for (i, (src_tags, src_form)) in cells.iter().enumerate() {
            for (j, (tgt_tags, tgt_form)) in cells.iter().enumerate() {
                if i == j {
                    continue;
                }
                out.examples.push(ReinflectionExample {
                    lemma: table.lemma.clone(),
                    source_form: src_form.to_string(),
                    source_tags: src_tags.clone(),
                    target_tags: tgt_tags.clone(),
                    target_form: tgt_form.to_string(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

/// One shuffle, then `floor(0.45 n)` / `floor(0.45 n)` / remainder.
pub fn split_45_45_10<T, R: Rng + ?Sized>(mut examples: Vec<T>, rng: &mut R) -> Result<Split<T>, PredictabilityError> {
    let n = examples.len();
    if n < 10 {
        return Err(PredictabilityError::TooFewExamples(n));
    }
    examples.shuffle(rng);
    let part = n * 45 / 100;
    let test = examples.split_off(2 * part);
    let dev = examples.split_off(part);
    Ok(Split {
        train: examples,
        dev,
        test,
    })
}

/// Source-by-target re-inflection accuracy. Both axes list the same
/// tagsets, citation cell first; the diagonal is always absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap<T> {
    pub tagsets: Vec<TagSet>,
    pub acc: Vec<Vec<Option<T>>>,
    pub counts: Vec<Vec<u64>>,
    pub correct: Vec<Vec<u64>>,
}

fn axis_order(a: &TagSet, b: &TagSet) -> std::cmp::Ordering {
    b.is_lemma().cmp(&a.is_lemma()).then_with(|| a.cmp(b))
}

impl<T: Scalar> Heatmap<T> {
    pub fn sources(&self) -> &[TagSet] {
        &self.tagsets
    }

    pub fn targets(&self) -> &[TagSet] {
        &self.tagsets
    }

    pub fn position(&self, tags: &TagSet) -> Option<usize> {
        self.tagsets.iter().position(|t| t == tags)
    }

    pub fn get(&self, source: &TagSet, target: &TagSet) -> Option<T> {
        self.acc[self.position(source)?][self.position(target)?]
    }

    /// Present accuracies of one source row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = T> + '_ {
        self.acc[i].iter().flatten().copied()
    }

    fn matrix_csv(&self, cell: impl Fn(usize, usize) -> String) -> String {
        let mut out = String::from("source\\target");
        for t in &self.tagsets {
            out.push(',');
            out.push_str(t.canonical());
        }
        out.push('\n');
        for (i, s) in self.tagsets.iter().enumerate() {
            out.push_str(s.canonical());
            for j in 0..self.tagsets.len() {
                out.push(',');
                out.push_str(&cell(i, j));
            }
            out.push('\n');
        }
        out
    }

    /// Accuracy matrix; absent entries are empty fields.
    pub fn to_csv(&self) -> String {
        self.matrix_csv(|i, j| self.acc[i][j].map(|a| a.to_f64().to_string()).unwrap_or_default())
    }

    pub fn counts_csv(&self) -> String {
        self.matrix_csv(|i, j| self.counts[i][j].to_string())
    }

    /// Renders the matrix as an SVG grid. Accuracy 0 is white and 1 is
    /// `#08306b`, linearly interpolated per channel; absent cells are grey.
    pub fn to_svg(&self) -> String {
        const CELL: usize = 48;
        const LABEL: usize = 140;
        let n = self.tagsets.len();
        let size = LABEL + n * CELL;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="monospace" font-size="10">"#
        );
        for (i, t) in self.tagsets.iter().enumerate() {
            let c = LABEL + i * CELL + CELL / 2;
            let _ = writeln!(s, r#"<text x="{}" y="{c}" text-anchor="end">{}</text>"#, LABEL - 4, xml_escape(t.canonical()));
            let _ = writeln!(
                s,
                r#"<text x="{c}" y="{}" text-anchor="start" transform="rotate(-60 {c} {})">{}</text>"#,
                LABEL - 4,
                LABEL - 4,
                xml_escape(t.canonical())
            );
        }
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (LABEL + j * CELL, LABEL + i * CELL);
                let (fill, label) = match self.acc[i][j] {
                    Some(a) => {
                        let a = a.to_f64().clamp(0.0, 1.0);
                        let ch = |lo: f64| (255.0 + (lo - 255.0) * a).round() as u8;
                        (format!("#{:02x}{:02x}{:02x}", ch(8.0), ch(48.0), ch(107.0)), format!("{:.2}", a))
                    }
                    None => ("#d9d9d9".to_string(), String::new()),
                };
                let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="white"/>"#);
                if !label.is_empty() {
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}" text-anchor="middle" fill="{}">{label}</text>"#,
                        x + CELL / 2,
                        y + CELL / 2 + 3,
                        if self.acc[i][j].map(|a| a.to_f64()).unwrap_or(0.0) > 0.5 { "white" } else { "black" }
                    );
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Exact-match accuracy of `model` on `test`, grouped by tagset pair.
pub fn compute_heatmap<T: Scalar, P: Predictor>(
    model: &P,
    test: &[ReinflectionExample],
) -> Result<Heatmap<T>, PredictabilityError> {
    if test.is_empty() {
        return Err(PredictabilityError::EmptyTest);
    }
    let mut tagsets: Vec<TagSet> = test
        .iter()
        .flat_map(|e| [e.source_tags.clone(), e.target_tags.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    tagsets.sort_by(axis_order);
    let pos: BTreeMap<&TagSet, usize> = tagsets.iter().enumerate().map(|(i, t)| (t, i)).collect();

    let n = tagsets.len();
    let mut counts = vec![vec![0u64; n]; n];
    let mut correct = vec![vec![0u64; n]; n];
    for e in test {
        let (i, j) = (pos[&e.source_tags], pos[&e.target_tags]);
        counts[i][j] += 1;
        if model.predict(&e.query()).form == e.target_form {
            correct[i][j] += 1;
        }
    }
    let acc = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (i != j && counts[i][j] > 0).then(|| ratio(correct[i][j], counts[i][j])))
                .collect()
        })
        .collect();
    Ok(Heatmap {
        tagsets,
        acc,
        counts,
        correct,
    })
}

/// Per-source mean accuracy across targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictivePowerWeights<T> {
    pub weights: BTreeMap<TagSet, T>,
}

impl<T: Scalar> PredictivePowerWeights<T> {
    pub fn get(&self, tags: &TagSet) -> Option<T> {
        self.weights.get(tags).copied()
    }

    /// Weights as sampling masses, without the citation cell (never queried).
    pub fn sampling_weights(&self) -> BTreeMap<TagSet, f64> {
        self.weights
            .iter()
            .filter(|(t, _)| !t.is_lemma())
            .map(|(t, w)| (t.clone(), w.to_f64()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tagset,weight\n");
        for (t, w) in &self.weights {
            let _ = writeln!(out, "{},{}", t, w.to_f64());
        }
        out
    }
}

pub fn predictive_power<T: Scalar>(heatmap: &Heatmap<T>) -> PredictivePowerWeights<T> {
    let weights = heatmap
        .tagsets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let (sum, count) = heatmap.row(i).fold((T::zero(), 0u64), |(s, c), a| (s + a, c + 1));
            let w = if count == 0 { T::zero() } else { sum / T::from_count(count) };
            (t.clone(), w)
        })
        .collect();
    PredictivePowerWeights { weights }
}

/// Output of the full inter-predictability pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictabilityAnalysis<T> {
    pub paradigms: usize,
    pub examples: usize,
    pub skipped: usize,
    pub split_sizes: (usize, usize, usize),
    pub heatmap: Heatmap<T>,
    pub weights: PredictivePowerWeights<T>,
}

/// Builds pairs, splits them, trains one re-inflection model over all pairs
/// and scores it on the test split.
pub fn analyze<T, L, R>(
    learner: &L,
    paradigms: &[ParadigmTable],
    rng: &mut R,
) -> Result<PredictabilityAnalysis<T>, PredictabilityError>
where
    T: Scalar,
    L: Learner,
    R: Rng + ?Sized,
{
    let dataset = build_reinflection_dataset(paradigms);
    let n = dataset.examples.len();
    let split = split_45_45_10(dataset.examples, rng)?;
    let train: Vec<Example> = split.train.iter().map(ReinflectionExample::to_example).collect();
    let dev: Vec<Example> = split.dev.iter().map(ReinflectionExample::to_example).collect();
    let model = learner.train(&train, &dev)?;
    let heatmap = compute_heatmap(&model, &split.test)?;
    let weights = predictive_power(&heatmap);
    Ok(PredictabilityAnalysis {
        paradigms: paradigms.len(),
        examples: n,
        skipped: dataset.skipped,
        split_sizes: (split.train.len(), split.dev.len(), split.test.len()),
        heatmap,
        weights,
    })
}
