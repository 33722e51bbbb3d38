//! Inflection and re-inflection learners.
//!
//! [`RuleLearner`] is a deterministic affix-rule transducer. For every
//! training pair it extracts suffix rules anchored on the longest common
//! prefix, prefix rules anchored on the longest common suffix, and one
//! whole-word rule. Rules are aggregated per key, their failures counted by
//! re-applying them to every same-key training pair, and prediction picks
//! the most specific applicable rule. Confidence is the rule's smoothed
//! precision `(support + a) / (support + failures + 2a)`, with `a` fitted on
//! the development split.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TagSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LearnerError {
    #[error("empty training set")]
    EmptyTrainSet,
    #[error("training set mixes plain inflection and re-inflection queries")]
    MixedQueryKinds,
}

/// A source cell for re-inflection: an inflected form plus its tagset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceCell {
    pub form: String,
    pub tags: TagSet,
}

/// A request to produce the form of `target_tags`, either from the lemma or
/// from another cell of the same paradigm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InflectionQuery {
    pub lemma: String,
    pub target_tags: TagSet,
    pub source: Option<SourceCell>,
}

impl InflectionQuery {
    pub fn inflect(lemma: impl Into<String>, target_tags: TagSet) -> Self {
        Self {
            lemma: lemma.into(),
            target_tags,
            source: None,
        }
    }

    pub fn reinflect(
        lemma: impl Into<String>,
        source_form: impl Into<String>,
        source_tags: TagSet,
        target_tags: TagSet,
    ) -> Self {
        Self {
            lemma: lemma.into(),
            target_tags,
            source: Some(SourceCell {
                form: source_form.into(),
                tags: source_tags,
            }),
        }
    }

    /// The string the transducer rewrites.
    pub fn input(&self) -> &str {
        self.source.as_ref().map_or(&self.lemma, |s| &s.form)
    }

    pub fn key(&self) -> RuleKey {
        match &self.source {
            None => RuleKey::Inflect(self.target_tags.clone()),
            Some(s) => RuleKey::Reinflect(s.tags.clone(), self.target_tags.clone()),
        }
    }

    pub fn is_reinflection(&self) -> bool {
        self.source.is_some()
    }
}

/// A query with its gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub query: InflectionQuery,
    pub gold: String,
}

impl Example {
    pub fn new(query: InflectionQuery, gold: impl Into<String>) -> Self {
        Self {
            query,
            gold: gold.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub form: String,
    pub confidence: f64,
}

/// What a rule is conditioned on: the target tagset, or a source/target pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKey {
    Inflect(TagSet),
    Reinflect(TagSet, TagSet),
}

impl fmt::Display for RuleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleKey::Inflect(t) => write!(f, "{t}"),
            RuleKey::Reinflect(s, t) => write!(f, "{s}>{t}"),
        }
    }
}

impl Serialize for RuleKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Suffix,
    Prefix,
    WholeWord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub key: RuleKey,
    pub side: Side,
    pub match_affix: String,
    pub replace_affix: String,
    /// Stem characters shared by `match_affix` and `replace_affix`; the
    /// input length for whole-word rules.
    pub context_len: usize,
    pub support: u32,
    pub failures: u32,
}

impl Rule {
    fn new(key: &RuleKey, side: Side, match_affix: &str, replace_affix: &str, context_len: usize) -> Self {
        Self {
            key: key.clone(),
            side,
            match_affix: match_affix.to_string(),
            replace_affix: replace_affix.to_string(),
            context_len,
            support: 1,
            failures: 0,
        }
    }

    /// Rewrites `input`, or `None` when the match affix is absent.
    pub fn apply(&self, input: &str) -> Option<String> {
        match self.side {
            Side::Suffix => input
                .strip_suffix(self.match_affix.as_str())
                .map(|stem| format!("{stem}{}", self.replace_affix)),
            Side::Prefix => input
                .strip_prefix(self.match_affix.as_str())
                .map(|stem| format!("{}{stem}", self.replace_affix)),
            Side::WholeWord => (input == self.match_affix).then(|| self.replace_affix.clone()),
        }
    }

    pub fn confidence(&self, alpha: f64) -> f64 {
        let s = self.support as f64;
        (s + alpha) / (s + self.failures as f64 + 2.0 * alpha)
    }

    /// Rule-index order: whole-word first, then more context, more support,
    /// smaller replacement.
    fn precedence(&self, other: &Self) -> Ordering {
        (other.side == Side::WholeWord)
            .cmp(&(self.side == Side::WholeWord))
            .then(other.context_len.cmp(&self.context_len))
            .then(other.support.cmp(&self.support))
            .then_with(|| self.replace_affix.cmp(&other.replace_affix))
            .then(self.side.cmp(&other.side))
            .then_with(|| self.match_affix.cmp(&other.match_affix))
    }
}

fn common_prefix_chars(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

fn common_suffix_chars(a: &str, b: &str) -> usize {
    a.chars()
        .rev()
        .zip(b.chars().rev())
        .take_while(|(x, y)| x == y)
        .count()
}

/// Byte offset of the `n`-th character boundary.
fn char_offset(s: &str, n: usize) -> usize {
    s.char_indices().nth(n).map_or(s.len(), |(i, _)| i)
}

/// All rules generated by one input/output pair, each with support 1.
pub fn extract_rules(input: &str, output: &str, key: &RuleKey, max_context: usize) -> Vec<Rule> {
    let mut rules = Vec::new();
    let in_len = input.chars().count();
    let out_len = output.chars().count();

    let p = common_prefix_chars(input, output);
    if p > 0 {
        for j in 0..=max_context.min(p) {
            let cut = p - j;
            rules.push(Rule::new(
                key,
                Side::Suffix,
                &input[char_offset(input, cut)..],
                &output[char_offset(output, cut)..],
                j,
            ));
        }
    }

    let s = common_suffix_chars(input, output);
    if s > 0 {
        for j in 0..=max_context.min(s) {
            let keep = s - j;
            rules.push(Rule::new(
                key,
                Side::Prefix,
                &input[..char_offset(input, in_len - keep)],
                &output[..char_offset(output, out_len - keep)],
                j,
            ));
        }
    }

    rules.push(Rule::new(key, Side::WholeWord, input, output, in_len));
    rules
}

fn default_max_context() -> usize {
    3
}

fn default_alphas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Extra stem characters folded into generalised affix variants.
    #[serde(default = "default_max_context")]
    pub max_context: usize,
    /// Candidate smoothing constants; the one with the lowest development
    /// Brier score wins, ties going to the earliest.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            max_context: default_max_context(),
            alphas: default_alphas(),
        }
    }
}

/// Anything that can be trained from scratch on labelled examples.
pub trait Learner {
    type Model: Predictor;

    fn train(&self, train: &[Example], dev: &[Example]) -> Result<Self::Model, LearnerError>;
}

pub trait Predictor {
    fn predict(&self, query: &InflectionQuery) -> Prediction;
}

#[derive(Debug, Clone, Default)]
pub struct RuleLearner {
    pub config: LearnerConfig,
}

impl RuleLearner {
    pub fn new(config: LearnerConfig) -> Self {
        Self { config }
    }
}

impl Learner for RuleLearner {
    type Model = RuleModel;

    fn train(&self, train: &[Example], dev: &[Example]) -> Result<RuleModel, LearnerError> {
        RuleModel::fit(train, dev, &self.config)
    }
}

type MatchIndex = HashMap<(Side, String), Vec<usize>>;

/// A trained rule transducer. Immutable; safe to share across threads.
#[derive(Debug, Clone)]
pub struct RuleModel {
    rule_index: BTreeMap<RuleKey, Vec<Rule>>,
    memo: BTreeMap<(String, RuleKey), String>,
    trained_on: usize,
    alpha: f64,
    // (side, affix) -> positions in the key's ordered rule list
    lookup: HashMap<RuleKey, MatchIndex>,
}

impl PartialEq for RuleModel {
    fn eq(&self, other: &Self) -> bool {
        self.rule_index == other.rule_index
            && self.memo == other.memo
            && self.trained_on == other.trained_on
            && self.alpha.to_bits() == other.alpha.to_bits()
    }
}

/// Every `(side, affix)` under which a rule could apply to `input`.
fn candidate_affixes(input: &str) -> impl Iterator<Item = (Side, &str)> {
    let bounds = input
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(input.len()));
    std::iter::once((Side::WholeWord, input)).chain(
        bounds.flat_map(move |b| [(Side::Suffix, &input[b..]), (Side::Prefix, &input[..b])]),
    )
}

fn build_match_index(rules: &[Rule]) -> MatchIndex {
    let mut index: MatchIndex = HashMap::new();
    for (i, r) in rules.iter().enumerate() {
        index
            .entry((r.side, r.match_affix.clone()))
            .or_default()
            .push(i);
    }
    index
}

impl RuleModel {
    fn fit(train: &[Example], dev: &[Example], config: &LearnerConfig) -> Result<Self, LearnerError> {
        let first = train.first().ok_or(LearnerError::EmptyTrainSet)?;
        let reinflect = first.query.is_reinflection();
        if train
            .iter()
            .chain(dev)
            .any(|e| e.query.is_reinflection() != reinflect)
        {
            return Err(LearnerError::MixedQueryKinds);
        }

        let mut memo = BTreeMap::new();
        let mut by_key: BTreeMap<RuleKey, Vec<&Example>> = BTreeMap::new();
        for ex in train {
            let key = ex.query.key();
            memo.entry((ex.query.input().to_string(), key.clone()))
                .or_insert_with(|| ex.gold.clone());
            by_key.entry(key).or_default().push(ex);
        }

        let mut rule_index = BTreeMap::new();
        for (key, examples) in by_key {
            let mut agg: BTreeMap<(Side, String, String), Rule> = BTreeMap::new();
            for ex in &examples {
                for r in extract_rules(ex.query.input(), &ex.gold, &key, config.max_context) {
                    agg.entry((r.side, r.match_affix.clone(), r.replace_affix.clone()))
                        .and_modify(|e| e.support += 1)
                        .or_insert(r);
                }
            }
            let mut rules: Vec<Rule> = agg.into_values().collect();
            let index = build_match_index(&rules);
            for ex in &examples {
                for (side, affix) in candidate_affixes(ex.query.input()) {
                    let Some(ids) = index.get(&(side, affix.to_string())) else {
                        continue;
                    };
                    for &id in ids {
                        let out = rules[id].apply(ex.query.input());
                        if out.as_deref() != Some(ex.gold.as_str()) {
                            rules[id].failures += 1;
                        }
                    }
                }
            }
            rules.sort_by(Rule::precedence);
            rule_index.insert(key, rules);
        }

        let lookup = rule_index
            .iter()
            .map(|(k, rules)| (k.clone(), build_match_index(rules)))
            .collect();
        let mut model = Self {
            rule_index,
            memo,
            trained_on: train.len(),
            alpha: 1.0,
            lookup,
        };
        model.alpha = model.fit_alpha(dev, &config.alphas);
        Ok(model)
    }

    /// Picks the smoothing constant minimising the development Brier score.
    fn fit_alpha(&self, dev: &[Example], alphas: &[f64]) -> f64 {
        let Some(&first) = alphas.first() else {
            return 1.0;
        };
        if dev.is_empty() {
            return if alphas.contains(&1.0) { 1.0 } else { first };
        }
        let resolved: Vec<(Resolution, bool)> = dev
            .iter()
            .map(|ex| {
                let r = self.resolve(&ex.query);
                let correct = r.form(&ex.query) == ex.gold;
                (r, correct)
            })
            .collect();
        let mut best = (f64::INFINITY, first);
        for &alpha in alphas {
            let brier: f64 = resolved
                .iter()
                .map(|(r, correct)| {
                    let c = r.confidence(alpha);
                    let y = if *correct { 1.0 } else { 0.0 };
                    (c - y) * (c - y)
                })
                .sum::<f64>()
                / resolved.len() as f64;
            if brier < best.0 {
                best = (brier, alpha);
            }
        }
        best.1
    }

    fn resolve(&self, query: &InflectionQuery) -> Resolution<'_> {
        let key = query.key();
        let input = query.input();
        if let Some(gold) = self.memo.get(&(input.to_string(), key.clone())) {
            return Resolution::Memo(gold);
        }
        if let (Some(rules), Some(index)) = (self.rule_index.get(&key), self.lookup.get(&key)) {
            let best = candidate_affixes(input)
                .filter_map(|(side, affix)| index.get(&(side, affix.to_string())))
                .flat_map(|ids| ids.iter().copied())
                .min();
            if let Some(id) = best {
                return Resolution::Rule(&rules[id]);
            }
        }
        Resolution::Identity
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn trained_on(&self) -> usize {
        self.trained_on
    }

    pub fn rules(&self, key: &RuleKey) -> &[Rule] {
        self.rule_index.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn rule_index(&self) -> &BTreeMap<RuleKey, Vec<Rule>> {
        &self.rule_index
    }

    /// Inspection dump: rules per key plus the fitted constants.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "trained_on": self.trained_on,
            "memo_entries": self.memo.len(),
            "rules": self.rule_index.values().flatten().collect::<Vec<_>>(),
        })
    }
}

enum Resolution<'a> {
    Memo(&'a str),
    Rule(&'a Rule),
    Identity,
}

impl Resolution<'_> {
    fn form(&self, query: &InflectionQuery) -> String {
        match self {
            Resolution::Memo(g) => g.to_string(),
            Resolution::Rule(r) => r.apply(query.input()).expect("resolved rule applies"),
            Resolution::Identity => query.input().to_string(),
        }
    }

    fn confidence(&self, alpha: f64) -> f64 {
        match self {
            Resolution::Memo(_) => 1.0,
            Resolution::Rule(r) => r.confidence(alpha),
            Resolution::Identity => 0.0,
        }
    }
}

impl Predictor for RuleModel {
    fn predict(&self, query: &InflectionQuery) -> Prediction {
        let r = self.resolve(query);
        let form = r.form(query);
        Prediction {
            form: if form.is_empty() {
                query.input().to_string()
            } else {
                form
            },
            confidence: r.confidence(self.alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(s: &str) -> TagSet {
        TagSet::parse(s).unwrap()
    }

    fn pst() -> RuleKey {
        RuleKey::Inflect(tag("V;PST"))
    }

    fn ex(lemma: &str, tags: &str, gold: &str) -> Example {
        Example::new(InflectionQuery::inflect(lemma, tag(tags)), gold)
    }

    fn affixes(rules: &[Rule], side: Side) -> Vec<(String, String, usize)> {
        rules
            .iter()
            .filter(|r| r.side == side)
            .map(|r| (r.match_affix.clone(), r.replace_affix.clone(), r.context_len))
            .collect()
    }

    #[test]
    fn walk_rules() {
        let rules = extract_rules("walk", "walked", &pst(), 3);
        assert_eq!(
            affixes(&rules, Side::Suffix),
            vec![
                ("".into(), "ed".into(), 0),
                ("k".into(), "ked".into(), 1),
                ("lk".into(), "lked".into(), 2),
                ("alk".into(), "alked".into(), 3),
            ]
        );
        assert!(affixes(&rules, Side::Prefix).is_empty());
        assert_eq!(
            affixes(&rules, Side::WholeWord),
            vec![("walk".into(), "walked".into(), 4)]
        );
        assert!(rules.iter().all(|r| r.support == 1 && r.failures == 0));
    }

    #[test]
    fn go_went_only_whole_word() {
        let rules = extract_rules("go", "went", &pst(), 3);
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].side, Side::WholeWord);
        assert_eq!(rules[0].apply("go").as_deref(), Some("went"));
    }

    #[test]
    fn prefix_rule_from_common_suffix() {
        let rules = extract_rules("tama", "kotama", &RuleKey::Inflect(tag("N;PL")), 3);
        let pre = affixes(&rules, Side::Prefix);
        assert!(pre.contains(&("".into(), "ko".into(), 0)));
        assert_eq!(rules.iter().find(|r| r.side == Side::Prefix).unwrap().apply("lipa").as_deref(), Some("kolipa"));
    }

    #[test]
    fn multibyte_boundaries() {
        let rules = extract_rules("kötü", "kötüler", &pst(), 3);
        for r in &rules {
            assert_eq!(r.apply("kötü").as_deref(), Some("kötüler"));
        }
    }

    #[test]
    fn aggregated_support() {
        let m = RuleLearner::default()
            .train(&[ex("walk", "V;PST", "walked"), ex("talk", "V;PST", "talked")], &[])
            .unwrap();
        let ed = m
            .rules(&pst())
            .iter()
            .find(|r| r.side == Side::Suffix && r.match_affix.is_empty())
            .unwrap();
        assert_eq!((ed.support, ed.failures), (1 + 1, 0));
    }

    #[test]
    fn failure_counted_on_go() {
        let m = RuleLearner::default()
            .train(&[ex("walk", "V;PST", "walked"), ex("go", "V;PST", "went")], &[])
            .unwrap();
        let ed = m
            .rules(&pst())
            .iter()
            .find(|r| r.side == Side::Suffix && r.match_affix.is_empty())
            .unwrap();
        assert_eq!((ed.support, ed.failures), (1, 1));
    }

    #[test]
    fn predict_talk_from_walk() {
        let m = RuleLearner::default()
            .train(&[ex("walk", "V;PST", "walked")], &[])
            .unwrap();
        let a = m.alpha();
        let p = m.predict(&InflectionQuery::inflect("talk", tag("V;PST")));
        assert_eq!(p.form, "talked");
        assert_eq!(p.confidence, (1.0 + a) / (1.0 + 2.0 * a));
    }

    #[test]
    fn memo_and_identity() {
        let m = RuleLearner::default()
            .train(&[ex("walk", "V;PST", "walked")], &[])
            .unwrap();
        let hit = m.predict(&InflectionQuery::inflect("walk", tag("V;PST")));
        assert_eq!((hit.form.as_str(), hit.confidence), ("walked", 1.0));
        let miss = m.predict(&InflectionQuery::inflect("run", tag("V;FUT")));
        assert_eq!((miss.form.as_str(), miss.confidence), ("run", 0.0));
    }

    #[test]
    fn empty_and_mixed_training_rejected() {
        let l = RuleLearner::default();
        assert_eq!(l.train(&[], &[]).unwrap_err(), LearnerError::EmptyTrainSet);
        let re = Example::new(
            InflectionQuery::reinflect("go", "went", tag("V;PST"), tag("V;PRS;3;SG")),
            "goes",
        );
        assert_eq!(
            l.train(&[ex("walk", "V;PST", "walked"), re], &[]).unwrap_err(),
            LearnerError::MixedQueryKinds
        );
    }

    #[test]
    fn reinflection_went_goes() {
        let q = InflectionQuery::reinflect("go", "went", tag("V;PST"), tag("V;PRS;3;SG"));
        let m = RuleLearner::default().train(&[Example::new(q.clone(), "goes")], &[]).unwrap();
        assert_eq!(m.predict(&q).form, "goes");
        assert_eq!(q.key().to_string(), "V;PST>V;PRS;3;SG");
    }

    #[test]
    fn alpha_fitted_on_dev() {
        // Rules that always work on dev: the smallest alpha gives the
        // sharpest confidence and the lowest Brier score.
        let train: Vec<_> = ["walk", "talk", "jump", "kick"]
            .iter()
            .map(|w| ex(w, "V;PST", &format!("{w}ed")))
            .collect();
        let dev = vec![ex("pick", "V;PST", "picked"), ex("lift", "V;PST", "lifted")];
        let m = RuleLearner::default().train(&train, &dev).unwrap();
        assert_eq!(m.alpha(), 0.5);

        // Rules that always fail on dev: the largest alpha hedges best.
        let dev = vec![ex("pick", "V;PST", "pock"), ex("lift", "V;PST", "loft")];
        let m = RuleLearner::default().train(&train, &dev).unwrap();
        assert_eq!(m.alpha(), 2.0);
    }

    #[test]
    fn retraining_is_identical() {
        let train = vec![ex("walk", "V;PST", "walked"), ex("go", "V;PST", "went"), ex("sing", "V;PST", "sang")];
        let a = RuleLearner::default().train(&train, &train[..1]).unwrap();
        let b = RuleLearner::default().train(&train, &train[..1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json().to_string(), b.to_json().to_string());
    }
}
