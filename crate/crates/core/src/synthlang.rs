//! Synthetic agglutinative languages with analytically known paradigms.
//!
//! A stem is a run of CV syllables; every form is the stem followed by one
//! suffix per slot, in slot order. Optional inflection classes override the
//! suffix of selected slot values. Class membership is drawn per lemma, or
//! fixed by the stem's final syllable.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{TagSet, Triplet};

const MAX_ATTEMPTS: u64 = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid synthetic language config: {0}")]
    Invalid(String),
    #[error("could not draw a fresh stem for lemma {0} in {MAX_ATTEMPTS} attempts")]
    DuplicateLemmas(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotValue {
    pub tag: String,
    #[serde(default)]
    pub suffix: String,
}

impl SlotValue {
    pub fn new(tag: &str, suffix: &str) -> Self {
        Self {
            tag: tag.into(),
            suffix: suffix.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub feature: String,
    pub values: Vec<SlotValue>,
}

impl Slot {
    pub fn new(feature: &str, values: &[(&str, &str)]) -> Self {
        Self {
            feature: feature.into(),
            values: values.iter().map(|(t, s)| SlotValue::new(t, s)).collect(),
        }
    }
}

/// Suffix overrides for one inflection class, keyed by slot value tag.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InflectionClass {
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassAssignment {
    /// Uniform per lemma, independent of its shape.
    #[default]
    Random,
    /// A deterministic function of the stem's final syllable.
    StemFinal,
}

fn default_pos() -> String {
    "V".into()
}

fn default_stem_syllables() -> (usize, usize) {
    (2, 3)
}

fn default_syllables() -> Vec<String> {
    let mut out = Vec::new();
    for c in ["k", "l", "m", "n", "p", "r", "s", "t"] {
        for v in ["a", "e", "i", "o", "u"] {
            out.push(format!("{c}{v}"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default = "default_pos")]
    pub pos: String,
    pub num_lemmas: usize,
    pub slots: Vec<Slot>,
    #[serde(default = "default_syllables")]
    pub syllables: Vec<String>,
    /// Inclusive range of syllables per stem.
    #[serde(default = "default_stem_syllables")]
    pub stem_syllables: (usize, usize),
    #[serde(default)]
    pub classes: Vec<InflectionClass>,
    #[serde(default)]
    pub class_assignment: ClassAssignment,
    /// The only slot value whose suffix depends on the class.
    #[serde(default)]
    pub principal_slot: Option<String>,
    #[serde(default)]
    pub emit_lemma_rows: bool,
}

impl SynthConfig {
    /// A regular noun language: number x case, 8 cells, no classes.
    pub fn regular(num_lemmas: usize) -> Self {
        Self {
            pos: "N".into(),
            num_lemmas,
            slots: vec![
                Slot::new("NUM", &[("SG", ""), ("PL", "lar")]),
                Slot::new("CASE", &[("NOM", ""), ("ACC", "ik"), ("DAT", "em"), ("LOC", "dan")]),
            ],
            syllables: default_syllables(),
            stem_syllables: default_stem_syllables(),
            classes: Vec::new(),
            class_assignment: ClassAssignment::Random,
            principal_slot: None,
            emit_lemma_rows: false,
        }
    }

    pub fn paradigm_size(&self) -> usize {
        self.slots.iter().map(|s| s.values.len()).product()
    }

    fn suffix_for<'a>(&'a self, value: &'a SlotValue, class: Option<usize>) -> &'a str {
        class
            .and_then(|c| self.classes[c].overrides.get(&value.tag))
            .map_or(value.suffix.as_str(), String::as_str)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.num_lemmas == 0 {
            return bad("num_lemmas must be at least 1".into());
        }
        if self.slots.is_empty() {
            return bad("at least one slot is required".into());
        }
        if self.syllables.is_empty() || self.syllables.iter().any(|s| s.is_empty()) {
            return bad("syllables must be nonempty strings".into());
        }
        let (lo, hi) = self.stem_syllables;
        if lo == 0 || lo > hi {
            return bad(format!("bad stem_syllables range {lo}..={hi}"));
        }
        if TagSet::from_features([self.pos.as_str()]).is_err() {
            return bad(format!("bad part-of-speech tag {:?}", self.pos));
        }
        let mut all_tags = BTreeSet::new();
        for slot in &self.slots {
            if slot.values.is_empty() {
                return bad(format!("slot {} has no values", slot.feature));
            }
            for v in &slot.values {
                if TagSet::from_features([v.tag.as_str()]).is_err() || !all_tags.insert(v.tag.as_str()) {
                    return bad(format!("bad or repeated value tag {:?}", v.tag));
                }
            }
            for class in std::iter::once(None).chain((0..self.classes.len()).map(Some)) {
                let suffixes: HashSet<&str> = slot.values.iter().map(|v| self.suffix_for(v, class)).collect();
                if suffixes.len() != slot.values.len() {
                    return bad(format!("suffixes in slot {} are not distinct", slot.feature));
                }
            }
        }
        for class in &self.classes {
            for tag in class.overrides.keys() {
                if !all_tags.contains(tag.as_str()) {
                    return bad(format!("override for unknown value {tag:?}"));
                }
                if let Some(p) = &self.principal_slot {
                    if tag != p {
                        return bad(format!("override for {tag:?} outside principal slot {p:?}"));
                    }
                }
            }
        }
        if let Some(p) = &self.principal_slot {
            if !all_tags.contains(p.as_str()) {
                return bad(format!("principal slot {p:?} is not a slot value"));
            }
            if self.classes.len() < 2 {
                return bad("a principal slot needs at least two classes".into());
            }
            let value = self
                .slots
                .iter()
                .flat_map(|s| &s.values)
                .find(|v| &v.tag == p)
                .expect("checked above");
            let distinct: HashSet<&str> = (0..self.classes.len()).map(|c| self.suffix_for(value, Some(c))).collect();
            if distinct.len() != self.classes.len() {
                return bad(format!("classes do not disambiguate {p:?}"));
            }
        }
        Ok(())
    }
}

/// Generated rows plus the class drawn for each lemma (in lemma order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthLanguage {
    pub triplets: Vec<Triplet>,
    pub lemmas: Vec<String>,
    pub classes: Vec<Option<usize>>,
}

pub fn generate(config: &SynthConfig, seed: u64) -> Result<Vec<Triplet>, SynthError> {
    generate_language(config, seed).map(|l| l.triplets)
}

pub fn generate_language(config: &SynthConfig, seed: u64) -> Result<SynthLanguage, SynthError> {
    config.validate()?;
    let n_classes = config.classes.len();

    let syllable_class: BTreeMap<&str, usize> = if n_classes > 0 && config.class_assignment == ClassAssignment::StemFinal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let mut syl: Vec<&str> = config.syllables.iter().map(String::as_str).collect();
        syl.shuffle(&mut rng);
        syl.iter().enumerate().map(|(i, s)| (*s, i % n_classes)).collect()
    } else {
        BTreeMap::new()
    };

    let mut seen = HashSet::new();
    let mut lemmas = Vec::with_capacity(config.num_lemmas);
    let mut classes = Vec::with_capacity(config.num_lemmas);
    for i in 0..config.num_lemmas {
        let mut drawn = None;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((i as u64) << 8) | attempt);
            let n = rng.gen_range(config.stem_syllables.0..=config.stem_syllables.1);
            let parts: Vec<&str> = (0..n)
                .map(|_| config.syllables[rng.gen_range(0..config.syllables.len())].as_str())
                .collect();
            let stem = parts.concat();
            if seen.contains(&stem) {
                continue;
            }
            let class = match (n_classes, config.class_assignment) {
                (0, _) => None,
                (_, ClassAssignment::Random) => Some(rng.gen_range(0..n_classes)),
                (_, ClassAssignment::StemFinal) => Some(syllable_class[parts.last().expect("n >= 1")]),
            };
            drawn = Some((stem, class));
            break;
        }
        let (stem, class) = drawn.ok_or(SynthError::DuplicateLemmas(i))?;
        seen.insert(stem.clone());
        lemmas.push(stem);
        classes.push(class);
    }

    let pos = TagSet::from_features([config.pos.as_str()]).expect("validated");
    let mut triplets = Vec::with_capacity(config.num_lemmas * (config.paradigm_size() + 1));
    for (stem, class) in lemmas.iter().zip(&classes) {
        if config.emit_lemma_rows {
            triplets.push(Triplet {
                lemma: stem.clone(),
                tags: TagSet::lemma(),
                form: stem.clone(),
            });
        }
        // odometer over slot values, last slot fastest
        let mut digits = vec![0usize; config.slots.len()];
        loop {
            let mut form = stem.clone();
            let mut features = pos.features().to_vec();
            for (slot, &d) in config.slots.iter().zip(&digits) {
                let value = &slot.values[d];
                form.push_str(config.suffix_for(value, *class));
                features.push(value.tag.clone());
            }
            triplets.push(Triplet {
                lemma: stem.clone(),
                tags: TagSet::from_features(features).expect("validated"),
                form,
            });
            let mut k = digits.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < config.slots[k].values.len() {
                    break;
                }
                digits[k] = 0;
            }
            if digits.iter().all(|&d| d == 0) {
                break;
            }
        }
    }
    Ok(SynthLanguage {
        triplets,
        lemmas,
        classes,
    })
}
