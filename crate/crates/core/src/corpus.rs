//! UniMorph-style triplet data, paradigm tables and the unlabelled cell pool.
//!
//! Input rows are tab-separated `lemma<TAB>form<TAB>tags`, one per line. Tags
//! are `;`-separated features such as `V;PRS;3;SG`. A row tagged with the
//! reserved [`LEMMA_TAG`] is a citation row: it restates the lemma and is not
//! an inflected cell.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Canonical string of the tagset reserved for a lemma's citation cell.
pub const LEMMA_TAG: &str = "LEMMA";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: expected 3 tab-separated columns (lemma, form, tags), found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: empty {field} field")]
    EmptyField { line: usize, field: &'static str },
    #[error("invalid tagset {0:?}")]
    InvalidTags(String),
    #[error("conflicting rows for lemma {lemma:?} tags {tags}: {first:?} vs {second:?}")]
    DataConflict {
        lemma: String,
        tags: String,
        first: String,
        second: String,
    },
    #[error("citation row for {lemma:?} has form {form:?}; expected the lemma itself")]
    CitationMismatch { lemma: String, form: String },
    #[error("no inflected forms in input")]
    Empty,
}

fn nfc_trim(s: &str) -> String {
    s.trim().nfc().collect()
}

/// An ordered feature combination identifying one paradigm cell.
///
/// Cheap to clone; equality, hashing and ordering use the canonical string.
#[derive(Clone)]
pub struct TagSet {
    features: Arc<[String]>,
    canonical: Arc<str>,
}

impl TagSet {
    pub fn parse(s: &str) -> Result<Self, CorpusError> {
        let features: Vec<String> = s.split(';').map(nfc_trim).collect();
        if features.iter().any(String::is_empty) {
            return Err(CorpusError::InvalidTags(s.to_string()));
        }
        Self::from_features(features)
    }

    pub fn from_features<I, S>(features: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let features: Vec<String> = features.into_iter().map(Into::into).collect();
        if features.is_empty()
            || features
                .iter()
                .any(|f| f.is_empty() || f.contains(';') || f.chars().any(char::is_whitespace))
        {
            return Err(CorpusError::InvalidTags(features.join(";")));
        }
        let canonical: Arc<str> = features.join(";").into();
        Ok(Self {
            features: features.into(),
            canonical,
        })
    }

    /// The reserved citation-cell tagset.
    pub fn lemma() -> Self {
        Self::from_features([LEMMA_TAG]).expect("reserved tag is valid")
    }

    pub fn is_lemma(&self) -> bool {
        &*self.canonical == LEMMA_TAG
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn has_feature(&self, feature: &str) -> bool {
        self.features.iter().any(|f| f == feature)
    }
}

impl PartialEq for TagSet {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for TagSet {}

impl Hash for TagSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state)
    }
}

impl PartialOrd for TagSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TagSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical.cmp(&other.canonical)
    }
}

impl Borrow<str> for TagSet {
    fn borrow(&self) -> &str {
        &self.canonical
    }
}

impl fmt::Display for TagSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

impl fmt::Debug for TagSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TagSet({})", self.canonical)
    }
}

impl Serialize for TagSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical)
    }
}

impl<'de> Deserialize<'de> for TagSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        TagSet::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// One data row: lemma, tags and the inflected form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub lemma: String,
    pub tags: TagSet,
    pub form: String,
}

impl Triplet {
    /// Builds a triplet, normalising both strings to NFC and trimming them.
    pub fn new(lemma: &str, tags: TagSet, form: &str) -> Result<Self, CorpusError> {
        let lemma = nfc_trim(lemma);
        let form = nfc_trim(form);
        if lemma.is_empty() {
            return Err(CorpusError::EmptyField { line: 0, field: "lemma" });
        }
        if form.is_empty() {
            return Err(CorpusError::EmptyField { line: 0, field: "form" });
        }
        Ok(Self { lemma, tags, form })
    }
}

/// Parses tab-separated `lemma, form, tags` rows. Blank lines are skipped;
/// LF and CRLF endings are both accepted.
pub fn parse_unimorph(text: &str) -> Result<Vec<Triplet>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 3 {
            return Err(CorpusError::ColumnCount {
                line,
                found: cols.len(),
            });
        }
        for (col, field) in cols.iter().zip(["lemma", "form", "tags"]) {
            if col.trim().is_empty() {
                return Err(CorpusError::EmptyField { line, field });
            }
        }
        let tags = TagSet::parse(cols[2]).map_err(|_| CorpusError::EmptyField { line, field: "tags" })?;
        out.push(Triplet::new(cols[0], tags, cols[1]).map_err(|e| match e {
            CorpusError::EmptyField { field, .. } => CorpusError::EmptyField { line, field },
            other => other,
        })?);
    }
    Ok(out)
}

/// Writes triplets back in the same three-column layout, LF-terminated.
pub fn to_tsv(triplets: &[Triplet]) -> String {
    let mut s = String::new();
    for t in triplets {
        s.push_str(&t.lemma);
        s.push('\t');
        s.push_str(&t.form);
        s.push('\t');
        s.push_str(t.tags.canonical());
        s.push('\n');
    }
    s
}

/// All gold forms of a single lemma, keyed by tagset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParadigmTable {
    pub lemma: String,
    pub cells: BTreeMap<TagSet, String>,
}

impl ParadigmTable {
    pub fn new(lemma: impl Into<String>) -> Self {
        Self {
            lemma: lemma.into(),
            cells: BTreeMap::new(),
        }
    }

    /// Number of inflected cells (the citation cell is not counted).
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Form, lemma and average-paradigm-size counts for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LanguageStats {
    pub num_forms: u64,
    pub num_lemmas: u64,
    /// `num_forms / num_lemmas`, kept exact.
    pub aps: Ratio<u64>,
}

impl LanguageStats {
    fn from_tables(tables: &[ParadigmTable]) -> Result<Self, CorpusError> {
        let num_forms: u64 = tables.iter().map(|t| t.len() as u64).sum();
        let num_lemmas = tables.len() as u64;
        if num_forms == 0 || num_lemmas == 0 {
            return Err(CorpusError::Empty);
        }
        Ok(Self {
            num_forms,
            num_lemmas,
            aps: Ratio::new(num_forms, num_lemmas),
        })
    }

    pub fn aps_f64(&self) -> f64 {
        *self.aps.numer() as f64 / *self.aps.denom() as f64
    }

    pub fn to_record(&self, language: &str) -> StatsRecord {
        StatsRecord {
            language: language.to_string(),
            forms: self.num_forms,
            lemmas: self.num_lemmas,
            aps: self.aps_f64(),
        }
    }
}

/// JSON shape of [`LanguageStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub language: String,
    pub forms: u64,
    pub lemmas: u64,
    pub aps: f64,
}

/// A paradigm cell: lemma position in the lexicon plus its tagset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub lemma_index: usize,
    pub tags: TagSet,
}

impl CellId {
    pub fn new(lemma_index: usize, tags: TagSet) -> Self {
        Self { lemma_index, tags }
    }
}

/// The gold data: one table per distinct lemma, in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    tables: Vec<ParadigmTable>,
    stats: LanguageStats,
    index: HashMap<String, usize>,
}

impl Lexicon {
    pub fn tables(&self) -> &[ParadigmTable] {
        &self.tables
    }

    pub fn stats(&self) -> &LanguageStats {
        &self.stats
    }

    pub fn table(&self, lemma_index: usize) -> Option<&ParadigmTable> {
        self.tables.get(lemma_index)
    }

    pub fn lemma(&self, lemma_index: usize) -> &str {
        &self.tables[lemma_index].lemma
    }

    pub fn lemma_index(&self, lemma: &str) -> Option<usize> {
        self.index.get(lemma).copied()
    }

    pub fn gold(&self, cell: &CellId) -> Option<&str> {
        self.tables
            .get(cell.lemma_index)?
            .cells
            .get(&cell.tags)
            .map(String::as_str)
    }

    /// Every inflected cell, in lexicon order.
    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.tables.iter().enumerate().flat_map(|(i, t)| {
            t.cells.keys().map(move |tags| CellId::new(i, tags.clone()))
        })
    }

    /// Distinct inflected tagsets across the lexicon, sorted.
    pub fn tagsets(&self) -> BTreeSet<TagSet> {
        self.tables
            .iter()
            .flat_map(|t| t.cells.keys().cloned())
            .collect()
    }

    pub fn max_paradigm_size(&self) -> usize {
        self.tables.iter().map(ParadigmTable::len).max().unwrap_or(0)
    }
}

/// Groups triplets into paradigm tables.
///
/// Exact duplicate rows collapse into one cell; the same cell with two
/// different forms is a [`CorpusError::DataConflict`].
pub fn build_lexicon(triplets: &[Triplet]) -> Result<Lexicon, CorpusError> {
    let mut tables: Vec<ParadigmTable> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for t in triplets {
        let idx = *index.entry(t.lemma.clone()).or_insert_with(|| {
            tables.push(ParadigmTable::new(t.lemma.clone()));
            tables.len() - 1
        });
        if t.tags.is_lemma() {
            if t.form != t.lemma {
                return Err(CorpusError::CitationMismatch {
                    lemma: t.lemma.clone(),
                    form: t.form.clone(),
                });
            }
            continue;
        }
        let table = &mut tables[idx];
        match table.cells.get(&t.tags) {
            Some(existing) if *existing != t.form => {
                return Err(CorpusError::DataConflict {
                    lemma: t.lemma.clone(),
                    tags: t.tags.to_string(),
                    first: existing.clone(),
                    second: t.form.clone(),
                });
            }
            Some(_) => {}
            None => {
                table.cells.insert(t.tags.clone(), t.form.clone());
            }
        }
    }
    let stats = LanguageStats::from_tables(&tables)?;
    Ok(Lexicon {
        tables,
        stats,
        index,
    })
}

/// Cells not yet elicited. Iteration order is `(lemma_index, tags)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pool {
    cells: BTreeSet<CellId>,
}

impl Pool {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: &CellId) -> bool {
        self.cells.contains(cell)
    }

    pub fn remove(&mut self, cell: &CellId) -> bool {
        self.cells.remove(cell)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CellId> {
        self.cells.iter()
    }

    /// Whether every inflected cell of `lemma_index` is still unlabelled.
    pub fn holds_full_paradigm(&self, lexicon: &Lexicon, lemma_index: usize) -> bool {
        lexicon.table(lemma_index).is_some_and(|t| {
            t.cells
                .keys()
                .all(|tags| self.contains(&CellId::new(lemma_index, tags.clone())))
        })
    }
}

impl FromIterator<CellId> for Pool {
    fn from_iter<I: IntoIterator<Item = CellId>>(iter: I) -> Self {
        Self {
            cells: iter.into_iter().collect(),
        }
    }
}

/// The initial pool: every inflected cell of every table.
pub fn init_pool(lexicon: &Lexicon) -> Pool {
    lexicon.cells().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(s: &str) -> TagSet {
        TagSet::parse(s).unwrap()
    }

    #[test]
    fn parses_went() {
        let t = parse_unimorph("go\twent\tV;PST").unwrap();
        assert_eq!(t, vec![Triplet::new("go", tag("V;PST"), "went").unwrap()]);
        assert_eq!(t[0].tags.features(), ["V", "PST"]);
    }

    #[test]
    fn blank_lines_skipped() {
        assert!(parse_unimorph("").unwrap().is_empty());
        let t = parse_unimorph("\r\ngo\twent\tV;PST\r\n\r\n  \n").unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn column_count_error_has_line() {
        let err = parse_unimorph("go\twent\tV;PST\ndog\tdogs").unwrap_err();
        assert_eq!(err, CorpusError::ColumnCount { line: 2, found: 2 });
    }

    #[test]
    fn empty_field_rejected() {
        let err = parse_unimorph("go\t \tV;PST").unwrap_err();
        assert_eq!(err, CorpusError::EmptyField { line: 1, field: "form" });
        let err = parse_unimorph("go\twent\tV;;PST").unwrap_err();
        assert_eq!(err, CorpusError::EmptyField { line: 1, field: "tags" });
    }

    #[test]
    fn nfc_normalised() {
        // "e" + combining acute vs precomposed
        let t = parse_unimorph("cafe\u{301}\tcafe\u{301}s\tN;PL").unwrap();
        assert_eq!(t[0].lemma, "caf\u{e9}");
        assert_eq!(t[0].form, "caf\u{e9}s");
    }

    #[test]
    fn tagset_canonical() {
        let t = tag(" V ; PST ");
        assert_eq!(t.canonical(), "V;PST");
        assert_eq!(t, tag("V;PST"));
        assert!(TagSet::from_features(Vec::<String>::new()).is_err());
        assert!(TagSet::from_features(["A B"]).is_err());
    }

    #[test]
    fn walk_table() {
        let rows = parse_unimorph("walk\twalked\tV;PST\nwalk\twalks\tV;PRS;3;SG").unwrap();
        let lex = build_lexicon(&rows).unwrap();
        assert_eq!(lex.tables().len(), 1);
        assert_eq!(lex.tables()[0].len(), 2);
        assert_eq!(lex.stats().num_forms, 2);
        assert_eq!(lex.stats().num_lemmas, 1);
        assert_eq!(lex.stats().aps, Ratio::from_integer(2));
    }

    #[test]
    fn duplicate_rows_dedup() {
        let rows = parse_unimorph("walk\twalked\tV;PST\nwalk\twalked\tV;PST").unwrap();
        let lex = build_lexicon(&rows).unwrap();
        assert_eq!(lex.stats().num_forms, 1);
    }

    #[test]
    fn conflicting_rows_error() {
        let rows = parse_unimorph("dream\tdreamt\tV;PST\ndream\tdreamed\tV;PST").unwrap();
        match build_lexicon(&rows).unwrap_err() {
            CorpusError::DataConflict { first, second, .. } => {
                assert_eq!(first, "dreamt");
                assert_eq!(second, "dreamed");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn citation_rows_not_cells() {
        let rows = parse_unimorph("tapo\ttapo\tLEMMA\ntapo\ttapolar\tN;PL").unwrap();
        let lex = build_lexicon(&rows).unwrap();
        assert_eq!(lex.stats().num_forms, 1);
        let bad = parse_unimorph("tapo\ttapi\tLEMMA\ntapo\ttapolar\tN;PL").unwrap();
        assert!(matches!(build_lexicon(&bad), Err(CorpusError::CitationMismatch { .. })));
    }

    #[test]
    fn syncretic_forms_are_distinct_cells() {
        let rows = parse_unimorph("put\tput\tV;PST\nput\tput\tV;V.PTCP;PST").unwrap();
        let lex = build_lexicon(&rows).unwrap();
        assert_eq!(init_pool(&lex).len(), 2);
    }

    #[test]
    fn pool_of_four() {
        let rows = parse_unimorph(
            "walk\twalks\tV;PRS;3;SG\nwalk\twalked\tV;PST\nwalk\twalking\tV;V.PTCP;PRS\nwalk\twalked\tV;V.PTCP;PST",
        )
        .unwrap();
        let lex = build_lexicon(&rows).unwrap();
        let pool = init_pool(&lex);
        assert_eq!(pool.len(), 4);
        assert!(pool.holds_full_paradigm(&lex, 0));
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(build_lexicon(&[]).unwrap_err(), CorpusError::Empty);
    }

    #[test]
    fn stats_json() {
        let rows = parse_unimorph("a\tab\tX;Y\na\tac\tX;Z\nb\tbb\tX;Y").unwrap();
        let lex = build_lexicon(&rows).unwrap();
        let json = serde_json::to_string(&lex.stats().to_record("xx")).unwrap();
        assert_eq!(json, r#"{"language":"xx","forms":3,"lemmas":2,"aps":1.5}"#);
    }
}
