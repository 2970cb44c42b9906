//! Per-category word statistics built from ground-truth annotated documents.
//!
//! For every normalized word the stats track how often it occurs overall and
//! how often it falls inside a region of each category. Those counts back two
//! scores:
//!
//! * red: in-region occurrences over total occurrences, and
//! * blue: a Laplace-smoothed posterior of "belongs to the category", with an
//!   edit-distance fallback against the category dictionary for words the
//!   corpus never saw (OCR misspellings).
//!
//! Dictionaries are extracted from the ground truth (every word seen inside a
//! category's regions); external word lists can be unioned in on top.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PixelBox;
use crate::ocr::{tokenize, OcrDocument, OcrWord, TokenView};
use crate::real::{from_u64, half, Real};
use crate::Score;

/// Textual category of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Ingredients,
    NutritionalFacts,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Ingredients, Category::NutritionalFacts];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Ingredients => "ingredients",
            Category::NutritionalFacts => "nutritional_facts",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ingredients" => Ok(Category::Ingredients),
            "nutritional_facts" => Ok(Category::NutritionalFacts),
            other => Err(format!(
                "unknown category `{other}` (expected one of: ingredients, nutritional_facts)"
            )),
        }
    }
}

/// A human-labeled box tagged with its category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRegion {
    pub category: Category,
    pub bbox: PixelBox,
}

/// The annotation file format: `{doc_id, regions: [{category, bbox}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAnnotations {
    pub doc_id: String,
    pub regions: Vec<GroundTruthRegion>,
}

/// An OCR document paired with its ground-truth regions.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDocument {
    pub doc: OcrDocument,
    pub regions: Vec<GroundTruthRegion>,
}

impl AnnotatedDocument {
    pub fn new(doc: OcrDocument, regions: Vec<GroundTruthRegion>) -> Result<Self, LexiconError> {
        for r in &regions {
            if !r.bbox.contained_in(doc.width, doc.height) {
                return Err(LexiconError::RegionOutOfBounds(format!(
                    "doc `{}`: region {} exceeds image bounds {}x{}",
                    doc.doc_id, r.bbox, doc.width, doc.height
                )));
            }
        }
        Ok(Self { doc, regions })
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("alpha must be > 0, got {0}")]
    InvalidAlpha(String),
    #[error("fuzzy floor must be in [0, 1], got {0}")]
    InvalidFuzzyFloor(String),
    #[error("cannot merge stats: {0}")]
    MergeMismatch(String),
    #[error("stats file version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("malformed stats file: {0}")]
    Malformed(String),
    #[error("{0}")]
    RegionOutOfBounds(String),
}

/// Occurrence counts for one normalized word.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCounts {
    pub total: u64,
    /// Only categories with a nonzero count are present.
    #[serde(default)]
    pub in_region: BTreeMap<Category, u64>,
}

/// Word occurrence statistics and dictionaries for all categories.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconStats<S: Real = Score> {
    alpha: S,
    fuzzy_floor: S,
    words: BTreeMap<String, WordCounts>,
    dictionaries: BTreeMap<Category, BTreeSet<String>>,
}

const STATS_VERSION: u32 = 1;

/// Default Laplace smoothing constant.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Default minimum fuzzy similarity for the unseen-word fallback.
pub const DEFAULT_FUZZY_FLOOR: f64 = 0.8;
/// Word-in-region membership: intersection must cover at least half the word box.
const MIN_OVERLAP_NUM: u64 = 1;
const MIN_OVERLAP_DEN: u64 = 2;

/// Categories of the regions that contain `word`, where containment means the
/// intersection covers at least half of the word box area.
pub fn assign_word_to_regions(
    word: &OcrWord,
    regions: &[GroundTruthRegion],
) -> BTreeSet<Category> {
    let word_area = word.bbox.area();
    regions
        .iter()
        .filter(|r| {
            MIN_OVERLAP_DEN * r.bbox.intersection_area(&word.bbox) >= MIN_OVERLAP_NUM * word_area
        })
        .map(|r| r.category)
        .collect()
}

/// Counts every word occurrence in the corpus (token counting: each occurrence
/// increments, keyed by the normalized form; empty normalized forms are
/// skipped) and extracts the per-category dictionaries.
pub fn build_stats<S: Real>(
    corpus: &[AnnotatedDocument],
    alpha: S,
) -> Result<LexiconStats<S>, LexiconError> {
    if corpus.is_empty() {
        return Err(LexiconError::EmptyCorpus);
    }
    let mut stats = LexiconStats::empty(alpha)?;
    for doc in corpus {
        for word in &doc.doc.words {
            let token = tokenize(&word.raw_text);
            if token.normalized.is_empty() {
                continue;
            }
            let counts = stats.words.entry(token.normalized).or_default();
            counts.total += 1;
            for category in assign_word_to_regions(word, &doc.regions) {
                *counts.in_region.entry(category).or_insert(0) += 1;
            }
        }
    }
    stats.rebuild_dictionaries();
    Ok(stats)
}

/// Combines two stats built with the same smoothing parameters: counts are
/// summed, dictionaries unioned. Commutative and associative.
pub fn merge_stats<S: Real>(
    a: LexiconStats<S>,
    b: LexiconStats<S>,
) -> Result<LexiconStats<S>, LexiconError> {
    if a.alpha != b.alpha {
        return Err(LexiconError::MergeMismatch(format!(
            "alpha mismatch: {} vs {}",
            a.alpha, b.alpha
        )));
    }
    if a.fuzzy_floor != b.fuzzy_floor {
        return Err(LexiconError::MergeMismatch(format!(
            "fuzzy floor mismatch: {} vs {}",
            a.fuzzy_floor, b.fuzzy_floor
        )));
    }
    let mut out = a;
    for (word, counts) in b.words {
        let entry = out.words.entry(word).or_default();
        entry.total += counts.total;
        for (category, n) in counts.in_region {
            *entry.in_region.entry(category).or_insert(0) += n;
        }
    }
    for (category, dict) in b.dictionaries {
        out.dictionaries.entry(category).or_default().extend(dict);
    }
    Ok(out)
}

/// Serializes stats to the versioned JSON stats file (byte-stable: sorted
/// maps, fixed field order).
pub fn save_stats<S: Real>(stats: &LexiconStats<S>) -> Vec<u8> {
    let file = StatsFile {
        version: STATS_VERSION,
        alpha: stats.alpha,
        fuzzy_floor: stats.fuzzy_floor,
        categories: Category::ALL.to_vec(),
        words: stats.words.clone(),
        dictionaries: stats
            .dictionaries
            .iter()
            .map(|(c, d)| (*c, d.iter().cloned().collect()))
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("stats serialize");
    out.push(b'\n');
    out
}

/// Loads a stats file, checking the format version first.
pub fn load_stats<S: Real>(bytes: &[u8]) -> Result<LexiconStats<S>, LexiconError> {
    #[derive(Deserialize)]
    struct VersionProbe {
        version: u32,
    }
    let probe: VersionProbe = serde_json::from_slice(bytes)
        .map_err(|e| LexiconError::Malformed(e.to_string()))?;
    if probe.version != STATS_VERSION {
        return Err(LexiconError::VersionMismatch {
            expected: STATS_VERSION,
            found: probe.version,
        });
    }
    let file: StatsFile<S> = serde_json::from_slice(bytes)
        .map_err(|e| LexiconError::Malformed(e.to_string()))?;
    let mut stats = LexiconStats::empty(file.alpha)?.with_fuzzy_floor(file.fuzzy_floor)?;
    for (word, counts) in &file.words {
        for (category, n) in &counts.in_region {
            if *n > counts.total {
                return Err(LexiconError::Malformed(format!(
                    "word `{word}`: in_region[{category}] = {n} exceeds total = {}",
                    counts.total
                )));
            }
        }
    }
    stats.words = file.words;
    for (category, dict) in file.dictionaries {
        stats
            .dictionaries
            .entry(category)
            .or_default()
            .extend(dict.into_iter().filter(|w| !w.is_empty()));
    }
    Ok(stats)
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real"))]
struct StatsFile<S: Real> {
    version: u32,
    alpha: S,
    fuzzy_floor: S,
    categories: Vec<Category>,
    words: BTreeMap<String, WordCounts>,
    dictionaries: BTreeMap<Category, Vec<String>>,
}

impl<S: Real> LexiconStats<S> {
    fn empty(alpha: S) -> Result<Self, LexiconError> {
        // partial_cmp keeps NaN out as well
        if alpha.partial_cmp(&S::zero()) != Some(std::cmp::Ordering::Greater) {
            return Err(LexiconError::InvalidAlpha(alpha.to_string()));
        }
        let floor = S::from_f64(DEFAULT_FUZZY_FLOOR).expect("default floor");
        Ok(Self {
            alpha,
            fuzzy_floor: floor,
            words: BTreeMap::new(),
            dictionaries: Category::ALL.iter().map(|c| (*c, BTreeSet::new())).collect(),
        })
    }

    pub fn with_fuzzy_floor(mut self, floor: S) -> Result<Self, LexiconError> {
        if !(S::zero()..=S::one()).contains(&floor) {
            return Err(LexiconError::InvalidFuzzyFloor(floor.to_string()));
        }
        self.fuzzy_floor = floor;
        Ok(self)
    }

    fn rebuild_dictionaries(&mut self) {
        for category in Category::ALL {
            let dict: BTreeSet<String> = self
                .words
                .iter()
                .filter(|(_, c)| c.in_region.get(&category).copied().unwrap_or(0) > 0)
                .map(|(w, _)| w.clone())
                .collect();
            self.dictionaries.insert(category, dict);
        }
    }

    /// Unions externally curated words into a category dictionary. Entries are
    /// normalized the same way corpus words are; empty forms are dropped.
    pub fn add_dictionary_words<I, T>(&mut self, category: Category, words: I)
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let dict = self.dictionaries.entry(category).or_default();
        for w in words {
            let normalized = tokenize(w.as_ref()).normalized;
            if !normalized.is_empty() {
                dict.insert(normalized);
            }
        }
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn fuzzy_floor(&self) -> S {
        self.fuzzy_floor
    }

    pub fn word_total(&self, normalized: &str) -> u64 {
        self.words.get(normalized).map_or(0, |c| c.total)
    }

    pub fn word_in_region(&self, normalized: &str, category: Category) -> u64 {
        self.words
            .get(normalized)
            .and_then(|c| c.in_region.get(&category))
            .copied()
            .unwrap_or(0)
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn iter_words(&self) -> impl Iterator<Item = (&str, &WordCounts)> {
        self.words.iter().map(|(w, c)| (w.as_str(), c))
    }

    pub fn dictionary(&self, category: Category) -> &BTreeSet<String> {
        &self.dictionaries[&category]
    }

    /// In-region occurrences over total occurrences; 0 for unseen words and
    /// empty tokens.
    pub fn red_score(&self, token: &TokenView, category: Category) -> S {
        if token.normalized.is_empty() {
            return S::zero();
        }
        match self.words.get(&token.normalized) {
            None => S::zero(),
            Some(c) => {
                let k = c.in_region.get(&category).copied().unwrap_or(0);
                crate::real::ratio(k, c.total)
            }
        }
    }

    /// Laplace-smoothed posterior `(k + alpha) / (n + 2*alpha)` for seen
    /// words. Unseen words fall back to the best normalized edit-distance
    /// similarity against the category dictionary when it reaches the fuzzy
    /// floor, and to the symmetric prior 0.5 otherwise. Empty tokens score 0.
    pub fn blue_score(&self, token: &TokenView, category: Category) -> S {
        if token.normalized.is_empty() {
            return S::zero();
        }
        if let Some(c) = self.words.get(&token.normalized) {
            let k = c.in_region.get(&category).copied().unwrap_or(0);
            let two_alpha = self.alpha + self.alpha;
            return (from_u64::<S>(k) + self.alpha) / (from_u64::<S>(c.total) + two_alpha);
        }
        let best = self
            .dictionary(category)
            .iter()
            .map(|entry| similarity::<S>(&token.normalized, entry))
            .fold(None, |acc: Option<S>, s| {
                Some(acc.map_or(s, |a| if s > a { s } else { a }))
            });
        match best {
            Some(f) if f >= self.fuzzy_floor => f,
            _ => half(),
        }
    }
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)` over Unicode scalar values.
fn similarity<S: Real>(a: &str, b: &str) -> S {
    let la = a.chars().count() as u64;
    let lb = b.chars().count() as u64;
    let denom = la.max(lb);
    if denom == 0 {
        return S::one();
    }
    S::one() - crate::real::ratio::<S>(levenshtein(a, b), denom)
}

fn levenshtein(a: &str, b: &str) -> u64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len() as u64;
    }
    let mut prev: Vec<u64> = (0..=b.len() as u64).collect();
    let mut curr = vec![0u64; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i as u64 + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = u64::from(ca != cb);
            curr[j + 1] = (prev[j + 1] + 1).min(curr[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}
