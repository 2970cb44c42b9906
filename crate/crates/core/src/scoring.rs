//! Per-word channel scores for a target category.
//!
//! A word's relevance is a triple of intensities in `[0, 1]`:
//! red = in-region occurrence ratio, green = punctuation/numeric heuristic,
//! blue = smoothed dictionary posterior. Red and blue come from
//! [`LexiconStats`]; green depends only on the raw text.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::lexicon::{Category, LexiconStats};
use crate::ocr::{tokenize, OcrWord, TokenView};
use crate::real::Real;
use crate::Score;

/// One word's (red, green, blue) relevance for a category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTriple<S: Real = Score> {
    pub red: S,
    pub green: S,
    pub blue: S,
}

impl<S: Real> ScoreTriple<S> {
    pub fn zero() -> Self {
        Self {
            red: S::zero(),
            green: S::zero(),
            blue: S::zero(),
        }
    }

    pub fn channel(&self, index: usize) -> S {
        match index {
            0 => self.red,
            1 => self.green,
            2 => self.blue,
            _ => panic!("channel index out of range: {index}"),
        }
    }
}

/// Binary punctuation/numeric heuristic: commas or parentheses fire for
/// ingredients, decimal digits or `%` for nutritional facts.
pub fn green_score<S: Real>(token: &TokenView, category: Category) -> S {
    let hit = match category {
        Category::Ingredients => token.has_comma || token.has_paren,
        Category::NutritionalFacts => token.has_digit || token.has_percent,
    };
    if hit {
        S::one()
    } else {
        S::zero()
    }
}

/// Per-category trigger characters for the green channel, overridable from a
/// config file of the shape `{"<category>": {"green_triggers": [",", "()"]}}`
/// (all characters of every array entry join the set).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerConfig {
    triggers: BTreeMap<Category, BTreeSet<char>>,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        let mut triggers = BTreeMap::new();
        triggers.insert(Category::Ingredients, ",()".chars().collect());
        triggers.insert(Category::NutritionalFacts, "0123456789%".chars().collect());
        Self { triggers }
    }
}

impl TriggerConfig {
    /// Applies overrides from a config file on top of the defaults. Categories
    /// absent from the file keep their default trigger set.
    pub fn from_json(bytes: &[u8]) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Entry {
            green_triggers: Vec<String>,
        }
        let raw: BTreeMap<Category, Entry> =
            serde_json::from_slice(bytes).map_err(|e| format!("malformed trigger config: {e}"))?;
        let mut cfg = Self::default();
        for (category, entry) in raw {
            let set: BTreeSet<char> = entry.green_triggers.iter().flat_map(|s| s.chars()).collect();
            cfg.triggers.insert(category, set);
        }
        Ok(cfg)
    }

    pub fn green_raw<S: Real>(&self, raw_text: &str, category: Category) -> S {
        let set = &self.triggers[&category];
        if raw_text.chars().any(|c| set.contains(&c)) {
            S::one()
        } else {
            S::zero()
        }
    }
}

/// Scoring knobs shared by the rasterizer and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreConfig {
    /// Words with OCR confidence below this score (0, 0, 0). Off by default.
    pub min_ocr_confidence: f64,
    pub triggers: TriggerConfig,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            min_ocr_confidence: 0.0,
            triggers: TriggerConfig::default(),
        }
    }
}

/// Scores one word for one category with default configuration.
pub fn score_word<S: Real>(
    stats: &LexiconStats<S>,
    word: &OcrWord,
    category: Category,
) -> ScoreTriple<S> {
    score_word_with(stats, word, category, &ScoreConfig::default())
}

/// Scores one word for one category. The raw text is tokenized once; the
/// confidence gate zeroes all channels for low-confidence OCR junk.
pub fn score_word_with<S: Real>(
    stats: &LexiconStats<S>,
    word: &OcrWord,
    category: Category,
    config: &ScoreConfig,
) -> ScoreTriple<S> {
    if word.confidence < config.min_ocr_confidence {
        return ScoreTriple::zero();
    }
    let token = tokenize(&word.raw_text);
    ScoreTriple {
        red: stats.red_score(&token, category),
        green: config.triggers.green_raw(&word.raw_text, category),
        blue: stats.blue_score(&token, category),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PixelBox;
    use crate::lexicon::{build_stats, AnnotatedDocument, GroundTruthRegion};
    use crate::ocr::OcrDocument;

    fn word(text: &str, bbox: [u32; 4]) -> OcrWord {
        OcrWord {
            raw_text: text.to_string(),
            bbox: PixelBox::new(bbox[0], bbox[1], bbox[2], bbox[3]).unwrap(),
            confidence: 1.0,
        }
    }

    /// "milk" 4 times, 3 inside ingredients regions.
    fn milk_stats() -> LexiconStats<f64> {
        let doc = AnnotatedDocument::new(
            OcrDocument {
                doc_id: "d".into(),
                width: 200,
                height: 200,
                words: vec![
                    word("milk", [0, 0, 10, 10]),
                    word("milk", [12, 0, 22, 10]),
                    word("milk", [24, 0, 34, 10]),
                    word("milk", [100, 100, 110, 110]),
                ],
            },
            vec![GroundTruthRegion {
                category: Category::Ingredients,
                bbox: PixelBox::new(0, 0, 50, 20).unwrap(),
            }],
        )
        .unwrap();
        build_stats(&[doc], 1.0).unwrap()
    }

    #[test]
    fn green_fires_on_trigger_characters() {
        assert_eq!(green_score::<f64>(&tokenize(","), Category::Ingredients), 1.0);
        assert_eq!(green_score::<f64>(&tokenize("milk"), Category::Ingredients), 0.0);
        assert_eq!(
            green_score::<f64>(&tokenize("15%"), Category::NutritionalFacts),
            1.0
        );
        assert_eq!(
            green_score::<f64>(&tokenize("(soy)"), Category::NutritionalFacts),
            0.0
        );
    }

    #[test]
    fn default_triggers_match_flag_based_green() {
        let cfg = TriggerConfig::default();
        for raw in ["milk", "milk,", "(soy)", "15%", "3.5", "a%b", "plain"] {
            let token = tokenize(raw);
            for category in Category::ALL {
                assert_eq!(
                    cfg.green_raw::<f64>(raw, category),
                    green_score::<f64>(&token, category),
                    "raw = {raw:?}, category = {category}"
                );
            }
        }
    }

    #[test]
    fn trigger_overrides_replace_one_category() {
        let cfg = TriggerConfig::from_json(
            br#"{"ingredients": {"green_triggers": [";"]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.green_raw::<f64>("a;b", Category::Ingredients), 1.0);
        assert_eq!(cfg.green_raw::<f64>("a,b", Category::Ingredients), 0.0);
        // Untouched category keeps defaults.
        assert_eq!(cfg.green_raw::<f64>("12", Category::NutritionalFacts), 1.0);
    }

    #[test]
    fn score_word_composes_channels() {
        let stats = milk_stats();
        let triple = score_word(&stats, &word("milk", [0, 0, 10, 10]), Category::Ingredients);
        assert_eq!(triple.red, 0.75);
        assert_eq!(triple.green, 0.0);
        assert!((triple.blue - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn all_punctuation_word_scores_green_only() {
        let stats = milk_stats();
        let triple = score_word(&stats, &word("(", [0, 0, 5, 5]), Category::Ingredients);
        assert_eq!((triple.red, triple.green, triple.blue), (0.0, 1.0, 0.0));
    }

    #[test]
    fn unseen_word_for_foreign_category_scores_prior_blue() {
        let stats = milk_stats();
        let triple = score_word(
            &stats,
            &word("zzzzz", [0, 0, 5, 5]),
            Category::NutritionalFacts,
        );
        assert_eq!((triple.red, triple.green, triple.blue), (0.0, 0.0, 0.5));
    }

    #[test]
    fn confidence_gate_zeroes_all_channels() {
        let stats = milk_stats();
        let mut w = word("milk,", [0, 0, 10, 10]);
        w.confidence = 0.3;
        let cfg = ScoreConfig {
            min_ocr_confidence: 0.5,
            ..Default::default()
        };
        let triple = score_word_with(&stats, &w, Category::Ingredients, &cfg);
        assert_eq!(triple, ScoreTriple::zero());
        // Default config leaves the gate off.
        let triple = score_word(&stats, &w, Category::Ingredients);
        assert!(triple.red > 0.0 && triple.green == 1.0);
    }

    #[test]
    fn predominant_ingredient_word_outranks_other_category() {
        let stats = milk_stats();
        let w = word("milk", [0, 0, 10, 10]);
        let ing: ScoreTriple<f64> = score_word(&stats, &w, Category::Ingredients);
        let nut: ScoreTriple<f64> = score_word(&stats, &w, Category::NutritionalFacts);
        assert!(ing.red > nut.red, "{} vs {}", ing.red, nut.red);
        assert!(ing.blue > nut.blue, "{} vs {}", ing.blue, nut.blue);
    }

    #[test]
    fn green_ignores_stats() {
        let stats_a = milk_stats();
        let stats_b = build_stats(
            &[AnnotatedDocument::new(
                OcrDocument {
                    doc_id: "other".into(),
                    width: 100,
                    height: 100,
                    words: vec![word("protein", [0, 0, 10, 10])],
                },
                vec![GroundTruthRegion {
                    category: Category::NutritionalFacts,
                    bbox: PixelBox::new(0, 0, 50, 50).unwrap(),
                }],
            )
            .unwrap()],
            1.0,
        )
        .unwrap();
        let w = word("milk,", [0, 0, 10, 10]);
        let a: ScoreTriple<f64> = score_word(&stats_a, &w, Category::Ingredients);
        let b: ScoreTriple<f64> = score_word(&stats_b, &w, Category::Ingredients);
        assert_eq!(a.green, b.green);
    }
}
