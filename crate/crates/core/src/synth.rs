//! Deterministic synthetic corpus generator.
//!
//! Produces annotated documents at desk scale: ground-truth regions laid out
//! on a grid, filled with line-wrapped words from per-category vocabularies
//! (ingredient regions pick up commas and parentheses, nutrition regions
//! numeric and percent tokens), neutral words in the background, and optional
//! OCR-style noise. Everything is a pure function of (seed, index, config),
//! with integer-only layout arithmetic, so corpora are reproducible across
//! runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::PixelBox;
use crate::lexicon::{AnnotatedDocument, Category, GroundTruthRegion};
use crate::ocr::{OcrDocument, OcrWord};
use crate::raster::Raster3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Inclusive image width/height ranges in pixels.
    pub width_range: (u32, u32),
    pub height_range: (u32, u32),
    /// Inclusive per-category region count range; at most 2 per category.
    pub regions_per_category: (u32, u32),
    /// Inclusive cap on words placed per region (regions also stop at
    /// capacity).
    pub words_per_region: (u32, u32),
    pub ingredient_vocab: Vec<String>,
    pub nutrient_vocab: Vec<String>,
    pub neutral_vocab: Vec<String>,
    /// Probability that a word gets a single-character substitution typo.
    pub ocr_typo_rate: f64,
    /// Probability that a background word is drawn from a category vocabulary
    /// instead of the neutral one.
    pub distractor_word_rate: f64,
    /// Fraction of each category vocabulary leaked into the other, to blur
    /// separability.
    pub vocab_overlap: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            width_range: (512, 768),
            height_range: (512, 768),
            regions_per_category: (1, 2),
            words_per_region: (80, 160),
            ingredient_vocab: default_ingredient_vocab(),
            nutrient_vocab: default_nutrient_vocab(),
            neutral_vocab: default_neutral_vocab(),
            ocr_typo_rate: 0.02,
            distractor_word_rate: 0.0,
            vocab_overlap: 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible layout: {0}")]
    InfeasibleLayout(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub fn default_ingredient_vocab() -> Vec<String> {
    to_strings(&[
        "milk", "sugar", "salt", "water", "flour", "cocoa", "butter", "soy", "lecithin", "wheat",
        "barley", "malt", "yeast", "oil", "palm", "sunflower", "rapeseed", "starch", "corn",
        "rice", "oats", "honey", "vanilla", "cinnamon", "garlic", "onion", "tomato", "pepper",
        "paprika", "celery", "mustard", "egg", "cream", "whey", "lactose", "gelatin", "pectin",
        "glucose", "fructose", "syrup", "dextrose", "maltodextrin", "emulsifier", "stabiliser",
        "preservative", "almonds", "hazelnuts", "cashews", "raisins", "coconut",
    ])
}

/// Nutrient vocabulary mixes label words with numeric/unit tokens so that
/// nutrition regions carry digit and percent characters by construction.
pub fn default_nutrient_vocab() -> Vec<String> {
    to_strings(&[
        "energy", "protein", "carbohydrate", "sugars", "fat", "saturates", "fibre", "sodium",
        "cholesterol", "calcium", "iron", "potassium", "magnesium", "vitamins", "serving", "0g",
        "0.5g", "1g", "2.5g", "5g", "12g", "25g", "100g", "75mg", "120kcal", "250kj", "8%",
        "15%", "30%", "50%",
    ])
}

pub fn default_neutral_vocab() -> Vec<String> {
    to_strings(&[
        "product", "quality", "family", "recipe", "fresh", "natural", "original", "premium",
        "classic", "delicious", "tasty", "crunchy", "smooth", "golden", "traditional", "finest",
        "selected", "carefully", "prepared", "enjoy", "serve", "chilled", "store", "cool", "dry",
        "place", "best", "before", "packaged", "facility", "contact", "consumer", "service",
        "website", "recyclable", "carton", "keep", "away", "children", "open",
    ])
}

fn to_strings(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

const GRID_COLS: u32 = 2;
const GRID_ROWS: u32 = 3;
const OUTER_MARGIN: u32 = 16;
const CELL_PAD: u32 = 12;
const REGION_PAD: u32 = 4;

/// Generates `n` annotated documents. Documents derive independent RNG
/// streams from (seed, index), so generation order and worker count never
/// change the output.
pub fn generate_corpus(config: &SynthConfig, n: usize) -> Result<Vec<AnnotatedDocument>, SynthError> {
    validate(config)?;
    (0..n).map(|i| generate_document(config, i)).collect()
}

/// Generates the document at `index` of the corpus defined by `config`.
pub fn generate_document(
    config: &SynthConfig,
    index: usize,
) -> Result<AnnotatedDocument, SynthError> {
    validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, index as u64));

    let width = rng.random_range(config.width_range.0..=config.width_range.1);
    let height = rng.random_range(config.height_range.0..=config.height_range.1);

    let cells = grid_cells(width, height);
    let mut order: Vec<usize> = (0..cells.len()).collect();
    // Fisher-Yates, driven by the per-document stream.
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }

    let n_ing = rng.random_range(config.regions_per_category.0..=config.regions_per_category.1);
    let n_nut = rng.random_range(config.regions_per_category.0..=config.regions_per_category.1);
    if (n_ing + n_nut) as usize > cells.len() {
        return Err(SynthError::InfeasibleLayout(format!(
            "{} regions do not fit on a {}x{} cell grid",
            n_ing + n_nut,
            GRID_COLS,
            GRID_ROWS
        )));
    }

    let ing_vocab = with_overlap(&config.ingredient_vocab, &config.nutrient_vocab, config.vocab_overlap);
    let nut_vocab = with_overlap(&config.nutrient_vocab, &config.ingredient_vocab, config.vocab_overlap);
    let (nut_names, nut_values) = split_value_tokens(&nut_vocab);
    let distractor_pool: Vec<&str> = config
        .ingredient_vocab
        .iter()
        .chain(config.nutrient_vocab.iter())
        .map(|s| s.as_str())
        .collect();

    let typo_pm = per_mille(config.ocr_typo_rate);
    let distractor_pm = per_mille(config.distractor_word_rate);

    let mut regions = Vec::new();
    let mut words = Vec::new();
    let mut cell_iter = order.into_iter();

    for (count, category) in [
        (n_ing, Category::Ingredients),
        (n_nut, Category::NutritionalFacts),
    ] {
        for _ in 0..count {
            let cell = cells[cell_iter.next().expect("enough cells")];
            let bbox = shrink(&cell, CELL_PAD);
            regions.push(GroundTruthRegion { category, bbox });

            let cap = rng.random_range(config.words_per_region.0..=config.words_per_region.1);
            let mut token_index = 0usize;
            fill_box_with_words(&mut rng, &bbox, cap, false, typo_pm, &mut words, |rng| {
                token_index += 1;
                match category {
                    Category::Ingredients => {
                        let base = pick(rng, &ing_vocab);
                        decorate_ingredient(rng, base)
                    }
                    Category::NutritionalFacts => {
                        // Alternate label and value tokens.
                        let pool = if token_index % 2 == 1 { &nut_names } else { &nut_values };
                        pick(rng, pool).to_string()
                    }
                }
            });
        }
    }

    for cell_index in cell_iter {
        let bbox = shrink(&cells[cell_index], CELL_PAD);
        fill_box_with_words(&mut rng, &bbox, u32::MAX, true, typo_pm, &mut words, |rng| {
            if rng.random_range(0..1000) < distractor_pm {
                pick(rng, &distractor_pool).to_string()
            } else {
                pick(rng, &config.neutral_vocab).to_string()
            }
        });
    }

    let doc = OcrDocument {
        doc_id: format!("synth-{index:06}"),
        width,
        height,
        words,
    };
    AnnotatedDocument::new(doc, regions)
        .map_err(|e| SynthError::InvalidConfig(format!("generator bug: {e}")))
}

/// Flat rendering of a document for overlays and tensor export: light
/// background with dark blocks where words sit.
pub fn render_background(doc: &OcrDocument) -> Raster3 {
    let mut image = Raster3::new_zero(doc.width, doc.height);
    image.fill([245, 245, 245]);
    for word in &doc.words {
        image.fill_box(&word.bbox, [96, 96, 96]);
    }
    image
}

fn validate(config: &SynthConfig) -> Result<(), SynthError> {
    let ranges = [
        ("width_range", config.width_range),
        ("height_range", config.height_range),
        ("regions_per_category", config.regions_per_category),
        ("words_per_region", config.words_per_region),
    ];
    for (name, (lo, hi)) in ranges {
        if lo > hi {
            return Err(SynthError::InvalidConfig(format!(
                "{name} is empty: ({lo}, {hi})"
            )));
        }
    }
    if config.regions_per_category.1 > 2 {
        return Err(SynthError::InvalidConfig(
            "regions_per_category upper bound is 2".into(),
        ));
    }
    for (name, rate) in [
        ("ocr_typo_rate", config.ocr_typo_rate),
        ("distractor_word_rate", config.distractor_word_rate),
        ("vocab_overlap", config.vocab_overlap),
    ] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(SynthError::InvalidConfig(format!(
                "{name} must be in [0, 1], got {rate}"
            )));
        }
    }
    for (name, vocab) in [
        ("ingredient_vocab", &config.ingredient_vocab),
        ("nutrient_vocab", &config.nutrient_vocab),
        ("neutral_vocab", &config.neutral_vocab),
    ] {
        if vocab.is_empty() {
            return Err(SynthError::InvalidConfig(format!("{name} is empty")));
        }
    }

    // The narrowest possible region must hold the widest possible token.
    let min_cell_w = (config.width_range.0.saturating_sub(2 * OUTER_MARGIN)) / GRID_COLS;
    let min_cell_h = (config.height_range.0.saturating_sub(2 * OUTER_MARGIN)) / GRID_ROWS;
    let min_inner_w = min_cell_w.saturating_sub(2 * (CELL_PAD + REGION_PAD));
    let min_inner_h = min_cell_h.saturating_sub(2 * (CELL_PAD + REGION_PAD));
    let longest = config
        .ingredient_vocab
        .iter()
        .chain(config.nutrient_vocab.iter())
        .chain(config.neutral_vocab.iter())
        .map(|w| w.chars().count() as u32 + 2) // room for decoration
        .max()
        .unwrap_or(0);
    let max_char_w = char_width(MAX_FONT_H);
    if min_inner_w < longest * char_width(MIN_FONT_H) || min_inner_h < MAX_FONT_H {
        return Err(SynthError::InfeasibleLayout(format!(
            "regions of {min_inner_w}x{min_inner_h} px cannot hold {longest}-character words \
             (need up to {}x{} px)",
            longest * max_char_w,
            MAX_FONT_H
        )));
    }
    Ok(())
}

const MIN_FONT_H: u32 = 12;
const MAX_FONT_H: u32 = 16;

fn char_width(font_h: u32) -> u32 {
    (font_h * 3 / 5).max(5)
}

#[allow(clippy::too_many_arguments)]
fn fill_box_with_words<R: Rng>(
    rng: &mut R,
    bbox: &PixelBox,
    cap: u32,
    sparse: bool,
    typo_pm: u32,
    out: &mut Vec<OcrWord>,
    mut next_token: impl FnMut(&mut R) -> String,
) {
    let font_h = rng.random_range(MIN_FONT_H..=MAX_FONT_H);
    let cw = char_width(font_h);
    let line_pitch = font_h + if sparse { 12 } else { 5 };
    let x0 = bbox.x0() + REGION_PAD;
    let x1 = bbox.x1().saturating_sub(REGION_PAD);
    let y1 = bbox.y1().saturating_sub(REGION_PAD);

    let mut placed = 0u32;
    let mut y = bbox.y0() + REGION_PAD;
    'lines: while y + font_h <= y1 && placed < cap {
        let mut x = x0;
        loop {
            if placed >= cap {
                break 'lines;
            }
            // Sparse fill leaves random holes.
            if sparse && rng.random_range(0..100) < 25 {
                x += 6 * cw;
                if x >= x1 {
                    break;
                }
                continue;
            }
            let mut text = next_token(rng);
            let mut typoed = false;
            if rng.random_range(0..1000) < typo_pm {
                text = inject_typo(rng, &text);
                typoed = true;
            }
            let w_px = text.chars().count() as u32 * cw;
            if x + w_px > x1 {
                // Token too long even at line start: give up on this box.
                if x == x0 {
                    break 'lines;
                }
                break;
            }
            // Typo'd words read as lower-confidence OCR output.
            let confidence = if typoed {
                rng.random_range(60..=89) as f64 / 100.0
            } else {
                rng.random_range(90..=100) as f64 / 100.0
            };
            out.push(OcrWord {
                raw_text: text,
                bbox: PixelBox::new(x, y, x + w_px, y + font_h).expect("word box"),
                confidence,
            });
            placed += 1;
            x += w_px + cw;
            if x >= x1 {
                break;
            }
        }
        y += line_pitch;
    }
}

fn pick<'a, T: AsRef<str>>(rng: &mut impl Rng, pool: &'a [T]) -> &'a str {
    pool[rng.random_range(0..pool.len())].as_ref()
}

fn decorate_ingredient(rng: &mut impl Rng, base: &str) -> String {
    let roll = rng.random_range(0..100);
    if roll < 55 {
        format!("{base},")
    } else if roll < 63 {
        format!("({base})")
    } else {
        base.to_string()
    }
}

fn inject_typo(rng: &mut impl Rng, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return text.to_string();
    }
    let idx = rng.random_range(0..chars.len());
    let original = chars[idx];
    let replacement = loop {
        let c = (b'a' + rng.random_range(0..26u8)) as char;
        if c != original {
            break c;
        }
    };
    chars[idx] = replacement;
    chars.into_iter().collect()
}

fn with_overlap(own: &[String], other: &[String], overlap: f64) -> Vec<String> {
    let mut vocab = own.to_vec();
    let leak = (overlap * other.len() as f64).floor() as usize;
    vocab.extend(other.iter().take(leak).cloned());
    vocab
}

/// Splits a vocabulary into (plain, digit-bearing) pools. Either pool falls
/// back to the whole vocabulary when empty.
fn split_value_tokens(vocab: &[String]) -> (Vec<String>, Vec<String>) {
    let (values, names): (Vec<String>, Vec<String>) = vocab
        .iter()
        .cloned()
        .partition(|w| w.chars().any(|c| c.is_ascii_digit()));
    let names = if names.is_empty() { vocab.to_vec() } else { names };
    let values = if values.is_empty() { vocab.to_vec() } else { values };
    (names, values)
}

fn grid_cells(width: u32, height: u32) -> Vec<PixelBox> {
    let inner_w = width - 2 * OUTER_MARGIN;
    let inner_h = height - 2 * OUTER_MARGIN;
    let cell_w = inner_w / GRID_COLS;
    let cell_h = inner_h / GRID_ROWS;
    let mut cells = Vec::with_capacity((GRID_COLS * GRID_ROWS) as usize);
    for row in 0..GRID_ROWS {
        for col in 0..GRID_COLS {
            let x0 = OUTER_MARGIN + col * cell_w;
            let y0 = OUTER_MARGIN + row * cell_h;
            cells.push(PixelBox::new(x0, y0, x0 + cell_w, y0 + cell_h).expect("grid cell"));
        }
    }
    cells
}

fn shrink(bbox: &PixelBox, by: u32) -> PixelBox {
    PixelBox::new(
        bbox.x0() + by,
        bbox.y0() + by,
        bbox.x1() - by,
        bbox.y1() - by,
    )
    .expect("shrunk box stays valid")
}

fn per_mille(rate: f64) -> u32 {
    (rate.clamp(0.0, 1.0) * 1000.0).round() as u32
}

// splitmix64-style mixing of the corpus seed with the document index.
fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
