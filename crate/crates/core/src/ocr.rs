//! OCR document ingestion: the canonical JSON schema, a cloud-OCR adapter,
//! token normalization and reading-order text extraction.
//!
//! Canonical schema (UTF-8 JSON):
//!
//! ```json
//! {
//!   "doc_id": "d1",
//!   "image": { "width": 100, "height": 50 },
//!   "words": [ { "text": "milk", "bbox": [2, 2, 30, 10], "confidence": 0.98 } ]
//! }
//! ```
//!
//! Word boxes are clamped to the image at parse time; a box entirely outside
//! the image is rejected. The cloud adapter accepts the nested
//! pages/blocks/paragraphs/words/symbols full-text annotation shape and
//! flattens it to the same document type.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::geometry::PixelBox;

/// One recognized word with its position and engine confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct OcrWord {
    pub raw_text: String,
    pub bbox: PixelBox,
    pub confidence: f64,
}

/// A full OCR result for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct OcrDocument {
    pub doc_id: String,
    pub width: u32,
    pub height: u32,
    pub words: Vec<OcrWord>,
}

/// Normalized view of a word's text plus its character-class flags.
///
/// Flags are derived from the raw text, so punctuation stripped out of
/// `normalized` still registers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenView {
    pub normalized: String,
    pub has_comma: bool,
    pub has_paren: bool,
    pub has_digit: bool,
    pub has_percent: bool,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ParseError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ParseError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawDoc {
    doc_id: String,
    image: RawImage,
    words: Vec<RawWord>,
}

#[derive(Serialize, Deserialize)]
struct RawImage {
    width: i64,
    height: i64,
}

#[derive(Serialize, Deserialize)]
struct RawWord {
    text: String,
    bbox: [i64; 4],
    confidence: f64,
}

fn syntax_error(input: &[u8], err: &serde_json::Error) -> ParseError {
    // Well-formed JSON that violates the schema (missing fields, wrong
    // types) is a validation problem, not a syntax one.
    if err.classify() == serde_json::error::Category::Data {
        return ParseError::Invalid {
            field: "document".into(),
            reason: err.to_string(),
        };
    }
    ParseError::Syntax {
        offset: byte_offset(input, err.line(), err.column()),
        message: err.to_string(),
    }
}

// serde_json reports 1-based line/column; fold back into a byte offset.
fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    let mut newlines_left = line.saturating_sub(1);
    let mut line_start = 0;
    for (i, b) in input.iter().enumerate() {
        if newlines_left == 0 {
            break;
        }
        if *b == b'\n' {
            newlines_left -= 1;
            line_start = i + 1;
        }
    }
    line_start + column.saturating_sub(1)
}

/// Parses the canonical OCR schema.
pub fn parse_canonical_ocr(bytes: &[u8]) -> Result<OcrDocument, ParseError> {
    let raw: RawDoc = serde_json::from_slice(bytes).map_err(|e| syntax_error(bytes, &e))?;

    if raw.doc_id.is_empty() {
        return Err(ParseError::invalid("doc_id", "must be non-empty"));
    }
    let width = positive_dim(raw.image.width, "image.width")?;
    let height = positive_dim(raw.image.height, "image.height")?;

    let mut words = Vec::with_capacity(raw.words.len());
    for (i, w) in raw.words.into_iter().enumerate() {
        let field = |name: &str| format!("words[{i}].{name}");
        words.push(validate_word(
            w.text,
            w.bbox,
            w.confidence,
            width,
            height,
            &field("text"),
            &field("bbox"),
            &field("confidence"),
        )?);
    }

    Ok(OcrDocument {
        doc_id: raw.doc_id,
        width,
        height,
        words,
    })
}

/// Serializes a document back to the canonical schema. Round-trips exactly
/// through [`parse_canonical_ocr`].
pub fn to_canonical_json(doc: &OcrDocument) -> Vec<u8> {
    let raw = RawDoc {
        doc_id: doc.doc_id.clone(),
        image: RawImage {
            width: i64::from(doc.width),
            height: i64::from(doc.height),
        },
        words: doc
            .words
            .iter()
            .map(|w| RawWord {
                text: w.raw_text.clone(),
                bbox: [
                    i64::from(w.bbox.x0()),
                    i64::from(w.bbox.y0()),
                    i64::from(w.bbox.x1()),
                    i64::from(w.bbox.y1()),
                ],
                confidence: w.confidence,
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&raw).expect("canonical schema serializes");
    out.push(b'\n');
    out
}

fn positive_dim(v: i64, field: &str) -> Result<u32, ParseError> {
    if v <= 0 {
        return Err(ParseError::invalid(field, format!("must be positive, got {v}")));
    }
    u32::try_from(v).map_err(|_| ParseError::invalid(field, format!("too large: {v}")))
}

#[allow(clippy::too_many_arguments)]
fn validate_word(
    text: String,
    bbox: [i64; 4],
    confidence: f64,
    width: u32,
    height: u32,
    text_field: &str,
    bbox_field: &str,
    conf_field: &str,
) -> Result<OcrWord, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::invalid(text_field, "must be non-empty"));
    }
    if !(0.0..=1.0).contains(&confidence) {
        return Err(ParseError::invalid(
            conf_field,
            format!("must be in [0, 1], got {confidence}"),
        ));
    }
    let [x0, y0, x1, y1] = bbox;
    if x0 >= x1 || y0 >= y1 {
        return Err(ParseError::invalid(
            bbox_field,
            format!("coordinates out of order or degenerate: [{x0}, {y0}, {x1}, {y1}]"),
        ));
    }
    let clamped = PixelBox::clamp_raw(x0, y0, x1, y1, width, height).ok_or_else(|| {
        ParseError::invalid(
            bbox_field,
            format!("fully outside image bounds {width}x{height}"),
        )
    })?;
    Ok(OcrWord {
        raw_text: text,
        bbox: clamped,
        confidence,
    })
}

// ---------------------------------------------------------------------------
// Cloud full-text annotation adapter
// ---------------------------------------------------------------------------

#[derive(Deserialize, Default)]
struct GcvFile {
    #[serde(rename = "fullTextAnnotation")]
    full_text_annotation: Option<GcvAnnotation>,
    #[serde(default)]
    pages: Vec<GcvPage>,
}

#[derive(Deserialize, Default)]
struct GcvAnnotation {
    #[serde(default)]
    pages: Vec<GcvPage>,
}

#[derive(Deserialize, Default)]
struct GcvPage {
    #[serde(default)]
    width: i64,
    #[serde(default)]
    height: i64,
    #[serde(default)]
    blocks: Vec<GcvBlock>,
}

#[derive(Deserialize, Default)]
struct GcvBlock {
    #[serde(default)]
    paragraphs: Vec<GcvParagraph>,
}

#[derive(Deserialize, Default)]
struct GcvParagraph {
    #[serde(default)]
    words: Vec<GcvWordRaw>,
}

#[derive(Deserialize, Default)]
struct GcvWordRaw {
    #[serde(default)]
    symbols: Vec<GcvSymbol>,
    #[serde(rename = "boundingBox")]
    bounding_box: Option<GcvBoundingBox>,
    confidence: Option<f64>,
}

#[derive(Deserialize, Default)]
struct GcvSymbol {
    #[serde(default)]
    text: String,
    #[serde(rename = "boundingBox")]
    bounding_box: Option<GcvBoundingBox>,
}

#[derive(Deserialize, Default)]
struct GcvBoundingBox {
    #[serde(default)]
    vertices: Vec<GcvVertex>,
}

#[derive(Deserialize, Default)]
struct GcvVertex {
    #[serde(default)]
    x: i64,
    #[serde(default)]
    y: i64,
}

/// Parses a cloud full-text annotation (either the bare annotation or a
/// response object wrapping it under `fullTextAnnotation`).
///
/// The payload carries no document id, so the caller supplies one. Word text
/// is the concatenation of symbol texts; each word box is the axis-aligned
/// bounding box of its vertex polygon. An empty annotation yields an empty
/// 1x1 document.
pub fn parse_gcv_annotation(bytes: &[u8], doc_id: &str) -> Result<OcrDocument, ParseError> {
    if doc_id.is_empty() {
        return Err(ParseError::invalid("doc_id", "must be non-empty"));
    }
    let file: GcvFile = serde_json::from_slice(bytes).map_err(|e| syntax_error(bytes, &e))?;
    let pages = match file.full_text_annotation {
        Some(ann) => ann.pages,
        None => file.pages,
    };

    if pages.is_empty() {
        return Ok(OcrDocument {
            doc_id: doc_id.to_string(),
            width: 1,
            height: 1,
            words: Vec::new(),
        });
    }

    let mut width = 0u32;
    let mut height = 0u32;
    for (p, page) in pages.iter().enumerate() {
        width = width.max(positive_dim(page.width, &format!("pages[{p}].width"))?);
        height = height.max(positive_dim(page.height, &format!("pages[{p}].height"))?);
    }

    let mut words = Vec::new();
    for (p, page) in pages.iter().enumerate() {
        for (b, block) in page.blocks.iter().enumerate() {
            for (g, para) in block.paragraphs.iter().enumerate() {
                for (w, word) in para.words.iter().enumerate() {
                    let path = format!("pages[{p}].blocks[{b}].paragraphs[{g}].words[{w}]");
                    words.push(flatten_gcv_word(word, width, height, &path)?);
                }
            }
        }
    }

    Ok(OcrDocument {
        doc_id: doc_id.to_string(),
        width,
        height,
        words,
    })
}

fn flatten_gcv_word(
    word: &GcvWordRaw,
    width: u32,
    height: u32,
    path: &str,
) -> Result<OcrWord, ParseError> {
    let text: String = word.symbols.iter().map(|s| s.text.as_str()).collect();

    // Prefer the word-level polygon; fall back to the union of symbol boxes.
    let mut vertices: Vec<(i64, i64)> = Vec::new();
    if let Some(bb) = &word.bounding_box {
        vertices.extend(bb.vertices.iter().map(|v| (v.x, v.y)));
    }
    if vertices.is_empty() {
        for sym in &word.symbols {
            if let Some(bb) = &sym.bounding_box {
                vertices.extend(bb.vertices.iter().map(|v| (v.x, v.y)));
            }
        }
    }
    if vertices.is_empty() {
        return Err(ParseError::invalid(
            format!("{path}.boundingBox"),
            "no vertices on word or symbols",
        ));
    }

    let x0 = vertices.iter().map(|v| v.0).min().unwrap();
    let x1 = vertices.iter().map(|v| v.0).max().unwrap();
    let y0 = vertices.iter().map(|v| v.1).min().unwrap();
    let y1 = vertices.iter().map(|v| v.1).max().unwrap();
    if x0 == x1 || y0 == y1 {
        return Err(ParseError::invalid(
            format!("{path}.boundingBox"),
            format!("degenerate vertex polygon: [{x0}, {y0}, {x1}, {y1}]"),
        ));
    }

    validate_word(
        text,
        [x0, y0, x1, y1],
        word.confidence.unwrap_or(1.0),
        width,
        height,
        &format!("{path}.symbols"),
        &format!("{path}.boundingBox"),
        &format!("{path}.confidence"),
    )
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Lowercases, NFC-composes and strips leading/trailing punctuation.
///
/// `%` is kept (it carries signal for nutrition tokens like `15%`), digits are
/// never stripped, and accents survive because folding stops at lowercasing.
/// A raw text that is entirely punctuation yields an empty `normalized` with
/// the flags still set.
pub fn tokenize(raw_text: &str) -> TokenView {
    let has_comma = raw_text.contains(',');
    let has_paren = raw_text.contains('(') || raw_text.contains(')');
    let has_digit = raw_text.chars().any(|c| c.is_ascii_digit());
    let has_percent = raw_text.contains('%');

    let composed: String = raw_text.to_lowercase().nfc().collect();
    let normalized = composed
        .trim_matches(|c: char| c.is_ascii_punctuation() && c != '%')
        .to_string();

    TokenView {
        normalized,
        has_comma,
        has_paren,
        has_digit,
        has_percent,
    }
}

// ---------------------------------------------------------------------------
// Region text extraction
// ---------------------------------------------------------------------------

/// Reads the text inside `region` in reading order.
///
/// Words are selected by box center, grouped into lines by bucketing their
/// vertical centers at the (upper) median word height, sorted left-to-right
/// within a line, and joined with spaces; lines are joined with newlines.
pub fn extract_region_text(doc: &OcrDocument, region: &PixelBox) -> String {
    let selected: Vec<&OcrWord> = doc
        .words
        .iter()
        .filter(|w| region.contains_center_of(&w.bbox))
        .collect();
    if selected.is_empty() {
        return String::new();
    }

    let mut heights: Vec<u64> = selected.iter().map(|w| u64::from(w.bbox.height())).collect();
    heights.sort_unstable();
    let median = heights[heights.len() / 2];

    // bucket = floor(center_y / median) computed on doubled coordinates
    let mut lines: std::collections::BTreeMap<u64, Vec<&OcrWord>> = Default::default();
    for w in selected {
        let cy2 = u64::from(w.bbox.y0()) + u64::from(w.bbox.y1());
        lines.entry(cy2 / (2 * median)).or_default().push(w);
    }

    let mut out = Vec::with_capacity(lines.len());
    for (_, mut line) in lines {
        line.sort_by_key(|w| w.bbox.x0());
        let joined: Vec<&str> = line.iter().map(|w| w.raw_text.as_str()).collect();
        out.push(joined.join(" "));
    }
    out.join("\n")
}
