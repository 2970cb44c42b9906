//! Category text-maps for OCR-based region detection.
//!
//! The pipeline turns positioned OCR words into per-category relevance
//! rasters ("text-maps"): each word box is colored by how strongly the word
//! signals a textual category such as ingredient lists or nutrition panels.
//! The three channels encode an in-region occurrence ratio (red), a
//! punctuation/numeric heuristic (green) and a smoothed dictionary posterior
//! (blue). Maps can be concatenated with the source image into 6-channel
//! tensors for detector training, or fed to the built-in deterministic
//! baseline detector and evaluation harness.
//!
//! Score math is generic over the [`Real`] scalar; [`Score`] is the concrete
//! type used by the CLI and all serialized artifacts.

pub mod detector;
pub mod eval;
pub mod geometry;
pub mod lexicon;
pub mod ocr;
pub mod raster;
pub mod real;
pub mod scoring;
pub mod synth;

/// Scalar used by the CLI and persisted file formats.
pub type Score = f64;

pub use detector::{detect_regions, DetectionBox, DetectorParams};
pub use eval::{
    compute_report, iou, match_detections, render_eval_overlay, CategoryCounts, CategoryMetrics,
    EvalParams, EvalReport, LabeledBox, MatchLabel, MatchOutcome, OverlayOptions,
};
pub use geometry::PixelBox;
pub use lexicon::{
    assign_word_to_regions, build_stats, load_stats, merge_stats, save_stats, AnnotatedDocument,
    Category, GroundTruthRegion, LexiconStats, RegionAnnotations,
};
pub use ocr::{
    extract_region_text, parse_canonical_ocr, parse_gcv_annotation, to_canonical_json, tokenize,
    OcrDocument, OcrWord, TokenView,
};
pub use raster::{
    compose_6ch, read_png, read_raster3_bin, read_tensor6, render_textmap, render_textmap_with,
    write_png, write_raster3_bin, write_tensor6, Raster3, Tensor6, TextMap,
};
pub use real::Real;
pub use scoring::{green_score, score_word, score_word_with, ScoreConfig, ScoreTriple, TriggerConfig};
pub use synth::{generate_corpus, generate_document, render_background, SynthConfig};
