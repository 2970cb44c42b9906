//! `textmap build-stats`: lexicon statistics from OCR + annotation pairs.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use textmap_core::lexicon::{build_stats, merge_stats, save_stats, AnnotatedDocument};

use crate::manifest::{self, StageOutcome};
use crate::util::{load_ocr_dir, worker_pool, write_atomic, CliError, CliResult, OcrFormat};

#[derive(Args, Debug)]
pub struct BuildStatsArgs {
    /// Directory of OCR documents (*.json).
    #[arg(long)]
    pub ocr: PathBuf,
    /// Directory of region annotations (*.json), paired by doc_id.
    #[arg(long)]
    pub ann: PathBuf,
    /// Laplace smoothing constant (> 0).
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Minimum fuzzy similarity for unseen-word fallback, in [0, 1].
    #[arg(long, default_value_t = 0.8)]
    pub fuzzy_floor: f64,
    /// Stats file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// OCR input schema.
    #[arg(long, value_enum, default_value_t = OcrFormat::Canonical)]
    pub ocr_format: OcrFormat,
    /// Worker count (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Manifest path (default: <out>.manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &BuildStatsArgs) -> CliResult<StageOutcome> {
    if args.alpha <= 0.0 {
        return Err(CliError::usage(format!(
            "--alpha must be > 0, got {}",
            args.alpha
        )));
    }
    if !(0.0..=1.0).contains(&args.fuzzy_floor) {
        return Err(CliError::usage(format!(
            "--fuzzy-floor must be in [0, 1], got {}",
            args.fuzzy_floor
        )));
    }

    let docs = load_ocr_dir(&args.ocr, args.ocr_format)?;
    let annotations = crate::commands::load_annotations(&args.ann)?;

    let ocr_only: Vec<&String> = docs.keys().filter(|id| !annotations.contains_key(*id)).collect();
    let ann_only: Vec<&String> = annotations.keys().filter(|id| !docs.contains_key(*id)).collect();
    if !ocr_only.is_empty() || !ann_only.is_empty() {
        let mut parts = Vec::new();
        if !ocr_only.is_empty() {
            parts.push(format!(
                "OCR without annotations: {}",
                ocr_only.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            ));
        }
        if !ann_only.is_empty() {
            parts.push(format!(
                "annotations without OCR: {}",
                ann_only.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            ));
        }
        return Err(CliError::usage(format!(
            "unmatched doc_ids: {}",
            parts.join("; ")
        )));
    }
    if docs.is_empty() {
        return Err(CliError::usage(format!(
            "empty corpus: no document pairs under {} and {}",
            args.ocr.display(),
            args.ann.display()
        )));
    }

    let mut corpus = Vec::with_capacity(docs.len());
    for (doc_id, doc) in docs {
        let regions = annotations[&doc_id].clone();
        corpus.push(
            AnnotatedDocument::new(doc, regions)
                .map_err(|e| CliError::usage(e.to_string()))?,
        );
    }

    // Fan out per document, combine with merge; the result is identical for
    // any worker count because merging is commutative and associative.
    let pool = worker_pool(args.jobs)?;
    let stats = pool.install(|| {
        corpus
            .par_iter()
            .map(|doc| {
                build_stats(std::slice::from_ref(doc), args.alpha)
                    .map_err(|e| CliError::usage(e.to_string()))
            })
            .reduce_with(|a, b| {
                merge_stats(a?, b?).map_err(|e| CliError::Internal(anyhow::anyhow!("{e}")))
            })
            .expect("corpus is non-empty")
    })?;
    let stats = stats
        .with_fuzzy_floor(args.fuzzy_floor)
        .map_err(|e| CliError::usage(e.to_string()))?;

    write_atomic(&args.out, &save_stats(&stats))?;

    Ok(StageOutcome {
        subcommand: "build-stats",
        parameters: manifest::params([
            ("ocr", json!(args.ocr.display().to_string())),
            ("ann", json!(args.ann.display().to_string())),
            ("alpha", json!(args.alpha)),
            ("fuzzy_floor", json!(args.fuzzy_floor)),
            ("out", json!(args.out.display().to_string())),
            ("ocr_format", json!(format!("{:?}", args.ocr_format).to_lowercase())),
            ("jobs", json!(args.jobs)),
        ]),
        inputs: vec![
            args.ocr.display().to_string(),
            args.ann.display().to_string(),
        ],
        outputs: vec![args.out.display().to_string()],
        documents: corpus.len(),
        manifest_path: args
            .manifest
            .clone()
            .unwrap_or_else(|| manifest::default_path(&args.out, false)),
    })
}
